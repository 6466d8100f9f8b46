//! Seeded random nets for property sweeps.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::limits::Limits;
use crate::net::{Label, LabelledNet, NetBuilder, PlaceId, TransId};
use crate::reach::validate;
use crate::verdict::Verdict;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusParams {
    pub max_places: usize,
    pub max_transitions: usize,
    pub max_arcs: usize,
    /// Probability (in percent) that a transition is labelled `tau`.
    pub tau_percent: u32,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams {
            max_places: 6,
            max_transitions: 6,
            max_arcs: 12,
            tau_percent: 0,
        }
    }
}

/// A random net in which every transition has at least one preplace.
/// Visible labels are pairwise distinct, so the net is plain when
/// `tau_percent == 0`. Contact-freeness is not guaranteed; see
/// [`random_corpus`].
pub fn random_net(seed: u64, params: &CorpusParams) -> LabelledNet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_places = rng.gen_range(1..=params.max_places.max(1));
    let n_trans = rng.gen_range(1..=params.max_transitions.max(1));
    let mut b = NetBuilder::named(format!("rand{seed}"));
    let places: Vec<PlaceId> = (0..n_places)
        .map(|i| b.add_place(&format!("p{i}"), rng.gen_bool(0.5)).unwrap())
        .collect();
    let trans: Vec<TransId> = (0..n_trans)
        .map(|i| {
            let label = if rng.gen_ratio(params.tau_percent.min(100), 100) {
                Label::Tau
            } else {
                Label::Action(format!("a{i}"))
            };
            b.add_transition(&format!("t{i}"), label).unwrap()
        })
        .collect();
    let mut arcs = 0;
    for &t in &trans {
        let &p = places.choose(&mut rng).unwrap();
        b.input(p, t).unwrap();
        arcs += 1;
    }
    let budget = params.max_arcs.max(arcs);
    let extra = rng.gen_range(0..=budget - arcs);
    for _ in 0..extra {
        let &p = places.choose(&mut rng).unwrap();
        let &t = trans.choose(&mut rng).unwrap();
        // Duplicate arcs are simply skipped.
        let _ = if rng.gen_bool(0.5) {
            b.input(p, t)
        } else {
            b.output(t, p)
        };
    }
    b.build()
}

/// `count` random nets that pass [`validate`], drawn from consecutive
/// seeds starting at `seed`. Returns the nets with their seeds.
pub fn random_corpus(seed: u64, count: usize, params: &CorpusParams) -> Vec<(u64, LabelledNet)> {
    let limits = Limits::with_state_bound(100_000);
    let mut out = Vec::with_capacity(count);
    let mut s = seed;
    while out.len() < count {
        let net = random_net(s, params);
        if matches!(validate(&net, &limits).map(|r| r.verdict), Ok(Verdict::Yes)) {
            out.push((s, net));
        }
        s = s.wrapping_add(1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_within_bounds() {
        let p = CorpusParams::default();
        for seed in 0..200 {
            let net = random_net(seed, &p);
            assert_eq!(net, random_net(seed, &p));
            assert!(net.place_count() <= 6 && net.transition_count() <= 6);
            assert!(net.arcs().len() <= 12);
            assert!(net.is_plain());
            assert!(net.transitions().all(|t| !net.pre(t).is_empty()));
        }
    }

    #[test]
    fn corpus_is_valid() {
        let corpus = random_corpus(7, 50, &CorpusParams::default());
        assert_eq!(corpus.len(), 50);
        let limits = Limits::default();
        for (_, net) in &corpus {
            assert_eq!(validate(net, &limits).unwrap().verdict, Verdict::Yes);
        }
    }
}
