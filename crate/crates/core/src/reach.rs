//! Reachability graphs, validation, and the relations derived from them.

use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::firing::{fire_unchecked, has_contact, independent, is_enabled};
use crate::limits::Limits;
use crate::marking::Marking;
use crate::net::{LabelledNet, TransId};
use crate::verdict::Verdict;

/// Reachable markings with singleton-transition edges. Node 0 is the
/// initial marking; nodes are numbered by BFS layer, then marking order.
#[derive(Debug, Clone)]
pub struct ReachGraph {
    markings: Vec<Marking>,
    index: HashMap<Marking, usize>,
    succ: Vec<Vec<(TransId, usize)>>,
    stable: Vec<bool>,
    contacts: Vec<(usize, TransId)>,
}

impl ReachGraph {
    pub fn len(&self) -> usize {
        self.markings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markings.is_empty()
    }

    pub fn marking(&self, node: usize) -> &Marking {
        &self.markings[node]
    }

    pub fn markings(&self) -> &[Marking] {
        &self.markings
    }

    pub fn node_of(&self, m: &Marking) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn contains(&self, m: &Marking) -> bool {
        self.index.contains_key(m)
    }

    /// `(t, target)` for every transition enabled at `node`.
    pub fn successors(&self, node: usize) -> &[(TransId, usize)] {
        &self.succ[node]
    }

    /// No silent transition is enabled.
    pub fn is_stable(&self, node: usize) -> bool {
        self.stable[node]
    }

    /// Reachable nodes at which a transition had a marked preset but a
    /// marked postplace outside it. Empty for contact-free nets.
    pub fn contacts(&self) -> &[(usize, TransId)] {
        &self.contacts
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn relations(&self, net: &LabelledNet) -> Relations {
        let n = net.transition_count();
        let mut concurrent = PairRelation::default();
        let mut conflict = PairRelation::default();
        let mut coverable = vec![None; n];
        for (node, m) in self.markings.iter().enumerate() {
            for t in net.transitions() {
                if coverable[t.index()].is_none() && net.pre(t).is_subset(m) {
                    coverable[t.index()] = Some(m.clone());
                }
            }
            let enabled: Vec<TransId> = self.succ[node].iter().map(|&(t, _)| t).collect();
            for (i, &t) in enabled.iter().enumerate() {
                for &u in &enabled[i + 1..] {
                    if independent(net, t, u) {
                        concurrent.insert_with(t, u, m);
                    } else {
                        conflict.insert_with(t, u, m);
                    }
                }
            }
        }
        Relations {
            concurrent,
            conflict,
            coverable,
        }
    }
}

/// Symmetric, irreflexive relation on transitions; every pair keeps the
/// first reachable marking (in node order) that witnesses it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairRelation {
    pairs: BTreeMap<(TransId, TransId), Marking>,
}

fn ordered(t: TransId, u: TransId) -> (TransId, TransId) {
    if t <= u {
        (t, u)
    } else {
        (u, t)
    }
}

impl PairRelation {
    fn insert_with(&mut self, t: TransId, u: TransId, m: &Marking) {
        debug_assert_ne!(t, u);
        self.pairs.entry(ordered(t, u)).or_insert_with(|| m.clone());
    }

    pub fn contains(&self, t: TransId, u: TransId) -> bool {
        self.pairs.contains_key(&ordered(t, u))
    }

    pub fn witness(&self, t: TransId, u: TransId) -> Option<&Marking> {
        self.pairs.get(&ordered(t, u))
    }

    /// Pairs with `t < u`, in order.
    pub fn pairs(&self) -> impl Iterator<Item = (TransId, TransId)> + '_ {
        self.pairs.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn named_pairs(&self, net: &LabelledNet) -> Vec<(String, String)> {
        self.pairs()
            .map(|(t, u)| (net.trans_name(t).to_string(), net.trans_name(u).to_string()))
            .collect()
    }
}

/// Relations read off a reachability graph.
#[derive(Debug, Clone)]
pub struct Relations {
    /// `t ⌣ u`: jointly firable in one step at some reachable marking.
    pub concurrent: PairRelation,
    /// `t # u`: individually enabled but not jointly firable.
    pub conflict: PairRelation,
    /// A reachable marking covering each transition's preset, if any.
    pub coverable: Vec<Option<Marking>>,
}

impl Relations {
    pub fn coverable_by(&self, t: TransId) -> Option<&Marking> {
        self.coverable[t.index()].as_ref()
    }
}

/// Explores from `start`, recording contact situations instead of failing
/// on them. On a bound hit the partial graph is returned with the error.
fn explore_partial(net: &LabelledNet, start: &Marking, limits: &Limits) -> (ReachGraph, Option<Error>) {
    let mut g = ReachGraph {
        markings: Vec::new(),
        index: HashMap::new(),
        succ: Vec::new(),
        stable: Vec::new(),
        contacts: Vec::new(),
    };
    let mut layer = vec![start.clone()];
    g.index.insert(start.clone(), 0);
    g.markings.push(start.clone());
    let mut base = 0;
    while !layer.is_empty() {
        let mut pending: Vec<Vec<(TransId, Marking)>> = Vec::with_capacity(layer.len());
        let mut next: BTreeSet<Marking> = BTreeSet::new();
        for (k, m) in layer.iter().enumerate() {
            let mut out = Vec::new();
            let mut stable = true;
            for t in net.transitions() {
                if is_enabled(net, m, t) {
                    stable &= !net.is_tau(t);
                    let m2 = fire_unchecked(net, m, &[t]);
                    if !g.index.contains_key(&m2) {
                        next.insert(m2.clone());
                    }
                    out.push((t, m2));
                } else if has_contact(net, m, t) {
                    g.contacts.push((base + k, t));
                }
            }
            g.stable.push(stable);
            pending.push(out);
        }
        base += layer.len();
        for m in &next {
            g.index.insert(m.clone(), g.markings.len());
            g.markings.push(m.clone());
        }
        for out in pending {
            g.succ.push(out.into_iter().map(|(t, m)| (t, g.index[&m])).collect());
        }
        if let Err(e) = limits.check_states(g.markings.len()).and_then(|_| limits.check_cancelled()) {
            return (g, Some(e));
        }
        layer = next.into_iter().collect();
    }
    (g, None)
}

/// Reachability graph from the initial marking, tolerating contact.
/// Every enabled transition is fired under the general enabledness rule.
pub fn explore(net: &LabelledNet, limits: &Limits) -> Result<ReachGraph> {
    explore_from(net, net.initial_marking(), limits)
}

pub fn explore_from(net: &LabelledNet, start: &Marking, limits: &Limits) -> Result<ReachGraph> {
    match explore_partial(net, start, limits) {
        (g, None) => Ok(g),
        (_, Some(e)) => Err(e),
    }
}

/// Reachability graph of a contact-free net.
pub fn reachability_graph(net: &LabelledNet, limits: &Limits) -> Result<ReachGraph> {
    let g = explore(net, limits)?;
    if let Some(&(node, t)) = g.contacts.first() {
        return Err(Error::ContactViolation {
            transition: net.trans_name(t).to_string(),
            marking: net.marking_names(g.marking(node)),
        });
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    EmptyPreset { transition: String },
    ContactFreeness { transition: String, marking: Vec<String> },
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub verdict: Verdict,
    pub violations: Vec<Violation>,
    /// Markings explored.
    pub states: usize,
    /// Why exploration stopped early, if it did.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub incomplete: Option<String>,
    #[serde(skip)]
    pub error: Option<Error>,
}

/// Checks the standing restrictions: nonempty presets and contact-freeness.
/// A bound hit without a violation found yields `Unknown`, never `Yes`.
pub fn validate(net: &LabelledNet, limits: &Limits) -> Result<ValidationReport> {
    let mut violations: Vec<Violation> = net
        .transitions()
        .filter(|&t| net.pre(t).is_empty())
        .map(|t| Violation::EmptyPreset {
            transition: net.trans_name(t).to_string(),
        })
        .collect();
    let (g, err) = explore_partial(net, net.initial_marking(), limits);
    if matches!(err, Some(Error::Cancelled)) {
        return Err(Error::Cancelled);
    }
    let mut seen = BTreeSet::new();
    for &(node, t) in &g.contacts {
        if seen.insert(t) {
            violations.push(Violation::ContactFreeness {
                transition: net.trans_name(t).to_string(),
                marking: net.marking_names(g.marking(node)),
            });
        }
    }
    let verdict = if !violations.is_empty() {
        Verdict::No
    } else if err.is_some() {
        Verdict::Unknown
    } else {
        Verdict::Yes
    };
    Ok(ValidationReport {
        verdict,
        violations,
        states: g.len(),
        incomplete: err.as_ref().map(ToString::to_string),
        error: err,
    })
}

/// Markings reachable from `start` by silent transitions alone.
pub fn tau_closure(net: &LabelledNet, start: &BTreeSet<Marking>, limits: &Limits) -> Result<BTreeSet<Marking>> {
    let mut seen = start.clone();
    let mut queue: VecDeque<Marking> = start.iter().cloned().collect();
    while let Some(m) = queue.pop_front() {
        for t in net.transitions() {
            if net.is_tau(t) && is_enabled(net, &m, t) {
                let m2 = fire_unchecked(net, &m, &[t]);
                if seen.insert(m2.clone()) {
                    limits.check_states(seen.len())?;
                    queue.push_back(m2);
                }
            }
        }
    }
    Ok(seen)
}

/// Markings reachable from `m` by the weak trace `sigma`: silent moves
/// interleaved with one visible transition per action.
pub fn weak_reach(net: &LabelledNet, m: &Marking, sigma: &[&str], limits: &Limits) -> Result<BTreeSet<Marking>> {
    let mut cur = tau_closure(net, &BTreeSet::from([m.clone()]), limits)?;
    for &a in sigma {
        let mut next = BTreeSet::new();
        for m in &cur {
            for t in net.transitions() {
                if net.label(t).action() == Some(a) && is_enabled(net, m, t) {
                    next.insert(fire_unchecked(net, m, &[t]));
                }
            }
        }
        cur = tau_closure(net, &next, limits)?;
    }
    Ok(cur)
}

pub fn concurrency_relation(net: &LabelledNet, limits: &Limits) -> Result<PairRelation> {
    Ok(reachability_graph(net, limits)?.relations(net).concurrent)
}

pub fn enabled_conflict_relation(net: &LabelledNet, limits: &Limits) -> Result<PairRelation> {
    Ok(reachability_graph(net, limits)?.relations(net).conflict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::firing::{enabled_steps, Step};
    use crate::fixtures;
    use crate::format::parse_net;
    use proptest::prelude::*;

    fn lim() -> Limits {
        Limits::default()
    }

    fn pairs(net: &LabelledNet, r: &PairRelation) -> Vec<(String, String)> {
        r.named_pairs(net)
    }

    fn p(a: &str, b: &str) -> (String, String) {
        (a.to_string(), b.to_string())
    }

    #[test]
    fn validate_examples() {
        assert_eq!(validate(&fixtures::fig1(), &lim()).unwrap().verdict, Verdict::Yes);
        let empty = parse_net("place p marked\ntrans t label a\narc t -> p\n").unwrap();
        let r = validate(&empty, &lim()).unwrap();
        assert_eq!(r.verdict, Verdict::No);
        assert!(r.violations.contains(&Violation::EmptyPreset { transition: "t".into() }));
        let contact = parse_net(
            "place p marked\nplace p2 marked\ntrans t label a\narc p -> t\narc t -> p2\n",
        )
        .unwrap();
        let r = validate(&contact, &lim()).unwrap();
        assert_eq!(r.verdict, Verdict::No);
        assert_eq!(
            r.violations,
            vec![Violation::ContactFreeness {
                transition: "t".into(),
                marking: vec!["p".into(), "p2".into()],
            }]
        );
        for (name, net) in fixtures::all() {
            assert_eq!(validate(&net, &lim()).unwrap().verdict, Verdict::Yes, "{name}");
        }
    }

    #[test]
    fn bound_hit_is_unknown() {
        let r = validate(&fixtures::fig3(), &Limits::with_state_bound(2)).unwrap();
        assert_eq!(r.verdict, Verdict::Unknown);
        assert!(matches!(r.error, Some(Error::StateBoundExceeded { bound: 2 })));
        assert!(matches!(
            reachability_graph(&fixtures::fig3(), &Limits::with_state_bound(2)),
            Err(Error::StateBoundExceeded { .. })
        ));
    }

    #[test]
    fn reach_graph_examples() {
        let net = fixtures::fig1();
        let g = reachability_graph(&net, &lim()).unwrap();
        assert_eq!(g.len(), 2);
        assert!(g.contains(&net.marking(&["p"])));
        assert!(g.contains(&Marking::empty()));
        assert!((0..g.len()).all(|n| g.is_stable(n)));

        let net = fixtures::fig3();
        let g = reachability_graph(&net, &lim()).unwrap();
        assert_eq!(g.len(), 9);
        let stable: Vec<_> = (0..g.len()).filter(|&n| g.is_stable(n)).map(|n| g.marking(n).clone()).collect();
        assert_eq!(stable, vec![Marking::empty()]);

        let net = parse_net("place p marked\n").unwrap();
        let g = reachability_graph(&net, &lim()).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.is_stable(0));
    }

    #[test]
    fn weak_reach_examples() {
        let net = fixtures::fig1();
        let pq = net.marking(&["p", "q"]);
        assert_eq!(weak_reach(&net, &pq, &["a"], &lim()).unwrap(), BTreeSet::from([net.marking(&["q"])]));
        assert_eq!(weak_reach(&net, &pq, &[], &lim()).unwrap(), BTreeSet::from([pq.clone()]));
        assert!(weak_reach(&net, &pq, &["z"], &lim()).unwrap().is_empty());
    }

    #[test]
    fn relation_examples() {
        let net = fixtures::fig2();
        assert_eq!(pairs(&net, &concurrency_relation(&net, &lim()).unwrap()), vec![p("t", "v")]);
        assert_eq!(
            pairs(&net, &enabled_conflict_relation(&net, &lim()).unwrap()),
            vec![p("t", "u"), p("u", "v")]
        );
        let net = fixtures::fig1();
        assert!(concurrency_relation(&net, &lim()).unwrap().is_empty());
        let net = fixtures::fig7_spec();
        assert!(concurrency_relation(&net, &lim()).unwrap().is_empty());
        assert_eq!(
            pairs(&net, &enabled_conflict_relation(&net, &lim()).unwrap()),
            vec![p("a", "b"), p("a", "c"), p("b", "c")]
        );
        let free = parse_net(
            "place p marked\nplace q marked\ntrans t label a\ntrans u label b\narc p -> t\narc q -> u\n",
        )
        .unwrap();
        assert!(enabled_conflict_relation(&free, &lim()).unwrap().is_empty());
    }

    #[test]
    fn layers_are_deterministic() {
        let net = fixtures::fig3();
        let a = reachability_graph(&net, &lim()).unwrap();
        let b = reachability_graph(&net, &lim()).unwrap();
        assert_eq!(a.markings(), b.markings());
        assert_eq!(a.marking(0), net.initial_marking());
    }

    /// Independent oracle: plain worklist over sets, no layering.
    fn naive_reachable(net: &LabelledNet) -> BTreeSet<Marking> {
        let mut seen = BTreeSet::from([net.initial_marking().clone()]);
        let mut work = vec![net.initial_marking().clone()];
        while let Some(m) = work.pop() {
            for g in enabled_steps(net, &m) {
                let m2 = crate::firing::fire(net, &m, &g).unwrap();
                if seen.insert(m2.clone()) {
                    work.push(m2);
                }
            }
        }
        seen
    }

    proptest! {
        #[test]
        fn graph_matches_naive_exploration(seed in any::<u64>()) {
            let net = crate::corpus::random_net(seed, &crate::corpus::CorpusParams::default());
            let g = explore(&net, &lim()).unwrap();
            let got: BTreeSet<Marking> = g.markings().iter().cloned().collect();
            prop_assert_eq!(got, naive_reachable(&net));
        }

        #[test]
        fn relations_are_symmetric_and_irreflexive(seed in any::<u64>()) {
            let net = crate::corpus::random_net(seed, &crate::corpus::CorpusParams::default());
            let g = explore(&net, &lim()).unwrap();
            let rel = g.relations(&net);
            for r in [&rel.concurrent, &rel.conflict] {
                for (t, u) in r.pairs() {
                    prop_assert!(t < u);
                    prop_assert!(r.contains(u, t));
                }
            }
            for (t, u) in rel.concurrent.pairs() {
                let m = rel.concurrent.witness(t, u).unwrap();
                prop_assert!(enabled_steps(&net, m).contains(&Step::new([t, u])));
            }
        }

        #[test]
        fn plain_nets_are_deterministic(seed in any::<u64>(), len in 0usize..4) {
            let net = crate::corpus::random_net(seed, &crate::corpus::CorpusParams::default());
            let actions: Vec<String> = net.visible_actions().into_iter().collect();
            prop_assume!(!actions.is_empty());
            let sigma: Vec<&str> = (0..len).map(|i| actions[(seed as usize + i) % actions.len()].as_str()).collect();
            let r = weak_reach(&net, net.initial_marking(), &sigma, &lim()).unwrap();
            prop_assert!(r.len() <= 1);
        }
    }
}
