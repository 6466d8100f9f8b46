use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::CheckOutcome;
use crate::classify::distributed_conflict_with;
use crate::distribution::Distribution;
use crate::error::Result;
use crate::firing::{enabled_steps, enabled_steps_among, fire_unchecked, is_enabled, is_step, Step};
use crate::limits::Limits;
use crate::marking::Marking;
use crate::net::{LabelledNet, Node, PlaceId, TransId};
use crate::reach::{explore, reachability_graph, tau_closure, weak_reach, ReachGraph};
use crate::transform::{async_implementation, AsyncNet, AsyncOrigin};

/// A net, a distribution on it and the matching asynchronous
/// implementation, with the reachability graph of the source.
#[derive(Debug, Clone)]
pub struct AlphaContext {
    net: LabelledNet,
    d: Distribution,
    imp: AsyncNet,
    /// `τ^←` on implementation places.
    back: Vec<PlaceId>,
    /// Buffer places per source place.
    buffers: Vec<Vec<PlaceId>>,
    /// Buffer transition `t_s` per `(s, t)`.
    movers: BTreeMap<(PlaceId, TransId), TransId>,
    /// Source places with a posttransition at another location.
    remote: Marking,
    graph: ReachGraph,
    limits: Limits,
}

impl AlphaContext {
    pub fn new(net: &LabelledNet, d: &Distribution, limits: &Limits) -> Result<Self> {
        let imp = async_implementation(net, d)?;
        let graph = reachability_graph(net, limits)?;
        let mut buffers = vec![Vec::new(); net.place_count()];
        let back = imp
            .net
            .places()
            .map(|p| match imp.buffer_of(p) {
                Some((s, _)) => {
                    buffers[s.index()].push(p);
                    s
                }
                None => p,
            })
            .collect();
        let movers = imp
            .net
            .transitions()
            .filter_map(|t| match imp.trans_origin[t.index()] {
                AsyncOrigin::BufferTransition { place, transition } => Some(((place, transition), t)),
                _ => None,
            })
            .collect();
        let remote = Marking::from_places(
            net.places()
                .filter(|&s| net.place_post(s).iter().any(|&t| !d.same(Node::Place(s), Node::Trans(t)))),
        );
        Ok(AlphaContext {
            net: net.clone(),
            d: d.clone(),
            imp,
            back,
            buffers,
            movers,
            remote,
            graph,
            limits: limits.clone(),
        })
    }

    pub fn net(&self) -> &LabelledNet {
        &self.net
    }

    pub fn distribution(&self) -> &Distribution {
        &self.d
    }

    pub fn implementation(&self) -> &AsyncNet {
        &self.imp
    }

    /// Shifts every buffered token back to the place it came from.
    pub fn tau_back(&self, m: &Marking) -> Marking {
        Marking::from_places(m.iter().map(|p| self.back[p.index()]))
    }

    /// No two tokens of `m` shift back to the same place.
    pub fn injective(&self, m: &Marking) -> bool {
        self.tau_back(m).len() == m.len()
    }

    /// `τ^←(m)` is reachable in the source and `τ^←` is injective on `m`.
    pub fn alpha(&self, m: &Marking) -> bool {
        self.injective(m) && self.graph.contains(&self.tau_back(m))
    }

    /// Number of tokens that may still move into a buffer.
    pub fn d(&self, m: &Marking) -> usize {
        m.intersection(&self.remote).len()
    }

    fn names(&self, m: &Marking) -> Vec<String> {
        self.imp.net.marking_names(m)
    }

    /// Every `α`-marking, built from the reachable source markings by
    /// optionally moving each token into one of its buffers.
    fn alpha_markings(&self) -> Result<BTreeSet<Marking>> {
        let mut out = BTreeSet::new();
        for m in self.graph.markings() {
            let mut partial = vec![Marking::empty()];
            for s in m.iter() {
                let mut next = Vec::with_capacity(partial.len() * (1 + self.buffers[s.index()].len()));
                for base in &partial {
                    for &p in std::iter::once(&s).chain(&self.buffers[s.index()]) {
                        let mut b = base.clone();
                        b.insert(p);
                        next.push(b);
                    }
                }
                partial = next;
                self.limits.check_states(out.len() + partial.len())?;
            }
            out.extend(partial);
        }
        Ok(out)
    }

    /// The reachable markings of the implementation are exactly the
    /// markings satisfying `α`. Also checks that the implementation is
    /// contact-free.
    pub fn check_alpha_characterization(&self) -> Result<CheckOutcome> {
        let mut out = CheckOutcome::new("alpha_characterization");
        let reach = explore(&self.imp.net, &self.limits)?;
        let cands = self.alpha_markings()?;
        for m in reach.markings() {
            out.checked += 1;
            if !self.alpha(m) {
                return Ok(out.fail("only if", self.names(m), "reachable marking violates alpha"));
            }
            if !cands.contains(m) {
                return Ok(out.fail("only if", self.names(m), "reachable marking is not a buffer shift of a source marking"));
            }
        }
        for m in &cands {
            if !self.alpha(m) {
                return Ok(out.fail("alpha", self.names(m), "buffer shift of a reachable marking violates alpha"));
            }
            if !reach.contains(m) {
                return Ok(out.fail("if", self.names(m), "alpha-marking is not reachable"));
            }
        }
        if let Some(&(node, t)) = reach.contacts().first() {
            return Ok(out.fail(
                "contact",
                self.names(reach.marking(node)),
                format!("firing {} causes contact", self.imp.net.trans_name(t)),
            ));
        }
        Ok(out)
    }

    /// Every buffer move from an `α`-marking decreases `d`, keeps `τ^←`
    /// and preserves `α`.
    pub fn check_d_descent(&self) -> Result<CheckOutcome> {
        let mut out = CheckOutcome::new("d_descent");
        let reach = explore(&self.imp.net, &self.limits)?;
        for node in 0..reach.len() {
            let m = reach.marking(node);
            if !self.alpha(m) {
                continue;
            }
            for &(t, next) in reach.successors(node) {
                if !self.imp.is_buffer_transition(t) {
                    continue;
                }
                out.checked += 1;
                let m2 = reach.marking(next);
                let name = self.imp.net.trans_name(t);
                if self.d(m2) >= self.d(m) {
                    return Ok(out.fail("d", self.names(m), format!("{name} does not decrease d")));
                }
                if self.tau_back(m2) != self.tau_back(m) {
                    return Ok(out.fail("tau_back", self.names(m), format!("{name} changes the shifted-back marking")));
                }
                if !self.alpha(m2) {
                    return Ok(out.fail("alpha", self.names(m2), format!("alpha lost after {name}")));
                }
            }
        }
        Ok(out)
    }

    /// Steps of source transitions in the implementation project onto
    /// steps of the source under `τ^←`, preserving `α`.
    pub fn check_visible_projection(&self) -> Result<CheckOutcome> {
        let mut out = CheckOutcome::new("visible_projection");
        let reach = explore(&self.imp.net, &self.limits)?;
        for m in reach.markings() {
            if !self.alpha(m) {
                continue;
            }
            let enabled: Vec<TransId> = self
                .net
                .transitions()
                .filter(|&t| is_enabled(&self.imp.net, m, t))
                .collect();
            let k = self.tau_back(m);
            for g in enabled_steps_among(&self.imp.net, &enabled) {
                out.checked += 1;
                let m2 = fire_unchecked(&self.imp.net, m, g.transitions());
                if !is_step(&self.net, &k, &g) {
                    return Ok(out.fail("step", self.names(m), format!("{} is not a step of the source", self.step_name(&g))));
                }
                if fire_unchecked(&self.net, &k, g.transitions()) != self.tau_back(&m2) {
                    return Ok(out.fail("target", self.names(m), format!("{} lands elsewhere in the source", self.step_name(&g))));
                }
                if !self.alpha(&m2) {
                    return Ok(out.fail("alpha", self.names(&m2), format!("alpha lost after {}", self.step_name(&g))));
                }
            }
        }
        Ok(out)
    }

    /// Every implementation transition is matched by a weak move of the
    /// source between the shifted-back markings, so weak traces of the
    /// implementation are weak traces of the source.
    pub fn check_weak_traces(&self) -> Result<CheckOutcome> {
        let mut out = CheckOutcome::new("weak_traces");
        let reach = explore(&self.imp.net, &self.limits)?;
        if self.tau_back(reach.marking(0)) != *self.net.initial_marking() {
            return Ok(out.fail("initial", self.names(reach.marking(0)), "initial markings differ"));
        }
        let mut cache: HashMap<(Marking, Option<String>), BTreeSet<Marking>> = HashMap::new();
        for node in 0..reach.len() {
            let m = reach.marking(node);
            if !self.alpha(m) {
                return Ok(out.fail("alpha", self.names(m), "reachable marking violates alpha"));
            }
            let k = self.tau_back(m);
            for &(t, next) in reach.successors(node) {
                out.checked += 1;
                let action = self.imp.net.label(t).action().map(str::to_string);
                let key = (k.clone(), action.clone());
                if !cache.contains_key(&key) {
                    let targets = match &action {
                        None => tau_closure(&self.net, &BTreeSet::from([k.clone()]), &self.limits)?,
                        Some(a) => weak_reach(&self.net, &k, &[a.as_str()], &self.limits)?,
                    };
                    cache.insert(key.clone(), targets);
                }
                if !cache[&key].contains(&self.tau_back(reach.marking(next))) {
                    return Ok(out.fail(
                        "weak_step",
                        self.names(m),
                        format!("{} has no weak counterpart in the source", self.imp.net.trans_name(t)),
                    ));
                }
            }
        }
        Ok(out)
    }

    /// Every step of the source is mimicked by the implementation: first
    /// the buffer moves feeding it, one at a time, then the step itself.
    pub fn check_step_simulation(&self) -> Result<CheckOutcome> {
        let mut out = CheckOutcome::new("step_simulation");
        for m in self.graph.markings() {
            for g in enabled_steps(&self.net, m) {
                out.checked += 1;
                let mut cur = m.clone();
                for &t in g.transitions() {
                    for s in self.net.pre(t).iter() {
                        if let Some(&mover) = self.movers.get(&(s, t)) {
                            if !is_enabled(&self.imp.net, &cur, mover) {
                                return Ok(out.fail(
                                    "buffer",
                                    self.names(&cur),
                                    format!("{} is not enabled", self.imp.net.trans_name(mover)),
                                ));
                            }
                            cur = fire_unchecked(&self.imp.net, &cur, &[mover]);
                        }
                    }
                }
                if !is_step(&self.imp.net, &cur, &g) {
                    return Ok(out.fail("step", self.names(&cur), format!("{} is not a step", self.step_name(&g))));
                }
                if fire_unchecked(&self.imp.net, &cur, g.transitions()) != fire_unchecked(&self.net, m, g.transitions()) {
                    return Ok(out.fail("target", self.names(&cur), format!("{} lands elsewhere", self.step_name(&g))));
                }
            }
        }
        Ok(out)
    }

    /// Without a distributed conflict, every marking reached from a
    /// reachable source marking by buffer moves until none is enabled
    /// offers exactly the source steps. Skipped otherwise.
    pub fn check_normal_form_menus(&self) -> Result<CheckOutcome> {
        let mut out = CheckOutcome::new("normal_form_menus");
        let rel = self.graph.relations(&self.net);
        if let Some(w) = distributed_conflict_with(&self.net, &self.d, &rel) {
            let names: Vec<&str> = w.transitions.iter().map(|&t| self.net.trans_name(t)).collect();
            out.skipped = Some(format!("distributed conflict between {}", names.join(" and ")));
            return Ok(out);
        }
        let movers: Vec<TransId> = self.movers.values().copied().collect();
        for m1 in self.graph.markings() {
            let expected = enabled_steps(&self.net, m1);
            let mut seen = BTreeSet::from([m1.clone()]);
            let mut stack = vec![m1.clone()];
            while let Some(m) = stack.pop() {
                let moves: Vec<TransId> = movers.iter().copied().filter(|&t| is_enabled(&self.imp.net, &m, t)).collect();
                if moves.is_empty() {
                    out.checked += 1;
                    let enabled: Vec<TransId> = self
                        .net
                        .transitions()
                        .filter(|&t| is_enabled(&self.imp.net, &m, t))
                        .collect();
                    if enabled_steps_among(&self.imp.net, &enabled) != expected {
                        return Ok(out.fail(
                            "menu",
                            self.names(&m),
                            format!("steps differ from those of {{{}}}", self.net.marking_names(m1).join(", ")),
                        ));
                    }
                }
                for t in moves {
                    let m2 = fire_unchecked(&self.imp.net, &m, &[t]);
                    if seen.insert(m2.clone()) {
                        self.limits.check_states(seen.len())?;
                        stack.push(m2);
                    }
                }
            }
        }
        Ok(out)
    }

    fn step_name(&self, g: &Step) -> String {
        let names: Vec<&str> = g.transitions().iter().map(|&t| self.net.trans_name(t)).collect();
        format!("{{{}}}", names.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn ctx(net: &LabelledNet) -> AlphaContext {
        AlphaContext::new(net, &Distribution::finest(net), &Limits::default()).unwrap()
    }

    #[test]
    fn tau_back_on_fig1() {
        let net = fixtures::fig1();
        let c = ctx(&net);
        let i = &c.implementation().net;
        let m = |names: &[&str]| i.marking(names);
        assert_eq!(c.tau_back(&m(&["p__t", "q"])), m(&["p", "q"]));
        assert_eq!(c.tau_back(&m(&["p", "q"])), m(&["p", "q"]));
        assert_eq!(c.tau_back(&m(&["p__t", "p__u"])), m(&["p"]));
    }

    #[test]
    fn alpha_on_fig1() {
        let net = fixtures::fig1();
        let c = ctx(&net);
        let i = &c.implementation().net;
        assert!(c.alpha(&i.marking(&["p"])));
        assert!(c.alpha(&i.marking(&["p__u"])));
        assert!(!c.alpha(&i.marking(&["p__t", "p__u"])));
        // {p, q} is not reachable in fig1, whose only initial token is on p.
        assert!(!c.alpha(&i.marking(&["p", "q"])));
        assert!(!c.alpha(&i.marking(&["p__t", "q__u"])));
    }

    #[test]
    fn d_counts_remote_tokens() {
        let net = fixtures::fig1();
        let c = ctx(&net);
        let i = &c.implementation().net;
        assert_eq!(c.d(&i.marking(&["p", "q"])), 2);
        assert_eq!(c.d(&i.marking(&["p__t", "q"])), 1);
        assert_eq!(c.d(&i.marking(&["p__t", "q__u"])), 0);
    }

    #[test]
    fn all_checks_pass_on_fixtures_with_finest_distribution() {
        for (name, net) in fixtures::all() {
            let c = ctx(&net);
            for o in [
                c.check_alpha_characterization().unwrap(),
                c.check_d_descent().unwrap(),
                c.check_visible_projection().unwrap(),
                c.check_weak_traces().unwrap(),
                c.check_step_simulation().unwrap(),
                c.check_normal_form_menus().unwrap(),
            ] {
                assert!(o.passed(), "{name}: {} failed: {:?}", o.name, o.failure);
            }
        }
    }

    #[test]
    fn local_distribution_has_nothing_to_descend() {
        let net = fixtures::fig4();
        let c = AlphaContext::new(&net, &Distribution::coarsest(&net), &Limits::default()).unwrap();
        let o = c.check_d_descent().unwrap();
        assert!(o.passed());
        assert_eq!(o.checked, 0);
    }

    #[test]
    fn normal_form_menus_skip_distributed_conflicts() {
        let net = fixtures::fig1();
        let o = ctx(&net).check_normal_form_menus().unwrap();
        assert!(o.passed());
        assert!(o.skipped.is_some());
    }
}
