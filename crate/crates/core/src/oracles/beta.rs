use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;

use super::CheckOutcome;
use crate::error::{Error, Result};
use crate::firing::{enabled_steps, enabled_steps_among, fire_unchecked, is_enabled, visible_label, LabelMultiset};
use crate::limits::Limits;
use crate::marking::Marking;
use crate::net::{Label, LabelledNet, NetBuilder, PlaceId, TransId};
use crate::reach::{explore, reachability_graph, ReachGraph};
use crate::transform::{tcc_implementation, TccNet};

/// Index (1 to 7) of a conjunct of `β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct BetaClause(pub u8);

impl fmt::Display for BetaClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "beta {}", self.0)
    }
}

/// A silent-free source net, its TCC implementation and the tables needed
/// to evaluate `τ^⇐`, `τ^⟸`, `d` and `β`.
///
/// Places without posttransitions are left out of the images of `τ^⇐`
/// and `τ^⟸`: such a place has no embassies, so the embassy clause of
/// `τ^⇐` would hold for it vacuously. Images are markings of
/// [`BetaContext::core`], the source without those places, which has the
/// same behaviour as the source.
#[derive(Debug, Clone)]
pub struct BetaContext {
    source: LabelledNet,
    hidden: Option<String>,
    tcc: TccNet,
    core: LabelledNet,
    core_place: Vec<Option<PlaceId>>,
    core_graph: ReachGraph,
    /// `(class, embassy)` per source place.
    embassies: Vec<Vec<(usize, PlaceId)>>,
    /// Transitions producing into each source place.
    producers: Vec<Vec<TransId>>,
    limits: Limits,
}

fn fresh_action(net: &LabelledNet) -> String {
    let used = net.visible_actions();
    (0..)
        .map(|k| format!("__i{k}"))
        .find(|a| !used.contains(a))
        .expect("infinitely many candidates")
}

impl BetaContext {
    /// Renames silent transitions of `net` to a fresh action (the
    /// implementation of the renamed net is the renamed implementation)
    /// and builds the TCC implementation of the result.
    pub fn new(net: &LabelledNet, limits: &Limits) -> Result<Self> {
        let (source, hidden) = if net.has_tau() {
            let i = fresh_action(net);
            let renamed = net.relabel(|_, l| if l.is_tau() { Label::Action(i.clone()) } else { l.clone() });
            (renamed, Some(i))
        } else {
            (net.clone(), None)
        };
        let tcc = tcc_implementation(&source, limits)?;
        let mut ctx = Self::from_parts(source, tcc, limits)?;
        ctx.hidden = hidden;
        Ok(ctx)
    }

    /// Context for a given implementation, e.g. a deliberately damaged
    /// one. `source` must not contain silent transitions.
    pub fn from_parts(source: LabelledNet, tcc: TccNet, limits: &Limits) -> Result<Self> {
        if source.has_tau() {
            return Err(Error::HasTau);
        }
        let mut b = NetBuilder::new();
        b.set_name(source.name().map(str::to_string));
        let core_place: Vec<Option<PlaceId>> = source
            .places()
            .map(|s| {
                (!source.place_post(s).is_empty())
                    .then(|| b.add_place(source.place_name(s), source.is_marked_initially(s)).unwrap())
            })
            .collect();
        for t in source.transitions() {
            let ct = b.add_transition(source.trans_name(t), source.label(t).clone()).unwrap();
            for s in source.pre(t).iter() {
                b.input(core_place[s.index()].expect("preplaces have a posttransition"), ct).unwrap();
            }
            for s in source.post(t).iter() {
                if let Some(cs) = core_place[s.index()] {
                    b.output(ct, cs).unwrap();
                }
            }
        }
        let core = b.build();
        let core_graph = reachability_graph(&core, limits)?;

        let mut embassies = vec![Vec::new(); source.place_count()];
        for ((s, c), e) in tcc.embassies() {
            embassies[s.index()].push((c, e));
        }
        let mut producers = vec![Vec::new(); source.place_count()];
        for t in source.transitions() {
            for s in source.post(t).iter() {
                producers[s.index()].push(t);
            }
        }
        Ok(BetaContext {
            source,
            hidden: None,
            tcc,
            core,
            core_place,
            core_graph,
            embassies,
            producers,
            limits: limits.clone(),
        })
    }

    /// The silent-free source.
    pub fn source(&self) -> &LabelledNet {
        &self.source
    }

    /// Action that silent source transitions were renamed to, if any.
    pub fn hidden_action(&self) -> Option<&str> {
        self.hidden.as_deref()
    }

    pub fn tcc(&self) -> &TccNet {
        &self.tcc
    }

    /// The source without places that have no posttransitions.
    pub fn core(&self) -> &LabelledNet {
        &self.core
    }

    fn fired(&self, m: &Marking, t: TransId) -> bool {
        m.contains(self.tcc.fired(t))
    }

    /// `τ^⇐`: a place is marked if it is, if all its embassies are, or if
    /// a transition producing it has fired but not completed.
    pub fn tau_bar(&self, m: &Marking) -> Marking {
        Marking::from_places(self.source.places().filter_map(|s| {
            let cs = self.core_place[s.index()]?;
            let held = m.contains(s)
                || self.embassies[s.index()].iter().all(|&(_, e)| m.contains(e))
                || self.producers[s.index()].iter().any(|&t| self.fired(m, t));
            held.then_some(cs)
        }))
    }

    /// `τ^⟸`: a place is marked if it is, if any of its embassies is, or
    /// if a transition consuming it has fired but not completed.
    pub fn tau_bar_pre(&self, m: &Marking) -> Marking {
        Marking::from_places(self.source.places().filter_map(|s| {
            let cs = self.core_place[s.index()]?;
            let held = m.contains(s)
                || self.embassies[s.index()].iter().any(|&(_, e)| m.contains(e))
                || self.source.place_post(s).iter().any(|&t| self.fired(m, t));
            held.then_some(cs)
        }))
    }

    /// Source tokens, plus `1 + |t•|` per fired transition, plus one per
    /// pending garbage-collection request.
    pub fn d(&self, m: &Marking) -> usize {
        let tokens = self.source.places().filter(|&s| m.contains(s)).count();
        let fired: usize = self
            .source
            .transitions()
            .filter(|&t| self.fired(m, t))
            .map(|t| 1 + self.source.post(t).len())
            .sum();
        let requests = self
            .tcc
            .collection_keys()
            .filter(|&(s, t, c)| m.contains(self.tcc.request(s, t, c).unwrap()))
            .count();
        tokens + fired + requests
    }

    /// Evaluates `β` clause by clause; `Err` names the first that fails.
    pub fn beta(&self, m: &Marking) -> Result<(), BetaClause> {
        let tcc = &self.tcc;
        let class = |t: TransId| tcc.classes.class_of(t);
        let req = |s, t, c| tcc.request(s, t, c).is_some_and(|p| m.contains(p));
        let done = |s, t, c| tcc.done(s, t, c).is_some_and(|p| m.contains(p));
        let emb = |s, c| tcc.embassy(s, c).is_some_and(|p| m.contains(p));
        let src = &self.source;

        if !self.core_graph.contains(&self.tau_bar_pre(m)) {
            return Err(BetaClause(1));
        }
        for s in src.places() {
            if m.contains(s) && self.embassies[s.index()].iter().any(|&(_, e)| m.contains(e)) {
                return Err(BetaClause(2));
            }
        }
        for s in src.places() {
            let es = &self.embassies[s.index()];
            for &(cu, eu) in es {
                if m.contains(eu)
                    && es.iter().any(|&(_, et)| !m.contains(et))
                    && !src.place_post(s).iter().any(|&v| req(s, v, cu))
                {
                    return Err(BetaClause(3));
                }
            }
        }
        let fired: Vec<TransId> = src.transitions().filter(|&t| self.fired(m, t)).collect();
        for (i, &t) in fired.iter().enumerate() {
            if fired[i + 1..].iter().any(|&u| src.pre(t).intersects(src.pre(u))) {
                return Err(BetaClause(4));
            }
        }
        for (s, t, c) in tcc.collection_keys() {
            if req(s, t, c) && (done(s, t, c) || !emb(s, c) || !self.fired(m, t)) {
                return Err(BetaClause(5));
            }
        }
        for (s, t, c) in tcc.collection_keys() {
            if done(s, t, c) && !self.fired(m, t) {
                return Err(BetaClause(6));
            }
        }
        for &t in &fired {
            for s in src.pre(t).iter() {
                if m.contains(s) || emb(s, class(t)) {
                    return Err(BetaClause(7));
                }
                for &u in src.place_post(s) {
                    if class(u) != class(t) && !req(s, t, class(u)) && !done(s, t, class(u)) {
                        return Err(BetaClause(7));
                    }
                }
            }
        }
        Ok(())
    }

    fn names(&self, m: &Marking) -> Vec<String> {
        self.tcc.net.marking_names(m)
    }

    fn graph(&self) -> Result<ReachGraph> {
        explore(&self.tcc.net, &self.limits)
    }

    /// `β` holds at every reachable marking of the implementation, and the
    /// implementation is contact-free.
    pub fn check_beta_sweep(&self) -> Result<CheckOutcome> {
        let mut out = CheckOutcome::new("beta_sweep");
        let g = self.graph()?;
        for m in g.markings() {
            out.checked += 1;
            if let Err(c) = self.beta(m) {
                return Ok(out.fail(c.to_string(), self.names(m), "reachable marking violates beta"));
            }
        }
        if let Some(&(node, t)) = g.contacts().first() {
            return Ok(out.fail(
                "contact",
                self.names(g.marking(node)),
                format!("firing {} causes contact", self.tcc.net.trans_name(t)),
            ));
        }
        Ok(out)
    }

    /// Visible steps of the core at `k`, by label and target.
    fn core_moves(&self, k: &Marking) -> BTreeSet<(LabelMultiset, Marking)> {
        enabled_steps(&self.core, k)
            .into_iter()
            .map(|g| {
                let label = visible_label(&self.core, &g).expect("the source is silent-free");
                (label, fire_unchecked(&self.core, k, g.transitions()))
            })
            .collect()
    }

    /// The five clauses that make `τ^⇐` a branching bisimulation, over all
    /// reachable markings of the implementation:
    /// 1. `β(M0)` and `τ^⇐(M0)` is the initial marking of the core;
    /// 2. silent moves preserve `β` and `τ^⇐` and decrease `d`;
    /// 3. visible steps preserve `β` and are matched by the core;
    /// 4. a silent move is enabled whenever `d > 0`;
    /// 5. at `d = 0`, every step of the core is matched.
    pub fn check_branching_clauses(&self) -> Result<CheckOutcome> {
        let mut out = CheckOutcome::new("branching_clauses");
        let net = &self.tcc.net;
        let g = self.graph()?;
        let m0 = g.marking(0);
        if let Err(c) = self.beta(m0) {
            return Ok(out.fail("clause 1", self.names(m0), format!("{c} fails initially")));
        }
        if self.tau_bar(m0) != *self.core.initial_marking() {
            return Ok(out.fail("clause 1", self.names(m0), "initial markings do not correspond"));
        }
        for node in 0..g.len() {
            self.limits.check_cancelled()?;
            let m1 = g.marking(node);
            if self.beta(m1).is_err() {
                continue;
            }
            out.checked += 1;
            let (k1, d1) = (self.tau_bar(m1), self.d(m1));
            let mut silent = false;
            for &(t, next) in g.successors(node) {
                if !net.is_tau(t) {
                    continue;
                }
                silent = true;
                let m2 = g.marking(next);
                let name = net.trans_name(t);
                if let Err(c) = self.beta(m2) {
                    return Ok(out.fail("clause 2", self.names(m1), format!("{c} fails after {name}")));
                }
                if self.tau_bar(m2) != k1 {
                    return Ok(out.fail("clause 2", self.names(m1), format!("{name} changes the source image")));
                }
                if self.d(m2) >= d1 {
                    return Ok(out.fail("clause 2", self.names(m1), format!("{name} does not decrease d")));
                }
            }
            let visible: Vec<TransId> = net
                .transitions()
                .filter(|&t| !net.is_tau(t) && is_enabled(net, m1, t))
                .collect();
            let core_moves = self.core_moves(&k1);
            let mut impl_moves = BTreeSet::new();
            for step in enabled_steps_among(net, &visible) {
                let m2 = fire_unchecked(net, m1, step.transitions());
                let label = visible_label(net, &step).expect("visible transitions only");
                if let Err(c) = self.beta(&m2) {
                    return Ok(out.fail("clause 3", self.names(m1), format!("{c} fails after {{{label}}}")));
                }
                let k2 = self.tau_bar(&m2);
                if !core_moves.contains(&(label.clone(), k2.clone())) {
                    return Ok(out.fail("clause 3", self.names(m1), format!("step {label} is not matched by the source")));
                }
                impl_moves.insert((label, k2));
            }
            if d1 > 0 && !silent {
                return Ok(out.fail("clause 4", self.names(m1), format!("d = {d1} but no silent move is enabled")));
            }
            if d1 == 0 {
                if let Some((label, _)) = core_moves.difference(&impl_moves).next() {
                    return Ok(out.fail("clause 5", self.names(m1), format!("source step {label} is not matched")));
                }
            }
        }
        if let Some(&(node, t)) = g.contacts().first() {
            return Ok(out.fail(
                "contact",
                self.names(g.marking(node)),
                format!("firing {} causes contact", net.trans_name(t)),
            ));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::net::Arc;

    fn ctx(net: &LabelledNet) -> BetaContext {
        BetaContext::new(net, &Limits::default()).unwrap()
    }

    #[test]
    fn beta_holds_initially_on_fig4() {
        let c = ctx(&fixtures::fig4());
        assert_eq!(c.beta(c.tcc().net.initial_marking()), Ok(()));
        assert_eq!(c.tau_bar(c.tcc().net.initial_marking()), *c.core().initial_marking());
    }

    #[test]
    fn place_and_embassy_together_violate_beta2() {
        let c = ctx(&fixtures::fig4());
        let tcc = c.tcc();
        let p = tcc.net.place("p").unwrap();
        let ((s, _), e) = tcc.embassies().find(|&((s, _), _)| s == p).unwrap();
        let mut m = tcc.net.initial_marking().clone();
        assert!(m.contains(s));
        m.insert(e);
        assert_eq!(c.beta(&m), Err(BetaClause(2)));
    }

    #[test]
    fn sweeps_pass_on_fixtures() {
        for (name, net) in fixtures::all() {
            let c = ctx(&net);
            let sweep = c.check_beta_sweep().unwrap();
            assert!(sweep.passed(), "{name}: {:?}", sweep.failure);
            let clauses = c.check_branching_clauses().unwrap();
            assert!(clauses.passed(), "{name}: {:?}", clauses.failure);
        }
    }

    #[test]
    fn silent_transitions_are_renamed() {
        let c = ctx(&fixtures::fig3());
        let i = c.hidden_action().unwrap();
        assert!(!c.source().has_tau());
        assert!(c.source().visible_actions().contains(i));
    }

    #[test]
    fn removing_a_collection_arc_is_detected() {
        let limits = Limits::default();
        let c = ctx(&fixtures::fig4());
        let tcc = c.tcc();
        let (s, t, k) = tcc.collection_keys().next().expect("fig4 has two conflict classes");
        let target = Arc::Input(tcc.embassy(s, k).unwrap(), tcc.collector(s, t, k).unwrap());
        let mut b = tcc.net.to_builder();
        let i = b.arcs().iter().position(|&a| a == target).unwrap();
        b.remove_arc(i);
        let broken = BetaContext::from_parts(c.source().clone(), tcc.with_net(b.build()), &limits).unwrap();
        let o = broken.check_branching_clauses().unwrap();
        assert!(!o.passed());
        assert!(!broken.check_beta_sweep().unwrap().passed());
    }

    #[test]
    fn silent_sources_are_rejected_by_from_parts() {
        let net = fixtures::fig3();
        let tcc = tcc_implementation(&net, &Limits::default()).unwrap();
        assert_eq!(
            BetaContext::from_parts(net, tcc, &Limits::default()).unwrap_err(),
            Error::HasTau
        );
    }
}
