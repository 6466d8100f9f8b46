//! Class membership: asynchrony, distributedness and distributability.

use serde::Serialize;
use std::collections::{BTreeMap, VecDeque};

use crate::distribution::{canonical_distributions, distributedness_with, Distributedness, Distribution, Requirement};
use crate::error::{Error, Result};
use crate::firing::LabelMultiset;
use crate::limits::{par_find_first, Limits};
use crate::marking::Marking;
use crate::net::{LabelledNet, Node, PlaceId, TransId};
use crate::reach::{reachability_graph, PairRelation, ReachGraph, Relations};
use crate::semantics::{compare, ready_semantics, Menu, ReadyPair, ReadySemantics};
use crate::transform::{async_implementation, locations_of_tcc, tcc_with_classes, ConflictClasses, TccNet};
use crate::verdict::{inconclusive_to_none, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Conflict,
    N,
    M,
    PureVisibleM,
    DistributedConflict,
}

/// Elements and reachable markings evidencing a pattern.
///
/// Conflict, N and distributed conflict: transitions `[t, u]`, places
/// `[p]`, markings `[M]` with `•t ⊆ M`. M: `[t, u, v]`, `[p, q]`,
/// `[M1, M2]` covering `•t` and `•v`. Pure visible M: `[t, u, v]`, the
/// shared places, and one `M` covering all three presets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternWitness {
    pub kind: PatternKind,
    pub transitions: Vec<TransId>,
    pub places: Vec<PlaceId>,
    pub markings: Vec<Marking>,
}

impl PatternWitness {
    pub fn to_json(&self, net: &LabelledNet) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind,
            "transitions": self.transitions.iter().map(|&t| net.trans_name(t)).collect::<Vec<_>>(),
            "places": self.places.iter().map(|&p| net.place_name(p)).collect::<Vec<_>>(),
            "markings": self.markings.iter().map(|m| net.marking_names(m)).collect::<Vec<_>>(),
        })
    }

    /// Re-checks the defining formula, with reachability of the recorded
    /// markings taken from `graph`. `d` is needed for distributed
    /// conflicts only.
    pub fn recheck(&self, net: &LabelledNet, graph: &ReachGraph, d: Option<&Distribution>) -> bool {
        let reach = |m: &Marking| graph.contains(m);
        let shares = |t: TransId, u: TransId, p: PlaceId| net.pre(t).contains(p) && net.pre(u).contains(p);
        match (self.kind, self.transitions.as_slice(), self.places.as_slice(), self.markings.as_slice()) {
            (PatternKind::Conflict | PatternKind::N | PatternKind::DistributedConflict, &[t, u], &[p], [m]) => {
                let base = t != u && shares(t, u, p) && reach(m) && net.pre(t).is_subset(m);
                base && match self.kind {
                    PatternKind::N => net.pre(u).len() > 1,
                    PatternKind::DistributedConflict => {
                        d.is_some_and(|d| !d.same(Node::Place(p), Node::Trans(u)))
                    }
                    _ => true,
                }
            }
            (PatternKind::M, &[t, u, v], &[p, q], [m1, m2]) => {
                t != u
                    && u != v
                    && p != q
                    && shares(t, u, p)
                    && shares(u, v, q)
                    && reach(m1)
                    && reach(m2)
                    && net.pre(t).is_subset(m1)
                    && net.pre(v).is_subset(m2)
            }
            (PatternKind::PureVisibleM, &[t, u, v], _, [m]) => {
                net.pre(t).intersects(net.pre(u))
                    && net.pre(u).intersects(net.pre(v))
                    && !net.pre(t).intersects(net.pre(v))
                    && [t, u, v].iter().all(|&x| !net.is_tau(x))
                    && reach(m)
                    && [t, u, v].iter().all(|&x| net.pre(x).is_subset(m))
            }
            _ => false,
        }
    }
}

/// Pairs `(t, u, p)` with `t ≠ u` and `p ∈ •t ∩ •u`, by `t`, `u`, `p`.
fn shared_preplaces(net: &LabelledNet) -> Vec<(TransId, TransId, PlaceId)> {
    let mut out = Vec::new();
    for t in net.transitions() {
        for p in net.pre(t).iter() {
            for &u in net.place_post(p) {
                if u != t {
                    out.push((t, u, p));
                }
            }
        }
    }
    out.sort();
    out
}

pub(crate) fn distributed_conflict_with(net: &LabelledNet, d: &Distribution, rel: &Relations) -> Option<PatternWitness> {
    shared_preplaces(net).into_iter().find_map(|(t, u, p)| {
        if d.same(Node::Place(p), Node::Trans(u)) {
            return None;
        }
        rel.coverable_by(t).map(|m| PatternWitness {
            kind: PatternKind::DistributedConflict,
            transitions: vec![t, u],
            places: vec![p],
            markings: vec![m.clone()],
        })
    })
}

pub fn has_distributed_conflict(net: &LabelledNet, d: &Distribution, limits: &Limits) -> Result<Option<PatternWitness>> {
    let rel = reachability_graph(net, limits)?.relations(net);
    Ok(distributed_conflict_with(net, d, &rel))
}

pub(crate) fn pattern_with(net: &LabelledNet, kind: PatternKind, rel: &Relations) -> Option<PatternWitness> {
    let shared = shared_preplaces(net);
    match kind {
        PatternKind::Conflict | PatternKind::N => shared.into_iter().find_map(|(t, u, p)| {
            if kind == PatternKind::N && net.pre(u).len() <= 1 {
                return None;
            }
            rel.coverable_by(t).map(|m| PatternWitness {
                kind,
                transitions: vec![t, u],
                places: vec![p],
                markings: vec![m.clone()],
            })
        }),
        PatternKind::M => {
            // (u, v, q) with q ∈ •u ∩ •v, grouped by u
            let mut by_u: BTreeMap<TransId, Vec<(TransId, PlaceId)>> = BTreeMap::new();
            for &(u, v, q) in &shared {
                by_u.entry(u).or_default().push((v, q));
            }
            for &(t, u, p) in &shared {
                let Some(m1) = rel.coverable_by(t) else { continue };
                for &(v, q) in by_u.get(&u).into_iter().flatten() {
                    if p == q {
                        continue;
                    }
                    if let Some(m2) = rel.coverable_by(v) {
                        return Some(PatternWitness {
                            kind,
                            transitions: vec![t, u, v],
                            places: vec![p, q],
                            markings: vec![m1.clone(), m2.clone()],
                        });
                    }
                }
            }
            None
        }
        PatternKind::PureVisibleM | PatternKind::DistributedConflict => {
            panic!("{kind:?} is not a plain pattern; use its dedicated detector")
        }
    }
}

/// The partially reachable conflict, partially reachable N, or left and
/// right border reachable M.
pub fn detect_pattern(net: &LabelledNet, kind: PatternKind, limits: &Limits) -> Result<Option<PatternWitness>> {
    let rel = reachability_graph(net, limits)?.relations(net);
    Ok(pattern_with(net, kind, &rel))
}

pub(crate) fn pure_visible_m_with(net: &LabelledNet, graph: &ReachGraph) -> Option<PatternWitness> {
    let visible: Vec<TransId> = net.transitions().filter(|&t| !net.is_tau(t)).collect();
    let mut triples = Vec::new();
    for &u in &visible {
        for &t in &visible {
            if !net.pre(t).intersects(net.pre(u)) || t == u {
                continue;
            }
            for &v in &visible {
                if v != u && net.pre(u).intersects(net.pre(v)) && !net.pre(t).intersects(net.pre(v)) {
                    triples.push((t, u, v));
                }
            }
        }
    }
    triples.sort();
    for (t, u, v) in triples {
        let need = net.pre(t).union(net.pre(u)).union(net.pre(v));
        if let Some(m) = graph.markings().iter().find(|m| need.is_subset(m)) {
            let mut places: Vec<PlaceId> = net.pre(t).intersection(net.pre(u)).iter().collect();
            places.extend(net.pre(u).intersection(net.pre(v)).iter());
            return Some(PatternWitness {
                kind: PatternKind::PureVisibleM,
                transitions: vec![t, u, v],
                places,
                markings: vec![m.clone()],
            });
        }
    }
    None
}

/// A fully reachable visible pure M.
pub fn detect_pure_visible_m(net: &LabelledNet, limits: &Limits) -> Result<Option<PatternWitness>> {
    Ok(pure_visible_m_with(net, &reachability_graph(net, limits)?))
}

fn require_plain(net: &LabelledNet) -> Result<()> {
    if net.is_plain() {
        Ok(())
    } else {
        Err(Error::NotPlain)
    }
}

fn async_requirement(r: Requirement) {
    assert!(Requirement::ASYNC.contains(&r), "{r} is not an asynchrony requirement");
}

/// Outcome of an asynchrony decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AsyncOutcome {
    /// A candidate distribution that works.
    Yes(Distribution),
    /// No candidate works; the distributed conflict of the first
    /// candidate (structural check only).
    No(Option<PatternWitness>),
}

impl AsyncOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, AsyncOutcome::Yes(_))
    }
}

/// Some canonical distribution under `r` leaves no distributed conflict.
pub fn structural_async(net: &LabelledNet, r: Requirement, limits: &Limits) -> Result<AsyncOutcome> {
    async_requirement(r);
    require_plain(net)?;
    let rel = reachability_graph(net, limits)?.relations(net);
    structural_async_with(net, r, &rel, limits)
}

pub(crate) fn structural_async_with(net: &LabelledNet, r: Requirement, rel: &Relations, limits: &Limits) -> Result<AsyncOutcome> {
    let candidates: Vec<Distribution> = canonical_distributions(net, r, limits)?.collect();
    let found = par_find_first(limits.execution, &candidates, |d| {
        distributed_conflict_with(net, d, rel).is_none().then(|| d.clone())
    });
    limits.check_cancelled()?;
    Ok(match found {
        Some(d) => AsyncOutcome::Yes(d),
        None => AsyncOutcome::No(candidates.first().and_then(|d| distributed_conflict_with(net, d, rel))),
    })
}

/// Some canonical distribution under `r` yields an asynchronous
/// implementation step readiness equivalent to the net.
pub fn behavioural_async(net: &LabelledNet, r: Requirement, limits: &Limits) -> Result<AsyncOutcome> {
    async_requirement(r);
    require_plain(net)?;
    let spec = ready_semantics(net, limits)?;
    behavioural_async_with(net, r, &spec, limits)
}

pub(crate) fn behavioural_async_with(net: &LabelledNet, r: Requirement, spec: &ReadySemantics, limits: &Limits) -> Result<AsyncOutcome> {
    let candidates: Vec<Distribution> = canonical_distributions(net, r, limits)?.collect();
    let found = par_find_first(limits.execution, &candidates, |d| {
        let check = || -> Result<bool> {
            limits.check_cancelled()?;
            let imp = async_implementation(net, d)?;
            Ok(compare(spec, &ready_semantics(&imp.net, limits)?, limits)?.is_equivalent())
        };
        match check() {
            Ok(true) => Some(Ok(d.clone())),
            Ok(false) => None,
            Err(e) => Some(Err(e)),
        }
    });
    match found {
        Some(Ok(d)) => Ok(AsyncOutcome::Yes(d)),
        Some(Err(e)) => Err(e),
        None => Ok(AsyncOutcome::No(None)),
    }
}

/// `TrulySynchronous` when a fully reachable visible pure M exists;
/// otherwise nothing is claimed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyncBound {
    TrulySynchronous(PatternWitness),
    Unknown,
}

pub fn truly_synchronous_upper(net: &LabelledNet, limits: &Limits) -> Result<SyncBound> {
    require_plain(net)?;
    Ok(match detect_pure_visible_m(net, limits)? {
        Some(w) => SyncBound::TrulySynchronous(w),
        None => SyncBound::Unknown,
    })
}

#[derive(Debug, Clone)]
pub enum Distributable {
    /// The TCC implementation and the locations under which it is
    /// distributed.
    Yes { tcc: Box<TccNet>, locations: Distribution },
    /// `t #* u` and `t ⌣ u`, with the `#`-chain from `t` to `u`.
    No { pair: (TransId, TransId), chain: Vec<TransId> },
}

impl Distributable {
    pub fn holds(&self) -> bool {
        matches!(self, Distributable::Yes { .. })
    }
}

/// Plain-distributability: `#*` and `⌣` are disjoint.
pub fn plain_distributable(net: &LabelledNet, limits: &Limits) -> Result<Distributable> {
    require_plain(net)?;
    let rel = reachability_graph(net, limits)?.relations(net);
    Ok(distributable_with(net, &rel))
}

pub(crate) fn distributable_with(net: &LabelledNet, rel: &Relations) -> Distributable {
    let classes = ConflictClasses::from_relation(net, &rel.conflict);
    match rel.concurrent.pairs().find(|&(t, u)| classes.related(t, u)) {
        Some((t, u)) => Distributable::No {
            pair: (t, u),
            chain: relation_chain(&rel.conflict, t, u).expect("related transitions are chained"),
        },
        None => {
            let tcc = tcc_with_classes(net, classes);
            let locations = locations_of_tcc(&tcc);
            Distributable::Yes {
                tcc: Box::new(tcc),
                locations,
            }
        }
    }
}

/// Shortest path from `t` to `u` along a relation.
pub fn relation_chain(r: &PairRelation, t: TransId, u: TransId) -> Option<Vec<TransId>> {
    let mut adj: BTreeMap<TransId, Vec<TransId>> = BTreeMap::new();
    for (x, y) in r.pairs() {
        adj.entry(x).or_default().push(y);
        adj.entry(y).or_default().push(x);
    }
    let mut parent: BTreeMap<TransId, TransId> = BTreeMap::from([(t, t)]);
    let mut queue = VecDeque::from([t]);
    while let Some(x) = queue.pop_front() {
        if x == u {
            let mut chain = vec![u];
            while *chain.last().unwrap() != t {
                chain.push(parent[chain.last().unwrap()]);
            }
            chain.reverse();
            return Some(chain);
        }
        for &y in adj.get(&x).into_iter().flatten() {
            if let std::collections::btree_map::Entry::Vacant(e) = parent.entry(y) {
                e.insert(x);
                queue.push_back(y);
            }
        }
    }
    None
}

/// A ready pair exhibiting the menu shape of an M: `{b}` and `{a,c}` are
/// in `X`, `{a,b}` and `{b,c}` are not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReadyM {
    pub pair: ReadyPair,
    pub a: String,
    pub b: String,
    pub c: String,
}

fn ready_m_in_menu(x: &Menu) -> Option<(String, String, String)> {
    let singles: Vec<&str> = x
        .iter()
        .filter(|ms| ms.size() == 1)
        .map(|ms| ms.entries().next().unwrap().0)
        .collect();
    for ac in x.iter().filter(|ms| ms.size() == 2) {
        let entries: Vec<&str> = ac.entries().map(|(a, _)| a).collect();
        let [a, c] = entries.as_slice() else { continue };
        for &b in &singles {
            if !x.contains(&LabelMultiset::of([*a, b])) && !x.contains(&LabelMultiset::of([b, *c])) {
                return Some((a.to_string(), b.to_string(), c.to_string()));
            }
        }
    }
    None
}

pub(crate) fn ready_m_with(sem: &ReadySemantics) -> Option<ReadyM> {
    (0..sem.state_count()).find_map(|s| {
        sem.menus(s).iter().find_map(|x| {
            ready_m_in_menu(x).map(|(a, b, c)| ReadyM {
                pair: ReadyPair {
                    trace: sem.trace_to(s),
                    menu: x.clone(),
                },
                a,
                b,
                c,
            })
        })
    })
}

pub fn ready_m_pair(net: &LabelledNet, limits: &Limits) -> Result<Option<ReadyM>> {
    Ok(ready_m_with(&ready_semantics(net, limits)?))
}

/// One asynchrony class, decided both ways.
#[derive(Debug, Clone, Serialize)]
pub struct AsyncEntry {
    pub behavioural: Verdict,
    pub structural: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

/// Verdicts for every class predicate, with witnesses.
#[derive(Debug, Clone, Serialize)]
pub struct ClassReport {
    pub plain: bool,
    pub fully_asynchronous: AsyncEntry,
    pub symmetrically_asynchronous: AsyncEntry,
    pub asymmetrically_asynchronous: AsyncEntry,
    pub distributed: Entry,
    pub plain_distributable: Entry,
    /// `yes` when truly synchronous; `unknown` otherwise.
    pub truly_synchronous: Entry,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ClassReport {
    pub fn asynchrony(&self, r: Requirement) -> &AsyncEntry {
        match r {
            Requirement::Fd => &self.fully_asynchronous,
            Requirement::Sd => &self.symmetrically_asynchronous,
            Requirement::Ad => &self.asymmetrically_asynchronous,
            _ => panic!("{r} is not an asynchrony requirement"),
        }
    }

    /// Rows of `(class, verdict)` for display.
    pub fn rows(&self) -> Vec<(String, String)> {
        let mut rows = Vec::new();
        for (name, e) in [
            ("fully asynchronous", &self.fully_asynchronous),
            ("symmetrically asynchronous", &self.symmetrically_asynchronous),
            ("asymmetrically asynchronous", &self.asymmetrically_asynchronous),
        ] {
            let v = if e.behavioural == e.structural {
                e.structural.to_string()
            } else {
                format!("{} (behavioural {})", e.structural, e.behavioural)
            };
            rows.push((name.to_string(), v));
        }
        rows.push(("distributed".into(), self.distributed.verdict.to_string()));
        rows.push(("plain-distributable".into(), self.plain_distributable.verdict.to_string()));
        rows.push(("truly synchronous".into(), self.truly_synchronous.verdict.to_string()));
        rows
    }
}

fn unknown_entry() -> Entry {
    Entry {
        verdict: Verdict::Unknown,
        witness: None,
    }
}

fn names(net: &LabelledNet, ts: &[TransId]) -> Vec<String> {
    ts.iter().map(|&t| net.trans_name(t).to_string()).collect()
}

/// Runs every class predicate. Bound hits and cancellation turn the
/// affected entries into `unknown`; other errors are returned.
pub fn classify(net: &LabelledNet, limits: &Limits) -> Result<ClassReport> {
    let plain = net.is_plain();
    let mut notes = Vec::new();
    let graph = inconclusive_to_none(reachability_graph(net, limits))?;
    let rel = graph.as_ref().map(|g| g.relations(net));
    let spec = if plain && graph.is_some() {
        inconclusive_to_none(ready_semantics(net, limits))?
    } else {
        None
    };
    if graph.is_none() {
        notes.push(format!("state bound of {} markings exceeded", limits.state_bound));
    }
    if !plain {
        notes.push("asynchrony and distributability are decided for plain nets only".into());
    }

    let async_entry = |r: Requirement| -> Result<AsyncEntry> {
        let (Some(rel), Some(spec)) = (&rel, &spec) else {
            return Ok(AsyncEntry {
                behavioural: Verdict::Unknown,
                structural: Verdict::Unknown,
                distribution: None,
                witness: None,
            });
        };
        let s = inconclusive_to_none(structural_async_with(net, r, rel, limits))?;
        let b = inconclusive_to_none(behavioural_async_with(net, r, spec, limits))?;
        let verdict = |o: &Option<AsyncOutcome>| o.as_ref().map_or(Verdict::Unknown, |o| Verdict::from_bool(o.holds()));
        let (distribution, witness) = match &s {
            Some(AsyncOutcome::Yes(d)) => (Some(d.to_json(net)), None),
            Some(AsyncOutcome::No(w)) => (None, w.as_ref().map(|w| w.to_json(net))),
            None => (None, None),
        };
        Ok(AsyncEntry {
            behavioural: verdict(&b),
            structural: verdict(&s),
            distribution,
            witness,
        })
    };
    let fully_asynchronous = async_entry(Requirement::Fd)?;
    let symmetrically_asynchronous = async_entry(Requirement::Sd)?;
    let asymmetrically_asynchronous = async_entry(Requirement::Ad)?;

    let distributed = match &rel {
        Some(rel) => match distributedness_with(net, &rel.concurrent, false) {
            Distributedness::Distributed(d) => Entry {
                verdict: Verdict::Yes,
                witness: Some(serde_json::json!({ "distribution": d.to_json(net) })),
            },
            Distributedness::Chain(c) => Entry {
                verdict: Verdict::No,
                witness: Some(serde_json::json!({ "chain": names(net, &c) })),
            },
        },
        None => unknown_entry(),
    };

    let plain_distributable = match (&rel, plain) {
        (Some(rel), true) => match distributable_with(net, rel) {
            Distributable::Yes { tcc, locations } => Entry {
                verdict: Verdict::Yes,
                witness: Some(serde_json::json!({
                    "implementation": tcc.net.name(),
                    "locations": locations.groups(&tcc.net),
                })),
            },
            Distributable::No { pair, chain } => Entry {
                verdict: Verdict::No,
                witness: Some(serde_json::json!({
                    "concurrent": names(net, &[pair.0, pair.1]),
                    "conflict_chain": names(net, &chain),
                })),
            },
        },
        _ => unknown_entry(),
    };

    let truly_synchronous = match (&graph, plain) {
        (Some(g), true) => match pure_visible_m_with(net, g) {
            Some(w) => Entry {
                verdict: Verdict::Yes,
                witness: Some(w.to_json(net)),
            },
            None => unknown_entry(),
        },
        _ => unknown_entry(),
    };

    Ok(ClassReport {
        plain,
        fully_asynchronous,
        symmetrically_asynchronous,
        asymmetrically_asynchronous,
        distributed,
        plain_distributable,
        truly_synchronous,
        notes,
    })
}
