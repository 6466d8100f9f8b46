use serde::Serialize;
use std::collections::BTreeMap;

use crate::distribution::{Distribution, UnionFind};
use crate::error::Result;
use crate::limits::Limits;
use crate::net::{Label, LabelledNet, NetBuilder, Node, PlaceId, TransId};
use crate::reach::{reachability_graph, PairRelation};

/// The classes of the reflexive-transitive closure of enabled conflict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictClasses {
    class: Vec<usize>,
    reps: Vec<TransId>,
}

impl ConflictClasses {
    pub fn from_relation(net: &LabelledNet, conflict: &PairRelation) -> Self {
        let mut uf = UnionFind::new(net.transition_count());
        for (t, u) in conflict.pairs() {
            uf.union(t.index(), u.index());
        }
        let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
        let mut reps = Vec::new();
        let class = net
            .transitions()
            .map(|t| {
                let root = uf.find(t.index());
                *ids.entry(root).or_insert_with(|| {
                    reps.push(t);
                    reps.len() - 1
                })
            })
            .collect();
        ConflictClasses { class, reps }
    }

    pub fn class_of(&self, t: TransId) -> usize {
        self.class[t.index()]
    }

    /// Lowest transition of each class.
    pub fn representative(&self, c: usize) -> TransId {
        self.reps[c]
    }

    pub fn count(&self) -> usize {
        self.reps.len()
    }

    pub fn members(&self, c: usize) -> Vec<TransId> {
        (0..self.class.len())
            .filter(|&i| self.class[i] == c)
            .map(TransId::new)
            .collect()
    }

    pub fn related(&self, t: TransId, u: TransId) -> bool {
        self.class_of(t) == self.class_of(u)
    }
}

pub fn conflict_classes(net: &LabelledNet, limits: &Limits) -> Result<ConflictClasses> {
    let rel = reachability_graph(net, limits)?.relations(net);
    Ok(ConflictClasses::from_relation(net, &rel.conflict))
}

/// Where an element of a TCC implementation comes from. Classes are
/// indices into [`TccNet::classes`]; places and transitions refer to the
/// source net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TccOrigin {
    Original,
    /// `⎕s`, distributing a token of `s` to its embassies.
    Distributor { place: PlaceId },
    /// `s^[c]`, the embassy of `s` in class `c`.
    Embassy { place: PlaceId, class: usize },
    /// `◯t`, marking that `t` has fired.
    Fired { transition: TransId },
    /// `t'`, producing the postset of `t`.
    Completion { transition: TransId },
    /// `s_t^[c]`, requesting removal of the embassy of `s` in `c` after `t`.
    CollectRequest { place: PlaceId, transition: TransId, class: usize },
    /// `s̄_t^[c]`, acknowledging that removal.
    CollectDone { place: PlaceId, transition: TransId, class: usize },
    /// `t_s^[c]`, removing the embassy token.
    Collector { place: PlaceId, transition: TransId, class: usize },
}

/// A transition-controlled-choice implementation with lookup tables for
/// its generated elements. Original places and transitions keep their
/// identifiers.
#[derive(Debug, Clone)]
pub struct TccNet {
    pub net: LabelledNet,
    pub classes: ConflictClasses,
    pub place_origin: Vec<TccOrigin>,
    pub trans_origin: Vec<TccOrigin>,
    source_places: usize,
    source_transitions: usize,
    distributor: Vec<TransId>,
    embassy: BTreeMap<(PlaceId, usize), PlaceId>,
    fired: Vec<PlaceId>,
    completion: Vec<TransId>,
    request: BTreeMap<(PlaceId, TransId, usize), PlaceId>,
    done: BTreeMap<(PlaceId, TransId, usize), PlaceId>,
    collector: BTreeMap<(PlaceId, TransId, usize), TransId>,
}

impl TccNet {
    pub fn source_places(&self) -> impl Iterator<Item = PlaceId> {
        (0..self.source_places).map(PlaceId::new)
    }

    pub fn source_transitions(&self) -> impl Iterator<Item = TransId> {
        (0..self.source_transitions).map(TransId::new)
    }

    pub fn distributor(&self, s: PlaceId) -> TransId {
        self.distributor[s.index()]
    }

    pub fn embassy(&self, s: PlaceId, class: usize) -> Option<PlaceId> {
        self.embassy.get(&(s, class)).copied()
    }

    pub fn embassies(&self) -> impl Iterator<Item = ((PlaceId, usize), PlaceId)> + '_ {
        self.embassy.iter().map(|(&k, &v)| (k, v))
    }

    pub fn fired(&self, t: TransId) -> PlaceId {
        self.fired[t.index()]
    }

    pub fn completion(&self, t: TransId) -> TransId {
        self.completion[t.index()]
    }

    pub fn request(&self, s: PlaceId, t: TransId, class: usize) -> Option<PlaceId> {
        self.request.get(&(s, t, class)).copied()
    }

    pub fn done(&self, s: PlaceId, t: TransId, class: usize) -> Option<PlaceId> {
        self.done.get(&(s, t, class)).copied()
    }

    pub fn collector(&self, s: PlaceId, t: TransId, class: usize) -> Option<TransId> {
        self.collector.get(&(s, t, class)).copied()
    }

    /// All `(s, t, c)` with a garbage-collection triple.
    pub fn collection_keys(&self) -> impl Iterator<Item = (PlaceId, TransId, usize)> + '_ {
        self.collector.keys().copied()
    }

    /// Same construction over a different net, e.g. with an arc removed.
    /// Element identifiers must be unchanged.
    pub fn with_net(&self, net: LabelledNet) -> TccNet {
        assert_eq!(net.place_count(), self.net.place_count());
        assert_eq!(net.transition_count(), self.net.transition_count());
        TccNet { net, ..self.clone() }
    }

    pub fn provenance_json(&self, source: &LabelledNet) -> serde_json::Value {
        let rep = |c: usize| source.trans_name(self.classes.representative(c)).to_string();
        let describe = |o: &TccOrigin| match *o {
            TccOrigin::Original => serde_json::json!({"kind": "original"}),
            TccOrigin::Distributor { place } => {
                serde_json::json!({"kind": "distributor", "place": source.place_name(place)})
            }
            TccOrigin::Embassy { place, class } => {
                serde_json::json!({"kind": "embassy", "place": source.place_name(place), "class": rep(class)})
            }
            TccOrigin::Fired { transition } => {
                serde_json::json!({"kind": "fired", "transition": source.trans_name(transition)})
            }
            TccOrigin::Completion { transition } => {
                serde_json::json!({"kind": "completion", "transition": source.trans_name(transition)})
            }
            TccOrigin::CollectRequest { place, transition, class }
            | TccOrigin::CollectDone { place, transition, class }
            | TccOrigin::Collector { place, transition, class } => {
                let kind = match o {
                    TccOrigin::CollectRequest { .. } => "collect_request",
                    TccOrigin::CollectDone { .. } => "collect_done",
                    _ => "collector",
                };
                serde_json::json!({
                    "kind": kind,
                    "place": source.place_name(place),
                    "transition": source.trans_name(transition),
                    "class": rep(class),
                })
            }
        };
        let places: serde_json::Map<_, _> = self
            .net
            .places()
            .map(|p| (self.net.place_name(p).to_string(), describe(&self.place_origin[p.index()])))
            .collect();
        let trans: serde_json::Map<_, _> = self
            .net
            .transitions()
            .map(|t| (self.net.trans_name(t).to_string(), describe(&self.trans_origin[t.index()])))
            .collect();
        let classes: Vec<Vec<&str>> = (0..self.classes.count())
            .map(|c| self.classes.members(c).into_iter().map(|t| source.trans_name(t)).collect())
            .collect();
        serde_json::json!({"places": places, "transitions": trans, "classes": classes})
    }
}

/// The transition-controlled-choice implementation. Silent source
/// transitions stay silent; all generated transitions are silent.
pub fn tcc_implementation(net: &LabelledNet, limits: &Limits) -> Result<TccNet> {
    Ok(tcc_with_classes(net, conflict_classes(net, limits)?))
}

pub fn tcc_with_classes(net: &LabelledNet, classes: ConflictClasses) -> TccNet {
    let mut b = NetBuilder::new();
    b.set_name(net.name().map(|n| format!("{n}_tcc")));
    let mut place_origin = Vec::new();
    let mut trans_origin = Vec::new();
    for p in net.places() {
        b.add_place(net.place_name(p), net.is_marked_initially(p)).expect("names are unique");
        place_origin.push(TccOrigin::Original);
    }
    for t in net.transitions() {
        b.add_transition(net.trans_name(t), net.label(t).clone()).expect("names are unique");
        trans_origin.push(TccOrigin::Original);
    }
    let rep = |c: usize| net.trans_name(classes.representative(c)).to_string();

    // Per place, the classes of its posttransitions in order of first
    // appearance.
    let post_classes: Vec<Vec<usize>> = net
        .places()
        .map(|s| {
            let mut cs: Vec<usize> = net.place_post(s).iter().map(|&t| classes.class_of(t)).collect();
            cs.sort();
            cs.dedup();
            cs
        })
        .collect();

    let mut embassy = BTreeMap::new();
    for s in net.places() {
        for &c in &post_classes[s.index()] {
            let name = b.fresh_name(&format!("{}_AT_{}", net.place_name(s), rep(c)));
            embassy.insert((s, c), b.add_place(&name, false).unwrap());
            place_origin.push(TccOrigin::Embassy { place: s, class: c });
        }
    }
    let mut fired = Vec::new();
    for t in net.transitions() {
        let name = b.fresh_name(&format!("circ_{}", net.trans_name(t)));
        fired.push(b.add_place(&name, false).unwrap());
        place_origin.push(TccOrigin::Fired { transition: t });
    }
    let mut gc_keys = Vec::new();
    for s in net.places() {
        for &t in net.place_post(s) {
            for &c in &post_classes[s.index()] {
                if c != classes.class_of(t) {
                    gc_keys.push((s, t, c));
                }
            }
        }
    }
    let mut request = BTreeMap::new();
    let mut done = BTreeMap::new();
    for &(s, t, c) in &gc_keys {
        let base = format!("{}_BY_{}_AT_{}", net.place_name(s), net.trans_name(t), rep(c));
        let r = b.add_place(&b.fresh_name(&base), false).unwrap();
        place_origin.push(TccOrigin::CollectRequest { place: s, transition: t, class: c });
        let d = b.add_place(&b.fresh_name(&format!("bar_{base}")), false).unwrap();
        place_origin.push(TccOrigin::CollectDone { place: s, transition: t, class: c });
        request.insert((s, t, c), r);
        done.insert((s, t, c), d);
    }

    let mut distributor = Vec::new();
    for s in net.places() {
        let name = b.fresh_name(&format!("box_{}", net.place_name(s)));
        distributor.push(b.add_transition(&name, Label::Tau).unwrap());
        trans_origin.push(TccOrigin::Distributor { place: s });
    }
    let mut completion = Vec::new();
    for t in net.transitions() {
        let name = b.fresh_name(&format!("prime_{}", net.trans_name(t)));
        completion.push(b.add_transition(&name, Label::Tau).unwrap());
        trans_origin.push(TccOrigin::Completion { transition: t });
    }
    let mut collector = BTreeMap::new();
    for &(s, t, c) in &gc_keys {
        let name = b.fresh_name(&format!("{}__{}_AT_{}", net.trans_name(t), net.place_name(s), rep(c)));
        collector.insert((s, t, c), b.add_transition(&name, Label::Tau).unwrap());
        trans_origin.push(TccOrigin::Collector { place: s, transition: t, class: c });
    }

    for s in net.places() {
        let bx = distributor[s.index()];
        b.input(s, bx).unwrap();
        for &c in &post_classes[s.index()] {
            b.output(bx, embassy[&(s, c)]).unwrap();
        }
        for &t in net.place_post(s) {
            b.input(embassy[&(s, classes.class_of(t))], t).unwrap();
        }
    }
    for t in net.transitions() {
        let (f, tp) = (fired[t.index()], completion[t.index()]);
        b.output(t, f).unwrap();
        b.input(f, tp).unwrap();
        for s in net.post(t).iter() {
            b.output(tp, s).unwrap();
        }
    }
    for &(s, t, c) in &gc_keys {
        let (r, d, g) = (request[&(s, t, c)], done[&(s, t, c)], collector[&(s, t, c)]);
        b.output(t, r).unwrap();
        b.input(r, g).unwrap();
        b.output(g, d).unwrap();
        b.input(d, completion[t.index()]).unwrap();
        b.input(embassy[&(s, c)], g).unwrap();
    }

    TccNet {
        net: b.build(),
        place_origin,
        trans_origin,
        source_places: net.place_count(),
        source_transitions: net.transition_count(),
        distributor,
        embassy,
        fired,
        completion,
        request,
        done,
        collector,
        classes,
    }
}

/// One location per source place (with its distributor) and one per
/// conflict class (with everything generated for its transitions).
pub fn locations_of_tcc(tcc: &TccNet) -> Distribution {
    let np = tcc.source_places as u32;
    let class_loc = |c: usize| np + c as u32;
    let cls = |t: TransId| class_loc(tcc.classes.class_of(t));
    Distribution::from_fn(&tcc.net, |n| match n {
        Node::Place(p) => match tcc.place_origin[p.index()] {
            TccOrigin::Original => p.index() as u32,
            TccOrigin::Embassy { class, .. } | TccOrigin::CollectRequest { class, .. } => class_loc(class),
            TccOrigin::Fired { transition } | TccOrigin::CollectDone { transition, .. } => cls(transition),
            _ => unreachable!("generated places have place kinds"),
        },
        Node::Trans(t) => match tcc.trans_origin[t.index()] {
            TccOrigin::Original => cls(t),
            TccOrigin::Distributor { place } => place.index() as u32,
            TccOrigin::Completion { transition } => cls(transition),
            TccOrigin::Collector { class, .. } => class_loc(class),
            _ => unreachable!("generated transitions have transition kinds"),
        },
    })
}
