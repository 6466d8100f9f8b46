//! Location assignments and the requirements placed on them.

use serde::Serialize;
use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::net::{LabelledNet, Node, PlaceId, TransId};
use crate::reach::{reachability_graph, PairRelation};

/// A location for every place and transition. Locations are numbered
/// canonically: in order of first appearance over places, then
/// transitions, so equal partitions compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Distribution {
    places: Vec<u32>,
    trans: Vec<u32>,
}

impl Distribution {
    fn normalized(mut places: Vec<u32>, mut trans: Vec<u32>) -> Self {
        let mut map: BTreeMap<u32, u32> = BTreeMap::new();
        for l in places.iter_mut().chain(trans.iter_mut()) {
            let next = map.len() as u32;
            *l = *map.entry(*l).or_insert(next);
        }
        Distribution { places, trans }
    }

    /// Every element at its own location.
    pub fn finest(net: &LabelledNet) -> Self {
        let p = net.place_count() as u32;
        Self::normalized((0..p).collect(), (p..p + net.transition_count() as u32).collect())
    }

    /// Everything at one location.
    pub fn coarsest(net: &LabelledNet) -> Self {
        Self::normalized(vec![0; net.place_count()], vec![0; net.transition_count()])
    }

    /// Locations given by an arbitrary labelling of the elements.
    pub fn from_fn(net: &LabelledNet, mut loc: impl FnMut(Node) -> u32) -> Self {
        Self::normalized(
            net.places().map(|p| loc(Node::Place(p))).collect(),
            net.transitions().map(|t| loc(Node::Trans(t))).collect(),
        )
    }

    /// Co-locates the elements of each group; unmentioned elements are
    /// placed alone. Groups sharing an element are merged.
    pub fn from_groups<S: AsRef<str>>(net: &LabelledNet, groups: &[&[S]]) -> Result<Self> {
        let np = net.place_count();
        let mut uf = UnionFind::new(np + net.transition_count());
        let idx = |name: &str| -> Result<usize> {
            match net.lookup(name) {
                Some(Node::Place(p)) => Ok(p.index()),
                Some(Node::Trans(t)) => Ok(np + t.index()),
                None => Err(Error::UnknownElement(name.to_string())),
            }
        };
        for group in groups {
            let mut it = group.iter();
            if let Some(first) = it.next() {
                let a = idx(first.as_ref())?;
                for other in it {
                    uf.union(a, idx(other.as_ref())?);
                }
            }
        }
        Ok(Self::from_union_find(net, &mut uf))
    }

    fn from_union_find(net: &LabelledNet, uf: &mut UnionFind) -> Self {
        let np = net.place_count();
        Self::from_fn(net, |n| match n {
            Node::Place(p) => uf.find(p.index()) as u32,
            Node::Trans(t) => uf.find(np + t.index()) as u32,
        })
    }

    /// Reads the JSON object form `{element: location}`.
    pub fn from_json(net: &LabelledNet, value: &serde_json::Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::UnknownElement("expected a JSON object".into()))?;
        let mut places = vec![None; net.place_count()];
        let mut trans = vec![None; net.transition_count()];
        // Locations are opaque; numbers and strings get dense ids.
        let mut ids: BTreeMap<LocationKey, u32> = BTreeMap::new();
        for (name, loc) in obj {
            let key = match loc {
                serde_json::Value::Number(n) if n.is_u64() => LocationKey::Number(n.as_u64().unwrap()),
                serde_json::Value::String(s) => LocationKey::Name(s.clone()),
                _ => return Err(Error::UnknownElement(format!("{name}: location must be a number or string"))),
            };
            let next = ids.len() as u32;
            let loc = *ids.entry(key).or_insert(next);
            match net.lookup(name) {
                Some(Node::Place(p)) => places[p.index()] = Some(loc),
                Some(Node::Trans(t)) => trans[t.index()] = Some(loc),
                None => return Err(Error::UnknownElement(name.clone())),
            }
        }
        let found = places.iter().chain(&trans).filter(|l| l.is_some()).count();
        let expected = places.len() + trans.len();
        if found != expected {
            return Err(Error::DistributionMismatch { expected, found });
        }
        Ok(Self::normalized(
            places.into_iter().map(Option::unwrap).collect(),
            trans.into_iter().map(Option::unwrap).collect(),
        ))
    }

    pub fn place_location(&self, p: PlaceId) -> u32 {
        self.places[p.index()]
    }

    pub fn trans_location(&self, t: TransId) -> u32 {
        self.trans[t.index()]
    }

    pub fn location(&self, n: Node) -> u32 {
        match n {
            Node::Place(p) => self.place_location(p),
            Node::Trans(t) => self.trans_location(t),
        }
    }

    pub fn same(&self, x: Node, y: Node) -> bool {
        self.location(x) == self.location(y)
    }

    pub fn location_count(&self) -> usize {
        self.places
            .iter()
            .chain(&self.trans)
            .copied()
            .max()
            .map_or(0, |m| m as usize + 1)
    }

    /// Element names grouped by location.
    pub fn groups(&self, net: &LabelledNet) -> Vec<Vec<String>> {
        let mut groups = vec![Vec::new(); self.location_count()];
        for p in net.places() {
            groups[self.place_location(p) as usize].push(net.place_name(p).to_string());
        }
        for t in net.transitions() {
            groups[self.trans_location(t) as usize].push(net.trans_name(t).to_string());
        }
        groups
    }

    pub fn to_json(&self, net: &LabelledNet) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for p in net.places() {
            map.insert(net.place_name(p).to_string(), self.place_location(p).into());
        }
        for t in net.transitions() {
            map.insert(net.trans_name(t).to_string(), self.trans_location(t).into());
        }
        serde_json::Value::Object(map)
    }

    pub fn covers(&self, net: &LabelledNet) -> bool {
        self.places.len() == net.place_count() && self.trans.len() == net.transition_count()
    }
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
enum LocationKey {
    Number(u64),
    Name(String),
}

pub(crate) struct UnionFind(Vec<usize>);

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    pub(crate) fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            y = std::mem::replace(&mut self.0[y], r);
        }
        r
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Requirement {
    Fd,
    Sd,
    Ad,
    Effectual,
    DistributedNet,
}

impl Requirement {
    pub const ASYNC: [Requirement; 3] = [Requirement::Fd, Requirement::Sd, Requirement::Ad];

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fd" => Some(Requirement::Fd),
            "sd" => Some(Requirement::Sd),
            "ad" => Some(Requirement::Ad),
            "effectual" => Some(Requirement::Effectual),
            "distributed" | "distributednet" => Some(Requirement::DistributedNet),
            _ => None,
        }
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Requirement::Fd => "FD",
            Requirement::Sd => "SD",
            Requirement::Ad => "AD",
            Requirement::Effectual => "effectual",
            Requirement::DistributedNet => "distributed",
        })
    }
}

/// A pair of co-located elements the requirement forbids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub clause: &'static str,
    pub elements: Vec<String>,
}

/// Checks `d` against `r`; `None` means satisfied. Only
/// [`Requirement::DistributedNet`] explores the state space.
pub fn satisfies(net: &LabelledNet, d: &Distribution, r: Requirement, limits: &Limits) -> Result<Option<Violation>> {
    if !d.covers(net) {
        return Err(Error::DistributionMismatch {
            expected: net.place_count() + net.transition_count(),
            found: d.places.len() + d.trans.len(),
        });
    }
    let names = |a: Node, b: Node| vec![net.node_name(a).to_string(), net.node_name(b).to_string()];
    let places: Vec<PlaceId> = net.places().collect();
    let trans: Vec<TransId> = net.transitions().collect();
    let asynchronous = |sd: bool| -> Option<Violation> {
        for (i, &p) in places.iter().enumerate() {
            for &q in &places[i + 1..] {
                if d.place_location(p) == d.place_location(q) {
                    return Some(Violation {
                        clause: "places are pairwise separated",
                        elements: names(Node::Place(p), Node::Place(q)),
                    });
                }
            }
        }
        for &t in &trans {
            for &p in &places {
                if d.trans_location(t) != d.place_location(p) {
                    continue;
                }
                let ok = if sd {
                    net.pre(t).len() == 1 && net.pre(t).contains(p)
                } else {
                    net.pre(t).contains(p)
                };
                if !ok {
                    return Some(Violation {
                        clause: if sd {
                            "a transition is co-located only with its sole preplace"
                        } else {
                            "a transition is co-located only with a preplace"
                        },
                        elements: names(Node::Trans(t), Node::Place(p)),
                    });
                }
            }
        }
        for (i, &t) in trans.iter().enumerate() {
            for &u in &trans[i + 1..] {
                let l = d.trans_location(t);
                if l == d.trans_location(u) && !places.iter().any(|&p| d.place_location(p) == l) {
                    return Some(Violation {
                        clause: "co-located transitions share a co-located place",
                        elements: names(Node::Trans(t), Node::Trans(u)),
                    });
                }
            }
        }
        None
    };
    let effectual = || -> Option<Violation> {
        for &t in &trans {
            for p in net.pre(t).iter() {
                if d.place_location(p) != d.trans_location(t) {
                    return Some(Violation {
                        clause: "each transition is co-located with its preplaces",
                        elements: names(Node::Place(p), Node::Trans(t)),
                    });
                }
            }
        }
        None
    };
    Ok(match r {
        Requirement::Fd => {
            if d.location_count() == places.len() + trans.len() {
                None
            } else {
                let mut seen: BTreeMap<u32, Node> = BTreeMap::new();
                let all = places.iter().map(|&p| Node::Place(p)).chain(trans.iter().map(|&t| Node::Trans(t)));
                let mut v = None;
                for n in all {
                    if let Some(&m) = seen.get(&d.location(n)) {
                        v = Some(Violation {
                            clause: "all elements are separated",
                            elements: names(m, n),
                        });
                        break;
                    }
                    seen.insert(d.location(n), n);
                }
                v
            }
        }
        Requirement::Sd => asynchronous(true),
        Requirement::Ad => asynchronous(false),
        Requirement::Effectual => effectual(),
        Requirement::DistributedNet => match effectual() {
            Some(v) => Some(v),
            None => {
                let conc = reachability_graph(net, limits)?.relations(net).concurrent;
                let bad = conc
                    .pairs()
                    .find(|&(t, u)| !net.is_tau(t) && !net.is_tau(u) && d.trans_location(t) == d.trans_location(u));
                bad.map(|(t, u)| Violation {
                    clause: "concurrent visible transitions are separated",
                    elements: names(Node::Trans(t), Node::Trans(u)),
                })
            }
        },
    })
}

/// Result of [`is_distributed`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Distributedness {
    /// One location per connected component of the preplace relation.
    Distributed(Distribution),
    /// Transitions `t0, …, tn` with `t0 ⌣ tn`, consecutive ones sharing a
    /// preplace.
    Chain(Vec<TransId>),
}

impl Distributedness {
    pub fn is_distributed(&self) -> bool {
        matches!(self, Distributedness::Distributed(_))
    }
}

/// Whether some effectual distribution separates all concurrent visible
/// transitions. With `strict`, silent transitions count too.
pub fn is_distributed(net: &LabelledNet, strict: bool, limits: &Limits) -> Result<Distributedness> {
    let conc = reachability_graph(net, limits)?.relations(net).concurrent;
    Ok(distributedness_with(net, &conc, strict))
}

pub(crate) fn distributedness_with(net: &LabelledNet, conc: &PairRelation, strict: bool) -> Distributedness {
    let np = net.place_count();
    let mut uf = UnionFind::new(np + net.transition_count());
    for t in net.transitions() {
        for p in net.pre(t).iter() {
            uf.union(p.index(), np + t.index());
        }
    }
    let bad = conc.pairs().find(|&(t, u)| {
        (strict || (!net.is_tau(t) && !net.is_tau(u))) && uf.find(np + t.index()) == uf.find(np + u.index())
    });
    match bad {
        None => Distributedness::Distributed(Distribution::from_union_find(net, &mut uf)),
        Some((t, u)) => Distributedness::Chain(preplace_chain(net, t, u).expect("same component")),
    }
}

/// Shortest sequence from `t` to `u` in which neighbours share a preplace.
pub(crate) fn preplace_chain(net: &LabelledNet, t: TransId, u: TransId) -> Option<Vec<TransId>> {
    let mut parent: BTreeMap<TransId, TransId> = BTreeMap::new();
    let mut queue = VecDeque::from([t]);
    parent.insert(t, t);
    while let Some(x) = queue.pop_front() {
        if x == u {
            let mut chain = vec![u];
            let mut cur = u;
            while cur != t {
                cur = parent[&cur];
                chain.push(cur);
            }
            chain.reverse();
            return Some(chain);
        }
        for p in net.pre(x).iter() {
            for &y in net.place_post(p) {
                if let std::collections::btree_map::Entry::Vacant(e) = parent.entry(y) {
                    e.insert(x);
                    queue.push_back(y);
                }
            }
        }
    }
    None
}

/// Transitions sharing a preplace with some other transition.
fn constrained(net: &LabelledNet) -> Vec<TransId> {
    net.transitions()
        .filter(|&t| net.pre(t).iter().any(|p| net.place_post(p).len() > 1))
        .collect()
}

/// Number of candidates [`canonical_distributions`] yields.
pub fn canonical_count(net: &LabelledNet, r: Requirement) -> u128 {
    match r {
        Requirement::Ad => constrained(net)
            .iter()
            .fold(1u128, |acc, &t| acc.saturating_mul(net.pre(t).len() as u128 + 1)),
        _ => 1,
    }
}

/// The candidate distributions searched when deciding asynchrony.
///
/// FD: the finest distribution. SD: each transition with a single
/// preplace joins it. AD: every combination of choices, per transition
/// that shares a preplace, of one of its preplaces or none.
pub fn canonical_distributions<'a>(
    net: &'a LabelledNet,
    r: Requirement,
    limits: &Limits,
) -> Result<Box<dyn Iterator<Item = Distribution> + 'a>> {
    match r {
        Requirement::Fd => Ok(Box::new(std::iter::once(Distribution::finest(net)))),
        Requirement::Sd => {
            let np = net.place_count() as u32;
            Ok(Box::new(std::iter::once(Distribution::from_fn(net, |n| match n {
                Node::Place(p) => p.index() as u32,
                Node::Trans(t) => match net.pre(t).iter().collect::<Vec<_>>().as_slice() {
                    [p] => p.index() as u32,
                    _ => np + t.index() as u32,
                },
            }))))
        }
        Requirement::Ad => {
            let count = canonical_count(net, r);
            if count > limits.candidate_cap as u128 {
                return Err(Error::CandidateCapExceeded {
                    count,
                    cap: limits.candidate_cap,
                });
            }
            let choosers = constrained(net);
            let options: Vec<Vec<PlaceId>> = choosers.iter().map(|&t| net.pre(t).iter().collect()).collect();
            let np = net.place_count() as u32;
            Ok(Box::new((0..count as u64).map(move |mut k| {
                let mut choice: BTreeMap<TransId, PlaceId> = BTreeMap::new();
                for (t, opts) in choosers.iter().zip(&options) {
                    let radix = opts.len() as u64 + 1;
                    let digit = (k % radix) as usize;
                    k /= radix;
                    if digit > 0 {
                        choice.insert(*t, opts[digit - 1]);
                    }
                }
                Distribution::from_fn(net, |n| match n {
                    Node::Place(p) => p.index() as u32,
                    Node::Trans(t) => choice.get(&t).map_or(np + t.index() as u32, |p| p.index() as u32),
                })
            })))
        }
        Requirement::Effectual | Requirement::DistributedNet => Ok(Box::new(std::iter::empty())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::format::parse_net;
    use proptest::prelude::*;

    fn lim() -> Limits {
        Limits::default()
    }

    fn names(net: &LabelledNet, ts: &[TransId]) -> Vec<String> {
        ts.iter().map(|&t| net.trans_name(t).to_string()).collect()
    }

    #[test]
    fn satisfies_examples() {
        let net = fixtures::fig1();
        let fd = Distribution::finest(&net);
        assert_eq!(fd.location_count(), 4);
        assert_eq!(satisfies(&net, &fd, Requirement::Fd, &lim()).unwrap(), None);
        let d = Distribution::from_groups(&net, &[&["t", "p", "u"]]).unwrap();
        assert_eq!(satisfies(&net, &d, Requirement::Ad, &lim()).unwrap(), None);
        assert!(satisfies(&net, &d, Requirement::Sd, &lim()).unwrap().is_some());
        assert!(satisfies(&net, &d, Requirement::Fd, &lim()).unwrap().is_some());

        let net = fixtures::fig2();
        let d = Distribution::coarsest(&net);
        let v = satisfies(&net, &d, Requirement::DistributedNet, &lim()).unwrap().unwrap();
        assert_eq!(v.elements, vec!["t".to_string(), "v".to_string()]);
    }

    #[test]
    fn is_distributed_examples() {
        let net = fixtures::fig2();
        match is_distributed(&net, false, &lim()).unwrap() {
            Distributedness::Chain(c) => assert_eq!(names(&net, &c), vec!["t", "u", "v"]),
            other => panic!("{other:?}"),
        }
        assert!(is_distributed(&fixtures::fig3(), false, &lim()).unwrap().is_distributed());
        assert!(is_distributed(&fixtures::fig7_impl(), false, &lim()).unwrap().is_distributed());
        let net = fixtures::fig5();
        match is_distributed(&net, false, &lim()).unwrap() {
            Distributedness::Distributed(d) => {
                assert_eq!(satisfies(&net, &d, Requirement::DistributedNet, &lim()).unwrap(), None);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn strict_mode_counts_silent_pairs() {
        // Two silent transitions sharing a place with a visible one, able
        // to fire together.
        let net = parse_net(
            "place p marked\nplace q marked\ntrans t label tau\ntrans u label a\ntrans v label tau\n\
             arc p -> t\narc p -> u\narc q -> u\narc q -> v\n",
        )
        .unwrap();
        assert!(is_distributed(&net, false, &lim()).unwrap().is_distributed());
        assert!(!is_distributed(&net, true, &lim()).unwrap().is_distributed());
    }

    #[test]
    fn canonical_examples() {
        let net = fixtures::fig1();
        let fd: Vec<_> = canonical_distributions(&net, Requirement::Fd, &lim()).unwrap().collect();
        assert_eq!(fd, vec![Distribution::finest(&net)]);
        let ad: Vec<_> = canonical_distributions(&net, Requirement::Ad, &lim()).unwrap().collect();
        assert_eq!(ad.len(), 6);
        let tpu = Distribution::from_groups(&net, &[&["t", "p", "u"]]).unwrap();
        assert!(ad.contains(&tpu));
        for d in &ad {
            assert_eq!(satisfies(&net, d, Requirement::Ad, &lim()).unwrap(), None);
        }
        let free = parse_net("place p marked\nplace q\ntrans t label a\narc p -> t\narc t -> q\n").unwrap();
        assert_eq!(canonical_distributions(&free, Requirement::Ad, &lim()).unwrap().count(), 1);
        let capped = Limits {
            candidate_cap: 5,
            ..lim()
        };
        assert!(matches!(
            canonical_distributions(&net, Requirement::Ad, &capped),
            Err(Error::CandidateCapExceeded { count: 6, cap: 5 })
        ));
    }

    #[test]
    fn json_round_trip() {
        let net = fixtures::fig1();
        let d = Distribution::from_groups(&net, &[&["t", "p"]]).unwrap();
        assert_eq!(Distribution::from_json(&net, &d.to_json(&net)).unwrap(), d);
        let by_name = serde_json::json!({"p": "x", "t": "x", "q": "y", "u": "z"});
        assert_eq!(Distribution::from_json(&net, &by_name).unwrap(), d);
        assert!(Distribution::from_json(&net, &serde_json::json!({"p": 0})).is_err());
        // 2^32 must not wrap onto 0, and the number 0 is not the string "0".
        let wide = serde_json::json!({"p": 0, "t": 0, "q": 4_294_967_296u64, "u": "0"});
        let d = Distribution::from_json(&net, &wide).unwrap();
        assert_eq!(d.location_count(), 3);
    }

    proptest! {
        #[test]
        fn requirement_containment(seed in any::<u64>()) {
            let net = crate::corpus::random_net(seed, &crate::corpus::CorpusParams::default());
            for r in Requirement::ASYNC {
                for d in canonical_distributions(&net, r, &lim()).unwrap() {
                    prop_assert_eq!(satisfies(&net, &d, r, &lim()).unwrap(), None);
                    let fd = satisfies(&net, &d, Requirement::Fd, &lim()).unwrap().is_none();
                    let sd = satisfies(&net, &d, Requirement::Sd, &lim()).unwrap().is_none();
                    let ad = satisfies(&net, &d, Requirement::Ad, &lim()).unwrap().is_none();
                    prop_assert!(!fd || sd);
                    prop_assert!(!sd || ad);
                }
            }
        }

        #[test]
        fn distributedness_invariant_under_relabelling(seed in any::<u64>()) {
            let corpus = crate::corpus::random_corpus(seed, 1, &crate::corpus::CorpusParams::default());
            let net = &corpus[0].1;
            let renamed = net.relabel(|_, l| match l.action() {
                Some(a) => crate::net::Label::Action(format!("x_{a}")),
                None => l.clone(),
            });
            let a = is_distributed(net, false, &lim()).unwrap();
            let b = is_distributed(&renamed, false, &lim()).unwrap();
            prop_assert_eq!(a.is_distributed(), b.is_distributed());
            if let Distributedness::Distributed(d) = a {
                prop_assert_eq!(satisfies(net, &d, Requirement::DistributedNet, &lim()).unwrap(), None);
            }
        }

        #[test]
        fn m_free_nets_are_distributed(seed in any::<u64>()) {
            let corpus = crate::corpus::random_corpus(seed, 1, &crate::corpus::CorpusParams::default());
            let net = &corpus[0].1;
            // no u sharing a preplace with t and v whose presets are disjoint
            let shares = |a: TransId, b: TransId| net.pre(a).intersects(net.pre(b));
            let ts: Vec<TransId> = net.transitions().collect();
            let m_free = !ts.iter().any(|&u| {
                ts.iter().any(|&t| {
                    ts.iter().any(|&v| t != u && v != u && t != v && shares(t, u) && shares(u, v) && !shares(t, v))
                })
            });
            if m_free {
                prop_assert!(is_distributed(net, false, &lim()).unwrap().is_distributed());
            }
        }
    }
}
