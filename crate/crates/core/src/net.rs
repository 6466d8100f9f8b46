//! The labelled net model.

use serde::Serialize;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use thiserror::Error;

use crate::marking::Marking;

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
        pub struct $name(u32);

        impl $name {
            pub fn new(i: usize) -> Self {
                Self(u32::try_from(i).expect("element index fits in u32"))
            }

            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self.0)
            }
        }
    };
}

id_type!(PlaceId);
id_type!(TransId);

/// A place or a transition.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Node {
    Place(PlaceId),
    Trans(TransId),
}

pub const TAU: &str = "tau";

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Label {
    Tau,
    Action(String),
}

impl Label {
    /// Parses the textual label; `tau` is the silent label.
    pub fn parse(s: &str) -> Self {
        if s == TAU {
            Label::Tau
        } else {
            Label::Action(s.to_string())
        }
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Label::Tau)
    }

    pub fn action(&self) -> Option<&str> {
        match self {
            Label::Tau => None,
            Label::Action(a) => Some(a),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Tau => f.write_str(TAU),
            Label::Action(a) => f.write_str(a),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Arc {
    Input(PlaceId, TransId),
    Output(TransId, PlaceId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("duplicate element {0:?}")]
    DuplicateElement(String),
    #[error("unknown arc endpoint {0:?}")]
    UnknownEndpoint(String),
    #[error("arc {0:?} -> {1:?} must connect a place and a transition")]
    InvalidArc(String, String),
    #[error("duplicate arc {0:?} -> {1:?}")]
    DuplicateArc(String, String),
    #[error("invalid identifier {0:?}")]
    InvalidName(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct PlaceData {
    name: String,
    marked: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct TransData {
    name: String,
    label: Label,
}

/// A finite labelled net. Immutable once built; derived pre/postsets are
/// cached as bit-sets.
#[derive(Clone, Debug)]
pub struct LabelledNet {
    name: Option<String>,
    places: Vec<PlaceData>,
    transitions: Vec<TransData>,
    arcs: Vec<Arc>,
    pre: Vec<Marking>,
    post: Vec<Marking>,
    place_post: Vec<Vec<TransId>>,
    initial: Marking,
    index: HashMap<String, Node>,
}

/// Structural equality: same name, elements, labels, arcs (in order) and
/// initial marking.
impl PartialEq for LabelledNet {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.places == other.places
            && self.transitions == other.transitions
            && self.arcs == other.arcs
    }
}

impl Eq for LabelledNet {}

impl LabelledNet {
    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn places(&self) -> impl Iterator<Item = PlaceId> + '_ {
        (0..self.places.len()).map(PlaceId::new)
    }

    pub fn transitions(&self) -> impl Iterator<Item = TransId> + '_ {
        (0..self.transitions.len()).map(TransId::new)
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn place_name(&self, p: PlaceId) -> &str {
        &self.places[p.index()].name
    }

    pub fn trans_name(&self, t: TransId) -> &str {
        &self.transitions[t.index()].name
    }

    pub fn node_name(&self, n: Node) -> &str {
        match n {
            Node::Place(p) => self.place_name(p),
            Node::Trans(t) => self.trans_name(t),
        }
    }

    pub fn label(&self, t: TransId) -> &Label {
        &self.transitions[t.index()].label
    }

    pub fn is_tau(&self, t: TransId) -> bool {
        self.label(t).is_tau()
    }

    /// Preset of a transition.
    pub fn pre(&self, t: TransId) -> &Marking {
        &self.pre[t.index()]
    }

    /// Postset of a transition.
    pub fn post(&self, t: TransId) -> &Marking {
        &self.post[t.index()]
    }

    /// Posttransitions of a place, in declaration order.
    pub fn place_post(&self, p: PlaceId) -> &[TransId] {
        &self.place_post[p.index()]
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    pub fn is_marked_initially(&self, p: PlaceId) -> bool {
        self.places[p.index()].marked
    }

    pub fn lookup(&self, name: &str) -> Option<Node> {
        self.index.get(name).copied()
    }

    pub fn place(&self, name: &str) -> Option<PlaceId> {
        match self.lookup(name)? {
            Node::Place(p) => Some(p),
            Node::Trans(_) => None,
        }
    }

    pub fn transition(&self, name: &str) -> Option<TransId> {
        match self.lookup(name)? {
            Node::Trans(t) => Some(t),
            Node::Place(_) => None,
        }
    }

    /// Marking from place names; panics on unknown names. Intended for
    /// tests and fixtures.
    pub fn marking(&self, names: &[&str]) -> Marking {
        names
            .iter()
            .map(|n| {
                self.place(n)
                    .unwrap_or_else(|| panic!("no place named {n:?}"))
            })
            .collect()
    }

    pub fn marking_names(&self, m: &Marking) -> Vec<String> {
        m.iter().map(|p| self.place_name(p).to_string()).collect()
    }

    pub fn has_tau(&self) -> bool {
        self.transitions.iter().any(|t| t.label.is_tau())
    }

    /// Injective labelling and no silent transitions.
    pub fn is_plain(&self) -> bool {
        !self.has_tau() && self.is_plain_tau()
    }

    /// Every visible action is produced by a unique transition.
    pub fn is_plain_tau(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.transitions
            .iter()
            .filter_map(|t| t.label.action())
            .all(|a| seen.insert(a))
    }

    pub fn visible_actions(&self) -> BTreeSet<String> {
        self.transitions
            .iter()
            .filter_map(|t| t.label.action().map(str::to_string))
            .collect()
    }

    /// Same net with transition labels replaced by `f`.
    pub fn relabel(&self, mut f: impl FnMut(TransId, &Label) -> Label) -> LabelledNet {
        let mut net = self.clone();
        for (i, t) in net.transitions.iter_mut().enumerate() {
            t.label = f(TransId::new(i), &t.label);
        }
        net
    }

    /// Builder pre-populated with this net, for derived constructions.
    pub fn to_builder(&self) -> NetBuilder {
        NetBuilder {
            name: self.name.clone(),
            places: self.places.clone(),
            transitions: self.transitions.clone(),
            arcs: self.arcs.clone(),
            index: self.index.clone(),
        }
    }

    /// Same places, transitions, labels, arcs and initial marking, matched
    /// by name; declaration order and the net name are ignored.
    pub fn same_elements(&self, other: &LabelledNet) -> bool {
        type Summary = (BTreeSet<(String, bool)>, BTreeSet<(String, Label)>, BTreeSet<(String, String)>);
        fn summary(n: &LabelledNet) -> Summary {
            let places = n.places().map(|p| (n.place_name(p).to_string(), n.is_marked_initially(p))).collect();
            let trans = n.transitions().map(|t| (n.trans_name(t).to_string(), n.label(t).clone())).collect();
            let arcs = n
                .arcs()
                .iter()
                .map(|a| match *a {
                    Arc::Input(p, t) => (n.place_name(p).to_string(), n.trans_name(t).to_string()),
                    Arc::Output(t, p) => (n.trans_name(t).to_string(), n.place_name(p).to_string()),
                })
                .collect();
            (places, trans, arcs)
        }
        summary(self) == summary(other)
    }
}

/// Incremental construction of a [`LabelledNet`]. Places and transitions
/// share a single namespace.
#[derive(Clone, Debug, Default)]
pub struct NetBuilder {
    name: Option<String>,
    places: Vec<PlaceData>,
    transitions: Vec<TransData>,
    arcs: Vec<Arc>,
    index: HashMap<String, Node>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && !name.chars().any(|c| c.is_whitespace() || c == '#')
}

impl NetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: Some(name.into()),
            ..Self::default()
        }
    }

    pub fn set_name(&mut self, name: Option<String>) {
        self.name = name;
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// `base` if unused, otherwise `base_1`, `base_2`, ...
    pub fn fresh_name(&self, base: &str) -> String {
        if !self.contains(base) {
            return base.to_string();
        }
        (1..)
            .map(|i| format!("{base}_{i}"))
            .find(|n| !self.contains(n))
            .expect("unbounded suffixes")
    }

    fn claim(&mut self, name: &str, node: Node) -> Result<(), BuildError> {
        if !valid_name(name) {
            return Err(BuildError::InvalidName(name.to_string()));
        }
        if self.index.contains_key(name) {
            return Err(BuildError::DuplicateElement(name.to_string()));
        }
        self.index.insert(name.to_string(), node);
        Ok(())
    }

    pub fn add_place(&mut self, name: &str, marked: bool) -> Result<PlaceId, BuildError> {
        let id = PlaceId::new(self.places.len());
        self.claim(name, Node::Place(id))?;
        self.places.push(PlaceData {
            name: name.to_string(),
            marked,
        });
        Ok(id)
    }

    pub fn add_transition(&mut self, name: &str, label: Label) -> Result<TransId, BuildError> {
        if let Label::Action(a) = &label {
            if !valid_name(a) || a == TAU {
                return Err(BuildError::InvalidName(a.clone()));
            }
        }
        let id = TransId::new(self.transitions.len());
        self.claim(name, Node::Trans(id))?;
        self.transitions.push(TransData {
            name: name.to_string(),
            label,
        });
        Ok(id)
    }

    fn push_arc(&mut self, arc: Arc, from: &str, to: &str) -> Result<(), BuildError> {
        if self.arcs.contains(&arc) {
            return Err(BuildError::DuplicateArc(from.to_string(), to.to_string()));
        }
        self.arcs.push(arc);
        Ok(())
    }

    /// Arc between two named elements, in either direction.
    pub fn add_arc(&mut self, from: &str, to: &str) -> Result<(), BuildError> {
        let src = *self
            .index
            .get(from)
            .ok_or_else(|| BuildError::UnknownEndpoint(from.to_string()))?;
        let dst = *self
            .index
            .get(to)
            .ok_or_else(|| BuildError::UnknownEndpoint(to.to_string()))?;
        let arc = match (src, dst) {
            (Node::Place(p), Node::Trans(t)) => Arc::Input(p, t),
            (Node::Trans(t), Node::Place(p)) => Arc::Output(t, p),
            _ => return Err(BuildError::InvalidArc(from.to_string(), to.to_string())),
        };
        self.push_arc(arc, from, to)
    }

    pub fn input(&mut self, p: PlaceId, t: TransId) -> Result<(), BuildError> {
        let (from, to) = (self.places[p.index()].name.clone(), self.transitions[t.index()].name.clone());
        self.push_arc(Arc::Input(p, t), &from, &to)
    }

    pub fn output(&mut self, t: TransId, p: PlaceId) -> Result<(), BuildError> {
        let (from, to) = (self.transitions[t.index()].name.clone(), self.places[p.index()].name.clone());
        self.push_arc(Arc::Output(t, p), &from, &to)
    }

    /// Drops the arc at position `i` (declaration order).
    pub fn remove_arc(&mut self, i: usize) -> Arc {
        self.arcs.remove(i)
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn build(self) -> LabelledNet {
        let np = self.places.len();
        let nt = self.transitions.len();
        let mut pre = vec![Marking::empty(); nt];
        let mut post = vec![Marking::empty(); nt];
        let mut place_post = vec![Vec::new(); np];
        for arc in &self.arcs {
            match *arc {
                Arc::Input(p, t) => {
                    pre[t.index()].insert(p);
                    place_post[p.index()].push(t);
                }
                Arc::Output(t, p) => {
                    post[t.index()].insert(p);
                }
            }
        }
        for ts in &mut place_post {
            ts.sort();
        }
        let initial = self
            .places
            .iter()
            .enumerate()
            .filter(|(_, p)| p.marked)
            .map(|(i, _)| PlaceId::new(i))
            .collect();
        LabelledNet {
            name: self.name,
            places: self.places,
            transitions: self.transitions,
            arcs: self.arcs,
            pre,
            post,
            place_post,
            initial,
            index: self.index,
        }
    }
}
