//! Step ready pairs and step readiness equivalence.

use serde::Serialize;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::firing::{enabled_steps, enabled_steps_among, is_enabled, visible_label, LabelMultiset};
use crate::limits::Limits;
use crate::marking::Marking;
use crate::net::{Label, LabelledNet};
use crate::reach::{reachability_graph, tau_closure};

/// The set of label multisets of steps enabled at a stable marking.
pub type Menu = BTreeSet<LabelMultiset>;

/// The menu at `m`; fails if a silent transition is enabled there.
pub fn menu(net: &LabelledNet, m: &Marking) -> Result<Menu> {
    if let Some(t) = net.transitions().find(|&t| net.is_tau(t) && is_enabled(net, m, t)) {
        return Err(Error::NotStable {
            transition: net.trans_name(t).to_string(),
        });
    }
    Ok(enabled_steps(net, m)
        .iter()
        .filter_map(|g| visible_label(net, g))
        .collect())
}

/// A step ready pair `⟨σ, X⟩`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ReadyPair {
    pub trace: Vec<String>,
    pub menu: Menu,
}

#[derive(Debug, Clone)]
struct DfaState {
    markings: Vec<Marking>,
    menus: BTreeSet<Menu>,
    edges: BTreeMap<String, usize>,
    parent: Option<(usize, String)>,
}

/// Deterministic automaton over visible actions whose states are sets of
/// markings reachable by a common weak trace, each annotated with the
/// menus of its stable markings. `⟨σ, X⟩` is a ready pair iff `σ` leads
/// to a state annotated with `X`.
#[derive(Debug, Clone)]
pub struct ReadySemantics {
    states: Vec<DfaState>,
}

impl ReadySemantics {
    pub fn initial(&self) -> usize {
        0
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn menus(&self, state: usize) -> &BTreeSet<Menu> {
        &self.states[state].menus
    }

    pub fn markings(&self, state: usize) -> &[Marking] {
        &self.states[state].markings
    }

    pub fn successor(&self, state: usize, action: &str) -> Option<usize> {
        self.states[state].edges.get(action).copied()
    }

    pub fn edges(&self, state: usize) -> impl Iterator<Item = (&str, usize)> {
        self.states[state].edges.iter().map(|(a, &s)| (a.as_str(), s))
    }

    pub fn run<S: AsRef<str>>(&self, sigma: &[S]) -> Option<usize> {
        sigma
            .iter()
            .try_fold(self.initial(), |s, a| self.successor(s, a.as_ref()))
    }

    /// A shortest trace leading to `state`.
    pub fn trace_to(&self, state: usize) -> Vec<String> {
        let mut trace = Vec::new();
        let mut s = state;
        while let Some((p, a)) = &self.states[s].parent {
            trace.push(a.clone());
            s = *p;
        }
        trace.reverse();
        trace
    }

    pub fn contains<S: AsRef<str>>(&self, sigma: &[S], x: &Menu) -> bool {
        self.run(sigma).is_some_and(|s| self.menus(s).contains(x))
    }

    /// No ready pairs at all.
    pub fn is_empty(&self) -> bool {
        self.states.iter().all(|s| s.menus.is_empty())
    }

    /// All ready pairs whose trace has at most `max_len` actions.
    pub fn pairs_up_to(&self, max_len: usize) -> BTreeSet<ReadyPair> {
        let mut out = BTreeSet::new();
        let mut frontier = vec![(self.initial(), Vec::<String>::new())];
        for depth in 0..=max_len {
            let mut next = Vec::new();
            for (s, trace) in frontier {
                for x in self.menus(s) {
                    out.insert(ReadyPair {
                        trace: trace.clone(),
                        menu: x.clone(),
                    });
                }
                if depth < max_len {
                    for (a, t) in self.edges(s) {
                        let mut tr = trace.clone();
                        tr.push(a.to_string());
                        next.push((t, tr));
                    }
                }
            }
            frontier = next;
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct State<'a> {
            id: usize,
            menus: &'a BTreeSet<Menu>,
        }
        #[derive(Serialize)]
        struct Edge<'a> {
            from: usize,
            action: &'a str,
            to: usize,
        }
        let states: Vec<State> = self
            .states
            .iter()
            .enumerate()
            .map(|(id, s)| State { id, menus: &s.menus })
            .collect();
        let edges: Vec<Edge> = self
            .states
            .iter()
            .enumerate()
            .flat_map(|(from, s)| s.edges.iter().map(move |(a, &to)| Edge { from, action: a, to }))
            .collect();
        serde_json::json!({ "states": states, "edges": edges, "initial": self.initial() })
    }
}

/// Builds the annotated automaton by subset construction over the
/// reachability graph.
pub fn ready_semantics(net: &LabelledNet, limits: &Limits) -> Result<ReadySemantics> {
    let g = reachability_graph(net, limits)?;
    let n = g.len();
    let mut menus: Vec<Option<Menu>> = vec![None; n];
    let mut visible: Vec<BTreeMap<&str, Vec<usize>>> = vec![BTreeMap::new(); n];
    for node in 0..n {
        for &(t, to) in g.successors(node) {
            if let Label::Action(a) = net.label(t) {
                visible[node].entry(a.as_str()).or_default().push(to);
            }
        }
        if g.is_stable(node) {
            let enabled: Vec<_> = g.successors(node).iter().map(|&(t, _)| t).collect();
            menus[node] = Some(
                enabled_steps_among(net, &enabled)
                    .iter()
                    .filter_map(|s| visible_label(net, s))
                    .collect(),
            );
        }
    }
    let closure = |seed: BTreeSet<usize>| -> Vec<usize> {
        let mut seen = seed;
        let mut queue: VecDeque<usize> = seen.iter().copied().collect();
        while let Some(x) = queue.pop_front() {
            for &(t, to) in g.successors(x) {
                if net.is_tau(t) && seen.insert(to) {
                    queue.push_back(to);
                }
            }
        }
        seen.into_iter().collect()
    };

    let mut states: Vec<DfaState> = Vec::new();
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut intern = |set: Vec<usize>,
                      parent: Option<(usize, String)>,
                      states: &mut Vec<DfaState>,
                      sets: &mut Vec<Vec<usize>>|
     -> Result<usize> {
        if let Some(&id) = index.get(&set) {
            return Ok(id);
        }
        let id = states.len();
        limits.check_states(id + 1)?;
        states.push(DfaState {
            markings: set.iter().map(|&x| g.marking(x).clone()).collect(),
            menus: set.iter().filter_map(|&x| menus[x].clone()).collect(),
            edges: BTreeMap::new(),
            parent,
        });
        index.insert(set.clone(), id);
        sets.push(set);
        Ok(id)
    };
    intern(closure(BTreeSet::from([0])), None, &mut states, &mut sets)?;
    let mut cur = 0;
    while cur < states.len() {
        let mut by_action: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
        for &x in &sets[cur] {
            for (a, tos) in &visible[x] {
                by_action.entry(a).or_default().extend(tos.iter().copied());
            }
        }
        for (a, targets) in by_action {
            let id = intern(closure(targets), Some((cur, a.to_string())), &mut states, &mut sets)?;
            states[cur].edges.insert(a.to_string(), id);
        }
        cur += 1;
    }
    Ok(ReadySemantics { states })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// A ready pair of exactly one of the two nets; `side` names the net that
/// has it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub trace: Vec<String>,
    pub menu: Menu,
    pub side: Side,
}

impl Witness {
    pub fn pair(&self) -> ReadyPair {
        ReadyPair {
            trace: self.trace.clone(),
            menu: self.menu.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    Inequivalent(Witness),
}

impl Equivalence {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Equivalence::Equivalent)
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Equivalence::Equivalent => None,
            Equivalence::Inequivalent(w) => Some(w),
        }
    }
}

const NO_MENUS: &BTreeSet<Menu> = &BTreeSet::new();

/// Among the menus in the symmetric difference, the one with the most
/// entries; ties go to the smaller menu, then the left side.
fn pick_witness(trace: Vec<String>, left: &BTreeSet<Menu>, right: &BTreeSet<Menu>) -> Option<Witness> {
    left.difference(right)
        .map(|x| (x, Side::Left))
        .chain(right.difference(left).map(|x| (x, Side::Right)))
        .min_by_key(|&(x, side)| (Reverse(x.len()), x.clone(), side))
        .map(|(x, side)| Witness {
            trace,
            menu: x.clone(),
            side,
        })
}

/// Decides `R(a) = R(b)` exactly. A witness trace has minimal length.
pub fn readiness_equivalent(a: &LabelledNet, b: &LabelledNet, limits: &Limits) -> Result<Equivalence> {
    let ra = ready_semantics(a, limits)?;
    let rb = ready_semantics(b, limits)?;
    compare(&ra, &rb, limits)
}

/// Product traversal of two automata.
pub fn compare(ra: &ReadySemantics, rb: &ReadySemantics, limits: &Limits) -> Result<Equivalence> {
    type Pair = (Option<usize>, Option<usize>);
    let start: Pair = (Some(ra.initial()), Some(rb.initial()));
    let mut parent: HashMap<Pair, Option<(Pair, String)>> = HashMap::from([(start, None)]);
    let mut queue = VecDeque::from([start]);
    while let Some(pair @ (x, y)) = queue.pop_front() {
        let mx = x.map_or(NO_MENUS, |s| ra.menus(s));
        let my = y.map_or(NO_MENUS, |s| rb.menus(s));
        if mx != my {
            let mut trace = Vec::new();
            let mut cur = pair;
            while let Some(Some((p, act))) = parent.get(&cur) {
                trace.push(act.clone());
                cur = *p;
            }
            trace.reverse();
            let w = pick_witness(trace, mx, my).expect("annotations differ");
            return Ok(Equivalence::Inequivalent(w));
        }
        let mut actions: BTreeSet<&str> = BTreeSet::new();
        if let Some(s) = x {
            actions.extend(ra.edges(s).map(|(act, _)| act));
        }
        if let Some(s) = y {
            actions.extend(rb.edges(s).map(|(act, _)| act));
        }
        for act in actions {
            let nx = x.and_then(|s| ra.successor(s, act));
            let ny = y.and_then(|s| rb.successor(s, act));
            let np = (nx, ny);
            if !parent.contains_key(&np) {
                limits.check_states(parent.len() + 1)?;
                parent.insert(np, Some((pair, act.to_string())));
                queue.push_back(np);
            }
        }
    }
    Ok(Equivalence::Equivalent)
}

/// Compares ready pairs with traces of length at most `max_len` only,
/// exploring weak successors on the fly. Unsound: agreement up to the
/// bound does not imply equivalence.
pub fn bounded_equivalent(a: &LabelledNet, b: &LabelledNet, max_len: usize, limits: &Limits) -> Result<Equivalence> {
    fn stable_menus(net: &LabelledNet, set: &BTreeSet<Marking>) -> BTreeSet<Menu> {
        set.iter().filter_map(|m| menu(net, m).ok()).collect()
    }
    fn step(net: &LabelledNet, set: &BTreeSet<Marking>, act: &str, limits: &Limits) -> Result<BTreeSet<Marking>> {
        let mut next = BTreeSet::new();
        for m in set {
            for t in net.transitions() {
                if net.label(t).action() == Some(act) && is_enabled(net, m, t) {
                    next.insert(crate::firing::fire_unchecked(net, m, &[t]));
                }
            }
        }
        tau_closure(net, &next, limits)
    }
    let mut frontier = vec![(
        Vec::<String>::new(),
        tau_closure(a, &BTreeSet::from([a.initial_marking().clone()]), limits)?,
        tau_closure(b, &BTreeSet::from([b.initial_marking().clone()]), limits)?,
    )];
    let mut visited = 0usize;
    for depth in 0..=max_len {
        let mut next = Vec::new();
        for (trace, sa, sb) in frontier {
            visited += 1;
            limits.check_states(visited)?;
            let (ma, mb) = (stable_menus(a, &sa), stable_menus(b, &sb));
            if ma != mb {
                return Ok(Equivalence::Inequivalent(pick_witness(trace, &ma, &mb).unwrap()));
            }
            if depth == max_len {
                continue;
            }
            let mut actions = a.visible_actions();
            actions.extend(b.visible_actions());
            for act in actions {
                let na = step(a, &sa, &act, limits)?;
                let nb = step(b, &sb, &act, limits)?;
                if na.is_empty() && nb.is_empty() {
                    continue;
                }
                let mut tr = trace.clone();
                tr.push(act);
                next.push((tr, na, nb));
            }
        }
        frontier = next;
    }
    Ok(Equivalence::Equivalent)
}

/// Relabels every transition carrying action `i` as silent.
pub fn hide_action(net: &LabelledNet, i: &str) -> LabelledNet {
    net.relabel(|_, l| if l.action() == Some(i) { Label::Tau } else { l.clone() })
}
