//! Steps and the firing rule.

use serde::Serialize;
use smallvec::SmallVec;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::marking::Marking;
use crate::net::{LabelledNet, TransId};

/// A nonempty set of transitions, kept sorted.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Step(SmallVec<[TransId; 4]>);

impl Step {
    pub fn new<I: IntoIterator<Item = TransId>>(ts: I) -> Self {
        let mut v: SmallVec<[TransId; 4]> = ts.into_iter().collect();
        v.sort();
        v.dedup();
        assert!(!v.is_empty(), "a step is a nonempty set of transitions");
        Step(v)
    }

    pub fn single(t: TransId) -> Self {
        Step(smallvec::smallvec![t])
    }

    pub fn transitions(&self) -> &[TransId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Multiset of visible actions, e.g. the label image of a step.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
#[serde(into = "Vec<(String, u32)>")]
pub struct LabelMultiset(BTreeMap<String, u32>);

impl LabelMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn of<'a, I: IntoIterator<Item = &'a str>>(actions: I) -> Self {
        let mut m = Self::new();
        for a in actions {
            m.add(a);
        }
        m
    }

    pub fn add(&mut self, action: &str) {
        *self.0.entry(action.to_string()).or_default() += 1;
    }

    pub fn count(&self, action: &str) -> u32 {
        self.0.get(action).copied().unwrap_or(0)
    }

    /// Total number of action occurrences.
    pub fn size(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(a, &n)| (a.as_str(), n))
    }

    pub fn contains_action(&self, action: &str) -> bool {
        self.0.contains_key(action)
    }
}

/// Serialized as `[[action, count], ...]` in action order.
impl From<LabelMultiset> for Vec<(String, u32)> {
    fn from(m: LabelMultiset) -> Self {
        m.0.into_iter().collect()
    }
}

impl fmt::Debug for LabelMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LabelMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        let mut first = true;
        for (a, n) in self.entries() {
            for _ in 0..n {
                if !first {
                    f.write_str(",")?;
                }
                first = false;
                f.write_str(a)?;
            }
        }
        f.write_str("}")
    }
}

/// Enabledness in the general sense: the preset is marked and firing does
/// not put a token on a marked place outside the preset.
pub fn is_enabled(net: &LabelledNet, m: &Marking, t: TransId) -> bool {
    let pre = net.pre(t);
    pre.is_subset(m) && !m.difference(pre).intersects(net.post(t))
}

/// Preset is marked but the postset clashes with the rest of the marking.
pub fn has_contact(net: &LabelledNet, m: &Marking, t: TransId) -> bool {
    let pre = net.pre(t);
    pre.is_subset(m) && m.difference(pre).intersects(net.post(t))
}

/// Disjoint presets and disjoint postsets.
pub fn independent(net: &LabelledNet, t: TransId, u: TransId) -> bool {
    !net.pre(t).intersects(net.pre(u)) && !net.post(t).intersects(net.post(u))
}

pub fn enabled_transitions(net: &LabelledNet, m: &Marking) -> Vec<TransId> {
    net.transitions().filter(|&t| is_enabled(net, m, t)).collect()
}

/// Whether `g` is a step at `m`.
pub fn is_step(net: &LabelledNet, m: &Marking, g: &Step) -> bool {
    let ts = g.transitions();
    ts.iter().all(|&t| is_enabled(net, m, t))
        && ts
            .iter()
            .enumerate()
            .all(|(i, &t)| ts[i + 1..].iter().all(|&u| independent(net, t, u)))
}

/// All steps enabled at `m`, by backtracking over enabled transitions with
/// pairwise independent pre- and postsets. Exponential only in the width
/// of the enabled set.
pub fn enabled_steps(net: &LabelledNet, m: &Marking) -> Vec<Step> {
    enabled_steps_among(net, &enabled_transitions(net, m))
}

pub(crate) fn enabled_steps_among(net: &LabelledNet, enabled: &[TransId]) -> Vec<Step> {
    fn go(
        net: &LabelledNet,
        enabled: &[TransId],
        from: usize,
        chosen: &mut Vec<TransId>,
        pre: &Marking,
        post: &Marking,
        out: &mut Vec<Step>,
    ) {
        for i in from..enabled.len() {
            let t = enabled[i];
            if net.pre(t).intersects(pre) || net.post(t).intersects(post) {
                continue;
            }
            chosen.push(t);
            out.push(Step::new(chosen.iter().copied()));
            go(net, enabled, i + 1, chosen, &pre.union(net.pre(t)), &post.union(net.post(t)), out);
            chosen.pop();
        }
    }
    let mut out = Vec::new();
    go(net, enabled, 0, &mut Vec::new(), &Marking::empty(), &Marking::empty(), &mut out);
    out.sort();
    out
}

/// `(m \ •G) ∪ G•`, without checking enabledness.
pub(crate) fn fire_unchecked(net: &LabelledNet, m: &Marking, g: &[TransId]) -> Marking {
    let mut pre = Marking::empty();
    let mut post = Marking::empty();
    for &t in g {
        pre.union_with(net.pre(t));
        post.union_with(net.post(t));
    }
    let mut next = m.difference(&pre);
    next.union_with(&post);
    next
}

pub fn fire(net: &LabelledNet, m: &Marking, g: &Step) -> Result<Marking> {
    if !is_step(net, m, g) {
        return Err(Error::StepNotEnabled);
    }
    Ok(fire_unchecked(net, m, g.transitions()))
}

/// Label image of a step, or `None` if it contains a silent transition.
pub fn visible_label(net: &LabelledNet, g: &Step) -> Option<LabelMultiset> {
    let mut ms = LabelMultiset::new();
    for &t in g.transitions() {
        ms.add(net.label(t).action()?);
    }
    Some(ms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn names(net: &LabelledNet, steps: &[Step]) -> Vec<Vec<String>> {
        steps
            .iter()
            .map(|g| g.transitions().iter().map(|&t| net.trans_name(t).to_string()).collect())
            .collect()
    }

    /// The step condition checked literally over the power set of transitions.
    fn brute_force_steps(net: &LabelledNet, m: &Marking) -> Vec<Step> {
        let ts: Vec<TransId> = net.transitions().collect();
        let mut out = Vec::new();
        for mask in 1u32..(1 << ts.len()) {
            let g: Vec<TransId> = (0..ts.len()).filter(|i| mask & (1 << i) != 0).map(|i| ts[i]).collect();
            let all_enabled = g.iter().all(|&t| {
                net.pre(t).is_subset(m) && !m.difference(net.pre(t)).intersects(net.post(t))
            });
            let pairwise = g.iter().all(|&t| {
                g.iter().all(|&u| {
                    t == u || (!net.pre(t).intersects(net.pre(u)) && !net.post(t).intersects(net.post(u)))
                })
            });
            if all_enabled && pairwise {
                out.push(Step::new(g));
            }
        }
        out.sort();
        out
    }

    #[test]
    fn fig1_steps_at_pq() {
        let net = fixtures::fig1();
        let m = net.marking(&["p", "q"]);
        let steps = enabled_steps(&net, &m);
        assert_eq!(names(&net, &steps), vec![vec!["t"], vec!["u"]]);
        assert_eq!(steps, brute_force_steps(&net, &m));
    }

    #[test]
    fn fig2_steps_at_pq() {
        let net = fixtures::fig2();
        let m = net.marking(&["p", "q"]);
        let steps = enabled_steps(&net, &m);
        assert_eq!(
            names(&net, &steps),
            vec![vec!["t"], vec!["t", "v"], vec!["u"], vec!["v"]]
        );
        assert_eq!(steps, brute_force_steps(&net, &m));
    }

    #[test]
    fn nothing_enabled_at_empty_marking() {
        for (_, net) in fixtures::all() {
            assert!(enabled_steps(&net, &Marking::empty()).is_empty());
        }
    }

    #[test]
    fn fire_examples() {
        let net = fixtures::fig1();
        let t = net.transition("t").unwrap();
        let m = fire(&net, &net.marking(&["p", "q"]), &Step::single(t)).unwrap();
        assert_eq!(m, net.marking(&["q"]));

        let net = fixtures::fig2();
        let g = Step::new([net.transition("t").unwrap(), net.transition("v").unwrap()]);
        assert_eq!(fire(&net, &net.marking(&["p", "q"]), &g).unwrap(), Marking::empty());
        let u = net.transition("u").unwrap();
        assert_eq!(
            fire(&net, &net.marking(&["p"]), &Step::single(u)),
            Err(Error::StepNotEnabled)
        );
        let bad = Step::new([net.transition("t").unwrap(), u]);
        assert_eq!(fire(&net, &net.marking(&["p", "q"]), &bad), Err(Error::StepNotEnabled));
    }

    #[test]
    fn self_loop_keeps_token() {
        let net = crate::format::parse_net("place p marked\ntrans t label a\narc p -> t\narc t -> p\n").unwrap();
        let t = net.transition("t").unwrap();
        let m = net.marking(&["p"]);
        assert_eq!(fire(&net, &m, &Step::single(t)).unwrap(), m);
    }

    #[test]
    fn contact_disables_a_transition() {
        let net = crate::format::parse_net(
            "place p marked\nplace q marked\ntrans t label a\narc p -> t\narc t -> q\n",
        )
        .unwrap();
        let m = net.marking(&["p", "q"]);
        let t = net.transition("t").unwrap();
        assert!(has_contact(&net, &m, t));
        assert!(enabled_steps(&net, &m).is_empty());
    }

    #[test]
    fn multiset_display() {
        let ms = LabelMultiset::of(["b", "a", "b"]);
        assert_eq!(ms.to_string(), "{a,b,b}");
        assert_eq!(ms.size(), 3);
    }

    proptest! {
        #[test]
        fn steps_match_brute_force_and_are_downward_closed(
            seed in 0u64..400, mbits in 0u32..64,
        ) {
            let net = crate::corpus::random_net(seed, &crate::corpus::CorpusParams::default());
            let m: Marking = net.places().filter(|p| mbits & (1 << (p.index() % 32)) != 0).collect();
            let steps = enabled_steps(&net, &m);
            prop_assert_eq!(&steps, &brute_force_steps(&net, &m));
            for g in &steps {
                let ts = g.transitions();
                for mask in 1u32..(1 << ts.len()) {
                    let sub = Step::new((0..ts.len()).filter(|i| mask & (1 << i) != 0).map(|i| ts[i]));
                    prop_assert!(steps.contains(&sub));
                }
                // interleavings of a two-step agree with the step
                if ts.len() == 2 {
                    let whole = fire(&net, &m, g).unwrap();
                    let a = fire(&net, &m, &Step::single(ts[0])).unwrap();
                    let ab = fire(&net, &a, &Step::single(ts[1])).unwrap();
                    let b = fire(&net, &m, &Step::single(ts[1])).unwrap();
                    let ba = fire(&net, &b, &Step::single(ts[0])).unwrap();
                    prop_assert_eq!(&ab, &whole);
                    prop_assert_eq!(&ba, &whole);
                }
            }
        }
    }
}
