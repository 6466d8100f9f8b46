//! Class predicates against naive re-implementations of their defining
//! formulas, over random nets.

use std::collections::{BTreeSet, VecDeque};

use distnet::classify::{behavioural_async, detect_pattern, detect_pure_visible_m, plain_distributable, ready_m_pair, structural_async, PatternKind};
use distnet::corpus::{random_net, CorpusParams};
use distnet::distribution::{is_distributed, Requirement};
use distnet::firing::{enabled_steps, enabled_transitions, fire};
use distnet::{validate, LabelledNet, Limits, Marking, Step, TransId, Verdict};
use proptest::prelude::*;

fn lim() -> Limits {
    Limits::with_state_bound(50_000).sequential()
}

fn naive_reach(net: &LabelledNet) -> Vec<Marking> {
    let mut seen = BTreeSet::from([net.initial_marking().clone()]);
    let mut queue = VecDeque::from([net.initial_marking().clone()]);
    while let Some(m) = queue.pop_front() {
        for t in enabled_transitions(net, &m) {
            let m2 = fire(net, &m, &Step::single(t)).unwrap();
            if seen.insert(m2.clone()) {
                queue.push_back(m2);
            }
        }
    }
    seen.into_iter().collect()
}

fn shares(net: &LabelledNet, t: TransId, u: TransId) -> bool {
    t != u && net.pre(t).intersects(net.pre(u))
}

/// `t` and `u` share a preplace and some reachable marking covers `•t`;
/// for N, `u` also has a second preplace.
fn naive_pattern(net: &LabelledNet, reach: &[Marking], n_shape: bool) -> bool {
    net.transitions().any(|t| {
        reach.iter().any(|m| net.pre(t).is_subset(m))
            && net.transitions().any(|u| shares(net, t, u) && (!n_shape || net.pre(u).len() > 1))
    })
}

/// `•t ∩ •u` and `•u ∩ •v` contain two different places.
fn distinct_shared(net: &LabelledNet, t: TransId, u: TransId, v: TransId) -> bool {
    let p: Vec<_> = net.pre(t).intersection(net.pre(u)).iter().collect();
    let q: Vec<_> = net.pre(u).intersection(net.pre(v)).iter().collect();
    p.iter().any(|x| q.iter().any(|y| x != y))
}

fn naive_m(net: &LabelledNet, reach: &[Marking]) -> bool {
    let covers = |t: TransId| reach.iter().any(|m| net.pre(t).is_subset(m));
    net.transitions().any(|u| {
        net.transitions().any(|t| {
            net.transitions().any(|v| {
                shares(net, t, u) && shares(net, u, v) && covers(t) && covers(v) && distinct_shared(net, t, u, v)
            })
        })
    })
}

fn naive_pure_visible_m(net: &LabelledNet, reach: &[Marking]) -> bool {
    net.transitions().any(|u| {
        net.transitions().any(|t| {
            net.transitions().any(|v| {
                shares(net, t, u)
                    && shares(net, u, v)
                    && !net.pre(t).intersects(net.pre(v))
                    && [t, u, v].iter().all(|&x| !net.is_tau(x))
                    && reach.iter().any(|m| net.pre(t).union(net.pre(u)).union(net.pre(v)).is_subset(m))
            })
        })
    })
}

/// Pairs fired together in some step at a reachable marking.
fn naive_concurrent(net: &LabelledNet, reach: &[Marking]) -> BTreeSet<(TransId, TransId)> {
    let mut out = BTreeSet::new();
    for m in reach {
        for step in enabled_steps(net, m) {
            for &t in step.transitions() {
                for &u in step.transitions() {
                    if t < u {
                        out.insert((t, u));
                    }
                }
            }
        }
    }
    out
}

fn valid_net(seed: u64) -> Option<LabelledNet> {
    let net = random_net(seed, &CorpusParams::default());
    (validate(&net, &lim()).ok()?.verdict == Verdict::Yes).then_some(net)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn asynchrony_matches_naive_patterns(seed in any::<u64>()) {
        let Some(net) = valid_net(seed) else { return Ok(()) };
        let reach = naive_reach(&net);
        let l = lim();
        let expect = [
            (Requirement::Fd, PatternKind::Conflict, !naive_pattern(&net, &reach, false)),
            (Requirement::Sd, PatternKind::N, !naive_pattern(&net, &reach, true)),
            (Requirement::Ad, PatternKind::M, !naive_m(&net, &reach)),
        ];
        for (r, kind, want) in expect {
            prop_assert_eq!(detect_pattern(&net, kind, &l).unwrap().is_none(), want, "{:?}", kind);
            prop_assert_eq!(structural_async(&net, r, &l).unwrap().holds(), want, "{}", r);
            prop_assert_eq!(behavioural_async(&net, r, &l).unwrap().holds(), want, "{}", r);
        }
    }

    #[test]
    fn pure_visible_m_matches_naive_search(seed in any::<u64>()) {
        let Some(net) = valid_net(seed) else { return Ok(()) };
        let reach = naive_reach(&net);
        let want = naive_pure_visible_m(&net, &reach);
        prop_assert_eq!(detect_pure_visible_m(&net, &lim()).unwrap().is_some(), want);
        prop_assert_eq!(ready_m_pair(&net, &lim()).unwrap().is_some(), want);
    }

    #[test]
    fn distributability_is_implied_by_distributedness(seed in any::<u64>()) {
        let Some(net) = valid_net(seed) else { return Ok(()) };
        let l = lim();
        let distributed = is_distributed(&net, false, &l).unwrap().is_distributed();
        let distributable = plain_distributable(&net, &l).unwrap().holds();
        prop_assert!(!distributed || distributable);
        // A pure visible M rules out both.
        if naive_pure_visible_m(&net, &naive_reach(&net)) {
            prop_assert!(!distributed && !distributable);
        }
    }

    #[test]
    fn distributedness_separates_naively_concurrent_pairs(seed in any::<u64>()) {
        let Some(net) = valid_net(seed) else { return Ok(()) };
        let conc = naive_concurrent(&net, &naive_reach(&net));
        match is_distributed(&net, false, &lim()).unwrap() {
            distnet::distribution::Distributedness::Distributed(d) => {
                for (t, u) in conc {
                    prop_assert!(d.trans_location(t) != d.trans_location(u));
                }
            }
            distnet::distribution::Distributedness::Chain(chain) => {
                let (first, last) = (chain[0], *chain.last().unwrap());
                prop_assert!(conc.contains(&(first.min(last), first.max(last))));
                for w in chain.windows(2) {
                    prop_assert!(net.pre(w[0]).intersects(net.pre(w[1])));
                }
            }
        }
    }
}
