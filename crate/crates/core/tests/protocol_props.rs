use batman_core::protocol::{Interpretation, NodeState, Ogm, ProtocolParams};
use proptest::prelude::*;

const N: usize = 5;
const SELF: usize = 0;

#[derive(Debug, Clone)]
enum Step {
    Originate,
    Deliver(Ogm),
    /// A neighbour echoes our newest OGM back.
    Echo(usize),
    Process,
}

fn ogm() -> impl Strategy<Value = Ogm> {
    (0..N, 1..N, 0u16..16, 1u8..=10, any::<bool>(), prop::bool::weighted(0.1)).prop_map(
        |(oid, sid, sqn, ttl, is_direct, is_unidirectional)| Ogm {
            oid,
            sid,
            sqn,
            ttl,
            is_direct,
            is_unidirectional,
        },
    )
}

fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        1 => Just(Step::Originate),
        6 => ogm().prop_map(Step::Deliver),
        2 => (1..N).prop_map(Step::Echo),
        4 => Just(Step::Process),
    ]
}

fn params(interp: Interpretation) -> ProtocolParams {
    let mut p = ProtocolParams::new(N, interp);
    p.buffer_capacity = 8;
    p
}

/// Drive a node through `steps`, checking the per-step properties.
fn drive(p: &ProtocolParams, steps: &[Step]) -> Result<NodeState, TestCaseError> {
    let mut node = NodeState::new(SELF, p);
    for s in steps {
        match s {
            Step::Originate => {
                let before = node.own_sqn;
                let o = node.create_own_ogm(p);
                prop_assert_eq!(u32::from(o.sqn), (u32::from(before) + 1) % p.range());
                prop_assert_eq!(o.ttl, p.ttl_max);
            }
            Step::Deliver(o) => {
                node.receive(*o, p);
            }
            Step::Echo(sid) => {
                let echo = Ogm {
                    sid: *sid,
                    ttl: p.ttl_max - 1,
                    is_direct: true,
                    is_unidirectional: true,
                    ..Ogm::originate(SELF, node.own_sqn, p.ttl_max)
                };
                node.receive(echo, p);
            }
            Step::Process => {
                let Some(head) = node.buffer.front().copied() else {
                    continue;
                };
                let predicted = node.classify(&head, p);
                let h = node.handle_next(p).unwrap();
                prop_assert_eq!(h.rules, predicted);
                if h.rules.own_echo {
                    prop_assert!(!h.rules.rank && h.rebroadcast.is_none());
                }
                match h.rebroadcast {
                    Some(out) => {
                        prop_assert!(h.rules.rebroadcast);
                        prop_assert_eq!(out.ttl + 1, head.ttl);
                        prop_assert!(out.ttl >= 1);
                        prop_assert_eq!(out.sid, SELF);
                        prop_assert_eq!((out.oid, out.sqn), (head.oid, head.sqn));
                        prop_assert_eq!(out.is_direct, head.oid == head.sid);
                    }
                    None => prop_assert!(!h.rules.rebroadcast),
                }
            }
        }
        prop_assert!(node.check_invariants(p).is_ok(), "{:?}", node.check_invariants(p));
    }
    Ok(node)
}

#[test]
fn generated_runs_exercise_ranking() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;
    let p = params(Interpretation::Literal);
    let mut runner = TestRunner::deterministic();
    let strategy = prop::collection::vec(step(), 120);
    let ranked = (0..200)
        .filter(|_| {
            let steps = strategy.new_tree(&mut runner).unwrap().current();
            let node = drive(&p, &steps).unwrap();
            node.table.iter().any(|e| e.last_sqn.is_some())
        })
        .count();
    assert!(ranked > 50, "only {ranked} of 200 generated runs ranked anything");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn literal_and_alternative_runs_keep_invariants(steps in prop::collection::vec(step(), 0..120)) {
        drive(&params(Interpretation::Literal), &steps)?;
        drive(&params(Interpretation::Alternative), &steps)?;
    }

    #[test]
    fn literal_ranking_implies_alternative_ranking(
        steps in prop::collection::vec(step(), 0..120),
        probes in prop::collection::vec(ogm(), 1..20),
    ) {
        let lit = params(Interpretation::Literal);
        let alt = params(Interpretation::Alternative);
        let node = drive(&lit, &steps)?;
        for o in &probes {
            if node.classify(o, &lit).rank {
                prop_assert!(node.classify(o, &alt).rank);
            }
        }
    }

    #[test]
    fn designated_hop_is_top_ranked(steps in prop::collection::vec(step(), 0..120)) {
        let lit = params(Interpretation::Literal);
        let alt = params(Interpretation::Alternative);
        let node = drive(&lit, &steps)?;
        for oid in 0..N {
            let designated = node.best_next_hops(oid, &lit);
            let all = node.best_next_hops(oid, &alt);
            prop_assert!(designated.len() <= 1);
            prop_assert_eq!(designated.is_empty(), all.is_empty());
            for d in designated {
                prop_assert!(all.contains(&d));
            }
        }
    }

    #[test]
    fn classify_is_pure(
        steps in prop::collection::vec(step(), 0..120),
        probe in ogm(),
    ) {
        for interp in [Interpretation::Literal, Interpretation::Alternative] {
            let p = params(interp);
            let node = drive(&p, &steps)?;
            let copy = node.clone();
            let first = node.classify(&probe, &p);
            prop_assert_eq!(node.classify(&probe, &p), first);
            prop_assert_eq!(&node, &copy);
        }
    }

    #[test]
    fn out_of_window_stale_ogms_never_rank_or_relay(
        steps in prop::collection::vec(step(), 0..120),
        oid in 1..N,
        sid in 1..N,
        back in 5u16..8,
        ttl in 2u8..=10,
    ) {
        // default window 5: offsets 5..=7 behind the newest sqn are stale and not newer
        for interp in [Interpretation::Literal, Interpretation::Alternative] {
            let p = params(interp);
            let node = drive(&p, &steps)?;
            let Some(last) = node.table[oid].last_sqn else { continue };
            let sqn = (last + 16 - back) % 16;
            let o = Ogm { oid, sid, sqn, ttl, is_direct: false, is_unidirectional: false };
            let r = node.classify(&o, &p);
            prop_assert!(!r.rank);
            prop_assert_eq!(r.rebroadcast, oid == sid);
        }
    }
}
