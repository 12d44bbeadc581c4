use batman_core::sim::{run_batch, Simulation, TimedConfig};
use batman_core::{Interpretation, ProtocolParams, Topology};

fn grid17(interp: Interpretation) -> (ProtocolParams, Topology) {
    (ProtocolParams::new(17, interp), Topology::grid_center(4, 4).unwrap())
}

#[test]
fn default_horizon_is_too_short_to_wrap() {
    // first OGM no earlier than 19 and then at most one per 19 units
    let (p, t) = grid17(Interpretation::Literal);
    let cfg = TimedConfig::default();
    let bound = (cfg.horizon / cfg.min_ogmtime).floor() as u16;
    assert_eq!(bound, 13);
    for run in 0..10 {
        let out = Simulation::new(&p, &t, &cfg, run).unwrap().run();
        assert!(!out.sqn_wrapped);
        assert!(out.nodes.iter().all(|n| n.own_sqn <= bound && n.own_sqn >= 12));
    }
}

#[test]
fn long_runs_wrap_and_keep_consistent_tables() {
    for interp in [Interpretation::Literal, Interpretation::Alternative] {
        let (p, t) = grid17(interp);
        let cfg = TimedConfig {
            horizon: 1000.0,
            sample_period: 20.0,
            ..TimedConfig::default()
        };
        for run in 0..5 {
            let out = Simulation::new(&p, &t, &cfg, run).unwrap().run();
            assert!(out.sqn_wrapped);
            for n in &out.nodes {
                n.check_invariants(&p).unwrap();
                assert_eq!(n.buffer_error, 0);
            }
            let last = out.samples.last().unwrap();
            assert_eq!(last.bidir_misses, 0, "{interp} run {run}");
            assert_eq!(last.no_route, 0, "{interp} run {run}");
        }
    }
}

#[test]
fn discovered_links_are_not_lost() {
    for interp in [Interpretation::Literal, Interpretation::Alternative] {
        let (p, t) = grid17(interp);
        let cfg = TimedConfig {
            runs: 20,
            ..TimedConfig::default()
        };
        let batch = run_batch(&p, &t, &cfg).unwrap();
        for r in &batch.runs {
            for w in r.samples.windows(2) {
                if w[0].bidir_misses == 0 {
                    assert_eq!(w[1].bidir_misses, 0, "link lost at t={}", w[1].t);
                }
            }
        }
    }
}

#[test]
fn small_buffers_overflow_and_count_it() {
    let (mut p, t) = grid17(Interpretation::Literal);
    p.buffer_capacity = 2;
    let cfg = TimedConfig {
        runs: 4,
        ..TimedConfig::default()
    };
    let batch = run_batch(&p, &t, &cfg).unwrap();
    assert!(batch.total_buffer_errors() > 0);
    assert!(batch.max_buffer() <= 2);
    for r in &batch.runs {
        let last = r.samples.last().unwrap();
        assert_eq!(last.buffer_errors, r.nodes.iter().map(|n| n.buffer_error).sum::<u32>());
        for w in r.samples.windows(2) {
            assert!(w[1].buffer_errors >= w[0].buffer_errors);
        }
    }
}

#[test]
fn ring_discovers_everything_in_a_few_rounds() {
    let p = ProtocolParams::new(4, Interpretation::Literal);
    let t = Topology::ring(4).unwrap();
    let cfg = TimedConfig {
        runs: 10,
        ..TimedConfig::default()
    };
    let batch = run_batch(&p, &t, &cfg).unwrap();
    let row = batch.at(100.0).unwrap();
    assert_eq!(row.bidir_misses, 0.0);
    assert_eq!(row.no_route, 0.0);
    assert_eq!(row.route_errors, 0.0);
}
