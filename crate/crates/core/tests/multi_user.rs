use proptest::prelude::*;
use satstream::multi::{simulate_multi, BackgroundProfile, CentralizedMpc, Independent};
use satstream::plan::{JointController, SeparateController};
use satstream::sim::run_session;
use satstream::trace::gen_trace_set;
use satstream::*;

fn suite_trace(seed: u64) -> TraceSet {
    gen_trace_set(&TraceGenConfig {
        n_satellites: 3,
        duration_s: 400.0,
        b_max_mbps: 12.0,
        seed,
        ..Default::default()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn shares_never_exceed_capacity(seed in 0u64..500, users in 2usize..6, demand in 0.0f64..0.3) {
        let trace = suite_trace(seed);
        let bg = BackgroundProfile::generate(&trace, 4, demand, seed);
        let (video, cfg) = (VideoSpec::default(), SimConfig::default());
        let mut p = Independent(
            (0..users)
                .map(|_| SeparateController::new(Some(BaselineStrategy::Mvt), PredictorKind::Robust))
                .collect(),
        );
        let r = simulate_multi(&trace, &video, &cfg, &bg, users, &mut p, true).unwrap();
        prop_assert!(!r.events.is_empty());
        for e in &r.events {
            let used: f64 = e.per_user_mbps.iter().sum::<f64>() + e.background_mbps;
            prop_assert!(used <= e.capacity_mbps + 1e-6);
            if !e.active_users.is_empty() {
                prop_assert!((used - e.capacity_mbps).abs() <= 1e-6);
            }
            prop_assert_eq!(e.per_user_mbps.len(), e.active_users.len());
        }
    }
}

#[test]
fn single_user_engine_is_the_session_simulator() {
    let (video, cfg) = (VideoSpec::default(), SimConfig::default());
    for seed in 0..5 {
        let trace = suite_trace(seed);
        let mut solo = JointController::new(CandidateMode::Dual, PredictorKind::Robust);
        let a = run_session(&trace, &video, &cfg, &mut solo).unwrap();
        let mut p = Independent(vec![JointController::new(CandidateMode::Dual, PredictorKind::Robust)]);
        let b = simulate_multi(&trace, &video, &cfg, &BackgroundProfile::none(), 1, &mut p, false).unwrap();
        let b = b.users[0].session.as_ref().unwrap();
        assert_eq!(a.breakdown, b.breakdown);
        assert_eq!(a.final_state, b.final_state);
    }
}

#[test]
fn crowding_costs_each_user_quality() {
    let (video, cfg) = (VideoSpec::default(), SimConfig::default());
    let trace = suite_trace(3);
    let qos = |n| {
        let mut p = Independent(
            (0..n)
                .map(|_| SeparateController::new(Some(BaselineStrategy::Mb), PredictorKind::Robust))
                .collect(),
        );
        simulate_multi(&trace, &video, &cfg, &BackgroundProfile::none(), n, &mut p, false)
            .unwrap()
            .qos
            .unwrap()
    };
    assert!(qos(4) < qos(1));
}

#[test]
fn centralized_session_completes_for_every_user() {
    let (video, cfg) = (
        VideoSpec {
            n_chunks: 12,
            ..VideoSpec::default()
        },
        SimConfig::default(),
    );
    let trace = suite_trace(11);
    let mut p = CentralizedMpc::new(PredictorKind::Robust);
    let r = simulate_multi(&trace, &video, &cfg, &BackgroundProfile::none(), 3, &mut p, false).unwrap();
    assert_eq!(r.users.len(), 3);
    for u in &r.users {
        let s = u.session.as_ref().unwrap();
        assert_eq!(s.breakdown.per_chunk.len(), 12);
        assert_eq!(s.controller, "centralized");
    }
}
