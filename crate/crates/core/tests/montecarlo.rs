use branchlab_core::cumulative::{expected_s, JointGFState};
use branchlab_core::montecarlo::{
    empirical_transform, mean_estimate, run_gw_ensemble, run_q_ensemble, run_q_replicas, simulate_q,
    Regime, SimulationConfig, TransformKind,
};
use branchlab_core::qprocess::expected_w;
use branchlab_core::series::iterate_gf;
use branchlab_core::verify::{critical_law, subcritical_law, supercritical_law};

#[test]
fn first_generation_and_mean_growth() {
    let law = supercritical_law();
    let cfg = SimulationConfig::new(law.clone(), Regime::Gw, 12, 40_000, 7);
    let ens = run_gw_ensemble(&cfg).unwrap();
    assert!(ens.state_probability(1, 0).z_score(0.25) < 4.0);
    for n in [1, 4, 8, 12] {
        let m = mean_estimate(&ens.column(n));
        assert!(m.z_score(law.mean().powi(n as i32)) < 4.0, "n = {n}: {m:?}");
    }
    for n in [1, 3, 6, 12] {
        let f0 = iterate_gf(&law, n, 64).unwrap().coeffs()[0];
        assert!(ens.extinct_by(n).z_score(f0) < 4.0);
    }
}

#[test]
fn state_probabilities_match_the_iterated_series() {
    for law in [subcritical_law(), critical_law(), supercritical_law()] {
        let cfg = SimulationConfig::new(law.clone(), Regime::Gw, 20, 50_000, 11);
        let ens = run_gw_ensemble(&cfg).unwrap();
        assert_eq!(ens.truncated(), 0);
        for n in [1, 2, 5, 10, 20] {
            let fz = iterate_gf(&law, n, 256).unwrap();
            for j in 0..=10u64 {
                let exact = fz.coeffs()[j as usize];
                let est = ens.state_probability(n, j);
                let se = est.se.max((exact * (1.0 - exact) / 50_000.0).sqrt()).max(1e-9);
                assert!(
                    (est.value - exact).abs() <= 4.0 * se + 1e-12,
                    "{law:?} n = {n} j = {j}: {} vs {exact}",
                    est.value
                );
            }
        }
    }
}

#[test]
fn same_seed_same_bytes_and_partitions_merge() {
    let cfg = SimulationConfig::new(subcritical_law(), Regime::Q, 50, 3000, 42).record_at(vec![10, 25]);
    let a = serde_json::to_string(&run_q_ensemble(&cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run_q_ensemble(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);

    let whole = run_q_ensemble(&cfg).unwrap();
    let tail = run_q_replicas(&cfg, 1700..3000).unwrap();
    let head = run_q_replicas(&cfg, 0..1700).unwrap();
    assert_eq!(tail.merge(head).unwrap(), whole);
    assert_eq!(simulate_q(&cfg, 1234).unwrap(), whole.records[1234]);

    let other = SimulationConfig::new(subcritical_law(), Regime::Q, 50, 3000, 43).record_at(vec![10, 25]);
    assert_ne!(serde_json::to_string(&run_q_ensemble(&other).unwrap()).unwrap(), a);
}

#[test]
fn critical_q_process_grows_linearly() {
    let law = critical_law();
    let c = law.model_constants(1e-14);
    let cfg = SimulationConfig::new(law, Regime::Q, 100, 20_000, 5).record_at(vec![20, 50]);
    let ens = run_q_ensemble(&cfg).unwrap();
    assert_eq!(ens.overflowed(), 0);
    for n in [20, 50, 100] {
        let target = 0.5 * n as f64 + 1.0;
        assert!((expected_w(&c, 1, n) - target).abs() < 1e-12);
        let w = mean_estimate(&ens.w_column(n).unwrap());
        assert!(w.z_score(target) < 4.0, "n = {n}: {w:?}");
        let s = mean_estimate(&ens.s_column(n).unwrap());
        assert!(s.z_score(expected_s(&c, n)) < 4.0, "n = {n}: {s:?}");
    }
}

#[test]
fn critical_cumulative_laplace_transform() {
    let law = critical_law();
    let c = law.model_constants(1e-14);
    let n = 200;
    let cfg = SimulationConfig::new(law.clone(), Regime::Q, n, 20_000, 9);
    let ens = run_q_ensemble(&cfg).unwrap();
    let es = expected_s(&c, n);
    let scaled: Vec<f64> = ens.s_column(n).unwrap().iter().map(|v| v / es).collect();
    let thetas = [0.5, 1.0, 2.0];
    let emp = empirical_transform(&scaled, TransformKind::Laplace, &thetas).unwrap();
    // 1 - x is about θ/ES_n here, well inside the default radius
    let st = JointGFState::new(&law).with_radius(1e-9).unwrap();
    for (t, e) in thetas.iter().zip(&emp) {
        let exact = st.eval(n, 1.0, (-t / es).exp()).unwrap();
        let vals: Vec<f64> = scaled.iter().map(|v| (-t * v).exp()).collect();
        let est = mean_estimate(&vals);
        assert!((est.value - e.re.value).abs() < 1e-12);
        assert!(est.z_score(exact) < 3.0, "θ = {t}: {} vs {exact}", est.value);
    }
}
