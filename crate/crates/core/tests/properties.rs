use branchlab_core::cumulative::{h_total_progeny, moment_asymptotics, JointGFState};
use branchlab_core::qprocess::{y_gf, QKernel};
use branchlab_core::series::{iterate_gf, r_function, TailMap};
use branchlab_core::{Classification, OffspringLaw, TruncatedSeries};
use proptest::prelude::*;

fn law_strategy() -> impl Strategy<Value = OffspringLaw> {
    (0.05f64..1.0, 0.0f64..1.0, 0.05f64..1.0, prop::collection::vec(0.0f64..0.5, 0..3)).prop_map(
        |(a, b, c, rest)| {
            let mut w = vec![a, b, c];
            w.extend(rest);
            let total: f64 = w.iter().sum();
            OffspringLaw::new(w.into_iter().map(|x| x / total).collect()).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extinction_probability_is_the_least_fixed_point(law in law_strategy()) {
        let c = law.model_constants(1e-14);
        prop_assert!((law.eval(c.q) - c.q).abs() < 1e-12);
        prop_assert!(c.q > 0.0 && c.q <= 1.0);
        prop_assert_eq!(c.q == 1.0, law.mean() <= 1.0 + 1e-12);
        prop_assert!(c.beta <= 1.0 && c.beta > 0.0);
        if law.classification() == Classification::Supercritical {
            // no root of F(s) = s below q
            for k in 1..20 {
                let s = c.q * k as f64 / 20.0;
                prop_assert!(law.eval(s) > s);
            }
        }
    }

    #[test]
    fn conjugate_is_a_law_with_mean_beta(law in law_strategy()) {
        let c = law.model_constants(1e-14);
        let hat = law.conjugate(c.q);
        prop_assert!((hat.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((hat.mean() - c.beta).abs() < 1e-10);
    }

    #[test]
    fn json_round_trip_keeps_the_hash(law in law_strategy()) {
        let back = OffspringLaw::from_json_str(&law.to_json()).unwrap();
        prop_assert_eq!(back.hash(), law.hash());
    }

    #[test]
    fn iterates_compose_and_stay_probabilities(law in law_strategy(), m in 1usize..5, n in 1usize..5) {
        let order = 128;
        let fm = iterate_gf(&law, m, order).unwrap();
        let fn_ = iterate_gf(&law, n, order).unwrap();
        let fmn = iterate_gf(&law, m + n, order).unwrap();
        let ck = TruncatedSeries::compose(&fm, &fn_).unwrap();
        for j in 0..=order {
            prop_assert!((ck.coeffs()[j] - fmn.coeffs()[j]).abs() < 1e-13);
            prop_assert!(fmn.coeffs()[j] >= 0.0);
        }
        let mass = fmn.sum() + fmn.tail_bound().unwrap_or(0.0);
        prop_assert!((mass - 1.0).abs() < 1e-12);
        if law.max_offspring().pow((m + n) as u32) <= order {
            prop_assert!((fmn.mean() - law.mean().powi((m + n) as i32)).abs() < 1e-9 * law.mean().powi((m + n) as i32).max(1.0));
        }
    }

    #[test]
    fn tail_map_matches_plain_iteration(law in law_strategy(), n in 0usize..30, s in 0.0f64..1.0) {
        let mut x = s;
        for _ in 0..n {
            x = law.eval(x);
        }
        let c = law.model_constants(1e-14);
        prop_assert!((r_function(&law, n, s) - (c.q - x)).abs() < 1e-12);
        let p = TailMap::new(&law).at(s, n);
        prop_assert!((p.r - (c.q - x)).abs() < 1e-12);
    }

    #[test]
    fn q_rows_are_honest(law in law_strategy(), i in 1usize..40) {
        let k = QKernel::new(&law, 40).unwrap();
        let row = k.row(i).unwrap();
        prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(row.iter().all(|&p| p >= 0.0));
        prop_assert_eq!(row[0], 0.0);
    }

    #[test]
    fn joint_marginal_is_y(law in law_strategy(), n in 1usize..60, s in 0.0f64..0.99) {
        let k = QKernel::new(&law, 2).unwrap();
        let j = JointGFState::new(&law).eval(n, s, 1.0).unwrap();
        prop_assert!((j - y_gf(&k, 1, n, s).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn correlation_is_a_correlation(law in law_strategy(), n in 2usize..80) {
        let m = moment_asymptotics(&law, &[n]);
        let r = m.rows[0];
        prop_assert!((-1.0..=1.0).contains(&r.rho_n));
        prop_assert!(r.var_w >= 0.0 && r.var_s >= 0.0);
    }

    #[test]
    fn total_progeny_tail_contracts(law in law_strategy(), x in 0.05f64..0.999) {
        // h_0 = 1, h_1 = x: |h - h_n| <= β^{n-1} |h - x|
        let st = JointGFState::new(&law);
        let beta = st.beta();
        let h = h_total_progeny(&law, x, 1e-16).unwrap();
        for (n, hn) in st.h_path(60, 1.0, x).into_iter().enumerate().skip(1) {
            let bound = beta.powi(n as i32 - 1) * (h - x).abs();
            prop_assert!((h - hn).abs() <= bound * (1.0 + 1e-9) + 1e-15);
        }
    }
}
