//! The acceptance suite: each check recomputes a limit constant or a
//! distributional statistic and compares it with its target.
//!
//! Reports contain no timings or host details, so a rerun with the same
//! configuration serialises to the same bytes.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::asymptotics::{
    basic_lemma_constants, conditioned_transition, critical_decay_table, invariant_measure, local_limit,
    yaglom_gf,
};
use crate::cumulative::{expected_s, limit_cdf_w, limit_transforms, moment_row, JointGFState};
use crate::error::{Error, Result};
use crate::montecarlo::{
    empirical_transform, ks_distance, run_q_ensemble, QEnsemble, Regime, SimulationConfig, TransformKind,
};
use crate::offspring::{ModelConstants, OffspringLaw};
use crate::qprocess::{expected_w, mu_critical, pi_distribution, QKernel, DEFAULT_STATE_CAP};
use crate::series::{lf_iterate, LinearFractionalParams, TruncatedSeries};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_REPLICAS: usize = 100_000;

pub const SUITES: &[&str] = &[
    "lf",
    "basic-lemma",
    "critical-decay",
    "local-limit",
    "invariant",
    "yaglom",
    "stationarity",
    "q-growth",
    "joint",
    "lln",
    "clt",
];

/// Suites making up each numbered acceptance criterion; criterion 11 is a
/// rerun of the others.
pub fn criterion_suites(criterion: u8) -> &'static [&'static str] {
    match criterion {
        1 => &["lf"],
        2 => &["basic-lemma"],
        3 => &["critical-decay"],
        4 => &["local-limit"],
        5 => &["invariant"],
        6 => &["yaglom"],
        7 => &["stationarity"],
        8 => &["q-growth"],
        9 => &["joint"],
        10 => &["lln", "clt"],
        _ => &[],
    }
}

pub fn subcritical_law() -> OffspringLaw {
    OffspringLaw::new(vec![0.5, 0.25, 0.25]).expect("valid law")
}

pub fn critical_law() -> OffspringLaw {
    OffspringLaw::new(vec![0.25, 0.5, 0.25]).expect("valid law")
}

pub fn supercritical_law() -> OffspringLaw {
    OffspringLaw::new(vec![0.25, 0.25, 0.5]).expect("valid law")
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    /// Run every check on this law instead of the built-in test laws.
    pub law: Option<OffspringLaw>,
    pub seed: u64,
    pub replicas: usize,
    /// Overrides the primary tolerance of each check.
    pub tol: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { law: None, seed: DEFAULT_SEED, replicas: DEFAULT_REPLICAS, tol: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measured {
    pub name: String,
    pub value: f64,
    pub target: Option<f64>,
}

fn m(name: impl Into<String>, value: f64, target: Option<f64>) -> Measured {
    Measured { name: name.into(), value, target }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub criterion: u8,
    pub suite: String,
    pub law: Option<Vec<f64>>,
    pub pass: bool,
    pub tolerance: f64,
    pub summary: String,
    pub values: Vec<Measured>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub tool_version: String,
    pub seed: u64,
    pub replicas: usize,
    pub model_hash: Option<String>,
    pub suites: Vec<String>,
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn criterion_pass(&self, criterion: u8) -> Option<bool> {
        let mut it = self.checks.iter().filter(|c| c.criterion == criterion).peekable();
        it.peek()?;
        Some(it.all(|c| c.pass))
    }
}

pub fn run(config: &VerifyConfig, suites: &[&str]) -> Result<VerifyReport> {
    let mut cache = Cache::default();
    let mut checks = Vec::new();
    let mut names = Vec::new();
    for &name in suites {
        if name == "all" {
            for &s in SUITES {
                checks.extend(run_suite(s, config, &mut cache)?);
                names.push(s.to_string());
            }
        } else {
            checks.extend(run_suite(name, config, &mut cache)?);
            names.push(name.to_string());
        }
    }
    Ok(VerifyReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        replicas: config.replicas,
        model_hash: config.law.as_ref().map(|l| l.hash()),
        suites: names,
        all_pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

/// Simulations shared between suites within one run.
#[derive(Default)]
struct Cache {
    lln: Option<(Vec<f64>, QEnsemble)>,
}

pub fn run_suite_standalone(name: &str, config: &VerifyConfig) -> Result<Vec<CheckResult>> {
    run_suite(name, config, &mut Cache::default())
}

fn run_suite(name: &str, config: &VerifyConfig, cache: &mut Cache) -> Result<Vec<CheckResult>> {
    let tol = config.tol;
    let given = config.law.clone();
    let one = |r: Result<CheckResult>| r.map(|c| vec![c]);
    match name {
        "lf" => one(check_lf(tol)),
        "basic-lemma" => one(check_basic_lemma(&given.unwrap_or_else(supercritical_law), tol)),
        "critical-decay" => one(check_critical_decay(&given.unwrap_or_else(critical_law), tol)),
        "local-limit" => match given {
            Some(law) => one(check_local_limit(&law, tol)),
            None => Ok(vec![
                check_local_limit(&critical_law(), tol)?,
                check_local_limit(&supercritical_law(), tol)?,
            ]),
        },
        "invariant" => match given {
            Some(law) => one(check_invariant(&law, tol)),
            None => Ok(vec![
                check_invariant(&subcritical_law(), tol)?,
                check_invariant(&supercritical_law(), tol)?,
            ]),
        },
        "yaglom" => one(check_yaglom(&given.unwrap_or_else(critical_law), tol)),
        "stationarity" => one(check_stationarity(&given.unwrap_or_else(subcritical_law), tol)),
        "q-growth" => one(check_q_growth(&given.unwrap_or_else(critical_law), tol)),
        "joint" => one(check_joint(&given.unwrap_or_else(critical_law), config)),
        "lln" => one(check_lln(&given.unwrap_or_else(subcritical_law), config, cache)),
        "clt" => one(check_clt(&given.unwrap_or_else(subcritical_law), config, cache)),
        other => Err(Error::Domain(format!(
            "unknown suite '{other}'; expected one of {} or all",
            SUITES.join(", ")
        ))),
    }
}

fn constants(law: &OffspringLaw) -> ModelConstants {
    law.model_constants(1e-14)
}

fn need_critical(c: &ModelConstants, what: &str) -> Result<()> {
    if c.is_critical() {
        Ok(())
    } else {
        Err(Error::Regime(format!("{what} applies to critical laws (A = 1, β = 1); this law has A = {}", c.mean)))
    }
}

fn need_beta_below_one(c: &ModelConstants, what: &str) -> Result<f64> {
    c.gamma.ok_or_else(|| {
        Error::Regime(format!("{what} requires β < 1 (positive-recurrent Q-process); this law has β = 1"))
    })
}

fn result(
    criterion: u8,
    suite: &str,
    law: Option<&OffspringLaw>,
    pass: bool,
    tolerance: f64,
    summary: String,
    values: Vec<Measured>,
) -> CheckResult {
    CheckResult {
        criterion,
        suite: suite.into(),
        law: law.map(|l| l.probs().to_vec()),
        pass,
        tolerance,
        summary,
        values,
    }
}

fn check_lf(tol: Option<f64>) -> Result<CheckResult> {
    let tol = tol.unwrap_or(1e-12);
    let order = 512;
    let mut worst: f64 = 0.0;
    let mut values = Vec::new();
    for (b, c) in [(0.25, 0.5), (0.2, 0.5), (0.3, 0.5), (0.05, 0.9)] {
        let p = LinearFractionalParams::new(b, c)?;
        let mut cur = TruncatedSeries::identity(order)?;
        let mut fam: f64 = 0.0;
        for n in 0..=30 {
            for s in [0.0, 0.3, 0.7, 0.9] {
                fam = fam.max((cur.eval(s) - lf_iterate(&p, n, s)).abs());
            }
            cur = p.apply_to_series(&cur)?;
        }
        values.push(m(format!("max_error_b{b}_c{c}"), fam, None));
        worst = worst.max(fam);
    }
    Ok(result(
        1,
        "lf",
        None,
        worst < tol,
        tol,
        format!("max |F_n(s) - closed form| = {worst:.3e} over n <= 30, order {order}"),
        values,
    ))
}

fn check_basic_lemma(law: &OffspringLaw, tol: Option<f64>) -> Result<CheckResult> {
    let tol = tol.unwrap_or(1e-8);
    let c = constants(law);
    if c.is_critical() {
        return Err(Error::Regime("the non-critical basic lemma needs A != 1".into()));
    }
    let grid: Vec<f64> = [0.0, 0.2, 0.4, 0.6, 0.8].iter().map(|t| t * c.q).collect();
    let bl = basic_lemma_constants(law, &grid, 400)?;
    let mut values = vec![m("delta1", bl.delta1, None), m("delta2", bl.delta2, None)];
    let mut pass = true;
    let mut worst_change: f64 = 0.0;
    for p in &bl.points {
        values.push(m(format!("A({:.4})", p.s), p.a, None));
        values.push(m(format!("A2({:.4})", p.s), p.a2, None));
        values.push(m(format!("A1({:.4})", p.s), p.a1, None));
        values.push(m(format!("relative_change({:.4})", p.s), p.relative_change, Some(0.0)));
        pass &= p.in_bracket && p.relative_change < tol;
        worst_change = worst_change.max(p.relative_change);
    }
    let inside = bl.points.iter().filter(|p| p.in_bracket).count();
    Ok(result(
        2,
        "basic-lemma",
        Some(law),
        pass,
        tol,
        format!(
            "R_n/β^n: max relative change n=300..400 {worst_change:.3e}; {inside}/{} limits inside [A2, A1]",
            bl.points.len()
        ),
        values,
    ))
}

fn check_critical_decay(law: &OffspringLaw, tol: Option<f64>) -> Result<CheckResult> {
    let tol = tol.unwrap_or(0.05);
    need_critical(&constants(law), "critical decay of R_n")?;
    let rows = critical_decay_table(law, 0.0, &[100, 200, 400])?;
    let last = rows.last().map_or(f64::NAN, |r| r.ratio);
    let values = rows.iter().map(|r| m(format!("R_n(0)(Bn+1) n={}", r.n), r.ratio, Some(1.0))).collect();
    Ok(result(
        3,
        "critical-decay",
        Some(law),
        (last - 1.0).abs() <= tol,
        tol,
        format!("R_400(0)(400B + 1) = {last:.6}"),
        values,
    ))
}

fn check_local_limit(law: &OffspringLaw, tol: Option<f64>) -> Result<CheckResult> {
    let c = constants(law);
    if c.is_critical() {
        let ns: Vec<usize> = (200..=400).collect();
        let ll = local_limit(law, &ns);
        let (lo, hi) = (ll.limit.lo, ll.limit.hi);
        let min = ll.rows.iter().map(|r| r.exact).fold(f64::INFINITY, f64::min);
        let max = ll.rows.iter().map(|r| r.exact).fold(f64::NEG_INFINITY, f64::max);
        let pass = ll.rows.iter().all(|r| ll.limit.contains(r.exact));
        let values = vec![
            m("bracket_lo", lo, None),
            m("bracket_hi", hi, None),
            m("n2P11 n=200", ll.rows[0].exact, None),
            m("n2P11 n=400", ll.rows[ll.rows.len() - 1].exact, None),
        ];
        Ok(result(
            4,
            "local-limit",
            Some(law),
            pass,
            0.0,
            format!("n²P_11(n) over n = 200..400 spans [{min:.4}, {max:.4}]; bracket [{lo:.4}, {hi:.4}]"),
            values,
        ))
    } else {
        let tol = tol.unwrap_or(1e-4);
        let ns: Vec<usize> = (40..=400).collect();
        let ll = local_limit(law, &ns);
        let last = ll.rows[ll.rows.len() - 1].exact;
        let drift = ll.rows.iter().map(|r| (r.exact - last).abs()).fold(0.0, f64::max) / last.abs();
        let values = vec![
            m("beta^-n P11 n=40", ll.rows[0].exact, None),
            m("beta^-n P11 n=400", last, None),
            m("relative_drift", drift, Some(0.0)),
        ];
        Ok(result(
            4,
            "local-limit",
            Some(law),
            drift < tol,
            tol,
            format!("β^-n P_11(n) over n = 40..400: relative drift {drift:.3e}, value {last:.12}"),
            values,
        ))
    }
}

fn check_invariant(law: &OffspringLaw, tol: Option<f64>) -> Result<CheckResult> {
    let tol_mu = tol.unwrap_or(1e-6);
    let tol_m = tol.unwrap_or(1e-8);
    let c = constants(law);
    if c.is_critical() {
        return Err(Error::Regime("invariant measure checks here are for non-critical laws".into()));
    }
    let inv = invariant_measure(law, 512, 200)?;
    let m_p0 = inv.m_series(law.p(0));
    let functional = [0.1, 0.3, 0.5, 0.7, 0.9]
        .iter()
        .map(|t| {
            let s = t * c.q;
            (inv.m_series(law.eval(s)) - c.beta * inv.m_series(s) - m_p0).abs()
        })
        .fold(0.0, f64::max);
    let pass = inv.invariance_residual < tol_mu && functional < tol_m;
    Ok(result(
        5,
        "invariant",
        Some(law),
        pass,
        tol_mu,
        format!(
            "max_j<=20 |Σμ_k P_kj - βμ_j| = {:.3e}; max |M(F(s)) - βM(s) - M(p0)| = {functional:.3e}",
            inv.invariance_residual
        ),
        vec![
            m("invariance_residual", inv.invariance_residual, Some(0.0)),
            m("functional_residual", functional, Some(0.0)),
            m("mu_2", inv.mu[2], None),
        ],
    ))
}

fn check_yaglom(law: &OffspringLaw, tol: Option<f64>) -> Result<CheckResult> {
    let tol = tol.unwrap_or(0.1);
    let c = constants(law);
    need_critical(&c, "the conditioned-law limit n V_n(s)")?;
    let n = 400;
    let s = 0.5;
    let nv = n as f64 * yaglom_gf(law, 1, n, s)?;
    let target_v = s / (c.big_b * (1.0 - s));
    let np = n as f64 * conditioned_transition(law, 1, 1, n, 16)?;
    let target_p = 1.0 / c.big_b;
    let ev = (nv - target_v).abs() / target_v;
    let ep = (np - target_p).abs() / target_p;
    Ok(result(
        6,
        "yaglom",
        Some(law),
        ev < tol && ep < tol,
        tol,
        format!(
            "n V_n(0.5) = {nv:.4} vs {target_v:.4} (rel {ev:.3}); n P~_11(n) = {np:.4} vs {target_p:.4} (rel {ep:.3}) at n = {n}"
        ),
        vec![m("nV_n(0.5)", nv, Some(target_v)), m("nP~11(n)", np, Some(target_p))],
    ))
}

fn check_stationarity(law: &OffspringLaw, tol: Option<f64>) -> Result<CheckResult> {
    let tol = tol.unwrap_or(0.01);
    let c = constants(law);
    let gamma = need_beta_below_one(&c, "the stationary distribution π")?;
    let kernel = QKernel::new(law, DEFAULT_STATE_CAP)?;
    let pi = pi_distribution(&kernel, &[0.2, 0.5, 0.8], 60)?;
    let claim = pi.q11_claim;
    let e1 = (pi.q11_kernel - claim).abs() / claim;
    let mean_err = (pi.pi_mean - (1.0 + gamma)).abs();
    let pass = e1 < tol && pi.fixed_point_residual < 1e-6 && mean_err < 1e-9;
    Ok(result(
        7,
        "stationarity",
        Some(law),
        pass,
        tol,
        format!(
            "Q_11(60) = {:.6} vs e^(-2γ/(2+γ)) = {claim:.6} (rel {e1:.3}); π fixed-point residual {:.3e}; π'(1) - (1+γ) = {mean_err:.1e}",
            pi.q11_kernel, pi.fixed_point_residual
        ),
        vec![
            m("Q11(60)", pi.q11_kernel, Some(claim)),
            m("pi_fixed_point_residual", pi.fixed_point_residual, Some(0.0)),
            m("pi'(1)", pi.pi_mean, Some(1.0 + gamma)),
            m("stationary_pi_1", pi.stationary[1], None),
            m("stationary_residual", pi.stationary_residual, Some(0.0)),
            m("lost_mass", pi.lost_mass, Some(0.0)),
        ],
    ))
}

fn check_q_growth(law: &OffspringLaw, tol: Option<f64>) -> Result<CheckResult> {
    let tol = tol.unwrap_or(0.15);
    let c = constants(law);
    need_critical(&c, "growth of the transient Q-process")?;
    let kernel = QKernel::new(law, 16)?;
    let horizons: Vec<usize> = (200..=400).collect();
    let mu = mu_critical(&kernel, &[0.5], &horizons, 400, 64)?;
    let b = mu.n2_q11_bracket;
    let inside = mu.n2_q11.iter().all(|&(_, v)| b.contains(v));
    let rel = mu.cesaro / mu.cesaro_target - 1.0;
    let min = mu.n2_q11.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max = mu.n2_q11.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(result(
        8,
        "q-growth",
        Some(law),
        inside && rel.abs() <= tol,
        tol,
        format!(
            "n²Q_11(n) over n = 200..400 spans [{min:.4}, {max:.4}] in [{:.4}, {:.4}]; Cesàro sum/J² at J = {} is {:.4} vs {:.4} ({:+.1}%)",
            b.lo,
            b.hi,
            mu.cesaro_j,
            mu.cesaro,
            mu.cesaro_target,
            100.0 * rel
        ),
        vec![
            m("n2Q11 n=200", mu.n2_q11[0].1, None),
            m("n2Q11 n=400", mu.n2_q11[mu.n2_q11.len() - 1].1, None),
            m("cesaro", mu.cesaro, Some(mu.cesaro_target)),
        ],
    ))
}

fn check_joint(law: &OffspringLaw, config: &VerifyConfig) -> Result<CheckResult> {
    let ks_tol = config.tol.unwrap_or(0.02);
    let c = constants(law);
    need_critical(&c, "the joint limit law of (W_n, S_n)")?;
    let n = 400;
    let cfg = SimulationConfig::new(law.clone(), Regime::Q, n, config.replicas, config.seed);
    let ens = run_q_ensemble(&cfg)?;
    let ew = expected_w(&c, 1, n);
    let es = expected_s(&c, n);
    let w: Vec<f64> = ens.w_column(n)?.iter().map(|x| x / ew).collect();
    let s: Vec<f64> = ens.s_column(n)?.iter().map(|x| x / es).collect();
    let ks = ks_distance(&w, |u| limit_cdf_w(u.max(0.0)).unwrap_or(0.0))?;
    let mut values = vec![m("KS(W_n/EW_n)", ks, Some(0.0))];
    let mut pass = ks < ks_tol;
    let mut z_worst: f64 = 0.0;
    for t in empirical_transform(&s, TransformKind::Laplace, &[0.5, 1.0, 2.0])? {
        let target = limit_transforms(0.0, t.arg)?;
        let z = t.re.z_score(target);
        z_worst = z_worst.max(z);
        values.push(m(format!("laplace S θ={}", t.arg), t.re.value, Some(target)));
        values.push(m(format!("laplace S θ={} se", t.arg), t.re.se, None));
    }
    let combined: Vec<f64> = w.iter().zip(&s).map(|(a, b)| a + b).collect();
    let joint = empirical_transform(&combined, TransformKind::Laplace, &[1.0])?[0];
    let jt = limit_transforms(1.0, 1.0)?;
    let zj = joint.re.z_score(jt);
    values.push(m("joint (1,1)", joint.re.value, Some(jt)));
    values.push(m("joint (1,1) se", joint.re.se, None));
    let stats = ens.stats(n, &[])?;
    let rho_target = 6f64.sqrt() / 3.0;
    let rho = stats.rho_ws.value;
    let rho_rel = (rho - rho_target).abs() / rho_target;
    values.push(m("rho_n (simulated)", rho, Some(rho_target)));
    let rho_exact = moment_row(&JointGFState::new(law), &c, n).rho_n;
    values.push(m("rho_n (transform)", rho_exact, Some(rho_target)));
    values.push(m("overflowed", ens.overflowed() as f64, Some(0.0)));
    pass &= z_worst <= 3.0 && zj <= 3.0 && rho_rel < 0.05 && ens.overflowed() == 0;
    Ok(result(
        9,
        "joint",
        Some(law),
        pass,
        ks_tol,
        format!(
            "n = {n}, {} replicas: KS = {ks:.4}; Laplace of S_n/ES_n worst {z_worst:.2} s.e.; joint (1,1) {zj:.2} s.e.; ρ_n = {rho:.4} ({:.1}% from √6/3)",
            config.replicas,
            100.0 * rho_rel
        ),
        values,
    ))
}

const LLN_N: usize = 2000;
const CLT_N: usize = 3000;

fn lln_ensemble<'a>(law: &OffspringLaw, config: &VerifyConfig, cache: &'a mut Cache) -> Result<&'a QEnsemble> {
    let key = law.probs().to_vec();
    if cache.lln.as_ref().is_none_or(|(k, _)| *k != key) {
        let cfg = SimulationConfig::new(law.clone(), Regime::Q, CLT_N, config.replicas, config.seed)
            .record_at(vec![LLN_N]);
        cache.lln = Some((key, run_q_ensemble(&cfg)?));
    }
    Ok(&cache.lln.as_ref().expect("filled above").1)
}

fn check_lln(law: &OffspringLaw, config: &VerifyConfig, cache: &mut Cache) -> Result<CheckResult> {
    let tol = config.tol.unwrap_or(0.01);
    let c = constants(law);
    let gamma = need_beta_below_one(&c, "the law of large numbers for S_n")?;
    let ens = lln_ensemble(law, config, cache)?;
    let ratio: Vec<f64> = ens.s_column(LLN_N)?.iter().map(|x| x / LLN_N as f64).collect();
    let est = crate::montecarlo::mean_estimate(&ratio);
    let target = 1.0 + gamma;
    let rel = (est.value - target).abs() / target;
    Ok(result(
        10,
        "lln",
        Some(law),
        rel < tol,
        tol,
        format!(
            "mean S_n/n at n = {LLN_N} is {:.5} ± {:.5} vs 1 + γ = {target:.5} (rel {rel:.2e})",
            est.value, est.se
        ),
        vec![m("mean S_n/n", est.value, Some(target)), m("se", est.se, None)],
    ))
}

fn check_clt(law: &OffspringLaw, config: &VerifyConfig, cache: &mut Cache) -> Result<CheckResult> {
    let tol = config.tol.unwrap_or(0.02);
    let c = constants(law);
    need_beta_below_one(&c, "the central limit theorem for S_n")?;
    let psi = c.psi.unwrap_or(f64::NAN);
    let ens = lln_ensemble(law, config, cache)?;
    let es = expected_s(&c, CLT_N);
    let scale = (2.0 * psi * CLT_N as f64).sqrt();
    let s = ens.s_column(CLT_N)?;
    let z: Vec<f64> = s.iter().map(|x| (x - es) / scale).collect();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let ks = ks_distance(&z, |x| normal.cdf(x))?;
    let sd = crate::montecarlo::jackknife_of_means(
        &[&s, &s.iter().map(|x| x * x).collect::<Vec<_>>()],
        |v| v[1] - v[0] * v[0],
    );
    let rate = sd.value / CLT_N as f64;
    Ok(result(
        10,
        "clt",
        Some(law),
        ks < tol,
        tol,
        format!(
            "KS((S_n - ES_n)/√(2Ψn), Φ) = {ks:.4} at n = {CLT_N} with 2Ψ = {:.4}; simulated Var S_n/n = {rate:.3}",
            2.0 * psi
        ),
        vec![
            m("KS", ks, Some(0.0)),
            m("2Psi", 2.0 * psi, None),
            m("Var S_n / n (simulated)", rate, Some(2.0 * psi)),
        ],
    ))
}
