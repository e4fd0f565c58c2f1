//! Limit constants of the Galton–Watson transition functions and diagnostics
//! comparing exact finite-n values with their asymptotic forms.

use serde::Serialize;

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::offspring::{ModelConstants, OffspringLaw};
use crate::series::{iterate_gf, TailMap, TruncatedSeries};

/// A constant known only up to a bracket, optionally with a measured value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalConstant {
    pub lo: f64,
    pub hi: f64,
    pub point_estimate: Option<f64>,
}

impl IntervalConstant {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo: lo.min(hi), hi: lo.max(hi), point_estimate: None }
    }

    pub fn with_estimate(mut self, x: f64) -> Self {
        self.point_estimate = Some(x);
        self
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// True when no estimate is attached or the estimate lies inside.
    pub fn consistent(&self) -> bool {
        self.point_estimate.is_none_or(|x| self.contains(x))
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub exact: f64,
    pub asymptote: f64,
    pub ratio: f64,
}

impl ConvergenceRow {
    pub fn new(n: usize, exact: f64, asymptote: f64) -> Self {
        Self { n, exact, asymptote, ratio: exact / asymptote }
    }
}

fn require_noncritical(c: &ModelConstants, what: &str) -> Result<()> {
    if c.is_critical() {
        Err(Error::Regime(format!(
            "{what} needs A != 1; for critical laws use critical_decay"
        )))
    } else {
        Ok(())
    }
}

fn require_critical(c: &ModelConstants, what: &str) -> Result<()> {
    if c.is_critical() {
        Ok(())
    } else {
        Err(Error::Regime(format!("{what} needs a critical law (A = 1)")))
    }
}

/// Δ₁ and Δ₂, summed until the running term drops below 1e-16 of the sum.
pub fn delta_bounds(law: &OffspringLaw, c: &ModelConstants) -> (f64, f64) {
    let (q, beta) = (c.q, c.beta);
    let f2q = law.derivative(q, 2);
    let (mut d1, mut d2) = (0.0, 0.0);
    let mut bk = 1.0;
    for _ in 0..100_000 {
        let x = q * (1.0 - bk);
        let t1 = law.derivative(x, 2) * bk / beta;
        let t2 = f2q * bk / law.deriv(x);
        d1 += t1;
        d2 += t2;
        if t1 <= 1e-16 * d1 && t2 <= 1e-16 * d2 {
            break;
        }
        bk *= beta;
    }
    (d1, d2)
}

/// Extrapolates a geometrically converging sequence,
/// x_inf ≈ x_n + (x_{n+1} - x_n)/(1 - ρ) with ρ fitted from successive
/// differences. Returns the estimate and whether two successive
/// extrapolants agreed to `rel_tol`.
pub fn extrapolate_geometric(seq: &[f64], rel_tol: f64) -> (f64, bool) {
    let mut prev: Option<f64> = None;
    let mut last = *seq.last().unwrap_or(&f64::NAN);
    for w in seq.windows(3) {
        let d1 = w[1] - w[0];
        let d2 = w[2] - w[1];
        let est = if d1 != 0.0 {
            let rho = d2 / d1;
            if rho.abs() < 1.0 {
                w[2] + d2 * rho / (1.0 - rho)
            } else {
                w[2]
            }
        } else {
            w[2]
        };
        if let Some(p) = prev {
            if (est - p).abs() <= rel_tol * est.abs() {
                return (est, true);
            }
        }
        prev = Some(est);
        last = est;
    }
    (last, false)
}

#[derive(Debug, Clone, Serialize)]
pub struct BasicLemmaPoint {
    pub s: f64,
    /// A(s) = lim R_n(s)/β^n.
    pub a: f64,
    /// Bounds from Δ₁ (upper) and Δ₂ (lower).
    pub a1: f64,
    pub a2: f64,
    pub in_bracket: bool,
    /// δ(s) = 2(1/A(s) - 1/(q - s)); undefined at s = q.
    pub delta: Option<f64>,
    pub delta_in_range: bool,
    /// exp(-δ(s) A(s)).
    pub k_formula: f64,
    /// lim F'_n(s)/β^n from the chain-rule product.
    pub k_measured: f64,
    pub converged: bool,
    /// |a_{n_max} - a_{3 n_max / 4}| / |a_{n_max}|.
    pub relative_change: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BasicLemmaConstants {
    pub delta1: f64,
    pub delta2: f64,
    pub n_max: usize,
    pub points: Vec<BasicLemmaPoint>,
    /// γ/q, compared against the measured δ(s).
    pub gamma_over_q: f64,
    /// max - min of δ(s) over the grid.
    pub delta_spread: f64,
}

/// A(s), the extrapolation flag and the measured K(s), run in double-double.
fn a_and_k(map: &TailMap<DoubleDouble>, s: f64, n_max: usize) -> (f64, bool, f64, f64) {
    let pts = map.run(DoubleDouble::from(s), n_max);
    let seq: Vec<f64> = pts.iter().map(|p| p.scaled.to_f64()).collect();
    let (a, converged) = extrapolate_geometric(&seq, 1e-10);
    let last = seq[n_max];
    let mid = seq[n_max * 3 / 4];
    let rel = if last == 0.0 { 0.0 } else { ((last - mid) / last).abs() };
    (a, converged, pts[n_max].scaled_slope.to_f64(), rel)
}

pub fn basic_lemma_constants(
    law: &OffspringLaw,
    s_grid: &[f64],
    n_max: usize,
) -> Result<BasicLemmaConstants> {
    let c = law.model_constants(1e-14);
    require_noncritical(&c, "basic_lemma_constants")?;
    if n_max < 4 {
        return Err(Error::Domain("n_max must be at least 4".into()));
    }
    if let Some(s) = s_grid.iter().find(|s| !(0.0..1.0).contains(*s)) {
        return Err(Error::Domain(format!("grid point {s} outside [0, 1)")));
    }
    let (d1, d2) = delta_bounds(law, &c);
    let map = TailMap::extended(law);
    let q = c.q;
    let points: Vec<BasicLemmaPoint> = s_grid
        .iter()
        .map(|&s| {
            let (a, converged, k_measured, relative_change) = a_and_k(&map, s, n_max);
            let a1 = 1.0 / (1.0 / (q - s) + d1 / 2.0);
            let a2 = 1.0 / (1.0 / (q - s) + d2 / 2.0);
            let delta = (s != q && a != 0.0).then(|| 2.0 * (1.0 / a - 1.0 / (q - s)));
            let slack = 1e-12 * a.abs();
            BasicLemmaPoint {
                s,
                a,
                a1,
                a2,
                in_bracket: a2 - slack <= a && a <= a1 + slack,
                delta,
                delta_in_range: delta.is_none_or(|d| d1 <= d && d <= d2),
                k_formula: (-delta.unwrap_or(0.0) * a).exp(),
                k_measured,
                converged,
                relative_change,
            }
        })
        .collect();
    let deltas: Vec<f64> = points.iter().filter_map(|p| p.delta).collect();
    let spread = deltas.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - deltas.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(BasicLemmaConstants {
        delta1: d1,
        delta2: d2,
        n_max,
        points,
        gamma_over_q: c.gamma.map_or(f64::NAN, |g| g / q),
        delta_spread: if deltas.is_empty() { 0.0 } else { spread },
    })
}

/// A(s) for a non-critical law by extrapolating R_n(s)/β^n.
pub fn a_function(law: &OffspringLaw, s: f64) -> Result<f64> {
    let c = law.model_constants(1e-14);
    require_noncritical(&c, "A(s)")?;
    let map = TailMap::extended(law);
    Ok(a_and_k(&map, s, horizon_for(c.beta)).0)
}

/// Steps after which β^n is far below double-double resolution.
fn horizon_for(beta: f64) -> usize {
    ((-80.0 / beta.log10()).ceil() as usize).clamp(64, 20_000)
}

/// The asymptote (1-s)/((1-s)Bn + 1) of R_n(s) for a critical law.
pub fn critical_decay(law: &OffspringLaw, s: f64, n: usize) -> Result<f64> {
    let c = law.model_constants(1e-14);
    require_critical(&c, "critical_decay")?;
    Ok((1.0 - s) / ((1.0 - s) * c.big_b * n as f64 + 1.0))
}

/// Exact R_n(s) against the critical asymptote for each n.
pub fn critical_decay_table(law: &OffspringLaw, s: f64, ns: &[usize]) -> Result<Vec<ConvergenceRow>> {
    let map = TailMap::new(law);
    ns.iter()
        .map(|&n| {
            let asym = critical_decay(law, s, n)?;
            Ok(ConvergenceRow::new(n, map.at(s, n).r, asym))
        })
        .collect()
}

/// K(s) = exp{-δ(s) A(s)}.
pub fn k_function(law: &OffspringLaw, s: f64) -> Result<f64> {
    let c = law.model_constants(1e-14);
    require_noncritical(&c, "K(s)")?;
    let bl = basic_lemma_constants(law, &[s], horizon_for(c.beta))?;
    Ok(bl.points[0].k_formula)
}

/// lim -R'_n(s)/β^n, i.e. lim F'_n(s)/β^n, from the chain-rule product.
pub fn k_limit(law: &OffspringLaw, s: f64) -> Result<f64> {
    let c = law.model_constants(1e-14);
    require_noncritical(&c, "K(s)")?;
    let map = TailMap::extended(law);
    Ok(map.at(DoubleDouble::from(s), horizon_for(c.beta)).scaled_slope.to_f64())
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalLimit {
    /// β^{-n} P_11(n) (non-critical) or n² P_11(n) (critical).
    pub rows: Vec<ConvergenceRow>,
    /// Non-critical: the limit K(0). Critical: the bracket [p₁, 1]/(p₀B).
    pub limit: IntervalConstant,
}

pub fn local_limit(law: &OffspringLaw, ns: &[usize]) -> LocalLimit {
    let c = law.model_constants(1e-14);
    let map = TailMap::new(law);
    if c.is_critical() {
        let p0b = law.p(0) * c.big_b;
        let limit = IntervalConstant::new(law.p(1) / p0b, 1.0 / p0b);
        let mid = 0.5 * (limit.lo + limit.hi);
        let rows = ns
            .iter()
            .map(|&n| {
                let p11 = map.at(0.0, n).log_slope(1.0).exp();
                ConvergenceRow::new(n, (n * n) as f64 * p11, mid)
            })
            .collect();
        let est = ns.iter().max().map(|&n| (n * n) as f64 * map.at(0.0, n).log_slope(1.0).exp());
        let limit = match est {
            Some(x) => limit.with_estimate(x),
            None => limit,
        };
        LocalLimit { rows, limit }
    } else {
        let k0 = k_limit(law, 0.0).unwrap_or(f64::NAN);
        let rows = ns
            .iter()
            .map(|&n| ConvergenceRow::new(n, map.at(0.0, n).scaled_slope, k0))
            .collect();
        LocalLimit { rows, limit: IntervalConstant::new(k0, k0).with_estimate(k0) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantMeasure {
    /// μ_j = lim P_1j(n)/P_11(n), j = 0..=N.
    pub mu: Vec<f64>,
    /// max_{j<=20} relative change of μ_j between n_max/2 and n_max.
    pub convergence: f64,
    /// M(q) from the series; infinite for critical laws.
    pub m_at_q: f64,
    /// ν_j = μ_j q^j / M(q) (non-critical only).
    pub nu: Option<Vec<f64>>,
    /// max_{1<=j<=20} |Σ_k μ_k P_kj - β μ_j|.
    pub invariance_residual: f64,
    /// Non-critical: max over the grid of |M_series(s) - (A(0)-A(s))/K(0)|.
    pub closed_form_gap: Option<f64>,
    /// Critical: bracket p₀/(p̂₁B) on Σ_{j<=J} μ_j / J at J = N/2.
    pub partial_sum_slope: Option<IntervalConstant>,
    pub beta: f64,
    pub q: f64,
}

impl InvariantMeasure {
    pub fn m_series(&self, s: f64) -> f64 {
        self.mu.iter().rev().fold(0.0, |acc, &m| acc * s + m)
    }

    /// V(s) = M(qs)/M(q).
    pub fn v_gf(&self, s: f64) -> Option<f64> {
        self.nu.as_ref().map(|nu| nu.iter().rev().fold(0.0, |acc, &v| acc * s + v))
    }
}

fn ratio_row(f: &TruncatedSeries) -> Vec<f64> {
    let p11 = f.coeffs()[1];
    f.coeffs().iter().map(|&x| x / p11).collect()
}

/// Residual of β μ_j = Σ_k μ_k P_kj over 1 <= j <= j_max, read off the
/// coefficients of M(F(s)).
pub fn invariance_residual(law: &OffspringLaw, mu: &[f64], beta: f64, j_max: usize) -> Result<f64> {
    let order = mu.len() - 1;
    let m = TruncatedSeries::from_coeffs(mu.to_vec(), order)?;
    let f = TruncatedSeries::from_coeffs(law.probs().to_vec(), order)?;
    let mf = TruncatedSeries::compose(&m, &f)?;
    Ok((1..=j_max.min(order))
        .map(|j| (mf.coeffs()[j] - beta * mu[j]).abs())
        .fold(0.0, f64::max))
}

pub fn invariant_measure(law: &OffspringLaw, order: usize, n_max: usize) -> Result<InvariantMeasure> {
    if law.p(1) == 0.0 {
        return Err(Error::Unsupported("invariant measure needs p_1 != 0".into()));
    }
    let c = law.model_constants(1e-14);
    let half = iterate_gf(law, n_max / 2, order)?;
    let full = iterate_gf(law, n_max, order)?;
    let mu_half = ratio_row(&half);
    let mut mu = ratio_row(&full);
    mu[0] = 0.0;
    let convergence = (1..=20.min(order))
        .map(|j| ((mu[j] - mu_half[j]) / mu[j]).abs())
        .fold(0.0, f64::max);
    let q = c.q;
    let invariance_residual = invariance_residual(law, &mu, c.beta, 20)?;
    if c.is_critical() {
        let j = order / 2;
        let slope = mu[1..=j].iter().sum::<f64>() / j as f64;
        let bracket = IntervalConstant::new(
            law.p(0) / c.big_b,
            law.p(0) / (law.p(1) * c.big_b),
        )
        .with_estimate(slope);
        return Ok(InvariantMeasure {
            mu,
            convergence,
            m_at_q: f64::INFINITY,
            nu: None,
            invariance_residual,
            closed_form_gap: None,
            partial_sum_slope: Some(bracket),
            beta: c.beta,
            q,
        });
    }
    let m_at_q = mu.iter().rev().fold(0.0, |acc, &m| acc * q + m);
    let mut qj = 1.0;
    let nu: Vec<f64> = mu
        .iter()
        .map(|&m| {
            let v = m * qj / m_at_q;
            qj *= q;
            v
        })
        .collect();
    let map = TailMap::extended(law);
    let h = horizon_for(c.beta);
    let a0 = a_and_k(&map, 0.0, h).0;
    let k0 = k_limit(law, 0.0)?;
    let gap = [0.1, 0.3, 0.5, 0.7]
        .iter()
        .map(|&t| {
            let s = t * q;
            let closed = (a0 - a_and_k(&map, s, h).0) / k0;
            let series = mu.iter().rev().fold(0.0, |acc, &m| acc * s + m);
            (closed - series).abs()
        })
        .fold(0.0, f64::max);
    Ok(InvariantMeasure {
        mu,
        convergence,
        m_at_q,
        nu: Some(nu),
        invariance_residual,
        closed_form_gap: Some(gap),
        partial_sum_slope: None,
        beta: c.beta,
        q,
    })
}

/// Closed-form M(s) = (A(0) - A(s))/K(0) for a non-critical law.
pub struct ClosedFormM {
    map: TailMap<DoubleDouble>,
    horizon: usize,
    a0: f64,
    k0: f64,
    pub beta: f64,
    pub p0: f64,
}

impl ClosedFormM {
    pub fn new(law: &OffspringLaw) -> Result<Self> {
        let c = law.model_constants(1e-14);
        require_noncritical(&c, "closed-form M(s)")?;
        let map = TailMap::extended(law);
        let horizon = horizon_for(c.beta);
        let a0 = a_and_k(&map, 0.0, horizon).0;
        let k0 = k_limit(law, 0.0)?;
        Ok(Self { map, horizon, a0, k0, beta: c.beta, p0: law.p(0) })
    }

    pub fn a(&self, s: f64) -> f64 {
        a_and_k(&self.map, s, self.horizon).0
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.a0 - self.a(s)) / self.k0
    }

    /// |M(F(s)) - β M(s) - M(p₀)| at s.
    pub fn functional_residual(&self, law: &OffspringLaw, s: f64) -> f64 {
        (self.eval(law.eval(s)) - self.beta * self.eval(s) - self.eval(self.p0)).abs()
    }
}

/// P̃_ij(n) = P_ij(n) q^j / Σ_{k>=1} P_ik(n) q^k, the law of Z_n given
/// n < H < ∞. The denominator is q^i - F_n(0)^i, formed from R_n(0).
pub fn conditioned_transition(law: &OffspringLaw, i: usize, j: usize, n: usize, order: usize) -> Result<f64> {
    if i == 0 || j == 0 {
        return Err(Error::Domain("conditioned transitions need i, j >= 1".into()));
    }
    let q = law.extinction_probability(1e-14);
    let fi = iterate_gf(law, n, order)?.pow(i)?;
    let pij = fi.coeff(j)?;
    Ok(pij * q.powi(j as i32) / survival_mass(law, i, n, q))
}

/// Σ_{k>=1} P_ik(n) q^k = q^i (1 - (1 - R_n(0)/q)^i).
pub fn survival_mass(law: &OffspringLaw, i: usize, n: usize, q: f64) -> f64 {
    let r = TailMap::new(law).at(0.0, n).r;
    -q.powi(i as i32) * (i as f64 * (-r / q).ln_1p()).exp_m1()
}

/// V_n^{(i)}(s) = 1 - (1 - F_n(s)^i)/(1 - F_n(0)^i) for a critical law.
pub fn yaglom_gf(law: &OffspringLaw, i: usize, n: usize, s: f64) -> Result<f64> {
    let c = law.model_constants(1e-14);
    require_critical(&c, "yaglom_gf")?;
    let map = TailMap::new(law);
    let tail = |x: f64| -(i as f64 * (-map.at(x, n).r).ln_1p()).exp_m1();
    Ok(1.0 - tail(s) / tail(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayClass {
    RPositive,
    RNull,
    RTransient,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayClassification {
    /// R = |ln β|.
    pub r: f64,
    /// lim e^{Rn} P_11(n).
    pub limit: f64,
    pub class: DecayClass,
}

pub fn decay_classification(law: &OffspringLaw) -> Result<DecayClassification> {
    let c = law.model_constants(1e-14);
    require_noncritical(&c, "decay classification")?;
    let limit = k_limit(law, 0.0)?;
    let class = if limit > 0.0 { DecayClass::RPositive } else { DecayClass::RNull };
    Ok(DecayClassification { r: c.decay_parameter(), limit, class })
}

#[derive(Debug, Clone, Serialize)]
pub struct SchroederResiduals {
    /// max over grid of |1 - V(F̂(s)) - β(1 - V(s))|.
    pub v_residual: f64,
    /// max over grid and n <= 10 of |A(F_n(qs)) - β^n A(qs)| / |β^n A(qs)|.
    pub a_relative_residual: f64,
}

pub fn schroeder_check(law: &OffspringLaw, s_grid: &[f64], order: usize) -> Result<SchroederResiduals> {
    let c = law.model_constants(1e-14);
    require_noncritical(&c, "Schroeder check")?;
    let inv = invariant_measure(law, order, 200)?;
    let hat = law.conjugate(c.q);
    let mut v_residual: f64 = 0.0;
    for &s in s_grid {
        let lhs = 1.0 - inv.v_gf(hat.eval(s)).unwrap_or(f64::NAN);
        let rhs = c.beta * (1.0 - inv.v_gf(s).unwrap_or(f64::NAN));
        v_residual = v_residual.max((lhs - rhs).abs());
    }
    let cf = ClosedFormM::new(law)?;
    let mut a_rel: f64 = 0.0;
    for &s in s_grid.iter().filter(|&&s| s < 1.0) {
        let x = c.q * s;
        let base = cf.a(x);
        if base == 0.0 {
            continue;
        }
        let mut fx = x;
        for n in 1..=10 {
            fx = law.eval(fx);
            let lhs = cf.a(fx);
            let rhs = c.beta.powi(n) * base;
            a_rel = a_rel.max(((lhs - rhs) / rhs).abs());
        }
    }
    Ok(SchroederResiduals { v_residual, a_relative_residual: a_rel })
}

/// Everything `analyze` reports for one law.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub constants: ModelConstants,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    /// Decay parameter |ln β| (non-critical).
    pub r: Option<f64>,
    pub basic_lemma: Option<BasicLemmaConstants>,
    pub local_limit: LocalLimit,
    /// Critical: exact R_n(0) against 1/(Bn + 1).
    pub critical_decay: Option<Vec<ConvergenceRow>>,
}

impl AsymptoticReport {
    pub fn build(law: &OffspringLaw, horizons: &[usize]) -> Result<Self> {
        let constants = law.model_constants(1e-14);
        let local = local_limit(law, horizons);
        if constants.is_critical() {
            return Ok(Self {
                constants,
                delta1: None,
                delta2: None,
                r: None,
                basic_lemma: None,
                local_limit: local,
                critical_decay: Some(critical_decay_table(law, 0.0, horizons)?),
            });
        }
        let q = constants.q;
        let grid: Vec<f64> = [0.0, 0.2, 0.4, 0.6, 0.8].iter().map(|t| t * q).collect();
        let n_max = horizons.iter().copied().max().unwrap_or(400).max(8);
        let bl = basic_lemma_constants(law, &grid, n_max)?;
        Ok(Self {
            r: Some(constants.decay_parameter()),
            constants,
            delta1: Some(bl.delta1),
            delta2: Some(bl.delta2),
            basic_lemma: Some(bl),
            local_limit: local,
            critical_decay: None,
        })
    }

    /// The convergence table that `analyze` writes as CSV.
    pub fn convergence_table(&self) -> &[ConvergenceRow] {
        &self.local_limit.rows
    }
}
