//! The pair (W_n, S_n) of a Q-process state and its running total
//! S_n = W_0 + ... + W_{n-1}, started from W_0 = 1.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::offspring::{ModelConstants, OffspringLaw};

pub const DEFAULT_DOMAIN_RADIUS: f64 = 1e-3;
const H_ITER_CAP: usize = 10_000_000;
/// Finite-difference steps are this fraction of 1/E[X] for X = W_n or S_n.
const FD_RELATIVE_STEP: f64 = 1e-3;

/// Evaluator for H_n(s;x) and J_n(s;x) = E[s^{W_n} x^{S_n}].
///
/// The domain is the closed unit square less a disc of `radius` around the
/// corner (1,1); the corner itself is answered analytically.
#[derive(Debug, Clone)]
pub struct JointGFState {
    hat: OffspringLaw,
    beta: f64,
    radius: f64,
}

impl JointGFState {
    pub fn new(law: &OffspringLaw) -> Self {
        let c = law.model_constants(1e-14);
        Self { hat: law.conjugate(c.q), beta: c.beta, radius: DEFAULT_DOMAIN_RADIUS }
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(Error::Domain(format!("domain radius {radius} outside (0, 1)")));
        }
        self.radius = radius;
        Ok(self)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn conjugate(&self) -> &OffspringLaw {
        &self.hat
    }

    pub fn in_domain(&self, s: f64, x: f64) -> bool {
        (0.0..=1.0).contains(&s)
            && (0.0..=1.0).contains(&x)
            && (1.0 - s).hypot(1.0 - x) >= self.radius
    }

    /// H_0 = s, H_{k+1} = x F̂(H_k); returns H_0..=H_n.
    pub fn h_path(&self, n: usize, s: f64, x: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(n + 1);
        let mut h = s;
        out.push(h);
        for _ in 0..n {
            h = x * self.hat.eval(h);
            out.push(h);
        }
        out
    }

    pub fn eval(&self, n: usize, s: f64, x: f64) -> Result<f64> {
        if s == 1.0 && x == 1.0 {
            return Ok(1.0);
        }
        if !self.in_domain(s, x) {
            return Err(Error::Domain(format!(
                "(s, x) = ({s}, {x}) outside the unit square or within {} of (1, 1)",
                self.radius
            )));
        }
        Ok(self.eval_unchecked(n, s, x))
    }

    fn eval_unchecked(&self, n: usize, s: f64, x: f64) -> f64 {
        if s == 0.0 || (x == 0.0 && n > 0) {
            return 0.0;
        }
        self.ln_eval(n, s, x).exp()
    }

    /// ln J_n(s;x) for positive s, x; also valid a little beyond 1 where
    /// the polynomial recursion stays finite.
    fn ln_eval(&self, n: usize, s: f64, x: f64) -> f64 {
        let lx = x.ln();
        let mut acc = s.ln();
        let mut h = s;
        for _ in 0..n {
            acc += lx + (self.hat.deriv(h) / self.beta).ln();
            h = x * self.hat.eval(h);
        }
        acc
    }
}

/// J_n(s;x) on the default domain.
pub fn joint_gf(law: &OffspringLaw, n: usize, s: f64, x: f64) -> Result<f64> {
    JointGFState::new(law).eval(n, s, x)
}

/// Least fixed point of h = x F̂(h), the generating function of the total
/// progeny of the conjugate process.
pub fn h_total_progeny(law: &OffspringLaw, x: f64, tol: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Domain(format!("x = {x} outside (0, 1]")));
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let state = JointGFState::new(law);
    fixed_point(&state.hat, x, tol)
}

fn fixed_point(hat: &OffspringLaw, x: f64, tol: f64) -> Result<f64> {
    let mut h = 0.0f64;
    let mut done = false;
    for _ in 0..H_ITER_CAP {
        let next = x * hat.eval(h);
        if !next.is_finite() {
            break;
        }
        let step = (next - h).abs();
        h = next;
        if step < tol {
            done = true;
            break;
        }
    }
    if !done {
        return Err(Error::NoConvergence(format!("h(x) at x = {x}")));
    }
    for _ in 0..3 {
        let g = x * hat.eval(h) - h;
        let dg = x * hat.deriv(h) - 1.0;
        if dg >= 0.0 {
            break;
        }
        let next = h - g / dg;
        if (x * hat.eval(next) - next).abs() >= g.abs() {
            break;
        }
        h = next;
    }
    Ok(h)
}

/// h for x on either side of 1; above 1 this needs β < 1.
fn h_extended(state: &JointGFState, x: f64) -> Result<f64> {
    if x == 1.0 {
        Ok(1.0)
    } else {
        fixed_point(&state.hat, x, 1e-16)
    }
}

/// E S_n from W_0 = 1.
pub fn expected_s(c: &ModelConstants, n: usize) -> f64 {
    let nf = n as f64;
    match c.gamma {
        Some(g) => (1.0 + g) * nf - g * (1.0 - c.beta.powi(n as i32)) / (1.0 - c.beta),
        None => (c.alpha - 1.0) / 2.0 * nf * (nf - 1.0) + nf,
    }
}

fn expected_w1(c: &ModelConstants, n: usize) -> f64 {
    match c.gamma {
        Some(g) => 1.0 + g * (1.0 - c.beta.powi(n as i32)),
        None => (c.alpha - 1.0) * n as f64 + 1.0,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentRow {
    pub n: usize,
    pub es_n: f64,
    /// E S_n and E W_n read off the transform.
    pub es_measured: f64,
    pub ew_measured: f64,
    pub var_w: f64,
    pub var_s: f64,
    pub cov_ws: f64,
    pub rho_n: f64,
    /// Critical targets ((α-1)²/2 n², (α-1)²/12 n⁴, (α-1)²/6 n³).
    pub var_w_target: Option<f64>,
    pub var_s_target: Option<f64>,
    pub cov_target: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CumulativeMoments {
    pub alpha: f64,
    pub psi: Option<f64>,
    pub rho_limit: Option<f64>,
    pub rows: Vec<MomentRow>,
}

/// Second-order cumulants of (W_n, S_n) by centred differences of
/// ln J_n(e^{-a}; e^{-b}) at a = b = 0.
pub fn moment_row(state: &JointGFState, c: &ModelConstants, n: usize) -> MomentRow {
    let es = expected_s(c, n);
    let ha = FD_RELATIVE_STEP / expected_w1(c, n).max(1.0);
    let hb = FD_RELATIVE_STEP / es.max(1.0);
    let g = |a: f64, b: f64| {
        if a == 0.0 && b == 0.0 {
            0.0
        } else {
            state.ln_eval(n, (-a).exp(), (-b).exp())
        }
    };
    let (ap, am) = (g(ha, 0.0), g(-ha, 0.0));
    let (bp, bm) = (g(0.0, hb), g(0.0, -hb));
    let mixed = (g(ha, hb) - g(ha, -hb) - g(-ha, hb) + g(-ha, -hb)) / (4.0 * ha * hb);
    let var_w = (ap + am) / (ha * ha);
    let var_s = (bp + bm) / (hb * hb);
    let rho = (mixed / (var_w * var_s).sqrt()).clamp(-1.0, 1.0);
    let (tw, ts, tc) = if c.is_critical() {
        let k = (c.alpha - 1.0).powi(2);
        let nf = n as f64;
        (Some(k / 2.0 * nf * nf), Some(k / 12.0 * nf.powi(4)), Some(k / 6.0 * nf.powi(3)))
    } else {
        (None, None, None)
    };
    MomentRow {
        n,
        es_n: es,
        es_measured: -(bp - bm) / (2.0 * hb),
        ew_measured: -(ap - am) / (2.0 * ha),
        var_w,
        var_s,
        cov_ws: mixed,
        rho_n: rho,
        var_w_target: tw,
        var_s_target: ts,
        cov_target: tc,
    }
}

pub fn moment_asymptotics(law: &OffspringLaw, ns: &[usize]) -> CumulativeMoments {
    let state = JointGFState::new(law);
    let c = law.model_constants(1e-14);
    CumulativeMoments {
        alpha: c.alpha,
        psi: c.psi,
        rho_limit: c.is_critical().then(|| 6f64.sqrt() / 3.0),
        rows: ns.iter().map(|&n| moment_row(&state, &c, n)).collect(),
    }
}

/// [ch√θ + (λ/2) sh√θ/√θ]^{-2}, the joint limit transform of
/// (W_n/E W_n, S_n/E S_n) for critical laws.
pub fn limit_transforms(lambda: f64, theta: f64) -> Result<f64> {
    if !(lambda >= 0.0 && theta >= 0.0) || !lambda.is_finite() || !theta.is_finite() {
        return Err(Error::Domain(format!("(λ, θ) = ({lambda}, {theta}) must be non-negative")));
    }
    let (ch, shc) = if theta < 1e-8 {
        (1.0 + theta / 2.0 + theta * theta / 24.0, 1.0 + theta / 6.0 + theta * theta / 120.0)
    } else {
        let r = theta.sqrt();
        (r.cosh(), r.sinh() / r)
    };
    Ok((ch + lambda / 2.0 * shc).powi(-2))
}

/// Limit distribution function of W_n/E W_n: 1 - e^{-2u} - 2u e^{-2u}.
pub fn limit_cdf_w(u: f64) -> Result<f64> {
    if u.is_nan() || u < 0.0 {
        return Err(Error::Domain(format!("u = {u} must be non-negative")));
    }
    let e = (-2.0 * u).exp();
    Ok(1.0 - e - 2.0 * u * e)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LaplaceCheck {
    pub n: usize,
    pub theta: f64,
    /// T_n(e^{-θ/n}) = E e^{-θ S_n/n}.
    pub product: f64,
    pub target: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LlnClt {
    pub limit: f64,
    pub psi: f64,
    /// 2Ψ, the variance per step used to scale S_n.
    pub clt_variance_rate: f64,
    /// Var S_n / n read off the transform at `laplace.n`.
    pub measured_variance_rate: f64,
    pub laplace: LaplaceCheck,
}

pub fn lln_clt_constants(law: &OffspringLaw, n: usize, theta: f64) -> Result<LlnClt> {
    let c = law.model_constants(1e-14);
    let gamma = c.gamma.ok_or_else(|| {
        Error::Regime(
            "LLN/CLT for S_n requires β < 1; for β = 1 use the joint limit transform".into(),
        )
    })?;
    let psi = c.psi.unwrap_or(f64::NAN);
    let state = JointGFState::new(law);
    let product = state.ln_eval(n, 1.0, (-theta / n as f64).exp()).exp();
    let target = (-theta * (1.0 + gamma)).exp();
    let row = moment_row(&state, &c, n);
    Ok(LlnClt {
        limit: 1.0 + gamma,
        psi,
        clt_variance_rate: 2.0 * psi,
        measured_variance_rate: row.var_s / n as f64,
        laplace: LaplaceCheck {
            n,
            theta,
            product,
            target,
            relative_error: (product - target).abs() / target,
        },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionPoint {
    pub theta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Expansion {
    pub name: &'static str,
    pub points: Vec<ExpansionPoint>,
    /// Slopes of ln|residual| against ln θ between neighbouring grid points.
    pub orders: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionOracles {
    pub n: usize,
    pub beta: f64,
    pub gamma: f64,
    /// (h(e^θ) - 1)/θ at each θ, against 1/(1-β).
    pub h_first_order: Vec<f64>,
    pub expansions: Vec<Expansion>,
}

/// Both sides of the small-θ expansions of h, u, R_n/u^n and ln Π u_k,
/// with x = 1 - θ for the expansions in (1 - x) and x = e^θ otherwise.
pub fn expansion_oracles(law: &OffspringLaw, thetas: &[f64], n: usize) -> Result<ExpansionOracles> {
    let c = law.model_constants(1e-14);
    let gamma = c.gamma.ok_or_else(|| {
        Error::Regime("expansions of h and u near x = 1 require β < 1".into())
    })?;
    let state = JointGFState::new(law);
    let beta = c.beta;
    let b = state.hat.derivative(1.0, 2);
    let h2 = (2.0 * beta * (1.0 - beta) + b) / (1.0 - beta).powi(3);
    let u_of = |x: f64, h: f64| x * state.hat.deriv(h);

    let mut rows: [Vec<ExpansionPoint>; 6] = Default::default();
    let mut h_first = Vec::new();
    for &theta in thetas {
        if !(theta > 0.0 && theta < 0.5) {
            return Err(Error::Domain(format!("θ = {theta} outside (0, 0.5)")));
        }
        let d = 1.0 - theta;
        let hd = h_extended(&state, d)?;
        rows[0].push(point(theta, 1.0 - hd, theta / (1.0 - beta) - h2 * theta * theta));
        rows[1].push(point(
            theta,
            u_of(d, hd),
            beta * d * (1.0 - gamma * theta) + h2 * b * d * theta * theta,
        ));

        let x = theta.exp();
        let h = h_extended(&state, x)?;
        let u = u_of(x, h);
        h_first.push((h - 1.0) / theta);
        let h_rhs = theta / (1.0 - beta) + beta * (2.0 + gamma) / (1.0 - beta).powi(2) * theta * theta;
        rows[2].push(point(theta, h - 1.0, h_rhs));
        let psi = gamma * (1.0 + beta * (1.0 + gamma)) / (1.0 - beta);
        rows[3].push(point(theta, u, beta * (1.0 + (1.0 + gamma) * theta) + beta * psi * theta * theta));

        // h_0 = 1 since V_0 = 0.
        let path = state.h_path(n, 1.0, x);
        let rn = h - path[n];
        rows[4].push(point(theta, rn / u.powi(n as i32), h_rhs));
        let ln_prod: f64 = path[..n].iter().map(|&hk| (u_of(x, hk) / beta).ln()).sum();
        let geo: f64 = (0..n).map(|k| u.powi(k as i32)).sum();
        let rhs = -(1.0 - u / beta) * n as f64
            - beta * gamma * (2.0 + gamma) / (1.0 - beta) * theta.powi(3) * geo;
        rows[5].push(point(theta, ln_prod, rhs));
    }
    let names = ["h-near-one", "u-near-one", "h-exponential", "u-exponential", "tail-ratio", "log-product"];
    let expansions = names
        .iter()
        .zip(rows)
        .map(|(&name, points)| {
            let orders = points
                .windows(2)
                .map(|w| (w[1].residual.abs().ln() - w[0].residual.abs().ln()) / (w[1].theta.ln() - w[0].theta.ln()))
                .collect();
            Expansion { name, points, orders }
        })
        .collect();
    Ok(ExpansionOracles { n, beta, gamma, h_first_order: h_first, expansions })
}

fn point(theta: f64, lhs: f64, rhs: f64) -> ExpansionPoint {
    ExpansionPoint { theta, lhs, rhs, residual: lhs - rhs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::fixtures::*;
    use crate::qprocess::{y_gf, QKernel};

    /// Joint law of (W_n, S_n) from W_0 = 1 by dynamic programming over the
    /// one-step kernel.
    fn joint_law(law: &OffspringLaw, n: usize) -> Vec<((usize, usize), f64)> {
        joint_law_with(&QKernel::new(law, 1 << n.max(1)).unwrap(), n)
    }

    fn joint_law_with(k: &QKernel, n: usize) -> Vec<((usize, usize), f64)> {
        let mut cur = vec![((1usize, 0usize), 1.0)];
        for _ in 0..n {
            let mut next = std::collections::BTreeMap::new();
            for &((w, s), p) in &cur {
                for (j, &q) in k.row(w).unwrap().iter().enumerate().skip(1) {
                    *next.entry((j, s + w)).or_insert(0.0) += p * q;
                }
            }
            cur = next.into_iter().collect();
        }
        cur
    }

    #[test]
    fn joint_gf_matches_enumeration() {
        for law in [sub(), crit(), sup()] {
            let st = JointGFState::new(&law);
            for n in 1..=5 {
                let dist = joint_law(&law, n);
                for (s, x) in [(0.3f64, 0.6f64), (0.9, 0.2), (0.5, 0.99)] {
                    let want: f64 = dist.iter().map(|&((w, t), p)| p * s.powi(w as i32) * x.powi(t as i32)).sum();
                    let got = st.eval(n, s, x).unwrap();
                    assert!((got - want).abs() < 1e-13, "{n} {s} {x}: {got} {want}");
                }
            }
        }
    }

    #[test]
    fn one_step_is_x_times_y() {
        let law = sup();
        let st = JointGFState::new(&law);
        let k = QKernel::new(&law, 8).unwrap();
        for s in [0.1f64, 0.5, 0.8] {
            let y: f64 = k.row(1).unwrap().iter().enumerate().map(|(j, p)| p * s.powi(j as i32)).sum();
            assert!((st.eval(1, s, 0.7).unwrap() - 0.7 * y).abs() < 1e-14);
        }
    }

    #[test]
    fn corner_and_domain() {
        let st = JointGFState::new(&crit());
        assert_eq!(st.eval(50, 1.0, 1.0).unwrap(), 1.0);
        assert!(st.eval(3, 0.9999, 1.0).is_err());
        assert!(st.eval(3, 1.2, 0.5).is_err());
        assert!(st.clone().with_radius(0.0).is_err());
        assert!(st.with_radius(1e-5).unwrap().eval(3, 0.9999, 1.0).is_ok());
    }

    #[test]
    fn marginal_matches_y() {
        for law in [sub(), crit(), sup()] {
            let k = QKernel::new(&law, 4).unwrap();
            let st = JointGFState::new(&law);
            for n in [1, 7, 40] {
                for s in [0.0, 0.2, 0.55, 0.9] {
                    let a = st.eval(n, s, 1.0).unwrap();
                    let b = y_gf(&k, 1, n, s).unwrap();
                    assert!((a - b).abs() < 1e-10, "{n} {s}: {a} {b}");
                }
            }
        }
    }

    #[test]
    fn absolutely_monotone_on_grid() {
        // Non-negative coefficients force every forward difference to be >= 0.
        let st = JointGFState::new(&sup());
        let g = |i: usize, j: usize| st.eval(4, i as f64 * 0.1, j as f64 * 0.1).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                for (di, dj) in [(1, 0), (0, 1), (1, 1), (2, 1), (1, 2), (3, 0)] {
                    let mut acc = 0.0;
                    for a in 0..=di {
                        for b in 0..=dj {
                            let sign = if (di - a + dj - b) % 2 == 0 { 1.0 } else { -1.0 };
                            acc += sign * binom(di, a) * binom(dj, b) * g(i + a, j + b);
                        }
                    }
                    assert!(acc >= -1e-9, "{i} {j} {di} {dj}: {acc}");
                }
            }
        }
    }

    fn binom(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn expected_s_by_differentiation() {
        for law in [sub(), crit(), sup()] {
            let c = law.model_constants(1e-14);
            assert!((expected_s(&c, 1) - 1.0).abs() < 1e-15);
            let st = JointGFState::new(&law);
            let k = QKernel::new(&law, 1 << 8).unwrap();
            for n in 1..=8 {
                let direct: f64 = joint_law_with(&k, n).iter().map(|&((_, t), p)| p * t as f64).sum();
                let row = moment_row(&st, &c, n);
                assert!((expected_s(&c, n) - direct).abs() < 1e-9 * direct);
                assert!((row.es_measured - direct).abs() < 1e-6 * direct, "{n}");
            }
            for n in [9, 10] {
                let e = expected_s(&c, n);
                assert!((moment_row(&st, &c, n).es_measured - e).abs() < 1e-6 * e);
            }
        }
        let c = crit().model_constants(1e-14);
        assert!((expected_s(&c, 9) - (0.25 * 72.0 + 9.0)).abs() < 1e-12);
    }

    #[test]
    fn second_moments_match_enumeration() {
        let law = sub();
        let c = law.model_constants(1e-14);
        let st = JointGFState::new(&law);
        let n = 6;
        let d = joint_law(&law, n);
        let m = |f: &dyn Fn(f64, f64) -> f64| d.iter().map(|&((w, t), p)| p * f(w as f64, t as f64)).sum::<f64>();
        let (ew, es) = (m(&|w, _| w), m(&|_, t| t));
        let vw = m(&|w, _| w * w) - ew * ew;
        let vs = m(&|_, t| t * t) - es * es;
        let cv = m(&|w, t| w * t) - ew * es;
        let row = moment_row(&st, &c, n);
        assert!((row.var_w - vw).abs() < 1e-5 * vw);
        assert!((row.var_s - vs).abs() < 1e-5 * vs);
        assert!((row.cov_ws - cv).abs() < 1e-5 * cv.abs());
    }

    #[test]
    fn critical_moment_asymptotics() {
        let m = moment_asymptotics(&crit(), &[200]);
        let r = m.rows[0];
        assert!((-1.0..=1.0).contains(&r.rho_n));
        let target = 6f64.sqrt() / 3.0;
        assert!((r.rho_n - target).abs() < 0.05 * target, "{}", r.rho_n);
        let vs = r.var_s / 200f64.powi(4);
        assert!((vs - 0.25 / 12.0).abs() < 0.1 * 0.25 / 12.0, "{vs}");
        assert!((r.var_w / r.var_w_target.unwrap() - 1.0).abs() < 0.1);
    }

    #[test]
    fn h_fixed_point() {
        let law = sub();
        assert_eq!(h_total_progeny(&law, 1.0, 1e-15).unwrap(), 1.0);
        assert!(h_total_progeny(&law, 0.0, 1e-15).is_err());
        let eps = 1e-5;
        let lo = h_total_progeny(&law, 1.0 - eps, 1e-16).unwrap();
        let slope = (1.0 - lo) / eps;
        assert!((slope - 4.0).abs() < 1e-3, "{slope}");
        let hat = JointGFState::new(&law).hat;
        for x in [0.1, 0.5, 0.9] {
            let h = h_total_progeny(&law, x, 1e-15).unwrap();
            assert!((x * hat.eval(h) - h).abs() < 1e-15);
            assert!(h >= x * hat.eval(0.0));
        }
        let hc = h_total_progeny(&crit(), 0.999, 1e-15).unwrap();
        assert!((0.999 * crit().eval(hc) - hc).abs() < 1e-14);
    }

    #[test]
    fn tail_contraction() {
        // h_0 = 1 and h_1 = x, so β^{n-1}|h - x| is the sharp form of the bound.
        for law in [sub(), sup()] {
            let st = JointGFState::new(&law);
            let beta = st.beta();
            for x in [0.2, 0.6, 0.95] {
                let h = h_total_progeny(&law, x, 1e-16).unwrap();
                let path = st.h_path(60, 1.0, x);
                for (n, &hn) in path.iter().enumerate().skip(1) {
                    let rn = (h - hn).abs();
                    assert!(rn <= beta.powi(n as i32 - 1) * (h - x).abs() * (1.0 + 1e-12) + 1e-16);
                    assert!(rn <= beta.powi(n as i32) * (1.0 - h) * (1.0 + 1e-12) + 1e-16);
                }
            }
        }
    }

    #[test]
    fn transforms() {
        assert_eq!(limit_transforms(0.0, 0.0).unwrap(), 1.0);
        let c1 = 1f64.cosh();
        assert!((limit_transforms(0.0, 1.0).unwrap() - 1.0 / (c1 * c1)).abs() < 1e-15);
        assert!((limit_transforms(0.0, 1.0).unwrap() - 0.41997).abs() < 1e-5);
        for l in [0.0, 0.5, 3.0] {
            assert!((limit_transforms(l, 0.0).unwrap() - (1.0 + l / 2.0).powi(-2)).abs() < 1e-15);
            let a = limit_transforms(l, 0.99e-8).unwrap();
            let b = limit_transforms(l, 1.01e-8).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
        assert!(limit_transforms(-1.0, 0.0).is_err());
        assert!(limit_cdf_w(-0.1).is_err());
        assert_eq!(limit_cdf_w(0.0).unwrap(), 0.0);
        // Erlang(2, rate 2) against its Laplace transform by quadrature.
        let lam = 1.3;
        let (mut acc, du) = (0.0, 1e-4);
        for i in 0..200_000 {
            let u = (i as f64 + 0.5) * du;
            acc += (-lam * u).exp() * 4.0 * u * (-2.0 * u).exp() * du;
        }
        assert!((acc - limit_transforms(lam, 0.0).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn lln_constants() {
        let r = lln_clt_constants(&sub(), 2000, 1.0).unwrap();
        assert!((r.limit - 11.0 / 3.0).abs() < 1e-12);
        assert!((r.psi - 40.0).abs() < 1e-9);
        // ln T_n(e^{-θ/n}) = -θ E S_n/n + θ² Var S_n/(2n²) + O(n^{-2}); the third
        // cumulant contributes about 1e-4 here.
        let c = sub().model_constants(1e-14);
        let n = 2000.0;
        let cumulant = -expected_s(&c, 2000) / n + r.measured_variance_rate / (2.0 * n);
        assert!((r.laplace.product.ln() - cumulant).abs() < 5e-4, "{r:?} {cumulant}");
        assert!((r.measured_variance_rate - 296.0 / 9.0).abs() < 0.5);
        assert!(lln_clt_constants(&crit(), 10, 1.0).is_err());
    }

    #[test]
    fn expansions() {
        let o = expansion_oracles(&sub(), &[1e-2, 1e-3, 1e-4], 10).unwrap();
        assert!((o.h_first_order[1] - 4.0).abs() < 0.04);
        for e in &o.expansions {
            for p in &e.points {
                assert!(p.residual.abs() < 1.0, "{} {}", e.name, p.theta);
            }
        }
        // Independent second-order coefficient of h(e^θ) - 1: (h''(1) + h'(1))/2
        // with h'(1) = 1/(1-β) = 4 and h''(1) = (2β(1-β) + F''(1))/(1-β)³ = 56.
        let he = &o.expansions[2];
        let last = he.points.last().unwrap();
        // The stated coefficient β(2+γ)/(1-β)² equals h''(1) alone, without the 1/2 or h'(1).
        let stated = 0.75 * (2.0 + 8.0 / 3.0) / 0.0625;
        assert!((last.residual / (last.theta * last.theta) - (30.0 - stated)).abs() < 0.1);
        assert!(expansion_oracles(&crit(), &[1e-3], 5).is_err());
    }
}
