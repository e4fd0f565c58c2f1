//! The Q-process: the Galton–Watson chain conditioned on never dying out.

use serde::Serialize;

use crate::asymptotics::IntervalConstant;
use crate::error::{Error, Result};
use crate::offspring::{ModelConstants, OffspringLaw};
use crate::series::{iterate_gf, TailMap, TruncatedSeries};

pub const DEFAULT_STATE_CAP: usize = 256;

/// One-step kernel Q_ij(1) = j q^{j-i} P_ij(1)/(iβ) for 1 <= i <= cap.
///
/// Row i is stored over its full support 0..=K i; index 0 is always zero.
#[derive(Debug, Clone)]
pub struct QKernel {
    law: OffspringLaw,
    constants: ModelConstants,
    hat: OffspringLaw,
    cap: usize,
    rows: Vec<Vec<f64>>,
}

impl QKernel {
    pub fn new(law: &OffspringLaw, cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::Domain("state cap must be positive".into()));
        }
        let constants = law.model_constants(1e-14);
        let hat = law.conjugate(constants.q);
        let rows = one_step_rows(&hat, constants.beta, cap);
        Ok(Self { law: law.clone(), constants, hat, cap, rows })
    }

    pub fn law(&self) -> &OffspringLaw {
        &self.law
    }

    pub fn constants(&self) -> &ModelConstants {
        &self.constants
    }

    /// Law of F̂(s) = F(qs)/q.
    pub fn conjugate(&self) -> &OffspringLaw {
        &self.hat
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Q_i·(1) over its full support; `None` above the cap.
    pub fn row(&self, i: usize) -> Option<&[f64]> {
        (i >= 1 && i <= self.cap).then(|| self.rows[i - 1].as_slice())
    }

    pub fn one_step(&self, i: usize, j: usize) -> f64 {
        self.row(i).and_then(|r| r.get(j).copied()).unwrap_or(0.0)
    }

    /// Row mass lost when row i is cut at the state cap.
    pub fn row_tail(&self, i: usize) -> f64 {
        self.row(i)
            .map(|r| r.iter().skip(self.cap + 1).sum())
            .unwrap_or(1.0)
    }

    /// Distribution of W_n given W_0 = i, on states 1..=cap (index 0 unused),
    /// plus the mass that left the capped state space.
    pub fn power_row(&self, i: usize, n: usize) -> Result<(Vec<f64>, f64)> {
        if i == 0 || i > self.cap {
            return Err(Error::Domain(format!("initial state {i} outside 1..={}", self.cap)));
        }
        let mut v = vec![0.0; self.cap + 1];
        v[i] = 1.0;
        let mut lost = 0.0;
        for _ in 0..n {
            let (next, l) = self.step_distribution(&v);
            v = next;
            lost += l;
        }
        Ok((v, lost))
    }

    /// One application of Q(1) to a distribution on 1..=cap.
    pub fn step_distribution(&self, v: &[f64]) -> (Vec<f64>, f64) {
        let mut out = vec![0.0; self.cap + 1];
        let mut lost = 0.0;
        for (i, &w) in v.iter().enumerate().skip(1) {
            if w == 0.0 {
                continue;
            }
            let row = &self.rows[i - 1];
            for (j, &p) in row.iter().enumerate().skip(1) {
                if j <= self.cap {
                    out[j] += w * p;
                } else {
                    lost += w * p;
                }
            }
        }
        (out, lost)
    }
}

fn one_step_rows(hat: &OffspringLaw, beta: f64, cap: usize) -> Vec<Vec<f64>> {
    // Σ_j Q_ij(1) s^j = s F̂(s)^{i-1} F̂'(s)/β
    let k = hat.max_offspring();
    let d: Vec<f64> = (1..=k).map(|m| m as f64 * hat.p(m) / beta).collect();
    let mut pow = vec![1.0];
    let mut rows = Vec::with_capacity(cap);
    for _ in 0..cap {
        let mut row = vec![0.0; pow.len() + d.len()];
        for (a, &x) in pow.iter().enumerate() {
            for (b, &y) in d.iter().enumerate() {
                row[1 + a + b] += x * y;
            }
        }
        rows.push(row);
        let mut next = vec![0.0; pow.len() + k];
        for (a, &x) in pow.iter().enumerate() {
            for (b, &y) in hat.probs().iter().enumerate() {
                next[a + b] += x * y;
            }
        }
        pow = next;
    }
    rows
}

/// Q_ij(n) = j q^{j-i} P_ij(n)/(iβ^n), read off [s^j] F̂_n(s)^i with β^n
/// applied through its logarithm.
pub fn q_transition(kernel: &QKernel, i: usize, j: usize, n: usize, order: usize) -> Result<f64> {
    if i == 0 || j == 0 {
        return Err(Error::Domain("Q-process states start at 1".into()));
    }
    if j > order {
        return Err(Error::BeyondTruncation { index: j, order });
    }
    let c = &kernel.constants;
    let fi = iterate_gf(&kernel.hat, n, order)?.pow(i)?;
    let coef = fi.coeff(j)?;
    Ok(j as f64 / i as f64 * coef * (-(n as f64) * c.beta.ln()).exp())
}

/// The whole row Q_i·(n) for j = 0..=order by the series route.
pub fn q_transition_row(kernel: &QKernel, i: usize, n: usize, order: usize) -> Result<Vec<f64>> {
    let fi = iterate_gf(&kernel.hat, n, order)?.pow(i)?;
    let scale = (-(n as f64) * kernel.constants.beta.ln()).exp() / i as f64;
    Ok(fi.coeffs().iter().enumerate().map(|(j, &c)| j as f64 * c * scale).collect())
}

/// Y_n^{(i)}(s) = F̂_n(s)^{i-1} s F'_n(qs)/β^n.
pub fn y_gf(kernel: &QKernel, i: usize, n: usize, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("s = {s} outside [0, 1]")));
    }
    let map = TailMap::new(&kernel.law);
    Ok(y_gf_with(&map, i, n, s))
}

fn y_gf_with(map: &TailMap<f64>, i: usize, n: usize, s: f64) -> f64 {
    let q = map.q();
    let p = map.at(q * s, n);
    let fhat = 1.0 - p.r / q;
    fhat.powi(i as i32 - 1) * s * p.scaled_slope
}

/// E_i W_n = (i-1)β^n + E W_n.
pub fn expected_w(constants: &ModelConstants, i: usize, n: usize) -> f64 {
    let bn = constants.beta.powi(n as i32);
    let ew = match constants.gamma {
        Some(g) => 1.0 + g * (1.0 - bn),
        None => (constants.alpha - 1.0) * n as f64 + 1.0,
    };
    (i as f64 - 1.0) * bn + ew
}

fn regime_needs_subcritical_beta(c: &ModelConstants, what: &str) -> Result<f64> {
    c.gamma.ok_or_else(|| {
        Error::Regime(format!(
            "{what} requires β < 1 (positive-recurrent Q-process); this law has β = 1"
        ))
    })
}

fn regime_needs_critical(c: &ModelConstants, what: &str) -> Result<()> {
    if c.is_critical() {
        Ok(())
    } else {
        Err(Error::Regime(format!(
            "{what} requires β = 1 (transient Q-process); this law has β = {:.6}",
            c.beta
        )))
    }
}

/// π(s) = s exp{-γ(1-s)/(1 + (γ/2)(1-s))}.
pub fn pi_closed_form(gamma: f64, s: f64) -> f64 {
    let u = 1.0 - s;
    s * (-gamma * u / (1.0 + 0.5 * gamma * u)).exp()
}

/// d/ds of the closed form.
pub fn pi_closed_form_deriv(gamma: f64, s: f64) -> f64 {
    let u = 1.0 - s;
    let den = 1.0 + 0.5 * gamma * u;
    let g = -gamma * u / den;
    let dg_ds = gamma / (den * den);
    g.exp() * (1.0 + s * dg_ds)
}

/// Coefficients π_0..π_order of the closed form.
pub fn pi_closed_form_series(gamma: f64, order: usize) -> Result<Vec<f64>> {
    // exponent -γ(1-s)/(1 + γ/2 - (γ/2)s)
    let num = TruncatedSeries::from_coeffs(vec![-gamma, gamma], order)?;
    let den = TruncatedSeries::from_coeffs(vec![1.0 + 0.5 * gamma, -0.5 * gamma], order)?;
    let e = num.div(&den)?.exp();
    let mut out = vec![0.0; order + 1];
    out[1..].copy_from_slice(&e.coeffs()[..order]);
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct PiLimit {
    pub gamma: f64,
    /// Closed form at the grid points.
    pub grid: Vec<(f64, f64)>,
    /// π_j of the closed form, j = 0..=cap.
    pub pi: Vec<f64>,
    pub pi_sum: f64,
    /// π'(1) from the closed form; compare with 1 + γ.
    pub pi_mean: f64,
    /// e^{-2γ/(2+γ)}, the closed form's π_1.
    pub q11_claim: f64,
    pub n: usize,
    /// Q_11(n) from kernel powers.
    pub q11_kernel: f64,
    /// max_j |π_j - Σ_i π_i Q_ij(m)| over m = 1, 2, 3 for the closed form.
    pub fixed_point_residual: f64,
    /// Stationary law of the capped kernel found by iterating Q(1).
    pub stationary: Vec<f64>,
    /// The same fixed-point residual for `stationary`.
    pub stationary_residual: f64,
    /// max |π(s) - (Y_m(s)/F̂_m(s)) π(F̂_m(s))| over grid and m <= 5.
    pub functional_residual: f64,
    /// Mass lost above the cap while iterating.
    pub lost_mass: f64,
}

pub fn pi_distribution(kernel: &QKernel, s_grid: &[f64], n: usize) -> Result<PiLimit> {
    let c = &kernel.constants;
    let gamma = regime_needs_subcritical_beta(c, "stationary distribution π")?;
    let cap = kernel.cap;
    let pi = pi_closed_form_series(gamma, cap)?;
    let residual_of = |v: &[f64]| -> f64 {
        let mut cur = v.to_vec();
        let mut worst: f64 = 0.0;
        for _ in 1..=3 {
            cur = kernel.step_distribution(&cur).0;
            let r = (1..=cap).map(|j| (cur[j] - v[j]).abs()).fold(0.0, f64::max);
            worst = worst.max(r);
        }
        worst
    };
    let fixed_point_residual = residual_of(&pi);
    let (qn, lost_n) = kernel.power_row(1, n)?;
    let mut stat = vec![0.0; cap + 1];
    stat[1] = 1.0;
    let mut lost_mass = lost_n;
    for _ in 0..100_000 {
        let (next, l) = kernel.step_distribution(&stat);
        let diff = (1..=cap).map(|j| (next[j] - stat[j]).abs()).fold(0.0, f64::max);
        stat = next;
        lost_mass = lost_mass.max(l);
        if diff < 1e-16 {
            break;
        }
    }
    let stationary_residual = residual_of(&stat);
    let map = TailMap::new(&kernel.law);
    let q = c.q;
    let mut functional_residual: f64 = 0.0;
    for &s in s_grid {
        for m in 1..=5 {
            let p = map.at(q * s, m);
            let fhat = 1.0 - p.r / q;
            let y = s * p.scaled_slope;
            let rhs = if fhat == 0.0 { 0.0 } else { y / fhat * pi_closed_form(gamma, fhat) };
            functional_residual = functional_residual.max((pi_closed_form(gamma, s) - rhs).abs());
        }
    }
    Ok(PiLimit {
        gamma,
        grid: s_grid.iter().map(|&s| (s, pi_closed_form(gamma, s))).collect(),
        pi_sum: pi.iter().sum(),
        pi,
        pi_mean: pi_closed_form_deriv(gamma, 1.0),
        q11_claim: (-2.0 * gamma / (2.0 + gamma)).exp(),
        n,
        q11_kernel: qn[1],
        fixed_point_residual,
        stationary: stat,
        stationary_residual,
        functional_residual,
        lost_mass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MuPoint {
    pub s: f64,
    /// n_max² Y_{n_max}(s).
    pub measured: f64,
    /// μ(s) = 2sħ(s)/((α-1)(F(s)-s)) over ħ(s) ∈ [Y(s)/s, 1].
    pub bracket: IntervalConstant,
}

#[derive(Debug, Clone, Serialize)]
pub struct MuLimit {
    pub alpha: f64,
    pub n_max: usize,
    pub points: Vec<MuPoint>,
    /// n² Q_11(n) for the requested horizons.
    pub n2_q11: Vec<(usize, f64)>,
    /// [2Q_11(1), 2]/((α-1)p₀).
    pub n2_q11_bracket: IntervalConstant,
    /// μ_j = n_max² Q_1j(n_max).
    pub mu: Vec<f64>,
    pub cesaro_j: usize,
    /// (μ_1 + ... + μ_J)/J².
    pub cesaro: f64,
    pub cesaro_target: f64,
    /// μ(s)(1-s)² at s = 0.999 bracketed through ħ; target 4/(α-1)².
    pub near_one: IntervalConstant,
    pub near_one_target: f64,
}

/// Bracket for μ(s) coming from ħ(s) ∈ [Y(s)/s, 1].
pub fn mu_bracket(law: &OffspringLaw, c: &ModelConstants, s: f64) -> IntervalConstant {
    let y = s * law.deriv(s) / c.beta;
    let den = (c.alpha - 1.0) * (law.eval(s) - s);
    IntervalConstant::new(2.0 * y / den, 2.0 * s / den)
}

pub fn mu_critical(kernel: &QKernel, s_grid: &[f64], horizons: &[usize], n_max: usize, order: usize) -> Result<MuLimit> {
    let c = &kernel.constants;
    regime_needs_critical(c, "invariant measure μ of the transient Q-process")?;
    let alpha = c.alpha;
    let map = TailMap::new(&kernel.law);
    let n2 = (n_max * n_max) as f64;
    let points = s_grid
        .iter()
        .map(|&s| {
            let measured = n2 * y_gf_with(&map, 1, n_max, s);
            MuPoint { s, measured, bracket: mu_bracket(&kernel.law, c, s).with_estimate(measured) }
        })
        .collect();
    let p0 = kernel.law.p(0);
    let n2_q11_bracket = IntervalConstant::new(
        2.0 * kernel.one_step(1, 1) / ((alpha - 1.0) * p0),
        2.0 / ((alpha - 1.0) * p0),
    );
    let n2_q11 = horizons
        .iter()
        .map(|&n| {
            // Q_11(n) = P_11(n)/β^n = F'_n(0)/β^n
            (n, (n * n) as f64 * map.at(0.0, n).scaled_slope)
        })
        .collect();
    let row = q_transition_row(kernel, 1, n_max, order)?;
    let mu: Vec<f64> = row.iter().map(|&x| n2 * x).collect();
    let cesaro_j = (((alpha - 1.0) * n_max as f64 / 20.0).floor() as usize).clamp(1, order);
    let cesaro = mu[1..=cesaro_j].iter().sum::<f64>() / (cesaro_j * cesaro_j) as f64;
    let s = 0.999;
    let b = mu_bracket(&kernel.law, c, s);
    let w = (1.0 - s) * (1.0 - s);
    Ok(MuLimit {
        alpha,
        n_max,
        points,
        n2_q11,
        n2_q11_bracket,
        mu,
        cesaro_j,
        cesaro,
        cesaro_target: 2.0 / ((alpha - 1.0) * (alpha - 1.0)),
        near_one: IntervalConstant::new(b.lo * w, b.hi * w),
        near_one_target: 4.0 / ((alpha - 1.0) * (alpha - 1.0)),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Upsilon {
    pub n_max: usize,
    /// υ_j = Q_1j(n)/Q_11(n), j = 0..=j_max.
    pub upsilon: Vec<f64>,
    /// max_j |υ_j(i=1) - υ_j(i=2)|.
    pub i_spread: f64,
    /// max_{j<=j_max} |υ_j - Σ_i υ_i Q_ij(1)| relative to υ_j.
    pub invariance_residual: f64,
    /// β < 1: max_j |υ_j e^{-2γ/(2+γ)} - π_j| against the closed-form π.
    pub pi_gap: Option<f64>,
}

pub fn upsilon_measure(kernel: &QKernel, n_max: usize, j_max: usize, order: usize) -> Result<Upsilon> {
    if kernel.law.p(1) == 0.0 {
        return Err(Error::Unsupported("υ needs p_1 != 0".into()));
    }
    let r1 = q_transition_row(kernel, 1, n_max, order)?;
    let r2 = q_transition_row(kernel, 2, n_max, order)?;
    let u1: Vec<f64> = r1.iter().map(|&x| x / r1[1]).collect();
    let u2: Vec<f64> = r2.iter().map(|&x| x / r2[1]).collect();
    let jm = j_max.min(order);
    let i_spread = (1..=jm).map(|j| (u1[j] - u2[j]).abs()).fold(0.0, f64::max);
    let top = order.min(kernel.cap);
    let mut image = vec![0.0; top + 1];
    for (i, &ui) in u1.iter().enumerate().take(top + 1).skip(1) {
        for (j, &qij) in kernel.rows[i - 1].iter().enumerate().take(top + 1) {
            image[j] += ui * qij;
        }
    }
    let invariance_residual = (1..=jm.min(top))
        .map(|j| ((image[j] - u1[j]) / u1[j]).abs())
        .fold(0.0, f64::max);
    let pi_gap = match kernel.constants.gamma {
        Some(g) => {
            let pi = pi_closed_form_series(g, jm)?;
            let e = (-2.0 * g / (2.0 + g)).exp();
            Some((1..=jm).map(|j| (u1[j] * e - pi[j]).abs()).fold(0.0, f64::max))
        }
        None => None,
    };
    let mut upsilon = u1;
    upsilon.truncate(jm + 1);
    upsilon[0] = 0.0;
    Ok(Upsilon { n_max, upsilon, i_spread, invariance_residual, pi_gap })
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub s: f64,
    /// Midpoint of the ħ bracket, used only as the regression reference.
    pub mu_reference_midpoint: f64,
    /// (n, r_n) with r_n = n² Y_n(s)/μ_ref - 1.
    pub points: Vec<(usize, f64)>,
    /// Least-squares fit r_n ≈ a + c ln n / n + d / n.
    pub a: f64,
    pub c: f64,
    pub d: f64,
    pub rms_residual: f64,
    /// Slope of ln|r_n - a| against ln(ln n / n).
    pub log_log_slope: f64,
}

pub fn rate_check(kernel: &QKernel, s: f64, ns: &[usize]) -> Result<RateFit> {
    let c = &kernel.constants;
    regime_needs_critical(c, "rate check of the transient Q-process")?;
    if ns.len() < 4 {
        return Err(Error::Domain("rate fit needs at least four horizons".into()));
    }
    let b = mu_bracket(&kernel.law, c, s);
    let mid = 0.5 * (b.lo + b.hi);
    let map = TailMap::new(&kernel.law);
    let points: Vec<(usize, f64)> = ns
        .iter()
        .map(|&n| (n, (n * n) as f64 * y_gf_with(&map, 1, n, s) / mid - 1.0))
        .collect();
    let rows: Vec<[f64; 3]> = points
        .iter()
        .map(|&(n, _)| {
            let nf = n as f64;
            [1.0, nf.ln() / nf, 1.0 / nf]
        })
        .collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let [a, cc, d] = least_squares3(&rows, &ys);
    let rms = (rows
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (a * x[0] + cc * x[1] + d * x[2])).powi(2))
        .sum::<f64>()
        / ys.len() as f64)
        .sqrt();
    let xs: Vec<f64> = rows.iter().map(|x| x[1].ln()).collect();
    let ls: Vec<f64> = ys.iter().map(|y| (y - a).abs().max(1e-300).ln()).collect();
    Ok(RateFit {
        s,
        mu_reference_midpoint: mid,
        points,
        a,
        c: cc,
        d,
        rms_residual: rms,
        log_log_slope: slope(&xs, &ls),
    })
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Normal equations for three regressors, solved by Cramer's rule.
fn least_squares3(rows: &[[f64; 3]], y: &[f64]) -> [f64; 3] {
    let mut m = [[0.0; 3]; 3];
    let mut v = [0.0; 3];
    for (r, &yy) in rows.iter().zip(y) {
        for a in 0..3 {
            v[a] += r[a] * yy;
            for b in 0..3 {
                m[a][b] += r[a] * r[b];
            }
        }
    }
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for a in 0..3 {
            mk[a][k] = v[a];
        }
        *o = det(&mk) / d;
    }
    out
}
