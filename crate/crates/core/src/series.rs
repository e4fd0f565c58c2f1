//! Truncated power series and the iterates F_n of an offspring GF.

use serde::Serialize;

use crate::dd::{DoubleDouble, Real};
use crate::error::{Error, Result};
use crate::offspring::{Classification, OffspringLaw, CRITICAL_TOL};

pub const MAX_ORDER: usize = 4096;
const MIN_DEFAULT_ORDER: usize = 64;

/// Coefficients a_0..a_N of a power series; terms above N are dropped.
///
/// `tail_bound` is only tracked for probability series and bounds the mass
/// sitting above order N.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
    tail_bound: Option<f64>,
}

fn check_order(n: usize) -> Result<()> {
    if n > MAX_ORDER {
        Err(Error::OrderOverflow { requested: n, limit: MAX_ORDER })
    } else {
        Ok(())
    }
}

/// Default truncation order max(64, K n), capped at 4096.
pub fn default_order(max_offspring: usize, n: usize) -> usize {
    max_offspring.saturating_mul(n).clamp(MIN_DEFAULT_ORDER, MAX_ORDER)
}

impl TruncatedSeries {
    /// Plain series with no tail accounting.
    pub fn from_coeffs(mut coeffs: Vec<f64>, order: usize) -> Result<Self> {
        check_order(order)?;
        coeffs.resize(order + 1, 0.0);
        Ok(Self { coeffs, tail_bound: None })
    }

    /// Probability series; the tail bound is the mass missing from the
    /// retained coefficients.
    pub fn probability(mut coeffs: Vec<f64>, order: usize) -> Result<Self> {
        check_order(order)?;
        let dropped: f64 = coeffs.iter().skip(order + 1).sum();
        coeffs.resize(order + 1, 0.0);
        let mut s = Self { coeffs, tail_bound: None };
        s.tail_bound = Some(if dropped > 0.0 { dropped } else { s.missing_mass() });
        Ok(s)
    }

    pub fn identity(order: usize) -> Result<Self> {
        check_order(order)?;
        let mut coeffs = vec![0.0; order + 1];
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        Ok(Self { coeffs, tail_bound: Some(if order >= 1 { 0.0 } else { 1.0 }) })
    }

    pub fn from_law(law: &OffspringLaw, order: usize) -> Result<Self> {
        Self::probability(law.probs().to_vec(), order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn tail_bound(&self) -> Option<f64> {
        self.tail_bound
    }

    /// Coefficient of s^j; asking past the truncation order is an error.
    pub fn coeff(&self, j: usize) -> Result<f64> {
        self.coeffs
            .get(j)
            .copied()
            .ok_or(Error::BeyondTruncation { index: j, order: self.order() })
    }

    fn missing_mass(&self) -> f64 {
        (1.0 - self.sum()).max(0.0)
    }

    fn with_probability_tail(mut self, probabilistic: bool) -> Self {
        self.tail_bound = probabilistic.then(|| self.missing_mass());
        self
    }

    pub fn sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// Σ j a_j over the retained coefficients.
    pub fn mean(&self) -> f64 {
        self.coeffs.iter().enumerate().map(|(j, a)| j as f64 * a).sum()
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * s + a)
    }

    pub fn eval_deriv(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for (j, &a) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * s + j as f64 * a;
        }
        acc
    }

    /// Truncated Cauchy product to order `order`.
    pub fn mul_to(&self, other: &Self, order: usize) -> Result<Self> {
        check_order(order)?;
        let mut out = vec![0.0; order + 1];
        let da = self.effective_degree();
        let db = other.effective_degree();
        for (i, &a) in self.coeffs.iter().enumerate().take(da.min(order) + 1) {
            if a == 0.0 {
                continue;
            }
            let top = (order - i).min(db);
            for (o, &b) in out[i..=i + top].iter_mut().zip(&other.coeffs[..=top]) {
                *o += a * b;
            }
        }
        let prob = self.tail_bound.is_some() && other.tail_bound.is_some();
        Ok(Self { coeffs: out, tail_bound: None }.with_probability_tail(prob))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.mul_to(other, self.order().min(other.order()))
    }

    fn effective_degree(&self) -> usize {
        self.coeffs.iter().rposition(|&a| a != 0.0).unwrap_or(0)
    }

    /// i-th power by repeated squaring.
    pub fn pow(&self, i: usize) -> Result<Self> {
        let order = self.order();
        let mut result = Self::from_coeffs(vec![1.0], order)?;
        result.tail_bound = self.tail_bound.map(|_| 0.0);
        let mut base = self.clone();
        let mut e = i;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_to(&base, order)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_to(&base, order)?;
            }
        }
        Ok(result)
    }

    /// outer(inner(s)) by Horner's scheme; the result has the inner's order.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self> {
        let order = inner.order();
        let deg = outer.effective_degree();
        let mut acc = vec![0.0; order + 1];
        acc[0] = outer.coeffs[deg];
        let mut tmp = vec![0.0; order + 1];
        let di = inner.effective_degree();
        for k in (0..deg).rev() {
            tmp.iter_mut().for_each(|t| *t = 0.0);
            for (i, &a) in acc.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let top = (order - i).min(di);
                for (t, &b) in tmp[i..=i + top].iter_mut().zip(&inner.coeffs[..=top]) {
                    *t += a * b;
                }
            }
            tmp[0] += outer.coeffs[k];
            std::mem::swap(&mut acc, &mut tmp);
        }
        let prob = outer.tail_bound.is_some() && inner.tail_bound.is_some();
        Ok(Self { coeffs: acc, tail_bound: None }.with_probability_tail(prob))
    }

    /// exp of a series via e_n = (1/n) Σ k g_k e_{n-k}.
    pub fn exp(&self) -> Self {
        let g = &self.coeffs;
        let n = g.len();
        let mut e = vec![0.0; n];
        e[0] = g[0].exp();
        for m in 1..n {
            let s: f64 = (1..=m).map(|k| k as f64 * g[k] * e[m - k]).sum();
            e[m] = s / m as f64;
        }
        Self { coeffs: e, tail_bound: None }
    }

    /// self / other; needs a nonzero constant term in the divisor.
    pub fn div(&self, other: &Self) -> Result<Self> {
        let d0 = other.coeffs[0];
        if d0 == 0.0 {
            return Err(Error::Domain("series division by a series with zero constant term".into()));
        }
        let order = self.order().min(other.order());
        let mut out = vec![0.0; order + 1];
        for m in 0..=order {
            let s: f64 = (1..=m).map(|k| other.coeffs[k] * out[m - k]).sum();
            out[m] = (self.coeffs[m] - s) / d0;
        }
        Ok(Self { coeffs: out, tail_bound: None })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a * c).collect(), tail_bound: None }
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let coeffs = (0..=order).map(|j| self.coeffs[j] + other.coeffs[j]).collect();
        Self { coeffs, tail_bound: None }
    }

    /// Drops tail tracking (e.g. after non-probabilistic arithmetic).
    pub fn plain(mut self) -> Self {
        self.tail_bound = None;
        self
    }
}

/// F_n through order `order`. Coefficients are exact at every order because
/// the outer map is the polynomial F.
pub fn iterate_gf(law: &OffspringLaw, n: usize, order: usize) -> Result<TruncatedSeries> {
    let f = TruncatedSeries::from_law(law, law.max_offspring())?;
    let mut cur = TruncatedSeries::identity(order)?;
    for _ in 0..n {
        cur = TruncatedSeries::compose(&f, &cur)?;
    }
    Ok(cur)
}

/// F_0, F_1, ..., F_n through order `order`.
pub fn iterate_gf_all(law: &OffspringLaw, n: usize, order: usize) -> Result<Vec<TruncatedSeries>> {
    let f = TruncatedSeries::from_law(law, law.max_offspring())?;
    let mut out = Vec::with_capacity(n + 1);
    out.push(TruncatedSeries::identity(order)?);
    for k in 0..n {
        let next = TruncatedSeries::compose(&f, &out[k])?;
        out.push(next);
    }
    Ok(out)
}

/// P_ij(n) = [s^j] F_n(s)^i.
pub fn transition_prob(law: &OffspringLaw, i: usize, j: usize, n: usize, order: usize) -> Result<f64> {
    if i == 0 {
        return Err(Error::Domain("initial state must be at least 1".into()));
    }
    if j > order {
        return Err(Error::BeyondTruncation { index: j, order });
    }
    iterate_gf(law, n, order)?.pow(i)?.coeff(j)
}

/// Local expansion of F around its fixed point q, used to run
/// r -> q - F(q - r) without cancellation.
#[derive(Debug, Clone)]
pub struct TailMap<T> {
    q: T,
    beta: T,
    shape: Shape<T>,
}

#[derive(Debug, Clone)]
enum Shape<T> {
    /// Taylor coefficients c_k = F^{(k)}(q)/k!, k >= 1.
    Poly(Vec<T>),
    Lf { b: T, c: T },
}

/// State after n steps started from s.
#[derive(Debug, Clone, Copy)]
pub struct TailPoint<T> {
    pub n: usize,
    /// R_n(s) = q - F_n(s).
    pub r: T,
    /// R_n(s) / beta^n.
    pub scaled: T,
    /// F'_n(s) / beta^n.
    pub scaled_slope: T,
}

impl TailMap<f64> {
    pub fn new(law: &OffspringLaw) -> Self {
        let q = law.extinction_probability(1e-14);
        let mut c = law.taylor_at(q);
        c.remove(0);
        if law.classification() == Classification::Critical {
            c[0] = 1.0;
        }
        Self { q, beta: c[0], shape: Shape::Poly(c) }
    }

    pub fn linear_fractional(params: &LinearFractionalParams) -> Self {
        let q = params.extinction_probability();
        let beta = if params.is_critical() { 1.0 } else { params.deriv(q) };
        Self { q, beta, shape: Shape::Lf { b: params.b, c: params.c } }
    }
}

impl TailMap<DoubleDouble> {
    /// Same map with q and the Taylor coefficients carried in double-double.
    pub fn extended(law: &OffspringLaw) -> Self {
        let q = law.extinction_probability_dd();
        let mut c = law.taylor_at(q);
        c.remove(0);
        if law.classification() == Classification::Critical {
            c[0] = DoubleDouble::ONE;
        }
        Self { q, beta: c[0], shape: Shape::Poly(c) }
    }
}

impl<T: Real> TailMap<T> {
    pub fn q(&self) -> T {
        self.q
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// (q - F(q - r)) / (beta r) and F'(q - r) / beta.
    pub fn ratios(&self, r: T) -> (T, T) {
        match &self.shape {
            Shape::Poly(c) => {
                let neg = -r;
                let mut fall = T::from(0.0);
                let mut slope = T::from(0.0);
                for (k, &ck) in c.iter().enumerate().rev() {
                    fall = fall * neg + ck;
                    slope = slope * neg + ck * T::from((k + 1) as f64);
                }
                (fall / self.beta, slope / self.beta)
            }
            Shape::Lf { b, c } => {
                let one = T::from(1.0);
                let base = one - *c * self.q;
                let fall = *b / (base * (base + *c * r));
                let d = base + *c * r;
                let slope = *b / (d * d);
                (fall / self.beta, slope / self.beta)
            }
        }
    }

    pub fn start(&self, s: T) -> TailPoint<T> {
        let r = self.q - s;
        TailPoint { n: 0, r, scaled: r, scaled_slope: T::from(1.0) }
    }

    pub fn advance(&self, p: TailPoint<T>) -> TailPoint<T> {
        let (fall, slope) = self.ratios(p.r);
        TailPoint {
            n: p.n + 1,
            r: p.r * fall * self.beta,
            scaled: p.scaled * fall,
            scaled_slope: p.scaled_slope * slope,
        }
    }

    /// Points 0..=n of the trajectory started from s.
    pub fn run(&self, s: T, n: usize) -> Vec<TailPoint<T>> {
        let mut out = Vec::with_capacity(n + 1);
        let mut p = self.start(s);
        out.push(p);
        for _ in 0..n {
            p = self.advance(p);
            out.push(p);
        }
        out
    }

    pub fn at(&self, s: T, n: usize) -> TailPoint<T> {
        let mut p = self.start(s);
        for _ in 0..n {
            p = self.advance(p);
        }
        p
    }
}

impl TailPoint<f64> {
    /// ln F'_n(s).
    pub fn log_slope(&self, beta: f64) -> f64 {
        self.scaled_slope.ln() + self.n as f64 * beta.ln()
    }
}

/// R_n(s) = q - F_n(s).
pub fn r_function(law: &OffspringLaw, n: usize, s: f64) -> f64 {
    TailMap::new(law).at(s, n).r
}

/// R'_n(s) = -F'_n(s), with the chain-rule product formed in log space.
pub fn r_derivative(law: &OffspringLaw, n: usize, s: f64) -> f64 {
    let map = TailMap::new(law);
    -map.at(s, n).log_slope(map.beta()).exp()
}

/// F(s) = p0 + b s / (1 - c s), i.e. p_k = b c^{k-1} for k >= 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFractionalParams {
    pub p0: f64,
    pub b: f64,
    pub c: f64,
}

impl LinearFractionalParams {
    pub fn new(b: f64, c: f64) -> Result<Self> {
        if !(b > 0.0 && b < 1.0 && c > 0.0 && c < 1.0) {
            return Err(Error::InvalidLaw(format!("need b, c in (0,1), got b={b}, c={c}")));
        }
        let p0 = 1.0 - b / (1.0 - c);
        if p0 <= 0.0 {
            return Err(Error::InvalidLaw(format!("b = {b} exceeds 1 - c leaving p0 = {p0}")));
        }
        Ok(Self { p0, b, c })
    }

    pub fn mean(&self) -> f64 {
        self.b / ((1.0 - self.c) * (1.0 - self.c))
    }

    pub fn is_critical(&self) -> bool {
        (self.mean() - 1.0).abs() <= CRITICAL_TOL
    }

    /// F''(1)/2.
    pub fn big_b(&self) -> f64 {
        self.b * self.c / (1.0 - self.c).powi(3)
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.p0 + self.b * s / (1.0 - self.c * s)
    }

    pub fn deriv(&self, s: f64) -> f64 {
        let d = 1.0 - self.c * s;
        self.b / (d * d)
    }

    /// The fixed point other than 1 is p0/c.
    pub fn extinction_probability(&self) -> f64 {
        if self.mean() > 1.0 && !self.is_critical() {
            self.p0 / self.c
        } else {
            1.0
        }
    }

    pub fn to_series(&self, order: usize) -> Result<TruncatedSeries> {
        check_order(order)?;
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = self.p0;
        let mut pk = self.b;
        for c in coeffs.iter_mut().skip(1) {
            *c = pk;
            pk *= self.c;
        }
        let mut s = TruncatedSeries::from_coeffs(coeffs, order)?;
        // Σ_{k>N} b c^{k-1} = b c^N / (1 - c)
        s.tail_bound = Some(self.b * self.c.powi(order as i32) / (1.0 - self.c));
        Ok(s)
    }

    /// F(g(s)) computed by series division, exact through g's order.
    pub fn apply_to_series(&self, g: &TruncatedSeries) -> Result<TruncatedSeries> {
        let mut denom = g.scale(-self.c);
        denom.coeffs[0] += 1.0;
        let mut out = g.scale(self.b).div(&denom)?;
        out.coeffs[0] += self.p0;
        let prob = g.tail_bound.is_some();
        Ok(out.with_probability_tail(prob))
    }

    /// F_n through order `order` by repeated series composition.
    pub fn iterate_series(&self, n: usize, order: usize) -> Result<TruncatedSeries> {
        let mut cur = TruncatedSeries::identity(order)?;
        for _ in 0..n {
            cur = self.apply_to_series(&cur)?;
        }
        Ok(cur)
    }
}

/// Closed-form F_n(s) for a linear-fractional law.
pub fn lf_iterate(params: &LinearFractionalParams, n: usize, s: f64) -> f64 {
    if n == 0 {
        return s;
    }
    if s == 1.0 {
        return 1.0;
    }
    if params.is_critical() {
        let bn = params.big_b() * n as f64;
        return 1.0 - (1.0 - s) / (1.0 + bn * (1.0 - s));
    }
    let m = params.mean();
    let s0 = params.p0 / params.c;
    // (F_n - s0)/(F_n - 1) = m^{-n} (s - s0)/(s - 1) =: k = 1/t
    if m > 1.0 {
        let k = m.powi(-(n as i32)) * (s - s0) / (s - 1.0);
        (s0 - k) / (1.0 - k)
    } else {
        let t = m.powi(n as i32) * (s - 1.0) / (s - s0);
        (s0 * t - 1.0) / (t - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::fixtures::*;

    #[test]
    fn compose_identities() {
        let f = TruncatedSeries::from_law(&crit(), 8).unwrap();
        let id = TruncatedSeries::identity(8).unwrap();
        let a = TruncatedSeries::compose(&f, &id).unwrap();
        let b = TruncatedSeries::compose(&id, &f).unwrap();
        for j in 0..=8 {
            assert!((a.coeff(j).unwrap() - f.coeff(j).unwrap()).abs() < 1e-15);
            assert!((b.coeff(j).unwrap() - f.coeff(j).unwrap()).abs() < 1e-15);
        }
        // F(F(0)) = F(1/4) = 1/4 + 1/8 + 1/64
        let ff = TruncatedSeries::compose(&f, &f).unwrap();
        assert!((ff.coeff(0).unwrap() - 0.390625).abs() < 1e-15);
    }

    #[test]
    fn iterate_small_n() {
        let f0 = iterate_gf(&crit(), 0, 8).unwrap();
        assert_eq!(f0.coeff(1).unwrap(), 1.0);
        assert_eq!(f0.coeff(0).unwrap(), 0.0);
        let f1 = iterate_gf(&crit(), 1, 8).unwrap();
        assert_eq!(&f1.coeffs()[..3], &[0.25, 0.5, 0.25]);
        let f2 = iterate_gf(&crit(), 2, 8).unwrap();
        assert!((f2.coeff(0).unwrap() - 0.390625).abs() < 1e-15);
        assert!(f2.tail_bound().unwrap() < 1e-15);
    }

    #[test]
    fn transition_chapman_kolmogorov() {
        let law = crit();
        let direct = transition_prob(&law, 1, 2, 2, 16).unwrap();
        let brute: f64 = (0..=2)
            .map(|k| {
                let a = transition_prob(&law, 1, k, 1, 16).unwrap();
                let b = if k == 0 { 0.0 } else { transition_prob(&law, k, 2, 1, 16).unwrap() };
                a * b
            })
            .sum();
        assert!((direct - brute).abs() < 1e-15);
        assert_eq!(transition_prob(&law, 3, 3, 0, 8).unwrap(), 1.0);
        assert_eq!(transition_prob(&law, 1, 0, 1, 8).unwrap(), 0.25);
        assert!(matches!(
            transition_prob(&law, 1, 9, 1, 8),
            Err(Error::BeyondTruncation { .. })
        ));
    }

    #[test]
    fn series_arithmetic() {
        // exp(s) coefficients 1/j!
        let g = TruncatedSeries::identity(6).unwrap().plain();
        let e = g.exp();
        let mut fact = 1.0;
        for j in 0..=6 {
            if j > 0 {
                fact *= j as f64;
            }
            assert!((e.coeff(j).unwrap() - 1.0 / fact).abs() < 1e-15);
        }
        // 1/(1-s) = Σ s^j
        let one = TruncatedSeries::from_coeffs(vec![1.0], 6).unwrap();
        let den = TruncatedSeries::from_coeffs(vec![1.0, -1.0], 6).unwrap();
        let q = one.div(&den).unwrap();
        assert!(q.coeffs().iter().all(|&a| (a - 1.0).abs() < 1e-15));
        let sq = den.pow(2).unwrap();
        assert_eq!(&sq.coeffs()[..3], &[1.0, -2.0, 1.0]);
    }

    #[test]
    fn tail_points_fixed_point_and_start() {
        let law = sup();
        let q = law.extinction_probability(1e-14);
        assert_eq!(r_function(&law, 7, q), 0.0);
        assert!((r_function(&law, 0, 0.0) - 0.5).abs() < 1e-15);
        for n in 0..20 {
            let direct = iterate_gf(&law, n, 64).unwrap().eval(0.0);
            assert!((r_function(&law, n, 0.0) - (0.5 - direct)).abs() < 1e-14);
        }
    }

    #[test]
    fn r_derivative_matches_difference() {
        for law in [sub(), crit(), sup()] {
            for &s in &[0.1, 0.4, 0.8] {
                let n = 6;
                let h = 1e-6;
                let fd = (r_function(&law, n, s + h) - r_function(&law, n, s - h)) / (2.0 * h);
                let an = r_derivative(&law, n, s);
                assert!(((fd - an) / an).abs() < 1e-6, "{fd} vs {an}");
            }
        }
    }

    #[test]
    fn critical_lf_tail_is_exact() {
        let p = LinearFractionalParams::new(0.25, 0.5).unwrap();
        assert!(p.is_critical());
        assert!((p.p0 - 0.5).abs() < 1e-15 && (p.big_b() - 1.0).abs() < 1e-15);
        let map = TailMap::linear_fractional(&p);
        for &s in &[0.0, 0.3, 0.9] {
            for n in [1, 10, 100, 1000] {
                let exact = (1.0 - s) / ((1.0 - s) * p.big_b() * n as f64 + 1.0);
                let got = map.at(s, n).r;
                assert!(((got - exact) / exact).abs() < 1e-12);
            }
        }
        for n in 0..50 {
            assert!((lf_iterate(&p, n, 0.0) - n as f64 / (n as f64 + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn lf_closed_form_against_series() {
        for (b, c) in [(0.25, 0.5), (0.2, 0.5), (0.3, 0.5), (0.05, 0.9)] {
            let p = LinearFractionalParams::new(b, c).unwrap();
            let mut cur = TruncatedSeries::identity(512).unwrap();
            for n in 0..=30 {
                for &s in &[0.0, 0.3, 0.7, 0.9] {
                    let err = (cur.eval(s) - lf_iterate(&p, n, s)).abs();
                    assert!(err < 1e-12, "b={b} c={c} n={n} s={s}: {err:e}");
                }
                cur = p.apply_to_series(&cur).unwrap();
            }
        }
    }

    #[test]
    fn default_order_rule() {
        assert_eq!(default_order(2, 3), 64);
        assert_eq!(default_order(3, 100), 300);
        assert_eq!(default_order(5, 10_000), 4096);
        assert!(TruncatedSeries::identity(5000).is_err());
    }
}
