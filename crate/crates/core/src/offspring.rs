//! Offspring law, its generating function and the scalar constants derived
//! from it.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dd::{DoubleDouble, Real};
use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;
const NORMALIZE_TOL: f64 = 1e-9;
/// |A - 1| below this is treated as critical.
pub const CRITICAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Subcritical,
    Critical,
    Supercritical,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Classification::Subcritical => "subcritical",
            Classification::Critical => "critical",
            Classification::Supercritical => "supercritical",
        };
        f.write_str(s)
    }
}

/// Finite offspring distribution p_0..p_K.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffspringLaw {
    p: Vec<f64>,
}

#[derive(Deserialize)]
struct ModelDoc {
    p: Vec<f64>,
}

impl OffspringLaw {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let mut p = probs;
        while p.len() > 1 && p[p.len() - 1] == 0.0 {
            p.pop();
        }
        if p.len() < 2 {
            return Err(Error::InvalidLaw("need at least p_0 and p_1".into()));
        }
        if let Some((k, v)) = p.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidLaw(format!("p_{k} = {v} is not a probability")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidLaw(format!("probabilities sum to {sum}, not 1")));
        }
        if p[0] <= 0.0 {
            return Err(Error::InvalidLaw("p_0 must be positive".into()));
        }
        if p.contains(&1.0) {
            return Err(Error::InvalidLaw("degenerate law with some p_k = 1".into()));
        }
        if p[0] + p[1] >= 1.0 {
            return Err(Error::InvalidLaw("p_0 + p_1 must be below 1".into()));
        }
        Ok(Self { p })
    }

    /// Parses `{"p": [...]}`, renormalizing sums that are off by less than 1e-9.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        let sum: f64 = doc.p.iter().sum();
        if !sum.is_finite() || (sum - 1.0).abs() >= NORMALIZE_TOL {
            return Err(Error::InvalidLaw(format!(
                "probabilities sum to {sum}; refusing to renormalize"
            )));
        }
        if (sum - 1.0).abs() <= SUM_TOL {
            return Self::new(doc.p);
        }
        Self::new(doc.p.into_iter().map(|v| v / sum).collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "p": self.p }).to_string()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn p(&self, k: usize) -> f64 {
        self.p.get(k).copied().unwrap_or(0.0)
    }

    /// Largest offspring count K with p_K > 0.
    pub fn max_offspring(&self) -> usize {
        self.p.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.p.iter().enumerate().map(|(k, v)| k as f64 * v).sum()
    }

    /// F^{(order)}(s) for s in [0,1] and order in 0..=3.
    pub fn gf_eval(&self, s: f64, order: usize) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(format!("s = {s} outside [0, 1]")));
        }
        if order > 3 {
            return Err(Error::Domain(format!("derivative order {order} not in 0..=3")));
        }
        Ok(self.derivative(s, order))
    }

    /// Unchecked k-th derivative; valid for any real s.
    pub fn derivative(&self, s: f64, order: usize) -> f64 {
        let mut acc = 0.0;
        for k in (order..self.p.len()).rev() {
            acc = acc * s + self.p[k] * falling(k, order);
        }
        acc
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.derivative(s, 0)
    }

    pub fn deriv(&self, s: f64) -> f64 {
        self.derivative(s, 1)
    }

    /// Taylor coefficients c_k = F^{(k)}(x)/k!, k = 0..=K.
    pub fn taylor_at<T: Real>(&self, x: T) -> Vec<T> {
        // Repeated synthetic division by (s - x).
        let mut a: Vec<T> = self.p.iter().map(|&v| T::from(v)).collect();
        let n = a.len();
        let mut out = Vec::with_capacity(n);
        for m in 0..n {
            for k in (m + 1..n).rev() {
                a[k - 1] = a[k - 1] + x * a[k];
            }
            out.push(a[m]);
        }
        out
    }

    pub fn classification(&self) -> Classification {
        let a = self.mean();
        if (a - 1.0).abs() <= CRITICAL_TOL {
            Classification::Critical
        } else if a < 1.0 {
            Classification::Subcritical
        } else {
            Classification::Supercritical
        }
    }

    /// Least root of F(q) = q on [0,1].
    pub fn extinction_probability(&self, tol: f64) -> f64 {
        if self.classification() != Classification::Supercritical {
            return 1.0;
        }
        // G(s) = F(s) - s is convex with G(0) > 0, G(1) = 0, G'(1) > 0; its
        // minimizer s* separates the two roots.
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if self.deriv(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s_star = lo;
        let g = |s: f64| self.eval(s) - s;
        let (mut lo, mut hi) = (0.0_f64, s_star);
        while hi - lo > 1e-14 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut q = 0.5 * (lo + hi);
        for _ in 0..2 {
            let d = self.deriv(q) - 1.0;
            if d < 0.0 {
                let next = q - g(q) / d;
                if (0.0..s_star).contains(&next) && g(next).abs() <= g(q).abs() {
                    q = next;
                }
            }
        }
        debug_assert!(g(q).abs() < tol.max(1e-15));
        q
    }

    /// Extinction probability polished by a Newton step in double-double.
    pub fn extinction_probability_dd(&self) -> DoubleDouble {
        let q0 = self.extinction_probability(1e-15);
        if q0 == 1.0 {
            return DoubleDouble::ONE;
        }
        let mut q = DoubleDouble::from(q0);
        for _ in 0..2 {
            let c = self.taylor_at(q);
            let g = c[0] - q;
            let d = c[1] - DoubleDouble::ONE;
            q = q - g / d;
        }
        q
    }

    /// Law of the conjugate GF F̂(s) = F(qs)/q.
    pub fn conjugate(&self, q: f64) -> OffspringLaw {
        let mut pk = q.recip();
        let p = self
            .p
            .iter()
            .map(|&v| {
                let out = v * pk;
                pk *= q;
                out
            })
            .collect();
        OffspringLaw { p }
    }

    pub fn model_constants(&self, tol: f64) -> ModelConstants {
        ModelConstants::compute(self, tol)
    }
}

fn falling(k: usize, order: usize) -> f64 {
    (0..order).map(|i| (k - i) as f64).product()
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelConstants {
    /// Mean offspring A.
    #[serde(rename = "A")]
    pub mean: f64,
    pub q: f64,
    /// F'(q); exactly 1 for critical laws.
    pub beta: f64,
    /// F''(1)/2.
    #[serde(rename = "B")]
    pub big_b: f64,
    /// F''(1) for the conjugate, i.e. q F''(q).
    pub b: f64,
    pub alpha: f64,
    /// (alpha - 1)/(1 - beta), absent when beta = 1.
    pub gamma: Option<f64>,
    /// gamma (1 + beta (1 + gamma)) / (1 - beta).
    pub psi: Option<f64>,
    /// F'''(1).
    #[serde(rename = "C")]
    pub big_c: f64,
    pub classification: Classification,
}

impl ModelConstants {
    fn compute(law: &OffspringLaw, tol: f64) -> Self {
        let classification = law.classification();
        let q = law.extinction_probability(tol);
        let beta = if classification == Classification::Critical {
            1.0
        } else {
            law.deriv(q)
        };
        let b = q * law.derivative(q, 2);
        let alpha = 1.0 + b / beta;
        let gamma = (beta < 1.0).then(|| (alpha - 1.0) / (1.0 - beta));
        let psi = gamma.map(|g| g * (1.0 + beta * (1.0 + g)) / (1.0 - beta));
        Self {
            mean: law.mean(),
            q,
            beta,
            big_b: law.derivative(1.0, 2) / 2.0,
            b,
            alpha,
            gamma,
            psi,
            big_c: law.derivative(1.0, 3),
            classification,
        }
    }

    pub fn is_critical(&self) -> bool {
        self.classification == Classification::Critical
    }

    pub fn gamma(&self) -> Result<f64> {
        self.gamma
            .ok_or_else(|| Error::Regime("gamma is undefined when beta = 1".into()))
    }

    /// Decay parameter R = |ln beta|.
    pub fn decay_parameter(&self) -> f64 {
        -self.beta.ln()
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::OffspringLaw;

    pub fn sub() -> OffspringLaw {
        OffspringLaw::new(vec![0.5, 0.25, 0.25]).unwrap()
    }
    pub fn crit() -> OffspringLaw {
        OffspringLaw::new(vec![0.25, 0.5, 0.25]).unwrap()
    }
    pub fn sup() -> OffspringLaw {
        OffspringLaw::new(vec![0.25, 0.25, 0.5]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn gf_values() {
        assert_eq!(crit().gf_eval(1.0, 0).unwrap(), 1.0);
        assert!((crit().gf_eval(1.0, 2).unwrap() - 0.5).abs() < 1e-15);
        assert!((sup().gf_eval(0.5, 1).unwrap() - 0.75).abs() < 1e-15);
        assert!(crit().gf_eval(1.2, 0).is_err());
        assert!(crit().gf_eval(0.5, 4).is_err());
    }

    #[test]
    fn rejects_bad_laws() {
        assert!(OffspringLaw::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(OffspringLaw::new(vec![0.5, 0.5]).is_err());
        assert!(OffspringLaw::new(vec![0.5, 0.25, 0.2]).is_err());
        assert!(OffspringLaw::new(vec![0.5, -0.25, 0.75]).is_err());
        assert!(OffspringLaw::from_json_str(r#"{"p":[0.5,0.25,0.25000000001]}"#).is_ok());
        assert!(OffspringLaw::from_json_str(r#"{"p":[0.5,0.25,0.26]}"#).is_err());
        assert!(OffspringLaw::from_json_str(r#"{"q":[0.5]}"#).is_err());
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let law = OffspringLaw::new(vec![0.5, 0.25, 0.25, 0.0]).unwrap();
        assert_eq!(law.max_offspring(), 2);
        assert_eq!(law.hash(), sub().hash());
    }

    #[test]
    fn extinction() {
        assert_eq!(crit().extinction_probability(1e-14), 1.0);
        assert_eq!(sub().extinction_probability(1e-14), 1.0);
        let q = sup().extinction_probability(1e-14);
        assert!((q - 0.5).abs() < 1e-15, "q = {q}");
        let qd = sup().extinction_probability_dd();
        assert!((qd - DoubleDouble::from(0.5)).abs().to_f64() < 1e-30);
        // 0.2 + 0.3 s + 0.5 s^3: roots of 0.5 q^2 + 0.5 q - 0.2 = 0 besides 1
        let law = OffspringLaw::new(vec![0.2, 0.3, 0.0, 0.5]).unwrap();
        let expect = (-0.5 + (0.25f64 + 0.4).sqrt()) / 1.0;
        assert!((law.extinction_probability(1e-14) - expect).abs() < 1e-14);
    }

    #[test]
    fn constants() {
        let c = sub().model_constants(1e-14);
        assert!((c.beta - 0.75).abs() < 1e-15);
        assert!((c.alpha - 5.0 / 3.0).abs() < 1e-14);
        assert!((c.gamma.unwrap() - 8.0 / 3.0).abs() < 1e-13);
        assert!((c.psi.unwrap() - 40.0).abs() < 1e-11);
        assert_eq!(c.classification, Classification::Subcritical);

        let c = crit().model_constants(1e-14);
        assert_eq!(c.beta, 1.0);
        assert!((c.big_b - 0.25).abs() < 1e-15);
        assert!((c.alpha - 1.5).abs() < 1e-15);
        assert!(c.gamma.is_none() && c.gamma().is_err());

        let c = sup().model_constants(1e-14);
        assert!((c.q - 0.5).abs() < 1e-15);
        assert!((c.beta - 0.75).abs() < 1e-14);
        assert!((c.decay_parameter() - 0.287_682_072_451_780_9).abs() < 1e-12);
    }

    #[test]
    fn taylor_matches_derivatives() {
        let law = OffspringLaw::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let c = law.taylor_at(0.7_f64);
        let fact = [1.0, 1.0, 2.0, 6.0];
        for k in 0..4 {
            assert!((c[k] - law.derivative(0.7, k) / fact[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn conjugate_is_subcritical_law() {
        let hat = sup().conjugate(0.5);
        assert!((hat.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((hat.mean() - 0.75).abs() < 1e-15);
    }
}
