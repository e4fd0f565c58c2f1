//! Trajectory simulation of Z_n and of the Q-process pair (W_n, S_n), with
//! reducers for empirical distribution checks.
//!
//! Replica r of a run seeded with `seed` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream r, so every replica is
//! a pure function of (seed, r) and results do not depend on scheduling.

use std::ops::Range;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::offspring::OffspringLaw;
use crate::qprocess::{expected_w, QKernel};

pub const DEFAULT_Q_STATE_CAP: u64 = 1_000_000;
pub const MIN_KS_SAMPLES: usize = 1000;
/// Q rows up to this state are sampled from precomputed alias tables.
const ALIAS_ROWS: usize = 256;
/// Above this many parents the offspring total is drawn as a multinomial.
const MULTINOMIAL_FROM: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Gw,
    Q,
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub law: OffspringLaw,
    pub regime: Regime,
    pub horizon: usize,
    pub initial: u64,
    pub replicas: usize,
    pub seed: u64,
    pub state_cap: u64,
    /// Horizons at which (Z) or (W, S) are recorded; always includes `horizon`.
    pub record_at: Vec<usize>,
}

impl SimulationConfig {
    pub fn new(law: OffspringLaw, regime: Regime, horizon: usize, replicas: usize, seed: u64) -> Self {
        Self {
            law,
            regime,
            horizon,
            initial: 1,
            replicas,
            seed,
            state_cap: DEFAULT_Q_STATE_CAP,
            record_at: vec![horizon],
        }
    }

    pub fn record_at(mut self, mut hs: Vec<usize>) -> Self {
        hs.push(self.horizon);
        hs.sort_unstable();
        hs.dedup();
        self.record_at = hs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::Domain("replica count must be at least 1".into()));
        }
        if self.initial == 0 && self.regime == Regime::Q {
            return Err(Error::Domain("Q-process states start at 1".into()));
        }
        if self.state_cap < self.initial.max(1) {
            return Err(Error::Domain("state cap below the initial state".into()));
        }
        if self.record_at.iter().any(|&h| h > self.horizon) {
            return Err(Error::Domain("recording horizon beyond the run horizon".into()));
        }
        Ok(())
    }

    /// Warnings about a cap too close to the expected drift.
    pub fn warnings(&self) -> Vec<String> {
        let c = self.law.model_constants(1e-14);
        let mean = match self.regime {
            Regime::Gw => self.initial as f64 * c.mean.powi(self.horizon as i32),
            Regime::Q => expected_w(&c, self.initial.max(1) as usize, self.horizon),
        };
        if mean > self.state_cap as f64 / 4.0 {
            vec![format!(
                "expected state {mean:.3e} at n = {} exceeds a quarter of the cap {}",
                self.horizon, self.state_cap
            )]
        } else {
            Vec::new()
        }
    }
}

/// The generator of replica `replica`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

fn alias(weights: Vec<f64>) -> Result<WeightedAliasIndex<f64>> {
    WeightedAliasIndex::new(weights).map_err(|e| Error::InvalidLaw(format!("alias table: {e}")))
}

/// Total offspring of `count` independent parents with law `probs`.
fn offspring_total<R: Rng + ?Sized>(
    rng: &mut R,
    count: u64,
    probs: &[f64],
    table: &WeightedAliasIndex<f64>,
) -> u64 {
    if count < MULTINOMIAL_FROM {
        return (0..count).map(|_| table.sample(rng) as u64).sum();
    }
    // Multinomial counts by sequential binomials.
    let mut remaining = count;
    let mut rest = 1.0;
    let mut total = 0;
    let last = probs.len() - 1;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let c = if k == last {
            remaining
        } else {
            let prob = if rest > 0.0 { (p / rest).clamp(0.0, 1.0) } else { 1.0 };
            Binomial::new(remaining, prob).map(|b| b.sample(rng)).unwrap_or(remaining)
        };
        total += k as u64 * c;
        remaining -= c;
        rest -= p;
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GwTrajectory {
    /// Z_0..=Z_n; frozen at the last value if the cap was hit.
    pub z: Vec<u64>,
    pub extinction_time: Option<usize>,
    pub truncated: bool,
}

pub struct GwSimulator {
    probs: Vec<f64>,
    table: WeightedAliasIndex<f64>,
    horizon: usize,
    initial: u64,
    cap: u64,
}

impl GwSimulator {
    pub fn new(config: &SimulationConfig) -> Result<Self> {
        config.validate()?;
        let probs = config.law.probs().to_vec();
        Ok(Self {
            table: alias(probs.clone())?,
            probs,
            horizon: config.horizon,
            initial: config.initial,
            cap: config.state_cap,
        })
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> GwTrajectory {
        let mut z = Vec::with_capacity(self.horizon + 1);
        let mut cur = self.initial;
        z.push(cur);
        let mut extinction_time = (cur == 0).then_some(0);
        let mut truncated = false;
        for n in 1..=self.horizon {
            if cur > 0 && !truncated {
                let next = offspring_total(rng, cur, &self.probs, &self.table);
                if next > self.cap {
                    truncated = true;
                } else {
                    cur = next;
                    if cur == 0 {
                        extinction_time = Some(n);
                    }
                }
            }
            z.push(cur);
        }
        GwTrajectory { z, extinction_time, truncated }
    }
}

pub fn simulate_gw(config: &SimulationConfig, replica: u64) -> Result<GwTrajectory> {
    Ok(GwSimulator::new(config)?.run(&mut replica_rng(config.seed, replica)))
}

/// (W, S) at each recording horizon of one Q-process replica.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QRecord {
    pub replica: u64,
    pub w: Vec<u64>,
    pub s: Vec<u64>,
    /// The state passed the cap; values are frozen from that step on.
    pub overflow: bool,
}

pub struct QSimulator {
    rows: Vec<WeightedAliasIndex<f64>>,
    hat: Vec<f64>,
    hat_table: WeightedAliasIndex<f64>,
    /// Law of X with P(X = k-1) = k p̂_k/β.
    biased: WeightedAliasIndex<f64>,
    record_at: Vec<usize>,
    horizon: usize,
    initial: u64,
    cap: u64,
}

impl QSimulator {
    pub fn new(config: &SimulationConfig) -> Result<Self> {
        config.validate()?;
        let kernel = QKernel::new(&config.law, ALIAS_ROWS)?;
        let rows = (1..=ALIAS_ROWS)
            .map(|i| alias(kernel.row(i).unwrap_or(&[]).to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let hat = kernel.conjugate().probs().to_vec();
        let beta = kernel.constants().beta;
        let biased: Vec<f64> = hat.iter().enumerate().skip(1).map(|(k, &p)| k as f64 * p / beta).collect();
        Ok(Self {
            rows,
            hat_table: alias(hat.clone())?,
            hat,
            biased: alias(biased)?,
            record_at: config.record_at.clone(),
            horizon: config.horizon,
            initial: config.initial,
            cap: config.state_cap,
        })
    }

    /// One draw of W_{k+1} given W_k = w.
    pub fn step<R: Rng + ?Sized>(&self, rng: &mut R, w: u64) -> u64 {
        if (w as usize) <= ALIAS_ROWS {
            self.rows[w as usize - 1].sample(rng) as u64
        } else {
            // s F̂(s)^{w-1} F̂'(s)/β: one marked line plus w-1 ordinary ones.
            let x = self.biased.sample(rng) as u64;
            1 + x + offspring_total(rng, w - 1, &self.hat, &self.hat_table)
        }
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R, replica: u64) -> QRecord {
        let mut w = self.initial;
        let mut s = 0u64;
        let mut overflow = false;
        let mut out_w = Vec::with_capacity(self.record_at.len());
        let mut out_s = Vec::with_capacity(self.record_at.len());
        let mut next_rec = 0;
        for n in 0..=self.horizon {
            while next_rec < self.record_at.len() && self.record_at[next_rec] == n {
                out_w.push(w);
                out_s.push(s);
                next_rec += 1;
            }
            if n == self.horizon {
                break;
            }
            if !overflow {
                s += w;
                let next = self.step(rng, w);
                if next > self.cap {
                    overflow = true;
                } else {
                    w = next;
                }
            }
        }
        QRecord { replica, w: out_w, s: out_s, overflow }
    }
}

pub fn simulate_q(config: &SimulationConfig, replica: u64) -> Result<QRecord> {
    Ok(QSimulator::new(config)?.run(&mut replica_rng(config.seed, replica), replica))
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("BRANCHLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            b = b.num_threads(n);
        }
    }
    b.build().map_err(|e| Error::Unsupported(format!("thread pool: {e}")))
}

#[derive(Debug, Clone, Serialize)]
pub struct GwEnsemble {
    pub seed: u64,
    pub horizon: usize,
    pub trajectories: Vec<GwTrajectory>,
}

pub fn run_gw_ensemble(config: &SimulationConfig) -> Result<GwEnsemble> {
    let sim = GwSimulator::new(config)?;
    let trajectories = thread_pool()?.install(|| {
        (0..config.replicas as u64)
            .into_par_iter()
            .map(|r| sim.run(&mut replica_rng(config.seed, r)))
            .collect()
    });
    Ok(GwEnsemble { seed: config.seed, horizon: config.horizon, trajectories })
}

impl GwEnsemble {
    /// Z_n over replicas, as reals.
    pub fn column(&self, n: usize) -> Vec<f64> {
        self.trajectories.iter().map(|t| t.z[n] as f64).collect()
    }

    pub fn truncated(&self) -> usize {
        self.trajectories.iter().filter(|t| t.truncated).count()
    }

    /// P(Z_n = j) with its binomial standard error.
    pub fn state_probability(&self, n: usize, j: u64) -> Estimate {
        mean_estimate(&self.indicator(|t| t.z[n] == j))
    }

    /// P(H <= n).
    pub fn extinct_by(&self, n: usize) -> Estimate {
        mean_estimate(&self.indicator(|t| t.extinction_time.is_some_and(|h| h <= n)))
    }

    fn indicator(&self, f: impl Fn(&GwTrajectory) -> bool) -> Vec<f64> {
        self.trajectories.iter().map(|t| if f(t) { 1.0 } else { 0.0 }).collect()
    }
}

/// Q-process replicas, kept sorted by replica index so that merging any
/// partition of a run reproduces the single-pass ensemble exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QEnsemble {
    pub seed: u64,
    pub record_at: Vec<usize>,
    pub records: Vec<QRecord>,
}

pub fn run_q_ensemble(config: &SimulationConfig) -> Result<QEnsemble> {
    run_q_replicas(config, 0..config.replicas as u64)
}

pub fn run_q_replicas(config: &SimulationConfig, replicas: Range<u64>) -> Result<QEnsemble> {
    let sim = QSimulator::new(config)?;
    let records = thread_pool()?.install(|| {
        replicas
            .into_par_iter()
            .map(|r| sim.run(&mut replica_rng(config.seed, r), r))
            .collect()
    });
    Ok(QEnsemble { seed: config.seed, record_at: config.record_at.clone(), records })
}

impl QEnsemble {
    pub fn merge(mut self, other: QEnsemble) -> Result<QEnsemble> {
        if self.seed != other.seed || self.record_at != other.record_at {
            return Err(Error::Domain("cannot merge ensembles from different runs".into()));
        }
        self.records.extend(other.records);
        self.records.sort_by_key(|r| r.replica);
        if self.records.windows(2).any(|w| w[0].replica == w[1].replica) {
            return Err(Error::Domain("replica present in both ensembles".into()));
        }
        Ok(self)
    }

    fn slot(&self, horizon: usize) -> Result<usize> {
        self.record_at
            .iter()
            .position(|&h| h == horizon)
            .ok_or_else(|| Error::Domain(format!("horizon {horizon} was not recorded")))
    }

    pub fn w_column(&self, horizon: usize) -> Result<Vec<f64>> {
        let k = self.slot(horizon)?;
        Ok(self.records.iter().map(|r| r.w[k] as f64).collect())
    }

    pub fn s_column(&self, horizon: usize) -> Result<Vec<f64>> {
        let k = self.slot(horizon)?;
        Ok(self.records.iter().map(|r| r.s[k] as f64).collect())
    }

    pub fn overflowed(&self) -> usize {
        self.records.iter().filter(|r| r.overflow).count()
    }

    pub fn stats(&self, horizon: usize, cdf_grid: &[f64]) -> Result<EnsembleStats> {
        let w = self.w_column(horizon)?;
        let s = self.s_column(horizon)?;
        let ww: Vec<f64> = w.iter().map(|x| x * x).collect();
        let ss: Vec<f64> = s.iter().map(|x| x * x).collect();
        let ws: Vec<f64> = w.iter().zip(&s).map(|(a, b)| a * b).collect();
        let m = w.len() as f64;
        let bessel = if m > 1.0 { m / (m - 1.0) } else { f64::NAN };
        let var = |v: &[f64]| bessel * (v[1] - v[0] * v[0]);
        let var_w = jackknife_of_means(&[&w, &ww], |v| var(v));
        let var_s = jackknife_of_means(&[&s, &ss], |v| var(v));
        let cov_ws = jackknife_of_means(&[&w, &s, &ws], |v| bessel * (v[2] - v[0] * v[1]));
        let rho_ws = jackknife_of_means(&[&w, &s, &ww, &ss, &ws], |v| {
            (v[4] - v[0] * v[1]) / ((v[2] - v[0] * v[0]) * (v[3] - v[1] * v[1])).sqrt()
        });
        Ok(EnsembleStats {
            seed: self.seed,
            horizon,
            replicas: w.len(),
            overflowed: self.overflowed(),
            mean_w: mean_estimate(&w),
            mean_s: mean_estimate(&s),
            var_w,
            var_s,
            cov_ws,
            rho_ws,
            cdf_w: empirical_cdf(&w, cdf_grid),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// |value - target| in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.value - target).abs() / self.se
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfPoint {
    pub x: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub seed: u64,
    pub horizon: usize,
    pub replicas: usize,
    pub overflowed: usize,
    pub mean_w: Estimate,
    pub mean_s: Estimate,
    pub var_w: Estimate,
    pub var_s: Estimate,
    pub cov_ws: Estimate,
    pub rho_ws: Estimate,
    pub cdf_w: Vec<CdfPoint>,
}

pub fn mean_estimate(xs: &[f64]) -> Estimate {
    jackknife_of_means(&[xs], |v| v[0])
}

/// Jackknife estimate and standard error of g(mean of each column).
pub fn jackknife_of_means(cols: &[&[f64]], g: impl Fn(&[f64]) -> f64) -> Estimate {
    let m = cols.first().map_or(0, |c| c.len());
    let sums: Vec<f64> = cols.iter().map(|c| c.iter().sum()).collect();
    let means: Vec<f64> = sums.iter().map(|s| s / m as f64).collect();
    let value = g(&means);
    if m < 2 {
        return Estimate { value, se: f64::NAN };
    }
    let mut loo = vec![0.0; cols.len()];
    let thetas: Vec<f64> = (0..m)
        .map(|i| {
            for (k, c) in cols.iter().enumerate() {
                loo[k] = (sums[k] - c[i]) / (m - 1) as f64;
            }
            g(&loo)
        })
        .collect();
    let bar = thetas.iter().sum::<f64>() / m as f64;
    let ss: f64 = thetas.iter().map(|t| (t - bar) * (t - bar)).sum();
    Estimate { value, se: ((m - 1) as f64 / m as f64 * ss).sqrt() }
}

/// Fraction of samples <= x at each grid point.
pub fn empirical_cdf(samples: &[f64], grid: &[f64]) -> Vec<CdfPoint> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len().max(1) as f64;
    grid.iter()
        .map(|&x| CdfPoint { x, f: sorted.partition_point(|&v| v <= x) as f64 / m })
        .collect()
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and a
/// continuous reference CDF, taken over both one-sided limits at every
/// sample point.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.len() < MIN_KS_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_KS_SAMPLES, got: samples.len() });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max((f - i as f64 / m).abs()).max((j as f64 / m - f).abs());
        i = j;
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Laplace,
    Characteristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformValue {
    pub arg: f64,
    pub re: Estimate,
    /// Imaginary part, for characteristic functions.
    pub im: Option<Estimate>,
}

/// (1/m) Σ e^{-θX_i} or (1/m) Σ e^{iθX_i} with jackknife standard errors.
pub fn empirical_transform(samples: &[f64], kind: TransformKind, args: &[f64]) -> Result<Vec<TransformValue>> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    args.iter()
        .map(|&t| match kind {
            TransformKind::Laplace => {
                if t.is_nan() || t < 0.0 {
                    return Err(Error::Domain(format!("Laplace argument {t} must be non-negative")));
                }
                let v: Vec<f64> = samples.iter().map(|x| (-t * x).exp()).collect();
                Ok(TransformValue { arg: t, re: mean_estimate(&v), im: None })
            }
            TransformKind::Characteristic => {
                let c: Vec<f64> = samples.iter().map(|x| (t * x).cos()).collect();
                let s: Vec<f64> = samples.iter().map(|x| (t * x).sin()).collect();
                Ok(TransformValue { arg: t, re: mean_estimate(&c), im: Some(mean_estimate(&s)) })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::fixtures::*;

    #[test]
    fn streams_are_pure_functions_of_seed_and_replica() {
        let mut a = replica_rng(7, 3);
        let mut b = replica_rng(7, 3);
        let mut c = replica_rng(7, 4);
        let (x, y, z): (u64, u64, u64) = (a.random(), b.random(), c.random());
        assert_eq!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn multinomial_total_has_right_mean() {
        let probs = vec![0.2, 0.3, 0.5];
        let table = alias(probs.clone()).unwrap();
        let mut rng = replica_rng(1, 0);
        let m = 4000;
        let count = 500u64;
        let xs: Vec<f64> = (0..m).map(|_| offspring_total(&mut rng, count, &probs, &table) as f64).collect();
        let e = mean_estimate(&xs);
        assert!(e.z_score(1.3 * count as f64) < 4.0, "{e:?}");
        let var = jackknife_of_means(&[&xs, &xs.iter().map(|x| x * x).collect::<Vec<_>>()], |v| v[1] - v[0] * v[0]);
        assert!(var.z_score(0.61 * count as f64) < 4.0, "{var:?}");
    }

    #[test]
    fn q_step_above_alias_rows_matches_kernel_row() {
        let law = sup();
        let cfg = SimulationConfig::new(law.clone(), Regime::Q, 1, 1, 0);
        let sim = QSimulator::new(&cfg).unwrap();
        let w = 300usize;
        let row = QKernel::new(&law, w).unwrap().row(w).unwrap().to_vec();
        let mut rng = replica_rng(5, 0);
        let xs: Vec<u64> = (0..40_000).map(|_| sim.step(&mut rng, w as u64)).collect();
        let mean: f64 = row.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
        let xf: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
        assert!(mean_estimate(&xf).z_score(mean) < 4.0);
        for j in [205, 220, 230, 245] {
            let ind: Vec<f64> = xs.iter().map(|&x| if x as usize <= j { 1.0 } else { 0.0 }).collect();
            let want: f64 = row[..=j].iter().sum();
            assert!(mean_estimate(&ind).z_score(want) < 4.0, "{j}");
        }
    }

    #[test]
    fn s_one_is_w_zero() {
        let cfg = SimulationConfig::new(crit(), Regime::Q, 1, 10, 9);
        let e = run_q_ensemble(&cfg).unwrap();
        assert!(e.records.iter().all(|r| r.s[0] == 1));
    }

    #[test]
    fn jackknife_of_mean_is_the_usual_standard_error() {
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0];
        let e = mean_estimate(&xs);
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
        assert!((e.value - 4.0).abs() < 1e-15);
        assert!((e.se - sd / m.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ks_self_and_shift() {
        let m = 20_000;
        let u: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        let uni = |x: f64| x.clamp(0.0, 1.0);
        assert!(ks_distance(&u, uni).unwrap() < 1e-3);
        let shifted = |x: f64| (x - 0.1).clamp(0.0, 1.0);
        assert!((ks_distance(&u, shifted).unwrap() - 0.1).abs() < 1e-3);
        assert!(matches!(ks_distance(&u[..10], uni), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn transforms_at_zero() {
        let xs = [0.5, 2.0, 7.0];
        let l = empirical_transform(&xs, TransformKind::Laplace, &[0.0]).unwrap();
        assert_eq!(l[0].re.value, 1.0);
        let c = empirical_transform(&xs, TransformKind::Characteristic, &[0.0]).unwrap();
        assert_eq!(c[0].re.value, 1.0);
        assert_eq!(c[0].im.unwrap().value, 0.0);
        assert!(empirical_transform(&xs, TransformKind::Laplace, &[-1.0]).is_err());
    }

    #[test]
    fn cdf_is_monotone() {
        let xs = [3.0, 1.0, 2.0, 2.0];
        let c = empirical_cdf(&xs, &[0.0, 1.0, 2.0, 2.5, 5.0]);
        let f: Vec<f64> = c.iter().map(|p| p.f).collect();
        assert_eq!(f, vec![0.0, 0.25, 0.75, 0.75, 1.0]);
    }

    #[test]
    fn config_checks() {
        assert!(SimulationConfig::new(sub(), Regime::Gw, 5, 0, 1).validate().is_err());
        let mut cfg = SimulationConfig::new(crit(), Regime::Q, 400, 10, 1);
        cfg.state_cap = 300;
        assert_eq!(cfg.warnings().len(), 1);
    }
}
