//! Monte Carlo risk of the k-NN estimator, sweeps over `n`, rate fits and the
//! bias/variance probe.

mod config;

use std::io::Write;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

pub use config::{ExperimentConfig, KRule};

use crate::error::{Error, Result};
use crate::knn::{KnnModel, SearchPath};
use crate::rng::StreamSeed;
use crate::sampler::{sample_with, uniform_points, Dataset, DistributionSpec};
use crate::stats::{fit_line, pairwise_sum, Estimate, LineFit};

pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Envelope on `risk / max(term shapes)`: twice the largest ratio seen for the
/// `p = 1.5` kink runs at `sigma = 0.5`, `d = 1, 2`.
pub const BOUND_TRACE_CONST: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub n: usize,
    pub k: usize,
    pub risk: f64,
    pub stderr: f64,
    /// Per-replication risks, in replication order.
    #[serde(skip)]
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    /// `(log n, log risk)`
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Bootstrap over replications.
    pub slope_stderr: f64,
    /// Least-squares standard error of the slope.
    pub ols_stderr: f64,
    pub target: f64,
}

impl RateFit {
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        (lo..=hi).contains(&self.slope)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub risks: Vec<RiskEstimate>,
    /// `None` with fewer than 3 grid points.
    pub fit: Option<RateFit>,
}

impl SweepResult {
    /// Whether the slope lies in the configured band; `None` if either is absent.
    pub fn band_pass(&self) -> Option<bool> {
        let (lo, hi) = self.config.slope_band?;
        Some(self.fit.as_ref()?.within(lo, hi))
    }
}

/// Squared error of a fitted model at fresh uniform query points.
fn replicate(
    spec: &DistributionSpec,
    n: usize,
    k: usize,
    eval: usize,
    path: SearchPath,
    seed: StreamSeed,
) -> Result<f64> {
    let mut rng = seed.rng();
    let data = sample_with(spec, n, &mut rng);
    let model = KnnModel::fit_with(data, path);
    let d = spec.dim();
    let qs = uniform_points(d, eval, &mut rng);
    let errs = qs
        .chunks_exact(d)
        .map(|x| Ok((model.predict(x, k)? - spec.m.eval_unchecked(x)).powi(2)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&errs) / eval as f64)
}

fn risk_with(
    cfg: &ExperimentConfig,
    spec: &DistributionSpec,
    n: usize,
    k: usize,
) -> Result<RiskEstimate> {
    if k == 0 || k > n {
        return Err(Error::Argument(format!("k = {k} infeasible for n = {n}")));
    }
    let base = StreamSeed::new(cfg.master_seed, n as u64);
    let samples = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|r| replicate(spec, n, k, cfg.eval_points, cfg.search, base.child(r)))
        .collect::<Result<Vec<f64>>>()?;
    let est = Estimate::from_samples(&samples);
    Ok(RiskEstimate {
        n,
        k,
        risk: est.value,
        stderr: est.stderr,
        samples,
    })
}

/// Risk at sample size `n` with `k` from the configured rule.
pub fn estimate_risk(cfg: &ExperimentConfig, n: usize) -> Result<RiskEstimate> {
    cfg.validate()?;
    risk_with(cfg, &cfg.distribution()?, n, cfg.k_for(n))
}

/// Risk at sample size `n` with an explicit `k`.
pub fn estimate_risk_k(cfg: &ExperimentConfig, n: usize, k: usize) -> Result<RiskEstimate> {
    cfg.validate()?;
    risk_with(cfg, &cfg.distribution()?, n, k)
}

fn log_points(
    risks: &[RiskEstimate],
    values: impl Fn(&RiskEstimate) -> f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let xs = risks.iter().map(|r| (r.n as f64).ln()).collect();
    let ys = risks
        .iter()
        .map(|r| {
            let v = values(r);
            if v > 0.0 {
                Ok(v.ln())
            } else {
                Err(Error::Argument(format!(
                    "risk at n = {} is {v}; cannot take logs",
                    r.n
                )))
            }
        })
        .collect::<Result<_>>()?;
    Ok((xs, ys))
}

/// Least squares on `(log n, log risk)` with a replication bootstrap for the
/// slope's standard error.
pub fn fit_rate(risks: &[RiskEstimate], target: f64, seed: StreamSeed) -> Result<RateFit> {
    if risks.len() < 3 {
        return Err(Error::Argument(format!(
            "rate fit needs >= 3 points, got {}",
            risks.len()
        )));
    }
    let (xs, ys) = log_points(risks, |r| r.risk)?;
    let fit: LineFit = fit_line(&xs, &ys)?;
    let mut rng = seed.rng();
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut boot = Vec::new();
    for _ in 0..BOOTSTRAP_RESAMPLES {
        boot.clear();
        for r in risks {
            let m = r.samples.len();
            let draw: Vec<f64> = (0..m).map(|_| r.samples[rng.random_range(0..m)]).collect();
            boot.push(pairwise_sum(&draw) / m as f64);
        }
        if boot.iter().all(|v| *v > 0.0) {
            let by: Vec<f64> = boot.iter().map(|v| v.ln()).collect();
            slopes.push(fit_line(&xs, &by)?.slope);
        }
    }
    let slope_stderr = if slopes.len() >= 2 {
        Estimate::from_samples(&slopes).stderr * (slopes.len() as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(RateFit {
        points: xs.into_iter().zip(ys).collect(),
        slope: fit.slope,
        intercept: fit.intercept,
        slope_stderr,
        ols_stderr: fit.slope_stderr,
        target,
    })
}

/// Risk over the whole grid and the fitted rate.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let spec = cfg.distribution()?;
    let risks = cfg
        .n_grid
        .iter()
        .map(|&n| risk_with(cfg, &spec, n, cfg.k_for(n)))
        .collect::<Result<Vec<_>>>()?;
    let fit = if risks.len() >= 3 {
        let seed = StreamSeed::new(cfg.master_seed, u64::MAX);
        Some(fit_rate(&risks, cfg.target_rate(), seed)?)
    } else {
        None
    };
    Ok(SweepResult {
        config: cfg.clone(),
        risks,
        fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasVariance {
    pub k: usize,
    /// `E (m_n(x) - m(x))^2` over response draws.
    pub total: Estimate,
    /// `E (mean of (Y_(i) - m(X_(i))))^2`
    pub variance_term: Estimate,
    /// `(mean of (m(X_(i)) - m(x)))^2`, exact for the fixed design.
    pub bias_sq: f64,
    /// Per-draw `total - variance_term`, whose mean is `bias_sq`.
    pub identity_gap: Estimate,
    /// Mean over the k neighbours of the noise variance at each.
    pub mean_noise_var: f64,
}

impl BiasVariance {
    /// `total = variance_term + bias_sq` within `z` standard errors of the
    /// paired difference.
    pub fn identity_holds(&self, z: f64) -> bool {
        (self.identity_gap.value - self.bias_sq).abs() <= z * self.identity_gap.stderr
            || self.identity_gap.value == self.bias_sq
    }

    /// `variance_term` agrees with `(1/k) * mean noise variance`, which is
    /// `sigma^2 / k` under homoscedastic noise.
    pub fn variance_matches(&self, z: f64) -> bool {
        let v = self.mean_noise_var / self.k as f64;
        (self.variance_term.value - v).abs() <= z * self.variance_term.stderr
            || self.variance_term.value == v
    }
}

/// Bias/variance split at `x` with the design `design` (row-major) held fixed
/// and only the responses redrawn.
pub fn bias_variance_probe(
    design: &[f64],
    spec: &DistributionSpec,
    x: &[f64],
    k: usize,
    reps: usize,
    seed: impl Into<StreamSeed>,
) -> Result<BiasVariance> {
    let d = spec.dim();
    if x.len() != d {
        return Err(Error::Domain(format!(
            "query has {} coordinates, d = {d}",
            x.len()
        )));
    }
    if reps < 2 {
        return Err(Error::Argument(
            "bias_variance_probe needs reps >= 2".into(),
        ));
    }
    let n = design.len() / d.max(1);
    let data = Dataset::new(d, design.to_vec(), vec![0.0; n])?;
    let model = KnnModel::fit_with(data, SearchPath::Brute);
    let near: Vec<&[f64]> = model
        .neighbors(x, k)?
        .neighbors
        .iter()
        .map(|nb| model.data().point(nb.index))
        .collect();
    let mx = spec.m.eval_unchecked(x);
    let mean_m = near.iter().map(|p| spec.m.eval_unchecked(p)).sum::<f64>() / k as f64;
    let bias = mean_m - mx;
    let mean_noise_var = near
        .iter()
        .map(|p| spec.noise_sd_at(p).powi(2))
        .sum::<f64>()
        / k as f64;
    let seed = seed.into();
    let draws: Vec<(f64, f64)> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.child(r).rng();
            let mut ys = 0.0;
            let mut eps = 0.0;
            for p in &near {
                let e = spec.draw_noise(p, &mut rng);
                ys += spec.m.eval_unchecked(p) + e;
                eps += e;
            }
            let total = (ys / k as f64 - mx).powi(2);
            (total, (eps / k as f64).powi(2))
        })
        .collect();
    let totals: Vec<f64> = draws.iter().map(|t| t.0).collect();
    let vars: Vec<f64> = draws.iter().map(|t| t.1).collect();
    let gaps: Vec<f64> = draws.iter().map(|t| t.0 - t.1).collect();
    Ok(BiasVariance {
        k,
        total: Estimate::from_samples(&totals),
        variance_term: Estimate::from_samples(&vars),
        bias_sq: bias * bias,
        identity_gap: Estimate::from_samples(&gaps),
        mean_noise_var,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundTrace {
    pub n: usize,
    pub k: usize,
    pub risk: f64,
    pub stderr: f64,
    /// `sigma^2 / k`
    pub term_variance: f64,
    /// `(k/n)^(2p/d)`
    pub term_bias_p: f64,
    /// `(1/k) (k/n)^(2/d)`
    pub term_mid: f64,
    /// `(k/n)^(3/d)`
    pub term_cross: f64,
}

impl BoundTrace {
    pub fn terms(&self) -> [(&'static str, f64); 4] {
        [
            ("variance", self.term_variance),
            ("bias_p", self.term_bias_p),
            ("mid", self.term_mid),
            ("cross", self.term_cross),
        ]
    }

    pub fn dominant(&self) -> &'static str {
        // first listed wins ties
        self.terms()
            .into_iter()
            .fold(("variance", f64::NEG_INFINITY), |best, t| {
                if t.1 > best.1 {
                    t
                } else {
                    best
                }
            })
            .0
    }

    pub fn max_term(&self) -> f64 {
        self.terms().into_iter().map(|t| t.1).fold(0.0, f64::max)
    }

    pub fn within_envelope(&self) -> bool {
        self.risk <= BOUND_TRACE_CONST * self.max_term()
    }
}

/// The term shapes of the risk bound with unit constants, evaluated at `(n, k)`.
pub fn bound_terms(cfg: &ExperimentConfig, n: usize, k: usize) -> BoundTrace {
    let (nf, kf, d) = (n as f64, k as f64, cfg.d as f64);
    let ratio = kf / nf;
    BoundTrace {
        n,
        k,
        risk: f64::NAN,
        stderr: f64::NAN,
        term_variance: cfg.sigma * cfg.sigma / kf,
        term_bias_p: ratio.powf(2.0 * cfg.p / d),
        term_mid: ratio.powf(2.0 / d) / kf,
        term_cross: ratio.powf(3.0 / d),
    }
}

/// Measured risk beside the four term shapes.
pub fn final_bound_trace(cfg: &ExperimentConfig, n: usize) -> Result<BoundTrace> {
    Ok(trace_of(cfg, &estimate_risk(cfg, n)?))
}

/// Trace row for an already estimated risk.
pub fn trace_of(cfg: &ExperimentConfig, r: &RiskEstimate) -> BoundTrace {
    BoundTrace {
        risk: r.risk,
        stderr: r.stderr,
        ..bound_terms(cfg, r.n, r.k)
    }
}

pub const SWEEP_HEADER: &str = "n,k,risk,stderr,target_rate,slope,slope_stderr";
pub const PLOT_HEADER: &str = "x,y,yerr";
pub const TRACE_HEADER: &str =
    "n,k,risk,stderr,term_variance,term_bias_p,term_mid,term_cross,dominant";

/// One row per grid point; the fit columns repeat and are empty without a fit.
pub fn write_sweep_csv<W: Write>(res: &SweepResult, mut w: W) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    let target = res.config.target_rate();
    let (slope, se) = match &res.fit {
        Some(f) => (f.slope.to_string(), f.slope_stderr.to_string()),
        None => (String::new(), String::new()),
    };
    for r in &res.risks {
        writeln!(
            w,
            "{},{},{},{},{target},{slope},{se}",
            r.n, r.k, r.risk, r.stderr
        )?;
    }
    Ok(())
}

/// `(x, y, yerr)` triplets.
pub fn write_plot_data<W: Write>(points: &[(f64, f64, f64)], mut w: W) -> Result<()> {
    writeln!(w, "{PLOT_HEADER}")?;
    for (x, y, e) in points {
        writeln!(w, "{x},{y},{e}")?;
    }
    Ok(())
}

/// Risk against `n` as plot triplets.
pub fn sweep_plot_points(res: &SweepResult) -> Vec<(f64, f64, f64)> {
    res.risks
        .iter()
        .map(|r| (r.n as f64, r.risk, r.stderr))
        .collect()
}

pub fn write_trace_csv<W: Write>(rows: &[BoundTrace], mut w: W) -> Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for t in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            t.n,
            t.k,
            t.risk,
            t.stderr,
            t.term_variance,
            t.term_bias_p,
            t.term_mid,
            t.term_cross,
            t.dominant()
        )?;
    }
    Ok(())
}
