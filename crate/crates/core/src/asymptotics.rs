//! Beta and Gamma ratios and Monte Carlo nearest-neighbor distance moments.
//!
//! The moment estimators draw a fresh query `X` and design `X_1..X_n` uniform
//! on the cube per replication and order the design with the same tie rule as
//! the estimator.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::geometry::ball_cube_volume;
use crate::knn::brute;
use crate::rng::{Rng, StreamSeed};
use crate::sampler::uniform_points;
use crate::stats::{fit_line, Estimate, LineFit};

/// `B(alpha, beta) = (beta-1)! / (alpha (alpha+1) ... (alpha+beta-1))` for integer `beta`.
///
/// Small cases take the two products directly and divide once; otherwise the
/// value comes from log-Gamma differences.
pub fn beta_fn(alpha: f64, beta: u64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Domain(format!(
            "beta_fn: alpha = {alpha} must be positive"
        )));
    }
    if beta == 0 {
        return Err(Error::Domain("beta_fn: beta must be >= 1".into()));
    }
    if beta <= 170 {
        let num: f64 = (1..beta).map(|j| j as f64).product();
        let den: f64 = (0..beta).map(|j| alpha + j as f64).product();
        if num.is_finite() && den.is_finite() && den > 0.0 {
            return Ok(num / den);
        }
    }
    let b = beta as f64;
    Ok((ln_gamma(alpha) + ln_gamma(b) - ln_gamma(alpha + b)).exp())
}

/// `n! / ((1 + 3/d)(2 + 3/d) ... (n + 3/d))`.
///
/// When `3/d` is an integer `m` the product telescopes to `m! / ((n+1)...(n+m))`
/// and is evaluated exactly in integers; otherwise the log-ratio is summed term
/// by term (or from log-Gamma for very large `n`).
pub fn stirling_ratio(n: u64, d: usize) -> Result<f64> {
    if n == 0 || d == 0 {
        return Err(Error::Domain(
            "stirling_ratio needs n >= 1 and d >= 1".into(),
        ));
    }
    if 3 % d == 0 {
        let m = (3 / d) as u64;
        let den = (1..=m).try_fold(1u128, |acc, j| acc.checked_mul(n as u128 + j as u128));
        if let Some(den) = den {
            let fact: u64 = (1..=m).product();
            return Ok(fact as f64 / den as f64);
        }
    }
    let a = 3.0 / d as f64;
    let log = if n <= 1_000_000 {
        (1..=n).map(|j| (-a / (j as f64 + a)).ln_1p()).sum::<f64>()
    } else {
        ln_gamma(n as f64 + 1.0) + ln_gamma(1.0 + a) - ln_gamma(n as f64 + 1.0 + a)
    };
    Ok(log.exp())
}

/// `Gamma(1 + 3/d)`, the limit of `n^(3/d) * stirling_ratio(n, d)`.
pub fn stirling_limit(d: usize) -> f64 {
    gamma(1.0 + 3.0 / d as f64)
}

/// `(d, gamma, c1)`: twice the largest `value / (k/n)^(2 gamma/d)` seen over
/// `k` from 1 to `n` and `n` up to 8000.
pub const C1_FROZEN: [(usize, f64, f64); 9] = [
    (1, 0.5, 1.0),
    (1, 1.0, 1.05),
    (1, 1.5, 1.65),
    (2, 0.5, 1.1),
    (2, 1.0, 0.75),
    (2, 1.5, 0.65),
    (3, 0.5, 1.35),
    (3, 1.0, 1.0),
    (3, 1.5, 0.85),
];

pub fn frozen_c1(d: usize, gamma: f64) -> Option<f64> {
    C1_FROZEN
        .iter()
        .find(|c| c.0 == d && c.1 == gamma)
        .map(|c| c.2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub gamma: f64,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    /// Mean over replications of `(1/k) sum_i |X_(i) - X|^(2 gamma)`.
    pub value: f64,
    pub stderr: f64,
    /// `(k/n)^(2 gamma / d)`
    pub scale: f64,
}

impl MomentEstimate {
    pub fn ratio(&self) -> f64 {
        self.value / self.scale
    }

    pub fn bound(&self, c1: f64) -> f64 {
        c1 * self.scale
    }
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Argument(format!(
            "need 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    Ok(())
}

fn draw_query(d: usize, rng: &mut Rng) -> Vec<f64> {
    uniform_points(d, 1, rng)
}

/// Monte Carlo estimate of `(1/k) E sum_{i<=k} |X_(i),X - X|^(2 gamma)`.
pub fn nn_moment(
    gamma: f64,
    n: usize,
    k: usize,
    d: usize,
    reps: usize,
    seed: impl Into<StreamSeed>,
) -> Result<MomentEstimate> {
    check_nk(n, k)?;
    if reps < 100 {
        return Err(Error::Argument(format!(
            "nn_moment needs reps >= 100, got {reps}"
        )));
    }
    if gamma.is_nan() || gamma <= 0.0 || d == 0 {
        return Err(Error::Domain("nn_moment needs gamma > 0 and d >= 1".into()));
    }
    let seed = seed.into();
    let per_rep: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seed.child(rep).rng();
            let x = draw_query(d, &mut rng);
            let pts = uniform_points(d, n, &mut rng);
            let nb = brute::k_nearest(&pts, d, &x, k);
            nb.iter().map(|nb| nb.dist2.powf(gamma)).sum::<f64>() / k as f64
        })
        .collect();
    let est = Estimate::from_samples(&per_rep);
    Ok(MomentEstimate {
        gamma,
        n,
        k,
        d,
        value: est.value,
        stderr: est.stderr,
        scale: (k as f64 / n as f64).powf(2.0 * gamma / d as f64),
    })
}

/// The cross-term expectation estimated two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossTerm {
    /// Literal simulation of `E sum_{i != j <= k} (X_(i)^s - X^s)(X_(j)^s - X^s)`.
    pub direct: Estimate,
    /// `C(n,k) (n-k)` times the integral of the same sum over the labelled
    /// region where `x_1..x_k` are the k nearest and `x_{k+1}` is the next one.
    pub conditioned: Estimate,
}

impl CrossTerm {
    pub fn agree(&self, z: f64) -> bool {
        self.direct.agrees_with(&self.conditioned, z)
    }
}

/// `sum_{i != j} a_i a_j = (sum a)^2 - sum a^2`
fn off_diagonal_sum(a: impl Iterator<Item = f64> + Clone) -> f64 {
    let s: f64 = a.clone().sum();
    let s2: f64 = a.map(|v| v * v).sum();
    s * s - s2
}

fn direct_sample(n: usize, k: usize, d: usize, axis: usize, rng: &mut Rng) -> f64 {
    let x = draw_query(d, rng);
    let pts = uniform_points(d, n, rng);
    let nb = brute::k_nearest(&pts, d, &x, k);
    off_diagonal_sum(nb.iter().map(|nb| pts[nb.index * d + axis] - x[axis]))
}

/// One draw of the labelled-region integrand. The `n - k - 1` far points are
/// integrated out exactly: each lies outside `G(x, x_{k+1})` with probability
/// `1 - vol G`.
fn conditioned_sample(
    n: usize,
    k: usize,
    d: usize,
    axis: usize,
    factor: f64,
    rng: &mut Rng,
) -> f64 {
    let x = draw_query(d, rng);
    let pts = uniform_points(d, k + 1, rng);
    let pivot = &pts[k * d..];
    let rho2 = brute::dist2(pivot, &x);
    let near = pts[..k * d]
        .chunks_exact(d)
        .all(|p| brute::dist2(p, &x) < rho2);
    if !near {
        return 0.0;
    }
    let vol = ball_cube_volume(&x, rho2.sqrt()).expect("d <= 3 checked by caller");
    let far = (1.0 - vol).max(0.0).powi((n - k - 1) as i32);
    factor * far * off_diagonal_sum(pts[..k * d].chunks_exact(d).map(|p| p[axis] - x[axis]))
}

/// `n! / (k! (n-k-1)!)`, the number of (near set, pivot) labellings.
fn labelling_count(n: usize, k: usize) -> f64 {
    let ln = ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64);
    ln.exp().round()
}

pub fn cross_term(
    n: usize,
    k: usize,
    d: usize,
    axis: usize,
    reps: usize,
    seed: impl Into<StreamSeed>,
) -> Result<CrossTerm> {
    if k < 2 || k + 1 > n {
        return Err(Error::Argument(format!(
            "cross_term needs 2 <= k <= n-1, got k = {k}, n = {n}"
        )));
    }
    if n > 30 {
        return Err(Error::Argument(format!(
            "cross_term is meant for n <= 30, got {n}"
        )));
    }
    if d == 0 || d > 3 {
        return Err(Error::Unsupported(format!(
            "cross_term needs exact clipped volumes, d = {d} > 3"
        )));
    }
    if axis >= d {
        return Err(Error::Domain(format!(
            "axis {axis} out of range for d = {d}"
        )));
    }
    let seed = seed.into();
    let (sd, sc) = (seed.child(0), seed.child(1));
    let factor = labelling_count(n, k);
    let direct: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| direct_sample(n, k, d, axis, &mut sd.child(r).rng()))
        .collect();
    let conditioned: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| conditioned_sample(n, k, d, axis, factor, &mut sc.child(r).rng()))
        .collect();
    Ok(CrossTerm {
        direct: Estimate::from_samples(&direct),
        conditioned: Estimate::from_samples(&conditioned),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossTermPoint {
    pub n: usize,
    pub k: usize,
    /// `(1/k^2) E sum_s sum_{i != j} (X_(i)^s - X^s)(X_(j)^s - X^s)`
    pub t: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossTermRate {
    pub d: usize,
    pub points: Vec<CrossTermPoint>,
    /// Fit of `log |T|` against `log (k/n)`.
    pub fit: LineFit,
}

pub fn cross_term_rate(
    d: usize,
    schedule: &[(usize, usize)],
    reps: usize,
    seed: impl Into<StreamSeed>,
) -> Result<CrossTermRate> {
    if schedule.len() < 3 {
        return Err(Error::Argument(format!(
            "cross_term_rate needs at least 3 schedule points, got {}",
            schedule.len()
        )));
    }
    if schedule.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Argument(
            "schedule must be sorted by increasing n".into(),
        ));
    }
    if d == 0 {
        return Err(Error::Domain("d must be >= 1".into()));
    }
    let seed = seed.into();
    let mut points = Vec::with_capacity(schedule.len());
    for (idx, &(n, k)) in schedule.iter().enumerate() {
        if k < 2 || k >= n {
            return Err(Error::Argument(format!("need 2 <= k < n, got ({n}, {k})")));
        }
        let s = seed.child(idx as u64);
        let per_rep: Vec<f64> = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = s.child(r).rng();
                let x = draw_query(d, &mut rng);
                let pts = uniform_points(d, n, &mut rng);
                let nb = brute::k_nearest(&pts, d, &x, k);
                let total: f64 = (0..d)
                    .map(|a| off_diagonal_sum(nb.iter().map(|nb| pts[nb.index * d + a] - x[a])))
                    .sum();
                total / (k * k) as f64
            })
            .collect();
        points.push(CrossTermPoint {
            n,
            k,
            t: Estimate::from_samples(&per_rep),
        });
    }
    // |T| below the noise floor would otherwise break the log
    let xs: Vec<f64> = points
        .iter()
        .map(|p| (p.k as f64 / p.n as f64).ln())
        .collect();
    let ys: Vec<f64> = points.iter().map(|p| p.t.value.abs().ln()).collect();
    let fit = fit_line(&xs, &ys)?;
    Ok(CrossTermRate { d, points, fit })
}
