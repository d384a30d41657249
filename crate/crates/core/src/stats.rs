//! Small numerical helpers shared by the Monte Carlo estimators.

use serde::Serialize;

use crate::error::{Error, Result};

/// Pairwise (cascade) summation. Result depends only on the slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean of a sample together with the standard error of that mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }

    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self::exact(0.0);
        }
        if xs.iter().all(|x| *x == xs[0]) {
            return Self::exact(xs[0]);
        }
        let mean = pairwise_sum(xs) / n as f64;
        if n == 1 {
            return Self::exact(mean);
        }
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1) as f64;
        Self {
            value: mean,
            stderr: (var / n as f64).sqrt(),
        }
    }

    /// Multiplies value and standard error by a constant.
    pub fn scale(self, c: f64) -> Self {
        Self {
            value: self.value * c,
            stderr: self.stderr * c.abs(),
        }
    }

    /// `|self - other| <= z * sqrt(se1^2 + se2^2)`
    pub fn agrees_with(&self, other: &Estimate, z: f64) -> bool {
        (self.value - other.value).abs() <= z * self.stderr.hypot(other.stderr)
    }
}

/// Ordinary least squares fit of `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Classical standard error of the slope from the residuals.
    pub slope_stderr: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::Argument(format!(
            "fit_line: {} abscissae but {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::Argument(format!(
            "slope fit needs at least 3 points, got {n}"
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Argument("slope fit on non-finite data".into()));
    }
    let nf = n as f64;
    let mx = pairwise_sum(xs) / nf;
    let my = pairwise_sum(ys) / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("slope fit with all abscissae equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let slope_stderr = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
    })
}

/// Largest gap between the empirical CDF of `xs` and the Uniform(0,1) CDF.
pub fn ks_uniform(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = x - i as f64 / n;
            let hi = (i + 1) as f64 / n - x;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}
