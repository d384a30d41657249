//! Synthetic data from the class of distributions with uniform design on the
//! unit cube, bounded conditional variance and a smooth regression function.

use std::io::Write;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{Rng, StreamSeed};
use crate::smooth_model::SmoothFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NoiseKind {
    Gaussian,
    /// Uniform on `[-sigma sqrt(3), sigma sqrt(3)]`, variance `sigma^2`.
    UniformCentered,
    /// Gaussian with standard deviation `min(sigma * x_1, sigma)`.
    HeteroscedasticCapped,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "uniform_centered" => Ok(Self::UniformCentered),
            "heteroscedastic_capped" => Ok(Self::HeteroscedasticCapped),
            _ => Err(Error::Config(format!("unknown noise kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    pub m: Arc<SmoothFunction>,
    pub noise_sd: f64,
    pub noise_kind: NoiseKind,
}

impl DistributionSpec {
    pub fn new(m: SmoothFunction, noise_sd: f64, noise_kind: NoiseKind) -> Result<Self> {
        if !(noise_sd.is_finite() && noise_sd >= 0.0) {
            return Err(Error::Domain(format!("noise sd {noise_sd} must be >= 0")));
        }
        Ok(Self {
            m: Arc::new(m),
            noise_sd,
            noise_kind,
        })
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// Standard deviation of the noise at `x`; never above `noise_sd`.
    pub fn noise_sd_at(&self, x: &[f64]) -> f64 {
        match self.noise_kind {
            NoiseKind::Gaussian | NoiseKind::UniformCentered => self.noise_sd,
            NoiseKind::HeteroscedasticCapped => (self.noise_sd * x[0]).min(self.noise_sd),
        }
    }

    /// One draw of the noise at `x`: mean zero, variance `noise_sd_at(x)^2`.
    pub fn draw_noise(&self, x: &[f64], rng: &mut Rng) -> f64 {
        let sd = self.noise_sd_at(x);
        if sd == 0.0 {
            return 0.0;
        }
        match self.noise_kind {
            NoiseKind::Gaussian | NoiseKind::HeteroscedasticCapped => {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            }
            NoiseKind::UniformCentered => {
                let u: f64 = rng.random();
                sd * 3f64.sqrt() * (2.0 * u - 1.0)
            }
        }
    }
}

/// `n` covariate/response pairs, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    pub seed: Option<StreamSeed>,
    pub spec_id: String,
}

impl Dataset {
    /// Builds a dataset from explicit rows. Coordinates must lie in `[0,1]`.
    pub fn new(dim: usize, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("dataset dimension must be >= 1".into()));
        }
        if xs.len() != ys.len() * dim {
            return Err(Error::Argument(format!(
                "{} coordinates do not form {} points of dimension {dim}",
                xs.len(),
                ys.len()
            )));
        }
        if xs.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Domain(
                "dataset coordinates must lie in [0,1]".into(),
            ));
        }
        Ok(Self {
            dim,
            xs,
            ys,
            seed: None,
            spec_id: "manual".into(),
        })
    }

    pub fn from_points(points: &[Vec<f64>], ys: Vec<f64>) -> Result<Self> {
        let dim = points.first().map_or(1, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Argument("ragged point list".into()));
        }
        Self::new(dim, points.concat(), ys)
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// CSV with header `x_1,...,x_d,y`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.dim).map(|i| format!("x_{i}")).collect();
        writeln!(w, "{},y", header.join(","))?;
        for i in 0..self.len() {
            for v in self.point(i) {
                write!(w, "{v},")?;
            }
            writeln!(w, "{}", self.ys[i])?;
        }
        Ok(())
    }
}

/// Draws `n` uniform points in `[0,1]^dim`, row-major.
pub fn uniform_points(dim: usize, n: usize, rng: &mut Rng) -> Vec<f64> {
    (0..n * dim).map(|_| rng.random::<f64>()).collect()
}

/// `n` i.i.d. pairs: `X` uniform on the cube, `Y = m(X) + noise`.
pub fn sample(spec: &DistributionSpec, n: usize, seed: impl Into<StreamSeed>) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Argument("sample size must be >= 1".into()));
    }
    let seed = seed.into();
    let mut rng = seed.rng();
    let mut ds = sample_with(spec, n, &mut rng);
    ds.seed = Some(seed);
    Ok(ds)
}

/// As [`sample`] but drawing from a caller-owned generator.
pub fn sample_with(spec: &DistributionSpec, n: usize, rng: &mut Rng) -> Dataset {
    let d = spec.dim();
    let xs = uniform_points(d, n, rng);
    let ys = xs
        .chunks_exact(d)
        .map(|x| spec.m.eval_unchecked(x) + spec.draw_noise(x, rng))
        .collect();
    Dataset {
        dim: d,
        xs,
        ys,
        seed: None,
        spec_id: spec.m.name().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth_model::catalog;
    use crate::stats::ks_uniform;

    fn spec(name: &str, sd: f64, kind: NoiseKind) -> DistributionSpec {
        DistributionSpec::new(catalog::lookup(name).unwrap(), sd, kind).unwrap()
    }

    #[test]
    fn noiseless_matches_regression_function() {
        let s = spec("kink_p1.5_d2", 0.0, NoiseKind::Gaussian);
        let ds = sample(&s, 500, 3).unwrap();
        for i in 0..ds.len() {
            assert_eq!(ds.ys()[i], s.m.eval_unchecked(ds.point(i)));
        }
    }

    #[test]
    fn gaussian_moments() {
        let s = spec("zero_d1", 1.0, NoiseKind::Gaussian);
        let n = 100_000;
        let ds = sample(&s, n, 11).unwrap();
        let mean = ds.ys().iter().sum::<f64>() / n as f64;
        let var = ds.ys().iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn uniform_noise_has_declared_variance() {
        let s = spec("zero_d1", 2.0, NoiseKind::UniformCentered);
        let n = 100_000;
        let ds = sample(&s, n, 12).unwrap();
        let var = ds.ys().iter().map(|y| y * y).sum::<f64>() / n as f64;
        assert!((var - 4.0).abs() < 0.2, "var {var}");
        assert!(ds.ys().iter().all(|y| y.abs() <= 2.0 * 3f64.sqrt()));
    }

    #[test]
    fn heteroscedastic_variance_is_bounded() {
        let s = spec("zero_d2", 1.0, NoiseKind::HeteroscedasticCapped);
        for x in [[0.0, 0.3], [0.5, 0.9], [1.0, 0.0]] {
            assert!(s.noise_sd_at(&x) <= 1.0);
        }
        assert_eq!(s.noise_sd_at(&[0.25, 0.0]), 0.25);
        // E[sigma(X)^2] = E[X_1^2] = 1/3
        let n = 100_000;
        let ds = sample(&s, n, 5).unwrap();
        let var = ds.ys().iter().map(|y| y * y).sum::<f64>() / n as f64;
        assert!((var - 1.0 / 3.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn quadrant_fraction_is_binomial() {
        let s = spec("zero_d2", 0.0, NoiseKind::Gaussian);
        let n = 1_000_000;
        let ds = sample(&s, n, 21).unwrap();
        let hits = (0..n)
            .filter(|&i| ds.point(i).iter().all(|&v| v <= 0.5))
            .count();
        let frac = hits as f64 / n as f64;
        assert!(
            (frac - 0.25).abs() <= 3.0 * (0.25f64 * 0.75 / n as f64).sqrt(),
            "{frac}"
        );
    }

    #[test]
    fn ks_per_axis() {
        let s = spec("zero_d3", 0.0, NoiseKind::Gaussian);
        let n = 100_000;
        let ds = sample(&s, n, 8).unwrap();
        // 1% critical value of the one-sample KS statistic, asymptotic form
        let crit = 1.628 / (n as f64).sqrt();
        for axis in 0..3 {
            let col: Vec<f64> = (0..n).map(|i| ds.point(i)[axis]).collect();
            assert!(ks_uniform(&col) < crit);
        }
    }

    #[test]
    fn reproducible_bytes() {
        let s = spec("sine_p1.5_d2", 0.5, NoiseKind::Gaussian);
        let a = sample(&s, 1000, StreamSeed::new(4, 2)).unwrap();
        let b = sample(&s, 1000, StreamSeed::new(4, 2)).unwrap();
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ca).unwrap();
        b.write_csv(&mut cb).unwrap();
        assert_eq!(ca, cb);
        let c = sample(&s, 1000, StreamSeed::new(4, 3)).unwrap();
        assert_ne!(a.ys(), c.ys());
    }

    #[test]
    fn csv_layout() {
        let ds = Dataset::new(2, vec![0.25, 0.5, 1.0, 0.0], vec![1.5, -2.0]).unwrap();
        let mut out = Vec::new();
        ds.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "x_1,x_2,y\n0.25,0.5,1.5\n1,0,-2\n"
        );
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(2, vec![0.1, 0.2, 0.3], vec![1.0]).is_err());
        assert!(Dataset::new(1, vec![1.5], vec![1.0]).is_err());
        assert!(sample(&spec("zero_d1", 1.0, NoiseKind::Gaussian), 0, 1).is_err());
        assert!(DistributionSpec::new(
            catalog::lookup("zero_d1").unwrap(),
            -1.0,
            NoiseKind::Gaussian
        )
        .is_err());
    }
}
