//! Hölder smoothness classes and a catalog of test regression functions.
//!
//! A function is `(p, C)`-smooth when, writing `p = q + r` with integer
//! `q >= 0` and `0 < r <= 1`, every order-`q` partial derivative is Hölder
//! continuous with exponent `r` and constant `C`. The catalog only needs
//! `q <= 1` (`0 < p <= 2`); every entry carries an analytic Hölder constant
//! that [`certify_holder`] checks by sampling.

use std::f64::consts::PI;

use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::StreamSeed;

/// Points may sit this far outside the unit cube and still count as inside.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Relative slack applied to the declared Hölder constant when certifying.
pub const HOLDER_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothnessClass {
    pub p: f64,
    pub c: f64,
    pub q: u32,
    pub r: f64,
}

impl SmoothnessClass {
    pub fn new(p: f64, c: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::Domain(format!(
                "smoothness order p = {p} must be positive"
            )));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Domain(format!(
                "Hölder constant C = {c} must be positive"
            )));
        }
        // p = q + r with 0 < r <= 1
        let q = p.ceil() - 1.0;
        let r = p - q;
        Ok(Self {
            p,
            c,
            q: q as u32,
            r,
        })
    }

    /// True for the range `1 < p <= 1.5` covered by the k-NN rate theorem.
    pub fn in_theorem_range(&self) -> bool {
        self.p > 1.0 && self.p <= 1.5
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Shape {
    Constant {
        value: f64,
    },
    /// `sum_s a_s |x_s - c_s|^exponent`
    Kink {
        weights: Vec<f64>,
        centers: Vec<f64>,
        exponent: f64,
    },
    /// `sin(sum_s w_s x_s)`
    Sine {
        freqs: Vec<f64>,
    },
    /// `prod_s x_s`
    Product,
}

/// A regression function on `[0,1]^d` with analytic first partials and a
/// smoothness certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothFunction {
    name: String,
    dim: usize,
    shape: Shape,
    smoothness: SmoothnessClass,
    grad_bound: f64,
}

impl SmoothFunction {
    /// The constant function. Every positive `C` is a valid Hölder constant.
    pub fn constant(dim: usize, value: f64, p: f64) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            name: format!("constant_p{p}_d{dim}"),
            dim,
            shape: Shape::Constant { value },
            smoothness: SmoothnessClass::new(p, 1.0)?,
            grad_bound: 0.0,
        })
    }

    /// `sum_s a |x_s - 0.5|^p`, which is exactly `(p, C)`-smooth and no smoother.
    pub fn kink(dim: usize, p: f64, weight: f64) -> Result<Self> {
        Self::kink_with(vec![weight; dim], vec![0.5; dim], p)
    }

    pub fn kink_with(weights: Vec<f64>, centers: Vec<f64>, p: f64) -> Result<Self> {
        let dim = weights.len();
        check_dim(dim)?;
        if centers.len() != dim {
            return Err(Error::Argument(
                "kink: weights and centers differ in length".into(),
            ));
        }
        if !(p > 0.0 && p <= 2.0) {
            return Err(Error::Unsupported(format!(
                "kink exponent {p} outside (0, 2]"
            )));
        }
        if centers.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Domain("kink centers must lie in [0, 1]".into()));
        }
        let a_max = weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let reach = centers.iter().fold(0.0f64, |m, &c| m.max(c.max(1.0 - c)));
        let c = if p <= 1.0 {
            // ||a|^p - |b|^p| <= |a-b|^p, then the power-mean inequality across axes
            a_max * (dim as f64).powf(1.0 - p / 2.0)
        } else {
            // sign(t)|t|^r is r-Hölder with constant 2^(1-r); worst pair straddles the kink
            a_max * p * 2f64.powf(2.0 - p)
        };
        Ok(Self {
            name: format!("kink_p{p}_d{dim}"),
            dim,
            smoothness: SmoothnessClass::new(p, positive_or_one(c))?,
            grad_bound: a_max * p * reach.powf(p - 1.0),
            shape: Shape::Kink {
                weights,
                centers,
                exponent: p,
            },
        })
    }

    /// `sin(w . x)`, a C-infinity function certified at order `p <= 2`.
    pub fn sine(freqs: Vec<f64>, p: f64) -> Result<Self> {
        let dim = freqs.len();
        check_dim(dim)?;
        check_order(p)?;
        let norm = freqs.iter().map(|w| w * w).sum::<f64>().sqrt();
        let w_max = freqs.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let diam = (dim as f64).sqrt();
        // min(A*delta, B) <= A^r * min(B, A*diam)^(1-r) * delta^r on the cube
        let (lip, range) = if p <= 1.0 {
            (norm, 2.0)
        } else {
            (w_max * norm, 2.0 * w_max)
        };
        let r = SmoothnessClass::new(p, 1.0)?.r;
        let c = lip.powf(r) * range.min(lip * diam).powf(1.0 - r);
        Ok(Self {
            name: format!("sine_p{p}_d{dim}"),
            dim,
            shape: Shape::Sine { freqs },
            smoothness: SmoothnessClass::new(p, positive_or_one(c))?,
            grad_bound: w_max,
        })
    }

    /// `prod_s x_s`.
    pub fn product(dim: usize, p: f64) -> Result<Self> {
        check_dim(dim)?;
        check_order(p)?;
        let d = dim as f64;
        let r = SmoothnessClass::new(p, 1.0)?.r;
        let diam = d.sqrt();
        // q = 0: Lipschitz sqrt(d), range 1.  q = 1: partials Lipschitz sqrt(d-1), range 1.
        let lip = if p <= 1.0 { d.sqrt() } else { (d - 1.0).sqrt() };
        let c = lip.powf(r) * 1f64.min(lip * diam).powf(1.0 - r);
        Ok(Self {
            name: format!("product_p{p}_d{dim}"),
            dim,
            shape: Shape::Product,
            smoothness: SmoothnessClass::new(p, positive_or_one(c))?,
            grad_bound: 1.0,
        })
    }

    /// Replaces the declared Hölder constant (e.g. to test certification failure).
    pub fn with_holder_constant(mut self, c: f64) -> Result<Self> {
        self.smoothness = SmoothnessClass::new(self.smoothness.p, c)?;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn smoothness(&self) -> SmoothnessClass {
        self.smoothness
    }

    /// Upper bound on `|m_s(x)|` over all axes and all of the cube.
    pub fn grad_bound(&self) -> f64 {
        self.grad_bound
    }

    /// `m(x)` with domain checks.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    /// `m(x)` without domain checks, for hot loops over points already known
    /// to be in the cube.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Constant { value } => *value,
            Shape::Kink {
                weights,
                centers,
                exponent,
            } => x
                .iter()
                .zip(weights.iter().zip(centers))
                .map(|(xi, (a, c))| a * (xi - c).abs().powf(*exponent))
                .sum(),
            Shape::Sine { freqs } => dot(freqs, x).sin(),
            Shape::Product => x.iter().product(),
        }
    }

    /// Analytic partial derivative along `axis` (zero based).
    pub fn partial(&self, axis: usize, x: &[f64]) -> Result<f64> {
        if self.smoothness.q == 0 {
            return Err(Error::Unsupported(format!(
                "{} has q = 0; partial derivatives are not part of its certificate",
                self.name
            )));
        }
        if axis >= self.dim {
            return Err(Error::Domain(format!(
                "axis {axis} out of range for dimension {}",
                self.dim
            )));
        }
        self.check_point(x)?;
        Ok(self.partial_unchecked(axis, x))
    }

    fn partial_unchecked(&self, axis: usize, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Constant { .. } => 0.0,
            Shape::Kink {
                weights,
                centers,
                exponent,
            } => {
                let t = x[axis] - centers[axis];
                weights[axis] * exponent * t.signum() * t.abs().powf(exponent - 1.0)
            }
            Shape::Sine { freqs } => freqs[axis] * dot(freqs, x).cos(),
            Shape::Product => x
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != axis)
                .map(|(_, v)| v)
                .product(),
        }
    }

    /// Order-`q` derivatives entering the Hölder condition at `x`.
    fn holder_derivatives(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        if self.smoothness.q == 0 {
            out.push(self.eval_unchecked(x));
        } else {
            out.extend((0..self.dim).map(|s| self.partial_unchecked(s, x)));
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Domain(format!(
                "point has {} coordinates, function has dimension {}",
                x.len(),
                self.dim
            )));
        }
        if x.iter()
            .any(|v| !(*v >= -BOUNDARY_TOL && *v <= 1.0 + BOUNDARY_TOL))
        {
            return Err(Error::Domain(format!(
                "point {x:?} outside [0,1]^{}",
                self.dim
            )));
        }
        Ok(())
    }

    /// Positions of the non-smooth loci along `axis`, if any.
    pub fn kink_loci(&self, axis: usize) -> Option<f64> {
        match &self.shape {
            Shape::Kink { centers, .. } => centers.get(axis).copied(),
            _ => None,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn positive_or_one(c: f64) -> f64 {
    if c > 0.0 {
        c
    } else {
        1.0
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    Ok(())
}

fn check_order(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 2.0) {
        return Err(Error::Unsupported(format!(
            "smoothness order {p} outside (0, 2]; only q <= 1 is implemented"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderCertificate {
    pub max_ratio: f64,
    pub pass: bool,
}

/// Sampled Hölder check: the largest `|d^q m(x) - d^q m(z)| / ||x - z||^r`
/// over `samples` uniform pairs, passing when it stays below `C (1 + 1e-9)`.
pub fn certify_holder(
    f: &SmoothFunction,
    samples: usize,
    seed: impl Into<StreamSeed>,
) -> Result<HolderCertificate> {
    if samples < 2 {
        return Err(Error::Argument(format!(
            "certify_holder needs >= 2 samples, got {samples}"
        )));
    }
    let mut rng = seed.into().rng();
    let d = f.dim();
    let r = f.smoothness().r;
    let (mut x, mut z) = (vec![0.0; d], vec![0.0; d]);
    let (mut dx, mut dz) = (Vec::new(), Vec::new());
    let mut max_ratio = 0.0f64;
    for _ in 0..samples {
        x.iter_mut().for_each(|v| *v = rng.random());
        z.iter_mut().for_each(|v| *v = rng.random());
        let dist = x
            .iter()
            .zip(&z)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if dist == 0.0 {
            continue;
        }
        f.holder_derivatives(&x, &mut dx);
        f.holder_derivatives(&z, &mut dz);
        let denom = dist.powf(r);
        for (a, b) in dx.iter().zip(&dz) {
            max_ratio = max_ratio.max((a - b).abs() / denom);
        }
    }
    Ok(HolderCertificate {
        max_ratio,
        pass: max_ratio <= f.smoothness().c * (1.0 + HOLDER_SLACK),
    })
}

/// Named catalog entries, e.g. `kink_p1.5_d1`, `sine_p1.5_d2`, `product_p1_d3`,
/// `constant_d2`, `zero_d1`.
pub mod catalog {
    use super::*;

    /// Canonical entries, used for enumeration in tests and by the CLI.
    pub fn names() -> Vec<String> {
        let mut out = Vec::new();
        for d in [1, 2, 3] {
            out.push(format!("zero_d{d}"));
            out.push(format!("constant_d{d}"));
            for p in ["1", "1.25", "1.5"] {
                out.push(format!("kink_p{p}_d{d}"));
                out.push(format!("sine_p{p}_d{d}"));
            }
        }
        out.push("kink_p0.5_d2".into());
        out.push("product_p1.5_d2".into());
        out.push("product_p1_d3".into());
        out
    }

    pub fn lookup(name: &str) -> Result<SmoothFunction> {
        let mut parts = name.split('_');
        let family = parts.next().unwrap_or_default();
        let (mut p, mut d) = (None, None);
        for tok in parts {
            let bad = || Error::Config(format!("catalog name {name:?}: bad token {tok:?}"));
            if let Some(v) = tok.strip_prefix('p') {
                p = Some(v.parse::<f64>().map_err(|_| bad())?);
            } else if let Some(v) = tok.strip_prefix('d') {
                d = Some(v.parse::<usize>().map_err(|_| bad())?);
            } else {
                return Err(bad());
            }
        }
        let d = d.ok_or_else(|| Error::Config(format!("catalog name {name:?} lacks _d<dim>")))?;
        let need_p =
            || p.ok_or_else(|| Error::Config(format!("catalog name {name:?} lacks _p<order>")));
        let f = match family {
            "zero" => SmoothFunction::constant(d, 0.0, p.unwrap_or(1.5)),
            "constant" => SmoothFunction::constant(d, 1.0, p.unwrap_or(1.5)),
            "kink" => SmoothFunction::kink(d, need_p()?, 1.0),
            "sine" => SmoothFunction::sine(vec![PI; d], need_p()?),
            "product" => SmoothFunction::product(d, need_p()?),
            _ => return Err(Error::Config(format!("unknown catalog family in {name:?}"))),
        };
        let mut f = f.map_err(|e| Error::Config(format!("catalog entry {name:?}: {e}")))?;
        f.name = name.to_string();
        Ok(f)
    }
}
