//! Balls clipped to the unit cube.
//!
//! `H(u, v)` is the closed ball about `u` through `v` and `G(u, v)` its
//! intersection with `[0,1]^d`. This module provides the dimension constants
//! used by the k-NN cross-term bound, Monte Carlo estimators for `vol G`, its
//! volume ratio to `H` and its first moment about the centre, and the closed
//! form of the measure `F(u)` of center/witness pairs whose clipped ball has
//! volume at most `u`.

pub mod quadrature;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{Rng, StreamSeed};
use crate::stats::Estimate;

pub use quadrature::ball_cube_volume;

/// Volume of the unit ball in `R^d` by the two-step recursion
/// `V_d = 2 pi V_{d-2} / d` from `V_0 = 1`, `V_1 = 2`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let mut v = if d.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if d.is_multiple_of(2) { 2 } else { 3 };
    while k <= d {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometrySpec {
    pub d: usize,
    /// `∫_{|y|<=1, y_s>=0} y_s dy`
    pub e1: f64,
    /// Unit-ball volume.
    pub e2: f64,
    /// `min{2^-d, 2^-2d d^(-d/2)}`, lower bound on `vol G / vol H`.
    pub e3: f64,
    /// `2 e1 / (e2 e3)^((d+1)/d)`, first-moment bound constant.
    pub c2: f64,
    /// `2 d / e2^(1/d)`, bound constant for the density of `F`.
    pub c3: f64,
}

impl GeometrySpec {
    /// Breakpoint `e2 / 2^d` between the two branches of `F`.
    pub fn breakpoint(&self) -> f64 {
        self.e2 / 2f64.powi(self.d as i32)
    }
}

pub fn constants(d: usize) -> Result<GeometrySpec> {
    if d == 0 {
        return Err(Error::Domain("dimension must be >= 1".into()));
    }
    let df = d as f64;
    let e2 = unit_ball_volume(d);
    // slice at y_s = t is a (d-1)-ball of radius sqrt(1 - t^2)
    let e1 = unit_ball_volume(d - 1) / (df + 1.0);
    let e3 = 2f64
        .powi(-(d as i32))
        .min(2f64.powi(-2 * d as i32) * df.powf(-df / 2.0));
    let c2 = 2.0 * e1 / (e2 * e3).powf((df + 1.0) / df);
    // f(u) = 2d ∫_0^{(u/e2)^{1/d}} (1-2t)^{d-1} dt <= 2d (u/e2)^{1/d} on the first
    // branch; the second branch needs only 2 / e2^{1/d}
    let c3 = 2.0 * df / e2.powf(1.0 / df);
    Ok(GeometrySpec {
        d,
        e1,
        e2,
        e3,
        c2,
        c3,
    })
}

/// A centre `u` and witness `v` in the cube; the ball radius is `|u - v|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallCubePair {
    pub center: Vec<f64>,
    pub witness: Vec<f64>,
}

impl BallCubePair {
    pub fn new(center: Vec<f64>, witness: Vec<f64>) -> Result<Self> {
        if center.is_empty() || center.len() != witness.len() {
            return Err(Error::Argument(
                "centre and witness must share a positive dimension".into(),
            ));
        }
        if center
            .iter()
            .chain(&witness)
            .any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::Domain(
                "centre and witness must lie in [0,1]^d".into(),
            ));
        }
        Ok(Self { center, witness })
    }

    pub fn random(d: usize, rng: &mut Rng) -> Self {
        let center = (0..d).map(|_| rng.random()).collect();
        let witness = (0..d).map(|_| rng.random()).collect();
        Self { center, witness }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn radius(&self) -> f64 {
        self.center
            .iter()
            .zip(&self.witness)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn vol_h(&self, e2: f64) -> f64 {
        e2 * self.radius().powi(self.dim() as i32)
    }

    /// True when the ball is not contained in the cube (`G != H`).
    pub fn exits_cube(&self) -> bool {
        self.radius() > distance_to_boundary(&self.center)
    }
}

/// `min_s min(x_s, 1 - x_s)`
pub fn distance_to_boundary(x: &[f64]) -> f64 {
    x.iter().fold(f64::INFINITY, |m, &v| m.min(v).min(1.0 - v))
}

/// Uniform point in the ball: Gaussian direction, radius `r U^(1/d)`.
pub fn sample_in_ball(center: &[f64], r: f64, rng: &mut Rng, out: &mut [f64]) {
    let d = center.len();
    let mut norm2 = 0.0;
    loop {
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v = z;
            norm2 += z * z;
        }
        if norm2 > 0.0 {
            break;
        }
    }
    let u: f64 = rng.random();
    let scale = r * u.powf(1.0 / d as f64) / norm2.sqrt();
    for (o, c) in out.iter_mut().zip(center) {
        *o = c + *o * scale;
    }
}

/// Joint Monte Carlo summary of one clipped ball from a single sample set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClippedBallMc {
    pub vol_h: f64,
    pub vol_g: Estimate,
    /// `∫_G (w_s - u_s) dw` for every axis `s`.
    pub moments: Vec<Estimate>,
}

fn clipped_ball_mc(pair: &BallCubePair, mc_points: usize, seed: StreamSeed) -> ClippedBallMc {
    let d = pair.dim();
    let r = pair.radius();
    let vol_h = unit_ball_volume(d) * r.powi(d as i32);
    if r == 0.0 {
        return ClippedBallMc {
            vol_h: 0.0,
            vol_g: Estimate::exact(0.0),
            moments: vec![Estimate::exact(0.0); d],
        };
    }
    if d == 1 {
        let (c, lo, hi) = (
            pair.center[0],
            (pair.center[0] - r).max(0.0),
            (pair.center[0] + r).min(1.0),
        );
        let m = ((hi - c).powi(2) - (lo - c).powi(2)) / 2.0;
        return ClippedBallMc {
            vol_h,
            vol_g: Estimate::exact(hi - lo),
            moments: vec![Estimate::exact(m)],
        };
    }
    let mut rng = seed.rng();
    let mut w = vec![0.0; d];
    let mut inside = 0usize;
    let mut sum = vec![0.0; d];
    let mut sum2 = vec![0.0; d];
    for _ in 0..mc_points {
        sample_in_ball(&pair.center, r, &mut rng, &mut w);
        if w.iter().all(|v| (0.0..=1.0).contains(v)) {
            inside += 1;
            for s in 0..d {
                let t = w[s] - pair.center[s];
                sum[s] += t;
                sum2[s] += t * t;
            }
        }
    }
    let n = mc_points as f64;
    let frac = inside as f64 / n;
    let vol_g = Estimate {
        value: vol_h * frac,
        stderr: vol_h * (frac * (1.0 - frac) / n).sqrt(),
    };
    // per-sample statistic is vol_h * (w_s - u_s) * 1{w in cube}
    let moments = (0..d)
        .map(|s| {
            let mean = sum[s] / n;
            let var = (sum2[s] / n - mean * mean).max(0.0) * n / (n - 1.0);
            Estimate {
                value: vol_h * mean,
                stderr: vol_h * (var / n).sqrt(),
            }
        })
        .collect();
    ClippedBallMc {
        vol_h,
        vol_g,
        moments,
    }
}

fn check_mc_points(mc_points: usize) -> Result<()> {
    if mc_points < 1000 {
        return Err(Error::Argument(format!(
            "need at least 1000 Monte Carlo points, got {mc_points}"
        )));
    }
    Ok(())
}

/// Monte Carlo volume of `G(u, v)`; exact when `d = 1` or the radius is zero.
pub fn vol_g(
    pair: &BallCubePair,
    mc_points: usize,
    seed: impl Into<StreamSeed>,
) -> Result<Estimate> {
    check_mc_points(mc_points)?;
    Ok(clipped_ball_mc(pair, mc_points, seed.into()).vol_g)
}

/// `vol G / vol H` with the standard error carried over from `vol G`.
pub fn lemma_ratio(
    pair: &BallCubePair,
    mc_points: usize,
    seed: impl Into<StreamSeed>,
) -> Result<Estimate> {
    check_mc_points(mc_points)?;
    if pair.radius() == 0.0 {
        return Err(Error::Argument(
            "lemma_ratio needs a positive radius".into(),
        ));
    }
    let mc = clipped_ball_mc(pair, mc_points, seed.into());
    Ok(mc.vol_g.scale(1.0 / mc.vol_h))
}

/// `∫_{G(u,v)} (w_s - u_s) dw` along `axis`.
pub fn boundary_moment(
    pair: &BallCubePair,
    axis: usize,
    mc_points: usize,
    seed: impl Into<StreamSeed>,
) -> Result<Estimate> {
    check_mc_points(mc_points)?;
    if axis >= pair.dim() {
        return Err(Error::Domain(format!("axis {axis} out of range")));
    }
    if pair.radius() == 0.0 {
        return Err(Error::Argument(
            "boundary_moment needs a positive radius".into(),
        ));
    }
    Ok(clipped_ball_mc(pair, mc_points, seed.into()).moments[axis])
}

/// Outcome of the volume-ratio and first-moment checks on one pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCheck {
    pub pair: BallCubePair,
    pub ratio: Estimate,
    pub ratio_pass: bool,
    /// Largest `|moment| - c2 vol_g^((d+1)/d) - 3 stderr` over axes; `<= 0` passes.
    pub moment_excess: f64,
    pub moment_pass: bool,
}

/// Both clipped-ball checks for one pair from a single sample set.
pub fn check_pair(
    spec: &GeometrySpec,
    pair: &BallCubePair,
    mc_points: usize,
    seed: StreamSeed,
) -> PairCheck {
    let mc = clipped_ball_mc(pair, mc_points, seed);
    let ratio = mc.vol_g.scale(1.0 / mc.vol_h);
    let ratio_pass = ratio.value >= spec.e3 - 3.0 * ratio.stderr;
    let d = spec.d as f64;
    let bound = spec.c2 * mc.vol_g.value.max(0.0).powf((d + 1.0) / d);
    let moment_excess = mc
        .moments
        .iter()
        .map(|m| m.value.abs() - bound - 3.0 * m.stderr)
        .fold(f64::NEG_INFINITY, f64::max);
    PairCheck {
        pair: pair.clone(),
        ratio,
        ratio_pass,
        moment_excess,
        moment_pass: moment_excess <= 0.0,
    }
}

/// Summary of a sweep of [`check_pair`] over random pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSweep {
    pub d: usize,
    pub pairs: usize,
    pub min_ratio: f64,
    pub ratio_failures: usize,
    pub max_moment_excess: f64,
    pub moment_failures: usize,
}

pub fn sweep_pairs(
    d: usize,
    pairs: usize,
    mc_points: usize,
    seed: StreamSeed,
) -> Result<PairSweep> {
    use rayon::prelude::*;
    check_mc_points(mc_points)?;
    let spec = constants(d)?;
    let checks: Vec<PairCheck> = (0..pairs as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.child(i);
            let mut rng = s.rng();
            let mut pair = BallCubePair::random(d, &mut rng);
            while pair.radius() == 0.0 {
                pair = BallCubePair::random(d, &mut rng);
            }
            check_pair(&spec, &pair, mc_points, s.child(u64::MAX))
        })
        .collect();
    Ok(PairSweep {
        d,
        pairs,
        min_ratio: checks
            .iter()
            .map(|c| c.ratio.value)
            .fold(f64::INFINITY, f64::min),
        ratio_failures: checks.iter().filter(|c| !c.ratio_pass).count(),
        max_moment_excess: checks
            .iter()
            .map(|c| c.moment_excess)
            .fold(f64::NEG_INFINITY, f64::max),
        moment_failures: checks.iter().filter(|c| !c.moment_pass).count(),
    })
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn binomial(n: u32, k: u32) -> i128 {
    (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128)
}

/// `∫_0^{1/2} t^d (1 - 2t)^{d-1} dt` as an exact fraction via the binomial
/// expansion of `(1 - 2t)^{d-1}`. Valid for `d <= 12`.
pub fn branch_integral_exact(d: u32) -> (i128, i128) {
    // sum_i C(d-1, i) (-2)^i (1/2)^{d+i+1} / (d+i+1) = 2^{-(d+1)} sum_i C(d-1,i) (-1)^i / (d+i+1)
    let (mut num, mut den) = (0i128, 1i128);
    for i in 0..d {
        let sign = if i % 2 == 0 { 1 } else { -1 };
        let (a, b) = (sign * binomial(d - 1, i), (d + i + 1) as i128);
        num = num * b + a * den;
        den *= b;
        let g = gcd(num, den);
        num /= g;
        den /= g;
    }
    den <<= d + 1;
    let g = gcd(num, den);
    (num / g, den / g)
}

fn branch_integral(d: usize) -> f64 {
    if d <= 12 {
        let (n, m) = branch_integral_exact(d as u32);
        n as f64 / m as f64
    } else {
        // 2^{-(d+1)} B(d+1, d)
        use statrs::function::gamma::ln_gamma;
        let df = d as f64;
        (ln_gamma(df + 1.0) + ln_gamma(df)
            - ln_gamma(2.0 * df + 1.0)
            - (df + 1.0) * std::f64::consts::LN_2)
            .exp()
    }
}

/// First-branch coefficients `a_i` with `F(u) = sum_i a_i u^{(2d-i)/d}`.
fn first_branch_coeffs(d: usize, e2: f64) -> Vec<f64> {
    let d32 = d as u32;
    (0..d)
        .map(|i| {
            // C(d-1, i) (-2)^{d-1-i}, exact
            let c = binomial(d32 - 1, i as u32) * (-2i128).pow(d32 - 1 - i as u32);
            let (di, tdi) = ((d - i) as f64, (2 * d - i) as f64);
            2.0 * d as f64 * c as f64 * (1.0 / di - 1.0 / tdi) / e2.powf(di / d as f64)
        })
        .collect()
}

fn check_u(u: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("u = {u} outside [0, 1]")));
    }
    Ok(())
}

/// Closed form of `F(u)`, the measure of pairs `(x, x')` whose ball exits the
/// cube and whose clipped volume is at most `u`.
pub fn f_closed(u: f64, d: usize) -> Result<f64> {
    check_u(u)?;
    let spec = constants(d)?;
    if u <= spec.breakpoint() {
        Ok(f_first_branch(u, &spec))
    } else {
        Ok(f_second_branch(u, &spec))
    }
}

fn f_first_branch(u: f64, spec: &GeometrySpec) -> f64 {
    let d = spec.d;
    first_branch_coeffs(d, spec.e2)
        .iter()
        .enumerate()
        .map(|(i, a)| a * u.powf((2 * d - i) as f64 / d as f64))
        .sum()
}

fn f_second_branch(u: f64, spec: &GeometrySpec) -> f64 {
    u - 2.0 * spec.d as f64 * spec.e2 * branch_integral(spec.d)
}

/// Both branches evaluated at the breakpoint `e2 / 2^d`.
pub fn branch_values_at_breakpoint(d: usize) -> Result<(f64, f64)> {
    let spec = constants(d)?;
    let b = spec.breakpoint();
    Ok((f_first_branch(b, &spec), f_second_branch(b, &spec)))
}

/// Density `f = F'` on the open branches; `0` at `0`, `e2/2^d` and `1`.
pub fn f_density(u: f64, d: usize) -> Result<f64> {
    check_u(u)?;
    let spec = constants(d)?;
    let b = spec.breakpoint();
    if u == 0.0 || u == b || u == 1.0 {
        return Ok(0.0);
    }
    if u > b {
        return Ok(1.0);
    }
    Ok(first_branch_coeffs(d, spec.e2)
        .iter()
        .enumerate()
        .map(|(i, a)| a * (2 * d - i) as f64 / d as f64 * u.powf((d - i) as f64 / d as f64))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityCheck {
    pub max_ratio: f64,
    pub min_density: f64,
    pub pass: bool,
}

/// Checks `0 <= f(u) <= c3 u^{1/d}` on `grid - 1` interior points, skipping the
/// branch breakpoint.
pub fn density_bound_check(d: usize, grid: usize) -> Result<DensityCheck> {
    if grid < 10 {
        return Err(Error::Argument(format!("grid must be >= 10, got {grid}")));
    }
    let spec = constants(d)?;
    let b = spec.breakpoint();
    let (mut max_ratio, mut min_density) = (0.0f64, f64::INFINITY);
    for j in 1..grid {
        let u = j as f64 / grid as f64;
        if u == b {
            continue;
        }
        let f = f_density(u, d)?;
        max_ratio = max_ratio.max(f / (spec.c3 * u.powf(1.0 / d as f64)));
        min_density = min_density.min(f);
    }
    Ok(DensityCheck {
        max_ratio,
        min_density,
        pass: max_ratio <= 1.0 + 1e-12 && min_density >= 0.0,
    })
}

/// Monte Carlo estimate of `F(u)` at several `u` from one set of pairs.
///
/// `vol G` is computed deterministically for `d <= 3`; above that each pair
/// uses a Monte Carlo volume with `inner_mc` points, which smooths `F`.
pub fn f_mc_grid(
    us: &[f64],
    d: usize,
    mc_pairs: usize,
    inner_mc: usize,
    seed: impl Into<StreamSeed>,
) -> Result<Vec<Estimate>> {
    use rayon::prelude::*;
    for &u in us {
        check_u(u)?;
    }
    if mc_pairs < 10_000 {
        return Err(Error::Argument(format!(
            "need at least 10^4 pairs, got {mc_pairs}"
        )));
    }
    constants(d)?;
    let seed = seed.into();
    const CHUNK: usize = 1000;
    let chunks = mc_pairs.div_ceil(CHUNK);
    // volumes of pairs in W; pairs outside W are never counted
    let vols: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = seed.child(c as u64).rng();
            let take = CHUNK.min(mc_pairs - c * CHUNK);
            let mut out = Vec::new();
            for i in 0..take {
                let pair = BallCubePair::random(d, &mut rng);
                if !pair.exits_cube() {
                    continue;
                }
                let r = pair.radius();
                let v = match ball_cube_volume(&pair.center, r) {
                    Some(v) => v,
                    None => {
                        clipped_ball_mc(&pair, inner_mc, seed.child(c as u64).child(i as u64))
                            .vol_g
                            .value
                    }
                };
                out.push(v);
            }
            out
        })
        .collect();
    let n = mc_pairs as f64;
    Ok(us
        .iter()
        .map(|&u| {
            let p = vols.iter().filter(|&&v| v <= u).count() as f64 / n;
            Estimate {
                value: p,
                stderr: (p * (1.0 - p) / n).sqrt(),
            }
        })
        .collect())
}

pub fn f_mc(u: f64, d: usize, mc_pairs: usize, seed: impl Into<StreamSeed>) -> Result<Estimate> {
    Ok(f_mc_grid(&[u], d, mc_pairs, 2000, seed)?[0])
}

/// One row of the geometry CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FRow {
    pub d: usize,
    pub u: f64,
    pub f_closed: f64,
    pub f_mc: f64,
    pub stderr: f64,
    pub pass: bool,
}

/// `F_closed` against `F_mc` on `points` equally spaced `u` in `(0, 1]`.
pub fn f_table(
    d: usize,
    points: usize,
    mc_pairs: usize,
    seed: impl Into<StreamSeed>,
) -> Result<Vec<FRow>> {
    let us: Vec<f64> = (1..=points).map(|j| j as f64 / points as f64).collect();
    let mc = f_mc_grid(&us, d, mc_pairs, 2000, seed)?;
    us.iter()
        .zip(mc)
        .map(|(&u, e)| {
            let fc = f_closed(u, d)?;
            Ok(FRow {
                d,
                u,
                f_closed: fc,
                f_mc: e.value,
                stderr: e.stderr,
                pass: (fc - e.value).abs() <= 3.0 * e.stderr,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pair(c: &[f64], v: &[f64]) -> BallCubePair {
        BallCubePair::new(c.to_vec(), v.to_vec()).unwrap()
    }

    #[test]
    fn constants_examples() {
        let g = constants(1).unwrap();
        assert_eq!((g.e2, g.e1, g.e3), (2.0, 0.5, 0.25));
        let g = constants(2).unwrap();
        assert!((g.e2 - PI).abs() < 1e-15);
        assert!((g.e1 - 2.0 / 3.0).abs() < 1e-15);
        let g = constants(3).unwrap();
        assert!((g.e2 - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!(constants(0).is_err());
    }

    #[test]
    fn ball_volume_matches_gamma_formula() {
        use statrs::function::gamma::gamma;
        for d in 1..=12 {
            let df = d as f64;
            let g = constants(d).unwrap();
            let closed = PI.powf(df / 2.0) / gamma(df / 2.0 + 1.0);
            assert!((g.e2 - closed).abs() < 1e-13 * closed, "d = {d}");
            assert!(g.e2 <= 2f64.powi(d as i32));
            assert!(g.e1 > 0.0 && g.e3 > 0.0 && g.e3 <= 1.0);
        }
    }

    #[test]
    fn e1_by_monte_carlo() {
        // e1 = E[y_s^+] * vol(box) for y uniform in [-1,1]^d restricted to the ball
        let mut rng = StreamSeed::new(17, 0).rng();
        for d in [2, 3, 5] {
            let n = 400_000;
            let mut acc = Vec::with_capacity(n);
            for _ in 0..n {
                let y: Vec<f64> = (0..d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
                let inside = y.iter().map(|v| v * v).sum::<f64>() <= 1.0;
                acc.push(if inside && y[0] >= 0.0 { y[0] } else { 0.0 });
            }
            let est = Estimate::from_samples(&acc).scale(2f64.powi(d as i32));
            let e1 = constants(d).unwrap().e1;
            assert!(
                (est.value - e1).abs() <= 4.0 * est.stderr,
                "d = {d}: {} vs {e1}",
                est.value
            );
        }
    }

    #[test]
    fn vol_g_examples() {
        assert_eq!(
            vol_g(&pair(&[0.5], &[0.9]), 1000, 1).unwrap(),
            Estimate::exact(0.8)
        );
        let v = vol_g(&pair(&[0.1], &[0.4]), 1000, 1).unwrap();
        assert!((v.value - 0.4).abs() < 1e-15 && v.stderr == 0.0);
        assert_eq!(
            vol_g(&pair(&[0.3, 0.3], &[0.3, 0.3]), 1000, 1).unwrap(),
            Estimate::exact(0.0)
        );
        // ball strictly inside the cube: every sample lands in G
        let p = pair(&[0.5, 0.5, 0.5], &[0.6, 0.55, 0.5]);
        let v = vol_g(&p, 10_000, 2).unwrap();
        assert!((v.value - p.vol_h(4.0 * PI / 3.0)).abs() <= 3.0 * v.stderr + 1e-15);
        assert!(vol_g(&p, 999, 2).is_err());
    }

    #[test]
    fn vol_g_mc_matches_quadrature() {
        let mut rng = StreamSeed::new(23, 0).rng();
        for d in [2, 3] {
            for i in 0..20 {
                let p = BallCubePair::random(d, &mut rng);
                let exact = ball_cube_volume(&p.center, p.radius()).unwrap();
                let mc = vol_g(&p, 20_000, StreamSeed::new(24, i)).unwrap();
                assert!(
                    (mc.value - exact).abs() <= 4.0 * mc.stderr + 1e-12,
                    "d={d} {p:?}"
                );
                assert!(mc.value <= p.vol_h(constants(d).unwrap().e2) + 1e-12);
            }
        }
    }

    #[test]
    fn lemma_ratio_examples() {
        assert_eq!(
            lemma_ratio(&pair(&[0.5], &[0.6]), 1000, 1).unwrap().value,
            1.0
        );
        assert_eq!(
            lemma_ratio(&pair(&[0.0], &[1.0]), 1000, 1).unwrap().value,
            0.5
        );
        assert!(lemma_ratio(&pair(&[0.2], &[0.2]), 1000, 1).is_err());
    }

    #[test]
    fn boundary_moment_examples() {
        let m = boundary_moment(&pair(&[0.1], &[0.4]), 0, 1000, 1).unwrap();
        assert!((m.value - 0.04).abs() < 1e-15);
        // interior ball: antisymmetric integrand, mean zero within noise
        let p = pair(&[0.5, 0.5], &[0.7, 0.6]);
        for s in 0..2 {
            let m = boundary_moment(&p, s, 20_000, 3).unwrap();
            assert!(m.value.abs() <= 4.0 * m.stderr);
        }
        let exact_1d = boundary_moment(&pair(&[0.5], &[0.7]), 0, 1000, 1).unwrap();
        assert_eq!(exact_1d.value, 0.0);
        assert!(boundary_moment(&p, 2, 1000, 1).is_err());
    }

    #[test]
    fn sweep_small() {
        for d in [1, 2, 3] {
            let s = sweep_pairs(d, 300, 1000, StreamSeed::new(5, d as u64)).unwrap();
            assert_eq!(s.ratio_failures, 0, "{s:?}");
            assert_eq!(s.moment_failures, 0, "{s:?}");
            assert!(s.min_ratio >= constants(d).unwrap().e3);
        }
    }

    #[test]
    fn branch_integral_against_beta() {
        // 2^{-(d+1)} d! (d-1)! / (2d)!
        for d in 1..=12u32 {
            let (n, m) = branch_integral_exact(d);
            let fact = |k: u32| (1..=k as u128).product::<u128>();
            let (bn, bm) = (fact(d) * fact(d - 1), fact(2 * d) << (d + 1));
            assert_eq!(n as u128 * bm, bn * m as u128, "d = {d}");
        }
        assert_eq!(branch_integral_exact(1), (1, 8));
    }

    #[test]
    fn f_closed_d1_is_half_square() {
        for j in 0..=100 {
            let u = j as f64 / 100.0;
            assert!((f_closed(u, 1).unwrap() - u * u / 2.0).abs() <= 1e-12);
        }
        assert_eq!(f_closed(0.5, 1).unwrap(), 0.125);
        assert_eq!(f_closed(0.0, 3).unwrap(), 0.0);
        assert!(f_closed(1.1, 2).is_err());
        assert!(f_closed(-0.1, 2).is_err());
        let c = constants(1).unwrap();
        assert_eq!(f_second_branch(1.0, &c), 0.5);
    }

    #[test]
    fn f_closed_continuous_and_monotone() {
        for d in 1..=6 {
            let (a, b) = branch_values_at_breakpoint(d).unwrap();
            assert!((a - b).abs() <= 1e-12, "d = {d}: {a} vs {b}");
            let mut prev = 0.0;
            for j in 0..=2000 {
                let f = f_closed(j as f64 / 2000.0, d).unwrap();
                assert!(f >= prev - 1e-15, "d = {d}");
                prev = f;
            }
        }
    }

    #[test]
    fn density_matches_difference_quotient() {
        for d in 1..=4 {
            for j in 1..50 {
                let u = j as f64 / 50.0;
                let h = 1e-6;
                let b = constants(d).unwrap().breakpoint();
                if (u - b).abs() < 2.0 * h {
                    continue;
                }
                let fd = (f_closed(u + h, d).unwrap() - f_closed(u - h, d).unwrap()) / (2.0 * h);
                assert!((fd - f_density(u, d).unwrap()).abs() < 1e-6, "d={d} u={u}");
            }
        }
    }

    #[test]
    fn density_bound() {
        for d in 1..=5 {
            let c = density_bound_check(d, 1000).unwrap();
            assert!(c.pass, "d = {d}: {c:?}");
            assert!(c.min_density >= 0.0);
        }
        // second branch, the bound quoted for it
        let g = constants(2).unwrap();
        for u in [0.8, 0.9, 0.99] {
            assert_eq!(f_density(u, 2).unwrap(), 1.0);
            assert!(1.0 <= 2.0 / g.e2.sqrt() * u.sqrt());
        }
        assert_eq!(f_density(0.25, 1).unwrap(), 0.25);
        assert!(0.25 <= constants(1).unwrap().c3 * 0.25);
        assert_eq!(
            f_density(constants(2).unwrap().breakpoint(), 2).unwrap(),
            0.0
        );
        assert!(density_bound_check(1, 9).is_err());
    }

    #[test]
    fn f_mc_matches_closed_form_d1() {
        let est = f_mc_grid(&[0.0, 0.3, 0.7, 1.0], 1, 200_000, 0, 9).unwrap();
        assert_eq!(est[0].value, 0.0);
        for (u, e) in [0.3, 0.7, 1.0].iter().zip(&est[1..]) {
            assert!(
                (e.value - u * u / 2.0).abs() <= 3.0 * e.stderr,
                "u={u} {e:?}"
            );
        }
    }
}
