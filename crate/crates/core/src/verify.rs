//! The ten acceptance checks as runnable functions.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng as _;
use serde::Serialize;

use crate::asymptotics::{beta_fn, cross_term, nn_moment, stirling_limit, stirling_ratio};
use crate::error::{Error, Result};
use crate::geometry::{branch_values_at_breakpoint, f_closed, f_table, sweep_pairs, PairSweep};
use crate::knn::{KnnModel, SearchPath};
use crate::rate_bench::{
    bias_variance_probe, fit_rate, sweep, write_sweep_csv, ExperimentConfig, RiskEstimate,
};
use crate::rng::StreamSeed;
use crate::sampler::{sample, uniform_points, DistributionSpec, NoiseKind};
use crate::smooth_model::catalog;

pub const CRITERIA: [&str; 10] = [
    "rate experiment d=1",
    "rate experiment d=2",
    "geometry suite",
    "volume ratio sweep",
    "boundary moment sweep",
    "beta and stirling",
    "nn moment stability",
    "cross-term identity",
    "bias-variance identity",
    "engineering invariants",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {} ({:.1}s): {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

/// Runs criterion `id` (1-based) with a master seed.
pub fn run(id: usize, seed: u64) -> Result<Outcome> {
    let name = *CRITERIA
        .get(id.wrapping_sub(1))
        .ok_or_else(|| Error::Argument(format!("no criterion {id}")))?;
    let start = Instant::now();
    let s = StreamSeed::new(seed, 1000 + id as u64);
    let (pass, detail) = match id {
        1 => rate_experiment("kink_p1.5_d1", (-0.90, -0.60), Some(0.05), seed)?,
        2 => rate_experiment("kink_p1.5_d2", (-0.75, -0.45), None, seed)?,
        3 => geometry_suite(s)?,
        4 => pair_sweeps(s, |p| {
            (
                p.ratio_failures == 0,
                format!("min ratio {:.4}", p.min_ratio),
            )
        })?,
        5 => pair_sweeps(s, |p| {
            (
                p.moment_failures == 0,
                format!("max excess {:.3e}", p.max_moment_excess),
            )
        })?,
        6 => beta_stirling()?,
        7 => moment_stability(s)?,
        8 => cross_terms(s)?,
        9 => bias_variance(s)?,
        _ => engineering(s)?,
    };
    Ok(Outcome {
        id,
        name,
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run_all(seed: u64) -> Result<Vec<Outcome>> {
    (1..=CRITERIA.len()).map(|id| run(id, seed)).collect()
}

fn rate_experiment(
    function: &str,
    band: (f64, f64),
    max_se: Option<f64>,
    seed: u64,
) -> Result<(bool, String)> {
    let mut cfg = ExperimentConfig::for_function(function)?;
    cfg.sigma = 0.5;
    cfg.master_seed = seed;
    cfg.search = SearchPath::Tree;
    cfg.slope_band = Some(band);
    let res = sweep(&cfg)?;
    let fit = res
        .fit
        .as_ref()
        .ok_or_else(|| Error::State("no fit".into()))?;
    let se_ok = max_se.is_none_or(|m| fit.slope_stderr <= m);
    let pass = fit.within(band.0, band.1) && se_ok;
    Ok((
        pass,
        format!(
            "slope {:.4} (target {:.4}, band [{}, {}]), slope_stderr {:.4}",
            fit.slope, fit.target, band.0, band.1, fit.slope_stderr
        ),
    ))
}

fn geometry_suite(seed: StreamSeed) -> Result<(bool, String)> {
    let mut pass = true;
    let mut detail = String::new();
    for d in 1..=3 {
        let rows = f_table(d, 20, 100_000, seed.child(d as u64))?;
        let ok = rows.iter().filter(|r| r.pass).count();
        let (a, b) = branch_values_at_breakpoint(d)?;
        let jump = (a - b).abs();
        pass &= ok == rows.len() && jump <= 1e-12;
        let _ = write!(detail, "d={d}: {ok}/20 within 3se, jump {jump:.1e}; ");
    }
    let worst = (0..=1000)
        .map(|j| {
            let u = j as f64 / 1000.0;
            f_closed(u, 1).map(|f| (f - u * u / 2.0).abs())
        })
        .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))?;
    pass &= worst <= 1e-12;
    let _ = write!(detail, "d=1 vs u^2/2 max err {worst:.1e}");
    Ok((pass, detail))
}

fn pair_sweeps(
    seed: StreamSeed,
    judge: impl Fn(&PairSweep) -> (bool, String),
) -> Result<(bool, String)> {
    let mut pass = true;
    let mut detail = String::new();
    for d in [1, 2, 3, 5] {
        let sw = sweep_pairs(d, 10_000, 4000, seed.child(d as u64))?;
        let (ok, msg) = judge(&sw);
        pass &= ok;
        let _ = write!(detail, "d={d}: {msg}; ");
    }
    Ok((pass, detail.trim_end_matches("; ").to_string()))
}

fn beta_stirling() -> Result<(bool, String)> {
    let b = beta_fn(2.0, 3)?;
    let mut pass = b == 1.0 / 12.0;
    let mut detail = format!("B(2,3) = {b}; ");
    pass &= [1u64, 2, 10, 100, 10_000, 1_000_000]
        .iter()
        .all(|&n| stirling_ratio(n, 3).is_ok_and(|v| v == 1.0 / (n as f64 + 1.0)));
    for d in [1usize, 2, 3] {
        let n = 10_000u64;
        let scaled = (n as f64).powf(3.0 / d as f64) * stirling_ratio(n, d)?;
        let rel = (scaled / stirling_limit(d) - 1.0).abs();
        pass &= rel <= 0.01;
        let _ = write!(detail, "d={d} rel err {rel:.2e}; ");
    }
    Ok((pass, detail.trim_end_matches("; ").to_string()))
}

pub const MOMENT_SCALES: [(usize, usize); 3] = [(500, 10), (2000, 40), (8000, 160)];

fn moment_stability(seed: StreamSeed) -> Result<(bool, String)> {
    let mut pass = true;
    let mut detail = String::new();
    for (i, (d, g)) in [(1usize, 1.0), (2, 1.0), (2, 1.5)].into_iter().enumerate() {
        let ratios = MOMENT_SCALES
            .iter()
            .enumerate()
            .map(|(j, &(n, k))| {
                Ok(nn_moment(g, n, k, d, 2000, seed.child(i as u64).child(j as u64))?.ratio())
            })
            .collect::<Result<Vec<f64>>>()?;
        let (lo, hi) = ratios
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        pass &= hi < 2.0 * lo;
        let _ = write!(detail, "(d={d},g={g}) spread {:.3}; ", hi / lo);
    }
    Ok((pass, detail.trim_end_matches("; ").to_string()))
}

pub const CROSS_TERM_CASES: [(usize, usize, usize); 3] = [(3, 2, 1), (10, 3, 2), (20, 5, 2)];

fn cross_terms(seed: StreamSeed) -> Result<(bool, String)> {
    let mut pass = true;
    let mut detail = String::new();
    for (i, &(n, k, d)) in CROSS_TERM_CASES.iter().enumerate() {
        for axis in 0..d {
            let c = cross_term(
                n,
                k,
                d,
                axis,
                2_000_000,
                seed.child(i as u64).child(axis as u64),
            )?;
            let z = (c.direct.value - c.conditioned.value).abs()
                / c.direct.stderr.hypot(c.conditioned.stderr);
            pass &= c.agree(3.0);
            let _ = write!(
                detail,
                "({n},{k},{d},s={axis}) {:.3e} vs {:.3e} z={z:.2}; ",
                c.direct.value, c.conditioned.value
            );
        }
    }
    Ok((pass, detail.trim_end_matches("; ").to_string()))
}

fn bias_variance(seed: StreamSeed) -> Result<(bool, String)> {
    let sigma = 0.5;
    let mut id_ok = 0;
    let mut var_ok = 0;
    let designs = 20;
    for i in 0..designs {
        let s = seed.child(i);
        let mut rng = s.rng();
        let d = 1 + (i as usize % 3);
        let m = catalog::lookup(&format!("kink_p1.5_d{d}"))?;
        let spec = DistributionSpec::new(m, sigma, NoiseKind::Gaussian)?;
        let n = rng.random_range(30..=300);
        let design = uniform_points(d, n, &mut rng);
        let x = uniform_points(d, 1, &mut rng);
        let k = rng.random_range(1..=n.min(40));
        let p = bias_variance_probe(&design, &spec, &x, k, 20_000, s.child(1))?;
        id_ok += p.identity_holds(3.0) as usize;
        var_ok += p.variance_matches(3.0) as usize;
    }
    Ok((
        id_ok == designs as usize && var_ok == designs as usize,
        format!("identity {id_ok}/{designs}, variance = sigma^2/k {var_ok}/{designs}"),
    ))
}

fn engineering(seed: StreamSeed) -> Result<(bool, String)> {
    let mut rng = seed.rng();
    let mut mismatches = 0usize;
    let cases = 10_000;
    let mut done = 0;
    while done < cases {
        let d = [1, 2, 3, 5][(done / 500) % 4];
        let n = rng.random_range(513..=3000);
        let xs = uniform_points(d, n, &mut rng);
        let ys: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let model = KnnModel::fit_with(crate::sampler::Dataset::new(d, xs, ys)?, SearchPath::Tree);
        for _ in 0..500 {
            let q = uniform_points(d, 1, &mut rng);
            let k = rng.random_range(1..=n.min(200));
            if model.predict(&q, k)?.to_bits() != model.predict_brute(&q, k)?.to_bits() {
                mismatches += 1;
            }
        }
        done += 500;
    }

    let spec = DistributionSpec::new(catalog::lookup("sine_p1.5_d2")?, 0.5, NoiseKind::Gaussian)?;
    let csv = |s: StreamSeed| -> Result<Vec<u8>> {
        let mut out = Vec::new();
        sample(&spec, 2000, s)?.write_csv(&mut out)?;
        Ok(out)
    };
    let mut cfg: ExperimentConfig =
        "sweep.n_grid = 128,256,512,1024\nsweep.reps = 10\nsweep.eval_points = 50".parse()?;
    cfg.master_seed = seed.master;
    let sweep_csv = |c: &ExperimentConfig| -> Result<Vec<u8>> {
        let mut out = Vec::new();
        write_sweep_csv(&sweep(c)?, &mut out)?;
        Ok(out)
    };
    let bytes_ok =
        csv(seed.child(1))? == csv(seed.child(1))? && sweep_csv(&cfg)? == sweep_csv(&cfg)?;

    let mut worst = 0.0f64;
    for beta in [0.25, 0.6, 0.75, 1.0, 2.0] {
        let risks: Vec<RiskEstimate> = (8..=14)
            .map(|e| {
                let n = 1usize << e;
                let v = 3.0 * (n as f64).powf(-beta);
                RiskEstimate {
                    n,
                    k: 1,
                    risk: v,
                    stderr: 0.0,
                    samples: vec![v; 10],
                }
            })
            .collect();
        let fit = fit_rate(&risks, -beta, seed.child(2))?;
        worst = worst.max((fit.slope + beta).abs());
    }
    Ok((
        mismatches == 0 && bytes_ok && worst <= 1e-10,
        format!("tree/brute mismatches {mismatches}/{cases}; byte-identical CSV {bytes_ok}; fitter max err {worst:.1e}"),
    ))
}
