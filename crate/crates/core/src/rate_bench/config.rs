//! Experiment configuration and its `key = value` file format.
//!
//! ```text
//! # comment
//! model.function = kink_p1.5_d1
//! model.p = 1.5
//! noise.sigma = 0.5
//! noise.kind = gaussian
//! sweep.n_grid = 256,512,1024
//! sweep.reps = 50
//! sweep.eval_points = 500
//! sweep.k_rule = theorem          # or fixed:<k>, exponent:<e>
//! sweep.search = auto             # or tree, brute
//! sweep.slope_band = -0.90,-0.60
//! seed = 1
//! ```

use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::knn::{k_from_exponent, k_schedule, SearchPath};
use crate::sampler::{DistributionSpec, NoiseKind};
use crate::smooth_model::{catalog, SmoothFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum KRule {
    /// `floor(n^(2p/(2p+d)))`
    TheoremSchedule,
    Fixed(usize),
    /// `floor(n^e)`
    CustomExponent(f64),
}

impl KRule {
    pub fn k(&self, p: f64, d: usize, n: usize) -> usize {
        match *self {
            KRule::TheoremSchedule => k_schedule(p, d, n),
            KRule::Fixed(k) => k,
            KRule::CustomExponent(e) => k_from_exponent(e, n),
        }
    }
}

impl FromStr for KRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad k_rule {s:?}"));
        match s.split_once(':') {
            None if s == "theorem" => Ok(KRule::TheoremSchedule),
            Some(("fixed", k)) => {
                let k: usize = k.trim().parse().map_err(|_| bad())?;
                if k == 0 {
                    return Err(bad());
                }
                Ok(KRule::Fixed(k))
            }
            Some(("exponent", e)) => {
                let e: f64 = e.trim().parse().map_err(|_| bad())?;
                if !(0.0..=1.0).contains(&e) {
                    return Err(bad());
                }
                Ok(KRule::CustomExponent(e))
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub function_name: String,
    pub d: usize,
    pub p: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub sigma: f64,
    pub noise_kind: NoiseKind,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub eval_points: usize,
    pub master_seed: u64,
    pub k_rule: KRule,
    pub search: SearchPath,
    pub slope_band: Option<(f64, f64)>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_function("kink_p1.5_d1").expect("catalog entry")
    }
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {s:?}")))
        })
        .collect()
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

impl ExperimentConfig {
    /// Defaults around a catalog entry, taking `d`, `p` and `C` from it.
    pub fn for_function(name: &str) -> Result<Self> {
        let f = catalog::lookup(name)?;
        let s = f.smoothness();
        Ok(Self {
            function_name: name.to_string(),
            d: f.dim(),
            p: s.p,
            c: s.c,
            sigma: 0.5,
            noise_kind: NoiseKind::Gaussian,
            n_grid: (8..=14).map(|e| 1usize << e).collect(),
            reps: 50,
            eval_points: 500,
            master_seed: 1,
            k_rule: KRule::TheoremSchedule,
            search: SearchPath::Auto,
            slope_band: None,
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        text.parse()
    }

    /// The regression function; `C` from the config must dominate its certificate.
    pub fn function(&self) -> Result<SmoothFunction> {
        let f = catalog::lookup(&self.function_name)?;
        let s = f.smoothness();
        if f.dim() != self.d {
            return Err(Error::Config(format!(
                "{} has dimension {}, config says d = {}",
                self.function_name,
                f.dim(),
                self.d
            )));
        }
        if s.c > self.c * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "{} has Hölder constant {} > C = {}",
                self.function_name, s.c, self.c
            )));
        }
        Ok(f)
    }

    pub fn distribution(&self) -> Result<DistributionSpec> {
        DistributionSpec::new(self.function()?, self.sigma, self.noise_kind)
    }

    pub fn k_for(&self, n: usize) -> usize {
        self.k_rule.k(self.p, self.d, n)
    }

    /// `-2p / (2p + d)`
    pub fn target_rate(&self) -> f64 {
        -2.0 * self.p / (2.0 * self.p + self.d as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 10 {
            return Err(Error::Config(format!("reps = {} must be >= 10", self.reps)));
        }
        if self.eval_points == 0 {
            return Err(Error::Config("eval_points must be >= 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "n_grid must be non-empty and strictly increasing".into(),
            ));
        }
        if self.n_grid[0] == 0 {
            return Err(Error::Config("n_grid entries must be >= 1".into()));
        }
        if !(self.p > 0.0 && self.c > 0.0 && self.sigma >= 0.0) {
            return Err(Error::Config("need p > 0, C > 0, sigma >= 0".into()));
        }
        if let Some((lo, hi)) = self.slope_band {
            if lo > hi {
                return Err(Error::Config(
                    "slope_band must be lo,hi with lo <= hi".into(),
                ));
            }
        }
        if let KRule::Fixed(k) = self.k_rule {
            if let Some(&n) = self.n_grid.iter().find(|&&n| n < k) {
                return Err(Error::Config(format!("fixed k = {k} exceeds n = {n}")));
            }
        }
        self.function()?;
        Ok(())
    }

    /// Non-fatal remarks about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if matches!(self.k_rule, KRule::TheoremSchedule) && !(self.p > 1.0 && self.p <= 1.5) {
            w.push(format!(
                "p = {} is outside the theorem range (1, 1.5]",
                self.p
            ));
        }
        if self.n_grid.len() < 3 {
            w.push("fewer than 3 grid points: no slope will be fitted".into());
        }
        w
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "model.function" => self.function_name = v.to_string(),
            "model.d" => self.d = scalar(key, v)?,
            "model.p" => self.p = scalar(key, v)?,
            "model.C" | "model.c" => self.c = scalar(key, v)?,
            "noise.sigma" => self.sigma = scalar(key, v)?,
            "noise.kind" => self.noise_kind = v.parse()?,
            "sweep.n_grid" => self.n_grid = list(key, v)?,
            "sweep.reps" => self.reps = scalar(key, v)?,
            "sweep.eval_points" => self.eval_points = scalar(key, v)?,
            "sweep.k_rule" => self.k_rule = v.parse()?,
            "sweep.search" => {
                self.search = match v {
                    "auto" => SearchPath::Auto,
                    "tree" => SearchPath::Tree,
                    "brute" => SearchPath::Brute,
                    _ => return Err(Error::Config(format!("{key}: unknown search path {v:?}"))),
                }
            }
            "sweep.slope_band" => match list::<f64>(key, v)?[..] {
                [lo, hi] => self.slope_band = Some((lo, hi)),
                _ => return Err(Error::Config(format!("{key}: expected two numbers"))),
            },
            "seed" | "sweep.seed" => self.master_seed = scalar(key, v)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    /// Unset `model.d`, `model.p` and `model.C` follow the chosen function.
    fn from_str(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            pairs.push((k.trim(), v.trim()));
        }
        let name = pairs
            .iter()
            .rev()
            .find(|(k, _)| *k == "model.function")
            .map_or("kink_p1.5_d1", |(_, v)| v);
        let mut cfg = Self::for_function(name)?;
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
