use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use knnlab::asymptotics::{
    beta_fn, cross_term, cross_term_rate, frozen_c1, nn_moment, stirling_limit, stirling_ratio,
};
use knnlab::geometry::f_table;
use knnlab::knn::k_schedule;
use knnlab::rate_bench::{
    sweep, sweep_plot_points, trace_of, write_plot_data, write_sweep_csv, write_trace_csv,
    ExperimentConfig,
};
use knnlab::rng::StreamSeed;
use knnlab::verify;

#[derive(Parser)]
#[command(name = "knnlab", version, about = "k-NN regression rate experiments")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Risk over an n grid and the fitted log-log slope.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Closed-form against Monte Carlo measure of small clipped balls.
    Geometry {
        #[arg(long)]
        d: usize,
        /// Monte Carlo pairs.
        #[arg(long, default_value_t = 100_000)]
        mc: usize,
    },
    /// Beta/Stirling values, nearest-neighbour moments and cross terms.
    Asymptotics {
        #[arg(long)]
        d: usize,
    },
    /// The acceptance checks.
    Verify {
        /// Run only these criteria (1-10).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

struct Sink {
    dir: Option<PathBuf>,
    format: Format,
}

impl Sink {
    fn open(&self, stem: &str) -> Result<Box<dyn Write>> {
        match &self.dir {
            None => Ok(Box::new(io::stdout().lock())),
            Some(dir) => {
                let ext = if self.format == Format::Json {
                    "json"
                } else {
                    "csv"
                };
                let path = dir.join(format!("{stem}.{ext}"));
                let f =
                    File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                Ok(Box::new(BufWriter::new(f)))
            }
        }
    }

    fn json<T: Serialize>(&self, stem: &str, value: &T) -> Result<()> {
        let mut w = self.open(stem)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        Ok(())
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let sink = Sink {
        dir: cli.out.clone(),
        format: cli.format,
    };
    let seed = cli.seed.unwrap_or(1);
    match cli.cmd {
        Cmd::Sweep { config } => run_sweep(&sink, &config, cli.seed),
        Cmd::Geometry { d, mc } => run_geometry(&sink, d, mc, seed),
        Cmd::Asymptotics { d } => run_asymptotics(&sink, d, seed),
        Cmd::Verify { only } => run_verify(&sink, &only, seed),
    }
}

fn run_sweep(sink: &Sink, path: &Path, seed: Option<u64>) -> Result<bool> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    let res = sweep(&cfg)?;
    let traces: Vec<_> = res.risks.iter().map(|r| trace_of(&cfg, r)).collect();
    if sink.format == Format::Json {
        sink.json("sweep", &res)?;
        if sink.dir.is_some() {
            sink.json("trace", &traces)?;
        }
    } else {
        write_sweep_csv(&res, sink.open("sweep")?)?;
        if sink.dir.is_some() {
            write_plot_data(&sweep_plot_points(&res), sink.open("plot")?)?;
            write_trace_csv(&traces, sink.open("trace")?)?;
        }
    }
    if let Some(fit) = &res.fit {
        eprintln!(
            "slope {:.4} +/- {:.4} (target {:.4})",
            fit.slope, fit.slope_stderr, fit.target
        );
    }
    Ok(res.band_pass().unwrap_or(true))
}

fn run_geometry(sink: &Sink, d: usize, mc: usize, seed: u64) -> Result<bool> {
    let rows = f_table(d, 20, mc, StreamSeed::new(seed, d as u64))?;
    if sink.format == Format::Json {
        sink.json("geometry", &rows)?;
    } else {
        let mut w = sink.open("geometry")?;
        writeln!(w, "d,u,F_closed,F_mc,stderr,pass")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.d, r.u, r.f_closed, r.f_mc, r.stderr, r.pass
            )?;
        }
    }
    Ok(rows.iter().all(|r| r.pass))
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    params: String,
    value: f64,
    bound: f64,
    pass: bool,
}

fn run_asymptotics(sink: &Sink, d: usize, seed: u64) -> Result<bool> {
    if d == 0 {
        bail!("--d must be >= 1");
    }
    let s = StreamSeed::new(seed, 7);
    let mut rows = Vec::new();
    let b = beta_fn(2.0, 3)?;
    rows.push(Check {
        name: "beta",
        params: "alpha=2;beta=3".into(),
        value: b,
        bound: 1.0 / 12.0,
        pass: b == 1.0 / 12.0,
    });
    let lim = stirling_limit(d);
    for n in [10u64, 100, 1000, 10_000] {
        let v = (n as f64).powf(3.0 / d as f64) * stirling_ratio(n, d)?;
        rows.push(Check {
            name: "stirling_scaled",
            params: format!("n={n};d={d}"),
            value: v,
            bound: lim,
            pass: (0.5 * lim..=2.0 * lim).contains(&v),
        });
    }
    for (i, &(n, k)) in verify::MOMENT_SCALES.iter().enumerate() {
        for gamma in [1.0, 1.5] {
            let m = nn_moment(gamma, n, k, d, 1000, s.child(i as u64))?;
            let bound = frozen_c1(d, gamma).map(|c1| m.bound(c1));
            rows.push(Check {
                name: "nn_moment",
                params: format!("gamma={gamma};n={n};k={k};d={d}"),
                value: m.value,
                bound: bound.unwrap_or(f64::NAN),
                pass: bound.is_none_or(|b| m.value <= b),
            });
        }
    }
    if d <= 3 {
        let (n, k) = (10, 3);
        for axis in 0..d {
            let c = cross_term(n, k, d, axis, 200_000, s.child(100 + axis as u64))?;
            rows.push(Check {
                name: "cross_term",
                params: format!("n={n};k={k};d={d};axis={axis}"),
                value: c.direct.value,
                bound: c.conditioned.value,
                pass: c.agree(3.0),
            });
        }
    }
    let schedule: Vec<(usize, usize)> = (8..=13)
        .map(|e| 1usize << e)
        .map(|n| (n, k_schedule(1.5, d, n).max(2)))
        .collect();
    let rate = cross_term_rate(d, &schedule, 2000, s.child(200))?;
    let floor = 3.0 / d as f64 - 0.5;
    rows.push(Check {
        name: "cross_term_rate",
        params: format!("d={d};p=1.5;n=256..8192"),
        value: rate.fit.slope,
        bound: floor,
        pass: rate.fit.slope >= floor,
    });

    if sink.format == Format::Json {
        sink.json("asymptotics", &rows)?;
    } else {
        let mut w = sink.open("asymptotics")?;
        writeln!(w, "name,params,value,bound,pass")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.name, r.params, r.value, r.bound, r.pass
            )?;
        }
    }
    Ok(rows.iter().all(|r| r.pass))
}

fn run_verify(sink: &Sink, only: &[usize], seed: u64) -> Result<bool> {
    let ids: Vec<usize> = if only.is_empty() {
        (1..=verify::CRITERIA.len()).collect()
    } else {
        only.to_vec()
    };
    let mut outcomes = Vec::new();
    for id in ids {
        let o = verify::run(id, seed)?;
        eprintln!("{o}");
        outcomes.push(o);
    }
    if sink.format == Format::Json {
        sink.json("verify", &outcomes)?;
    } else if sink.dir.is_some() {
        let mut w = sink.open("verify")?;
        writeln!(w, "id,name,pass,seconds,detail")?;
        for o in &outcomes {
            writeln!(
                w,
                "{},{},{},{:.3},\"{}\"",
                o.id,
                o.name,
                o.pass,
                o.seconds,
                o.detail.replace('"', "'")
            )?;
        }
    }
    Ok(outcomes.iter().all(|o| o.pass))
}
