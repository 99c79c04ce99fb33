use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pcfec::oracle;
use pcfec::sim::{
    self, find_threshold_with, monotonicity_warnings, optimize_w_with, refine_grid,
    typical_reliability, BerPoint, DecoderKind, SimConfig, SimError, Simulation,
    THRESHOLD_RESOLUTION_DB,
};

#[derive(Parser, Debug)]
#[command(
    name = "pcfec",
    version,
    about = "BER simulation of product codes under iterative BDD"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// BER sweep over the Eb/N0 grid with one decoder.
    Ber(SimArgs),
    /// Eb/N0 where the BER crosses the target, searched inside the grid range.
    Threshold {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 1e-4)]
        target: f64,
    },
    /// Threshold of IBDD-SR for each w; reports the best.
    OptimizeW {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 1e-4)]
        target: f64,
        /// Comma-separated scales. Defaults to a grid sized from the median |L|.
        #[arg(long)]
        w_grid: Option<String>,
        /// Rescan ±0.1 around the coarse optimum in steps of 0.01.
        #[arg(long)]
        refine: bool,
    },
    /// IBDD and IBDD-SR on the same grid and seed.
    Compare(SimArgs),
    /// Runs the oracle cross-checks; exits non-zero on any failure.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Simulation settings. Every flag overrides the same key in `--config`.
#[derive(Args, Debug, Default)]
struct SimArgs {
    /// Flat key=value file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    s: Option<String>,
    /// Constellation size (2, 16, 64, 256).
    #[arg(long = "M")]
    m: Option<String>,
    /// ibdd, ibdd_sr, hard or uncoded.
    #[arg(long)]
    decoder: Option<String>,
    #[arg(long)]
    w: Option<String>,
    #[arg(long)]
    iters: Option<String>,
    /// Comma-separated Eb/N0 values in dB.
    #[arg(long, allow_hyphen_values = true)]
    ebn0: Option<String>,
    #[arg(long)]
    min_errors: Option<String>,
    #[arg(long)]
    max_codewords: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// info (k×k block) or all (n×n).
    #[arg(long)]
    ber_mode: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// per_codeword or fixed.
    #[arg(long)]
    interleaver: Option<String>,
    #[arg(long)]
    early_stop: Option<String>,
}

impl SimArgs {
    fn flags(&self) -> Vec<(&'static str, &String)> {
        [
            ("nu", &self.nu),
            ("t", &self.t),
            ("s", &self.s),
            ("M", &self.m),
            ("decoder", &self.decoder),
            ("w", &self.w),
            ("iters", &self.iters),
            ("ebn0", &self.ebn0),
            ("min-errors", &self.min_errors),
            ("max-codewords", &self.max_codewords),
            ("seed", &self.seed),
            ("ber-mode", &self.ber_mode),
            ("workers", &self.workers),
            ("interleaver", &self.interleaver),
            ("early-stop", &self.early_stop),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
        .collect()
    }

    fn config(&self) -> Result<SimConfig, SimError> {
        let mut cfg = SimConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)?;
            for (key, value) in sim::parse_config_file(&text)? {
                if !cfg.apply(&key, &value)? {
                    return Err(SimError::Config(format!(
                        "unknown key `{key}` in {}",
                        path.display()
                    )));
                }
            }
        }
        for (key, value) in self.flags() {
            cfg.apply(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), SimError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn log_point(p: &BerPoint) {
    eprintln!(
        "{} {:.3} dB: ber {:e} ({} errors in {} codewords, {} codewords in error)",
        p.decoder, p.ebn0_db, p.ber, p.bit_errors, p.codewords, p.codeword_errors
    );
}

fn sweep(cfg: &SimConfig) -> Result<Vec<BerPoint>, SimError> {
    if cfg.ebn0_grid_db.is_empty() {
        return Err(SimError::Config("--ebn0 is required".into()));
    }
    let simulation = Simulation::<f64>::new(cfg.clone())?;
    let mut points = Vec::new();
    for &e in &cfg.ebn0_grid_db {
        let p = simulation.run_point(e)?;
        log_point(&p);
        points.push(p);
    }
    for w in monotonicity_warnings(&points) {
        eprintln!("warning: {w}");
    }
    Ok(points)
}

fn threshold(cfg: &SimConfig, target: f64) -> Result<f64, SimError> {
    let simulation = Simulation::<f64>::new(cfg.clone())?;
    let lo = cfg
        .ebn0_grid_db
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = cfg
        .ebn0_grid_db
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(lo < hi) {
        return Err(SimError::Config(
            "--ebn0 needs two distinct values to bound the search".into(),
        ));
    }
    let th = find_threshold_with(
        |e| {
            let p = simulation.run_point(e)?;
            log_point(&p);
            Ok(p.ber)
        },
        lo,
        hi,
        target,
        THRESHOLD_RESOLUTION_DB,
    )?;
    Ok(th.ebn0_db)
}

fn default_w_grid(cfg: &SimConfig) -> Result<Vec<f64>, SimError> {
    let lo = cfg
        .ebn0_grid_db
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = cfg
        .ebn0_grid_db
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let typical = typical_reliability(cfg, 0.5 * (lo + hi))?;
    let step = if typical <= 2.0 {
        0.1
    } else {
        ((typical / 2.0).round() / 10.0).max(0.1)
    };
    eprintln!(
        "median |L| {typical:.2}; scanning w up to {:.1} in steps of {step}",
        2.0 * typical
    );
    Ok(sim::w_grid(2.0 * typical, step))
}

fn optimize(
    cfg: &SimConfig,
    target: f64,
    grid: Option<&str>,
    refine: bool,
) -> Result<String, SimError> {
    let grid = match grid {
        Some(g) => sim::parse_list(g)?,
        None => default_w_grid(cfg)?,
    };
    let run = |grid: &[f64]| {
        optimize_w_with(grid, |w| {
            eprintln!("w = {w}");
            let c = SimConfig {
                decoder: DecoderKind::IbddSr,
                w,
                ..cfg.clone()
            };
            let th = threshold(&c, target);
            match &th {
                Ok(t) => eprintln!("w = {w}: threshold {t:.3} dB"),
                Err(e) => eprintln!("w = {w}: {e}"),
            }
            th
        })
    };
    let mut best = run(&grid)?;
    if refine {
        let fine: Vec<f64> = refine_grid(best.w, 0.1, 0.01)
            .into_iter()
            .filter(|w| !grid.iter().any(|g| (g - w).abs() < 1e-9))
            .collect();
        let fine_best = run(&fine)?;
        let mut candidates = best.candidates.clone();
        candidates.extend(fine_best.candidates.iter().cloned());
        if fine_best.threshold_db < best.threshold_db
            || (fine_best.threshold_db == best.threshold_db && fine_best.w < best.w)
        {
            best = fine_best;
        }
        best.candidates = candidates;
    }
    best.candidates.sort_by(|a, b| a.w.total_cmp(&b.w));
    let mut csv = String::from("w,threshold_db\n");
    for c in &best.candidates {
        let th = c
            .threshold_db
            .map(|t| format!("{t:.4}"))
            .unwrap_or_default();
        csv.push_str(&format!("{},{}\n", c.w, th));
    }
    eprintln!(
        "best w = {} with threshold {:.3} dB",
        best.w, best.threshold_db
    );
    Ok(csv)
}

fn selftest(seed: u64) -> bool {
    let mut ok = true;
    for report in oracle::all_suites(seed) {
        println!(
            "{} {}: {}",
            if report.passed { "PASS" } else { "FAIL" },
            report.name,
            report.detail
        );
        ok &= report.passed;
    }
    ok
}

fn run(cli: Cli) -> Result<bool, SimError> {
    match cli.command {
        Command::Ber(args) => {
            let cfg = args.config()?;
            let points = sweep(&cfg)?;
            write_output(args.out.as_deref(), &sim::csv_string(&points))?;
        }
        Command::Threshold { sim, target } => {
            let cfg = sim.config()?;
            let th = threshold(&cfg, target)?;
            let text = format!(
                "decoder,nu,t,s,M,w,iters,target_ber,threshold_db\n{},{},{},{},{},{},{},{:e},{:.4}\n",
                cfg.decoder, cfg.nu, cfg.t, cfg.s, cfg.modulation, cfg.w, cfg.max_iters, target, th
            );
            write_output(sim.out.as_deref(), &text)?;
        }
        Command::OptimizeW {
            sim,
            target,
            w_grid,
            refine,
        } => {
            let cfg = sim.config()?;
            let csv = optimize(&cfg, target, w_grid.as_deref(), refine)?;
            write_output(sim.out.as_deref(), &csv)?;
        }
        Command::Compare(args) => {
            let cfg = args.config()?;
            let mut points = Vec::new();
            for decoder in [DecoderKind::Ibdd, DecoderKind::IbddSr] {
                points.extend(sweep(&SimConfig {
                    decoder,
                    ..cfg.clone()
                })?);
            }
            write_output(args.out.as_deref(), &sim::csv_string(&points))?;
        }
        Command::Selftest { seed } => return Ok(selftest(seed)),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
