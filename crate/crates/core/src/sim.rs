//! Monte Carlo BER estimation: encode → BICM/AWGN → decode trials, Eb/N0
//! sweeps, threshold search and optimization of the reliability scale `w`.
//!
//! Trial `i` draws all of its randomness (message, interleaver, noise) from
//! its own ChaCha stream `(seed, i)`. Trials run in fixed-size batches and a
//! point stops at the first trial index where the error-event quota is met,
//! so results do not depend on the number of workers. The same streams are
//! reused at every Eb/N0 and for every decoder, which pairs the comparisons.

use std::fmt;
use std::io::{self, Write};
use std::marker::PhantomData;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::bch::{BchCode, BchError};
use crate::channel::{
    ebn0_to_sigma2, hard_decision, Channel, ChannelConfig, ChannelError, InterleaverMode,
    LlrMatrix, Modulation,
};
use crate::decoder::{DecoderError, IterationConfig, IterativeDecoder};
use crate::product::{BitMatrix, ProductCode};
use crate::scalar::Real;

/// Trials evaluated between two checks of the stopping rule.
pub const BATCH_SIZE: u64 = 32;

/// Width of the final Eb/N0 bracket of the threshold search, in dB.
pub const THRESHOLD_RESOLUTION_DB: f64 = 0.02;

/// Column order of the CSV output.
pub const CSV_HEADER: &str =
    "decoder,nu,t,s,M,w,iters,ebn0_db,codewords,bits_counted,bit_errors,ber,seed";

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("target BER {target:e} is not crossed between {lo_db} dB (BER {lo_ber:e}) and {hi_db} dB (BER {hi_ber:e})")]
    NoBracket {
        target: f64,
        lo_db: f64,
        hi_db: f64,
        lo_ber: f64,
        hi_ber: f64,
    },
    #[error(transparent)]
    Code(#[from] BchError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn config_err(msg: impl Into<String>) -> SimError {
    SimError::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecoderKind {
    Ibdd,
    IbddSr,
    /// Channel hard decisions of the coded bits, no decoding.
    Hard,
    /// No code at all: random `n × n` bits sent at rate 1 and sliced.
    Uncoded,
}

impl DecoderKind {
    pub fn id(self) -> &'static str {
        match self {
            DecoderKind::Ibdd => "ibdd",
            DecoderKind::IbddSr => "ibdd_sr",
            DecoderKind::Hard => "hard",
            DecoderKind::Uncoded => "uncoded",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DecoderKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ibdd" => Ok(DecoderKind::Ibdd),
            "ibdd_sr" | "ibddsr" => Ok(DecoderKind::IbddSr),
            "hard" => Ok(DecoderKind::Hard),
            "uncoded" | "none" => Ok(DecoderKind::Uncoded),
            other => Err(config_err(format!("unknown decoder `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BerMode {
    /// Top-left `k × k` information block.
    #[default]
    InfoBits,
    /// All `n × n` code bits.
    AllBits,
}

impl FromStr for BerMode {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "info_bits" | "info" => Ok(BerMode::InfoBits),
            "all_bits" | "all" => Ok(BerMode::AllBits),
            other => Err(config_err(format!("unknown BER mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub nu: u32,
    pub t: usize,
    pub s: usize,
    /// Constellation size M.
    pub modulation: usize,
    pub decoder: DecoderKind,
    pub w: f64,
    pub max_iters: usize,
    pub ebn0_grid_db: Vec<f64>,
    /// Codewords with at least one counted bit error needed to stop a point.
    pub min_error_events: u64,
    pub max_codewords: u64,
    pub seed: u64,
    pub ber_mode: BerMode,
    pub workers: usize,
    pub interleaver: InterleaverMode,
    pub early_stop: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            nu: 8,
            t: 3,
            s: 63,
            modulation: 2,
            decoder: DecoderKind::IbddSr,
            w: 1.0,
            max_iters: 10,
            ebn0_grid_db: Vec::new(),
            min_error_events: 100,
            max_codewords: 1_000_000,
            seed: 1,
            ber_mode: BerMode::InfoBits,
            workers: 1,
            interleaver: InterleaverMode::PerCodeword,
            early_stop: false,
        }
    }
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(value: &str) -> Result<Vec<f64>, SimError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| config_err(format!("`{v}` is not a number")))
        })
        .collect()
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, SimError> {
    value
        .trim()
        .parse()
        .map_err(|_| config_err(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, SimError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(config_err(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

impl SimConfig {
    /// Sets one field from its flag / config-file key. Returns `false` for
    /// keys that are not simulation settings.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<bool, SimError> {
        let key = key.trim().trim_start_matches("--");
        match key {
            "nu" => self.nu = parse_value(key, value)?,
            "t" => self.t = parse_value(key, value)?,
            "s" => self.s = parse_value(key, value)?,
            "M" | "m" => self.modulation = parse_value(key, value)?,
            "decoder" => self.decoder = value.trim().parse()?,
            "w" => self.w = parse_value(key, value)?,
            "iters" => self.max_iters = parse_value(key, value)?,
            "ebn0" => self.ebn0_grid_db = parse_list(value)?,
            "min-errors" => self.min_error_events = parse_value(key, value)?,
            "max-codewords" => self.max_codewords = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "ber-mode" => self.ber_mode = value.trim().parse()?,
            "workers" => self.workers = parse_value(key, value)?,
            "interleaver" => {
                self.interleaver =
                    match value.trim().to_ascii_lowercase().replace('-', "_").as_str() {
                        "per_codeword" => InterleaverMode::PerCodeword,
                        "fixed" => InterleaverMode::Fixed,
                        other => {
                            return Err(config_err(format!("unknown interleaver mode `{other}`")))
                        }
                    }
            }
            "early-stop" => self.early_stop = parse_bool(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.min_error_events == 0 {
            return Err(config_err("min-errors must be at least 1"));
        }
        if self.max_codewords == 0 {
            return Err(config_err("max-codewords must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(config_err("iters must be at least 1"));
        }
        if !(self.w >= 0.0 && self.w.is_finite()) {
            return Err(config_err("w must be finite and non-negative"));
        }
        if self.workers == 0 {
            return Err(config_err("workers must be at least 1"));
        }
        if self.ebn0_grid_db.iter().any(|x| !x.is_finite()) {
            return Err(config_err("Eb/N0 values must be finite"));
        }
        Ok(())
    }

    fn iteration_config(&self) -> IterationConfig {
        IterationConfig {
            max_iters: self.max_iters,
            w: self.w,
            early_stop: self.early_stop,
        }
    }
}

/// Parses a flat `key = value` file; blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>, SimError> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}: expected key=value", no + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    ErrorEvents,
    CodewordCap,
}

/// Aggregate of one Eb/N0 point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub ebn0_db: f64,
    pub bit_errors: u64,
    pub bits_counted: u64,
    pub ber: f64,
    pub codewords: u64,
    /// Codewords with at least one counted bit error.
    pub codeword_errors: u64,
    pub stop: StopReason,
    pub decoder: DecoderKind,
    pub nu: u32,
    pub t: usize,
    pub s: usize,
    pub modulation: usize,
    pub w: f64,
    pub iters: usize,
    pub seed: u64,
}

impl BerPoint {
    /// One CSV line in [`CSV_HEADER`] order, without a newline.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:e},{}",
            self.decoder.id(),
            self.nu,
            self.t,
            self.s,
            self.modulation,
            self.w,
            self.iters,
            self.ebn0_db,
            self.codewords,
            self.bits_counted,
            self.bit_errors,
            self.ber,
            self.seed
        )
    }
}

pub fn write_csv<W: Write>(mut out: W, points: &[BerPoint]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for p in points {
        writeln!(out, "{}", p.csv_row())?;
    }
    Ok(())
}

pub fn csv_string(points: &[BerPoint]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, points).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is ASCII")
}

#[derive(Debug, Clone, Copy, Default)]
struct TrialResult {
    bit_errors: u64,
}

/// A configured simulation, generic over the LLR scalar.
pub struct Simulation<T = f64> {
    config: SimConfig,
    code: ProductCode,
    modulation: Modulation,
    pool: Option<rayon::ThreadPool>,
    _scalar: PhantomData<T>,
}

impl<T: Real> Simulation<T> {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let code = ProductCode::new(BchCode::new(config.nu, config.t, config.s)?);
        let modulation = Modulation::new(config.modulation)?;
        let bits = code.length();
        if !bits.is_multiple_of(modulation.bits_per_symbol()) {
            return Err(ChannelError::DimensionMismatch {
                bits,
                m: modulation.bits_per_symbol(),
            }
            .into());
        }
        let pool = if config.workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(config.workers)
                    .build()
                    .map_err(|e| config_err(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Simulation {
            config,
            code,
            modulation,
            pool,
            _scalar: PhantomData,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn code(&self) -> &ProductCode {
        &self.code
    }

    /// Code rate used for the Eb/N0 conversion.
    pub fn rate(&self) -> f64 {
        match self.config.decoder {
            DecoderKind::Uncoded => 1.0,
            _ => self.code.rate(),
        }
    }

    pub fn sigma2(&self, ebn0_db: f64) -> f64 {
        ebn0_to_sigma2(ebn0_db, self.rate(), self.modulation.bits_per_symbol())
    }

    fn bits_per_codeword(&self) -> u64 {
        match (self.config.decoder, self.config.ber_mode) {
            (DecoderKind::Uncoded, _) | (_, BerMode::AllBits) => self.code.length() as u64,
            (_, BerMode::InfoBits) => self.code.dimension() as u64,
        }
    }

    /// Random stream of trial `index`.
    pub fn trial_rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(index);
        rng
    }

    /// Estimates the BER at one Eb/N0.
    pub fn run_point(&self, ebn0_db: f64) -> Result<BerPoint, SimError> {
        if !ebn0_db.is_finite() {
            return Err(config_err("Eb/N0 must be finite"));
        }
        let channel = Channel::new(
            self.modulation.clone(),
            ChannelConfig {
                sigma2: self.sigma2(ebn0_db),
                seed: self.config.seed,
                interleaver: self.config.interleaver,
            },
            self.code.n(),
        )?;
        let cfg = &self.config;
        let mut codewords = 0u64;
        let mut codeword_errors = 0u64;
        let mut bit_errors = 0u64;
        let mut stop = StopReason::CodewordCap;
        'batches: while codewords < cfg.max_codewords {
            let end = (codewords + BATCH_SIZE).min(cfg.max_codewords);
            let results = self.run_batch(&channel, codewords..end)?;
            for r in results {
                codewords += 1;
                bit_errors += r.bit_errors;
                if r.bit_errors > 0 {
                    codeword_errors += 1;
                    if codeword_errors >= cfg.min_error_events {
                        stop = StopReason::ErrorEvents;
                        break 'batches;
                    }
                }
            }
        }
        let bits_counted = codewords * self.bits_per_codeword();
        Ok(BerPoint {
            ebn0_db,
            bit_errors,
            bits_counted,
            ber: bit_errors as f64 / bits_counted as f64,
            codewords,
            codeword_errors,
            stop,
            decoder: cfg.decoder,
            nu: cfg.nu,
            t: cfg.t,
            s: cfg.s,
            modulation: cfg.modulation,
            w: cfg.w,
            iters: cfg.max_iters,
            seed: cfg.seed,
        })
    }

    fn run_batch(
        &self,
        channel: &Channel,
        range: std::ops::Range<u64>,
    ) -> Result<Vec<TrialResult>, SimError> {
        match &self.pool {
            None => {
                let mut decoder = IterativeDecoder::new(&self.code);
                range
                    .map(|i| self.run_trial(channel, &mut decoder, i))
                    .collect()
            }
            Some(pool) => pool.install(|| {
                range
                    .into_par_iter()
                    .map_init(
                        || IterativeDecoder::new(&self.code),
                        |decoder, i| self.run_trial(channel, decoder, i),
                    )
                    .collect()
            }),
        }
    }

    fn run_trial(
        &self,
        channel: &Channel,
        decoder: &mut IterativeDecoder<'_>,
        index: u64,
    ) -> Result<TrialResult, SimError> {
        let mut rng = self.trial_rng(index);
        let (n, k) = (self.code.n(), self.code.k());
        if self.config.decoder == DecoderKind::Uncoded {
            let sent = random_matrix(&mut rng, n, n);
            let llrs: LlrMatrix<T> = channel.transmit(&sent, &mut rng)?;
            let errors = sent
                .as_slice()
                .iter()
                .zip(llrs.as_slice())
                .filter(|(&b, &l)| hard_decision(l) != b)
                .count();
            return Ok(TrialResult {
                bit_errors: errors as u64,
            });
        }
        let message = random_matrix(&mut rng, k, k);
        let codeword = self.code.encode(&message).map_err(DecoderError::from)?;
        let llrs: LlrMatrix<T> = channel.transmit(&codeword, &mut rng)?;
        let iters = self.config.iteration_config();
        let decoded = match self.config.decoder {
            DecoderKind::Ibdd => {
                let hard = crate::channel::hard_decisions(&llrs);
                decoder.ibdd(&hard, &iters, None)?
            }
            DecoderKind::IbddSr => decoder.ibdd_sr(&llrs, &iters, None)?,
            DecoderKind::Hard => crate::channel::hard_decisions(&llrs),
            DecoderKind::Uncoded => unreachable!(),
        };
        let errors = match self.config.ber_mode {
            BerMode::InfoBits => (0..k)
                .map(|i| {
                    decoded.row(i)[..k]
                        .iter()
                        .zip(message.row(i))
                        .filter(|(a, b)| a != b)
                        .count()
                })
                .sum::<usize>(),
            BerMode::AllBits => decoded.hamming_distance(&codeword),
        };
        Ok(TrialResult {
            bit_errors: errors as u64,
        })
    }

    /// One point per grid value, in grid order.
    pub fn sweep(&self) -> Result<Vec<BerPoint>, SimError> {
        if self.config.ebn0_grid_db.is_empty() {
            return Err(config_err("the Eb/N0 grid is empty"));
        }
        self.config
            .ebn0_grid_db
            .iter()
            .map(|&e| self.run_point(e))
            .collect()
    }

    /// Eb/N0 where the BER crosses `target`, searched between the smallest
    /// and largest grid values.
    pub fn find_threshold(&self, target_ber: f64) -> Result<Threshold, SimError> {
        let (lo, hi) = grid_range(&self.config.ebn0_grid_db)?;
        find_threshold_with(
            |e| Ok(self.run_point(e)?.ber),
            lo,
            hi,
            target_ber,
            THRESHOLD_RESOLUTION_DB,
        )
    }
}

fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> BitMatrix {
    let mut bits = Vec::with_capacity(rows * cols);
    while bits.len() < rows * cols {
        let word: u64 = rng.random();
        let take = (rows * cols - bits.len()).min(64);
        bits.extend((0..take).map(|b| ((word >> b) & 1) as u8));
    }
    BitMatrix::from_vec(rows, cols, bits)
}

fn grid_range(grid: &[f64]) -> Result<(f64, f64), SimError> {
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if grid.is_empty() || !(lo < hi) {
        return Err(config_err(
            "threshold search needs an Eb/N0 grid with two distinct values",
        ));
    }
    Ok((lo, hi))
}

/// Outcome of a threshold search.
#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub ebn0_db: f64,
    /// Final bracket `(Eb/N0, BER)` at the low and high ends.
    pub bracket: ((f64, f64), (f64, f64)),
    /// Every evaluation in call order.
    pub evaluations: Vec<(f64, f64)>,
}

/// Bisection on a BER curve assumed to decrease with Eb/N0, down to a
/// bracket no wider than `resolution_db`, finished by interpolating
/// `log BER` linearly between the bracket ends (midpoint when an end has
/// zero BER).
pub fn find_threshold_with<F>(
    mut ber_at: F,
    lo_db: f64,
    hi_db: f64,
    target: f64,
    resolution_db: f64,
) -> Result<Threshold, SimError>
where
    F: FnMut(f64) -> Result<f64, SimError>,
{
    if !(target > 0.0 && target < 1.0) {
        return Err(config_err("target BER must lie in (0, 1)"));
    }
    if !(lo_db < hi_db) || !(resolution_db > 0.0) {
        return Err(config_err("invalid threshold search range"));
    }
    let mut evaluations = Vec::new();
    let mut eval = |x: f64, evaluations: &mut Vec<(f64, f64)>| -> Result<f64, SimError> {
        let b = ber_at(x)?;
        evaluations.push((x, b));
        Ok(b)
    };
    let (mut lo, mut hi) = (lo_db, hi_db);
    let mut ber_lo = eval(lo, &mut evaluations)?;
    let mut ber_hi = eval(hi, &mut evaluations)?;
    if !(ber_lo >= target && ber_hi <= target) || ber_lo == ber_hi {
        return Err(SimError::NoBracket {
            target,
            lo_db,
            hi_db,
            lo_ber: ber_lo,
            hi_ber: ber_hi,
        });
    }
    while hi - lo > resolution_db {
        let mid = 0.5 * (lo + hi);
        let b = eval(mid, &mut evaluations)?;
        if b > target {
            lo = mid;
            ber_lo = b;
        } else {
            hi = mid;
            ber_hi = b;
        }
    }
    let ebn0_db = if ber_lo > 0.0 && ber_hi > 0.0 && ber_lo != ber_hi {
        let (a, b, tgt) = (ber_lo.log10(), ber_hi.log10(), target.log10());
        lo + (a - tgt) / (a - b) * (hi - lo)
    } else {
        0.5 * (lo + hi)
    };
    Ok(Threshold {
        ebn0_db,
        bracket: ((lo, ber_lo), (hi, ber_hi)),
        evaluations,
    })
}

/// Threshold obtained for each scale in a `w` search.
#[derive(Debug, Clone, PartialEq)]
pub struct WCandidate {
    pub w: f64,
    /// `None` when the target was not crossed inside the search range.
    pub threshold_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WOptimum {
    pub w: f64,
    pub threshold_db: f64,
    pub candidates: Vec<WCandidate>,
}

/// Runs the threshold search for every `w` (IBDD-SR) and keeps the one with
/// the lowest threshold, ties going to the smaller `w`. A scale whose curve
/// never crosses the target ranks below every scale that does.
pub fn optimize_w(base: &SimConfig, w_grid: &[f64], target_ber: f64) -> Result<WOptimum, SimError> {
    optimize_w_with(w_grid, |w| {
        let cfg = SimConfig {
            decoder: DecoderKind::IbddSr,
            w,
            ..base.clone()
        };
        Simulation::<f64>::new(cfg)?
            .find_threshold(target_ber)
            .map(|t| t.ebn0_db)
    })
}

/// [`optimize_w`] over an arbitrary threshold function.
pub fn optimize_w_with<F>(w_grid: &[f64], mut threshold_of: F) -> Result<WOptimum, SimError>
where
    F: FnMut(f64) -> Result<f64, SimError>,
{
    if w_grid.is_empty() {
        return Err(config_err("the w grid is empty"));
    }
    let mut sorted = w_grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut candidates = Vec::with_capacity(sorted.len());
    let mut last_no_bracket = None;
    for &w in &sorted {
        match threshold_of(w) {
            Ok(th) => candidates.push(WCandidate {
                w,
                threshold_db: Some(th),
            }),
            Err(e @ SimError::NoBracket { .. }) => {
                candidates.push(WCandidate {
                    w,
                    threshold_db: None,
                });
                last_no_bracket = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    let best = candidates
        .iter()
        .filter_map(|c| c.threshold_db.map(|th| (c.w, th)))
        // strict comparison keeps the smaller w on ties (grid is ascending)
        .fold(None, |best: Option<(f64, f64)>, (w, th)| match best {
            Some((_, b)) if b <= th => best,
            _ => Some((w, th)),
        });
    match best {
        Some((w, threshold_db)) => Ok(WOptimum {
            w,
            threshold_db,
            candidates,
        }),
        None => Err(last_no_bracket.expect("non-empty grid without any threshold")),
    }
}

/// Coarse grid `step, 2·step, …, max` for the `w` search.
pub fn w_grid(max: f64, step: f64) -> Vec<f64> {
    let count = (max / step).round() as usize;
    (1..=count)
        .map(|i| round_to(i as f64 * step, step))
        .collect()
}

/// Grid of spacing `step` covering `center ± half_width`, clipped at zero.
pub fn refine_grid(center: f64, half_width: f64, step: f64) -> Vec<f64> {
    let count = (half_width / step).round() as i64;
    (-count..=count)
        .map(|i| round_to(center + i as f64 * step, step))
        .filter(|&w| w >= 0.0)
        .collect()
}

fn round_to(x: f64, step: f64) -> f64 {
    let digits = (-step.log10()).ceil().max(0.0) as i32 + 1;
    let scale = 10f64.powi(digits);
    (x * scale).round() / scale
}

/// Median `|L|` over one noisy codeword at `ebn0_db`, a scale for `w` grids.
pub fn typical_reliability(cfg: &SimConfig, ebn0_db: f64) -> Result<f64, SimError> {
    let sim = Simulation::<f64>::new(SimConfig {
        workers: 1,
        ..cfg.clone()
    })?;
    let channel = Channel::new(
        sim.modulation.clone(),
        ChannelConfig::new(sim.sigma2(ebn0_db), cfg.seed),
        sim.code.n(),
    )?;
    let mut rng = sim.trial_rng(0);
    let message = random_matrix(&mut rng, sim.code.k(), sim.code.k());
    let cw = sim.code.encode(&message).map_err(DecoderError::from)?;
    let llrs: LlrMatrix<f64> = channel.transmit(&cw, &mut rng)?;
    let mut mags: Vec<f64> = llrs.as_slice().iter().map(|l| l.abs()).collect();
    mags.sort_by(f64::total_cmp);
    Ok(mags[mags.len() / 2])
}

/// Warnings for grid neighbours whose BER increases with Eb/N0 by more than
/// Monte Carlo noise (three standard deviations of the error counts).
pub fn monotonicity_warnings(points: &[BerPoint]) -> Vec<String> {
    let mut sorted: Vec<&BerPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.ebn0_db.total_cmp(&b.ebn0_db));
    sorted
        .windows(2)
        .filter_map(|pair| {
            let (a, b) = (pair[0], pair[1]);
            let sd =
                |p: &BerPoint| (p.bit_errors.max(1) as f64).sqrt() / p.bits_counted.max(1) as f64;
            (b.ber > a.ber + 3.0 * (sd(a) + sd(b))).then(|| {
                format!(
                    "BER rises from {:e} at {} dB to {:e} at {} dB",
                    a.ber, a.ebn0_db, b.ber, b.ebn0_db
                )
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SimConfig {
        SimConfig {
            nu: 5,
            t: 2,
            s: 7,
            modulation: 2,
            decoder: DecoderKind::IbddSr,
            w: 2.0,
            max_iters: 4,
            ebn0_grid_db: vec![3.0, 5.0, 7.0],
            min_error_events: 20,
            max_codewords: 400,
            seed: 5,
            ..SimConfig::default()
        }
    }

    #[test]
    fn config_keys_and_file() {
        let text = "# comment\nnu = 4\nt=2\ns=0\nM=16\ndecoder=ibdd\nebn0=1, 2,3.5\nber-mode=all_bits\nearly-stop=true\n";
        let mut cfg = SimConfig::default();
        for (k, v) in parse_config_file(text).unwrap() {
            assert!(cfg.apply(&k, &v).unwrap());
        }
        assert_eq!((cfg.nu, cfg.t, cfg.s, cfg.modulation), (4, 2, 0, 16));
        assert_eq!(cfg.decoder, DecoderKind::Ibdd);
        assert_eq!(cfg.ebn0_grid_db, vec![1.0, 2.0, 3.5]);
        assert_eq!(cfg.ber_mode, BerMode::AllBits);
        assert!(cfg.early_stop);
        assert!(!cfg.apply("out", "x.csv").unwrap());
        assert!(cfg.apply("decoder", "ldpc").is_err());
        assert!(parse_config_file("nu 4").is_err());
        assert!(cfg.apply("iters", "ten").is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = small_cfg();
        cfg.min_error_events = 0;
        assert!(matches!(
            Simulation::<f64>::new(cfg),
            Err(SimError::Config(_))
        ));
        let mut cfg = small_cfg();
        cfg.modulation = 8;
        assert!(matches!(
            Simulation::<f64>::new(cfg),
            Err(SimError::Channel(_))
        ));
        let mut cfg = small_cfg();
        cfg.t = 0;
        assert!(matches!(
            Simulation::<f64>::new(cfg),
            Err(SimError::Code(_))
        ));
    }

    #[test]
    fn noiseless_limit_has_no_errors() {
        let mut cfg = small_cfg();
        cfg.max_codewords = 50;
        let sim = Simulation::<f64>::new(cfg).unwrap();
        let p = sim.run_point(40.0).unwrap();
        assert_eq!(p.bit_errors, 0);
        assert_eq!(p.codewords, 50);
        assert_eq!(p.stop, StopReason::CodewordCap);
        assert_eq!(p.bits_counted, 50 * 14 * 14);
    }

    #[test]
    fn stops_on_error_events() {
        let sim = Simulation::<f64>::new(small_cfg()).unwrap();
        let p = sim.run_point(0.0).unwrap();
        assert_eq!(p.stop, StopReason::ErrorEvents);
        assert_eq!(p.codeword_errors, 20);
        assert!(p.bit_errors <= p.bits_counted);
        assert!(p.bit_errors >= p.codeword_errors);
    }

    #[test]
    fn sweep_rows_follow_grid_order() {
        let sim = Simulation::<f64>::new(small_cfg()).unwrap();
        let pts = sim.sweep().unwrap();
        assert_eq!(
            pts.iter().map(|p| p.ebn0_db).collect::<Vec<_>>(),
            vec![3.0, 5.0, 7.0]
        );
        let csv = csv_string(&pts);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("ibdd_sr,5,2,7,2,2,4,3,"));
        assert!(lines[1].ends_with(",5"));
        assert!(monotonicity_warnings(&pts).is_empty());
    }

    #[test]
    fn bisection_on_a_synthetic_curve() {
        // BER = 10^-(x/2): crosses 1e-4 at exactly 8 dB.
        let th = find_threshold_with(|x| Ok(10f64.powf(-x / 2.0)), 0.0, 13.0, 1e-4, 0.02).unwrap();
        assert!((th.ebn0_db - 8.0).abs() < 1e-9);
        let (lo, hi) = th.bracket;
        assert!(hi.0 - lo.0 <= 0.02);
        // Steeper and non-log-linear: erfc-like waterfall.
        let f = |x: f64| 0.5 * (-(x * x) / 4.0).exp();
        let analytic = (4.0 * (0.5f64 / 1e-4).ln()).sqrt();
        let th = find_threshold_with(|x| Ok(f(x)), 0.0, 10.0, 1e-4, 0.02).unwrap();
        assert!((th.ebn0_db - analytic).abs() < 0.02);
    }

    #[test]
    fn bisection_reports_missing_bracket() {
        let floor = |x: f64| Ok(1e-3 + 10f64.powf(-x));
        assert!(matches!(
            find_threshold_with(floor, 0.0, 10.0, 1e-4, 0.02),
            Err(SimError::NoBracket { .. })
        ));
        assert!(find_threshold_with(floor, 0.0, 10.0, 2.0, 0.02).is_err());
    }

    #[test]
    fn w_selection_prefers_lowest_threshold_then_smaller_w() {
        let opt =
            optimize_w_with(&[0.5, 1.0, 1.5, 2.0], |w| Ok((w - 1.2f64).abs().max(0.3))).unwrap();
        assert_eq!(opt.w, 1.0);
        let opt = optimize_w_with(&[0.0, 1.0], |w| {
            if w == 0.0 {
                Err(SimError::NoBracket {
                    target: 1e-4,
                    lo_db: 0.0,
                    hi_db: 1.0,
                    lo_ber: 0.1,
                    hi_ber: 0.01,
                })
            } else {
                Ok(5.0)
            }
        })
        .unwrap();
        assert_eq!(opt.w, 1.0);
        assert_eq!(opt.candidates[0].threshold_db, None);
        assert!(optimize_w_with(&[], |_| Ok(1.0)).is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(w_grid(0.5, 0.1), vec![0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(
            refine_grid(1.13, 0.03, 0.01),
            vec![1.1, 1.11, 1.12, 1.13, 1.14, 1.15, 1.16]
        );
        assert_eq!(refine_grid(0.01, 0.02, 0.01), vec![0.0, 0.01, 0.02, 0.03]);
    }

    #[test]
    fn typical_reliability_of_bpsk_is_about_two_over_sigma2() {
        let cfg = SimConfig::default();
        let r = typical_reliability(&cfg, 6.0).unwrap();
        let sigma2 = ebn0_to_sigma2(
            6.0,
            ProductCode::new(BchCode::new(8, 3, 63).unwrap()).rate(),
            1,
        );
        assert!((r / (2.0 / sigma2) - 1.0).abs() < 0.05, "{r}");
    }
}
