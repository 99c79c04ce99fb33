//! Slow reference implementations for cross-checking the production paths:
//! a codebook-scanning bounded distance decoder, literal transcriptions of the
//! two iterative decoders, and a probability-domain LLR. The suites at the
//! end run them against the production code.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bch::{BchCode, DecodeOutcome};
use crate::channel::{
    hard_decision, hard_decisions, Channel, ChannelConfig, LlrMatrix, Modulation,
};
use crate::decoder::{ibdd_sr, IterationConfig, IterativeDecoder, Stage};
use crate::galois::BinPoly;
use crate::product::{BitMatrix, ProductCode};
use crate::scalar::Real;

/// Largest component dimension whose codebook is enumerated.
pub const MAX_ORACLE_DIMENSION: usize = 16;

/// Every codeword of a small BCH code.
#[derive(Debug, Clone)]
pub struct CodebookOracle {
    code: BchCode,
    codewords: Vec<Vec<u8>>,
}

impl CodebookOracle {
    /// Enumerates the codebook as `m(x)·g(x)` over all messages of degree
    /// below `k`, without going through the systematic encoder. Returns `None`
    /// when `k` exceeds [`MAX_ORACLE_DIMENSION`].
    pub fn new(code: &BchCode) -> Option<Self> {
        let (n, k) = (code.n(), code.k());
        if k > MAX_ORACLE_DIMENSION {
            return None;
        }
        let codewords = (0..1u64 << k)
            .map(|m| {
                let c = BinPoly::from_bits(m).mul(code.generator());
                let coeffs = c.coeffs();
                // position p holds the coefficient of x^(n-1-p)
                (0..n)
                    .map(|p| coeffs.get(n - 1 - p).copied().unwrap_or(0))
                    .collect()
            })
            .collect();
        Some(CodebookOracle {
            code: code.clone(),
            codewords,
        })
    }

    pub fn code(&self) -> &BchCode {
        &self.code
    }

    pub fn codewords(&self) -> &[Vec<u8>] {
        &self.codewords
    }

    /// Returns the codeword within distance `t` of `received`, if any.
    pub fn brute_force_bdd(&self, received: &[u8]) -> DecodeOutcome {
        assert_eq!(received.len(), self.code.n());
        let t = self.code.t();
        for c in &self.codewords {
            let d = c.iter().zip(received).filter(|(a, b)| a != b).count();
            if d <= t {
                return DecodeOutcome::success(c.clone());
            }
        }
        DecodeOutcome::failure(received.to_vec())
    }

    /// Distance from `received` to the nearest codeword.
    pub fn distance_to_code(&self, received: &[u8]) -> usize {
        self.codewords
            .iter()
            .map(|c| c.iter().zip(received).filter(|(a, b)| a != b).count())
            .min()
            .unwrap_or(usize::MAX)
    }
}

fn rows_of(m: &BitMatrix) -> Vec<Vec<u8>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn from_rows(rows: Vec<Vec<u8>>) -> BitMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    BitMatrix::from_vec(n, m, rows.into_iter().flatten().collect())
}

/// Conventional IBDD, one snapshot per stage, rows first.
pub fn reference_ibdd(
    oracle: &CodebookOracle,
    received: &BitMatrix,
    cfg: &IterationConfig,
) -> BitMatrix {
    let n = oracle.code().n();
    let mut psi = received.clone();
    for _ in 0..cfg.max_iters {
        // row stage
        let snapshot = rows_of(&psi);
        let mut next = snapshot.clone();
        for i in 0..n {
            let out = oracle.brute_force_bdd(&snapshot[i]);
            if out.is_success() {
                next[i] = out.word;
            }
        }
        psi = from_rows(next);
        // column stage
        let mut next = psi.clone();
        for j in 0..n {
            let out = oracle.brute_force_bdd(&psi.column(j));
            if out.is_success() {
                for i in 0..n {
                    next.set(i, j, out.word[i]);
                }
            }
        }
        psi = next;
    }
    psi
}

/// IBDD-SR transcribed stage by stage with an explicit `μ` matrix per stage.
pub fn reference_ibdd_sr(
    oracle: &CodebookOracle,
    llrs: &LlrMatrix<f64>,
    cfg: &IterationConfig,
) -> BitMatrix {
    reference_ibdd_sr_scheduled(oracle, llrs, cfg, Stage::Rows)
}

/// [`reference_ibdd_sr`] with a selectable first stage.
pub fn reference_ibdd_sr_scheduled(
    oracle: &CodebookOracle,
    llrs: &LlrMatrix<f64>,
    cfg: &IterationConfig,
    first: Stage,
) -> BitMatrix {
    let n = oracle.code().n();
    let w = cfg.w;
    let mut psi = BitMatrix::from_fn(n, n, |i, j| hard_decision(llrs.get(i, j)));
    let order = match first {
        Stage::Rows => [Stage::Rows, Stage::Columns],
        Stage::Columns => [Stage::Columns, Stage::Rows],
    };
    for _ in 0..cfg.max_iters {
        for stage in order {
            let mut mu = vec![vec![0i8; n]; n];
            for line in 0..n {
                let input: Vec<u8> = match stage {
                    Stage::Rows => psi.row(line).to_vec(),
                    Stage::Columns => psi.column(line),
                };
                let out = oracle.brute_force_bdd(&input);
                for (pos, &m) in out.mu.iter().enumerate() {
                    match stage {
                        Stage::Rows => mu[line][pos] = m,
                        Stage::Columns => mu[pos][line] = m,
                    }
                }
            }
            psi = BitMatrix::from_fn(n, n, |i, j| {
                hard_decision(w * f64::from(mu[i][j]) + llrs.get(i, j))
            });
        }
    }
    psi
}

/// `ln(Σ_{a∈S¹} p(y|a) / Σ_{a∈S⁰} p(y|a))` summed over the whole
/// constellation in the probability domain. Both sums are scaled by the
/// largest likelihood so that high-SNR observations do not underflow.
pub fn llr_probability_domain(
    modulation: &Modulation,
    y: (f64, f64),
    sigma2: f64,
    bit: usize,
) -> f64 {
    let sq = |a: (f64, f64)| {
        let (di, dq) = (y.0 - a.0, y.1 - a.1);
        di * di + dq * dq
    };
    let nearest = modulation
        .points()
        .iter()
        .map(|&a| sq(a))
        .fold(f64::INFINITY, f64::min);
    let likelihood =
        |label: usize| (-(sq(modulation.point(label)) - nearest) / (2.0 * sigma2)).exp();
    let (zeros, ones) = modulation.bit_partition(bit);
    let p1: f64 = ones.into_iter().map(likelihood).sum();
    let p0: f64 = zeros.into_iter().map(likelihood).sum();
    (p1 / p0).ln()
}

/// Result of one self-test suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SuiteReport {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        SuiteReport {
            name,
            passed,
            detail,
        }
    }
}

/// Fast decoder against the codebook scan on every word of length 15 for
/// the `(15,7)`, `t = 2` code. Also requires at least one miscorrection (a
/// codeword plus three errors decoded to a different codeword) and one
/// decoding failure to be present among the words checked.
pub fn bdd_suite() -> SuiteReport {
    let code = BchCode::new(4, 2, 0).expect("(15,7) code");
    let oracle = CodebookOracle::new(&code).expect("small codebook");
    let n = code.n();
    let (mut mismatches, mut failures, mut successes) = (0usize, 0usize, 0usize);
    for x in 0u32..1 << n {
        let word: Vec<u8> = (0..n).map(|p| ((x >> p) & 1) as u8).collect();
        let fast = code.bdd_decode(&word).expect("length n");
        let slow = oracle.brute_force_bdd(&word);
        if fast != slow {
            mismatches += 1;
        }
        if slow.is_success() {
            successes += 1;
        } else {
            failures += 1;
        }
    }
    let sent = &oracle.codewords()[1];
    let miscorrection = (0u32..1 << n)
        .filter(|x| x.count_ones() == 3)
        .map(|x| {
            (0..n)
                .map(|p| sent[p] ^ ((x >> p) & 1) as u8)
                .collect::<Vec<u8>>()
        })
        .find_map(|r| {
            let out = code.bdd_decode(&r).ok()?;
            (out.is_success() && out.word != *sent && out == oracle.brute_force_bdd(&r))
                .then_some(r)
        });
    let passed = mismatches == 0 && failures > 0 && miscorrection.is_some();
    SuiteReport::new(
        "bdd",
        passed,
        format!(
            "{} words, {} mismatches, {} decoded, {} failures, miscorrection found: {}",
            1u32 << n,
            mismatches,
            successes,
            failures,
            miscorrection.is_some()
        ),
    )
}

/// Reference magnitude below which LLR errors are measured against
/// `LLR_RELATIVE_FLOOR` instead of `|L|`. A ratio of likelihoods within
/// `1e-7` of one is only resolved to about `2e-16` in double precision, so
/// a relative error is meaningless there for either implementation.
pub const LLR_RELATIVE_FLOOR: f64 = 1e-6;

/// Largest relative error between the log-sum demapper and
/// [`llr_probability_domain`] over `samples` random observations per
/// constellation, with the denominator floored at [`LLR_RELATIVE_FLOOR`].
/// Noise variances are drawn log-uniformly from `[1e-2, 1]`.
pub fn llr_max_relative_error(order: usize, samples: usize, seed: u64) -> f64 {
    let modulation = Modulation::new(order).expect("supported order");
    let m = modulation.bits_per_symbol();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; m];
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let sigma2 = 10f64.powf(rng.random_range(-2.0..0.0));
        let sigma = sigma2.sqrt();
        let (xi, xq) = modulation.point(rng.random_range(0..order));
        let mut y = (xi + sigma * f64::standard_normal(&mut rng), 0.0);
        if !modulation.is_real() {
            y.1 = xq + sigma * f64::standard_normal(&mut rng);
        }
        modulation.demap(y, sigma2, &mut out);
        for (bit, &l) in out.iter().enumerate() {
            let reference = llr_probability_domain(&modulation, y, sigma2, bit);
            worst = worst.max((l - reference).abs() / reference.abs().max(LLR_RELATIVE_FLOOR));
        }
    }
    worst
}

/// [`llr_max_relative_error`] for every supported order against `tolerance`.
pub fn llr_suite(samples: usize, seed: u64, tolerance: f64) -> SuiteReport {
    let errors: Vec<(usize, f64)> = [2, 16, 64, 256]
        .into_iter()
        .map(|order| (order, llr_max_relative_error(order, samples, seed)))
        .collect();
    let passed = errors.iter().all(|&(_, e)| e <= tolerance);
    let detail = errors
        .iter()
        .map(|(o, e)| format!("M={o}: {e:.2e}"))
        .collect::<Vec<_>>()
        .join(", ");
    SuiteReport::new(
        "llr",
        passed,
        format!("max relative error {detail} (tolerance {tolerance:e})"),
    )
}

/// Counts of the decoder degeneracy checks over a run of random trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecoderCheck {
    pub trials: usize,
    /// `w = 0` output differs from the channel decisions.
    pub zero_scale: usize,
    /// First row stage with `w > max |L|` differs from IBDD's.
    pub large_scale: usize,
    /// Production IBDD differs from [`reference_ibdd`].
    pub ibdd_reference: usize,
    /// Production IBDD-SR differs from [`reference_ibdd_sr`].
    pub ibdd_sr_reference: usize,
}

impl DecoderCheck {
    pub fn is_clean(&self) -> bool {
        self.zero_scale + self.large_scale + self.ibdd_reference + self.ibdd_sr_reference == 0
    }
}

/// Runs the decoder degeneracy checks on the product of the `(15,7)` code
/// over BPSK at noise levels where the component decoders both succeed and
/// fail.
pub fn decoder_check(trials: usize, seed: u64) -> DecoderCheck {
    let code = BchCode::new(4, 2, 0).expect("(15,7) code");
    let oracle = CodebookOracle::new(&code).expect("small codebook");
    let pc = ProductCode::new(code);
    let (n, k) = (pc.n(), pc.k());
    let modulation = Modulation::new(2).expect("BPSK");
    let mut decoder = IterativeDecoder::new(&pc);
    let mut check = DecoderCheck {
        trials,
        ..DecoderCheck::default()
    };
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let sigma2 = rng.random_range(0.3..0.8);
        let channel = Channel::new(modulation.clone(), ChannelConfig::new(sigma2, seed), n)
            .expect("valid channel");
        let message = BitMatrix::from_fn(k, k, |_, _| rng.random_range(0..2u8));
        let sent = pc.encode(&message).expect("k x k message");
        let llrs: LlrMatrix<f64> = channel.transmit(&sent, &mut rng).expect("n x n codeword");
        let hard = hard_decisions(&llrs);
        let iters = rng.random_range(1..=4);
        let w = rng.random_range(0.5..6.0);

        let zero = ibdd_sr(&pc, &llrs, &IterationConfig::new(iters, 0.0)).expect("valid input");
        check.zero_scale += usize::from(zero != hard);

        let big = llrs.max_abs() + 1.0;
        let sr_stage = decoder.ibdd_sr_row_stage(&llrs, big).expect("valid input");
        let hard_stage = decoder.ibdd_row_stage(&hard).expect("valid input");
        check.large_scale += usize::from(sr_stage != hard_stage);

        let cfg = IterationConfig::new(iters, w);
        let fast = decoder.ibdd(&hard, &cfg, None).expect("valid input");
        check.ibdd_reference += usize::from(fast != reference_ibdd(&oracle, &hard, &cfg));
        let fast = decoder.ibdd_sr(&llrs, &cfg, None).expect("valid input");
        check.ibdd_sr_reference += usize::from(fast != reference_ibdd_sr(&oracle, &llrs, &cfg));
    }
    check
}

pub fn decoder_suite(trials: usize, seed: u64) -> SuiteReport {
    let c = decoder_check(trials, seed);
    SuiteReport::new(
        "decoder",
        c.is_clean(),
        format!(
            "{} trials; mismatches: w=0 {}, large w {}, IBDD reference {}, IBDD-SR reference {}",
            c.trials, c.zero_scale, c.large_scale, c.ibdd_reference, c.ibdd_sr_reference
        ),
    )
}

/// Every suite with its default size.
pub fn all_suites(seed: u64) -> Vec<SuiteReport> {
    vec![
        bdd_suite(),
        llr_suite(10_000, seed, 1e-9),
        decoder_suite(1000, seed),
    ]
}
