//! Iterative decoding of product codes from hard component decoders.
//!
//! Both decoders alternate a row stage and a column stage, rows first. Within
//! a stage every line is decoded from the matrix produced by the previous
//! stage; a line only ever reads and writes its own bits, so decoding the
//! lines in place is equivalent to decoding them from a snapshot.
//!
//! * [`ibdd`]: a successfully decoded line is replaced by the decoded word,
//!   a failed line is left as it is.
//! * [`ibdd_sr`]: each bit of a line becomes `B(w·μ + L)`, where `μ ∈ {±1}`
//!   is the decoded bit on success and `0` on failure, and `L` is the bit's
//!   channel LLR.

use thiserror::Error;

use crate::bch::{BchCode, BddScratch};
use crate::channel::{hard_decision, LlrMatrix};
use crate::product::{check_dims, transpose_into, BitMatrix, ProductCode, ProductError};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecoderError {
    #[error(transparent)]
    Dimension(#[from] ProductError),
    #[error("invalid iteration settings: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationConfig {
    /// Number of full (row + column) iterations.
    pub max_iters: usize,
    /// Reliability scaling; ignored by [`ibdd`].
    pub w: f64,
    /// Stop once a full iteration leaves the state unchanged. Every later
    /// iteration would reproduce the same state, so the output is unaffected.
    pub early_stop: bool,
}

impl IterationConfig {
    pub fn new(max_iters: usize, w: f64) -> Self {
        IterationConfig {
            max_iters,
            w,
            early_stop: false,
        }
    }

    fn validate(&self) -> Result<(), DecoderError> {
        if self.max_iters == 0 {
            return Err(DecoderError::InvalidConfig(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.w >= 0.0 && self.w.is_finite()) {
            return Err(DecoderError::InvalidConfig(format!(
                "w must be finite and non-negative, got {}",
                self.w
            )));
        }
        Ok(())
    }
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig::new(10, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Rows,
    Columns,
}

/// Statistics of one half-iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageTrace {
    pub iteration: usize,
    pub stage: Stage,
    pub successes: usize,
    pub failures: usize,
    /// Bits that differ from the stage input.
    pub changed_bits: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecoderTrace {
    pub stages: Vec<StageTrace>,
}

/// How a stage turns a component decode into new line bits.
trait LineRule {
    /// `line` holds the stage input; `decoded` holds the decoder output when
    /// `success`, and the input otherwise. `row` is the line's index in the
    /// current orientation.
    fn apply(&self, row: usize, line: &mut [u8], decoded: &[u8], success: bool);
}

struct Replace;

impl LineRule for Replace {
    #[inline]
    fn apply(&self, _row: usize, line: &mut [u8], decoded: &[u8], success: bool) {
        if success {
            line.copy_from_slice(decoded);
        }
    }
}

struct ScaledReliability<'a, T> {
    w: T,
    /// LLRs in the current orientation, row-major.
    llrs: &'a [T],
    n: usize,
}

impl<T: Real> LineRule for ScaledReliability<'_, T> {
    #[inline]
    fn apply(&self, row: usize, line: &mut [u8], decoded: &[u8], success: bool) {
        let llrs = &self.llrs[row * self.n..(row + 1) * self.n];
        if success {
            for ((out, &d), &l) in line.iter_mut().zip(decoded).zip(llrs) {
                let mu = if d == 1 { self.w } else { -self.w };
                *out = hard_decision(mu + l);
            }
        } else {
            for (out, &l) in line.iter_mut().zip(llrs) {
                *out = hard_decision(l);
            }
        }
    }
}

#[derive(Debug)]
struct LineBuffers {
    line: Vec<u8>,
    before: Vec<u8>,
    scratch: BddScratch,
}

/// Iterative product-code decoder with reusable buffers.
#[derive(Debug)]
pub struct IterativeDecoder<'a> {
    code: &'a ProductCode,
    buffers: LineBuffers,
    state: Vec<u8>,
    transposed: Vec<u8>,
}

impl<'a> IterativeDecoder<'a> {
    pub fn new(code: &'a ProductCode) -> Self {
        let n = code.n();
        IterativeDecoder {
            code,
            buffers: LineBuffers {
                line: vec![0; n],
                before: vec![0; n],
                scratch: BddScratch::default(),
            },
            state: vec![0; n * n],
            transposed: vec![0; n * n],
        }
    }

    pub fn code(&self) -> &ProductCode {
        self.code
    }

    /// Conventional iterative BDD starting from the hard decisions `received`.
    pub fn ibdd(
        &mut self,
        received: &BitMatrix,
        cfg: &IterationConfig,
        trace: Option<&mut DecoderTrace>,
    ) -> Result<BitMatrix, DecoderError> {
        cfg.validate()?;
        let n = self.code.n();
        check_dims((n, n), received.dims())?;
        self.state.copy_from_slice(received.as_slice());
        self.iterate(cfg, &Replace, &Replace, trace);
        Ok(BitMatrix::from_vec(n, n, self.state.clone()))
    }

    /// Iterative BDD with scaled reliability.
    pub fn ibdd_sr<T: Real>(
        &mut self,
        llrs: &LlrMatrix<T>,
        cfg: &IterationConfig,
        trace: Option<&mut DecoderTrace>,
    ) -> Result<BitMatrix, DecoderError> {
        cfg.validate()?;
        let n = self.code.n();
        check_dims((n, n), llrs.dims())?;
        for (s, &l) in self.state.iter_mut().zip(llrs.as_slice()) {
            *s = hard_decision(l);
        }
        let llrs_t = llrs.transpose();
        let w = T::of(cfg.w);
        let rows = ScaledReliability {
            w,
            llrs: llrs.as_slice(),
            n,
        };
        let cols = ScaledReliability {
            w,
            llrs: llrs_t.as_slice(),
            n,
        };
        self.iterate(cfg, &rows, &cols, trace);
        Ok(BitMatrix::from_vec(n, n, self.state.clone()))
    }

    /// The first row stage of [`Self::ibdd`] alone.
    pub fn ibdd_row_stage(&mut self, received: &BitMatrix) -> Result<BitMatrix, DecoderError> {
        let n = self.code.n();
        check_dims((n, n), received.dims())?;
        let mut out = received.clone();
        run_stage(
            self.code.component(),
            out.as_mut_slice(),
            &mut self.buffers,
            &Replace,
        );
        Ok(out)
    }

    /// The first row stage of [`Self::ibdd_sr`] alone.
    pub fn ibdd_sr_row_stage<T: Real>(
        &mut self,
        llrs: &LlrMatrix<T>,
        w: f64,
    ) -> Result<BitMatrix, DecoderError> {
        let n = self.code.n();
        check_dims((n, n), llrs.dims())?;
        let mut out = crate::channel::hard_decisions(llrs);
        let rule = ScaledReliability {
            w: T::of(w),
            llrs: llrs.as_slice(),
            n,
        };
        run_stage(
            self.code.component(),
            out.as_mut_slice(),
            &mut self.buffers,
            &rule,
        );
        Ok(out)
    }

    fn iterate(
        &mut self,
        cfg: &IterationConfig,
        rows: &impl LineRule,
        cols: &impl LineRule,
        mut trace: Option<&mut DecoderTrace>,
    ) {
        let n = self.code.n();
        let component = self.code.component();
        for iteration in 1..=cfg.max_iters {
            let row_stats = run_stage(component, &mut self.state, &mut self.buffers, rows);
            transpose_into(&self.state, n, n, &mut self.transposed);
            let col_stats = run_stage(component, &mut self.transposed, &mut self.buffers, cols);
            transpose_into(&self.transposed, n, n, &mut self.state);
            if let Some(t) = trace.as_deref_mut() {
                for (stage, (successes, failures, changed_bits)) in
                    [(Stage::Rows, row_stats), (Stage::Columns, col_stats)]
                {
                    t.stages.push(StageTrace {
                        iteration,
                        stage,
                        successes,
                        failures,
                        changed_bits,
                    });
                }
            }
            // Neither stage moved a bit, so the state is a fixed point.
            if cfg.early_stop && row_stats.2 == 0 && col_stats.2 == 0 {
                break;
            }
        }
    }
}

/// Runs one stage over the rows of `matrix`; returns (successes, failures, changed bits).
fn run_stage(
    component: &BchCode,
    matrix: &mut [u8],
    buffers: &mut LineBuffers,
    rule: &impl LineRule,
) -> (usize, usize, usize) {
    let n = component.n();
    let (mut ok, mut failed, mut changed) = (0, 0, 0);
    let LineBuffers {
        line,
        before,
        scratch,
    } = buffers;
    for (i, row) in matrix.chunks_exact_mut(n).enumerate() {
        line.copy_from_slice(row);
        before.copy_from_slice(row);
        let success = component.decode_in_place(line, scratch);
        if success {
            ok += 1;
        } else {
            failed += 1;
        }
        rule.apply(i, row, line, success);
        changed += before
            .iter()
            .zip(row.iter())
            .filter(|(a, b)| a != b)
            .count();
    }
    (ok, failed, changed)
}

/// Conventional IBDD on hard decisions `received`.
pub fn ibdd(
    code: &ProductCode,
    received: &BitMatrix,
    cfg: &IterationConfig,
) -> Result<BitMatrix, DecoderError> {
    IterativeDecoder::new(code).ibdd(received, cfg, None)
}

/// IBDD with scaled reliability on channel LLRs.
pub fn ibdd_sr<T: Real>(
    code: &ProductCode,
    llrs: &LlrMatrix<T>,
    cfg: &IterationConfig,
) -> Result<BitMatrix, DecoderError> {
    IterativeDecoder::new(code).ibdd_sr(llrs, cfg, None)
}

/// Information bits (top-left `k × k` block) of a decoded matrix.
pub fn extract_message(code: &ProductCode, decoded: &BitMatrix) -> Result<BitMatrix, DecoderError> {
    Ok(code.extract_message(decoded)?)
}
