//! BICM over AWGN: random bit interleaving, Gray-labelled square QAM (or
//! BPSK), complex Gaussian noise, exact log-sum LLRs and de-interleaving.
//!
//! LLRs are `ln P(b=1|y) / P(b=0|y)`, so a positive value favours bit 1.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::product::BitMatrix;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("unsupported constellation size {0} (expected 2, 16, 64 or 256)")]
    UnsupportedConstellation(usize),
    #[error("{bits} code bits do not fill whole {m}-bit symbols")]
    DimensionMismatch { bits: usize, m: usize },
    #[error("noise variance must be positive and finite, got {0}")]
    InvalidNoise(f64),
}

/// Hard decision `B(L)`: 1 for `L > 0`, 0 for `L < 0`, ties to 1.
#[inline]
pub fn hard_decision<T: Real>(llr: T) -> u8 {
    if llr < T::zero() {
        0
    } else {
        1
    }
}

/// Applies [`hard_decision`] to every entry.
pub fn hard_decisions<T: Real>(llrs: &LlrMatrix<T>) -> BitMatrix {
    BitMatrix::from_vec(
        llrs.rows(),
        llrs.cols(),
        llrs.as_slice().iter().map(|&l| hard_decision(l)).collect(),
    )
}

/// Per-real-dimension noise variance for a given Eb/N0, with unit symbol
/// energy and `N0 = 2σ²`.
pub fn ebn0_to_sigma2(ebn0_db: f64, rate: f64, bits_per_symbol: usize) -> f64 {
    let ebn0 = 10f64.powf(ebn0_db / 10.0);
    1.0 / (2.0 * rate * bits_per_symbol as f64 * ebn0)
}

#[inline]
fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Gray-labelled PAM along one axis.
#[derive(Debug, Clone)]
struct Axis {
    bits: usize,
    /// Amplitude of each level, ascending.
    levels: Vec<f64>,
    /// `ones[b]` / `zeros[b]`: levels whose label has bit `b` (MSB first) set / clear.
    ones: Vec<Vec<usize>>,
    zeros: Vec<Vec<usize>>,
    /// Label → level index.
    level_of_label: Vec<usize>,
}

impl Axis {
    fn new(bits: usize, scale: f64) -> Self {
        let count = 1usize << bits;
        let levels: Vec<f64> = (0..count)
            .map(|i| (2.0 * i as f64 - (count as f64 - 1.0)) * scale)
            .collect();
        let mut level_of_label = vec![0; count];
        for i in 0..count {
            level_of_label[gray(i)] = i;
        }
        let mut ones = vec![Vec::new(); bits];
        let mut zeros = vec![Vec::new(); bits];
        for i in 0..count {
            for b in 0..bits {
                if (gray(i) >> (bits - 1 - b)) & 1 == 1 {
                    ones[b].push(i);
                } else {
                    zeros[b].push(i);
                }
            }
        }
        Axis {
            bits,
            levels,
            ones,
            zeros,
            level_of_label,
        }
    }

    /// Exact per-bit LLRs for one real observation. Terms along the other
    /// axis factor out of both sums and cancel.
    fn demap<T: Real>(&self, y: T, inv_two_sigma2: T, metrics: &mut [T], out: &mut [T]) {
        for (m, &a) in metrics.iter_mut().zip(&self.levels) {
            let d = y - T::of(a);
            *m = -(d * d) * inv_two_sigma2;
        }
        for b in 0..self.bits {
            out[b] = log_sum_exp(metrics, &self.ones[b]) - log_sum_exp(metrics, &self.zeros[b]);
        }
    }
}

fn log_sum_exp<T: Real>(metrics: &[T], set: &[usize]) -> T {
    let mut best = 0;
    for (pos, &i) in set.iter().enumerate() {
        if metrics[i] > metrics[set[best]] {
            best = pos;
        }
    }
    let max = metrics[set[best]];
    if set.len() == 1 {
        return max;
    }
    let rest: T = set
        .iter()
        .enumerate()
        .filter(|&(pos, _)| pos != best)
        .map(|(_, &i)| (metrics[i] - max).exp())
        .sum();
    max + rest.ln_1p()
}

/// Square M-QAM (two Gray-labelled PAM axes) or BPSK, at unit average energy.
///
/// Labels are `m` bits, most significant first; for QAM the first `m/2`
/// bits select the in-phase level and the rest the quadrature level.
#[derive(Debug, Clone)]
pub struct Modulation {
    order: usize,
    bits_per_symbol: usize,
    axis: Axis,
    /// Point for each label.
    points: Vec<(f64, f64)>,
}

impl Modulation {
    pub fn new(order: usize) -> Result<Self, ChannelError> {
        let modulation = match order {
            2 => {
                let axis = Axis::new(1, 1.0);
                let points = vec![(-1.0, 0.0), (1.0, 0.0)];
                Modulation {
                    order,
                    bits_per_symbol: 1,
                    axis,
                    points,
                }
            }
            16 | 64 | 256 => {
                let m = order.trailing_zeros() as usize;
                let per_axis = 1usize << (m / 2);
                // E|x|² = 2·(per_axis² − 1)/3 on the odd-integer grid.
                let energy = 2.0 * ((per_axis * per_axis) as f64 - 1.0) / 3.0;
                let axis = Axis::new(m / 2, 1.0 / energy.sqrt());
                let half = m / 2;
                let points = (0..order)
                    .map(|label| {
                        let i_label = label >> half;
                        let q_label = label & (per_axis - 1);
                        (
                            axis.levels[axis.level_of_label[i_label]],
                            axis.levels[axis.level_of_label[q_label]],
                        )
                    })
                    .collect();
                Modulation {
                    order,
                    bits_per_symbol: m,
                    axis,
                    points,
                }
            }
            _ => return Err(ChannelError::UnsupportedConstellation(order)),
        };
        debug_assert!(modulation.has_gray_labels());
        Ok(modulation)
    }

    /// Constellation size M.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Bits per symbol, log2 M.
    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn is_real(&self) -> bool {
        self.order == 2
    }

    /// Constellation point of each label.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Distinct amplitudes along one axis, ascending.
    pub fn axis_levels(&self) -> &[f64] {
        &self.axis.levels
    }

    pub fn point(&self, label: usize) -> (f64, f64) {
        self.points[label]
    }

    /// Labels whose bit `l` (MSB first) is 0 and 1.
    pub fn bit_partition(&self, l: usize) -> (Vec<usize>, Vec<usize>) {
        let m = self.bits_per_symbol;
        (0..self.order).partition(|&label| (label >> (m - 1 - l)) & 1 == 0)
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|(i, q)| i * i + q * q).sum::<f64>() / self.order as f64
    }

    /// Labels of neighbouring points along either axis differ in exactly one bit.
    pub fn has_gray_labels(&self) -> bool {
        self.adjacent_pairs()
            .iter()
            .all(|&(a, b)| (a ^ b).count_ones() == 1)
    }

    /// Label pairs of points adjacent along an axis.
    pub fn adjacent_pairs(&self) -> Vec<(usize, usize)> {
        let step = self
            .axis
            .levels
            .get(1)
            .map_or(0.0, |b| b - self.axis.levels[0]);
        let close = |x: f64, y: f64| (x - y).abs() < 1e-9;
        let mut pairs = Vec::new();
        for a in 0..self.order {
            for b in a + 1..self.order {
                let (pa, pb) = (self.points[a], self.points[b]);
                let horizontal = close(pa.1, pb.1) && close((pa.0 - pb.0).abs(), step);
                let vertical = close(pa.0, pb.0) && close((pa.1 - pb.1).abs(), step);
                if horizontal || vertical {
                    pairs.push((a, b));
                }
            }
        }
        pairs
    }

    /// Exact LLRs of the `m` label bits for observation `y`, written to `out`.
    pub fn demap<T: Real>(&self, y: (T, T), sigma2: T, out: &mut [T]) {
        let mut metrics = [T::zero(); 16];
        let levels = self.axis.levels.len();
        let inv = T::one() / (sigma2 + sigma2);
        let half = self.axis.bits;
        self.axis
            .demap(y.0, inv, &mut metrics[..levels], &mut out[..half]);
        if !self.is_real() {
            self.axis
                .demap(y.1, inv, &mut metrics[..levels], &mut out[half..2 * half]);
        }
    }
}

/// Real-valued matrix of channel LLRs, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrMatrix<T = f64> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Real> LlrMatrix<T> {
    /// # Panics
    /// If `values.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, values: Vec<T>) -> Self {
        assert_eq!(values.len(), rows * cols, "backing storage size");
        LlrMatrix { rows, cols, values }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        LlrMatrix { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn transpose(&self) -> Self {
        let mut values = self.values.clone();
        crate::product::transpose_into(&self.values, self.rows, self.cols, &mut values);
        LlrMatrix {
            rows: self.cols,
            cols: self.rows,
            values,
        }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Permutation of code-bit positions: transmitted bit `i` is code bit `perm[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<u32>,
}

impl Interleaver {
    pub fn identity(len: usize) -> Self {
        Interleaver {
            perm: (0..len as u32).collect(),
        }
    }

    /// Uniformly random permutation.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut perm: Vec<u32> = (0..len as u32).collect();
        perm.shuffle(rng);
        Interleaver { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn interleave<X: Copy>(&self, input: &[X]) -> Vec<X> {
        assert_eq!(input.len(), self.perm.len());
        self.perm.iter().map(|&p| input[p as usize]).collect()
    }

    pub fn deinterleave<X: Copy + Default>(&self, input: &[X]) -> Vec<X> {
        assert_eq!(input.len(), self.perm.len());
        let mut out = vec![X::default(); input.len()];
        for (&p, &x) in self.perm.iter().zip(input) {
            out[p as usize] = x;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterleaverMode {
    /// A fresh permutation for every codeword.
    #[default]
    PerCodeword,
    /// One permutation drawn from the channel seed and reused.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// Noise variance per real dimension.
    pub sigma2: f64,
    pub seed: u64,
    pub interleaver: InterleaverMode,
}

impl ChannelConfig {
    pub fn new(sigma2: f64, seed: u64) -> Self {
        ChannelConfig {
            sigma2,
            seed,
            interleaver: InterleaverMode::PerCodeword,
        }
    }
}

/// Transmission chain for `n × n` code matrices.
#[derive(Debug, Clone)]
pub struct Channel {
    modulation: Modulation,
    config: ChannelConfig,
    fixed: Option<Interleaver>,
    side: usize,
}

impl Channel {
    pub fn new(
        modulation: Modulation,
        config: ChannelConfig,
        side: usize,
    ) -> Result<Self, ChannelError> {
        if !(config.sigma2 > 0.0 && config.sigma2.is_finite()) {
            return Err(ChannelError::InvalidNoise(config.sigma2));
        }
        let bits = side * side;
        let m = modulation.bits_per_symbol();
        if !bits.is_multiple_of(m) {
            return Err(ChannelError::DimensionMismatch { bits, m });
        }
        let fixed = match config.interleaver {
            InterleaverMode::Fixed => {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                Some(Interleaver::random(bits, &mut rng))
            }
            InterleaverMode::PerCodeword => None,
        };
        Ok(Channel {
            modulation,
            config,
            fixed,
            side,
        })
    }

    pub fn modulation(&self) -> &Modulation {
        &self.modulation
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    /// Sends `codeword` and returns the de-interleaved LLR matrix. All
    /// randomness (interleaver in per-codeword mode, noise) comes from `rng`.
    pub fn transmit<T: Real, R: Rng + ?Sized>(
        &self,
        codeword: &BitMatrix,
        rng: &mut R,
    ) -> Result<LlrMatrix<T>, ChannelError> {
        self.run(codeword, rng, true)
    }

    /// Same chain with the noise samples forced to zero.
    pub fn transmit_noiseless<T: Real, R: Rng + ?Sized>(
        &self,
        codeword: &BitMatrix,
        rng: &mut R,
    ) -> Result<LlrMatrix<T>, ChannelError> {
        self.run(codeword, rng, false)
    }

    fn run<T: Real, R: Rng + ?Sized>(
        &self,
        codeword: &BitMatrix,
        rng: &mut R,
        noisy: bool,
    ) -> Result<LlrMatrix<T>, ChannelError> {
        let bits = codeword.rows() * codeword.cols();
        let m = self.modulation.bits_per_symbol();
        if codeword.dims() != (self.side, self.side) {
            return Err(ChannelError::DimensionMismatch { bits, m });
        }
        let drawn;
        let interleaver = match &self.fixed {
            Some(p) => p,
            None => {
                drawn = Interleaver::random(bits, rng);
                &drawn
            }
        };
        let serial = interleaver.interleave(codeword.as_slice());
        let sigma2 = T::of(self.config.sigma2);
        let sigma = sigma2.sqrt();
        let real = self.modulation.is_real();
        let mut llrs = vec![T::zero(); bits];
        for (chunk, out) in serial.chunks_exact(m).zip(llrs.chunks_exact_mut(m)) {
            let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            let (xi, xq) = self.modulation.point(label);
            let mut y = (T::of(xi), T::of(xq));
            if noisy {
                y.0 = y.0 + sigma * T::standard_normal(rng);
                if !real {
                    y.1 = y.1 + sigma * T::standard_normal(rng);
                }
            }
            self.modulation.demap(y, sigma2, out);
        }
        let values = interleaver.deinterleave(&llrs);
        Ok(LlrMatrix::from_vec(self.side, self.side, values))
    }
}

/// One-shot transmission seeded from `config.seed`.
pub fn transmit<T: Real>(
    codeword: &BitMatrix,
    modulation: &Modulation,
    config: &ChannelConfig,
) -> Result<LlrMatrix<T>, ChannelError> {
    if codeword.rows() != codeword.cols() {
        return Err(ChannelError::DimensionMismatch {
            bits: codeword.rows() * codeword.cols(),
            m: modulation.bits_per_symbol(),
        });
    }
    let channel = Channel::new(modulation.clone(), *config, codeword.rows())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    channel.transmit(codeword, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bpsk_points_and_labels() {
        let bpsk = Modulation::new(2).unwrap();
        assert_eq!(bpsk.points(), &[(-1.0, 0.0), (1.0, 0.0)]);
        assert_eq!(bpsk.bit_partition(0), (vec![0], vec![1]));
    }

    #[test]
    fn qam16_levels_and_energy() {
        let q = Modulation::new(16).unwrap();
        let s = 10f64.sqrt();
        let expected = [-3.0 / s, -1.0 / s, 1.0 / s, 3.0 / s];
        for (a, b) in q.axis_levels().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        // Unnormalized grid energy by direct summation.
        let grid: f64 = [-3.0f64, -1.0, 1.0, 3.0]
            .iter()
            .flat_map(|i| [-3.0f64, -1.0, 1.0, 3.0].map(move |q| i * i + q * q))
            .sum::<f64>()
            / 16.0;
        assert_eq!(grid, 10.0);
    }

    #[test]
    fn constellations_are_unit_energy_gray_and_balanced() {
        for order in [2, 16, 64, 256] {
            let q = Modulation::new(order).unwrap();
            assert!((q.average_energy() - 1.0).abs() < 1e-12, "M={order}");
            assert!(q.has_gray_labels());
            for l in 0..q.bits_per_symbol() {
                let (zeros, ones) = q.bit_partition(l);
                assert_eq!(zeros.len(), order / 2);
                assert_eq!(ones.len(), order / 2);
            }
        }
        let q16 = Modulation::new(16).unwrap();
        assert_eq!(q16.adjacent_pairs().len(), 24);
    }

    #[test]
    fn unsupported_sizes() {
        for order in [4, 8, 32, 128, 1024] {
            assert_eq!(
                Modulation::new(order).unwrap_err(),
                ChannelError::UnsupportedConstellation(order)
            );
        }
    }

    #[test]
    fn sigma2_formula() {
        assert_eq!(ebn0_to_sigma2(0.0, 1.0, 1), 0.5);
        assert!((ebn0_to_sigma2(3.0103, 0.5, 2) - 0.25).abs() < 1e-5);
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let s = ebn0_to_sigma2(i as f64 * 0.3 - 2.0, 0.8, 4);
            assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn hard_decision_signs() {
        assert_eq!(hard_decision(-3.7f64), 0);
        assert_eq!(hard_decision(0.001f64), 1);
        assert_eq!(hard_decision(0.0f64), 1);
        assert_eq!(hard_decision(-0.0f32), 1);
    }

    #[test]
    fn bpsk_llr_closed_form() {
        let bpsk = Modulation::new(2).unwrap();
        let sigma2 = 0.3;
        for y in [-2.0, -0.4, 0.0, 0.25, 1.0, 3.0] {
            let mut out = [0.0f64];
            bpsk.demap((y, 0.0), sigma2, &mut out);
            assert!((out[0] - 2.0 * y / sigma2).abs() < 1e-12);
        }
    }

    #[test]
    fn interleaver_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let p = Interleaver::random(1000, &mut rng);
        let data: Vec<u32> = (0..1000).map(|i| i * 7 % 13).collect();
        assert_eq!(p.deinterleave(&p.interleave(&data)), data);
        assert_ne!(p, Interleaver::identity(1000));
    }

    #[test]
    fn noiseless_round_trip_recovers_the_codeword() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cw = BitMatrix::from_fn(24, 24, |_, _| rng.random_range(0..2));
        for order in [2, 16, 64, 256] {
            let ch = Channel::new(
                Modulation::new(order).unwrap(),
                ChannelConfig::new(1e-3, 1),
                24,
            )
            .unwrap();
            let l: LlrMatrix<f64> = ch.transmit_noiseless(&cw, &mut rng).unwrap();
            assert_eq!(hard_decisions(&l), cw, "M={order}");
            let l32: LlrMatrix<f32> = ch.transmit_noiseless(&cw, &mut rng).unwrap();
            assert_eq!(hard_decisions(&l32), cw, "M={order}");
        }
    }

    #[test]
    fn llrs_stay_finite_at_high_snr() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let cw = BitMatrix::from_fn(16, 16, |_, _| rng.random_range(0..2));
        let ch = Channel::new(
            Modulation::new(256).unwrap(),
            ChannelConfig::new(1e-7, 3),
            16,
        )
        .unwrap();
        let l: LlrMatrix<f64> = ch.transmit(&cw, &mut rng).unwrap();
        assert!(l.as_slice().iter().all(|v| v.is_finite()));
        assert_eq!(hard_decisions(&l), cw);
    }

    #[test]
    fn fixed_interleaver_is_reused() {
        let cw = BitMatrix::from_fn(12, 12, |i, j| ((i * 5 + j) % 3 == 0) as u8);
        let cfg = ChannelConfig {
            sigma2: 0.2,
            seed: 99,
            interleaver: InterleaverMode::Fixed,
        };
        let a: LlrMatrix<f64> = transmit(&cw, &Modulation::new(16).unwrap(), &cfg).unwrap();
        let b: LlrMatrix<f64> = transmit(&cw, &Modulation::new(16).unwrap(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn channel_errors() {
        let q = Modulation::new(16).unwrap();
        assert!(matches!(
            Channel::new(q.clone(), ChannelConfig::new(0.1, 0), 15),
            Err(ChannelError::DimensionMismatch { bits: 225, m: 4 })
        ));
        assert!(matches!(
            Channel::new(q, ChannelConfig::new(0.0, 0), 16),
            Err(ChannelError::InvalidNoise(_))
        ));
    }
}
