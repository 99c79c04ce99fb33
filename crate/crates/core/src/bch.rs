//! Shortened binary BCH codes: construction from (ν, t, s), systematic
//! encoding and bounded distance decoding.
//!
//! A word of length `n` is read as a polynomial whose highest-degree
//! coefficient comes first: position `p` carries the coefficient of
//! `x^(n-1-p)`. Message bits occupy positions `0..k`, parity the last `ν·t`
//! positions, and the `s` shortened positions are the implicit zero
//! coefficients of degrees `n..2^ν-1`.

use thiserror::Error;

use crate::galois::{BinPoly, Element, Field, GaloisError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BchError {
    #[error("invalid BCH parameters (nu={nu}, t={t}, s={s}): {reason}")]
    InvalidParameters {
        nu: u32,
        t: usize,
        s: usize,
        reason: String,
    },
    #[error("expected a vector of length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Field(#[from] GaloisError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecodeStatus {
    Success,
    Failure,
}

/// Result of one bounded distance decoding.
///
/// `mu` is the ternary per-bit output: `-1`/`+1` for a decoded `0`/`1`, and
/// all zeros when decoding failed. On failure `word` is the received word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub status: DecodeStatus,
    pub word: Vec<u8>,
    pub mu: Vec<i8>,
}

impl DecodeOutcome {
    pub fn success(word: Vec<u8>) -> Self {
        let mu = word.iter().map(|&b| if b == 1 { 1 } else { -1 }).collect();
        DecodeOutcome {
            status: DecodeStatus::Success,
            word,
            mu,
        }
    }

    pub fn failure(received: Vec<u8>) -> Self {
        let mu = vec![0; received.len()];
        DecodeOutcome {
            status: DecodeStatus::Failure,
            word: received,
            mu,
        }
    }

    pub fn is_success(&self) -> bool {
        self.status == DecodeStatus::Success
    }

    /// Checks the coupling between `status`, `mu` and `word`.
    pub fn is_consistent(&self) -> bool {
        match self.status {
            DecodeStatus::Success => self
                .mu
                .iter()
                .zip(&self.word)
                .all(|(&m, &b)| (m == 1 && b == 1) || (m == -1 && b == 0)),
            DecodeStatus::Failure => self.mu.iter().all(|&m| m == 0),
        }
    }
}

/// Reusable buffers for [`BchCode::decode_in_place`]; one per worker.
#[derive(Debug, Default, Clone)]
pub struct BddScratch {
    odd: Vec<Element>,
    syn: Vec<Element>,
    locator: Vec<Element>,
    prev: Vec<Element>,
    tmp: Vec<Element>,
    errors: Vec<usize>,
}

/// A shortened binary BCH code defined by (ν, t, s).
#[derive(Debug, Clone)]
pub struct BchCode {
    field: Field,
    t: usize,
    s: usize,
    n: usize,
    k: usize,
    generator: BinPoly,
    /// `x^(n-1-p) mod g` for each message position `p`, packed into
    /// `words_per_row` little-endian u64 words (bit `i` = coefficient of `x^i`).
    parity_rows: Vec<u64>,
    words_per_row: usize,
    /// `α^((2j+1)·(n-1-p))` at index `p·t + j`: each position's contribution
    /// to the odd syndromes.
    position_powers: Vec<Element>,
}

impl PartialEq for BchCode {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.t == other.t && self.s == other.s
    }
}

impl BchCode {
    /// Code over GF(2^ν) with the default primitive polynomial.
    pub fn new(nu: u32, t: usize, s: usize) -> Result<Self, BchError> {
        Self::with_field(Field::new(nu, None)?, t, s)
    }

    pub fn with_field(field: Field, t: usize, s: usize) -> Result<Self, BchError> {
        let nu = field.nu();
        let invalid = |reason: String| BchError::InvalidParameters { nu, t, s, reason };
        let full = field.order();
        if t == 0 {
            return Err(invalid("t must be at least 1".into()));
        }
        if s >= full {
            return Err(invalid(format!("s must be below 2^nu - 1 = {full}")));
        }
        let redundancy = nu as usize * t;
        if redundancy + s >= full {
            return Err(invalid(format!(
                "dimension 2^nu - nu*t - 1 - s = {} is not positive",
                full as i64 - redundancy as i64 - s as i64
            )));
        }
        if 2 * t >= full {
            return Err(invalid("2t must be below 2^nu - 1".into()));
        }
        let minimal: Vec<BinPoly> = (1..=2 * t).map(|e| field.minimal_polynomial(e)).collect();
        let generator = BinPoly::lcm_of_irreducibles(&minimal);
        let deg = generator.degree().unwrap_or(0);
        if deg != redundancy {
            return Err(invalid(format!(
                "generator degree {deg} differs from nu*t = {redundancy}"
            )));
        }
        let n = full - s;
        let k = n - redundancy;

        let words_per_row = redundancy.div_ceil(64);
        let parity_rows = parity_rows(&generator, n, k, words_per_row);

        let mut position_powers = Vec::with_capacity(n * t);
        for p in 0..n {
            let degree = (n - 1 - p) as i64;
            for j in 0..t {
                position_powers.push(field.exp((2 * j as i64 + 1) * degree));
            }
        }

        Ok(BchCode {
            field,
            t,
            s,
            n,
            k,
            generator,
            parity_rows,
            words_per_row,
            position_powers,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn nu(&self) -> u32 {
        self.field.nu()
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of parity bits, ν·t.
    pub fn redundancy(&self) -> usize {
        self.n - self.k
    }

    pub fn generator(&self) -> &BinPoly {
        &self.generator
    }

    pub fn designed_distance(&self) -> usize {
        2 * self.t + 1
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Systematic encoding: the message followed by ν·t parity bits.
    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>, BchError> {
        check_len(self.k, message.len())?;
        let mut out = vec![0u8; self.n];
        out[..self.k].copy_from_slice(message);
        self.encode_in_place(&mut out);
        Ok(out)
    }

    /// Overwrites the parity positions of `word` from its first `k` bits.
    ///
    /// # Panics
    /// If `word.len() != n`.
    pub fn encode_in_place(&self, word: &mut [u8]) {
        assert_eq!(word.len(), self.n);
        let w = self.words_per_row;
        let mut acc = vec![0u64; w];
        for (p, &bit) in word[..self.k].iter().enumerate() {
            if bit & 1 == 1 {
                let row = &self.parity_rows[p * w..(p + 1) * w];
                for (a, r) in acc.iter_mut().zip(row) {
                    *a ^= r;
                }
            }
        }
        let r = self.redundancy();
        for q in 0..r {
            let degree = r - 1 - q;
            word[self.k + q] = ((acc[degree / 64] >> (degree % 64)) & 1) as u8;
        }
    }

    /// All 2t syndromes `S_j = r(α^j)`, `j = 1..=2t`.
    pub fn syndromes(&self, word: &[u8]) -> Result<Vec<Element>, BchError> {
        check_len(self.n, word.len())?;
        let f = &self.field;
        let mut out = Vec::with_capacity(2 * self.t);
        for j in 1..=2 * self.t {
            let x = f.exp(j as i64);
            // Horner over the coefficients, highest degree first.
            let s = word
                .iter()
                .fold(0 as Element, |acc, &b| f.mul(acc, x) ^ Element::from(b & 1));
            out.push(s);
        }
        Ok(out)
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        word.len() == self.n && {
            let mut odd = vec![0; self.t];
            self.odd_syndromes(word, &mut odd);
            odd.iter().all(|&s| s == 0)
        }
    }

    /// Bounded distance decoding of `received`.
    pub fn bdd_decode(&self, received: &[u8]) -> Result<DecodeOutcome, BchError> {
        check_len(self.n, received.len())?;
        let mut word = received.to_vec();
        let mut scratch = BddScratch::default();
        if self.decode_in_place(&mut word, &mut scratch) {
            Ok(DecodeOutcome::success(word))
        } else {
            Ok(DecodeOutcome::failure(word))
        }
    }

    /// Decodes `word` in place and reports success. On failure `word` is left
    /// untouched.
    ///
    /// # Panics
    /// If `word.len() != n`.
    pub fn decode_in_place(&self, word: &mut [u8], scratch: &mut BddScratch) -> bool {
        assert_eq!(word.len(), self.n);
        let t = self.t;
        scratch.odd.clear();
        scratch.odd.resize(t, 0);
        self.odd_syndromes(word, &mut scratch.odd);
        if scratch.odd.iter().all(|&s| s == 0) {
            return true;
        }

        let f = &self.field;
        // S_{2j} = S_j^2 over a field of characteristic two.
        scratch.syn.clear();
        scratch.syn.resize(2 * t, 0);
        for j in 0..t {
            scratch.syn[2 * j] = scratch.odd[j];
        }
        for j in 1..=t {
            let half = scratch.syn[j - 1];
            scratch.syn[2 * j - 1] = f.mul(half, half);
        }

        let degree = berlekamp_massey(f, scratch);
        if degree > t {
            return false;
        }

        if !self.chien_search(scratch, degree) {
            return false;
        }

        // Only commit the flips if they actually clear every syndrome.
        for &p in &scratch.errors {
            let row = &self.position_powers[p * t..(p + 1) * t];
            for (s, &c) in scratch.odd.iter_mut().zip(row) {
                *s ^= c;
            }
        }
        if scratch.odd.iter().any(|&s| s != 0) {
            return false;
        }
        for &p in &scratch.errors {
            word[p] ^= 1;
        }
        true
    }

    fn odd_syndromes(&self, word: &[u8], odd: &mut [Element]) {
        let t = self.t;
        for (p, &b) in word.iter().enumerate() {
            if b & 1 == 1 {
                let row = &self.position_powers[p * t..(p + 1) * t];
                for (s, &c) in odd.iter_mut().zip(row) {
                    *s ^= c;
                }
            }
        }
    }

    /// Finds the roots of the locator among the `n` unshortened positions and
    /// stores the error positions. Fails unless exactly `degree` distinct
    /// roots address valid positions.
    fn chien_search(&self, scratch: &mut BddScratch, degree: usize) -> bool {
        let f = &self.field;
        let order = f.order() as i64;
        scratch.errors.clear();
        let logs: Vec<Option<u32>> = scratch.locator[..=degree]
            .iter()
            .map(|&c| f.log(c))
            .collect();
        for p in 0..self.n {
            // The error at degree d has locator root α^{-d}.
            let d = (self.n - 1 - p) as i64;
            let mut acc: Element = 0;
            for (i, l) in logs.iter().enumerate() {
                if let Some(l) = l {
                    acc ^= f.exp((i64::from(*l) - i as i64 * d).rem_euclid(order));
                }
            }
            if acc == 0 {
                scratch.errors.push(p);
                if scratch.errors.len() > degree {
                    return false;
                }
            }
        }
        scratch.errors.len() == degree
    }
}

/// Berlekamp–Massey over `scratch.syn`; leaves the connection polynomial in
/// `scratch.locator` (at least `2t + 1` coefficients) and returns its LFSR
/// length.
fn berlekamp_massey(f: &Field, scratch: &mut BddScratch) -> usize {
    let len = scratch.syn.len();
    let BddScratch {
        syn,
        locator,
        prev,
        tmp,
        ..
    } = scratch;
    locator.clear();
    locator.resize(len + 1, 0);
    locator[0] = 1;
    prev.clear();
    prev.resize(len + 1, 0);
    prev[0] = 1;
    let mut l = 0usize;
    let mut shift = 1usize;
    let mut last_discrepancy: Element = 1;

    for r in 0..len {
        let mut d = syn[r];
        for i in 1..=l {
            d ^= f.mul(locator[i], syn[r - i]);
        }
        if d == 0 {
            shift += 1;
            continue;
        }
        let coef = f.div(d, last_discrepancy).expect("discrepancy is nonzero");
        if 2 * l <= r {
            tmp.clear();
            tmp.extend_from_slice(locator);
            for i in 0..=len - shift {
                locator[i + shift] ^= f.mul(coef, prev[i]);
            }
            l = r + 1 - l;
            std::mem::swap(prev, tmp);
            last_discrepancy = d;
            shift = 1;
        } else {
            for i in 0..=len - shift {
                locator[i + shift] ^= f.mul(coef, prev[i]);
            }
            shift += 1;
        }
    }
    l
}

fn parity_rows(generator: &BinPoly, n: usize, k: usize, words: usize) -> Vec<u64> {
    let r = n - k;
    let g = generator.coeffs();
    // rem[d] = x^d mod g for d = n-1 down to r, built upward from x^r.
    let mut cur = vec![0u8; r];
    // x^r mod g = g - x^r
    cur.copy_from_slice(&g[..r]);
    let mut by_degree: Vec<Vec<u8>> = Vec::with_capacity(k);
    by_degree.push(cur.clone());
    for _ in 1..k {
        let carry = cur[r - 1];
        for i in (1..r).rev() {
            cur[i] = cur[i - 1];
        }
        cur[0] = 0;
        if carry == 1 {
            for i in 0..r {
                cur[i] ^= g[i];
            }
        }
        by_degree.push(cur.clone());
    }
    // message position p has degree n-1-p, i.e. index n-1-p-r in by_degree.
    let mut out = vec![0u64; k * words];
    for p in 0..k {
        let rem = &by_degree[n - 1 - p - r];
        for (i, &b) in rem.iter().enumerate() {
            if b == 1 {
                out[p * words + i / 64] |= 1 << (i % 64);
            }
        }
    }
    out
}

fn check_len(expected: usize, actual: usize) -> Result<(), BchError> {
    if expected != actual {
        return Err(BchError::LengthMismatch { expected, actual });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bits(rng: &mut impl Rng, len: usize) -> Vec<u8> {
        (0..len).map(|_| rng.random_range(0..2u8)).collect()
    }

    #[test]
    fn c1_c2_code_parameters() {
        let c2 = BchCode::new(8, 3, 63).unwrap();
        assert_eq!((c2.n(), c2.k()), (192, 168));
        let c1 = BchCode::new(9, 4, 7).unwrap();
        assert_eq!((c1.n(), c1.k()), (504, 468));
    }

    #[test]
    fn bch_15_7_generator() {
        let c = BchCode::new(4, 2, 0).unwrap();
        assert_eq!((c.n(), c.k()), (15, 7));
        assert_eq!(c.generator().degree(), Some(8));
        // (x^4 + x + 1)(x^4 + x^3 + x^2 + x + 1)
        assert_eq!(c.generator(), &BinPoly::from_bits(0b1_1101_0001));
        // g | x^15 + 1
        let mut xn1 = vec![0u8; 16];
        xn1[0] = 1;
        xn1[15] = 1;
        assert!(BinPoly::from_coeffs(xn1).rem(c.generator()).is_zero());
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(
            BchCode::new(4, 0, 0),
            Err(BchError::InvalidParameters { .. })
        ));
        assert!(BchCode::new(4, 2, 15).is_err());
        assert!(BchCode::new(4, 2, 7).is_err()); // k = 0
                                                 // ν=4, t=3 has generator degree 10 < 12.
        assert!(BchCode::new(4, 3, 0).is_err());
        assert!(matches!(
            BchCode::new(1, 1, 0),
            Err(BchError::Field(GaloisError::InvalidDegree(1)))
        ));
    }

    #[test]
    fn encoder_is_systematic_and_linear() {
        let c = BchCode::new(6, 2, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(c.encode(&vec![0; c.k()]).unwrap(), vec![0; c.n()]);
        for _ in 0..50 {
            let m1 = random_bits(&mut rng, c.k());
            let m2 = random_bits(&mut rng, c.k());
            let c1 = c.encode(&m1).unwrap();
            let c2 = c.encode(&m2).unwrap();
            assert_eq!(&c1[..c.k()], &m1[..]);
            let sum: Vec<u8> = m1.iter().zip(&m2).map(|(a, b)| a ^ b).collect();
            let csum: Vec<u8> = c1.iter().zip(&c2).map(|(a, b)| a ^ b).collect();
            assert_eq!(c.encode(&sum).unwrap(), csum);
            assert!(c.syndromes(&c1).unwrap().iter().all(|&s| s == 0));
        }
        assert_eq!(
            c.encode(&[1, 0]),
            Err(BchError::LengthMismatch {
                expected: c.k(),
                actual: 2
            })
        );
    }

    #[test]
    fn codewords_are_multiples_of_the_generator() {
        let c = BchCode::new(5, 2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let cw = c.encode(&random_bits(&mut rng, c.k())).unwrap();
            // lowest degree first; position p is degree n-1-p
            let coeffs: Vec<u8> = cw.iter().rev().copied().collect();
            assert!(BinPoly::from_coeffs(coeffs).rem(c.generator()).is_zero());
        }
    }

    #[test]
    fn corrects_every_pattern_up_to_t_in_15_7() {
        let c = BchCode::new(4, 2, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..8 {
            let cw = c.encode(&random_bits(&mut rng, c.k())).unwrap();
            let out = c.bdd_decode(&cw).unwrap();
            assert!(out.is_success() && out.word == cw && out.is_consistent());
            for i in 0..15 {
                for j in i..15 {
                    let mut r = cw.clone();
                    r[i] ^= 1;
                    if j != i {
                        r[j] ^= 1;
                    }
                    let out = c.bdd_decode(&r).unwrap();
                    assert_eq!(out.status, DecodeStatus::Success);
                    assert_eq!(out.word, cw);
                }
            }
        }
    }

    #[test]
    fn corrects_t_errors_on_c1_and_c2() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (nu, t, s) in [(8, 3, 63), (9, 4, 7)] {
            let c = BchCode::new(nu, t, s).unwrap();
            let mut scratch = BddScratch::default();
            for _ in 0..200 {
                let cw = c.encode(&random_bits(&mut rng, c.k())).unwrap();
                let mut r = cw.clone();
                let weight = rng.random_range(0..=t);
                let mut flipped = 0;
                while flipped < weight {
                    let p = rng.random_range(0..c.n());
                    if r[p] == cw[p] {
                        r[p] ^= 1;
                        flipped += 1;
                    }
                }
                assert!(c.decode_in_place(&mut r, &mut scratch));
                assert_eq!(r, cw);
            }
        }
    }

    #[test]
    fn failure_leaves_input_untouched() {
        let c = BchCode::new(8, 3, 63).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut scratch = BddScratch::default();
        let mut failures = 0;
        for _ in 0..500 {
            let r = random_bits(&mut rng, c.n());
            let mut w = r.clone();
            if !c.decode_in_place(&mut w, &mut scratch) {
                failures += 1;
                assert_eq!(w, r);
                let out = c.bdd_decode(&r).unwrap();
                assert_eq!(out.status, DecodeStatus::Failure);
                assert!(out.is_consistent());
                assert_eq!(out.word, r);
            } else {
                assert!(c.is_codeword(&w));
                let d = w.iter().zip(&r).filter(|(a, b)| a != b).count();
                assert!(d <= 3);
            }
        }
        assert!(failures > 400);
    }

    #[test]
    fn shortening_matches_parent_code() {
        let short = BchCode::new(4, 2, 3).unwrap();
        let parent = BchCode::new(4, 2, 0).unwrap();
        assert_eq!((short.n(), short.k()), (12, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..2000 {
            let r = random_bits(&mut rng, short.n());
            let mut padded = vec![0u8; 3];
            padded.extend_from_slice(&r);
            let a = short.bdd_decode(&r).unwrap();
            let b = parent.bdd_decode(&padded).unwrap();
            // A parent decode that touches the shortened prefix is a failure
            // for the shortened code.
            let parent_ok = b.is_success() && b.word[..3].iter().all(|&x| x == 0);
            assert_eq!(a.is_success(), parent_ok, "r={r:?}");
            if parent_ok {
                assert_eq!(a.word[..], b.word[3..]);
            }
        }
    }

    #[test]
    fn length_is_checked() {
        let c = BchCode::new(4, 2, 0).unwrap();
        assert!(matches!(
            c.bdd_decode(&[0; 14]),
            Err(BchError::LengthMismatch {
                expected: 15,
                actual: 14
            })
        ));
    }
}
