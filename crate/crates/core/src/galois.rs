//! Arithmetic in GF(2^ν) backed by log/antilog tables, plus the two polynomial
//! types the BCH code needs: binary polynomials (generators, minimal
//! polynomials) and polynomials over the extension field (error locators).

use std::fmt;

use thiserror::Error;

/// A field element in polynomial basis, `0..2^ν`.
pub type Element = u16;

/// Smallest supported extension degree.
pub const MIN_DEGREE: u32 = 2;
/// Largest supported extension degree.
pub const MAX_DEGREE: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GaloisError {
    #[error("extension degree {0} outside {MIN_DEGREE}..={MAX_DEGREE}")]
    InvalidDegree(u32),
    #[error("polynomial {poly:#x} is not primitive of degree {nu}")]
    NonPrimitivePolynomial { nu: u32, poly: u32 },
    #[error("division by zero")]
    DivisionByZero,
}

/// Minimal-weight primitive polynomial for each ν, bit `i` holding the
/// coefficient of `x^i`.
pub fn default_primitive_poly(nu: u32) -> Option<u32> {
    let p = match nu {
        2 => 0x7,      // x^2 + x + 1
        3 => 0xB,      // x^3 + x + 1
        4 => 0x13,     // x^4 + x + 1
        5 => 0x25,     // x^5 + x^2 + 1
        6 => 0x43,     // x^6 + x + 1
        7 => 0x89,     // x^7 + x^3 + 1
        8 => 0x11D,    // x^8 + x^4 + x^3 + x^2 + 1
        9 => 0x211,    // x^9 + x^4 + 1
        10 => 0x409,   // x^10 + x^3 + 1
        11 => 0x805,   // x^11 + x^2 + 1
        12 => 0x1053,  // x^12 + x^6 + x^4 + x + 1
        13 => 0x201B,  // x^13 + x^4 + x^3 + x + 1
        14 => 0x4443,  // x^14 + x^10 + x^6 + x + 1
        15 => 0x8003,  // x^15 + x + 1
        16 => 0x1100B, // x^16 + x^12 + x^3 + x + 1
        _ => return None,
    };
    Some(p)
}

/// GF(2^ν) with precomputed tables. Immutable once built.
#[derive(Clone)]
pub struct Field {
    nu: u32,
    poly: u32,
    /// `log[a]` for nonzero `a`; `log[0]` is unused.
    log: Vec<u32>,
    /// `exp[i] = α^i` for `i < 2·(2^ν − 1)`, doubled so sums of two logs need no reduction.
    exp: Vec<Element>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("nu", &self.nu)
            .field("poly", &format_args!("{:#x}", self.poly))
            .finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.nu == other.nu && self.poly == other.poly
    }
}

impl Eq for Field {}

impl Field {
    /// Builds GF(2^ν) from `primitive_poly`, or from the built-in default when `None`.
    pub fn new(nu: u32, primitive_poly: Option<u32>) -> Result<Self, GaloisError> {
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&nu) {
            return Err(GaloisError::InvalidDegree(nu));
        }
        let poly = match primitive_poly {
            Some(p) => p,
            None => default_primitive_poly(nu).expect("default exists for every supported degree"),
        };
        let bad = GaloisError::NonPrimitivePolynomial { nu, poly };
        if poly >> nu != 1 {
            return Err(bad);
        }

        let size = 1usize << nu;
        let order = size - 1;
        let mut log = vec![0u32; size];
        let mut exp = vec![0 as Element; 2 * order];
        let mut seen = vec![false; size];
        let mut x: u32 = 1;
        for i in 0..order {
            // α generates the whole multiplicative group iff no element repeats
            // before 2^ν − 1 steps.
            if seen[x as usize] {
                return Err(bad);
            }
            seen[x as usize] = true;
            exp[i] = x as Element;
            log[x as usize] = i as u32;
            x <<= 1;
            if x & (1 << nu) != 0 {
                x ^= poly;
            }
        }
        if x != 1 {
            return Err(bad);
        }
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        Ok(Field { nu, poly, log, exp })
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn primitive_poly(&self) -> u32 {
        self.poly
    }

    /// Number of elements, 2^ν.
    pub fn size(&self) -> usize {
        1 << self.nu
    }

    /// Multiplicative group order, 2^ν − 1.
    pub fn order(&self) -> usize {
        (1 << self.nu) - 1
    }

    /// The primitive element α.
    pub fn alpha(&self) -> Element {
        2
    }

    #[inline]
    pub fn add(&self, a: Element, b: Element) -> Element {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Element, b: Element) -> Element {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
    }

    pub fn inv(&self, a: Element) -> Result<Element, GaloisError> {
        if a == 0 {
            return Err(GaloisError::DivisionByZero);
        }
        let l = self.log[a as usize] as usize;
        Ok(self.exp[(self.order() - l) % self.order()])
    }

    pub fn div(&self, a: Element, b: Element) -> Result<Element, GaloisError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `a^e` for any signed exponent; `0^0 = 1`, and `0^e = 0` otherwise
    /// (negative powers of zero are treated as zero).
    pub fn pow(&self, a: Element, e: i64) -> Element {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let l = self.log[a as usize] as i64 * e;
        self.exp[l.rem_euclid(self.order() as i64) as usize]
    }

    /// `α^e` with the exponent reduced modulo 2^ν − 1.
    #[inline]
    pub fn exp(&self, e: i64) -> Element {
        self.exp[e.rem_euclid(self.order() as i64) as usize]
    }

    /// Discrete logarithm base α; `None` for zero.
    #[inline]
    pub fn log(&self, a: Element) -> Option<u32> {
        (a != 0).then(|| self.log[a as usize])
    }

    /// Minimal polynomial over GF(2) of `α^exponent`.
    pub fn minimal_polynomial(&self, exponent: usize) -> BinPoly {
        let order = self.order();
        let class = self.cyclotomic_coset(exponent % order);
        // Π (x + α^c) over the conjugacy class, in GF(2^ν)[x].
        let mut acc = GfPoly::one();
        for &c in &class {
            acc = acc.mul(self, &GfPoly::new(vec![self.exp(c as i64), 1]));
        }
        let bits = acc
            .coeffs()
            .iter()
            .map(|&c| {
                debug_assert!(c <= 1, "minimal polynomial coefficient outside GF(2)");
                c as u8
            })
            .collect();
        BinPoly::from_coeffs(bits)
    }

    /// `{e·2^j mod (2^ν − 1)}`, in generation order.
    pub fn cyclotomic_coset(&self, exponent: usize) -> Vec<usize> {
        let order = self.order();
        let mut class = vec![exponent % order];
        let mut c = (2 * exponent) % order;
        while c != class[0] {
            class.push(c);
            c = (2 * c) % order;
        }
        class
    }
}

/// Polynomial over GF(2), coefficient of `x^i` at index `i`, kept normalized
/// (no trailing zeros; the zero polynomial is empty).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinPoly {
    coeffs: Vec<u8>,
}

impl fmt::Debug for BinPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = (0..self.coeffs.len())
            .rev()
            .filter(|&i| self.coeffs[i] != 0)
            .map(|i| match i {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl BinPoly {
    pub fn from_coeffs(mut coeffs: Vec<u8>) -> Self {
        for c in coeffs.iter_mut() {
            *c &= 1;
        }
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        BinPoly { coeffs }
    }

    /// From a bit-packed polynomial (bit `i` = coefficient of `x^i`).
    pub fn from_bits(bits: u64) -> Self {
        let coeffs = (0..64).map(|i| ((bits >> i) & 1) as u8).collect();
        Self::from_coeffs(coeffs)
    }

    pub fn one() -> Self {
        BinPoly { coeffs: vec![1] }
    }

    pub fn coeffs(&self) -> &[u8] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Bit-packed form; `None` when the degree exceeds 63.
    pub fn to_bits(&self) -> Option<u64> {
        if self.coeffs.len() > 64 {
            return None;
        }
        Some(
            self.coeffs
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &c)| acc | (u64::from(c) << i)),
        )
    }

    pub fn mul(&self, other: &BinPoly) -> BinPoly {
        if self.is_zero() || other.is_zero() {
            return BinPoly { coeffs: Vec::new() };
        }
        let mut out = vec![0u8; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] ^= b;
            }
        }
        BinPoly::from_coeffs(out)
    }

    /// Remainder of division by `divisor`.
    ///
    /// # Panics
    /// If `divisor` is zero.
    pub fn rem(&self, divisor: &BinPoly) -> BinPoly {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let mut r = self.coeffs.clone();
        while r.len() > dd {
            let top = r.len() - 1;
            if r[top] != 0 {
                let shift = top - dd;
                for (j, &b) in divisor.coeffs.iter().enumerate() {
                    r[shift + j] ^= b;
                }
            }
            r.pop();
        }
        BinPoly::from_coeffs(r)
    }

    /// Evaluates at a point of the extension field.
    pub fn eval(&self, field: &Field, x: Element) -> Element {
        self.coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| field.mul(acc, x) ^ Element::from(c))
    }

    /// Least common multiple of binary polynomials that are each irreducible
    /// (distinct minimal polynomials are coprime, repeats are skipped).
    pub fn lcm_of_irreducibles<'a>(factors: impl IntoIterator<Item = &'a BinPoly>) -> BinPoly {
        let mut seen: Vec<&BinPoly> = Vec::new();
        let mut acc = BinPoly::one();
        for f in factors {
            if !seen.contains(&f) {
                acc = acc.mul(f);
                seen.push(f);
            }
        }
        acc
    }
}

/// Polynomial over GF(2^ν), coefficient of `x^i` at index `i`, normalized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GfPoly {
    coeffs: Vec<Element>,
}

impl GfPoly {
    pub fn new(mut coeffs: Vec<Element>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        GfPoly { coeffs }
    }

    pub fn one() -> Self {
        GfPoly { coeffs: vec![1] }
    }

    pub fn coeffs(&self) -> &[Element] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn mul(&self, field: &Field, other: &GfPoly) -> GfPoly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return GfPoly { coeffs: Vec::new() };
        }
        let mut out = vec![0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] ^= field.mul(a, b);
            }
        }
        GfPoly::new(out)
    }

    /// Horner evaluation.
    pub fn eval(&self, field: &Field, x: Element) -> Element {
        self.coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| field.mul(acc, x) ^ c)
    }
}
