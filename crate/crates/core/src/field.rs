//! Prime-field arithmetic.
//!
//! Elements are stored as `u32` residues; the modulus is limited to `q < 2^31`
//! so that a sum of two residues never overflows and a product fits in `u64`.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Largest modulus accepted by [`PrimeField::new`].
pub const MAX_MODULUS: u64 = (1 << 31) - 1;

/// An element of some prime field, always reduced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct Fq(pub(crate) u32);

impl Fq {
    pub const ZERO: Fq = Fq(0);
    pub const ONE: Fq = Fq(1);

    #[inline]
    pub fn value(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Fq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The field `F_q` for a prime `q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    q: u32,
    /// `floor(2^64 / q)`, for Barrett reduction.
    barrett: u64,
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self> {
        if q > MAX_MODULUS {
            return Err(Error::Params(format!(
                "modulus {q} exceeds the supported maximum {MAX_MODULUS}"
            )));
        }
        if !is_prime(q) {
            return Err(Error::Params(format!("modulus {q} is not prime")));
        }
        Ok(Self {
            q: q as u32,
            barrett: ((1u128 << 64) / q as u128) as u64,
        })
    }

    /// The field whose modulus is the smallest prime `>= n` (and `>= 2`).
    pub fn smallest_at_least(n: u64) -> Result<Self> {
        Self::new(next_prime(n).ok_or_else(|| {
            Error::Params(format!("no supported prime modulus at least {n}"))
        })?)
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.q
    }

    /// Reduces an arbitrary integer into the field.
    #[inline]
    pub fn elem(&self, v: u64) -> Fq {
        Fq(self.reduce(v))
    }

    /// `v mod q`. The quotient estimate is off by at most one, so a single
    /// conditional subtraction finishes the job.
    #[inline(always)]
    pub(crate) fn reduce(&self, v: u64) -> u32 {
        let q = self.q as u64;
        let est = ((v as u128 * self.barrett as u128) >> 64) as u64;
        // est <= v / q, so neither step can wrap
        let r = v.wrapping_sub(est.wrapping_mul(q));
        (if r >= q { r - q } else { r }) as u32
    }

    /// Accepts `v` only when it is already a reduced residue.
    pub fn checked_elem(&self, v: u64) -> Result<Fq> {
        if v < self.q as u64 {
            Ok(Fq(v as u32))
        } else {
            Err(Error::ValueOutOfRange {
                value: v,
                modulus: self.q as u64,
            })
        }
    }

    #[inline]
    pub fn add(&self, a: Fq, b: Fq) -> Fq {
        let s = a.0 + b.0;
        Fq(if s >= self.q { s - self.q } else { s })
    }

    #[inline]
    pub fn sub(&self, a: Fq, b: Fq) -> Fq {
        Fq(if a.0 >= b.0 {
            a.0 - b.0
        } else {
            a.0 + self.q - b.0
        })
    }

    #[inline]
    pub fn neg(&self, a: Fq) -> Fq {
        Fq(if a.0 == 0 { 0 } else { self.q - a.0 })
    }

    #[inline]
    pub fn mul(&self, a: Fq, b: Fq) -> Fq {
        Fq(self.reduce(a.0 as u64 * b.0 as u64))
    }

    pub fn pow(&self, a: Fq, mut e: u64) -> Fq {
        let mut base = a;
        let mut acc = Fq::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(&self, a: Fq) -> Result<Fq> {
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(a, self.q as u64 - 2))
    }

    /// Uniformly random element.
    #[inline]
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Fq {
        Fq(rng.random_range(0..self.q))
    }

    /// How many unreduced products can be added to a reduced residue in a
    /// `u64` without overflow.
    #[inline]
    pub(crate) fn lazy_terms(&self) -> usize {
        let q = self.q as u64;
        let step = ((q - 1) * (q - 1)).max(1);
        ((u64::MAX - q) / step).min(usize::MAX as u64) as usize
    }

    /// Inner product of two equal-length slices.
    pub fn dot(&self, a: &[Fq], b: &[Fq]) -> Fq {
        debug_assert_eq!(a.len(), b.len());
        let per = self.lazy_terms();
        let mut acc = 0u32;
        for (xs, ys) in a.chunks(per).zip(b.chunks(per)) {
            let s = xs
                .iter()
                .zip(ys)
                .fold(acc as u64, |s, (x, y)| s.wrapping_add(x.0 as u64 * y.0 as u64));
            acc = self.reduce(s);
        }
        Fq(acc)
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q)
    }
}

/// Deterministic trial-division primality test.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest prime `>= n` that fits the supported modulus range.
pub fn next_prime(n: u64) -> Option<u64> {
    (n.max(2)..=MAX_MODULUS).find(|&c| is_prime(c))
}
