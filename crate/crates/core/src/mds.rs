//! Reed-Solomon `[N, T]` codes with erasure recovery.

use std::collections::HashSet;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::field::{Fq, PrimeField};
use crate::matrix::MatrixFq;

/// Vandermonde code with generator `G[r][j] = x_j^r` and evaluation points
/// `x_j = j` for `j = 0..N` (with `0^0 = 1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MdsCode {
    length: usize,
    dimension: usize,
    field: PrimeField,
    generator: MatrixFq,
    points: Vec<Fq>,
}

/// Maps the values at a fixed set of `T` positions to the whole codeword.
#[derive(Clone, Debug)]
pub struct Recoverer {
    positions: Vec<usize>,
    /// `G_Γ^{-1} G`: known values times this matrix is the codeword.
    expand: MatrixFq,
}

impl MdsCode {
    pub fn new(length: usize, dimension: usize, field: PrimeField) -> Result<Self> {
        if dimension < 1 || dimension >= length {
            return Err(Error::Params(format!(
                "an [N, T] code needs 1 <= T < N (got N = {length}, T = {dimension})"
            )));
        }
        if (field.modulus() as usize) < length {
            return Err(Error::Params(format!(
                "q = {} is smaller than N = {length}",
                field.modulus()
            )));
        }
        let points: Vec<Fq> = (0..length as u64).map(|x| field.elem(x)).collect();
        let mut generator = MatrixFq::zeros(field, dimension, length);
        for (j, &x) in points.iter().enumerate() {
            for r in 0..dimension {
                generator.set(r, j, field.pow(x, r as u64));
            }
        }
        Ok(Self {
            length,
            dimension,
            field,
            generator,
            points,
        })
    }

    /// `N`.
    pub fn length(&self) -> usize {
        self.length
    }

    /// `T`.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn generator(&self) -> &MatrixFq {
        &self.generator
    }

    pub fn eval_points(&self) -> &[Fq] {
        &self.points
    }

    pub fn encode(&self, msg: &[Fq]) -> Result<Vec<Fq>> {
        self.generator.left_mul_vec(msg)
    }

    /// Precomputes recovery from the given `T` distinct positions.
    pub fn recoverer(&self, positions: &[usize]) -> Result<Recoverer> {
        if positions.len() != self.dimension {
            return Err(Error::Dimension(format!(
                "recovery needs exactly T = {} positions, got {}",
                self.dimension,
                positions.len()
            )));
        }
        let mut seen = HashSet::new();
        for &p in positions {
            if p >= self.length {
                return Err(Error::Dimension(format!("position {p} outside a code of length {}", self.length)));
            }
            if !seen.insert(p) {
                return Err(Error::DuplicatePosition(p));
            }
        }
        let sub = self.generator.select_columns(positions);
        let inv = sub.inverse().map_err(|_| {
            Error::Internal(format!("generator columns {positions:?} are not independent"))
        })?;
        Ok(Recoverer {
            positions: positions.to_vec(),
            expand: inv.mul(&self.generator)?,
        })
    }

    /// The unique codeword through the `T` known `(position, value)` pairs.
    pub fn recover(&self, known: &[(usize, Fq)]) -> Result<Vec<Fq>> {
        let positions: Vec<usize> = known.iter().map(|k| k.0).collect();
        let values: Vec<Fq> = known.iter().map(|k| k.1).collect();
        self.recoverer(&positions)?.recover(&values)
    }

    /// Position sets whose generator columns are dependent. Empty for an
    /// MDS code; checked exhaustively over all `C(N, T)` subsets.
    pub fn dependent_subsets(&self) -> Vec<Vec<usize>> {
        (0..self.length)
            .combinations(self.dimension)
            .filter(|cols| !self.generator.select_columns(cols).is_invertible())
            .collect()
    }
}

impl Recoverer {
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Codeword from the values at [`positions`](Self::positions), in the
    /// same order.
    pub fn recover(&self, values: &[Fq]) -> Result<Vec<Fq>> {
        self.expand.left_mul_vec(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(n: usize, t: usize, q: u64) -> MdsCode {
        MdsCode::new(n, t, PrimeField::new(q).unwrap()).unwrap()
    }

    fn fq(v: &[u32]) -> Vec<Fq> {
        v.iter().map(|&x| Fq(x)).collect()
    }

    #[test]
    fn vandermonde_generators() {
        let c = code(3, 2, 3);
        let f = c.field();
        assert_eq!(c.generator(), &MatrixFq::from_rows(f, &[[1, 1, 1], [0, 1, 2]]).unwrap());
        let rep = code(2, 1, 2);
        assert_eq!(rep.generator(), &MatrixFq::from_rows(rep.field(), &[[1, 1]]).unwrap());
    }

    #[test]
    fn encodes_unit_messages() {
        let c = code(3, 2, 3);
        assert_eq!(c.encode(&fq(&[1, 0])).unwrap(), fq(&[1, 1, 1]));
        assert_eq!(c.encode(&fq(&[0, 1])).unwrap(), fq(&[0, 1, 2]));
        assert_eq!(c.encode(&fq(&[0, 0])).unwrap(), fq(&[0, 0, 0]));
        assert!(c.encode(&fq(&[1])).is_err());
    }

    #[test]
    fn recovers_from_first_and_last() {
        let c = code(3, 2, 3);
        assert_eq!(c.recover(&[(0, Fq(1)), (2, Fq(1))]).unwrap(), fq(&[1, 1, 1]));
        assert_eq!(c.recover(&[(1, Fq(0)), (0, Fq(0))]).unwrap(), fq(&[0, 0, 0]));
    }

    #[test]
    fn recovery_errors() {
        let c = code(3, 2, 3);
        assert!(matches!(c.recover(&[(1, Fq(1)), (1, Fq(2))]), Err(Error::DuplicatePosition(1))));
        assert!(matches!(c.recover(&[(1, Fq(1))]), Err(Error::Dimension(_))));
        assert!(matches!(c.recover(&[(1, Fq(1)), (3, Fq(2))]), Err(Error::Dimension(_))));
    }

    #[test]
    fn every_pair_of_columns_is_independent() {
        let c = code(4, 2, 5);
        assert_eq!((0..4).combinations(2).count(), 6);
        assert!(c.dependent_subsets().is_empty());
    }

    #[test]
    fn parameter_errors() {
        let f3 = PrimeField::new(3).unwrap();
        assert!(MdsCode::new(4, 2, f3).is_err());
        assert!(MdsCode::new(3, 3, f3).is_err());
        assert!(MdsCode::new(3, 0, f3).is_err());
    }
}
