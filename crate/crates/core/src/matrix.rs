//! Dense matrices over a prime field.

use rand::Rng;

use crate::elim;
use crate::error::{Error, Result};
use crate::field::{Fq, PrimeField};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MatrixFq {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<Fq>,
}

impl MatrixFq {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        Self {
            field,
            rows,
            cols,
            data: vec![Fq::ZERO; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = Fq::ONE;
        }
        m
    }

    /// Builds a matrix from row-major elements, checking that every one is
    /// reduced.
    pub fn from_row_major(field: PrimeField, rows: usize, cols: usize, data: Vec<Fq>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| v.0 >= field.modulus()) {
            return Err(Error::ValueOutOfRange {
                value: v.0 as u64,
                modulus: field.modulus() as u64,
            });
        }
        Ok(Self {
            field,
            rows,
            cols,
            data,
        })
    }

    /// Convenience constructor from small integer literals (reduced mod q).
    pub fn from_rows<R: AsRef<[u64]>>(field: PrimeField, rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().map(|&v| field.elem(v)))
            .collect();
        Ok(Self {
            field,
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// `Mat_{s x t}(v)`: writes the vector out row by row.
    pub fn from_vec(field: PrimeField, v: &[Fq], s: usize, t: usize) -> Result<Self> {
        if v.len() != s * t {
            return Err(Error::Dimension(format!(
                "vector of length {} cannot be reshaped to {s}x{t}",
                v.len()
            )));
        }
        Self::from_row_major(field, s, t, v.to_vec())
    }

    /// Uniformly random matrix.
    pub fn random<R: Rng + ?Sized>(field: PrimeField, rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| field.random(rng)).collect();
        Self {
            field,
            rows,
            cols,
            data,
        }
    }

    /// Uniformly random invertible `dim x dim` matrix.
    pub fn random_invertible<R: Rng + ?Sized>(dim: usize, field: PrimeField, rng: &mut R) -> Self {
        LowerUpper::random(dim, dim, field, rng).product()
    }

    /// Same distribution as [`random_invertible`](Self::random_invertible),
    /// together with its inverse.
    pub fn random_invertible_with_inverse<R: Rng + ?Sized>(
        dim: usize,
        field: PrimeField,
        rng: &mut R,
    ) -> (Self, Self) {
        let m = Self::random_invertible(dim, field, rng);
        let inv = m.inverse().expect("a factored sample is invertible");
        (m, inv)
    }

    /// `count` rows drawn uniformly from all linearly independent
    /// `count`-tuples of vectors in `F_q^dim`. This is the law of any `count`
    /// rows (or, transposed, columns) of a uniform invertible matrix.
    pub fn random_independent_rows<R: Rng + ?Sized>(
        count: usize,
        dim: usize,
        field: PrimeField,
        rng: &mut R,
    ) -> Self {
        assert!(count <= dim, "{count} independent vectors do not exist in dimension {dim}");
        LowerUpper::random(count, dim, field, rng).product()
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Fq {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Fq) {
        assert!(v.0 < self.field.modulus());
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[Fq] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Fq> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Row-major entries; the inverse of [`from_vec`](Self::from_vec).
    pub fn as_slice(&self) -> &[Fq] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Fq> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    fn same_field(&self, other: &Self) -> Result<()> {
        if self.field != other.field {
            return Err(Error::Dimension(format!(
                "operands live in {} and {}",
                self.field, other.field
            )));
        }
        Ok(())
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.same_field(rhs)?;
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let t = rhs.transpose();
        let mut out = Self::zeros(self.field, self.rows, rhs.cols);
        for r in 0..self.rows {
            let a = self.row(r);
            for c in 0..rhs.cols {
                out.data[r * rhs.cols + c] = self.field.dot(a, t.row(c));
            }
        }
        Ok(out)
    }

    /// Row vector times matrix.
    pub fn left_mul_vec(&self, v: &[Fq]) -> Result<Vec<Fq>> {
        if v.len() != self.rows {
            return Err(Error::Dimension(format!(
                "vector of length {} times {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        let field = self.field;
        let per = field.lazy_terms();
        let mut acc = vec![0u64; self.cols];
        let mut pending = 0;
        for (r, x) in v.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            if pending == per {
                acc.iter_mut().for_each(|a| *a = field.reduce(*a) as u64);
                pending = 0;
            }
            let x = x.0 as u64;
            for (a, m) in acc.iter_mut().zip(self.row(r)) {
                *a = a.wrapping_add(x * m.0 as u64);
            }
            pending += 1;
        }
        Ok(acc.into_iter().map(|a| field.elem(a)).collect())
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!(
                "cannot invert a non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let data =
            elim::invert(self.field, self.rows, &self.data).map_err(|column| Error::Singular { column })?;
        Ok(Self {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn rank(&self) -> usize {
        let target = self.rows.min(self.cols);
        elim::rank_towards(self.field, self.rows, self.cols, &self.data, target).0
    }

    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && self.rank() == self.rows
    }

    /// Reduced row echelon form; unique for the orbit of `self` under
    /// left multiplication by invertible matrices.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let (data, pivots) = elim::rref(self.field, self.rows, self.cols, self.cols, &self.data);
        (
            Self {
                field: self.field,
                rows: self.rows,
                cols: self.cols,
                data,
            },
            pivots,
        )
    }

    /// Selects the listed columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.field, self.rows, cols.len());
        for r in 0..self.rows {
            for (i, &c) in cols.iter().enumerate() {
                out.data[r * cols.len() + i] = self.get(r, c);
            }
        }
        out
    }
}

/// Linearly independent rows kept in factored form `A = L U`.
///
/// Row `i` of `A` is `u_i + sum_{k<i} l_ik u_k`, where `u_i` is nonzero and
/// vanishes on the pivots of `u_0 .. u_{i-1}`; the pivot of `u_i` is its
/// first nonzero entry. Given the earlier rows, `(l_i, u_i) -> row i` is a
/// bijection onto the vectors outside their span, so drawing `l_i` and
/// `u_i` uniformly gives rows uniform among all independent tuples (a
/// uniform invertible matrix when square) with no rejection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowerUpper {
    field: PrimeField,
    rows: usize,
    cols: usize,
    /// `rows x rows`; only the strictly lower part is meaningful.
    lower: Vec<Fq>,
    /// `rows x cols`, the `u_i`.
    upper: Vec<Fq>,
    pivots: Vec<usize>,
}

impl LowerUpper {
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, field: PrimeField, rng: &mut R) -> Self {
        assert!(rows <= cols, "{rows} independent vectors do not exist in dimension {cols}");
        let mut used = vec![false; cols];
        let mut lower = vec![Fq::ZERO; rows * rows];
        let mut upper = vec![Fq::ZERO; rows * cols];
        let mut pivots = Vec::with_capacity(rows);
        for i in 0..rows {
            for l in &mut lower[i * rows..i * rows + i] {
                *l = field.random(rng);
            }
            let u = &mut upper[i * cols..(i + 1) * cols];
            let pivot = loop {
                for (v, _) in u.iter_mut().zip(&used).filter(|(_, &taken)| !taken) {
                    *v = field.random(rng);
                }
                if let Some(c) = (0..cols).find(|&c| !used[c] && !u[c].is_zero()) {
                    break c;
                }
            };
            used[pivot] = true;
            pivots.push(pivot);
        }
        Self {
            field,
            rows,
            cols,
            lower,
            upper,
            pivots,
        }
    }

    /// Factors given explicitly. `lower` must be unit lower triangular and
    /// each row of `upper` nonzero and zero on the earlier pivots.
    pub fn from_parts(lower: &MatrixFq, upper: &MatrixFq) -> Result<Self> {
        lower.same_field(upper)?;
        let (rows, cols) = (upper.rows(), upper.cols());
        if lower.rows() != rows || lower.cols() != rows || rows > cols {
            return Err(Error::Dimension(format!(
                "{}x{} lower factor with {rows}x{cols} upper factor",
                lower.rows(),
                lower.cols()
            )));
        }
        for i in 0..rows {
            for k in i..rows {
                let want = if k == i { Fq::ONE } else { Fq::ZERO };
                if lower.get(i, k) != want {
                    return Err(Error::Construction(format!("lower factor is not unit lower triangular at ({i},{k})")));
                }
            }
        }
        let mut pivots: Vec<usize> = Vec::with_capacity(rows);
        for i in 0..rows {
            let u = upper.row(i);
            if let Some(&p) = pivots.iter().find(|&&p| !u[p].is_zero()) {
                return Err(Error::Construction(format!("row {i} of the upper factor is nonzero on pivot {p}")));
            }
            let pivot = (0..cols)
                .find(|&c| !u[c].is_zero())
                .ok_or_else(|| Error::Construction(format!("row {i} of the upper factor is zero")))?;
            pivots.push(pivot);
        }
        Ok(Self {
            field: upper.field(),
            rows,
            cols,
            lower: lower.as_slice().to_vec(),
            upper: upper.as_slice().to_vec(),
            pivots,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column `pivots[i]` is where `u_i` starts.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// `A = L U`.
    pub fn product(&self) -> MatrixFq {
        // with the pivots moved to the front in order, U is upper triangular
        let mut order = self.pivots.clone();
        let mut taken = vec![false; self.cols];
        for &p in &self.pivots {
            taken[p] = true;
        }
        order.extend((0..self.cols).filter(|&c| !taken[c]));
        let mut permuted = Vec::with_capacity(self.upper.len());
        for r in 0..self.rows {
            let u = &self.upper[r * self.cols..(r + 1) * self.cols];
            permuted.extend(order.iter().map(|&c| u[c]));
        }
        let a = elim::unit_lower_times_upper(self.field, self.rows, self.cols, &self.lower, &permuted);
        let mut data = vec![Fq::ZERO; a.len()];
        for r in 0..self.rows {
            for (j, &c) in order.iter().enumerate() {
                data[r * self.cols + c] = a[r * self.cols + j];
            }
        }
        MatrixFq {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// The `x` with `A x = b`, for square `A`.
    pub fn solve(&self, b: &[Fq]) -> Result<Vec<Fq>> {
        let (n, field) = (self.rows, self.field);
        if self.cols != n || b.len() != n {
            return Err(Error::Dimension(format!(
                "solving a {n}x{} system with a right-hand side of length {}",
                self.cols,
                b.len()
            )));
        }
        // L y = b
        let mut y = b.to_vec();
        for i in 0..n {
            let s = field.dot(&self.lower[i * n..i * n + i], &y[..i]);
            y[i] = field.sub(y[i], s);
        }
        // U x = y, last pivot first; u_i is zero where x is still unknown
        let mut x = vec![Fq::ZERO; n];
        for i in (0..n).rev() {
            let u = &self.upper[i * n..(i + 1) * n];
            let p = self.pivots[i];
            let s = field.dot(u, &x);
            x[p] = field.mul(field.sub(y[i], s), field.inv(u[p])?);
        }
        Ok(x)
    }
}

/// `Mat_{L~ x N}( W * S[:, 0..T*L~] * (I_{L~} (x) G) )`.
///
/// The Kronecker product is applied blockwise: the first `T * ltilde`
/// coordinates of `w * s` are cut into blocks of `T` and each block is
/// encoded with `g`, giving one codeword per output row.
pub fn mix_interference(w: &[Fq], s: &MatrixFq, ltilde: usize, g: &MatrixFq) -> Result<MatrixFq> {
    let field = s.field();
    s.same_field(g)?;
    let (t, n) = (g.rows(), g.cols());
    if s.rows() != s.cols() || w.len() != s.rows() {
        return Err(Error::Dimension(format!(
            "record of length {} against a {}x{} mixing matrix",
            w.len(),
            s.rows(),
            s.cols()
        )));
    }
    if n * ltilde != s.rows() || t * ltilde > s.cols() {
        return Err(Error::Dimension(format!(
            "L = {} is incompatible with N = {n}, T = {t}, L~ = {ltilde}",
            s.rows()
        )));
    }
    let mixed = s.left_mul_vec(w)?;
    let mut out = MatrixFq::zeros(field, ltilde, n);
    for b in 0..ltilde {
        let codeword = g.left_mul_vec(&mixed[b * t..(b + 1) * t])?;
        out.data[b * n..(b + 1) * n].copy_from_slice(&codeword);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn f(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let field = f(5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = MatrixFq::random(field, 2, 3, &mut rng);
        assert_eq!(MatrixFq::identity(field, 2).mul(&b).unwrap(), b);
        assert_eq!(b.mul(&MatrixFq::identity(field, 3)).unwrap(), b);
    }

    #[test]
    fn hand_computed_product() {
        let field = f(3);
        let a = MatrixFq::from_rows(field, &[[1u64, 2]]).unwrap();
        let b = MatrixFq::from_rows(field, &[[1u64, 0], [1, 1]]).unwrap();
        assert_eq!(a.mul(&b).unwrap(), MatrixFq::from_rows(field, &[[0u64, 2]]).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let field = f(3);
        let a = MatrixFq::zeros(field, 2, 3);
        assert!(matches!(a.mul(&a), Err(Error::Dimension(_))));
        assert!(matches!(a.inverse(), Err(Error::Dimension(_))));
        let other = MatrixFq::zeros(f(5), 3, 1);
        assert!(matches!(a.mul(&other), Err(Error::Dimension(_))));
    }

    #[test]
    fn unipotent_inverse() {
        let field = f(3);
        let a = MatrixFq::from_rows(field, &[[1u64, 1], [0, 1]]).unwrap();
        let expected = MatrixFq::from_rows(field, &[[1u64, 2], [0, 1]]).unwrap();
        assert_eq!(a.inverse().unwrap(), expected);
        let i4 = MatrixFq::identity(field, 4);
        assert_eq!(i4.inverse().unwrap(), i4);
    }

    #[test]
    fn singular_matrix_carries_column() {
        let field = f(7);
        let a = MatrixFq::from_rows(field, &[[1u64, 2], [2, 4]]).unwrap();
        assert!(matches!(a.inverse(), Err(Error::Singular { column: 1 })));
        let z = MatrixFq::zeros(field, 3, 3);
        assert!(matches!(z.inverse(), Err(Error::Singular { column: 0 })));
    }

    /// All 16 binary 2x2 matrices, filtered by a determinant computed by hand.
    fn gl2_f2_by_determinant() -> Vec<MatrixFq> {
        let field = f(2);
        (0u64..16)
            .map(|bits| [bits & 1, (bits >> 1) & 1, (bits >> 2) & 1, (bits >> 3) & 1])
            .filter(|m| (m[0] * m[3] + m[1] * m[2]) % 2 == 1)
            .map(|m| MatrixFq::from_rows(field, &[[m[0], m[1]], [m[2], m[3]]]).unwrap())
            .collect()
    }

    #[test]
    fn every_element_of_gl2_f2_round_trips() {
        let group = gl2_f2_by_determinant();
        assert_eq!(group.len(), 6);
        let i2 = MatrixFq::identity(f(2), 2);
        for a in &group {
            let inv = a.inverse().unwrap();
            assert_eq!(a.mul(&inv).unwrap(), i2);
            assert_eq!(inv.mul(a).unwrap(), i2);
        }
    }

    #[test]
    fn random_invertible_covers_gl2_f2_exactly() {
        let group: HashSet<_> = gl2_f2_by_determinant().into_iter().collect();
        let mut seen = HashSet::new();
        for seed in 0..400 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = MatrixFq::random_invertible(2, f(2), &mut rng);
            assert!(group.contains(&m));
            seen.insert(m);
        }
        assert_eq!(seen, group);
    }

    #[test]
    fn random_invertible_scalars() {
        let field = f(3);
        let mut counts = [0usize; 3];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..3000 {
            let m = MatrixFq::random_invertible(1, field, &mut rng);
            counts[m.get(0, 0).value() as usize] += 1;
        }
        assert_eq!(counts[0], 0);
        assert!(counts[1] > 1300 && counts[2] > 1300, "{counts:?}");
    }

    #[test]
    fn random_invertible_is_reproducible() {
        let field = f(5);
        let a = MatrixFq::random_invertible(6, field, &mut ChaCha8Rng::seed_from_u64(77));
        let b = MatrixFq::random_invertible(6, field, &mut ChaCha8Rng::seed_from_u64(77));
        assert_eq!(a, b);
        assert!(a.inverse().is_ok());
        let (c, c_inv) = MatrixFq::random_invertible_with_inverse(6, field, &mut ChaCha8Rng::seed_from_u64(77));
        assert_eq!(c.mul(&c_inv).unwrap(), MatrixFq::identity(field, 6));
    }

    #[test]
    fn factored_sampler_is_a_bijection_onto_gl() {
        // every admissible (L, U) pair, mapped to its product, hits each
        // invertible matrix exactly once
        for (q, n, order) in [(2u64, 3usize, 168usize), (3, 2, 48), (2, 2, 6)] {
            let field = f(q);
            let lower_free = n * (n - 1) / 2;
            let mut seen = HashSet::new();
            let mut admissible = 0;
            for lower_code in 0..q.pow(lower_free as u32) {
                let mut lower = MatrixFq::identity(field, n);
                let mut code = lower_code;
                for i in 0..n {
                    for k in 0..i {
                        lower.set(i, k, field.elem(code % q));
                        code /= q;
                    }
                }
                for upper_code in 0..q.pow((n * n) as u32) {
                    let mut code = upper_code;
                    let data = (0..n * n)
                        .map(|_| {
                            let v = field.elem(code % q);
                            code /= q;
                            v
                        })
                        .collect();
                    let upper = MatrixFq::from_row_major(field, n, n, data).unwrap();
                    let Ok(lu) = LowerUpper::from_parts(&lower, &upper) else {
                        continue;
                    };
                    admissible += 1;
                    let a = lu.product();
                    assert!(a.is_invertible());
                    assert!(seen.insert(a), "product repeated for q={q} n={n}");
                }
            }
            assert_eq!(admissible, order);
            assert_eq!(seen.len(), order);
        }
    }

    #[test]
    fn factored_sampler_frequencies_are_flat() {
        // GL(2, 3) has 48 elements; 48_000 draws give about 1000 each
        let field = f(3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut counts = std::collections::HashMap::new();
        for _ in 0..48_000 {
            *counts.entry(MatrixFq::random_invertible(2, field, &mut rng)).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 48);
        assert!(counts.values().all(|&c| (850..1150).contains(&c)), "{counts:?}");
    }

    #[test]
    fn factored_solve_inverts_the_product() {
        for q in [2u64, 7, 65521] {
            let field = f(q);
            let mut rng = ChaCha8Rng::seed_from_u64(q);
            let lu = LowerUpper::random(40, 40, field, &mut rng);
            let a = lu.product();
            let x: Vec<Fq> = (0..40).map(|_| field.random(&mut rng)).collect();
            let b: Vec<Fq> = (0..40).map(|r| field.dot(a.row(r), &x)).collect();
            assert_eq!(lu.solve(&b).unwrap(), x);
        }
    }

    #[test]
    fn random_4x4_round_trip() {
        let field = f(7);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = MatrixFq::random_invertible(4, field, &mut rng);
        let i4 = MatrixFq::identity(field, 4);
        assert_eq!(a.mul(&a.inverse().unwrap()).unwrap(), i4);
    }

    #[test]
    fn reshape_row_by_row() {
        let field = f(3);
        let v: Vec<Fq> = [1u64, 2, 0, 0, 1, 2].iter().map(|&x| field.elem(x)).collect();
        let m = MatrixFq::from_vec(field, &v, 2, 3).unwrap();
        assert_eq!(m, MatrixFq::from_rows(field, &[[1u64, 2, 0], [0, 1, 2]]).unwrap());
        assert_eq!(m.as_slice(), &v[..]);
        let one_row = MatrixFq::from_vec(field, &v, 1, 6).unwrap();
        assert_eq!(one_row.row(0), &v[..]);
        assert!(matches!(MatrixFq::from_vec(field, &v, 4, 2), Err(Error::Dimension(_))));
    }

    #[test]
    fn unreduced_entries_rejected() {
        let field = f(3);
        assert!(matches!(
            MatrixFq::from_row_major(field, 1, 1, vec![Fq(3)]),
            Err(Error::ValueOutOfRange { .. })
        ));
    }

    #[test]
    fn mix_interference_encodes_unit_vector() {
        let field = f(3);
        // systematic [3,2] generator
        let g = MatrixFq::from_rows(field, &[[1u64, 0, 1], [0, 1, 1]]).unwrap();
        let s = MatrixFq::identity(field, 3);
        let w = [Fq::ONE, Fq::ZERO, Fq::ZERO];
        let out = mix_interference(&w, &s, 1, &g).unwrap();
        assert_eq!(out.row(0), g.row(0));

        let zero = mix_interference(&[Fq::ZERO; 3], &s, 1, &g).unwrap();
        assert!(zero.as_slice().iter().all(|v| v.is_zero()));
        assert!(mix_interference(&w, &MatrixFq::identity(field, 4), 1, &g).is_err());
    }

    #[test]
    fn rref_is_orbit_invariant() {
        let field = f(5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = MatrixFq::random(field, 4, 6, &mut rng);
        let a = MatrixFq::random_invertible(4, field, &mut rng);
        assert_eq!(b.rref(), a.mul(&b).unwrap().rref());
    }

    #[test]
    fn independent_rows_have_full_rank() {
        let field = f(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = MatrixFq::random_independent_rows(5, 6, field, &mut rng);
            assert_eq!(m.rank(), 5);
        }
    }
}
