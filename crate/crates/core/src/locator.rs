//! Binary locator matrices.
//!
//! Row `r` of the locator for size class `i` describes local row `r` of every
//! interference type of cardinality `i`: a one at server `j` means that
//! server returns the pure interference sum, a zero means it returns the
//! mixed sum carrying a fresh desired symbol.

use std::fmt;

use crate::error::{Error, Result};
use crate::params::SchemeParams;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            bits: vec![false; rows * cols],
        }
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.as_ref().len(), cols, "ragged rows");
            for (c, &b) in row.as_ref().iter().enumerate() {
                m.set(r, c, b != 0);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.bits[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[bool] {
        &self.bits[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row(r).iter().filter(|&&b| b).count()
    }

    pub fn col_weight(&self, c: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, c)).count()
    }

    /// Copies `block` with its top-left corner at `(r0, c0)`.
    fn paste(&mut self, r0: usize, c0: usize, block: &BinaryMatrix) {
        for r in 0..block.rows {
            for c in 0..block.cols {
                self.set(r0 + r, c0 + c, block.get(r, c));
            }
        }
    }
}

impl fmt::Display for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let line: String = self.row(r).iter().map(|&b| if b { '1' } else { '0' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// `E(u, v)` of shape `m x n_cols`: row `k` is `1^u 0^(n_cols-u)` shifted
/// cyclically right by `u * k`. Every row has weight `u` and the result is
/// checked to have column weight `v`.
pub fn make_e(u: usize, v: usize, m: usize, n_cols: usize) -> Result<BinaryMatrix> {
    if m * u != n_cols * v || u > n_cols || v > m {
        return Err(Error::Params(format!(
            "E({u},{v}) of shape {m}x{n_cols} cannot exist"
        )));
    }
    let mut e = BinaryMatrix::zeros(m, n_cols);
    for k in 0..m {
        for s in 0..u {
            e.set(k, (u * k + s) % n_cols, true);
        }
    }
    if let Some(c) = (0..n_cols).find(|&c| e.col_weight(c) != v) {
        return Err(Error::Construction(format!(
            "cyclic E({u},{v}) of shape {m}x{n_cols} has column {c} of weight {}",
            e.col_weight(c)
        )));
    }
    Ok(e)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocatorMatrix {
    size: usize,
    bits: BinaryMatrix,
}

fn exact_div(num: usize, den: usize, what: &str) -> Result<usize> {
    if !num.is_multiple_of(den) {
        return Err(Error::Internal(format!("{what} = {num}/{den} is not an integer")));
    }
    Ok(num / den)
}

/// Locator for the interference types of cardinality `size` (1-based,
/// `1 <= size <= M - 1`).
pub fn make_locator(size: usize, p: &SchemeParams) -> Result<LocatorMatrix> {
    if size < 1 || size >= p.records() {
        return Err(Error::Params(format!(
            "size class {size} outside 1..={}",
            p.records() - 1
        )));
    }
    let (n, t) = (p.servers(), p.collusion());
    let (a, b) = (p.alpha(size), p.beta(size));
    let mut bits = BinaryMatrix::zeros(p.rows_per_type(size), n);
    if n >= 2 * t {
        let top = exact_div((n - t) * b, t, "(N-T)beta/T")?;
        bits.paste(0, t, &make_e(t, b, top, n - t)?);
        bits.paste(top, 0, &make_e(t, a, a, t)?);
    } else {
        let shared = exact_div((2 * t - n) * b, t, "(2T-N)beta/T")?;
        let rest = a.checked_sub(shared).ok_or_else(|| {
            Error::Internal(format!("alpha_{size} = {a} is smaller than (2T-N)beta/T = {shared}"))
        })?;
        bits.paste(0, 0, &make_e(2 * t - n, shared, b, t)?);
        bits.paste(0, t, &make_e(n - t, b, b, n - t)?);
        bits.paste(b, 0, &make_e(t, rest, rest, t)?);
    }
    let locator = LocatorMatrix { size, bits };
    let violations = locator.violations(p);
    if !violations.is_empty() {
        return Err(Error::Construction(violations.join("; ")));
    }
    Ok(locator)
}

impl LocatorMatrix {
    /// Wraps raw bits without validation.
    pub fn from_bits(size: usize, bits: BinaryMatrix) -> Self {
        Self { size, bits }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn bits(&self) -> &BinaryMatrix {
        &self.bits
    }

    pub fn rows(&self) -> usize {
        self.bits.rows()
    }

    /// Servers holding a one in row `r`, ascending.
    pub fn ones(&self, r: usize) -> Vec<usize> {
        (0..self.bits.cols()).filter(|&c| self.bits.get(r, c)).collect()
    }

    /// Weight constraints that fail for `p`; empty when valid.
    pub fn violations(&self, p: &SchemeParams) -> Vec<String> {
        let i = self.size;
        let mut out = Vec::new();
        if self.bits.rows() != p.rows_per_type(i) || self.bits.cols() != p.servers() {
            out.push(format!(
                "M_{i} has shape {}x{}, expected {}x{}",
                self.bits.rows(),
                self.bits.cols(),
                p.rows_per_type(i),
                p.servers()
            ));
            return out;
        }
        for r in 0..self.bits.rows() {
            let w = self.bits.row_weight(r);
            if w != p.collusion() {
                out.push(format!("M_{i} row {} has weight {w}, expected T = {}", r + 1, p.collusion()));
            }
        }
        for c in 0..self.bits.cols() {
            let w = self.bits.col_weight(c);
            let (name, want) = if c < p.collusion() {
                ("alpha", p.alpha(i))
            } else {
                ("beta", p.beta(i))
            };
            if w != want {
                out.push(format!("M_{i} column {} has weight {w}, expected {name}_{i} = {want}", c + 1));
            }
        }
        out
    }
}

impl fmt::Display for LocatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_e_matrices() {
        assert_eq!(make_e(1, 1, 2, 2).unwrap(), BinaryMatrix::from_rows(&[[1, 0], [0, 1]]));
        assert_eq!(
            make_e(2, 2, 3, 3).unwrap(),
            BinaryMatrix::from_rows(&[[1, 1, 0], [1, 0, 1], [0, 1, 1]])
        );
        assert_eq!(make_e(0, 0, 2, 3).unwrap(), BinaryMatrix::zeros(2, 3));
        assert_eq!(make_e(3, 0, 0, 3).unwrap(), BinaryMatrix::zeros(0, 3));
    }

    #[test]
    fn infeasible_e_is_rejected() {
        assert!(matches!(make_e(2, 1, 3, 3), Err(Error::Params(_))));
        assert!(matches!(make_e(4, 4, 3, 3), Err(Error::Params(_))));
    }

    #[test]
    fn cyclic_construction_covers_feasible_shapes() {
        // consecutive rows tile the cyclic positions 0..m*u, so every column
        // is hit exactly v times whenever m*u = n*v
        for n in 1..=9 {
            for u in 0..=n {
                for m in 0..=9 {
                    if (m * u) % n == 0 {
                        let e = make_e(u, m * u / n, m, n).unwrap();
                        assert!((0..m).all(|r| e.row_weight(r) == u));
                    }
                }
            }
        }
    }

    #[test]
    fn three_servers_two_colluding() {
        let p = SchemeParams::new(3, 3, 2, 3).unwrap();
        let m1 = make_locator(1, &p).unwrap();
        let m2 = make_locator(2, &p).unwrap();
        assert_eq!(m1.bits(), &BinaryMatrix::from_rows(&[[1, 0, 1], [0, 1, 1]]));
        assert_eq!(m2.bits(), &BinaryMatrix::from_rows(&[[1, 1, 0]]));
        assert_eq!(m1.ones(1), vec![1, 2]);
    }

    #[test]
    fn four_servers_two_colluding() {
        let p = SchemeParams::new(3, 4, 2, 5).unwrap();
        assert_eq!(make_locator(1, &p).unwrap().bits(), &BinaryMatrix::from_rows(&[[1, 1, 0, 0]]));
        assert_eq!(make_locator(2, &p).unwrap().bits(), &BinaryMatrix::from_rows(&[[0, 0, 1, 1]]));
    }

    #[test]
    fn flipped_bit_is_named() {
        let p = SchemeParams::new(3, 3, 2, 3).unwrap();
        let mut bits = make_locator(1, &p).unwrap().bits().clone();
        bits.set(0, 0, false);
        let v = LocatorMatrix::from_bits(1, bits).violations(&p);
        assert!(v.iter().any(|s| s.contains("row 1 has weight 1")), "{v:?}");
        assert!(v.iter().any(|s| s.contains("column 1 has weight 0, expected alpha_1 = 1")), "{v:?}");
    }

    #[test]
    fn size_class_bounds() {
        let p = SchemeParams::new(3, 3, 2, 3).unwrap();
        assert!(make_locator(0, &p).is_err());
        assert!(make_locator(3, &p).is_err());
    }
}
