//! Gaussian elimination kernels over `F_q` with lazy reduction.
//!
//! Working entries are kept as unreduced integers. A row update adds at most
//! `(q-1)^2` to each entry, so the working matrix only needs a full reduction
//! every `(LANE_MAX - q) / (q-1)^2` pivot steps. Small moduli run on `u32`
//! lanes, everything else on `u64` lanes; the hot loop is a plain
//! multiply-add that vectorizes.

use crate::field::{Fq, PrimeField};

/// Minimum number of pivot steps between full reductions for a lane width to
/// be worth using.
const MIN_PERIOD: u64 = 32;

pub(crate) trait Lane: Copy + Default + Send + Sync + 'static {
    const MAX: u64;
    fn from_u32(v: u32) -> Self;
    fn residue(self, field: &PrimeField) -> u32;
    /// `dst[i] += f * src[i]` with no reduction.
    fn axpy(dst: &mut [Self], src: &[Self], f: Self);
    /// `dst[i] += sum_j fs[j] * srcs[j][i]`, keeping each chunk of `dst` in
    /// registers across all sources.
    fn axpy_many(dst: &mut [Self], srcs: &[&[Self]], fs: &[Self]);
}

/// Elements of `dst` held in registers by `axpy_many`.
const CHUNK: usize = 64;

macro_rules! lane {
    (
        $t:ty, $feat512:tt,
        $plain:ident, $avx2:ident, $avx512:ident,
        $many:ident, $many_avx2:ident, $many_avx512:ident
    ) => {
        #[inline(always)]
        fn $plain(dst: &mut [$t], src: &[$t], f: $t) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = d.wrapping_add(f.wrapping_mul(s));
            }
        }

        #[inline(always)]
        fn $many(dst: &mut [$t], srcs: &[&[$t]], fs: &[$t]) {
            let full = dst.len() / CHUNK * CHUNK;
            let mut acc = [0 as $t; CHUNK];
            for start in (0..full).step_by(CHUNK) {
                acc.copy_from_slice(&dst[start..start + CHUNK]);
                for (s, &f) in srcs.iter().zip(fs) {
                    let s: &[$t; CHUNK] = s[start..start + CHUNK].try_into().unwrap();
                    for i in 0..CHUNK {
                        acc[i] = acc[i].wrapping_add(f.wrapping_mul(s[i]));
                    }
                }
                dst[start..start + CHUNK].copy_from_slice(&acc);
            }
            for (s, &f) in srcs.iter().zip(fs) {
                $plain(&mut dst[full..], &s[full..], f);
            }
        }

        #[cfg(target_arch = "x86_64")]
        #[target_feature(enable = "avx2")]
        fn $many_avx2(dst: &mut [$t], srcs: &[&[$t]], fs: &[$t]) {
            $many(dst, srcs, fs)
        }

        #[cfg(target_arch = "x86_64")]
        #[target_feature(enable = $feat512)]
        fn $many_avx512(dst: &mut [$t], srcs: &[&[$t]], fs: &[$t]) {
            $many(dst, srcs, fs)
        }

        #[cfg(target_arch = "x86_64")]
        #[target_feature(enable = "avx2")]
        fn $avx2(dst: &mut [$t], src: &[$t], f: $t) {
            $plain(dst, src, f)
        }

        #[cfg(target_arch = "x86_64")]
        #[target_feature(enable = $feat512)]
        fn $avx512(dst: &mut [$t], src: &[$t], f: $t) {
            $plain(dst, src, f)
        }

        impl Lane for $t {
            const MAX: u64 = <$t>::MAX as u64;

            #[inline(always)]
            fn from_u32(v: u32) -> Self {
                v as $t
            }

            #[inline(always)]
            fn residue(self, field: &PrimeField) -> u32 {
                field.reduce(self as u64)
            }

            #[inline]
            fn axpy(dst: &mut [$t], src: &[$t], f: $t) {
                #[cfg(target_arch = "x86_64")]
                {
                    if std::arch::is_x86_feature_detected!($feat512) {
                        // SAFETY: the required target feature was detected at runtime.
                        unsafe { $avx512(dst, src, f) };
                        return;
                    }
                    if std::arch::is_x86_feature_detected!("avx2") {
                        // SAFETY: as above.
                        unsafe { $avx2(dst, src, f) };
                        return;
                    }
                }
                $plain(dst, src, f)
            }

            #[inline]
            fn axpy_many(dst: &mut [$t], srcs: &[&[$t]], fs: &[$t]) {
                #[cfg(target_arch = "x86_64")]
                {
                    if std::arch::is_x86_feature_detected!($feat512) {
                        // SAFETY: the required target feature was detected at runtime.
                        unsafe { $many_avx512(dst, srcs, fs) };
                        return;
                    }
                    if std::arch::is_x86_feature_detected!("avx2") {
                        // SAFETY: as above.
                        unsafe { $many_avx2(dst, srcs, fs) };
                        return;
                    }
                }
                $many(dst, srcs, fs)
            }
        }
    };
}

lane!(u16, "avx512bw", axpy_u16, axpy_u16_avx2, axpy_u16_avx512, many_u16, many_u16_avx2, many_u16_avx512);
lane!(u32, "avx512f", axpy_u32, axpy_u32_avx2, axpy_u32_avx512, many_u32, many_u32_avx2, many_u32_avx512);
lane!(u64, "avx512dq", axpy_u64, axpy_u64_avx2, axpy_u64_avx512, many_u64, many_u64_avx2, many_u64_avx512);

fn period_for<A: Lane>(q: u32) -> u64 {
    let step = (q as u64 - 1).pow(2).max(1);
    A::MAX.saturating_sub(q as u64) / step
}

#[derive(Debug, PartialEq, Eq)]
enum Width {
    U16,
    U32,
    U64,
}

fn lane_width(q: u32) -> Width {
    if period_for::<u16>(q) >= MIN_PERIOD {
        Width::U16
    } else if period_for::<u32>(q) >= MIN_PERIOD {
        Width::U32
    } else {
        Width::U64
    }
}

/// Pivot columns handled per pass over the matrix.
const PANEL: usize = 16;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Only rows without a pivot are updated.
    Forward,
    /// Every row is updated (Gauss-Jordan).
    Full,
    /// Gauss-Jordan on `[A | I]` where the identity columns are stored in
    /// pivot order, so that the live part of every row stays contiguous.
    Invert,
}

/// Row-major working matrix. Rows are never swapped; pivots are tracked.
struct Work<A> {
    rows: usize,
    cols: usize,
    data: Vec<A>,
    field: PrimeField,
    period: u64,
    pending: u64,
}

struct Outcome {
    /// `(row, column)` of each pivot, in column order.
    pivots: Vec<(usize, usize)>,
    /// First column found without a pivot.
    gap: Option<usize>,
}

impl<A: Lane> Work<A> {
    fn new(field: PrimeField, rows: usize, cols: usize, src: &[Fq]) -> Self {
        debug_assert_eq!(src.len(), rows * cols);
        Self {
            rows,
            cols,
            data: src.iter().map(|v| A::from_u32(v.0)).collect(),
            field,
            period: period_for::<A>(field.modulus()),
            pending: 0,
        }
    }

    /// `n x n` matrix followed by `n` zero columns for the inverse.
    fn augmented(field: PrimeField, n: usize, src: &[Fq]) -> Self {
        let mut data = vec![A::default(); n * 2 * n];
        for r in 0..n {
            for c in 0..n {
                data[r * 2 * n + c] = A::from_u32(src[r * n + c].0);
            }
        }
        Self {
            rows: n,
            cols: 2 * n,
            data,
            field,
            period: period_for::<A>(field.modulus()),
            pending: 0,
        }
    }

    #[inline]
    fn residue(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c].residue(&self.field)
    }

    fn row_mut(&mut self, r: usize) -> &mut [A] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn reduce_all(&mut self) {
        let field = self.field;
        for v in &mut self.data {
            *v = A::from_u32(v.residue(&field));
        }
        self.pending = 0;
    }

    /// Picks pivots for columns `c0..c0 + width` among `candidates`.
    ///
    /// Candidate rows are scanned in order and kept when their panel part is
    /// independent of the rows kept so far; the resulting pivot columns are
    /// the rank profile of the panel. Returned in column order.
    fn panel_pivots(&self, c0: usize, width: usize, candidates: &[usize]) -> Vec<(usize, usize)> {
        let field = self.field;
        let mut basis: Vec<(usize, Vec<Fq>)> = Vec::with_capacity(width);
        let mut pivots = Vec::with_capacity(width);
        for &r in candidates {
            if basis.len() == width {
                break;
            }
            let mut v: Vec<Fq> = (0..width).map(|j| Fq(self.residue(r, c0 + j))).collect();
            for (c, b) in &basis {
                let f = v[*c];
                if !f.is_zero() {
                    for (x, &y) in v.iter_mut().zip(b) {
                        *x = field.sub(*x, field.mul(f, y));
                    }
                }
            }
            let Some(c) = v.iter().position(|x| !x.is_zero()) else {
                continue;
            };
            let lead = field.inv(v[c]).expect("nonzero");
            for x in v.iter_mut() {
                *x = field.mul(*x, lead);
            }
            basis.push((c, v));
            pivots.push((r, c0 + c));
        }
        pivots.sort_by_key(|p| p.1);
        pivots
    }

    /// Normalized pivot rows over columns `c0..end`: Gauss-Jordan among the
    /// panel's pivot rows so that they carry an identity on the pivot
    /// columns.
    fn pivot_block(
        &self,
        found: &[(usize, usize)],
        c0: usize,
        end: usize,
        identity_at: Option<usize>,
    ) -> Vec<Vec<A>> {
        let q = self.field.modulus();
        let field = self.field;
        let period = period_for::<u64>(q);
        let mut block: Vec<Vec<u64>> = found
            .iter()
            .enumerate()
            .map(|(j, &(r, _))| {
                let mut v: Vec<u64> = (c0..end).map(|c| self.residue(r, c) as u64).collect();
                if let Some(base) = identity_at {
                    v[base + j] = 1;
                }
                v
            })
            .collect();
        let mut pending = 0;
        let mut pivot_row = vec![0u64; end - c0];
        for j in 0..found.len() {
            let pc = found[j].1 - c0;
            let lead = field.inv(Fq(field.reduce(block[j][pc]))).expect("panel pivot is nonzero");
            for (x, p) in block[j].iter_mut().zip(pivot_row.iter_mut()) {
                *p = field.mul(Fq(field.reduce(*x)), lead).0 as u64;
                *x = *p;
            }
            if pending + 1 > period {
                for row in block.iter_mut() {
                    for x in row.iter_mut() {
                        *x = field.reduce(*x) as u64;
                    }
                }
                pending = 0;
            }
            for (i, other) in block.iter_mut().enumerate() {
                if i == j {
                    continue;
                }
                let f = field.reduce(other[pc]);
                if f != 0 {
                    u64::axpy(other, &pivot_row, (q - f) as u64);
                }
            }
            pending += 1;
        }
        block
            .into_iter()
            .map(|row| row.into_iter().map(|x| A::from_u32(field.reduce(x))).collect())
            .collect()
    }

    fn eliminate(&mut self, mode: Mode, pivot_cols: usize, target: usize) -> Outcome {
        let q = self.field.modulus();
        let n_left = if mode == Mode::Invert { self.rows } else { self.cols };
        let width_cap = PANEL.min(self.period as usize).max(1);
        let mut has_pivot = vec![false; self.rows];
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut gap = None;
        let mut c0 = 0;
        while c0 < pivot_cols && pivots.len() < self.rows.min(target) {
            let width = width_cap.min(pivot_cols - c0);
            let candidates: Vec<usize> = (0..self.rows).filter(|&r| !has_pivot[r]).collect();
            let mut found = self.panel_pivots(c0, width, &candidates);
            found.truncate(target - pivots.len());
            let pivot_set: Vec<usize> = found.iter().map(|p| p.1).collect();
            if let Some(c) = (c0..c0 + width).find(|c| !pivot_set.contains(c)) {
                gap.get_or_insert(c);
                if mode == Mode::Invert {
                    return Outcome { pivots, gap };
                }
            }
            let k = found.len();
            if k == 0 {
                c0 += width;
                continue;
            }
            let end = if mode == Mode::Invert { n_left + c0 + k } else { self.cols };
            let range = c0..end;
            let len = end - c0;

            let identity_at = (mode == Mode::Invert).then_some(n_left);
            let block = self.pivot_block(&found, c0, end, identity_at);

            if self.pending + k as u64 > self.period {
                self.reduce_all();
            }
            for (j, &(r, _)) in found.iter().enumerate() {
                let row = &mut self.row_mut(r)[range.clone()];
                row.copy_from_slice(&block[j]);
                has_pivot[r] = true;
            }
            let mut srcs: Vec<&[A]> = Vec::with_capacity(k);
            let mut factors: Vec<A> = Vec::with_capacity(k);
            for (r, &pivoted) in has_pivot.iter().enumerate() {
                if pivoted && (mode == Mode::Forward || found.iter().any(|p| p.0 == r)) {
                    continue;
                }
                srcs.clear();
                factors.clear();
                for (j, &(_, c)) in found.iter().enumerate() {
                    let f = self.residue(r, c);
                    if f != 0 {
                        srcs.push(&block[j]);
                        factors.push(A::from_u32(q - f));
                    }
                }
                let row = &mut self.data[r * self.cols..(r + 1) * self.cols][range.clone()];
                debug_assert_eq!(row.len(), len);
                A::axpy_many(row, &srcs, &factors);
            }
            self.pending += k as u64;
            pivots.extend(found);
            c0 += width;

            if mode == Mode::Forward {
                let remaining = pivot_cols - c0;
                if pivots.len() + remaining < target {
                    return Outcome { pivots, gap };
                }
            }
        }
        Outcome { pivots, gap }
    }
}

macro_rules! dispatch {
    ($field:expr, $lane:ident => $body:expr) => {{
        match lane_width($field.modulus()) {
            Width::U16 => {
                type $lane = u16;
                $body
            }
            Width::U32 => {
                type $lane = u32;
                $body
            }
            Width::U64 => {
                type $lane = u64;
                $body
            }
        }
    }};
}

/// Inverse of the `n x n` row-major matrix `src`, or the first column
/// where elimination found no pivot.
pub(crate) fn invert(field: PrimeField, n: usize, src: &[Fq]) -> Result<Vec<Fq>, usize> {
    dispatch!(field, L => {
        let mut w = Work::<L>::augmented(field, n, src);
        let out = w.eliminate(Mode::Invert, n, n);
        if let Some(col) = out.gap {
            return Err(col);
        }
        // row pivoting for column c happened at row pivots[c]; the identity
        // column of original row j was stored at position n + step(j)
        let mut step = vec![0usize; n];
        for (c, &(r, _)) in out.pivots.iter().enumerate() {
            step[r] = c;
        }
        let mut inv = vec![Fq::ZERO; n * n];
        for (c, &(r, _)) in out.pivots.iter().enumerate() {
            let row = &w.data[r * 2 * n..(r + 1) * 2 * n];
            for j in 0..n {
                inv[c * n + j] = Fq(row[n + step[j]].residue(&field));
            }
        }
        Ok(inv)
    })
}

/// `L U` for a unit lower triangular `rows x rows` matrix `L` (only the
/// strictly lower part of `lower` is read) and a `rows x cols` matrix `U`
/// whose row `k` vanishes before column `k`.
pub(crate) fn unit_lower_times_upper(
    field: PrimeField,
    rows: usize,
    cols: usize,
    lower: &[Fq],
    upper: &[Fq],
) -> Vec<Fq> {
    debug_assert!(rows <= cols);
    // output rows are produced in tiles so that each batch of `U` rows is
    // read once per tile rather than once per output row
    const TILE: usize = 32;
    dispatch!(field, L => {
        let up: Vec<L> = upper.iter().map(|v| L::from_u32(v.0)).collect();
        let period = period_for::<L>(field.modulus()).max(1) as usize;
        let batch = PANEL.min(period);
        let mut out = Vec::with_capacity(rows * cols);
        let mut acc = vec![L::default(); TILE * cols];
        let mut srcs: Vec<&[L]> = Vec::with_capacity(batch);
        let mut factors: Vec<L> = Vec::with_capacity(batch);
        for i0 in (0..rows).step_by(TILE) {
            let i1 = (i0 + TILE).min(rows);
            acc.fill(L::default());
            let mut pending = 0;
            for k0 in (0..i1).step_by(batch) {
                let k1 = (k0 + batch).min(i1);
                if pending + (k1 - k0) > period {
                    for row in acc.chunks_mut(cols) {
                        for a in &mut row[k0..] {
                            *a = L::from_u32(a.residue(&field));
                        }
                    }
                    pending = 0;
                }
                for i in i0.max(k0)..i1 {
                    srcs.clear();
                    factors.clear();
                    for k in k0..k1.min(i + 1) {
                        let f = if k == i { 1 } else { lower[i * rows + k].0 };
                        if f != 0 {
                            // row k is zero on k0..k, so it can start at k0 too
                            srcs.push(&up[k * cols + k0..(k + 1) * cols]);
                            factors.push(L::from_u32(f));
                        }
                    }
                    let row = &mut acc[(i - i0) * cols..(i - i0 + 1) * cols];
                    L::axpy_many(&mut row[k0..], &srcs, &factors);
                }
                pending += k1 - k0;
            }
            for row in acc.chunks(cols).take(i1 - i0) {
                out.extend(row.iter().map(|a| Fq(a.residue(&field))));
            }
        }
        out
    })
}

/// Rank of a `rows x cols` matrix, stopping early once `target` is reached
/// or provably out of reach. The second value is the first pivot-free column.
pub(crate) fn rank_towards(
    field: PrimeField,
    rows: usize,
    cols: usize,
    src: &[Fq],
    target: usize,
) -> (usize, Option<usize>) {
    dispatch!(field, L => {
        let mut w = Work::<L>::new(field, rows, cols, src);
        let out = w.eliminate(Mode::Forward, cols, target);
        (out.pivots.len(), out.gap)
    })
}

/// Reduced row echelon form over the first `pivot_cols` columns, with the
/// pivot column indices.
pub(crate) fn rref(
    field: PrimeField,
    rows: usize,
    cols: usize,
    pivot_cols: usize,
    src: &[Fq],
) -> (Vec<Fq>, Vec<usize>) {
    dispatch!(field, L => {
        let mut w = Work::<L>::new(field, rows, cols, src);
        let out = w.eliminate(Mode::Full, pivot_cols, rows);
        let mut data = Vec::with_capacity(rows * cols);
        for &(r, _) in &out.pivots {
            data.extend(w.data[r * cols..(r + 1) * cols].iter().map(|v| Fq(v.residue(&field))));
        }
        data.resize(rows * cols, Fq::ZERO);
        (data, out.pivots.iter().map(|p| p.1).collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(field: PrimeField, len: usize, seed: u64) -> Vec<Fq> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| field.random(&mut rng)).collect()
    }

    fn naive_mul(field: PrimeField, n: usize, a: &[Fq], b: &[Fq]) -> Vec<Fq> {
        let mut out = vec![Fq::ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Fq::ZERO;
                for k in 0..n {
                    acc = field.add(acc, field.mul(a[i * n + k], b[k * n + j]));
                }
                out[i * n + j] = acc;
            }
        }
        out
    }

    fn is_identity(n: usize, m: &[Fq]) -> bool {
        (0..n).all(|i| (0..n).all(|j| m[i * n + j] == if i == j { Fq::ONE } else { Fq::ZERO }))
    }

    #[test]
    fn lane_choice_follows_modulus() {
        assert_eq!(lane_width(2), Width::U16);
        assert_eq!(lane_width(7), Width::U16);
        assert_eq!(lane_width(31), Width::U16);
        assert_eq!(lane_width(53), Width::U32);
        assert_eq!(lane_width(8191), Width::U32);
        assert_eq!(lane_width(65521), Width::U64);
        assert_eq!(lane_width(2_147_483_647), Width::U64);
    }

    #[test]
    fn inversion_round_trips_on_every_lane_width() {
        for (q, n) in [(2u64, 9usize), (3, 12), (7, 40), (31, 90), (53, 70), (65521, 17), (2_147_483_647, 11)] {
            let field = PrimeField::new(q).unwrap();
            let mut seed = 0;
            let (a, inv) = loop {
                let a = random(field, n * n, seed);
                seed += 1;
                if let Ok(inv) = invert(field, n, &a) {
                    break (a, inv);
                }
            };
            assert!(is_identity(n, &naive_mul(field, n, &a, &inv)), "q={q}");
            assert!(is_identity(n, &naive_mul(field, n, &inv, &a)), "q={q}");
        }
    }

    #[test]
    fn many_pivot_steps_trigger_periodic_reduction() {
        // q = 8191 on u32 lanes reduces every ~64 steps; n = 150 crosses that.
        let field = PrimeField::new(8191).unwrap();
        let n = 150;
        let a = random(field, n * n, 42);
        let inv = invert(field, n, &a).expect("random matrix over F_8191 is invertible");
        assert!(is_identity(n, &naive_mul(field, n, &a, &inv)));
    }

    #[test]
    fn singular_reports_missing_pivot_column() {
        let field = PrimeField::new(5).unwrap();
        // second column is twice the first
        let a: Vec<Fq> = [1u64, 2, 0, 3, 1, 0, 4, 3, 1]
            .iter()
            .map(|&v| field.elem(v))
            .collect();
        // rows: (1,2,0),(3,1,0),(4,3,1); row1 - 3*row0 = (0,-5,0) = 0 mod 5
        assert_eq!(invert(field, 3, &a), Err(1));
        let (rank, gap) = rank_towards(field, 3, 3, &a, 3);
        assert!(rank < 3);
        assert_eq!(gap, Some(1));
    }

    #[test]
    fn triangular_product_matches_naive() {
        for q in [2u64, 7, 8191, 2_147_483_647] {
            let field = PrimeField::new(q).unwrap();
            let (rows, cols) = (37, 41);
            let lower = random(field, rows * rows, 5);
            let mut upper = random(field, rows * cols, 6);
            for k in 0..rows {
                for c in 0..k {
                    upper[k * cols + c] = Fq::ZERO;
                }
            }
            let got = unit_lower_times_upper(field, rows, cols, &lower, &upper);
            for i in 0..rows {
                for c in 0..cols {
                    let mut acc = upper[i * cols + c];
                    for k in 0..i {
                        acc = field.add(acc, field.mul(lower[i * rows + k], upper[k * cols + c]));
                    }
                    assert_eq!(got[i * cols + c], acc, "q={q} ({i},{c})");
                }
            }
        }
    }

    #[test]
    fn rref_of_dependent_rows() {
        let field = PrimeField::new(3).unwrap();
        let a: Vec<Fq> = [1u64, 2, 1, 2, 1, 2].iter().map(|&v| field.elem(v)).collect();
        let (r, pivots) = rref(field, 2, 3, 3, &a);
        assert_eq!(pivots, vec![0]);
        assert_eq!(r, [1u64, 2, 1, 0, 0, 0].map(|v| field.elem(v)).to_vec());
    }
}
