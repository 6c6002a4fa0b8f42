//! Dense storage and the elementary kernels shared by the factorization engines.
//!
//! Everything is row-major `f64`. [`SymMatrix`] keeps both triangles and every
//! mutating operation in this module leaves them bitwise equal.

use std::fmt;

/// Dense `n x n` symmetric matrix in full row-major storage.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

/// Error returned when building a [`SymMatrix`] from data that is not symmetric.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SymmetryError {
    #[error("matrix dimension must be at least 1")]
    Empty,
    #[error("expected {expected} entries for a square matrix, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("entries ({i}, {j}) and ({j}, {i}) differ: {a} vs {b}")]
    NotSymmetric { i: usize, j: usize, a: f64, b: f64 },
}

impl SymMatrix {
    /// All-zero matrix of order `n`.
    ///
    /// Panics if `n == 0`.
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "SymMatrix requires n >= 1");
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        let n = m.n;
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Builds the matrix by evaluating `f(i, j)` on the lower triangle (`j <= i`)
    /// and mirroring.
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Row-major data; rejected unless exactly symmetric.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self, SymmetryError> {
        if n == 0 {
            return Err(SymmetryError::Empty);
        }
        if data.len() != n * n {
            return Err(SymmetryError::Shape {
                expected: n * n,
                got: data.len(),
            });
        }
        for i in 0..n {
            for j in 0..i {
                let a = data[i * n + j];
                let b = data[j * n + i];
                if a.to_bits() != b.to_bits() && a != b {
                    return Err(SymmetryError::NotSymmetric { i, j, a, b });
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_rows<const N: usize>(rows: [[f64; N]; N]) -> Result<Self, SymmetryError> {
        Self::from_row_major(N, rows.iter().flatten().copied().collect())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.n;
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Bitwise check of the mirrored triangle.
    pub fn is_exactly_symmetric(&self) -> bool {
        let n = self.n;
        (0..n).all(|i| (0..i).all(|j| self.data[i * n + j].to_bits() == self.data[j * n + i].to_bits()))
    }

    /// Copy of the trailing principal submatrix starting at `k`.
    pub fn trailing(&self, k: usize) -> SymMatrix {
        assert!(k < self.n, "trailing block start {k} out of range");
        let m = self.n - k;
        let mut out = SymMatrix::zeros(m);
        for i in 0..m {
            out.data[i * m..(i + 1) * m].copy_from_slice(&self.row(k + i)[k..]);
        }
        out
    }

    /// `P A P^T` with `(P A P^T)[i][j] = A[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &Permutation) -> SymMatrix {
        assert_eq!(perm.len(), self.n, "permutation size mismatch");
        let map = perm.as_slice();
        let n = self.n;
        let mut out = SymMatrix::zeros(n);
        for i in 0..n {
            let src = self.row(map[i]);
            let dst = &mut out.data[i * n..(i + 1) * n];
            for j in 0..n {
                dst[j] = src[map[j]];
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "vector length mismatch");
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix {
            rows: self.n,
            cols: self.n,
            data: self.data.clone(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Mirrors the lower triangle of the trailing block `from..n` onto the upper one.
    pub(crate) fn mirror_lower(&mut self, from: usize) {
        const TILE: usize = 32;
        let n = self.n;
        let data = &mut self.data;
        let mut ib = from;
        while ib < n {
            let ie = (ib + TILE).min(n);
            let mut jb = from;
            while jb < ie {
                let je = (jb + TILE).min(n);
                for i in ib..ie {
                    for j in jb..je.min(i) {
                        data[j * n + i] = data[i * n + j];
                    }
                }
                jb = je;
            }
            ib = ie;
        }
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{})", self.n, self.n)?;
        for i in 0..self.n.min(8) {
            writeln!(f, "  {:?}", &self.row(i)[..self.n.min(8)])?;
        }
        Ok(())
    }
}

/// General rectangular row-major matrix. Zero-column matrices are allowed.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1, "DenseMatrix requires at least one row");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert!(rows >= 1, "DenseMatrix requires at least one row");
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_row_major(r, c, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn swap_columns(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// Columns `from..to` as a new matrix.
    pub fn columns(&self, from: usize, to: usize) -> DenseMatrix {
        assert!(from <= to && to <= self.cols, "column range out of bounds");
        let w = to - from;
        let mut out = DenseMatrix::zeros(self.rows, w);
        for i in 0..self.rows {
            out.row_mut(i).copy_from_slice(&self.row(i)[from..to]);
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols.max(1), self.rows, |i, j| {
            if self.cols == 0 {
                0.0
            } else {
                self.get(j, i)
            }
        })
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix({}x{})", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", &self.row(i)[..self.cols.min(8)])?;
        }
        Ok(())
    }
}

/// Permutation stored as the image map: position `i` holds original index `map[i]`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Permutation {
    map: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a permutation of 0..{n}: index {index} is repeated or out of range")]
pub struct PermutationError {
    pub n: usize,
    pub index: usize,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    pub fn from_vec(map: Vec<usize>) -> Result<Self, PermutationError> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &i in &map {
            if i >= n || seen[i] {
                return Err(PermutationError { n, index: i });
            }
            seen[i] = true;
        }
        Ok(Self { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &m)| i == m)
    }

    #[inline]
    pub fn swap(&mut self, i: usize, j: usize) {
        self.map.swap(i, j);
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &m) in self.map.iter().enumerate() {
            inv[m] = i;
        }
        Self { map: inv }
    }

    /// `(self ∘ other)[i] = self[other[i]]`.
    pub fn compose(&self, other: &Permutation) -> Self {
        assert_eq!(self.len(), other.len(), "permutation sizes differ");
        Self {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        }
    }

    /// `y[i] = x[map[i]]`, i.e. `y = P x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.map.len(), "vector length mismatch");
        self.map.iter().map(|&m| x[m]).collect()
    }

    /// `x[map[i]] = y[i]`, i.e. `x = P^T y`.
    pub fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.map.len(), "vector length mismatch");
        let mut x = vec![0.0; y.len()];
        for (i, &m) in self.map.iter().enumerate() {
            x[m] = y[i];
        }
        x
    }
}

/// 2-norm of a slice by one-pass scaled accumulation (no overflow for large entries).
pub fn scaled_norm(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut scale = 0.0_f64;
    let mut ssq = 1.0_f64;
    for v in values {
        if v != 0.0 {
            let a = v.abs();
            if scale < a {
                let r = scale / a;
                ssq = 1.0 + ssq * r * r;
                scale = a;
            } else {
                let r = a / scale;
                ssq += r * r;
            }
        }
    }
    scale * ssq.sqrt()
}

/// 2-norms of columns `from_col..cols` of `m`.
pub fn column_norms(m: &DenseMatrix, from_col: usize) -> Vec<f64> {
    let mut out = Vec::new();
    column_norms_into(m, from_col, &mut out);
    out
}

/// Same as [`column_norms`] but reusing `out`; accumulates row by row so the
/// inner loop runs over contiguous memory.
pub(crate) fn column_norms_into(m: &DenseMatrix, from_col: usize, out: &mut Vec<f64>) {
    out.clear();
    if from_col >= m.cols {
        return;
    }
    let w = m.cols - from_col;
    let mut scale = vec![0.0_f64; w];
    for i in 0..m.rows {
        for (s, v) in scale.iter_mut().zip(&m.row(i)[from_col..]) {
            *s = s.max(v.abs());
        }
    }
    out.resize(w, 0.0);
    let inv: Vec<f64> = scale.iter().map(|&s| if s > 0.0 { 1.0 / s } else { 0.0 }).collect();
    for i in 0..m.rows {
        for ((acc, v), r) in out.iter_mut().zip(&m.row(i)[from_col..]).zip(&inv) {
            let t = v * r;
            *acc += t * t;
        }
    }
    for (acc, s) in out.iter_mut().zip(&scale) {
        *acc = s * acc.sqrt();
    }
}

/// Index of the first maximum (lowest index wins ties). `None` for an empty slice.
pub(crate) fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Symmetric interchange `A <- P A P^T` for the transposition of `i` and `j`.
pub fn sym_swap(a: &mut SymMatrix, i: usize, j: usize) {
    let n = a.n;
    assert!(i < n && j < n, "sym_swap index out of range: ({i}, {j}) for n = {n}");
    if i == j {
        return;
    }
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let (head, tail) = a.data.split_at_mut(hi * n);
    head[lo * n..(lo + 1) * n].swap_with_slice(&mut tail[..n]);
    for r in 0..n {
        a.data.swap(r * n + lo, r * n + hi);
    }
}

/// Rank update of the trailing block `from..n` using only its lower triangle:
/// for every `i >= j >= from` subtract `sum_t lcols[i][t] * wt[t][j]` (terms applied
/// in ascending `t`), then mirror. Returns the number of multiplications.
///
/// `lcols(i)` yields the multiplier row segment for row `i`, `wt[t]` is a full-length
/// row holding the `t`-th pivot column.
pub(crate) fn lower_rank_update<'a>(
    a: &mut SymMatrix,
    from: usize,
    lcols: impl Fn(usize) -> &'a [f64],
    wt: &[&[f64]],
) -> u64 {
    let n = a.n;
    let mut mults = 0u64;
    if wt.is_empty() || from >= n {
        return 0;
    }
    for i in from..n {
        let l = lcols(i);
        let row = &mut a.row_mut(i)[from..=i];
        for (t, w) in wt.iter().enumerate() {
            let c = l[t];
            if c == 0.0 {
                continue;
            }
            for (x, &y) in row.iter_mut().zip(&w[from..=i]) {
                *x -= c * y;
            }
            mults += row.len() as u64;
        }
    }
    a.mirror_lower(from);
    mults
}

/// Schur complement update after eliminating the `s x s` pivot at `k..k+s`:
/// `A22 <- A22 - L21 * A21^T` on the trailing block `k+s..n`, where `A21` is read
/// from `a` and `l21 = A21 * A11^{-1}` is supplied. `a11` is accepted for interface
/// symmetry and checked for shape only.
pub fn schur_update(a: &mut SymMatrix, k: usize, s: usize, l21: &DenseMatrix, a11: &DenseMatrix) {
    let n = a.n;
    assert!(s == 1 || s == 2, "pivot block size must be 1 or 2");
    assert!(k + s <= n, "pivot block exceeds matrix");
    assert!(a11.rows() == s && a11.cols() == s, "A11 must be s x s");
    let from = k + s;
    if from == n {
        return;
    }
    assert!(
        l21.rows() == n - from && l21.cols() == s,
        "L21 must be (n-k-s) x s"
    );
    let wt: Vec<Vec<f64>> = (0..s)
        .map(|t| (0..n).map(|j| if j >= from { a.get(j, k + t) } else { 0.0 }).collect())
        .collect();
    let wt_refs: Vec<&[f64]> = wt.iter().map(Vec::as_slice).collect();
    lower_rank_update(a, from, |i| l21.row(i - from), &wt_refs);
}
