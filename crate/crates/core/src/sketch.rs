//! Gaussian random projections of the active Schur complement.
//!
//! The sketch `B = Omega * A` is carried through the elimination with the
//! downdate `B2 - B1 * L21^T`, which costs `O(p n)` per step instead of the
//! `O(p n^2)` of projecting again. Fresh projections (`recompute`) are only
//! drawn by the robust driver.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::{DenseMatrix, SymMatrix};

/// Seed plus stream selector for the sketch generator.
///
/// Gaussians come from ChaCha8 (`rand_chacha`) through the ziggurat sampler of
/// `rand_distr::StandardNormal`; the lockfile pins both.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    pub(crate) fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// `rows x cols` matrix of i.i.d. standard normal entries.
pub fn draw_gaussian(rng: &RngSpec, rows: usize, cols: usize) -> DenseMatrix {
    assert!(rows >= 1 && cols >= 1, "gaussian matrix needs positive dimensions");
    let mut gen = rng.generator();
    let data: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(&mut gen)).collect();
    DenseMatrix::from_row_major(rows, cols, data)
}

/// `B = Omega * A`.
pub fn project(omega: &DenseMatrix, a: &SymMatrix) -> DenseMatrix {
    assert_eq!(omega.cols(), a.n(), "Omega has {} columns but A has order {}", omega.cols(), a.n());
    project_trailing(omega, a, 0)
}

/// `Omega * A[from.., from..]` for an `Omega` with `n - from` columns.
pub(crate) fn project_trailing(omega: &DenseMatrix, a: &SymMatrix, from: usize) -> DenseMatrix {
    let m = a.n() - from;
    assert_eq!(omega.cols(), m, "Omega width does not match the active block");
    let mut b = DenseMatrix::zeros(omega.rows(), m);
    for i in 0..omega.rows() {
        let out = b.row_mut(i);
        for (k, &w) in omega.row(i).iter().enumerate() {
            for (o, &v) in out.iter_mut().zip(&a.row(from + k)[from..]) {
                *o += w * v;
            }
        }
    }
    b
}

/// `B2 - B1 * L21^T` for `B1: p x s`, `B2: p x (m - s)`, `L21: (m - s) x s`.
pub fn update_sketch(b1: &DenseMatrix, b2: &DenseMatrix, l21: &DenseMatrix) -> DenseMatrix {
    assert_eq!(b1.rows(), b2.rows(), "sketch blocks have different row counts");
    assert_eq!(l21.cols(), b1.cols(), "L21 width must equal the pivot block size");
    assert!(l21.cols() == 1 || l21.cols() == 2, "pivot block size must be 1 or 2");
    if b2.cols() == 0 {
        return b2.clone();
    }
    assert_eq!(l21.rows(), b2.cols(), "L21 height must equal the remaining width");
    let mut out = b2.clone();
    for i in 0..out.rows() {
        let coef = b1.row(i);
        let row = out.row_mut(i);
        for (j, v) in row.iter_mut().enumerate() {
            for (t, &c) in coef.iter().enumerate() {
                *v -= c * l21.get(j, t);
            }
        }
    }
    out
}

/// Sketch of the active Schur complement carried by a factorization.
#[derive(Clone, Debug)]
pub struct SketchState {
    pub p: usize,
    /// `p x n` projection indexed by matrix position; only columns past the
    /// current elimination step are meaningful.
    pub b: DenseMatrix,
    pub rng: RngSpec,
    pub recompute_count: usize,
}

impl SketchState {
    /// Draws `Omega` and projects `a`. Returns the state and `Omega`.
    pub fn new(a: &SymMatrix, p: usize, seed: u64) -> (Self, DenseMatrix) {
        let rng = RngSpec::new(seed);
        let omega = draw_gaussian(&rng, p, a.n());
        let b = project(&omega, a);
        (
            Self {
                p,
                b,
                rng,
                recompute_count: 0,
            },
            omega,
        )
    }

    /// Eliminates the leading `s` sketch columns: `B <- B2 - B1 L21^T`, with `B`
    /// treated as covering exactly the active block.
    pub fn update(&mut self, l21: &DenseMatrix) {
        let s = l21.cols();
        let b1 = self.b.columns(0, s);
        let b2 = self.b.columns(s, self.b.cols());
        self.b = update_sketch(&b1, &b2, l21);
    }

    /// Draws a fresh `Omega` from the next stream and projects `a_active`.
    /// Returns the new `Omega` (width `a_active.n()`).
    pub fn recompute(&mut self, a_active: &SymMatrix) -> DenseMatrix {
        let omega = recompute_sketch(&mut self.rng, self.p, a_active);
        self.b = project(&omega, a_active);
        self.recompute_count += 1;
        omega
    }
}

/// Advances `rng` to its next stream and draws a `p x n` Gaussian for `a_active`.
pub fn recompute_sketch(rng: &mut RngSpec, p: usize, a_active: &SymMatrix) -> DenseMatrix {
    *rng = rng.with_stream(rng.stream + 1);
    draw_gaussian(rng, p, a_active.n())
}

/// In-place downdate for one `s`-column elimination of positions `k..k+s`:
/// `B[:, k+s..] -= B[:, k..k+s] * L[k+s.., k..k+s]^T`. Returns multiplications.
pub(crate) fn downdate_step(b: &mut DenseMatrix, l: &DenseMatrix, k: usize, s: usize) -> u64 {
    let n = b.cols();
    let from = k + s;
    if from >= n {
        return 0;
    }
    for i in 0..b.rows() {
        let row = b.row_mut(i);
        let (c0, c1) = (row[k], if s == 2 { row[k + 1] } else { 0.0 });
        for (j, v) in row[from..].iter_mut().enumerate() {
            let lr = l.row(from + j);
            *v -= c0 * lr[k];
            if s == 2 {
                *v -= c1 * lr[k + 1];
            }
        }
    }
    (b.rows() * s * (n - from)) as u64
}

/// Panel downdate after eliminating positions `from..to` as one block:
/// `B[:, to..] -= B[:, from..to] * L11^{-T} * L21^T` with `L11 = L[from..to, from..to]`.
/// Returns multiplications.
pub(crate) fn downdate_panel(b: &mut DenseMatrix, l: &DenseMatrix, from: usize, to: usize) -> u64 {
    let n = b.cols();
    let w = to - from;
    if to >= n || w == 0 {
        return 0;
    }
    let mut mults = 0u64;
    let mut x = vec![0.0; w];
    for i in 0..b.rows() {
        let row = b.row_mut(i);
        // x L11^T = B1  <=>  L11 x^T = B1^T, forward substitution.
        for c in 0..w {
            let lr = &l.row(from + c)[from..from + c];
            let mut v = row[from + c];
            for (lv, xv) in lr.iter().zip(&x[..c]) {
                v -= lv * xv;
            }
            x[c] = v;
        }
        mults += (w * (w - 1) / 2) as u64;
        for (j, v) in row[to..].iter_mut().enumerate() {
            let lr = &l.row(to + j)[from..to];
            for (lv, xv) in lr.iter().zip(&x) {
                *v -= xv * lv;
            }
        }
        mults += (w * (n - to)) as u64;
    }
    mults
}

/// Greedy Householder QR with column pivoting on `B[:, start..]`, stopped after
/// `q` steps. Returns the selected column indices of `B` in selection order;
/// ties go to the lowest index.
pub fn partial_qrcp(b: &DenseMatrix, start: usize, q: usize) -> Vec<usize> {
    let p = b.rows();
    assert!(q <= p, "partial QRCP needs q <= p (q = {q}, p = {p})");
    assert!(start <= b.cols(), "start column out of range");
    let m = b.cols() - start;
    assert!(q <= m, "partial QRCP asked for {q} pivots from {m} columns");
    // Column-major working copy of the active columns.
    let mut cols: Vec<Vec<f64>> = (0..m).map(|j| b.column(start + j)).collect();
    let mut idx: Vec<usize> = (start..b.cols()).collect();
    let mut norms = Vec::with_capacity(m);
    for step in 0..q {
        norms.clear();
        norms.extend(cols[step..].iter().map(|c| crate::dense::scaled_norm(c[step..].iter().copied())));
        let rel = best_index(&norms, &idx[step..]);
        cols.swap(step, step + rel);
        idx.swap(step, step + rel);
        let (head, tail) = cols.split_at_mut(step + 1);
        let v = householder(&mut head[step][step..]);
        if let Some((v, tau)) = v {
            for c in tail.iter_mut() {
                let seg = &mut c[step..];
                let dot: f64 = v.iter().zip(seg.iter()).map(|(a, b)| a * b).sum();
                let f = tau * dot;
                for (s, vv) in seg.iter_mut().zip(&v) {
                    *s -= f * vv;
                }
            }
        }
    }
    idx.truncate(q);
    idx
}

/// Argmax over residual norms; among exact ties the smallest original index wins.
fn best_index(norms: &[f64], original: &[usize]) -> usize {
    let mut best = 0;
    for j in 1..norms.len() {
        if norms[j] > norms[best] || (norms[j] == norms[best] && original[j] < original[best]) {
            best = j;
        }
    }
    best
}

/// Householder vector `v` (with `v[0] = 1`) and `tau` mapping `x` to `-sign(x0)||x|| e1`;
/// overwrites `x` with the reflected column. `None` when `x` is already zero.
fn householder(x: &mut [f64]) -> Option<(Vec<f64>, f64)> {
    let norm = crate::dense::scaled_norm(x.iter().copied());
    if norm == 0.0 {
        return None;
    }
    let alpha = if x[0] >= 0.0 { -norm } else { norm };
    let v0 = x[0] - alpha;
    let mut v: Vec<f64> = x.iter().map(|&xi| xi / v0).collect();
    v[0] = 1.0;
    let vtv: f64 = v.iter().map(|a| a * a).sum();
    let tau = 2.0 / vtv;
    x[0] = alpha;
    x[1..].iter_mut().for_each(|e| *e = 0.0);
    Some((v, tau))
}
