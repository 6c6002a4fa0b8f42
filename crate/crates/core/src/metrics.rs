//! Norms, growth factors, backward error and operation counters.

use crate::dense::{scaled_norm, DenseMatrix, SymMatrix};

/// Floating-point operation and comparison tallies for one factorization or solve.
///
/// `mults` and `adds` cover elimination arithmetic. The cost of forming a sketch
/// `B = Omega * A` from scratch (initially and on every recompute) is kept apart
/// in `sketch_mults`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub mults: u64,
    pub adds: u64,
    pub divs: u64,
    pub comps: u64,
    pub sketch_mults: u64,
}

impl OpCounters {
    pub fn merge(&mut self, other: &OpCounters) {
        self.mults += other.mults;
        self.adds += other.adds;
        self.divs += other.divs;
        self.comps += other.comps;
        self.sketch_mults += other.sketch_mults;
    }

    /// Multiplications plus divisions, the quantity tabulated for operation bounds.
    pub fn mults_and_divs(&self) -> u64 {
        self.mults + self.divs
    }

    #[inline]
    pub(crate) fn mul_add(&mut self, count: u64) {
        self.mults += count;
        self.adds += count;
    }
}

/// Largest magnitude and largest column 2-norm of one Schur complement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthSnapshot {
    pub max_abs: f64,
    pub max_col_norm: f64,
}

impl GrowthSnapshot {
    pub fn of(a: &SymMatrix) -> Self {
        Self::of_trailing(a, 0)
    }

    /// Snapshot of the trailing block `from..n`, which must be symmetric.
    pub(crate) fn of_trailing(a: &SymMatrix, from: usize) -> Self {
        let mut max_abs = 0.0_f64;
        let mut max_col_norm = 0.0_f64;
        for i in from..a.n() {
            let row = &a.row(i)[from..];
            for v in row {
                max_abs = max_abs.max(v.abs());
            }
            // Row i of a symmetric block is column i.
            max_col_norm = max_col_norm.max(scaled_norm(row.iter().copied()));
        }
        Self {
            max_abs,
            max_col_norm,
        }
    }
}

/// Growth and conditioning figures of a computed factorization.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GrowthStats {
    /// Element growth over every Schur complement (full tracking only).
    pub rho_elem: Option<f64>,
    /// Column-norm growth over every Schur complement (full tracking only).
    pub rho_col: Option<f64>,
    /// `||D||_{1,inf} / ||A||_{1,inf}`.
    pub rho_cheap: f64,
    pub l_norm1: f64,
    pub linv_norm1: Option<f64>,
    /// Largest multiplier magnitude in `L`.
    pub max_multiplier: f64,
    pub counters: OpCounters,
    /// Largest observed `||B - Omega~ A^(k)||_{1,2} / ||A||_{1,2}` (sketch audit only).
    pub sketch_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no growth snapshots recorded")]
    NoSnapshots,
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),
}

/// `(rho_elem, rho_col)` as ratios of the per-step maxima to the first snapshot.
pub fn growth_from_snapshots(snapshots: &[GrowthSnapshot]) -> Result<(f64, f64), MetricsError> {
    let first = snapshots.first().ok_or(MetricsError::NoSnapshots)?;
    let max_abs = snapshots.iter().map(|s| s.max_abs).fold(0.0, f64::max);
    let max_col = snapshots.iter().map(|s| s.max_col_norm).fold(0.0, f64::max);
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 1.0 };
    Ok((ratio(max_abs, first.max_abs), ratio(max_col, first.max_col_norm)))
}

/// Oversampling size required for the randomized norm-preservation guarantee:
/// the smallest integer `p >= 4 / (eps^2 - eps^3) * ln(n (n + 1) / delta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JlBudget {
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub p_required: usize,
}

impl JlBudget {
    pub fn new(n: usize, epsilon: f64, delta: f64) -> Self {
        Self {
            n,
            epsilon,
            delta,
            p_required: jl_required_p(n, epsilon, delta),
        }
    }
}

pub fn jl_required_p(n: usize, epsilon: f64, delta: f64) -> usize {
    assert!(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    let nf = n as f64;
    let bound = 4.0 / (epsilon * epsilon - epsilon.powi(3)) * (nf * (nf + 1.0) / delta).ln();
    bound.ceil().max(1.0) as usize
}

/// Probability bound that a fixed vector violates the two-sided JL condition
/// with `p` Gaussian rows: `2 exp(-(eps^2 - eps^3) p / 4)`.
pub fn jl_failure_probability(p: usize, epsilon: f64) -> f64 {
    2.0 * (-(epsilon * epsilon - epsilon.powi(3)) * p as f64 / 4.0).exp()
}

/// Probabilistic ceiling on `|l_ik|` for a column eliminated with `active` rows
/// remaining (including the pivot row).
pub fn multiplier_bound(active: usize, epsilon: f64, alpha: f64) -> f64 {
    let ratio = ((1.0 + epsilon) / (1.0 - epsilon)).sqrt();
    (1.0 + ratio * (active as f64).sqrt()) / alpha.min(1.0 - alpha * alpha)
}

/// Probabilistic ceiling on the column-norm growth factor of randomized complete
/// pivoting with `alpha = sqrt(2)/2`.
pub fn column_growth_bound(n: usize, epsilon: f64) -> f64 {
    let nf = n as f64;
    let e = (nf - 1.0).max(1.0).ln();
    let base = (2.0 * (1.0 + epsilon) / (1.0 - epsilon)).sqrt();
    base.powf(3.0 + e) * (nf + 2.0).sqrt().powf(2.0 + e)
}

/// `max |a_ij|`.
pub fn norm_1_inf(m: &DenseMatrix) -> f64 {
    m.as_slice().iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn sym_norm_1_inf(a: &SymMatrix) -> f64 {
    a.as_slice().iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Largest column 2-norm.
pub fn norm_1_2(m: &DenseMatrix) -> f64 {
    crate::dense::column_norms(m, 0).into_iter().fold(0.0, f64::max)
}

pub fn sym_norm_1_2(a: &SymMatrix) -> f64 {
    (0..a.n()).map(|i| scaled_norm(a.row(i).iter().copied())).fold(0.0, f64::max)
}

/// Largest absolute column sum.
pub fn norm_1(m: &DenseMatrix) -> f64 {
    let mut sums = vec![0.0; m.cols()];
    for i in 0..m.rows() {
        for (s, v) in sums.iter_mut().zip(m.row(i)) {
            *s += v.abs();
        }
    }
    sums.into_iter().fold(0.0, f64::max)
}

/// Largest absolute row sum.
pub fn norm_inf(m: &DenseMatrix) -> f64 {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn sym_norm_inf(a: &SymMatrix) -> f64 {
    (0..a.n())
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn vec_norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// `||L^{-1}||_1` for unit lower triangular `L`, one forward solve per unit vector.
pub fn linv_norm1(l: &DenseMatrix) -> f64 {
    let n = l.rows();
    assert_eq!(n, l.cols(), "L must be square");
    let mut best = 0.0_f64;
    let mut x = vec![0.0; n];
    for j in 0..n {
        x[j..].iter_mut().for_each(|v| *v = 0.0);
        x[j] = 1.0;
        for i in j + 1..n {
            let row = &l.row(i)[j..i];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(&x[j..i]) {
                acc += a * b;
            }
            x[i] = -acc;
        }
        best = best.max(x[j..].iter().map(|v| v.abs()).sum());
    }
    best
}

/// Relative backward error `||A x - b||_inf / (||A||_inf ||x||_inf)`.
///
/// A zero `x` gives 0 when the residual is also zero and `+inf` otherwise.
pub fn backward_error(a: &SymMatrix, x: &[f64], b: &[f64]) -> f64 {
    assert_eq!(x.len(), a.n(), "x has wrong length");
    assert_eq!(b.len(), a.n(), "b has wrong length");
    let ax = a.matvec(x);
    let resid = ax.iter().zip(b).fold(0.0_f64, |acc, (u, v)| acc.max((u - v).abs()));
    let denom = sym_norm_inf(a) * vec_norm_inf(x);
    if denom == 0.0 {
        if resid == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        resid / denom
    }
}
