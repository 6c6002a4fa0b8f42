//! Block `LDL^T` factorization `P A P^T = L D L^T` with 1x1 and 2x2 pivots.
//!
//! All strategies share one engine ([`engine`]) that delays Schur complement
//! updates over panels of `b` columns. Randomized complete pivoting picks each
//! leading column from a Gaussian sketch of the active block, then the
//! simplified Bunch-Kaufman rule settles the block structure. The two
//! deterministic baselines skip the sketch.

mod engine;

use serde::{Deserialize, Serialize};

use crate::dense::{DenseMatrix, Permutation, SymMatrix};
use crate::metrics::{norm_1_inf, GrowthStats};
use crate::pivot::PivotParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Randomized complete pivoting.
    Rcp,
    /// Bunch-Kaufman partial pivoting.
    Bkpp,
    /// Bounded Bunch-Kaufman (rook pivoting).
    Bbk,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Rcp, Strategy::Bkpp, Strategy::Bbk];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Rcp => "rcp",
            Strategy::Bkpp => "bkpp",
            Strategy::Bbk => "bbk",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rcp" => Ok(Strategy::Rcp),
            "bkpp" | "bk" => Ok(Strategy::Bkpp),
            "bbk" | "rook" => Ok(Strategy::Bbk),
            other => Err(format!("unknown strategy `{other}` (expected rcp, bkpp or bbk)")),
        }
    }
}

/// How many column pivots are drawn from one sketch: one per step, or a
/// whole panel's worth from a partial QRCP.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PivotBatch {
    #[default]
    One,
    Block,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthTracking {
    /// Only `||D||_{1,inf} / ||A||_{1,inf}`.
    #[default]
    Cheap,
    /// Snapshot every Schur complement. Forces the unblocked path.
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorConfig {
    pub strategy: Strategy,
    /// Sketch rows; `None` means `q + 4`.
    pub p: Option<usize>,
    /// Panel width.
    pub b: usize,
    pub q: PivotBatch,
    pub seed: u64,
    /// Recompute budget `r` of the robust driver; 0 turns the threshold test off.
    pub robust_r: usize,
    pub track_growth: GrowthTracking,
    /// Compare the carried sketch against a direct projection after every step
    /// (records `sketch_drift`). Forces the unblocked path; RCP with `q = 1` only.
    pub audit_sketch: bool,
    /// Pivot threshold; `None` picks the strategy default.
    pub alpha: Option<f64>,
}

impl Default for FactorConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Rcp,
            p: None,
            b: 64,
            q: PivotBatch::One,
            seed: 0,
            robust_r: 1,
            track_growth: GrowthTracking::Cheap,
            audit_sketch: false,
            alpha: None,
        }
    }
}

impl FactorConfig {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            ..Self::default()
        }
    }

    pub fn with_p(mut self, p: usize) -> Self {
        self.p = Some(p);
        self
    }

    pub fn with_b(mut self, b: usize) -> Self {
        self.b = b;
        self
    }

    pub fn with_q(mut self, q: PivotBatch) -> Self {
        self.q = q;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_robust_r(mut self, r: usize) -> Self {
        self.robust_r = r;
        self
    }

    pub fn with_tracking(mut self, t: GrowthTracking) -> Self {
        self.track_growth = t;
        self
    }

    pub fn with_audit(mut self, on: bool) -> Self {
        self.audit_sketch = on;
        self
    }

    /// Pivots per sketch as a count.
    pub fn q_count(&self) -> usize {
        match self.q {
            PivotBatch::One => 1,
            PivotBatch::Block => self.b,
        }
    }

    pub fn effective_p(&self) -> usize {
        self.p.unwrap_or(self.q_count() + 4)
    }

    /// Panel width actually used: tracking and auditing need every Schur
    /// complement explicitly, so they fall back to `b = 1`.
    pub fn effective_b(&self) -> usize {
        if self.track_growth == GrowthTracking::Full || self.audit_sketch {
            1
        } else {
            self.b
        }
    }

    pub fn pivot_params(&self) -> PivotParams {
        match (self.alpha, self.strategy) {
            (Some(a), _) => PivotParams::new(a),
            (None, Strategy::Rcp) => PivotParams::sbkp(),
            (None, _) => PivotParams::bunch_kaufman(),
        }
    }

    pub fn validate(&self) -> Result<(), FactorError> {
        let bad = |m: String| Err(FactorError::InvalidConfig(m));
        if self.b == 0 {
            return bad("block size b must be at least 1".into());
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return bad(format!("alpha must lie in (0, 1), got {a}"));
            }
        }
        if self.strategy == Strategy::Rcp {
            let p = self.effective_p();
            let q = self.q_count();
            if p < q || p == 0 {
                return bad(format!("sketch rows p = {p} must be at least q = {q}"));
            }
            if self.audit_sketch && self.q != PivotBatch::One {
                return bad("sketch audit requires q = 1".into());
            }
        } else if self.audit_sketch {
            return bad("sketch audit requires the rcp strategy".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FactorError {
    #[error("cannot factor an empty matrix")]
    Empty,
    #[error("input entry ({i}, {j}) is not finite")]
    NonFiniteInput { i: usize, j: usize },
    #[error("non-finite value produced at elimination step {step}")]
    NonFinite { step: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// One diagonal block of `D`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DBlock {
    One(f64),
    /// Symmetric 2x2 block `[[d11, d21], [d21, d22]]`.
    Two { d11: f64, d21: f64, d22: f64 },
}

impl DBlock {
    pub fn size(&self) -> usize {
        match self {
            DBlock::One(_) => 1,
            DBlock::Two { .. } => 2,
        }
    }

    fn max_abs(&self) -> f64 {
        match *self {
            DBlock::One(d) => d.abs(),
            DBlock::Two { d11, d21, d22 } => d11.abs().max(d21.abs()).max(d22.abs()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BlockDiag {
    pub blocks: Vec<DBlock>,
}

impl BlockDiag {
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(DBlock::size).sum()
    }

    pub fn norm_1_inf(&self) -> f64 {
        self.blocks.iter().map(DBlock::max_abs).fold(0.0, f64::max)
    }

    pub fn two_by_two_count(&self) -> usize {
        self.blocks.iter().filter(|b| b.size() == 2).count()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut d = DenseMatrix::zeros(n.max(1), n);
        let mut k = 0;
        for b in &self.blocks {
            match *b {
                DBlock::One(v) => d.set(k, k, v),
                DBlock::Two { d11, d21, d22 } => {
                    d.set(k, k, d11);
                    d.set(k + 1, k, d21);
                    d.set(k, k + 1, d21);
                    d.set(k + 1, k + 1, d22);
                }
            }
            k += b.size();
        }
        d
    }
}

/// Role of each position in the block structure of `D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockPattern {
    Single,
    PairStart,
    PairEnd,
    /// Past an early termination; the diagonal entry is an exact zero.
    Null,
}

#[derive(Clone, Debug)]
pub struct Factorization {
    pub perm: Permutation,
    pub l: DenseMatrix,
    pub d: BlockDiag,
    pub pattern: Vec<BlockPattern>,
    pub stats: GrowthStats,
    /// Number of eliminated positions before an early termination (`n` otherwise).
    pub rank: usize,
    pub recompute_count: usize,
}

impl Factorization {
    pub fn n(&self) -> usize {
        self.pattern.len()
    }

    pub fn terminated_early(&self) -> bool {
        self.rank < self.n()
    }

    /// `L D L^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.n();
        // M = L D, then M L^T using the triangular shape of L.
        let mut m = DenseMatrix::zeros(n, n);
        let mut k = 0;
        for b in &self.d.blocks {
            for i in k..n {
                let li = self.l.row(i);
                match *b {
                    DBlock::One(d) => m.set(i, k, li[k] * d),
                    DBlock::Two { d11, d21, d22 } => {
                        m.set(i, k, li[k] * d11 + li[k + 1] * d21);
                        m.set(i, k + 1, li[k] * d21 + li[k + 1] * d22);
                    }
                }
            }
            k += b.size();
        }
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            let mi = m.row(i);
            for j in 0..=i {
                let lj = self.l.row(j);
                // L[j][t] vanishes for t > j; M[i][t] for t > i + 1.
                let hi = (j + 1).min(n);
                let v: f64 = mi[..hi].iter().zip(&lj[..hi]).map(|(a, b)| a * b).sum();
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        out
    }

    /// `||P A P^T - L D L^T||_{1,inf}`.
    pub fn reconstruction_error(&self, a: &SymMatrix) -> f64 {
        let pa = a.permuted(&self.perm).to_dense();
        let r = self.reconstruct();
        let diff = DenseMatrix::from_fn(pa.rows(), pa.cols(), |i, j| pa.get(i, j) - r.get(i, j));
        norm_1_inf(&diff)
    }
}

/// Factorizes `a` according to `cfg`.
pub fn factor(a: &SymMatrix, cfg: &FactorConfig) -> Result<Factorization, FactorError> {
    cfg.validate()?;
    if a.n() == 0 {
        return Err(FactorError::Empty);
    }
    for i in 0..a.n() {
        if let Some(j) = a.row(i).iter().position(|v| !v.is_finite()) {
            return Err(FactorError::NonFiniteInput { i, j });
        }
    }
    engine::run(a, cfg)
}

/// RCP with the recompute-and-threshold safeguard; `cfg.robust_r` must be at
/// least 1.
pub fn factor_robust(a: &SymMatrix, cfg: &FactorConfig) -> Result<Factorization, FactorError> {
    if cfg.robust_r == 0 {
        return Err(FactorError::InvalidConfig("robust factorization needs robust_r >= 1".into()));
    }
    if cfg.strategy != Strategy::Rcp {
        return Err(FactorError::InvalidConfig("robust factorization is defined for rcp only".into()));
    }
    factor(a, cfg)
}

/// Multipliers and diagonal block for an `s x s` pivot at `k` of an explicit
/// Schur complement: `L21 = A21 * A11^{-1}` (rows `k+s..n`) and `A11`. Needs at
/// least one trailing row.
pub fn compute_panel_columns(a: &SymMatrix, k: usize, s: usize) -> (DenseMatrix, DenseMatrix) {
    let n = a.n();
    assert!(s == 1 || s == 2, "pivot block size must be 1 or 2");
    assert!(k + s < n, "pivot block leaves no trailing rows");
    let c1 = if s == 2 { Some(a.row(k + 1)) } else { None };
    let mut out = vec![[0.0; 2]; n];
    let mut counters = crate::metrics::OpCounters::default();
    let block = engine::multipliers(a.row(k), c1, k, &mut out, &mut counters);
    let l21 = DenseMatrix::from_fn(n - k - s, s, |i, t| out[k + s + i][t]);
    let d = match block {
        DBlock::One(v) => DenseMatrix::from_rows(&[vec![v]]),
        DBlock::Two { d11, d21, d22 } => DenseMatrix::from_rows(&[vec![d11, d21], vec![d21, d22]]),
    };
    (l21, d)
}

#[cfg(test)]
mod tests;
