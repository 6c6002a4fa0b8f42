//! Diagonal pivot decisions for one elimination step.
//!
//! Every rule reads the active Schur complement through [`ActiveMatrix`], so the
//! same code serves an explicitly updated matrix and the blocked engine, whose
//! columns are assembled on demand from a delayed panel.

use crate::dense::SymMatrix;
use crate::metrics::OpCounters;

/// Read access to the active Schur complement `A^(k)`.
///
/// `column(j)` returns a slice of length `order()` whose entries `k..` hold
/// column `j` of the active block; entries before `k` are unspecified.
pub trait ActiveMatrix {
    fn order(&self) -> usize;
    fn column(&mut self, j: usize) -> &[f64];
    fn diag(&mut self, j: usize) -> f64;
}

/// Active view over a matrix whose trailing block already is the Schur complement.
pub struct Explicit<'a>(pub &'a SymMatrix);

impl ActiveMatrix for Explicit<'_> {
    fn order(&self) -> usize {
        self.0.n()
    }

    fn column(&mut self, j: usize) -> &[f64] {
        self.0.row(j)
    }

    fn diag(&mut self, j: usize) -> f64 {
        self.0.get(j, j)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotKind {
    Skip,
    OneByOne,
    OneByOneSwap,
    TwoByTwo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotDecision {
    /// Column is already eliminated (`lambda = 0`); taken as a 1x1 pivot with
    /// zero multipliers.
    Skip,
    OneByOne,
    /// Swap `k` and `r`, then take a 1x1 pivot.
    OneByOneSwap { r: usize },
    /// 2x2 pivot on rows `p` and `r`, moved to `k` and `k + 1`. `p == k` except
    /// for rook search.
    TwoByTwo { p: usize, r: usize },
}

impl PivotDecision {
    pub fn kind(&self) -> PivotKind {
        match self {
            PivotDecision::Skip => PivotKind::Skip,
            PivotDecision::OneByOne => PivotKind::OneByOne,
            PivotDecision::OneByOneSwap { .. } => PivotKind::OneByOneSwap,
            PivotDecision::TwoByTwo { .. } => PivotKind::TwoByTwo,
        }
    }

    pub fn r(&self) -> Option<usize> {
        match *self {
            PivotDecision::OneByOneSwap { r } | PivotDecision::TwoByTwo { r, .. } => Some(r),
            _ => None,
        }
    }

    /// Block size of the pivot: 0 for `Skip`, otherwise 1 or 2.
    pub fn s(&self) -> usize {
        match self {
            PivotDecision::Skip => 0,
            PivotDecision::OneByOne | PivotDecision::OneByOneSwap { .. } => 1,
            PivotDecision::TwoByTwo { .. } => 2,
        }
    }

    /// Number of columns the step eliminates (a skip still consumes one).
    pub fn width(&self) -> usize {
        self.s().max(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PivotParams {
    pub alpha: f64,
}

impl PivotParams {
    /// `sqrt(2)/2`, the threshold for the simplified rule.
    pub const SBKP_ALPHA: f64 = std::f64::consts::FRAC_1_SQRT_2;

    pub fn bunch_kaufman_alpha() -> f64 {
        (1.0 + 17f64.sqrt()) / 8.0
    }

    pub fn new(alpha: f64) -> Self {
        assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1), got {alpha}");
        Self { alpha }
    }

    pub fn sbkp() -> Self {
        Self::new(Self::SBKP_ALPHA)
    }

    pub fn bunch_kaufman() -> Self {
        Self::new(Self::bunch_kaufman_alpha())
    }
}

/// `(max |col[i]|, argmax)` over `i in from..n` skipping `skip`; lowest index on
/// ties. Adds the scan's comparisons to `comps`.
fn offdiag_max(col: &[f64], from: usize, skip: usize, comps: &mut u64) -> (f64, usize) {
    let mut best = 0.0;
    let mut at = usize::MAX;
    let mut seen = 0u64;
    for (i, v) in col.iter().enumerate().skip(from) {
        if i == skip {
            continue;
        }
        let a = v.abs();
        if at == usize::MAX || a > best {
            best = a;
            at = i;
        }
        seen += 1;
    }
    *comps += seen.saturating_sub(1);
    (best, at)
}

fn check_k(view: &impl ActiveMatrix, k: usize) {
    let n = view.order();
    assert!(k < n, "pivot step {k} out of range for order {n}");
}

/// Simplified Bunch-Kaufman rule, for a column that was already chosen as the
/// leading column by the randomized pivot.
pub fn sbkp_decide(a: &SymMatrix, k: usize, params: PivotParams, counters: &mut OpCounters) -> PivotDecision {
    sbkp_decide_on(&mut Explicit(a), k, params, counters)
}

pub fn sbkp_decide_on(
    view: &mut impl ActiveMatrix,
    k: usize,
    params: PivotParams,
    counters: &mut OpCounters,
) -> PivotDecision {
    check_k(view, k);
    let alpha = params.alpha;
    let col = view.column(k);
    let akk = col[k].abs();
    let (lambda, r) = offdiag_max(col, k + 1, usize::MAX, &mut counters.comps);
    counters.comps += 1;
    if r == usize::MAX || lambda == 0.0 {
        return PivotDecision::Skip;
    }
    counters.comps += 1;
    if akk >= alpha * lambda {
        return PivotDecision::OneByOne;
    }
    counters.comps += 1;
    if view.diag(r).abs() >= alpha * lambda {
        return PivotDecision::OneByOneSwap { r };
    }
    PivotDecision::TwoByTwo { p: k, r }
}

/// Bunch-Kaufman partial pivoting, with the `sigma` scan of column `r`.
pub fn bkpp_decide(a: &SymMatrix, k: usize, params: PivotParams, counters: &mut OpCounters) -> PivotDecision {
    bkpp_decide_on(&mut Explicit(a), k, params, counters)
}

pub fn bkpp_decide_on(
    view: &mut impl ActiveMatrix,
    k: usize,
    params: PivotParams,
    counters: &mut OpCounters,
) -> PivotDecision {
    check_k(view, k);
    let alpha = params.alpha;
    let col = view.column(k);
    let akk = col[k].abs();
    let (lambda, r) = offdiag_max(col, k + 1, usize::MAX, &mut counters.comps);
    counters.comps += 1;
    if r == usize::MAX || lambda == 0.0 {
        return PivotDecision::Skip;
    }
    counters.comps += 1;
    if akk >= alpha * lambda {
        return PivotDecision::OneByOne;
    }
    let colr = view.column(r);
    let arr = colr[r].abs();
    let (sigma, _) = offdiag_max(colr, k, r, &mut counters.comps);
    counters.comps += 1;
    if akk * sigma >= alpha * lambda * lambda {
        return PivotDecision::OneByOne;
    }
    counters.comps += 1;
    if arr >= alpha * sigma {
        return PivotDecision::OneByOneSwap { r };
    }
    PivotDecision::TwoByTwo { p: k, r }
}

/// Bounded Bunch-Kaufman (rook) search.
pub fn bbk_decide(a: &SymMatrix, k: usize, params: PivotParams, counters: &mut OpCounters) -> PivotDecision {
    bbk_decide_on(&mut Explicit(a), k, params, counters)
}

pub fn bbk_decide_on(
    view: &mut impl ActiveMatrix,
    k: usize,
    params: PivotParams,
    counters: &mut OpCounters,
) -> PivotDecision {
    check_k(view, k);
    let n = view.order();
    let alpha = params.alpha;
    let col = view.column(k);
    let akk = col[k].abs();
    let (mut colmax, mut imax) = offdiag_max(col, k + 1, usize::MAX, &mut counters.comps);
    counters.comps += 1;
    if imax == usize::MAX || colmax == 0.0 {
        return PivotDecision::Skip;
    }
    counters.comps += 1;
    if akk >= alpha * colmax {
        return PivotDecision::OneByOne;
    }
    let mut p = k;
    for _ in 0..n - k {
        let c = view.column(imax);
        let aii = c[imax].abs();
        let (rowmax, jmax) = offdiag_max(c, k, imax, &mut counters.comps);
        counters.comps += 1;
        if aii >= alpha * rowmax {
            return PivotDecision::OneByOneSwap { r: imax };
        }
        counters.comps += 2;
        if p == jmax || rowmax <= colmax {
            return PivotDecision::TwoByTwo { p, r: imax };
        }
        p = imax;
        colmax = rowmax;
        imax = jmax;
    }
    // The tracked maximum strictly increases, so the loop cannot run out.
    unreachable!("rook search exceeded its iteration cap")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2(a: [[f64; 2]; 2]) -> SymMatrix {
        SymMatrix::from_rows(a).unwrap()
    }

    fn decide_all(a: &SymMatrix, k: usize) -> [PivotDecision; 3] {
        let mut c = OpCounters::default();
        [
            sbkp_decide(a, k, PivotParams::sbkp(), &mut c),
            bkpp_decide(a, k, PivotParams::bunch_kaufman(), &mut c),
            bbk_decide(a, k, PivotParams::bunch_kaufman(), &mut c),
        ]
    }

    #[test]
    fn sbkp_examples() {
        let mut c = OpCounters::default();
        let p = PivotParams::sbkp();
        assert_eq!(sbkp_decide(&SymMatrix::from_diagonal(&[0.0, 1.0]), 0, p, &mut c), PivotDecision::Skip);
        assert_eq!(sbkp_decide(&m2([[2.0, 1.0], [1.0, 0.0]]), 0, p, &mut c), PivotDecision::OneByOne);
        assert_eq!(
            sbkp_decide(&m2([[0.0, 1.0], [1.0, 3.0]]), 0, p, &mut c),
            PivotDecision::OneByOneSwap { r: 1 }
        );
        assert_eq!(
            sbkp_decide(&m2([[0.0, 1.0], [1.0, 0.0]]), 0, p, &mut c),
            PivotDecision::TwoByTwo { p: 0, r: 1 }
        );
        // The last step has nothing below the diagonal.
        assert_eq!(sbkp_decide(&m2([[1.0, 2.0], [2.0, 5.0]]), 1, p, &mut c), PivotDecision::Skip);
    }

    #[test]
    fn bkpp_examples() {
        let mut c = OpCounters::default();
        let p = PivotParams::bunch_kaufman();
        let dd = SymMatrix::from_rows([[10.0, 1.0, 2.0], [1.0, 5.0, 0.0], [2.0, 0.0, 7.0]]).unwrap();
        assert_eq!(bkpp_decide(&dd, 0, p, &mut c), PivotDecision::OneByOne);
        let e = f64::EPSILON / 2.0;
        assert_eq!(
            bkpp_decide(&m2([[e, 1.0], [1.0, e]]), 0, p, &mut c),
            PivotDecision::TwoByTwo { p: 0, r: 1 }
        );
        let a = SymMatrix::from_rows([[0.5, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(bkpp_decide(&a, 0, p, &mut c), PivotDecision::TwoByTwo { p: 0, r: 1 });
        // Case (2): |a_kk| sigma >= alpha lambda^2 keeps a_kk without a swap.
        let a = SymMatrix::from_rows([[0.5, 1.0, 0.0], [1.0, 0.0, 4.0], [0.0, 4.0, 1.0]]).unwrap();
        assert_eq!(bkpp_decide(&a, 0, p, &mut c), PivotDecision::OneByOne);
        let a = SymMatrix::from_rows([[0.1, 1.0, 0.0], [1.0, 3.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(bkpp_decide(&a, 0, p, &mut c), PivotDecision::OneByOneSwap { r: 1 });
    }

    #[test]
    fn rook_examples() {
        let mut c = OpCounters::default();
        let p = PivotParams::bunch_kaufman();
        for k in 0..4 {
            assert_eq!(bbk_decide(&SymMatrix::identity(4), k, p, &mut c), PivotDecision::Skip);
        }
        let dd = SymMatrix::from_rows([[10.0, 1.0, 2.0], [1.0, 5.0, 0.0], [2.0, 0.0, 7.0]]).unwrap();
        assert_eq!(bbk_decide(&dd, 0, p, &mut c), PivotDecision::OneByOne);
        // Column 0 max at row 1, row 1 max at row 2, whose diagonal is large.
        let a = SymMatrix::from_rows([[0.0, 1.0, 0.0], [1.0, 0.0, 3.0], [0.0, 3.0, 9.0]]).unwrap();
        assert_eq!(bbk_decide(&a, 0, p, &mut c), PivotDecision::OneByOneSwap { r: 2 });
        // Same walk but a zero diagonal: 2x2 on (1, 2).
        let a = SymMatrix::from_rows([[0.0, 1.0, 0.0], [1.0, 0.0, 3.0], [0.0, 3.0, 0.0]]).unwrap();
        assert_eq!(bbk_decide(&a, 0, p, &mut c), PivotDecision::TwoByTwo { p: 1, r: 2 });
    }

    fn type2(n: usize) -> SymMatrix {
        let mut a = SymMatrix::zeros(n);
        a.set(0, n - 1, 2.0);
        a.set(1, 1, n as f64);
        for i in 1..n - 1 {
            a.set(i, i + 1, (n + 1 - i) as f64);
        }
        a
    }

    #[test]
    fn rook_walks_whole_type2() {
        let n = 7;
        let a = type2(n);
        let mut c = OpCounters::default();
        let d = bbk_decide(&a, 0, PivotParams::bunch_kaufman(), &mut c);
        // The walk climbs the superdiagonal from the corner up to row 1.
        assert_eq!(d, PivotDecision::OneByOneSwap { r: 1 });
        let mut partial = OpCounters::default();
        bkpp_decide(&a, 0, PivotParams::bunch_kaufman(), &mut partial);
        assert!(c.comps >= (n as u64 - 1) * (n as u64 - 2), "rook comps {}", c.comps);
        assert!(c.comps > 2 * partial.comps);
    }

    #[test]
    fn scale_and_padding_invariance() {
        let a = SymMatrix::from_rows([
            [0.3, -1.2, 0.7, 2.0],
            [-1.2, 0.1, 0.4, -0.5],
            [0.7, 0.4, -2.5, 1.1],
            [2.0, -0.5, 1.1, 0.2],
        ])
        .unwrap();
        let base = decide_all(&a, 0);
        for c in [0.25, -8.0, 1024.0] {
            let scaled = SymMatrix::from_lower_fn(4, |i, j| c * a.get(i, j));
            assert_eq!(decide_all(&scaled, 0), base);
        }
        let shift = |d: PivotDecision| match d {
            PivotDecision::OneByOneSwap { r } => PivotDecision::OneByOneSwap { r: r + 2 },
            PivotDecision::TwoByTwo { p, r } => PivotDecision::TwoByTwo { p: p + 2, r: r + 2 },
            d => d,
        };
        let padded = SymMatrix::from_lower_fn(6, |i, j| if j >= 2 { a.get(i - 2, j - 2) } else if i == j { 99.0 } else { 0.0 });
        assert_eq!(decide_all(&padded, 2), base.map(shift));
    }

    #[test]
    fn sbkp_two_by_two_determinant_bound() {
        let alpha = PivotParams::SBKP_ALPHA;
        let a = SymMatrix::from_rows([[0.5, 1.0, 0.2], [1.0, -0.6, 0.3], [0.2, 0.3, 1.0]]).unwrap();
        let mut c = OpCounters::default();
        let d = sbkp_decide(&a, 0, PivotParams::sbkp(), &mut c);
        let PivotDecision::TwoByTwo { r, .. } = d else {
            panic!("expected 2x2, got {d:?}");
        };
        let det = a.get(0, 0) * a.get(r, r) - a.get(r, 0).powi(2);
        assert!(det.abs() >= (1.0 - alpha * alpha) * 1.0);
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn k_out_of_range() {
        let mut c = OpCounters::default();
        sbkp_decide(&SymMatrix::identity(2), 2, PivotParams::sbkp(), &mut c);
    }
}
