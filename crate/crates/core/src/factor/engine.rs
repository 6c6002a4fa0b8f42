//! Panel-delayed elimination shared by all strategies.
//!
//! The working matrix `a` holds the Schur complement as of the start of the
//! current panel. Inside a panel, column `j` of the active block is assembled
//! as `a[j][k..] - sum_t lt[t][k..] * wt[t][j]`, where `lt[t]` is the `t`-th
//! multiplier column of the panel and `wt[t]` the matching pivot column of the
//! Schur complement it was taken from. At panel end the trailing block gets a
//! single rank-`w` update. With `b = 1` every panel is one pivot wide and this
//! is the plain right-looking algorithm.

use crate::dense::{argmax_first, column_norms_into, lower_rank_update, DenseMatrix, Permutation, SymMatrix};
use crate::metrics::{growth_from_snapshots, norm_1, sym_norm_1_2, sym_norm_1_inf, GrowthSnapshot, GrowthStats, OpCounters};
use crate::pivot::{bbk_decide_on, bkpp_decide_on, sbkp_decide_on, ActiveMatrix, PivotDecision, PivotParams};
use crate::sketch::{downdate_panel, downdate_step, draw_gaussian, project_trailing, partial_qrcp, RngSpec};

use super::{BlockDiag, BlockPattern, DBlock, FactorConfig, FactorError, Factorization, GrowthTracking, PivotBatch, Strategy};

/// Sketch carried through an RCP factorization, indexed by matrix position.
struct Sketch {
    b: DenseMatrix,
    rng: RngSpec,
    recomputes: usize,
    /// Position-aligned `Omega` kept only when auditing.
    omega: Option<DenseMatrix>,
    /// `||B_0||_{1,2}` for the robust threshold.
    beta: f64,
    /// Current exponent `delta` of the threshold `eps^delta * beta`.
    delta: f64,
    norms: Vec<f64>,
    /// Outstanding QRCP selections (positions) for `q = b`.
    pending: Vec<usize>,
}

/// Cached active columns for the current step.
struct ColumnCache {
    cols: Vec<(usize, Vec<f64>)>,
    spare: Vec<Vec<f64>>,
}

impl ColumnCache {
    fn clear(&mut self) {
        for (_, v) in self.cols.drain(..) {
            self.spare.push(v);
        }
    }

    fn position(&self, j: usize) -> Option<usize> {
        self.cols.iter().position(|(c, _)| *c == j)
    }

    fn swap(&mut self, x: usize, y: usize) {
        for (c, v) in &mut self.cols {
            v.swap(x, y);
            if *c == x {
                *c = y;
            } else if *c == y {
                *c = x;
            }
        }
    }
}

/// Active Schur complement at step `k` seen through the pending panel.
struct View<'e> {
    a: &'e SymMatrix,
    lt: &'e [Vec<f64>],
    wt: &'e [Vec<f64>],
    k: usize,
    cache: &'e mut ColumnCache,
    mults: &'e mut u64,
}

impl ActiveMatrix for View<'_> {
    fn order(&self) -> usize {
        self.a.n()
    }

    fn column(&mut self, j: usize) -> &[f64] {
        let idx = match self.cache.position(j) {
            Some(idx) => idx,
            None => {
                let n = self.a.n();
                let k = self.k;
                let mut v = self.cache.spare.pop().unwrap_or_default();
                v.clear();
                v.resize(n, 0.0);
                v[k..].copy_from_slice(&self.a.row(j)[k..]);
                for (l, w) in self.lt.iter().zip(self.wt) {
                    let c = w[j];
                    if c != 0.0 {
                        for (x, &y) in v[k..].iter_mut().zip(&l[k..]) {
                            *x -= y * c;
                        }
                        *self.mults += (n - k) as u64;
                    }
                }
                self.cache.cols.push((j, v));
                self.cache.cols.len() - 1
            }
        };
        &self.cache.cols[idx].1
    }

    fn diag(&mut self, j: usize) -> f64 {
        if let Some(idx) = self.cache.position(j) {
            return self.cache.cols[idx].1[j];
        }
        let mut d = self.a.get(j, j);
        for (l, w) in self.lt.iter().zip(self.wt) {
            d -= l[j] * w[j];
        }
        *self.mults += self.lt.len() as u64;
        d
    }
}

struct Engine<'c> {
    n: usize,
    cfg: &'c FactorConfig,
    params: PivotParams,
    b: usize,
    a: SymMatrix,
    l: DenseMatrix,
    perm: Permutation,
    k: usize,
    ps: usize,
    lt: Vec<Vec<f64>>,
    wt: Vec<Vec<f64>>,
    cache: ColumnCache,
    counters: OpCounters,
    sketch: Option<Sketch>,
    blocks: Vec<DBlock>,
    pattern: Vec<BlockPattern>,
    snapshots: Vec<GrowthSnapshot>,
    drift: Option<f64>,
    a_norm_1_2: f64,
    max_mult: f64,
    scratch: Vec<[f64; 2]>,
}

pub(super) fn run(a: &SymMatrix, cfg: &FactorConfig) -> Result<Factorization, FactorError> {
    let n = a.n();
    let mut e = Engine {
        n,
        cfg,
        params: cfg.pivot_params(),
        b: cfg.effective_b(),
        a: a.clone(),
        l: DenseMatrix::identity(n),
        perm: Permutation::identity(n),
        k: 0,
        ps: 0,
        lt: Vec::new(),
        wt: Vec::new(),
        cache: ColumnCache {
            cols: Vec::new(),
            spare: Vec::new(),
        },
        counters: OpCounters::default(),
        sketch: None,
        blocks: Vec::new(),
        pattern: Vec::with_capacity(n),
        snapshots: Vec::new(),
        drift: None,
        a_norm_1_2: 0.0,
        max_mult: 0.0,
        scratch: vec![[0.0; 2]; n],
    };
    if cfg.track_growth == GrowthTracking::Full {
        e.snapshots.push(GrowthSnapshot::of(a));
    }
    if cfg.strategy == Strategy::Rcp {
        e.init_sketch();
    }
    e.factor()?;
    Ok(e.finish(a))
}

impl Engine<'_> {
    fn init_sketch(&mut self) {
        let p = self.cfg.effective_p();
        let rng = RngSpec::new(self.cfg.seed);
        let omega = draw_gaussian(&rng, p, self.n);
        let b = project_trailing(&omega, &self.a, 0);
        self.counters.sketch_mults += (p * self.n * self.n) as u64;
        let mut norms = Vec::new();
        column_norms_into(&b, 0, &mut norms);
        let beta = norms.iter().copied().fold(0.0, f64::max);
        if self.cfg.audit_sketch {
            self.a_norm_1_2 = sym_norm_1_2(&self.a);
            self.drift = Some(0.0);
        }
        self.sketch = Some(Sketch {
            b,
            rng,
            recomputes: 0,
            omega: self.cfg.audit_sketch.then_some(omega),
            beta,
            delta: if self.cfg.robust_r > 0 { 1.0 / self.cfg.robust_r as f64 } else { 0.0 },
            norms,
            pending: Vec::new(),
        });
    }

    fn factor(&mut self) -> Result<(), FactorError> {
        // Set when a 2x2 pivot did not fit the panel: the column pivot for step k
        // has been applied already and must not be redrawn.
        let mut retry = false;
        while self.k < self.n {
            let k = self.k;
            if self.sketch.is_some() && !retry {
                let panel_start = self.lt.is_empty();
                match self.select_column(panel_start) {
                    Some(j) => self.swap(k, j),
                    None if self.k < self.n && !self.lt.is_empty() => {
                        // Batch exhausted mid-panel.
                        self.flush();
                        continue;
                    }
                    None => break,
                }
            }
            retry = false;
            let decision = self.decide();
            let width = decision.width();
            if !self.lt.is_empty() && self.lt.len() + width > self.b {
                // Keep 2x2 blocks inside one panel.
                self.flush();
                retry = self.cfg.q == PivotBatch::One;
                continue;
            }
            self.apply(decision)?;
            if self.k >= self.n || self.lt.len() >= self.b {
                self.flush();
            }
        }
        self.flush();
        Ok(())
    }

    /// Chooses the next leading column from the sketch. `None` means the robust
    /// test declared the remaining block numerically zero (or, for `q = b`,
    /// that the panel's batch is used up).
    fn select_column(&mut self, panel_start: bool) -> Option<usize> {
        let k = self.k;
        let sk = self.sketch.as_mut().expect("sketch present");
        match self.cfg.q {
            PivotBatch::One => {
                let (j, t) = max_norm(&sk.b, k, &mut sk.norms, &mut self.counters);
                if self.cfg.robust_r == 0 || accept(t, sk) {
                    return Some(k + j);
                }
                let (j, t) = self.recompute();
                let sk = self.sketch.as_mut().expect("sketch present");
                let ok = accept(t, sk);
                sk.delta += 1.0 / self.cfg.robust_r as f64;
                if ok {
                    Some(k + j)
                } else {
                    self.terminate();
                    None
                }
            }
            PivotBatch::Block => {
                if panel_start {
                    let q = self.b.min(self.n - k).min(sk.b.rows());
                    sk.norms.clear();
                    let mut sel = partial_qrcp(&sk.b, k, q);
                    let m = (self.n - k) as u64;
                    self.counters.comps += m.saturating_sub(1) * q as u64;
                    self.counters.mults += sk.b.rows() as u64 * m * q as u64 * 2;
                    if self.cfg.robust_r > 0 {
                        let (_, t) = max_norm(&sk.b, k, &mut sk.norms, &mut self.counters);
                        if !accept(t, sk) {
                            let (_, t) = self.recompute();
                            let sk = self.sketch.as_mut().expect("sketch present");
                            let ok = accept(t, sk);
                            sk.delta += 1.0 / self.cfg.robust_r as f64;
                            if !ok {
                                self.terminate();
                                return None;
                            }
                            sel = partial_qrcp(&sk.b, k, q);
                        }
                    }
                    let sk = self.sketch.as_mut().expect("sketch present");
                    sel.reverse();
                    sk.pending = sel;
                }
                let sk = self.sketch.as_mut().expect("sketch present");
                while let Some(pos) = sk.pending.pop() {
                    if pos >= k {
                        return Some(pos);
                    }
                }
                None
            }
        }
    }

    /// Fresh sketch of the explicit Schur complement at `k`; returns the new
    /// argmax (relative to `k`) and its norm.
    fn recompute(&mut self) -> (usize, f64) {
        self.flush();
        let k = self.k;
        let m = self.n - k;
        let sk = self.sketch.as_mut().expect("sketch present");
        let p = sk.b.rows();
        sk.rng = sk.rng.with_stream(sk.rng.stream + 1);
        let omega = draw_gaussian(&sk.rng, p, m);
        let fresh = project_trailing(&omega, &self.a, k);
        for i in 0..p {
            sk.b.row_mut(i)[k..].copy_from_slice(fresh.row(i));
            if let Some(om) = sk.omega.as_mut() {
                om.row_mut(i)[k..].copy_from_slice(omega.row(i));
            }
        }
        sk.recomputes += 1;
        self.counters.sketch_mults += (p * m * m) as u64;
        max_norm(&sk.b, k, &mut sk.norms, &mut self.counters)
    }

    /// Declares the remaining block zero.
    fn terminate(&mut self) {
        self.flush();
        while self.k < self.n {
            self.blocks.push(DBlock::One(0.0));
            self.pattern.push(BlockPattern::Null);
            self.k += 1;
        }
    }

    fn view(&mut self) -> View<'_> {
        View {
            a: &self.a,
            lt: &self.lt,
            wt: &self.wt,
            k: self.k,
            cache: &mut self.cache,
            mults: &mut self.counters.mults,
        }
    }

    fn decide(&mut self) -> PivotDecision {
        let k = self.k;
        let params = self.params;
        let strategy = self.cfg.strategy;
        let mut comps = OpCounters::default();
        let d = {
            let mut v = self.view();
            match strategy {
                Strategy::Rcp => sbkp_decide_on(&mut v, k, params, &mut comps),
                Strategy::Bkpp => bkpp_decide_on(&mut v, k, params, &mut comps),
                Strategy::Bbk => bbk_decide_on(&mut v, k, params, &mut comps),
            }
        };
        self.counters.comps += comps.comps;
        d
    }

    /// Symmetric interchange of positions `x, y >= k` on everything that is
    /// indexed by position.
    fn swap(&mut self, x: usize, y: usize) {
        if x == y {
            return;
        }
        let k = self.k;
        swap_trailing(&mut self.a, k, x, y);
        let n = self.n;
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        {
            let data = self.l.data_mut();
            let (head, tail) = data.split_at_mut(hi * n);
            head[lo * n..lo * n + k].swap_with_slice(&mut tail[..k]);
        }
        for v in self.lt.iter_mut().chain(self.wt.iter_mut()) {
            v.swap(x, y);
        }
        self.cache.swap(x, y);
        self.perm.swap(x, y);
        if let Some(sk) = self.sketch.as_mut() {
            sk.b.swap_columns(x, y);
            if let Some(om) = sk.omega.as_mut() {
                om.swap_columns(x, y);
            }
            for p in &mut sk.pending {
                if *p == x {
                    *p = y;
                } else if *p == y {
                    *p = x;
                }
            }
        }
    }

    fn apply(&mut self, decision: PivotDecision) -> Result<(), FactorError> {
        let k = self.k;
        let n = self.n;
        match decision {
            PivotDecision::OneByOneSwap { r } => self.swap(k, r),
            PivotDecision::TwoByTwo { p, r } => {
                self.swap(k, p);
                let r = if r == k { p } else { r };
                self.swap(k + 1, r);
            }
            _ => {}
        }
        let s = decision.width();
        // Pivot columns of the active block, after the swaps.
        let c0 = self.take_column(k);
        let c1 = if s == 2 { Some(self.take_column(k + 1)) } else { None };
        let block = if decision == PivotDecision::Skip {
            for row in &mut self.scratch[k + 1..] {
                row[0] = 0.0;
            }
            DBlock::One(c0[k])
        } else {
            multipliers(&c0, c1.as_deref(), k, &mut self.scratch, &mut self.counters)
        };
        let finite = match block {
            DBlock::One(d) => d.is_finite(),
            DBlock::Two { d11, d21, d22 } => d11.is_finite() && d21.is_finite() && d22.is_finite(),
        };
        if !finite {
            return Err(FactorError::NonFinite { step: k });
        }
        // Record multipliers in L and the panel.
        for t in 0..s {
            let mut lcol = self.cache.spare.pop().unwrap_or_default();
            lcol.clear();
            lcol.resize(n, 0.0);
            let mut wcol = self.cache.spare.pop().unwrap_or_default();
            wcol.clear();
            wcol.resize(n, 0.0);
            let src = if t == 0 { &c0 } else { c1.as_ref().expect("second pivot column") };
            for i in k + s..n {
                let v = self.scratch[i][t];
                if !v.is_finite() {
                    return Err(FactorError::NonFinite { step: k });
                }
                self.max_mult = self.max_mult.max(v.abs());
                lcol[i] = v;
                self.l.set(i, k + t, v);
                wcol[i] = src[i];
            }
            self.lt.push(lcol);
            self.wt.push(wcol);
        }
        match block {
            DBlock::One(_) => self.pattern.push(BlockPattern::Single),
            DBlock::Two { .. } => {
                self.pattern.push(BlockPattern::PairStart);
                self.pattern.push(BlockPattern::PairEnd);
            }
        }
        self.blocks.push(block);
        self.cache.spare.push(c0);
        if let Some(c1) = c1 {
            self.cache.spare.push(c1);
        }
        self.cache.clear();
        self.k += s;
        if self.cfg.q == PivotBatch::One && decision != PivotDecision::Skip {
            if let Some(sk) = self.sketch.as_mut() {
                self.counters.mults += downdate_step(&mut sk.b, &self.l, k, s);
            }
        }
        Ok(())
    }

    /// Removes column `j` of the active block from the cache (computing it if needed).
    fn take_column(&mut self, j: usize) -> Vec<f64> {
        let k = self.k;
        let _ = {
            let mut v = self.view();
            v.column(j)[k]
        };
        let idx = self.cache.position(j).expect("column just cached");
        self.cache.cols.swap_remove(idx).1
    }

    /// Applies the pending panel to the trailing block and starts a new panel.
    fn flush(&mut self) {
        let w = self.lt.len();
        if w > 0 {
            let k = self.k;
            let ps = self.ps;
            if k < self.n {
                let wt: Vec<&[f64]> = self.wt.iter().map(Vec::as_slice).collect();
                let l = &self.l;
                let mults = lower_rank_update(&mut self.a, k, |i| &l.row(i)[ps..ps + w], &wt);
                self.counters.mul_add(mults);
            }
            if self.cfg.q == PivotBatch::Block {
                if let Some(sk) = self.sketch.as_mut() {
                    self.counters.mults += downdate_panel(&mut sk.b, &self.l, ps, k);
                }
            }
            for v in self.lt.drain(..).chain(self.wt.drain(..)) {
                self.cache.spare.push(v);
            }
            if self.cfg.track_growth == GrowthTracking::Full && k < self.n {
                self.snapshots.push(GrowthSnapshot::of_trailing(&self.a, k));
            }
            if let Some(sk) = self.sketch.as_ref() {
                if let (Some(om), Some(drift)) = (sk.omega.as_ref(), self.drift.as_mut()) {
                    if k < self.n {
                        *drift = drift.max(audit(&sk.b, om, &self.a, k) / self.a_norm_1_2.max(f64::MIN_POSITIVE));
                    }
                }
            }
        }
        self.ps = self.k;
        if let Some(sk) = self.sketch.as_mut() {
            sk.pending.clear();
        }
        self.cache.clear();
    }

    fn finish(self, a: &SymMatrix) -> Factorization {
        let d = BlockDiag { blocks: self.blocks };
        let a_norm = sym_norm_1_inf(a);
        let d_norm = d.norm_1_inf();
        let rho_cheap = if a_norm > 0.0 { d_norm / a_norm } else { 1.0 };
        let (rho_elem, rho_col) = match growth_from_snapshots(&self.snapshots) {
            Ok((e, c)) => (Some(e), Some(c)),
            Err(_) => (None, None),
        };
        let rank = self.pattern.iter().take_while(|p| **p != BlockPattern::Null).count();
        let recomputes = self.sketch.as_ref().map_or(0, |s| s.recomputes);
        let stats = GrowthStats {
            rho_elem,
            rho_col,
            rho_cheap,
            l_norm1: norm_1(&self.l),
            linv_norm1: None,
            max_multiplier: self.max_mult,
            counters: self.counters,
            sketch_drift: self.drift,
        };
        Factorization {
            perm: self.perm,
            l: self.l,
            d,
            pattern: self.pattern,
            stats,
            rank,
            recompute_count: recomputes,
        }
    }
}

fn accept(t: f64, sk: &Sketch) -> bool {
    t > 0.0 && t >= f64::EPSILON.powf(sk.delta) * sk.beta
}

/// Largest sketch column norm over positions `k..`: (offset, norm).
fn max_norm(b: &DenseMatrix, k: usize, norms: &mut Vec<f64>, counters: &mut OpCounters) -> (usize, f64) {
    column_norms_into(b, k, norms);
    let m = norms.len() as u64;
    counters.mults += b.rows() as u64 * m;
    counters.comps += m.saturating_sub(1);
    let j = argmax_first(norms).unwrap_or(0);
    (j, norms.get(j).copied().unwrap_or(0.0))
}

/// `||B[:, k..] - Omega[:, k..] * A[k.., k..]||_{1,2}`.
fn audit(b: &DenseMatrix, omega: &DenseMatrix, a: &SymMatrix, k: usize) -> f64 {
    let om = omega.columns(k, omega.cols());
    let direct = project_trailing(&om, a, k);
    let mut worst = 0.0_f64;
    for j in 0..direct.cols() {
        let d = crate::dense::scaled_norm((0..b.rows()).map(|i| b.get(i, k + j) - direct.get(i, j)));
        worst = worst.max(d);
    }
    worst
}

/// Symmetric swap restricted to rows and columns `from..n`; the eliminated part
/// of the working matrix is dead and left alone.
fn swap_trailing(a: &mut SymMatrix, from: usize, x: usize, y: usize) {
    let n = a.n();
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    {
        let data = a.data_mut();
        let (head, tail) = data.split_at_mut(hi * n);
        head[lo * n + from..(lo + 1) * n].swap_with_slice(&mut tail[from..n]);
    }
    for r in from..n {
        let row = a.row_mut(r);
        row.swap(lo, hi);
    }
}

/// Multipliers for the pivot columns `c0` (and `c1` for a 2x2 block) at step `k`,
/// written to `out[i][t]` for rows `i >= k + s`. Returns the diagonal block.
pub(super) fn multipliers(
    c0: &[f64],
    c1: Option<&[f64]>,
    k: usize,
    out: &mut [[f64; 2]],
    counters: &mut OpCounters,
) -> DBlock {
    let n = c0.len();
    match c1 {
        None => {
            let d = c0[k];
            for i in k + 1..n {
                out[i][0] = c0[i] / d;
            }
            counters.divs += (n - k - 1) as u64;
            DBlock::One(d)
        }
        Some(c1) => {
            let (d11, d21, d22) = (c0[k], c0[k + 1], c1[k + 1]);
            let det = d11 * d22 - d21 * d21;
            assert!(det != 0.0, "singular 2x2 pivot at step {k}");
            for i in k + 2..n {
                let (x, y) = (c0[i], c1[i]);
                out[i][0] = (x * d22 - d21 * y) / det;
                out[i][1] = (d11 * y - d21 * x) / det;
            }
            let rows = (n - k - 2) as u64;
            counters.mults += 2 + 4 * rows;
            counters.adds += 1 + 2 * rows;
            counters.divs += 2 * rows;
            DBlock::Two { d11, d21, d22 }
        }
    }
}
