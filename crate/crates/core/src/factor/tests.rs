use super::*;
use crate::metrics::sym_norm_1_inf;
use crate::sketch::{draw_gaussian, RngSpec};

fn reconstruction_ratio(a: &SymMatrix, f: &Factorization) -> f64 {
    f.reconstruction_error(a) / sym_norm_1_inf(a)
}

fn random_sym(n: usize, seed: u64) -> SymMatrix {
    let g = draw_gaussian(&RngSpec::new(seed), n, n);
    SymMatrix::from_lower_fn(n, |i, j| g.get(i, j))
}

fn all_configs() -> Vec<FactorConfig> {
    let mut v = Vec::new();
    for b in [1, 3, 8, 64] {
        v.push(FactorConfig::new(Strategy::Rcp).with_b(b));
        v.push(FactorConfig::new(Strategy::Rcp).with_b(b).with_q(PivotBatch::Block));
        v.push(FactorConfig::new(Strategy::Bkpp).with_b(b));
        v.push(FactorConfig::new(Strategy::Bbk).with_b(b));
    }
    v
}

#[test]
fn identity_factors_trivially() {
    let a = SymMatrix::identity(5);
    for cfg in all_configs() {
        let f = factor(&a, &cfg).unwrap();
        assert_eq!(f.l, DenseMatrix::identity(5));
        assert_eq!(f.d.blocks, vec![DBlock::One(1.0); 5]);
        assert_eq!(f.d.two_by_two_count(), 0);
        assert!(f.perm.is_identity() || cfg.strategy == Strategy::Rcp);
        assert_eq!(f.reconstruction_error(&a), 0.0);
    }
}

#[test]
fn exchange_matrix_takes_one_two_by_two() {
    let a = SymMatrix::from_rows([[0.0, 1.0], [1.0, 0.0]]).unwrap();
    for cfg in all_configs() {
        let f = factor(&a, &cfg).unwrap();
        assert_eq!(f.d.blocks, vec![DBlock::Two { d11: 0.0, d21: 1.0, d22: 0.0 }]);
        assert_eq!(f.pattern, vec![BlockPattern::PairStart, BlockPattern::PairEnd]);
        assert_eq!(f.l, DenseMatrix::identity(2));
    }
}

#[test]
fn random_reconstruction() {
    let a = random_sym(100, 11);
    let f = factor(&a, &FactorConfig::default().with_p(5).with_b(8)).unwrap();
    assert!(reconstruction_ratio(&a, &f) <= 1e-13, "{}", reconstruction_ratio(&a, &f));
    for cfg in all_configs() {
        let f = factor(&a, &cfg).unwrap();
        let r = reconstruction_ratio(&a, &f);
        assert!(r <= 1e-12, "{cfg:?}: {r}");
        for i in 0..100 {
            assert_eq!(f.l.get(i, i), 1.0);
            for j in i + 1..100 {
                assert_eq!(f.l.get(i, j), 0.0);
            }
        }
    }
}

#[test]
fn blocked_matches_unblocked_decisions() {
    for seed in 0..5 {
        let a = random_sym(90, 100 + seed);
        let base = factor(&a, &FactorConfig::default().with_b(1).with_seed(seed)).unwrap();
        for b in [2, 7, 64] {
            let f = factor(&a, &FactorConfig::default().with_b(b).with_seed(seed)).unwrap();
            assert_eq!(f.perm, base.perm, "b = {b}");
            assert_eq!(f.pattern, base.pattern, "b = {b}");
        }
    }
}

#[test]
fn panel_columns_examples() {
    let a = SymMatrix::from_rows([[2.0, 1.0, 3.0], [1.0, 5.0, 0.0], [3.0, 0.0, 7.0]]).unwrap();
    let (l, d) = compute_panel_columns(&a, 0, 1);
    assert_eq!(l.column(0), vec![0.5, 1.5]);
    assert_eq!(d.get(0, 0), 2.0);
    let a = SymMatrix::from_rows([[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, 1.0]]).unwrap();
    let (l, _) = compute_panel_columns(&a, 0, 2);
    assert_eq!(l.row(0), &[3.0, 2.0]);
    let a = SymMatrix::from_rows([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
    let (l, _) = compute_panel_columns(&a, 0, 2);
    assert_eq!(l.row(0), &[0.0, 0.0]);
}

#[test]
fn zero_matrix_terminates_immediately() {
    let f = factor_robust(&SymMatrix::zeros(4), &FactorConfig::default()).unwrap();
    assert_eq!(f.rank, 0);
    assert!(f.terminated_early());
    assert_eq!(f.pattern, vec![BlockPattern::Null; 4]);
    assert_eq!(f.d.blocks, vec![DBlock::One(0.0); 4]);
    assert_eq!(f.l, DenseMatrix::identity(4));
}

#[test]
fn well_conditioned_needs_no_recompute() {
    let a = random_sym(60, 3);
    let f = factor_robust(&a, &FactorConfig::default()).unwrap();
    assert_eq!(f.recompute_count, 0);
    assert_eq!(f.rank, 60);
}

#[test]
fn rank_deficient_terminates_early() {
    // Rank 3 with an exact zero Schur complement after three steps.
    let w = draw_gaussian(&RngSpec::new(5), 12, 3);
    let a = SymMatrix::from_lower_fn(12, |i, j| (0..3).map(|t| w.get(i, t) as f32 as f64 * w.get(j, t) as f32 as f64).sum());
    let f = factor_robust(&a, &FactorConfig::default().with_b(1)).unwrap();
    assert!(f.rank <= 4, "rank {}", f.rank);
    assert!(f.recompute_count >= 1);
    assert!(reconstruction_ratio(&a, &f) < 1e-12);
}

#[test]
fn full_tracking_sandwich() {
    let a = random_sym(40, 8);
    let f = factor(&a, &FactorConfig::default().with_tracking(GrowthTracking::Full)).unwrap();
    let (e, c) = (f.stats.rho_elem.unwrap(), f.stats.rho_col.unwrap());
    let sq = (40f64).sqrt();
    assert!(e >= 1.0);
    assert!(e / sq <= c && c <= sq * e, "rho_elem {e}, rho_col {c}");
}

#[test]
fn forced_one_by_one_growth_oracle() {
    // Eliminating eps first leaves eps - 1/eps.
    let eps = 0.01;
    let a = SymMatrix::from_rows([[eps, 1.0], [1.0, eps]]).unwrap();
    let (l, d) = compute_panel_columns(&a, 0, 1);
    let mut s = a.clone();
    crate::dense::schur_update(&mut s, 0, 1, &l, &d);
    let snaps = [crate::metrics::GrowthSnapshot::of(&a), crate::metrics::GrowthSnapshot::of_trailing(&s, 1)];
    let (e, _) = crate::metrics::growth_from_snapshots(&snaps).unwrap();
    assert!((e - 99.99).abs() < 1e-9, "{e}");
}

#[test]
fn sketch_audit_stays_small() {
    let a = random_sym(50, 21);
    let f = factor(&a, &FactorConfig::default().with_audit(true)).unwrap();
    let d = f.stats.sketch_drift.unwrap();
    assert!(d <= 1e-12, "drift {d}");
}

#[test]
fn non_finite_and_empty_inputs() {
    let mut a = SymMatrix::identity(3);
    a.set(2, 1, f64::NAN);
    assert!(matches!(factor(&a, &FactorConfig::default()), Err(FactorError::NonFiniteInput { .. })));
    let cfg = FactorConfig::default().with_q(PivotBatch::Block).with_p(3);
    assert!(matches!(factor(&SymMatrix::identity(3), &cfg), Err(FactorError::InvalidConfig(_))));
    assert!(matches!(
        factor_robust(&SymMatrix::identity(3), &FactorConfig::default().with_robust_r(0)),
        Err(FactorError::InvalidConfig(_))
    ));
}

#[test]
fn bbk_multipliers_bounded() {
    let alpha = crate::pivot::PivotParams::bunch_kaufman_alpha();
    for seed in 0..5 {
        let a = random_sym(80, 40 + seed);
        let f = factor(&a, &FactorConfig::new(Strategy::Bbk)).unwrap();
        assert!(f.stats.max_multiplier <= 1.0 / (1.0 - alpha) + 1e-12, "{}", f.stats.max_multiplier);
    }
}

#[test]
fn diagonal_dominant_counts() {
    // All 1x1 pivots without swaps: the Schur updates cost sum m(m-1)/2.
    let n = 30;
    let a = SymMatrix::from_lower_fn(n, |i, j| if i == j { 100.0 + i as f64 } else { 1.0 / (1 + i + j) as f64 });
    let f = factor(&a, &FactorConfig::new(Strategy::Bkpp).with_b(1)).unwrap();
    let schur: u64 = (1..=n as u64).map(|m| m * (m - 1) / 2).sum();
    assert_eq!(f.stats.counters.mults, schur);
    assert_eq!(f.stats.counters.divs, (n * (n - 1) / 2) as u64);
}
