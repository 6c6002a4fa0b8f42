//! Solves `A x = b` from a computed `P A P^T = L D L^T`.

use crate::dense::{DenseMatrix, SymMatrix};
use crate::factor::{DBlock, Factorization};
use crate::metrics::{backward_error, OpCounters};
use crate::parallel::{par_map, Execution};

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub x: Vec<f64>,
    /// A diagonal block of `D` was exactly singular; the matching components
    /// of the intermediate solution were set to zero.
    pub singular: bool,
    pub backward_error: Option<f64>,
    pub counters: OpCounters,
}

/// `x = P^T L^{-T} D^{-1} L^{-1} P b`.
pub fn solve(f: &Factorization, b: &[f64]) -> SolveReport {
    let n = f.n();
    assert_eq!(b.len(), n, "right-hand side has length {} but the factorization has order {n}", b.len());
    let mut counters = OpCounters::default();
    let mut y = f.perm.apply(b);

    // L z = y.
    for i in 1..n {
        let li = &f.l.row(i)[..i];
        let s: f64 = li.iter().zip(&y[..i]).map(|(l, z)| l * z).sum();
        y[i] -= s;
    }
    counters.mul_add((n * (n - 1) / 2) as u64);

    // D w = z.
    let mut singular = false;
    let mut k = 0;
    for blk in &f.d.blocks {
        match *blk {
            DBlock::One(d) => {
                if d == 0.0 {
                    singular = true;
                    y[k] = 0.0;
                } else {
                    y[k] /= d;
                    counters.divs += 1;
                }
            }
            DBlock::Two { d11, d21, d22 } => {
                let det = d11 * d22 - d21 * d21;
                if det == 0.0 {
                    singular = true;
                    y[k] = 0.0;
                    y[k + 1] = 0.0;
                } else {
                    let (z1, z2) = (y[k], y[k + 1]);
                    y[k] = (d22 * z1 - d21 * z2) / det;
                    y[k + 1] = (d11 * z2 - d21 * z1) / det;
                    counters.mults += 6;
                    counters.adds += 3;
                    counters.divs += 2;
                }
            }
        }
        k += blk.size();
    }

    // L^T v = w, sweeping rows of L from the bottom.
    for j in (1..n).rev() {
        let v = y[j];
        if v != 0.0 {
            for (yi, l) in y[..j].iter_mut().zip(&f.l.row(j)[..j]) {
                *yi -= l * v;
            }
        }
    }
    counters.mul_add((n * (n - 1) / 2) as u64);

    SolveReport {
        x: f.perm.apply_inverse(&y),
        singular,
        backward_error: None,
        counters,
    }
}

/// [`solve`] plus the backward error `||A x - b||_inf / (||A||_inf ||x||_inf)`.
pub fn solve_checked(f: &Factorization, a: &SymMatrix, b: &[f64]) -> SolveReport {
    let mut r = solve(f, b);
    r.backward_error = Some(backward_error(a, &r.x, b));
    r
}

/// Column-by-column [`solve`] of `A X = B`.
pub fn solve_many(f: &Factorization, rhs: &DenseMatrix) -> DenseMatrix {
    solve_many_with(f, rhs, Execution::default())
}

pub fn solve_many_with(f: &Factorization, rhs: &DenseMatrix, exec: Execution) -> DenseMatrix {
    let n = f.n();
    assert_eq!(rhs.rows(), n, "right-hand sides have {} rows but the factorization has order {n}", rhs.rows());
    let cols: Vec<Vec<f64>> = (0..rhs.cols()).map(|j| rhs.column(j)).collect();
    let xs = par_map(&cols, exec, |c| solve(f, c).x);
    DenseMatrix::from_fn(n, rhs.cols(), |i, j| xs[j][i])
}
