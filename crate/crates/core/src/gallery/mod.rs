//! Test matrix families and right-hand sides.
//!
//! Types 1 and 2 are adversarial for the Bunch-Kaufman baselines (element
//! growth and comparison count respectively), Types 3 to 8 are the structured
//! and random families, and Type 10 is numerically rank deficient. Type 9 is
//! whatever Matrix Market file the caller points at.

mod mtx;

use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dense::SymMatrix;
use crate::sketch::RngSpec;

pub use mtx::{load_matrix_market, load_matrix_market_with_cap, parse_matrix_market, write_matrix_market, DEFAULT_CAP};

/// Stream offsets keep matrix, right-hand side and sketch draws independent
/// even when they share a seed.
const MATRIX_STREAM: u64 = 0x6d61_7472;
const RHS_STREAM: u64 = 0x0072_6873;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Type1,
    Type2,
    Type3,
    Type4,
    Type5,
    Type6,
    Type7,
    Type8,
    /// Matrix Market file.
    Type9,
    Type10,
}

impl Family {
    /// Every generated family (Type 9 needs a file).
    pub const GENERATED: [Family; 9] = [
        Family::Type1,
        Family::Type2,
        Family::Type3,
        Family::Type4,
        Family::Type5,
        Family::Type6,
        Family::Type7,
        Family::Type8,
        Family::Type10,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Type1 => "type1",
            Family::Type2 => "type2",
            Family::Type3 => "type3",
            Family::Type4 => "type4",
            Family::Type5 => "type5",
            Family::Type6 => "type6",
            Family::Type7 => "type7",
            Family::Type8 => "type8",
            Family::Type9 => "type9",
            Family::Type10 => "type10",
        }
    }

    pub fn is_random(&self) -> bool {
        !matches!(self, Family::Type1 | Family::Type2 | Family::Type4 | Family::Type5 | Family::Type9)
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GalleryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        let num = t.strip_prefix("type").unwrap_or(&t);
        Ok(match num {
            "1" => Family::Type1,
            "2" => Family::Type2,
            "3" => Family::Type3,
            "4" => Family::Type4,
            "5" => Family::Type5,
            "6" => Family::Type6,
            "7" => Family::Type7,
            "8" => Family::Type8,
            "9" | "file" => Family::Type9,
            "10" => Family::Type10,
            _ => return Err(GalleryError::UnknownFamily(s.to_string())),
        })
    }
}

/// Distribution of the `A1` block of the KKT family.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KktBlock {
    /// `(G + G^T) / sqrt(2)` with Gaussian `G`.
    #[default]
    SymGaussian,
    /// Gaussian diagonal, zero elsewhere.
    Diagonal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSpec {
    pub family: Family,
    pub n: usize,
    /// Leading block size for Types 7 and 8 (default `n - n / 2`).
    #[serde(default)]
    pub n1: Option<usize>,
    #[serde(default)]
    pub n2: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Coupling perturbation of Type 1 (default `1e-8`).
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub kkt_block: KktBlock,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

impl MatrixSpec {
    pub const DEFAULT_EPSILON: f64 = 1e-8;

    pub fn new(family: Family, n: usize) -> Self {
        Self {
            family,
            n,
            n1: None,
            n2: None,
            seed: 0,
            epsilon: None,
            kkt_block: KktBlock::default(),
            path: None,
        }
    }

    pub fn file(path: impl Into<PathBuf>) -> Self {
        Self {
            path: Some(path.into()),
            ..Self::new(Family::Type9, 0)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon = Some(eps);
        self
    }

    pub fn with_blocks(mut self, n1: usize, n2: usize) -> Self {
        self.n1 = Some(n1);
        self.n2 = Some(n2);
        self
    }

    /// `(n1, n2)` for the saddle-point families.
    pub fn block_sizes(&self) -> Result<(usize, usize), GalleryError> {
        let (n1, n2) = match (self.n1, self.n2) {
            (Some(a), Some(b)) => (a, b),
            (Some(a), None) => (a, self.n.saturating_sub(a)),
            (None, Some(b)) => (self.n.saturating_sub(b), b),
            (None, None) => (self.n - self.n / 2, self.n / 2),
        };
        if n1 + n2 != self.n || n1 == 0 {
            return Err(GalleryError::InvalidDimensions(format!(
                "block sizes n1 = {n1}, n2 = {n2} must be positive (n1) and sum to n = {}",
                self.n
            )));
        }
        Ok((n1, n2))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GalleryError {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("unknown matrix family `{0}`")]
    UnknownFamily(String),
    #[error("type9 needs a Matrix Market path")]
    MissingPath,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported Matrix Market variant: {0}")]
    Unsupported(String),
    #[error("pattern-only Matrix Market files carry no values")]
    PatternOnly,
    #[error("matrix is {rows} x {cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix order {n} exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("general matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
}

fn invalid(msg: impl Into<String>) -> GalleryError {
    GalleryError::InvalidDimensions(msg.into())
}

/// Builds the matrix described by `spec`.
pub fn generate(spec: &MatrixSpec) -> Result<SymMatrix, GalleryError> {
    let n = spec.n;
    if spec.family != Family::Type9 && n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let mut rng = RngSpec {
        seed: spec.seed,
        stream: MATRIX_STREAM,
    }
    .generator();
    let mut gauss = move || -> f64 { StandardNormal.sample(&mut rng) };
    let a = match spec.family {
        Family::Type1 => {
            if !n.is_multiple_of(2) || n < 4 {
                return Err(invalid(format!("type1 needs an even n >= 4, got {n}")));
            }
            let eps = spec.epsilon.unwrap_or(MatrixSpec::DEFAULT_EPSILON);
            if !(eps > 0.0 && eps < 1.0) {
                return Err(invalid(format!("type1 epsilon must lie in (0, 1), got {eps}")));
            }
            type1(n, eps)
        }
        Family::Type2 => {
            if n < 3 {
                return Err(invalid(format!("type2 needs n >= 3, got {n}")));
            }
            type2(n)
        }
        Family::Type3 => {
            let h: Vec<f64> = (0..2 * n - 1).map(|_| gauss()).collect();
            SymMatrix::from_lower_fn(n, |i, j| h[i + j])
        }
        Family::Type4 => {
            let c = (2.0 / (n as f64 + 1.0)).sqrt();
            let w = std::f64::consts::PI / (n as f64 + 1.0);
            SymMatrix::from_lower_fn(n, |i, j| c * (((i + 1) * (j + 1)) as f64 * w).sin())
        }
        Family::Type5 => {
            if n < 2 {
                return Err(invalid("type5 needs n >= 2"));
            }
            let w = std::f64::consts::PI / (n as f64 - 1.0);
            SymMatrix::from_lower_fn(n, |i, j| ((i * j) as f64 * w).cos())
        }
        Family::Type6 => sym_gaussian(n, &mut gauss, 1.0),
        Family::Type7 | Family::Type8 => {
            let (n1, n2) = spec.block_sizes()?;
            let mut a = SymMatrix::zeros(n);
            if spec.family == Family::Type8 {
                for i in 0..n1 {
                    a.set(i, i, 1.0);
                }
            } else {
                match spec.kkt_block {
                    KktBlock::SymGaussian => {
                        let g: Vec<f64> = (0..n1 * n1).map(|_| gauss()).collect();
                        let s = std::f64::consts::FRAC_1_SQRT_2;
                        for i in 0..n1 {
                            for j in 0..=i {
                                a.set(i, j, (g[i * n1 + j] + g[j * n1 + i]) * s);
                            }
                        }
                    }
                    KktBlock::Diagonal => {
                        for i in 0..n1 {
                            a.set(i, i, gauss());
                        }
                    }
                }
            }
            for i in 0..n1 {
                for j in 0..n2 {
                    a.set(i, n1 + j, gauss());
                }
            }
            a
        }
        Family::Type9 => {
            let path = spec.path.as_ref().ok_or(GalleryError::MissingPath)?;
            return load_matrix_market(path);
        }
        Family::Type10 => type10(n, &mut gauss),
    };
    Ok(a)
}

fn sym_gaussian(n: usize, gauss: &mut impl FnMut() -> f64, scale: f64) -> SymMatrix {
    let mut a = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            a.set(i, j, scale * gauss());
        }
    }
    a
}

/// `d_k = q^(1-k) / (1-q)` with `q = 1 + 1/alpha`.
pub fn type1_diagonal(count: usize) -> Vec<f64> {
    let alpha = crate::pivot::PivotParams::bunch_kaufman_alpha();
    let q = 1.0 + 1.0 / alpha;
    (1..=count).map(|k| q.powi(1 - k as i32) / (1.0 - q)).collect()
}

fn type1(n: usize, eps: f64) -> SymMatrix {
    let m = n / 2;
    let d = type1_diagonal(m - 2);
    let mut a = SymMatrix::zeros(n);
    for (k, &v) in d.iter().enumerate() {
        a.set(k, k, v);
    }
    for i in 0..m {
        a.set(i, m - 2, 1.0);
        a.set(i, m - 1, 1.0);
    }
    for i in 0..m {
        a.set(i, m + i, 1.0 - eps);
    }
    a
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

/// Eigenvalue-like weights `lambda_i = q^(1-i) / (1-q)`, `q = 1 + sqrt(2)`,
/// flushed to zero below `1e-300`.
pub fn type10_weights(n: usize) -> Vec<f64> {
    let q = 1.0 + std::f64::consts::SQRT_2;
    (1..=n)
        .map(|i| {
            let v = q.powf(1.0 - i as f64) / (1.0 - q);
            if v.abs() < 1e-300 {
                0.0
            } else {
                v
            }
        })
        .collect()
}

fn type10(n: usize, gauss: &mut impl FnMut() -> f64) -> SymMatrix {
    let w: Vec<f64> = (0..n * n).map(|_| gauss()).collect();
    let lam = type10_weights(n);
    let r = lam.iter().rposition(|&v| v != 0.0).map_or(0, |i| i + 1);
    // A = (W Lambda) W^T over the nonzero weights only.
    let scaled: Vec<f64> = (0..n).flat_map(|i| (0..r).map(move |t| (i, t))).map(|(i, t)| w[i * n + t] * lam[t]).collect();
    SymMatrix::from_lower_fn(n, |i, j| {
        let x = &scaled[i * r..(i + 1) * r];
        let y = &w[j * n..j * n + r];
        x.iter().zip(y).map(|(a, b)| a * b).sum()
    })
}

/// Reference solution with entries uniform in `(-1, 1)`.
pub fn random_solution(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngSpec { seed, stream: RHS_STREAM }.generator();
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}
