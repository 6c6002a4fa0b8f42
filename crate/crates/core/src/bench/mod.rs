//! Strategy x family x size grids with growth, error and timing records.

mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::factor::{factor, FactorConfig, GrowthTracking, PivotBatch, Strategy};
use crate::gallery::{generate, random_solution, Family, KktBlock, MatrixSpec};
use crate::metrics::{backward_error, linv_norm1};
use crate::parallel::{par_map, Execution};
use crate::solve::solve;

pub use report::{emit_csv, parse_csv, write_csv, CSV_HEADER};

/// Environment variable that redirects the CSV into another directory.
pub const OUT_DIR_ENV: &str = "RCP_BENCH_OUT_DIR";

/// One matrix family of a grid; `n` comes from the size list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyTemplate {
    pub family: Family,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub kkt_block: KktBlock,
    /// Matrix Market file for `type9`.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

impl FamilyTemplate {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            epsilon: None,
            kkt_block: KktBlock::default(),
            path: None,
        }
    }

    fn spec(&self, n: usize, seed: u64) -> MatrixSpec {
        MatrixSpec {
            family: self.family,
            n,
            n1: None,
            n2: None,
            seed,
            epsilon: self.epsilon,
            kkt_block: self.kkt_block,
            path: self.path.clone(),
        }
    }
}

fn default_trials() -> usize {
    1
}

fn default_p_values() -> Vec<usize> {
    vec![5]
}

fn default_b() -> usize {
    64
}

fn default_repeats() -> usize {
    3
}

fn default_robust_r() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub strategies: Vec<Strategy>,
    pub families: Vec<FamilyTemplate>,
    pub sizes: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Sketch sizes; baselines ignore them and report `p = 0`.
    #[serde(default = "default_p_values")]
    pub p_values: Vec<usize>,
    #[serde(default)]
    pub seed_base: u64,
    pub output: PathBuf,
    #[serde(default)]
    pub track_growth: GrowthTracking,
    #[serde(default = "default_b")]
    pub b: usize,
    #[serde(default)]
    pub q: PivotBatch,
    #[serde(default = "default_robust_r")]
    pub robust_r: usize,
    /// Timed repetitions per cell; at least 3 are run.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Compute `||L^{-1}||_1` (cubic cost).
    #[serde(default = "default_true")]
    pub linv: bool,
    #[serde(default)]
    pub execution: Execution,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid bench config: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("csv error: {0}")]
    Csv(#[from] ::csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed csv row {row}: {msg}")]
    Row { row: usize, msg: String },
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let cfg: BenchConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::Config(m.to_string()));
        if self.strategies.is_empty() {
            return bad("strategies must not be empty");
        }
        if self.families.is_empty() {
            return bad("families must not be empty");
        }
        if self.sizes.is_empty() {
            return bad("sizes must not be empty");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.strategies.contains(&Strategy::Rcp) && self.p_values.is_empty() {
            return bad("p_values must not be empty when rcp is run");
        }
        if self.b == 0 {
            return bad("b must be at least 1");
        }
        Ok(())
    }

    /// Output path after applying the [`OUT_DIR_ENV`] override.
    pub fn output_path(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => {
                let name = self.output.file_name().map(PathBuf::from).unwrap_or_else(|| "bench.csv".into());
                PathBuf::from(dir).join(name)
            }
            _ => self.output.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub strategy: Strategy,
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub trial: usize,
    pub rho_cheap: f64,
    pub rho_elem: Option<f64>,
    pub err: f64,
    pub l_norm1: f64,
    pub linv_norm1: Option<f64>,
    pub comps: u64,
    pub mults: u64,
    pub wall_time_ns: u64,
    pub recompute_count: usize,
    /// Failure description; the numeric fields are NaN or zero when set.
    pub error: Option<String>,
}

impl BenchRecord {
    fn failed(cell: &Cell, msg: String) -> Self {
        Self {
            strategy: cell.strategy,
            family: cell.family.family,
            n: cell.n,
            p: cell.p,
            trial: cell.trial,
            rho_cheap: f64::NAN,
            rho_elem: None,
            err: f64::NAN,
            l_norm1: f64::NAN,
            linv_norm1: None,
            comps: 0,
            mults: 0,
            wall_time_ns: 0,
            recompute_count: 0,
            error: Some(msg),
        }
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of cell coordinates.
pub fn cell_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(base), |h, &p| mix(h ^ p))
}

fn name_hash(s: &str) -> u64 {
    // FNV-1a, stable across builds.
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

#[derive(Clone, Debug)]
struct Cell {
    strategy: Strategy,
    family: FamilyTemplate,
    n: usize,
    p: usize,
    trial: usize,
}

fn cells(cfg: &BenchConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for fam in &cfg.families {
        for &n in &cfg.sizes {
            for trial in 0..cfg.trials {
                for &strategy in &cfg.strategies {
                    let ps: Vec<usize> = if strategy == Strategy::Rcp { cfg.p_values.clone() } else { vec![0] };
                    for p in ps {
                        out.push(Cell {
                            strategy,
                            family: fam.clone(),
                            n,
                            p,
                            trial,
                        });
                    }
                }
            }
        }
    }
    out
}

fn run_cell(cfg: &BenchConfig, cell: &Cell) -> BenchRecord {
    match try_cell(cfg, cell) {
        Ok(r) => r,
        Err(msg) => BenchRecord::failed(cell, msg),
    }
}

fn try_cell(cfg: &BenchConfig, cell: &Cell) -> Result<BenchRecord, String> {
    let fam = name_hash(cell.family.family.name());
    // The matrix and reference solution depend only on (family, n, trial), so
    // every strategy and p sees the same problem.
    let mseed = cell_seed(cfg.seed_base, &[fam, cell.n as u64, cell.trial as u64]);
    let sseed = cell_seed(mseed, &[name_hash(cell.strategy.name()), cell.p as u64]);
    let a = generate(&cell.family.spec(cell.n, mseed)).map_err(|e| e.to_string())?;
    let n = a.n();
    let x_true = random_solution(n, mseed);
    let rhs = a.matvec(&x_true);
    let mut fcfg = FactorConfig::new(cell.strategy)
        .with_b(cfg.b)
        .with_q(cfg.q)
        .with_seed(sseed)
        .with_robust_r(if cell.strategy == Strategy::Rcp { cfg.robust_r } else { 0 })
        .with_tracking(cfg.track_growth);
    if cell.strategy == Strategy::Rcp {
        fcfg = fcfg.with_p(cell.p);
    }
    let mut times = Vec::new();
    let mut last = None;
    for _ in 0..cfg.repeats.max(3) {
        let t0 = Instant::now();
        let f = factor(&a, &fcfg).map_err(|e| e.to_string())?;
        let x = solve(&f, &rhs);
        times.push(t0.elapsed().as_nanos() as u64);
        last = Some((f, x));
    }
    times.sort_unstable();
    let (f, x) = last.expect("at least one repetition");
    let err = backward_error(&a, &x.x, &rhs);
    Ok(BenchRecord {
        strategy: cell.strategy,
        family: cell.family.family,
        n,
        p: cell.p,
        trial: cell.trial,
        rho_cheap: f.stats.rho_cheap,
        rho_elem: f.stats.rho_elem,
        err,
        l_norm1: f.stats.l_norm1,
        linv_norm1: cfg.linv.then(|| linv_norm1(&f.l)),
        comps: f.stats.counters.comps,
        mults: f.stats.counters.mults,
        wall_time_ns: times[times.len() / 2],
        recompute_count: f.recompute_count,
        error: None,
    })
}

/// Runs every cell of the grid; failures become records with `error` set.
pub fn run_records(cfg: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    cfg.validate()?;
    let cells = cells(cfg);
    Ok(par_map(&cells, cfg.execution, |c| run_cell(cfg, c)))
}

/// [`run_records`] and write the CSV to [`BenchConfig::output_path`].
pub fn run(cfg: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    let records = run_records(cfg)?;
    let path = cfg.output_path();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    emit_csv(&records, &path)?;
    Ok(records)
}
