use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{BenchError, BenchRecord};
use crate::factor::Strategy;
use crate::gallery::Family;

pub const CSV_HEADER: [&str; 15] = [
    "strategy",
    "family",
    "n",
    "p",
    "trial",
    "rho_cheap",
    "rho_elem",
    "err",
    "l_norm1",
    "linv_norm1",
    "comps",
    "mults",
    "wall_time_ns",
    "recompute_count",
    "error",
];

/// Shortest round-trip text; exponent form outside `[1e-5, 1e16)`.
fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn row(r: &BenchRecord) -> [String; 15] {
    [
        r.strategy.name().to_string(),
        r.family.name().to_string(),
        r.n.to_string(),
        r.p.to_string(),
        r.trial.to_string(),
        fmt_f64(r.rho_cheap),
        fmt_opt(r.rho_elem),
        fmt_f64(r.err),
        fmt_f64(r.l_norm1),
        fmt_opt(r.linv_norm1),
        r.comps.to_string(),
        r.mults.to_string(),
        r.wall_time_ns.to_string(),
        r.recompute_count.to_string(),
        r.error.clone().unwrap_or_default(),
    ]
}

pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[BenchRecord], path: impl AsRef<Path>) -> Result<(), BenchError> {
    write_csv(records, File::create(path)?)
}

pub fn parse_csv<R: Read>(input: R) -> Result<Vec<BenchRecord>, BenchError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(BenchError::Row {
            row: 0,
            msg: format!("unexpected header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let bad = |field: &str, v: &str| BenchError::Row {
            row,
            msg: format!("bad {field} `{v}`"),
        };
        let get = |k: usize| rec.get(k).unwrap_or("");
        macro_rules! num {
            ($k:expr, $t:ty) => {
                get($k).parse::<$t>().map_err(|_| bad(CSV_HEADER[$k], get($k)))?
            };
        }
        let opt = |k: usize| -> Result<Option<f64>, BenchError> {
            let v = get(k);
            if v.is_empty() {
                Ok(None)
            } else {
                v.parse().map(Some).map_err(|_| bad(CSV_HEADER[k], v))
            }
        };
        let strategy: Strategy = get(0).parse().map_err(|_| bad("strategy", get(0)))?;
        let family: Family = get(1).parse().map_err(|_| bad("family", get(1)))?;
        out.push(BenchRecord {
            strategy,
            family,
            n: num!(2, usize),
            p: num!(3, usize),
            trial: num!(4, usize),
            rho_cheap: num!(5, f64),
            rho_elem: opt(6)?,
            err: num!(7, f64),
            l_norm1: num!(8, f64),
            linv_norm1: opt(9)?,
            comps: num!(10, u64),
            mults: num!(11, u64),
            wall_time_ns: num!(12, u64),
            recompute_count: num!(13, usize),
            error: Some(get(14).to_string()).filter(|s| !s.is_empty()),
        });
    }
    Ok(out)
}
