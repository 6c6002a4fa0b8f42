use rcp_ldlt::bench::{parse_csv, run_records, write_csv, BenchConfig, BenchRecord, CSV_HEADER};
use rcp_ldlt::factor::Strategy;

fn config(text: &str) -> BenchConfig {
    BenchConfig::from_toml(text).unwrap()
}

fn csv_text(records: &[BenchRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn one_cell_smoke() {
    let cfg = config("strategies = [\"rcp\"]\nsizes = [4]\noutput = \"x.csv\"\n[[families]]\nfamily = \"type6\"\n");
    let r = run_records(&cfg).unwrap();
    assert_eq!(r.len(), 1);
    assert!(r[0].err <= 1e-15, "{}", r[0].err);
    assert!(r[0].error.is_none());
}

#[test]
fn empty_list_is_header_only() {
    assert_eq!(csv_text(&[]), CSV_HEADER.join(",") + "\n");
}

#[test]
fn csv_round_trip_and_nan_token() {
    let cfg = config(
        "strategies = [\"rcp\", \"bkpp\", \"bbk\"]\nsizes = [10, 16]\np_values = [3, 5]\ntrials = 2\ntrack_growth = \"full\"\noutput = \"x.csv\"\n\
         [[families]]\nfamily = \"type3\"\n[[families]]\nfamily = \"type7\"\n",
    );
    let mut records = run_records(&cfg).unwrap();
    // 2 families x 2 sizes x 2 trials x (2 rcp + bkpp + bbk).
    assert_eq!(records.len(), 32);
    records[0].err = f64::NAN;
    records[1].error = Some("broke, \"badly\"".into());
    let text = csv_text(&records);
    assert!(text.lines().nth(1).unwrap().contains(",nan,"));
    let back = parse_csv(text.as_bytes()).unwrap();
    assert_eq!(back.len(), records.len());
    assert!(back[0].err.is_nan());
    for (a, b) in records.iter().zip(&back).skip(1) {
        assert_eq!(a, b);
    }
    assert_eq!(back[1].error.as_deref(), Some("broke, \"badly\""));
}

#[test]
fn reruns_are_identical_apart_from_timing() {
    let cfg = config(
        "strategies = [\"rcp\", \"bbk\"]\nsizes = [20]\ntrials = 3\nseed_base = 99\noutput = \"x.csv\"\n[[families]]\nfamily = \"type6\"\n",
    );
    let strip = |mut v: Vec<BenchRecord>| {
        v.iter_mut().for_each(|r| r.wall_time_ns = 0);
        csv_text(&v)
    };
    let a = strip(run_records(&cfg).unwrap());
    let mut seq = cfg.clone();
    seq.execution = rcp_ldlt::Execution::Sequential;
    assert_eq!(a, strip(run_records(&seq).unwrap()));
    let mut other = cfg.clone();
    other.seed_base = 100;
    assert_ne!(a, strip(run_records(&other).unwrap()));
}

#[test]
fn type2_comparison_slopes() {
    let cfg = config(
        "strategies = [\"bbk\", \"rcp\"]\nsizes = [64, 128, 256]\nrepeats = 1\nlinv = false\noutput = \"x.csv\"\n[[families]]\nfamily = \"type2\"\n",
    );
    let r = run_records(&cfg).unwrap();
    let slope = |s: Strategy| {
        let pts: Vec<(f64, f64)> = r.iter().filter(|x| x.strategy == s).map(|x| ((x.n as f64).ln(), (x.comps as f64).ln())).collect();
        (pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0)
    };
    assert!(slope(Strategy::Bbk) >= 2.6, "{}", slope(Strategy::Bbk));
    assert!(slope(Strategy::Rcp) <= 2.2, "{}", slope(Strategy::Rcp));
}
