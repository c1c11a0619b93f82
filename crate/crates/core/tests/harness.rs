use pfci::harness::{run_benchmark, write_aggregate_csv, write_rows_csv, BenchConfig, BenchError, Method};
use pfci::metrics::{MetricsReport, Summary};
use pfci::Execution;

fn small_config() -> BenchConfig {
    BenchConfig { n: 60, ..BenchConfig::sim1(vec![8, 12], 10, 7) }
}

fn untimed(rows: &[MetricsReport]) -> Vec<MetricsReport> {
    rows.iter().map(|r| MetricsReport { ms_stage1: 0, ms_stage2: 0, runtime_s: 0.0, ..r.clone() }).collect()
}

#[test]
fn row_accounting() {
    let cfg = small_config();
    assert_eq!(cfg.methods, vec![Method::Pfci, Method::Fci]);
    let res = run_benchmark(&cfg, Execution::Sequential).unwrap();
    assert_eq!(res.rows.len(), 2 * 10 * 2);
    assert_eq!(res.aggregate.len(), 2 * 2);
    for (i, row) in res.rows.iter().enumerate() {
        assert_eq!(row.p, [8, 12][i / 20]);
        assert_eq!(row.replicate, (i / 2) % 10);
        assert_eq!(row.method, ["pfci", "fci"][i % 2]);
        assert_eq!(row.tp + row.fp + row.tn + row.fn_, row.p * (row.p - 1) / 2);
    }
    for agg in &res.aggregate {
        let shds: Vec<f64> = res.rows.iter().filter(|r| r.p == agg.p && r.method == agg.method).map(|r| r.shd as f64).collect();
        assert_eq!(shds.len(), 10);
        let s = Summary::of(&shds);
        assert_eq!((agg.shd_mean, agg.shd_sd), (s.mean, s.sd));
    }

    let mut rows_csv = Vec::new();
    write_rows_csv(&res.rows, &mut rows_csv).unwrap();
    let text = String::from_utf8(rows_csv).unwrap();
    assert_eq!(text.lines().count(), 40 + 1);
    assert!(text.lines().next().unwrap().starts_with("p,method,replicate,n,shd"));
    let mut agg_csv = Vec::new();
    write_aggregate_csv(&res.aggregate, &mut agg_csv).unwrap();
    assert_eq!(String::from_utf8(agg_csv).unwrap().lines().count(), 4 + 1);
}

#[test]
fn zero_replicates_rejected() {
    let cfg = BenchConfig { replicates: 0, ..small_config() };
    assert!(matches!(run_benchmark(&cfg, Execution::Sequential), Err(BenchError::Config(_))));
    let grouped = BenchConfig { k: None, ..BenchConfig::sim2(vec![20], 5, 2, 1, 0) };
    assert!(matches!(run_benchmark(&grouped, Execution::Sequential), Err(BenchError::Config(_))));
    let too_many_groups = BenchConfig::sim2(vec![11], 5, 3, 1, 0);
    assert!(matches!(run_benchmark(&too_many_groups, Execution::Sequential), Err(BenchError::Sim(_))));
}

#[test]
fn parallel_matches_sequential() {
    let cfg = small_config();
    let seq = run_benchmark(&cfg, Execution::Sequential).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let par = pool.install(|| run_benchmark(&cfg, Execution::Parallel)).unwrap();
    assert_eq!(untimed(&seq.rows), untimed(&par.rows));
}

#[test]
fn replicates_are_distinct_and_reproducible() {
    let cfg = BenchConfig::sim2(vec![30], 5, 2, 3, 11);
    let (g0, d0) = cfg.replicate(30, 0).unwrap();
    let (g0b, d0b) = cfg.replicate(30, 0).unwrap();
    assert_eq!(g0, g0b);
    assert_eq!(d0.values(), d0b.values());
    assert_ne!(cfg.replicate_seed(30, 0), cfg.replicate_seed(30, 1));
    assert_ne!(cfg.replicate_seed(30, 0), cfg.replicate_seed(31, 0));
    assert_eq!(d0.names()[0], "Y");
}

#[test]
fn config_round_trips_through_json() {
    let cfg = BenchConfig::sim2(vec![100, 200], 10, 5, 20, 3);
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<BenchConfig>(&text).unwrap(), cfg);
    let minimal: BenchConfig = serde_json::from_str(r#"{"study": "sim1", "p": [50], "replicates": 2, "seed": 1}"#).unwrap();
    assert_eq!(minimal, BenchConfig::sim1(vec![50], 2, 1));
}
