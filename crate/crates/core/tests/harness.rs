use std::collections::HashSet;

use spectra_svi::harness::config::{ExperimentConfig, Preset};
use spectra_svi::harness::grid::{cells, channel_seed, path_seed, run_grid, GapRecord};
use spectra_svi::harness::output::{gap_csv, parse_gap_csv, svg_string, throughput_csv, write_outputs, GAP_HEADER};
use spectra_svi::harness::{path_means, HarnessError};

const SMALL: &str = r#"
[grid]
name = "small"
antennas = [[2, 2]]
sigmas = [0.5]
iterations = 20
sample_paths = 2
gap_every = 5
base_seed = 11

[am-smd]

[mel]
lambdas = [0.5]
"#;

fn small() -> ExperimentConfig {
    ExperimentConfig::parse(SMALL, None).unwrap()
}

fn config_err(text: &str) -> (Option<usize>, Option<String>, String) {
    match ExperimentConfig::parse(text, None) {
        Err(HarnessError::Config { line, key, msg }) => (line, key, msg),
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn presets_parse() {
    for p in Preset::ALL {
        let cfg = ExperimentConfig::preset(p);
        assert_eq!(cfg.grid.name, p.name());
        assert_eq!(Preset::from_name(p.name()), Some(p));
    }
    let demo = ExperimentConfig::preset(Preset::Demo);
    assert_eq!((demo.grid.iterations, demo.grid.sample_paths), (2000, 3));
    let st = ExperimentConfig::preset(Preset::Stability);
    assert_eq!(st.grid.antennas, vec![[4, 4]]);
    assert_eq!(st.grid.sigmas, vec![10.0]);
    assert!(st.grid.record_throughput);
}

#[test]
fn full_grid_preset_has_45_cells() {
    let cfg = ExperimentConfig::preset(Preset::PaperGrid);
    assert_eq!(cells(&cfg).unwrap().len(), 45);
}

#[test]
fn unknown_key_is_named_with_line() {
    let text = SMALL.replace("gap_every = 5", "gap_evry = 5");
    let (line, _, msg) = config_err(&text);
    assert!(msg.contains("gap_evry"), "{msg}");
    assert_eq!(line, Some(text.lines().position(|l| l.starts_with("gap_evry")).unwrap() + 1));

    let (_, _, msg) = config_err(&SMALL.replace("[mel]", "[mell]"));
    assert!(msg.contains("mell"), "{msg}");
}

#[test]
fn invalid_values_name_the_key() {
    let (_, key, _) = config_err(&SMALL.replace("iterations = 20", "iterations = 0"));
    assert_eq!(key.as_deref(), Some("grid.iterations"));
    let (_, key, _) = config_err(&SMALL.replace("sigmas = [0.5]", "sigmas = []"));
    assert_eq!(key.as_deref(), Some("grid.sigmas"));
    let (_, key, _) = config_err(&SMALL.replace("sample_paths = 2", "sample_paths = 0"));
    assert_eq!(key.as_deref(), Some("grid.sample_paths"));
    let (_, key, _) = config_err(&SMALL.replace("[am-smd]", "[am-smd]\nlambdas = [1.0]"));
    assert_eq!(key.as_deref(), Some("am-smd.lambdas"));
    let (_, key, _) = config_err(&SMALL.replace("[am-smd]", "[am-smd]\nschedule = \"constant\""));
    assert_eq!(key.as_deref(), Some("am-smd.eta"));
    let (_, _, msg) = config_err(&SMALL.replace("[am-smd]", "[am-smd]\nschedule = \"cosine\""));
    assert!(msg.contains("cosine"), "{msg}");
    let (_, key, _) = config_err(&SMALL.replace("topology", "x").replace("[grid]", "[grid]\ntopology = \"/nonexistent/d.txt\""));
    assert_eq!(key.as_deref(), Some("grid.topology"));
}

#[test]
fn file_topology_resolves_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let table: String = spectra_svi::mimo::CANONICAL_DISTANCES
        .iter()
        .map(|r| r.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ") + "\n")
        .collect();
    std::fs::write(dir.path().join("net.txt"), format!("# seven cells\n{table}")).unwrap();
    let path = dir.path().join("exp.toml");
    std::fs::write(&path, SMALL.replace("[grid]", "[grid]\ntopology = \"net.txt\"")).unwrap();
    let from_file = ExperimentConfig::load(&path).unwrap();
    let canonical = small();
    assert_eq!(from_file.topology(2, 2).unwrap(), canonical.topology(2, 2).unwrap());
    assert_eq!(gap_csv(&run_grid(&from_file).unwrap().records), gap_csv(&run_grid(&canonical).unwrap().records));
}

#[test]
fn seeds_are_pairwise_distinct() {
    let cfg = ExperimentConfig::preset(Preset::PaperGrid);
    let mut seen = HashSet::new();
    for cell in cells(&cfg).unwrap() {
        for path in 0..cfg.grid.sample_paths {
            assert!(seen.insert(path_seed(cfg.grid.base_seed, &cell, path)), "collision at {} path {path}", cell.label());
        }
    }
    let mut ch = HashSet::new();
    for &[m, n] in &cfg.grid.antennas {
        for path in 0..cfg.grid.sample_paths {
            assert!(ch.insert(channel_seed(cfg.grid.base_seed, m, n, path, true)));
        }
    }
    assert_eq!(channel_seed(1, 2, 2, 0, false), channel_seed(1, 2, 2, 7, false));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = gap_csv(&run_grid(&small()).unwrap().records);
    let b = gap_csv(&run_grid(&small()).unwrap().records);
    assert_eq!(a, b);

    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = pool.install(|| gap_csv(&run_grid(&small()).unwrap().records));
    assert_eq!(a, c);

    let other = gap_csv(&run_grid(&small().with_base_seed(12)).unwrap().records);
    assert_ne!(a, other);
}

#[test]
fn golden_csv_is_pinned() {
    let golden = include_str!("fixtures/golden.csv");
    let out = run_grid(&small()).unwrap();
    assert!(out.failures.is_empty());
    assert_eq!(gap_csv(&out.records), golden);
}

#[test]
fn golden_csv_round_trips() {
    let golden = include_str!("fixtures/golden.csv");
    let records = parse_gap_csv(golden).unwrap();
    assert_eq!(gap_csv(&records), golden);
    assert!(records.iter().all(|r| r.gap >= 0.0));
}

#[test]
fn csv_schema() {
    let empty = gap_csv(&[]);
    assert_eq!(empty, format!("{}\n", GAP_HEADER.join(",")));
    assert_eq!(empty, "method,m,n,sigma,lambda,path,iter,gap,elapsed_ms\n");
    assert!(parse_gap_csv(&empty).unwrap().is_empty());
    assert!(parse_gap_csv("method,m,n\nx,1,2\n").is_err());

    let out = run_grid(&small()).unwrap();
    let text = gap_csv(&out.records);
    // 4 variants*paths × checkpoints {0,5,10,15,20}
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 5);
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("am-smd,2,2,5.0000000000000000e-1,0.0000000000000000e0,0,0,"), "{first}");
    assert!(out.records.iter().all(|r| r.elapsed_ms == 0.0));
    // sorted by (method, m, n, sigma, lambda, path, iter)
    let keys: Vec<_> = out.records.iter().map(|r| (r.method.clone(), r.path, r.iter)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn timing_column_when_enabled() {
    let cfg = ExperimentConfig::parse(&SMALL.replace("base_seed = 11", "base_seed = 11\nrecord_timing = true"), None).unwrap();
    let out = run_grid(&cfg).unwrap();
    assert!(out.records.iter().any(|r| r.elapsed_ms > 0.0));
    // gaps do not depend on timing
    let plain = run_grid(&small()).unwrap();
    let gaps = |rs: &[GapRecord]| rs.iter().map(|r| r.gap.to_bits()).collect::<Vec<_>>();
    assert_eq!(gaps(&out.records), gaps(&plain.records));
}

#[test]
fn path_mean_is_arithmetic_mean() {
    let out = run_grid(&small()).unwrap();
    let means = path_means(&out.records);
    assert_eq!(means.len(), 2 * 5);
    for m in &means {
        let own: Vec<f64> = out
            .records
            .iter()
            .filter(|r| r.method == m.method && r.lambda == m.lambda && r.iter == m.iter)
            .map(|r| r.gap)
            .collect();
        assert_eq!(own.len(), 2);
        assert_eq!(m.paths, 2);
        assert!((m.mean_gap - own.iter().sum::<f64>() / 2.0).abs() <= 1e-15 * m.mean_gap.abs().max(1.0));
    }
}

fn record(method: &str, lambda: f64, iter: usize, gap: f64) -> GapRecord {
    GapRecord { method: method.into(), m: 2, n: 2, sigma: 1.0, lambda, path: 0, iter, gap, elapsed_ms: 0.0 }
}

#[test]
fn svg_series_and_markers() {
    let svg = svg_string(&[record("am-smd", 0.0, 0, 0.5)]);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<circle class=\"series\"").count(), 1);

    let recs: Vec<GapRecord> = [("am-smd", 0.0), ("m-smd", 0.0), ("mel", 0.1), ("mel", 1.0)]
        .iter()
        .flat_map(|&(m, l)| (0..3).map(move |t| record(m, l, t * 10, 1.0 / (t + 1) as f64)))
        .collect();
    let svg = svg_string(&recs);
    assert_eq!(svg.matches("class=\"series\"").count(), 4);
    assert_eq!(svg.matches("class=\"legend\"").count(), 4);
    assert!(svg.contains("mel λ=0.1"));
}

#[test]
fn svg_clamps_zero_gap() {
    let svg = svg_string(&[record("m-smd", 0.0, 0, 0.0), record("m-smd", 0.0, 10, 1.0)]);
    // the axis reaches down to the clamp floor, log10(1e-16)
    assert!(svg.contains(">-16</text>"), "{svg}");
    assert!(!svg.contains("NaN") && !svg.contains("inf"));
}

#[test]
fn outputs_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(
        &SMALL.replace("base_seed = 11", "base_seed = 11\nrecord_throughput = true").replace("sample_paths = 2", "sample_paths = 1"),
        None,
    )
    .unwrap();
    let out = run_grid(&cfg).unwrap();
    let files = write_outputs(&cfg, &out, dir.path()).unwrap();
    for p in [&files.gaps, &files.means, &files.plot, &files.echo] {
        assert!(p.exists(), "{}", p.display());
    }
    let tp = std::fs::read_to_string(files.throughput.unwrap()).unwrap();
    assert!(tp.starts_with("method,player,path,iter,R\n"));
    // 2 variants × 7 players × 21 iterations
    assert_eq!(tp.lines().count(), 1 + 2 * 7 * 21);
    assert_eq!(tp, throughput_csv(&out.throughput));
    let echo = std::fs::read_to_string(files.echo).unwrap();
    for key in ["[grid]", "base_seed = 11", "gap = ", "noise = ", "resample_channels = true", "elapsed_ms"] {
        assert!(echo.contains(key), "missing {key}");
    }
    // the echoed configuration is itself a valid config
    let body = echo.split("\n# conventions").next().unwrap();
    assert_eq!(ExperimentConfig::parse(body, None).unwrap(), cfg);
}

#[test]
fn throughput_needs_single_cell() {
    let text = SMALL.replace("sigmas = [0.5]", "sigmas = [0.5, 1.0]").replace("base_seed = 11", "base_seed = 11\nrecord_throughput = true");
    let (_, key, _) = config_err(&text);
    assert_eq!(key.as_deref(), Some("grid.record_throughput"));
}
