//! Seeded grid execution. Every `(cell, path)` job owns its RNG streams and
//! output buffer; results are merged and sorted after the parallel phase, so
//! output does not depend on scheduling.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Variant};
use super::HarnessError;
use crate::error::Error;
use crate::mimo::{game_to_svi, sample_channels, throughput};
use crate::problem::RngStream;
use crate::solver::{run_with_observer, SolverConfig};

/// One point of the `(method, λ) × (m, n) × σ` grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub variant: Variant,
    pub m: usize,
    pub n: usize,
    pub sigma: f64,
}

impl Cell {
    pub fn label(&self) -> String {
        let v = &self.variant;
        format!("{} lambda={} m={} n={} sigma={}", v.method.name(), v.method.lambda(), self.m, self.n, self.sigma)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub method: String,
    pub m: usize,
    pub n: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub path: usize,
    pub iter: usize,
    pub gap: f64,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThroughputRecord {
    pub method: String,
    /// One-based user index.
    pub player: usize,
    pub path: usize,
    pub iter: usize,
    #[serde(rename = "R")]
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellFailure {
    pub cell: String,
    pub path: usize,
    pub error: Error,
}

#[derive(Clone, Debug, Default)]
pub struct GridOutput {
    pub records: Vec<GapRecord>,
    pub throughput: Vec<ThroughputRecord>,
    pub failures: Vec<CellFailure>,
}

/// FNV-1a over the parts' little-endian bytes, finished with the splitmix64 mixer.
pub fn stable_hash(parts: &[u64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in parts {
        for b in p.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

fn tag(s: &str) -> u64 {
    s.bytes().fold(0u64, |acc, b| acc.rotate_left(8) ^ b as u64)
}

/// Seed of the feedback noise for one job.
pub fn path_seed(base_seed: u64, cell: &Cell, path: usize) -> u64 {
    let v = &cell.variant;
    base_seed
        ^ stable_hash(&[
            tag(v.method.name()),
            v.method.lambda().to_bits(),
            cell.m as u64,
            cell.n as u64,
            cell.sigma.to_bits(),
            path as u64,
        ])
}

/// Seed of the channel draw. Shared by every method and noise level with the
/// same antenna pair so that methods are compared on identical networks.
pub fn channel_seed(base_seed: u64, m: usize, n: usize, path: usize, resample: bool) -> u64 {
    let path = if resample { path as u64 } else { 0 };
    base_seed ^ stable_hash(&[tag("channels"), m as u64, n as u64, path])
}

/// All cells, ordered variant-major.
pub fn cells(config: &ExperimentConfig) -> Result<Vec<Cell>, HarnessError> {
    let mut out = Vec::new();
    for variant in config.variants()? {
        for &[m, n] in &config.grid.antennas {
            for &sigma in &config.grid.sigmas {
                out.push(Cell { variant, m, n, sigma });
            }
        }
    }
    Ok(out)
}

struct JobOutput {
    records: Vec<GapRecord>,
    throughput: Vec<ThroughputRecord>,
    failure: Option<CellFailure>,
}

fn run_job(config: &ExperimentConfig, cell: &Cell, path: usize) -> Result<JobOutput, HarnessError> {
    let g = &config.grid;
    let topology = config.topology(cell.m, cell.n)?;
    let mut rng = RngStream::seed_from_u64(channel_seed(g.base_seed, cell.m, cell.n, path, g.resample_channels));
    let channels = sample_channels(&topology, &mut rng);
    let fail = |error: Error| CellFailure { cell: cell.label(), path, error };

    let problem = match game_to_svi(&topology, channels.clone(), cell.sigma) {
        Ok(p) => p,
        Err(e) => return Ok(JobOutput { records: vec![], throughput: vec![], failure: Some(fail(e)) }),
    };
    let solver = SolverConfig::new(cell.variant.method, g.iterations)
        .schedule(cell.variant.schedule)
        .gap_every(g.gap_every)
        .seed(path_seed(g.base_seed, cell, path));

    let method = cell.variant.method.name().to_string();
    let users = topology.users();
    let start = Instant::now();
    let mut elapsed = BTreeMap::new();
    let mut rates = Vec::new();
    let mut rate_error = None;
    let result = run_with_observer(&problem, &solver, |t, x| {
        if g.record_timing && (t % g.gap_every == 0 || t == g.iterations) {
            elapsed.insert(t, start.elapsed().as_secs_f64() * 1e3);
        }
        if g.record_throughput && rate_error.is_none() {
            for i in 0..users {
                match throughput(&channels, x, i) {
                    Ok(rate) => rates.push(ThroughputRecord { method: method.clone(), player: i + 1, path, iter: t, rate }),
                    Err(e) => rate_error = Some(e),
                }
            }
        }
    })
    .map_err(|e| HarnessError::Config { line: None, key: None, msg: format!("{}: {e}", cell.label()) })?;

    let records = result
        .gap_trace
        .iter()
        .map(|&(iter, gap)| GapRecord {
            method: method.clone(),
            m: cell.m,
            n: cell.n,
            sigma: cell.sigma,
            lambda: cell.variant.method.lambda(),
            path,
            iter,
            gap,
            elapsed_ms: elapsed.get(&iter).copied().unwrap_or(0.0),
        })
        .collect();
    let failure = result.failure.or(rate_error).map(fail);
    Ok(JobOutput { records, throughput: rates, failure })
}

fn cmp_f64(a: f64, b: f64) -> std::cmp::Ordering {
    a.total_cmp(&b)
}

pub fn sort_records(records: &mut [GapRecord]) {
    records.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.m.cmp(&b.m))
            .then(a.n.cmp(&b.n))
            .then(cmp_f64(a.sigma, b.sigma))
            .then(cmp_f64(a.lambda, b.lambda))
            .then(a.path.cmp(&b.path))
            .then(a.iter.cmp(&b.iter))
    });
}

/// Runs every cell for every sample path on the current rayon pool.
///
/// Numerical failures end only the affected job; they are collected in
/// [`GridOutput::failures`] alongside the partial traces.
pub fn run_grid(config: &ExperimentConfig) -> Result<GridOutput, HarnessError> {
    config.validate()?;
    let jobs: Vec<(Cell, usize)> =
        cells(config)?.into_iter().flat_map(|c| (0..config.grid.sample_paths).map(move |p| (c, p))).collect();
    let outputs = jobs.par_iter().map(|(cell, path)| run_job(config, cell, *path)).collect::<Result<Vec<_>, _>>()?;

    let mut out = GridOutput::default();
    for job in outputs {
        out.records.extend(job.records);
        out.throughput.extend(job.throughput);
        out.failures.extend(job.failure);
    }
    sort_records(&mut out.records);
    out.throughput.sort_by(|a, b| {
        a.method.cmp(&b.method).then(a.player.cmp(&b.player)).then(a.path.cmp(&b.path)).then(a.iter.cmp(&b.iter))
    });
    Ok(out)
}

/// Gap averaged over sample paths at one iteration of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanRecord {
    pub method: String,
    pub m: usize,
    pub n: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub iter: usize,
    pub mean_gap: f64,
    pub paths: usize,
}

/// Arithmetic mean over the paths that reached each iteration.
pub fn path_means(records: &[GapRecord]) -> Vec<MeanRecord> {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let key = |r: &GapRecord| (r.method.clone(), r.m, r.n, r.sigma.to_bits(), r.lambda.to_bits(), r.iter);
    let mut groups: BTreeMap<_, (f64, usize, &GapRecord)> = BTreeMap::new();
    for r in &sorted {
        let e = groups.entry(key(r)).or_insert((0.0, 0, r));
        e.0 += r.gap;
        e.1 += 1;
    }
    let mut out: Vec<MeanRecord> = groups
        .into_values()
        .map(|(sum, count, r)| MeanRecord {
            method: r.method.clone(),
            m: r.m,
            n: r.n,
            sigma: r.sigma,
            lambda: r.lambda,
            iter: r.iter,
            mean_gap: sum / count as f64,
            paths: count,
        })
        .collect();
    out.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.m.cmp(&b.m))
            .then(a.n.cmp(&b.n))
            .then(cmp_f64(a.sigma, b.sigma))
            .then(cmp_f64(a.lambda, b.lambda))
            .then(a.iter.cmp(&b.iter))
    });
    out
}
