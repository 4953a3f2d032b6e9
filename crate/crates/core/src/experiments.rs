//! Experiment configurations, figure presets and CSV/JSON output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, bounds_report, theta_scan};
use crate::channels::ChannelSpec;
use crate::density::NEGATIVE_EIGENVALUE_THRESHOLD;
use crate::effective::{exact_entanglement_pauli, OMEGA_CUTOFF};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::numeric::linspace;
use crate::oracle::oracle_negativity;
use crate::partition::Partition;

/// Inclusive evenly spaced grid, written `start:stop:count` or as a single value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if count == 0 || !start.is_finite() || !stop.is_finite() {
            return Err(Error::Config(format!("grid {start}:{stop}:{count} is empty or not finite")));
        }
        if count > 1 && stop < start {
            return Err(Error::Config(format!("grid {start}:{stop}:{count} runs backwards")));
        }
        Ok(Self { start, stop, count })
    }

    pub fn single(value: f64) -> Result<Self> {
        Self::new(value, value, 1)
    }

    pub fn points(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.count)
    }
}

fn parse_scalar(s: &str) -> Result<f64> {
    let t = s.trim();
    let pi = std::f64::consts::PI;
    let value = if t == "pi" {
        Some(pi)
    } else if let Some(den) = t.strip_prefix("pi/") {
        den.parse::<f64>().ok().map(|d| pi / d)
    } else {
        t.parse::<f64>().ok()
    };
    value.ok_or_else(|| Error::Config(format!("bad number {s:?}")))
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Self::single(parse_scalar(v)?),
            [a, b, n] => {
                let count = n
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad grid count in {s:?}")))?;
                Self::new(parse_scalar(a)?, parse_scalar(b)?, count)
            }
            _ => Err(Error::Config(format!("grid {s:?} must be `a:b:n` or a single value"))),
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.count == 1 && self.start == self.stop {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}:{}:{}", self.start, self.stop, self.count)
        }
    }
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    ExactPauli,
    Bounds,
    ThetaScan,
    OracleCheck,
}

impl Mode {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Mode::ExactPauli => &["p", "negativity"],
            Mode::Bounds => &["p", "llb", "lb_theta0", "lb_thetapi4", "ub", "exact_or_oracle", "certificate"],
            Mode::ThetaScan => &["theta", "lb", "reference"],
            Mode::OracleCheck => &["case_id", "fast", "oracle", "abs_diff"],
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::ExactPauli => "exact-pauli",
            Mode::Bounds => "bounds",
            Mode::ThetaScan => "theta-scan",
            Mode::OracleCheck => "oracle-check",
        })
    }
}

pub const DEFAULT_P_GRID: Grid = Grid {
    start: 0.0,
    stop: 1.0,
    count: 51,
};

pub const DEFAULT_THETA_GRID: Grid = Grid {
    start: 0.0,
    stop: std::f64::consts::FRAC_PI_2,
    count: 33,
};

pub const DEFAULT_SEED: u64 = 0x5eed;

/// One experiment run.
///
/// `graph` is a preset (`chain:N`, `ring:N`, `star:N`), an edge-list path, or
/// `random:K` in oracle-check mode for `K` random connected graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub graph: String,
    pub partition: String,
    pub channel: ChannelSpec,
    pub p_grid: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_grid: Option<Grid>,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl ExperimentConfig {
    pub fn new(name: &str, graph: &str, partition: &str, channel: &str, mode: Mode) -> Result<Self> {
        Ok(Self {
            name: name.to_string(),
            graph: graph.to_string(),
            partition: partition.to_string(),
            channel: channel.parse()?,
            p_grid: DEFAULT_P_GRID,
            theta_grid: None,
            mode,
            jobs: None,
            out: None,
            seed: DEFAULT_SEED,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn random_cases(&self) -> Result<Option<usize>> {
        match self.graph.strip_prefix("random:") {
            Some(k) => k
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("bad case count in {:?}", self.graph))),
            None => Ok(None),
        }
    }

    /// Checks grids and mode/channel compatibility before any work is done.
    pub fn validate(&self) -> Result<()> {
        Grid::new(self.p_grid.start, self.p_grid.stop, self.p_grid.count)?;
        for p in self.p_grid.points() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("p = {p} outside [0, 1]")));
            }
        }
        if let Some(t) = &self.theta_grid {
            if t.start < 0.0 || t.stop > std::f64::consts::FRAC_PI_2 + 1e-12 {
                return Err(Error::Config(format!("θ-grid {t} outside [0, π/2]")));
            }
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        match self.mode {
            Mode::ExactPauli | Mode::OracleCheck if !self.channel.is_pauli() => {
                return Err(Error::Config(format!(
                    "{} mode needs a Pauli channel, got {}",
                    self.mode, self.channel
                )))
            }
            Mode::ThetaScan if self.p_grid.count != 1 => {
                return Err(Error::Config("theta-scan takes a single p value".into()))
            }
            _ => {}
        }
        if self.random_cases()?.is_some() && self.mode != Mode::OracleCheck {
            return Err(Error::Config("random graphs are only available in oracle-check mode".into()));
        }
        Ok(())
    }
}

/// A named figure reproduction; may expand into several runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub runs: Vec<ExperimentConfig>,
}

fn preset_runs(name: &str) -> Option<(&'static str, Vec<ExperimentConfig>)> {
    let cfg = |n: &str, g: &str, part: &str, ch: &str, mode| {
        ExperimentConfig::new(n, g, part, ch, mode).expect("preset is valid")
    };
    let scan = |n: &str, ch: &str, p: f64| {
        let mut c = cfg(n, "chain:4", "one-vs-rest:0", ch, Mode::ThetaScan);
        c.p_grid = Grid::single(p).expect("p");
        c.theta_grid = Some(DEFAULT_THETA_GRID);
        c
    };
    let small_p = [0.01, 0.1, 0.3, 0.5];
    Some(match name {
        "fig3" => (
            "12- and 14-qubit chains, middle vertex vs rest, depolarizing sweep",
            vec![
                cfg("fig3-chain12", "chain:12", "one-vs-rest:6", "depol:p", Mode::ExactPauli),
                cfg("fig3-chain14", "chain:14", "one-vs-rest:7", "depol:p", Mode::ExactPauli),
            ],
        ),
        "fig4" => (
            "4-qubit chain, vertex 0 vs rest, amplitude damping bounds",
            vec![cfg("fig4", "chain:4", "one-vs-rest:0", "ad:p", Mode::Bounds)],
        ),
        "fig5" => (
            "LB(θ) scans for amplitude damping at p = 0.01, 0.1, 0.3, 0.5",
            small_p.iter().map(|&p| scan(&format!("fig5-p{p}"), "ad:p", p)).collect(),
        ),
        "fig6" => (
            "4-qubit chain, vertex 0 vs rest, infinite-temperature thermal Kraus set",
            vec![cfg("fig6", "chain:4", "one-vs-rest:0", "gad:inf:p", Mode::Bounds)],
        ),
        "fig7" => (
            "LB(θ) scan for amplitude damping at p = 0.9",
            vec![scan("fig7", "ad:p", 0.9)],
        ),
        "fig8" => (
            "LB(θ) scans for the infinite-temperature thermal Kraus set at p = 0.01, 0.1, 0.3, 0.5",
            small_p.iter().map(|&p| scan(&format!("fig8-p{p}"), "gad:inf:p", p)).collect(),
        ),
        _ => return None,
    })
}

pub const PRESET_NAMES: [&str; 6] = ["fig3", "fig4", "fig5", "fig6", "fig7", "fig8"];

pub fn preset(name: &str) -> Result<Preset> {
    let (description, runs) = preset_runs(name)
        .ok_or_else(|| Error::Config(format!("unknown preset {name:?}; try --list-presets")))?;
    let name = PRESET_NAMES.iter().find(|n| **n == name).expect("listed");
    Ok(Preset { name, description, runs })
}

pub fn presets() -> Vec<Preset> {
    PRESET_NAMES.iter().map(|n| preset(n).expect("listed")).collect()
}

/// Human-readable preset table.
pub fn list_presets() -> String {
    let mut out = String::new();
    for p in presets() {
        out.push_str(&format!("{}  {}\n", p.name, p.description));
        for r in &p.runs {
            out.push_str(&format!(
                "    {:<14} mode={} graph={} partition={} channel={} p-grid={}",
                r.name, r.mode, r.graph, r.partition, r.channel, r.p_grid
            ));
            if let Some(t) = &r.theta_grid {
                out.push_str(&format!(" theta-grid={t}"));
            }
            out.push('\n');
        }
    }
    out
}

/// Random connected graph on 2..=6 vertices with a random two-sided partition.
pub fn random_case(rng: &mut ChaCha8Rng) -> (Graph, Partition) {
    let n = rng.gen_range(2..=6);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for k in 1..n {
        let parent = order[rng.gen_range(0..k)];
        edges.push((parent.min(order[k]), parent.max(order[k])));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !edges.contains(&(i, j)) && rng.gen_bool(0.3) {
                edges.push((i, j));
            }
        }
    }
    let graph = Graph::new(n, edges).expect("valid random graph");
    let mut labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    if labels.iter().all(|&l| l == labels[0]) {
        let k = rng.gen_range(0..n);
        labels[k] ^= 1;
    }
    if labels[0] == 1 {
        labels.iter_mut().for_each(|l| *l ^= 1);
    }
    (graph, Partition::new(labels).expect("two parts"))
}

/// Output of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub name: String,
    pub csv: String,
    pub metadata: serde_json::Value,
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_header(mode: Mode) -> String {
    let mut s = mode.columns().join(",");
    s.push('\n');
    s
}

/// Executes one configuration.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let started = Instant::now();
    let (csv, described) = pool.install(|| execute(config))?;
    let wall = started.elapsed().as_secs_f64();
    let metadata = serde_json::json!({
        "name": config.name,
        "mode": config.mode.to_string(),
        "graph": described.graph,
        "partition": described.partition,
        "channel": config.channel.to_string(),
        "p_grid": config.p_grid.to_string(),
        "theta_grid": config.theta_grid.map(|t| t.to_string()),
        "shared_theta": true,
        "seed": config.seed,
        "jobs": pool.current_num_threads(),
        "tolerances": {
            "negative_eigenvalue_threshold": NEGATIVE_EIGENVALUE_THRESHOLD,
            "omega_cutoff": OMEGA_CUTOFF,
            "flag_match": bounds::FLAG_MATCH_TOL,
            "flag_orthogonality": bounds::ORTHOGONALITY_TOL,
        },
        "config": config,
        "wall_time_s": wall,
        "version": env!("CARGO_PKG_VERSION"),
    });
    Ok(RunOutput {
        name: config.name.clone(),
        csv,
        metadata,
    })
}

struct Described {
    graph: serde_json::Value,
    partition: serde_json::Value,
}

fn describe(graph: &Graph, partition: &Partition, spec: &str) -> Described {
    Described {
        graph: serde_json::json!({ "spec": spec, "n": graph.order(), "edges": graph.edges() }),
        partition: serde_json::json!(partition.labels()),
    }
}

fn execute(config: &ExperimentConfig) -> Result<(String, Described)> {
    let mut csv = csv_header(config.mode);
    if let Some(cases) = config.random_cases()? {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let instances: Vec<(Graph, Partition)> = (0..cases).map(|_| random_case(&mut rng)).collect();
        let rows = oracle_rows(config, &instances)?;
        csv.push_str(&rows);
        let d = Described {
            graph: serde_json::json!({
                "spec": config.graph,
                "instances": instances.iter().map(|(g, _)| serde_json::json!({"n": g.order(), "edges": g.edges()})).collect::<Vec<_>>(),
            }),
            partition: serde_json::json!(instances.iter().map(|(_, p)| p.labels().to_vec()).collect::<Vec<_>>()),
        };
        return Ok((csv, d));
    }
    let graph = Graph::from_spec(&config.graph)?;
    let partition = Partition::parse(&config.partition, graph.order())?;
    partition.require_bipartition()?;
    let n = graph.order();
    let ps = config.p_grid.points();
    match config.mode {
        Mode::ExactPauli => {
            let values: Vec<f64> = ps
                .par_iter()
                .map(|&p| exact_entanglement_pauli(&graph, &partition, &config.channel.product(n, p)?))
                .collect::<Result<_>>()?;
            for (p, v) in ps.iter().zip(values) {
                csv.push_str(&format!("{},{}\n", fmt_f64(*p), fmt_f64(v)));
            }
        }
        Mode::Bounds => {
            let rows: Vec<String> = ps
                .par_iter()
                .map(|&p| {
                    let ch = config.channel.product(n, p)?;
                    let r = bounds_report(&graph, &partition, &ch)?;
                    let reference = match bounds::reference_negativity(&graph, &partition, &ch) {
                        Ok(v) => v,
                        Err(e) if e.is_limit() => {
                            log::warn!("no reference value at p = {p}: {e}");
                            f64::NAN
                        }
                        Err(e) => return Err(e),
                    };
                    Ok(format!(
                        "{},{},{},{},{},{},{}\n",
                        fmt_f64(p),
                        fmt_f64(r.llb),
                        fmt_f64(r.lb_theta0),
                        fmt_f64(r.lb_theta_pi4),
                        fmt_f64(r.ub),
                        fmt_f64(reference),
                        r.certificate.certificate
                    ))
                })
                .collect::<Result<_>>()?;
            csv.extend(rows);
        }
        Mode::ThetaScan => {
            let ch = config.channel.product(n, ps[0])?;
            let thetas = config.theta_grid.unwrap_or(DEFAULT_THETA_GRID).points();
            let reference = bounds::reference_negativity(&graph, &partition, &ch)?;
            for (t, lb) in theta_scan(&graph, &partition, &ch, &thetas)? {
                csv.push_str(&format!("{},{},{}\n", fmt_f64(t), fmt_f64(lb), fmt_f64(reference)));
            }
        }
        Mode::OracleCheck => {
            csv.push_str(&oracle_rows(config, &[(graph.clone(), partition.clone())])?);
        }
    }
    Ok((csv, describe(&graph, &partition, &config.graph)))
}

fn oracle_rows(config: &ExperimentConfig, instances: &[(Graph, Partition)]) -> Result<String> {
    let ps = config.p_grid.points();
    let jobs: Vec<(usize, &Graph, &Partition, f64)> = instances
        .iter()
        .flat_map(|(g, part)| ps.iter().map(move |&p| (g, part, p)))
        .enumerate()
        .map(|(k, (g, part, p))| (k, g, part, p))
        .collect();
    let rows: Vec<String> = jobs
        .par_iter()
        .map(|&(k, g, part, p)| {
            let ch = config.channel.product(g.order(), p)?;
            let fast = exact_entanglement_pauli(g, part, &ch)?;
            let oracle = oracle_negativity(g, part, &ch)?;
            Ok(format!("{k},{},{},{}\n", fmt_f64(fast), fmt_f64(oracle), fmt_f64((fast - oracle).abs())))
        })
        .collect::<Result<_>>()?;
    Ok(rows.concat())
}

/// Writes `<name>.csv` and `<name>.meta.json` into `dir`.
pub fn write_output(output: &RunOutput, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{}.csv", output.name));
    let meta = dir.join(format!("{}.meta.json", output.name));
    fs::write(&csv, &output.csv)?;
    fs::write(&meta, serde_json::to_string_pretty(&output.metadata).expect("json") + "\n")?;
    Ok((csv, meta))
}

/// Parses the numeric columns of a CSV produced by [`run`]; text cells become NaN.
pub fn parse_csv(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: Grid = "0:1:51".parse().unwrap();
        assert_eq!(g.points().len(), 51);
        let t: Grid = "0:pi/2:33".parse().unwrap();
        assert!((t.stop - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!("0.9".parse::<Grid>().unwrap(), Grid::single(0.9).unwrap());
        assert!("1:0:5".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
        assert!("0:1".parse::<Grid>().is_err());
        assert_eq!(g.to_string().parse::<Grid>().unwrap(), g);
    }

    #[test]
    fn presets_round_trip_through_json() {
        for p in presets() {
            for r in &p.runs {
                assert_eq!(ExperimentConfig::from_json(&r.to_json()).unwrap(), *r);
                r.validate().unwrap();
            }
        }
    }

    #[test]
    fn preset_table_lists_everything() {
        let t = list_presets();
        for name in PRESET_NAMES {
            assert!(t.contains(name));
        }
        assert!(t.lines().filter(|l| l.contains("theta-grid")).count() >= 9);
    }

    #[test]
    fn validation_rejects_incompatible_modes() {
        let c = ExperimentConfig::new("x", "chain:4", "one-vs-rest:0", "ad:p", Mode::ExactPauli).unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = ExperimentConfig::new("x", "chain:4", "one-vs-rest:0", "ad:p", Mode::ThetaScan).unwrap();
        assert!(c.validate().is_err());
        let c = ExperimentConfig::new("x", "random:3", "0,1", "depol:p", Mode::Bounds).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn random_cases_are_connected_bipartitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let (g, p) = random_case(&mut rng);
            assert!(g.is_connected());
            assert!((2..=6).contains(&g.order()));
            p.require_bipartition().unwrap();
        }
    }

    #[test]
    fn exact_pauli_csv_shape() {
        let mut c = ExperimentConfig::new("t", "chain:4", "one-vs-rest:0", "depol:p", Mode::ExactPauli).unwrap();
        c.p_grid = "0:1:5".parse().unwrap();
        let out = run(&c).unwrap();
        let mut lines = out.csv.lines();
        assert_eq!(lines.next(), Some("p,negativity"));
        let rows = parse_csv(&out.csv);
        assert_eq!(rows.len(), 5);
        assert!((rows[0][1] - 0.5).abs() < 1e-12);
        assert_eq!(out.metadata["seed"], DEFAULT_SEED);
    }
}
