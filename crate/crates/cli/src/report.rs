//! Result files written by `sample` and `bench`.
//!
//! | file              | contents                                         |
//! |-------------------|--------------------------------------------------|
//! | `solutions.jsonl` | one `{"cycles":..,"bits":["0101",..]}` per line  |
//! | `report.json`     | [`RunReport`]                                    |
//! | `cycles.csv`      | `cycle_count,unique_solutions`                   |
//! | `iterations.csv`  | `iteration,cumulative_unique`                    |
//!
//! Every file is written to a temporary sibling and renamed into place.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use seqsat_core::sampler::{SamplerConfig, SolutionSet};

use crate::spec::OutputValue;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub cycles: usize,
    pub bits: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub eta: usize,
    pub min_cycles: usize,
    pub iters: usize,
    pub lr: f64,
    pub batch: usize,
    pub threshold: f64,
    pub seed: u64,
    pub init_scale: f64,
    pub noise_std: Option<f64>,
    pub decay: Option<f64>,
}

impl From<&SamplerConfig> for ConfigEcho {
    fn from(c: &SamplerConfig) -> Self {
        ConfigEcho {
            eta: c.eta,
            min_cycles: c.min_cycles,
            iters: c.iters,
            lr: c.lr,
            batch: c.batch,
            threshold: c.threshold,
            seed: c.seed,
            init_scale: c.init_scale,
            noise_std: c.noise_std,
            decay: c.decay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleCount {
    pub cycles: usize,
    pub unique: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationCount {
    pub iteration: usize,
    pub cumulative_unique: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Budget or solution target reached.
    Stopped,
    Interrupted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub circuit: String,
    pub config: ConfigEcho,
    pub constraints: Vec<OutputValue>,
    pub status: RunStatus,
    pub note: Option<String>,
    pub rounds: usize,
    pub unique_solutions: usize,
    pub valid: u64,
    pub attempts: u64,
    pub wall_seconds: f64,
    pub throughput: f64,
    pub per_cycle: Vec<CycleCount>,
    pub cumulative_by_iteration: Vec<IterationCount>,
}

impl RunReport {
    pub fn new(
        command: &str,
        circuit: &str,
        cfg: &SamplerConfig,
        constraints: &[OutputValue],
        set: &SolutionSet,
        status: RunStatus,
        rounds: usize,
    ) -> Self {
        let wall_seconds = set.wall_time.as_secs_f64();
        let unique = set.unique();
        let per_cycle = (cfg.min_cycles..=cfg.eta)
            .map(|cc| CycleCount {
                cycles: cc,
                unique: set.per_cycle_counts().get(&cc).copied().unwrap_or(0),
            })
            .collect();
        let cumulative_by_iteration = set
            .cumulative_by_iteration(cfg.iters)
            .into_iter()
            .enumerate()
            .map(|(k, c)| IterationCount {
                iteration: k + 1,
                cumulative_unique: c,
            })
            .collect();
        RunReport {
            command: command.to_string(),
            circuit: circuit.to_string(),
            config: cfg.into(),
            constraints: constraints.to_vec(),
            status,
            note: (unique == 0).then(|| format!("no solutions up to eta={}", cfg.eta)),
            rounds,
            unique_solutions: unique,
            valid: set.valid,
            attempts: set.attempts,
            wall_seconds,
            throughput: if wall_seconds > 0.0 {
                unique as f64 / wall_seconds
            } else {
                0.0
            },
            per_cycle,
            cumulative_by_iteration,
        }
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "unique {} valid {} attempts {} wall {:.3}s throughput {:.1}/s",
            self.unique_solutions, self.valid, self.attempts, self.wall_seconds, self.throughput
        );
        if let Some(note) = &self.note {
            s.push_str(&format!(" ({note})"));
        }
        s
    }
}

/// Write `path` via a temporary file in the same directory and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn solutions_jsonl(set: &SolutionSet) -> String {
    let mut out = String::new();
    for s in set.solutions() {
        let rec = SolutionRecord {
            cycles: s.cycles,
            bits: s.cycle_strings(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("plain record"));
        out.push('\n');
    }
    out
}

pub fn cycles_csv(report: &RunReport) -> String {
    let mut out = String::from("cycle_count,unique_solutions\n");
    for c in &report.per_cycle {
        out.push_str(&format!("{},{}\n", c.cycles, c.unique));
    }
    out
}

pub fn iterations_csv(report: &RunReport) -> String {
    let mut out = String::from("iteration,cumulative_unique\n");
    for c in &report.cumulative_by_iteration {
        out.push_str(&format!("{},{}\n", c.iteration, c.cumulative_unique));
    }
    out
}

/// Write all four result files into `dir`, creating it if needed.
pub fn write_run(dir: &Path, set: &SolutionSet, report: &RunReport) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    write_atomic(&dir.join("solutions.jsonl"), solutions_jsonl(set).as_bytes())?;
    let json = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    write_atomic(&dir.join("report.json"), format!("{json}\n").as_bytes())?;
    write_atomic(&dir.join("cycles.csv"), cycles_csv(report).as_bytes())?;
    write_atomic(&dir.join("iterations.csv"), iterations_csv(report).as_bytes())?;
    Ok(())
}

pub fn read_solutions(text: &str) -> Result<Vec<SolutionRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
