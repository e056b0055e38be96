use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::config::{Component, ExperimentConfig};
use super::summary::{render_svg, RunSummary, SeriesMetadata, Stats, SummaryRow};
use crate::error::{Error, Result};
use crate::sgd::{AlgorithmSpec, RunOptions};

/// Everything produced by one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config_hash: String,
    pub series: Vec<RunSummary>,
    /// Directory the files were written to, if any.
    pub output_dir: Option<PathBuf>,
}

/// Per-run seed: run `i` uses `seed + i`, shared by every algorithm so that
/// all series see the same sample paths.
pub fn run_seed(seed: u64, run: usize) -> u64 {
    seed.wrapping_add(run as u64)
}

/// Series names: the algorithm name, suffixed with its position when several
/// algorithms share a name.
pub fn series_names(algorithms: &[AlgorithmSpec]) -> Vec<String> {
    algorithms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let dup = algorithms.iter().filter(|b| b.name() == a.name()).count() > 1;
            if dup {
                format!("{}_{}", a.name(), i)
            } else {
                a.name().to_string()
            }
        })
        .collect()
}

struct RunRecord {
    checkpoints: Vec<f64>,
    estimate: f64,
    discarded: usize,
}

/// Run every algorithm `num_runs` times and aggregate the excess-risk curves.
/// Files are written to `output_dir` when given. Results depend only on the
/// configuration, never on scheduling.
pub fn run_experiment(config: &ExperimentConfig, output_dir: Option<&Path>) -> Result<ExperimentResult> {
    config.validate()?;
    let problem = config.problem.build()?;
    let hash = config.config_hash()?;
    let checkpoints = config.checkpoint_schedule();
    let names = series_names(&config.algorithms);

    let inits: Vec<Vec<f64>> = (0..config.num_runs)
        .map(|i| match config.component {
            Component::Variance => Ok(problem.w_star().to_vec()),
            _ => config.init.initial_point(&problem, run_seed(config.seed, i)),
        })
        .collect::<Result<_>>()?;

    let mut series = Vec::with_capacity(config.algorithms.len());
    for (algorithm, name) in config.algorithms.iter().zip(&names) {
        let started = Instant::now();
        let algorithm = match (algorithm, config.component) {
            (AlgorithmSpec::ParallelSgd(c), Component::Variance) => {
                let mut c = c.clone();
                c.initial_points = None;
                AlgorithmSpec::ParallelSgd(c)
            }
            (a, _) => a.clone(),
        };
        let opts = RunOptions {
            noise: config.component.noise_mode(),
            checkpoints: checkpoints.clone(),
            ..RunOptions::default()
        };
        let records: Vec<RunRecord> = (0..config.num_runs)
            .into_par_iter()
            .map(|i| {
                let out = algorithm.run(&problem, config.horizon, &inits[i], run_seed(config.seed, i), &opts)?;
                Ok(RunRecord {
                    checkpoints: out.checkpoints.iter().map(|c| c.excess_risk).collect(),
                    estimate: problem.excess_risk(&out.estimate),
                    discarded: out.discarded,
                })
            })
            .collect::<Result<_>>()?;

        let mut rows = Vec::with_capacity(checkpoints.len());
        for (j, &t) in checkpoints.iter().enumerate() {
            let column: Vec<f64> = records.iter().map(|r| r.checkpoints[j]).collect();
            rows.push(SummaryRow::new(t, Stats::from_values(&column)?));
        }
        let estimates: Vec<f64> = records.iter().map(|r| r.estimate).collect();
        let summary = RunSummary {
            rows,
            metadata: SeriesMetadata {
                series: name.clone(),
                algorithm: algorithm.name().to_string(),
                config_hash: hash.clone(),
                seed: config.seed,
                num_runs: config.num_runs,
                horizon: config.horizon,
                wall_time_secs: started.elapsed().as_secs_f64(),
                estimate: Stats::from_values(&estimates)?,
                discarded: records[0].discarded,
            },
        };
        log::info!(
            "{name}: final estimate excess risk {:.4e} (+/- {:.1e}) over {} runs",
            summary.metadata.estimate.mean,
            summary.metadata.estimate.stderr,
            config.num_runs
        );
        series.push(summary);
    }

    if let Some(dir) = output_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for s in &series {
            s.write_files(dir)?;
        }
        let cfg_path = dir.join("config.json");
        std::fs::write(&cfg_path, serde_json::to_string_pretty(config)? + "\n")
            .map_err(|e| Error::io(&cfg_path, e))?;
        if config.svg {
            let svg_path = dir.join("excess_risk.svg");
            std::fs::write(&svg_path, render_svg(&series)).map_err(|e| Error::io(&svg_path, e))?;
        }
    }

    Ok(ExperimentResult {
        config_hash: hash,
        series,
        output_dir: output_dir.map(Path::to_path_buf),
    })
}
