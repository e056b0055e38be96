//! Replays the checked-in fuzz corpus through the same entry points and
//! invariants as the fuzz targets.

use std::fs;
use std::path::PathBuf;

use markov_regress::chain::ChainSpec;
use markov_regress::harness::{cell_name, grid_cells, grid_from_json_str, read_summary_csv, write_rows, ExperimentConfig};
use markov_regress::regression::Problem;

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn chain_seeds() {
    let mut parsed = 0;
    for (path, data) in seeds("chain_json") {
        let s = std::str::from_utf8(&data).unwrap();
        if let Ok(chain) = ChainSpec::from_json_str(s) {
            let again = ChainSpec::from_json_str(&chain.to_json_string().unwrap()).unwrap();
            assert_eq!(chain, again, "{}", path.display());
            parsed += 1;
        }
    }
    assert!(parsed >= 3);
}

#[test]
fn problem_seeds() {
    for (path, data) in seeds("problem_json") {
        let problem = Problem::from_json_str(std::str::from_utf8(&data).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(problem.excess_risk(problem.w_star()).abs() <= 1e-9);
        Problem::from_json_str(&problem.to_json_string().unwrap()).unwrap();
    }
}

#[test]
fn experiment_config_seeds() {
    for (path, data) in seeds("experiment_config") {
        let config = ExperimentConfig::from_json_str(std::str::from_utf8(&data).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let text = serde_json::to_string(&config).unwrap();
        let again = ExperimentConfig::from_json_str(&text).unwrap();
        assert_eq!(again.config_hash().unwrap(), config.config_hash().unwrap());
        config.problem.build().unwrap();
    }
}

#[test]
fn grid_seeds() {
    for (_, data) in seeds("sweep_grid") {
        let grid = grid_from_json_str(std::str::from_utf8(&data).unwrap()).unwrap();
        let cells = grid_cells(&grid, 256).unwrap();
        for (i, c) in cells.iter().enumerate() {
            assert!(!cell_name(i, c).contains('/'));
        }
    }
}

#[test]
fn summary_seeds() {
    let mut parsed = 0;
    for (_, data) in seeds("summary_csv") {
        if let Ok(rows) = read_summary_csv(&data[..]) {
            let mut buf = Vec::new();
            write_rows(&rows, &mut buf).unwrap();
            assert_eq!(read_summary_csv(&buf[..]).unwrap(), rows);
            parsed += 1;
        }
    }
    assert_eq!(parsed, 2);
}

#[test]
fn shipped_configs_parse() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["replay_vs_sgd.json", "parallel_tau.json"] {
        let text = fs::read_to_string(dir.join(name)).unwrap();
        ExperimentConfig::from_json_str(&text).unwrap().problem.build().unwrap();
    }
    let grid = grid_from_json_str(&fs::read_to_string(dir.join("parallel_tau_grid.json")).unwrap()).unwrap();
    assert_eq!(grid_cells(&grid, 10).unwrap().len(), 2);
    ChainSpec::from_json_str(&fs::read_to_string(dir.join("chain_mc0.json")).unwrap()).unwrap();
}
