use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::config::{canonical_json, ExperimentConfig};
use super::engine::run_experiment;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_CELLS: usize = 10_000;

/// Dotted config paths mapped to the values to try. Numeric path segments
/// index into arrays, e.g. `algorithms.0.step_size`.
pub type Grid = BTreeMap<String, Vec<Value>>;

pub fn grid_from_json_str(s: &str) -> Result<Grid> {
    Ok(serde_json::from_str(s)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub name: String,
    pub parameters: BTreeMap<String, Value>,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepIndex {
    pub base_hash: String,
    pub cells: Vec<SweepCell>,
}

/// Cartesian product of the grid, in key order with the last key varying
/// fastest. An empty grid yields one empty assignment.
pub fn grid_cells(grid: &Grid, max_cells: usize) -> Result<Vec<BTreeMap<String, Value>>> {
    let mut total: usize = 1;
    for (key, values) in grid {
        if values.is_empty() {
            return Err(Error::invalid(format!("grid key `{key}` has no values")));
        }
        total = total
            .checked_mul(values.len())
            .filter(|&n| n <= max_cells)
            .ok_or_else(|| Error::invalid(format!("grid exceeds the cap of {max_cells} cells")))?;
    }
    let mut cells = vec![BTreeMap::new()];
    for (key, values) in grid {
        let mut next = Vec::with_capacity(cells.len() * values.len());
        for cell in &cells {
            for v in values {
                let mut c: BTreeMap<String, Value> = cell.clone();
                c.insert(key.clone(), v.clone());
                next.push(c);
            }
        }
        cells = next;
    }
    Ok(cells)
}

/// Set `path` (dot separated) inside `root`, creating object members as
/// needed.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::invalid(format!("malformed grid path `{path}`")));
    }
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        cur = match cur {
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| Error::invalid(format!("`{seg}` in `{path}` is not an array index")))?;
                items
                    .get_mut(idx)
                    .ok_or_else(|| Error::invalid(format!("index {idx} out of range in `{path}`")))?
            }
            Value::Object(map) => map.entry(seg.to_string()).or_insert(if last {
                Value::Null
            } else {
                Value::Object(Default::default())
            }),
            _ => return Err(Error::invalid(format!("`{path}` descends into a scalar"))),
        };
    }
    *cur = value;
    Ok(())
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '.' | '_' | '=') { c } else { '_' })
        .collect()
}

/// Longer values are replaced by a short digest in cell names.
const MAX_VALUE_CHARS: usize = 24;

/// `cell0003__a.b=0.5__c=2`: index plus the assignment, both derived from the
/// grid alone.
pub fn cell_name(index: usize, params: &BTreeMap<String, Value>) -> String {
    let mut name = format!("cell{index:04}");
    for (k, v) in params {
        let mut text = String::new();
        canonical_json(v, &mut text);
        name.push_str("__");
        let text = text.trim_matches('"');
        let shown = if text.len() > MAX_VALUE_CHARS {
            let digest = Sha256::digest(text.as_bytes());
            digest[..5].iter().map(|b| format!("{b:02x}")).collect()
        } else {
            text.to_string()
        };
        name.push_str(&sanitize(&format!("{k}={shown}")));
    }
    name
}

/// Apply one grid assignment to `base` and re-validate.
pub fn apply_cell(base: &ExperimentConfig, params: &BTreeMap<String, Value>) -> Result<ExperimentConfig> {
    let mut v = serde_json::to_value(base)?;
    for (path, value) in params {
        set_path(&mut v, path, value.clone())?;
    }
    let config: ExperimentConfig = serde_json::from_value(v)?;
    config.validate()?;
    Ok(config)
}

/// Run every cell of the grid into its own subdirectory of `out_dir` and
/// write `index.json`.
pub fn sweep(base: &ExperimentConfig, grid: &Grid, out_dir: &Path, max_cells: usize) -> Result<SweepIndex> {
    let assignments = grid_cells(grid, max_cells)?;
    let configs: Vec<ExperimentConfig> = assignments
        .iter()
        .map(|p| apply_cell(base, p))
        .collect::<Result<_>>()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut cells = Vec::with_capacity(configs.len());
    for (i, (params, config)) in assignments.into_iter().zip(&configs).enumerate() {
        let name = cell_name(i, &params);
        let result = run_experiment(config, Some(&out_dir.join(&name)))?;
        cells.push(SweepCell { name, parameters: params, config_hash: result.config_hash });
    }
    let index = SweepIndex { base_hash: base.config_hash()?, cells };
    let path = out_dir.join("index.json");
    std::fs::write(&path, serde_json::to_string_pretty(&index)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(index)
}
