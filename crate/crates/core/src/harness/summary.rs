use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean, standard error and range of one quantity across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(R)`; zero for a single run.
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("cannot summarise an empty sample"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1.0)).sqrt() / n.sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { mean, stderr, min, max })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub t: usize,
    pub mean_excess: f64,
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
}

impl SummaryRow {
    pub fn new(t: usize, s: Stats) -> Self {
        Self { t, mean_excess: s.mean, stderr: s.stderr, min: s.min, max: s.max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub series: String,
    pub algorithm: String,
    pub config_hash: String,
    pub seed: u64,
    pub num_runs: usize,
    pub horizon: usize,
    pub wall_time_secs: f64,
    /// Excess risk of the returned estimate across runs.
    pub estimate: Stats,
    /// Trailing samples unused by the algorithm in each run.
    pub discarded: usize,
}

/// Excess-risk curve of one algorithm, aggregated over runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub rows: Vec<SummaryRow>,
    pub metadata: SeriesMetadata,
}

impl RunSummary {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(&self.rows, out)
    }

    pub fn write_files(&self, dir: &Path) -> Result<()> {
        let csv_path = dir.join(format!("{}.csv", self.metadata.series));
        let file = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let meta_path = dir.join(format!("{}.json", self.metadata.series));
        let text = serde_json::to_string_pretty(&self.metadata)?;
        std::fs::write(&meta_path, text + "\n").map_err(|e| Error::io(&meta_path, e))
    }
}

pub fn write_rows<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Parse a `t,mean_excess,stderr,min,max` table.
pub fn read_summary_csv<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_reader(input);
    let expected = ["t", "mean_excess", "stderr", "min", "max"];
    let headers = r.headers()?.clone();
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::invalid(format!(
            "unexpected summary header {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows: Vec<SummaryRow> = Vec::new();
    for record in r.deserialize() {
        let row: SummaryRow = record?;
        if let Some(prev) = rows.last() {
            if row.t <= prev.t {
                return Err(Error::invalid("summary rows must have increasing t"));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// A log-log chart of mean excess risk against samples, one line per series.
pub fn render_svg(series: &[RunSummary]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 60.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

    let points: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.rows
                .iter()
                .filter(|r| r.t > 0 && r.mean_excess > 0.0 && r.mean_excess.is_finite())
                .map(|r| ((r.t as f64).log10(), r.mean_excess.log10()))
                .collect()
        })
        .collect();
    let all = points.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    svg.push_str(&format!(
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">log10 samples ({x0:.2} to {x1:.2})</text>\n",
        W / 2.0,
        H - 20.0
    ));
    svg.push_str(&format!(
        "<text x=\"15\" y=\"{}\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">log10 excess risk ({y0:.2} to {y1:.2})</text>\n",
        H / 2.0,
        H / 2.0
    ));
    for (i, (s, pts)) in series.iter().zip(&points).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>\n",
            W - PAD - 120.0,
            PAD + 16.0 * (i as f64 + 1.0),
            s.metadata.series
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
