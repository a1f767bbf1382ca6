//! CSV ingestion and tracked output writing.

use btgp::inference::{AssetHistory, InspectionRecord};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub struct CliError(pub String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

impl From<btgp::Error> for CliError {
    fn from(e: btgp::Error) -> Self {
        CliError(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError(format!("io error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Result of loading an inspection CSV: grouped histories plus notices
/// about repairs (row sorting) that did not reject the file.
pub struct LoadedInspections {
    pub histories: Vec<AssetHistory>,
    pub notices: Vec<String>,
}

/// Loads `asset_id,age_years,condition` CSV data. Malformed rows are
/// errors naming the line; out-of-order rows are sorted with a notice;
/// condition values outside [0, x_lim] and duplicate (asset, age) pairs
/// are rejected.
pub fn load_inspections(path: &Path, x_lim: f64) -> CliResult<LoadedInspections> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError(format!("bad header: {e}")))?
        .clone();
    let col = |name: &str| -> CliResult<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError(format!("missing required column '{name}'")))
    };
    let id_col = col("asset_id")?;
    let age_col = col("age_years")?;
    let cond_col = col("condition")?;

    let mut groups: BTreeMap<String, Vec<(f64, f64, u64)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError(format!("csv parse error: {e}")))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |idx: usize| -> CliResult<&str> {
            record
                .get(idx)
                .ok_or_else(|| CliError(format!("line {line}: missing field")))
        };
        let id = field(id_col)?.to_string();
        if id.is_empty() {
            return Err(CliError(format!("line {line}: empty asset_id")));
        }
        let parse = |name: &str, raw: &str| -> CliResult<f64> {
            raw.parse::<f64>()
                .map_err(|_| CliError(format!("line {line}: cannot parse {name} '{raw}'")))
        };
        let age = parse("age_years", field(age_col)?)?;
        let condition = parse("condition", field(cond_col)?)?;
        if !(0.0..=x_lim).contains(&condition) {
            return Err(CliError(format!(
                "line {line}: condition {condition} outside [0, {x_lim}]"
            )));
        }
        if age < 0.0 || !age.is_finite() {
            return Err(CliError(format!("line {line}: invalid age {age}")));
        }
        groups.entry(id).or_default().push((age, condition, line));
    }
    if groups.is_empty() {
        return Err(CliError("no inspection rows in the file".into()));
    }

    let mut notices = Vec::new();
    let mut histories = Vec::new();
    for (id, mut rows) in groups {
        let sorted = rows.windows(2).all(|w| w[0].0 <= w[1].0);
        if !sorted {
            rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            notices.push(format!("asset {id}: rows were out of age order and were sorted"));
        }
        for w in rows.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(CliError(format!(
                    "asset {id}: duplicate age {} (lines {} and {})",
                    w[0].0, w[0].2, w[1].2
                )));
            }
        }
        let records: Vec<InspectionRecord> = rows
            .iter()
            .map(|&(age, condition, _)| InspectionRecord { age, condition })
            .collect();
        histories.push(AssetHistory::new(id, records, x_lim).map_err(|e| CliError(e.to_string()))?);
    }
    Ok(LoadedInspections { histories, notices })
}

/// Writes output files under a directory and removes everything it wrote
/// if the command fails midway.
pub struct OutputWriter {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputWriter {
    pub fn new(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, content: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, content)?;
        self.written.push(path);
        Ok(())
    }

    pub fn files(&self) -> Vec<String> {
        self.written
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect()
    }

    /// Removes partial outputs after a failure.
    pub fn discard(&mut self) {
        for p in self.written.drain(..) {
            let _ = std::fs::remove_file(p);
        }
    }
}

/// Renders rows of f64 columns as CSV with a header.
pub fn csv_table(header: &str, rows: &[Vec<f64>]) -> String {
    let mut out = String::with_capacity(rows.len() * 24 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}
