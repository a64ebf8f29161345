//! Datasets and CSV ingestion/emission.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::numfmt::format_real;

/// Observed outcomes, treatment indicators and covariates of `n` units.
///
/// Construction validates every invariant; a `Dataset` is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    t: Vec<u8>,
    x: Array2<f64>,
    pscore: Option<Vec<f64>>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        y: Vec<f64>,
        t: Vec<f64>,
        x: Array2<f64>,
        pscore: Option<Vec<f64>>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::Validation("dataset has no rows".into()));
        }
        if t.len() != n || x.nrows() != n {
            return Err(Error::Validation(format!(
                "length mismatch: y has {n} rows, t has {}, X has {}",
                t.len(),
                x.nrows()
            )));
        }
        if x.ncols() != feature_names.len() {
            return Err(Error::Validation(format!(
                "X has {} columns but {} feature names were given",
                x.ncols(),
                feature_names.len()
            )));
        }
        for (i, name) in feature_names.iter().enumerate() {
            if feature_names[..i].contains(name) {
                return Err(Error::Validation(format!("duplicate feature name `{name}`")));
            }
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite outcome at row {i}")));
        }
        let mut arms = Vec::with_capacity(n);
        for (i, &ti) in t.iter().enumerate() {
            if ti == 0.0 {
                arms.push(0);
            } else if ti == 1.0 {
                arms.push(1);
            } else {
                return Err(Error::Validation(format!(
                    "treatment value {ti} at row {i} is not 0 or 1"
                )));
            }
        }
        if let Some(((i, j), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite covariate {v} at row {i}, column `{}`",
                feature_names[j]
            )));
        }
        if let Some(ps) = &pscore {
            if ps.len() != n {
                return Err(Error::Validation(format!(
                    "propensity column has {} rows, expected {n}",
                    ps.len()
                )));
            }
            if let Some(i) = ps.iter().position(|&p| !(p > 0.0 && p < 1.0)) {
                return Err(Error::PropensityRange { row: i, value: ps[i] });
            }
        }
        Ok(Self {
            y,
            t: arms,
            x,
            pscore,
            feature_names,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Treatment indicators, each 0 or 1.
    pub fn t(&self) -> &[u8] {
        &self.t
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }

    pub fn pscore(&self) -> Option<&[f64]> {
        self.pscore.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn treated_count(&self) -> usize {
        self.t.iter().filter(|&&t| t == 1).count()
    }

    /// Errors unless both arms contain at least one unit.
    pub fn require_both_arms(&self) -> Result<()> {
        let treated = self.treated_count();
        if treated == 0 || treated == self.n() {
            return Err(Error::Validation(
                "fitting requires both treated and control units".into(),
            ));
        }
        Ok(())
    }

    /// Copy with outcomes replaced.
    pub fn with_outcomes(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(
            y,
            self.t.iter().map(|&t| f64::from(t)).collect(),
            self.x.clone(),
            self.pscore.clone(),
            self.feature_names.clone(),
        )
    }

    /// Copy with arms swapped (`t -> 1 - t`, `pscore -> 1 - pscore`).
    pub fn with_swapped_arms(&self) -> Result<Self> {
        Self::new(
            self.y.clone(),
            self.t.iter().map(|&t| f64::from(1 - t)).collect(),
            self.x.clone(),
            self.pscore.as_ref().map(|ps| ps.iter().map(|p| 1.0 - p).collect()),
            self.feature_names.clone(),
        )
    }

    /// Rows `idx` in the given order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let x = self.x.select(ndarray::Axis(0), idx);
        Self::new(
            idx.iter().map(|&i| self.y[i]).collect(),
            idx.iter().map(|&i| f64::from(self.t[i])).collect(),
            x,
            self.pscore
                .as_ref()
                .map(|ps| idx.iter().map(|&i| ps[i]).collect()),
            self.feature_names.clone(),
        )
    }
}

/// Which CSV columns hold the outcome, treatment, propensity and true effect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub outcome_column: String,
    pub treatment_column: String,
    pub pscore_column: Option<String>,
    pub truth_column: Option<String>,
}

impl ColumnSpec {
    pub fn new(outcome: impl Into<String>, treatment: impl Into<String>) -> Self {
        Self {
            outcome_column: outcome.into(),
            treatment_column: treatment.into(),
            pscore_column: None,
            truth_column: None,
        }
    }

    pub fn with_pscore(mut self, column: impl Into<String>) -> Self {
        self.pscore_column = Some(column.into());
        self
    }

    pub fn with_truth(mut self, column: impl Into<String>) -> Self {
        self.truth_column = Some(column.into());
        self
    }

    fn named(&self) -> Vec<&str> {
        let mut names = vec![self.outcome_column.as_str(), self.treatment_column.as_str()];
        names.extend(self.pscore_column.as_deref());
        names.extend(self.truth_column.as_deref());
        names
    }

    fn validate(&self) -> Result<()> {
        let names = self.named();
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::Validation(format!(
                    "column `{a}` is assigned to more than one role"
                )));
            }
        }
        Ok(())
    }
}

/// A fully numeric CSV table held column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn nrows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.columns[self.index_of(name)?])
    }

    /// Matrix of the named columns in the given order.
    pub fn matrix(&self, names: &[String]) -> Result<Array2<f64>> {
        let idx = names
            .iter()
            .map(|n| self.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        let n = self.nrows();
        Ok(Array2::from_shape_fn((n, idx.len()), |(i, j)| {
            self.columns[idx[j]][i]
        }))
    }
}

/// Reads a header-plus-numeric-rows CSV file.
pub fn read_table(path: impl AsRef<Path>) -> Result<Table> {
    let file = File::open(path.as_ref())?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::Validation("CSV header row is empty".into()));
    }
    for (i, h) in headers.iter().enumerate() {
        if headers[..i].contains(h) {
            return Err(Error::Validation(format!("duplicate CSV column `{h}`")));
        }
    }
    let mut columns = vec![Vec::new(); headers.len()];
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(csv_error)?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: headers[j].clone(),
                message: format!("`{cell}` is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: headers[j].clone(),
                    message: format!("`{cell}` is not finite"),
                });
            }
            columns[j].push(value);
        }
    }
    Ok(Table { headers, columns })
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            row,
            column: String::new(),
            message: format!("{other:?}"),
        },
    }
}

/// Dataset plus the optional true-effect column that was excluded from the
/// covariates.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub truth: Option<Vec<f64>>,
}

/// Loads a dataset; every column not named in `spec` becomes a covariate in
/// header order.
pub fn load_csv(path: impl AsRef<Path>, spec: &ColumnSpec) -> Result<LoadedData> {
    let table = read_table(path)?;
    dataset_from_table(&table, spec)
}

pub fn dataset_from_table(table: &Table, spec: &ColumnSpec) -> Result<LoadedData> {
    spec.validate()?;
    let named = spec.named();
    for name in &named {
        table.index_of(name)?;
    }
    let y = table.column(&spec.outcome_column)?.to_vec();
    let t = table.column(&spec.treatment_column)?.to_vec();
    if let Some(i) = t.iter().position(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Validation(format!(
            "treatment value {} at row {} is not 0 or 1",
            t[i],
            i + 1
        )));
    }
    let pscore = match &spec.pscore_column {
        Some(c) => {
            let ps = table.column(c)?.to_vec();
            if let Some(i) = ps.iter().position(|&p| !(p > 0.0 && p < 1.0)) {
                return Err(Error::PropensityRange {
                    row: i + 1,
                    value: ps[i],
                });
            }
            Some(ps)
        }
        None => None,
    };
    let truth = match &spec.truth_column {
        Some(c) => Some(table.column(c)?.to_vec()),
        None => None,
    };
    let feature_names: Vec<String> = table
        .headers
        .iter()
        .filter(|h| !named.contains(&h.as_str()))
        .cloned()
        .collect();
    let x = table.matrix(&feature_names)?;
    let dataset = Dataset::new(y, t, x, pscore, feature_names)?;
    Ok(LoadedData { dataset, truth })
}

/// Writes named columns with a header row; reals use 17 significant digits.
pub fn write_csv(path: impl AsRef<Path>, columns: &[(&str, &[f64])]) -> Result<()> {
    if columns.is_empty() {
        return Err(Error::Validation("no columns to write".into()));
    }
    let n = columns[0].1.len();
    if let Some((name, col)) = columns.iter().find(|(_, c)| c.len() != n) {
        return Err(Error::Validation(format!(
            "column `{name}` has {} values, expected {n}",
            col.len()
        )));
    }
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    let header: Vec<&str> = columns.iter().map(|(name, _)| *name).collect();
    writeln!(out, "{}", header.join(","))?;
    let mut line = String::new();
    for i in 0..n {
        line.clear();
        for (j, (_, col)) in columns.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format_real(col[i]));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_file(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_covariates_in_header_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "d.csv",
            "y,t,x1,x2\n1.0,1,0.5,0\n2.0,0,0.1,1\n3.5,1,-1,1\n0,0,2,0\n",
        );
        let loaded = load_csv(&path, &ColumnSpec::new("y", "t")).unwrap();
        let ds = loaded.dataset;
        assert_eq!(ds.n(), 4);
        assert_eq!(ds.p(), 2);
        assert_eq!(ds.feature_names(), ["x1", "x2"]);
        assert_eq!(ds.t(), [1, 0, 1, 0]);
        assert_eq!(ds.x()[[2, 0]], -1.0);
        assert!(loaded.truth.is_none());
    }

    #[test]
    fn crlf_and_truth_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "d.csv",
            "x1,y,tau,t,ps\r\n1,2,3,1,0.5\r\n4,5,6,0,0.25\r\n",
        );
        let spec = ColumnSpec::new("y", "t").with_truth("tau").with_pscore("ps");
        let loaded = load_csv(&path, &spec).unwrap();
        assert_eq!(loaded.truth.as_deref(), Some(&[3.0, 6.0][..]));
        assert_eq!(loaded.dataset.pscore(), Some(&[0.5, 0.25][..]));
        assert_eq!(loaded.dataset.feature_names(), ["x1"]);
    }

    #[test]
    fn treatment_outside_binary_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "d.csv", "y,t,x1\n1,0,0\n1,2,0\n");
        let err = load_csv(&path, &ColumnSpec::new("y", "t")).unwrap_err();
        match err {
            Error::Validation(msg) => assert!(msg.contains("row 2"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn absent_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "d.csv", "y,t,x1\n1,0,0\n");
        let err = load_csv(&path, &ColumnSpec::new("y", "t").with_pscore("w")).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "w"));
    }

    #[test]
    fn non_numeric_cell_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "d.csv", "y,t,x1\n1,0,0\n1,1,abc\n");
        match load_csv(&path, &ColumnSpec::new("y", "t")).unwrap_err() {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "x1");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_cell_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "d.csv", "y,t,x1\n1,0,\n");
        assert!(matches!(
            load_csv(&path, &ColumnSpec::new("y", "t")),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn pscore_out_of_range_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "d.csv", "y,t,p,x1\n1,0,0.5,0\n1,1,1.0,0\n");
        let spec = ColumnSpec::new("y", "t").with_pscore("p");
        assert!(matches!(
            load_csv(&path, &spec),
            Err(Error::PropensityRange { row: 2, .. })
        ));
    }

    #[test]
    fn roles_must_be_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "d.csv", "y,t,x1\n1,0,0\n");
        assert!(load_csv(&path, &ColumnSpec::new("y", "y")).is_err());
    }

    #[test]
    fn write_single_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tau.csv");
        write_csv(&path, &[("tau", &[1.0, 2.0])]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "tau\n1\n2\n");
    }

    #[test]
    fn write_rejects_empty_and_ragged() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        assert!(write_csv(&path, &[]).is_err());
        assert!(write_csv(&path, &[("a", &[1.0]), ("b", &[1.0, 2.0])]).is_err());
    }
}
