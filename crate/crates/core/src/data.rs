//! Tabular ingestion: role tagging, one-hot encoding, standardization and
//! train/holdout splitting.
//!
//! Every categorical column is expanded into one 0/1 dummy per level, with
//! levels sorted lexicographically. Dummy columns are named `column=level`.
//! A categorical target must have exactly two levels; the lexicographically
//! smaller one is encoded as 0.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Target,
    Feature,
    Sensitive,
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Numeric,
    Categorical,
}

/// One schema entry: either a bare role string or `{"role": .., "kind": ..}`
/// when the column kind must be forced (e.g. integer-coded categories).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnSchema {
    Role(Role),
    Detailed { role: Role, kind: Option<Kind> },
}

impl ColumnSchema {
    pub fn role(&self) -> Role {
        match self {
            ColumnSchema::Role(r) => *r,
            ColumnSchema::Detailed { role, .. } => *role,
        }
    }

    pub fn kind(&self) -> Option<Kind> {
        match self {
            ColumnSchema::Role(_) => None,
            ColumnSchema::Detailed { kind, .. } => *kind,
        }
    }
}

/// Column name to role assignment. Header columns absent from the schema are
/// ignored.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema {
    pub columns: BTreeMap<String, ColumnSchema>,
}

impl Schema {
    pub fn from_roles<'a>(roles: impl IntoIterator<Item = (&'a str, Role)>) -> Self {
        Schema {
            columns: roles
                .into_iter()
                .map(|(n, r)| (n.to_string(), ColumnSchema::Role(r)))
                .collect(),
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Drop rows with missing cells instead of failing.
    pub drop_missing: bool,
}

/// An encoded column. Dummy columns carry the categorical level they indicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub role: Role,
    /// Name of the original (pre-encoding) column.
    pub source: String,
    pub level: Option<String>,
    pub values: Vec<f64>,
}

impl Column {
    pub fn numeric(name: impl Into<String>, role: Role, values: Vec<f64>) -> Self {
        let name = name.into();
        Column {
            source: name.clone(),
            name,
            role,
            level: None,
            values,
        }
    }

    pub fn is_dummy(&self) -> bool {
        self.level.is_some()
    }
}

/// Column-major table of finite values with role-tagged columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    row_ids: Vec<usize>,
    columns: Vec<Column>,
    encoding: BTreeMap<String, Vec<String>>,
    target_levels: Option<Vec<String>>,
    dropped_rows: usize,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "?")
}

impl Dataset {
    /// Builds a dataset from already-encoded columns; row ids are `0..n`.
    pub fn from_columns(columns: Vec<Column>) -> Result<Self> {
        let n = columns.first().map_or(0, |c| c.values.len());
        let mut encoding: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for c in &columns {
            if let Some(level) = &c.level {
                encoding.entry(c.source.clone()).or_default().push(level.clone());
            }
        }
        let d = Dataset {
            row_ids: (0..n).collect(),
            columns,
            encoding,
            target_levels: None,
            dropped_rows: 0,
        };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        let n = self.row_ids.len();
        if n == 0 {
            return Err(Error::EmptyTable);
        }
        for c in &self.columns {
            if c.values.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: c.values.len(),
                });
            }
            if c.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("column `{}`", c.name)));
            }
        }
        let targets = self
            .columns
            .iter()
            .filter(|c| c.role == Role::Target)
            .count();
        if targets != 1 {
            return Err(Error::InvalidSchema(format!(
                "exactly one target column required, found {targets}"
            )));
        }
        for role in [Role::Feature, Role::Sensitive] {
            if !self.columns.iter().any(|c| c.role == role) {
                return Err(Error::InvalidSchema(format!(
                    "at least one {role:?} column required"
                )));
            }
        }
        Ok(())
    }

    /// Reads a comma-delimited UTF-8 file with a header row.
    pub fn load_csv(path: impl AsRef<Path>, schema: &Schema, options: &LoadOptions) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, schema, options)
    }

    pub fn from_reader<R: std::io::Read>(
        reader: R,
        schema: &Schema,
        options: &LoadOptions,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        for name in schema.columns.keys() {
            if !header.contains(name) {
                return Err(Error::UnknownColumn(name.clone()));
            }
        }

        // (header position, name, schema entry) for every non-ignored column
        let used: Vec<(usize, &str, &ColumnSchema)> = header
            .iter()
            .enumerate()
            .filter_map(|(i, h)| {
                schema
                    .columns
                    .get(h)
                    .filter(|s| s.role() != Role::Ignored)
                    .map(|s| (i, h.as_str(), s))
            })
            .collect();

        let mut cells: Vec<Vec<String>> = vec![Vec::new(); used.len()];
        let mut row_ids = Vec::new();
        let mut missing_rows = 0usize;
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let missing = used
                .iter()
                .any(|(i, _, _)| record.get(*i).is_none_or(is_missing));
            if missing {
                missing_rows += 1;
                continue;
            }
            for (slot, (i, _, _)) in cells.iter_mut().zip(&used) {
                slot.push(record[*i].to_string());
            }
            row_ids.push(row);
        }
        if missing_rows > 0 && !options.drop_missing {
            return Err(Error::MissingValues { rows: missing_rows });
        }
        if row_ids.is_empty() {
            return Err(Error::EmptyTable);
        }
        if missing_rows > 0 {
            log::warn!("dropped {missing_rows} row(s) with missing values");
        }

        let mut columns = Vec::new();
        let mut encoding = BTreeMap::new();
        let mut target_levels = None;
        for ((_, name, entry), raw) in used.into_iter().zip(cells) {
            let role = entry.role();
            let parsed: Option<Vec<f64>> = raw
                .iter()
                .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect();
            let kind = entry.kind().unwrap_or(if parsed.is_some() {
                Kind::Numeric
            } else {
                Kind::Categorical
            });
            match kind {
                Kind::Numeric => {
                    let values = match parsed {
                        Some(v) => v,
                        None => {
                            let (row, value) = raw
                                .iter()
                                .enumerate()
                                .find(|(_, s)| s.parse::<f64>().map_or(true, |v| !v.is_finite()))
                                .map(|(r, s)| (row_ids[r], s.clone()))
                                .unwrap_or_default();
                            return Err(Error::NotNumeric {
                                column: name.to_string(),
                                row,
                                value,
                            });
                        }
                    };
                    columns.push(Column::numeric(name, role, values));
                }
                Kind::Categorical => {
                    let levels: Vec<String> = raw
                        .iter()
                        .cloned()
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect();
                    if role == Role::Target {
                        if levels.len() != 2 {
                            return Err(Error::TargetLevels {
                                column: name.to_string(),
                                levels: levels.len(),
                            });
                        }
                        let values = raw
                            .iter()
                            .map(|s| if *s == levels[0] { 0.0 } else { 1.0 })
                            .collect();
                        columns.push(Column::numeric(name, role, values));
                        target_levels = Some(levels);
                        continue;
                    }
                    for level in &levels {
                        let values = raw
                            .iter()
                            .map(|s| if s == level { 1.0 } else { 0.0 })
                            .collect();
                        columns.push(Column {
                            name: format!("{name}={level}"),
                            role,
                            source: name.to_string(),
                            level: Some(level.clone()),
                            values,
                        });
                    }
                    encoding.insert(name.to_string(), levels);
                }
            }
        }

        let d = Dataset {
            row_ids,
            columns,
            encoding,
            target_levels,
            dropped_rows: missing_rows,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    /// Original 0-based data-row index of every row.
    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn columns_with_role(&self, role: Role) -> impl Iterator<Item = &Column> {
        self.columns.iter().filter(move |c| c.role == role)
    }

    pub fn names_with_role(&self, role: Role) -> Vec<String> {
        self.columns_with_role(role).map(|c| c.name.clone()).collect()
    }

    pub fn target_column(&self) -> &Column {
        self.columns
            .iter()
            .find(|c| c.role == Role::Target)
            .expect("validated dataset has a target")
    }

    pub fn target(&self) -> &[f64] {
        &self.target_column().values
    }

    /// Original level names of a binary categorical target, `[level0, level1]`.
    pub fn target_levels(&self) -> Option<&[String]> {
        self.target_levels.as_deref()
    }

    /// Categorical column name to its ordered levels.
    pub fn encoding_map(&self) -> &BTreeMap<String, Vec<String>> {
        &self.encoding
    }

    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    /// Recovers the original level of categorical column `source` at `row`.
    pub fn decode_level(&self, source: &str, row: usize) -> Option<&str> {
        self.columns
            .iter()
            .filter(|c| c.source == source && c.is_dummy())
            .find(|c| c.values[row] == 1.0)
            .and_then(|c| c.level.as_deref())
    }

    /// Subset of rows by position, preserving the given order.
    pub fn select_rows(&self, positions: &[usize]) -> Dataset {
        Dataset {
            row_ids: positions.iter().map(|&p| self.row_ids[p]).collect(),
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    values: positions.iter().map(|&p| c.values[p]).collect(),
                    ..c.clone()
                })
                .collect(),
            encoding: self.encoding.clone(),
            target_levels: self.target_levels.clone(),
            dropped_rows: self.dropped_rows,
        }
    }

    /// Replaces the values of the named column.
    pub fn with_column_values(mut self, name: &str, values: Vec<f64>) -> Result<Dataset> {
        let n = self.n_rows();
        if values.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: values.len(),
            });
        }
        let col = self
            .columns
            .iter_mut()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::SchemaMismatch(format!("no column `{name}`")))?;
        col.values = values;
        self.validate()?;
        Ok(self)
    }

    /// Position lookup for a set of column names.
    pub(crate) fn column_positions(&self, names: &[String]) -> Result<Vec<usize>> {
        let index: HashMap<&str, usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.as_str(), i))
            .collect();
        names
            .iter()
            .map(|n| {
                index
                    .get(n.as_str())
                    .copied()
                    .ok_or_else(|| Error::SchemaMismatch(format!("missing column `{n}`")))
            })
            .collect()
    }

    /// Writes the encoded table (row id first) as CSV.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_string()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        w.write_record(&header)?;
        for r in 0..self.n_rows() {
            let mut rec = vec![self.row_ids[r].to_string()];
            rec.extend(self.columns.iter().map(|c| c.values[r].to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Per-column z-score parameters fit on training rows. Dummy columns are
/// passed through unchanged (mean 0, scale 1) so they enter distances as 0/1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardizer {
    /// Requires at least two rows; a constant numeric column is an error.
    pub fn fit(d: &Dataset, columns: &[String]) -> Result<Self> {
        let n = d.n_rows();
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "standardizer needs at least 2 rows, got {n}"
            )));
        }
        let positions = d.column_positions(columns)?;
        let mut means = Vec::with_capacity(columns.len());
        let mut sds = Vec::with_capacity(columns.len());
        for &p in &positions {
            let col = &d.columns()[p];
            if col.is_dummy() {
                means.push(0.0);
                sds.push(1.0);
                continue;
            }
            let mean = col.values.iter().sum::<f64>() / n as f64;
            let ss: f64 = col.values.iter().map(|v| (v - mean) * (v - mean)).sum();
            let sd = (ss / (n - 1) as f64).sqrt();
            if !(sd > 0.0) || sd <= 1e-12 * mean.abs() {
                return Err(Error::ConstantColumn(col.name.clone()));
            }
            means.push(mean);
            sds.push(sd);
        }
        Ok(Standardizer {
            names: columns.to_vec(),
            means,
            sds,
        })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    /// Standardized rows of `d`, row-major with `dim()` entries per row.
    pub fn transform(&self, d: &Dataset) -> Result<Vec<f64>> {
        let positions = d.column_positions(&self.names)?;
        let n = d.n_rows();
        let dim = self.dim();
        let mut out = vec![0.0; n * dim];
        for (j, &p) in positions.iter().enumerate() {
            let (m, s) = (self.means[j], self.sds[j]);
            for (r, v) in d.columns()[p].values.iter().enumerate() {
                out[r * dim + j] = (v - m) / s;
            }
        }
        Ok(out)
    }

    /// Inverts `transform` on a row-major buffer.
    pub fn inverse(&self, standardized: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        standardized
            .iter()
            .enumerate()
            .map(|(i, z)| z * self.sds[i % dim] + self.means[i % dim])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub holdout_fraction: f64,
    pub n_replicates: usize,
    pub base_seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan {
            holdout_fraction: 0.2,
            n_replicates: 25,
            base_seed: 0,
        }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::InvalidSplit(format!(
                "holdout fraction {} outside (0,1)",
                self.holdout_fraction
            )));
        }
        if self.n_replicates == 0 {
            return Err(Error::InvalidSplit("n_replicates must be >= 1".into()));
        }
        Ok(())
    }

    /// Row positions `(train, holdout)` for a replicate, each in ascending order.
    /// Splits are unstratified.
    pub fn partition(&self, n_rows: usize, replicate: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        self.validate()?;
        if replicate >= self.n_replicates {
            return Err(Error::InvalidSplit(format!(
                "replicate {replicate} >= n_replicates {}",
                self.n_replicates
            )));
        }
        let holdout = (self.holdout_fraction * n_rows as f64).round() as usize;
        if holdout == 0 || holdout >= n_rows {
            return Err(Error::InvalidSplit(format!(
                "holdout size {holdout} of {n_rows} rows leaves an empty side"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed.wrapping_add(replicate as u64));
        let mut order: Vec<usize> = (0..n_rows).collect();
        order.shuffle(&mut rng);
        let mut test = order[..holdout].to_vec();
        let mut train = order[holdout..].to_vec();
        test.sort_unstable();
        train.sort_unstable();
        Ok((train, test))
    }
}

/// Train/holdout datasets for one replicate of `plan`.
pub fn split(d: &Dataset, plan: &SplitPlan, replicate: usize) -> Result<(Dataset, Dataset)> {
    let (train, holdout) = plan.partition(d.n_rows(), replicate)?;
    Ok((d.select_rows(&train), d.select_rows(&holdout)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(entries: &[(&str, Role)]) -> Schema {
        Schema::from_roles(entries.iter().copied())
    }

    fn load(text: &str, s: &Schema) -> Result<Dataset> {
        Dataset::from_reader(text.as_bytes(), s, &LoadOptions::default())
    }

    #[test]
    fn encodes_categorical_sensitive() {
        let s = schema(&[("y", Role::Target), ("x1", Role::Feature), ("s", Role::Sensitive)]);
        let d = load("y,x1,s\n1,2,a\n2,3,b\n3,5,a\n", &s).unwrap();
        let names: Vec<_> = d.columns().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["y", "x1", "s=a", "s=b"]);
        assert_eq!(d.column("s=a").unwrap().values, vec![1.0, 0.0, 1.0]);
        assert_eq!(d.column("s=b").unwrap().values, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn levels_sorted_lexicographically() {
        let s = schema(&[("y", Role::Target), ("x", Role::Feature), ("s", Role::Sensitive)]);
        let d = load("y,x,s\n1,1,b\n2,2,a\n", &s).unwrap();
        assert_eq!(d.encoding_map()["s"], vec!["a", "b"]);
        assert_eq!(d.names_with_role(Role::Sensitive), vec!["s=a", "s=b"]);
    }

    #[test]
    fn five_level_sensitive_gives_five_dummies() {
        let s = schema(&[
            ("lsat", Role::Target),
            ("income", Role::Feature),
            ("gpa", Role::Feature),
            ("cluster", Role::Feature),
            ("race", Role::Sensitive),
        ]);
        let text = "lsat,income,gpa,cluster,race\n\
                    35,1,2.7,1,Black\n40,3,3.1,2,White\n38,2,3.0,1,Asian\n\
                    33,1,2.9,3,Hispanic\n37,5,3.4,1,Other\n";
        let d = load(text, &s).unwrap();
        assert_eq!(d.columns_with_role(Role::Sensitive).count(), 5);
        for r in 0..d.n_rows() {
            let sum: f64 = d.columns_with_role(Role::Sensitive).map(|c| c.values[r]).sum();
            assert_eq!(sum, 1.0);
        }
    }

    #[test]
    fn binary_categorical_target() {
        let s = schema(&[("y", Role::Target), ("x", Role::Feature), ("s", Role::Sensitive)]);
        let d = load("y,x,s\nyes,1,0\nno,2,1\nyes,3,0\n", &s).unwrap();
        assert_eq!(d.target(), &[1.0, 0.0, 1.0]);
        assert_eq!(d.target_levels().unwrap(), &["no", "yes"]);
        let err = load("y,x,s\na,1,0\nb,2,1\nc,3,0\n", &s).unwrap_err();
        assert!(matches!(err, Error::TargetLevels { levels: 3, .. }));
    }

    #[test]
    fn ingestion_errors() {
        let s = schema(&[("y", Role::Target), ("x", Role::Feature), ("zz", Role::Sensitive)]);
        assert!(matches!(load("y,x,s\n1,2,3\n", &s), Err(Error::UnknownColumn(c)) if c == "zz"));
        let s = schema(&[("y", Role::Target), ("x", Role::Feature), ("s", Role::Sensitive)]);
        assert!(matches!(load("y,x,s\n", &s), Err(Error::EmptyTable)));
        let missing = Dataset::load_csv("/nonexistent/file.csv", &s, &LoadOptions::default());
        assert!(matches!(missing, Err(Error::Io { .. })));
    }

    #[test]
    fn missing_values_rejected_or_dropped() {
        let s = schema(&[("y", Role::Target), ("x", Role::Feature), ("s", Role::Sensitive)]);
        let text = "y,x,s\n1,2,a\n2,,b\n3,4,NA\n5,6,b\n";
        assert!(matches!(load(text, &s), Err(Error::MissingValues { rows: 2 })));
        let d = Dataset::from_reader(
            text.as_bytes(),
            &s,
            &LoadOptions { drop_missing: true },
        )
        .unwrap();
        assert_eq!(d.n_rows(), 2);
        assert_eq!(d.row_ids(), &[0, 3]);
        assert_eq!(d.dropped_rows(), 2);
    }

    #[test]
    fn forced_categorical_kind() {
        let json = r#"{"y":"target","q":{"role":"feature","kind":"categorical"},"s":"sensitive"}"#;
        let s: Schema = serde_json::from_str(json).unwrap();
        let d = load("y,q,s\n1,1,0\n2,2,1\n3,1,1\n", &s).unwrap();
        assert_eq!(d.names_with_role(Role::Feature), vec!["q=1", "q=2"]);
    }

    #[test]
    fn decode_roundtrip() {
        let s = schema(&[("y", Role::Target), ("x", Role::Feature), ("s", Role::Sensitive)]);
        let levels = ["m", "f", "x", "f", "m"];
        let mut text = String::from("y,x,s\n");
        for (i, l) in levels.iter().enumerate() {
            text.push_str(&format!("{i},{i},{l}\n"));
        }
        let d = load(&text, &s).unwrap();
        for (r, l) in levels.iter().enumerate() {
            assert_eq!(d.decode_level("s", r), Some(*l));
        }
    }

    #[test]
    fn standardizer_hand_values() {
        let d = Dataset::from_columns(vec![
            Column::numeric("y", Role::Target, vec![0.0, 0.0, 1.0]),
            Column::numeric("x", Role::Feature, vec![1.0, 2.0, 3.0]),
            Column::numeric("c", Role::Feature, vec![5.0, 5.0, 5.0]),
            Column::numeric("s", Role::Sensitive, vec![0.0, 1.0, 0.0]),
        ])
        .unwrap();
        let st = Standardizer::fit(&d, &["x".to_string()]).unwrap();
        assert_eq!(st.means, vec![2.0]);
        assert_eq!(st.sds, vec![1.0]);
        let err = Standardizer::fit(&d, &["c".to_string()]).unwrap_err();
        assert!(matches!(err, Error::ConstantColumn(c) if c == "c"));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let plan = SplitPlan {
            holdout_fraction: 0.2,
            n_replicates: 3,
            base_seed: 11,
        };
        let (tr, te) = plan.partition(10, 0).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        assert!(te.iter().all(|i| !tr.contains(i)));
        assert_eq!(plan.partition(10, 0).unwrap(), (tr.clone(), te.clone()));
        assert_ne!(plan.partition(10, 1).unwrap().1, te);
        assert!(plan.partition(10, 3).is_err());
        let tiny = SplitPlan {
            holdout_fraction: 0.01,
            ..plan
        };
        assert!(matches!(tiny.partition(10, 0), Err(Error::InvalidSplit(_))));
    }
}
