//! Typed tabular data.
//!
//! Columns are stored column-major. A discrete column keeps its ordered level
//! list and one level code per row; a continuous column keeps `f64` values.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("column `{column}` is {actual}, expected {expected}")]
    KindMismatch {
        column: String,
        expected: &'static str,
        actual: &'static str,
    },
    #[error("column `{column}` has {actual} rows, expected {expected}")]
    Ragged {
        column: String,
        expected: usize,
        actual: usize,
    },
    #[error("dataset has no rows")]
    Empty,
    #[error("row {row}, column `{column}`: {message}")]
    InvalidValue {
        row: usize,
        column: String,
        message: String,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// Which domain a dataset was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainLabel {
    Source,
    Target,
    Replicate(u32),
}

impl fmt::Display for DomainLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainLabel::Source => write!(f, "source"),
            DomainLabel::Target => write!(f, "target"),
            DomainLabel::Replicate(r) => write!(f, "replicate-{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    Continuous(Vec<f64>),
    Discrete { levels: Vec<String>, codes: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: ColumnValues,
}

impl Column {
    pub fn continuous(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            values: ColumnValues::Continuous(values),
        }
    }

    pub fn discrete(name: impl Into<String>, levels: Vec<String>, codes: Vec<u32>) -> Self {
        Column {
            name: name.into(),
            values: ColumnValues::Discrete { levels, codes },
        }
    }

    pub fn len(&self) -> usize {
        match &self.values {
            ColumnValues::Continuous(v) => v.len(),
            ColumnValues::Discrete { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.values, ColumnValues::Continuous(_))
    }

    pub fn kind_name(&self) -> &'static str {
        if self.is_continuous() {
            "continuous"
        } else {
            "discrete"
        }
    }

    /// Number of levels; `None` for continuous columns.
    pub fn cardinality(&self) -> Option<usize> {
        match &self.values {
            ColumnValues::Discrete { levels, .. } => Some(levels.len()),
            ColumnValues::Continuous(_) => None,
        }
    }

    /// Cell as text, in the CSV representation.
    pub fn cell(&self, row: usize) -> String {
        match &self.values {
            ColumnValues::Continuous(v) => format_f64(v[row]),
            ColumnValues::Discrete { levels, codes } => levels[codes[row] as usize].clone(),
        }
    }

    fn take(&self, rows: &[usize]) -> Column {
        let values = match &self.values {
            ColumnValues::Continuous(v) => ColumnValues::Continuous(rows.iter().map(|&r| v[r]).collect()),
            ColumnValues::Discrete { levels, codes } => ColumnValues::Discrete {
                levels: levels.clone(),
                codes: rows.iter().map(|&r| codes[r]).collect(),
            },
        };
        Column {
            name: self.name.clone(),
            values,
        }
    }
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    index: HashMap<String, usize>,
    n_rows: usize,
    domain: Option<DomainLabel>,
}

impl Dataset {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map(Column::len).unwrap_or(0);
        if n_rows == 0 {
            return Err(DataError::Empty);
        }
        let mut index = HashMap::with_capacity(columns.len());
        for (i, c) in columns.iter().enumerate() {
            if index.insert(c.name.clone(), i).is_some() {
                return Err(DataError::DuplicateColumn(c.name.clone()));
            }
            if c.len() != n_rows {
                return Err(DataError::Ragged {
                    column: c.name.clone(),
                    expected: n_rows,
                    actual: c.len(),
                });
            }
            if let ColumnValues::Discrete { levels, codes } = &c.values {
                if let Some(row) = codes.iter().position(|&k| k as usize >= levels.len()) {
                    return Err(DataError::InvalidValue {
                        row,
                        column: c.name.clone(),
                        message: format!("level code {} out of range", codes[row]),
                    });
                }
            }
        }
        Ok(Dataset {
            columns,
            index,
            n_rows,
            domain: None,
        })
    }

    pub fn with_domain(mut self, label: DomainLabel) -> Self {
        self.domain = Some(label);
        self
    }

    pub fn domain(&self) -> Option<DomainLabel> {
        self.domain
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        Ok(&self.columns[self.column_index(name)?])
    }

    pub fn continuous(&self, name: &str) -> Result<&[f64]> {
        let c = self.column(name)?;
        match &c.values {
            ColumnValues::Continuous(v) => Ok(v),
            ColumnValues::Discrete { .. } => Err(DataError::KindMismatch {
                column: name.to_string(),
                expected: "continuous",
                actual: "discrete",
            }),
        }
    }

    pub fn discrete(&self, name: &str) -> Result<(&[String], &[u32])> {
        let c = self.column(name)?;
        match &c.values {
            ColumnValues::Discrete { levels, codes } => Ok((levels, codes)),
            ColumnValues::Continuous(_) => Err(DataError::KindMismatch {
                column: name.to_string(),
                expected: "discrete",
                actual: "continuous",
            }),
        }
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<Dataset> {
        let cols = names
            .iter()
            .map(|n| self.column(n).cloned())
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            domain: self.domain,
            ..Dataset::new(cols)?
        })
    }

    pub fn without_column(&self, name: &str) -> Result<Dataset> {
        self.column_index(name)?;
        let keep: Vec<String> = self.names().into_iter().filter(|n| n != name).collect();
        self.select(&keep)
    }

    pub fn take_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let cols = self.columns.iter().map(|c| c.take(rows)).collect();
        Ok(Dataset {
            domain: self.domain,
            ..Dataset::new(cols)?
        })
    }

    /// Appends the rows of `other` restricted to `names`. Discrete level lists
    /// are merged (union, sorted) and codes remapped.
    pub fn stack(&self, other: &Dataset, names: &[String]) -> Result<Dataset> {
        let mut cols = Vec::with_capacity(names.len());
        for name in names {
            let (a, b) = (self.column(name)?, other.column(name)?);
            let values = match (&a.values, &b.values) {
                (ColumnValues::Continuous(x), ColumnValues::Continuous(y)) => {
                    ColumnValues::Continuous(x.iter().chain(y).copied().collect())
                }
                (
                    ColumnValues::Discrete { levels: la, codes: ca },
                    ColumnValues::Discrete { levels: lb, codes: cb },
                ) => {
                    let levels: Vec<String> = la
                        .iter()
                        .chain(lb)
                        .cloned()
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect();
                    let pos = |l: &String| levels.binary_search(l).expect("merged level") as u32;
                    let codes = ca
                        .iter()
                        .map(|&k| pos(&la[k as usize]))
                        .chain(cb.iter().map(|&k| pos(&lb[k as usize])))
                        .collect();
                    ColumnValues::Discrete { levels, codes }
                }
                _ => {
                    return Err(DataError::KindMismatch {
                        column: name.clone(),
                        expected: a.kind_name(),
                        actual: b.kind_name(),
                    })
                }
            };
            cols.push(Column {
                name: name.clone(),
                values,
            });
        }
        Dataset::new(cols)
    }

    /// Parses CSV with a header row. A column is continuous when every cell
    /// parses as a number, unless it is listed in `force_discrete`.
    pub fn from_csv_reader<R: Read>(reader: R, force_discrete: &[String]) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| DataError::Csv(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut raw: Vec<Vec<String>> = vec![Vec::new(); header.len()];
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| DataError::Csv(e.to_string()))?;
            if rec.len() != header.len() {
                return Err(DataError::Csv(format!(
                    "row {} has {} fields, header has {}",
                    row + 1,
                    rec.len(),
                    header.len()
                )));
            }
            for (j, cell) in rec.iter().enumerate() {
                if cell.is_empty() {
                    return Err(DataError::InvalidValue {
                        row,
                        column: header[j].clone(),
                        message: "missing value".into(),
                    });
                }
                raw[j].push(cell.to_string());
            }
        }
        let mut cols = Vec::with_capacity(header.len());
        for (name, cells) in header.into_iter().zip(raw) {
            let numeric: Option<Vec<f64>> = if force_discrete.contains(&name) {
                None
            } else {
                cells.iter().map(|c| c.parse::<f64>().ok()).collect()
            };
            let col = match numeric {
                Some(v) => Column::continuous(name, v),
                None => {
                    let levels: Vec<String> = cells.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
                    let codes = cells
                        .iter()
                        .map(|c| levels.binary_search(c).expect("level present") as u32)
                        .collect();
                    Column::discrete(name, levels, codes)
                }
            };
            cols.push(col);
        }
        Dataset::new(cols)
    }

    pub fn from_csv_path(path: &Path, force_discrete: &[String]) -> Result<Dataset> {
        let file = std::fs::File::open(path)?;
        Dataset::from_csv_reader(std::io::BufReader::new(file), force_discrete)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        writeln!(w, "{}", header.join(","))?;
        let mut line = String::new();
        for r in 0..self.n_rows {
            line.clear();
            for (j, c) in self.columns.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&c.cell(r));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        Dataset::new(vec![
            Column::continuous("x", vec![0.1, -2.5, 1e-7]),
            Column::discrete("g", vec!["a".into(), "b".into()], vec![1, 0, 1]),
        ])
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let d = sample();
        let text = d.to_csv_string();
        assert_eq!(text.lines().next(), Some("x,g"));
        let back = Dataset::from_csv_reader(text.as_bytes(), &[]).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.to_csv_string(), text);
    }

    #[test]
    fn forced_discrete_numeric_column() {
        let d = Dataset::from_csv_reader("a,b\n1,2\n0,3\n".as_bytes(), &["a".to_string()]).unwrap();
        assert_eq!(d.discrete("a").unwrap().0, ["0", "1"]);
        assert_eq!(d.continuous("b").unwrap(), [2.0, 3.0]);
    }

    #[test]
    fn rejects_malformed_inputs() {
        assert!(matches!(
            Dataset::from_csv_reader("a,b\n1\n".as_bytes(), &[]),
            Err(DataError::Csv(_))
        ));
        assert!(matches!(
            Dataset::from_csv_reader("a\n".as_bytes(), &[]),
            Err(DataError::Empty)
        ));
        assert!(matches!(
            Dataset::new(vec![
                Column::continuous("x", vec![1.0]),
                Column::continuous("y", vec![1.0, 2.0])
            ]),
            Err(DataError::Ragged { .. })
        ));
        assert!(matches!(
            Dataset::new(vec![Column::discrete("g", vec!["a".into()], vec![1])]),
            Err(DataError::InvalidValue { .. })
        ));
    }

    #[test]
    fn stack_merges_levels() {
        let a = Dataset::new(vec![Column::discrete("g", vec!["a".into()], vec![0])]).unwrap();
        let b = Dataset::new(vec![Column::discrete("g", vec!["b".into(), "c".into()], vec![1])]).unwrap();
        let s = a.stack(&b, &["g".to_string()]).unwrap();
        let (levels, codes) = s.discrete("g").unwrap();
        assert_eq!(levels, ["a", "b", "c"]);
        assert_eq!(codes, [0, 2]);
    }

    #[test]
    fn kind_accessors_check_types() {
        let d = sample();
        assert!(matches!(d.discrete("x"), Err(DataError::KindMismatch { .. })));
        assert!(matches!(d.continuous("nope"), Err(DataError::UnknownColumn(_))));
    }
}
