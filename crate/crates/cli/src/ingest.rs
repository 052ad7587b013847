//! CSV ingestion: a header row, one observation per row, and an optional label
//! column that splits the rows into groups.

use std::path::Path;

use hdtest::DataMatrix;
use nalgebra::DMatrix;

use crate::CliError;

/// Numeric columns of one file, in header order, with the data rows grouped.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub columns: Vec<String>,
    /// Group labels in order of first appearance; a single empty label when no
    /// group column was requested.
    pub labels: Vec<String>,
    pub groups: Vec<DataMatrix>,
}

/// Reads `path`. With `group` set, the named column holds group labels and
/// every other column must be numeric.
pub fn read_csv(path: &Path, group: Option<&str>) -> Result<Dataset, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_csv(file, &path.display().to_string(), group)
}

/// Parses CSV text from any reader; `source` names it in error messages.
pub fn parse_csv<R: std::io::Read>(reader: R, source: &str, group: Option<&str>) -> Result<Dataset, CliError> {
    let (columns, labels, rows) = parse_rows(reader, source, group)?;
    let groups = rows
        .iter()
        .map(|r| DataMatrix::new(to_matrix(r, columns.len())).map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset { columns, labels, groups })
}

fn to_matrix(rows: &[Vec<f64>], p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j])
}

type Rows = Vec<Vec<f64>>;

/// Column names, group labels and the rows of each group.
type Parsed = (Vec<String>, Vec<String>, Vec<Rows>);

fn parse_rows<R: std::io::Read>(reader: R, source: &str, group: Option<&str>) -> Result<Parsed, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers =
        rdr.headers().map_err(|e| parse_error(source, &e))?.iter().map(|h| h.trim().to_string()).collect::<Vec<_>>();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(CliError::Parse(format!("{source}: missing header row")));
    }
    let group_idx = match group {
        None => None,
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CliError::Parse(format!("{source}: group column '{name}' not found in header")))?,
        ),
    };
    let columns: Vec<String> =
        headers.iter().enumerate().filter(|(i, _)| Some(*i) != group_idx).map(|(_, h)| h.clone()).collect();
    if columns.is_empty() {
        return Err(CliError::Parse(format!("{source}: no numeric columns")));
    }
    let mut labels: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<Vec<f64>>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_error(source, &e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let label = group_idx.map(|g| rec[g].trim().to_string()).unwrap_or_default();
        let mut row = Vec::with_capacity(columns.len());
        for (i, cell) in rec.iter().enumerate() {
            if Some(i) == group_idx {
                continue;
            }
            let v: f64 = cell.trim().parse().map_err(|_| {
                CliError::Parse(format!("{source}: line {line}, column '{}': '{cell}' is not a number", headers[i]))
            })?;
            if !v.is_finite() {
                return Err(CliError::Parse(format!(
                    "{source}: line {line}, column '{}': value {cell} is not finite",
                    headers[i]
                )));
            }
            row.push(v);
        }
        let slot = match labels.iter().position(|l| *l == label) {
            Some(s) => s,
            None => {
                labels.push(label);
                rows.push(Vec::new());
                labels.len() - 1
            }
        };
        rows[slot].push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Parse(format!("{source}: no data rows")));
    }
    Ok((columns, labels, rows))
}

fn read_plain(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let (columns, _, rows) = parse_rows(file, &path.display().to_string(), None)?;
    Ok(to_matrix(&rows[0], columns.len()))
}

fn parse_error(source: &str, e: &csv::Error) -> CliError {
    let line = e.position().map(|p| p.line());
    match (e.kind(), line) {
        (csv::ErrorKind::UnequalLengths { expected_len, len, .. }, Some(l)) => {
            CliError::Parse(format!("{source}: line {l}: row has {len} fields, expected {expected_len}"))
        }
        (_, Some(l)) => CliError::Parse(format!("{source}: line {l}: {e}")),
        (_, None) => CliError::Parse(format!("{source}: {e}")),
    }
}

/// Writes a matrix as CSV with the given header, every value printed with
/// 17 significant digits so that reading it back is lossless.
pub fn write_csv(columns: &[String], m: &DMatrix<f64>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns).expect("writing to memory cannot fail");
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        w.write_record(&row).expect("writing to memory cannot fail");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV output is UTF-8")
}

/// Reads a vector (μ0) from a CSV file with a header and a single data row,
/// or from one value per row in a single column.
pub fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let m = read_plain(path)?;
    if m.nrows() == 1 {
        Ok(m.row(0).iter().copied().collect())
    } else if m.ncols() == 1 {
        Ok(m.column(0).iter().copied().collect())
    } else {
        Err(CliError::Parse(format!(
            "{}: a vector needs one row or one column, got {}×{}",
            path.display(),
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Reads a square matrix (a known precision matrix) with a header row.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    read_plain(path)
}
