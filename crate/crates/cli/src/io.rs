//! CSV input and output for numeric series.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use hsicts::MultiSeries;

use crate::failure::Failure;

/// A numeric table with column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub data: MultiSeries,
}

/// Reads a CSV file with a header row and a purely numeric body.
pub fn read_csv(path: &Path) -> Result<Table, Failure> {
    let file = File::open(path).map_err(|e| Failure::data(format!("cannot open {}: {e}", path.display())))?;
    read_csv_from(file, &path.display().to_string())
}

pub fn read_csv_from<R: Read>(reader: R, name: &str) -> Result<Table, Failure> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let columns: Vec<String> = rdr
        .headers()
        .map_err(|e| Failure::data(format!("{name}: cannot read header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if columns.is_empty() || columns.iter().all(String::is_empty) {
        return Err(Failure::data(format!("{name}: file is empty")));
    }
    let d = columns.len();
    let mut values = Vec::new();
    let mut n = 0;
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Failure::data(format!("{name}: row {row}: {e}")))?;
        if record.len() != d {
            return Err(Failure::data(format!("{name}: row {row} has {} fields, expected {d}", record.len())));
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                Failure::data(format!("{name}: row {row}, column {} ('{}'): '{cell}' is not a finite number", j + 1, columns[j]))
            })?;
            values.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(Failure::data(format!("{name}: no data rows")));
    }
    let data = MultiSeries::new(n, d, values).map_err(|e| Failure::data(format!("{name}: {e}")))?;
    Ok(Table { columns, data })
}

/// Writes a header and one line per row; numbers use the shortest
/// representation that parses back to the same value.
pub fn write_csv<W: Write>(writer: W, columns: &[String], data: &MultiSeries) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(columns)?;
    for row in data.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, columns: &[String], data: &MultiSeries) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| Failure::data(format!("cannot create {}: {e}", path.display())))?;
    write_csv(file, columns, data).map_err(|e| Failure::data(format!("writing {}: {e}", path.display())))
}

/// First differences of logs.
pub fn log_returns(prices: &MultiSeries) -> Result<MultiSeries, Failure> {
    let (n, d) = (prices.nrows(), prices.ncols());
    if n < 2 {
        return Err(Failure::data("log returns need at least two rows"));
    }
    if let Some((i, v)) = prices.as_slice().iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(Failure::data(format!("row {}, column {}: non-positive price {v}", i / d + 1, i % d + 1)));
    }
    let mut out = MultiSeries::zeros(n - 1, d);
    for t in 1..n {
        for j in 0..d {
            out.set(t - 1, j, prices.get(t, j).ln() - prices.get(t - 1, j).ln());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Table, Failure> {
        read_csv_from(s.as_bytes(), "input")
    }

    #[test]
    fn reads_numeric_table() {
        let t = parse("a,b\n1,2\n3,4\n5.5,-6e-3\n").unwrap();
        assert_eq!(t.columns, ["a", "b"]);
        assert_eq!(t.data.nrows(), 3);
        assert_eq!(t.data.get(2, 1), -6e-3);
    }

    #[test]
    fn reports_bad_cells() {
        let err = parse("a,b\n1,2\n3,NA\n").unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("column 2") && err.contains("NA"), "{err}");
        assert!(matches!(parse(""), Err(Failure::Data(_))));
        assert!(matches!(parse("a,b\n"), Err(Failure::Data(_))));
        assert!(parse("a,b\n1,2,3\n").is_err());
    }

    #[test]
    fn roundtrip_is_exact() {
        let data = MultiSeries::new(3, 2, vec![0.1, 1.0 / 3.0, -2.5e-300, 1e300, std::f64::consts::PI, 0.0]).unwrap();
        let cols = vec!["x".to_string(), "y".to_string()];
        let mut buf = Vec::new();
        write_csv(&mut buf, &cols, &data).unwrap();
        let back = read_csv_from(buf.as_slice(), "buf").unwrap();
        assert_eq!(back.data, data);
        assert_eq!(back.columns, cols);
    }

    #[test]
    fn log_return_values() {
        let p = MultiSeries::from_rows(&[[1.0, 100.0, 5.0], [std::f64::consts::E, 101.0, 5.0]]).unwrap();
        let r = log_returns(&p).unwrap();
        assert!((r.get(0, 0) - 1.0).abs() < 1e-15);
        assert!((r.get(0, 1) - 0.009_950_330_853_168_083).abs() < 1e-15);
        assert_eq!(r.get(0, 2), 0.0);
        assert!(log_returns(&MultiSeries::from_rows(&[[1.0], [0.0]]).unwrap()).is_err());
    }
}
