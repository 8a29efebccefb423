//! CSV readers and writers for spaces and distributions.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::{Distribution, FiniteMetricSpace, PointMetric};
use crate::error::{Result, WitError};

fn read_rows<R: Read>(reader: R) -> Result<(Option<Vec<String>>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut header = None;
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => header = Some(record.iter().map(str::to_owned).collect()),
            Err(e) => return Err(WitError::Parse(format!("row {}: {e}", i + 1))),
        }
    }
    Ok((header, rows))
}

/// Reads a square distance matrix. A non-numeric first row is taken as point labels.
pub fn read_space_csv(path: impl AsRef<Path>) -> Result<FiniteMetricSpace> {
    let (header, rows) = read_rows(File::open(path)?)?;
    let space = FiniteMetricSpace::from_matrix(rows)?;
    match header {
        Some(labels) => space.with_labels(labels),
        None => Ok(space),
    }
}

/// Reads rows of coordinates and builds the distance matrix under `metric`.
pub fn read_points(path: impl AsRef<Path>, metric: PointMetric) -> Result<FiniteMetricSpace> {
    let (_, rows) = read_rows(File::open(path)?)?;
    FiniteMetricSpace::from_points(&rows, metric)
}

/// Single column of masses, one per point.
pub fn read_distribution_csv(
    path: impl AsRef<Path>,
    space: Arc<FiniteMetricSpace>,
) -> Result<Distribution> {
    let (_, rows) = read_rows(File::open(path)?)?;
    let mut mass = Vec::with_capacity(rows.len());
    for (i, r) in rows.into_iter().enumerate() {
        match r.as_slice() {
            [m] => mass.push(*m),
            _ => return Err(WitError::Parse(format!("row {}: expected one column", i + 1))),
        }
    }
    Distribution::new(space, mass)
}

pub fn write_space_csv(space: &FiniteMetricSpace, mut out: impl Write) -> Result<()> {
    if let Some(labels) = space.labels() {
        writeln!(out, "{}", labels.join(","))?;
    }
    for a in 0..space.len() {
        let row: Vec<String> = (0..space.len()).map(|b| format!("{}", space.dist(a, b))).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_distribution_csv(dist: &Distribution, mut out: impl Write) -> Result<()> {
    for m in dist.mass() {
        writeln!(out, "{m}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_with_header_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "a,b,c\n0,1,2\n1,0,1\n2,1,0\n").unwrap();
        let s = read_space_csv(&path).unwrap();
        assert_eq!(s.labels().unwrap(), &["a", "b", "c"]);
        assert_eq!(s.diameter(), 2.0);
        let mut buf = Vec::new();
        write_space_csv(&s, &mut buf).unwrap();
        std::fs::write(&path, &buf).unwrap();
        let again = read_space_csv(&path).unwrap();
        assert_eq!(again.to_matrix(), s.to_matrix());
    }

    #[test]
    fn points_and_distribution() {
        let dir = tempfile::tempdir().unwrap();
        let pts = dir.path().join("p.csv");
        std::fs::write(&pts, "0,0\n1,0\n1,1\n").unwrap();
        let s = Arc::new(read_points(&pts, PointMetric::Linf).unwrap());
        assert_eq!(s.dist(0, 2), 1.0);
        let e = read_points(&pts, PointMetric::Euclidean).unwrap();
        assert!((e.dist(0, 2) - 2f64.sqrt()).abs() < 1e-15);

        let d = dir.path().join("d.csv");
        std::fs::write(&d, "mass\n0.5\n0.25\n0.25\n").unwrap();
        let p = read_distribution_csv(&d, s.clone()).unwrap();
        assert_eq!(p.mass(), &[0.5, 0.25, 0.25]);
        std::fs::write(&d, "0.5\n0.25\n").unwrap();
        assert!(read_distribution_csv(&d, s).is_err());
    }
}
