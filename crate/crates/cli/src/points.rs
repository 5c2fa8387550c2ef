//! Explicit index sets as CSV: a `dim,cardinality` header, one line with the
//! two values, then one line of coordinates per point. Coordinates are written
//! with 17 significant digits, so a write/read cycle is bit-exact.

use std::fs;
use std::path::Path;

use supremum_core::IndexSet;

use crate::error::{CliError, Result};
use crate::table::format_f64;

pub fn format_points(set: &IndexSet) -> String {
    let mut out = format!("dim,cardinality\n{},{}\n", set.dim(), set.cardinality());
    set.for_each_point(|_, p| {
        let row: Vec<String> = p.iter().map(|&v| format_f64(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    });
    out
}

pub fn parse_points(text: &str) -> std::result::Result<Vec<Vec<f64>>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    if headers.iter().collect::<Vec<_>>() != ["dim", "cardinality"] {
        return Err("first line must be `dim,cardinality`".into());
    }
    let mut records = reader.records();
    let sizes = records
        .next()
        .ok_or("missing dimension line")?
        .map_err(|e| e.to_string())?;
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|_| format!("invalid size `{s}`"));
    if sizes.len() != 2 {
        return Err("dimension line must hold two values".into());
    }
    let dim = parse_usize(&sizes[0])?;
    let card = parse_usize(&sizes[1])?;
    let mut points = Vec::with_capacity(card);
    for (k, rec) in records.enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        if rec.len() != dim {
            return Err(format!("point {k} has {} coordinates, expected {dim}", rec.len()));
        }
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| format!("point {k}: invalid number `{s}`")))
            .collect::<std::result::Result<Vec<f64>, String>>()?;
        points.push(row);
    }
    if points.len() != card {
        return Err(format!("expected {card} points, found {}", points.len()));
    }
    Ok(points)
}

pub fn read_points(path: &Path) -> Result<IndexSet> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let points = parse_points(&text).map_err(|message| CliError::PointsFormat {
        path: path.to_path_buf(),
        message,
    })?;
    IndexSet::explicit(&points).map_err(CliError::module(path.display().to_string()))
}

pub fn write_points(path: &Path, set: &IndexSet) -> Result<()> {
    fs::write(path, format_points(set)).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let t = IndexSet::explicit(&[[0.1, -1.0 / 3.0], [1e-300, 7.0]]).unwrap();
        write_points(&path, &t).unwrap();
        let back = read_points(&path).unwrap();
        assert_eq!(back.to_dense(), t.to_dense());
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_points("dim,card\n1,1\n0\n").is_err());
        assert!(parse_points("dim,cardinality\n2,1\n0\n").is_err());
        assert!(parse_points("dim,cardinality\n1,2\n0\n").is_err());
        assert!(parse_points("dim,cardinality\n1,1\nx\n").is_err());
        assert_eq!(parse_points("dim,cardinality\n2,1\n1,2\n").unwrap(), vec![vec![1.0, 2.0]]);
    }
}
