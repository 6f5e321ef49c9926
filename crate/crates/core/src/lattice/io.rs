//! Plain-text generator files: a line with `n`, then `n` rows of `n` reals
//! (row-major, rows of `G`). Everything after `#` on a line is ignored.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::Lattice;
use crate::error::{Error, Result};

pub fn parse_lattice(text: &str) -> Result<Lattice> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (line, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty lattice file".into(),
    })?;
    let n: usize = header.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("expected dimension, got `{header}`"),
    })?;
    if n == 0 {
        return Err(Error::Parse {
            line,
            msg: "dimension must be positive".into(),
        });
    }
    let mut data = Vec::with_capacity(n * n);
    for _ in 0..n {
        let (line, row) = lines.next().ok_or(Error::Parse {
            line,
            msg: format!("expected {n} rows"),
        })?;
        let vals: Vec<f64> = row
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad number `{t}`"),
                })
            })
            .collect::<Result<_>>()?;
        if vals.len() != n {
            return Err(Error::Parse {
                line,
                msg: format!("expected {n} entries, got {}", vals.len()),
            });
        }
        data.extend(vals);
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::Parse {
            line,
            msg: "trailing data after generator rows".into(),
        });
    }
    Lattice::new(DMatrix::from_row_slice(n, n, &data))
}

pub fn format_lattice(lattice: &Lattice) -> String {
    let g = lattice.generator();
    let n = lattice.dim();
    let mut out = format!("{n}\n");
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{:?}", g[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn read_lattice(path: impl AsRef<Path>) -> Result<Lattice> {
    parse_lattice(&std::fs::read_to_string(path)?)
}

pub fn write_lattice(lattice: &Lattice, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_lattice(lattice))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::catalog;

    #[test]
    fn parses_comments_and_rows() {
        let text = "# hexagonal\n2\n1 0.5 # first row\n0 0.8660254037844386\n";
        let l = parse_lattice(text).unwrap();
        assert_eq!(l.dim(), 2);
        assert_eq!(l.generator()[(0, 1)], 0.5);
    }

    #[test]
    fn round_trip_is_exact() {
        let e8 = catalog("E8-unimodular").unwrap();
        let back = parse_lattice(&format_lattice(&e8)).unwrap();
        assert_eq!(back.generator(), e8.generator());
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse_lattice("").is_err());
        assert!(parse_lattice("2\n1 0\n").is_err());
        assert!(parse_lattice("2\n1 0 3\n0 1\n").is_err());
        assert!(parse_lattice("2\n1 x\n0 1\n").is_err());
        assert!(parse_lattice("2\n1 0\n0 1\n5\n").is_err());
        assert!(parse_lattice("2\n1 1\n1 1\n").is_err());
    }
}
