//! Matrix text format: a line with the dimension `d`, then `d` rows of `d`
//! whitespace-separated `re,im` entries.

use super::ComplexMatrix;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fmt::Write as _;

pub fn write_matrix(m: &ComplexMatrix) -> String {
    let d = m.dim();
    let mut out = format!("{d}\n");
    for i in 0..d {
        let row: Vec<String> = (0..d)
            .map(|j| {
                let z = m.get(i, j);
                format!("{:.16e},{:.16e}", z.re, z.im)
            })
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

fn parse_entry(tok: &str) -> Result<Complex64> {
    let (re, im) = tok
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("entry `{tok}` is not of the form re,im")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad number `{s}`: {e}")))
    };
    Ok(Complex64::new(parse(re)?, parse(im)?))
}

pub fn read_matrix(text: &str) -> Result<ComplexMatrix> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let d: usize = header
        .parse()
        .map_err(|_| Error::Parse(format!("bad dimension line `{header}`")))?;
    let mut entries = Vec::with_capacity(d * d);
    for (i, line) in lines.enumerate() {
        let row: Vec<Complex64> = line.split_whitespace().map(parse_entry).collect::<Result<_>>()?;
        if row.len() != d {
            return Err(Error::Parse(format!("row {i} has {} entries, expected {d}", row.len())));
        }
        entries.extend(row);
    }
    ComplexMatrix::from_row_major(d, &entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_layout() {
        let m = ComplexMatrix::from_row_major(
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, -2.5),
                Complex64::new(3.0, 1.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        let text = write_matrix(&m);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("2"));
        assert!(lines.next().unwrap().starts_with("1.0000000000000000e0,0.0000000000000000e0 "));
        assert_eq!(read_matrix(&text).unwrap(), m);
    }

    #[test]
    fn malformed_input() {
        assert!(read_matrix("").is_err());
        assert!(read_matrix("2\n1,0 0,0\n").is_err());
        assert!(read_matrix("1\n1;0\n").is_err());
        assert!(read_matrix("x\n").is_err());
    }

    proptest! {
        #[test]
        fn bit_exact_round_trip(d in 1usize..6, seed in proptest::collection::vec(any::<f64>(), 72)) {
            let entries: Vec<Complex64> = (0..d * d)
                .map(|k| {
                    let (a, b) = (seed[2 * k], seed[2 * k + 1]);
                    let fix = |x: f64| if x.is_finite() { x } else { 1.0 };
                    Complex64::new(fix(a), fix(b))
                })
                .collect();
            let m = ComplexMatrix::from_row_major(d, &entries).unwrap();
            let back = read_matrix(&write_matrix(&m)).unwrap();
            for (a, b) in m.row_major().iter().zip(back.row_major()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }
}
