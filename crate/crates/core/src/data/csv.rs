//! Dataset CSV: header `label,v_0,...,v_{D-1}` then one row per sample with
//! the `|G| x c0` input flattened row-major (`v_{g * c0 + k} = x_k(g)`).
//! Floats use Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{DataError, Dataset};
use crate::group::{GroupRef, GroupSignal};

pub fn write_csv<W: Write>(mut out: W, data: &Dataset) -> Result<(), DataError> {
    let dim = data.group().order() * data.channels();
    let mut line = String::from("label");
    for i in 0..dim {
        write!(line, ",v_{i}").unwrap();
    }
    writeln!(out, "{line}")?;
    for (x, y) in data.inputs().iter().zip(data.labels()) {
        line.clear();
        write!(line, "{}", *y as i64).unwrap();
        for v in x.to_rows() {
            write!(line, ",{v}").unwrap();
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(input: R, group: GroupRef, c0: usize) -> Result<Dataset, DataError> {
    let dim = group.order() * c0;
    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if i == 0 {
            if !line.starts_with("label") {
                return Err(DataError::Csv {
                    line: lineno,
                    msg: "missing header".into(),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(DataError::Csv {
                line: lineno,
                msg: format!("expected {} fields, found {}", dim + 1, fields.len()),
            });
        }
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| DataError::Csv {
                line: lineno,
                msg: format!("{s:?}: {e}"),
            })
        };
        labels.push(parse(fields[0])?);
        let rows = fields[1..].iter().map(|s| parse(s)).collect::<Result<Vec<_>, _>>()?;
        inputs.push(GroupSignal::from_rows(group.clone(), c0, &rows)?);
    }
    Dataset::new(group, c0, inputs, labels)
}

#[cfg(test)]
mod tests {
    use super::super::{gen_synthetic, SyntheticTaskSpec};
    use super::*;
    use crate::group::parse_group;

    #[test]
    fn csv_round_trip_is_exact() {
        let g = parse_group("d2").unwrap();
        let (train, _) = gen_synthetic(&SyntheticTaskSpec {
            group: g.clone(),
            c0: 2,
            templates_per_class: 2,
            noise_sigma: 0.3,
            m_train: 6,
            m_test: 1,
            seed: 5,
            augment: true,
        })
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &train).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("label,v_0,v_1,"));
        assert!(text.lines().next().unwrap().ends_with(",v_7"));
        let back = read_csv(buf.as_slice(), g, 2).unwrap();
        assert_eq!(back, train);
    }

    #[test]
    fn bad_rows_name_the_line() {
        let g = parse_group("c2").unwrap();
        let text = "label,v_0,v_1\n1,0.5,0.5\n-1,0.5\n";
        match read_csv(text.as_bytes(), g, 1) {
            Err(DataError::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
