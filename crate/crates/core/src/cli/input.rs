use std::io::Read;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Reads a path, or stdin for `-`.
pub(crate) fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {path}: {e}")))
    }
}

fn is_comment(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn split_fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty())
}

fn number(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Parse(format!("line {line}: '{field}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {line}: non-finite value '{field}'")));
    }
    Ok(v)
}

/// Numbers separated by newlines, commas or whitespace; `#` starts a comment line.
pub fn parse_sample(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if is_comment(line) {
            continue;
        }
        for f in split_fields(line) {
            out.push(number(f, i + 1)?);
        }
    }
    if out.is_empty() {
        return Err(Error::InsufficientData("the input holds no observations".into()));
    }
    Ok(out)
}

/// Response and covariate columns of a regression input.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionInput {
    pub y: Vec<f64>,
    /// `n × k` covariates, without the intercept column.
    pub covariates: DMatrix<f64>,
    pub names: Vec<String>,
}

/// CSV rows `y,x1,…,xk`. A first row that is not numeric is taken as a header.
pub fn parse_regression(text: &str) -> Result<RegressionInput> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut names = None;
    for (i, line) in text.lines().enumerate() {
        if is_comment(line) {
            continue;
        }
        let fields: Vec<&str> = split_fields(line).collect();
        if rows.is_empty() && names.is_none() && fields.iter().any(|f| f.parse::<f64>().is_err()) {
            names = Some(fields.iter().map(|f| f.to_string()).collect::<Vec<_>>());
            continue;
        }
        let row = fields.iter().map(|f| number(f, i + 1)).collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse(format!("line {}: expected {} fields, found {}", i + 1, first.len(), row.len())));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData("the input holds no observations".into()));
    }
    let k = rows[0].len() - 1;
    let names = names.unwrap_or_else(|| {
        std::iter::once("y".to_string()).chain((1..=k).map(|j| format!("x{j}"))).collect()
    });
    if names.len() != k + 1 {
        return Err(Error::Parse(format!("header has {} names for {} columns", names.len(), k + 1)));
    }
    let y = rows.iter().map(|r| r[0]).collect();
    let covariates = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j + 1]);
    Ok(RegressionInput { y, covariates, names })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_formats() {
        assert_eq!(parse_sample("1\n2, 3\n# note\n 4 5\n").unwrap(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(matches!(parse_sample("\n\n"), Err(Error::InsufficientData(_))));
        assert!(matches!(parse_sample("1\nfoo\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn regression_with_header() {
        let r = parse_regression("resp,dose\n1,0\n2,1\n4,2\n").unwrap();
        assert_eq!(r.y, vec![1.0, 2.0, 4.0]);
        assert_eq!(r.covariates.ncols(), 1);
        assert_eq!(r.names, vec!["resp", "dose"]);
        assert!(parse_regression("1,2\n3\n").is_err());
    }
}
