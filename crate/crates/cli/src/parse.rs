//! Matrix literals of the form `a,b;c,d` with entries such as `1`, `-2.5i`,
//! `0.5+0.866i` or `1e-3-i`.

use pfkit_core::mat2::{c, Mat2, C64};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn at(column: usize, message: impl Into<String>) -> Self {
        Self {
            line: 1,
            column,
            message: message.into(),
        }
    }
}

fn real(text: &str, column: usize) -> Result<f64, ParseError> {
    let value: f64 = text
        .parse()
        .map_err(|_| ParseError::at(column, format!("'{text}' is not a number")))?;
    if !value.is_finite() {
        return Err(ParseError::at(column, format!("'{text}' is not finite")));
    }
    Ok(value)
}

/// Coefficient of `i`: empty or a bare sign stands for ±1.
fn imag_coefficient(text: &str, column: usize) -> Result<f64, ParseError> {
    match text {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => real(text, column),
    }
}

/// Parses one complex entry; `column` is the 1-based position of its first
/// character, used in error messages.
pub fn parse_complex(text: &str, column: usize) -> Result<C64, ParseError> {
    if text.is_empty() {
        return Err(ParseError::at(column, "empty entry"));
    }
    let Some(body) = text.strip_suffix(['i', 'j']) else {
        return Ok(c(real(text, column)?, 0.0));
    };
    // The split is the last sign that is not the leading one and not part of
    // an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Ok(c(
            real(&body[..k], column)?,
            imag_coefficient(&body[k..], column + k)?,
        )),
        None => Ok(c(0.0, imag_coefficient(body, column)?)),
    }
}

/// Parses `a,b;c,d`. Whitespace around entries is ignored.
pub fn parse_matrix(text: &str) -> Result<Mat2, ParseError> {
    let mut entries = Vec::with_capacity(4);
    let mut row_start = 0;
    let rows: Vec<&str> = text.split(';').collect();
    if rows.len() != 2 {
        return Err(ParseError::at(
            1,
            format!("expected 2 rows separated by ';', found {}", rows.len()),
        ));
    }
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != 2 {
            return Err(ParseError::at(
                row_start + 1,
                format!("expected 2 entries separated by ',', found {}", cells.len()),
            ));
        }
        let mut offset = row_start;
        for cell in cells {
            let lead = cell.len() - cell.trim_start().len();
            let entry: String = cell
                .trim()
                .chars()
                .filter(|ch| !ch.is_whitespace())
                .collect();
            entries.push(parse_complex(&entry, offset + lead + 1)?);
            offset += cell.len() + 1;
        }
        row_start += row.len() + 1;
    }
    Ok(Mat2::new(entries[0], entries[1], entries[2], entries[3]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries() {
        assert_eq!(parse_complex("1", 1).unwrap(), c(1.0, 0.0));
        assert_eq!(parse_complex("-2.5i", 1).unwrap(), c(0.0, -2.5));
        assert_eq!(parse_complex("i", 1).unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("-i", 1).unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("0.5+0.866i", 1).unwrap(), c(0.5, 0.866));
        assert_eq!(parse_complex("1e-3-i", 1).unwrap(), c(1e-3, -1.0));
        assert_eq!(parse_complex("-1e+2+3E-1i", 1).unwrap(), c(-100.0, 0.3));
    }

    #[test]
    fn matrices() {
        let m = parse_matrix("0, 1; 1, 0").unwrap();
        assert_eq!(m, Mat2::real(0.0, 1.0, 1.0, 0.0));
        let m = parse_matrix("i,1;1,-i").unwrap();
        assert_eq!(
            m,
            Mat2::new(c(0.0, 1.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, -1.0))
        );
    }

    #[test]
    fn error_columns() {
        assert_eq!(parse_matrix("1,x;0,1").unwrap_err().column, 3);
        assert_eq!(parse_matrix("1,1;0, 2+zi").unwrap_err().column, 9);
        assert_eq!(parse_matrix("1,1;0").unwrap_err().column, 5);
        assert!(parse_matrix("1,1").is_err());
        assert!(parse_matrix("1,1;0,inf").is_err());
        assert!(parse_matrix("1,1;0,").is_err());
    }
}
