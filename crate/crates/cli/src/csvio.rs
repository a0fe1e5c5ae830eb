//! Minimal CSV emission and parsing for the simulator's tabular artifacts.
//!
//! All files are plain comma-separated text with one header line. Fields
//! containing commas, quotes, or newlines are double-quoted (none of the
//! simulator's own outputs need it, but round-tripping stays safe). Floats
//! are written with Rust's shortest round-trip formatting, which is
//! deterministic — a requirement for byte-identical artifact reruns.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CsvError {
    #[error("csv line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Quotes a field if it contains a delimiter, quote, or newline.
pub fn escape_field(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Builds a CSV document from a header and rows of already-stringified
/// fields.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let escaped: Vec<String> = row.iter().map(|f| escape_field(f)).collect();
        out.push_str(&escaped.join(","));
        out.push('\n');
    }
    out
}

/// Splits one CSV line into fields, honoring double-quoted fields.
pub fn split_line(line: &str) -> Result<Vec<String>, String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut chars = line.chars().peekable();
    let mut quoted = false;
    while let Some(c) = chars.next() {
        if quoted {
            if c == '"' {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    cur.push('"');
                } else {
                    quoted = false;
                }
            } else {
                cur.push(c);
            }
        } else {
            match c {
                ',' => fields.push(std::mem::take(&mut cur)),
                '"' if cur.is_empty() => quoted = true,
                _ => cur.push(c),
            }
        }
    }
    if quoted {
        return Err("unterminated quoted field".into());
    }
    fields.push(cur);
    Ok(fields)
}

/// Parses a CSV document, checking the header matches exactly; returns the
/// data rows.
pub fn parse_csv(text: &str, expected_header: &[&str]) -> Result<Vec<Vec<String>>, CsvError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(CsvError::Parse { line: 1, message: "empty file".into() })?;
    let got: Vec<String> =
        split_line(header).map_err(|m| CsvError::Parse { line: 1, message: m })?;
    if got != expected_header {
        return Err(CsvError::Parse {
            line: 1,
            message: format!("header {got:?}, expected {expected_header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields =
            split_line(line).map_err(|m| CsvError::Parse { line: i + 1, message: m })?;
        if fields.len() != expected_header.len() {
            return Err(CsvError::Parse {
                line: i + 1,
                message: format!("{} fields, expected {}", fields.len(), expected_header.len()),
            });
        }
        rows.push(fields);
    }
    Ok(rows)
}

/// Parses one field as the given type with a line-numbered error.
pub fn parse_field<T: std::str::FromStr>(
    field: &str,
    line: usize,
    name: &str,
) -> Result<T, CsvError>
where
    T::Err: std::fmt::Display,
{
    field.parse().map_err(|e| CsvError::Parse {
        line,
        message: format!("{name}: cannot parse '{field}': {e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_round_trip_with_quoting() {
        let rows = vec![
            vec!["1.5".to_string(), "plain".to_string()],
            vec!["-2".to_string(), "with,comma and \"quote\"".to_string()],
        ];
        let text = to_csv(&["x", "label"], &rows);
        let back = parse_csv(&text, &["x", "label"]).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn test_header_mismatch_rejected() {
        let text = "a,b\n1,2\n";
        assert!(parse_csv(text, &["a", "c"]).is_err());
    }

    #[test]
    fn test_field_count_mismatch_rejected() {
        let text = "a,b\n1,2,3\n";
        let err = parse_csv(text, &["a", "b"]).unwrap_err();
        assert_eq!(err, CsvError::Parse { line: 2, message: "3 fields, expected 2".into() });
    }

    #[test]
    fn test_float_formatting_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-9, 123456.789, -0.0625] {
            let s = format!("{v}");
            let back: f64 = s.parse().unwrap();
            assert_eq!(v, back);
        }
    }
}
