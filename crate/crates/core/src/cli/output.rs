use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

use super::{Cell, CliError, Format, RunReport, EXIT_NUMERICAL};

/// Reads a JSON object of parameters. Syntax errors report line and column.
pub fn load_params(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::usage(format!(
            "{}: expected a JSON object at the top level",
            path.display()
        ))),
        Err(e) => Err(CliError::usage(format!(
            "{}: malformed parameter file at line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))),
    }
}

/// 17 significant digits; parses back to the same `f64`.
fn full_precision(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render(report: &RunReport, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.payload).map_err(|e| CliError {
                exit_code: EXIT_NUMERICAL,
                message: format!("cannot serialize result: {e}"),
            })?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let table = report
                .table
                .as_ref()
                .ok_or_else(|| CliError::usage("this subcommand has no CSV form; use --format json"))?;
            let mut s = table.columns.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(",");
            s.push('\n');
            for row in &table.rows {
                let line = row
                    .iter()
                    .map(|c| match c {
                        Cell::Int(i) => i.to_string(),
                        Cell::Num(x) => full_precision(*x),
                        Cell::Text(t) => csv_field(t),
                    })
                    .collect::<Vec<_>>()
                    .join(",");
                s.push_str(&line);
                s.push('\n');
            }
            Ok(s)
        }
    }
}

/// Writes the rendered report to `path`, or to standard output.
pub fn write_output(report: &RunReport, path: Option<&Path>, format: Format) -> Result<(), CliError> {
    let text = render(report, format)?;
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::Table;
    use super::*;

    #[test]
    fn full_precision_round_trips() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, -7.25e18, 0.0] {
            let s = full_precision(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(full_precision(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn csv_layout() {
        let report = RunReport {
            exit_code: 0,
            payload: Value::Null,
            table: Some(Table {
                columns: vec!["index".into(), "w".into()],
                rows: vec![vec![Cell::Int(0), Cell::Num(1.5)], vec![Cell::Int(1), Cell::Num(2.0)]],
            }),
            diagnostics: vec![],
        };
        let s = render(&report, Format::Csv).unwrap();
        assert_eq!(s, "index,w\n0,1.5000000000000000e0\n1,2.0000000000000000e0\n");
        assert!(!s.contains('\r'));
    }

    #[test]
    fn malformed_file_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        fs::write(&path, "{\n  \"lambda\": 1.5,\n  \"M1\": \n}").unwrap();
        let e = load_params(&path).unwrap_err();
        assert_eq!(e.exit_code, 2);
        assert!(e.message.contains("line 4"), "{}", e.message);
    }
}
