//! Loading and checking run configurations with source positions.

use std::path::Path;

use dstc_core::harness::RunConfig;
use dstc_core::Error;

use crate::error::CliError;

/// Parses and validates the JSON run configuration at `path`.
///
/// Syntax and type errors carry the parser's position; semantic errors are
/// located at the first occurrence of the offending key.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(path, &text)
}

pub fn parse_config(path: &Path, text: &str) -> Result<RunConfig, CliError> {
    let config: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    check(path, text, &config)?;
    Ok(config)
}

/// Runs semantic validation on an already parsed config.
pub fn check(path: &Path, text: &str, config: &RunConfig) -> Result<(), CliError> {
    match config.validate() {
        Ok(()) => Ok(()),
        Err(Error::InvalidConfig { field, message }) => {
            let key = field.split('+').next().unwrap_or(&field);
            let (line, column) = locate_key(text, key).unwrap_or((1, 1));
            Err(CliError::Config {
                path: path.to_path_buf(),
                line,
                column,
                message: format!("field '{field}': {message}"),
            })
        }
        Err(other) => Err(CliError::Simulation(other)),
    }
}

/// 1-based line and column of the first `"key"` in `text`.
fn locate_key(text: &str, key: &str) -> Option<(usize, usize)> {
    let needle = format!("\"{key}\"");
    text.lines()
        .enumerate()
        .find_map(|(i, line)| line.find(&needle).map(|c| (i + 1, c + 1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_errors_report_position() {
        let text = "{\n  \"protocol\": \"EJHS\",\n  \"T\": 5,,\n}";
        match parse_config(Path::new("c.json"), text) {
            Err(CliError::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semantic_errors_point_at_the_key() {
        let text = r#"{
  "protocol": "EJHS", "T": 2, "N": 2, "M": 2,
  "sigma2sq": 0.5,
  "P_dB": [6],
  "blocks": 0,
  "seed": 1
}"#;
        match parse_config(Path::new("c.json"), text) {
            Err(e @ CliError::Config { line: 5, .. }) => {
                assert!(e.to_string().contains("blocks"));
                assert_eq!(e.exit_code(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_protocol_is_a_config_error() {
        let text =
            r#"{"protocol":"JHS","T":2,"N":2,"M":2,"sigma2sq":0.5,"P_dB":[6],"blocks":5,"seed":1}"#;
        assert!(matches!(
            parse_config(Path::new("c.json"), text),
            Err(CliError::Config { .. })
        ));
    }
}
