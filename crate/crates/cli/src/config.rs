//! `--config <file.json>` support.
//!
//! The file holds a flat JSON object whose keys are flag names (`delta_j` or
//! `delta-j`). Its entries are spliced into the argument list directly after
//! the subcommand, so anything given on the command line wins.

use std::ffi::OsString;
use std::fs;

use serde_json::Value;

use crate::CliError;

/// Returns `args` with the config file's flags inserted.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(sub) = args.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|i| i + 1) else {
        return Ok(args);
    };
    let Some(path) = config_path(&args[sub + 1..]) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
    let injected = flags_from_json(&value).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
    let mut out = Vec::with_capacity(args.len() + injected.len());
    out.extend_from_slice(&args[..=sub]);
    out.extend(injected.into_iter().map(OsString::from));
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<String> {
    let mut found = None;
    let mut iter = args.iter().map(|a| a.to_string_lossy().into_owned());
    while let Some(arg) = iter.next() {
        if arg == "--" {
            break;
        }
        if let Some(v) = arg.strip_prefix("--config=") {
            found = Some(v.to_string());
        } else if arg == "--config" {
            found = iter.next();
        }
    }
    found
}

/// Converts a flat JSON object into `--flag value` arguments.
pub fn flags_from_json(value: &Value) -> Result<Vec<String>, String> {
    let Value::Object(map) = value else {
        return Err("config must be a JSON object".into());
    };
    let mut out = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" {
            return Err("config files cannot nest --config".into());
        }
        match v {
            Value::Bool(true) => out.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Number(n) => {
                out.push(flag);
                out.push(n.to_string());
            }
            Value::String(s) => {
                out.push(flag);
                out.push(s.clone());
            }
            Value::Array(_) | Value::Object(_) => return Err(format!("`{key}` must be a scalar")),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn os(args: &[&str]) -> Vec<OsString> {
        args.iter().map(OsString::from).collect()
    }

    #[test]
    fn json_to_flags() {
        let flags = flags_from_json(&json!({"delta_j": 2.5, "svg": true, "degrees": false, "format": "csv"})).unwrap();
        assert_eq!(flags, ["--delta-j", "2.5", "--format", "csv", "--svg"]);
        assert!(flags_from_json(&json!([1, 2])).is_err());
        assert!(flags_from_json(&json!({"range": [0, 1]})).is_err());
        assert!(flags_from_json(&json!({"config": "x.json"})).is_err());
    }

    #[test]
    fn no_config_is_identity() {
        let args = os(&["bellgap", "sweep", "--step", "0.1"]);
        assert_eq!(expand(args.clone()).unwrap(), args);
        let bare = os(&["bellgap", "--help"]);
        assert_eq!(expand(bare.clone()).unwrap(), bare);
    }

    #[test]
    fn config_flags_precede_command_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"step": 0.5, "seed": 3}"#).unwrap();
        let p = path.to_string_lossy().into_owned();
        let args = expand(os(&["bellgap", "sweep", "--config", &p, "--step", "0.1"])).unwrap();
        let args: Vec<String> = args.into_iter().map(|a| a.into_string().unwrap()).collect();
        assert_eq!(args, ["bellgap", "sweep", "--seed", "3", "--step", "0.5", "--config", p.as_str(), "--step", "0.1"]);
    }

    #[test]
    fn unreadable_config_is_an_error() {
        let err = expand(os(&["bellgap", "sweep", "--config=/nonexistent/c.json"])).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }
}
