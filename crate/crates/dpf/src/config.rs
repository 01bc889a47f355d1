//! Flat `key=value` config files.
//!
//! Keys are long flag names without the leading dashes. Values are spliced
//! into the argument list after the command line, so they take precedence
//! over flags given there. `true`/`false` toggle switches.

use std::ffi::OsString;
use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
        let key = k.trim().trim_start_matches("--");
        if key.is_empty() || key == "config" {
            return Err(Error::Config(format!("line {}: invalid key {:?}", i + 1, k.trim())));
        }
        out.push((key.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Append the flags from `--config <file>`, if present.
pub fn expand_args(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| Error::Config(format!("{}: {e}", path.to_string_lossy())))?;
    for (k, v) in parse_config(&text)? {
        match v.as_str() {
            "true" => args.push(format!("--{k}").into()),
            "false" => {}
            _ => args.push(format!("--{k}={v}").into()),
        }
    }
    Ok(args)
}
