//! `key = value` configuration files and their merge into the argument list.

use std::ffi::OsString;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped; underscores
/// in keys are read as hyphens so `lambda_min` and `lambda-min` agree.
pub fn parse_config(text: &str) -> Result<Vec<ConfigEntry>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("config line {}: expected key = value", i + 1));
        };
        let key = k.trim().replace('_', "-");
        let value = v.trim().trim_matches('"').to_string();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(format!("config line {}: bad key {:?}", i + 1, k.trim()));
        }
        out.push(ConfigEntry { key, value });
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<Vec<ConfigEntry>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    parse_config(&text)
}

// Global options that take a value and may precede the subcommand.
const GLOBAL_VALUED: [&str; 2] = ["--out", "--config"];

fn flag_name(arg: &str) -> Option<&str> {
    let body = arg.strip_prefix("--")?;
    Some(body.split('=').next().unwrap_or(body))
}

/// Position of the subcommand in `args` (program name at 0).
fn subcommand_index(args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if GLOBAL_VALUED.contains(&a.as_str()) {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

/// Value of `--config` anywhere in the arguments.
pub fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// Inserts config entries right after the subcommand, skipping keys already given on
/// the command line so that flags win.
pub fn merge(args: Vec<OsString>, entries: &[ConfigEntry]) -> Result<Vec<OsString>, String> {
    let mut text: Vec<String> = Vec::with_capacity(args.len());
    for a in args {
        text.push(a.into_string().map_err(|a| format!("argument {a:?} is not valid UTF-8"))?);
    }
    if entries.is_empty() {
        return Ok(text.into_iter().map(OsString::from).collect());
    }
    let given: Vec<&str> = text.iter().filter_map(|a| flag_name(a)).collect();
    let mut extra = Vec::new();
    let mut global = Vec::new();
    for e in entries {
        if given.contains(&e.key.as_str()) || e.key == "config" {
            continue;
        }
        let target = if e.key == "out" { &mut global } else { &mut extra };
        match e.value.as_str() {
            "true" => target.push(format!("--{}", e.key)),
            "false" => {}
            v => {
                target.push(format!("--{}", e.key));
                target.push(v.to_string());
            }
        }
    }
    let mut merged = text.clone();
    match subcommand_index(&text) {
        Some(i) => {
            merged.splice(i + 1..i + 1, extra);
        }
        None => merged.extend(extra),
    }
    merged.splice(1..1, global);
    Ok(merged.into_iter().map(OsString::from).collect())
}
