//! `--config FILE`: a JSON object whose keys are long flag names (with `_`
//! or `-`). Its values are spliced in right after the subcommand, ahead of
//! the command-line flags, so later command-line occurrences override them.

use std::ffi::OsString;

use serde_json::Value;

/// Global flags that take a value and may precede the subcommand.
const VALUED_GLOBALS: [&str; 2] = ["--jobs", "--config"];

/// Remove `--config FILE` from `args` and splice its contents in.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(it.next().ok_or("--config needs a file")?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path:?}: {e}"))?;
    let flags = flags_from_json(&text)?;
    let at = subcommand_index(&rest).ok_or("--config needs a subcommand")?;
    let tail = rest.split_off(at + 1);
    rest.extend(flags.into_iter().map(OsString::from));
    rest.extend(tail);
    Ok(rest)
}

fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if VALUED_GLOBALS.contains(&s.as_ref()) {
            i += 2;
        } else if s.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

fn scalar(v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => Err(format!("unsupported config value {v}")),
    }
}

/// Flags equivalent to a config object.
pub fn flags_from_json(text: &str) -> Result<Vec<String>, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| format!("malformed config: {e}"))?;
    let Value::Object(map) = value else { return Err("config must be a JSON object".into()) };
    let mut out = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => out.push(flag),
            Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
                out.push(format!("{flag}={}", parts.join(",")));
            }
            other => out.push(format!("{flag}={}", scalar(&other)?)),
        }
    }
    Ok(out)
}
