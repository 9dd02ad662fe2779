//! Merging a flat `key = value` configuration file into the argument list.
//!
//! Every key is the long name of a flag (underscores and hyphens are
//! interchangeable). `true`/`false` values switch boolean flags, and the
//! special key `command` names the subcommand. Values from the file are
//! inserted directly after the subcommand, so anything given on the command
//! line takes precedence.

use std::ffi::OsString;
use std::path::Path;

const SUBCOMMANDS: [&str; 6] = ["verify", "ed", "thermo", "corr", "scan", "fss"];
const GLOBAL_WITH_VALUE: [&str; 2] = ["--config", "--threads"];

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
}

/// Parses the file format; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<Entry>, String> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", no + 1))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("config line {}: empty key", no + 1));
        }
        out.push(Entry { key, value: v.trim().to_string() });
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Result<Option<OsString>, String> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned().map(Some).ok_or_else(|| "--config needs a file".to_string());
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Ok(Some(OsString::from(rest)));
        }
    }
    Ok(None)
}

fn long_name(token: &str) -> Option<String> {
    if token == "-L" || token.starts_with("-L") && !token.starts_with("--") {
        return Some("sites".into());
    }
    if token == "-o" {
        return Some("output".into());
    }
    token.strip_prefix("--").map(|t| t.split('=').next().unwrap_or(t).replace('_', "-"))
}

/// Returns the argument list with the configuration file (if any) merged in.
pub fn expand_args(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| format!("cannot read config file {}: {e}", path.to_string_lossy()))?;
    merge(args, &parse_config_text(&text)?)
}

/// Inserts `entries` into `args` (see the module documentation).
pub fn merge(args: Vec<OsString>, entries: &[Entry]) -> Result<Vec<OsString>, String> {
    let tokens: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut sub_pos = None;
    let mut i = 1;
    while i < tokens.len() {
        if GLOBAL_WITH_VALUE.contains(&tokens[i].as_str()) {
            i += 2;
            continue;
        }
        if SUBCOMMANDS.contains(&tokens[i].as_str()) {
            sub_pos = Some(i);
            break;
        }
        i += 1;
    }
    let given: Vec<String> = tokens.iter().skip(1).filter_map(|t| long_name(t)).collect();
    let model_given = given.iter().any(|k| k == "delta" || k == "gamma");
    let mut file_command = None;
    let mut inserted: Vec<OsString> = Vec::new();
    for e in entries {
        match e.key.as_str() {
            "command" | "subcommand" => {
                if !SUBCOMMANDS.contains(&e.value.as_str()) {
                    return Err(format!("unknown subcommand `{}` in config file", e.value));
                }
                file_command = Some(e.value.clone());
                continue;
            }
            "config" | "threads" => continue,
            "delta" | "gamma" if model_given => continue,
            k if given.iter().any(|g| g == k) => continue,
            _ => {}
        }
        match e.value.as_str() {
            "true" => inserted.push(format!("--{}", e.key).into()),
            "false" => {}
            v => inserted.push(format!("--{}={v}", e.key).into()),
        }
    }
    let threads = entries.iter().find(|e| e.key == "threads" && !given.iter().any(|g| g == "threads"));
    let mut out = args;
    match sub_pos {
        Some(p) => {
            let tail = out.split_off(p + 1);
            out.extend(inserted);
            out.extend(tail);
        }
        None => {
            let cmd = file_command.ok_or_else(|| "no subcommand given".to_string())?;
            out.push(cmd.into());
            out.extend(inserted);
        }
    }
    if let Some(t) = threads {
        out.push(format!("--threads={}", t.value).into());
    }
    Ok(out)
}
