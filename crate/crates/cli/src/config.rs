//! `key = value` config files, spliced into the argument list so that
//! flags given on the command line take precedence.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`, got `{raw}`", n + 1);
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            bail!("config line {}: bad key `{}`", n + 1, k.trim());
        }
        let value = v.trim().trim_matches('"').to_string();
        out.push((key, value));
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

/// Inserts `--key=value` pairs right after the subcommand name. Later
/// occurrences win, so the command line overrides the file.
pub fn expand_args(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .with_context(|| format!("reading config {}", Path::new(&path).display()))?;
    let pairs = parse_config(&text)?;
    let mut at = None;
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if s == "--config" {
            i += 2;
            continue;
        }
        if !s.starts_with('-') {
            at = Some(i + 1);
            break;
        }
        i += 1;
    }
    let Some(at) = at else {
        return Ok(args);
    };
    let mut out: Vec<OsString> = args[..at].to_vec();
    for (k, v) in pairs {
        match v.as_str() {
            "true" => out.push(format!("--{k}").into()),
            "false" => {}
            _ => out.push(format!("--{k}={v}").into()),
        }
    }
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let p = parse_config("# run\nweight = powabs:0.5\nsplit_3e = true\n\nshape=64 # cells\n").unwrap();
        assert_eq!(
            p,
            vec![
                ("weight".into(), "powabs:0.5".into()),
                ("split-3e".into(), "true".into()),
                ("shape".into(), "64".into())
            ]
        );
        assert!(parse_config("novalue\n").is_err());
    }
}
