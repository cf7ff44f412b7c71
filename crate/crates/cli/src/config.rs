//! `--config FILE` support.
//!
//! The file holds `key = value` lines whose keys are long flag names. Entries
//! are spliced into the argument list directly after the subcommand, so any
//! flag given on the command line appears later and overrides them.

use std::ffi::OsString;
use std::path::Path;

use wdcs::{Error, Result};

const SWITCHES: &[&str] = &["strict", "strict-above", "allow-leading-digit", "symmetric-canonical"];

/// Parses a config file body into `(key, value)` pairs.
pub fn parse(text: &str, origin: &Path) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "{}:{}: expected `key = value`, found `{line}`",
                origin.display(),
                n + 1
            )));
        };
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() || key == "config" {
            return Err(Error::Config(format!("{}:{}: invalid key `{key}`", origin.display(), n + 1)));
        }
        entries.push((key.to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

fn switch_value(key: &str, value: &str, origin: &Path) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "" | "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "{}: `{key}` expects true or false, found `{value}`",
            origin.display()
        ))),
    }
}

/// Flag arguments equivalent to the config entries.
pub fn to_flags(entries: &[(String, String)], origin: &Path) -> Result<Vec<OsString>> {
    let mut flags = Vec::new();
    for (key, value) in entries {
        if SWITCHES.contains(&key.as_str()) {
            if switch_value(key, value, origin)? {
                flags.push(OsString::from(format!("--{key}")));
            }
        } else {
            flags.push(OsString::from(format!("--{key}={value}")));
        }
    }
    Ok(flags)
}

/// Removes `--config` from `args` and splices the file's flags in after the
/// subcommand.
pub fn expand(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    let mut i = 1;
    while i < args.len() {
        let arg = args[i].to_string_lossy().into_owned();
        if arg == "--" {
            break;
        }
        if arg == "--config" {
            if i + 1 >= args.len() {
                return Err(Error::Config("--config requires a file path".into()));
            }
            let value = args.remove(i + 1);
            args.remove(i);
            if path.replace(value).is_some() {
                return Err(Error::Config("--config given more than once".into()));
            }
            continue;
        }
        if let Some(value) = arg.strip_prefix("--config=") {
            let value = OsString::from(value);
            args.remove(i);
            if path.replace(value).is_some() {
                return Err(Error::Config("--config given more than once".into()));
            }
            continue;
        }
        i += 1;
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    let flags = to_flags(&parse(&text, path)?, path)?;
    let at = args
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|p| p + 2)
        .unwrap_or(args.len());
    args.splice(at..at, flags);
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_pairs_and_comments() {
        let e = parse("# c\nthreshold = 1e-5\n\n--strict=true\n", Path::new("c")).unwrap();
        assert_eq!(e, [("threshold".into(), "1e-5".into()), ("strict".into(), "true".into())]);
        assert!(parse("threshold 1e-5", Path::new("c")).is_err());
    }

    #[test]
    fn switches_become_bare_flags() {
        let e = vec![("strict".to_string(), "false".to_string()), ("strict-above".into(), "yes".into())];
        assert_eq!(to_flags(&e, Path::new("c")).unwrap(), os(&["--strict-above"]));
        assert!(to_flags(&[("strict".into(), "maybe".into())], Path::new("c")).is_err());
    }

    #[test]
    fn splices_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.conf");
        std::fs::write(&cfg, "threshold=1e-5\nlanguage=de\n").unwrap();
        let args = os(&["wdcs", "extract", "--config", cfg.to_str().unwrap(), "--threshold", "1e-4"]);
        let out = expand(args).unwrap();
        assert_eq!(out, os(&["wdcs", "extract", "--threshold=1e-5", "--language=de", "--threshold", "1e-4"]));
    }

    #[test]
    fn missing_file_is_configuration_error() {
        let err = expand(os(&["wdcs", "stats", "--config=/nonexistent/x.conf"])).unwrap_err();
        assert!(err.is_configuration());
    }
}
