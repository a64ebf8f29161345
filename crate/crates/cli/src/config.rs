//! `--config FILE`: a TOML table whose keys are flag names.
//!
//! Keys are turned into flags and placed after the subcommand, ahead of the
//! command-line arguments; a key is skipped when the same flag is given on
//! the command line, so explicit flags win. Booleans toggle switches and
//! arrays become comma-separated lists.

use std::ffi::OsString;

use anyhow::{bail, Context, Result};

/// Finds the value of `--config` in raw arguments.
fn config_path(args: &[OsString]) -> Result<Option<String>> {
    let mut found = None;
    let mut iter = args.iter().skip(1);
    while let Some(arg) = iter.next() {
        let arg = arg.to_string_lossy();
        if arg == "--" {
            break;
        }
        if arg == "--config" {
            let value = iter.next().context("--config needs a file path")?;
            found = Some(value.to_string_lossy().into_owned());
        } else if let Some(value) = arg.strip_prefix("--config=") {
            found = Some(value.to_string());
        }
    }
    Ok(found)
}

fn given_on_command_line(args: &[OsString], flag: &str) -> bool {
    let eq = format!("{flag}=");
    args.iter().any(|a| {
        let a = a.to_string_lossy();
        a == flag || a.starts_with(&eq)
    })
}

fn scalar(key: &str, value: &toml::Value) -> Result<String> {
    Ok(match value {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        other => bail!("config key `{key}` has unsupported value {other}"),
    })
}

/// Flags for one config table.
pub fn flags_from_toml(text: &str) -> Result<Vec<(String, Option<String>)>> {
    let table: toml::Table = text.parse().context("config file is not valid TOML")?;
    let mut out = Vec::new();
    for (key, value) in &table {
        if key == "config" {
            bail!("a config file cannot name another config file");
        }
        let flag = format!("--{key}");
        match value {
            toml::Value::Boolean(true) => out.push((flag, None)),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts = items
                    .iter()
                    .map(|v| scalar(key, v))
                    .collect::<Result<Vec<_>>>()?;
                out.push((flag, Some(parts.join(","))));
            }
            other => out.push((flag, Some(scalar(key, other)?))),
        }
    }
    Ok(out)
}

/// Raw arguments with the config file's flags spliced in after the
/// subcommand.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("cannot read config file `{path}`"))?;
    let injected: Vec<OsString> = flags_from_toml(&text)?
        .into_iter()
        .filter(|(flag, _)| !given_on_command_line(&args, flag))
        .flat_map(|(flag, value)| std::iter::once(flag.into()).chain(value.map(Into::into)))
        .collect();
    // The subcommand is the first argument that is not a flag or the value
    // of a top-level flag.
    let mut at = 1;
    while at < args.len() {
        let a = args[at].to_string_lossy();
        if !a.starts_with('-') {
            break;
        }
        at += if (a == "--config" || a == "--threads") && at + 1 < args.len() { 2 } else { 1 };
    }
    let split = (at + 1).min(args.len());
    let mut out = args[..split].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[split..]);
    Ok(out)
}
