//! Resolved run configuration: a flat `key=value` file overlaid by flags.
//!
//! Every value a command reads, including defaults it falls back on, ends
//! up in the resolved map that the manifest records.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use diophlab::affine::ParamBox;
use diophlab::flows::Hyperplane;
use diophlab::presets::CoefficientList;
use diophlab::sampling::Sampler;

use crate::CliError;

#[derive(Debug, Clone)]
pub struct Settings {
    command: String,
    values: BTreeMap<String, String>,
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key=value", i + 1)))?;
        let k = k.trim().to_string();
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key `{k}`", i + 1)));
        }
    }
    Ok(out)
}

impl Settings {
    /// Merges `file` and `flags` (flags win). Besides `allowed`, a file may
    /// hold `command` (checked) and `workers` (read by the caller).
    pub fn merge(
        command: &str,
        allowed: &[String],
        file: BTreeMap<String, String>,
        flags: BTreeMap<String, String>,
    ) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (k, v) in file {
            if k == "command" {
                if v != command {
                    return Err(CliError::Config(format!("config is for `{v}`, not `{command}`")));
                }
                continue;
            }
            if k == "workers" {
                continue;
            }
            if !allowed.contains(&k) {
                return Err(CliError::Config(format!("unknown key `{k}` for `{command}`")));
            }
            values.insert(k, v);
        }
        values.extend(flags);
        Ok(Settings {
            command: command.to_string(),
            values,
        })
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn required(&self, key: &str) -> Result<String, CliError> {
        self.get(key)
            .map(str::to_string)
            .ok_or_else(|| CliError::Config(format!("`{}` needs --{key}", self.command)))
    }

    /// The value for `key`, recording `default` when it is unset.
    pub fn or(&mut self, key: &str, default: impl Display) -> String {
        self.values
            .entry(key.to_string())
            .or_insert_with(|| default.to_string())
            .clone()
    }

    pub fn parse<T>(&mut self, key: &str, default: impl Display) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let v = self.or(key, default);
        v.parse().map_err(|e| CliError::Config(format!("--{key} `{v}`: {e}")))
    }

    pub fn parse_required<T>(&self, key: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let v = self.required(key)?;
        v.parse().map_err(|e| CliError::Config(format!("--{key} `{v}`: {e}")))
    }

    /// `alpha`, checked against `n` when both are given.
    pub fn hyperplane(&mut self) -> Result<Hyperplane, CliError> {
        let list = CoefficientList::parse(&self.required("alpha")?)?;
        if let Some(n) = self.get("n") {
            let n: usize = n.parse().map_err(|_| CliError::Config(format!("--n `{n}` is not a natural number")))?;
            if n != list.values.len() {
                return Err(CliError::Config(format!(
                    "--n {n} but --alpha has {} coefficients",
                    list.values.len()
                )));
            }
        } else {
            self.values.insert("n".into(), list.values.len().to_string());
        }
        Ok(list.into_hyperplane()?)
    }

    /// `box`: a single `lo,hi` is repeated over every coordinate.
    pub fn param_box(&mut self, dim: usize) -> Result<ParamBox, CliError> {
        let spec = self.or("box", "0,1");
        let full = if spec.contains(';') {
            spec
        } else {
            vec![spec.as_str(); dim].join(";")
        };
        let b: ParamBox = full.parse()?;
        if b.dim() != dim {
            return Err(CliError::Config(format!("--box has {} coordinates, expected {dim}", b.dim())));
        }
        Ok(b)
    }

    /// `sampler` (`mc` or `grid`) with `samples`/`seed` or `grid`.
    pub fn sampler(&mut self, default_samples: u64) -> Result<Sampler, CliError> {
        match self.or("sampler", "mc").as_str() {
            "mc" => Ok(Sampler::Mc {
                samples: self.parse("samples", default_samples)?,
                seed: self.parse("seed", 0)?,
            }),
            "grid" => Ok(Sampler::Grid {
                per_axis: self.parse("grid", 64)?,
            }),
            other => Err(CliError::Config(format!("unknown sampler `{other}`"))),
        }
    }

    /// `a..b` (inclusive) or a comma list.
    pub fn range_list<T>(&mut self, key: &str, default: &str) -> Result<Vec<T>, CliError>
    where
        T: FromStr + Copy + Into<u64> + TryFrom<u64>,
    {
        let v = self.or(key, default);
        parse_range(&v).ok_or_else(|| CliError::Config(format!("--{key} `{v}`: expected `a..b` or a list")))
    }
}

fn parse_range<T>(s: &str) -> Option<Vec<T>>
where
    T: FromStr + Copy + Into<u64> + TryFrom<u64>,
{
    let out: Vec<T> = if let Some((lo, hi)) = s.split_once("..") {
        let lo: T = lo.trim().parse().ok()?;
        let hi: T = hi.trim().parse().ok()?;
        (lo.into()..=hi.into()).map(|v| T::try_from(v).ok()).collect::<Option<_>>()?
    } else {
        s.split(',').map(|v| v.trim().parse().ok()).collect::<Option<_>>()?
    };
    (!out.is_empty()).then_some(out)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}
