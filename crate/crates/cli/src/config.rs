//! Flat `key = value` run files. Distribution values use the literals of
//! [`Dist::parse`], e.g. `F = beta 0.25 0.25`.

use crate::error::{CliError, Result};
use platform_menus::dist::Dist;
use platform_menus::screening::{BinaryConfig, MarketConfig};
use platform_menus::Error;
use std::collections::BTreeMap;
use std::path::Path;

const KEYS: &[&str] = &[
    "regime", "lambda", "j", "f", "g", "grid", "tol", "alpha", "theta_l", "theta_h", "f_l", "f_h", "n", "seed",
    "info", "probe",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", i + 1)))?;
            s.set(k.trim(), v.trim())?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Keys are case-insensitive.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.to_ascii_lowercase();
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::Parse(format!("unknown key `{key}`")).into());
        }
        self.values.insert(k, value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(&key.to_ascii_lowercase()).map(String::as_str)
    }

    pub fn num(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("`{key}` = `{v}` is not a number")).into()))
            .transpose()
    }

    pub fn int(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| v.parse::<u64>().map_err(|_| Error::Parse(format!("`{key}` = `{v}` is not an integer")).into()))
            .transpose()
    }

    fn dist(&self, key: &str) -> Result<Option<Dist>> {
        Ok(self.get(key).map(Dist::parse).transpose()?)
    }

    /// Market primitives, with unset keys taken from `defaults`.
    pub fn market(&self, defaults: &MarketConfig) -> Result<MarketConfig> {
        let mut c = defaults.clone();
        if let Some(v) = self.num("lambda")? {
            c.lambda = v;
        }
        if let Some(v) = self.int("j")? {
            c.j = u32::try_from(v).map_err(|_| Error::Domain(format!("J = {v} too large")))?;
        }
        if let Some(d) = self.dist("f")? {
            c.f = d;
        }
        if let Some(d) = self.dist("g")? {
            c.g = d;
        }
        if let Some(v) = self.int("grid")? {
            c.grid = v as usize;
        }
        if let Some(v) = self.num("tol")? {
            c.tol = v;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn binary(&self) -> Result<BinaryConfig> {
        let get = |k: &str, d: f64| -> Result<f64> { Ok(self.num(k)?.unwrap_or(d)) };
        Ok(BinaryConfig::new(
            get("theta_l", 1.0)?,
            get("theta_h", 1.2)?,
            get("f_l", 0.5)?,
            get("f_h", 0.5)?,
            get("lambda", 0.5)?,
        )?)
    }

    pub fn alpha(&self) -> Result<f64> {
        let a = self.num("alpha")?.unwrap_or(0.0);
        if !(0.0..=1.0).contains(&a) {
            return Err(CliError::Model(Error::Domain(format!("alpha = {a} outside [0, 1]"))));
        }
        Ok(a)
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Parse(format!("`{key}`: `{x}` is not a number")).into())
                    })
                    .collect()
            })
            .transpose()
    }
}
