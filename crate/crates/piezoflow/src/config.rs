//! Declarative run configuration: flat sectioned key=value text.
//!
//! ```text
//! # comment
//! [grid]
//! n = 32
//! dim = 3
//!
//! [model]
//! kind = admissible_power_law
//! r = 1.9
//! gamma_amp = 0.2
//! ```
//!
//! Parsing is strict: unknown keys, duplicate keys inside a section, and
//! values that fail to parse are all errors carrying the offending line
//! number, so a typo cannot silently fall back to a default.

use crate::constitutive::{CertifiedModel, ModelSpec, SampleSpec};
use crate::error::{Error, Result};
use crate::spectral::Grid;
use crate::stepper::{InitialData, SimConfig};
use std::collections::BTreeMap;
use std::str::FromStr;

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    consumed: std::cell::Cell<bool>,
}

/// One `[section]` with its key=value entries.
#[derive(Debug, Clone)]
pub struct Section {
    pub name: String,
    pub line: usize,
    entries: BTreeMap<String, Entry>,
}

fn cfg_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

impl Section {
    fn entry(&self, key: &str) -> Option<&Entry> {
        let e = self.entries.get(key)?;
        e.consumed.set(true);
        Some(e)
    }

    /// Required typed value.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let entry = self.entry(key).ok_or_else(|| {
            cfg_err(self.line, format!("section [{}] is missing key '{key}'", self.name))
        })?;
        entry.value.parse().map_err(|_| {
            cfg_err(
                entry.line,
                format!(
                    "key '{key}' has unparseable value '{}' (expected {})",
                    entry.value,
                    std::any::type_name::<T>()
                ),
            )
        })
    }

    /// Optional typed value.
    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entry(key) {
            None => Ok(None),
            Some(entry) => entry
                .value
                .parse()
                .map(Some)
                .map_err(|_| {
                    cfg_err(
                        entry.line,
                        format!("key '{key}' has unparseable value '{}'", entry.value),
                    )
                }),
        }
    }

    /// Optional value with a default.
    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    /// Comma-separated list of typed values.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let entry = self.entry(key).ok_or_else(|| {
            cfg_err(self.line, format!("section [{}] is missing key '{key}'", self.name))
        })?;
        entry
            .value
            .split(',')
            .map(|tok| {
                tok.trim().parse().map_err(|_| {
                    cfg_err(
                        entry.line,
                        format!("list element '{}' in key '{key}' is unparseable", tok.trim()),
                    )
                })
            })
            .collect()
    }

    /// Errors on any key never consumed by a typed getter: catches typos.
    pub fn reject_unknown(&self) -> Result<()> {
        for (key, entry) in &self.entries {
            if !entry.consumed.get() {
                return Err(cfg_err(
                    entry.line,
                    format!("unknown key '{key}' in section [{}]", self.name),
                ));
            }
        }
        Ok(())
    }
}

/// A parsed configuration document.
#[derive(Debug, Clone)]
pub struct ConfigDoc {
    sections: Vec<Section>,
    /// the raw text, for hashing into the run manifest
    pub raw: String,
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: Vec<Section> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| cfg_err(line_no, "unterminated section header"))?
                    .trim();
                if name.is_empty() {
                    return Err(cfg_err(line_no, "empty section name"));
                }
                if sections.iter().any(|s| s.name == name) {
                    return Err(cfg_err(line_no, format!("duplicate section [{name}]")));
                }
                sections.push(Section {
                    name: name.to_string(),
                    line: line_no,
                    entries: BTreeMap::new(),
                });
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(line_no, format!("expected 'key = value', got '{line}'")))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(cfg_err(line_no, "empty key"));
            }
            if value.starts_with('=') {
                return Err(cfg_err(line_no, format!("'{line}' looks like 'key == value'")));
            }
            let section = sections
                .last_mut()
                .ok_or_else(|| cfg_err(line_no, "key=value before any [section] header"))?;
            if section
                .entries
                .insert(key.clone(), Entry { value, line: line_no, consumed: false.into() })
                .is_some()
            {
                return Err(cfg_err(
                    line_no,
                    format!("duplicate key '{key}' in section [{}]", section.name),
                ));
            }
        }
        Ok(ConfigDoc { sections, raw: text.to_string() })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Section> {
        self.section(name)
            .ok_or_else(|| Error::ConfigGeneral(format!("missing required section [{name}]")))
    }

    /// Errors if any section contains a key no reader consumed.
    pub fn reject_unknown(&self) -> Result<()> {
        for section in &self.sections {
            section.reject_unknown()?;
        }
        Ok(())
    }
}

/// Reads `[grid]`: n, dim, optional box_len (default 2π).
pub fn grid_from(doc: &ConfigDoc) -> Result<Grid> {
    let s = doc.require("grid")?;
    let n: usize = s.get("n")?;
    let dim: usize = s.get("dim")?;
    let box_len: f64 = s.get_or("box_len", 2.0 * std::f64::consts::PI)?;
    Grid::new(n, box_len, dim)
}

/// Reads `[model]`: kind plus the fields of that constitutive law.
pub fn model_from(doc: &ConfigDoc) -> Result<ModelSpec> {
    let s = doc.require("model")?;
    let kind: String = s.get("kind")?;
    let spec = match kind.as_str() {
        "newtonian_constant" => ModelSpec::NewtonianConstant { nu_star: s.get("nu_star")? },
        "schaeffer_regularized" => {
            ModelSpec::SchaefferRegularized { alpha: s.get("alpha")?, eps: s.get("eps")? }
        }
        "carreau_exponential" => ModelSpec::CarreauExponential {
            eta_inf: s.get("eta_inf")?,
            eta0: s.get("eta0")?,
            beta: s.get("beta")?,
            r: s.get("r")?,
            alpha: s.get("alpha")?,
            p_cap: s.get("p_cap")?,
        },
        "admissible_power_law" => {
            ModelSpec::AdmissiblePowerLaw { r: s.get("r")?, gamma_amp: s.get("gamma_amp")? }
        }
        other => {
            return Err(cfg_err(
                s.line,
                format!(
                    "unknown model kind '{other}' (expected newtonian_constant, \
                     schaeffer_regularized, carreau_exponential, or admissible_power_law)"
                ),
            ))
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// Reads the optional `[certify]` sampling overrides on top of the defaults.
pub fn sample_spec_from(doc: &ConfigDoc) -> Result<SampleSpec> {
    let mut spec = SampleSpec::default();
    if let Some(s) = doc.section("certify") {
        spec.p_min = s.get_or("p_min", spec.p_min)?;
        spec.p_max = s.get_or("p_max", spec.p_max)?;
        spec.p_count = s.get_or("p_count", spec.p_count)?;
        spec.d_min = s.get_or("d_min", spec.d_min)?;
        spec.d_max = s.get_or("d_max", spec.d_max)?;
        spec.d_count = s.get_or("d_count", spec.d_count)?;
        spec.direction_pairs = s.get_or("direction_pairs", spec.direction_pairs)?;
        spec.seed = s.get_or("seed", spec.seed)?;
    }
    Ok(spec)
}

/// Reads `[initial]`: kind plus that initial datum's parameters.
pub fn initial_from(doc: &ConfigDoc) -> Result<InitialData> {
    let s = doc.require("initial")?;
    let kind: String = s.get("kind")?;
    match kind.as_str() {
        "rest" => Ok(InitialData::Rest),
        "taylor_green" => Ok(InitialData::TaylorGreen { amplitude: s.get("amplitude")? }),
        "random_solenoidal" => Ok(InitialData::RandomSolenoidal {
            seed: s.get("seed")?,
            amplitude: s.get("amplitude")?,
            mmax: s.get("mmax")?,
        }),
        "vortex_ring" => Ok(InitialData::VortexRing { amplitude: s.get("amplitude")? }),
        other => Err(cfg_err(
            s.line,
            format!(
                "unknown initial kind '{other}' (expected rest, taylor_green, \
                 random_solenoidal, or vortex_ring)"
            ),
        )),
    }
}

/// Reads `[run]` plus the already-built grid/model into a full `SimConfig`.
pub fn sim_config_from(doc: &ConfigDoc, grid: Grid, model: CertifiedModel) -> Result<SimConfig> {
    let s = doc.require("run")?;
    let mut cfg = SimConfig::new(grid, model, s.get("delta")?, s.get("dt")?, s.get("t_final")?);
    cfg.pressure_tol = s.get_or("pressure_tol", cfg.pressure_tol)?;
    cfg.pressure_max_iter = s.get_or("pressure_max_iter", cfg.pressure_max_iter)?;
    cfg.snapshot_every = s.get_or("snapshot_every", cfg.snapshot_every)?;
    cfg.audit_every = s.get_or("audit_every", cfg.audit_every)?;
    cfg.cfl_limit = s.get_or("cfl_limit", cfg.cfl_limit)?;
    cfg.exploratory = s.get_or("exploratory", cfg.exploratory)?;
    Ok(cfg)
}

/// Reads `[sweep]`: the non-increasing positive δ list.
pub fn sweep_deltas_from(doc: &ConfigDoc) -> Result<Vec<f64>> {
    doc.require("sweep")?.get_list("deltas")
}

/// The primary seed a config pins (initial data seed, else certify seed).
pub fn seed_of(doc: &ConfigDoc) -> u64 {
    doc.section("initial")
        .and_then(|s| s.opt::<u64>("seed").ok().flatten())
        .or_else(|| doc.section("certify").and_then(|s| s.opt::<u64>("seed").ok().flatten()))
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
# a full simulate config
[grid]
n = 16
dim = 2

[model]
kind = admissible_power_law
r = 1.9
gamma_amp = 0.2

[initial]
kind = taylor_green
amplitude = 1.0

[run]
delta = 1e-3
dt = 1e-3
t_final = 0.01
";

    #[test]
    fn full_document_builds_every_object() {
        let doc = ConfigDoc::parse(GOOD).unwrap();
        let grid = grid_from(&doc).unwrap();
        assert_eq!(grid.n(), 16);
        assert_eq!(grid.dim(), 2);
        assert!((grid.box_len() - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        let model = model_from(&doc).unwrap();
        assert_eq!(model.exponent(), 1.9);
        let init = initial_from(&doc).unwrap();
        assert_eq!(init, InitialData::TaylorGreen { amplitude: 1.0 });
        let certified = CertifiedModel::certify_default(model).unwrap();
        let cfg = sim_config_from(&doc, grid, certified).unwrap();
        assert_eq!(cfg.dt, 1e-3);
        assert_eq!(cfg.snapshot_every, 0);
        doc.reject_unknown().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_line() {
        let text = format!("{GOOD}typo_key = 1\n");
        let doc = ConfigDoc::parse(&text).unwrap();
        let grid = grid_from(&doc).unwrap();
        let model = CertifiedModel::certify_default(model_from(&doc).unwrap()).unwrap();
        initial_from(&doc).unwrap();
        sim_config_from(&doc, grid, model).unwrap();
        match doc.reject_unknown() {
            Err(Error::Config { line, msg }) => {
                assert_eq!(line, text.lines().count());
                assert!(msg.contains("typo_key"));
            }
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "[grid]\nn == 16\n";
        match ConfigDoc::parse(bad) {
            Err(Error::Config { line: 2, .. }) => {}
            other => panic!("expected line-2 error, got {other:?}"),
        }
        let orphan = "n = 16\n";
        assert!(matches!(ConfigDoc::parse(orphan), Err(Error::Config { line: 1, .. })));
        let dup = "[a]\nx = 1\nx = 2\n";
        assert!(matches!(ConfigDoc::parse(dup), Err(Error::Config { line: 3, .. })));
        let dup_sec = "[a]\n[a]\n";
        assert!(matches!(ConfigDoc::parse(dup_sec), Err(Error::Config { line: 2, .. })));
    }

    #[test]
    fn missing_and_malformed_values_are_diagnosed() {
        let doc = ConfigDoc::parse("[grid]\nn = sixteen\ndim = 2\n").unwrap();
        assert!(matches!(grid_from(&doc), Err(Error::Config { line: 2, .. })));
        let doc = ConfigDoc::parse("[grid]\ndim = 2\n").unwrap();
        assert!(grid_from(&doc).is_err());
        let doc = ConfigDoc::parse("[model]\nkind = frobnicator\n").unwrap();
        assert!(model_from(&doc).is_err());
    }

    #[test]
    fn lists_and_optionals_parse() {
        let doc = ConfigDoc::parse("[sweep]\ndeltas = 1e-2, 1e-3,1e-4\n").unwrap();
        assert_eq!(sweep_deltas_from(&doc).unwrap(), vec![1e-2, 1e-3, 1e-4]);
        let doc = ConfigDoc::parse("[certify]\nseed = 9\np_max = 1e6\n").unwrap();
        let spec = sample_spec_from(&doc).unwrap();
        assert_eq!(spec.seed, 9);
        assert_eq!(spec.p_max, 1e6);
        assert_eq!(spec.p_count, SampleSpec::default().p_count);
        doc.reject_unknown().unwrap();
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let doc = ConfigDoc::parse("\n# leading\n[grid] # trailing\nn = 8 # octal? no\ndim = 3\n")
            .unwrap();
        let grid = grid_from(&doc).unwrap();
        assert_eq!((grid.n(), grid.dim()), (8, 3));
    }
}
