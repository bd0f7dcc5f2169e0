//! Run configuration: TOML with explicit keys, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::integrate::{
    spin::SpinFunction, Factor, LhsMethod, Monomial, RhsMethod, TestFunction, TolerancePolicy,
};
use crate::matrixkit::c64;
use crate::spaces::{Family, Sign, SpaceSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub tolerance: ToleranceConfig,
    #[serde(rename = "case", default)]
    pub cases: Vec<CaseConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    pub abs_tol: f64,
    pub sigma_k: f64,
    /// Largest tolerated fraction of ERROR rows before exit code 4.
    pub max_error_fraction: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        let p = TolerancePolicy::default();
        Self {
            abs_tol: p.abs_tol,
            sigma_k: p.sigma_k,
            max_error_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CaseKind {
    #[default]
    Theorem,
    RadiusSweep,
    Boundary,
    Spin,
}

impl CaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseKind::Theorem => "theorem",
            CaseKind::RadiusSweep => "radius-sweep",
            CaseKind::Boundary => "boundary",
            CaseKind::Spin => "spin",
        }
    }
}

/// One `M[row][col]^power` factor, written `[row, col, power]`.
pub type FactorConfig = [u32; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    /// `[re, im]`.
    #[serde(default = "unit_coeff")]
    pub coeff: [f64; 2],
    #[serde(default)]
    pub factors: Vec<FactorConfig>,
}

fn unit_coeff() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineFunction {
    pub name: String,
    #[serde(default)]
    pub damping: f64,
    pub terms: Vec<TermConfig>,
}

fn default_t_grid() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub name: String,
    #[serde(default)]
    pub kind: CaseKind,
    #[serde(default)]
    pub family: Option<Family>,
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(default)]
    pub q: Option<usize>,
    #[serde(rename = "N", default)]
    pub big_n: Option<usize>,
    #[serde(default)]
    pub sign: Option<Sign>,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub suite: Option<String>,
    #[serde(default)]
    pub functions: Vec<String>,
    #[serde(default)]
    pub inline: Vec<InlineFunction>,
    #[serde(default)]
    pub lhs_method: LhsMethod,
    #[serde(default)]
    pub rhs_method: RhsMethod,
    /// Nested quadrature orders.
    #[serde(default)]
    pub order: Option<Vec<usize>>,
    /// Monte Carlo samples per cell.
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub chunks: Option<usize>,
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Sweep radii, or boundary radii for `kind = "boundary"`.
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    /// Random frames per boundary grid point.
    #[serde(default)]
    pub frames: Option<usize>,
    /// Spin quantum numbers for `kind = "spin"`.
    #[serde(rename = "S", default)]
    pub spins: Option<Vec<f64>>,
}

/// A case after validation, ready to run.
#[derive(Debug, Clone)]
pub struct Case {
    pub config: CaseConfig,
    pub kind: CaseKind,
    pub spec: Option<SpaceSpec>,
    pub functions: Vec<TestFunction>,
    pub spin_functions: Vec<SpinFunction>,
    pub t_grid: Vec<f64>,
}

fn invalid(case: &str, field: &str, message: impl Into<String>) -> CliError {
    CliError::Invalid {
        field: format!("case `{case}`: {field}"),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn policy(&self) -> TolerancePolicy {
        TolerancePolicy {
            abs_tol: self.tolerance.abs_tol,
            sigma_k: self.tolerance.sigma_k,
        }
    }

    /// Checks every case; the first problem found is reported with its field.
    pub fn validate(&self) -> Result<Vec<Case>, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Invalid {
                field: "schema_version".into(),
                message: format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            });
        }
        let tol = &self.tolerance;
        if !(tol.abs_tol >= 0.0 && tol.abs_tol.is_finite()) {
            return Err(CliError::Invalid {
                field: "tolerance.abs_tol".into(),
                message: "must be finite and non-negative".into(),
            });
        }
        if !(tol.sigma_k > 0.0 && tol.sigma_k.is_finite()) {
            return Err(CliError::Invalid {
                field: "tolerance.sigma_k".into(),
                message: "must be positive".into(),
            });
        }
        if !(0.0..=1.0).contains(&tol.max_error_fraction) {
            return Err(CliError::Invalid {
                field: "tolerance.max_error_fraction".into(),
                message: "must lie in [0, 1]".into(),
            });
        }
        if self.cases.is_empty() {
            return Err(CliError::Invalid {
                field: "case".into(),
                message: "at least one [[case]] block is required".into(),
            });
        }
        let mut names = std::collections::HashSet::new();
        self.cases
            .iter()
            .map(|c| {
                if !names.insert(c.name.as_str()) {
                    return Err(invalid(&c.name, "name", "duplicate case name"));
                }
                c.validate()
            })
            .collect()
    }
}

impl CaseConfig {
    fn spec(&self) -> Result<SpaceSpec, CliError> {
        let name = &self.name;
        let family = self.family.ok_or_else(|| invalid(name, "family", "missing"))?;
        let sign = self.sign.ok_or_else(|| invalid(name, "sign", "missing"))?;
        let spec = match family {
            Family::AIII => {
                if self.big_n.is_some() {
                    return Err(invalid(name, "N", "AIII takes p and q"));
                }
                SpaceSpec::aiii(
                    self.p.ok_or_else(|| invalid(name, "p", "missing"))?,
                    self.q.ok_or_else(|| invalid(name, "q", "missing"))?,
                    sign,
                )
            }
            Family::CI | Family::DIII => {
                if self.p.is_some() || self.q.is_some() {
                    return Err(invalid(name, "p", "CI and DIII take N"));
                }
                let n = self.big_n.ok_or_else(|| invalid(name, "N", "missing"))?;
                if family == Family::CI {
                    SpaceSpec::ci(n, sign)
                } else {
                    SpaceSpec::diii(n, sign)
                }
            }
        };
        spec.map_err(|e| invalid(name, "family", e.to_string()))
    }

    fn resolve_functions(&self, spec: &SpaceSpec) -> Result<Vec<TestFunction>, CliError> {
        let name = &self.name;
        let mut fs = Vec::new();
        if let Some(suite) = &self.suite {
            fs.extend(
                TestFunction::suite(suite, spec)
                    .ok_or_else(|| invalid(name, "suite", format!("unknown suite `{suite}`")))?,
            );
        }
        for f in &self.functions {
            fs.push(
                TestFunction::builtin(f, spec)
                    .ok_or_else(|| invalid(name, "functions", format!("unknown function `{f}`")))?,
            );
        }
        for inline in &self.inline {
            let monomials = inline
                .terms
                .iter()
                .map(|t| Monomial {
                    coeff: c64(t.coeff[0], t.coeff[1]),
                    factors: t
                        .factors
                        .iter()
                        .map(|&[row, col, power]| Factor {
                            row: row as usize,
                            col: col as usize,
                            power,
                        })
                        .collect(),
                })
                .collect();
            fs.push(
                TestFunction::new(inline.name.clone(), monomials, inline.damping)
                    .map_err(|e| invalid(name, "inline.damping", e.to_string()))?,
            );
        }
        if fs.is_empty() {
            return Err(invalid(name, "functions", "no suite, functions or inline definitions"));
        }
        for f in &fs {
            f.validate(spec).map_err(|e| invalid(name, "functions", e.to_string()))?;
        }
        Ok(fs)
    }

    fn check_t_grid(&self) -> Result<(), CliError> {
        if self.t_grid.is_empty() {
            return Err(invalid(&self.name, "t_grid", "empty"));
        }
        if let Some(t) = self.t_grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(invalid(&self.name, "t_grid", format!("t = {t} is outside [0, 1]")));
        }
        Ok(())
    }

    fn check_common(&self) -> Result<(), CliError> {
        let name = &self.name;
        if let Some(order) = &self.order {
            if order.is_empty() || order.iter().any(|&o| o < 8) {
                return Err(invalid(name, "order", "quadrature orders must be at least 8"));
            }
        }
        if let Some(b) = self.budget {
            if b < 1000 {
                return Err(invalid(name, "budget", "at least 1000 samples are required"));
            }
        }
        if self.chunks == Some(0) {
            return Err(invalid(name, "chunks", "must be positive"));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid(name, "sigma", "must be positive"));
            }
        }
        if self.frames == Some(0) {
            return Err(invalid(name, "frames", "must be positive"));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<Case, CliError> {
        let name = &self.name;
        self.check_common()?;
        let case = |spec, functions, spin_functions, t_grid| Case {
            config: self.clone(),
            kind: self.kind,
            spec,
            functions,
            spin_functions,
            t_grid,
        };
        match self.kind {
            CaseKind::Theorem => {
                self.check_t_grid()?;
                let spec = self.spec()?;
                let fs = self.resolve_functions(&spec)?;
                Ok(case(Some(spec), fs, Vec::new(), self.t_grid.clone()))
            }
            CaseKind::RadiusSweep => {
                self.check_t_grid()?;
                let spec = self.spec()?;
                if spec.sign() != Sign::Compact {
                    return Err(invalid(name, "sign", "radius sweeps need the compact sign"));
                }
                let radii = self.radii.as_ref().ok_or_else(|| invalid(name, "radii", "missing"))?;
                if radii.is_empty() || radii.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(invalid(name, "radii", "must be non-empty and strictly ascending"));
                }
                if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
                    return Err(invalid(name, "radii", format!("r = {r} is outside (0, 1)")));
                }
                let fs = self.resolve_functions(&spec)?;
                Ok(case(Some(spec), fs, Vec::new(), self.t_grid.clone()))
            }
            CaseKind::Boundary => {
                self.check_t_grid()?;
                let spec = self.spec()?;
                let radii = self.radii.as_ref().ok_or_else(|| invalid(name, "radii", "missing"))?;
                let bad = |r: f64| !(r > 0.0) || (spec.sign() == Sign::Compact && r >= 1.0);
                if radii.is_empty() {
                    return Err(invalid(name, "radii", "empty"));
                }
                if let Some(r) = radii.iter().find(|r| bad(**r)) {
                    return Err(invalid(
                        name,
                        "radii",
                        format!("r = {r}: compact boundaries need 0 < r < 1, non-compact ones r > 0"),
                    ));
                }
                Ok(case(Some(spec), Vec::new(), Vec::new(), self.t_grid.clone()))
            }
            CaseKind::Spin => {
                let spins = self.spins.as_ref().ok_or_else(|| invalid(name, "S", "missing"))?;
                if let Some(s) = spins.iter().find(|s| !((2.0 * **s) >= 1.0 && (2.0 * **s).fract() == 0.0)) {
                    return Err(invalid(name, "S", format!("S = {s} is not a positive half-integer")));
                }
                let fs = if self.functions.is_empty() {
                    SpinFunction::ALL.to_vec()
                } else {
                    self.functions
                        .iter()
                        .map(|f| {
                            SpinFunction::from_name(f)
                                .ok_or_else(|| invalid(name, "functions", format!("unknown spin function `{f}`")))
                        })
                        .collect::<Result<_, _>>()?
                };
                Ok(case(None, Vec::new(), fs, Vec::new()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCALAR: &str = r#"
schema_version = 1
seed = 42

[[case]]
name = "scalar"
family = "AIII"
p = 1
q = 1
sign = "compact"
suite = "mixed"
"#;

    #[test]
    fn parses_and_validates() {
        let cfg = RunConfig::from_toml(SCALAR).unwrap();
        let cases = cfg.validate().unwrap();
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].functions.len(), 5);
        assert_eq!(cases[0].t_grid.len(), 5);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_fields() {
        let unknown = SCALAR.replace("suite = \"mixed\"", "suite = \"mixed\"\ncolour = 3");
        assert!(matches!(RunConfig::from_toml(&unknown), Err(CliError::Parse(_))));

        let bad_t = SCALAR.replace("suite = \"mixed\"", "suite = \"mixed\"\nt_grid = [0.0, 1.5]");
        let err = RunConfig::from_toml(&bad_t).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("t_grid"), "{err}");

        let undamped = SCALAR.replace("compact", "noncompact");
        let err = RunConfig::from_toml(&undamped).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("no damping"), "{err}");
    }

    #[test]
    fn inline_functions() {
        let text = SCALAR.replace(
            "suite = \"mixed\"",
            "[[case.inline]]\nname = \"m12m21\"\nterms = [{ coeff = [2.0, 0.0], factors = [[0, 1, 1], [1, 0, 1]] }]",
        );
        let cases = RunConfig::from_toml(&text).unwrap().validate().unwrap();
        assert_eq!(cases[0].functions[0].name(), "m12m21");
        let out_of_range = text.replace("[1, 0, 1]", "[3, 0, 1]");
        assert!(RunConfig::from_toml(&out_of_range).unwrap().validate().is_err());
    }
}
