//! Scenario files and run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::criteria::{Criterion, FreqGrid};
use crate::error::{Error, Result};
use crate::frames::DomainKind;
use crate::models::{GridParams, VscParams};

/// Parameter sweep: `steps` points from `from` to `to`, inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Dotted path such as `grid.lg` or `vsc.kp_pll`.
    pub parameter: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.from],
            n => (0..n).map(|k| self.from + (self.to - self.from) * k as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSpec {
    pub criteria: Vec<Criterion>,
    pub domains: Vec<DomainKind>,
    /// Displayed band (Hz); verdict grids extend it automatically.
    pub f_min: f64,
    pub f_max: f64,
    pub step_hz: f64,
    /// Spacing of the logarithmic-derivative scan (Hz).
    pub logderiv_step_hz: f64,
    /// Oracle stability margin on the largest real part.
    pub margin: f64,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec {
            criteria: vec![Criterion::Determinant, Criterion::SchurLoop, Criterion::Logderiv],
            domains: vec![DomainKind::Dq, DomainKind::Sequence],
            f_min: -100.0,
            f_max: 100.0,
            step_hz: 0.5,
            logderiv_step_hz: crate::logderiv::DEFAULT_STEP_HZ,
            margin: 1e-6,
        }
    }
}

/// Contents of a scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub vsc: VscParams,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.grid.validate()?;
        s.vsc.operating_point()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Scenario::from_toml(&text)
    }

    /// Copy with one dotted parameter replaced.
    pub fn with_parameter(&self, path: &str, value: f64) -> Result<Scenario> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::Config(e.to_string()))?;
        let mut slot = &mut v;
        for key in path.split('.') {
            slot = slot
                .get_mut(key)
                .ok_or_else(|| Error::Config(format!("unknown sweep parameter '{path}'")))?;
        }
        if !slot.is_number() {
            return Err(Error::Config(format!("sweep parameter '{path}' is not numeric")));
        }
        *slot = serde_json::json!(value);
        let s: Scenario = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        s.grid.validate()?;
        Ok(s)
    }

    /// `(value, scenario)` for every sweep point, or the scenario itself.
    pub fn sweep_points(&self) -> Result<Vec<(Option<f64>, Scenario)>> {
        match &self.sweep {
            None => Ok(vec![(None, self.clone())]),
            Some(sw) => sw
                .values()
                .into_iter()
                .map(|x| Ok((Some(x), self.with_parameter(&sw.parameter, x)?)))
                .collect(),
        }
    }
}

/// Everything a command needs besides the scenario itself.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario_path: PathBuf,
    pub criteria: Vec<Criterion>,
    pub domains: Vec<DomainKind>,
    pub f_min: f64,
    pub f_max: f64,
    pub step_hz: f64,
    pub logderiv_step_hz: f64,
    pub margin: f64,
    pub out_dir: PathBuf,
}

impl RunConfig {
    /// Scenario analysis settings with command-line overrides applied.
    pub fn resolve(
        scenario_path: PathBuf,
        scenario: &Scenario,
        out_dir: PathBuf,
        criteria: Option<Vec<Criterion>>,
        domains: Option<Vec<DomainKind>>,
        step_hz: Option<f64>,
    ) -> Result<Self> {
        let a = &scenario.analysis;
        let rc = RunConfig {
            scenario_path,
            criteria: criteria.unwrap_or_else(|| a.criteria.clone()),
            domains: domains.unwrap_or_else(|| a.domains.clone()),
            f_min: a.f_min,
            f_max: a.f_max,
            step_hz: step_hz.unwrap_or(a.step_hz),
            logderiv_step_hz: a.logderiv_step_hz,
            margin: a.margin,
            out_dir,
        };
        rc.validate()?;
        Ok(rc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.criteria.is_empty() {
            return Err(Error::Config("analysis.criteria: at least one criterion is required".into()));
        }
        if self.domains.is_empty() {
            return Err(Error::Config("analysis.domains: at least one domain is required".into()));
        }
        if !(self.f_min < self.f_max) {
            return Err(Error::Config(format!("analysis.f_min ({}) must be below f_max ({})", self.f_min, self.f_max)));
        }
        if !(self.step_hz > 0.0) || !(self.logderiv_step_hz > 0.0) {
            return Err(Error::Config("analysis.step_hz and logderiv_step_hz must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<FreqGrid> {
        FreqGrid::uniform_hz(self.f_min, self.f_max, self.step_hz)
    }
}

/// Parses a comma-separated list such as `determinant,logderiv`.
pub fn parse_list<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<Vec<T>> {
    s.split(',').filter(|x| !x.trim().is_empty()).map(|x| x.parse()).collect()
}
