//! Run configuration files.
//!
//! A config is a TOML document. Top-level keys set the mode and stepping,
//! `[model]` holds the kinetic and potential expressions, `[[axes]]` lists
//! the grid axes in storage order, `[initial]` selects the initial state and
//! `[[checks]]` lists assertions evaluated after the run.
//!
//! ```toml
//! mode = "moyal"
//! dt = 0.0015707963267948967
//! n_steps = 1000
//! snapshot_every = 100
//!
//! [model]
//! T = "p^2/(2*m)"
//! U = "m*w^2*x^2/2"
//! params = { m = 1.0, w = 1.0 }
//!
//! [[axes]]
//! label = "x"
//! n = 256
//! min = -6.0
//! max = 6.0
//!
//! [[axes]]
//! label = "p"
//! n = 256
//! min = -6.0
//! max = 6.0
//!
//! [initial]
//! kind = "gaussian"
//! x0 = 1.0
//! p0 = 0.0
//! sigma_x = 0.7071067811865476
//! ```

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};
use toml::Spanned;

use phasespace::expr::{parse, Variable};
use phasespace::scenarios::{Check, InitialState, Scenario};
use phasespace::{make_grid, AxisSpec, EvolutionMode, HamiltonianModel, Params};

/// A configuration problem, located by file and (when known) line.
#[derive(Debug, thiserror::Error)]
#[error("{}{}: {message}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: Option<usize>,
    pub message: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Spanned<String>,
    #[serde(default = "one")]
    hbar: f64,
    #[serde(default)]
    t0: f64,
    dt: Spanned<f64>,
    n_steps: usize,
    #[serde(default)]
    snapshot_every: usize,
    output: Option<PathBuf>,
    #[serde(default)]
    seed: u64,
    model: Spanned<RawModel>,
    axes: Spanned<Vec<AxisSpec>>,
    initial: Spanned<InitialState>,
    #[serde(default)]
    checks: Vec<Check>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(rename = "T")]
    kinetic: Spanned<String>,
    #[serde(rename = "U")]
    potential: Spanned<String>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

fn one() -> f64 {
    1.0
}

/// A validated run description.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub name: String,
    pub mode: EvolutionMode,
    pub model: HamiltonianModel,
    pub axes: Vec<AxisSpec>,
    pub hbar: f64,
    pub initial: InitialState,
    pub t0: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub snapshot_every: usize,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl RunConfig {
    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        RunConfig::from_toml(&text, path)
    }

    /// Parses and validates config text; `path` is used for error messages
    /// and to name the run.
    pub fn from_toml(text: &str, path: &Path) -> Result<RunConfig, ConfigError> {
        let err = |span: Option<Range<usize>>, message: String| ConfigError {
            path: path.to_path_buf(),
            line: span.map(|s| line_of(text, s.start)),
            message,
        };
        let raw: RawConfig = toml::from_str(text).map_err(|e| err(e.span(), e.message().to_string()))?;

        let mode = EvolutionMode::parse(raw.mode.get_ref()).ok_or_else(|| {
            let names: Vec<_> = EvolutionMode::ALL.iter().map(|m| m.name()).collect();
            err(
                Some(raw.mode.span()),
                format!("unknown mode `{}` (expected one of {})", raw.mode.get_ref(), names.join(", ")),
            )
        })?;

        let m = raw.model.get_ref();
        let kinetic = parse(m.kinetic.get_ref()).map_err(|e| err(Some(m.kinetic.span()), format!("T: {e}")))?;
        let potential = parse(m.potential.get_ref()).map_err(|e| err(Some(m.potential.span()), format!("U: {e}")))?;
        let blame = if kinetic.depends_on(Variable::X) {
            m.kinetic.span()
        } else if potential.depends_on(Variable::P) {
            m.potential.span()
        } else {
            raw.model.span()
        };
        let params: Params = m.params.clone();
        let model = HamiltonianModel::new(kinetic, potential, params).map_err(|e| err(Some(blame), strip_kind(&e)))?;

        if !(raw.dt.get_ref().is_finite() && *raw.dt.get_ref() > 0.0) {
            return Err(err(Some(raw.dt.span()), "dt must be positive and finite".into()));
        }
        let grid = make_grid(raw.axes.get_ref(), raw.hbar).map_err(|e| err(Some(raw.axes.span()), e.to_string()))?;
        mode.check_grid(&grid).map_err(|e| err(Some(raw.axes.span()), e.to_string()))?;
        if let InitialState::Expressions { re, im, .. } = raw.initial.get_ref() {
            for (which, s) in [("re", re), ("im", im)] {
                parse(s).map_err(|e| err(Some(raw.initial.span()), format!("initial {which}: {e}")))?;
            }
        }

        Ok(RunConfig {
            name: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into()),
            mode,
            model,
            axes: raw.axes.into_inner(),
            hbar: raw.hbar,
            initial: raw.initial.into_inner(),
            t0: raw.t0,
            dt: *raw.dt.get_ref(),
            n_steps: raw.n_steps,
            snapshot_every: raw.snapshot_every,
            output: raw.output,
            seed: raw.seed,
            checks: raw.checks,
        })
    }

    /// Content hash identifying this run: the first 16 hex digits of the
    /// SHA-256 of the canonical JSON description.
    pub fn run_id(&self) -> String {
        let canonical = serde_json::json!({
            "mode": self.mode,
            "T": self.model.kinetic().to_string(),
            "U": self.model.potential().to_string(),
            "params": self.model.params(),
            "axes": self.axes,
            "hbar": self.hbar,
            "initial": self.initial,
            "t0": self.t0,
            "dt": self.dt,
            "n_steps": self.n_steps,
            "seed": self.seed,
        });
        let digest = Sha256::digest(canonical.to_string().as_bytes());
        format!("{digest:x}")[..16].to_string()
    }
}

impl From<Scenario> for RunConfig {
    fn from(s: Scenario) -> RunConfig {
        RunConfig {
            name: s.name.to_string(),
            mode: s.mode,
            model: s.model,
            axes: s.axes,
            hbar: s.hbar,
            initial: s.initial,
            t0: s.t0,
            dt: s.dt,
            n_steps: s.n_steps,
            snapshot_every: 0,
            output: None,
            seed: 0,
            checks: s.checks,
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text.as_bytes()[..offset.min(text.len())].iter().filter(|&&b| b == b'\n').count() + 1
}

fn strip_kind(e: &phasespace::Error) -> String {
    match e {
        phasespace::Error::Model(m) => m.clone(),
        other => other.to_string(),
    }
}
