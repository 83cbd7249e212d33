//! JSON configs and the shared dipole and control sources.

use std::path::{Path, PathBuf};

use driftlab::controls::{ControlFamily, ControlSignal};
use driftlab::spectral::{DipoleMoment, DipoleSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::Workdir;

/// A dipole given as a file, a built-in name, or an inline spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuSource {
    Named(String),
    Inline(DipoleSpec<f64>),
}

/// Built-in dipole names accepted wherever a dipole path is expected.
pub const LINEAR_NAMES: [&str; 2] = ["linear", "x-1/2"];

impl MuSource {
    pub fn load(&self, wd: &Workdir) -> Result<DipoleMoment<f64>, CliError> {
        match self {
            MuSource::Named(s) if LINEAR_NAMES.contains(&s.as_str()) => Ok(DipoleMoment::centered_linear()),
            MuSource::Named(path) => {
                let text = wd.read(Path::new(path))?;
                let spec: DipoleSpec<f64> = parse_json(&text, path)?;
                Ok(DipoleMoment::try_from(spec)?)
            }
            MuSource::Inline(spec) => Ok(DipoleMoment::try_from(spec.clone())?),
        }
    }
}

/// A control given by an analytic family or a `t,u` CSV file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ControlSource {
    Csv {
        csv: String,
    },
    Family(ControlFamily),
}

impl ControlSource {
    /// Samples the family on `steps` panels of `(0, horizon)`; CSV controls
    /// carry their own grid and must end at `horizon` when one is given.
    pub fn sample(&self, wd: &Workdir, horizon: f64, steps: usize) -> Result<ControlSignal<f64>, CliError> {
        match self {
            ControlSource::Family(f) => Ok(f.sample(horizon, steps)?),
            ControlSource::Csv { csv } => {
                let u = read_control_csv(wd, Path::new(csv))?;
                if (u.horizon() - horizon).abs() > 1e-12 * horizon.max(1.0) {
                    return Err(CliError::Config(format!(
                        "{csv} ends at t = {}, expected {horizon}",
                        u.horizon()
                    )));
                }
                Ok(u)
            }
        }
    }
}

#[derive(Debug, Deserialize)]
struct CsvSample {
    t: f64,
    u: f64,
}

/// Reads a control sampled on a uniform grid starting at `t = 0`.
pub fn read_control_csv(wd: &Workdir, path: &Path) -> Result<ControlSignal<f64>, CliError> {
    let text = wd.read(path)?;
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let bad = |m: String| CliError::Config(format!("{}: {m}", path.display()));
    let rows: Vec<CsvSample> = rd
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| bad(e.to_string()))?;
    if rows.len() < 3 {
        return Err(bad(format!("need at least 3 samples, got {}", rows.len())));
    }
    if rows[0].t != 0.0 {
        return Err(bad("first sample must be at t = 0".into()));
    }
    let horizon = rows[rows.len() - 1].t;
    let dt = horizon / (rows.len() - 1) as f64;
    for (i, r) in rows.iter().enumerate() {
        if (r.t - i as f64 * dt).abs() > 1e-9 * dt {
            return Err(bad(format!("grid not uniform at row {}", i + 1)));
        }
    }
    Ok(ControlSignal::new(horizon, rows.iter().map(|r| r.u).collect())?)
}

pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
}

pub fn load_config<T: DeserializeOwned>(wd: &Workdir, path: &PathBuf) -> Result<T, CliError> {
    parse_json(&wd.read(path)?, &path.display().to_string())
}

fn default_modes() -> usize {
    driftlab::pde_sim::DEFAULT_MODES
}

fn default_substeps() -> usize {
    4
}

fn one() -> f64 {
    1.0
}

fn first_mode() -> usize {
    1
}

fn four() -> usize {
    4
}

/// `simulate`: one trajectory of the Galerkin system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub mu: MuSource,
    #[serde(default = "default_modes")]
    pub modes: usize,
    pub horizon: f64,
    pub steps: usize,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    pub control: ControlSource,
    /// Scale applied to the control.
    #[serde(default = "one")]
    pub eps: f64,
    /// The initial state is `φ_{initial_mode}`.
    #[serde(default = "first_mode")]
    pub initial_mode: usize,
    /// Coefficients `c_1..c_{j_max_out}` are written.
    #[serde(default = "four")]
    pub j_max_out: usize,
}

fn default_cutoff() -> usize {
    2000
}

fn one_substep() -> usize {
    1
}

/// `drift`: the ε-ladder experiment on the lost direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    pub mu: MuSource,
    pub k: usize,
    pub n: usize,
    #[serde(default = "default_modes")]
    pub modes: usize,
    /// Cutoff of the coupling table behind `A^n_K` and `Q_n`.
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    /// Final time; exactly one of `horizon` and `t_frac` (a fraction of `T*`).
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub t_frac: Option<f64>,
    pub steps: usize,
    #[serde(default = "one_substep")]
    pub substeps: usize,
    /// Defaults to the boundary-free bump-modulated control of order `n`.
    #[serde(default)]
    pub control: Option<ControlSource>,
    /// Defaults to `0` followed by the standard ladder.
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
    /// Rescales the control so the predicted drift at the smallest positive
    /// ε equals this value. Narrow dipoles need it: their `T*` is tiny.
    #[serde(default)]
    pub drift_target: Option<f64>,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl DriftConfig {
    pub fn eps_list(&self) -> Vec<f64> {
        self.eps.clone().unwrap_or_else(|| {
            let mut v = vec![0.0];
            v.extend(driftlab::pde_sim::default_eps_ladder());
            v
        })
    }

    pub fn control(&self) -> ControlSource {
        self.control.clone().unwrap_or(ControlSource::Family(ControlFamily::BumpModulated {
            omega: 0.0,
            order: self.n,
            amplitude: 1.0,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"mu": "linear", "horizon": 0.01, "steps": 10, "control": {"family": "cos", "omega": 1.0}, "bogus": 1}"#;
        assert!(parse_json::<SimulateConfig>(text, "x").is_err());
        let ok = text.replace(r#", "bogus": 1"#, "");
        let c: SimulateConfig = parse_json(&ok, "x").unwrap();
        assert_eq!(c.modes, 60);
        assert_eq!(c.mu, MuSource::Named("linear".into()));
    }

    #[test]
    fn inline_dipole_and_csv_control() {
        let text = r#"{"mu": {"kind": "polynomial", "coeffs": [-0.5, 1.0]}, "k": 1, "n": 1, "steps": 100,
                       "horizon": 0.01, "control": {"csv": "u.csv"}}"#;
        let c: DriftConfig = parse_json(text, "x").unwrap();
        assert!(matches!(c.mu, MuSource::Inline(_)));
        assert!(matches!(c.control, Some(ControlSource::Csv { .. })));
        assert_eq!(c.eps_list()[0], 0.0);
    }
}
