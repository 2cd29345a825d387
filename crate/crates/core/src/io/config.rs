//! Flat `key = value` run configuration.
//!
//! One pair per line, `#` starts a comment, blank lines are ignored. Every
//! key has a default; unknown keys are rejected. The coupling strength is
//! given either as `eta` or as the pulse pair `D` and `delta_t`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::bohm_dynamics::EnsembleSpec;
use crate::field_mode::ModeState;
use crate::reconstruction::{GridSpec, MeasurementConfig};
use crate::wavefield::{WaveModel, WaveParams};
use crate::weak_measurement::coupling_eta;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("conflicting settings: {0}")]
    Conflict(String),
    #[error("invalid value for `{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Fields,
    Trajectories,
    WeakScan,
    Reconstruct,
    Compare,
    FieldMode,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Fields,
        Stage::Trajectories,
        Stage::WeakScan,
        Stage::Reconstruct,
        Stage::Compare,
        Stage::FieldMode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Fields => "fields",
            Stage::Trajectories => "trajectories",
            Stage::WeakScan => "weak-scan",
            Stage::Reconstruct => "reconstruct",
            Stage::Compare => "compare",
            Stage::FieldMode => "field-mode",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Stage::Fields => "fields.csv",
            Stage::Trajectories => "trajectories.csv",
            Stage::WeakScan => "weak_scan.csv",
            Stage::Reconstruct => "reconstructed.csv",
            Stage::Compare => "compare.csv",
            Stage::FieldMode => "mode_beable.csv",
        }
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    Eta(f64),
    Pulse { strength: f64, duration: f64 },
}

impl Coupling {
    pub fn eta(&self) -> f64 {
        match *self {
            Coupling::Eta(e) => e,
            Coupling::Pulse { strength, duration } => coupling_eta(strength, duration),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldsSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub nt: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub k: f64,
    pub c: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub q0: Complex64,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: String,
    pub wave: WaveParams,
    pub fields: FieldsSpec,
    pub n_trajectories: usize,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub trajectory_stride: usize,
    pub grid: GridSpec,
    pub coupling: Coupling,
    pub n_total: u64,
    pub noiseless: bool,
    pub n_reconstruct: usize,
    pub start_plane: usize,
    pub exact_substeps: usize,
    pub mode: ModeSpec,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub stages: Vec<Stage>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            scenario: "two-slit".into(),
            wave: WaveParams::default(),
            fields: FieldsSpec {
                x_min: -20.0,
                x_max: 20.0,
                nx: 201,
                t_min: 0.0,
                t_max: 10.0,
                nt: 11,
            },
            n_trajectories: 100,
            t0: 0.0,
            t1: 10.0,
            dt: 0.01,
            trajectory_stride: 10,
            grid: GridSpec::default(),
            coupling: Coupling::Eta(0.05),
            n_total: 1_000_000,
            noiseless: false,
            n_reconstruct: 200,
            start_plane: 0,
            exact_substeps: 20,
            mode: ModeSpec {
                k: 1.0,
                c: 1.0,
                alpha: Complex64::new(h, 0.0),
                beta: Complex64::new(h, 0.0),
                q0: Complex64::new(0.5, 0.0),
                t0: 0.0,
                t1: 20.0,
                dt: 0.01,
                stride: 10,
            },
            seed: 1,
            out_dir: PathBuf::from("out"),
            stages: Stage::ALL.to_vec(),
        }
    }
}

/// Every accepted key, in serialization order.
pub const KEYS: &[&str] = &[
    "scenario",
    "mass",
    "sigma0",
    "x1",
    "x2",
    "k1",
    "k2",
    "delta",
    "potential",
    "potential_gauge",
    "p_y",
    "rho_min",
    "fields_x_min",
    "fields_x_max",
    "fields_nx",
    "fields_t_min",
    "fields_t_max",
    "fields_nt",
    "n_trajectories",
    "t0",
    "t1",
    "dt",
    "trajectory_stride",
    "plane_t_start",
    "plane_t_end",
    "n_planes",
    "x_min",
    "x_max",
    "n_bins",
    "eta",
    "D",
    "delta_t",
    "n_total",
    "noiseless",
    "n_reconstruct",
    "start_plane",
    "exact_substeps",
    "mode_k",
    "mode_c",
    "mode_alpha_re",
    "mode_alpha_im",
    "mode_beta_re",
    "mode_beta_im",
    "mode_q0_re",
    "mode_q0_im",
    "mode_t0",
    "mode_t1",
    "mode_dt",
    "mode_stride",
    "seed",
    "out_dir",
    "stages",
];

/// Raw coupling keys seen while parsing; resolved once at the end.
#[derive(Default)]
struct CouplingKeys {
    eta: Option<f64>,
    strength: Option<f64>,
    duration: Option<f64>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::Invalid {
        key: key.to_string(),
        msg: format!("`{value}`: {e}"),
    })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Parses config text; overrides are applied on top as further lines.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_with_overrides(text, &[])
    }

    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut coupling = CouplingKeys::default();
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.to_string()))
            .chain(overrides.iter().map(|o| (0, o.clone())));
        for (line_no, raw) in lines {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: line_no,
                msg: format!("expected `key = value`, found `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line: line_no,
                    key: key.to_string(),
                });
            }
            cfg.set(key, value, &mut coupling)?;
        }
        cfg.coupling = match (coupling.eta, coupling.strength, coupling.duration) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(ConfigError::Conflict(
                    "`eta` cannot be combined with `D` / `delta_t`".into(),
                ))
            }
            (Some(eta), None, None) => Coupling::Eta(eta),
            (None, Some(strength), Some(duration)) => Coupling::Pulse { strength, duration },
            (None, Some(_), None) | (None, None, Some(_)) => {
                return Err(ConfigError::Conflict("`D` and `delta_t` must be given together".into()))
            }
            (None, None, None) => Coupling::Eta(0.05),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str, coupling: &mut CouplingKeys) -> Result<(), ConfigError> {
        let w = &mut self.wave;
        match key {
            "scenario" => self.scenario = v.to_string(),
            "mass" => w.mass = parse_value(key, v)?,
            "sigma0" => w.sigma0 = parse_value(key, v)?,
            "x1" => w.x1 = parse_value(key, v)?,
            "x2" => w.x2 = parse_value(key, v)?,
            "k1" => w.k1 = parse_value(key, v)?,
            "k2" => w.k2 = parse_value(key, v)?,
            "delta" => w.delta = parse_value(key, v)?,
            "potential" => w.potential = parse_value(key, v)?,
            "potential_gauge" => w.gauge_corrected = parse_value(key, v)?,
            "p_y" => w.p_y = parse_value(key, v)?,
            "rho_min" => w.rho_min = parse_value(key, v)?,
            "fields_x_min" => self.fields.x_min = parse_value(key, v)?,
            "fields_x_max" => self.fields.x_max = parse_value(key, v)?,
            "fields_nx" => self.fields.nx = parse_value(key, v)?,
            "fields_t_min" => self.fields.t_min = parse_value(key, v)?,
            "fields_t_max" => self.fields.t_max = parse_value(key, v)?,
            "fields_nt" => self.fields.nt = parse_value(key, v)?,
            "n_trajectories" => self.n_trajectories = parse_value(key, v)?,
            "t0" => self.t0 = parse_value(key, v)?,
            "t1" => self.t1 = parse_value(key, v)?,
            "dt" => self.dt = parse_value(key, v)?,
            "trajectory_stride" => self.trajectory_stride = parse_value(key, v)?,
            "plane_t_start" => self.grid.t_start = parse_value(key, v)?,
            "plane_t_end" => self.grid.t_end = parse_value(key, v)?,
            "n_planes" => self.grid.n_planes = parse_value(key, v)?,
            "x_min" => self.grid.x_min = parse_value(key, v)?,
            "x_max" => self.grid.x_max = parse_value(key, v)?,
            "n_bins" => self.grid.n_bins = parse_value(key, v)?,
            "eta" => coupling.eta = Some(parse_value(key, v)?),
            "D" => coupling.strength = Some(parse_value(key, v)?),
            "delta_t" => coupling.duration = Some(parse_value(key, v)?),
            "n_total" => self.n_total = parse_value(key, v)?,
            "noiseless" => self.noiseless = parse_value(key, v)?,
            "n_reconstruct" => self.n_reconstruct = parse_value(key, v)?,
            "start_plane" => self.start_plane = parse_value(key, v)?,
            "exact_substeps" => self.exact_substeps = parse_value(key, v)?,
            "mode_k" => self.mode.k = parse_value(key, v)?,
            "mode_c" => self.mode.c = parse_value(key, v)?,
            "mode_alpha_re" => self.mode.alpha.re = parse_value(key, v)?,
            "mode_alpha_im" => self.mode.alpha.im = parse_value(key, v)?,
            "mode_beta_re" => self.mode.beta.re = parse_value(key, v)?,
            "mode_beta_im" => self.mode.beta.im = parse_value(key, v)?,
            "mode_q0_re" => self.mode.q0.re = parse_value(key, v)?,
            "mode_q0_im" => self.mode.q0.im = parse_value(key, v)?,
            "mode_t0" => self.mode.t0 = parse_value(key, v)?,
            "mode_t1" => self.mode.t1 = parse_value(key, v)?,
            "mode_dt" => self.mode.dt = parse_value(key, v)?,
            "mode_stride" => self.mode.stride = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "stages" => {
                self.stages = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<Stage>().map_err(|msg| ConfigError::Invalid {
                            key: key.to_string(),
                            msg,
                        })
                    })
                    .collect::<Result<_, _>>()?;
                self.stages.sort();
                self.stages.dedup();
            }
            _ => unreachable!("key list and setter disagree on `{key}`"),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, msg: &str| ConfigError::Invalid {
            key: key.into(),
            msg: msg.into(),
        };
        WaveModel::new(self.wave.clone()).map_err(|e| invalid("wave model", &e.to_string()))?;
        self.grid.validate().map_err(|e| invalid("grid", &e.to_string()))?;
        if self.fields.nx == 0 || self.fields.nt == 0 {
            return Err(invalid("fields_nx/fields_nt", "must be positive"));
        }
        if !(self.t1 > self.t0) || !(self.dt > 0.0) {
            return Err(invalid("t0/t1/dt", "need t1 > t0 and dt > 0"));
        }
        if self.trajectory_stride == 0 || self.mode.stride == 0 || self.exact_substeps == 0 {
            return Err(invalid("stride", "strides and substeps must be positive"));
        }
        if let Coupling::Pulse { duration, .. } = self.coupling {
            if !(duration >= 0.0) {
                return Err(invalid("delta_t", "must be non-negative"));
            }
        }
        if !(self.coupling.eta() > 0.0) {
            return Err(invalid("eta", "coupling strength must be positive"));
        }
        if self.n_total == 0 && !self.noiseless {
            return Err(invalid("n_total", "must be positive"));
        }
        if self.start_plane >= self.grid.n_planes - 1 {
            return Err(invalid("start_plane", "must precede the last plane"));
        }
        if !(self.mode.t1 > self.mode.t0) || !(self.mode.dt > 0.0) {
            return Err(invalid("mode_t0/mode_t1/mode_dt", "need t1 > t0 and dt > 0"));
        }
        self.mode_state().map_err(|e| invalid("mode", &e.to_string()))?;
        Ok(())
    }

    pub fn model(&self) -> WaveModel {
        WaveModel::new(self.wave.clone()).expect("validated on load")
    }

    pub fn mode_state(&self) -> crate::Result<ModeState> {
        ModeState::new(self.mode.k, self.mode.c, self.mode.alpha, self.mode.beta)
    }

    pub fn ensemble(&self) -> EnsembleSpec {
        EnsembleSpec {
            n: self.n_trajectories,
            t0: self.t0,
            t1: self.t1,
            dt: self.dt,
            seed: self.seed,
        }
    }

    pub fn measurement(&self) -> MeasurementConfig {
        MeasurementConfig {
            eta: self.coupling.eta(),
            n_total: self.n_total,
            noiseless: self.noiseless,
        }
    }

    /// Serializes every key; `parse(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let w = &self.wave;
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("scenario", self.scenario.clone());
        put("mass", w.mass.to_string());
        put("sigma0", w.sigma0.to_string());
        put("x1", w.x1.to_string());
        put("x2", w.x2.to_string());
        put("k1", w.k1.to_string());
        put("k2", w.k2.to_string());
        put("delta", w.delta.to_string());
        put("potential", w.potential.to_string());
        put("potential_gauge", w.gauge_corrected.to_string());
        put("p_y", w.p_y.to_string());
        put("rho_min", w.rho_min.to_string());
        put("fields_x_min", self.fields.x_min.to_string());
        put("fields_x_max", self.fields.x_max.to_string());
        put("fields_nx", self.fields.nx.to_string());
        put("fields_t_min", self.fields.t_min.to_string());
        put("fields_t_max", self.fields.t_max.to_string());
        put("fields_nt", self.fields.nt.to_string());
        put("n_trajectories", self.n_trajectories.to_string());
        put("t0", self.t0.to_string());
        put("t1", self.t1.to_string());
        put("dt", self.dt.to_string());
        put("trajectory_stride", self.trajectory_stride.to_string());
        put("plane_t_start", self.grid.t_start.to_string());
        put("plane_t_end", self.grid.t_end.to_string());
        put("n_planes", self.grid.n_planes.to_string());
        put("x_min", self.grid.x_min.to_string());
        put("x_max", self.grid.x_max.to_string());
        put("n_bins", self.grid.n_bins.to_string());
        match self.coupling {
            Coupling::Eta(e) => put("eta", e.to_string()),
            Coupling::Pulse { strength, duration } => {
                put("D", strength.to_string());
                put("delta_t", duration.to_string());
            }
        }
        put("n_total", self.n_total.to_string());
        put("noiseless", self.noiseless.to_string());
        put("n_reconstruct", self.n_reconstruct.to_string());
        put("start_plane", self.start_plane.to_string());
        put("exact_substeps", self.exact_substeps.to_string());
        put("mode_k", self.mode.k.to_string());
        put("mode_c", self.mode.c.to_string());
        put("mode_alpha_re", self.mode.alpha.re.to_string());
        put("mode_alpha_im", self.mode.alpha.im.to_string());
        put("mode_beta_re", self.mode.beta.re.to_string());
        put("mode_beta_im", self.mode.beta.im.to_string());
        put("mode_q0_re", self.mode.q0.re.to_string());
        put("mode_q0_im", self.mode.q0.im.to_string());
        put("mode_t0", self.mode.t0.to_string());
        put("mode_t1", self.mode.t1.to_string());
        put("mode_dt", self.mode.dt.to_string());
        put("mode_stride", self.mode.stride.to_string());
        put("seed", self.seed.to_string());
        put("out_dir", self.out_dir.display().to_string());
        put(
            "stages",
            self.stages.iter().map(|s| s.name()).collect::<Vec<_>>().join(","),
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
        assert_eq!(RunConfig::parse("# nothing\n\n   \n").unwrap(), RunConfig::default());
    }

    #[test]
    fn eta_and_pulse_conflict() {
        let err = RunConfig::parse("eta = 0.05\nD = 0.5\n").unwrap_err();
        assert!(matches!(err, ConfigError::Conflict(_)));
        assert!(matches!(
            RunConfig::parse("D = 0.5").unwrap_err(),
            ConfigError::Conflict(_)
        ));
        let cfg = RunConfig::parse("D = 0.5\ndelta_t = 0.1").unwrap();
        assert!((cfg.measurement().eta - 0.05).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(
            RunConfig::parse("mass = 1\nsigmaO = 2\n").unwrap_err(),
            ConfigError::UnknownKey {
                line: 2,
                key: "sigmaO".into()
            }
        );
        assert!(matches!(
            RunConfig::parse("\n\nmass 2").unwrap_err(),
            ConfigError::Parse { line: 3, .. }
        ));
        assert!(matches!(
            RunConfig::parse("mass = heavy").unwrap_err(),
            ConfigError::Invalid { .. }
        ));
        assert!(matches!(
            RunConfig::parse("mass = -1").unwrap_err(),
            ConfigError::Invalid { .. }
        ));
        assert!(matches!(
            RunConfig::parse("stages = fields,plots").unwrap_err(),
            ConfigError::Invalid { .. }
        ));
    }

    #[test]
    fn comments_and_overrides() {
        let cfg = RunConfig::parse_with_overrides(
            "mass = 2 # heavier\nseed = 4",
            &["seed=9".to_string(), "stages = compare, fields".to_string()],
        )
        .unwrap();
        assert_eq!(cfg.wave.mass, 2.0);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.stages, vec![Stage::Fields, Stage::Compare]);
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.wave.x1 = -3.3;
        cfg.wave.delta = 0.1 + 0.2;
        cfg.coupling = Coupling::Pulse {
            strength: 0.3,
            duration: 0.07,
        };
        cfg.mode.beta = Complex64::new(0.1, -0.7);
        cfg.stages = vec![Stage::WeakScan, Stage::FieldMode];
        let again = RunConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_text(), cfg.to_text());
    }
}
