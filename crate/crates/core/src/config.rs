//! Run configuration: a flat `section.key = value` text format, defaults,
//! validation and the shipped presets.
//!
//! Lines starting with `#` and blank lines are ignored. Every key is
//! optional; missing keys keep their defaults. Unknown keys are errors.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::ModelParams;
use crate::multigrid::MgParams;
use crate::sim::init::{InitKind, InitialCondition, Profile};
use crate::smoother::GhostRefresh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Simulate,
    Convergence,
    Complexity,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Convergence => "convergence",
            Mode::Complexity => "complexity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "simulate" => Some(Mode::Simulate),
            "convergence" => Some(Mode::Convergence),
            "complexity" => Some(Mode::Complexity),
            _ => None,
        }
    }
}

/// Norm for differences between successive refinements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorNorm {
    /// `sqrt(h² Σ e²)` on the coarser grid.
    #[default]
    L2,
    Max,
}

impl ErrorNorm {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorNorm::L2 => "l2",
            ErrorNorm::Max => "max",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "l2" => Some(ErrorNorm::L2),
            "max" => Some(ErrorNorm::Max),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub m: usize,
    pub n: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            m: 256,
            n: 256,
            lx: 1.0,
            ly: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub final_time: f64,
    /// Step count; 0 derives it from `final_time / dt`.
    pub steps: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            dt: 1.0e-6,
            final_time: 2.5e-2,
            steps: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    /// Run directory; `None` lets the caller pick one.
    pub dir: Option<PathBuf>,
    /// Steps between field snapshots; 0 spreads six snapshots over the run.
    pub snapshot_stride: usize,
    /// Steps between diagnostics rows.
    pub diag_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            snapshot_stride: 0,
            diag_stride: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    /// Number of grids, each twice as fine as the previous one.
    pub levels: usize,
    pub norm: ErrorNorm,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            levels: 3,
            norm: ErrorNorm::L2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub mode: Mode,
    pub grid: GridConfig,
    pub model: ModelParams,
    pub time: TimeConfig,
    pub mg: MgParams,
    pub init: InitialCondition,
    pub output: OutputConfig,
    pub study: StudyConfig,
}

/// Every recognised key in serialization order.
pub const KEYS: &[&str] = &[
    "mode",
    "grid.m",
    "grid.n",
    "grid.lx",
    "grid.ly",
    "model.epsilon",
    "model.gamma_surf",
    "model.gamma_bend",
    "model.gamma_area",
    "model.gamma_in",
    "model.gamma_out",
    "model.psi_in",
    "model.psi_out",
    "model.beta_in",
    "model.beta_out",
    "model.m0",
    "model.m_phi",
    "time.dt",
    "time.final_time",
    "time.steps",
    "mg.sweeps",
    "mg.tol",
    "mg.max_cycles",
    "mg.depth",
    "mg.coarse_sweeps",
    "mg.ghost_refresh",
    "init.kind",
    "init.center_x",
    "init.center_y",
    "init.radius",
    "init.axis_x",
    "init.axis_y",
    "init.amplitude",
    "init.modes",
    "init.profile",
    "init.presmooth_steps",
    "init.phi_value",
    "init.file",
    "init.psi_slope",
    "init.psi_offset",
    "output.dir",
    "output.snapshot_stride",
    "output.diag_stride",
    "study.levels",
    "study.norm",
];

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: expected a number, got `{value}`")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value.parse().map_err(|_| {
        Error::Config(format!(
            "`{key}`: expected a non-negative integer, got `{value}`"
        ))
    })
}

fn choice<T>(key: &str, value: &str, parsed: Option<T>, allowed: &str) -> Result<T> {
    parsed
        .ok_or_else(|| Error::Config(format!("`{key}`: expected one of {allowed}, got `{value}`")))
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

impl RunConfig {
    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let f = || parse_f64(key, v);
        let u = || parse_usize(key, v);
        match key {
            "mode" => {
                self.mode = choice(key, v, Mode::parse(v), "simulate, convergence, complexity")?
            }
            "grid.m" => self.grid.m = u()?,
            "grid.n" => self.grid.n = u()?,
            "grid.lx" => self.grid.lx = f()?,
            "grid.ly" => self.grid.ly = f()?,
            "model.epsilon" => self.model.epsilon = f()?,
            "model.gamma_surf" => self.model.gamma_surf = f()?,
            "model.gamma_bend" => self.model.gamma_bend = f()?,
            "model.gamma_area" => self.model.gamma_area = f()?,
            "model.gamma_in" => self.model.gamma_in = f()?,
            "model.gamma_out" => self.model.gamma_out = f()?,
            "model.psi_in" => self.model.psi_in = f()?,
            "model.psi_out" => self.model.psi_out = f()?,
            "model.beta_in" => self.model.beta_in = f()?,
            "model.beta_out" => self.model.beta_out = f()?,
            "model.m0" => self.model.m0 = f()?,
            "model.m_phi" => self.model.m_phi = f()?,
            "time.dt" => self.time.dt = f()?,
            "time.final_time" => self.time.final_time = f()?,
            "time.steps" => self.time.steps = u()?,
            "mg.sweeps" => self.mg.sweeps = u()?,
            "mg.tol" => self.mg.tol = f()?,
            "mg.max_cycles" => self.mg.max_cycles = u()?,
            "mg.depth" => self.mg.depth = if v == "auto" { None } else { Some(u()?) },
            "mg.coarse_sweeps" => self.mg.coarse_sweeps = u()?,
            "mg.ghost_refresh" => {
                self.mg.ghost_refresh = choice(
                    key,
                    v,
                    match v {
                        "between" => Some(GhostRefresh::BetweenSweeps),
                        "within" => Some(GhostRefresh::WithinSweep),
                        _ => None,
                    },
                    "between, within",
                )?
            }
            "init.kind" => {
                self.init.kind = choice(key, v, InitKind::parse(v), "ellipse, star, uniform, file")?
            }
            "init.center_x" => self.init.center_x = f()?,
            "init.center_y" => self.init.center_y = f()?,
            "init.radius" => self.init.radius = f()?,
            "init.axis_x" => self.init.axis_x = f()?,
            "init.axis_y" => self.init.axis_y = f()?,
            "init.amplitude" => self.init.amplitude = f()?,
            "init.modes" => {
                self.init.modes = v.parse().map_err(|_| {
                    Error::Config(format!(
                        "`{key}`: expected a non-negative integer, got `{v}`"
                    ))
                })?
            }
            "init.profile" => {
                self.init.profile = choice(key, v, Profile::parse(v), "tanh, distance, presmooth")?
            }
            "init.presmooth_steps" => self.init.presmooth_steps = u()?,
            "init.phi_value" => self.init.phi_value = f()?,
            "init.file" => self.init.file = (!v.is_empty()).then(|| PathBuf::from(v)),
            "init.psi_slope" => self.init.psi_slope = f()?,
            "init.psi_offset" => self.init.psi_offset = f()?,
            "output.dir" => self.output.dir = (!v.is_empty()).then(|| PathBuf::from(v)),
            "output.snapshot_stride" => self.output.snapshot_stride = u()?,
            "output.diag_stride" => self.output.diag_stride = u()?,
            "study.levels" => self.study.levels = u()?,
            "study.norm" => self.study.norm = choice(key, v, ErrorNorm::parse(v), "l2, max")?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Text value of one key, as written by [`RunConfig::to_text`].
    pub fn get(&self, key: &str) -> Option<String> {
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        Some(match key {
            "mode" => self.mode.as_str().to_string(),
            "grid.m" => self.grid.m.to_string(),
            "grid.n" => self.grid.n.to_string(),
            "grid.lx" => fmt_f64(self.grid.lx),
            "grid.ly" => fmt_f64(self.grid.ly),
            "model.epsilon" => fmt_f64(self.model.epsilon),
            "model.gamma_surf" => fmt_f64(self.model.gamma_surf),
            "model.gamma_bend" => fmt_f64(self.model.gamma_bend),
            "model.gamma_area" => fmt_f64(self.model.gamma_area),
            "model.gamma_in" => fmt_f64(self.model.gamma_in),
            "model.gamma_out" => fmt_f64(self.model.gamma_out),
            "model.psi_in" => fmt_f64(self.model.psi_in),
            "model.psi_out" => fmt_f64(self.model.psi_out),
            "model.beta_in" => fmt_f64(self.model.beta_in),
            "model.beta_out" => fmt_f64(self.model.beta_out),
            "model.m0" => fmt_f64(self.model.m0),
            "model.m_phi" => fmt_f64(self.model.m_phi),
            "time.dt" => fmt_f64(self.time.dt),
            "time.final_time" => fmt_f64(self.time.final_time),
            "time.steps" => self.time.steps.to_string(),
            "mg.sweeps" => self.mg.sweeps.to_string(),
            "mg.tol" => fmt_f64(self.mg.tol),
            "mg.max_cycles" => self.mg.max_cycles.to_string(),
            "mg.depth" => self
                .mg
                .depth
                .map_or_else(|| "auto".to_string(), |d| d.to_string()),
            "mg.coarse_sweeps" => self.mg.coarse_sweeps.to_string(),
            "mg.ghost_refresh" => match self.mg.ghost_refresh {
                GhostRefresh::BetweenSweeps => "between",
                GhostRefresh::WithinSweep => "within",
            }
            .to_string(),
            "init.kind" => self.init.kind.as_str().to_string(),
            "init.center_x" => fmt_f64(self.init.center_x),
            "init.center_y" => fmt_f64(self.init.center_y),
            "init.radius" => fmt_f64(self.init.radius),
            "init.axis_x" => fmt_f64(self.init.axis_x),
            "init.axis_y" => fmt_f64(self.init.axis_y),
            "init.amplitude" => fmt_f64(self.init.amplitude),
            "init.modes" => self.init.modes.to_string(),
            "init.profile" => self.init.profile.as_str().to_string(),
            "init.presmooth_steps" => self.init.presmooth_steps.to_string(),
            "init.phi_value" => fmt_f64(self.init.phi_value),
            "init.file" => path(&self.init.file),
            "init.psi_slope" => fmt_f64(self.init.psi_slope),
            "init.psi_offset" => fmt_f64(self.init.psi_offset),
            "output.dir" => path(&self.output.dir),
            "output.snapshot_stride" => self.output.snapshot_stride.to_string(),
            "output.diag_stride" => self.output.diag_stride.to_string(),
            "study.levels" => self.study.levels.to_string(),
            "study.norm" => self.study.norm.as_str().to_string(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines on top of `self`. A key may appear only
    /// once per text.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, strip_prefix(&e))))?;
        }
        Ok(())
    }

    /// Parses a config text on top of the defaults. Does not validate.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Every key with its resolved value.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for key in KEYS {
            let sec = key.split_once('.').map_or("", |(s, _)| s);
            if sec != section {
                out.push('\n');
                section = sec;
            }
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("listed key"));
        }
        out
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::from_extent(self.grid.m, self.grid.n, self.grid.lx, self.grid.ly)
    }

    /// Number of time steps of a run on the base grid.
    pub fn step_count(&self) -> usize {
        if self.time.steps > 0 {
            self.time.steps
        } else {
            (self.time.final_time / self.time.dt).round() as usize
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.m == 0 || self.grid.n == 0 {
            return Err(Error::param("grid.m", "grid sizes must be positive"));
        }
        for (name, v) in [("grid.lx", self.grid.lx), ("grid.ly", self.grid.ly)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        self.grid_spec()
            .map_err(|e| Error::param("grid.ly", e.to_string()))?;
        self.model.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => Error::InvalidParameter {
                name: format!("model.{name}"),
                reason,
            },
            other => other,
        })?;
        if !(self.time.dt.is_finite() && self.time.dt > 0.0) {
            return Err(Error::param(
                "time.dt",
                format!("must be positive, got {}", self.time.dt),
            ));
        }
        if self.time.steps == 0 && !(self.time.final_time.is_finite() && self.time.final_time > 0.0)
        {
            return Err(Error::param(
                "time.final_time",
                "must be positive when time.steps is 0",
            ));
        }
        if self.step_count() == 0 {
            return Err(Error::param("time.final_time", "run has no time steps"));
        }
        self.mg.validate()?;
        self.init.validate()?;
        if self.output.diag_stride == 0 {
            return Err(Error::param("output.diag_stride", "must be at least 1"));
        }
        if self.study.levels == 0 {
            return Err(Error::param("study.levels", "must be at least 1"));
        }
        if self.mode == Mode::Convergence && self.study.levels < 2 {
            return Err(Error::param(
                "study.levels",
                "a convergence study needs at least 2 grids",
            ));
        }
        Ok(())
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(msg) => msg.clone(),
        other => other.to_string(),
    }
}

/// Presets shipped with the crate, by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("table1-test1", include_str!("../presets/table1-test1.cfg")),
    ("table1-test2", include_str!("../presets/table1-test2.cfg")),
    ("table1-test3", include_str!("../presets/table1-test3.cfg")),
    ("table1-test4", include_str!("../presets/table1-test4.cfg")),
    ("table1-test5", include_str!("../presets/table1-test5.cfg")),
    ("table1-test6", include_str!("../presets/table1-test6.cfg")),
    ("table1-test7", include_str!("../presets/table1-test7.cfg")),
    ("table1-test8", include_str!("../presets/table1-test8.cfg")),
    ("table2", include_str!("../presets/table2.cfg")),
    ("fig7", include_str!("../presets/fig7.cfg")),
    ("fig9", include_str!("../presets/fig9.cfg")),
    ("fig11", include_str!("../presets/fig11.cfg")),
    ("fig12", include_str!("../presets/fig12.cfg")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// The named preset on top of the defaults.
pub fn preset(name: &str) -> Result<RunConfig> {
    let text = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown preset `{name}` (available: {})",
                preset_names().collect::<Vec<_>>().join(", ")
            ))
        })?;
    RunConfig::parse(text)
        .map_err(|e| Error::Config(format!("preset `{name}`: {}", strip_prefix(&e))))
}
