//! Time stepping, diagnostics and the experiment harnesses.

pub mod init;
pub mod presmooth;
pub mod study;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::grid::{self, CompensatedSum, Field, GridSpec};
use crate::model::{self, ModelParams};
use crate::multigrid::{FasSolver, MgParams};
use crate::scheme::State;

pub use init::{init_tanh_profile, InitKind, InitialCondition, Profile};
pub use presmooth::presmooth_indicator;
pub use study::{complexity_study, convergence_study, ComplexityRow, ConvergenceReport};

/// One line of the diagnostics CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub time: f64,
    pub f_surf: f64,
    pub f_bend: f64,
    pub f_area: f64,
    pub f_osm: f64,
    pub f_total: f64,
    /// Raw surface quadrature.
    pub b_h: f64,
    pub total_mass: f64,
    /// `h² Σ ψ` over cells with `φ >= 0`.
    pub inner_mass: f64,
    /// `h² Σ ψ` over cells with `φ < 0`.
    pub outer_mass: f64,
    /// Arithmetic mean of ψ over bulk inner cells, `φ >= 0.9`. Falls back to
    /// all cells with `φ >= 0` when there are no bulk cells, and to 0 when
    /// there are none at all.
    pub inner_conc: f64,
    /// As `inner_conc` for `φ <= -0.9`, falling back to `φ < 0`.
    pub outer_conc: f64,
    /// V-cycles used by the step that produced this state.
    pub vcycle_count: usize,
}

/// Phase magnitude above which a cell counts as bulk for the region
/// concentrations. Cells inside the diffuse interface carry intermediate
/// concentrations and would bias the means on coarse grids.
pub const BULK_PHASE: f64 = 0.9;

pub const DIAGNOSTICS_HEADER: &str =
    "time,f_surf,f_bend,f_area,f_osm,f_total,b_h,total_mass,inner_mass,outer_mass,inner_conc,outer_conc,vcycle_count";

impl DiagnosticsRow {
    pub fn compute(
        state: &State,
        params: &ModelParams,
        area: f64,
        time: f64,
        vcycle_count: usize,
    ) -> Result<Self> {
        let e = model::total_energies(state.phi(), state.psi(), params, area)?;
        let spec = *state.spec();
        let h2 = spec.h() * spec.h();
        let (phi, psi) = (state.phi(), state.psi());
        let (mut inner, mut outer) = (CompensatedSum::default(), CompensatedSum::default());
        let (mut inner_bulk, mut outer_bulk) =
            (CompensatedSum::default(), CompensatedSum::default());
        let mut counts = [0usize; 4];
        phi.for_each_interior(|i, j, p| {
            let c = psi[(i, j)];
            if p >= 0.0 {
                inner.add(c);
                counts[0] += 1;
                if p >= BULK_PHASE {
                    inner_bulk.add(c);
                    counts[2] += 1;
                }
            } else {
                outer.add(c);
                counts[1] += 1;
                if p <= -BULK_PHASE {
                    outer_bulk.add(c);
                    counts[3] += 1;
                }
            }
        });
        let mean = |bulk: &CompensatedSum, nb: usize, all: &CompensatedSum, n: usize| {
            if nb > 0 {
                bulk.value() / nb as f64
            } else if n > 0 {
                all.value() / n as f64
            } else {
                0.0
            }
        };
        let inner_mass = h2 * inner.value();
        let outer_mass = h2 * outer.value();
        Ok(Self {
            time,
            f_surf: e.surf,
            f_bend: e.bend,
            f_area: e.area,
            f_osm: e.osm,
            f_total: e.total,
            b_h: e.surface_quadrature,
            total_mass: inner_mass + outer_mass,
            inner_mass,
            outer_mass,
            inner_conc: mean(&inner_bulk, counts[2], &inner, counts[0]),
            outer_conc: mean(&outer_bulk, counts[3], &outer, counts[1]),
            vcycle_count,
        })
    }

    pub fn values(&self) -> [f64; 12] {
        [
            self.time,
            self.f_surf,
            self.f_bend,
            self.f_area,
            self.f_osm,
            self.f_total,
            self.b_h,
            self.total_mass,
            self.inner_mass,
            self.outer_mass,
            self.inner_conc,
            self.outer_conc,
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }

    pub fn csv_line(&self) -> String {
        let mut s = String::new();
        for v in self.values() {
            s.push_str(&format!("{v:e},"));
        }
        s.push_str(&self.vcycle_count.to_string());
        s
    }
}

/// Area of the region `φ >= 0`.
pub fn inner_area(phi: &Field) -> f64 {
    let h = phi.spec().h();
    let mut count = 0usize;
    phi.for_each_interior(|_, _, v| count += (v >= 0.0) as usize);
    count as f64 * h * h
}

/// What one call to [`Simulation::step`] did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

/// A run in progress: current state, target surface area and clock.
#[derive(Debug, Clone)]
pub struct Simulation {
    solver: FasSolver,
    dt: f64,
    state: State,
    area: f64,
    time: f64,
    steps: usize,
    last_iterations: usize,
}

impl Simulation {
    /// Initial data from the config; the surface target is the initial
    /// surface quadrature.
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let spec = config.grid_spec()?;
        let (phi, psi) = init_tanh_profile(spec, &config.init, config.model.epsilon)?;
        let state = State::from_phase_and_concentration(phi, psi, &config.model)?;
        Self::from_state(state, config.model, config.mg, config.time.dt)
    }

    pub fn from_state(state: State, params: ModelParams, mg: MgParams, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param(
                "time.dt",
                format!("must be positive, got {dt}"),
            ));
        }
        let solver = FasSolver::new(*state.spec(), mg, params)?;
        let area = grid::surface_quadrature(state.phi(), params.epsilon)?;
        Ok(Self {
            solver,
            dt,
            state,
            area,
            time: 0.0,
            steps: 0,
            last_iterations: 0,
        })
    }

    /// Advances one time step.
    pub fn step(&mut self) -> Result<StepReport> {
        let out = self
            .solver
            .solve_time_step(&self.state, self.dt, self.area)?;
        self.state = out.state;
        self.steps += 1;
        self.time = self.steps as f64 * self.dt;
        self.last_iterations = out.iterations;
        Ok(StepReport {
            step: self.steps,
            time: self.time,
            iterations: out.iterations,
            residual_history: out.residual_history,
        })
    }

    pub fn diagnostics(&self) -> Result<DiagnosticsRow> {
        DiagnosticsRow::compute(
            &self.state,
            &self.solver.params,
            self.area,
            self.time,
            self.last_iterations,
        )
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn spec(&self) -> &GridSpec {
        self.state.spec()
    }

    pub fn params(&self) -> &ModelParams {
        &self.solver.params
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `A_h`, the surface quadrature of the initial phase.
    pub fn surface_target(&self) -> f64 {
        self.area
    }
}

/// Steps at which snapshots are written for a run of `total` steps.
pub fn snapshot_steps(total: usize, stride: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = if stride == 0 {
        (0..=5)
            .map(|j| ((j * total) as f64 / 5.0).round() as usize)
            .collect()
    } else {
        (0..=total).step_by(stride).collect()
    };
    steps.push(total);
    steps.sort_unstable();
    steps.dedup();
    steps
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: State,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub snapshots: Vec<PathBuf>,
    pub iterations: Vec<usize>,
}

struct RunFiles {
    dir: PathBuf,
    diag: BufWriter<File>,
    resid: BufWriter<File>,
}

impl RunFiles {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut diag = BufWriter::new(File::create(dir.join("diagnostics.csv"))?);
        writeln!(diag, "{DIAGNOSTICS_HEADER}")?;
        let mut resid = BufWriter::new(File::create(dir.join("residuals.csv"))?);
        writeln!(resid, "time_step,vcycle_index,residual")?;
        Ok(Self {
            dir: dir.to_path_buf(),
            diag,
            resid,
        })
    }

    fn snapshot(&self, step: usize, state: &State) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        for (name, f) in [("phi", state.phi()), ("psi", state.psi())] {
            let path = self.dir.join(format!("{name}_{step}.dat"));
            let mut w = BufWriter::new(File::create(&path)?);
            grid::write_snapshot(f, &mut w)?;
            w.flush()?;
            out.push(path);
        }
        Ok(out)
    }
}

/// Runs `config` from its initial data. With `out_dir`, writes
/// `diagnostics.csv`, `residuals.csv` and `phi_<step>.dat` /
/// `psi_<step>.dat` snapshots there; CSV rows are flushed as they are
/// produced so a failed run leaves its partial history on disk. `observer`
/// sees every step.
pub fn run(
    config: &RunConfig,
    out_dir: Option<&Path>,
    mut observer: impl FnMut(&StepReport),
) -> Result<RunOutput> {
    let mut sim = Simulation::new(config)?;
    let total = config.step_count();
    let snaps = snapshot_steps(total, config.output.snapshot_stride);
    let stride = config.output.diag_stride;
    let mut files = out_dir.map(RunFiles::create).transpose()?;

    let mut diagnostics = Vec::new();
    let mut snapshots = Vec::new();
    let mut iterations = Vec::with_capacity(total);
    let record = |sim: &Simulation,
                  files: &mut Option<RunFiles>,
                  diagnostics: &mut Vec<DiagnosticsRow>|
     -> Result<()> {
        let row = sim.diagnostics()?;
        if let Some(f) = files.as_mut() {
            writeln!(f.diag, "{}", row.csv_line())?;
            f.diag.flush()?;
        }
        diagnostics.push(row);
        Ok(())
    };

    record(&sim, &mut files, &mut diagnostics)?;
    if let Some(f) = &files {
        snapshots.extend(f.snapshot(0, sim.state())?);
    }
    for k in 1..=total {
        let report = match sim.step() {
            Ok(r) => r,
            Err(e) => {
                if let (Some(f), Error::NotConverged { history, .. }) = (files.as_mut(), &e) {
                    for (c, r) in history.iter().enumerate() {
                        writeln!(f.resid, "{k},{},{r:e}", c + 1)?;
                    }
                    f.resid.flush()?;
                }
                return Err(e);
            }
        };
        observer(&report);
        iterations.push(report.iterations);
        if let Some(f) = files.as_mut() {
            for (c, r) in report.residual_history.iter().enumerate() {
                writeln!(f.resid, "{k},{},{r:e}", c + 1)?;
            }
        }
        if k % stride == 0 || k == total {
            record(&sim, &mut files, &mut diagnostics)?;
        }
        if let Some(f) = &files {
            if snaps.binary_search(&k).is_ok() {
                snapshots.extend(f.snapshot(k, sim.state())?);
            }
        }
    }
    if let Some(f) = files.as_mut() {
        f.resid.flush()?;
    }
    Ok(RunOutput {
        state: sim.state,
        diagnostics,
        snapshots,
        iterations,
    })
}
