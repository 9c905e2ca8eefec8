//! Refinement and solver-complexity studies built from independent runs.

use std::io::Write;

use rayon::prelude::*;

use crate::config::{ErrorNorm, RunConfig};
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::multigrid::restrict;
use crate::sim::{run, Simulation};

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(f))
}

/// `config` on a grid refined `level` times, with the time step cut by
/// four per refinement and the same final time.
pub fn refined(config: &RunConfig, level: u32) -> RunConfig {
    let mut c = config.clone();
    let f = 1usize << level;
    c.grid.m *= f;
    c.grid.n *= f;
    c.time.dt /= (f * f) as f64;
    if c.time.steps > 0 {
        c.time.steps *= f * f;
    }
    c
}

/// Difference between `coarse` and the cell average of `fine`.
pub fn cauchy_error(coarse: &Field, fine: &Field, norm: ErrorNorm) -> Result<f64> {
    let r = restrict(fine)?;
    coarse.spec().check_same(r.spec())?;
    let diff = coarse.sub(&r);
    Ok(match norm {
        ErrorNorm::L2 => {
            let h = coarse.spec().h();
            let mut acc = crate::grid::CompensatedSum::default();
            diff.for_each_interior(|_, _, v| acc.add(v * v));
            (h * h * acc.value()).sqrt()
        }
        ErrorNorm::Max => diff.max_abs_interior(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub coarse_m: usize,
    pub fine_m: usize,
    pub error: f64,
    /// `log2` of the previous row's error over this one.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub norm: ErrorNorm,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "coarse_m,fine_m,error,rate")?;
        for r in &self.rows {
            let rate = r.rate.map(|v| format!("{v:e}")).unwrap_or_default();
            writeln!(w, "{},{},{:e},{rate}", r.coarse_m, r.fine_m, r.error)?;
        }
        Ok(())
    }
}

/// Runs `config` on `config.study.levels` successively refined grids and
/// compares neighbouring final phase fields. Runs go through a pool of
/// `jobs` threads (0 picks the core count).
pub fn convergence_study(config: &RunConfig, jobs: usize) -> Result<ConvergenceReport> {
    config.validate()?;
    let levels = config.study.levels;
    if levels < 2 {
        return Err(Error::param(
            "study.levels",
            "a convergence study needs at least 2 grids",
        ));
    }
    let configs: Vec<RunConfig> = (0..levels as u32).map(|l| refined(config, l)).collect();
    let finals = with_pool(jobs, || {
        configs
            .par_iter()
            .map(|c| run(c, None, |_| {}).map(|o| o.state.phi().clone()))
            .collect::<Result<Vec<Field>>>()
    })??;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for k in 0..levels - 1 {
        let error = cauchy_error(&finals[k], &finals[k + 1], config.study.norm)?;
        let rate = rows.last().map(|prev| (prev.error / error).log2());
        rows.push(ConvergenceRow {
            coarse_m: configs[k].grid.m,
            fine_m: configs[k + 1].grid.m,
            error,
            rate,
        });
    }
    Ok(ConvergenceReport {
        norm: config.study.norm,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityRow {
    pub test: String,
    pub m: usize,
    pub h: f64,
    /// V-cycles used by the last time step.
    pub iterations: usize,
    /// Residual after each V-cycle of the last time step.
    pub residual_history: Vec<f64>,
}

/// Expands `config` into one case per grid of its study hierarchy
/// (`grid.m`, `2 grid.m`, ...), keeping the time step.
pub fn complexity_cases(label: &str, config: &RunConfig) -> Vec<(String, RunConfig)> {
    (0..config.study.levels as u32)
        .map(|l| {
            let mut c = config.clone();
            c.grid.m <<= l;
            c.grid.n <<= l;
            (label.to_string(), c)
        })
        .collect()
}

/// Runs every case for its configured number of steps and reports the
/// solver effort of the last step.
pub fn complexity_study(cases: &[(String, RunConfig)], jobs: usize) -> Result<Vec<ComplexityRow>> {
    for (_, c) in cases {
        c.validate()?;
    }
    with_pool(jobs, || {
        cases
            .par_iter()
            .map(|(label, c)| {
                let mut sim = Simulation::new(c)?;
                let mut last = None;
                for _ in 0..c.step_count() {
                    last = Some(sim.step()?);
                }
                let last = last.expect("at least one step");
                Ok(ComplexityRow {
                    test: label.clone(),
                    m: c.grid.m,
                    h: sim.spec().h(),
                    iterations: last.iterations,
                    residual_history: last.residual_history,
                })
            })
            .collect()
    })?
}

pub fn write_complexity_csv<W: Write>(rows: &[ComplexityRow], mut w: W) -> Result<()> {
    writeln!(w, "test,m,h,iterations")?;
    for r in rows {
        writeln!(w, "{},{},{:e},{}", r.test, r.m, r.h, r.iterations)?;
    }
    Ok(())
}

pub fn write_complexity_residuals<W: Write>(rows: &[ComplexityRow], mut w: W) -> Result<()> {
    writeln!(w, "test,m,vcycle_index,residual")?;
    for r in rows {
        for (c, v) in r.residual_history.iter().enumerate() {
            writeln!(w, "{},{},{},{v:e}", r.test, r.m, c + 1)?;
        }
    }
    Ok(())
}
