//! Full-approximation-scheme V-cycles over a hierarchy of cell-centered
//! grids, and the per-time-step V-cycle loop.

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::model::ModelParams;
use crate::scheme::{self, SourceBundle, State, StepContext};
use crate::smoother::{self, GhostRefresh};

/// Default size below which no further coarsening happens.
pub const DEFAULT_COARSEST: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgParams {
    /// Pre- and post-smoothing sweeps per level (λ).
    pub sweeps: usize,
    /// V-cycle limit per time step.
    pub max_cycles: usize,
    /// Stopping tolerance on the `2,*` residual norm.
    pub tol: f64,
    /// Number of coarsenings below the finest grid; `None` coarsens until
    /// `min(m, n) == 4` or a count turns odd.
    pub depth: Option<usize>,
    /// Extra sweeps on the coarsest grid, between its pre- and
    /// post-smoothing.
    pub coarse_sweeps: usize,
    pub ghost_refresh: GhostRefresh,
}

impl Default for MgParams {
    fn default() -> Self {
        Self {
            sweeps: 2,
            max_cycles: 100,
            tol: 1e-8,
            depth: None,
            coarse_sweeps: 20,
            ghost_refresh: GhostRefresh::BetweenSweeps,
        }
    }
}

impl MgParams {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps < 1 {
            return Err(Error::param("mg.sweeps", "must be at least 1"));
        }
        if self.max_cycles < 1 {
            return Err(Error::param("mg.max_cycles", "must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param(
                "mg.tol",
                format!("must be positive, got {}", self.tol),
            ));
        }
        Ok(())
    }
}

/// Grids from finest (`levels[0]`) to coarsest.
#[derive(Debug, Clone, PartialEq)]
pub struct Hierarchy {
    levels: Vec<GridSpec>,
}

impl Hierarchy {
    pub fn new(fine: GridSpec, depth: Option<usize>) -> Result<Self> {
        let mut levels = vec![fine];
        match depth {
            Some(d) => {
                for _ in 0..d {
                    let last = levels.last().unwrap();
                    let next = last
                        .coarsen()
                        .filter(|c| c.m().min(c.n()) >= 2)
                        .ok_or_else(|| {
                            Error::InvalidGrid(format!(
                                "cannot coarsen {}x{} grid {d} times",
                                fine.m(),
                                fine.n()
                            ))
                        })?;
                    levels.push(next);
                }
            }
            None => {
                while let Some(next) = levels.last().unwrap().coarsen() {
                    if next.m().min(next.n()) < DEFAULT_COARSEST {
                        break;
                    }
                    levels.push(next);
                }
            }
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[GridSpec] {
        &self.levels
    }

    pub fn finest(&self) -> &GridSpec {
        &self.levels[0]
    }

    pub fn coarsest(&self) -> &GridSpec {
        self.levels.last().unwrap()
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }
}

/// Cell-average restriction onto the next coarser grid. Ghosts of the result
/// are mirrored.
pub fn restrict(f: &Field) -> Result<Field> {
    let fine = *f.spec();
    let coarse = fine.coarsen().ok_or_else(|| {
        Error::InvalidGrid(format!("cannot restrict a {}x{} grid", fine.m(), fine.n()))
    })?;
    let mut out = Field::zeros(coarse);
    for i in 1..=coarse.m() {
        for j in 1..=coarse.n() {
            let (fi, fj) = (2 * i - 1, 2 * j - 1);
            out[(i, j)] =
                0.25 * (f[(fi, fj)] + f[(fi + 1, fj)] + f[(fi, fj + 1)] + f[(fi + 1, fj + 1)]);
        }
    }
    out.apply_neumann_bc();
    Ok(out)
}

/// Piecewise-constant prolongation onto `fine`. Ghosts of the result are
/// mirrored.
pub fn prolong(f: &Field, fine: &GridSpec) -> Result<Field> {
    let coarse = *f.spec();
    match fine.coarsen() {
        Some(c) if c.same_shape(&coarse) => {}
        _ => {
            return Err(Error::DimensionMismatch {
                expected_m: fine.m() / 2,
                expected_n: fine.n() / 2,
                got_m: coarse.m(),
                got_n: coarse.n(),
            })
        }
    }
    let mut out = Field::zeros(*fine);
    for i in 1..=fine.m() {
        for j in 1..=fine.n() {
            out[(i, j)] = f[(i.div_ceil(2), j.div_ceil(2))];
        }
    }
    out.apply_neumann_bc();
    Ok(out)
}

fn restrict_state(state: &State) -> Result<State> {
    let [a, b, c, d, e] = &state.fields;
    Ok(State {
        fields: [
            restrict(a)?,
            restrict(b)?,
            restrict(c)?,
            restrict(d)?,
            restrict(e)?,
        ],
    })
}

fn restrict_bundle(bundle: &SourceBundle) -> Result<SourceBundle> {
    let [a, b, c, d, e] = &bundle.fields;
    Ok(SourceBundle {
        fields: [
            restrict(a)?,
            restrict(b)?,
            restrict(c)?,
            restrict(d)?,
            restrict(e)?,
        ],
    })
}

/// Per-level step contexts for one time step. Coarse levels see the
/// restricted time-level-`k` state, coefficient functions evaluated on it,
/// and the fine-grid scalar `B_h^k - A_h`.
pub fn build_contexts(
    prev: &State,
    s: f64,
    ah: f64,
    params: &ModelParams,
    hierarchy: &Hierarchy,
) -> Result<Vec<StepContext>> {
    hierarchy.finest().check_same(prev.spec())?;
    let fine = StepContext::new(prev.clone(), s, ah, *params)?;
    let bk = fine.bk;
    let mut out = Vec::with_capacity(hierarchy.levels().len());
    out.push(fine);
    for _ in 1..hierarchy.levels().len() {
        let coarse_prev = restrict_state(&out.last().unwrap().prev)?;
        out.push(StepContext::with_surface(coarse_prev, s, bk, ah, *params)?);
    }
    Ok(out)
}

/// One FAS V-cycle starting at `level` (0 = finest in `contexts`).
pub fn fas_vcycle(
    state: &mut State,
    src: &SourceBundle,
    contexts: &[StepContext],
    mg: &MgParams,
    level: usize,
) -> Result<()> {
    let ctx = &contexts[level];
    smoother::smooth_with(state, src, ctx, mg.sweeps, mg.ghost_refresh)?;
    if level + 1 < contexts.len() {
        let coarse_ctx = &contexts[level + 1];
        let fine_residual = src.sub(&scheme::apply_n(state, ctx));
        let coarse_guess = restrict_state(state)?;
        let coarse_src =
            restrict_bundle(&fine_residual)?.add(&scheme::apply_n(&coarse_guess, coarse_ctx));
        let mut coarse = coarse_guess.clone();
        fas_vcycle(&mut coarse, &coarse_src, contexts, mg, level + 1)?;
        let fine_spec = *ctx.spec();
        for (f, (new, old)) in state
            .fields
            .iter_mut()
            .zip(coarse.fields.iter().zip(&coarse_guess.fields))
        {
            let correction = prolong(&new.sub(old), &fine_spec)?;
            f.axpy_interior(1.0, &correction);
            f.apply_neumann_bc();
        }
    } else {
        smoother::smooth_with(state, src, ctx, mg.coarse_sweeps, mg.ghost_refresh)?;
    }
    smoother::smooth_with(state, src, ctx, mg.sweeps, mg.ghost_refresh)
}

/// Result of one converged time step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: State,
    /// V-cycles used.
    pub iterations: usize,
    /// `2,*` residual norm after each V-cycle.
    pub residual_history: Vec<f64>,
}

impl StepOutcome {
    /// Whether every V-cycle reduced the residual.
    pub fn strictly_decreasing(&self) -> bool {
        self.residual_history.windows(2).all(|w| w[1] < w[0])
    }
}

/// Solves one time step from `prev` with V-cycles until the residual drops
/// below `mg.tol`; the initial guess is `prev` itself.
pub fn solve_time_step(
    prev: &State,
    contexts: &[StepContext],
    mg: &MgParams,
) -> Result<StepOutcome> {
    mg.validate()?;
    let fine = &contexts[0];
    let src = scheme::assemble_source(fine);
    let mut state = prev.clone();
    state.apply_neumann_bc();
    let mut history = Vec::new();
    for cycle in 1..=mg.max_cycles {
        fas_vcycle(&mut state, &src, contexts, mg, 0)?;
        let norm = scheme::residual_norm(&state, &src, fine);
        history.push(norm);
        if !norm.is_finite() {
            break;
        }
        if norm < mg.tol {
            return Ok(StepOutcome {
                state,
                iterations: cycle,
                residual_history: history,
            });
        }
    }
    Err(Error::NotConverged {
        tol: mg.tol,
        cycles: history.len(),
        history,
    })
}

/// Owns the grid hierarchy and solver settings for a run.
#[derive(Debug, Clone)]
pub struct FasSolver {
    pub hierarchy: Hierarchy,
    pub mg: MgParams,
    pub params: ModelParams,
}

impl FasSolver {
    pub fn new(fine: GridSpec, mg: MgParams, params: ModelParams) -> Result<Self> {
        mg.validate()?;
        params.validate()?;
        Ok(Self {
            hierarchy: Hierarchy::new(fine, mg.depth)?,
            mg,
            params,
        })
    }

    pub fn contexts(&self, prev: &State, s: f64, ah: f64) -> Result<Vec<StepContext>> {
        build_contexts(prev, s, ah, &self.params, &self.hierarchy)
    }

    pub fn solve_time_step(&self, prev: &State, s: f64, ah: f64) -> Result<StepOutcome> {
        let contexts = self.contexts(prev, s, ah)?;
        solve_time_step(prev, &contexts, &self.mg)
    }
}
