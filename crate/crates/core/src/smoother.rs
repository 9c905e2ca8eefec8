//! Lexicographic nonlinear Gauss-Seidel relaxation.
//!
//! At each cell the five unknowns are replaced by the solution of a small
//! linear system: the `(φ, μ, ω)` block and the `(ψ, ν)` block decouple at a
//! fixed cell and are solved separately by Cramer's rule. The cubic term is
//! linearised around the cell's value at the start of its update.

use crate::error::{Error, Result};
use crate::scheme::{SourceBundle, State, StepContext, MU, NU, OMEGA, PHI, PSI};

/// Determinants smaller than this in magnitude are treated as singular.
pub const SINGULAR_DET: f64 = 1e-300;

/// When ghost cells are re-mirrored during relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GhostRefresh {
    /// Once after every full sweep; boundary cells read the start-of-sweep
    /// mirror values within a sweep.
    #[default]
    BetweenSweeps,
    /// Additionally right after each boundary cell is updated.
    WithinSweep,
}

/// The `(φ, μ, ω)` block at one cell:
///
/// ```text
/// [  1    coupling   0  ] [φ]   [b0]
/// [  0       1      -c2 ] [μ] = [b1]
/// [ -c3      0       1  ] [ω]   [b2]
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSystem3 {
    /// `s M_φ`.
    pub coupling: f64,
    pub c2: f64,
    pub c3: f64,
    pub b: [f64; 3],
}

impl LocalSystem3 {
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [
            [1.0, self.coupling, 0.0],
            [0.0, 1.0, -self.c2],
            [-self.c3, 0.0, 1.0],
        ]
    }

    /// `1 + coupling c2 c3`.
    #[inline(always)]
    pub fn det(&self) -> f64 {
        let (p, e) = prod3(self.coupling, self.c2, self.c3);
        1.0 + p + e
    }

    /// Cramer's rule. The cofactor sums cancel heavily when `c2 c3` is
    /// large, so products and sums are carried with their rounding errors.
    /// Returns the determinant on failure.
    #[inline(always)]
    pub fn solve(&self) -> std::result::Result<[f64; 3], f64> {
        let det = self.det();
        if !(det.abs() >= SINGULAR_DET) {
            return Err(det);
        }
        let (a, c2, c3) = (self.coupling, self.c2, self.c3);
        let [b0, b1, b2] = self.b;
        let phi = accurate_sum([(b0, 0.0), two_prod(-a, b1), prod3(-a, c2, b2)]);
        let mu = accurate_sum([(b1, 0.0), two_prod(c2, b2), prod3(c2, c3, b0)]);
        let omega = accurate_sum([(b2, 0.0), two_prod(c3, b0), prod3(-a, c3, b1)]);
        Ok([phi / det, mu / det, omega / det])
    }
}

/// `x y` as an unevaluated sum `p + e`.
#[inline(always)]
fn two_prod(x: f64, y: f64) -> (f64, f64) {
    let p = x * y;
    (p, x.mul_add(y, -p))
}

/// `x y z` as `p + e`, exact up to the rounding of the small part.
#[inline(always)]
fn prod3(x: f64, y: f64, z: f64) -> (f64, f64) {
    let (p, e) = two_prod(x, y);
    let (q, f) = two_prod(p, z);
    (q, f + e * z)
}

/// Sum of `hi + lo` pairs with the high parts added error-free.
#[inline(always)]
fn accurate_sum<const N: usize>(terms: [(f64, f64); N]) -> f64 {
    let (mut s, mut err) = (0.0, 0.0);
    for (hi, lo) in terms {
        let t = s + hi;
        let z = t - s;
        err += (s - (t - z)) + (hi - z) + lo;
        s = t;
    }
    s + err
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSystem2 {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
}

impl LocalSystem2 {
    pub fn det(&self) -> f64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    pub fn solve(&self) -> std::result::Result<[f64; 2], f64> {
        let det = self.det();
        if !(det.abs() >= SINGULAR_DET) {
            return Err(det);
        }
        let x0 = (self.b[0] * self.a[1][1] - self.a[0][1] * self.b[1]) / det;
        let x1 = (self.a[0][0] * self.b[1] - self.b[0] * self.a[1][0]) / det;
        Ok([x0, x1])
    }
}

/// The two local systems at cell `(i, j)` given the current neighbour
/// values in `state`.
#[inline(always)]
pub fn local_systems(
    state: &State,
    src: &SourceBundle,
    ctx: &StepContext,
    i: usize,
    j: usize,
) -> (LocalSystem3, LocalSystem2) {
    let spec = *ctx.spec();
    let h = spec.h();
    let inv_h2 = 1.0 / (h * h);
    let params = &ctx.params;
    let eps = params.epsilon;
    let g2 = params.gamma2();
    let phi = &state.fields[PHI];
    let omega = &state.fields[OMEGA];
    let nu = &state.fields[NU];

    let phi_l = phi[(i, j)];
    let omega_nb = omega[(i + 1, j)] + omega[(i - 1, j)] + omega[(i, j + 1)] + omega[(i, j - 1)];
    let phi_nb = phi[(i + 1, j)] + phi[(i - 1, j)] + phi[(i, j + 1)] + phi[(i, j - 1)];
    let c2 = ctx.omega_coef[(i, j)] + 4.0 * g2 * inv_h2;
    let c3 = phi_l * phi_l / eps + 4.0 * eps * inv_h2;
    let sys3 = LocalSystem3 {
        coupling: ctx.s * params.m_phi,
        c2,
        c3,
        b: [
            src.fields[PHI][(i, j)],
            src.fields[MU][(i, j)] - g2 * inv_h2 * omega_nb,
            src.fields[OMEGA][(i, j)] - phi_l / eps - eps * inv_h2 * phi_nb,
        ],
    };

    let a = ctx.s * inv_h2;
    let me = ctx.mob_ew[(i, j)];
    let mw = ctx.mob_ew[(i - 1, j)];
    let mn = ctx.mob_ns[(i, j)];
    let ms = ctx.mob_ns[(i, j - 1)];
    let sys2 = LocalSystem2 {
        a: [[1.0, a * (me + mw + mn + ms)], [-ctx.nu_coef[(i, j)], 1.0]],
        b: [
            src.fields[PSI][(i, j)]
                + a * (me * nu[(i + 1, j)]
                    + mw * nu[(i - 1, j)]
                    + mn * nu[(i, j + 1)]
                    + ms * nu[(i, j - 1)]),
            src.fields[NU][(i, j)],
        ],
    };
    (sys3, sys2)
}

/// One lexicographic sweep from `(1, 1)` to `(m, n)`, `j` fastest. Ghosts
/// are refreshed at the end.
pub fn smooth_sweep(state: &mut State, src: &SourceBundle, ctx: &StepContext) -> Result<()> {
    smooth_sweep_with(state, src, ctx, GhostRefresh::BetweenSweeps)
}

pub fn smooth_sweep_with(
    state: &mut State,
    src: &SourceBundle,
    ctx: &StepContext,
    ghosts: GhostRefresh,
) -> Result<()> {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("fma") {
        // SAFETY: the running CPU supports FMA.
        return unsafe { sweep_fma(state, src, ctx, ghosts) };
    }
    sweep(state, src, ctx, ghosts)
}

/// The sweep compiled with hardware fused multiply-add, which the
/// compensated products in the cell solve lean on.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "fma")]
unsafe fn sweep_fma(
    state: &mut State,
    src: &SourceBundle,
    ctx: &StepContext,
    ghosts: GhostRefresh,
) -> Result<()> {
    sweep(state, src, ctx, ghosts)
}

#[inline(always)]
fn sweep(
    state: &mut State,
    src: &SourceBundle,
    ctx: &StepContext,
    ghosts: GhostRefresh,
) -> Result<()> {
    let spec = *ctx.spec();
    let (m, n) = (spec.m(), spec.n());
    let within = ghosts == GhostRefresh::WithinSweep;
    for i in 1..=m {
        for j in 1..=n {
            let (sys3, sys2) = local_systems(state, src, ctx, i, j);
            let [phi, mu, omega] =
                sys3.solve()
                    .map_err(|det| Error::SingularLocalSystem { i, j, det })?;
            let [psi, nu] = sys2
                .solve()
                .map_err(|det| Error::SingularLocalSystem { i, j, det })?;
            let values = [phi, mu, omega, psi, nu];
            for (f, v) in state.fields.iter_mut().zip(values) {
                f[(i, j)] = v;
                if within {
                    if i == 1 {
                        f[(0, j)] = v;
                    }
                    if i == m {
                        f[(m + 1, j)] = v;
                    }
                    if j == 1 {
                        f[(i, 0)] = v;
                    }
                    if j == n {
                        f[(i, n + 1)] = v;
                    }
                }
            }
        }
    }
    state.apply_neumann_bc();
    Ok(())
}

/// `sweeps` consecutive sweeps.
pub fn smooth(
    state: &mut State,
    src: &SourceBundle,
    ctx: &StepContext,
    sweeps: usize,
) -> Result<()> {
    smooth_with(state, src, ctx, sweeps, GhostRefresh::BetweenSweeps)
}

pub fn smooth_with(
    state: &mut State,
    src: &SourceBundle,
    ctx: &StepContext,
    sweeps: usize,
    ghosts: GhostRefresh,
) -> Result<()> {
    for _ in 0..sweeps {
        smooth_sweep_with(state, src, ctx, ghosts)?;
    }
    Ok(())
}
