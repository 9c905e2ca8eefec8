//! The fully discrete time step written as `N(Φ^{k+1}) = S(Φ^k)`.
//!
//! Everything evaluated at time level `k` (the bending coefficient
//! `g''(φ^k)`, the phase weight `p(φ^k)`, the edge mobilities and the
//! scalar `B_h^k - A_h`) is frozen in a [`StepContext`]; the operator only
//! reads the unknowns from the candidate state.

use crate::error::{Error, Result};
use crate::grid::{self, CompensatedSum, EdgeFieldEW, EdgeFieldNS, Field, GridSpec};
use crate::model::{self, ModelParams};

pub const PHI: usize = 0;
pub const MU: usize = 1;
pub const OMEGA: usize = 2;
pub const PSI: usize = 3;
pub const NU: usize = 4;

/// The five unknowns `(φ, μ, ω, ψ, ν)` on one grid level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub fields: [Field; 5],
}

impl State {
    pub fn new(phi: Field, mu: Field, omega: Field, psi: Field, nu: Field) -> Result<Self> {
        let spec = *phi.spec();
        for f in [&mu, &omega, &psi, &nu] {
            spec.check_same(f.spec())?;
        }
        Ok(Self {
            fields: [phi, mu, omega, psi, nu],
        })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            fields: std::array::from_fn(|_| Field::zeros(spec)),
        }
    }

    /// A state whose chemical potentials are consistent with `(φ, ψ)`:
    /// `ω = g'(φ)/ε - εΔφ`, `μ` from the variational formula with the area
    /// penalty switched off, `ν` from the quadratic wells. Useful as the
    /// first initial guess of a run; it does not change the solution.
    pub fn from_phase_and_concentration(
        phi: Field,
        psi: Field,
        params: &ModelParams,
    ) -> Result<Self> {
        phi.spec().check_same(psi.spec())?;
        let spec = *phi.spec();
        let eps = params.epsilon;
        let lap_phi = grid::laplacian(&phi);
        let omega = Field::from_index_fn(spec, |i, j| {
            model::double_well_d1(phi[(i, j)]) / eps - eps * lap_phi[(i, j)]
        });
        let lap_omega = grid::laplacian(&omega);
        let (g1, g2) = (params.gamma1(), params.gamma2());
        let mu = Field::from_index_fn(spec, |i, j| {
            let (p, c, w) = (phi[(i, j)], psi[(i, j)], omega[(i, j)]);
            g1 * w
                + g2 * (w * model::double_well_d2(p) / (eps * eps) - lap_omega[(i, j)])
                + 0.5 * model::interp_p_d1(p) * (params.f_in(c) - params.f_out(c))
        });
        let nu = Field::from_index_fn(spec, |i, j| {
            let (p, c) = (phi[(i, j)], psi[(i, j)]);
            params.nu_coefficient(p) * c + params.nu_offset(p)
        });
        Self::new(phi, mu, omega, psi, nu)
    }

    pub fn spec(&self) -> &GridSpec {
        self.fields[PHI].spec()
    }

    pub fn phi(&self) -> &Field {
        &self.fields[PHI]
    }

    pub fn mu(&self) -> &Field {
        &self.fields[MU]
    }

    pub fn omega(&self) -> &Field {
        &self.fields[OMEGA]
    }

    pub fn psi(&self) -> &Field {
        &self.fields[PSI]
    }

    pub fn nu(&self) -> &Field {
        &self.fields[NU]
    }

    pub fn apply_neumann_bc(&mut self) {
        for f in &mut self.fields {
            f.apply_neumann_bc();
        }
    }

    pub fn all_finite(&self) -> bool {
        self.fields.iter().all(Field::all_finite)
    }
}

/// Five cell-centered arrays: a source `S`, an operator value `N(Φ)` or a
/// residual `S - N(Φ)`. Ghost cells are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceBundle {
    pub fields: [Field; 5],
}

impl SourceBundle {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            fields: std::array::from_fn(|_| Field::zeros(spec)),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        self.fields[0].spec()
    }

    /// Interior-wise `self - other`.
    pub fn sub(&self, other: &SourceBundle) -> SourceBundle {
        let mut out = self.clone();
        for (a, b) in out.fields.iter_mut().zip(&other.fields) {
            a.axpy_interior(-1.0, b);
        }
        out
    }

    /// Interior-wise `self + other`.
    pub fn add(&self, other: &SourceBundle) -> SourceBundle {
        let mut out = self.clone();
        for (a, b) in out.fields.iter_mut().zip(&other.fields) {
            a.axpy_interior(1.0, b);
        }
        out
    }

    /// `sqrt( sum_k sum_ij R_k(i,j)^2 / (5 m n) )`.
    pub fn norm_2star(&self) -> f64 {
        let spec = *self.spec();
        let mut acc = CompensatedSum::default();
        for f in &self.fields {
            f.for_each_interior(|_, _, v| acc.add(v * v));
        }
        (acc.value() / (5 * spec.cells()) as f64).sqrt()
    }
}

/// Coefficients frozen at time level `k` on one grid level.
#[derive(Debug, Clone)]
pub struct StepContext {
    /// `(φ^k, μ^k, ω^k, ψ^k, ν^k)` on this level; coarse levels hold the
    /// restricted fine state.
    pub prev: State,
    pub s: f64,
    pub params: ModelParams,
    /// `B_h(φ^k)` on the finest grid.
    pub bk: f64,
    /// Target area `A_h = B_h(φ^0)`, fixed for the whole run.
    pub ah: f64,
    /// `γ1 + (γ2/ε²) g''(φ^k) + γ3 (B_h^k - A_h)`.
    pub omega_coef: Field,
    /// `(1 + p(φ^k))/2 γ_in + (1 - p(φ^k))/2 γ_out`.
    pub nu_coef: Field,
    /// `M_ψ(A_x φ^k)`.
    pub mob_ew: EdgeFieldEW,
    /// `M_ψ(A_y φ^k)`.
    pub mob_ns: EdgeFieldNS,
}

impl StepContext {
    /// Context for the finest level: `B_h^k` is computed from `prev.φ`.
    pub fn new(prev: State, s: f64, ah: f64, params: ModelParams) -> Result<Self> {
        let bk = grid::surface_quadrature(prev.phi(), params.epsilon)?;
        Self::with_surface(prev, s, bk, ah, params)
    }

    /// Context with an externally supplied `B_h^k`; coarse levels reuse the
    /// fine-grid scalar.
    pub fn with_surface(
        prev: State,
        s: f64,
        bk: f64,
        ah: f64,
        params: ModelParams,
    ) -> Result<Self> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::param(
                "dt",
                format!("time step must be non-negative, got {s}"),
            ));
        }
        params.validate()?;
        let phi_k = prev.phi();
        let eps = params.epsilon;
        let base = params.gamma1() + params.gamma3() * (bk - ah);
        let g2_eps2 = params.gamma2() / (eps * eps);
        let omega_coef = phi_k.map_interior(|p| base + g2_eps2 * model::double_well_d2(p));
        let nu_coef = phi_k.map_interior(|p| params.nu_coefficient(p));
        let m0 = params.m0;
        let mob_ew =
            grid::center_to_edge_avg_x(phi_k).map(|a| model::mobility_psi_unchecked(a, m0));
        let mob_ns =
            grid::center_to_edge_avg_y(phi_k).map(|a| model::mobility_psi_unchecked(a, m0));
        Ok(Self {
            prev,
            s,
            params,
            bk,
            ah,
            omega_coef,
            nu_coef,
            mob_ew,
            mob_ns,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        self.prev.spec()
    }
}

/// The right-hand side `S(Φ^k)` on interior cells.
pub fn assemble_source(ctx: &StepContext) -> SourceBundle {
    let params = &ctx.params;
    let phi = ctx.prev.phi();
    let psi = ctx.prev.psi();
    let spec = *ctx.spec();
    let mut out = SourceBundle::zeros(spec);
    for i in 1..=spec.m() {
        for j in 1..=spec.n() {
            let (p, c) = (phi[(i, j)], psi[(i, j)]);
            out.fields[PHI][(i, j)] = p;
            out.fields[MU][(i, j)] =
                0.5 * model::interp_p_d1(p) * (params.f_in(c) - params.f_out(c));
            out.fields[OMEGA][(i, j)] = 0.0;
            out.fields[PSI][(i, j)] = c;
            out.fields[NU][(i, j)] = params.nu_offset(p);
        }
    }
    out
}

/// `N(Φ)` on interior cells. `candidate` must carry refreshed ghosts.
pub fn apply_n(candidate: &State, ctx: &StepContext) -> SourceBundle {
    let spec = *ctx.spec();
    let mut out = SourceBundle::zeros(spec);
    apply_n_into(candidate, ctx, &mut out);
    out
}

pub(crate) fn apply_n_into(candidate: &State, ctx: &StepContext, out: &mut SourceBundle) {
    let spec = *ctx.spec();
    let params = &ctx.params;
    let (m, n, h) = (spec.m(), spec.n(), spec.h());
    let inv_h2 = 1.0 / (h * h);
    let eps = params.epsilon;
    let g2 = params.gamma2();
    let s_mphi = ctx.s * params.m_phi;
    let s_h2 = ctx.s * inv_h2;
    let stride = n + 2;

    let phi = candidate.fields[PHI].raw();
    let mu = candidate.fields[MU].raw();
    let omega = candidate.fields[OMEGA].raw();
    let psi = candidate.fields[PSI].raw();
    let nu = candidate.fields[NU].raw();
    let wcoef = ctx.omega_coef.raw();
    let ncoef = ctx.nu_coef.raw();
    let [o1, o2, o3, o4, o5] = &mut out.fields;
    let (o1, o2, o3, o4, o5) = (
        o1.raw_mut(),
        o2.raw_mut(),
        o3.raw_mut(),
        o4.raw_mut(),
        o5.raw_mut(),
    );

    for i in 1..=m {
        for j in 1..=n {
            let k = i * stride + j;
            let lap = |f: &[f64]| {
                inv_h2 * (f[k + stride] + f[k - stride] + f[k + 1] + f[k - 1] - 4.0 * f[k])
            };
            let p = phi[k];
            o1[k] = p + s_mphi * mu[k];
            o2[k] = mu[k] - wcoef[k] * omega[k] + g2 * lap(omega);
            o3[k] = omega[k] - (p * p * p - p) / eps + eps * lap(phi);
            let me = ctx.mob_ew[(i, j)];
            let mw = ctx.mob_ew[(i - 1, j)];
            let mn = ctx.mob_ns[(i, j)];
            let ms = ctx.mob_ns[(i, j - 1)];
            let v = nu[k];
            let flux = me * (nu[k + stride] - v) - mw * (v - nu[k - stride]) + mn * (nu[k + 1] - v)
                - ms * (v - nu[k - 1]);
            o4[k] = psi[k] - s_h2 * flux;
            o5[k] = v - ncoef[k] * psi[k];
        }
    }
}

/// `R = S - N(Φ)` together with its `2,*` norm.
pub fn residual(candidate: &State, src: &SourceBundle, ctx: &StepContext) -> (SourceBundle, f64) {
    let r = src.sub(&apply_n(candidate, ctx));
    let norm = r.norm_2star();
    (r, norm)
}

/// Just the `2,*` norm of `S - N(Φ)`.
pub fn residual_norm(candidate: &State, src: &SourceBundle, ctx: &StepContext) -> f64 {
    residual(candidate, src, ctx).1
}
