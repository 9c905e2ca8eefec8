//! Free-energy densities, coefficient functions, total energies and the
//! common-tangent analysis that decides whether a vesicle grows or shrinks.

use crate::error::{Error, Result};
use crate::grid::{self, CompensatedSum, Field, SURFACE_PREFACTOR};

/// Double well `g(φ) = (φ² - 1)² / 4`.
#[inline]
pub fn double_well(phi: f64) -> f64 {
    let a = phi * phi - 1.0;
    0.25 * a * a
}

#[inline]
pub fn double_well_d1(phi: f64) -> f64 {
    phi * phi * phi - phi
}

#[inline]
pub fn double_well_d2(phi: f64) -> f64 {
    3.0 * phi * phi - 1.0
}

/// Phase interpolant `p(φ) = -φ³/2 + 3φ/2`: `p(±1) = ±1`, `p'(±1) = 0`.
#[inline]
pub fn interp_p(phi: f64) -> f64 {
    -0.5 * phi * phi * phi + 1.5 * phi
}

#[inline]
pub fn interp_p_d1(phi: f64) -> f64 {
    -1.5 * phi * phi + 1.5
}

/// Degenerate concentration mobility `1 - M0 (φ² - 1)²`.
pub fn mobility_psi(phi: f64, m0: f64) -> Result<f64> {
    if !(m0 > 0.0 && m0 < 1.0) {
        return Err(Error::param("m0", format!("must lie in (0, 1), got {m0}")));
    }
    Ok(mobility_psi_unchecked(phi, m0))
}

#[inline]
pub(crate) fn mobility_psi_unchecked(phi: f64, m0: f64) -> f64 {
    let a = phi * phi - 1.0;
    1.0 - m0 * a * a
}

/// A free-energy density of the concentration in one bulk phase.
pub trait PhaseDensity {
    fn value(&self, psi: f64) -> f64;
    fn d1(&self, psi: f64) -> f64;
    fn d2(&self, psi: f64) -> f64;
}

/// `(γ/2)(ψ - center)² + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticWell {
    pub curvature: f64,
    pub center: f64,
    pub offset: f64,
}

impl PhaseDensity for QuadraticWell {
    #[inline]
    fn value(&self, psi: f64) -> f64 {
        let d = psi - self.center;
        0.5 * self.curvature * d * d + self.offset
    }

    #[inline]
    fn d1(&self, psi: f64) -> f64 {
        self.curvature * (psi - self.center)
    }

    #[inline]
    fn d2(&self, _psi: f64) -> f64 {
        self.curvature
    }
}

/// Physical constants of the vesicle model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub epsilon: f64,
    pub gamma_surf: f64,
    pub gamma_bend: f64,
    pub gamma_area: f64,
    pub gamma_in: f64,
    pub gamma_out: f64,
    pub psi_in: f64,
    pub psi_out: f64,
    pub beta_in: f64,
    pub beta_out: f64,
    pub m0: f64,
    pub m_phi: f64,
}

impl Default for ModelParams {
    /// The growth setup with inner equilibrium concentration 0.3.
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            gamma_surf: 1.0,
            gamma_bend: 0.05,
            gamma_area: 5.0e4,
            gamma_in: 1.0e5,
            gamma_out: 1.0e5,
            psi_in: 0.3,
            psi_out: 0.8,
            beta_in: 0.0,
            beta_out: 0.0,
            m0: 0.5,
            m_phi: 1.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("epsilon", self.epsilon),
            ("gamma_surf", self.gamma_surf),
            ("gamma_bend", self.gamma_bend),
            ("gamma_area", self.gamma_area),
            ("gamma_in", self.gamma_in),
            ("gamma_out", self.gamma_out),
            ("psi_in", self.psi_in),
            ("psi_out", self.psi_out),
            ("beta_in", self.beta_in),
            ("beta_out", self.beta_out),
            ("m0", self.m0),
            ("m_phi", self.m_phi),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {v}")));
            }
        }
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("gamma_in", self.gamma_in),
            ("gamma_out", self.gamma_out),
            ("m_phi", self.m_phi),
        ] {
            if v <= 0.0 {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("gamma_surf", self.gamma_surf),
            ("gamma_bend", self.gamma_bend),
            ("gamma_area", self.gamma_area),
        ] {
            if v < 0.0 {
                return Err(Error::param(name, format!("must be non-negative, got {v}")));
            }
        }
        if !(self.m0 > 0.0 && self.m0 < 1.0) {
            return Err(Error::param(
                "m0",
                format!("must lie in the open interval (0, 1), got {}", self.m0),
            ));
        }
        Ok(())
    }

    /// `γ_surf · 3√2/4`.
    pub fn gamma1(&self) -> f64 {
        self.gamma_surf * SURFACE_PREFACTOR
    }

    /// `γ_bend · 3√2/8`.
    pub fn gamma2(&self) -> f64 {
        self.gamma_bend * SURFACE_PREFACTOR * 0.5
    }

    /// `γ_area · 3√2/4`.
    pub fn gamma3(&self) -> f64 {
        self.gamma_area * SURFACE_PREFACTOR
    }

    pub fn inner_well(&self) -> QuadraticWell {
        QuadraticWell {
            curvature: self.gamma_in,
            center: self.psi_in,
            offset: self.beta_in,
        }
    }

    pub fn outer_well(&self) -> QuadraticWell {
        QuadraticWell {
            curvature: self.gamma_out,
            center: self.psi_out,
            offset: self.beta_out,
        }
    }

    pub fn f_in(&self, psi: f64) -> f64 {
        self.inner_well().value(psi)
    }

    pub fn f_out(&self, psi: f64) -> f64 {
        self.outer_well().value(psi)
    }

    pub fn df_in(&self, psi: f64) -> f64 {
        self.inner_well().d1(psi)
    }

    pub fn df_out(&self, psi: f64) -> f64 {
        self.outer_well().d1(psi)
    }

    /// `f_osm(φ, ψ) = (1 + p)/2 f_in(ψ) + (1 - p)/2 f_out(ψ)`.
    pub fn osmotic_density(&self, phi: f64, psi: f64) -> f64 {
        let p = interp_p(phi);
        0.5 * (1.0 + p) * self.f_in(psi) + 0.5 * (1.0 - p) * self.f_out(psi)
    }

    /// `∂ν/∂ψ` for the quadratic wells with the phase weight frozen at `φ`.
    #[inline]
    pub fn nu_coefficient(&self, phi: f64) -> f64 {
        let p = interp_p(phi);
        0.5 * (1.0 + p) * self.gamma_in + 0.5 * (1.0 - p) * self.gamma_out
    }

    /// The ψ-independent part of ν, `-(1 + p)/2 γ_in ψ_in - (1 - p)/2 γ_out ψ_out`.
    #[inline]
    pub fn nu_offset(&self, phi: f64) -> f64 {
        let p = interp_p(phi);
        -0.5 * (1.0 + p) * self.gamma_in * self.psi_in
            - 0.5 * (1.0 - p) * self.gamma_out * self.psi_out
    }
}

/// The four energy contributions plus the raw surface quadrature `B_h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub surf: f64,
    pub bend: f64,
    pub area: f64,
    pub osm: f64,
    pub total: f64,
    pub surface_quadrature: f64,
}

/// Discrete total energy of `(φ, ψ)` with target surface area `area`.
/// Both fields must carry refreshed ghosts.
pub fn total_energies(
    phi: &Field,
    psi: &Field,
    params: &ModelParams,
    area: f64,
) -> Result<EnergyReport> {
    phi.spec().check_same(psi.spec())?;
    let eps = params.epsilon;
    let b_h = grid::surface_quadrature(phi, eps)?;
    let surf = params.gamma_surf * b_h;

    let spec = *phi.spec();
    let h2 = spec.h() * spec.h();
    let lap = grid::laplacian(phi);
    let bend_pref = SURFACE_PREFACTOR / (4.0 * eps);
    let mut bend_acc = CompensatedSum::default();
    let mut osm_acc = CompensatedSum::default();
    for i in 1..=spec.m() {
        for j in 1..=spec.n() {
            let v = phi[(i, j)];
            let w = double_well_d1(v) / eps - eps * lap[(i, j)];
            bend_acc.add(bend_pref * w * w);
            osm_acc.add(params.osmotic_density(v, psi[(i, j)]));
        }
    }
    let bend = params.gamma_bend * h2 * bend_acc.value();
    let osm = h2 * osm_acc.value();
    let area_pen = 0.5 * params.gamma_area * (b_h - area) * (b_h - area);
    Ok(EnergyReport {
        surf,
        bend,
        area: area_pen,
        osm,
        total: surf + bend + area_pen + osm,
        surface_quadrature: b_h,
    })
}

/// Tangency points of the line touching both bulk densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentResult {
    pub psi_in: f64,
    pub psi_out: f64,
    pub slope: f64,
}

impl TangentResult {
    /// `(f_in'(a) - k, f_out'(b) - k, f_out(b) - f_in(a) - k (b - a))`.
    pub fn residuals<D1: PhaseDensity, D2: PhaseDensity>(
        &self,
        inner: &D1,
        outer: &D2,
    ) -> [f64; 3] {
        let (a, b, k) = (self.psi_in, self.psi_out, self.slope);
        [
            inner.d1(a) - k,
            outer.d1(b) - k,
            outer.value(b) - inner.value(a) - k * (b - a),
        ]
    }
}

/// Closed-form common tangent of the two quadratic wells in `params`.
///
/// With `a = ψ_in + k/γ_in` and `b = ψ_out + k/γ_out` the tangency condition
/// reduces to `(1/γ_in - 1/γ_out)/2 · k² - (ψ_out - ψ_in) k + (β_out - β_in) = 0`;
/// the root continuous with the equal-curvature limit is taken.
pub fn common_tangent(params: &ModelParams) -> Result<TangentResult> {
    if !(params.gamma_in > 0.0 && params.gamma_out > 0.0) {
        return Err(Error::NoTangent("well curvatures must be positive".into()));
    }
    let quad = 0.5 * (1.0 / params.gamma_in - 1.0 / params.gamma_out);
    let dpsi = params.psi_out - params.psi_in;
    let dbeta = params.beta_out - params.beta_in;
    let disc = dpsi * dpsi - 4.0 * quad * dbeta;
    if disc < 0.0 {
        return Err(Error::NoTangent(format!("negative discriminant {disc:e}")));
    }
    let root = disc.sqrt();
    // 2c / (-b ± √disc) avoids cancellation; pick the sign matching dpsi.
    let denom = if dpsi >= 0.0 {
        dpsi + root
    } else {
        dpsi - root
    };
    if denom == 0.0 {
        return Err(Error::NoTangent("degenerate wells".into()));
    }
    let slope = 2.0 * dbeta / denom;
    let result = TangentResult {
        psi_in: params.psi_in + slope / params.gamma_in,
        psi_out: params.psi_out + slope / params.gamma_out,
        slope,
    };
    if !(result.psi_in < result.psi_out) {
        return Err(Error::NoTangent(format!(
            "touch points not ordered: {} >= {}",
            result.psi_in, result.psi_out
        )));
    }
    Ok(result)
}

/// Damped Newton iteration on the two tangency equations for general
/// convex densities, started from `(a0, b0)`.
pub fn common_tangent_newton<D1: PhaseDensity, D2: PhaseDensity>(
    inner: &D1,
    outer: &D2,
    start: (f64, f64),
) -> Result<TangentResult> {
    let residual = |a: f64, b: f64| {
        let r1 = inner.d1(a) - outer.d1(b);
        let r2 = outer.value(b) - inner.value(a) - inner.d1(a) * (b - a);
        [r1, r2]
    };
    let norm = |r: [f64; 2]| r[0].hypot(r[1]);
    let (mut a, mut b) = start;
    let mut r = residual(a, b);
    for _ in 0..100 {
        if norm(r) <= 1e-14 * (1.0 + inner.d1(a).abs()) {
            break;
        }
        let j11 = inner.d2(a);
        let j12 = -outer.d2(b);
        let j21 = -inner.d2(a) * (b - a);
        let j22 = outer.d1(b) - inner.d1(a);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NoTangent("singular Newton Jacobian".into()));
        }
        let da = (-r[0] * j22 + r[1] * j12) / det;
        let db = (-r[1] * j11 + r[0] * j21) / det;
        let mut step = 1.0;
        loop {
            let (na, nb) = (a + step * da, b + step * db);
            let nr = residual(na, nb);
            if norm(nr) < norm(r) || step < 1e-6 {
                a = na;
                b = nb;
                r = nr;
                break;
            }
            step *= 0.5;
        }
    }
    if norm(r) > 1e-10 * (1.0 + inner.d1(a).abs()) {
        return Err(Error::NoTangent("Newton iteration did not converge".into()));
    }
    if !(a < b) {
        return Err(Error::NoTangent(format!(
            "touch points not ordered: {a} >= {b}"
        )));
    }
    Ok(TangentResult {
        psi_in: a,
        psi_out: b,
        slope: inner.d1(a),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Growth,
    Shrinkage,
    Equilibrium,
}

/// Growth when the initial interior concentration sits below its
/// equilibrium value, shrinkage when above. Assumes the exterior starts at
/// its own equilibrium concentration.
pub fn classify_regime(psi0_in: f64, tangent: &TangentResult) -> Regime {
    let d = psi0_in - tangent.psi_in;
    if d.abs() <= 1e-12 {
        Regime::Equilibrium
    } else if d < 0.0 {
        Regime::Growth
    } else {
        Regime::Shrinkage
    }
}
