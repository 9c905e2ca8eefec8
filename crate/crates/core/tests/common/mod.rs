#![allow(dead_code)]

pub mod oracle;

use proptest::prelude::*;

use vesicle_core::grid::{Field, GridSpec};
use vesicle_core::model::{ModelParams, PhaseDensity, QuadraticWell};
use vesicle_core::scheme::State;

pub fn spec(m: usize, n: usize, h: f64) -> GridSpec {
    GridSpec::new(m, n, h).unwrap()
}

/// A field on `spec` with interior values drawn from `lo..hi`.
pub fn field(spec: GridSpec, lo: f64, hi: f64) -> impl Strategy<Value = Field> {
    prop::collection::vec(lo..hi, spec.cells())
        .prop_map(move |v| Field::from_interior(spec, &v).unwrap())
}

/// Grid sizes `m, n` in `1..=max` and spacing `h`.
pub fn small_spec(max: usize) -> impl Strategy<Value = GridSpec> {
    (1..=max, 1..=max, 0.01..1.0f64).prop_map(|(m, n, h)| spec(m, n, h))
}

/// Even sizes so the grid can be coarsened once.
pub fn even_spec(max_half: usize) -> impl Strategy<Value = GridSpec> {
    (1..=max_half, 1..=max_half, 0.01..1.0f64).prop_map(|(m, n, h)| spec(2 * m, 2 * n, h))
}

/// A state with a phase in `[-1.2, 1.2]`, concentration in `[0, 1]` and
/// moderate potentials.
pub fn state(spec: GridSpec) -> impl Strategy<Value = State> {
    (
        field(spec, -1.2, 1.2),
        field(spec, -5.0, 5.0),
        field(spec, -5.0, 5.0),
        field(spec, 0.0, 1.0),
        field(spec, -5.0, 5.0),
    )
        .prop_map(|(a, b, c, d, e)| State::new(a, b, c, d, e).unwrap())
}

/// Physically plausible model constants.
pub fn params() -> impl Strategy<Value = ModelParams> {
    (
        0.005..0.05f64,
        0.0..1.0f64,
        0.01..1.0f64,
        0.0..1e4f64,
        1e3..1e5f64,
        1e3..1e5f64,
        0.05..0.4f64,
        0.6..0.9f64,
        0.05..0.95f64,
        0.5..2.0f64,
    )
        .prop_map(
            |(
                epsilon,
                gamma_surf,
                gamma_bend,
                gamma_area,
                gamma_in,
                gamma_out,
                psi_in,
                psi_out,
                m0,
                m_phi,
            )| {
                ModelParams {
                    epsilon,
                    gamma_surf,
                    gamma_bend,
                    gamma_area,
                    gamma_in,
                    gamma_out,
                    psi_in,
                    psi_out,
                    beta_in: 0.0,
                    beta_out: 0.0,
                    m0,
                    m_phi,
                }
            },
        )
}

/// Sum of interior values times `h²`, accumulated naively.
pub fn naive_integral(f: &Field) -> f64 {
    let h = f.spec().h();
    let mut s = 0.0;
    f.for_each_interior(|_, _, v| s += v);
    s * h * h
}

/// A state that is smooth on the grid scale: a diffuse circular interface
/// of random center and radius, consistent potentials, and a random
/// low-frequency perturbation of every component.
pub fn smooth_state(spec: GridSpec, params: ModelParams) -> impl Strategy<Value = State> {
    let (lx, ly) = (spec.lx(), spec.ly());
    (
        -lx..2.0 * lx,
        -ly..2.0 * ly,
        0.5 * lx.max(ly)..4.0 * lx.max(ly),
        prop::array::uniform5(-0.2..0.2f64),
        prop::array::uniform5(0usize..3),
        0.05..0.3f64,
    )
        .prop_map(move |(cx, cy, r, amp, k, dpsi)| {
            let w = std::f64::consts::SQRT_2 * params.epsilon;
            let phi = Field::from_fn(spec, |x, y| ((r - (x - cx).hypot(y - cy)) / w).tanh());
            let psi = phi.map_interior(|v| 0.5 - dpsi * v);
            let mut st = State::from_phase_and_concentration(phi, psi, &params).unwrap();
            for (c, f) in st.fields.iter_mut().enumerate() {
                let scale = f.max_abs_interior().max(1.0) * amp[c];
                let kk = k[c] as f64 * std::f64::consts::PI;
                let wave = Field::from_fn(spec, |x, y| {
                    scale * (kk * x / lx).cos() * (kk * y / ly).cos()
                });
                f.axpy_interior(1.0, &wave);
                f.apply_neumann_bc();
            }
            st
        })
}

/// Plain Newton on the tangency equations with a finite-difference Jacobian.
pub fn brute_tangent(inner: &QuadraticWell, outer: &QuadraticWell) -> (f64, f64) {
    let r = |a: f64, b: f64| {
        [
            inner.d1(a) - outer.d1(b),
            outer.value(b) - inner.value(a) - inner.d1(a) * (b - a),
        ]
    };
    let (mut a, mut b) = (inner.center, outer.center);
    for _ in 0..60 {
        let f = r(a, b);
        let d = 1e-7;
        let fa = r(a + d, b);
        let fb = r(a, b + d);
        let j = [
            [(fa[0] - f[0]) / d, (fb[0] - f[0]) / d],
            [(fa[1] - f[1]) / d, (fb[1] - f[1]) / d],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        a -= (f[0] * j[1][1] - f[1] * j[0][1]) / det;
        b -= (j[0][0] * f[1] - j[1][0] * f[0]) / det;
    }
    (a, b)
}

/// True when the two wells never meet, so one lies strictly above the
/// other and no common tangent exists.
pub fn wells_nested(inner: &QuadraticWell, outer: &QuadraticWell) -> bool {
    let d = |x: f64| outer.value(x) - inner.value(x);
    let c = d(0.0);
    let a = 0.5 * (d(1.0) + d(-1.0)) - c;
    let b = 0.5 * (d(1.0) - d(-1.0));
    b * b - 4.0 * a * c < 0.0
}
