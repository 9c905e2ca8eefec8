use nalgebra::{Matrix5, Vector5};
use proptest::prelude::*;

use vesicle_core::grid::Field;
use vesicle_core::model::ModelParams;
use vesicle_core::scheme::{apply_n, SourceBundle, State, StepContext, MU, NU, OMEGA, PHI, PSI};
use vesicle_core::smoother::{local_systems, LocalSystem2, LocalSystem3};

pub type Case = (State, State, ModelParams, f64, usize, usize);

/// The coupled five-unknown cell system written out from the discrete
/// equations, with the cubic linearised as `φ_old² φ_new` and the linear
/// part of `g'` lagged. Also returns the magnitude of the terms summed
/// into each right-hand side entry.
fn dense_cell_system(
    st: &State,
    src: &SourceBundle,
    ctx: &StepContext,
    i: usize,
    j: usize,
) -> (Matrix5<f64>, Vector5<f64>, Vector5<f64>) {
    let p = &ctx.params;
    let h2 = ctx.spec().h().powi(2);
    let eps = p.epsilon;
    let g2 = p.gamma2();
    let nb = |f: &Field| f[(i + 1, j)] + f[(i - 1, j)] + f[(i, j + 1)] + f[(i, j - 1)];
    let nb_abs = |f: &Field| {
        f[(i + 1, j)].abs() + f[(i - 1, j)].abs() + f[(i, j + 1)].abs() + f[(i, j - 1)].abs()
    };
    let phi_l = st.phi()[(i, j)];
    let (me, mw, mn, ms) = (
        ctx.mob_ew[(i, j)],
        ctx.mob_ew[(i - 1, j)],
        ctx.mob_ns[(i, j)],
        ctx.mob_ns[(i, j - 1)],
    );
    let nu = st.nu();
    let a = Matrix5::new(
        1.0,
        ctx.s * p.m_phi,
        0.0,
        0.0,
        0.0,
        0.0,
        1.0,
        -ctx.omega_coef[(i, j)] - 4.0 * g2 / h2,
        0.0,
        0.0,
        -phi_l * phi_l / eps - 4.0 * eps / h2,
        0.0,
        1.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        1.0,
        ctx.s / h2 * (me + mw + mn + ms),
        0.0,
        0.0,
        0.0,
        -ctx.nu_coef[(i, j)],
        1.0,
    );
    let b = Vector5::new(
        src.fields[PHI][(i, j)],
        src.fields[MU][(i, j)] - g2 / h2 * nb(st.omega()),
        src.fields[OMEGA][(i, j)] - phi_l / eps - eps / h2 * nb(st.phi()),
        src.fields[PSI][(i, j)]
            + ctx.s / h2
                * (me * nu[(i + 1, j)]
                    + mw * nu[(i - 1, j)]
                    + mn * nu[(i, j + 1)]
                    + ms * nu[(i, j - 1)]),
        src.fields[NU][(i, j)],
    );
    let mag = Vector5::new(
        src.fields[PHI][(i, j)].abs(),
        src.fields[MU][(i, j)].abs() + g2 / h2 * nb_abs(st.omega()),
        src.fields[OMEGA][(i, j)].abs() + (phi_l / eps).abs() + eps / h2 * nb_abs(st.phi()),
        src.fields[PSI][(i, j)].abs()
            + ctx.s / h2
                * (me * nu[(i + 1, j)].abs()
                    + mw * nu[(i - 1, j)].abs()
                    + mn * nu[(i, j + 1)].abs()
                    + ms * nu[(i, j - 1)].abs()),
        src.fields[NU][(i, j)].abs(),
    );
    (a, b, mag)
}

/// `b - a x` with each row accumulated in twice the working precision.
fn accurate_residual(a: &Matrix5<f64>, b: &Vector5<f64>, x: &Vector5<f64>) -> Vector5<f64> {
    Vector5::from_fn(|r, _| {
        let (mut hi, mut lo) = (b[r], 0.0);
        for c in 0..5 {
            let p = -a[(r, c)] * x[c];
            let pe = (-a[(r, c)]).mul_add(x[c], -p);
            let s = hi + p;
            let z = s - hi;
            lo += (hi - (s - z)) + (p - z) + pe;
            hi = s;
        }
        hi + lo
    })
}

/// Fully pivoted LU with refinement against an extra-precise residual.
fn dense_solve(a: &Matrix5<f64>, b: &Vector5<f64>) -> Vector5<f64> {
    let lu = a.full_piv_lu();
    let mut x = lu.solve(b).unwrap();
    for _ in 0..3 {
        x += lu.solve(&accurate_residual(a, b, &x)).unwrap();
    }
    x
}

/// White-noise states with the interface resolved by one to eight cells,
/// `ε/h ∈ [1, 8]`.
pub fn rough_setup() -> impl Strategy<Value = Case> {
    (2usize..6, 2usize..6, super::params(), 1.0..8.0f64).prop_flat_map(|(m, n, p, cells)| {
        let s = super::spec(m, n, p.epsilon / cells);
        (
            super::state(s),
            super::state(s),
            Just(p),
            1e-8..1e-4f64,
            1..=m,
            1..=n,
        )
    })
}

/// As [`rough_setup`] with grid-smooth states.
pub fn smooth_setup() -> impl Strategy<Value = Case> {
    (2usize..9, 2usize..9, super::params(), 1.0..8.0f64).prop_flat_map(|(m, n, p, cells)| {
        let s = super::spec(m, n, p.epsilon / cells);
        (
            super::smooth_state(s, p),
            super::smooth_state(s, p),
            Just(p),
            1e-8..1e-4f64,
            1..=m,
            1..=n,
        )
    })
}

/// The 5×5 block-diagonal system handed to the dense solver.
fn assembled(s3: &LocalSystem3, s2: &LocalSystem2) -> (Matrix5<f64>, Vector5<f64>) {
    let m3 = s3.matrix();
    let mut a = Matrix5::zeros();
    for r in 0..3 {
        for c in 0..3 {
            a[(r, c)] = m3[r][c];
        }
    }
    for r in 0..2 {
        for c in 0..2 {
            a[(3 + r, 3 + c)] = s2.a[r][c];
        }
    }
    (a, Vector5::new(s3.b[0], s3.b[1], s3.b[2], s2.b[0], s2.b[1]))
}

/// Compares one cell's Cramer solution with a dense solve of the same
/// system, after checking the system against an independent assembly.
pub fn check_cell((prev, st, p, dt, i, j): Case) -> Result<(), TestCaseError> {
    let ctx = StepContext::with_surface(prev, dt, 1.0, 1.0, p).unwrap();
    let src = apply_n(&st, &ctx);
    let (s3, s2) = local_systems(&st, &src, &ctx, i, j);

    // Entries agree with the system written out from the discrete equations.
    let (a, b) = assembled(&s3, &s2);
    let (oa, ob, mag) = dense_cell_system(&st, &src, &ctx, i, j);
    for k in 0..25 {
        prop_assert!((a[k] - oa[k]).abs() <= 1e-14 * oa[k].abs());
    }
    for k in 0..5 {
        prop_assert!(
            (b[k] - ob[k]).abs() <= 1e-12 * mag[k],
            "rhs {k}: {} vs {}",
            b[k],
            ob[k]
        );
    }

    let x3 = s3.solve().unwrap();
    let x2 = s2.solve().unwrap();
    let cramer = Vector5::new(x3[0], x3[1], x3[2], x2[0], x2[1]);
    let dense = dense_solve(&a, &b);
    let rel = (cramer - dense).norm() / dense.norm().max(f64::MIN_POSITIVE);
    prop_assert!(rel <= 1e-12, "relative difference {rel:e}");
    Ok(())
}
