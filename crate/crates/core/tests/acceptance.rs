//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails. Pass criterion numbers as arguments to
//! run a subset, e.g. `cargo test --test acceptance -- 4 7`.

mod common;

use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use vesicle_core::config::{self, RunConfig};
use vesicle_core::grid::{Field, GridSpec};
use vesicle_core::model::{common_tangent, common_tangent_newton, ModelParams};
use vesicle_core::multigrid::{build_contexts, fas_vcycle, prolong, restrict, Hierarchy, MgParams};
use vesicle_core::scheme::{apply_n, assemble_source, residual_norm, State, StepContext};
use vesicle_core::sim::study::{
    complexity_cases, complexity_study, convergence_study, ComplexityRow,
};
use vesicle_core::sim::{inner_area, DiagnosticsRow, Simulation};

use common::oracle;

type Check = Result<String, String>;

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// Iterations reported for tests 5 to 8 with two sweeps, at 1/128 and 1/256.
const TABLE1: [(u32, usize, usize); 4] = [(5, 8, 8), (6, 8, 9), (7, 10, 9), (8, 7, 7)];

fn complexity(test: u32) -> Result<Vec<ComplexityRow>, String> {
    let label = format!("table1-test{test}");
    let cfg = config::preset(&label).map_err(|e| e.to_string())?;
    complexity_study(&complexity_cases(&label, &cfg), 1).map_err(|e| e.to_string())
}

fn multigrid_complexity(rows: &BTreeMap<u32, Vec<ComplexityRow>>) -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (test, at128, at256) in TABLE1 {
        let r = &rows[&test];
        let (a, b) = (r[0].iterations, r[1].iterations);
        let fits = a.abs_diff(at128) <= 2 && b.abs_diff(at256) <= 2 && a.abs_diff(b) <= 2;
        ok &= fits;
        parts.push(format!("test {test}: {a}/{b} (reference {at128}/{at256})"));
    }
    let detail = parts.join(", ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn factors(history: &[f64]) -> Vec<f64> {
    history.windows(2).map(|w| w[1] / w[0]).collect()
}

fn geometric_mean(v: &[f64]) -> f64 {
    (v.iter().map(|x| x.ln()).sum::<f64>() / v.len() as f64).exp()
}

fn residual_behaviour(test6: &[ComplexityRow], test2: &[ComplexityRow]) -> Check {
    let (f128, f256) = (
        factors(&test6[0].residual_history),
        factors(&test6[1].residual_history),
    );
    let common = f128.len().min(f256.len());
    if common == 0 {
        return Err("test 6 converged in a single cycle".into());
    }
    let worst = f128[..common]
        .iter()
        .zip(&f256[..common])
        .map(|(a, b)| (a / b).max(b / a))
        .fold(0.0, f64::max);
    let (g128, g256) = (
        geometric_mean(&factors(&test2[0].residual_history)),
        geometric_mean(&factors(&test2[1].residual_history)),
    );
    let detail = format!(
        "test 6 worst per-cycle factor ratio {worst:.3} over {common} cycles; test 2 mean factor {g128:.3} at 1/128, {g256:.3} at 1/256"
    );
    if worst <= 2.0 && g256 > g128 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn spatial_convergence() -> Check {
    let cfg = config::preset("table2").map_err(|e| e.to_string())?;
    let report = convergence_study(&cfg, 1).map_err(|e| e.to_string())?;
    let rate = report.rows.last().and_then(|r| r.rate).ok_or("no rate")?;
    let errors: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("{:.4e}", r.error))
        .collect();
    let detail = format!(
        "errors {} ({} norm), rate {rate:.3}",
        errors.join(" / "),
        report.norm.as_str()
    );
    if rate >= 1.85 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn smoother_oracle() -> Check {
    let n = 10_000;
    for (name, result) in [
        (
            "smooth",
            runner(n).run(&oracle::smooth_setup(), oracle::check_cell),
        ),
        (
            "rough",
            runner(n).run(&oracle::rough_setup(), oracle::check_cell),
        ),
    ] {
        result.map_err(|e| format!("{name} draws: {e}"))?;
    }
    Ok(format!(
        "{n} smooth and {n} white-noise cell systems within 1e-12"
    ))
}

struct Trace {
    label: String,
    rows: Vec<DiagnosticsRow>,
    areas: Vec<f64>,
}

fn trace(label: &str, cfg: &RunConfig) -> Result<Trace, String> {
    let mut sim = Simulation::new(cfg).map_err(|e| e.to_string())?;
    let mut rows = vec![sim.diagnostics().map_err(|e| e.to_string())?];
    let mut areas = vec![inner_area(sim.state().phi())];
    for _ in 0..cfg.step_count() {
        sim.step().map_err(|e| format!("{label}: {e}"))?;
        rows.push(sim.diagnostics().map_err(|e| e.to_string())?);
        areas.push(inner_area(sim.state().phi()));
    }
    Ok(Trace {
        label: label.to_string(),
        rows,
        areas,
    })
}

fn regime_config(name: &str) -> Result<RunConfig, String> {
    let mut cfg = config::preset(name).map_err(|e| e.to_string())?;
    cfg.grid.m = 128;
    cfg.grid.n = 128;
    cfg.time.final_time = 2.5e-3;
    cfg.time.steps = 0;
    Ok(cfg)
}

fn regimes(growth: &Trace, shrink: &Trace, growth_target: f64, shrink_target: f64) -> Check {
    let mut detail = Vec::new();
    let mut ok = true;
    for (t, target, up) in [
        (growth, growth_target, true),
        (shrink, shrink_target, false),
    ] {
        let conc: Vec<f64> = t.rows.iter().map(|r| r.inner_conc).collect();
        let monotone = conc
            .windows(2)
            .all(|w| if up { w[1] > w[0] } else { w[1] < w[0] });
        let (c0, c1) = (conc[0], *conc.last().unwrap());
        let toward = (c1 - target).abs() < (c0 - target).abs();
        let (a0, a1) = (t.areas[0], *t.areas.last().unwrap());
        let area_dir = if up { a1 > a0 } else { a1 < a0 };
        ok &= monotone && toward && area_dir;
        detail.push(format!(
            "{}: inner_conc {c0:.4} -> {c1:.4} (target {target}, monotone {monotone}), inner area {a0:.4} -> {a1:.4}",
            t.label
        ));
    }
    let detail = detail.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Drift {
    mass: f64,
    surface: f64,
    energy_rise: f64,
}

fn drift(rows: &[DiagnosticsRow]) -> Drift {
    let (m0, b0) = (rows[0].total_mass, rows[0].b_h);
    Drift {
        mass: rows
            .iter()
            .map(|r| ((r.total_mass - m0) / m0).abs())
            .fold(0.0, f64::max),
        surface: rows
            .iter()
            .map(|r| ((r.b_h - b0) / b0).abs())
            .fold(0.0, f64::max),
        energy_rise: rows
            .windows(2)
            .map(|w| (w[1].f_total - w[0].f_total) / w[0].f_total.abs())
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

impl Drift {
    fn holds(&self) -> bool {
        self.mass < 1e-8 && self.surface < 5e-3 && self.energy_rise <= 1e-6
    }
}

fn conservation(traces: &[&Trace]) -> Check {
    let mut worst = Drift {
        mass: 0.0,
        surface: 0.0,
        energy_rise: f64::NEG_INFINITY,
    };
    let mut failures = Vec::new();
    let mut note = |label: &str, d: Drift| {
        if !d.holds() {
            failures.push(format!(
                "{label}: mass {:.2e}, B_h {:.3}%, F rise {:.2e}",
                d.mass,
                100.0 * d.surface,
                d.energy_rise
            ));
        }
        worst.mass = worst.mass.max(d.mass);
        worst.surface = worst.surface.max(d.surface);
        worst.energy_rise = worst.energy_rise.max(d.energy_rise);
    };
    for t in traces {
        note(&t.label, drift(&t.rows));
    }

    let draws = 6;
    let shapes = (
        prop::bool::ANY,
        0.15..0.22f64,
        0.0..0.03f64,
        2u32..9,
        -0.05..0.05f64,
        -0.05..0.05f64,
    );
    let shape_runs = RefCell::new(Vec::new());
    let result = runner(draws).run(&shapes, |(grow, radius, amp, modes, din, dout)| {
        let name = if grow { "fig7" } else { "fig11" };
        let mut cfg = regime_config(name).map_err(TestCaseError::fail)?;
        cfg.time.steps = 50;
        cfg.init.radius = radius;
        cfg.init.amplitude = amp;
        cfg.init.modes = modes;
        let inner = cfg.init.psi_slope + cfg.init.psi_offset + din;
        let outer = cfg.init.psi_offset - cfg.init.psi_slope + dout;
        cfg.init.psi_slope = (inner - outer) / 2.0;
        cfg.init.psi_offset = (inner + outer) / 2.0;
        let label = format!("{name} r={radius:.3} a={amp:.3} k={modes}");
        let t = trace(&label, &cfg).map_err(TestCaseError::fail)?;
        shape_runs.borrow_mut().push(t);
        Ok(())
    });
    result.map_err(|e| e.to_string())?;
    let shape_runs = shape_runs.into_inner();
    for t in &shape_runs {
        note(&t.label, drift(&t.rows));
    }
    let detail = format!(
        "{} runs; worst mass drift {:.2e}, B_h drift {:.3}%, F rise {:.2e}",
        traces.len() + shape_runs.len(),
        worst.mass,
        100.0 * worst.surface,
        worst.energy_rise
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

fn fixed_points() -> Check {
    let p = ModelParams::default();
    let s = GridSpec::square(8, 1.0).unwrap();
    let mut uniform = 0.0f64;
    for (phi, psi) in [(1.0, p.psi_in), (-1.0, p.psi_out)] {
        let st = State::from_phase_and_concentration(
            Field::constant(s, phi),
            Field::constant(s, psi),
            &p,
        )
        .unwrap();
        let ctx = StepContext::new(st.clone(), 1e-4, 0.0, p).unwrap();
        uniform = uniform.max(residual_norm(&st, &assemble_source(&ctx), &ctx));
    }

    let p = ModelParams {
        epsilon: 0.04,
        ..ModelParams::default()
    };
    let s = GridSpec::square(32, 1.0).unwrap();
    let w = std::f64::consts::SQRT_2 * p.epsilon;
    let phi = Field::from_fn(s, |x, y| ((0.3 - (x - 0.5).hypot(y - 0.5)) / w).tanh());
    let psi = phi.map_interior(|v| 0.55 - 0.25 * v);
    let st = State::from_phase_and_concentration(phi, psi, &p).unwrap();
    let h = Hierarchy::new(s, None).unwrap();
    let ctxs = build_contexts(&st, 1e-5, 1.0, &p, &h).unwrap();
    let src = apply_n(&st, &ctxs[0]);
    let mut out = st.clone();
    fas_vcycle(&mut out, &src, &ctxs, &MgParams::default(), 0).unwrap();
    let vcycle = (0..5)
        .map(|k| {
            out.fields[k].sub(&st.fields[k]).max_abs_interior()
                / st.fields[k].max_abs_interior().max(1.0)
        })
        .fold(0.0, f64::max);

    let fields = common::small_spec(12).prop_flat_map(|s| common::field(s, -1e3, 1e3));
    let transfer = runner(1000).run(&fields, |c| {
        let s = *c.spec();
        let fine = GridSpec::new(2 * s.m(), 2 * s.n(), s.h() / 2.0).unwrap();
        prop_assert_eq!(
            restrict(&prolong(&c, &fine).unwrap()).unwrap().interior(),
            c.interior()
        );
        Ok(())
    });

    let detail = format!(
        "uniform residual {uniform:.1e}, V-cycle change {vcycle:.1e}, restrict∘prolong {}",
        if transfer.is_ok() {
            "exact on 1000 fields"
        } else {
            "inexact"
        }
    );
    if uniform <= 1e-12 && vcycle <= 1e-12 && transfer.is_ok() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn common_tangents() -> Check {
    let draws = 10_000;
    let equal = (common::params(), 1e3..1e6f64).prop_map(|(p, g)| ModelParams {
        gamma_in: g,
        gamma_out: g,
        ..p
    });
    runner(draws)
        .run(&equal, |p| {
            let t = common_tangent(&p).unwrap();
            prop_assert_eq!((t.psi_in, t.psi_out, t.slope), (p.psi_in, p.psi_out, 0.0));
            Ok(())
        })
        .map_err(|e| format!("equal curvature: {e}"))?;

    let general =
        (common::params(), -50.0..50.0f64, -50.0..50.0f64).prop_map(|(p, beta_in, beta_out)| {
            ModelParams {
                beta_in,
                beta_out,
                ..p
            }
        });
    let worst = Cell::new(0.0f64);
    let worst_oracle = Cell::new(0.0f64);
    let nested = Cell::new(0usize);
    runner(draws)
        .run(&general, |p| {
            let (inner, outer) = (p.inner_well(), p.outer_well());
            let t = match common_tangent(&p) {
                Ok(t) => t,
                Err(e) => {
                    prop_assert!(common::wells_nested(&inner, &outer), "{e}");
                    nested.set(nested.get() + 1);
                    return Ok(());
                }
            };
            let scale = p.gamma_in.max(p.gamma_out);
            for r in t.residuals(&inner, &outer) {
                prop_assert!(r.abs() < 1e-12 * scale, "residual {r}");
            }
            let (a, b) = common::brute_tangent(&inner, &outer);
            let n = common_tangent_newton(&inner, &outer, (p.psi_in, p.psi_out)).unwrap();
            let d = (t.psi_in - a).abs().max((t.psi_out - b).abs());
            prop_assert!(d < 1e-9, "brute-force oracle differs by {d}");
            prop_assert!(
                (t.psi_in - n.psi_in).abs() < 1e-10 && (t.psi_out - n.psi_out).abs() < 1e-10
            );
            let max_res = t
                .residuals(&inner, &outer)
                .iter()
                .fold(0.0f64, |m, r| m.max(r.abs()))
                / scale;
            worst.set(worst.get().max(max_res));
            worst_oracle.set(worst_oracle.get().max(d));
            Ok(())
        })
        .map_err(|e| format!("general case: {e}"))?;
    Ok(format!(
        "{draws} equal-curvature draws exact; {draws} general draws ({} without a tangent), worst scaled residual {:.1e}, oracle distance {:.1e}",
        nested.get(),
        worst.get(),
        worst_oracle.get()
    ))
}

fn guarded(f: impl FnOnce() -> Check) -> Check {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(p) => Err(format!(
            "panicked: {}",
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default()
        )),
    }
}

const NAMES: [&str; 8] = [
    "multigrid complexity",
    "residual reduction",
    "spatial convergence",
    "smoother oracle",
    "conservation",
    "growth and shrinkage regimes",
    "exact fixed points",
    "common tangent",
];

fn main() -> ExitCode {
    let wanted: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let want = |k: usize| wanted.is_empty() || wanted.contains(&k);
    let start = Instant::now();
    let mut results: BTreeMap<usize, Check> = BTreeMap::new();
    let mut timed = |k: usize, f: &mut dyn FnMut() -> Check| {
        eprintln!(
            "acceptance: checking {k} ({}) at {:.0}s",
            NAMES[k - 1],
            start.elapsed().as_secs_f64()
        );
        results.insert(k, guarded(f));
    };

    if want(1) || want(2) {
        let mut rows = BTreeMap::new();
        let mut err = None;
        for test in [2, 5, 6, 7, 8] {
            match complexity(test) {
                Ok(r) => {
                    rows.insert(test, r);
                }
                Err(e) => err = Some(format!("test {test}: {e}")),
            }
        }
        if want(1) {
            timed(1, &mut || match &err {
                Some(e) => Err(e.clone()),
                None => multigrid_complexity(&rows),
            });
        }
        if want(2) {
            timed(2, &mut || match &err {
                Some(e) => Err(e.clone()),
                None => residual_behaviour(&rows[&6], &rows[&2]),
            });
        }
    }
    if want(3) {
        timed(3, &mut spatial_convergence);
    }
    if want(4) {
        timed(4, &mut smoother_oracle);
    }
    if want(5) || want(6) {
        let runs = (|| -> Result<(Trace, Trace, f64, f64), String> {
            let g = regime_config("fig7")?;
            let s = regime_config("fig11")?;
            Ok((
                trace("fig7", &g)?,
                trace("fig11", &s)?,
                g.model.psi_in,
                s.model.psi_in,
            ))
        })();
        if want(6) {
            timed(6, &mut || match &runs {
                Ok((g, s, tg, ts)) => regimes(g, s, *tg, *ts),
                Err(e) => Err(e.clone()),
            });
        }
        if want(5) {
            timed(5, &mut || match &runs {
                Ok((g, s, _, _)) => conservation(&[g, s]),
                Err(e) => Err(e.clone()),
            });
        }
    }
    if want(7) {
        timed(7, &mut fixed_points);
    }
    if want(8) {
        timed(8, &mut common_tangents);
    }

    let mut failed = false;
    for (k, r) in &results {
        let (tag, detail) = match r {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed = true;
                ("FAIL", d)
            }
        };
        println!("{tag} [{k}] {}: {detail}", NAMES[k - 1]);
    }
    eprintln!(
        "acceptance: finished in {:.0}s",
        start.elapsed().as_secs_f64()
    );
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
