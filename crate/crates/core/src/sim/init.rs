//! Initial phase and concentration fields.

use std::f64::consts::SQRT_2;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::grid::{self, Field, GridSpec};
use crate::sim::presmooth::{presmooth_indicator, DEFAULT_PRESMOOTH_STEPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    /// `tanh((R - sqrt(ax (x-cx)^2 + ay (y-cy)^2)) / (√2 ε))`.
    TanhEllipse,
    /// Boundary radius `R + a cos(kθ)` about the center.
    StarShape,
    /// Constant phase everywhere.
    Uniform,
    /// Phase read from a snapshot file.
    CustomField,
}

impl InitKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitKind::TanhEllipse => "ellipse",
            InitKind::StarShape => "star",
            InitKind::Uniform => "uniform",
            InitKind::CustomField => "file",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ellipse" => InitKind::TanhEllipse,
            "star" => InitKind::StarShape,
            "uniform" => InitKind::Uniform,
            "file" => InitKind::CustomField,
            _ => return None,
        })
    }
}

/// How a shape is turned into a diffuse phase field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Closed-form tanh of the signed radial gap `r(θ) - ρ`.
    Tanh,
    /// tanh of the exact signed Euclidean distance to the boundary curve.
    Distance,
    /// A sharp ±1 indicator relaxed by classical Cahn-Hilliard steps.
    Presmooth,
}

impl Profile {
    pub fn as_str(&self) -> &'static str {
        match self {
            Profile::Tanh => "tanh",
            Profile::Distance => "distance",
            Profile::Presmooth => "presmooth",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Profile::Tanh),
            "distance" => Some(Profile::Distance),
            "presmooth" => Some(Profile::Presmooth),
            _ => None,
        }
    }
}

/// Shape and concentration map of the initial data. The concentration is
/// always `psi_slope * φ + psi_offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub kind: InitKind,
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
    pub axis_x: f64,
    pub axis_y: f64,
    pub amplitude: f64,
    pub modes: u32,
    pub profile: Profile,
    pub presmooth_steps: usize,
    pub phi_value: f64,
    pub file: Option<PathBuf>,
    pub psi_slope: f64,
    pub psi_offset: f64,
}

impl Default for InitialCondition {
    /// The wrinkled growth shape `r = 0.18 + 0.03 cos(10θ)` with inner
    /// concentration 0.1 and outer 0.8.
    fn default() -> Self {
        Self {
            kind: InitKind::StarShape,
            center_x: 0.5,
            center_y: 0.5,
            radius: 0.18,
            axis_x: 0.75,
            axis_y: 1.0,
            amplitude: 0.03,
            modes: 10,
            profile: Profile::Distance,
            presmooth_steps: DEFAULT_PRESMOOTH_STEPS,
            phi_value: 1.0,
            file: None,
            psi_slope: -0.35,
            psi_offset: 0.45,
        }
    }
}

impl InitialCondition {
    /// The tilted ellipse used for the solver and convergence studies.
    pub fn ellipse() -> Self {
        Self {
            kind: InitKind::TanhEllipse,
            radius: 0.18,
            profile: Profile::Tanh,
            amplitude: 0.0,
            psi_slope: -0.1,
            psi_offset: 0.7,
            ..Self::default()
        }
    }

    pub fn star(radius: f64, amplitude: f64, modes: u32) -> Self {
        Self {
            kind: InitKind::StarShape,
            radius,
            amplitude,
            modes,
            ..Self::default()
        }
    }

    pub fn uniform(phi: f64, psi: f64) -> Self {
        Self {
            kind: InitKind::Uniform,
            phi_value: phi,
            psi_slope: 0.0,
            psi_offset: psi,
            ..Self::default()
        }
    }

    pub fn with_psi_map(mut self, slope: f64, offset: f64) -> Self {
        self.psi_slope = slope;
        self.psi_offset = offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("init.center_x", self.center_x),
            ("init.center_y", self.center_y),
            ("init.radius", self.radius),
            ("init.axis_x", self.axis_x),
            ("init.axis_y", self.axis_y),
            ("init.amplitude", self.amplitude),
            ("init.phi_value", self.phi_value),
            ("init.psi_slope", self.psi_slope),
            ("init.psi_offset", self.psi_offset),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {v}")));
            }
        }
        match self.kind {
            InitKind::TanhEllipse => {
                if self.radius <= 0.0 {
                    return Err(Error::param("init.radius", "must be positive"));
                }
                if self.axis_x <= 0.0 || self.axis_y <= 0.0 {
                    return Err(Error::param("init.axis_x", "axis weights must be positive"));
                }
            }
            InitKind::StarShape => {
                if self.radius <= 0.0 {
                    return Err(Error::param("init.radius", "must be positive"));
                }
                if self.amplitude.abs() >= self.radius {
                    return Err(Error::param(
                        "init.amplitude",
                        "must be smaller than init.radius in magnitude",
                    ));
                }
            }
            InitKind::Uniform => {
                if self.phi_value.abs() > 1.0 {
                    return Err(Error::param("init.phi_value", "must lie in [-1, 1]"));
                }
            }
            InitKind::CustomField => {
                if self.file.is_none() {
                    return Err(Error::param("init.file", "required when init.kind = file"));
                }
            }
        }
        Ok(())
    }

    /// Closed boundary curve sampled at `samples` points.
    fn boundary_polyline(&self, samples: usize) -> Vec<(f64, f64)> {
        (0..samples)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
                let (c, s) = (theta.cos(), theta.sin());
                let r = match self.kind {
                    InitKind::TanhEllipse => {
                        self.radius / (self.axis_x * c * c + self.axis_y * s * s).sqrt()
                    }
                    InitKind::StarShape => {
                        self.radius + self.amplitude * (self.modes as f64 * theta).cos()
                    }
                    InitKind::Uniform | InitKind::CustomField => unreachable!(),
                };
                (self.center_x + r * c, self.center_y + r * s)
            })
            .collect()
    }

    /// Signed distance-like quantity, positive inside the shape.
    fn level(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.center_x, y - self.center_y);
        match self.kind {
            InitKind::TanhEllipse => {
                self.radius - (self.axis_x * dx * dx + self.axis_y * dy * dy).sqrt()
            }
            InitKind::StarShape => {
                let rho = dx.hypot(dy);
                let theta = dy.atan2(dx);
                self.radius + self.amplitude * (self.modes as f64 * theta).cos() - rho
            }
            InitKind::Uniform | InitKind::CustomField => unreachable!(),
        }
    }
}

const BOUNDARY_SAMPLES: usize = 4096;

fn distance_to_polyline(curve: &[(f64, f64)], x: f64, y: f64) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0..curve.len() {
        let (ax, ay) = curve[k];
        let (bx, by) = curve[(k + 1) % curve.len()];
        let (ex, ey) = (bx - ax, by - ay);
        let len2 = ex * ex + ey * ey;
        let t = if len2 > 0.0 {
            (((x - ax) * ex + (y - ay) * ey) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (dx, dy) = (x - ax - t * ex, y - ay - t * ey);
        best = best.min(dx * dx + dy * dy);
    }
    best.sqrt()
}

/// `(φ⁰, ψ⁰)` on `spec` for interface width `epsilon`.
pub fn init_tanh_profile(
    spec: GridSpec,
    ic: &InitialCondition,
    epsilon: f64,
) -> Result<(Field, Field)> {
    ic.validate()?;
    let phi = match ic.kind {
        InitKind::Uniform => Field::constant(spec, ic.phi_value),
        InitKind::CustomField => {
            let path = ic.file.as_ref().expect("validated");
            let file = File::open(path)
                .map_err(|e| Error::Snapshot(format!("cannot open {}: {e}", path.display())))?;
            let phi = grid::read_snapshot(BufReader::new(file))?;
            spec.check_same(phi.spec())?;
            phi
        }
        InitKind::TanhEllipse | InitKind::StarShape => match ic.profile {
            Profile::Tanh => {
                let w = SQRT_2 * epsilon;
                Field::from_fn(spec, |x, y| (ic.level(x, y) / w).tanh())
            }
            Profile::Distance => {
                let w = SQRT_2 * epsilon;
                let curve = ic.boundary_polyline(BOUNDARY_SAMPLES);
                Field::from_fn(spec, |x, y| {
                    let d = distance_to_polyline(&curve, x, y);
                    let sign = if ic.level(x, y) >= 0.0 { 1.0 } else { -1.0 };
                    (sign * d / w).tanh()
                })
            }
            Profile::Presmooth => {
                let indicator =
                    Field::from_fn(spec, |x, y| if ic.level(x, y) >= 0.0 { 1.0 } else { -1.0 });
                presmooth_indicator(&indicator, epsilon, ic.presmooth_steps)
            }
        },
    };
    let psi = phi.map_interior(|p| ic.psi_slope * p + ic.psi_offset);
    Ok((phi, psi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_center_value() {
        let spec = GridSpec::square(64, 1.0).unwrap();
        let eps = 0.02;
        let (phi, psi) = init_tanh_profile(spec, &InitialCondition::ellipse(), eps).unwrap();
        // Cell (32, 32) has center (0.4921875, 0.4921875).
        let d = (0.75f64 * 0.0078125 * 0.0078125 + 0.0078125 * 0.0078125).sqrt();
        let expected = ((0.18 - d) / (SQRT_2 * eps)).tanh();
        assert!((phi[(32, 32)] - expected).abs() < 1e-15);
        assert!((psi[(32, 32)] - (-0.1 * expected + 0.7)).abs() < 1e-15);
        assert!(phi.max_abs_interior() <= 1.0);
    }

    #[test]
    fn psi_map_endpoints() {
        let spec = GridSpec::square(4, 1.0).unwrap();
        let (_, psi) = init_tanh_profile(
            spec,
            &InitialCondition::uniform(1.0, 0.0).with_psi_map(-0.1, 0.7),
            0.1,
        )
        .unwrap();
        assert!((psi[(1, 1)] - 0.6).abs() < 1e-15);
        let (_, psi) = init_tanh_profile(
            spec,
            &InitialCondition::uniform(-1.0, 0.0).with_psi_map(-0.35, 0.45),
            0.1,
        )
        .unwrap();
        assert!((psi[(1, 1)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn star_is_inside_near_center() {
        let spec = GridSpec::square(64, 1.0).unwrap();
        let (phi, _) = init_tanh_profile(spec, &InitialCondition::default(), 0.01).unwrap();
        assert!(phi[(32, 32)] > 0.999);
        assert!(phi[(1, 1)] < -0.999);
    }

    #[test]
    fn invalid_star_amplitude() {
        let ic = InitialCondition::star(0.1, 0.2, 4);
        assert!(ic.validate().is_err());
    }
}
