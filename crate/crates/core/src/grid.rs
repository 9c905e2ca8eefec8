//! Cell-centered grid functions with a single ghost layer, and the discrete
//! operators built on them.
//!
//! Index convention: cell `(i, j)` has center `((i - 1/2) h, (j - 1/2) h)`.
//! Interior cells are `i = 1..=m`, `j = 1..=n`; `i = 0`, `i = m + 1`,
//! `j = 0` and `j = n + 1` are ghosts. East-west edge `(i + 1/2, j)` is
//! stored under `i = 0..=m`, north-south edge `(i, j + 1/2)` under `j = 0..=n`.
//!
//! Operators never refresh ghosts on their own; call
//! [`Field::apply_neumann_bc`] after writing interior values.

use std::io::{BufRead, Write};
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// `3√2/4`, the normalisation that makes the diffuse surface energy of a
/// tanh profile equal its arclength.
pub const SURFACE_PREFACTOR: f64 = 1.060_660_171_779_821_2;

/// Uniform cell-centered grid on `(0, m h) x (0, n h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    m: usize,
    n: usize,
    h: f64,
}

impl GridSpec {
    pub fn new(m: usize, n: usize, h: f64) -> Result<Self> {
        if m < 1 || n < 1 {
            return Err(Error::InvalidGrid(format!(
                "cell counts must be positive, got {m}x{n}"
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {h}"
            )));
        }
        Ok(Self { m, n, h })
    }

    /// Builds a grid from cell counts and domain extents. `ly` must equal
    /// `n * lx / m` up to rounding.
    pub fn from_extent(m: usize, n: usize, lx: f64, ly: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidGrid("m must be positive".into()));
        }
        let h = lx / m as f64;
        let spec = Self::new(m, n, h)?;
        let ly_expected = spec.ly();
        if (ly - ly_expected).abs() > 4.0 * f64::EPSILON * ly_expected.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "extents are not commensurate: Lx/m = {h}, but Ly/n = {}",
                ly / n as f64
            )));
        }
        Ok(spec)
    }

    /// `m x m` cells on `(0, l)^2`.
    pub fn square(m: usize, l: f64) -> Result<Self> {
        Self::from_extent(m, m, l, l)
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lx(&self) -> f64 {
        self.m as f64 * self.h
    }

    pub fn ly(&self) -> f64 {
        self.n as f64 * self.h
    }

    pub fn cells(&self) -> usize {
        self.m * self.n
    }

    /// Center x-coordinate of column `i` (ghost columns included).
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - 0.5) * self.h
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - 0.5) * self.h
    }

    /// The next coarser grid (half the cells, twice the spacing), if both
    /// counts are even.
    pub fn coarsen(&self) -> Option<GridSpec> {
        if self.m.is_multiple_of(2) && self.n.is_multiple_of(2) && self.m >= 2 && self.n >= 2 {
            Some(GridSpec {
                m: self.m / 2,
                n: self.n / 2,
                h: 2.0 * self.h,
            })
        } else {
            None
        }
    }

    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.m == other.m && self.n == other.n
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected_m: self.m,
                expected_n: self.n,
                got_m: other.m,
                got_n: other.n,
            })
        }
    }
}

/// Cell-centered grid function including the ghost layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    spec: GridSpec,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    /// Every cell, ghosts included, set to `value`.
    pub fn constant(spec: GridSpec, value: f64) -> Self {
        Self {
            spec,
            data: vec![value; (spec.m + 2) * (spec.n + 2)],
        }
    }

    /// Interior values from `f(x_i, y_j)`, ghosts mirrored.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(spec);
        for i in 1..=spec.m {
            for j in 1..=spec.n {
                out[(i, j)] = f(spec.x(i), spec.y(j));
            }
        }
        out.apply_neumann_bc();
        out
    }

    /// Interior values from `f(i, j)` with 1-based indices, ghosts mirrored.
    pub fn from_index_fn(spec: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(spec);
        for i in 1..=spec.m {
            for j in 1..=spec.n {
                out[(i, j)] = f(i, j);
            }
        }
        out.apply_neumann_bc();
        out
    }

    /// Builds a field from interior values laid out with `j` fastest
    /// (`values[(i - 1) * n + (j - 1)]`).
    pub fn from_interior(spec: GridSpec, values: &[f64]) -> Result<Self> {
        if values.len() != spec.cells() {
            return Err(Error::InvalidGrid(format!(
                "expected {} interior values, got {}",
                spec.cells(),
                values.len()
            )));
        }
        Ok(Self::from_index_fn(spec, |i, j| {
            values[(i - 1) * spec.n + (j - 1)]
        }))
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub(crate) fn stride(&self) -> usize {
        self.spec.n + 2
    }

    #[inline]
    pub(crate) fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.spec.n + 2) + j
    }

    /// Raw storage including ghosts, `i`-major.
    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Interior values with `j` fastest.
    pub fn interior(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.spec.cells());
        for i in 1..=self.spec.m {
            let row = self.idx(i, 1);
            out.extend_from_slice(&self.data[row..row + self.spec.n]);
        }
        out
    }

    /// Visits every interior cell with its 1-based index.
    pub fn for_each_interior(&self, mut f: impl FnMut(usize, usize, f64)) {
        for i in 1..=self.spec.m {
            for j in 1..=self.spec.n {
                f(i, j, self[(i, j)]);
            }
        }
    }

    pub fn map_interior(&self, mut f: impl FnMut(f64) -> f64) -> Field {
        let mut out = Field::zeros(self.spec);
        for i in 1..=self.spec.m {
            for j in 1..=self.spec.n {
                out[(i, j)] = f(self[(i, j)]);
            }
        }
        out.apply_neumann_bc();
        out
    }

    /// Mirrors interior cells into the ghost layer: x-faces for `j = 1..=n`
    /// first, then y-faces for `i = 0..=m+1`, which fills the corners with
    /// the diagonal interior neighbour.
    pub fn apply_neumann_bc(&mut self) {
        let (m, n) = (self.spec.m, self.spec.n);
        let s = self.stride();
        for j in 1..=n {
            self.data[j] = self.data[s + j];
            self.data[(m + 1) * s + j] = self.data[m * s + j];
        }
        for i in 0..=m + 1 {
            let row = i * s;
            self.data[row] = self.data[row + 1];
            self.data[row + n + 1] = self.data[row + n];
        }
    }

    pub fn with_neumann_bc(mut self) -> Self {
        self.apply_neumann_bc();
        self
    }

    /// `h^2 * sum` over interior cells.
    pub fn integrate(&self) -> f64 {
        let h = self.spec.h;
        let mut acc = CompensatedSum::default();
        self.for_each_interior(|_, _, v| acc.add(v));
        h * h * acc.value()
    }

    pub fn max_abs_interior(&self) -> f64 {
        let mut out = 0.0_f64;
        self.for_each_interior(|_, _, v| out = out.max(v.abs()));
        out
    }

    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        self.for_each_interior(|_, _, v| ok &= v.is_finite());
        ok
    }

    /// `self += alpha * other` on interior cells; ghosts are left stale.
    pub fn axpy_interior(&mut self, alpha: f64, other: &Field) {
        debug_assert!(self.spec.same_shape(&other.spec));
        for i in 1..=self.spec.m {
            let row = self.idx(i, 1);
            for k in row..row + self.spec.n {
                self.data[k] += alpha * other.data[k];
            }
        }
    }

    /// Interior-wise `self - other`, ghosts mirrored.
    pub fn sub(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.axpy_interior(-1.0, other);
        out.apply_neumann_bc();
        out
    }

    /// The same grid function on the transposed grid (`x <-> y`).
    pub fn transpose(&self) -> Field {
        let spec = GridSpec {
            m: self.spec.n,
            n: self.spec.m,
            h: self.spec.h,
        };
        let mut out = Field::zeros(spec);
        for i in 0..=spec.m + 1 {
            for j in 0..=spec.n + 1 {
                out[(i, j)] = self[(j, i)];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for Field {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * (self.spec.n + 2) + j]
    }
}

impl IndexMut<(usize, usize)> for Field {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        let s = self.spec.n + 2;
        &mut self.data[i * s + j]
    }
}

/// Values on east-west edges `(i + 1/2, j)`, `i = 0..=m`, `j = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFieldEW {
    spec: GridSpec,
    data: Vec<f64>,
}

impl EdgeFieldEW {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            data: vec![0.0; (spec.m + 1) * spec.n],
        }
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        Self {
            spec,
            data: vec![value; (spec.m + 1) * spec.n],
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            spec: self.spec,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise product of two edge fields on the same grid.
    pub fn mul(&self, other: &EdgeFieldEW) -> Self {
        Self {
            spec: self.spec,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }
}

impl Index<(usize, usize)> for EdgeFieldEW {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.spec.n + (j - 1)]
    }
}

impl IndexMut<(usize, usize)> for EdgeFieldEW {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        let n = self.spec.n;
        &mut self.data[i * n + (j - 1)]
    }
}

/// Values on north-south edges `(i, j + 1/2)`, `i = 1..=m`, `j = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFieldNS {
    spec: GridSpec,
    data: Vec<f64>,
}

impl EdgeFieldNS {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            data: vec![0.0; spec.m * (spec.n + 1)],
        }
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        Self {
            spec,
            data: vec![value; spec.m * (spec.n + 1)],
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            spec: self.spec,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn mul(&self, other: &EdgeFieldNS) -> Self {
        Self {
            spec: self.spec,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }
}

impl Index<(usize, usize)> for EdgeFieldNS {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[(i - 1) * (self.spec.n + 1) + j]
    }
}

impl IndexMut<(usize, usize)> for EdgeFieldNS {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        let s = self.spec.n + 1;
        &mut self.data[(i - 1) * s + j]
    }
}

/// `A_x f` on east-west edges.
pub fn center_to_edge_avg_x(f: &Field) -> EdgeFieldEW {
    let spec = *f.spec();
    let mut out = EdgeFieldEW::zeros(spec);
    for i in 0..=spec.m {
        for j in 1..=spec.n {
            out[(i, j)] = 0.5 * (f[(i, j)] + f[(i + 1, j)]);
        }
    }
    out
}

/// `A_y f` on north-south edges.
pub fn center_to_edge_avg_y(f: &Field) -> EdgeFieldNS {
    let spec = *f.spec();
    let mut out = EdgeFieldNS::zeros(spec);
    for i in 1..=spec.m {
        for j in 0..=spec.n {
            out[(i, j)] = 0.5 * (f[(i, j)] + f[(i, j + 1)]);
        }
    }
    out
}

/// `D_x f` on east-west edges.
pub fn center_to_edge_diff_x(f: &Field) -> EdgeFieldEW {
    let spec = *f.spec();
    let inv_h = 1.0 / spec.h;
    let mut out = EdgeFieldEW::zeros(spec);
    for i in 0..=spec.m {
        for j in 1..=spec.n {
            out[(i, j)] = inv_h * (f[(i + 1, j)] - f[(i, j)]);
        }
    }
    out
}

/// `D_y f` on north-south edges.
pub fn center_to_edge_diff_y(f: &Field) -> EdgeFieldNS {
    let spec = *f.spec();
    let inv_h = 1.0 / spec.h;
    let mut out = EdgeFieldNS::zeros(spec);
    for i in 1..=spec.m {
        for j in 0..=spec.n {
            out[(i, j)] = inv_h * (f[(i, j + 1)] - f[(i, j)]);
        }
    }
    out
}

/// `d_x fx + d_y fy` on interior cells. Ghosts of the result are zero.
pub fn edge_to_center_div(fx: &EdgeFieldEW, fy: &EdgeFieldNS) -> Result<Field> {
    fx.spec().check_same(fy.spec())?;
    let spec = *fx.spec();
    let inv_h = 1.0 / spec.h;
    let mut out = Field::zeros(spec);
    for i in 1..=spec.m {
        for j in 1..=spec.n {
            out[(i, j)] =
                inv_h * (fx[(i, j)] - fx[(i - 1, j)]) + inv_h * (fy[(i, j)] - fy[(i, j - 1)]);
        }
    }
    Ok(out)
}

/// Five-point Laplacian on interior cells. Ghosts of the result are zero.
pub fn laplacian(f: &Field) -> Field {
    let spec = *f.spec();
    let mut out = Field::zeros(spec);
    laplacian_into(f, &mut out);
    out
}

pub(crate) fn laplacian_into(f: &Field, out: &mut Field) {
    let spec = *f.spec();
    let inv_h2 = 1.0 / (spec.h * spec.h);
    let s = f.stride();
    let src = f.raw();
    let dst = out.raw_mut();
    for i in 1..=spec.m {
        for j in 1..=spec.n {
            let k = i * s + j;
            dst[k] = inv_h2 * (src[k + s] + src[k - s] + src[k + 1] + src[k - 1] - 4.0 * src[k]);
        }
    }
}

/// Discrete diffuse surface energy `B_h`:
/// `h^2 sum (3√2/4) [ g(φ)/ε + (ε/2)((c_x φ)^2 + (c_y φ)^2) ]`, with the
/// forward differences `c_x`, `c_y` reading the ghost layer at `i = m`,
/// `j = n`.
pub fn surface_quadrature(phi: &Field, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::param(
            "epsilon",
            format!("must be positive, got {epsilon}"),
        ));
    }
    let spec = *phi.spec();
    let inv_h = 1.0 / spec.h;
    let mut acc = CompensatedSum::default();
    for i in 1..=spec.m {
        for j in 1..=spec.n {
            let v = phi[(i, j)];
            let cx = inv_h * (phi[(i + 1, j)] - v);
            let cy = inv_h * (phi[(i, j + 1)] - v);
            let g = 0.25 * (v * v - 1.0) * (v * v - 1.0);
            acc.add(g / epsilon + 0.5 * epsilon * (cx * cx + cy * cy));
        }
    }
    Ok(SURFACE_PREFACTOR * spec.h * spec.h * acc.value())
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Writes the snapshot text format: a `m n h` header line, then one line
/// per grid row `j = 1..=n` holding the interior values `i = 1..=m`.
pub fn write_snapshot<W: Write>(field: &Field, mut out: W) -> Result<()> {
    let spec = field.spec();
    writeln!(out, "{} {} {:.17e}", spec.m(), spec.n(), spec.h())?;
    let mut line = String::new();
    for j in 1..=spec.n() {
        line.clear();
        for i in 1..=spec.m() {
            if i > 1 {
                line.push(' ');
            }
            line.push_str(&format!("{:.17e}", field[(i, j)]));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`]; ghosts are mirrored.
pub fn read_snapshot<R: BufRead>(input: R) -> Result<Field> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Snapshot("empty input".into()))??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::Snapshot(format!("bad header `{header}`")));
    }
    let bad = |what: &str| Error::Snapshot(format!("bad {what} in header `{header}`"));
    let m: usize = parts[0].parse().map_err(|_| bad("m"))?;
    let n: usize = parts[1].parse().map_err(|_| bad("n"))?;
    let h: f64 = parts[2].parse().map_err(|_| bad("h"))?;
    let spec = GridSpec::new(m, n, h)?;
    let mut field = Field::zeros(spec);
    for j in 1..=n {
        let line = lines
            .next()
            .ok_or_else(|| Error::Snapshot(format!("missing row {j}")))??;
        let mut count = 0;
        for (k, tok) in line.split_whitespace().enumerate() {
            if k >= m {
                return Err(Error::Snapshot(format!("row {j} has more than {m} values")));
            }
            field[(k + 1, j)] = tok
                .parse()
                .map_err(|_| Error::Snapshot(format!("row {j}: cannot parse `{tok}`")))?;
            count += 1;
        }
        if count != m {
            return Err(Error::Snapshot(format!(
                "row {j} has {count} values, expected {m}"
            )));
        }
    }
    field.apply_neumann_bc();
    Ok(field)
}
