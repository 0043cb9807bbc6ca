//! Cell-centered fields on a uniform rectangle `[0, lx] x [0, ly]`.
//!
//! Unknowns live at cell centers. Homogeneous Dirichlet data is imposed at
//! the boundary faces: a boundary face sits half a cell away from the
//! adjacent center and carries the value 0. Every face owns a dual volume
//! (face length times center-to-center distance); these volumes tile the
//! domain exactly, so face quadratures and the assembled operator agree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells per axis, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "edge lengths must be positive, got {lx} x {ly}"
            )));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// `n x n` cells on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    /// |Ω| as the sum of the cell areas.
    pub fn measure(&self) -> f64 {
        self.cell_area() * self.num_cells() as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    pub fn num_x_faces(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn num_y_faces(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    /// All faces, x-faces first (row-major), then y-faces.
    pub fn faces(&self) -> Vec<Face> {
        let (nx, ny) = (self.nx, self.ny);
        let (hx, hy) = (self.hx(), self.hy());
        let mut out = Vec::with_capacity(self.num_x_faces() + self.num_y_faces());
        for j in 0..ny {
            for i in 0..=nx {
                let minus = (i > 0).then(|| self.index(i - 1, j));
                let plus = (i < nx).then(|| self.index(i, j));
                let dist = if i == 0 || i == nx { 0.5 * hx } else { hx };
                out.push(Face {
                    axis: Axis::X,
                    slot: i + (nx + 1) * j,
                    minus,
                    plus,
                    dist,
                    len: hy,
                });
            }
        }
        for j in 0..=ny {
            for i in 0..nx {
                let minus = (j > 0).then(|| self.index(i, j - 1));
                let plus = (j < ny).then(|| self.index(i, j));
                let dist = if j == 0 || j == ny { 0.5 * hy } else { hy };
                out.push(Face {
                    axis: Axis::Y,
                    slot: i + nx * j,
                    minus,
                    plus,
                    dist,
                    len: hx,
                });
            }
        }
        out
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// A cell face. `minus`/`plus` are the adjacent cells in the direction of
/// increasing coordinate; `None` marks the Dirichlet boundary.
#[derive(Clone, Copy, Debug)]
pub struct Face {
    pub axis: Axis,
    /// Position within the x-face or y-face array of a [`FaceVectorField`].
    pub slot: usize,
    pub minus: Option<usize>,
    pub plus: Option<usize>,
    /// Distance between the two points the difference quotient uses.
    pub dist: f64,
    pub len: f64,
}

impl Face {
    /// Dual volume `len * dist`.
    #[inline]
    pub fn measure(&self) -> f64 {
        self.len * self.dist
    }

    pub fn is_boundary(&self) -> bool {
        self.minus.is_none() || self.plus.is_none()
    }

    /// Difference quotient of cell values with boundary value `bc`.
    #[inline]
    pub fn diff(&self, values: &[f64], bc: f64) -> f64 {
        let lo = self.minus.map_or(bc, |c| values[c]);
        let hi = self.plus.map_or(bc, |c| values[c]);
        (hi - lo) / self.dist
    }

    /// Face value of a cell coefficient: arithmetic mean of the neighbours,
    /// or the single interior value on the boundary.
    #[inline]
    pub fn mean(&self, values: &[f64]) -> f64 {
        match (self.minus, self.plus) {
            (Some(a), Some(b)) => 0.5 * (values[a] + values[b]),
            (Some(a), None) | (None, Some(a)) => values[a],
            (None, None) => unreachable!("face without cells"),
        }
    }

    /// Face average of a cell field whose boundary value is `bc`.
    #[inline]
    pub fn average_with(&self, values: &[f64], bc: f64) -> f64 {
        let lo = self.minus.map_or(bc, |c| values[c]);
        let hi = self.plus.map_or(bc, |c| values[c]);
        0.5 * (lo + hi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(Error::LengthMismatch {
                expected: grid.num_cells(),
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.num_cells()],
        }
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.num_cells());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let (x, y) = grid.center(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// max |self - other| over cells.
    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Discrete gradient, one normal derivative per face.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceVectorField {
    grid: Grid,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl FaceVectorField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// x-face values, `(nx+1) * ny`, index `i + (nx+1) j`.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// y-face values, `nx * (ny+1)`, index `i + nx j`.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn at(&self, face: &Face) -> f64 {
        match face.axis {
            Axis::X => self.x[face.slot],
            Axis::Y => self.y[face.slot],
        }
    }

    fn set(&mut self, face: &Face, v: f64) {
        match face.axis {
            Axis::X => self.x[face.slot] = v,
            Axis::Y => self.y[face.slot] = v,
        }
    }
}

/// Face differences with homogeneous Dirichlet data.
pub fn gradient(v: &ScalarField) -> FaceVectorField {
    gradient_with_boundary(v, 0.0)
}

/// Face differences with constant boundary value `bc`.
pub fn gradient_with_boundary(v: &ScalarField, bc: f64) -> FaceVectorField {
    let grid = *v.grid();
    let mut out = FaceVectorField {
        grid,
        x: vec![0.0; grid.num_x_faces()],
        y: vec![0.0; grid.num_y_faces()],
    };
    for face in grid.faces() {
        out.set(&face, face.diff(v.values(), bc));
    }
    out
}

/// Arithmetic-mean face coefficients of a cell field.
pub fn face_coefficients(c: &ScalarField) -> FaceVectorField {
    let grid = *c.grid();
    let mut out = FaceVectorField {
        grid,
        x: vec![0.0; grid.num_x_faces()],
        y: vec![0.0; grid.num_y_faces()],
    };
    for face in grid.faces() {
        out.set(&face, face.mean(c.values()));
    }
    out
}

/// Midpoint rule.
pub fn integrate(v: &ScalarField) -> f64 {
    v.values().iter().sum::<f64>() * v.grid().cell_area()
}

/// `∫ a b` by the midpoint rule.
pub fn inner(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    a.grid.check_same(&b.grid)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x * y)
        .sum::<f64>()
        * a.grid.cell_area())
}

pub fn lp_norm(v: &ScalarField, p: f64) -> Result<f64> {
    if p.is_infinite() && p > 0.0 {
        return Ok(linf_norm(v));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let s: f64 = v.values().iter().map(|x| x.abs().powf(p)).sum();
    Ok((s * v.grid().cell_area()).powf(1.0 / p))
}

pub fn linf_norm(v: &ScalarField) -> f64 {
    v.values().iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

/// `(Σ_faces |g|^p · dual volume)^{1/p}`.
pub fn face_lp_norm(g: &FaceVectorField, p: f64) -> Result<f64> {
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::InvalidExponent(p));
    }
    let s: f64 = g
        .grid()
        .faces()
        .iter()
        .map(|f| g.at(f).abs().powf(p) * f.measure())
        .sum();
    Ok(s.powf(1.0 / p))
}

/// `∫ c |∇v|²` as a sum over faces; the discrete `[v]²` seminorm weighted by `c`.
pub fn weighted_energy(c: &ScalarField, v: &ScalarField) -> Result<f64> {
    c.grid.check_same(&v.grid)?;
    check_positive(c)?;
    let mut e = 0.0;
    for face in c.grid.faces() {
        let d = face.diff(v.values(), 0.0);
        e += face.mean(c.values()) * d * d * face.measure();
    }
    Ok(e)
}

pub(crate) fn check_positive(c: &ScalarField) -> Result<()> {
    match c.values().iter().position(|&x| !(x > 0.0)) {
        Some(cell) => Err(Error::NonPositiveCoefficient {
            cell,
            value: c.values()[cell],
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn make_grid_examples() {
        let g = Grid::new(2, 2, 1.0, 1.0).unwrap();
        assert_eq!(g.num_cells(), 4);
        assert_eq!(g.hx(), 0.5);
        assert_eq!(g.hy(), 0.5);

        let g = Grid::new(10, 5, 2.0, 1.0).unwrap();
        assert!((g.hx() - 0.2).abs() < 1e-15);
        assert!((g.hy() - 0.2).abs() < 1e-15);

        assert!(Grid::new(1, 2, 1.0, 1.0).is_err());
        assert!(Grid::new(2, 2, 0.0, 1.0).is_err());
        assert!(Grid::new(2, 2, 1.0, -1.0).is_err());
    }

    #[test]
    fn measure_is_sum_of_cells() {
        let g = Grid::new(7, 13, 0.3, 2.9).unwrap();
        let one = ScalarField::constant(g, 1.0);
        assert!((integrate(&one) - 0.3 * 2.9).abs() < 1e-14);
        let dual: f64 = g.faces().iter().map(|f| f.measure()).sum();
        // x-faces and y-faces each tile the domain once
        assert!((dual - 2.0 * g.measure()).abs() < 1e-13);
    }

    #[test]
    fn field_rejects_bad_values() {
        let g = Grid::unit_square(2).unwrap();
        assert!(ScalarField::new(g, vec![0.0; 3]).is_err());
        assert!(matches!(
            ScalarField::new(g, vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(Error::NonFinite(1))
        ));
    }

    #[test]
    fn gradient_of_constant() {
        let g = Grid::unit_square(4).unwrap();
        let c = 3.0;
        let grad = gradient(&ScalarField::constant(g, c));
        let h = g.hx();
        for f in g.faces() {
            let d = grad.at(&f);
            match (f.minus, f.plus) {
                (Some(_), Some(_)) => assert_eq!(d, 0.0),
                (None, _) => assert!((d - 2.0 * c / h).abs() < 1e-12),
                (_, None) => assert!((d + 2.0 * c / h).abs() < 1e-12),
            }
        }
    }

    #[test]
    fn gradient_of_linear_field_is_exact_inside() {
        let g = Grid::unit_square(8).unwrap();
        let grad = gradient(&ScalarField::from_fn(g, |x, _| x));
        for f in g.faces().iter().filter(|f| !f.is_boundary()) {
            let expected = if f.axis == Axis::X { 1.0 } else { 0.0 };
            assert!((grad.at(f) - expected).abs() < 1e-12);
        }
        let zero = gradient(&ScalarField::zeros(g));
        assert!(zero.x().iter().chain(zero.y()).all(|&v| v == 0.0));
    }

    #[test]
    fn integrate_examples() {
        let g = Grid::unit_square(3).unwrap();
        assert!((integrate(&ScalarField::constant(g, 1.0)) - 1.0).abs() < 1e-14);
        let g = Grid::new(4, 2, 2.0, 1.0).unwrap();
        assert!((integrate(&ScalarField::constant(g, 3.0)) - 6.0).abs() < 1e-14);
        let g = Grid::unit_square(64).unwrap();
        let s = ScalarField::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
        assert!((integrate(&s) - 4.0 / (PI * PI)).abs() < 1e-3);
    }

    #[test]
    fn norm_examples() {
        let g = Grid::unit_square(5).unwrap();
        assert!((lp_norm(&ScalarField::constant(g, 2.0), 2.0).unwrap() - 2.0).abs() < 1e-14);
        let g2 = Grid::unit_square(2).unwrap();
        let v = ScalarField::new(g2, vec![1.0, -3.0, 2.0, 0.0]).unwrap();
        assert_eq!(linf_norm(&v), 3.0);
        assert_eq!(lp_norm(&v, f64::INFINITY).unwrap(), 3.0);
        let g = Grid::unit_square(200).unwrap();
        let s = ScalarField::from_fn(g, |x, _| (PI * x).sin());
        assert!((lp_norm(&s, 1.0).unwrap() - 2.0 / PI).abs() < 1e-3);
        assert!(matches!(lp_norm(&s, 0.5), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn weighted_energy_examples() {
        let g = Grid::unit_square(128).unwrap();
        let v = ScalarField::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
        let one = ScalarField::constant(g, 1.0);
        let e1 = weighted_energy(&one, &v).unwrap();
        assert!((e1 - PI * PI / 2.0).abs() < 1e-2, "{e1}");
        let e2 = weighted_energy(&ScalarField::constant(g, 2.0), &v).unwrap();
        assert_eq!(e2, 2.0 * e1);
        assert_eq!(weighted_energy(&one, &ScalarField::zeros(g)).unwrap(), 0.0);
        assert!(weighted_energy(&ScalarField::zeros(g), &v).is_err());
    }

    #[test]
    fn second_order_refinement() {
        let exact_int = 4.0 / (PI * PI);
        let exact_energy = PI * PI / 2.0;
        let errs: Vec<(f64, f64)> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let g = Grid::unit_square(n).unwrap();
                let v = ScalarField::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
                let e = weighted_energy(&ScalarField::constant(g, 1.0), &v).unwrap();
                ((integrate(&v) - exact_int).abs(), (e - exact_energy).abs())
            })
            .collect();
        for w in errs.windows(2) {
            assert!(w[0].0 / w[1].0 >= 3.5, "{errs:?}");
            assert!(w[0].1 / w[1].1 >= 3.5, "{errs:?}");
        }
    }

    #[test]
    fn coercivity_floor() {
        let g = Grid::unit_square(9).unwrap();
        let v = ScalarField::from_fn(g, |x, y| x * (1.0 - y) + (3.0 * x * y).sin());
        let c = ScalarField::from_fn(g, |x, y| 0.3 + x * y);
        let lo = weighted_energy(&c, &v).unwrap();
        let base = weighted_energy(&ScalarField::constant(g, 1.0), &v).unwrap();
        assert!(lo >= 0.3 * base);
    }
}
