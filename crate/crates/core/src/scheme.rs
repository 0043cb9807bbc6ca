//! Discretization of the truncated coupled problem at level `n`: face
//! viscosities as functions of `k`, and the cell dissipation density that
//! feeds the `k` equation.

use serde::{Deserialize, Serialize};

use crate::coeffs::{truncate, Coef, TruncationLevel, ViscosityModel};
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::linsolve::DiffusionOperator;

/// How a `k`-dependent coefficient is carried to a face.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceRule {
    /// Mean of the neighbouring cell coefficients; boundary faces take the
    /// interior cell's coefficient.
    Arithmetic,
    /// Exact mean of the coefficient over the linear interpolant of `k`
    /// between the neighbouring values (boundary value 0). The resulting
    /// flux is a difference of Kirchhoff-transformed values.
    #[default]
    IntervalMean,
}

#[derive(Clone, Copy, Debug)]
pub struct Scheme<'a> {
    pub model: &'a ViscosityModel,
    pub n: TruncationLevel,
    pub rule: FaceRule,
}

impl<'a> Scheme<'a> {
    pub fn new(model: &'a ViscosityModel, n: TruncationLevel, rule: FaceRule) -> Self {
        Self { model, n, rule }
    }

    /// `ν_n(k)` on faces, in [`Grid::faces`] order.
    pub fn nu_faces(&self, k: &ScalarField) -> Result<Vec<f64>> {
        self.faces_of(Coef::Nu, k)
    }

    /// `a_n(k) = T_n(a(k))` on faces.
    pub fn a_faces(&self, k: &ScalarField) -> Result<Vec<f64>> {
        self.faces_of(Coef::A, k)
    }

    fn faces_of(&self, which: Coef, k: &ScalarField) -> Result<Vec<f64>> {
        let kv = k.values();
        if let Some(pos) = kv.iter().position(|&x| !(x >= 0.0)) {
            return Err(Error::Domain {
                what: "k must be non-negative",
                value: kv[pos],
            });
        }
        let cell = |s: f64| -> f64 {
            let c = match which {
                Coef::Nu => self.model.nu(s),
                Coef::A => self.model.a(s),
            };
            truncate(c.expect("k checked non-negative"), self.n)
        };
        k.grid()
            .faces()
            .iter()
            .map(|f| match self.rule {
                FaceRule::Arithmetic => Ok(match (f.minus, f.plus) {
                    (Some(a), Some(b)) => 0.5 * (cell(kv[a]) + cell(kv[b])),
                    (Some(a), None) | (None, Some(a)) => cell(kv[a]),
                    (None, None) => unreachable!(),
                }),
                FaceRule::IntervalMean => {
                    let lo = f.minus.map_or(0.0, |c| kv[c]);
                    let hi = f.plus.map_or(0.0, |c| kv[c]);
                    self.model.interval_mean(which, lo, hi, self.n)
                }
            })
            .collect()
    }

    /// Operator of the `u` equation, `−div(ν_n(k)∇·)`.
    pub fn u_operator(&self, k: &ScalarField) -> Result<DiffusionOperator> {
        DiffusionOperator::from_face_coefficients(*k.grid(), self.nu_faces(k)?)
    }

    /// Operator of the `k` equation, `−div(a_n(k)∇·)`.
    pub fn k_operator(&self, k: &ScalarField) -> Result<DiffusionOperator> {
        DiffusionOperator::from_face_coefficients(*k.grid(), self.a_faces(k)?)
    }

    /// `T_n(ν_n(k)|∇u|²)` as a cell density, with the viscosity frozen at `k`.
    pub fn source(&self, u: &ScalarField, k: &ScalarField) -> Result<ScalarField> {
        let d = dissipation_density(&self.nu_faces(k)?, u);
        Ok(d.map(|v| truncate(v, self.n)))
    }
}

/// Cell density of `c|∇u|²`: each face hands half of its energy
/// `c_f (∂_f u)² · dual volume` to each adjacent cell, divided by the cell area.
///
/// With this split, `u·(A_c u) − ½ A_c(u²)` equals the density times the cell
/// area exactly, so `c|∇u|² = −div(c∇u)·u + div(c u ∇u)` holds cell by cell.
pub fn dissipation_density(face_coeffs: &[f64], u: &ScalarField) -> ScalarField {
    let grid = *u.grid();
    let faces = grid.faces();
    debug_assert_eq!(faces.len(), face_coeffs.len());
    let mut d = vec![0.0; grid.num_cells()];
    let area = grid.cell_area();
    for (f, &c) in faces.iter().zip(face_coeffs) {
        let g = f.diff(u.values(), 0.0);
        let half = 0.5 * c * g * g * f.measure() / area;
        for cell in [f.minus, f.plus].into_iter().flatten() {
            d[cell] += half;
        }
    }
    ScalarField::new(grid, d).expect("finite")
}

/// `Σ_f c_f (∂_f v)² · dual volume`, equal to `⟨A_c v, v⟩`.
pub fn face_energy(face_coeffs: &[f64], v: &ScalarField) -> f64 {
    v.grid()
        .faces()
        .iter()
        .zip(face_coeffs)
        .map(|(f, &c)| {
            let g = f.diff(v.values(), 0.0);
            c * g * g * f.measure()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner, Grid};

    fn level(n: u64) -> TruncationLevel {
        TruncationLevel::new(n).unwrap()
    }

    fn bump(g: Grid) -> ScalarField {
        ScalarField::from_fn(g, |x, y| x * (1.0 - x) * y * (1.0 - y) * (1.0 + x))
    }

    #[test]
    fn product_rule_is_exact() {
        let g = Grid::new(11, 8, 1.0, 0.8).unwrap();
        let m = ViscosityModel::physical_sqrt(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let k = bump(g).scaled(3.0);
        let u = ScalarField::from_fn(g, |x, y| (3.0 * x).sin() * y - 0.2);
        for rule in [FaceRule::Arithmetic, FaceRule::IntervalMean] {
            let s = Scheme::new(&m, level(100), rule);
            let faces = s.nu_faces(&k).unwrap();
            let op = s.u_operator(&k).unwrap();
            let d = dissipation_density(&faces, &u);
            let au = op.apply(&u);
            let au2 = op.apply(&u.map(|v| v * v));
            for i in 0..g.num_cells() {
                let lhs = d.values()[i] * g.cell_area();
                let rhs = u.values()[i] * au.values()[i] - 0.5 * au2.values()[i];
                assert!(
                    (lhs - rhs).abs() < 1e-13 * (1.0 + lhs.abs()),
                    "{lhs} vs {rhs}"
                );
            }
            let e = face_energy(&faces, &u);
            assert!((e - inner(&au, &u).unwrap() / g.cell_area()).abs() < 1e-12 * e);
        }
    }

    #[test]
    fn interval_mean_flux_is_a_kirchhoff_difference() {
        let g = Grid::unit_square(9).unwrap();
        let m = ViscosityModel::physical_sqrt(1.0, 2.0, 1.5, 0.7, 1.0).unwrap();
        let n = level(1000);
        let k = bump(g).scaled(40.0);
        let s = Scheme::new(&m, n, FaceRule::IntervalMean);
        let ak = s.k_operator(&k).unwrap().apply(&k);
        let big_k = k.map(|v| m.kirchhoff_n(v, n).unwrap());
        let one = ScalarField::constant(g, 1.0);
        let lk = crate::linsolve::assemble(&one).unwrap().apply(&big_k);
        assert!(ak.max_abs_diff(&lk).unwrap() < 1e-12);
    }

    #[test]
    fn constant_model_has_constant_faces() {
        let g = Grid::unit_square(5).unwrap();
        let m = ViscosityModel::constant(2.0, 3.0, 1.0).unwrap();
        let k = bump(g);
        for rule in [FaceRule::Arithmetic, FaceRule::IntervalMean] {
            let s = Scheme::new(&m, level(10), rule);
            assert!(s
                .nu_faces(&k)
                .unwrap()
                .iter()
                .all(|&c| (c - 2.0).abs() < 1e-14));
            assert!(s
                .a_faces(&k)
                .unwrap()
                .iter()
                .all(|&c| (c - 3.0).abs() < 1e-14));
            // truncation below the constants caps both
            let s = Scheme::new(&m, level(1), rule);
            assert!(s.a_faces(&k).unwrap().iter().all(|&c| c == 1.0));
        }
    }

    #[test]
    fn negative_k_is_rejected() {
        let g = Grid::unit_square(3).unwrap();
        let m = ViscosityModel::constant(1.0, 1.0, 1.0).unwrap();
        let s = Scheme::new(&m, level(4), FaceRule::default());
        let k = ScalarField::constant(g, -1.0);
        assert!(s.nu_faces(&k).is_err());
    }
}
