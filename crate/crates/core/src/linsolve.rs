//! Five-point diffusion operators `−div(c∇·)` with homogeneous Dirichlet
//! rows, and a Jacobi-preconditioned conjugate gradient solve.
//!
//! Rows are in flux (integrated) form: `(Au)_i = Σ_f w_f (u_i − u_nb)` with
//! `w_f = c_f · len_f / dist_f` and boundary neighbour value 0. The matrix is
//! symmetric with non-positive off-diagonals and `⟨Au, u⟩` equals
//! [`weighted_energy`](crate::grid::weighted_energy) exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{check_positive, Face, Grid, ScalarField};

#[derive(Clone, Debug)]
pub struct DiffusionOperator {
    grid: Grid,
    faces: Vec<Face>,
    /// `c_f · len / dist` per face, aligned with `faces`.
    weights: Vec<f64>,
    diag: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearSolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Assembles with arithmetic-mean face coefficients.
pub fn assemble(c: &ScalarField) -> Result<DiffusionOperator> {
    check_positive(c)?;
    let grid = *c.grid();
    let faces = grid.faces();
    let coeffs = faces.iter().map(|f| f.mean(c.values())).collect();
    DiffusionOperator::from_face_coefficients(grid, coeffs)
}

impl DiffusionOperator {
    /// Face coefficients in [`Grid::faces`] order.
    pub fn from_face_coefficients(grid: Grid, coeffs: Vec<f64>) -> Result<Self> {
        let faces = grid.faces();
        if coeffs.len() != faces.len() {
            return Err(Error::LengthMismatch {
                expected: faces.len(),
                got: coeffs.len(),
            });
        }
        let mut diag = vec![0.0; grid.num_cells()];
        let mut weights = Vec::with_capacity(faces.len());
        for (face, &c) in faces.iter().zip(&coeffs) {
            if !(c > 0.0 && c.is_finite()) {
                let cell = face.minus.or(face.plus).unwrap_or(0);
                return Err(Error::NonPositiveCoefficient { cell, value: c });
            }
            let w = c * face.len / face.dist;
            for cell in [face.minus, face.plus].into_iter().flatten() {
                diag[cell] += w;
            }
            weights.push(w);
        }
        Ok(Self {
            grid,
            faces,
            weights,
            diag,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn apply_slice(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (face, &w) in self.faces.iter().zip(&self.weights) {
            let lo = face.minus.map_or(0.0, |c| x[c]);
            let hi = face.plus.map_or(0.0, |c| x[c]);
            let flux = w * (hi - lo);
            if let Some(c) = face.minus {
                out[c] -= flux;
            }
            if let Some(c) = face.plus {
                out[c] += flux;
            }
        }
    }

    pub fn apply(&self, x: &ScalarField) -> ScalarField {
        let mut out = vec![0.0; self.grid.num_cells()];
        self.apply_slice(x.values(), &mut out);
        ScalarField::new(self.grid, out).expect("finite input gives finite output")
    }

    /// Dense copy, for tests on small grids.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.grid.num_cells();
        let mut m = vec![vec![0.0; n]; n];
        for (face, &w) in self.faces.iter().zip(&self.weights) {
            match (face.minus, face.plus) {
                (Some(a), Some(b)) => {
                    m[a][a] += w;
                    m[b][b] += w;
                    m[a][b] -= w;
                    m[b][a] -= w;
                }
                (Some(a), None) | (None, Some(a)) => m[a][a] += w,
                (None, None) => {}
            }
        }
        m
    }
}

/// Integrated load `f_i · |cell_i|` for a source density.
pub fn load_vector(f: &ScalarField) -> ScalarField {
    f.scaled(f.grid().cell_area())
}

pub fn default_max_iterations(grid: &Grid) -> usize {
    10 * grid.num_cells()
}

/// PCG from a zero start. See [`solve_spd_from`].
pub fn solve_spd(
    op: &DiffusionOperator,
    b: &ScalarField,
    tol: f64,
) -> Result<(ScalarField, LinearSolveReport)> {
    solve_spd_from(op, b, tol, None, default_max_iterations(op.grid()))
}

/// Jacobi-preconditioned conjugate gradients.
///
/// Stops when `‖b − Ax‖₂ ≤ tol·‖b‖₂`, or `‖b − Ax‖₂ ≤ tol` when `b = 0`.
pub fn solve_spd_from(
    op: &DiffusionOperator,
    b: &ScalarField,
    tol: f64,
    x0: Option<&ScalarField>,
    max_iter: usize,
) -> Result<(ScalarField, LinearSolveReport)> {
    if *b.grid() != op.grid {
        return Err(Error::GridMismatch);
    }
    if !(tol > 0.0) {
        return Err(Error::Config(format!(
            "linear tolerance must be positive, got {tol}"
        )));
    }
    let n = op.grid.num_cells();
    let bv = b.values();
    let bnorm = norm2(bv);
    let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
    if bnorm == 0.0 {
        let report = LinearSolveReport {
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
        return Ok((ScalarField::zeros(op.grid), report));
    }

    let mut x = match x0 {
        Some(x0) if *x0.grid() == op.grid => x0.values().to_vec(),
        _ => vec![0.0; n],
    };
    let mut ap = vec![0.0; n];
    op.apply_slice(&x, &mut ap);
    let mut r: Vec<f64> = bv.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(&op.diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = norm2(&r) / scale;
    let mut it = 0;
    while res > tol && it < max_iter {
        op.apply_slice(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        for k in 0..n {
            z[k] = r[k] / op.diag[k];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
        it += 1;
        res = norm2(&r) / scale;
        if res <= tol {
            // recurrence residual drifts; confirm against the true residual
            op.apply_slice(&x, &mut ap);
            r.iter_mut()
                .zip(bv.iter().zip(&ap))
                .for_each(|(r, (b, a))| *r = b - a);
            res = norm2(&r) / scale;
        }
    }
    if res > tol || !res.is_finite() {
        return Err(Error::LinearSolve {
            iterations: it,
            residual: res,
        });
    }
    let report = LinearSolveReport {
        iterations: it,
        residual: res,
        converged: true,
    };
    Ok((ScalarField::new(op.grid, x)?, report))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
