//! Fixed-point solvers for the truncated coupled problem at level `n`.
//!
//! Each outer step freezes the viscosities at the current `k`, solves the
//! linear `u` equation, then updates `k` by one of three routes:
//!
//! * direct: `−div(a_n(k_lag)∇k) = T_n(ν_n(k_lag)|∇u|²)`;
//! * Kirchhoff: `−ΔK = T_n(ν_n(k_lag)|∇u|²)`, `k = A_n⁻¹(K)`;
//! * χ: with `a = γν`, `−div(γν_n(k_lag)∇χ) = f u` and `k = χ − u²/(2γ)`.
//!
//! The `k` update is relaxed as `k ← (1−ω)k + ω k_new` and the loop stops
//! when the sup-norm increments of both unknowns fall below the tolerance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::{TruncationLevel, ViscosityModel};
use crate::error::{Error, Result};
use crate::grid::{linf_norm, ScalarField};
use crate::linsolve::{
    assemble, default_max_iterations, dot, load_vector, solve_spd_from, DiffusionOperator,
};
use crate::scheme::{dissipation_density, face_energy, FaceRule, Scheme};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitK {
    #[default]
    Zero,
    Constant(f64),
    /// Start from the previous solution of an n-sweep; zero otherwise.
    WarmStart,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KUpdate {
    #[default]
    Direct,
    Kirchhoff,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardConfig {
    /// Bound on `max(‖δu‖∞, ‖δk‖∞)` at convergence.
    pub tol: f64,
    pub max_outer: usize,
    /// Relaxation ω of the `k` update, in `(0, 1]`.
    pub damping: f64,
    /// Drop ω from 1 to 0.5 the first time the increment grows.
    pub damping_fallback: bool,
    pub init_k: InitK,
    pub linear_tol: f64,
    pub face_rule: FaceRule,
    pub k_update: KUpdate,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_outer: 500,
            damping: 1.0,
            damping_fallback: true,
            init_k: InitK::Zero,
            linear_tol: 1e-12,
            face_rule: FaceRule::IntervalMean,
            k_update: KUpdate::Direct,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if self.max_outer == 0 {
            return Err(Error::Config("max_outer must be at least 1".into()));
        }
        if !(self.linear_tol > 0.0) {
            return Err(Error::Config(format!(
                "linear_tol must be positive, got {}",
                self.linear_tol
            )));
        }
        if let InitK::Constant(c) = self.init_k {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::Config(format!(
                    "initial k must be non-negative, got {c}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub n: u64,
    pub outer_iterations: usize,
    pub converged: bool,
    pub final_increment: f64,
    /// `∫ ν_n(k)|∇u|²`.
    pub energy: f64,
    /// `∫ a_n(k)|∇k|²`.
    pub dissipation: f64,
    pub linf_u: f64,
    pub linf_k: f64,
    /// Whether `T_n` clips any coefficient or source value at the final iterate.
    pub truncation_active: bool,
    /// Negative `k` (or `K`, `χ`-derived `k`) values zeroed over the whole solve.
    pub clamp_count: usize,
    /// Relative residual of the `k` equation with coefficients evaluated at
    /// the final `k` instead of the lagged one.
    pub k_equation_residual: f64,
    pub linear_iterations: usize,
    pub damping: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub u: ScalarField,
    pub k: ScalarField,
    pub report: SolveReport,
}

#[derive(Clone, Debug)]
pub struct ChiSolution {
    pub u: ScalarField,
    pub k: ScalarField,
    pub chi: ScalarField,
    pub report: SolveReport,
}

/// Result of one `k` update.
#[derive(Clone, Debug)]
pub struct KStep {
    pub k: ScalarField,
    /// Cells where the linear solve came out negative and was reset to 0.
    pub clamped: usize,
    pub linear_iterations: usize,
}

/// Weight `w` in `χ = k + w u²` that cancels the quadratic source when `a = γν`.
pub fn chi_weight(gamma: f64) -> f64 {
    0.5 / gamma
}

/// Outer-step building blocks at fixed `(model, n)`.
pub struct Stepper<'a> {
    pub scheme: Scheme<'a>,
    pub linear_tol: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a ViscosityModel, n: TruncationLevel, cfg: &PicardConfig) -> Self {
        Self {
            scheme: Scheme::new(model, n, cfg.face_rule),
            linear_tol: cfg.linear_tol,
        }
    }

    fn solve(
        &self,
        op: &DiffusionOperator,
        load: &ScalarField,
        x0: Option<&ScalarField>,
    ) -> Result<(ScalarField, usize)> {
        let max_iter = default_max_iterations(op.grid());
        let (x, rep) = solve_spd_from(op, load, self.linear_tol, x0, max_iter)?;
        Ok((x, rep.iterations))
    }

    /// `u` with coefficient `ν_n(k)` against source density `f`.
    pub fn solve_u(
        &self,
        k: &ScalarField,
        f: &ScalarField,
        x0: Option<&ScalarField>,
    ) -> Result<(ScalarField, usize)> {
        let op = self.scheme.u_operator(k)?;
        self.solve(&op, &load_vector(f), x0)
    }

    pub fn k_direct(
        &self,
        u: &ScalarField,
        k_lag: &ScalarField,
        x0: Option<&ScalarField>,
    ) -> Result<KStep> {
        let op = self.scheme.k_operator(k_lag)?;
        let src = self.scheme.source(u, k_lag)?;
        let (k, its) = self.solve(&op, &load_vector(&src), x0)?;
        Ok(clamp_step(k, its))
    }

    pub fn k_kirchhoff(
        &self,
        u: &ScalarField,
        k_lag: &ScalarField,
        x0: Option<&ScalarField>,
    ) -> Result<KStep> {
        let (model, n) = (self.scheme.model, self.scheme.n);
        let grid = *u.grid();
        let lap = assemble(&ScalarField::constant(grid, 1.0))?;
        let src = self.scheme.source(u, k_lag)?;
        let warm = x0.map(|k| k.map(|s| model.kirchhoff_n(s.max(0.0), n).unwrap()));
        let (big_k, its) = self.solve(&lap, &load_vector(&src), warm.as_ref())?;
        let mut clamped = 0;
        let mut vals = Vec::with_capacity(grid.num_cells());
        for &v in big_k.values() {
            if v < 0.0 {
                clamped += 1;
                vals.push(0.0);
            } else {
                vals.push(model.kirchhoff_n_inv(v, n)?);
            }
        }
        Ok(KStep {
            k: ScalarField::new(grid, vals)?,
            clamped,
            linear_iterations: its,
        })
    }

    /// `χ` with coefficient `γν_n(k_lag)` against source `f u`.
    pub fn solve_chi(
        &self,
        gamma: f64,
        u: &ScalarField,
        k_lag: &ScalarField,
        f: &ScalarField,
        x0: Option<&ScalarField>,
    ) -> Result<(ScalarField, usize)> {
        let faces = self
            .scheme
            .nu_faces(k_lag)?
            .into_iter()
            .map(|c| gamma * c)
            .collect();
        let op = DiffusionOperator::from_face_coefficients(*u.grid(), faces)?;
        self.solve(&op, &load_vector(&f.zip_map(u, |a, b| a * b)?), x0)
    }

    /// Final diagnostics for `(u, k)`; `chi_gamma` selects the `a_n = γν_n` variant.
    fn report(
        &self,
        u: &ScalarField,
        k: &ScalarField,
        chi_gamma: Option<f64>,
        progress: Progress,
    ) -> Result<SolveReport> {
        let model = self.scheme.model;
        let n = self.scheme.n;
        let cap = n.cap();
        let nu_faces = self.scheme.nu_faces(k)?;
        let a_faces: Vec<f64> = match chi_gamma {
            Some(g) => nu_faces.iter().map(|c| g * c).collect(),
            None => self.scheme.a_faces(k)?,
        };
        let density = dissipation_density(&nu_faces, u);
        let mut truncation_active = density.values().iter().any(|&d| d > cap);
        for &s in k.values() {
            let a_cell = match chi_gamma {
                Some(_) => f64::NEG_INFINITY,
                None => model.a(s)?,
            };
            if model.nu(s)? > cap || a_cell > cap {
                truncation_active = true;
            }
        }

        let src = load_vector(&density.map(|d| d.min(cap)));
        let op = DiffusionOperator::from_face_coefficients(*k.grid(), a_faces.clone())?;
        let ak = op.apply(k);
        let resid: Vec<f64> = ak
            .values()
            .iter()
            .zip(src.values())
            .map(|(a, b)| a - b)
            .collect();
        let src_norm = dot(src.values(), src.values()).sqrt();
        let r_norm = dot(&resid, &resid).sqrt();
        let k_equation_residual = if src_norm > 0.0 {
            r_norm / src_norm
        } else {
            r_norm
        };

        Ok(SolveReport {
            n: n.get(),
            outer_iterations: progress.iterations,
            converged: progress.converged,
            final_increment: progress.increment,
            energy: face_energy(&nu_faces, u),
            dissipation: face_energy(&a_faces, k),
            linf_u: linf_norm(u),
            linf_k: linf_norm(k),
            truncation_active,
            clamp_count: progress.clamped,
            k_equation_residual,
            linear_iterations: progress.linear_iterations,
            damping: progress.damping,
        })
    }
}

fn clamp_step(k: ScalarField, linear_iterations: usize) -> KStep {
    let clamped = k.values().iter().filter(|&&v| v < 0.0).count();
    let k = if clamped > 0 {
        k.map(|v| v.max(0.0))
    } else {
        k
    };
    KStep {
        k,
        clamped,
        linear_iterations,
    }
}

#[derive(Clone, Copy, Debug)]
struct Progress {
    iterations: usize,
    converged: bool,
    increment: f64,
    clamped: usize,
    linear_iterations: usize,
    damping: f64,
}

/// Relaxation with a one-shot fallback on increment growth.
struct Relaxation {
    omega: f64,
    fallback: bool,
    last: f64,
}

impl Relaxation {
    fn new(cfg: &PicardConfig) -> Self {
        Self {
            omega: cfg.damping,
            fallback: cfg.damping_fallback,
            last: f64::INFINITY,
        }
    }

    fn observe(&mut self, increment: f64) {
        if self.fallback && self.omega == 1.0 && increment > self.last {
            self.omega = 0.5;
            self.fallback = false;
        }
        self.last = increment;
    }

    fn blend(&self, old: &ScalarField, new: &ScalarField) -> ScalarField {
        if self.omega == 1.0 {
            return new.clone();
        }
        let w = self.omega;
        old.zip_map(new, |a, b| (1.0 - w) * a + w * b)
            .expect("same grid")
    }
}

fn initial_k(f: &ScalarField, cfg: &PicardConfig, warm: Option<&ScalarField>) -> ScalarField {
    match (cfg.init_k, warm) {
        (InitK::WarmStart, Some(k)) => k.clone(),
        (InitK::Constant(c), _) => ScalarField::constant(*f.grid(), c),
        _ => ScalarField::zeros(*f.grid()),
    }
}

/// `u` solving the linear `u` equation with viscosity `ν_n(k)`.
pub fn solve_u_given_k(
    k: &ScalarField,
    m: &ViscosityModel,
    n: TruncationLevel,
    f: &ScalarField,
) -> Result<ScalarField> {
    Stepper::new(m, n, &PicardConfig::default())
        .solve_u(k, f, None)
        .map(|(u, _)| u)
}

/// One lagged `k` update: coefficient and source frozen at `k_lag`.
pub fn solve_k_given_u(
    u: &ScalarField,
    k_lag: &ScalarField,
    m: &ViscosityModel,
    n: TruncationLevel,
) -> Result<KStep> {
    Stepper::new(m, n, &PicardConfig::default()).k_direct(u, k_lag, None)
}

/// Lagged `k` update through the Kirchhoff variable `K = A_n(k)`.
pub fn kirchhoff_k_solve(
    u: &ScalarField,
    k_lag: &ScalarField,
    m: &ViscosityModel,
    n: TruncationLevel,
) -> Result<KStep> {
    Stepper::new(m, n, &PicardConfig::default()).k_kirchhoff(u, k_lag, None)
}

/// Runs the Picard loop and returns the last iterate even without convergence.
pub fn picard_iterate(
    m: &ViscosityModel,
    n: TruncationLevel,
    f: &ScalarField,
    cfg: &PicardConfig,
    warm: Option<(&ScalarField, &ScalarField)>,
) -> Result<Solution> {
    cfg.validate()?;
    let stepper = Stepper::new(m, n, cfg);
    let mut k = initial_k(f, cfg, warm.map(|w| w.1));
    let mut u = match (cfg.init_k, warm) {
        (InitK::WarmStart, Some((u, _))) => u.clone(),
        _ => ScalarField::zeros(*f.grid()),
    };
    let mut relax = Relaxation::new(cfg);
    let mut progress = Progress {
        iterations: 0,
        converged: false,
        increment: f64::INFINITY,
        clamped: 0,
        linear_iterations: 0,
        damping: cfg.damping,
    };
    while progress.iterations < cfg.max_outer {
        let (u_new, its) = stepper.solve_u(&k, f, Some(&u))?;
        let step = match cfg.k_update {
            KUpdate::Direct => stepper.k_direct(&u_new, &k, Some(&k))?,
            KUpdate::Kirchhoff => stepper.k_kirchhoff(&u_new, &k, Some(&k))?,
        };
        let k_new = relax.blend(&k, &step.k);
        let inc = u_new.max_abs_diff(&u)?.max(k_new.max_abs_diff(&k)?);
        progress.iterations += 1;
        progress.increment = inc;
        progress.clamped += step.clamped;
        progress.linear_iterations += its + step.linear_iterations;
        u = u_new;
        k = k_new;
        if inc <= cfg.tol {
            progress.converged = true;
            break;
        }
        relax.observe(inc);
        progress.damping = relax.omega;
    }
    let report = stepper.report(&u, &k, None, progress)?;
    Ok(Solution { u, k, report })
}

/// Picard solve of the truncated problem; non-convergence is an error.
pub fn picard_solve(
    m: &ViscosityModel,
    n: TruncationLevel,
    f: &ScalarField,
    cfg: &PicardConfig,
) -> Result<Solution> {
    converged_or_err(picard_iterate(m, n, f, cfg, None)?)
}

fn converged_or_err(sol: Solution) -> Result<Solution> {
    if sol.report.converged {
        Ok(sol)
    } else {
        Err(Error::FixedPoint {
            iterations: sol.report.outer_iterations,
            increment: sol.report.final_increment,
        })
    }
}

/// Fixed-point solve through `χ = k + u²/(2γ)`; requires `a = γν`, and uses
/// `a_n = γν_n` as the truncated `k` coefficient.
pub fn chi_decoupled_solve(
    m: &ViscosityModel,
    n: TruncationLevel,
    f: &ScalarField,
    cfg: &PicardConfig,
) -> Result<ChiSolution> {
    cfg.validate()?;
    let gamma = m.require_proportional()?;
    let w = chi_weight(gamma);
    let stepper = Stepper::new(m, n, cfg);
    let grid = *f.grid();
    let mut k = initial_k(f, cfg, None);
    let mut u = ScalarField::zeros(grid);
    let mut chi = ScalarField::zeros(grid);
    let mut relax = Relaxation::new(cfg);
    let mut progress = Progress {
        iterations: 0,
        converged: false,
        increment: f64::INFINITY,
        clamped: 0,
        linear_iterations: 0,
        damping: cfg.damping,
    };
    while progress.iterations < cfg.max_outer {
        let (u_new, its_u) = stepper.solve_u(&k, f, Some(&u))?;
        let (chi_new, its_c) = stepper.solve_chi(gamma, &u_new, &k, f, Some(&chi))?;
        let raw = chi_new.zip_map(&u_new, |c, v| c - w * v * v)?;
        let step = clamp_step(raw, its_c);
        let k_new = relax.blend(&k, &step.k);
        let inc = u_new.max_abs_diff(&u)?.max(k_new.max_abs_diff(&k)?);
        progress.iterations += 1;
        progress.increment = inc;
        progress.clamped += step.clamped;
        progress.linear_iterations += its_u + its_c;
        u = u_new;
        k = k_new;
        chi = chi_new;
        if inc <= cfg.tol {
            progress.converged = true;
            break;
        }
        relax.observe(inc);
        progress.damping = relax.omega;
    }
    let report = stepper.report(&u, &k, Some(gamma), progress)?;
    if !report.converged {
        return Err(Error::FixedPoint {
            iterations: report.outer_iterations,
            increment: report.final_increment,
        });
    }
    Ok(ChiSolution { u, k, chi, report })
}

#[derive(Clone, Debug)]
pub struct SweepEntry {
    pub n: TruncationLevel,
    /// Last iterate; `report.converged` tells whether it is a solution.
    pub solution: Option<Solution>,
    pub error: Option<String>,
    /// `‖u_n − u_prev‖∞` against the previous successful entry.
    pub diff_u: Option<f64>,
    pub diff_k: Option<f64>,
}

/// Solves for every `n` in ascending order. With [`InitK::WarmStart`] each
/// level starts from the previous converged one and the levels run in
/// sequence; otherwise they are independent and run on the rayon pool.
pub fn n_sweep(
    m: &ViscosityModel,
    f: &ScalarField,
    n_list: &[TruncationLevel],
    cfg: &PicardConfig,
) -> Result<Vec<SweepEntry>> {
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("n_list must be strictly ascending".into()));
    }
    cfg.validate()?;
    let solves: Vec<Result<Solution>> = if cfg.init_k == InitK::WarmStart {
        let mut prev: Option<(ScalarField, ScalarField)> = None;
        let mut solves = Vec::with_capacity(n_list.len());
        for &n in n_list {
            let res = picard_iterate(m, n, f, cfg, prev.as_ref().map(|(u, k)| (u, k)));
            if let Ok(sol) = &res {
                if sol.report.converged {
                    prev = Some((sol.u.clone(), sol.k.clone()));
                }
            }
            solves.push(res);
        }
        solves
    } else {
        n_list
            .par_iter()
            .map(|&n| picard_iterate(m, n, f, cfg, None))
            .collect()
    };

    let mut out = Vec::with_capacity(n_list.len());
    let mut prev: Option<(ScalarField, ScalarField)> = None;
    for (&n, res) in n_list.iter().zip(solves) {
        let entry = match res {
            Ok(sol) => {
                let (diff_u, diff_k) = match &prev {
                    Some((u, k)) => (Some(sol.u.max_abs_diff(u)?), Some(sol.k.max_abs_diff(k)?)),
                    None => (None, None),
                };
                let error = (!sol.report.converged).then(|| {
                    format!(
                        "no convergence after {} iterations (increment {:e})",
                        sol.report.outer_iterations, sol.report.final_increment
                    )
                });
                if sol.report.converged {
                    prev = Some((sol.u.clone(), sol.k.clone()));
                }
                SweepEntry {
                    n,
                    solution: Some(sol),
                    error,
                    diff_u,
                    diff_k,
                }
            }
            Err(e) => SweepEntry {
                n,
                solution: None,
                error: Some(e.to_string()),
                diff_u: None,
                diff_k: None,
            },
        };
        out.push(entry);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn level(n: u64) -> TruncationLevel {
        TruncationLevel::new(n).unwrap()
    }

    fn gaussian(g: Grid, amp: f64) -> ScalarField {
        ScalarField::from_fn(g, |x, y| {
            amp * (-((x - 0.5).powi(2) + (y - 0.5).powi(2)) / (2.0 * 0.15f64.powi(2))).exp()
        })
    }

    fn physical() -> ViscosityModel {
        ViscosityModel::physical_sqrt(1.0, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let g = Grid::unit_square(8).unwrap();
        let f = ScalarField::zeros(g);
        let m = physical();
        assert_eq!(
            linf_norm(&solve_u_given_k(&f, &m, level(4), &f).unwrap()),
            0.0
        );
        let sol = picard_solve(&m, level(4), &f, &PicardConfig::default()).unwrap();
        assert_eq!(sol.report.outer_iterations, 1);
        assert_eq!(linf_norm(&sol.u), 0.0);
        assert_eq!(linf_norm(&sol.k), 0.0);
        let step = solve_k_given_u(&f, &f, &m, level(4)).unwrap();
        assert_eq!(linf_norm(&step.k), 0.0);
        let step = kirchhoff_k_solve(&f, &f, &m, level(4)).unwrap();
        assert_eq!(linf_norm(&step.k), 0.0);
    }

    #[test]
    fn constant_model_u_matches_manufactured() {
        let g = Grid::unit_square(32).unwrap();
        let nu0 = 2.0;
        let m = ViscosityModel::constant(nu0, 1.0, 0.5).unwrap();
        let f = ScalarField::from_fn(g, |x, y| {
            2.0 * PI * PI * nu0 * (PI * x).sin() * (PI * y).sin()
        });
        let u = solve_u_given_k(&ScalarField::zeros(g), &m, level(10), &f).unwrap();
        let exact = ScalarField::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
        assert!(u.max_abs_diff(&exact).unwrap() < 2e-3);
    }

    #[test]
    fn symmetric_data_gives_symmetric_u() {
        let n = 12;
        let g = Grid::unit_square(n).unwrap();
        let f = ScalarField::from_fn(g, |x, y| x * y + (x + y).sin());
        let k = ScalarField::from_fn(g, |x, y| x * x * y * y);
        let u = solve_u_given_k(&k, &physical(), level(50), &f).unwrap();
        for j in 0..n {
            for i in 0..n {
                assert!((u.get(i, j) - u.get(j, i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn k_update_with_nonnegative_source_needs_no_clamp() {
        let g = Grid::unit_square(16).unwrap();
        let u = ScalarField::from_fn(g, |x, y| (7.0 * x).sin() * (5.0 * y).cos());
        let k_lag = ScalarField::from_fn(g, |x, y| x * (1.0 - y));
        let step = solve_k_given_u(&u, &k_lag, &physical(), level(3)).unwrap();
        assert_eq!(step.clamped, 0);
        assert!(step.k.min() >= 0.0);
    }

    #[test]
    fn kirchhoff_update_reduces_to_direct_for_constant_a() {
        let g = Grid::unit_square(16).unwrap();
        let m = ViscosityModel::constant(1.5, 2.5, 1.0).unwrap();
        let u = ScalarField::from_fn(g, |x, y| x * (1.0 - x) * (3.0 * y).sin());
        let k_lag = ScalarField::zeros(g);
        let direct = solve_k_given_u(&u, &k_lag, &m, level(100)).unwrap();
        let kirch = kirchhoff_k_solve(&u, &k_lag, &m, level(100)).unwrap();
        assert!(direct.k.max_abs_diff(&kirch.k).unwrap() < 1e-12);
    }

    #[test]
    fn constant_coefficients_decouple() {
        let g = Grid::unit_square(16).unwrap();
        let m = ViscosityModel::constant(1.0, 1.0, 1.0).unwrap();
        let f = gaussian(g, 10.0);
        let sol = picard_solve(&m, level(1000), &f, &PicardConfig::default()).unwrap();
        assert!(sol.report.outer_iterations <= 2);
        let u = solve_u_given_k(&ScalarField::zeros(g), &m, level(1000), &f).unwrap();
        let k = solve_k_given_u(&u, &ScalarField::zeros(g), &m, level(1000))
            .unwrap()
            .k;
        assert!(sol.u.max_abs_diff(&u).unwrap() < 1e-12);
        assert!(sol.k.max_abs_diff(&k).unwrap() < 1e-12);
        assert!(!sol.report.truncation_active);
    }

    #[test]
    fn different_initial_k_reach_the_same_fixed_point() {
        let g = Grid::unit_square(33).unwrap();
        let f = gaussian(g, 20.0);
        let m = physical();
        let cfg = PicardConfig::default();
        let a = picard_solve(&m, level(64), &f, &cfg).unwrap();
        let cfg2 = PicardConfig {
            init_k: InitK::Constant(0.5),
            ..cfg.clone()
        };
        let b = picard_solve(&m, level(64), &f, &cfg2).unwrap();
        assert!(a.u.max_abs_diff(&b.u).unwrap() <= 10.0 * cfg.tol);
        assert!(a.k.max_abs_diff(&b.k).unwrap() <= 10.0 * cfg.tol);
        assert_eq!(a.report.clamp_count, 0);
        assert!(a.report.k_equation_residual < 1e-8);
    }

    #[test]
    fn routes_share_the_fixed_point() {
        let g = Grid::unit_square(17).unwrap();
        let f = gaussian(g, 20.0);
        let m = physical();
        let cfg = PicardConfig::default();
        let direct = picard_solve(&m, level(256), &f, &cfg).unwrap();
        let kcfg = PicardConfig {
            k_update: KUpdate::Kirchhoff,
            ..cfg.clone()
        };
        let kirch = picard_solve(&m, level(256), &f, &kcfg).unwrap();
        assert!(direct.u.max_abs_diff(&kirch.u).unwrap() < 1e-9);
        assert!(direct.k.max_abs_diff(&kirch.k).unwrap() < 1e-9);
        let chi = chi_decoupled_solve(&m, level(256), &f, &cfg).unwrap();
        assert!(direct.u.max_abs_diff(&chi.u).unwrap() < 1e-9);
        assert!(direct.k.max_abs_diff(&chi.k).unwrap() < 1e-9);
    }

    #[test]
    fn chi_route_needs_proportional_model() {
        let g = Grid::unit_square(4).unwrap();
        let m = ViscosityModel::physical_sqrt(1.0, 1.0, 2.0, 1.0, 1.0).unwrap();
        let err = chi_decoupled_solve(
            &m,
            level(4),
            &ScalarField::zeros(g),
            &PicardConfig::default(),
        );
        assert!(matches!(err, Err(Error::Hypothesis { name: "H2", .. })));
    }

    #[test]
    fn chi_identity_holds_after_one_pass_for_constant_model() {
        let g = Grid::unit_square(16).unwrap();
        let m = ViscosityModel::constant(2.0, 4.0, 1.0).unwrap();
        let f = gaussian(g, 5.0);
        let sol = chi_decoupled_solve(&m, level(1000), &f, &PicardConfig::default()).unwrap();
        let w = chi_weight(2.0);
        let rebuilt = sol.k.zip_map(&sol.u, |k, u| k + w * u * u).unwrap();
        assert!(rebuilt.max_abs_diff(&sol.chi).unwrap() < 1e-14);
        assert!(sol.report.outer_iterations <= 2);
        let direct = picard_solve(&m, level(1000), &f, &PicardConfig::default()).unwrap();
        assert!(direct.k.max_abs_diff(&sol.k).unwrap() < 1e-10);
    }

    #[test]
    fn sweep_with_inactive_truncation_is_flat() {
        let g = Grid::unit_square(12).unwrap();
        let m = ViscosityModel::constant(1.0, 1.0, 1.0).unwrap();
        let f = gaussian(g, 1.0);
        let cfg = PicardConfig {
            init_k: InitK::WarmStart,
            ..PicardConfig::default()
        };
        let ns: Vec<_> = [2, 4, 8].into_iter().map(level).collect();
        let sweep = n_sweep(&m, &f, &ns, &cfg).unwrap();
        for e in &sweep {
            let r = &e.solution.as_ref().unwrap().report;
            assert!(!r.truncation_active);
            assert!(e.error.is_none());
        }
        for e in &sweep[1..] {
            assert!(e.diff_u.unwrap() < 1e-12 && e.diff_k.unwrap() < 1e-12);
        }
        let single = n_sweep(&m, &f, &[level(8)], &cfg).unwrap();
        let direct = picard_solve(&m, level(8), &f, &cfg).unwrap();
        let s = single[0].solution.as_ref().unwrap();
        assert_eq!(s.report, direct.report);
        assert!(n_sweep(&m, &f, &[level(4), level(2)], &cfg).is_err());
    }

    #[test]
    fn failures_are_reported() {
        let g = Grid::unit_square(16).unwrap();
        let f = gaussian(g, 20.0);
        let cfg = PicardConfig {
            max_outer: 1,
            ..PicardConfig::default()
        };
        let err = picard_solve(&physical(), level(64), &f, &cfg).unwrap_err();
        assert!(matches!(err, Error::FixedPoint { iterations: 1, .. }));
        let sweep = n_sweep(&physical(), &f, &[level(2), level(64)], &cfg).unwrap();
        assert_eq!(sweep.len(), 2);
        assert!(sweep.iter().all(|e| e.error.is_some()));
    }

    #[test]
    fn config_validation() {
        let bad = PicardConfig {
            damping: 0.0,
            ..PicardConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = PicardConfig {
            tol: -1.0,
            ..PicardConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
