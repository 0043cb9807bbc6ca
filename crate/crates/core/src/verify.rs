//! Certificates for solved fields: energy and weak identities, level-set
//! extinction, gradient bounds, and regularity diagnostics.

use serde::Serialize;

use crate::coeffs::{truncate, TruncationLevel, ViscosityModel};
use crate::error::{Error, Result};
use crate::fixedpoint::chi_weight;
use crate::grid::{gradient_with_boundary, inner, linf_norm, Axis, Grid, ScalarField};
use crate::scheme::{dissipation_density, face_energy, FaceRule, Scheme};

const ENERGY_EPS: f64 = 1e-14;

/// `|E − ∫fu| / max(|∫fu|, 1e-14)` with `E = ∫ν_n(k)|∇u|²`.
pub fn energy_identity_residual(
    u: &ScalarField,
    k: &ScalarField,
    f: &ScalarField,
    m: &ViscosityModel,
    n: TruncationLevel,
) -> Result<f64> {
    energy_identity_residual_with(&Scheme::new(m, n, FaceRule::default()), u, k, f)
}

pub fn energy_identity_residual_with(
    scheme: &Scheme<'_>,
    u: &ScalarField,
    k: &ScalarField,
    f: &ScalarField,
) -> Result<f64> {
    let e = face_energy(&scheme.nu_faces(k)?, u);
    let work = inner(f, u)?;
    Ok((e - work).abs() / work.abs().max(ENERGY_EPS))
}

/// The default test family: nine smooth bumps of radius 0.2·min(lx, ly)
/// centred at the quarter points, followed by the constant 1.
pub fn default_test_family(grid: &Grid) -> Vec<ScalarField> {
    let radius = 0.2 * grid.lx().min(grid.ly());
    let mut out = Vec::with_capacity(10);
    for j in 1..=3 {
        for i in 1..=3 {
            let (cx, cy) = (grid.lx() * i as f64 / 4.0, grid.ly() * j as f64 / 4.0);
            out.push(ScalarField::from_fn(*grid, |x, y| {
                let t2 = ((x - cx).powi(2) + (y - cy).powi(2)) / (radius * radius);
                if t2 < 1.0 {
                    (1.0 - 1.0 / (1.0 - t2)).exp()
                } else {
                    0.0
                }
            }));
        }
    }
    out.push(ScalarField::constant(*grid, 1.0));
    out
}

/// Largest normalized residual of `∫ν|∇u|²φ − ∫fuφ + ∫ν u ∇u·∇φ` over the
/// test family; each term normalized by `max(1, E‖φ‖∞)`.
pub fn idee_residual(
    u: &ScalarField,
    k: &ScalarField,
    f: &ScalarField,
    m: &ViscosityModel,
    n: TruncationLevel,
    test_set: &[ScalarField],
) -> Result<f64> {
    idee_residual_with(&Scheme::new(m, n, FaceRule::default()), u, k, f, test_set)
}

pub fn idee_residual_with(
    scheme: &Scheme<'_>,
    u: &ScalarField,
    k: &ScalarField,
    f: &ScalarField,
    test_set: &[ScalarField],
) -> Result<f64> {
    let grid = *u.grid();
    let faces = grid.faces();
    let nu = scheme.nu_faces(k)?;
    let density = dissipation_density(&nu, u);
    let energy = face_energy(&nu, u);
    let fu = f.zip_map(u, |a, b| a * b)?;
    let mut worst = 0.0f64;
    for phi in test_set {
        let dissipated = inner(&density, phi)?;
        let work = inner(&fu, phi)?;
        let mut flux = 0.0;
        for (face, &c) in faces.iter().zip(&nu) {
            let u_bar = face.average_with(u.values(), 0.0);
            flux += c
                * u_bar
                * face.diff(u.values(), 0.0)
                * face.diff(phi.values(), 0.0)
                * face.measure();
        }
        let scale = (energy * linf_norm(phi)).max(1.0);
        worst = worst.max((dissipated - work + flux).abs() / scale);
    }
    Ok(worst)
}

/// `(s, |{|u| ≥ s}|)` for each level.
pub fn level_set_profile(u: &ScalarField, s_list: &[f64]) -> Result<Vec<(f64, f64)>> {
    if s_list.iter().any(|&s| !(s >= 0.0)) || s_list.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config(
            "level list must be ascending and non-negative".into(),
        ));
    }
    let area = u.grid().cell_area();
    Ok(s_list
        .iter()
        .map(|&s| {
            let count = u.values().iter().filter(|v| v.abs() >= s).count();
            (s, count as f64 * area)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StampacchiaExponents {
    pub rho: f64,
    pub beta: f64,
    /// False when `r ≥ 3`, where `ρ` is reported as infinite and `β` takes its limit 3.
    pub in_domain: bool,
}

/// `ρ = 3r/(3−r)` and `β = 3(ρ−2)/ρ` for the integrability exponent `r` of `f`.
pub fn stampacchia_exponents(r: f64) -> Result<StampacchiaExponents> {
    if !(r > 1.5) {
        return Err(Error::Hypothesis {
            name: "H0",
            detail: format!("source integrability exponent r = {r} must exceed 3/2"),
        });
    }
    if r >= 3.0 {
        return Ok(StampacchiaExponents {
            rho: f64::INFINITY,
            beta: 3.0,
            in_domain: false,
        });
    }
    let rho = 3.0 * r / (3.0 - r);
    Ok(StampacchiaExponents {
        rho,
        beta: 3.0 * (rho - 2.0) / rho,
        in_domain: true,
    })
}

/// `‖∇√ν_n(k)‖_{L²}`; the boundary trace is `√ν_n(0)` since `k = 0` there.
pub fn sqrt_nu_seminorm(k: &ScalarField, m: &ViscosityModel, n: TruncationLevel) -> Result<f64> {
    let mut vals = Vec::with_capacity(k.values().len());
    for &s in k.values() {
        vals.push(truncate(m.nu(s)?, n).sqrt());
    }
    let field = ScalarField::new(*k.grid(), vals)?;
    let trace = truncate(m.nu(0.0)?, n).sqrt();
    let g = gradient_with_boundary(&field, trace);
    let s: f64 = k
        .grid()
        .faces()
        .iter()
        .map(|f| g.at(f).powi(2) * f.measure())
        .sum();
    Ok(s.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiBound {
    /// `‖k + u²/(2γ)‖∞`.
    pub chi_linf: f64,
    /// `chi_linf + ‖u‖∞²/(2γ)`, a bound on `‖k‖∞` when `k ≥ 0`.
    pub k_bound: f64,
}

pub fn chi_bound_check(u: &ScalarField, k: &ScalarField, gamma: f64) -> Result<ChiBound> {
    if !(gamma > 0.0) {
        return Err(Error::Hypothesis {
            name: "H2",
            detail: format!("gamma must be positive, got {gamma}"),
        });
    }
    let w = chi_weight(gamma);
    let chi = k.zip_map(u, |k, u| k + w * u * u)?;
    let chi_linf = linf_norm(&chi);
    Ok(ChiBound {
        chi_linf,
        k_bound: chi_linf + w * linf_norm(u).powi(2),
    })
}

/// Least-squares slope of `log osc(d)` against `log d`, where `osc(d)` is
/// the largest difference between cell values `d` apart along an axis, for
/// `d = h, 2h, 4h, …` up to a quarter of the edge. Clamped to `(0, 1]`;
/// `None` when fewer than two levels carry any oscillation.
pub fn holder_diagnostic(v: &ScalarField) -> Option<f64> {
    let g = *v.grid();
    let mut pts = Vec::new();
    for axis in [Axis::X, Axis::Y] {
        let (cells, h, len) = match axis {
            Axis::X => (g.nx(), g.hx(), g.lx()),
            Axis::Y => (g.ny(), g.hy(), g.ly()),
        };
        let mut step = 1;
        while step < cells && step as f64 * h <= 0.25 * len * (1.0 + 1e-12) {
            let mut osc = 0.0f64;
            for j in 0..g.ny() {
                for i in 0..g.nx() {
                    let (i2, j2) = match axis {
                        Axis::X => (i + step, j),
                        Axis::Y => (i, j + step),
                    };
                    if i2 < g.nx() && j2 < g.ny() {
                        osc = osc.max((v.get(i, j) - v.get(i2, j2)).abs());
                    }
                }
            }
            if osc > 0.0 {
                pts.push(((step as f64 * h).ln(), osc.ln()));
            }
            step *= 2;
        }
    }
    if pts.len() < 2 {
        return None;
    }
    let np = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / np;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / np;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some((sxy / sxx).clamp(1e-6, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportOptions {
    /// Exponent of the flux bound, in `[1, 3/2)`.
    pub p: f64,
    /// Integrability exponent claimed for `f`.
    pub r: f64,
    pub face_rule: FaceRule,
    pub level_set_points: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            p: 1.4,
            r: 2.0,
            face_rule: FaceRule::default(),
            level_set_points: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantReport {
    pub n: u64,
    pub energy: f64,
    pub dissipation: f64,
    pub lp_exponent: f64,
    pub lp_a_gradk: f64,
    pub linf_u: f64,
    pub linf_k: f64,
    pub min_k: f64,
    pub energy_identity_rel_residual: f64,
    pub idee_max_residual: f64,
    pub sqrt_nu_h1_seminorm: f64,
    pub chi_linf: Option<f64>,
    pub k_linf_bound: Option<f64>,
    pub level_set_profile: Vec<(f64, f64)>,
    pub holder_alpha_u: Option<f64>,
    pub holder_alpha_k: Option<f64>,
    pub stampacchia_rho: f64,
    pub stampacchia_beta: f64,
}

/// `(∫_faces |a_n(k) ∂k|^p)^{1/p}`; `p` must lie in `[1, 3/2)`.
pub fn lp_a_gradk(scheme: &Scheme<'_>, k: &ScalarField, p: f64) -> Result<f64> {
    if !(1.0..1.5).contains(&p) {
        return Err(Error::InvalidExponent(p));
    }
    let a = scheme.a_faces(k)?;
    let s: f64 = k
        .grid()
        .faces()
        .iter()
        .zip(&a)
        .map(|(f, &c)| (c * f.diff(k.values(), 0.0)).abs().powf(p) * f.measure())
        .sum();
    Ok(s.powf(1.0 / p))
}

pub fn full_report(
    u: &ScalarField,
    k: &ScalarField,
    f: &ScalarField,
    m: &ViscosityModel,
    n: TruncationLevel,
    opts: &ReportOptions,
) -> Result<InvariantReport> {
    opts.validate()?;
    let scheme = Scheme::new(m, n, opts.face_rule);
    let nu = scheme.nu_faces(k)?;
    let a = scheme.a_faces(k)?;
    let linf_u = linf_norm(u);
    let top = linf_u * (1.0 + 1e-12);
    let last = (opts.level_set_points - 1) as f64;
    let levels: Vec<f64> = (0..opts.level_set_points)
        .map(|i| top * i as f64 / last)
        .collect();
    let exps = stampacchia_exponents(opts.r)?;
    let chi = m.gamma().map(|g| chi_bound_check(u, k, g)).transpose()?;
    let tests = default_test_family(u.grid());
    Ok(InvariantReport {
        n: n.get(),
        energy: face_energy(&nu, u),
        dissipation: face_energy(&a, k),
        lp_exponent: opts.p,
        lp_a_gradk: lp_a_gradk(&scheme, k, opts.p)?,
        linf_u,
        linf_k: linf_norm(k),
        min_k: k.min(),
        energy_identity_rel_residual: energy_identity_residual_with(&scheme, u, k, f)?,
        idee_max_residual: idee_residual_with(&scheme, u, k, f, &tests)?,
        sqrt_nu_h1_seminorm: sqrt_nu_seminorm(k, m, n)?,
        chi_linf: chi.map(|c| c.chi_linf),
        k_linf_bound: chi.map(|c| c.k_bound),
        level_set_profile: level_set_profile(u, &levels)?,
        holder_alpha_u: holder_diagnostic(u),
        holder_alpha_k: holder_diagnostic(k),
        stampacchia_rho: exps.rho,
        stampacchia_beta: exps.beta,
    })
}

/// One named scalar of a report, tagged with the estimate it certifies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub quantity: &'static str,
    pub value: Option<f64>,
    pub anchor: &'static str,
}

impl InvariantReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        let row = |quantity, value, anchor| ReportRow {
            quantity,
            value,
            anchor,
        };
        vec![
            row(
                "energy",
                Some(self.energy),
                "energy bound on nu_n(k_n)|grad u_n|^2",
            ),
            row(
                "dissipation",
                Some(self.dissipation),
                "key estimate on a_n(k_n)|grad k_n|^2",
            ),
            row(
                "lp_a_gradk",
                Some(self.lp_a_gradk),
                "L^p flux bound, p < 3/2",
            ),
            row(
                "linf_u",
                Some(self.linf_u),
                "uniform L-infinity bound on u_n",
            ),
            row(
                "linf_k",
                Some(self.linf_k),
                "L-infinity bound on k_n under a = gamma nu",
            ),
            row("min_k", Some(self.min_k), "nonnegativity k_n >= 0"),
            row(
                "energy_identity_rel_residual",
                Some(self.energy_identity_rel_residual),
                "energy identity int f u = int nu(k)|grad u|^2",
            ),
            row(
                "idee_max_residual",
                Some(self.idee_max_residual),
                "weak identity nu|grad u|^2 = f u + div(nu u grad u)",
            ),
            row(
                "sqrt_nu_h1_seminorm",
                Some(self.sqrt_nu_h1_seminorm),
                "H1 bound on sqrt(nu_n(k_n))",
            ),
            row("chi_linf", self.chi_linf, "L-infinity bound on chi_n"),
            row(
                "k_linf_bound",
                self.k_linf_bound,
                "L-infinity bound on k_n via chi_n",
            ),
            row(
                "level_set_extinction",
                self.level_set_profile.last().map(|p| p.1),
                "level-set measure vanishes above sup|u_n|",
            ),
            row(
                "holder_alpha_u",
                self.holder_alpha_u,
                "Holder continuity of u",
            ),
            row(
                "holder_alpha_k",
                self.holder_alpha_k,
                "Holder continuity of k",
            ),
            row(
                "stampacchia_rho",
                Some(self.stampacchia_rho).filter(|r| r.is_finite()),
                "rho = 3r/(3-r)",
            ),
            row(
                "stampacchia_beta",
                Some(self.stampacchia_beta),
                "beta = 3(rho-2)/rho",
            ),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::{picard_solve, PicardConfig};
    use std::f64::consts::PI;

    fn level(n: u64) -> TruncationLevel {
        TruncationLevel::new(n).unwrap()
    }

    fn manufactured(
        nu0: f64,
        cells: usize,
    ) -> (ViscosityModel, ScalarField, crate::fixedpoint::Solution) {
        let g = Grid::unit_square(cells).unwrap();
        let m = ViscosityModel::constant(nu0, 1.0, 0.5).unwrap();
        let f = ScalarField::from_fn(g, |x, y| {
            2.0 * PI * PI * nu0 * (PI * x).sin() * (PI * y).sin()
        });
        let sol = picard_solve(&m, level(1000), &f, &PicardConfig::default()).unwrap();
        (m, f, sol)
    }

    #[test]
    fn energy_identity_on_manufactured_run() {
        let (m, f, sol) = manufactured(1.5, 64);
        let r = energy_identity_residual(&sol.u, &sol.k, &f, &m, level(1000)).unwrap();
        assert!(r <= 1e-8, "{r}");
        let work = inner(&f, &sol.u).unwrap();
        assert!((work - 1.5 * PI * PI / 2.0).abs() < 2e-2 * work);
        let rep = full_report(
            &sol.u,
            &sol.k,
            &f,
            &m,
            level(1000),
            &ReportOptions::default(),
        )
        .unwrap();
        assert!(rep.idee_max_residual <= 1e-8);
        assert!((rep.energy - 1.5 * PI * PI / 2.0).abs() < 2e-2);
    }

    #[test]
    fn zero_data_gives_zero_residuals() {
        let g = Grid::unit_square(8).unwrap();
        let z = ScalarField::zeros(g);
        let m = ViscosityModel::physical_sqrt(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(
            energy_identity_residual(&z, &z, &z, &m, level(3)).unwrap(),
            0.0
        );
        let tests = default_test_family(&g);
        assert_eq!(
            idee_residual(&z, &z, &z, &m, level(3), &tests).unwrap(),
            0.0
        );
        let rep = full_report(&z, &z, &z, &m, level(3), &ReportOptions::default()).unwrap();
        assert_eq!(rep.energy, 0.0);
        assert_eq!(rep.dissipation, 0.0);
        assert_eq!(rep.lp_a_gradk, 0.0);
        assert_eq!(rep.sqrt_nu_h1_seminorm, 0.0);
        assert_eq!(rep.chi_linf, Some(0.0));
        assert_eq!(rep.holder_alpha_u, None);
    }

    #[test]
    fn unconverged_iterate_is_flagged() {
        let g = Grid::unit_square(24).unwrap();
        let m = ViscosityModel::physical_sqrt(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x, y| {
            100.0 * (-((x - 0.5).powi(2) + (y - 0.5).powi(2)) / 0.02).exp()
        });
        let one_step = PicardConfig {
            max_outer: 1,
            ..PicardConfig::default()
        };
        let first = crate::fixedpoint::picard_iterate(&m, level(64), &f, &one_step, None).unwrap();
        assert!(!first.report.converged);
        // the last u was solved with the k before the update, not the returned k
        let r = energy_identity_residual(&first.u, &first.k, &f, &m, level(64)).unwrap();
        assert!(r > 1e-8, "{r}");
        let sol = picard_solve(&m, level(64), &f, &PicardConfig::default()).unwrap();
        assert!(energy_identity_residual(&sol.u, &sol.k, &f, &m, level(64)).unwrap() <= 1e-8);
    }

    #[test]
    fn constant_test_function_reduces_to_energy_identity() {
        let (m, f, sol) = manufactured(1.0, 16);
        // perturb u so both residuals are visibly non-zero
        let u = sol.u.map(|v| 1.01 * v);
        let one = [ScalarField::constant(*u.grid(), 1.0)];
        let idee = idee_residual(&u, &sol.k, &f, &m, level(1000), &one).unwrap();
        let scheme = Scheme::new(&m, level(1000), FaceRule::default());
        let e = face_energy(&scheme.nu_faces(&sol.k).unwrap(), &u);
        let work = inner(&f, &u).unwrap();
        let energy = energy_identity_residual(&u, &sol.k, &f, &m, level(1000)).unwrap();
        assert!((idee * e.max(1.0) - energy * work.abs()).abs() < 1e-12);
    }

    #[test]
    fn level_set_examples() {
        let g = Grid::new(4, 5, 2.0, 1.0).unwrap();
        let c = ScalarField::constant(g, -0.7);
        let prof = level_set_profile(&c, &[0.0, 0.5, 0.7, 0.71]).unwrap();
        assert_eq!(prof[0].1, 2.0);
        assert_eq!(prof[1].1, 2.0);
        assert!((prof[2].1 - 2.0).abs() < 1e-14);
        assert_eq!(prof[3].1, 0.0);
        assert!(level_set_profile(&c, &[0.5, 0.1]).is_err());
        assert!(level_set_profile(&c, &[-0.5]).is_err());
    }

    #[test]
    fn level_set_against_dense_sampling() {
        let g = Grid::unit_square(64).unwrap();
        let u = ScalarField::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
        let psi = level_set_profile(&u, &[0.5]).unwrap()[0].1;
        let fine = 640;
        let mut hits = 0usize;
        for j in 0..fine {
            for i in 0..fine {
                let (x, y) = (
                    (i as f64 + 0.5) / fine as f64,
                    (j as f64 + 0.5) / fine as f64,
                );
                if (PI * x).sin() * (PI * y).sin() >= 0.5 {
                    hits += 1;
                }
            }
        }
        let oracle = hits as f64 / (fine * fine) as f64;
        assert!((psi - oracle).abs() < 1e-2, "{psi} vs {oracle}");
    }

    #[test]
    fn stampacchia_examples() {
        let e = stampacchia_exponents(2.0).unwrap();
        assert_eq!((e.rho, e.beta), (6.0, 2.0));
        let e = stampacchia_exponents(2.4).unwrap();
        assert!((e.rho - 12.0).abs() < 1e-12 && (e.beta - 2.5).abs() < 1e-12);
        assert!(stampacchia_exponents(1.5).is_err());
        let e = stampacchia_exponents(3.0).unwrap();
        assert!(e.rho.is_infinite() && e.beta == 3.0 && !e.in_domain);
    }

    #[test]
    fn sqrt_nu_examples() {
        let g = Grid::unit_square(10).unwrap();
        let k = ScalarField::from_fn(g, |x, y| x * y);
        let c = ViscosityModel::constant(2.0, 2.0, 1.0).unwrap();
        assert_eq!(sqrt_nu_seminorm(&k, &c, level(5)).unwrap(), 0.0);
        let p = ViscosityModel::physical_sqrt(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(
            sqrt_nu_seminorm(&ScalarField::zeros(g), &p, level(5)).unwrap(),
            0.0
        );
        assert!(sqrt_nu_seminorm(&k, &p, level(5)).unwrap() > 0.0);
    }

    #[test]
    fn chi_bound_examples() {
        let g = Grid::unit_square(3).unwrap();
        let z = ScalarField::zeros(g);
        assert_eq!(chi_bound_check(&z, &z, 1.0).unwrap().chi_linf, 0.0);
        let one = ScalarField::constant(g, 1.0);
        // χ = k + u²/(2γ) with γ = 1
        assert_eq!(chi_bound_check(&one, &one, 1.0).unwrap().chi_linf, 1.5);
        assert_eq!(chi_bound_check(&one, &one, 2.0).unwrap().chi_linf, 1.25);
        assert_eq!(chi_bound_check(&one, &one, 2.0).unwrap().k_bound, 1.5);
        assert!(chi_bound_check(&one, &one, 0.0).is_err());
    }

    #[test]
    fn holder_examples() {
        let g = Grid::unit_square(256).unwrap();
        let lin = ScalarField::from_fn(g, |x, _| x);
        assert!((holder_diagnostic(&lin).unwrap() - 1.0).abs() < 1e-9);
        // singular point on the first column of cell centres
        let h = g.hx();
        let root = ScalarField::from_fn(g, |x, _| (x - 0.5 * h).max(0.0).sqrt());
        let alpha = holder_diagnostic(&root).unwrap();
        assert!((alpha - 0.5).abs() < 0.05, "{alpha}");
        assert_eq!(holder_diagnostic(&ScalarField::constant(g, 3.0)), None);
    }

    #[test]
    fn flux_exponent_checks_and_holder_interpolation() {
        let g = Grid::unit_square(20).unwrap();
        let k = ScalarField::from_fn(g, |x, y| 3.0 * x * (1.0 - x) * y * (1.0 - y));
        let m = ViscosityModel::physical_sqrt(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let s = Scheme::new(&m, level(100), FaceRule::default());
        assert!(lp_a_gradk(&s, &k, 1.5).is_err());
        assert!(lp_a_gradk(&s, &k, 0.9).is_err());
        let opts = ReportOptions {
            p: 1.6,
            ..ReportOptions::default()
        };
        assert!(full_report(&k, &k, &k, &m, level(100), &opts).is_err());
        // ‖g‖_{p'} ≤ ‖g‖_p |Ω|^{1/p' − 1/p} on the face measure space of total mass 2|Ω|
        let (p1, p2) = (1.1, 1.4);
        let lo = lp_a_gradk(&s, &k, p1).unwrap();
        let hi = lp_a_gradk(&s, &k, p2).unwrap();
        let mass: f64 = g.faces().iter().map(|f| f.measure()).sum();
        assert!(lo <= hi * mass.powf(1.0 / p1 - 1.0 / p2) * (1.0 + 1e-12));
    }

    #[test]
    fn report_is_invariant_under_mirroring() {
        let g = Grid::unit_square(20).unwrap();
        let m = ViscosityModel::physical_sqrt(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let src = |x: f64, y: f64| 50.0 * (-((x - 0.3).powi(2) + (y - 0.6).powi(2)) / 0.02).exp();
        let f = ScalarField::from_fn(g, src);
        let f_mirror = ScalarField::from_fn(g, |x, y| src(1.0 - x, y));
        let cfg = PicardConfig::default();
        let a = picard_solve(&m, level(256), &f, &cfg).unwrap();
        let b = picard_solve(&m, level(256), &f_mirror, &cfg).unwrap();
        let ra = full_report(&a.u, &a.k, &f, &m, level(256), &ReportOptions::default()).unwrap();
        let rb = full_report(
            &b.u,
            &b.k,
            &f_mirror,
            &m,
            level(256),
            &ReportOptions::default(),
        )
        .unwrap();
        for (x, y) in ra.rows().iter().zip(rb.rows()) {
            match (x.value, y.value) {
                (Some(p), Some(q)) => {
                    assert!(
                        (p - q).abs() <= 1e-8 * p.abs().max(1e-6),
                        "{}: {p} vs {q}",
                        x.quantity
                    )
                }
                (p, q) => assert_eq!(p, q),
            }
        }
    }
}
