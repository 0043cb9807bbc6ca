//! Command-line orchestration: `solve`, `sweep`, `verify` and `mms`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::{ModelKind, TruncationLevel};
use crate::config::{manufactured_u, Route, RunConfig, SourcePreset, Validated};
use crate::error::{Error, Result};
use crate::fixedpoint::{
    chi_decoupled_solve, n_sweep, picard_solve, KUpdate, PicardConfig, SolveReport,
};
use crate::grid::{linf_norm, lp_norm, Grid, ScalarField};
use crate::io::{read_field, write_atomic, write_field, Cell, Csv};
use crate::verify::{full_report, InvariantReport};

#[derive(Debug, Parser)]
#[command(
    name = "turbsolve",
    version,
    about = "Truncated Picard solver for the coupled u-k system"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve at the largest truncation level of `n_list`.
    Solve(Common),
    /// Solve at every level of `n_list` and tabulate the stabilization.
    Sweep(Common),
    /// Check stored `u`/`k` dumps against the estimates.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Directory holding `u.txt` and `k.txt`; overrides `[verify]` paths.
        #[arg(long)]
        fields: Option<PathBuf>,
    },
    /// Manufactured-solution convergence table over `mms.sizes`.
    Mms(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent solves (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Self::Solve(c) | Self::Sweep(c) | Self::Mms(c) => c,
            Self::Verify { common, .. } => common,
        }
    }
}

/// Runs one subcommand and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let common = cli.command.common();
    let run = RunConfig::load(&common.config)?.validate()?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| run.config.output.dir.clone());
    fs::create_dir_all(&out)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut out_files = Outputs {
        dir: out,
        written: Vec::new(),
    };
    pool.install(|| match &cli.command {
        Command::Solve(_) => solve(&run, &mut out_files),
        Command::Sweep(_) => sweep(&run, &mut out_files),
        Command::Verify { fields, .. } => verify(&run, fields.as_deref(), &mut out_files),
        Command::Mms(_) => mms(&run, &mut out_files),
    })?;
    Ok(out_files.written)
}

struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let p = self.dir.join(name);
        write_atomic(&p, contents)?;
        self.written.push(p);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
        s.push('\n');
        self.text(name, &s)
    }

    fn field(&mut self, name: &str, f: &ScalarField) -> Result<()> {
        let p = self.dir.join(name);
        write_field(&p, f)?;
        self.written.push(p);
        Ok(())
    }
}

fn picard_for(run: &Validated) -> PicardConfig {
    let mut cfg = run.config.picard.clone();
    cfg.k_update = match run.config.route {
        Route::Kirchhoff => KUpdate::Kirchhoff,
        Route::Direct | Route::Chi => KUpdate::Direct,
    };
    cfg
}

fn source(run: &Validated, grid: Grid) -> Result<ScalarField> {
    run.config.source.preset.sample(grid, &run.model)
}

/// Solution of one level with its optional `χ` field.
struct Solved {
    u: ScalarField,
    k: ScalarField,
    chi: Option<ScalarField>,
    report: SolveReport,
}

fn solve_level(run: &Validated, f: &ScalarField, n: TruncationLevel) -> Result<Solved> {
    let cfg = picard_for(run);
    if run.config.route == Route::Chi {
        let s = chi_decoupled_solve(&run.model, n, f, &cfg)?;
        Ok(Solved {
            u: s.u,
            k: s.k,
            chi: Some(s.chi),
            report: s.report,
        })
    } else {
        let s = picard_solve(&run.model, n, f, &cfg)?;
        Ok(Solved {
            u: s.u,
            k: s.k,
            chi: None,
            report: s.report,
        })
    }
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    route: Route,
    solve: &'a SolveReport,
    invariants: &'a InvariantReport,
}

fn invariants_csv(rep: &InvariantReport) -> String {
    let mut csv = Csv::new(&["quantity", "value", "anchor"]);
    for row in rep.rows() {
        csv.row(&[
            Cell::Text(row.quantity),
            Cell::Opt(row.value),
            Cell::Text(row.anchor),
        ]);
    }
    csv.finish()
}

fn solve(run: &Validated, out: &mut Outputs) -> Result<()> {
    let f = source(run, run.grid)?;
    let n = *run.n_list.last().expect("validated non-empty");
    let s = solve_level(run, &f, n)?;
    let inv = full_report(&s.u, &s.k, &f, &run.model, n, &run.config.report_options())?;
    out.json(
        "solve.json",
        &SolveOutput {
            route: run.config.route,
            solve: &s.report,
            invariants: &inv,
        },
    )?;
    out.text("invariants.csv", &invariants_csv(&inv))?;
    if run.config.output.fields {
        out.field("u.txt", &s.u)?;
        out.field("k.txt", &s.k)?;
        if let Some(chi) = &s.chi {
            out.field("chi.txt", chi)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRecord {
    n: u64,
    error: Option<String>,
    diff_u: Option<f64>,
    diff_k: Option<f64>,
    solve: Option<SolveReport>,
    invariants: Option<InvariantReport>,
}

pub const SWEEP_COLUMNS: [&str; 18] = [
    "n",
    "converged",
    "outer_iterations",
    "final_increment",
    "truncation_active",
    "clamp_count",
    "linf_u",
    "linf_k",
    "energy",
    "dissipation",
    "diff_u",
    "diff_k",
    "energy_identity_residual",
    "idee_residual",
    "sqrt_nu_seminorm",
    "chi_linf",
    "error",
    "anchor",
];

const SWEEP_ANCHOR: &str =
    "truncated problem at level n; limits stabilize once truncation is inactive";

fn sweep(run: &Validated, out: &mut Outputs) -> Result<()> {
    let f = source(run, run.grid)?;
    let opts = run.config.report_options();
    // (n, last iterate or error)
    let levels: Vec<(TruncationLevel, std::result::Result<Solved, String>)> =
        if run.config.route == Route::Chi {
            run.n_list
                .par_iter()
                .map(|&n| (n, solve_level(run, &f, n).map_err(|e| e.to_string())))
                .collect()
        } else {
            n_sweep(&run.model, &f, &run.n_list, &picard_for(run))?
                .into_iter()
                .map(|e| {
                    let res = match (e.solution, e.error) {
                        (Some(s), _) => Ok(Solved {
                            u: s.u,
                            k: s.k,
                            chi: None,
                            report: s.report,
                        }),
                        (None, err) => Err(err.unwrap_or_default()),
                    };
                    (e.n, res)
                })
                .collect()
        };

    let mut csv = Csv::new(&SWEEP_COLUMNS);
    let mut records = Vec::with_capacity(levels.len());
    let mut prev: Option<(ScalarField, ScalarField)> = None;
    for (n, res) in levels {
        let mut rec = SweepRecord {
            n: n.get(),
            error: None,
            diff_u: None,
            diff_k: None,
            solve: None,
            invariants: None,
        };
        match res {
            Ok(s) => {
                if let Some((pu, pk)) = &prev {
                    rec.diff_u = Some(s.u.max_abs_diff(pu)?);
                    rec.diff_k = Some(s.k.max_abs_diff(pk)?);
                }
                if s.report.converged {
                    rec.invariants = Some(full_report(&s.u, &s.k, &f, &run.model, n, &opts)?);
                    prev = Some((s.u.clone(), s.k.clone()));
                } else {
                    rec.error = Some(format!(
                        "no convergence after {} iterations",
                        s.report.outer_iterations
                    ));
                }
                if run.config.output.fields {
                    out.field(&format!("u_n{}.txt", n.get()), &s.u)?;
                    out.field(&format!("k_n{}.txt", n.get()), &s.k)?;
                }
                rec.solve = Some(s.report);
            }
            Err(e) => rec.error = Some(e),
        }
        let inv = rec.invariants.as_ref();
        let rep = rec.solve.as_ref();
        csv.row(&[
            Cell::Int(rec.n),
            Cell::Bool(rep.is_some_and(|r| r.converged)),
            Cell::Int(rep.map_or(0, |r| r.outer_iterations as u64)),
            Cell::Opt(rep.map(|r| r.final_increment)),
            Cell::Bool(rep.is_some_and(|r| r.truncation_active)),
            Cell::Int(rep.map_or(0, |r| r.clamp_count as u64)),
            Cell::Opt(rep.map(|r| r.linf_u)),
            Cell::Opt(rep.map(|r| r.linf_k)),
            Cell::Opt(rep.map(|r| r.energy)),
            Cell::Opt(rep.map(|r| r.dissipation)),
            Cell::Opt(rec.diff_u),
            Cell::Opt(rec.diff_k),
            Cell::Opt(inv.map(|i| i.energy_identity_rel_residual)),
            Cell::Opt(inv.map(|i| i.idee_max_residual)),
            Cell::Opt(inv.map(|i| i.sqrt_nu_h1_seminorm)),
            Cell::Opt(inv.and_then(|i| i.chi_linf)),
            Cell::Text(rec.error.as_deref().unwrap_or("")),
            Cell::Text(SWEEP_ANCHOR),
        ]);
        records.push(rec);
    }
    out.text("sweep.csv", &csv.finish())?;
    out.json("sweep.json", &records)
}

fn verify(run: &Validated, fields: Option<&Path>, out: &mut Outputs) -> Result<()> {
    let (up, kp) = match fields {
        Some(dir) => (dir.join("u.txt"), dir.join("k.txt")),
        None => match (&run.config.verify.u, &run.config.verify.k) {
            (Some(u), Some(k)) => (u.clone(), k.clone()),
            _ => {
                return Err(Error::Config(
                    "verify needs --fields <dir> or both verify.u and verify.k".into(),
                ))
            }
        },
    };
    let u = read_field(&up)?;
    let k = read_field(&kp)?;
    if u.grid() != k.grid() {
        return Err(Error::GridMismatch);
    }
    let n = match run.config.verify.n {
        Some(n) => TruncationLevel::new(n)?,
        None => *run.n_list.last().expect("validated non-empty"),
    };
    let f = source(run, *u.grid())?;
    let inv = full_report(&u, &k, &f, &run.model, n, &run.config.report_options())?;
    out.json("verify.json", &inv)?;
    out.text("invariants.csv", &invariants_csv(&inv))
}

#[derive(Serialize)]
struct MmsRow {
    nx: usize,
    ny: usize,
    h: f64,
    err_linf: f64,
    ratio_linf: Option<f64>,
    err_l2: f64,
    ratio_l2: Option<f64>,
    outer_iterations: usize,
}

pub const MMS_COLUMNS: [&str; 9] = [
    "nx",
    "ny",
    "h",
    "err_linf",
    "ratio_linf",
    "err_l2",
    "ratio_l2",
    "outer_iterations",
    "anchor",
];

const MMS_ANCHOR: &str = "second-order consistency against the exact manufactured solution";

fn mms(run: &Validated, out: &mut Outputs) -> Result<()> {
    if !matches!(run.model.kind(), ModelKind::Constant { .. }) {
        return Err(Error::Config("mms needs model.kind = \"constant\"".into()));
    }
    let sizes = &run.config.mms.sizes;
    if sizes.len() < 2 || sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "mms.sizes must hold at least two ascending sizes".into(),
        ));
    }
    let n = *run.n_list.last().expect("validated non-empty");
    let cfg = picard_for(run);
    let (lx, ly) = (run.config.grid.lx, run.config.grid.ly);
    let solved: Vec<(Grid, usize, f64, f64)> = sizes
        .par_iter()
        .map(|&s| {
            let g = Grid::new(s, s, lx, ly)?;
            let f = SourcePreset::Manufactured.sample(g, &run.model)?;
            let sol = picard_solve(&run.model, n, &f, &cfg)?;
            let err = sol.u.zip_map(&manufactured_u(g), |a, b| a - b)?;
            Ok((
                g,
                sol.report.outer_iterations,
                linf_norm(&err),
                lp_norm(&err, 2.0)?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<MmsRow> = Vec::with_capacity(solved.len());
    for (g, its, e_inf, e_2) in solved {
        let prev = rows.last();
        rows.push(MmsRow {
            nx: g.nx(),
            ny: g.ny(),
            h: g.hx().max(g.hy()),
            err_linf: e_inf,
            ratio_linf: prev.map(|p| p.err_linf / e_inf),
            err_l2: e_2,
            ratio_l2: prev.map(|p| p.err_l2 / e_2),
            outer_iterations: its,
        });
    }
    let mut csv = Csv::new(&MMS_COLUMNS);
    for r in &rows {
        csv.row(&[
            Cell::Int(r.nx as u64),
            Cell::Int(r.ny as u64),
            Cell::Num(r.h),
            Cell::Num(r.err_linf),
            Cell::Opt(r.ratio_linf),
            Cell::Num(r.err_l2),
            Cell::Opt(r.ratio_l2),
            Cell::Int(r.outer_iterations as u64),
            Cell::Text(MMS_ANCHOR),
        ]);
    }
    out.text("mms.csv", &csv.finish())?;
    out.json("mms.json", &rows)
}
