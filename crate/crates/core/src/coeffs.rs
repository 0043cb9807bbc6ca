//! Viscosity pair `(ν, a)`, truncations, the cutoff family `h_q`, and the
//! Kirchhoff transform `A(s) = ∫_0^s a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation index `n ≥ 1`; `T_n(t) = min(n, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct TruncationLevel(u64);

impl TruncationLevel {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("truncation level must be at least 1".into()));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn cap(self) -> f64 {
        self.0 as f64
    }
}

impl TryFrom<u64> for TruncationLevel {
    type Error = Error;
    fn try_from(n: u64) -> Result<Self> {
        Self::new(n)
    }
}

impl From<TruncationLevel> for u64 {
    fn from(n: TruncationLevel) -> u64 {
        n.0
    }
}

pub fn truncate(t: f64, n: TruncationLevel) -> f64 {
    t.min(n.cap())
}

/// Piecewise-linear cutoff: 1 on `|s| ≤ q`, `(2q − |s|)/q` on `q < |s| ≤ 2q`,
/// 0 beyond. Lipschitz constant `1/q`.
pub fn cutoff_hq(s: f64, q: u32) -> f64 {
    assert!(q >= 1, "cutoff index must be positive");
    let q = q as f64;
    let a = s.abs();
    if a <= q {
        1.0
    } else if a <= 2.0 * q {
        (2.0 * q - a) / q
    } else {
        0.0
    }
}

/// Selects one of the two coefficient functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coef {
    Nu,
    A,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// `ν(s) = ν₁ + ν₂√s`, `a(s) = a₁ + a₂√s`.
    PhysicalSqrt {
        nu1: f64,
        nu2: f64,
        a1: f64,
        a2: f64,
    },
    Constant {
        nu: f64,
        a: f64,
    },
    /// Linear interpolation on ascending nodes starting at `s = 0`, constant
    /// beyond the last node, floored at `delta`.
    Table {
        s: Vec<f64>,
        nu: Vec<f64>,
        a: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViscosityModel {
    kind: ModelKind,
    delta: f64,
    gamma: Option<f64>,
}

/// Sample points used for hypothesis checks on `[0, ∞)`.
pub fn hypothesis_samples() -> Vec<f64> {
    let mut s = vec![0.0];
    s.extend((0..100).map(|k| 10f64.powf(-6.0 + 12.0 * k as f64 / 99.0)));
    s
}

impl ViscosityModel {
    /// Validates the floor `ν, a ≥ δ` and detects `a = γν`.
    pub fn new(kind: ModelKind, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Hypothesis {
                name: "H0",
                detail: format!("floor delta must be positive, got {delta}"),
            });
        }
        match &kind {
            ModelKind::PhysicalSqrt { nu1, nu2, a1, a2 } => {
                for (name, v) in [("nu1", nu1), ("nu2", nu2), ("a1", a1), ("a2", a2)] {
                    if !(*v >= 0.0 && v.is_finite()) {
                        return Err(Error::Hypothesis {
                            name: "H0",
                            detail: format!("{name} must be a finite non-negative number, got {v}"),
                        });
                    }
                }
                if *nu1 < delta || *a1 < delta {
                    return Err(Error::Hypothesis {
                        name: "H0",
                        detail: format!(
                            "nu(0) = {nu1} and a(0) = {a1} must both be at least delta = {delta}"
                        ),
                    });
                }
            }
            ModelKind::Constant { nu, a } => {
                if !(*nu >= delta && *a >= delta && nu.is_finite() && a.is_finite()) {
                    return Err(Error::Hypothesis {
                        name: "H0",
                        detail: format!(
                            "constants nu = {nu}, a = {a} must be at least delta = {delta}"
                        ),
                    });
                }
            }
            ModelKind::Table { s, nu, a } => {
                if s.is_empty() || s.len() != nu.len() || s.len() != a.len() {
                    return Err(Error::Config(
                        "table columns must be non-empty and equally long".into(),
                    ));
                }
                if s[0] != 0.0 || s.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Config(
                        "table nodes must start at 0 and increase strictly".into(),
                    ));
                }
                for col in [nu, a] {
                    if col.iter().any(|v| !v.is_finite()) || col.windows(2).any(|w| w[1] < w[0]) {
                        return Err(Error::Config(
                            "table values must be finite and non-decreasing".into(),
                        ));
                    }
                }
            }
        }
        let mut model = Self {
            kind,
            delta,
            gamma: None,
        };
        model.gamma = model.detect_proportionality();
        Ok(model)
    }

    pub fn physical_sqrt(nu1: f64, nu2: f64, a1: f64, a2: f64, delta: f64) -> Result<Self> {
        Self::new(ModelKind::PhysicalSqrt { nu1, nu2, a1, a2 }, delta)
    }

    pub fn constant(nu: f64, a: f64, delta: f64) -> Result<Self> {
        Self::new(ModelKind::Constant { nu, a }, delta)
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `γ` with `a = γν` everywhere, if the model has that structure.
    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    fn detect_proportionality(&self) -> Option<f64> {
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0);
        match &self.kind {
            ModelKind::PhysicalSqrt { nu1, nu2, a1, a2 } => {
                let g = a1 / nu1;
                close(*a2, g * nu2).then_some(g)
            }
            ModelKind::Constant { nu, a } => Some(a / nu),
            ModelKind::Table { .. } => {
                let samples = hypothesis_samples();
                let g = self.a_unchecked(0.0) / self.nu_unchecked(0.0);
                samples
                    .iter()
                    .all(|&s| close(self.a_unchecked(s), g * self.nu_unchecked(s)))
                    .then_some(g)
            }
        }
    }

    /// Requires `a = γν` for the χ-route.
    pub fn require_proportional(&self) -> Result<f64> {
        self.gamma.ok_or_else(|| Error::Hypothesis {
            name: "H2",
            detail: "a(s) = gamma * nu(s) does not hold for this model".into(),
        })
    }

    /// `min a(s)/ν(s)` over the hypothesis samples.
    pub fn min_ratio(&self) -> f64 {
        hypothesis_samples()
            .into_iter()
            .map(|s| self.a_unchecked(s) / self.nu_unchecked(s))
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks `a(s) ≥ γ ν(s)` at every sample.
    pub fn check_ratio_floor(&self, gamma: f64) -> Result<()> {
        if !(gamma > 0.0) {
            return Err(Error::Hypothesis {
                name: "H1",
                detail: format!("gamma must be positive, got {gamma}"),
            });
        }
        for s in hypothesis_samples() {
            let (a, nu) = (self.a_unchecked(s), self.nu_unchecked(s));
            if a < gamma * nu * (1.0 - 1e-14) {
                return Err(Error::Hypothesis {
                    name: "H1",
                    detail: format!("a({s:e}) = {a} < gamma * nu = {}", gamma * nu),
                });
            }
        }
        Ok(())
    }

    fn nu_unchecked(&self, s: f64) -> f64 {
        match &self.kind {
            ModelKind::PhysicalSqrt { nu1, nu2, .. } => nu1 + nu2 * s.sqrt(),
            ModelKind::Constant { nu, .. } => *nu,
            ModelKind::Table { s: nodes, nu, .. } => interp(nodes, nu, s).max(self.delta),
        }
    }

    fn a_unchecked(&self, s: f64) -> f64 {
        match &self.kind {
            ModelKind::PhysicalSqrt { a1, a2, .. } => a1 + a2 * s.sqrt(),
            ModelKind::Constant { a, .. } => *a,
            ModelKind::Table { s: nodes, a, .. } => interp(nodes, a, s).max(self.delta),
        }
    }

    pub fn nu(&self, s: f64) -> Result<f64> {
        check_nonneg(s)?;
        Ok(self.nu_unchecked(s))
    }

    pub fn a(&self, s: f64) -> Result<f64> {
        check_nonneg(s)?;
        Ok(self.a_unchecked(s))
    }

    /// `ν_n = T_n ∘ ν`.
    pub fn nu_n(&self, s: f64, n: TruncationLevel) -> Result<f64> {
        Ok(truncate(self.nu(s)?, n))
    }

    /// `a_n = T_n ∘ a`.
    pub fn a_n(&self, s: f64, n: TruncationLevel) -> Result<f64> {
        Ok(truncate(self.a(s)?, n))
    }

    /// `A(s) = ∫_0^s a`.
    pub fn kirchhoff(&self, s: f64) -> Result<f64> {
        check_nonneg(s)?;
        Ok(self.primitive(Coef::A, s, None))
    }

    /// `A_n(s) = ∫_0^s T_n(a)`. Equals `A(s)` whenever `a ≤ n` on `[0, s]`.
    pub fn kirchhoff_n(&self, s: f64, n: TruncationLevel) -> Result<f64> {
        check_nonneg(s)?;
        Ok(self.primitive(Coef::A, s, Some(n.cap())))
    }

    /// `∫_0^s min(cap, c)`.
    fn primitive(&self, which: Coef, s: f64, cap: Option<f64>) -> f64 {
        let cap = cap.unwrap_or(f64::INFINITY);
        match &self.kind {
            ModelKind::PhysicalSqrt { nu1, nu2, a1, a2 } => {
                let (c0, c1) = match which {
                    Coef::Nu => (*nu1, *nu2),
                    Coef::A => (*a1, *a2),
                };
                let exact = |x: f64| c0 * x + 2.0 / 3.0 * c1 * x * x.sqrt();
                if c0 >= cap {
                    cap * s
                } else if c1 == 0.0 || cap.is_infinite() {
                    exact(s)
                } else {
                    let knee = ((cap - c0) / c1).powi(2);
                    if s <= knee {
                        exact(s)
                    } else {
                        exact(knee) + cap * (s - knee)
                    }
                }
            }
            ModelKind::Constant { nu, a } => {
                let c = match which {
                    Coef::Nu => *nu,
                    Coef::A => *a,
                };
                c.min(cap) * s
            }
            ModelKind::Table { s: nodes, .. } => self.table_integral(which, nodes, s, cap),
        }
    }

    /// Mean of `T_n(c)` over the interval between `s` and `t`, for `c` one of
    /// `ν`, `a`. Equals `(C_n(t) − C_n(s))/(t − s)` with `C_n` the primitive,
    /// so a flux built from it is a difference of transformed values.
    pub fn interval_mean(&self, which: Coef, s: f64, t: f64, n: TruncationLevel) -> Result<f64> {
        check_nonneg(s)?;
        check_nonneg(t)?;
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        let cap = n.cap();
        let eval = |x: f64| match which {
            Coef::Nu => self.nu_unchecked(x),
            Coef::A => self.a_unchecked(x),
        };
        let (c_lo, c_hi) = (eval(lo), eval(hi));
        if c_lo >= cap {
            return Ok(cap);
        }
        if let (ModelKind::PhysicalSqrt { nu1, nu2, a1, a2 }, true) = (&self.kind, c_hi <= cap) {
            let (c0, c1) = match which {
                Coef::Nu => (nu1, nu2),
                Coef::A => (a1, a2),
            };
            let (rl, rh) = (lo.sqrt(), hi.sqrt());
            if rl + rh == 0.0 {
                return Ok(*c0);
            }
            // (2/3)(hi^{3/2} − lo^{3/2})/(hi − lo) without cancellation
            return Ok(c0 + c1 * 2.0 / 3.0 * (lo + rl * rh + hi) / (rl + rh));
        }
        if hi - lo <= 1e-9 * (1.0 + hi) {
            return Ok(truncate(eval(0.5 * (lo + hi)), n));
        }
        let prim = |x| self.primitive(which, x, Some(cap));
        Ok((prim(hi) - prim(lo)) / (hi - lo))
    }

    /// Inverse of [`Self::kirchhoff`].
    pub fn kirchhoff_inv(&self, big_s: f64) -> Result<f64> {
        check_nonneg(big_s)?;
        invert_increasing(
            big_s,
            self.delta,
            |s| self.kirchhoff(s).unwrap(),
            |s| self.a_unchecked(s),
        )
    }

    /// Inverse of [`Self::kirchhoff_n`].
    pub fn kirchhoff_n_inv(&self, big_s: f64, n: TruncationLevel) -> Result<f64> {
        check_nonneg(big_s)?;
        let floor = self.delta.min(n.cap());
        invert_increasing(
            big_s,
            floor,
            |s| self.kirchhoff_n(s, n).unwrap(),
            |s| truncate(self.a_unchecked(s), n),
        )
    }

    fn table_integral(&self, which: Coef, nodes: &[f64], s: f64, cap: f64) -> f64 {
        let f = |t: f64| {
            let c = match which {
                Coef::Nu => self.nu_unchecked(t),
                Coef::A => self.a_unchecked(t),
            };
            c.min(cap)
        };
        // integrate panel by panel so the interpolation kinks sit on panel ends
        let mut total = 0.0;
        let mut lo = 0.0;
        for &node in nodes.iter().skip(1).chain(std::iter::once(&f64::INFINITY)) {
            let hi = node.min(s);
            if hi > lo {
                total += adaptive_simpson(&f, lo, hi, 1e-13 * (1.0 + f(lo).abs() * (hi - lo)), 48);
            }
            if node >= s {
                break;
            }
            lo = node;
        }
        total
    }
}

fn check_nonneg(s: f64) -> Result<()> {
    if s >= 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "turbulent kinetic energy must be a finite non-negative number",
            value: s,
        })
    }
}

fn interp(nodes: &[f64], vals: &[f64], s: f64) -> f64 {
    match nodes.partition_point(|&x| x <= s) {
        0 => vals[0],
        k if k == nodes.len() => vals[k - 1],
        k => {
            let t = (s - nodes[k - 1]) / (nodes[k] - nodes[k - 1]);
            vals[k - 1] + t * (vals[k] - vals[k - 1])
        }
    }
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)
}

/// Solves `F(s) = target` for increasing `F` with `F(0) = 0`, `F' ≥ floor`.
/// The root lies in `[0, target/floor]`; Newton steps that leave the current
/// bracket fall back to bisection.
fn invert_increasing(
    target: f64,
    floor: f64,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
) -> Result<f64> {
    if target == 0.0 {
        return Ok(0.0);
    }
    let tol = 1e-12 * target.max(1.0);
    let (mut lo, mut hi) = (0.0, target / floor);
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let r = f(s) - target;
        if r.abs() <= tol {
            // one extra Newton step, kept only if it helps
            let polished = s - r / df(s);
            if polished >= 0.0 && (f(polished) - target).abs() < r.abs() {
                return Ok(polished);
            }
            return Ok(s);
        }
        if r > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let newton = s - r / df(s);
        s = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi {
            return Ok(s);
        }
    }
    Err(Error::Domain {
        what: "Kirchhoff inverse failed to converge",
        value: target,
    })
}
