//! Organic links: consumers on the platform also see the off-platform offer
//! of every seller, so a sponsored seller must leave at least the rent its
//! rivals offer off the platform.
//!
//! The symmetric equilibrium solves the two-point problem
//!
//! ```text
//! Û' = q̂,   γ = (q̂ - θ) a,   γ' = a + b - K S / q̂,
//! S = α θ²/2 + (1 - α)(θ q̂ - q̂²/2) - Û,
//! Û(θ_L) = 0,   γ(θ_H) = 0,
//! ```
//!
//! with `a = (1-λ)G^{J-1}g`, `b = λF^{J-1}f`, `K = λ(J-1)F^{J-2}f²`. It is
//! discretized on the market grid and solved as one sparse Newton system,
//! first in `ln q̂` with continuation from a small platform, then, once
//! exclusion can appear, as a complementarity system in `(Û, q̂, γ)`.

use crate::band::Band;
use crate::error::{Error, Result};
use crate::num::{cumtrapz, dot, pav};
use crate::screening::{rent_from_quality, Channel, Market, MarketConfig, Schedule};
use crate::surplus::{
    consumer_surplus, efficient_on, outside_option_baseline, seller_gross_profit, EquilibriumReport,
};

use super::symmetric::mixture_measure;
use crate::measure::{Measure, SellerProblem};

const LAMBDA_START: f64 = 0.01;
/// Below this kink weight the log form is abandoned for the complementarity form.
const ALPHA_SWITCH: f64 = 0.1;
const NEWTON_TOL: f64 = 1e-12;
const MAX_NEWTON: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OrganicStats {
    pub newton_iterations: usize,
    pub lambda_steps: usize,
    pub alpha_steps: usize,
    /// Euclidean norm of the discrete system at the returned point.
    pub equation_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrganicSolution {
    /// Raw solution of the boundary problem; quality may overshoot θ_H in a
    /// thin layer below the top.
    pub schedule: Schedule,
    pub gamma: Vec<f64>,
    pub alpha: f64,
    pub lambda: f64,
    /// `|Û(θ_L)|` at the solution.
    pub residual: f64,
    /// Largest θ with zero quality, if any type is excluded.
    pub excluded_below: Option<f64>,
    pub stats: OrganicStats,
}

impl OrganicSolution {
    /// Monotone version of the quality schedule with rents recomputed from it.
    pub fn ironed(&self) -> Schedule {
        let w = vec![1.0; self.schedule.len()];
        let q: Vec<f64> = pav(&self.schedule.q, &w).into_iter().map(|v| v.max(0.0)).collect();
        let u = rent_from_quality(&self.schedule.theta, &q, None);
        Schedule::new(Channel::Off, self.schedule.theta.clone(), q, u)
    }

    /// `max_k |γ(θ_H)|`.
    pub fn transversality(&self) -> f64 {
        self.gamma.last().copied().unwrap_or(0.0).abs()
    }
}

struct Coef {
    a: Vec<f64>,
    b: Vec<f64>,
    k: Vec<f64>,
}

impl Coef {
    fn new(m: &Market, lam: f64) -> Self {
        let j = m.cfg.j as i32;
        let n = m.grid.len();
        let (mut a, mut b, mut k) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            let (fc, fp) = (m.tf.cdf[i], m.tf.pdf[i]);
            let (gc, gp) = (m.tg.cdf[i], m.tg.pdf[i]);
            a[i] = (1.0 - lam) * gc.powi(j - 1) * gp;
            b[i] = lam * fc.powi(j - 1) * fp;
            k[i] = lam * (j - 1) as f64 * fc.powi(j - 2) * fp * fp;
        }
        Self { a, b, k }
    }
}

/// Newton with Armijo backtracking on the Euclidean norm. `shape` rescales or
/// projects a trial step in place. When backtracking fails, up to `jumps`
/// full steps are taken anyway: projecting tiny qualities onto zero makes the
/// residual jump, and plain semi-smooth steps get past that.
fn newton<R, J, S>(x0: Vec<f64>, resid: R, jac: J, shape: S, mut jumps: usize) -> (Vec<f64>, bool, usize, f64)
where
    R: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> Band,
    S: Fn(&[f64], &mut [f64], f64),
{
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = x0;
    let mut nr = norm(&resid(&x));
    for it in 0..MAX_NEWTON {
        if nr < NEWTON_TOL {
            return (x, true, it, nr);
        }
        if !nr.is_finite() {
            return (x, false, it, nr);
        }
        let r = resid(&x);
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let Some(dx) = jac(&x).solve(&rhs) else {
            return (x, false, it, nr);
        };
        let mut t = 1.0;
        loop {
            let mut xn: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + t * b).collect();
            shape(&x, &mut xn, t);
            let rn = norm(&resid(&xn));
            if rn.is_finite() && rn < (1.0 - 1e-4 * t) * nr {
                x = xn;
                nr = rn;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                if jumps == 0 {
                    return (x, nr < 1e3 * NEWTON_TOL, it, nr);
                }
                jumps -= 1;
                let mut xn: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
                shape(&x, &mut xn, 1.0);
                nr = norm(&resid(&xn));
                x = xn;
                break;
            }
        }
    }
    (x, nr < NEWTON_TOL, MAX_NEWTON, nr)
}

/// Log form: unknowns interleaved as `(Û_k, ln q̂_k)`.
struct LogForm<'a> {
    th: &'a [f64],
    h: f64,
    c: &'a Coef,
    alpha: f64,
}

impl LogForm<'_> {
    fn s(&self, k: usize, u: f64, q: f64) -> f64 {
        let t = self.th[k];
        self.alpha * t * t / 2.0 + (1.0 - self.alpha) * (t * q - q * q / 2.0) - u
    }

    fn resid(&self, x: &[f64]) -> Vec<f64> {
        let n = self.th.len();
        let c = self.c;
        let u = |k: usize| x[2 * k];
        let q = |k: usize| x[2 * k + 1].exp();
        let gam = |k: usize| (q(k) - self.th[k]) * c.a[k];
        let mut r = vec![0.0; 2 * n];
        r[0] = u(0);
        r[1] = x[1] - x[3];
        for k in 1..n {
            r[2 * k] = u(k) - u(k - 1) - self.h * q(k);
        }
        for k in 1..n - 1 {
            let rk = c.a[k] + c.b[k] - c.k[k] * self.s(k, u(k), q(k)) / q(k);
            r[2 * k + 1] = gam(k + 1) - gam(k) - self.h * rk;
        }
        r[2 * n - 1] = q(n - 1) - self.th[n - 1];
        r
    }

    fn jac(&self, x: &[f64]) -> Band {
        let n = self.th.len();
        let c = self.c;
        let mut m = Band::zeros(2 * n, 2, 2);
        m.add(0, 0, 1.0);
        m.add(1, 1, 1.0);
        m.add(1, 3, -1.0);
        for k in 1..n {
            let i = 2 * k;
            m.add(i, 2 * k, 1.0);
            m.add(i, 2 * k - 2, -1.0);
            m.add(i, 2 * k + 1, -self.h * x[2 * k + 1].exp());
        }
        for k in 1..n - 1 {
            let i = 2 * k + 1;
            let (u, q, q1) = (x[2 * k], x[2 * k + 1].exp(), x[2 * k + 3].exp());
            let s = self.s(k, u, q);
            let ds = (1.0 - self.alpha) * (self.th[k] - q);
            let dr_du = c.k[k] / q;
            let dr_dq = -c.k[k] * (ds * q - s) / (q * q);
            m.add(i, 2 * k + 3, c.a[k + 1] * q1);
            m.add(i, 2 * k + 1, (-c.a[k] - self.h * dr_dq) * q);
            m.add(i, 2 * k, -self.h * dr_du);
        }
        m.add(2 * n - 1, 2 * n - 1, x[2 * n - 1].exp());
        m
    }

    fn solve(&self, x0: Vec<f64>) -> (Vec<f64>, bool, usize, f64) {
        newton(
            x0,
            |x| self.resid(x),
            |x| self.jac(x),
            |x, xn, t| {
                // cap the move in ln q̂ at 2
                let big = (0..x.len() / 2).map(|k| (xn[2 * k + 1] - x[2 * k + 1]).abs()).fold(0.0, f64::max);
                if big > 2.0 * t.max(1.0) {
                    let s = 2.0 / big;
                    for (a, b) in xn.iter_mut().zip(x) {
                        *a = b + s * (*a - b);
                    }
                }
            },
            0,
        )
    }
}

/// Complementarity form: unknowns `(Û_k, q̂_k, γ_k)` with
/// `min(q̂, a(q̂ - θ) - γ) = 0` in place of the interior condition.
struct SemiForm<'a> {
    th: &'a [f64],
    h: f64,
    c: &'a Coef,
    alpha: f64,
}

impl SemiForm<'_> {
    fn floor(&self) -> f64 {
        if self.alpha > 0.0 {
            1e-14
        } else {
            0.0
        }
    }

    /// `S/q̂` with its partials in `q̂` and `Û`.
    fn sigma(&self, k: usize, u: f64, q: f64) -> (f64, f64, f64) {
        let t = self.th[k];
        let al = self.alpha;
        if q <= 0.0 {
            return ((1.0 - al) * t, 0.0, 0.0);
        }
        let v = al * t * t / (2.0 * q) + (1.0 - al) * (t - q / 2.0) - u / q;
        let dq = -al * t * t / (2.0 * q * q) - (1.0 - al) / 2.0 + u / (q * q);
        (v, dq, -1.0 / q)
    }

    fn resid(&self, x: &[f64]) -> Vec<f64> {
        let n = self.th.len();
        let c = self.c;
        let mut r = vec![0.0; 3 * n];
        r[0] = x[0];
        for k in 1..n {
            r[3 * k] = x[3 * k] - x[3 * k - 3] - self.h * x[3 * k + 1];
        }
        for k in 0..n - 1 {
            let (sg, _, _) = self.sigma(k, x[3 * k], x[3 * k + 1]);
            let rk = c.a[k] + c.b[k] - c.k[k] * sg;
            r[3 * k + 1] = x[3 * k + 5] - x[3 * k + 2] - self.h * rk;
        }
        r[3 * n - 2] = x[3 * n - 1];
        r[2] = x[1] - x[4];
        for k in 1..n {
            let q = x[3 * k + 1];
            r[3 * k + 2] = q.min(c.a[k] * (q - self.th[k]) - x[3 * k + 2]);
        }
        r
    }

    fn jac(&self, x: &[f64]) -> Band {
        let n = self.th.len();
        let c = self.c;
        let mut m = Band::zeros(3 * n, 3, 4);
        m.add(0, 0, 1.0);
        for k in 1..n {
            m.add(3 * k, 3 * k, 1.0);
            m.add(3 * k, 3 * k - 3, -1.0);
            m.add(3 * k, 3 * k + 1, -self.h);
        }
        for k in 0..n - 1 {
            let i = 3 * k + 1;
            let (_, dq, du) = self.sigma(k, x[3 * k], x[3 * k + 1]);
            m.add(i, 3 * k + 5, 1.0);
            m.add(i, 3 * k + 2, -1.0);
            m.add(i, 3 * k + 1, self.h * c.k[k] * dq);
            m.add(i, 3 * k, self.h * c.k[k] * du);
        }
        m.add(3 * n - 2, 3 * n - 1, 1.0);
        m.add(2, 1, 1.0);
        m.add(2, 4, -1.0);
        for k in 1..n {
            let i = 3 * k + 2;
            let q = x[3 * k + 1];
            if q <= c.a[k] * (q - self.th[k]) - x[3 * k + 2] {
                m.add(i, 3 * k + 1, 1.0);
            } else {
                m.add(i, 3 * k + 1, c.a[k]);
                m.add(i, 3 * k + 2, -1.0);
            }
        }
        m
    }

    fn solve(&self, x0: Vec<f64>) -> (Vec<f64>, bool, usize, f64) {
        let lo = self.floor();
        newton(
            x0,
            |x| self.resid(x),
            |x| self.jac(x),
            |_, xn, _| {
                for k in 0..xn.len() / 3 {
                    xn[3 * k + 1] = xn[3 * k + 1].max(lo);
                }
            },
            3,
        )
    }
}

/// Starting point at a small platform: the baseline bracket, raised where the
/// kink term alone would call for more quality.
fn initial_guess(m: &Market, lam: f64, c: &Coef) -> Vec<f64> {
    let th = m.theta();
    let n = th.len();
    let h = th[1] - th[0];
    let j = m.cfg.j as i32;
    let jf = m.cfg.j as f64;
    let qb: Vec<f64> = (0..n)
        .map(|k| {
            let den = (1.0 - lam) * jf * m.tg.cdf[k].powi(j - 1) * m.tg.pdf[k];
            let num = 1.0 - lam * m.tf.cdf[k].powi(j) - (1.0 - lam) * m.tg.cdf[k].powi(j);
            if den > 0.0 {
                th[k] - num / den
            } else {
                -1.0
            }
        })
        .collect();
    let rents = |q: &[f64]| {
        let mut u = vec![0.0; n];
        for k in 1..n {
            u[k] = u[k - 1] + h * q[k - 1];
        }
        u
    };
    let mut q: Vec<f64> = qb.iter().map(|v| v.max(1e-12)).collect();
    q[n - 1] = th[n - 1];
    let mut u = rents(&q);
    for _ in 0..5 {
        for k in 0..n {
            let s = th[k] * th[k] / 2.0 - u[k];
            let qa = (c.k[k] * s.max(0.0) / (c.a[k] + c.b[k] + 1e-12)).max(1e-12);
            q[k] = qb[k].max(qa);
        }
        q[n - 1] = th[n - 1];
        u = rents(&q);
    }
    let mut x = vec![0.0; 2 * n];
    for k in 0..n {
        x[2 * k] = u[k];
        x[2 * k + 1] = q[k].ln();
    }
    x
}

fn solver_error(stage: &str, at: f64, norm: f64) -> Error {
    Error::Solver(format!("organic-links Newton failed in {stage} at {at}: residual norm {norm:.3e}"))
}

/// Solves the organic-links equilibrium for kink weight `alpha`.
pub fn organic_equilibrium(cfg: &MarketConfig, alpha: f64) -> Result<OrganicSolution> {
    let m = Market::new(cfg)?;
    solve_market(&m, alpha)
}

fn solve_market(m: &Market, alpha: f64) -> Result<OrganicSolution> {
    let cfg = &m.cfg;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("kink weight {alpha} outside [0, 1]")));
    }
    if cfg.lambda >= 1.0 {
        return Err(Error::Regime("organic links need an off-platform market (lambda < 1)".into()));
    }
    if cfg.j < 2 {
        return Err(Error::Regime("organic links need at least two sellers".into()));
    }
    if !cfg.f.has_density() || !cfg.g.has_density() {
        return Err(Error::Unsupported("organic links need F and G with densities".into()));
    }
    let th = m.theta();
    let n = th.len();
    if n < 5 {
        return Err(Error::Domain("organic links need at least five grid points".into()));
    }
    let h = th[1] - th[0];
    let lam_t = cfg.lambda;

    if lam_t == 0.0 {
        let b = m.baseline()?;
        let c = Coef::new(m, 0.0);
        let gamma = (0..n).map(|k| (b.off.q[k] - th[k]) * c.a[k]).collect();
        let excluded_below = last_zero(th, &b.off.q);
        return Ok(OrganicSolution {
            schedule: b.off,
            gamma,
            alpha,
            lambda: 0.0,
            residual: 0.0,
            excluded_below,
            stats: OrganicStats::default(),
        });
    }

    let mut stats = OrganicStats::default();
    let mut lam = LAMBDA_START.min(lam_t);
    let mut coef = Coef::new(m, lam);
    let log = |c: &Coef, al: f64, x: Vec<f64>| LogForm { th, h, c, alpha: al }.solve(x);
    let (mut x, ok, it, nr) = log(&coef, 1.0, initial_guess(m, lam, &coef));
    stats.newton_iterations += it;
    if !ok {
        return Err(solver_error("the small-platform start, lambda", lam, nr));
    }

    let mut dl: f64 = 0.02;
    while lam < lam_t {
        let nl = (lam + dl.min(0.5 * lam)).min(lam_t);
        let c = Coef::new(m, nl);
        let (xn, ok, it, nr) = log(&c, 1.0, x.clone());
        stats.newton_iterations += it;
        if ok {
            x = xn;
            lam = nl;
            coef = c;
            stats.lambda_steps += 1;
        } else {
            dl /= 2.0;
            if dl < 1e-6 {
                return Err(solver_error("platform-size continuation, lambda", nl, nr));
            }
        }
    }

    let mut al = 1.0;
    let floor = alpha.max(ALPHA_SWITCH);
    let mut da: f64 = 0.1;
    while al > floor {
        let na = (al - da).max(floor);
        let (xn, ok, it, _) = log(&coef, na, x.clone());
        stats.newton_iterations += it;
        if ok {
            x = xn;
            al = na;
            stats.alpha_steps += 1;
        } else {
            da /= 2.0;
            if da < 1e-4 {
                break;
            }
        }
    }

    let (mut u, mut q, mut gamma);
    if al <= alpha {
        u = (0..n).map(|k| x[2 * k]).collect::<Vec<_>>();
        q = (0..n).map(|k| x[2 * k + 1].exp()).collect::<Vec<_>>();
        gamma = (0..n).map(|k| (q[k] - th[k]) * coef.a[k]).collect::<Vec<_>>();
        stats.equation_residual = LogForm { th, h, c: &coef, alpha: al }
            .resid(&x)
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
    } else {
        let mut y = vec![0.0; 3 * n];
        for k in 0..n {
            let qk = x[2 * k + 1].exp();
            y[3 * k] = x[2 * k];
            y[3 * k + 1] = qk;
            y[3 * k + 2] = (qk - th[k]) * coef.a[k];
        }
        let semi = |al: f64, y: Vec<f64>| SemiForm { th, h, c: &coef, alpha: al }.solve(y);
        let mut da = al - alpha;
        let mut last_nr = f64::NAN;
        while al > alpha {
            let na = (al - da).max(alpha);
            let (yn, ok, it, nr) = semi(na, y.clone());
            stats.newton_iterations += it;
            last_nr = nr;
            if ok {
                y = yn;
                al = na;
                stats.alpha_steps += 1;
            } else {
                da /= 2.0;
                if da < 1e-5 {
                    return Err(solver_error("kink-weight continuation, alpha", na, last_nr));
                }
            }
        }
        let _ = last_nr;
        stats.equation_residual = SemiForm { th, h, c: &coef, alpha }
            .resid(&y)
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        u = (0..n).map(|k| y[3 * k]).collect();
        q = (0..n).map(|k| y[3 * k + 1]).collect();
        gamma = (0..n).map(|k| y[3 * k + 2]).collect();
    }
    // the system pins q̂(θ_H) = θ_H and γ(θ_H) = 0; clean rounding
    q[n - 1] = th[n - 1];
    gamma[n - 1] = 0.0;
    let residual = u[0].abs();
    u[0] = 0.0;
    let excluded_below = last_zero(th, &q);
    Ok(OrganicSolution {
        schedule: Schedule::new(Channel::Off, th.to_vec(), q, u),
        gamma,
        alpha,
        lambda: lam_t,
        residual,
        excluded_below,
        stats,
    })
}

fn last_zero(th: &[f64], q: &[f64]) -> Option<f64> {
    q.iter().rposition(|&v| v <= 0.0).map(|k| th[k])
}

/// Market share a deviating seller keeps on the platform when its rent is
/// `u`: `F^{J-1}(θ*(u))` with `θ*` the highest type whose equilibrium rent is
/// at most `u`. Returns the share and its derivative in `u`.
struct ShareCurve<'a> {
    th: &'a [f64],
    u: &'a [f64],
    f: &'a crate::dist::Dist,
    jm1: i32,
}

impl ShareCurve<'_> {
    fn eval(&self, u: f64) -> (f64, f64) {
        let n = self.th.len();
        let k = self.u.partition_point(|&v| v <= u);
        if k == 0 {
            return (self.f.cdf(self.th[0]).powi(self.jm1), 0.0);
        }
        let k = k - 1;
        if k >= n - 1 {
            return (1.0, 0.0);
        }
        let (u0, u1) = (self.u[k], self.u[k + 1]);
        let slope = (self.th[k + 1] - self.th[k]) / (u1 - u0);
        let t = self.th[k] + (u - u0) * slope;
        let fc = self.f.cdf(t);
        let share = fc.powi(self.jm1);
        let d = if self.jm1 >= 1 { self.jm1 as f64 * fc.powi(self.jm1 - 1) * self.f.pdf(t) * slope } else { 0.0 };
        (share, d)
    }
}

struct Deviation<'a> {
    th: &'a [f64],
    h: f64,
    wa: Vec<f64>,
    nu: Vec<f64>,
    lam: f64,
    share: ShareCurve<'a>,
}

impl Deviation<'_> {
    fn rents(&self, q: &[f64], u0: f64) -> Vec<f64> {
        cumtrapz(self.th, q).into_iter().map(|v| v + u0).collect()
    }

    fn value(&self, q: &[f64], u0: f64) -> f64 {
        let u = self.rents(q, u0);
        let w: Vec<f64> = (0..q.len()).map(|k| self.wa[k] + self.lam * self.share.eval(u[k]).0 * self.nu[k]).collect();
        let s: Vec<f64> = (0..q.len()).map(|k| self.th[k] * q[k] - 0.5 * q[k] * q[k] - u[k]).collect();
        dot(&w, &s)
    }

    fn gradient(&self, q: &[f64], u0: f64) -> (Vec<f64>, f64) {
        let n = q.len();
        let u = self.rents(q, u0);
        let mut gq = vec![0.0; n];
        let mut gu = vec![0.0; n];
        for k in 0..n {
            let (sh, dsh) = self.share.eval(u[k]);
            let w = self.wa[k] + self.lam * sh * self.nu[k];
            let s = self.th[k] * q[k] - 0.5 * q[k] * q[k] - u[k];
            gq[k] = w * (self.th[k] - q[k]);
            gu[k] = -w + self.lam * self.nu[k] * dsh * s;
        }
        // U_k = u0 + Σ trapezoids: spread dU_k/dq_j through suffix sums
        let mut tail = vec![0.0; n + 1];
        for k in (0..n).rev() {
            tail[k] = tail[k + 1] + gu[k];
        }
        gq[0] += 0.5 * self.h * tail[1];
        for jx in 1..n {
            gq[jx] += 0.5 * self.h * gu[jx] + self.h * tail[jx + 1];
        }
        (gq, tail[0])
    }

    fn project(q: &mut Vec<f64>, u0: &mut f64) {
        let w = vec![1.0; q.len()];
        *q = pav(q, &w).into_iter().map(|v| v.max(0.0)).collect();
        *u0 = u0.max(0.0);
    }

    /// Projected gradient ascent with Armijo backtracking.
    fn ascend(&self, mut q: Vec<f64>, mut u0: f64) -> (f64, Vec<f64>, f64) {
        Self::project(&mut q, &mut u0);
        let mut v = self.value(&q, u0);
        let n = q.len() as f64;
        let mut step = n;
        let mut stall = 0;
        for _ in 0..4000 {
            let (gq, gu) = self.gradient(&q, u0);
            let mut accepted = false;
            for _ in 0..60 {
                let mut qn: Vec<f64> = q.iter().zip(&gq).map(|(a, b)| a + step * b).collect();
                let mut un = u0 + step * gu;
                Self::project(&mut qn, &mut un);
                let gain: f64 = qn.iter().zip(&q).zip(&gq).map(|((a, b), g)| (a - b) * g).sum::<f64>() + (un - u0) * gu;
                let vn = self.value(&qn, un);
                if vn >= v + 1e-4 * gain && gain >= 0.0 {
                    let improvement = vn - v;
                    q = qn;
                    u0 = un;
                    v = vn;
                    accepted = true;
                    stall = if improvement <= 1e-15 * v.abs().max(1e-12) { stall + 1 } else { 0 };
                    break;
                }
                step *= 0.5;
            }
            if !accepted || stall >= 5 {
                break;
            }
            step *= 2.0;
        }
        (v, q, u0)
    }
}

/// Best profit of a seller who stops advertising and keeps only its organic
/// link, against the equilibrium rents of `eq`.
pub fn organic_outside_option(cfg: &MarketConfig, eq: &OrganicSolution) -> Result<f64> {
    let m = Market::new(cfg)?;
    outside_tilde(&m, eq)
}

fn outside_tilde(m: &Market, eq: &OrganicSolution) -> Result<f64> {
    let cfg = &m.cfg;
    if eq.schedule.len() != m.grid.len() {
        return Err(Error::Domain("equilibrium grid does not match the market grid".into()));
    }
    let lam = cfg.lambda;
    let pibar = outside_option_baseline(m);
    if lam == 0.0 {
        return Ok(pibar);
    }
    let th = m.theta();
    let jf = cfg.j as f64;
    let wa: Vec<f64> = m.tg.power_weights(cfg.j).into_iter().map(|v| v * (1.0 - lam) / jf).collect();
    // a deviating seller still sees its equilibrium rent as nondecreasing
    let ustar: Vec<f64> = eq.schedule.u.iter().scan(0.0f64, |m, &v| {
        *m = m.max(v);
        Some(*m)
    }).collect();
    let dev = Deviation {
        th,
        h: th[1] - th[0],
        wa,
        nu: m.tf.power_weights(1),
        lam,
        share: ShareCurve { th, u: &ustar, f: &cfg.f, jm1: cfg.j as i32 - 1 },
    };
    let mr = SellerProblem { off: Measure::new(vec![(1.0 / jf, crate::measure::Law::G, cfg.j)]), on: Measure::zero() }.solve(m);
    let mix = SellerProblem { off: mixture_measure(cfg), on: Measure::zero() }.solve(m);
    let starts = [mr.q, mix.q, eq.ironed().q];
    let best = starts
        .into_iter()
        .map(|q| dev.ascend(q, 0.0).0)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best.max(pibar))
}

/// Equilibrium accounting with organic links at kink weight `alpha`. Sellers
/// may prefer their organic-only deviation to the on-path profit, in which
/// case nobody advertises and the budget is zero.
pub fn organic_report(cfg: &MarketConfig, alpha: f64) -> Result<(EquilibriumReport, OrganicSolution)> {
    let m = Market::new(cfg)?;
    let sol = solve_market(&m, alpha)?;
    let off = sol.schedule.clone();
    let on = efficient_on(&off);
    let pi = seller_gross_profit(&m, &off);
    let outside = outside_tilde(&m, &sol)?;
    let cs = consumer_surplus(&m, &on, &off);
    let r = EquilibriumReport::assemble_voluntary("organic", cfg, Some(on), Some(off), pi, outside, cs);
    Ok((r, sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surplus::baseline_report;

    #[test]
    fn log_jacobian_matches_differences() {
        let cfg = MarketConfig::figure3().with_grid(41);
        let m = Market::new(&cfg).unwrap();
        let c = Coef::new(&m, 0.3);
        let th = m.theta();
        let f = LogForm { th, h: th[1] - th[0], c: &c, alpha: 0.4 };
        let x = initial_guess(&m, 0.3, &c);
        let jm = f.jac(&x);
        let r0 = f.resid(&x);
        for col in 0..x.len() {
            let mut xp = x.clone();
            let e = 1e-7 * (1.0 + x[col].abs());
            xp[col] += e;
            let rp = f.resid(&xp);
            for row in 0..x.len() {
                let fd = (rp[row] - r0[row]) / e;
                assert!((fd - jm.get(row, col)).abs() < 1e-5 * (1.0 + fd.abs()), "({row}, {col})");
            }
        }
    }

    #[test]
    fn semi_jacobian_matches_differences() {
        let cfg = MarketConfig::figure3().with_grid(41);
        let m = Market::new(&cfg).unwrap();
        let c = Coef::new(&m, 0.3);
        let th = m.theta();
        let x0 = initial_guess(&m, 0.3, &c);
        let n = th.len();
        let mut x = vec![0.0; 3 * n];
        for k in 0..n {
            x[3 * k] = x0[2 * k];
            x[3 * k + 1] = x0[2 * k + 1].exp() + 0.01;
            x[3 * k + 2] = (x[3 * k + 1] - th[k]) * c.a[k] + 0.003 * ((k % 3) as f64 - 1.0);
        }
        for alpha in [0.0, 0.5] {
            let f = SemiForm { th, h: th[1] - th[0], c: &c, alpha };
            let jm = f.jac(&x);
            let r0 = f.resid(&x);
            for col in 0..x.len() {
                let mut xp = x.clone();
                let e = 1e-7 * (1.0 + x[col].abs());
                xp[col] += e;
                let rp = f.resid(&xp);
                for row in 0..x.len() {
                    let fd = (rp[row] - r0[row]) / e;
                    assert!((fd - jm.get(row, col)).abs() < 1e-4 * (1.0 + fd.abs()), "({row}, {col}) {fd} {}", jm.get(row, col));
                }
            }
        }
    }

    #[test]
    fn no_platform_is_baseline() {
        let cfg = MarketConfig::figure3().with_lambda(0.0).with_grid(201);
        let s = organic_equilibrium(&cfg, 0.3).unwrap();
        let b = Market::new(&cfg).unwrap().baseline().unwrap();
        assert_eq!(s.schedule.q, b.off.q);
        assert_eq!(s.transversality(), 0.0);
    }

    #[test]
    fn figure3_orderings_both_weights() {
        let cfg = MarketConfig::figure3().with_grid(401);
        let base = baseline_report(&cfg).unwrap();
        let bo = base.off.clone().unwrap();
        for alpha in [0.0, 1.0] {
            let (r, s) = organic_report(&cfg, alpha).unwrap();
            assert!(s.stats.equation_residual < 1e-10);
            assert!(s.residual <= 1e-8);
            assert_eq!(s.transversality(), 0.0);
            for k in 0..bo.len() {
                assert!(s.schedule.q[k] >= bo.q[k] - 1e-9, "q at {k}");
                assert!(s.schedule.u[k] >= bo.u[k] - 1e-9, "U at {k}");
            }
            assert!(r.pi <= base.pi + 1e-9);
            assert!(r.outside_option >= base.outside_option - 1e-12);
            assert!(r.t <= base.t + 1e-9);
            let pihat = crate::regimes::symmetric_info_outside_option(&cfg).unwrap();
            assert!(r.outside_option <= pihat + 1e-9);
            assert!(s.ironed().is_monotone(0.0));
        }
    }
}
