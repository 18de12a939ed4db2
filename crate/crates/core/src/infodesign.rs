//! Information design when off-platform consumers know only the prior mean.
//!
//! Each seller posts one off-platform product `q̂` at price `μ q̂`. A platform
//! consumer who believes her value is `θ` then keeps `max{0, (θ - μ) q̂}`, so
//! the sponsored seller's profit `π(θ) = θ²/2 - max{0, (θ - μ) q̂}` has a
//! downward kink at `μ`. The platform reveals the top value outside a pooling
//! interval `[x₁, x₂]` and pools everything inside it at `μ`.

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::num::{bisect, golden_max, integrate, integrate_split};
use crate::screening::MarketConfig;
use serde::{Deserialize, Serialize};

const PANELS: usize = 32;
const NODES: usize = 16;

/// `θ²/2 - max{0, (θ - μ) q̂}`.
pub fn onplat_profit_kinked(theta: f64, q_hat: f64, mu: f64) -> f64 {
    debug_assert!(q_hat >= 0.0);
    0.5 * theta * theta - ((theta - mu) * q_hat).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Interior,
    /// `x₁` sits at the bottom of the support and `x₂` solves the mean condition.
    Lower,
    /// `x₂` sits at the top of the support.
    Upper,
}

/// `H = F^J` with the integrals the pooling problem needs.
#[derive(Debug, Clone)]
struct TopLaw<'a> {
    f: &'a Dist,
    j: i32,
}

impl TopLaw<'_> {
    fn cdf(&self, t: f64) -> f64 {
        self.f.cdf(t).powi(self.j)
    }

    fn cdf_integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        integrate(|t| self.cdf(t), a, b, PANELS, NODES)
    }

    /// `∫_a^b θ^k dH` by parts, so singular densities never enter.
    fn moment(&self, a: f64, b: f64, k: i32) -> f64 {
        if b <= a {
            return 0.0;
        }
        let ends = b.powi(k) * self.cdf(b) - a.powi(k) * self.cdf(a);
        if k == 0 {
            return ends;
        }
        ends - k as f64 * integrate(|t| t.powi(k - 1) * self.cdf(t), a, b, PANELS, NODES)
    }

    /// `∫_a^b (θ - μ) dH`.
    fn excess(&self, a: f64, b: f64, mu: f64) -> f64 {
        self.moment(a, b, 1) - mu * (self.cdf(b) - self.cdf(a))
    }
}

/// Thresholds of the pooling interval for a fixed off-platform quality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub x1: f64,
    pub x2: f64,
    /// Slope of the supporting line on `[x₁, x₂]`.
    pub s: f64,
    pub boundary: Boundary,
}

/// Solves `x₂ = x₁ + 2q̂` and `E_{F^J}[θ | x₁ ≤ θ ≤ x₂] = μ` by bisection on
/// `x₁`. When no interior interval exists one endpoint is pinned to the edge
/// of the support and the other solves the mean condition alone.
pub fn pooling_thresholds(f: &Dist, j: u32, q_hat: f64) -> Result<Thresholds> {
    if !(q_hat >= 0.0) || !q_hat.is_finite() {
        return Err(Error::Domain(format!("off-platform quality {q_hat} must be finite and nonnegative")));
    }
    if j == 0 {
        return Err(Error::Domain("J must be at least 1".into()));
    }
    let mu = f.mean();
    let h = TopLaw { f, j: j as i32 };
    if q_hat == 0.0 {
        return Ok(Thresholds { x1: mu, x2: mu, s: mu, boundary: Boundary::Interior });
    }
    let (lo, hi) = f.support();
    let cond = |x1: f64| h.excess(x1, x1 + 2.0 * q_hat, mu);
    let a = (mu - 2.0 * q_hat).max(lo);
    let b = mu.min(hi - 2.0 * q_hat);
    let tol = 1e-15 * (1.0 + hi.abs());
    if a <= b {
        let (ca, cb) = (cond(a), cond(b));
        if ca <= 0.0 && cb >= 0.0 {
            let x1 = if ca == 0.0 {
                a
            } else if cb == 0.0 {
                b
            } else {
                bisect(cond, a, b, tol).ok_or_else(|| Error::Solver("pooling bisection lost its bracket".into()))?
            };
            return Ok(Thresholds { x1, x2: x1 + 2.0 * q_hat, s: (x1 + mu) / 2.0, boundary: Boundary::Interior });
        }
    }
    // the interior interval would leave the support
    let low = |x2: f64| h.excess(lo, x2, mu);
    if low(hi) >= 0.0 {
        let x2 = bisect(low, mu, hi, tol).unwrap_or(hi);
        // the supporting line now touches π at μ and x₂ only
        return Ok(Thresholds { x1: lo, x2, s: (x2 + mu) / 2.0 - q_hat, boundary: Boundary::Lower });
    }
    let up = |x1: f64| h.excess(x1, hi, mu);
    match bisect(up, lo, mu, tol) {
        Some(x1) => Ok(Thresholds { x1, x2: hi, s: (x1 + mu) / 2.0, boundary: Boundary::Upper }),
        None => Err(Error::Solver(format!("no pooling interval for q_hat = {q_hat}"))),
    }
}

/// Information-design solution for one `(λ, J, F)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolingSolution {
    pub lambda: f64,
    #[serde(rename = "J")]
    pub j: u32,
    pub q_hat: f64,
    pub x1: f64,
    pub x2: f64,
    pub s: f64,
    pub objective: f64,
    pub boundary_flag: bool,
    #[serde(skip)]
    pub mu: f64,
    #[serde(skip)]
    pub f: Option<Dist>,
    /// `μ - λ/(1-λ) ∫_{x₂}^{θ_H} (θ - μ) dF^J - q̂`; zero at an interior optimum.
    #[serde(skip)]
    pub fixed_point_residual: f64,
}

impl PoolingSolution {
    fn law(&self) -> TopLaw<'_> {
        TopLaw { f: self.f.as_ref().expect("solution carries its value law"), j: self.j as i32 }
    }

    pub fn pi(&self, theta: f64) -> f64 {
        onplat_profit_kinked(theta, self.q_hat, self.mu)
    }

    /// The convex function equal to `π` outside the pooling interval and to
    /// the line of slope `s` through `(μ, μ²/2)` inside it.
    pub fn supporting_function(&self, theta: f64) -> f64 {
        if theta >= self.x1 && theta <= self.x2 {
            0.5 * self.mu * self.mu + self.s * (theta - self.mu)
        } else {
            self.pi(theta)
        }
    }

    /// Cdf of the induced posterior-mean law: `F^J` outside the interval and
    /// an atom at `μ` carrying the interval's mass.
    pub fn posterior_cdf(&self, t: f64) -> f64 {
        let h = self.law();
        if t < self.x1 || t >= self.x2 {
            h.cdf(t)
        } else if t < self.mu {
            h.cdf(self.x1)
        } else {
            h.cdf(self.x2)
        }
    }

    pub fn atom_mass(&self) -> f64 {
        let h = self.law();
        h.cdf(self.x2) - h.cdf(self.x1)
    }

    /// `E_{F^J}[θ | x₁ ≤ θ ≤ x₂] - μ`, zero for a nondegenerate interval.
    pub fn conditional_mean_gap(&self) -> f64 {
        let h = self.law();
        let m = self.atom_mass();
        if m <= 0.0 {
            return 0.0;
        }
        h.excess(self.x1, self.x2, self.mu) / m
    }

    /// Smallest value of `∫_{θ_L}^v (F^J - F̂)` over `grid` points, and the
    /// gap in means. A contraction has the first nonnegative and the second zero.
    pub fn contraction_margin(&self, grid: usize) -> (f64, f64) {
        let h = self.law();
        let (lo, hi) = self.f.as_ref().unwrap().support();
        let d = |v: f64| {
            if v <= self.x1 {
                return 0.0;
            }
            let top = v.min(self.x2);
            h.cdf_integral(self.x1, top)
                - h.cdf(self.x1) * (top.min(self.mu) - self.x1)
                - h.cdf(self.x2) * (top - self.mu).max(0.0)
        };
        let mut worst = f64::INFINITY;
        for k in 0..grid {
            let v = lo + (hi - lo) * k as f64 / (grid - 1) as f64;
            worst = worst.min(d(v));
        }
        (worst.min(d(self.mu)).min(d(self.x2)), d(hi))
    }

    /// `λ ∫π dF̂ + (1-λ)(μq̂ - q̂²/2)` with `∫π dF̂ = π(θ_H) - ∫ π' F̂` by parts.
    pub fn objective_via_posterior(&self) -> f64 {
        let (lo, hi) = self.f.as_ref().unwrap().support();
        let dpi = |t: f64| if t > self.mu { t - self.q_hat } else { t };
        let breaks = [self.x1, self.mu, self.x2];
        let inner = self.pi(hi) - lo * 0.0 - integrate_split(|t| dpi(t) * self.posterior_cdf(t), lo, hi, &breaks);
        self.lambda * inner + (1.0 - self.lambda) * (self.mu * self.q_hat - 0.5 * self.q_hat * self.q_hat)
    }
}

fn check_uninformed(cfg: &MarketConfig) -> Result<f64> {
    let mu = cfg.f.mean();
    if cfg.lambda >= 1.0 {
        return Ok(mu);
    }
    match cfg.g {
        Dist::PointMass { mu: m } if (m - mu).abs() <= 1e-9 * (1.0 + mu.abs()) => Ok(mu),
        _ => Err(Error::Unsupported(
            "information design is solved only when off-platform consumers know just the prior mean \
             (G = pointmass at the mean of F); with dispersed expectations and 0 < lambda < 1 the \
             platform faces persuasion of a privately informed receiver, which is open"
                .into(),
        )),
    }
}

/// `λ[∫_{θ_L}^{x₁} θ²/2 dF^J + (μ²/2)(F^J(x₂) - F^J(x₁)) + ∫_{x₂}^{θ_H} (θ²/2 - q̂(θ - μ)) dF^J]
///  + (1-λ)(μq̂ - q̂²/2)`.
pub fn platform_objective_id(cfg: &MarketConfig, q_hat: f64, th: &Thresholds) -> Result<f64> {
    let mu = check_uninformed(cfg)?;
    Ok(objective(&cfg.f, cfg.j, cfg.lambda, mu, q_hat, th))
}

fn objective(f: &Dist, j: u32, lam: f64, mu: f64, q: f64, th: &Thresholds) -> f64 {
    let h = TopLaw { f, j: j as i32 };
    let (lo, hi) = f.support();
    let left = 0.5 * h.moment(lo, th.x1, 2);
    let atom = 0.5 * mu * mu * (h.cdf(th.x2) - h.cdf(th.x1));
    let right = 0.5 * h.moment(th.x2, hi, 2) - q * h.excess(th.x2, hi, mu);
    lam * (left + atom + right) + (1.0 - lam) * (mu * q - 0.5 * q * q)
}

fn assemble(cfg: &MarketConfig, mu: f64, q: f64, th: Thresholds) -> PoolingSolution {
    let lam = cfg.lambda;
    let h = TopLaw { f: &cfg.f, j: cfg.j as i32 };
    let hi = cfg.f.support().1;
    let fixed_point_residual = if lam < 1.0 {
        mu - lam / (1.0 - lam) * h.excess(th.x2, hi, mu) - q
    } else {
        0.0
    };
    PoolingSolution {
        lambda: lam,
        j: cfg.j,
        q_hat: q,
        x1: th.x1,
        x2: th.x2,
        s: th.s,
        objective: objective(&cfg.f, cfg.j, lam, mu, q, &th),
        boundary_flag: th.boundary != Boundary::Interior,
        mu,
        f: Some(cfg.f.clone()),
        fixed_point_residual,
    }
}

/// Optimal off-platform quality and the pooling interval it induces.
pub fn optimal_offplat_quality_id(cfg: &MarketConfig) -> Result<PoolingSolution> {
    cfg.validate()?;
    let mu = check_uninformed(cfg)?;
    let lam = cfg.lambda;
    if lam >= 1.0 {
        let th = Thresholds { x1: mu, x2: mu, s: mu, boundary: Boundary::Interior };
        return Ok(assemble(cfg, mu, 0.0, th));
    }
    if lam == 0.0 {
        return Ok(assemble(cfg, mu, mu, pooling_thresholds(&cfg.f, cfg.j, mu)?));
    }
    let hi = cfg.f.support().1;
    let value = |q: f64| match pooling_thresholds(&cfg.f, cfg.j, q) {
        Ok(th) => objective(&cfg.f, cfg.j, lam, mu, q, &th),
        Err(_) => f64::NEG_INFINITY,
    };
    let scan = 200;
    let step = hi / scan as f64;
    let (mut best_k, mut best_v) = (0, f64::NEG_INFINITY);
    for k in 0..=scan {
        let v = value(k as f64 * step);
        if v > best_v {
            best_k = k;
            best_v = v;
        }
    }
    let a = (best_k as f64 - 1.0).max(0.0) * step;
    let b = ((best_k + 1) as f64 * step).min(hi);
    let (mut q, mut v) = golden_max(value, a, b, 1e-10);
    if value(0.0) >= v {
        q = 0.0;
        v = value(0.0);
    }
    // at an interior optimum Π' = (1-λ)(μ - q̂) - λ∫_{x₂}^{θ_H}(θ - μ) dF^J vanishes
    let h = TopLaw { f: &cfg.f, j: cfg.j as i32 };
    let slope = |q: f64| -> f64 {
        match pooling_thresholds(&cfg.f, cfg.j, q) {
            Ok(th) if th.boundary == Boundary::Interior => {
                (1.0 - lam) * (mu - q) - lam * h.excess(th.x2, hi, mu)
            }
            _ => f64::NAN,
        }
    };
    if q > 0.0 {
        let (l, r) = ((q - 1e-6).max(0.0), (q + 1e-6).min(hi));
        let (sl, sr) = (slope(l), slope(r));
        if sl.is_finite() && sr.is_finite() && sl > 0.0 && sr < 0.0 {
            if let Some(root) = bisect(slope, l, r, 1e-15) {
                if value(root) >= v - 1e-14 {
                    q = root;
                }
            }
        }
    }
    Ok(assemble(cfg, mu, q, pooling_thresholds(&cfg.f, cfg.j, q)?))
}

/// Expected on-platform surplus `∫ θ²/2 dF̂` of several candidate posterior
/// laws when `λ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LargePlatformReport {
    pub full_revelation: f64,
    pub no_revelation: f64,
    /// `((a, b), value)`: reveal outside `[a, b]`, pool inside it.
    pub pooling: Vec<((f64, f64), f64)>,
    /// Full revelation under matchings other than the efficient one.
    pub other_matchings: Vec<(String, f64)>,
    pub full_is_best: bool,
}

/// Compares full revelation of the top value with coarser disclosures and
/// with revealing the value of a seller other than the favourite one.
pub fn large_platform_check(f: &Dist, j: u32) -> Result<LargePlatformReport> {
    if j == 0 {
        return Err(Error::Domain("J must be at least 1".into()));
    }
    let (lo, hi) = f.support();
    let half_sq = |v: f64| 0.5 * v * v;
    if let Dist::PointMass { mu } = f {
        let v = half_sq(*mu);
        return Ok(LargePlatformReport {
            full_revelation: v,
            no_revelation: v,
            pooling: vec![((*mu, *mu), v)],
            other_matchings: vec![("random".into(), v), ("second-best".into(), v)],
            full_is_best: true,
        });
    }
    let h = TopLaw { f, j: j as i32 };
    let full = 0.5 * h.moment(lo, hi, 2);
    let no = half_sq(h.moment(lo, hi, 1));
    let span = hi - lo;
    let intervals = [(0.4, 0.8), (0.0, 0.5), (0.25, 0.75), (0.5, 1.0), (0.1, 0.9)];
    let pooling = intervals
        .iter()
        .map(|&(a, b)| {
            let (a, b) = (lo + a * span, lo + b * span);
            let m = h.cdf(b) - h.cdf(a);
            let inside = if m > 0.0 { m * half_sq(h.moment(a, b, 1) / m) } else { 0.0 };
            ((a, b), 0.5 * h.moment(lo, a, 2) + inside + 0.5 * h.moment(b, hi, 2))
        })
        .collect::<Vec<_>>();
    // revealing a uniformly drawn seller's value, or the runner-up's
    let moment2 = |cdf: &dyn Fn(f64) -> f64| 0.5 * (hi * hi * cdf(hi) - lo * lo * cdf(lo) - 2.0 * integrate(|t| t * cdf(t), lo, hi, PANELS, NODES));
    let random = moment2(&|t| f.cdf(t));
    let jf = j as f64;
    let second = if j >= 2 {
        moment2(&|t| jf * f.cdf(t).powi(j as i32 - 1) - (jf - 1.0) * f.cdf(t).powi(j as i32))
    } else {
        random
    };
    let other_matchings = vec![("random".to_string(), random), ("second-best".to_string(), second)];
    let tol = 1e-12;
    let full_is_best = full + tol >= no
        && pooling.iter().all(|p| full + tol >= p.1)
        && other_matchings.iter().all(|p| full + tol >= p.1);
    Ok(LargePlatformReport { full_revelation: full, no_revelation: no, pooling, other_matchings, full_is_best })
}

/// `(θ, π(θ), y(θ))` on a uniform grid for plotting.
pub fn supporting_function_table(sol: &PoolingSolution, n: usize) -> Vec<(f64, f64, f64)> {
    let (lo, hi) = sol.f.as_ref().map(|f| f.support()).unwrap_or((0.0, 1.0));
    (0..n)
        .map(|k| {
            let t = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            (t, sol.pi(t), sol.supporting_function(t))
        })
        .collect()
}
