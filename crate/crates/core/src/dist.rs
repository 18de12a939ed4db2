//! Value and expectation distributions, order statistics and stochastic orders.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::Distribution as _;
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};
use std::fmt;

/// Densities are evaluated on [lo + EPS, hi - EPS] so that U-shaped Beta
/// laws stay finite.
pub const DENSITY_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Dist {
    Uniform { lo: f64, hi: f64 },
    Beta { a: f64, b: f64, lo: f64, hi: f64 },
    PointMass { mu: f64 },
    Discrete { points: Vec<f64>, masses: Vec<f64> },
    Mixture { parts: Vec<(f64, Dist)> },
}

impl Dist {
    pub fn uniform() -> Self {
        Dist::Uniform { lo: 0.0, hi: 1.0 }
    }

    pub fn uniform_on(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
            return Err(Error::Domain(format!("uniform support [{lo}, {hi}]")));
        }
        Ok(Dist::Uniform { lo, hi })
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Domain(format!("beta parameters ({a}, {b})")));
        }
        Ok(Dist::Beta { a, b, lo: 0.0, hi: 1.0 })
    }

    pub fn point_mass(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::Domain(format!("point mass at {mu}")));
        }
        Ok(Dist::PointMass { mu })
    }

    pub fn discrete(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Domain("empty discrete distribution".into()));
        }
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if pairs.iter().any(|p| !(p.1 > 0.0) || !(p.0 >= 0.0) || !p.0.is_finite())
            || (total - 1.0).abs() > 1e-9
        {
            return Err(Error::Domain("discrete masses must be positive and sum to 1".into()));
        }
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Domain(format!("repeated support point {}", w[0].0)));
            }
        }
        Ok(Dist::Discrete {
            points: pairs.iter().map(|p| p.0).collect(),
            masses: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn mixture(parts: Vec<(f64, Dist)>) -> Result<Self> {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        if parts.is_empty() || parts.iter().any(|p| p.0 < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain("mixture weights must be nonnegative and sum to 1".into()));
        }
        Ok(Dist::Mixture { parts })
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Dist::Uniform { lo, hi } | Dist::Beta { lo, hi, .. } => (*lo, *hi),
            Dist::PointMass { mu } => (*mu, *mu),
            Dist::Discrete { points, .. } => (points[0], points[points.len() - 1]),
            Dist::Mixture { parts } => parts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, p| {
                let (l, h) = p.1.support();
                (acc.0.min(l), acc.1.max(h))
            }),
        }
    }

    /// True when the law has a density (no atoms).
    pub fn has_density(&self) -> bool {
        match self {
            Dist::Uniform { .. } | Dist::Beta { .. } => true,
            Dist::PointMass { .. } | Dist::Discrete { .. } => false,
            Dist::Mixture { parts } => parts.iter().all(|p| p.0 == 0.0 || p.1.has_density()),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Dist::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Dist::Beta { a, b, lo, hi } => {
                let t = (x - lo) / (hi - lo);
                if t <= 0.0 {
                    0.0
                } else if t >= 1.0 {
                    1.0
                } else {
                    beta_reg(*a, *b, t)
                }
            }
            Dist::PointMass { mu } => {
                if x >= *mu {
                    1.0
                } else {
                    0.0
                }
            }
            Dist::Discrete { points, masses } => {
                let mut s = 0.0;
                for (p, m) in points.iter().zip(masses) {
                    if *p <= x {
                        s += m;
                    }
                }
                s.min(1.0)
            }
            Dist::Mixture { parts } => parts.iter().map(|(w, d)| w * d.cdf(x)).sum(),
        }
    }

    /// Density, zero outside the support and for atoms.
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Dist::Uniform { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Dist::Beta { a, b, lo, hi } => {
                if x < *lo || x > *hi {
                    return 0.0;
                }
                let t = ((x - lo) / (hi - lo)).clamp(DENSITY_EPS, 1.0 - DENSITY_EPS);
                ((a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln() - ln_beta(*a, *b)).exp() / (hi - lo)
            }
            Dist::PointMass { .. } | Dist::Discrete { .. } => 0.0,
            Dist::Mixture { parts } => parts.iter().map(|(w, d)| w * d.pdf(x)).sum(),
        }
    }

    /// Derivative of the density.
    pub fn pdf_deriv(&self, x: f64) -> f64 {
        match self {
            Dist::Uniform { .. } | Dist::PointMass { .. } | Dist::Discrete { .. } => 0.0,
            Dist::Beta { a, b, lo, hi } => {
                if x < *lo || x > *hi {
                    return 0.0;
                }
                let t = ((x - lo) / (hi - lo)).clamp(DENSITY_EPS, 1.0 - DENSITY_EPS);
                self.pdf(x) * ((a - 1.0) / t - (b - 1.0) / (1.0 - t)) / (hi - lo)
            }
            Dist::Mixture { parts } => parts.iter().map(|(w, d)| w * d.pdf_deriv(x)).sum(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Dist::Uniform { lo, hi } => 0.5 * (lo + hi),
            Dist::Beta { a, b, lo, hi } => lo + (hi - lo) * a / (a + b),
            Dist::PointMass { mu } => *mu,
            Dist::Discrete { points, masses } => points.iter().zip(masses).map(|(p, m)| p * m).sum(),
            Dist::Mixture { parts } => parts.iter().map(|(w, d)| w * d.mean()).sum(),
        }
    }

    /// Generalized inverse `inf { x : cdf(x) >= p }`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self {
            Dist::Uniform { lo, hi } => lo + p * (hi - lo),
            Dist::PointMass { mu } => *mu,
            Dist::Discrete { points, masses } => {
                let mut s = 0.0;
                for (x, m) in points.iter().zip(masses) {
                    s += m;
                    if s >= p - 1e-15 {
                        return *x;
                    }
                }
                points[points.len() - 1]
            }
            _ => {
                let (mut a, mut b) = self.support();
                if p <= 0.0 {
                    return a;
                }
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m == a || m == b {
                        break;
                    }
                    if self.cdf(m) >= p {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                b
            }
        }
    }

    /// Stop-loss transform `E[(v - X)^+] = ∫_{-inf}^{v} cdf(t) dt`, in closed form.
    pub fn integrated_cdf(&self, v: f64) -> f64 {
        match self {
            Dist::Uniform { lo, hi } => {
                if v <= *lo {
                    0.0
                } else if v >= *hi {
                    v - 0.5 * (lo + hi)
                } else {
                    (v - lo) * (v - lo) / (2.0 * (hi - lo))
                }
            }
            Dist::Beta { a, b, lo, hi } => {
                if v <= *lo {
                    return 0.0;
                }
                if v >= *hi {
                    return v - self.mean();
                }
                let t = (v - lo) / (hi - lo);
                // E[Y; Y <= t] = a/(a+b) I_t(a+1, b) for Y ~ Beta(a, b)
                let partial = a / (a + b) * beta_reg(a + 1.0, *b, t);
                (v - lo) * beta_reg(*a, *b, t) - (hi - lo) * partial
            }
            Dist::PointMass { mu } => (v - mu).max(0.0),
            Dist::Discrete { points, masses } => {
                points.iter().zip(masses).map(|(p, m)| m * (v - p).max(0.0)).sum()
            }
            Dist::Mixture { parts } => parts.iter().map(|(w, d)| w * d.integrated_cdf(v)).sum(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Dist::Uniform { lo, hi } => lo + (hi - lo) * rng.gen::<f64>(),
            Dist::Beta { a, b, lo, hi } => {
                let d = rand_distr::Beta::new(*a, *b).expect("validated beta parameters");
                lo + (hi - lo) * d.sample(rng)
            }
            Dist::PointMass { mu } => *mu,
            Dist::Discrete { points, masses } => {
                let u: f64 = rng.gen();
                let mut s = 0.0;
                for (x, m) in points.iter().zip(masses) {
                    s += m;
                    if u < s {
                        return *x;
                    }
                }
                points[points.len() - 1]
            }
            Dist::Mixture { parts } => {
                let u: f64 = rng.gen();
                let mut s = 0.0;
                for (w, d) in parts {
                    s += w;
                    if u < s {
                        return d.sample(rng);
                    }
                }
                parts[parts.len() - 1].1.sample(rng)
            }
        }
    }

    /// Parses `uniform`, `uniform lo hi`, `beta a b`, `pointmass mu`,
    /// `discrete [(x, m), ...]`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let lower = s.to_ascii_lowercase();
        let mut words = lower.split_whitespace();
        let head = words.next().ok_or_else(|| Error::Parse("empty distribution literal".into()))?;
        let num = |w: Option<&str>, what: &str| -> Result<f64> {
            w.ok_or_else(|| Error::Parse(format!("missing {what} in `{s}`")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad {what} in `{s}`: {e}")))
        };
        match head {
            "uniform" => {
                let rest: Vec<&str> = words.collect();
                match rest.len() {
                    0 => Ok(Dist::uniform()),
                    2 => Dist::uniform_on(num(Some(rest[0]), "lower bound")?, num(Some(rest[1]), "upper bound")?),
                    _ => Err(Error::Parse(format!("`{s}`: uniform takes zero or two bounds"))),
                }
            }
            "beta" => {
                let a = num(words.next(), "a")?;
                let b = num(words.next(), "b")?;
                if words.next().is_some() {
                    return Err(Error::Parse(format!("trailing tokens in `{s}`")));
                }
                Dist::beta(a, b)
            }
            "pointmass" => {
                let mu = num(words.next(), "mu")?;
                Dist::point_mass(mu)
            }
            "discrete" => {
                let body = s[head.len()..].trim();
                let body = body
                    .strip_prefix('[')
                    .and_then(|b| b.strip_suffix(']'))
                    .ok_or_else(|| Error::Parse(format!("discrete needs [(x, m), ...] in `{s}`")))?;
                let mut pairs = Vec::new();
                for chunk in body.split(')') {
                    let chunk = chunk.trim().trim_start_matches(',').trim();
                    if chunk.is_empty() {
                        continue;
                    }
                    let inner = chunk
                        .strip_prefix('(')
                        .ok_or_else(|| Error::Parse(format!("bad pair `{chunk}`")))?;
                    let mut it = inner.split(',');
                    let x = num(it.next().map(str::trim), "point")?;
                    let m = num(it.next().map(str::trim), "mass")?;
                    pairs.push((x, m));
                }
                Dist::discrete(pairs)
            }
            other => Err(Error::Parse(format!("unknown distribution family `{other}`"))),
        }
    }
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dist::Uniform { lo, hi } if *lo == 0.0 && *hi == 1.0 => write!(f, "uniform"),
            Dist::Uniform { lo, hi } => write!(f, "uniform {lo} {hi}"),
            Dist::Beta { a, b, .. } => write!(f, "beta {a} {b}"),
            Dist::PointMass { mu } => write!(f, "pointmass {mu}"),
            Dist::Discrete { points, masses } => {
                write!(f, "discrete [")?;
                for (i, (p, m)) in points.iter().zip(masses).enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "({p}, {m})")?;
                }
                write!(f, "]")
            }
            Dist::Mixture { parts } => {
                write!(f, "mixture [")?;
                for (i, (w, d)) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{w} * {d}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// The law of the maximum of `j` independent draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStat {
    pub base: Dist,
    pub j: u32,
}

impl OrderStat {
    pub fn new(base: Dist, j: u32) -> Result<Self> {
        if j == 0 {
            return Err(Error::Domain("order statistic needs J >= 1".into()));
        }
        Ok(Self { base, j })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.base.cdf(x).powi(self.j as i32)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.j as f64 * self.base.cdf(x).powi(self.j as i32 - 1) * self.base.pdf(x)
    }
}

fn check_in_support(d: &Dist, x: f64) -> Result<()> {
    let (lo, hi) = d.support();
    if x < lo - 1e-12 || x > hi + 1e-12 || !x.is_finite() {
        return Err(Error::Domain(format!("theta = {x} outside support [{lo}, {hi}]")));
    }
    Ok(())
}

pub fn order_stat_cdf(d: &Dist, j: u32, x: f64) -> Result<f64> {
    check_in_support(d, x)?;
    Ok(OrderStat::new(d.clone(), j)?.cdf(x))
}

pub fn order_stat_pdf(d: &Dist, j: u32, x: f64) -> Result<f64> {
    check_in_support(d, x)?;
    if j == 0 {
        return Err(Error::Domain("order statistic needs J >= 1".into()));
    }
    Ok(j as f64 * d.cdf(x).powi(j as i32 - 1) * d.pdf(x))
}

/// Equal means and second-order dominance of `g` over `f` (so `f` is a
/// mean-preserving spread of `g`), tested on a uniform grid with tolerance 1e-6.
pub fn check_mean_preserving_spread(f: &Dist, g: &Dist, grid_size: usize) -> bool {
    let tol = 1e-6;
    if (f.mean() - g.mean()).abs() > tol {
        return false;
    }
    let (fl, fh) = f.support();
    let (gl, gh) = g.support();
    let lo = fl.min(gl);
    let hi = fh.max(gh);
    let n = grid_size.max(2);
    (0..n).all(|k| {
        let v = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        f.integrated_cdf(v) >= g.integrated_cdf(v) - tol
    })
}

/// Whether the density ratio `pdf_{G^J} / pdf_{F^J}` is nonincreasing on `range`.
pub fn likelihood_ratio_dominates(f: &Dist, g: &Dist, j: u32, range: (f64, f64)) -> Result<bool> {
    if !f.has_density() || !g.has_density() {
        return Err(Error::Unsupported(
            "likelihood-ratio order needs densities; atoms are not supported".into(),
        ));
    }
    let (a, b) = range;
    if !(b > a) {
        return Err(Error::Domain(format!("empty range [{a}, {b}]")));
    }
    let n = 2001;
    let mut prev: Option<f64> = None;
    for k in 0..n {
        let x = a + (b - a) * k as f64 / (n - 1) as f64;
        let fx = j as f64 * f.cdf(x).powi(j as i32 - 1) * f.pdf(x);
        let gx = j as f64 * g.cdf(x).powi(j as i32 - 1) * g.pdf(x);
        if !(fx > 0.0) || !(gx > 0.0) {
            return Err(Error::Singular { at: x, what: "zero density in likelihood-ratio range".into() });
        }
        let r = gx / fx;
        if let Some(p) = prev {
            if r > p + 1e-9 * p.abs().max(1.0) {
                return Ok(false);
            }
        }
        prev = Some(r);
    }
    Ok(true)
}

/// Myerson virtual value of the `j`-th order statistic law:
/// `θ - (1 - cdf^J) / (J cdf^{J-1} pdf)`.
pub fn virtual_value(d: &Dist, j: u32, x: f64) -> Result<f64> {
    check_in_support(d, x)?;
    let (lo, hi) = d.support();
    if x >= hi {
        return Ok(hi);
    }
    let fx = d.pdf(x);
    if !(fx > 0.0) {
        return Err(Error::Singular { at: x, what: "zero density in virtual value".into() });
    }
    let c = d.cdf(x);
    let den = j as f64 * c.powi(j as i32 - 1) * fx;
    if den == 0.0 {
        // only at the bottom of the support when J >= 2
        debug_assert!(x <= lo + 1e-12 || c == 0.0);
        return Ok(f64::NEG_INFINITY);
    }
    Ok(x - (1.0 - c.powi(j as i32)) / den)
}
