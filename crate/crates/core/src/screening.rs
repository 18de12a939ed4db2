//! Baseline equilibrium menus on and off the platform.

use crate::dist::{check_mean_preserving_spread, Dist};
use crate::error::{Error, Result};
use crate::grid::{Grid, Tabulated};
use crate::num::{bisect, interp, pav, CompensatedSum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub lambda: f64,
    pub j: u32,
    pub f: Dist,
    pub g: Dist,
    pub grid: usize,
    pub tol: f64,
}

impl MarketConfig {
    pub fn new(lambda: f64, j: u32, f: Dist, g: Dist) -> Result<Self> {
        let cfg = Self { lambda, j, f, g, grid: 2001, tol: 1e-9 };
        cfg.validate()?;
        Ok(cfg)
    }

    /// λ = 1/2, J = 5, G uniform, F = Beta(1/4, 1/4).
    pub fn figure3() -> Self {
        Self::new(0.5, 5, Dist::beta(0.25, 0.25).unwrap(), Dist::uniform()).unwrap()
    }

    pub fn with_grid(mut self, n: usize) -> Self {
        self.grid = n;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_j(mut self, j: u32) -> Self {
        self.j = j;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Domain(format!("lambda = {} outside [0, 1]", self.lambda)));
        }
        if self.j == 0 {
            return Err(Error::Domain("J must be at least 1".into()));
        }
        if self.grid < 3 {
            return Err(Error::Domain("grid needs at least 3 points".into()));
        }
        let (fl, fh) = self.f.support();
        let (gl, gh) = self.g.support();
        if gl < fl - 1e-12 || gh > fh + 1e-12 {
            return Err(Error::Domain(format!(
                "support of G [{gl}, {gh}] is not inside the support of F [{fl}, {fh}]"
            )));
        }
        Ok(())
    }

    pub fn support(&self) -> (f64, f64) {
        self.f.support()
    }

    /// Whether F is a mean-preserving spread of G.
    pub fn information_advantage(&self) -> bool {
        check_mean_preserving_spread(&self.f, &self.g, self.grid)
    }

    pub fn theta_grid(&self) -> Grid {
        let (lo, hi) = self.support();
        Grid::uniform(lo, hi, self.grid)
    }
}

/// Primitives of the binary single-seller example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryConfig {
    pub theta_l: f64,
    pub theta_h: f64,
    pub f_l: f64,
    pub f_h: f64,
    pub lambda: f64,
}

impl BinaryConfig {
    pub fn new(theta_l: f64, theta_h: f64, f_l: f64, f_h: f64, lambda: f64) -> Result<Self> {
        if !(theta_l >= 0.0 && theta_h > theta_l) {
            return Err(Error::Domain(format!("need 0 <= theta_L < theta_H, got {theta_l}, {theta_h}")));
        }
        if !(f_l > 0.0 && f_h > 0.0 && (f_l + f_h - 1.0).abs() <= 1e-12) {
            return Err(Error::Domain("binary masses must be positive and sum to 1".into()));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Domain(format!("lambda = {lambda} outside [0, 1]")));
        }
        Ok(Self { theta_l, theta_h, f_l, f_h, lambda })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    On,
    Off,
}

impl Channel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Channel::On => "on",
            Channel::Off => "off",
        }
    }
}

/// A menu sampled on a θ-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub channel: Channel,
    pub theta: Vec<f64>,
    pub q: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
}

impl Schedule {
    pub fn new(channel: Channel, theta: Vec<f64>, q: Vec<f64>, u: Vec<f64>) -> Self {
        let p = theta.iter().zip(&q).zip(&u).map(|((t, q), u)| t * q - u).collect();
        Self { channel, theta, q, u, p }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn is_monotone(&self, tol: f64) -> bool {
        self.q.windows(2).all(|w| w[1] >= w[0] - tol)
    }

    /// Checks monotone quality, U(θ_L) = 0, nondecreasing convex rents, the
    /// price identity, and the envelope condition cell by cell.
    pub fn check(&self, tol: f64) -> Result<()> {
        let bad = |m: String| Err(Error::Inconsistency(m));
        if !self.is_monotone(tol) {
            return bad("quality is not nondecreasing".into());
        }
        if self.u[0].abs() > tol {
            return bad(format!("U(theta_L) = {}", self.u[0]));
        }
        for k in 0..self.len() {
            let p = self.theta[k] * self.q[k] - self.u[k];
            if (p - self.p[k]).abs() > 1e-10 * (1.0 + p.abs()) {
                return bad(format!("price identity fails at k = {k}"));
            }
        }
        for k in 0..self.len() - 1 {
            let h = self.theta[k + 1] - self.theta[k];
            let du = self.u[k + 1] - self.u[k];
            if du < -tol {
                return bad(format!("rent decreases at k = {k}"));
            }
            // for monotone q the exact integral lies between the endpoint rectangles
            if du < h * self.q[k] - tol || du > h * self.q[k + 1] + tol {
                return bad(format!("envelope condition fails at k = {k}"));
            }
        }
        Ok(())
    }
}

pub fn efficient_quality(theta: f64) -> f64 {
    theta
}

/// Nondecreasing fit under the weight measure (pool-adjacent-violators).
pub fn iron_schedule(raw: &[f64], weight: &[f64]) -> Vec<f64> {
    pav(raw, weight)
}

/// Rents from quality by the cumulative trapezoid, with the cell holding the
/// exclusion point `kink` integrated from the kink only.
pub fn rent_from_quality(theta: &[f64], q: &[f64], kink: Option<f64>) -> Vec<f64> {
    let mut u = Vec::with_capacity(theta.len());
    let mut s = CompensatedSum::new();
    u.push(0.0);
    for k in 1..theta.len() {
        let (a, b) = (theta[k - 1], theta[k]);
        let inc = match kink {
            Some(t0) if q[k - 1] == 0.0 && q[k] > 0.0 && t0 >= a && t0 <= b => 0.5 * q[k] * (b - t0),
            _ => 0.5 * (b - a) * (q[k] + q[k - 1]),
        };
        s.add(inc);
        u.push(s.value());
    }
    u
}

/// `U(θ) = ∫ q`, attached to the given schedule's quality.
pub fn rent_schedule(q: &Schedule) -> Schedule {
    let u = rent_from_quality(&q.theta, &q.q, None);
    Schedule::new(q.channel, q.theta.clone(), q.q.clone(), u)
}

/// Output of a one-dimensional screening problem on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Screened {
    /// Virtual-value bracket before ironing and truncation.
    pub raw: Vec<f64>,
    pub q: Vec<f64>,
    pub u: Vec<f64>,
    /// Exclusion point, refined inside its grid cell when it is not pooled.
    pub kink: Option<f64>,
    /// Whether ironing changed any grid value.
    pub ironed: bool,
}

/// Irons the bracket `psi` under `weight`, truncates at zero, and integrates rents.
pub fn screen<P: Fn(f64) -> f64>(theta: &[f64], psi: P, weight: &[f64]) -> Screened {
    let raw: Vec<f64> = theta.iter().map(|&t| psi(t)).collect();
    let fit = pav(&raw, weight);
    let ironed = raw.iter().zip(&fit).any(|(r, f)| (r - f).abs() > 1e-15 * (1.0 + r.abs()) && r.is_finite());
    let q: Vec<f64> = fit.iter().map(|v| v.max(0.0)).collect();
    let mut kink = None;
    if let Some(k) = (0..q.len() - 1).find(|&k| q[k] == 0.0 && q[k + 1] > 0.0) {
        let untouched = raw[k + 1] == fit[k + 1] && (raw[k] == fit[k] || raw[k] == f64::NEG_INFINITY);
        kink = if untouched {
            bisect(|t| {
                let v = psi(t);
                if v.is_finite() { v } else { -1.0 }
            }, theta[k], theta[k + 1], 1e-12)
        } else {
            Some(theta[k])
        };
    }
    let u = rent_from_quality(theta, &q, kink);
    Screened { raw, q, u, kink, ironed }
}

/// Grid data of a market, shared by the solvers.
#[derive(Debug, Clone)]
pub struct Market {
    pub cfg: MarketConfig,
    pub grid: Grid,
    pub tf: Tabulated,
    pub tg: Tabulated,
}

impl Market {
    pub fn new(cfg: &MarketConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.theta_grid();
        let tf = Tabulated::new(&cfg.f, &grid);
        let tg = Tabulated::new(&cfg.g, &grid);
        Ok(Self { cfg: cfg.clone(), grid, tf, tg })
    }

    pub fn theta(&self) -> &[f64] {
        &self.grid.theta
    }

    fn j(&self) -> u32 {
        self.cfg.j
    }

    /// Per-seller off-platform trading density `G^{J-1} g` at θ.
    pub fn off_density(&self, t: f64) -> f64 {
        let j = self.j() as i32;
        self.cfg.g.cdf(t).powi(j - 1) * self.cfg.g.pdf(t)
    }

    /// Per-seller on-platform trading density `F^{J-1} f` at θ.
    pub fn on_density(&self, t: f64) -> f64 {
        let j = self.j() as i32;
        self.cfg.f.cdf(t).powi(j - 1) * self.cfg.f.pdf(t)
    }

    /// The unconstrained off-platform bracket
    /// `θ - [1 - λF^J - (1-λ)G^J] / [(1-λ) J G^{J-1} g]`.
    pub fn baseline_bracket(&self, t: f64) -> f64 {
        let lam = self.cfg.lambda;
        let j = self.j() as i32;
        let fj = self.cfg.f.cdf(t).powi(j);
        let gj = self.cfg.g.cdf(t).powi(j);
        let den = (1.0 - lam) * self.j() as f64 * self.off_density(t);
        let num = 1.0 - lam * fj - (1.0 - lam) * gj;
        if den > 0.0 {
            t - num / den
        } else if num <= 0.0 {
            t
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Grid points where g vanishes strictly inside the θ-support: the bracket
    /// is reported as excluded there.
    pub fn outside_g_support(&self) -> Vec<usize> {
        let n = self.grid.len();
        (1..n - 1).filter(|&k| self.tg.pdf[k] <= 0.0).collect()
    }

    pub fn baseline(&self) -> Result<Baseline> {
        if self.cfg.lambda >= 1.0 {
            return Err(Error::Regime(
                "lambda = 1 leaves no off-platform market; use the information-design path".into(),
            ));
        }
        if !self.cfg.g.has_density() {
            return Err(Error::Unsupported("the baseline menu needs G with a density".into()));
        }
        let w = self.tg.power_weights(self.j());
        let s = screen(self.theta(), |t| self.baseline_bracket(t), &w);
        let th = self.theta().to_vec();
        let off = Schedule::new(Channel::Off, th.clone(), s.q.clone(), s.u.clone());
        let on = Schedule::new(Channel::On, th.clone(), th.clone(), s.u.clone());
        Ok(Baseline { on, off, raw: s.raw, kink: s.kink, ironed: s.ironed, outside_g: self.outside_g_support() })
    }
}

/// Baseline equilibrium: efficient quality on the platform, distorted quality
/// off it, equal rents in both channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub on: Schedule,
    pub off: Schedule,
    pub raw: Vec<f64>,
    pub kink: Option<f64>,
    pub ironed: bool,
    pub outside_g: Vec<usize>,
}

pub fn baseline_offplat_schedule(cfg: &MarketConfig) -> Result<Schedule> {
    Ok(Market::new(cfg)?.baseline()?.off)
}

/// Mussa–Rosen menu against the law of the maximum of `j` draws from `g`.
pub fn mussa_rosen_schedule(g: &Dist, j: u32, n: usize) -> Result<Schedule> {
    let cfg = MarketConfig { lambda: 0.0, j, f: g.clone(), g: g.clone(), grid: n, tol: 1e-9 };
    baseline_offplat_schedule(&cfg)
}

/// The Mussa–Rosen term and the showrooming term of the off-platform distortion.
pub fn decompose_distortion(cfg: &MarketConfig, theta: f64) -> Result<(f64, f64)> {
    let lam = cfg.lambda;
    if lam >= 1.0 {
        return Err(Error::Regime("decomposition needs lambda < 1".into()));
    }
    let (lo, hi) = cfg.support();
    if theta < lo || theta > hi {
        return Err(Error::Domain(format!("theta = {theta} outside [{lo}, {hi}]")));
    }
    let j = cfg.j as i32;
    let dg = cfg.j as f64 * cfg.g.cdf(theta).powi(j - 1) * cfg.g.pdf(theta);
    if !(dg > 0.0) {
        return Err(Error::Singular { at: theta, what: "zero off-platform trading density".into() });
    }
    let mr = theta - (1.0 - cfg.g.cdf(theta).powi(j)) / dg;
    let show = lam / (1.0 - lam) * (1.0 - cfg.f.cdf(theta).powi(j)) / dg;
    Ok((mr, show))
}

/// Prices of each quality level in both channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Tariff {
    pub q: Vec<f64>,
    pub p_on: Vec<f64>,
    /// Off-platform price; lower and upper ends coincide except on pooled
    /// (flat) segments where the inverse is set-valued.
    pub p_off_lo: Vec<f64>,
    pub p_off_hi: Vec<f64>,
}

/// Maps each quality offered in both channels to its two prices.
pub fn tariff_in_quality_space(on: &Schedule, off: &Schedule) -> Result<Tariff> {
    if !on.is_monotone(1e-12) || !off.is_monotone(1e-12) {
        return Err(Error::Inconsistency("tariff needs monotone schedules".into()));
    }
    let qmin_on = on.q[0];
    let qmax_on = on.q[on.len() - 1];
    let mut out = Tariff { q: vec![], p_on: vec![], p_off_lo: vec![], p_off_hi: vec![] };
    let n = off.len();
    let mut k = 0;
    while k < n {
        let q = off.q[k];
        let mut e = k;
        while e + 1 < n && (off.q[e + 1] - q).abs() <= 1e-12 {
            e += 1;
        }
        if q > 0.0 && q >= qmin_on && q <= qmax_on {
            // invert the on-platform schedule by monotone interpolation
            let th_on = interp(&on.q, &on.theta, q);
            let p_on = th_on * q - interp(&on.theta, &on.u, th_on);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in k..=e {
                lo = lo.min(off.p[i]);
                hi = hi.max(off.p[i]);
            }
            out.q.push(q);
            out.p_on.push(p_on);
            out.p_off_lo.push(lo);
            out.p_off_hi.push(hi);
        }
        k = e + 1;
    }
    Ok(out)
}

/// Optimal off-platform menu of the binary single-seller example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMenu {
    pub q_low: f64,
    pub q_high: f64,
    pub u_high: f64,
    pub q_on_low: f64,
    pub q_on_high: f64,
}

pub fn binary_single_seller(cfg: &BinaryConfig) -> Result<BinaryMenu> {
    if cfg.lambda >= 1.0 {
        return Err(Error::Regime("binary example needs lambda < 1".into()));
    }
    let q_low = (cfg.theta_l
        - cfg.f_h / cfg.f_l * (cfg.theta_h - cfg.theta_l) * (1.0 + cfg.lambda / (1.0 - cfg.lambda)))
        .max(0.0);
    Ok(BinaryMenu {
        q_low,
        q_high: cfg.theta_h,
        u_high: (cfg.theta_h - cfg.theta_l) * q_low,
        q_on_low: cfg.theta_l,
        q_on_high: cfg.theta_h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni(lambda: f64, j: u32) -> MarketConfig {
        MarketConfig::new(lambda, j, Dist::uniform(), Dist::uniform()).unwrap()
    }

    #[test]
    fn efficient_examples() {
        assert_eq!(efficient_quality(0.0), 0.0);
        assert_eq!(efficient_quality(0.7), 0.7);
        assert_eq!(efficient_quality(1.0), 1.0);
    }

    #[test]
    fn mussa_rosen_closed_form() {
        let b = Market::new(&uni(0.0, 1)).unwrap().baseline().unwrap();
        for (t, q) in b.off.theta.iter().zip(&b.off.q) {
            assert!((q - (2.0 * t - 1.0).max(0.0)).abs() < 1e-9);
        }
        let k = b.off.theta.iter().position(|&t| (t - 0.75).abs() < 1e-12).unwrap();
        assert!((b.off.q[k] - 0.5).abs() < 1e-12);
        assert!((b.off.u[b.off.len() - 1] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn two_sellers_example() {
        let m = Market::new(&uni(0.0, 2)).unwrap();
        assert!((m.baseline_bracket(0.8) - 0.575).abs() < 1e-12);
    }

    #[test]
    fn figure3_below_mr_and_efficient() {
        let cfg = MarketConfig::figure3().with_grid(501);
        let b = Market::new(&cfg).unwrap().baseline().unwrap();
        let mr = mussa_rosen_schedule(&cfg.g, cfg.j, 501).unwrap();
        for k in 0..b.off.len() {
            assert!(b.off.q[k] <= mr.q[k] + 1e-12 && mr.q[k] <= b.off.theta[k] + 1e-12);
        }
        assert_eq!(b.off.q[b.off.len() - 1], 1.0);
        b.off.check(1e-9).unwrap();
    }

    #[test]
    fn decomposition_examples() {
        let cfg = MarketConfig::figure3();
        let (mr, show) = decompose_distortion(&cfg, 0.5).unwrap();
        assert!(mr.is_finite() && show > 0.0);
        let m = Market::new(&cfg).unwrap();
        assert!((mr - show - m.baseline_bracket(0.5)).abs() < 1e-10);
        let (_, s0) = decompose_distortion(&cfg.clone().with_lambda(0.0), 0.5).unwrap();
        assert_eq!(s0, 0.0);
        let (_, s1) = decompose_distortion(&cfg, 1.0).unwrap();
        assert_eq!(s1, 0.0);
        assert_eq!(decompose_distortion(&cfg.with_lambda(1.0), 0.5).unwrap_err().category(), "regime");
    }

    #[test]
    fn rent_examples() {
        let th: Vec<f64> = (0..11).map(|k| k as f64 / 10.0).collect();
        let s = rent_schedule(&Schedule::new(Channel::Off, th.clone(), vec![0.0; 11], vec![0.0; 11]));
        assert!(s.u.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn lambda_one_rejected() {
        let err = Market::new(&uni(1.0, 2)).unwrap().baseline().unwrap_err();
        assert_eq!(err.category(), "regime");
    }

    #[test]
    fn binary_examples() {
        let m = binary_single_seller(&BinaryConfig::new(1.0, 1.2, 0.5, 0.5, 0.0).unwrap()).unwrap();
        assert!((m.q_low - 0.8).abs() < 1e-12);
        let m = binary_single_seller(&BinaryConfig::new(1.0, 1.2, 0.5, 0.5, 0.5).unwrap()).unwrap();
        assert!((m.q_low - 0.6).abs() < 1e-12);
        assert!((m.u_high - 0.2 * 0.6).abs() < 1e-12);
        let m = binary_single_seller(&BinaryConfig::new(1.0, 2.0, 0.5, 0.5, 0.5).unwrap()).unwrap();
        assert_eq!(m.q_low, 0.0);
        assert_eq!(m.q_high, 2.0);
    }

    #[test]
    fn tariff_zero_rent_region() {
        let b = Market::new(&MarketConfig::figure3().with_grid(801)).unwrap().baseline().unwrap();
        let t = tariff_in_quality_space(&b.on, &b.off).unwrap();
        assert!(!t.q.is_empty());
        for i in 0..t.q.len() {
            assert!(t.p_on[i] <= t.p_off_lo[i] + 1e-9);
        }
    }

    #[test]
    fn ironing_kicks_in_for_nonmonotone_bracket() {
        // a bimodal value law produces a non-monotone virtual value
        let g = Dist::mixture(vec![
            (0.5, Dist::uniform_on(0.0, 0.2).unwrap()),
            (0.5, Dist::uniform_on(0.0, 1.0).unwrap()),
        ])
        .unwrap();
        let cfg = MarketConfig::new(0.0, 1, g.clone(), g).unwrap().with_grid(1001);
        let b = Market::new(&cfg).unwrap().baseline().unwrap();
        assert!(b.ironed);
        b.off.check(1e-9).unwrap();
    }
}
