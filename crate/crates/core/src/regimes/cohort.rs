use crate::dist::{likelihood_ratio_dominates, virtual_value};
use crate::error::Result;
use crate::measure::{Measure, SellerProblem};
use crate::screening::{Channel, Market, MarketConfig, Schedule};
use crate::surplus::{consumer_surplus, outside_option_baseline, EquilibriumReport};

use super::symmetric::mixture_measure;

/// Common menu offered to every cohort, with the showrooming multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortSolution {
    pub schedule: Schedule,
    pub gamma_bar: Vec<f64>,
    /// `γ̄ ≥ 0` throughout the validity range.
    pub lr_condition_holds: bool,
    /// Direct density-ratio scan over the same range; `None` when it cannot run.
    pub lr_scan: Option<bool>,
    pub validity_range: (f64, f64),
    pub profit: f64,
}

/// `γ̄(θ) = Jλ(1-λ) N [(F^{J-1}f)' G^{J-1}g - F^{J-1}f (G^{J-1}g)'] / D²` with
/// `N = 1 - (1-λ)G^J - λF^J` and `D = J(λF^{J-1}f + (1-λ)G^{J-1}g)`.
pub fn cohort_gamma_bar(cfg: &MarketConfig, theta: f64) -> f64 {
    let lam = cfg.lambda;
    let j = cfg.j as i32;
    let jf = cfg.j as f64;
    let (f, g) = (&cfg.f, &cfg.g);
    let (fc, gc) = (f.cdf(theta), g.cdf(theta));
    let (fp, gp) = (f.pdf(theta), g.pdf(theta));
    let a = fc.powi(j - 1) * fp;
    let b = gc.powi(j - 1) * gp;
    let deriv = |c: f64, p: f64, dp: f64| {
        let lead = if j >= 2 { (jf - 1.0) * c.powi(j - 2) * p * p } else { 0.0 };
        lead + c.powi(j - 1) * dp
    };
    let da = deriv(fc, fp, f.pdf_deriv(theta));
    let db = deriv(gc, gp, g.pdf_deriv(theta));
    let n = 1.0 - (1.0 - lam) * gc.powi(j) - lam * fc.powi(j);
    let d = jf * (lam * a + (1.0 - lam) * b);
    if d <= 0.0 {
        return 0.0;
    }
    jf * lam * (1.0 - lam) * n * (da * b - a * db) / (d * d)
}

/// `[θ₀, θ_H]` with `θ₀` the lowest grid point from which both order-statistic
/// virtual values stay nonnegative.
pub fn validity_range(cfg: &MarketConfig, theta: &[f64]) -> Result<(f64, f64)> {
    let hi = *theta.last().expect("nonempty grid");
    let mut lo = hi;
    for &t in theta.iter().rev() {
        let vf = virtual_value(&cfg.f, cfg.j, t)?;
        let vg = virtual_value(&cfg.g, cfg.j, t)?;
        if vf.min(vg) < 0.0 {
            break;
        }
        lo = t;
    }
    Ok((lo, hi))
}

pub fn cohort_equilibrium(cfg: &MarketConfig) -> Result<CohortSolution> {
    let m = Market::new(cfg)?;
    solve(&m)
}

fn solve(m: &Market) -> Result<CohortSolution> {
    let cfg = &m.cfg;
    let th = m.theta();
    let p = SellerProblem { off: mixture_measure(cfg), on: Measure::zero() };
    let s = p.solve(m);
    let profit = p.profit(m, &s.q, &s.u);
    let schedule = Schedule::new(Channel::Off, th.to_vec(), s.q, s.u);
    let gamma_bar: Vec<f64> = th.iter().map(|&t| cohort_gamma_bar(cfg, t)).collect();
    let range = validity_range(cfg, th)?;
    let scale = gamma_bar.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let lr_condition_holds = th
        .iter()
        .zip(&gamma_bar)
        .filter(|(t, _)| **t >= range.0 && **t <= range.1)
        .all(|(_, g)| *g >= -1e-10 * scale.max(1e-300));
    let lr_scan = likelihood_ratio_dominates(&cfg.f, &cfg.g, cfg.j, range).ok();
    Ok(CohortSolution { schedule, gamma_bar, lr_condition_holds, lr_scan, validity_range: range, profit })
}

/// Profit of the common menu against the outside option of the baseline.
pub fn cohort_report(cfg: &MarketConfig) -> Result<EquilibriumReport> {
    let m = Market::new(cfg)?;
    let c = solve(&m)?;
    let off = c.schedule.clone();
    let on = Schedule::new(Channel::On, off.theta.clone(), off.q.clone(), off.u.clone());
    let cs = consumer_surplus(&m, &on, &off);
    EquilibriumReport::assemble("cohort", cfg, Some(on), Some(off), c.profit, outside_option_baseline(&m), cs)
}
