use crate::dist::{check_mean_preserving_spread, Dist};
use crate::error::{Error, Result};
use crate::measure::{Law, Measure, SellerProblem};
use crate::screening::{Market, MarketConfig};
use crate::surplus::{
    advertising_budget, consumer_surplus, outside_option_baseline, seller_gross_profit, EquilibriumReport,
};

/// Per-seller winning measure when sellers cannot tell platform consumers
/// from the rest: `(λF^J + (1-λ)G^J)/J`.
pub fn mixture_measure(cfg: &MarketConfig) -> Measure {
    let jf = cfg.j as f64;
    Measure::new(vec![(cfg.lambda / jf, Law::F, cfg.j), ((1.0 - cfg.lambda) / jf, Law::G, cfg.j)])
}

/// Mussa–Rosen quality against the mixture, before ironing.
pub fn mixture_quality(cfg: &MarketConfig, theta: f64) -> Result<f64> {
    let lam = cfg.lambda;
    let j = cfg.j as i32;
    let jf = cfg.j as f64;
    let (fc, gc) = (cfg.f.cdf(theta), cfg.g.cdf(theta));
    let num = 1.0 - lam * fc.powi(j) - (1.0 - lam) * gc.powi(j);
    let den = lam * jf * fc.powi(j - 1) * cfg.f.pdf(theta) + (1.0 - lam) * jf * gc.powi(j - 1) * cfg.g.pdf(theta);
    if den <= 0.0 {
        if num <= 0.0 {
            return Ok(theta);
        }
        return Err(Error::Singular { at: theta, what: "mixture trading density".into() });
    }
    Ok((theta - num / den).max(0.0))
}

fn mixture_problem(cfg: &MarketConfig) -> SellerProblem {
    SellerProblem { off: mixture_measure(cfg), on: Measure::zero() }
}

/// Best deviation profit when the deviating seller cannot separate the two
/// populations.
pub fn symmetric_info_outside_option(cfg: &MarketConfig) -> Result<f64> {
    let m = Market::new(cfg)?;
    Ok(outside_of(&m))
}

fn outside_of(m: &Market) -> f64 {
    let p = mixture_problem(&m.cfg);
    let s = p.solve(m);
    p.profit(m, &s.q, &s.u)
}

/// `Π*` at the baseline menus less the mixture deviation profit.
pub fn budget_with_known_values(cfg: &MarketConfig) -> Result<f64> {
    let m = Market::new(cfg)?;
    let b = m.baseline()?;
    advertising_budget(seller_gross_profit(&m, &b.off), outside_of(&m))
}

/// Menus are the baseline ones; only the outside option changes.
pub fn symmetric_info_report(cfg: &MarketConfig) -> Result<EquilibriumReport> {
    let m = Market::new(cfg)?;
    let b = m.baseline()?;
    let pi = seller_gross_profit(&m, &b.off);
    let cs = consumer_surplus(&m, &b.on, &b.off);
    EquilibriumReport::assemble("symmetric-info", cfg, Some(b.on), Some(b.off), pi, outside_of(&m), cs)
}

/// `(1-ε) F + ε H` with `H` uniform on the support of `F`. Requires `H` to be
/// a contraction of `F` so that every member of the family is one too.
pub fn garbled_expectations(f: &Dist, eps: f64) -> Result<Dist> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Domain(format!("garbling weight {eps} outside [0, 1]")));
    }
    let (lo, hi) = f.support();
    let h = Dist::uniform_on(lo, hi)?;
    if !check_mean_preserving_spread(f, &h, 1001) {
        return Err(Error::Unsupported(format!("uniform on [{lo}, {hi}] is not a contraction of {f}")));
    }
    Dist::mixture(vec![(1.0 - eps, f.clone()), (eps, h)])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorollaryPoint {
    pub eps: f64,
    /// Baseline budget with expectations `G_ε`.
    pub t_star: f64,
    /// Budget with no information advantage: `Π* - Π̂` at `G = F`.
    pub t_symmetric: f64,
    pub margin: f64,
}

/// Baseline budgets along a shrinking garbling, against the budget the
/// platform earns when it knows nothing consumers do not.
pub fn corollary_sequence(cfg: &MarketConfig, eps: &[f64]) -> Result<Vec<CorollaryPoint>> {
    let same = MarketConfig { g: cfg.f.clone(), ..cfg.clone() };
    let t_sym = budget_with_known_values(&same)?;
    eps.iter()
        .map(|&e| {
            let c = MarketConfig { g: garbled_expectations(&cfg.f, e)?, ..cfg.clone() };
            let m = Market::new(&c)?;
            let b = m.baseline()?;
            let t = advertising_budget(seller_gross_profit(&m, &b.off), outside_option_baseline(&m))?;
            Ok(CorollaryPoint { eps: e, t_star: t, t_symmetric: t_sym, margin: t - t_sym })
        })
        .collect()
}
