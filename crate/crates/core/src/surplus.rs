//! Seller profits, outside options, advertising budgets and consumer surplus.

use crate::error::{Error, Result};
use crate::measure::{Law, Measure, SellerProblem};
use crate::num::dot;
use crate::screening::{Channel, Market, MarketConfig, Schedule};
use serde::{Deserialize, Serialize};

/// Per-regime bundle of menus and money.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub regime: String,
    pub lambda: f64,
    pub j: u32,
    #[serde(skip)]
    pub on: Option<Schedule>,
    #[serde(skip)]
    pub off: Option<Schedule>,
    /// Gross profit per seller.
    pub pi: f64,
    pub outside_option: f64,
    /// Advertising budget per seller.
    pub t: f64,
    pub platform_revenue: f64,
    pub cs_on: f64,
    pub cs_off: f64,
    pub cs_on_per_capita: f64,
    pub cs_off_per_capita: f64,
    pub total_surplus: f64,
    /// False when sellers earn more by refusing the platform than on path;
    /// the budget is then zero.
    pub participation: bool,
}

impl EquilibriumReport {
    pub fn assemble(
        regime: &str,
        cfg: &MarketConfig,
        on: Option<Schedule>,
        off: Option<Schedule>,
        pi: f64,
        outside_option: f64,
        (cs_on, cs_off): (f64, f64),
    ) -> Result<Self> {
        let t = advertising_budget(pi, outside_option)?;
        Ok(Self::with_budget(regime, cfg, on, off, pi, outside_option, t, cs_on, cs_off))
    }

    /// Like [`assemble`](Self::assemble) but lets sellers walk away: a
    /// negative margin gives a zero budget and `participation = false`.
    pub fn assemble_voluntary(
        regime: &str,
        cfg: &MarketConfig,
        on: Option<Schedule>,
        off: Option<Schedule>,
        pi: f64,
        outside_option: f64,
        (cs_on, cs_off): (f64, f64),
    ) -> Self {
        let t = (pi - outside_option).max(0.0);
        let mut r = Self::with_budget(regime, cfg, on, off, pi, outside_option, t, cs_on, cs_off);
        r.participation = pi >= outside_option - 1e-9 * (1.0 + pi.abs());
        r
    }

    #[allow(clippy::too_many_arguments)]
    fn with_budget(
        regime: &str,
        cfg: &MarketConfig,
        on: Option<Schedule>,
        off: Option<Schedule>,
        pi: f64,
        outside_option: f64,
        t: f64,
        cs_on: f64,
        cs_off: f64,
    ) -> Self {
        let lam = cfg.lambda;
        let jf = cfg.j as f64;
        let platform_revenue = jf * t;
        let per = |v: f64, mass: f64| if mass > 0.0 { v / mass } else { 0.0 };
        Self {
            regime: regime.to_string(),
            lambda: lam,
            j: cfg.j,
            on,
            off,
            pi,
            outside_option,
            t,
            platform_revenue,
            cs_on,
            cs_off,
            cs_on_per_capita: per(cs_on, lam),
            cs_off_per_capita: per(cs_off, 1.0 - lam),
            total_surplus: cs_on + cs_off + jf * (pi - t) + platform_revenue,
            participation: true,
        }
    }

    /// `total = CS_on + CS_off + J (Π - t) + platform revenue`.
    pub fn accounting_gap(&self) -> f64 {
        let jf = self.j as f64;
        (self.cs_on + self.cs_off + jf * (self.pi - self.t) + self.platform_revenue - self.total_surplus).abs()
    }
}

/// Rule deciding which seller an on-platform consumer is shown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchingRule {
    /// The seller with the highest match value.
    Efficient,
    /// A seller drawn uniformly at random.
    Random,
    /// The seller with the second-highest match value.
    SecondBest,
}

impl MatchingRule {
    /// Per-seller measure of on-platform consumers won, before the λ factor.
    pub fn winning_measure(&self, j: u32) -> Result<Measure> {
        let jf = j as f64;
        Ok(match self {
            MatchingRule::Efficient => Measure::new(vec![(1.0 / jf, Law::F, j)]),
            MatchingRule::Random => Measure::new(vec![(1.0 / jf, Law::F, 1)]),
            MatchingRule::SecondBest => {
                if j < 2 {
                    return Err(Error::Domain("second-best matching needs J >= 2".into()));
                }
                Measure::new(vec![(1.0, Law::F, j - 1), (-(jf - 1.0) / jf, Law::F, j)])
            }
        })
    }
}

/// The baseline seller problem under a matching rule.
pub fn seller_problem(cfg: &MarketConfig, rule: MatchingRule) -> Result<SellerProblem> {
    let lam = cfg.lambda;
    let jf = cfg.j as f64;
    Ok(SellerProblem {
        off: Measure::new(vec![((1.0 - lam) / jf, Law::G, cfg.j)]),
        on: rule.winning_measure(cfg.j)?.scaled(lam),
    })
}

/// Gross profit per seller at the off-platform menu `off`, with the
/// on-platform rent equal to the off-platform rent.
pub fn seller_gross_profit(m: &Market, off: &Schedule) -> f64 {
    let p = seller_problem(&m.cfg, MatchingRule::Efficient).expect("efficient rule is always defined");
    p.profit(m, &off.q, &off.u)
}

/// Mussa–Rosen profit against G^J, scaled by the off-platform share.
pub fn outside_option_baseline(m: &Market) -> f64 {
    let lam = m.cfg.lambda;
    if lam >= 1.0 {
        return 0.0;
    }
    let p = SellerProblem { off: Measure::new(vec![(1.0 / m.cfg.j as f64, Law::G, m.cfg.j)]), on: Measure::zero() };
    let s = p.solve(m);
    (1.0 - lam) * p.profit(m, &s.q, &s.u)
}

pub fn advertising_budget(pi: f64, outside_option: f64) -> Result<f64> {
    let t = pi - outside_option;
    if t < -1e-9 * (1.0 + pi.abs()) {
        return Err(Error::Inconsistency(format!(
            "gross profit {pi} below outside option {outside_option}"
        )));
    }
    Ok(t.max(0.0))
}

/// Aggregate rents: `(λ ∫U dF^J, (1-λ) ∫Û dG^J)`.
pub fn consumer_surplus(m: &Market, on: &Schedule, off: &Schedule) -> (f64, f64) {
    let lam = m.cfg.lambda;
    let j = m.cfg.j;
    let cs_on = if lam > 0.0 { lam * dot(&m.tf.power_weights(j), &on.u) } else { 0.0 };
    let cs_off = if lam < 1.0 { (1.0 - lam) * dot(&m.tg.power_weights(j), &off.u) } else { 0.0 };
    (cs_on, cs_off)
}

/// Equilibrium menus and profit under a matching rule, outside option fixed
/// at the baseline value.
pub fn budget_under_rule(m: &Market, rule: MatchingRule) -> Result<f64> {
    if m.cfg.lambda >= 1.0 {
        return Err(Error::Regime("matching comparison needs lambda < 1".into()));
    }
    let p = seller_problem(&m.cfg, rule)?;
    let s = p.solve(m);
    let pi = p.profit(m, &s.q, &s.u);
    Ok(pi - outside_option_baseline(m))
}

pub fn baseline_report(cfg: &MarketConfig) -> Result<EquilibriumReport> {
    let m = Market::new(cfg)?;
    let b = m.baseline()?;
    let pi = seller_gross_profit(&m, &b.off);
    let outside = outside_option_baseline(&m);
    let cs = consumer_surplus(&m, &b.on, &b.off);
    EquilibriumReport::assemble("baseline", cfg, Some(b.on), Some(b.off), pi, outside, cs)
}

/// Social surplus of the baseline allocation computed directly from qualities.
pub fn welfare(m: &Market, on: &Schedule, off: &Schedule) -> f64 {
    let lam = m.cfg.lambda;
    let j = m.cfg.j;
    let th = m.theta();
    let s_on: Vec<f64> = (0..th.len()).map(|k| th[k] * on.q[k] - 0.5 * on.q[k] * on.q[k]).collect();
    let s_off: Vec<f64> = (0..th.len()).map(|k| th[k] * off.q[k] - 0.5 * off.q[k] * off.q[k]).collect();
    lam * dot(&m.tf.power_weights(j), &s_on) + (1.0 - lam) * dot(&m.tg.power_weights(j), &s_off)
}

/// Builds a schedule pair from an off-platform quality/rent for the on-platform
/// efficient channel.
pub fn efficient_on(off: &Schedule) -> Schedule {
    Schedule::new(Channel::On, off.theta.clone(), off.theta.clone(), off.u.clone())
}
