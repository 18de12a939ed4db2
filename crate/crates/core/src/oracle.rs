//! Independent checks: a Monte Carlo market that replays the consumers'
//! choices one draw at a time, a brute-force search for the binary example,
//! and a random-perturbation audit of the equilibrium menu.

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::num::{cumtrapz, interp, CompensatedSum};
use crate::screening::{BinaryConfig, Channel, Market, MarketConfig, Schedule};
use crate::surplus::seller_gross_profit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How a consumer's expectation `m_j` and value `θ_j` are drawn jointly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InfoStructure {
    /// `m ~ G` and `θ ~ F` drawn separately. No consumer uses both, so the
    /// market outcome depends on the marginals only; off-platform rents are
    /// booked at the interim expectation.
    Interim,
    /// `θ ~ F`; the consumer sees `θ` with probability `rho` and otherwise
    /// only the prior mean.
    RevealWithProb { rho: f64 },
    /// `θ ~ F`; the consumer's signal is `θ` with probability `1 - eps` and an
    /// independent draw from F otherwise, so `m = (1-eps) s + eps μ`.
    GarbleMixture { eps: f64 },
}

impl InfoStructure {
    /// The law of `m` this structure produces from `f`, when it has a closed form.
    pub fn implied_expectation_law(&self, f: &Dist) -> Result<Option<Dist>> {
        let mu = f.mean();
        Ok(match *self {
            InfoStructure::Interim => None,
            InfoStructure::RevealWithProb { rho } => {
                Some(Dist::mixture(vec![(rho, f.clone()), (1.0 - rho, Dist::point_mass(mu)?)])?)
            }
            InfoStructure::GarbleMixture { eps } => {
                let s = |x: f64| (1.0 - eps) * x + eps * mu;
                match f {
                    Dist::Uniform { lo, hi } => Some(Dist::uniform_on(s(*lo), s(*hi))?),
                    Dist::Beta { a, b, lo, hi } => Some(Dist::Beta { a: *a, b: *b, lo: s(*lo), hi: s(*hi) }),
                    _ => None,
                }
            }
        })
    }

    fn draw<R: Rng>(&self, f: &Dist, g: &Dist, mu: f64, rng: &mut R) -> (f64, f64) {
        match *self {
            InfoStructure::Interim => {
                let m = g.sample(rng);
                (m, m)
            }
            InfoStructure::RevealWithProb { rho } => {
                let t = f.sample(rng);
                (if rng.gen::<f64>() < rho { t } else { mu }, t)
            }
            InfoStructure::GarbleMixture { eps } => {
                let t = f.sample(rng);
                let s = if rng.gen::<f64>() < eps { f.sample(rng) } else { t };
                ((1.0 - eps) * s + eps * mu, t)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub market: MarketConfig,
    pub n_consumers: usize,
    pub seed: u64,
    pub info: InfoStructure,
}

/// Two-sample size for the information self-check.
const KS_SAMPLES: usize = 20_000;
/// Kolmogorov–Smirnov coefficient at the 1% level.
const KS_C_01: f64 = 1.628;

impl SimulationConfig {
    pub fn new(market: MarketConfig, n_consumers: usize, seed: u64, info: InfoStructure) -> Result<Self> {
        market.validate()?;
        if n_consumers == 0 {
            return Err(Error::Domain("n_consumers must be at least 1".into()));
        }
        match info {
            InfoStructure::RevealWithProb { rho } if !(0.0..=1.0).contains(&rho) => {
                return Err(Error::Domain(format!("rho = {rho} outside [0, 1]")))
            }
            InfoStructure::GarbleMixture { eps } if !(0.0..=1.0).contains(&eps) => {
                return Err(Error::Domain(format!("eps = {eps} outside [0, 1]")))
            }
            _ => {}
        }
        Ok(Self { market, n_consumers, seed, info })
    }

    /// λ = 2/3, G uniform, F = Beta(1/3, 1/3) with `j` sellers.
    pub fn figure9(j: u32, n_consumers: usize, seed: u64) -> Self {
        let market = MarketConfig::new(2.0 / 3.0, j, Dist::beta(1.0 / 3.0, 1.0 / 3.0).unwrap(), Dist::uniform()).unwrap();
        Self { market, n_consumers, seed, info: InfoStructure::Interim }
    }

    /// Two-sample Kolmogorov–Smirnov test of the sampled expectations against
    /// the configured G. Returns the statistic, or an error when the test
    /// rejects at the 1% level.
    pub fn check_information(&self) -> Result<f64> {
        let f = &self.market.f;
        let g = &self.market.g;
        let mu = f.mean();
        let mut r1 = ChaCha8Rng::seed_from_u64(self.seed);
        r1.set_stream(u64::MAX);
        let mut r2 = ChaCha8Rng::seed_from_u64(self.seed);
        r2.set_stream(u64::MAX - 1);
        let mut a: Vec<f64> = (0..KS_SAMPLES).map(|_| self.info.draw(f, g, mu, &mut r1).0).collect();
        let mut b: Vec<f64> = (0..KS_SAMPLES).map(|_| g.sample(&mut r2)).collect();
        let d = ks_statistic(&mut a, &mut b);
        let n = KS_SAMPLES as f64;
        let crit = KS_C_01 * (2.0 / n).sqrt();
        if d > crit {
            return Err(Error::Inconsistency(format!(
                "sampled expectations differ from G: KS statistic {d:.5} > {crit:.5}"
            )));
        }
        Ok(d)
    }
}

/// Sup distance between two empirical cdfs; sorts both inputs.
pub fn ks_statistic(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0_f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Sample means with standard errors, per unit mass of consumers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub n_consumers: usize,
    pub seed: u64,
    pub n_on: usize,
    pub cs_on: f64,
    pub cs_on_se: f64,
    pub cs_off: f64,
    pub cs_off_se: f64,
    /// Mean gross profit per seller.
    pub seller_profit: f64,
    pub seller_profit_se: f64,
    pub seller_profits: Vec<f64>,
    pub on_rent_per_capita: f64,
    pub on_rent_per_capita_se: f64,
    pub off_rent_per_capita: f64,
    pub off_rent_per_capita_se: f64,
    /// Share of on-platform consumers shown their highest-value seller.
    pub match_efficiency: f64,
    /// On-platform consumers who strictly preferred the off-platform item.
    pub showrooming_violations: u64,
}

#[derive(Clone, Default)]
struct Acc {
    n_on: u64,
    matched: u64,
    violations: u64,
    on: CompensatedSum,
    on2: CompensatedSum,
    off: CompensatedSum,
    off2: CompensatedSum,
    pi: CompensatedSum,
    pi2: CompensatedSum,
    per_seller: Vec<CompensatedSum>,
}

impl Acc {
    fn new(j: usize) -> Self {
        Self { per_seller: vec![CompensatedSum::new(); j], ..Default::default() }
    }

    fn merge(&mut self, o: &Acc) {
        self.n_on += o.n_on;
        self.matched += o.matched;
        self.violations += o.violations;
        for (a, b) in [
            (&mut self.on, &o.on),
            (&mut self.on2, &o.on2),
            (&mut self.off, &o.off),
            (&mut self.off2, &o.off2),
            (&mut self.pi, &o.pi),
            (&mut self.pi2, &o.pi2),
        ] {
            a.add(b.value());
        }
        for (a, b) in self.per_seller.iter_mut().zip(&o.per_seller) {
            a.add(b.value());
        }
    }
}

const CHUNK: usize = 8192;

fn argmax_first(xs: &[f64]) -> usize {
    let mut k = 0;
    for i in 1..xs.len() {
        if xs[i] > xs[k] {
            k = i;
        }
    }
    k
}

fn mean_se(sum: f64, sum2: f64, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sum2 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Plays the market once per consumer. Every consumer has its own RNG stream,
/// and partial sums are reduced in chunk order, so the report is identical for
/// any thread count.
pub fn simulate_market(sim: &SimulationConfig, on: &Schedule, off: &Schedule) -> Result<SimulationReport> {
    if on.len() != off.len() || on.is_empty() {
        return Err(Error::Domain("on- and off-platform schedules must share a nonempty grid".into()));
    }
    let cfg = &sim.market;
    let (lam, j) = (cfg.lambda, cfg.j as usize);
    let (f, g) = (&cfg.f, &cfg.g);
    let mu = f.mean();
    let base = ChaCha8Rng::seed_from_u64(sim.seed);
    let n = sim.n_consumers;
    let surplus = |t: f64| {
        let q = interp(&on.theta, &on.q, t);
        t * q - 0.5 * q * q
    };

    let chunks: Vec<Acc> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Acc::new(j);
            let mut th = vec![0.0; j];
            let mut ms = vec![0.0; j];
            let mut score = vec![0.0; j];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let mut rng = base.clone();
                rng.set_stream(i as u64);
                let (seller, profit) = if rng.gen::<f64>() < lam {
                    for k in 0..j {
                        th[k] = f.sample(&mut rng);
                        score[k] = surplus(th[k]);
                    }
                    let s = argmax_first(&score);
                    acc.n_on += 1;
                    if s == argmax_first(&th) {
                        acc.matched += 1;
                    }
                    let t = th[s];
                    let u_on = interp(&on.theta, &on.u, t);
                    let u_off = interp(&off.theta, &off.u, t);
                    let (q, u) = if u_on >= u_off {
                        (interp(&on.theta, &on.q, t), u_on)
                    } else {
                        acc.violations += 1;
                        (interp(&off.theta, &off.q, t), u_off)
                    };
                    acc.on.add(u);
                    acc.on2.add(u * u);
                    (s, t * q - u - 0.5 * q * q)
                } else {
                    for k in 0..j {
                        let (m, t) = sim.info.draw(f, g, mu, &mut rng);
                        ms[k] = m;
                        th[k] = t;
                    }
                    let s = argmax_first(&ms);
                    let m = ms[s];
                    let q = interp(&off.theta, &off.q, m);
                    let p = m * q - interp(&off.theta, &off.u, m);
                    let u = if q > 0.0 { th[s] * q - p } else { 0.0 };
                    acc.off.add(u);
                    acc.off2.add(u * u);
                    (s, if q > 0.0 { p - 0.5 * q * q } else { 0.0 })
                };
                let x = profit / j as f64;
                acc.pi.add(x);
                acc.pi2.add(x * x);
                acc.per_seller[seller].add(profit);
            }
            acc
        })
        .collect();

    let mut tot = Acc::new(j);
    for c in &chunks {
        tot.merge(c);
    }
    let n_on = tot.n_on as usize;
    let (cs_on, cs_on_se) = mean_se(tot.on.value(), tot.on2.value(), n);
    let (cs_off, cs_off_se) = mean_se(tot.off.value(), tot.off2.value(), n);
    let (seller_profit, seller_profit_se) = mean_se(tot.pi.value(), tot.pi2.value(), n);
    let (on_pc, on_pc_se) = mean_se(tot.on.value(), tot.on2.value(), n_on);
    let (off_pc, off_pc_se) = mean_se(tot.off.value(), tot.off2.value(), n - n_on);
    Ok(SimulationReport {
        n_consumers: n,
        seed: sim.seed,
        n_on,
        cs_on,
        cs_on_se,
        cs_off,
        cs_off_se,
        seller_profit,
        seller_profit_se,
        seller_profits: tot.per_seller.iter().map(|s| s.value() / n as f64).collect(),
        on_rent_per_capita: on_pc,
        on_rent_per_capita_se: on_pc_se,
        off_rent_per_capita: off_pc,
        off_rent_per_capita_se: off_pc_se,
        match_efficiency: if n_on > 0 { tot.matched as f64 / n_on as f64 } else { 1.0 },
        showrooming_violations: tot.violations,
    })
}

/// Objective of the binary example with efficient on-platform quality and
/// on-platform rents equal to the off-platform ones.
fn binary_profit(cfg: &BinaryConfig, q_l: f64, q_h: f64, u_h: f64) -> f64 {
    let (tl, th, lam) = (cfg.theta_l, cfg.theta_h, cfg.lambda);
    lam * (cfg.f_l * tl * tl / 2.0 + cfg.f_h * (th * th / 2.0 - u_h))
        + (1.0 - lam) * (cfg.f_l * (tl * q_l - q_l * q_l / 2.0) + cfg.f_h * (th * q_h - q_h * q_h / 2.0 - u_h))
}

/// Exhaustive search over a quality grid of step `grid_step` on
/// `[0, θ_H]²`. The objective falls in `Û_H`, so for each pair the smallest
/// rent meeting IR and both IC constraints is used. Returns `(q̂_L, q̂_H, Û_H)`.
pub fn brute_force_binary(cfg: &BinaryConfig, grid_step: f64) -> Result<(f64, f64, f64)> {
    if !(grid_step > 0.0) {
        return Err(Error::Domain("grid step must be positive".into()));
    }
    let dt = cfg.theta_h - cfg.theta_l;
    let n = (cfg.theta_h / grid_step).floor() as usize + 1;
    let best = (0..n)
        .into_par_iter()
        .map(|a| {
            let q_l = a as f64 * grid_step;
            let u_h = dt * q_l;
            let mut best = (f64::NEG_INFINITY, 0.0, 0.0, 0.0);
            // IC for the low type needs q̂_H ≥ q̂_L
            for b in a..n {
                let q_h = b as f64 * grid_step;
                let v = binary_profit(cfg, q_l, q_h, u_h);
                if v > best.0 {
                    best = (v, q_l, q_h, u_h);
                }
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, 0.0, 0.0, 0.0), |x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x });
    Ok((best.1, best.2, best.3))
}

/// Profit change from replacing the off-platform quality by `q_new`, with
/// rents moved by the integral of the quality change and on-platform rents
/// following.
pub fn profit_gain(m: &Market, off: &Schedule, q_new: &[f64]) -> f64 {
    let dq: Vec<f64> = q_new.iter().zip(&off.q).map(|(a, b)| a - b).collect();
    let du = cumtrapz(&off.theta, &dq);
    let u: Vec<f64> = off.u.iter().zip(&du).map(|(a, b)| a + b).collect();
    let s = Schedule::new(Channel::Off, off.theta.clone(), q_new.to_vec(), u);
    seller_gross_profit(m, &s) - seller_gross_profit(m, off)
}

/// Largest profit gain over `n_perturbations` random feasible menus near
/// `off`: a few Gaussian bumps are added to the quality, which is then
/// truncated at zero and made nondecreasing by a running maximum.
pub fn perturbation_audit(cfg: &MarketConfig, off: &Schedule, n_perturbations: usize, seed: u64) -> Result<f64> {
    let m = Market::new(cfg)?;
    if off.len() != m.theta().len() {
        return Err(Error::Domain("schedule grid does not match the market grid".into()));
    }
    let (lo, hi) = cfg.support();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = if n_perturbations == 0 { 0.0 } else { f64::NEG_INFINITY };
    for _ in 0..n_perturbations {
        let bumps: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..=4))
            .map(|_| {
                (
                    rng.gen_range(-0.05..0.05),
                    rng.gen_range(lo..hi),
                    rng.gen_range(0.01..0.25) * (hi - lo),
                )
            })
            .collect();
        let mut run = 0.0_f64;
        let q: Vec<f64> = off
            .theta
            .iter()
            .zip(&off.q)
            .map(|(&t, &q)| {
                let d: f64 = bumps.iter().map(|(a, c, w)| a * (-0.5 * ((t - c) / w).powi(2)).exp()).sum();
                run = run.max((q + d).max(0.0));
                run
            })
            .collect();
        worst = worst.max(profit_gain(&m, off, &q));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::screening::binary_single_seller;
    use crate::surplus::baseline_report;

    fn fig9_small(n: usize, seed: u64) -> (SimulationConfig, Schedule, Schedule) {
        let sim = SimulationConfig::figure9(3, n, seed);
        let m = Market::new(&sim.market.clone().with_grid(801)).unwrap();
        let b = m.baseline().unwrap();
        (sim, b.on, b.off)
    }

    #[test]
    fn ks_statistic_examples() {
        assert_eq!(ks_statistic(&mut [0.1, 0.2], &mut [0.1, 0.2]), 0.0);
        assert_eq!(ks_statistic(&mut [0.1, 0.2], &mut [0.3, 0.4]), 1.0);
        assert_eq!(ks_statistic(&mut [0.1, 0.3], &mut [0.2, 0.4]), 0.5);
    }

    #[test]
    fn reproducible_and_efficient() {
        let (sim, on, off) = fig9_small(20_000, 7);
        let a = simulate_market(&sim, &on, &off).unwrap();
        let b = simulate_market(&sim, &on, &off).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.match_efficiency, 1.0);
        assert_eq!(a.showrooming_violations, 0);
        let other = simulate_market(&SimulationConfig { seed: 8, ..sim }, &on, &off).unwrap();
        assert_ne!(a.cs_on, other.cs_on);
    }

    #[test]
    fn raising_offplat_rents_creates_showrooming() {
        let (sim, on, mut off) = fig9_small(20_000, 1);
        for k in 0..off.len() {
            if off.theta[k] > 0.6 && off.theta[k] < 0.8 {
                off.u[k] += 0.01;
            }
        }
        let r = simulate_market(&sim, &on, &off).unwrap();
        assert!(r.showrooming_violations > 0);
    }

    #[test]
    fn information_self_check() {
        let f = Dist::beta(0.5, 0.5).unwrap();
        for info in [InfoStructure::RevealWithProb { rho: 0.4 }, InfoStructure::GarbleMixture { eps: 0.3 }] {
            let g = info.implied_expectation_law(&f).unwrap().unwrap();
            let market = MarketConfig::new(0.5, 2, f.clone(), g).unwrap();
            let sim = SimulationConfig::new(market.clone(), 10, 3, info).unwrap();
            sim.check_information().unwrap();
            let wrong = SimulationConfig::new(MarketConfig { g: Dist::uniform(), ..market }, 10, 3, info).unwrap();
            assert_eq!(wrong.check_information().unwrap_err().category(), "inconsistency");
            assert!(crate::dist::check_mean_preserving_spread(&f, &sim.market.g, 2001));
        }
    }

    /// With a garbled joint the realized off-platform rents average to the
    /// interim ones.
    #[test]
    fn garbled_realized_rents_match_quadrature() {
        let f = Dist::uniform();
        let info = InfoStructure::GarbleMixture { eps: 0.2 };
        let g = info.implied_expectation_law(&f).unwrap().unwrap();
        let market = MarketConfig::new(0.5, 2, f, g).unwrap().with_grid(801);
        let rep = baseline_report(&market).unwrap();
        let sim = SimulationConfig::new(market, 200_000, 11, info).unwrap();
        let r = simulate_market(&sim, rep.on.as_ref().unwrap(), rep.off.as_ref().unwrap()).unwrap();
        assert!((r.cs_off - rep.cs_off).abs() < 4.0 * r.cs_off_se, "{} {} {}", r.cs_off, rep.cs_off, r.cs_off_se);
        assert!((r.seller_profit - rep.pi).abs() < 4.0 * r.seller_profit_se);
    }

    #[test]
    fn brute_force_matches_closed_form() {
        for (th, lam) in [(1.2, 0.0), (1.2, 0.5), (2.0, 0.5)] {
            let cfg = BinaryConfig::new(1.0, th, 0.5, 0.5, lam).unwrap();
            let (ql, qh, uh) = brute_force_binary(&cfg, 1e-3).unwrap();
            let exact = binary_single_seller(&cfg).unwrap();
            assert!((ql - exact.q_low).abs() <= 1e-3 + 1e-12, "{ql} {}", exact.q_low);
            assert!((qh - exact.q_high).abs() <= 1e-3 + 1e-12);
            assert!((uh - exact.u_high).abs() <= (th - 1.0) * 1e-3 + 1e-12);
        }
        let (ql, _, _) = brute_force_binary(&BinaryConfig::new(1.0, 2.0, 0.5, 0.5, 0.5).unwrap(), 1e-3).unwrap();
        assert_eq!(ql, 0.0);
    }

    #[test]
    fn audit_finds_no_improvement() {
        let cfg = MarketConfig::figure3().with_grid(801);
        let b = Market::new(&cfg).unwrap().baseline().unwrap();
        assert_eq!(perturbation_audit(&cfg, &b.off, 0, 42).unwrap(), 0.0);
        let m = Market::new(&cfg).unwrap();
        assert_eq!(profit_gain(&m, &b.off, &b.off.q), 0.0);
        let gain = perturbation_audit(&cfg, &b.off, 30, 42).unwrap();
        assert!(gain <= 1e-7, "{gain}");
        let shifted: Vec<f64> = b.off.q.iter().map(|q| q + 0.05).collect();
        assert!(profit_gain(&m, &b.off, &shifted) < 0.0);
    }
}
