//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! `cargo test -p platform-menus-cli --test acceptance` runs all twelve;
//! pass criterion numbers after `--` to run a subset.

use platform_menus::dist::{likelihood_ratio_dominates, Dist};
use platform_menus::infodesign::{optimal_offplat_quality_id, supporting_function_table, PoolingSolution};
use platform_menus::oracle::{brute_force_binary, perturbation_audit, simulate_market, SimulationConfig};
use platform_menus::regimes::{
    cohort_equilibrium, cohort_report, corollary_sequence, organic_report, symmetric_info_outside_option,
    symmetric_info_report,
};
use platform_menus::screening::{
    mussa_rosen_schedule, tariff_in_quality_space, BinaryConfig, Market, MarketConfig,
};
use platform_menus::surplus::{baseline_report, budget_under_rule, MatchingRule};
use pmenu::commands::{axis_summaries, sweep_cells, AxisSummary, Regime, DEFAULT_PROBES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

#[derive(Default)]
struct Outcome {
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failed.push(what.into());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn timed(&mut self, start: Instant, limit: f64) {
        let secs = start.elapsed().as_secs_f64();
        self.note(format!("{secs:.2}s"));
        self.check(secs < limit, format!("runtime {secs:.2}s >= {limit}s"));
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Direct order-statistic Mussa-Rosen quality against `g` with `j` bidders.
fn mr_direct(g: &Dist, j: u32, t: f64) -> f64 {
    let h = j as f64 * g.cdf(t).powi(j as i32 - 1) * g.pdf(t);
    if h <= 0.0 {
        return 0.0;
    }
    (t - (1.0 - g.cdf(t).powi(j as i32)) / h).max(0.0)
}

fn c1_figure3_ordering() -> Outcome {
    let mut o = Outcome::default();
    let start = Instant::now();
    let cfg = MarketConfig::figure3().with_grid(2001);
    let b = Market::new(&cfg).unwrap().baseline().unwrap();
    let mr = mussa_rosen_schedule(&cfg.g, cfg.j, 2001).unwrap();
    o.timed(start, 5.0);
    let th = &b.off.theta;
    let top = *th.last().unwrap();
    let mut strict = 0;
    for k in 0..th.len() {
        let (t, m, q) = (th[k], mr.q[k], b.off.q[k]);
        o.check((m - mr_direct(&cfg.g, cfg.j, t)).abs() < 1e-9, format!("mussa-rosen formula at {t}"));
        o.check(t >= m && m >= q, format!("ordering at {t}"));
        // at the top all three curves meet
        if q > 0.0 && t < top {
            strict += 1;
            o.check(t > m && m > q, format!("strict ordering at {t}"));
        }
    }
    o.note(format!("{} grid points, strict on {strict}", th.len()));
    o
}

fn c2_tariff() -> Outcome {
    let mut o = Outcome::default();
    let start = Instant::now();
    let cfg = MarketConfig::figure3().with_grid(2001);
    let b = Market::new(&cfg).unwrap().baseline().unwrap();
    let t = tariff_in_quality_space(&b.on, &b.off).unwrap();
    o.timed(start, 5.0);
    let th = &b.off.theta;
    let first = b.off.q.iter().position(|&q| q > 0.0).unwrap();
    let theta0 = th[first - 1];
    let mut zero_rent = 0;
    o.check(!t.q.is_empty(), "no shared qualities");
    for i in 0..t.q.len() {
        let q = t.q[i];
        o.check(t.p_on[i] <= t.p_off_lo[i], format!("p_on > p_off at q = {q}"));
        // on the platform the type buying q is θ = q
        let direct = q * q - platform_menus::num::interp(&b.on.theta, &b.on.u, q);
        o.check((t.p_on[i] - direct).abs() < 1e-9, format!("p_on inversion at q = {q}"));
        if q <= theta0 {
            zero_rent += 1;
            o.check((t.p_on[i] - q * q).abs() <= 1e-6, format!("p_on != q^2 at q = {q}"));
        }
    }
    o.check(zero_rent > 0, "empty zero-rent region");
    o.check((theta0 - 0.8).abs() < 0.01, format!("zero-rent region ends at {theta0}, not near 8/10"));
    o.note(format!("{} shared q, {zero_rent} with zero rent, rents start at {theta0:.4}", t.q.len()));
    o
}

fn c3_rent_identity() -> Outcome {
    let mut o = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut worst_env: f64 = 0.0;
    for _ in 0..10 {
        let a = rng.gen_range(0.2..2.5);
        let extra = rng.gen_range(0.0..1.5);
        let lam = rng.gen_range(0.0..0.9);
        let j = rng.gen_range(1..=6);
        let cfg = MarketConfig::new(lam, j, Dist::beta(a, a).unwrap(), Dist::beta(a + extra, a + extra).unwrap())
            .unwrap()
            .with_grid(1001);
        let b = Market::new(&cfg).unwrap().baseline().unwrap();
        let d = max_abs_diff(&b.on.u, &b.off.u);
        worst = worst.max(d);
        o.check(d <= 1e-8, format!("U_on != U_off (gap {d:e}) at a={a:.3}, lambda={lam:.3}, J={j}"));
        o.check(b.off.u[0] == 0.0, "U(theta_L) != 0");
        // envelope: Û(θ) = ∫ q̂, by trapezoids
        let mut acc = 0.0;
        for k in 1..b.off.len() {
            acc += 0.5 * (b.off.q[k] + b.off.q[k - 1]) * (b.off.theta[k] - b.off.theta[k - 1]);
            worst_env = worst_env.max((acc - b.off.u[k]).abs());
        }
    }
    o.check(worst_env < 1e-3, format!("rents drift from the integral of quality by {worst_env:e}"));
    o.note(format!("10 configs, max |U_on - U_off| = {worst:e}, max |U - trapz q| = {worst_env:.1e}"));
    o
}

fn c4_mussa_rosen() -> Outcome {
    let mut o = Outcome::default();
    let cfg = MarketConfig::new(0.0, 1, Dist::uniform(), Dist::uniform()).unwrap().with_grid(2001);
    let r = baseline_report(&cfg).unwrap();
    let off = r.off.as_ref().unwrap();
    let want: Vec<f64> = off.theta.iter().map(|t| (2.0 * t - 1.0).max(0.0)).collect();
    let d = max_abs_diff(&off.q, &want);
    o.check(d <= 1e-9, format!("quality off max(0, 2theta-1) by {d:e}"));
    o.check((r.pi - 1.0 / 12.0).abs() <= 1e-6, format!("profit {} != 1/12", r.pi));
    o.note(format!("max |q - (2theta-1)+| = {d:e}, profit = {:.9}", r.pi));
    o
}

fn c5_binary_oracle() -> Outcome {
    let mut o = Outcome::default();
    let step = 1e-4;
    let start = Instant::now();
    for (tl, th, lam) in [(1.0, 1.2, 0.0), (1.0, 1.2, 0.5), (1.0, 2.0, 0.5)] {
        let cfg = BinaryConfig::new(tl, th, 0.5, 0.5, lam).unwrap();
        let q_l = (tl - (cfg.f_h / cfg.f_l) * (th - tl) * (1.0 + lam / (1.0 - lam))).max(0.0);
        let (bl, bh, bu) = brute_force_binary(&cfg, step).unwrap();
        let tag = format!("theta=({tl},{th}) lambda={lam}");
        o.check((bl - q_l).abs() <= step + 1e-12, format!("{tag}: q_L {bl} vs {q_l}"));
        o.check((bh - th).abs() <= step + 1e-12, format!("{tag}: q_H {bh} vs {th}"));
        o.check((bu - (th - tl) * q_l).abs() <= (th - tl) * step + 1e-12, format!("{tag}: U_H {bu}"));
        if q_l == 0.0 {
            o.check(bl == 0.0, format!("{tag}: corner not exact"));
        }
        o.note(format!("q_L {bl:.4}/{q_l:.4}"));
    }
    o.timed(start, 30.0);
    o
}

fn c6_budgets() -> Outcome {
    let mut o = Outcome::default();
    let cfg = MarketConfig::figure3();
    let base = baseline_report(&cfg).unwrap();
    let sym = symmetric_info_report(&cfg).unwrap();
    let coh = cohort_report(&cfg).unwrap();
    o.check(base.t > sym.t && sym.t > 0.0, format!("t* {} vs symmetric {}", base.t, sym.t));
    o.check(coh.t <= base.t, format!("cohort t {} > t* {}", coh.t, base.t));
    for alpha in [0.0, 1.0] {
        let (r, _) = organic_report(&cfg, alpha).unwrap();
        o.check(r.t <= base.t, format!("organic alpha={alpha}: t {} > t*", r.t));
    }
    let seq = corollary_sequence(&cfg, &[0.2, 0.1, 0.05, 0.01]).unwrap();
    let margins: Vec<f64> = seq.iter().map(|p| p.margin).collect();
    o.check(margins.iter().all(|&m| m > 0.0), "nonpositive corollary margin");
    // shrinking ε must not drive the margin toward zero
    o.check(margins.windows(2).all(|w| w[1] >= w[0] - 1e-9), format!("margin falls as eps shrinks: {margins:?}"));
    o.note(format!(
        "t* {:.6}, symmetric {:.6}, cohort {:.6}, margins {}",
        base.t,
        sym.t,
        coh.t,
        margins.iter().map(|m| format!("{m:.6}")).collect::<Vec<_>>().join("/")
    ));
    o
}

fn c7_organic() -> Outcome {
    let mut o = Outcome::default();
    let start = Instant::now();
    let cfg = MarketConfig::figure3();
    let base = baseline_report(&cfg).unwrap();
    let bo = base.off.as_ref().unwrap();
    let pihat = symmetric_info_outside_option(&cfg).unwrap();
    for alpha in [0.0, 1.0] {
        let (r, s) = organic_report(&cfg, alpha).unwrap();
        let tag = format!("alpha={alpha}");
        for k in 0..bo.len() {
            o.check(s.schedule.q[k] >= bo.q[k] - 1e-7, format!("{tag}: q below baseline at {}", bo.theta[k]));
            o.check(s.schedule.u[k] >= bo.u[k] - 1e-7, format!("{tag}: U below baseline at {}", bo.theta[k]));
        }
        o.check(r.pi <= base.pi, format!("{tag}: on-path profit {} > {}", r.pi, base.pi));
        o.check(
            base.outside_option <= r.outside_option && r.outside_option <= pihat,
            format!("{tag}: outside options {} <= {} <= {pihat} fails", base.outside_option, r.outside_option),
        );
        o.check(s.residual <= 1e-8, format!("{tag}: shooting residual {:e}", s.residual));
        o.note(format!("{tag} residual {:.1e}", s.residual));
    }
    o.timed(start, 60.0);
    o
}

fn c8_cohort() -> Outcome {
    let mut o = Outcome::default();
    let cfg = MarketConfig::figure3();
    let c = cohort_equilibrium(&cfg).unwrap();
    let (lam, j) = (cfg.lambda, cfg.j as i32);
    let mut worst: f64 = 0.0;
    for (k, &t) in c.schedule.theta.iter().enumerate().skip(1) {
        let (fc, gc) = (cfg.f.cdf(t), cfg.g.cdf(t));
        let num = 1.0 - lam * fc.powi(j) - (1.0 - lam) * gc.powi(j);
        let den = j as f64 * (lam * fc.powi(j - 1) * cfg.f.pdf(t) + (1.0 - lam) * gc.powi(j - 1) * cfg.g.pdf(t));
        let want = (t - num / den).max(0.0);
        worst = worst.max((c.schedule.q[k] - want).abs());
    }
    o.check(worst <= 1e-9, format!("schedule off the mixture formula by {worst:e}"));
    let laws = [
        (Dist::beta(0.25, 0.25).unwrap(), Dist::uniform()),
        (Dist::beta(0.5, 0.5).unwrap(), Dist::beta(2.0, 2.0).unwrap()),
        (Dist::uniform(), Dist::beta(3.0, 3.0).unwrap()),
        (Dist::beta(0.5, 2.0).unwrap(), Dist::uniform()),
        (Dist::beta(0.5, 2.0).unwrap(), Dist::beta(1.0, 4.0).unwrap()),
    ];
    let mut seen = [0, 0];
    for (f, g) in laws {
        for jj in [2, 5] {
            let cf = MarketConfig::new(0.5, jj, f.clone(), g.clone()).unwrap().with_grid(801);
            let s = cohort_equilibrium(&cf).unwrap();
            let scan = likelihood_ratio_dominates(&cf.f, &cf.g, cf.j, s.validity_range).unwrap();
            seen[usize::from(scan)] += 1;
            o.check(s.lr_condition_holds == scan, format!("gamma sign {} vs scan {scan} for {f} / {g}, J={jj}", s.lr_condition_holds));
        }
    }
    let r = cohort_report(&cfg).unwrap();
    let base = baseline_report(&cfg).unwrap();
    let bu = &base.off.as_ref().unwrap().u;
    let ru = &r.off.as_ref().unwrap().u;
    o.check(ru.iter().zip(bu).all(|(a, b)| a >= b), "cohort rents below baseline");
    o.note(format!(
        "mixture gap {worst:.1e}, gamma sign {} at figure 3, scan passes {} and fails {} of 10",
        c.lr_condition_holds, seen[1], seen[0]
    ));
    o
}

fn fig8(lam: f64) -> MarketConfig {
    MarketConfig::new(lam, 2, Dist::uniform(), Dist::point_mass(0.5).unwrap()).unwrap()
}

fn c9_infodesign() -> Outcome {
    let mut o = Outcome::default();
    let s: PoolingSolution = optimal_offplat_quality_id(&fig8(3.0 / 8.0)).unwrap();
    o.check(
        (s.x2 - s.x1 - 2.0 * s.q_hat).abs() <= 1e-10,
        format!("x2 - x1 = {} but 2q = {}", s.x2 - s.x1, 2.0 * s.q_hat),
    );
    o.check(s.conditional_mean_gap().abs() <= 1e-8, "conditional mean");
    let (worst, mean_gap) = s.contraction_margin(2001);
    o.check(worst >= -1e-8 && mean_gap.abs() <= 1e-8, "posterior law not a contraction");
    o.check(supporting_function_table(&s, 2001).iter().all(|(_, p, y)| *y >= p - 1e-8), "y below pi");
    o.check(
        (s.supporting_function(s.x1) - s.pi(s.x1)).abs() <= 1e-8,
        format!("y - pi = {} at x1", s.supporting_function(s.x1) - s.pi(s.x1)),
    );
    o.check((s.supporting_function(s.x2) - s.pi(s.x2)).abs() <= 1e-8, "y != pi at x2");
    let mut prev: Option<PoolingSolution> = None;
    for k in 0..=8 {
        let cur = optimal_offplat_quality_id(&fig8(k as f64 / 8.0)).unwrap();
        if let Some(p) = &prev {
            let tag = format!("lambda={}", cur.lambda);
            o.check(cur.q_hat <= p.q_hat + 1e-9, format!("{tag}: q rises"));
            o.check(cur.x1 >= p.x1 - 1e-9, format!("{tag}: x1 falls"));
            o.check(cur.x2 <= p.x2 + 1e-9, format!("{tag}: x2 rises"));
        }
        prev = Some(cur);
    }
    let one = prev.unwrap();
    o.check(one.q_hat == 0.0 && one.x1 == one.mu && one.x2 == one.mu, "lambda=1 not degenerate");
    o.note(format!(
        "q={:.6} x1={:.6} x2={:.6} s={:.6} boundary={}",
        s.q_hat, s.x1, s.x2, s.s, s.boundary_flag
    ));
    o
}

fn threshold_line(label: &str, a: &AxisSummary) -> String {
    match a.exclusion_threshold {
        Some(x) => format!("{label} {x:.2}"),
        None => format!("{label} none"),
    }
}

fn c10_comparative_statics() -> Outcome {
    let mut o = Outcome::default();
    let base = MarketConfig::figure3();
    let probes = DEFAULT_PROBES;
    let lambdas = [0.0, 0.25, 0.5, 0.75, 0.9];
    let cells = sweep_cells(Regime::Baseline, &base, 0.0, &lambdas, &[5], &probes).unwrap();
    o.check(cells.iter().all(|c| c.status == "ok"), "lambda sweep had failing cells");
    let (by_l, _) = axis_summaries(&cells, &lambdas, &[5], &probes);
    for a in &by_l {
        o.check(a.nonincreasing, format!("q rises in lambda at theta={}", a.theta));
    }
    for c in cells.windows(2) {
        for p in 0..probes.len() {
            o.check(c[1].u[p] <= c[0].u[p] + 1e-12, format!("rent rises in lambda at theta={}", probes[p]));
        }
    }
    let js = [2, 5, 10, 20, 50];
    let cells = sweep_cells(Regime::Baseline, &base, 0.0, &[0.5], &js, &probes).unwrap();
    o.check(cells.iter().all(|c| c.status == "ok"), "J sweep had failing cells");
    let (_, by_j) = axis_summaries(&cells, &[0.5], &js, &probes);
    for a in &by_j {
        o.check(
            a.decreasing_from.is_some_and(|d| d < 50.0),
            format!("q not eventually decreasing in J at theta={}", a.theta),
        );
    }
    let at = |v: &[AxisSummary]| v.iter().find(|a| a.theta == 0.6).cloned().unwrap();
    let lam_bar = at(&by_l);
    let j_hat = at(&by_j);
    o.check(lam_bar.exclusion_threshold.is_some_and(|x| x < 1.0), "no lambda threshold at 0.6");
    o.check(j_hat.exclusion_threshold.is_some(), "no J threshold at 0.6");
    // the figure-3 thresholds sit at the first grid value; rerun where they bite
    let fine: Vec<f64> = (0..20).map(|k| k as f64 * 0.05).collect();
    let cells = sweep_cells(Regime::Baseline, &base, 0.0, &fine, &[2], &[0.6]).unwrap();
    let (l2, _) = axis_summaries(&cells, &fine, &[2], &[0.6]);
    o.check(l2[0].nonincreasing && l2[0].exclusion_threshold.is_some_and(|x| x > 0.0 && x < 1.0), "J=2 lambda threshold");
    let js2: Vec<u32> = (1..=10).collect();
    let cells = sweep_cells(Regime::Baseline, &base, 0.0, &[0.1], &js2, &[0.6]).unwrap();
    let (_, j2) = axis_summaries(&cells, &[0.1], &js2, &[0.6]);
    o.check(j2[0].exclusion_threshold.is_some_and(|x| x > 1.0), "lambda=0.1 J threshold");
    o.note(format!(
        "{}, {}, {}, {}",
        threshold_line("lambda_bar(J=5)", &lam_bar),
        threshold_line("J_hat(lambda=.5)", &j_hat),
        threshold_line("lambda_bar(J=2)", &l2[0]),
        threshold_line("J_hat(lambda=.1)", &j2[0]),
    ));
    o
}

fn c11_monte_carlo() -> Outcome {
    let mut o = Outcome::default();
    let start = Instant::now();
    let sim = SimulationConfig::figure9(3, 1_000_000, 42);
    let e = baseline_report(&sim.market).unwrap();
    let r = simulate_market(&sim, e.on.as_ref().unwrap(), e.off.as_ref().unwrap()).unwrap();
    o.timed(start, 60.0);
    let mut zs = vec![];
    for (name, mc, se, quad) in [
        ("cs_on", r.cs_on, r.cs_on_se, e.cs_on),
        ("cs_off", r.cs_off, r.cs_off_se, e.cs_off),
        ("pi", r.seller_profit, r.seller_profit_se, e.pi),
    ] {
        let z = (mc - quad) / se;
        o.check(z.abs() <= 3.0, format!("{name}: z = {z:.2}"));
        zs.push(format!("{name} z={z:.2}"));
    }
    o.check(r.showrooming_violations == 0, format!("{} showrooming violations", r.showrooming_violations));
    o.check(r.match_efficiency == 1.0, format!("match efficiency {}", r.match_efficiency));
    o.note(zs.join(" "));
    o
}

fn c12_perturbation() -> Outcome {
    let mut o = Outcome::default();
    let cfg = MarketConfig::figure3();
    let m = Market::new(&cfg).unwrap();
    let b = m.baseline().unwrap();
    let gain = perturbation_audit(&cfg, &b.off, 100, 42).unwrap();
    o.check(gain <= 1e-7, format!("perturbation gains {gain:e}"));
    let eff = budget_under_rule(&m, MatchingRule::Efficient).unwrap();
    let rnd = budget_under_rule(&m, MatchingRule::Random).unwrap();
    let sb = budget_under_rule(&m, MatchingRule::SecondBest).unwrap();
    o.check(eff >= rnd && eff >= sb, format!("efficient {eff} vs random {rnd}, second-best {sb}"));
    o.note(format!("best gain {gain:.3e}; t* efficient {eff:.6}, random {rnd:.6}, second-best {sb:.6}"));
    o
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 12] = [
    (1, "figure-3 curve ordering", c1_figure3_ordering),
    (2, "tariff discount on the platform", c2_tariff),
    (3, "rent identity", c3_rent_identity),
    (4, "mussa-rosen reduction", c4_mussa_rosen),
    (5, "binary example vs brute force", c5_binary_oracle),
    (6, "budget orderings", c6_budgets),
    (7, "organic links", c7_organic),
    (8, "cohort targeting", c8_cohort),
    (9, "information design", c9_infodesign),
    (10, "comparative statics", c10_comparative_statics),
    (11, "monte carlo concordance", c11_monte_carlo),
    (12, "perturbation audit", c12_perturbation),
];

fn main() {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (n, name, run) in CRITERIA {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let o = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome { failed: vec![format!("panicked: {msg}")], notes: vec![] }
        });
        let pass = o.failed.is_empty();
        failures += usize::from(!pass);
        let mut line = format!("criterion {n:>2} {} {name}", if pass { "PASS" } else { "FAIL" });
        if !o.notes.is_empty() {
            line += &format!(" ({})", o.notes.join(", "));
        }
        if !pass {
            let shown: Vec<&str> = o.failed.iter().take(3).map(String::as_str).collect();
            line += &format!(" failed: {}", shown.join("; "));
            if o.failed.len() > 3 {
                line += &format!(" (+{} more)", o.failed.len() - 3);
            }
        }
        println!("{line}");
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
