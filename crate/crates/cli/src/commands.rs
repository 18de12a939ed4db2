//! The four commands. Each returns an [`Output`]: a report plus named tables,
//! written by the caller.

use crate::config::Settings;
use crate::error::{CliError, Result};
use crate::table::{num, Report, Table};
use platform_menus::dist::Dist;
use platform_menus::infodesign::{onplat_profit_kinked, optimal_offplat_quality_id, supporting_function_table, PoolingSolution};
use platform_menus::num::interp;
use platform_menus::oracle::{simulate_market, InfoStructure, SimulationConfig};
use platform_menus::regimes::{cohort_equilibrium, cohort_report, organic_report, symmetric_info_report};
use platform_menus::screening::{
    binary_single_seller, mussa_rosen_schedule, tariff_in_quality_space, Market, MarketConfig, Schedule,
};
use platform_menus::surplus::{baseline_report, EquilibriumReport};
use platform_menus::Error;
use rayon::prelude::*;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Baseline,
    SymmetricInfo,
    Organic,
    Cohort,
    Infodesign,
    Binary,
}

impl FromStr for Regime {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "baseline" => Regime::Baseline,
            "symmetric-info" => Regime::SymmetricInfo,
            "organic" => Regime::Organic,
            "cohort" => Regime::Cohort,
            "infodesign" => Regime::Infodesign,
            "binary" => Regime::Binary,
            _ => return Err(CliError::Usage(format!("unknown regime `{s}`"))),
        })
    }
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Baseline => "baseline",
            Regime::SymmetricInfo => "symmetric-info",
            Regime::Organic => "organic",
            Regime::Cohort => "cohort",
            Regime::Infodesign => "infodesign",
            Regime::Binary => "binary",
        }
    }

    /// Default primitives: the uniform example with uninformed consumers for
    /// information design, the menu example otherwise.
    pub fn default_market(&self) -> MarketConfig {
        match self {
            Regime::Infodesign => fig8_market(3.0 / 8.0),
            _ => MarketConfig::figure3(),
        }
    }
}

fn fig8_market(lambda: f64) -> MarketConfig {
    MarketConfig::new(lambda, 2, Dist::uniform(), Dist::point_mass(0.5).unwrap()).unwrap()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Output {
    pub report: Report,
    /// `(file name, table)`.
    pub tables: Vec<(String, Table)>,
    /// File name for the report when writing to a directory.
    pub report_name: Option<String>,
}

fn market_header(t: &mut Table, cfg: &MarketConfig) {
    t.comment(format!("lambda = {}", num(cfg.lambda)));
    t.comment(format!("J = {}", cfg.j));
    t.comment(format!("F = {}", cfg.f));
    t.comment(format!("G = {}", cfg.g));
    t.comment(format!("grid = {}", cfg.grid));
}

fn put_equilibrium(r: &mut Report, e: &EquilibriumReport) {
    r.put("regime", &e.regime);
    r.put_num("lambda", e.lambda);
    r.put("J", e.j);
    r.put_num("pi", e.pi);
    r.put_num("outside_option", e.outside_option);
    r.put_num("t", e.t);
    r.put_num("platform_revenue", e.platform_revenue);
    r.put_num("cs_on", e.cs_on);
    r.put_num("cs_off", e.cs_off);
    r.put_num("cs_on_per_capita", e.cs_on_per_capita);
    r.put_num("cs_off_per_capita", e.cs_off_per_capita);
    r.put_num("total_surplus", e.total_surplus);
    r.put("participation", e.participation);
}

/// `theta, q_on, u_on, p_on, q_off, u_off, p_off` and optional extra columns.
pub fn schedule_table(cfg: &MarketConfig, on: &Schedule, off: &Schedule, extra: &[(&str, &[f64])]) -> Table {
    let mut head = vec!["theta", "q_on", "u_on", "p_on", "q_off", "u_off", "p_off"];
    head.extend(extra.iter().map(|e| e.0));
    let mut t = Table::new(&head);
    market_header(&mut t, cfg);
    for k in 0..off.len() {
        let mut row = vec![off.theta[k], on.q[k], on.u[k], on.p[k], off.q[k], off.u[k], off.p[k]];
        row.extend(extra.iter().map(|e| e.1[k]));
        t.push_nums(&row);
    }
    t
}

fn pooling_table(s: &PoolingSolution, n: usize) -> Table {
    let mut t = Table::new(&["theta", "pi", "y", "prior_cdf", "posterior_cdf"]);
    t.comment(format!("lambda = {}", num(s.lambda)));
    t.comment(format!("J = {}", s.j));
    t.comment(format!("q_hat = {}", num(s.q_hat)));
    t.comment(format!("x1 = {}", num(s.x1)));
    t.comment(format!("x2 = {}", num(s.x2)));
    t.comment(format!("s = {}", num(s.s)));
    t.comment(format!("boundary = {}", s.boundary_flag));
    let f = s.f.as_ref().expect("solved pooling carries F");
    for (th, p, y) in supporting_function_table(s, n) {
        t.push_nums(&[th, p, y, f.cdf(th).powi(s.j as i32), s.posterior_cdf(th)]);
    }
    t
}

fn put_pooling(r: &mut Report, s: &PoolingSolution) {
    r.put("regime", "infodesign");
    r.put_num("lambda", s.lambda);
    r.put("J", s.j);
    r.put_num("q_hat", s.q_hat);
    r.put_num("x1", s.x1);
    r.put_num("x2", s.x2);
    r.put_num("s", s.s);
    r.put_num("objective", s.objective);
    r.put("boundary", s.boundary_flag);
    r.put_num("conditional_mean_gap", s.conditional_mean_gap());
}

pub fn solve(regime: Regime, settings: &Settings) -> Result<Output> {
    let mut out = Output::default();
    if regime == Regime::Binary {
        let b = settings.binary()?;
        let m = binary_single_seller(&b)?;
        let r = &mut out.report;
        r.put("regime", "binary");
        r.put_num("q_low", m.q_low);
        r.put_num("q_high", m.q_high);
        r.put_num("u_high", m.u_high);
        r.put_num("q_on_low", m.q_on_low);
        r.put_num("q_on_high", m.q_on_high);
        return Ok(out);
    }
    let cfg = settings.market(&regime.default_market())?;
    match regime {
        Regime::Infodesign => {
            let s = optimal_offplat_quality_id(&cfg)?;
            put_pooling(&mut out.report, &s);
            out.tables.push(("pooling.csv".into(), pooling_table(&s, cfg.grid)));
        }
        Regime::Organic => {
            let alpha = settings.alpha()?;
            let (e, sol) = organic_report(&cfg, alpha)?;
            put_equilibrium(&mut out.report, &e);
            out.report.put_num("alpha", alpha);
            out.report.put_num("shooting_residual", sol.residual);
            out.report.put("excluded_below", sol.excluded_below.map_or("none".into(), num));
            let t = schedule_table(&cfg, e.on.as_ref().unwrap(), e.off.as_ref().unwrap(), &[("gamma", &sol.gamma)]);
            out.tables.push(("schedule.csv".into(), t));
        }
        _ => {
            let e = match regime {
                Regime::Baseline => baseline_report(&cfg)?,
                Regime::SymmetricInfo => symmetric_info_report(&cfg)?,
                Regime::Cohort => cohort_report(&cfg)?,
                _ => unreachable!(),
            };
            put_equilibrium(&mut out.report, &e);
            if regime == Regime::Cohort {
                let c = cohort_equilibrium(&cfg)?;
                out.report.put("lr_condition_holds", c.lr_condition_holds);
                out.report.put("lr_scan", c.lr_scan.map_or("unsupported".into(), |b| b.to_string()));
            }
            let t = schedule_table(&cfg, e.on.as_ref().unwrap(), e.off.as_ref().unwrap(), &[]);
            out.tables.push(("schedule.csv".into(), t));
        }
    }
    Ok(out)
}

/// One `(λ, J)` cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub lambda: f64,
    pub j: u32,
    pub status: String,
    pub message: String,
    /// `pi, outside_option, t, platform_revenue, cs_on, cs_off, total_surplus`.
    pub values: [f64; 7],
    pub q: Vec<f64>,
    pub u: Vec<f64>,
}

fn run_cell(regime: Regime, cfg: &MarketConfig, alpha: f64, probes: &[f64]) -> Result<([f64; 7], Vec<f64>, Vec<f64>)> {
    if regime == Regime::Infodesign {
        let s = optimal_offplat_quality_id(cfg)?;
        let nan = f64::NAN;
        // uninformed consumers all get q̂ off the platform, with rent (m - μ)q̂ = 0 at m = μ
        return Ok(([s.objective, nan, nan, nan, nan, nan, nan], vec![s.q_hat; probes.len()], vec![0.0; probes.len()]));
    }
    let e = match regime {
        Regime::Baseline => baseline_report(cfg)?,
        Regime::SymmetricInfo => symmetric_info_report(cfg)?,
        Regime::Cohort => cohort_report(cfg)?,
        Regime::Organic => organic_report(cfg, alpha)?.0,
        _ => return Err(CliError::Usage(format!("regime `{}` cannot be swept", regime.name()))),
    };
    let off = e.off.as_ref().unwrap();
    let q = probes.iter().map(|&t| interp(&off.theta, &off.q, t)).collect();
    let u = probes.iter().map(|&t| interp(&off.theta, &off.u, t)).collect();
    Ok(([e.pi, e.outside_option, e.t, e.platform_revenue, e.cs_on, e.cs_off, e.total_surplus], q, u))
}

/// Every `(λ, J)` pair, solved on a work pool. Failing cells keep their error
/// category and the sweep continues.
pub fn sweep_cells(regime: Regime, base: &MarketConfig, alpha: f64, lambdas: &[f64], js: &[u32], probes: &[f64]) -> Result<Vec<Cell>> {
    if lambdas.is_empty() || js.is_empty() {
        return Err(CliError::Usage("sweep needs at least one lambda and one J".into()));
    }
    if regime == Regime::Binary {
        return Err(CliError::Usage("regime `binary` cannot be swept".into()));
    }
    let pairs: Vec<(f64, u32)> = js.iter().flat_map(|&j| lambdas.iter().map(move |&l| (l, j))).collect();
    Ok(pairs
        .par_iter()
        .map(|&(lambda, j)| {
            let cfg = MarketConfig { lambda, j, ..base.clone() };
            let res = cfg.validate().map_err(CliError::from).and_then(|_| run_cell(regime, &cfg, alpha, probes));
            match res {
                Ok((values, q, u)) => Cell { lambda, j, status: "ok".into(), message: String::new(), values, q, u },
                Err(e) => Cell {
                    lambda,
                    j,
                    status: e.category().into(),
                    message: e.to_string(),
                    values: [f64::NAN; 7],
                    q: vec![f64::NAN; probes.len()],
                    u: vec![f64::NAN; probes.len()],
                },
            }
        })
        .collect())
}

/// Comparative-statics summary along one axis for one probe.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSummary {
    pub fixed: f64,
    pub theta: f64,
    /// Quality never rises along the axis.
    pub nonincreasing: bool,
    /// Smallest axis value from which quality never rises again.
    pub decreasing_from: Option<f64>,
    /// Smallest axis value from which quality is zero for all later values.
    pub exclusion_threshold: Option<f64>,
}

fn summarize(points: &[(f64, f64)], fixed: f64, theta: f64) -> AxisSummary {
    let ok: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.1.is_finite()).collect();
    let tol = 1e-12;
    let nonincreasing = ok.windows(2).all(|w| w[1].1 <= w[0].1 + tol);
    let mut from = ok.len().saturating_sub(1);
    while from > 0 && ok[from].1 <= ok[from - 1].1 + tol {
        from -= 1;
    }
    let mut zero = ok.len();
    while zero > 0 && ok[zero - 1].1 <= 0.0 {
        zero -= 1;
    }
    AxisSummary {
        fixed,
        theta,
        nonincreasing,
        decreasing_from: ok.get(from).map(|p| p.0),
        exclusion_threshold: ok.get(zero).map(|p| p.0),
    }
}

/// Per probe: the λ-axis summary for every J, and the J-axis summary for every λ.
pub fn axis_summaries(cells: &[Cell], lambdas: &[f64], js: &[u32], probes: &[f64]) -> (Vec<AxisSummary>, Vec<AxisSummary>) {
    let find = |l: f64, j: u32| cells.iter().find(|c| c.lambda == l && c.j == j);
    let mut ls: Vec<f64> = lambdas.to_vec();
    ls.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut jj: Vec<u32> = js.to_vec();
    jj.sort();
    let mut by_lambda = vec![];
    let mut by_j = vec![];
    for (p, &theta) in probes.iter().enumerate() {
        for &j in &jj {
            let pts: Vec<(f64, f64)> = ls.iter().filter_map(|&l| find(l, j).map(|c| (l, c.q[p]))).collect();
            by_lambda.push(summarize(&pts, j as f64, theta));
        }
        for &l in &ls {
            let pts: Vec<(f64, f64)> = jj.iter().filter_map(|&j| find(l, j).map(|c| (j as f64, c.q[p]))).collect();
            by_j.push(summarize(&pts, l, theta));
        }
    }
    (by_lambda, by_j)
}

pub const DEFAULT_PROBES: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

pub fn sweep(regime: Regime, settings: &Settings, lambdas: &[f64], js: &[u32], probes: &[f64]) -> Result<Output> {
    let base = settings.market(&regime.default_market())?;
    let alpha = if regime == Regime::Organic { settings.alpha()? } else { 0.0 };
    let cells = sweep_cells(regime, &base, alpha, lambdas, js, probes)?;
    let mut head: Vec<String> = ["lambda", "J", "regime", "status", "pi", "outside_option", "t", "platform_revenue", "cs_on", "cs_off", "total_surplus"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for p in probes {
        head.push(format!("q_hat@{}", num(*p)));
    }
    for p in probes {
        head.push(format!("u_hat@{}", num(*p)));
    }
    head.push("message".into());
    let mut t = Table::new(&head);
    t.comment(format!("F = {}", base.f));
    t.comment(format!("G = {}", base.g));
    t.comment(format!("grid = {}", base.grid));
    if regime == Regime::Organic {
        t.comment(format!("alpha = {}", num(alpha)));
    }
    for c in &cells {
        let mut row = vec![num(c.lambda), c.j.to_string(), regime.name().to_string(), c.status.clone()];
        row.extend(c.values.iter().map(|&v| num(v)));
        row.extend(c.q.iter().map(|&v| num(v)));
        row.extend(c.u.iter().map(|&v| num(v)));
        row.push(c.message.clone());
        t.push(row);
    }
    let (bl, bj) = axis_summaries(&cells, lambdas, js, probes);
    let mut r = Report::default();
    r.put("regime", regime.name());
    r.put("cells", cells.len());
    r.put("failed_cells", cells.iter().filter(|c| c.status != "ok").count());
    let opt = |v: Option<f64>| v.map_or("none".to_string(), num);
    if lambdas.len() > 1 {
        for s in &bl {
            let tag = format!("[J={},theta={}]", s.fixed, num(s.theta));
            r.put(format!("lambda_nonincreasing{tag}"), s.nonincreasing);
            r.put(format!("lambda_bar{tag}"), opt(s.exclusion_threshold));
        }
    }
    if js.len() > 1 {
        for s in &bj {
            let tag = format!("[lambda={},theta={}]", num(s.fixed), num(s.theta));
            r.put(format!("J_decreasing_from{tag}"), opt(s.decreasing_from));
            r.put(format!("J_hat{tag}"), opt(s.exclusion_threshold));
        }
    }
    Ok(Output { report: r, tables: vec![("sweep.csv".into(), t)], report_name: None })
}

pub const FIGURES: [&str; 8] = ["fig-qmr", "fig-nonlin", "fig-lcs", "fig-rcs", "fig-jcs", "fig-alls", "fig-uninf", "fig-uninf-sol"];

fn family(cfg: &MarketConfig, axis: &str, values: &[f64], set: impl Fn(&MarketConfig, f64) -> MarketConfig + Sync) -> Result<Table> {
    let mut head = vec!["theta".to_string()];
    head.extend(values.iter().map(|v| format!("q_hat[{axis}={}]", num(*v))));
    let mut t = Table::new(&head);
    let cols: Vec<Schedule> = values
        .par_iter()
        .map(|&v| Market::new(&set(cfg, v))?.baseline().map(|b| b.off))
        .collect::<std::result::Result<_, Error>>()?;
    for k in 0..cols[0].len() {
        let mut row = vec![cols[0].theta[k]];
        row.extend(cols.iter().map(|c| c.q[k]));
        t.push_nums(&row);
    }
    Ok(t)
}

pub fn figure(name: &str) -> Result<Output> {
    let fig3 = MarketConfig::figure3();
    let mut r = Report::default();
    r.put("figure", name);
    let table = match name {
        "fig-qmr" => {
            let b = Market::new(&fig3)?.baseline()?;
            let mr = mussa_rosen_schedule(&fig3.g, fig3.j, fig3.grid)?;
            let mut t = Table::new(&["theta", "efficient", "mussa_rosen", "q_hat"]);
            market_header(&mut t, &fig3);
            for k in 0..b.off.len() {
                t.push_nums(&[b.off.theta[k], b.on.q[k], mr.q[k], b.off.q[k]]);
            }
            t
        }
        "fig-nonlin" => {
            let b = Market::new(&fig3)?.baseline()?;
            let tr = tariff_in_quality_space(&b.on, &b.off)?;
            let mut t = Table::new(&["q", "p_on", "p_off_lo", "p_off_hi"]);
            market_header(&mut t, &fig3);
            for i in 0..tr.q.len() {
                t.push_nums(&[tr.q[i], tr.p_on[i], tr.p_off_lo[i], tr.p_off_hi[i]]);
            }
            t
        }
        "fig-lcs" => {
            let cfg = fig3.clone().with_j(3);
            let mut t = family(&cfg, "lambda", &[0.0, 0.25, 0.5, 0.75], |c, v| c.clone().with_lambda(v))?;
            market_header(&mut t, &cfg);
            t.comment("lambda values are a fixed default, not from the caption");
            t
        }
        "fig-rcs" | "fig-jcs" => {
            let cfg = if name == "fig-rcs" { fig3.clone().with_lambda(0.0) } else { fig3.clone() };
            let mut t = family(&cfg, "J", &[2.0, 3.0, 5.0, 10.0], |c, v| c.clone().with_j(v as u32))?;
            market_header(&mut t, &cfg);
            t.comment("J values are a fixed default, not from the caption");
            t
        }
        "fig-alls" => {
            let base = SimulationConfig::figure9(2, 1, 0).market;
            let rows: Vec<EquilibriumReport> = (2..=10u32)
                .into_par_iter()
                .map(|j| baseline_report(&base.clone().with_j(j)))
                .collect::<std::result::Result<_, Error>>()?;
            let mut t = Table::new(&["J", "platform_revenue", "consumer_surplus", "cs_on", "cs_off", "seller_surplus", "onplat_profit", "total_surplus"]);
            t.comment(format!("lambda = {}", num(base.lambda)));
            t.comment(format!("F = {}", base.f));
            t.comment(format!("G = {}", base.g));
            t.comment(format!("grid = {}", base.grid));
            t.comment("J values 2..10 are a fixed default; seller_surplus = J x outside option; onplat_profit = J x gross profit");
            for e in rows {
                let jf = e.j as f64;
                t.push_nums(&[jf, e.platform_revenue, e.cs_on + e.cs_off, e.cs_on, e.cs_off, jf * e.outside_option, jf * e.pi, e.total_surplus]);
            }
            t
        }
        "fig-uninf" => {
            let (mu, q) = (0.5, 0.5);
            let mut t = Table::new(&["theta", "full_surplus", "pi"]);
            t.comment("mu = 0.5");
            t.comment("q_hat = 0.5");
            for k in 0..=1000 {
                let th = k as f64 / 1000.0;
                t.push_nums(&[th, 0.5 * th * th, onplat_profit_kinked(th, q, mu)]);
            }
            t
        }
        "fig-uninf-sol" => {
            let s = optimal_offplat_quality_id(&fig8_market(3.0 / 8.0))?;
            put_pooling(&mut r, &s);
            let mut t = pooling_table(&s, 1001);
            t.comment("F = uniform");
            t
        }
        other => {
            return Err(CliError::Usage(format!("unknown figure `{other}`; expected one of {}", FIGURES.join(", "))))
        }
    };
    r.put("rows", table.rows.len());
    Ok(Output { report: r, tables: vec![(format!("{name}.csv"), table)], report_name: Some(format!("{name}.txt")) })
}

pub fn parse_info(s: &str) -> Result<InfoStructure> {
    let bad = || CliError::Usage(format!("info structure `{s}`: expected interim, reveal:RHO or garble:EPS"));
    let (head, arg) = s.split_once(':').map_or((s, None), |(h, a)| (h, Some(a)));
    let arg = || arg.and_then(|a| a.parse::<f64>().ok()).ok_or_else(bad);
    Ok(match head {
        "interim" => InfoStructure::Interim,
        "reveal" => InfoStructure::RevealWithProb { rho: arg()? },
        "garble" => InfoStructure::GarbleMixture { eps: arg()? },
        _ => return Err(bad()),
    })
}

/// Monte Carlo run against the quadrature values of the same market. Without
/// overrides the market is λ = 2/3, G uniform, F = Beta(1/3, 1/3), J = 3.
pub fn oracle(settings: &Settings, n: usize, seed: u64, info: InfoStructure) -> Result<Output> {
    let mut cfg = settings.market(&SimulationConfig::figure9(3, 1, 0).market)?;
    if settings.get("g").is_none() {
        if let Some(g) = info.implied_expectation_law(&cfg.f)? {
            cfg.g = g;
        }
    }
    let sim = SimulationConfig::new(cfg.clone(), n, seed, info)?;
    let ks = sim.check_information()?;
    let e = baseline_report(&cfg)?;
    let rep = simulate_market(&sim, e.on.as_ref().unwrap(), e.off.as_ref().unwrap())?;
    let mut r = Report::default();
    r.put_num("lambda", cfg.lambda);
    r.put("J", cfg.j);
    r.put("F", &cfg.f);
    r.put("G", &cfg.g);
    r.put("n", n);
    r.put("seed", seed);
    r.put_num("ks_statistic", ks);
    let z = |a: f64, b: f64, se: f64| if se > 0.0 { (a - b) / se } else { 0.0 };
    for (k, mc, se, quad) in [
        ("cs_on", rep.cs_on, rep.cs_on_se, e.cs_on),
        ("cs_off", rep.cs_off, rep.cs_off_se, e.cs_off),
        ("pi", rep.seller_profit, rep.seller_profit_se, e.pi),
    ] {
        r.put_num(format!("{k}_mc"), mc);
        r.put_num(format!("{k}_se"), se);
        r.put_num(format!("{k}_quadrature"), quad);
        r.put_num(format!("{k}_z"), z(mc, quad, se));
    }
    r.put_num("on_rent_per_capita", rep.on_rent_per_capita);
    r.put_num("off_rent_per_capita", rep.off_rent_per_capita);
    r.put_num("match_efficiency", rep.match_efficiency);
    r.put("showrooming_violations", rep.showrooming_violations);
    let mut t = Table::new(&["seller", "profit"]);
    for (i, p) in rep.seller_profits.iter().enumerate() {
        t.push(vec![i.to_string(), num(*p)]);
    }
    Ok(Output { report: r, tables: vec![("sellers.csv".into(), t)], report_name: Some("oracle.txt".into()) })
}
