//! Uniform θ-grids and Stieltjes weights for measures of the form
//! `Σ c · d(cdf^p)`.
//!
//! A functional `∫ ψ dH` is evaluated as `Σ_k w_k ψ_k`, which is exact
//! when ψ is the piecewise-linear interpolant of its grid values. The cell
//! integrals of `H` use a small Gauss–Legendre rule, so densities (which
//! may be unbounded at the support ends) never enter.

use crate::dist::Dist;
use crate::num::gauss_legendre_unit;

const CELL_NODES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub theta: Vec<f64>,
}

impl Grid {
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Self {
        let n = n.max(2);
        let theta = (0..n)
            .map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
            .collect();
        Self { theta }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.theta[0]
    }

    pub fn hi(&self) -> f64 {
        self.theta[self.theta.len() - 1]
    }
}

/// A distribution's cdf and pdf cached on a grid and at the cell quadrature nodes.
#[derive(Debug, Clone)]
pub struct Tabulated {
    pub cdf: Vec<f64>,
    pub pdf: Vec<f64>,
    cell_cdf: Vec<[f64; CELL_NODES]>,
    gl_w: Vec<f64>,
}

impl Tabulated {
    pub fn new(d: &Dist, grid: &Grid) -> Self {
        let (x, w) = gauss_legendre_unit(CELL_NODES);
        let th = &grid.theta;
        let cdf: Vec<f64> = th.iter().map(|&t| d.cdf(t)).collect();
        let pdf: Vec<f64> = th.iter().map(|&t| d.pdf(t)).collect();
        let cell_cdf = th
            .windows(2)
            .map(|c| {
                let mut v = [0.0; CELL_NODES];
                for (i, xi) in x.iter().enumerate() {
                    v[i] = d.cdf(c[0] + xi * (c[1] - c[0]));
                }
                v
            })
            .collect();
        Self { cdf, pdf, cell_cdf, gl_w: w }
    }

    /// Nodal weights of the measure `d(cdf^p)`.
    pub fn power_weights(&self, p: u32) -> Vec<f64> {
        let n = self.cdf.len();
        let mut w = vec![0.0; n];
        for k in 0..n - 1 {
            let h0 = self.cdf[k].powi(p as i32);
            let h1 = self.cdf[k + 1].powi(p as i32);
            // mean of H over the cell
            let c: f64 = self.cell_cdf[k]
                .iter()
                .zip(&self.gl_w)
                .map(|(v, wi)| wi * v.powi(p as i32))
                .sum();
            let c = c.clamp(h0.min(h1), h0.max(h1));
            w[k] += c - h0;
            w[k + 1] += h1 - c;
        }
        w
    }

    /// `cdf^p` at the grid nodes.
    pub fn power(&self, p: u32) -> Vec<f64> {
        self.cdf.iter().map(|c| c.powi(p as i32)).collect()
    }
}

/// `Σ coef · w` for a list of weight vectors.
pub fn combine(terms: &[(f64, &[f64])]) -> Vec<f64> {
    let n = terms.first().map(|t| t.1.len()).unwrap_or(0);
    let mut out = vec![0.0; n];
    for (c, w) in terms {
        for (o, x) in out.iter_mut().zip(w.iter()) {
            *o += c * x;
        }
    }
    out
}
