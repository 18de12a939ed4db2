//! Seller-side trading measures written as combinations of cdf powers,
//! and the generic one-seller screening problem over them.

use crate::num::dot;
use crate::screening::{screen, Market, Screened};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Law {
    F,
    G,
}

/// `Σ c · D^p` with `D` the cdf of F or G.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Measure {
    pub terms: Vec<(f64, Law, u32)>,
}

impl Measure {
    pub fn new(terms: Vec<(f64, Law, u32)>) -> Self {
        Self { terms: terms.into_iter().filter(|t| t.0 != 0.0).collect() }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.terms.iter().map(|&(a, l, p)| (a * c, l, p)).collect())
    }

    pub fn plus(&self, other: &Measure) -> Self {
        let mut t = self.terms.clone();
        t.extend(other.terms.iter().copied());
        Self::new(t)
    }

    pub fn cdf(&self, m: &Market, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, l, p)| {
                let d = match l {
                    Law::F => &m.cfg.f,
                    Law::G => &m.cfg.g,
                };
                c * d.cdf(t).powi(p as i32)
            })
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.terms.iter().map(|t| t.0).sum()
    }

    pub fn density(&self, m: &Market, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, l, p)| {
                let d = match l {
                    Law::F => &m.cfg.f,
                    Law::G => &m.cfg.g,
                };
                if p == 0 {
                    0.0
                } else {
                    c * p as f64 * d.cdf(t).powi(p as i32 - 1) * d.pdf(t)
                }
            })
            .sum()
    }

    /// Nodal Stieltjes weights on the market grid.
    pub fn weights(&self, m: &Market) -> Vec<f64> {
        let mut w = vec![0.0; m.grid.len()];
        for &(c, l, p) in &self.terms {
            let tab = match l {
                Law::F => &m.tf,
                Law::G => &m.tg,
            };
            for (o, x) in w.iter_mut().zip(tab.power_weights(p)) {
                *o += c * x;
            }
        }
        w
    }
}

/// A seller who sells a screening menu against `off` and efficient quality
/// with full extraction up to the rent against `on`:
/// `max ∫[θq - q²/2 - U] d(off) + ∫[θ²/2 - U] d(on)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SellerProblem {
    pub off: Measure,
    pub on: Measure,
}

impl SellerProblem {
    /// The bracket `θ - [mass of rent-receiving types above θ] / (off density)`.
    pub fn bracket(&self, m: &Market, t: f64) -> f64 {
        let tail = self.off.total() - self.off.cdf(m, t) + self.on.total() - self.on.cdf(m, t);
        let a = self.off.density(m, t);
        if a > 0.0 {
            t - tail / a
        } else if tail <= 0.0 {
            t
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn solve(&self, m: &Market) -> Screened {
        let w = self.off.weights(m);
        screen(m.theta(), |t| self.bracket(m, t), &w)
    }

    pub fn profit(&self, m: &Market, q: &[f64], u: &[f64]) -> f64 {
        let th = m.theta();
        let off: Vec<f64> = (0..th.len()).map(|k| th[k] * q[k] - 0.5 * q[k] * q[k] - u[k]).collect();
        let on: Vec<f64> = (0..th.len()).map(|k| 0.5 * th[k] * th[k] - u[k]).collect();
        let mut v = dot(&self.off.weights(m), &off);
        if !self.on.terms.is_empty() {
            v += dot(&self.on.weights(m), &on);
        }
        v
    }
}
