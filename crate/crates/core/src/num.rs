//! Small numerical kernels shared by the solvers.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = CompensatedSum::new();
    for x in it {
        s.add(x);
    }
    s.value()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Weighted pool-adjacent-violators: the nondecreasing fit minimizing
/// `sum w_i (y_i - fit_i)^2`.
///
/// Points with zero weight do not move block averages. Each takes its own
/// value clamped between the fitted neighbours, which keeps the output
/// monotone and leaves isolated zero-weight points (like an endpoint where
/// the density vanishes) untouched when they are already in order.
pub fn pav(y: &[f64], w: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), w.len());
    let n = y.len();
    // blocks over positive-weight points: (sum_wy, sum_w, count_of_indices)
    let idx: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
    let mut val: Vec<f64> = Vec::with_capacity(idx.len());
    let mut wt: Vec<f64> = Vec::with_capacity(idx.len());
    let mut len: Vec<usize> = Vec::with_capacity(idx.len());
    for &i in &idx {
        val.push(y[i]);
        wt.push(w[i]);
        len.push(1);
        while val.len() > 1 {
            let m = val.len();
            if val[m - 2] <= val[m - 1] {
                break;
            }
            let wsum = wt[m - 2] + wt[m - 1];
            let v = (val[m - 2] * wt[m - 2] + val[m - 1] * wt[m - 1]) / wsum;
            let l = len[m - 2] + len[m - 1];
            val.truncate(m - 1);
            wt.truncate(m - 1);
            len.truncate(m - 1);
            val[m - 2] = v;
            wt[m - 2] = wsum;
            len[m - 2] = l;
        }
    }
    let mut fit = vec![f64::NAN; n];
    let mut pos = 0;
    for (b, &v) in val.iter().enumerate() {
        for _ in 0..len[b] {
            fit[idx[pos]] = v;
            pos += 1;
        }
    }
    // zero-weight points
    let mut left = f64::NEG_INFINITY;
    let mut next_pos: Vec<f64> = vec![f64::INFINITY; n + 1];
    for i in (0..n).rev() {
        next_pos[i] = if w[i] > 0.0 { fit[i] } else { next_pos[i + 1] };
    }
    for i in 0..n {
        if w[i] > 0.0 {
            left = fit[i];
        } else {
            let right = next_pos[i + 1];
            let v = y[i].max(left).min(right);
            fit[i] = v;
            left = v;
        }
    }
    fit
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [0, 1].
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * pp * pp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// Composite Gauss–Legendre on [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, nodes: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (x, w) = gauss_legendre_unit(nodes);
    let h = (b - a) / panels as f64;
    let mut s = CompensatedSum::new();
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            s.add(wi * f(lo + xi * h));
        }
    }
    s.value() * h
}

/// Same as [`integrate`] with extra panel breaks at the given interior points.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64]) -> f64 {
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.extend(inner);
    pts.push(b);
    pts.windows(2)
        .map(|ab| integrate(&f, ab[0], ab[1], 32, 64))
        .sum()
}

/// Bisection for a sign change of `f` on [a, b].
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= tol {
            return Some(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Golden-section maximization of a unimodal function on [a, b].
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Cumulative trapezoid with U[0] = 0.
pub fn cumtrapz(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut s = CompensatedSum::new();
    out.push(0.0);
    for k in 1..x.len() {
        s.add(0.5 * (x[k] - x[k - 1]) * (y[k] + y[k - 1]));
        out.push(s.value());
    }
    out
}

/// Piecewise-linear interpolation on ascending `xs`, flat outside.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(k) => return ys[k],
        Err(k) => k - 1,
    };
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + t * (ys[k + 1] - ys[k])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pav_examples() {
        assert_eq!(pav(&[1.0, 0.0], &[1.0, 1.0]), vec![0.5, 0.5]);
        assert_eq!(pav(&[1.0, 0.0], &[3.0, 1.0]), vec![0.75, 0.75]);
        assert_eq!(pav(&[0.0, 1.0, 2.0], &[1.0, 2.0, 1.0]), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn pav_zero_weight_endpoint() {
        let fit = pav(&[f64::NEG_INFINITY, 0.2, 0.1, 0.5], &[0.0, 1.0, 1.0, 1.0]);
        assert_eq!(fit[0], f64::NEG_INFINITY);
        assert!((fit[1] - 0.15).abs() < 1e-15 && (fit[2] - 0.15).abs() < 1e-15);
        assert_eq!(fit[3], 0.5);
    }

    #[test]
    fn gl_exact_for_polynomials() {
        let v = integrate(|x| x.powi(7), 0.0, 2.0, 1, 4);
        assert!((v - 32.0).abs() < 1e-12);
        let (_, w) = gauss_legendre_unit(64);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, _) = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn compensated_beats_naive() {
        let xs = vec![1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(xs), 1.0);
    }
}
