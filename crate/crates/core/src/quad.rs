//! Small numerical utilities: Gauss–Legendre rules, finite-difference
//! stencils and local polynomial interpolation.

use std::f64::consts::PI;

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss–Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to [a, b].
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Fornberg weights for derivatives 0..=max_order at `x` from stencil `xs`.
///
/// Returns `w[m][j]`, the weight of sample `j` in the m-th derivative.
pub fn fornberg_weights(x: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    c
}

/// Centered fourth-order finite difference of order `order` (1..=4) of `f` at `x` with step `h`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64, order: usize) -> f64 {
    let s = |k: f64| f(x + k * h);
    match order {
        0 => f(x),
        1 => (-s(2.0) + 8.0 * s(1.0) - 8.0 * s(-1.0) + s(-2.0)) / (12.0 * h),
        2 => (-s(2.0) + 16.0 * s(1.0) - 30.0 * f(x) + 16.0 * s(-1.0) - s(-2.0)) / (12.0 * h * h),
        3 => {
            (-s(3.0) + 8.0 * s(2.0) - 13.0 * s(1.0) + 13.0 * s(-1.0) - 8.0 * s(-2.0) + s(-3.0))
                / (8.0 * h * h * h)
        }
        4 => {
            (-s(3.0) + 12.0 * s(2.0) - 39.0 * s(1.0) + 56.0 * f(x) - 39.0 * s(-1.0)
                + 12.0 * s(-2.0)
                - s(-3.0))
                / (6.0 * h.powi(4))
        }
        _ => panic!("central_difference supports orders 0..=4, got {order}"),
    }
}

/// Step for the order-4 centered stencils: eps^(1/6), scaled with |x|.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.powf(1.0 / 6.0) * x.abs().max(1.0)
}

/// Piecewise local quintic interpolation of tabulated samples.
///
/// Each evaluation uses the six samples nearest to the query point, so
/// values and the first two derivatives come from the same polynomial.
#[derive(Debug, Clone)]
pub struct LocalQuintic {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl LocalQuintic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 2, "need at least two samples");
        debug_assert!(xs.windows(2).all(|w| w[1] > w[0]));
        Self { xs, ys }
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Value and derivatives up to `order` (≤ 2).
    pub fn eval(&self, x: f64, order: usize) -> Vec<f64> {
        let n = self.xs.len();
        let width = n.min(6);
        let pos = self.xs.partition_point(|&v| v <= x);
        let start = pos.saturating_sub(width / 2).min(n - width);
        let xs = &self.xs[start..start + width];
        let w = fornberg_weights(x, xs, order);
        (0..=order)
            .map(|m| {
                w[m].iter()
                    .zip(&self.ys[start..start + width])
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }
}

/// Golden-section maximization of `f` on [a, b].
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(8);
        // degree 15 is the limit for 8 nodes
        let v = rule.integrate(-1.0, 2.0, |x| x.powi(15) + 3.0 * x * x);
        let exact = (2f64.powi(16) - 1.0) / 16.0 + (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-10 * exact.abs());
        let sum: f64 = rule.weights.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_odd_order_has_center_node() {
        let rule = GaussLegendre::new(5);
        assert_eq!(rule.nodes[2], 0.0);
        assert!((rule.weights[2] - 128.0 / 225.0).abs() < 1e-14);
    }

    #[test]
    fn fornberg_reproduces_quadratic_derivatives() {
        let xs = [0.0, 0.3, 0.7, 1.0, 1.6];
        let w = fornberg_weights(0.5, &xs, 2);
        let f = |x: f64| 2.0 * x * x - x + 1.0;
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let d: Vec<f64> = (0..3)
            .map(|m| w[m].iter().zip(&ys).map(|(a, b)| a * b).sum())
            .collect();
        assert!((d[0] - f(0.5)).abs() < 1e-13);
        assert!((d[1] - 1.0).abs() < 1e-12);
        assert!((d[2] - 4.0).abs() < 1e-11);
    }

    #[test]
    fn central_differences_are_fourth_order_accurate() {
        for order in 1..=4 {
            let h = fd_step(0.3);
            let d = central_difference(f64::sin, 0.3, h, order);
            let exact = match order {
                1 => 0.3f64.cos(),
                2 => -0.3f64.sin(),
                3 => -0.3f64.cos(),
                _ => 0.3f64.sin(),
            };
            let tol = [0.0, 1e-10, 1e-8, 1e-5, 1e-2][order];
            assert!((d - exact).abs() < tol, "order {order}: {d} vs {exact}");
        }
    }

    #[test]
    fn local_quintic_is_exact_for_quintics() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.25 - 2.0).collect();
        let f = |x: f64| x.powi(5) - 2.0 * x.powi(3) + x;
        let ys = xs.iter().map(|&x| f(x)).collect();
        let q = LocalQuintic::new(xs, ys);
        let v = q.eval(0.37, 2);
        assert!((v[0] - f(0.37)).abs() < 1e-12);
        assert!((v[1] - (5.0 * 0.37f64.powi(4) - 6.0 * 0.37 * 0.37 + 1.0)).abs() < 1e-10);
        assert!((v[2] - (20.0 * 0.37f64.powi(3) - 12.0 * 0.37)).abs() < 1e-8);
    }

    #[test]
    fn golden_section_finds_interior_maximum() {
        let (x, v) = golden_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, -1.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-14);
    }
}
