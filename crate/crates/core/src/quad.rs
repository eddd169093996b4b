//! Gauss–Legendre quadrature.

use alloc::vec::Vec;
use core::f64::consts::PI;

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on the Legendre polynomial,
    /// starting from the Tricomi approximation of each root.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
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

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Composite integral over consecutive panels `[edges[i], edges[i+1]]`.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(&self, edges: &[f64], mut f: F) -> f64 {
        edges
            .windows(2)
            .map(|w| self.integrate(w[0], w[1], &mut f))
            .sum()
    }
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Panel edges on `[a, b]` refined geometrically toward an endpoint whose
/// integrand has structure on the scale `left` (resp. `right`). A scale of
/// `None` leaves that end unrefined.
pub fn graded_edges(a: f64, b: f64, left: Option<f64>, right: Option<f64>) -> Vec<f64> {
    const RATIO: f64 = 4.0;
    let len = b - a;
    let mut lo = Vec::new();
    if let Some(s) = left {
        let mut w = s.max(1e-300);
        while w < 0.25 * len {
            lo.push(a + w);
            w *= RATIO;
        }
    }
    let mut hi = Vec::new();
    if let Some(s) = right {
        let mut w = s.max(1e-300);
        while w < 0.25 * len {
            hi.push(b - w);
            w *= RATIO;
        }
    }
    let mut edges = Vec::with_capacity(lo.len() + hi.len() + 2);
    edges.push(a);
    edges.extend(lo);
    edges.extend(hi.into_iter().rev());
    edges.push(b);
    edges
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        let rule = GaussLegendre::new(5);
        // degree 9 is integrated exactly by 5 nodes
        let v = rule.integrate(0.0, 2.0, |x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-10);
        let s: f64 = rule.weights().iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn large_rule_is_accurate() {
        let rule = GaussLegendre::new(200);
        let v = rule.integrate(0.0, PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-13);
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn graded_edges_are_sorted() {
        let e = graded_edges(0.0, 1.0, Some(1e-4), Some(1e-3));
        assert_eq!(e[0], 0.0);
        assert_eq!(*e.last().unwrap(), 1.0);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(graded_edges(0.0, 1.0, None, None), alloc::vec![0.0, 1.0]);
    }
}
