//! Gauss–Legendre rules, composite panels and compensated summation.

use serde::{Deserialize, Serialize};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut deriv = 0.0;
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                deriv = dp;
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            if dp.is_finite() {
                deriv = dp;
            }
            let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
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

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = KahanSum::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        acc.value() * half
    }

    /// Integrates `f` over `[a, b]` after the smoothstep substitution
    /// `t = a + (b - a)(3u^2 - 2u^3)`. The Jacobian vanishes at both ends, which
    /// absorbs square-root endpoint singularities.
    pub fn integrate_smoothstep(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let len = b - a;
        let mut acc = KahanSum::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let u = 0.5 * (x + 1.0);
            let t = a + len * u * u * (3.0 - 2.0 * u);
            let jac = 6.0 * u * (1.0 - u) * len;
            acc.add(w * f(t) * jac);
        }
        0.5 * acc.value()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Neumaier-compensated running sum. Order of `add` calls fixes the result bit-for-bit.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn ksum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

/// Splits `[a, b]` at the given sorted interior breakpoints and additionally so that no
/// piece is wider than `max_width`.
pub fn panel_edges(a: f64, b: f64, breakpoints: &[f64], max_width: f64) -> Vec<f64> {
    let mut edges = vec![a];
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.push(b);
    let mut left = a;
    for cut in cuts {
        let width = cut - left;
        if width <= 0.0 {
            continue;
        }
        let pieces = (width / max_width).ceil().max(1.0) as usize;
        for j in 1..pieces {
            edges.push(left + width * j as f64 / pieces as f64);
        }
        edges.push(cut);
        left = cut;
    }
    edges
}

/// Layout of a phase-space quadrature grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridScheme {
    /// Composite Gauss–Legendre in `|α|` on `[0, R]` times uniform angle.
    Radial1D,
    /// Tensor composite Gauss–Legendre on `[-R, R]^2` in `(Re α, Im α)`.
    Cartesian2D,
}

/// Phase-space quadrature grid for one mode. Radii are in units of `|α|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub scheme: GridScheme,
    /// Gauss–Legendre nodes per panel; panels are at most half a unit wide.
    pub nodes_per_axis: usize,
    pub radius: f64,
}

pub(crate) const PANEL_WIDTH: f64 = 0.5;

impl QuadratureGrid {
    pub fn radial(nodes_per_axis: usize, radius: f64) -> Self {
        Self {
            scheme: GridScheme::Radial1D,
            nodes_per_axis,
            radius,
        }
    }

    pub fn cartesian(nodes_per_axis: usize, radius: f64) -> Self {
        Self {
            scheme: GridScheme::Cartesian2D,
            nodes_per_axis,
            radius,
        }
    }

    pub fn with_nodes(self, nodes_per_axis: usize) -> Self {
        Self {
            nodes_per_axis,
            ..self
        }
    }

    /// Radial nodes `(s, w)` with `Σ w f(s) ≈ ∫_0^R f(s) s ds`.
    pub fn radial_nodes(&self) -> Vec<(f64, f64)> {
        self.radial_nodes_with_breaks(&[])
    }

    /// As [`radial_nodes`](Self::radial_nodes), with extra panel edges.
    pub fn radial_nodes_with_breaks(&self, breaks: &[f64]) -> Vec<(f64, f64)> {
        let gl = GaussLegendre::new(self.nodes_per_axis);
        let edges = panel_edges(0.0, self.radius, breaks, PANEL_WIDTH);
        edges
            .windows(2)
            .flat_map(|w| {
                gl.mapped(w[0], w[1])
                    .map(|(s, wt)| (s, wt * s))
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    /// One-dimensional nodes on `[-R, R]` for the Cartesian scheme.
    pub fn axis_nodes(&self) -> Vec<(f64, f64)> {
        let gl = GaussLegendre::new(self.nodes_per_axis);
        let edges = panel_edges(-self.radius, self.radius, &[], PANEL_WIDTH);
        edges
            .windows(2)
            .flat_map(|w| gl.mapped(w[0], w[1]).collect::<Vec<_>>())
            .collect()
    }

    /// Number of uniform angles used when the integrand is not radially symmetric.
    pub fn angular_nodes(&self) -> usize {
        (8 * self.nodes_per_axis).max(64)
    }
}
