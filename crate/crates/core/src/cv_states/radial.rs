//! Level-set integrals of rotationally symmetric Wigner functions.
//!
//! The radial profile `f(s)`, `s = |α − centre|`, is cut at its sign changes and at
//! interior minima of `|f|` into humps on which `|f|` rises to one peak and then falls.
//! On such a hump `{|f| ≥ c}` is a single interval whose ends are found by bisection,
//! so every integrand handed to Gauss–Legendre is smooth.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::quadrature::{panel_edges, GaussLegendre, KahanSum};

use super::WignerEvaluator;

/// Radial piece on which `|f|` is unimodal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hump {
    pub a: f64,
    pub b: f64,
    pub peak: f64,
    pub peak_val: f64,
    pub sign: f64,
}

/// Radial profile of a rotationally symmetric single-mode Wigner function.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    eval: WignerEvaluator,
    center: (f64, f64),
    radius: f64,
    roots: Vec<f64>,
    humps: Vec<Hump>,
    gl: GaussLegendre,
}

const PIECE_WIDTH: f64 = 0.25;
const SCAN_STEP: f64 = 0.002;

impl RadialProfile {
    /// Builds the hump partition of `[0, radius]` with `nodes` Gauss points per panel.
    pub fn new(eval: &WignerEvaluator, radius: f64, nodes: usize) -> Result<Self> {
        let center = eval.radial_center().ok_or_else(|| {
            Error::Precondition(format!("{} is not rotationally symmetric", eval.descriptor()))
        })?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Precondition(format!("invalid radius {radius}")));
        }
        let mut prof = Self {
            eval: eval.clone(),
            center,
            radius,
            roots: Vec::new(),
            humps: Vec::new(),
            gl: GaussLegendre::new(nodes.max(2)),
        };
        prof.partition();
        Ok(prof)
    }

    /// Signed value at radius `s`.
    pub fn value(&self, s: f64) -> f64 {
        self.eval
            .eval_xp(self.center.0 + SQRT_2 * s, self.center.1)
    }

    fn abs(&self, s: f64) -> f64 {
        self.value(s).abs()
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Sign changes of `f` on `(0, R)`.
    pub fn roots(&self) -> &[f64] {
        &self.roots
    }

    pub fn humps(&self) -> &[Hump] {
        &self.humps
    }

    /// `sup |f|`.
    pub fn sup_abs(&self) -> f64 {
        self.humps.iter().map(|h| h.peak_val).fold(0.0, f64::max)
    }

    fn partition(&mut self) {
        let steps = ((self.radius / SCAN_STEP).ceil() as usize).max(1000);
        let h = self.radius / steps as f64;
        let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * h).collect();
        let vals: Vec<f64> = grid.iter().map(|&s| self.value(s)).collect();

        let mut cuts = Vec::new();
        for i in 0..steps {
            let (u, v) = (vals[i], vals[i + 1]);
            if u == 0.0 && i > 0 {
                self.roots.push(grid[i]);
                cuts.push(grid[i]);
            } else if u * v < 0.0 {
                let r = bisect(|s| self.value(s), grid[i], grid[i + 1], u);
                self.roots.push(r);
                cuts.push(r);
            }
        }
        for i in 1..steps {
            let (l, m, r) = (vals[i - 1].abs(), vals[i].abs(), vals[i + 1].abs());
            if m < l && m < r && vals[i - 1] * vals[i + 1] > 0.0 {
                let s = golden(|s| -self.abs(s), grid[i - 1], grid[i + 1]);
                cuts.push(s);
            }
        }
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup();

        let mut edges = vec![0.0];
        edges.extend(cuts);
        edges.push(self.radius);
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            // scan index with the largest |f| inside the segment
            let lo = ((a / h).floor() as usize).min(steps);
            let hi = ((b / h).ceil() as usize).min(steps);
            let mut best = lo;
            for i in lo..=hi {
                if grid[i] >= a && grid[i] <= b && vals[i].abs() > vals[best].abs() {
                    best = i;
                }
            }
            let left = if best > 0 { grid[best - 1].max(a) } else { a };
            let right = if best < steps { grid[best + 1].min(b) } else { b };
            let mut peak = golden(|s| self.abs(s), left, right);
            let mut peak_val = self.abs(peak);
            for cand in [a, b] {
                let v = self.abs(cand);
                if v > peak_val {
                    peak = cand;
                    peak_val = v;
                }
            }
            let sign = if self.value(peak) < 0.0 { -1.0 } else { 1.0 };
            self.humps.push(Hump {
                a,
                b,
                peak,
                peak_val,
                sign,
            });
        }
    }

    /// Interval of a hump where `|f| ≥ c`, or `None` when the peak lies below `c`.
    fn kept_interval(&self, hump: &Hump, c: f64) -> Option<(f64, f64)> {
        if c <= 0.0 {
            return Some((hump.a, hump.b));
        }
        if hump.peak_val < c {
            return None;
        }
        let l = if self.abs(hump.a) >= c {
            hump.a
        } else {
            bisect(|s| self.abs(s) - c, hump.a, hump.peak, self.abs(hump.a) - c)
        };
        let r = if self.abs(hump.b) >= c {
            hump.b
        } else {
            bisect(|s| self.abs(s) - c, hump.peak, hump.b, hump.peak_val - c)
        };
        Some((l, r))
    }

    /// Intervals of `[0, R]` where `|f| ≥ c`, in increasing order.
    pub fn kept_intervals(&self, c: f64) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for h in &self.humps {
            if let Some((l, r)) = self.kept_interval(h, c) {
                match out.last_mut() {
                    Some(last) if last.1 >= l => last.1 = r,
                    _ => out.push((l, r)),
                }
            }
        }
        out
    }

    fn piece(&self, u: f64, v: f64, k: u32, acc: &mut KahanSum) {
        if v <= u {
            return;
        }
        if k == 0 {
            acc.add(0.5 * (v * v - u * u));
            return;
        }
        let edges = panel_edges(u, v, &[], PIECE_WIDTH);
        for w in edges.windows(2) {
            acc.add(
                self.gl
                    .integrate(w[0], w[1], |s| self.abs(s).powi(k as i32) * s),
            );
        }
    }

    fn clipped(&self, u: f64, v: f64, lo: f64, hi: f64, k: u32, acc: &mut KahanSum) {
        self.piece(u.max(lo), v.min(hi), k, acc);
    }

    /// `∫ |f|^k · 1{|f| ≥ c} (above) or 1{|f| < c} (below)` over `lo ≤ s ≤ hi`, under
    /// `μ_W = π·Lebesgue` on the `α`-plane.
    pub fn moment(&self, c: f64, k: u32, above: bool, lo: f64, hi: f64) -> f64 {
        let hi = hi.min(self.radius);
        let mut acc = KahanSum::default();
        for h in &self.humps {
            if h.b <= lo || h.a >= hi {
                continue;
            }
            match (self.kept_interval(h, c), above) {
                (Some((l, r)), true) => {
                    self.clipped(l, h.peak.clamp(l, r), lo, hi, k, &mut acc);
                    self.clipped(h.peak.clamp(l, r), r, lo, hi, k, &mut acc);
                }
                (Some((l, r)), false) => {
                    if c > 0.0 {
                        self.clipped(h.a, l, lo, hi, k, &mut acc);
                        self.clipped(r, h.b, lo, hi, k, &mut acc);
                    }
                }
                (None, true) => {}
                (None, false) => {
                    self.clipped(h.a, h.peak, lo, hi, k, &mut acc);
                    self.clipped(h.peak, h.b, lo, hi, k, &mut acc);
                }
            }
        }
        2.0 * PI * PI * acc.value()
    }

    /// Plain Lebesgue `‖f‖₁`, `‖f‖₂` and `sup|f|` over the disc of radius `R`.
    pub fn lebesgue_norms(&self) -> (f64, f64, f64) {
        let l1 = self.moment(0.0, 1, true, 0.0, self.radius) / PI;
        let l2 = (self.moment(0.0, 2, true, 0.0, self.radius) / PI).sqrt();
        (l1, l2, self.sup_abs())
    }
}

/// Root of `f` on `[a, b]` given `f(a)`; `f(a)` and `f(b)` must differ in sign.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let neg = fa < 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if (fm < 0.0) == neg {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Maximiser of a unimodal `f` on `[a, b]` by golden-section search.
pub(crate) fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a) <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_2_PI;

    #[test]
    fn fock_root_count_matches_degree() {
        for n in [0u32, 1, 5, 16, 64] {
            let w = WignerEvaluator::fock(n);
            let p = RadialProfile::new(&w, w.support_radius(), 16).unwrap();
            assert_eq!(p.roots().len(), n as usize, "n={n}");
            assert_eq!(p.humps().len(), n as usize + 1);
        }
    }

    #[test]
    fn vacuum_level_sets_are_closed_form() {
        // |f| = (2/π) e^{-2s²}; {|f| ≥ c} is the disc of radius sqrt(ln(2/(πc))/2)
        let w = WignerEvaluator::vacuum();
        let p = RadialProfile::new(&w, w.support_radius(), 16).unwrap();
        let c = 0.2;
        let rho2 = (FRAC_2_PI / c).ln() / 2.0;
        let kept = p.kept_intervals(c);
        assert_eq!(kept.len(), 1);
        assert!((kept[0].1 - rho2.sqrt()).abs() < 1e-12);
        // μ_W measure of that disc is π·π·ρ²
        let meas = p.moment(c, 0, true, 0.0, f64::INFINITY);
        assert!((meas - PI * PI * rho2).abs() < 1e-10);
        // ∫_{|f|≥c}|f| dμ_W = π (1 - e^{-2ρ²})
        let m1 = p.moment(c, 1, true, 0.0, f64::INFINITY);
        assert!((m1 - PI * (1.0 - (-2.0 * rho2).exp())).abs() < 1e-10);
        let below = p.moment(c, 1, false, 0.0, f64::INFINITY);
        assert!((below - PI * (-2.0 * rho2).exp()).abs() < 1e-10);
    }

    #[test]
    fn off_centre_coherent_is_radial_about_its_centre() {
        let w = WignerEvaluator::coherent1(1.5, -0.5).unwrap();
        let p = RadialProfile::new(&w, w.support_radius(), 16).unwrap();
        let (l1, l2, linf) = p.lebesgue_norms();
        assert!((l1 - 1.0).abs() < 1e-10);
        assert!((PI * l2 * l2 - 1.0).abs() < 1e-10);
        assert!((linf - FRAC_2_PI).abs() < 1e-12);
    }
}
