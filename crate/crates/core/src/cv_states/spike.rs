//! Spike states: superpositions of `n` Gaussians placed at `μ_k = n·3^k`.
//!
//! In `(x, p)` coordinates the Wigner function is a sum of well separated blobs
//! `A e^{-2(x-c)^2} cos(Δp) e^{-p^2/2}`, one per unordered pair `(k, l)`, with
//! `c = (μ_k+μ_l)/2` and `Δ = μ_k − μ_l`. Neighbouring centres are at least `3n` apart,
//! so level-set integrals are taken blob by blob. The `x` integral of a thresholded
//! Gaussian is closed form; the `p` integral runs over the lobes of `cos(Δp)`, or over
//! the lobe average when `Δ` is so large that `cos(Δp)` is effectively equidistributed
//! under the envelope.

use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{GaussLegendre, KahanSum, QuadratureGrid};

use super::radial::{bisect, golden};

const WINDOW: f64 = 19.0;
const P_MAX: f64 = 9.0;
const HOMOGENISE_DELTA: f64 = 1000.0;

/// One `(k, l)` term of the spike Wigner function; `amp` already includes the factor 2
/// of off-diagonal pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeBlob {
    pub center: f64,
    pub delta: f64,
    pub amp: f64,
}

/// Closed-form data of the spike state `ψ_n`.
#[derive(Debug, Clone)]
pub struct SpikeState {
    n: u32,
    mu: Vec<f64>,
    c_n: f64,
    blobs: Vec<SpikeBlob>,
}

impl SpikeState {
    pub(crate) fn new(n: u32) -> Self {
        let mu: Vec<f64> = (1..=n).map(|k| n as f64 * 3f64.powi(k as i32)).collect();
        let mut c_n = 0.0;
        for a in &mu {
            for b in &mu {
                c_n += (-(a - b) * (a - b) / 2.0).exp();
            }
        }
        let base = FRAC_2_PI / c_n;
        let mut blobs = Vec::new();
        for (k, a) in mu.iter().enumerate() {
            for b in &mu[..=k] {
                blobs.push(SpikeBlob {
                    center: 0.5 * (a + b),
                    delta: a - b,
                    amp: if a == b { base } else { 2.0 * base },
                });
            }
        }
        blobs.sort_by(|u, v| u.center.total_cmp(&v.center));
        Self { n, mu, c_n, blobs }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Gaussian positions `μ_k`.
    pub fn positions(&self) -> &[f64] {
        &self.mu
    }

    /// Normalisation `c_n = Σ_{k,l} exp(-(μ_k-μ_l)²/2)`.
    pub fn c_n(&self) -> f64 {
        self.c_n
    }

    pub fn blobs(&self) -> &[SpikeBlob] {
        &self.blobs
    }

    pub(crate) fn support_radius(&self) -> f64 {
        self.n as f64 * 3f64.powi(self.n as i32) + 5.0
    }

    pub fn eval(&self, x: f64, p: f64) -> f64 {
        let start = self.blobs.partition_point(|b| b.center < x - WINDOW);
        let env = (-0.5 * p * p).exp();
        let mut acc = 0.0;
        for b in &self.blobs[start..] {
            if b.center > x + WINDOW {
                break;
            }
            let u = x - b.center;
            acc += b.amp * (-2.0 * u * u).exp() * (p * b.delta).cos();
        }
        acc * env
    }

    /// Wavefunction overlap `⟨ψ_n|ψ_m⟩` (real and nonnegative).
    pub fn overlap(&self, other: &SpikeState) -> f64 {
        let mut acc = 0.0;
        for a in &self.mu {
            for b in &other.mu {
                acc += (-(a - b) * (a - b) / 2.0).exp();
            }
        }
        acc / (self.c_n * other.c_n).sqrt()
    }

    /// Envelope `Σ_{ordered k,l} (1/c_n)(2/π) e^{-2(x-c_kl)^2} e^{-p^2/2} ≥ |W|`.
    pub fn envelope(&self, x: f64, p: f64) -> f64 {
        let start = self.blobs.partition_point(|b| b.center < x - WINDOW);
        let base = FRAC_2_PI / self.c_n;
        let mut acc = 0.0;
        for b in &self.blobs[start..] {
            if b.center > x + WINDOW {
                break;
            }
            let mult = if b.delta == 0.0 { 1.0 } else { 2.0 };
            let u = x - b.center;
            acc += mult * base * (-2.0 * u * u).exp();
        }
        acc * (-0.5 * p * p).exp()
    }
}

/// `∫ (aX)^k 1{aX ≥ c} du` with `X = e^{-2u²}`.
fn x_above(a: f64, c: f64, k: u32) -> f64 {
    if a <= 0.0 || a < c {
        return 0.0;
    }
    if c <= 0.0 {
        return if k == 0 {
            f64::INFINITY
        } else {
            a.powi(k as i32) * (PI / (2.0 * k as f64)).sqrt()
        };
    }
    let t = ((a / c).ln() / 2.0).max(0.0).sqrt();
    if k == 0 {
        2.0 * t
    } else {
        let kk = 2.0 * k as f64;
        a.powi(k as i32) * (PI / kk).sqrt() * libm::erf(kk.sqrt() * t)
    }
}

#[derive(Debug, Clone, Copy)]
struct Lobe {
    a: f64,
    b: f64,
    peak: f64,
    peak_val: f64,
}

#[derive(Debug, Clone)]
enum BlobMode {
    Lobes(Vec<Lobe>),
    Averaged,
}

#[derive(Debug, Clone)]
struct BlobLevels {
    blob: SpikeBlob,
    mode: BlobMode,
    totals: [f64; 2],
}

/// Level-set integrals of a spike Wigner function under `μ_W`.
#[derive(Debug, Clone)]
pub struct SpikeLevels {
    state: SpikeState,
    blobs: Vec<BlobLevels>,
    gl: GaussLegendre,
}

impl SpikeLevels {
    pub fn new(state: &SpikeState) -> Self {
        let gl = GaussLegendre::new(16);
        let blobs = state
            .blobs
            .iter()
            .map(|b| BlobLevels::new(*b, &gl))
            .collect();
        Self {
            state: state.clone(),
            blobs,
            gl,
        }
    }

    pub fn state(&self) -> &SpikeState {
        &self.state
    }

    pub fn sup_abs(&self) -> f64 {
        self.blobs.iter().map(|b| b.blob.amp).fold(0.0, f64::max)
    }

    /// `∫_{|W| ≥ c} |W|^k dμ_W`.
    pub fn moment_above(&self, c: f64, k: u32) -> f64 {
        let mut acc = KahanSum::default();
        for b in &self.blobs {
            acc.add(b.above(c, k, &self.gl));
        }
        0.5 * PI * acc.value()
    }

    /// `∫_{|W| < c} |W|^k dμ_W`; infinite for `k = 0`.
    pub fn moment_below(&self, c: f64, k: u32) -> f64 {
        if k == 0 {
            return f64::INFINITY;
        }
        if c <= 0.0 {
            return 0.0;
        }
        let mut acc = KahanSum::default();
        for b in &self.blobs {
            let total = b.totals[(k - 1) as usize];
            acc.add((total - b.above(c, k, &self.gl)).max(0.0));
        }
        0.5 * PI * acc.value()
    }

    pub fn total(&self, k: u32) -> f64 {
        self.moment_above(0.0, k)
    }
}

impl BlobLevels {
    fn new(blob: SpikeBlob, gl: &GaussLegendre) -> Self {
        if blob.delta >= HOMOGENISE_DELTA {
            // lobe averages: <|cos|> = 2/π, <cos²> = 1/2
            let a = blob.amp;
            let totals = [2.0 * a, 0.25 * PI * a * a];
            return Self {
                blob,
                mode: BlobMode::Averaged,
                totals,
            };
        }
        let h = |p: f64| (blob.delta * p).cos().abs() * (-0.5 * p * p).exp();
        let mut edges = vec![0.0];
        if blob.delta > 0.0 {
            let step = PI / blob.delta;
            let mut e = 0.5 * step;
            while e < P_MAX {
                edges.push(e);
                e += step;
            }
        } else {
            edges.extend((1..18).map(|j| j as f64 * 0.5));
        }
        edges.push(P_MAX);
        let mut lobes = Vec::with_capacity(edges.len());
        let mut totals = [KahanSum::default(), KahanSum::default()];
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut peak = golden(h, a, b);
            let mut peak_val = h(peak);
            for cand in [a, b] {
                if h(cand) > peak_val {
                    peak = cand;
                    peak_val = h(cand);
                }
            }
            lobes.push(Lobe {
                a,
                b,
                peak,
                peak_val,
            });
            for k in 1..=2u32 {
                let t = gl.integrate(a, peak, |p| x_above(blob.amp * h(p), 0.0, k))
                    + gl.integrate(peak, b, |p| x_above(blob.amp * h(p), 0.0, k));
                totals[(k - 1) as usize].add(2.0 * t);
            }
        }
        Self {
            blob,
            mode: BlobMode::Lobes(lobes),
            totals: [totals[0].value(), totals[1].value()],
        }
    }

    fn h(&self, p: f64) -> f64 {
        (self.blob.delta * p).cos().abs() * (-0.5 * p * p).exp()
    }

    /// `∫∫ |blob|^k 1{|blob| ≥ c} dx dp`.
    fn above(&self, c: f64, k: u32, gl: &GaussLegendre) -> f64 {
        if c <= 0.0 && k > 0 {
            return self.totals[(k - 1) as usize];
        }
        let amp = self.blob.amp;
        if amp < c {
            return 0.0;
        }
        match &self.mode {
            BlobMode::Lobes(lobes) => {
                let mut acc = KahanSum::default();
                for lobe in lobes {
                    if amp * lobe.peak_val < c {
                        continue;
                    }
                    let g = |p: f64| amp * self.h(p) - c;
                    let l = if g(lobe.a) >= 0.0 {
                        lobe.a
                    } else {
                        bisect(g, lobe.a, lobe.peak, g(lobe.a))
                    };
                    let r = if g(lobe.b) >= 0.0 {
                        lobe.b
                    } else {
                        bisect(g, lobe.peak, lobe.b, g(lobe.peak))
                    };
                    let f = |p: f64| x_above(amp * self.h(p), c, k);
                    acc.add(gl.integrate_smoothstep(l, lobe.peak, f));
                    acc.add(gl.integrate_smoothstep(lobe.peak, r, f));
                }
                2.0 * acc.value()
            }
            BlobMode::Averaged => {
                let p_c = if c > 0.0 {
                    (2.0 * (amp / c).ln()).sqrt().min(P_MAX)
                } else {
                    P_MAX
                };
                let inner = |p: f64| {
                    let e = amp * (-0.5 * p * p).exp();
                    let theta_c = if c > 0.0 {
                        (c / e).min(1.0).acos()
                    } else {
                        0.5 * PI
                    };
                    FRAC_2_PI
                        * gl.integrate_smoothstep(0.0, theta_c, |th| x_above(e * th.cos(), c, k))
                };
                let pieces = ((p_c / 0.5).ceil() as usize).max(1);
                let mut acc = KahanSum::default();
                for j in 0..pieces {
                    let a = p_c * j as f64 / pieces as f64;
                    let b = p_c * (j + 1) as f64 / pieces as f64;
                    acc.add(gl.integrate_smoothstep(a, b, inner));
                }
                2.0 * acc.value()
            }
        }
    }
}

/// Norms of a spike Wigner function next to the bounds they must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeNormBounds {
    pub n: u32,
    /// `sup |W|`.
    pub linf: f64,
    /// Lebesgue `∫ |W| dα`.
    pub l1: f64,
    pub c_n: f64,
}

impl SpikeNormBounds {
    pub fn linf_bound(&self) -> f64 {
        4.0 * FRAC_2_PI / self.n as f64
    }

    pub fn linf_ok(&self) -> bool {
        self.linf <= self.linf_bound()
    }

    pub fn l1_ok(&self) -> bool {
        self.l1 <= self.n as f64
    }

    /// `π ‖W‖₁ ‖W‖∞ ≥ 1 − 1e-6`.
    pub fn reciprocity_ok(&self) -> bool {
        PI * self.l1 * self.linf >= 1.0 - 1e-6
    }

    pub fn c_n_ok(&self) -> bool {
        self.c_n >= self.n as f64
    }

    pub fn holds(&self) -> bool {
        self.linf_ok() && self.l1_ok() && self.reciprocity_ok() && self.c_n_ok()
    }
}

/// `(‖W‖∞, ‖W‖₁, c_n)` for the spike state `ψ_n`.
pub fn spike_norm_bounds(n: u32, grid: &QuadratureGrid) -> Result<SpikeNormBounds> {
    if n == 0 {
        return Err(Error::Precondition("spike index must be positive".into()));
    }
    if n > super::MAX_SPIKE_N {
        return Err(Error::Capacity(format!(
            "spike index {n} exceeds {}",
            super::MAX_SPIKE_N
        )));
    }
    let state = SpikeState::new(n);
    let need = state.support_radius();
    if grid.radius < need {
        return Err(Error::Precondition(format!(
            "grid radius {} must be at least n*3^n + 5 = {need}",
            grid.radius
        )));
    }
    let levels = SpikeLevels::new(&state);
    let linf = state
        .blobs
        .iter()
        .map(|b| state.eval(b.center, 0.0).abs())
        .fold(0.0, f64::max);
    let l1 = levels.total(1) / PI;
    Ok(SpikeNormBounds {
        n,
        linf,
        l1,
        c_n: state.c_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_spike_is_a_normalised_gaussian() {
        let s = SpikeState::new(1);
        assert_eq!(s.positions(), &[3.0]);
        assert!((s.c_n() - 1.0).abs() < 1e-15);
        let lv = SpikeLevels::new(&s);
        assert!((lv.total(1) / PI - 1.0).abs() < 1e-12);
        assert!((lv.total(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn purity_and_normalisation_across_n() {
        for n in 1..=super::super::MAX_SPIKE_N {
            let s = SpikeState::new(n);
            let lv = SpikeLevels::new(&s);
            assert!((lv.total(2) - 1.0).abs() < 1e-9, "n={n} purity {}", lv.total(2));
        }
    }

    #[test]
    fn lobe_totals_match_closed_form() {
        // ∫∫ |blob|² = amp² π/4 (1 + e^{-Δ²})
        let gl = GaussLegendre::new(16);
        for delta in [0.0, 6.0, 12.0, 240.0] {
            let blob = SpikeBlob {
                center: 0.0,
                delta,
                amp: 0.3,
            };
            let lv = BlobLevels::new(blob, &gl);
            let want = 0.09 * PI / 4.0 * (1.0 + (-delta * delta).exp());
            assert!((lv.totals[1] - want).abs() < 1e-13, "{delta}");
        }
    }

    #[test]
    fn averaged_blob_agrees_with_lobes_near_the_switch() {
        let gl = GaussLegendre::new(16);
        let blob = SpikeBlob {
            center: 0.0,
            delta: 900.0,
            amp: 0.2,
        };
        let exact = BlobLevels::new(blob, &gl);
        let avg = BlobLevels {
            blob,
            mode: BlobMode::Averaged,
            totals: [0.4, 0.25 * PI * 0.04],
        };
        for c in [0.01, 0.05, 0.1, 0.15] {
            for k in 0..=2 {
                let u = exact.above(c, k, &gl);
                let v = avg.above(c, k, &gl);
                assert!((u - v).abs() <= 1e-4 * u.abs().max(1e-3), "c={c} k={k}: {u} vs {v}");
            }
        }
    }

    #[test]
    fn x_integral_matches_quadrature() {
        let gl = GaussLegendre::new(40);
        for (a, c, k) in [(1.0f64, 0.3f64, 0u32), (1.0, 0.3, 1), (0.7, 0.1, 2)] {
            let t = ((a / c).ln() / 2.0).sqrt();
            let num = gl.integrate(-t, t, |u| (a * (-2.0 * u * u).exp()).powi(k as i32));
            assert!((num - x_above(a, c, k)).abs() < 1e-12);
        }
    }

    #[test]
    fn overlap_is_normalised() {
        for n in 1..=4 {
            let s = SpikeState::new(n);
            assert!((s.overlap(&s) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn envelope_dominates() {
        let s = SpikeState::new(3);
        for b in s.blobs() {
            for dx in [-0.7, 0.0, 0.3] {
                for p in [-1.3, 0.0, 0.2, 2.0] {
                    assert!(s.eval(b.center + dx, p).abs() <= s.envelope(b.center + dx, p) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn radius_precondition() {
        let small = QuadratureGrid::cartesian(8, 10.0);
        assert!(matches!(spike_norm_bounds(2, &small), Err(Error::Precondition(_))));
    }
}
