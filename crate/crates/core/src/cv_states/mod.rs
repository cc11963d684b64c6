//! Closed-form Wigner functions for Fock, coherent, spike and mixed states, and
//! phase-space quadrature of their norms and overlaps.

mod quad;
mod radial;
mod spike;

use std::f64::consts::{FRAC_2_PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use quad::{norms_adaptive, norms_quadrature, overlap_quadrature, Norms};
pub use radial::{Hump, RadialProfile};
pub use spike::{spike_norm_bounds, SpikeBlob, SpikeLevels, SpikeNormBounds, SpikeState};

/// Largest spike index supported; the outermost blob sits at `n·3^n`.
pub const MAX_SPIKE_N: u32 = 8;

/// Laguerre polynomial `L_n(x)` by the three-term recurrence.
pub fn laguerre_eval(n: u32, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// A point in `2m`-dimensional phase space, stored as all `x` components then all `p`
/// components. The complex coordinate of mode `j` is `α_j = (x_j + i p_j)/√2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    coords: Vec<f64>,
}

impl PhasePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || !coords.len().is_multiple_of(2) {
            return Err(Error::Contract(format!(
                "phase point needs an even, nonzero number of coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Contract("phase point has non-finite coordinates".into()));
        }
        Ok(Self { coords })
    }

    /// Single-mode point from `(x, p)`.
    pub fn xp(x: f64, p: f64) -> Self {
        Self { coords: vec![x, p] }
    }

    pub fn from_alpha(alpha: &[Complex64]) -> Self {
        let m = alpha.len();
        let mut coords = vec![0.0; 2 * m];
        for (j, a) in alpha.iter().enumerate() {
            coords[j] = SQRT_2 * a.re;
            coords[m + j] = SQRT_2 * a.im;
        }
        Self { coords }
    }

    pub fn modes(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn alpha(&self) -> Vec<Complex64> {
        let m = self.modes();
        (0..m)
            .map(|j| Complex64::new(self.coords[j], self.coords[m + j]) / SQRT_2)
            .collect()
    }
}

/// The state family behind a [`WignerEvaluator`].
#[derive(Debug, Clone)]
pub enum WignerKind {
    Fock(u32),
    Coherent(Vec<Complex64>),
    Spike(Arc<SpikeState>),
    Mixture(Vec<(f64, WignerEvaluator)>),
}

/// A continuous-variable state model with pointwise Wigner function.
#[derive(Debug, Clone)]
pub struct WignerEvaluator {
    kind: WignerKind,
    modes: usize,
    radial_symmetric: bool,
    support_radius: f64,
}

impl WignerEvaluator {
    pub fn fock(n: u32) -> Self {
        Self {
            kind: WignerKind::Fock(n),
            modes: 1,
            radial_symmetric: true,
            support_radius: (n as f64 + 1.0).sqrt() + 7.0,
        }
    }

    pub fn vacuum() -> Self {
        Self::fock(0)
    }

    /// Product coherent state centred at `center` (one entry per mode).
    pub fn coherent(center: Vec<Complex64>) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::Contract("coherent state needs at least one mode".into()));
        }
        if center.iter().any(|b| !b.re.is_finite() || !b.im.is_finite()) {
            return Err(Error::Contract("coherent amplitude must be finite".into()));
        }
        let reach = center.iter().map(|b| b.norm()).fold(0.0, f64::max);
        let modes = center.len();
        Ok(Self {
            radial_symmetric: modes == 1 && reach == 0.0,
            support_radius: reach + 7.0,
            modes,
            kind: WignerKind::Coherent(center),
        })
    }

    pub fn coherent1(re: f64, im: f64) -> Result<Self> {
        Self::coherent(vec![Complex64::new(re, im)])
    }

    /// Spike state built from `n` Gaussians at `n·3^k`, `k = 1..n`.
    pub fn spike(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Contract("spike index must be positive".into()));
        }
        if n > MAX_SPIKE_N {
            return Err(Error::Capacity(format!(
                "spike index {n} exceeds {MAX_SPIKE_N}; support grows like n*3^n"
            )));
        }
        let state = SpikeState::new(n);
        Ok(Self {
            support_radius: state.support_radius(),
            kind: WignerKind::Spike(Arc::new(state)),
            modes: 1,
            radial_symmetric: false,
        })
    }

    /// Convex combination of states on the same number of modes.
    pub fn mixture(parts: Vec<(f64, WignerEvaluator)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Contract("empty mixture".into()));
        }
        let modes = parts[0].1.modes;
        let mut total = 0.0;
        for (w, e) in &parts {
            if !(0.0..=1.0).contains(w) {
                return Err(Error::Contract(format!("mixture weight {w} outside [0,1]")));
            }
            if e.modes != modes {
                return Err(Error::DimensionMismatch {
                    expected: modes,
                    got: e.modes,
                });
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Contract(format!("mixture weights sum to {total}, not 1")));
        }
        let center = common_center(&parts);
        Ok(Self {
            radial_symmetric: center.is_some(),
            support_radius: parts.iter().map(|(_, e)| e.support_radius).fold(0.0, f64::max),
            modes,
            kind: WignerKind::Mixture(parts),
        })
    }

    pub fn kind(&self) -> &WignerKind {
        &self.kind
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// `(2/π)^m`, the largest possible `|W|`.
    pub fn sup_bound(&self) -> f64 {
        FRAC_2_PI.powi(self.modes as i32)
    }

    pub fn radial_symmetric(&self) -> bool {
        self.radial_symmetric
    }

    /// Effective truncation radius in units of `|α|`.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn is_pure(&self) -> bool {
        !matches!(self.kind, WignerKind::Mixture(_))
    }

    /// Centre of rotational symmetry in `(x, p)` coordinates for single-mode states.
    pub fn radial_center(&self) -> Option<(f64, f64)> {
        match &self.kind {
            WignerKind::Fock(_) => Some((0.0, 0.0)),
            WignerKind::Coherent(c) if c.len() == 1 => Some((SQRT_2 * c[0].re, SQRT_2 * c[0].im)),
            WignerKind::Coherent(_) | WignerKind::Spike(_) => None,
            WignerKind::Mixture(parts) => common_center(parts),
        }
    }

    /// Evaluates `W(α)`, checking the dimension.
    pub fn eval(&self, pt: &PhasePoint) -> Result<f64> {
        if pt.modes() != self.modes {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.modes,
                got: pt.coords.len(),
            });
        }
        Ok(self.eval_coords(&pt.coords))
    }

    /// Evaluates `W` at raw coordinates `[x.., p..]` of the right length.
    pub fn eval_coords(&self, c: &[f64]) -> f64 {
        match &self.kind {
            WignerKind::Fock(n) => fock_wigner(*n, 0.5 * (c[0] * c[0] + c[1] * c[1])),
            WignerKind::Coherent(center) => {
                let m = center.len();
                let mut d2 = 0.0;
                for (j, b) in center.iter().enumerate() {
                    let dx = c[j] - SQRT_2 * b.re;
                    let dp = c[m + j] - SQRT_2 * b.im;
                    d2 += 0.5 * (dx * dx + dp * dp);
                }
                FRAC_2_PI.powi(m as i32) * (-2.0 * d2).exp()
            }
            WignerKind::Spike(s) => s.eval(c[0], c[1]),
            WignerKind::Mixture(parts) => parts.iter().map(|(w, e)| w * e.eval_coords(c)).sum(),
        }
    }

    /// Single-mode evaluation at `(x, p)`.
    pub fn eval_xp(&self, x: f64, p: f64) -> f64 {
        self.eval_coords(&[x, p])
    }

    /// Short human-readable descriptor such as `fock:3`.
    pub fn descriptor(&self) -> String {
        match &self.kind {
            WignerKind::Fock(n) => format!("fock:{n}"),
            WignerKind::Coherent(c) => {
                let parts: Vec<String> = c.iter().map(|b| format!("{}:{}", b.re, b.im)).collect();
                format!("coherent:{}", parts.join(";"))
            }
            WignerKind::Spike(s) => format!("spike:{}", s.n()),
            WignerKind::Mixture(parts) => {
                let inner: Vec<String> = parts
                    .iter()
                    .map(|(w, e)| format!("{}*{}", w, e.descriptor()))
                    .collect();
                format!("mix({})", inner.join(","))
            }
        }
    }
}

/// `W_{|n⟩}` as a function of `|α|²`.
pub fn fock_wigner(n: u32, alpha2: f64) -> f64 {
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * FRAC_2_PI * (-2.0 * alpha2).exp() * laguerre_eval(n, 4.0 * alpha2)
}

fn common_center(parts: &[(f64, WignerEvaluator)]) -> Option<(f64, f64)> {
    let mut center = None;
    for (_, e) in parts {
        let c = e.radial_center()?;
        match center {
            None => center = Some(c),
            Some(prev) if prev == c => {}
            Some(_) => return None,
        }
    }
    center
}

/// Fidelity `|⟨ψ|φ⟩|²`-type overlap `F(ρ, σ)` from closed forms where available.
///
/// Supports Fock/coherent/spike pure states and mixtures thereof on one mode. Returns
/// `None` for pairs without a closed form.
pub fn fidelity_closed_form(rho: &WignerEvaluator, sigma: &WignerEvaluator) -> Option<f64> {
    if let WignerKind::Mixture(parts) = &sigma.kind {
        let mut acc = 0.0;
        for (w, s) in parts {
            acc += w * fidelity_closed_form(rho, s)?;
        }
        return Some(acc);
    }
    if let WignerKind::Mixture(parts) = &rho.kind {
        let mut acc = 0.0;
        for (w, r) in parts {
            acc += w * fidelity_closed_form(r, sigma)?;
        }
        return Some(acc);
    }
    if rho.modes != sigma.modes {
        return None;
    }
    match (&rho.kind, &sigma.kind) {
        (WignerKind::Fock(a), WignerKind::Fock(b)) => Some(if a == b { 1.0 } else { 0.0 }),
        (WignerKind::Coherent(a), WignerKind::Coherent(b)) => {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
            Some((-d2).exp())
        }
        (WignerKind::Fock(n), WignerKind::Coherent(b)) | (WignerKind::Coherent(b), WignerKind::Fock(n)) => {
            if b.len() != 1 {
                return None;
            }
            // Poisson weight e^{-|β|²}|β|^{2n}/n!
            let x = b[0].norm_sqr();
            if x == 0.0 {
                return Some(if *n == 0 { 1.0 } else { 0.0 });
            }
            let log_fact: f64 = (1..=*n).map(|k| (k as f64).ln()).sum();
            Some((-x + *n as f64 * x.ln() - log_fact).exp())
        }
        (WignerKind::Spike(a), WignerKind::Spike(b)) => Some(a.overlap(b).powi(2)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laguerre_direct(n: u32, x: f64) -> f64 {
        // Σ_k (-1)^k C(n,k) x^k / k!
        let mut acc = 0.0;
        let mut binom = 1.0;
        let mut fact = 1.0;
        for k in 0..=n {
            if k > 0 {
                binom *= (n - k + 1) as f64 / k as f64;
                fact *= k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * x.powi(k as i32) / fact;
        }
        acc
    }

    #[test]
    fn laguerre_small_cases() {
        assert_eq!(laguerre_eval(0, 3.7), 1.0);
        assert_eq!(laguerre_eval(1, 2.0), -1.0);
        assert_eq!(laguerre_eval(2, 2.0), -1.0);
    }

    proptest! {
        #[test]
        fn laguerre_matches_expansion(n in 0u32..=8, x in 0.0f64..20.0) {
            let a = laguerre_eval(n, x);
            let b = laguerre_direct(n, x);
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "n={} x={} {} {}", n, x, a, b);
        }

        #[test]
        fn wigner_is_bounded(n in 0u32..40, x in -8.0f64..8.0, p in -8.0f64..8.0) {
            let w = WignerEvaluator::fock(n).eval_xp(x, p);
            prop_assert!(w.abs() <= FRAC_2_PI + 1e-12);
        }
    }

    #[test]
    fn golden_points() {
        let o = PhasePoint::xp(0.0, 0.0);
        assert!((WignerEvaluator::fock(0).eval(&o).unwrap() - FRAC_2_PI).abs() < 1e-15);
        assert!((WignerEvaluator::fock(1).eval(&o).unwrap() + FRAC_2_PI).abs() < 1e-15);
        let coh = WignerEvaluator::coherent1(0.0, 0.0).unwrap();
        assert!((coh.eval(&o).unwrap() - FRAC_2_PI).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let pt = PhasePoint::new(vec![0.0; 4]).unwrap();
        assert!(matches!(
            WignerEvaluator::fock(0).eval(&pt),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(PhasePoint::new(vec![0.0, f64::NAN]).is_err());
        assert!(PhasePoint::new(vec![0.0; 3]).is_err());
    }

    #[test]
    fn alpha_round_trip() {
        let a = vec![Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5)];
        let pt = PhasePoint::from_alpha(&a);
        for (u, v) in pt.alpha().iter().zip(&a) {
            assert!((u - v).norm() < 1e-15);
        }
    }

    #[test]
    fn coherent_matches_vacuum_shifted() {
        let b = Complex64::new(0.7, -0.4);
        let coh = WignerEvaluator::coherent(vec![b]).unwrap();
        let vac = WignerEvaluator::vacuum();
        let pt = PhasePoint::from_alpha(&[Complex64::new(1.1, 0.2)]);
        let shifted = PhasePoint::from_alpha(&[Complex64::new(1.1, 0.2) - b]);
        assert!((coh.eval(&pt).unwrap() - vac.eval(&shifted).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn mixture_validation() {
        let f0 = WignerEvaluator::fock(0);
        let f1 = WignerEvaluator::fock(1);
        assert!(WignerEvaluator::mixture(vec![(0.7, f0.clone()), (0.3, f1.clone())]).is_ok());
        assert!(WignerEvaluator::mixture(vec![(0.7, f0.clone()), (0.2, f1)]).is_err());
        let two = WignerEvaluator::coherent(vec![Complex64::new(0.0, 0.0); 2]).unwrap();
        assert!(WignerEvaluator::mixture(vec![(0.5, f0), (0.5, two)]).is_err());
    }

    #[test]
    fn closed_form_fidelities() {
        let f0 = WignerEvaluator::fock(0);
        let c1 = WignerEvaluator::coherent1(1.0, 0.0).unwrap();
        assert!((fidelity_closed_form(&f0, &c1).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        let mix = WignerEvaluator::mixture(vec![(0.7, f0.clone()), (0.3, WignerEvaluator::fock(1))]).unwrap();
        assert!((fidelity_closed_form(&f0, &mix).unwrap() - 0.7).abs() < 1e-15);
    }
}
