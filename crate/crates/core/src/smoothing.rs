//! Threshold truncation `f̃ = f·1{|f| ≥ c*}`, sample budgets, the adversarial witness
//! and tail-decay certificates.
//!
//! All integrals are under the target's own measure: `μ_W = π^m·Lebesgue` for Wigner
//! functions and `μ_P = (1/d)·counting` for characteristic tables.

use std::f64::consts::{FRAC_2_PI, PI};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cv_states::{PhasePoint, RadialProfile, SpikeLevels, WignerEvaluator, WignerKind};
use crate::dv_states::{CharacteristicTable, PauliString};
use crate::error::{Error, Result};

/// Integrals of `|f|^k` over the level sets of `|f|`.
pub trait LevelFunctionals: Send + Sync {
    fn sup_abs(&self) -> f64;

    /// `∫_{|f| ≥ c, f ≠ 0} |f|^k dμ`.
    fn moment_above(&self, c: f64, k: u32) -> f64;

    /// `∫_{|f| < c} |f|^k dμ`.
    fn moment_below(&self, c: f64, k: u32) -> f64;

    fn l1(&self) -> f64 {
        self.moment_above(0.0, 1)
    }

    fn l2(&self) -> f64 {
        self.moment_above(0.0, 2).sqrt()
    }

    /// `sup {|f(λ)| : |f(λ)| < c}`; `f` is taken continuous by default.
    fn sup_below(&self, c: f64) -> f64 {
        c.min(self.sup_abs())
    }

    /// `c* = sup{c : ∫_{|f|<c} |f|² ≤ ε²}`, found by bisection on `[0, sup|f|]` to
    /// `1e-6` relative width. Returns the feasible end of the final bracket.
    fn threshold(&self, eps: f64) -> f64 {
        let eps2 = eps * eps;
        let mut lo = 0.0;
        let mut hi = self.sup_abs();
        for _ in 0..60 {
            if hi - lo <= 1e-6 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.moment_below(mid, 2) <= eps2 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// `∫_{|f| ≤ δ, λ ∉ Ω₀} |f| dμ` with `Ω₀` the disc of radius `r0` about the centre.
    fn tail_mass(&self, delta: f64, r0: f64) -> Result<f64>;
}

/// Single-mode Wigner target with exact level-set integrals.
#[derive(Debug, Clone)]
pub enum CvTarget {
    Radial {
        eval: WignerEvaluator,
        profile: RadialProfile,
    },
    Spike {
        eval: WignerEvaluator,
        levels: SpikeLevels,
    },
}

impl CvTarget {
    pub fn new(w: &WignerEvaluator) -> Result<Self> {
        if let WignerKind::Spike(s) = w.kind() {
            return Ok(Self::Spike {
                eval: w.clone(),
                levels: SpikeLevels::new(s),
            });
        }
        if w.modes() == 1 && w.radial_center().is_some() {
            return Ok(Self::Radial {
                eval: w.clone(),
                profile: RadialProfile::new(w, w.support_radius(), 24)?,
            });
        }
        Err(Error::Precondition(format!(
            "no level-set integrals for {}; supported targets are single-mode Fock, coherent and spike states",
            w.descriptor()
        )))
    }

    pub fn evaluator(&self) -> &WignerEvaluator {
        match self {
            Self::Radial { eval, .. } | Self::Spike { eval, .. } => eval,
        }
    }
}

impl LevelFunctionals for CvTarget {
    fn sup_abs(&self) -> f64 {
        match self {
            Self::Radial { profile, .. } => profile.sup_abs(),
            Self::Spike { levels, .. } => levels.sup_abs(),
        }
    }

    fn moment_above(&self, c: f64, k: u32) -> f64 {
        match self {
            Self::Radial { profile, .. } => profile.moment(c, k, true, 0.0, f64::INFINITY),
            Self::Spike { levels, .. } => levels.moment_above(c, k),
        }
    }

    fn moment_below(&self, c: f64, k: u32) -> f64 {
        match self {
            Self::Radial { profile, .. } => profile.moment(c, k, false, 0.0, f64::INFINITY),
            Self::Spike { levels, .. } => levels.moment_below(c, k),
        }
    }

    fn tail_mass(&self, delta: f64, r0: f64) -> Result<f64> {
        match self {
            Self::Radial { profile, .. } => {
                Ok(profile.moment(delta, 1, false, r0, f64::INFINITY))
            }
            Self::Spike { .. } => Err(Error::Precondition(
                "tail certificates are not available for spike states".into(),
            )),
        }
    }
}

impl LevelFunctionals for CharacteristicTable {
    fn sup_abs(&self) -> f64 {
        self.linf()
    }

    fn moment_above(&self, c: f64, k: u32) -> f64 {
        let s: f64 = self
            .values()
            .iter()
            .map(|v| v.abs())
            .filter(|&a| a >= c && a > 0.0)
            .map(|a| a.powi(k as i32))
            .sum();
        s * self.atom()
    }

    fn moment_below(&self, c: f64, k: u32) -> f64 {
        let s: f64 = self
            .values()
            .iter()
            .map(|v| v.abs())
            .filter(|&a| a < c)
            .map(|a| a.powi(k as i32))
            .sum();
        s * self.atom()
    }

    fn sup_below(&self, c: f64) -> f64 {
        self.values()
            .iter()
            .map(|v| v.abs())
            .filter(|&a| a < c)
            .fold(0.0, f64::max)
    }

    /// Exact rule: walk the distinct magnitudes upwards, dropping whole groups while
    /// the dropped squared mass stays within `ε²`. Ties at `c*` are kept.
    fn threshold(&self, eps: f64) -> f64 {
        let mut mags: Vec<f64> = self.values().iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| a.total_cmp(b));
        let eps2 = eps * eps;
        let atom = self.atom();
        let mut dropped = 0.0;
        let mut i = 0;
        while i < mags.len() {
            let m = mags[i];
            let mut j = i;
            let mut group = 0.0;
            while j < mags.len() && mags[j] == m {
                group += m * m * atom;
                j += 1;
            }
            if m > 0.0 && dropped + group > eps2 {
                return m;
            }
            dropped += group;
            i = j;
        }
        f64::INFINITY
    }

    fn tail_mass(&self, delta: f64, _r0: f64) -> Result<f64> {
        let s: f64 = self
            .values()
            .iter()
            .map(|v| v.abs())
            .filter(|&a| a <= delta)
            .sum();
        Ok(s * self.atom())
    }
}

/// Measurement-space type of a target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Cv { modes: usize },
    Dv { qubits: u32 },
}

/// A point of the measurement space.
#[derive(Debug, Clone, PartialEq)]
pub enum Lambda {
    Phase(PhasePoint),
    Pauli(PauliString),
}

/// The function `f` whose overlap with an unknown `g` is estimated.
#[derive(Debug, Clone)]
pub enum Target {
    Wigner(CvTarget),
    Pauli(CharacteristicTable),
}

impl Target {
    pub fn wigner(w: &WignerEvaluator) -> Result<Arc<Self>> {
        Ok(Arc::new(Self::Wigner(CvTarget::new(w)?)))
    }

    pub fn pauli(table: CharacteristicTable) -> Arc<Self> {
        Arc::new(Self::Pauli(table))
    }

    pub fn domain(&self) -> Domain {
        match self {
            Self::Wigner(t) => Domain::Cv {
                modes: t.evaluator().modes(),
            },
            Self::Pauli(t) => Domain::Dv { qubits: t.n() },
        }
    }

    /// Outcome magnitude of the matching black box: `(2/π)^m` or 1.
    pub fn r(&self) -> f64 {
        match self {
            Self::Wigner(t) => FRAC_2_PI.powi(t.evaluator().modes() as i32),
            Self::Pauli(_) => 1.0,
        }
    }

    pub fn value(&self, lambda: &Lambda) -> Result<f64> {
        match (self, lambda) {
            (Self::Wigner(t), Lambda::Phase(p)) => t.evaluator().eval(p),
            (Self::Pauli(t), Lambda::Pauli(p)) => {
                if p.n() != t.n() {
                    return Err(Error::DimensionMismatch {
                        expected: t.n() as usize,
                        got: p.n() as usize,
                    });
                }
                Ok(t.value(p))
            }
            _ => Err(Error::Contract("measurement point from the wrong domain".into())),
        }
    }

    pub fn descriptor(&self) -> String {
        match self {
            Self::Wigner(t) => t.evaluator().descriptor(),
            Self::Pauli(t) => format!("pauli-table:{}", t.n()),
        }
    }

    fn inner(&self) -> &dyn LevelFunctionals {
        match self {
            Self::Wigner(t) => t,
            Self::Pauli(t) => t,
        }
    }
}

impl LevelFunctionals for Target {
    fn sup_abs(&self) -> f64 {
        self.inner().sup_abs()
    }
    fn moment_above(&self, c: f64, k: u32) -> f64 {
        self.inner().moment_above(c, k)
    }
    fn moment_below(&self, c: f64, k: u32) -> f64 {
        self.inner().moment_below(c, k)
    }
    fn sup_below(&self, c: f64) -> f64 {
        self.inner().sup_below(c)
    }
    fn threshold(&self, eps: f64) -> f64 {
        self.inner().threshold(eps)
    }
    fn tail_mass(&self, delta: f64, r0: f64) -> Result<f64> {
        self.inner().tail_mass(delta, r0)
    }
}

/// `f̃ = f·1{|f| ≥ c*}` for a requested `ε`.
#[derive(Debug, Clone)]
pub struct TruncatedFunction {
    pub source: Arc<Target>,
    pub eps: f64,
    pub c_star: f64,
    /// `‖f̃‖₁` under the target's measure.
    pub l1_tilde: f64,
    /// `‖f − f̃‖₂`.
    pub l2_residual: f64,
    /// `ε ≥ ‖f‖₂`: `f̃ = 0`.
    pub degenerate: bool,
}

impl TruncatedFunction {
    /// `f̃(λ)`.
    pub fn value(&self, lambda: &Lambda) -> Result<f64> {
        let v = self.source.value(lambda)?;
        Ok(if v.abs() >= self.c_star && v != 0.0 { v } else { 0.0 })
    }

    pub fn summary(&self) -> TruncationSummary {
        TruncationSummary {
            eps: self.eps,
            c_star: self.c_star,
            l1_tilde: self.l1_tilde,
            l2_residual: self.l2_residual,
            degenerate: self.degenerate,
        }
    }
}

/// Serialisable part of a [`TruncatedFunction`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSummary {
    pub eps: f64,
    pub c_star: f64,
    pub l1_tilde: f64,
    pub l2_residual: f64,
    pub degenerate: bool,
}

/// Threshold truncation at `ε`; `ε = 0` keeps `f` unchanged.
pub fn truncate(f: &Arc<Target>, eps: f64) -> Result<TruncatedFunction> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Precondition(format!("epsilon must be nonnegative, got {eps}")));
    }
    let l2 = f.l2();
    if eps > 0.0 && eps >= l2 {
        return Ok(TruncatedFunction {
            source: f.clone(),
            eps,
            c_star: f64::INFINITY,
            l1_tilde: 0.0,
            l2_residual: l2,
            degenerate: true,
        });
    }
    let c_star = if eps == 0.0 { 0.0 } else { f.threshold(eps) };
    if c_star.is_infinite() {
        return Ok(TruncatedFunction {
            source: f.clone(),
            eps,
            c_star,
            l1_tilde: 0.0,
            l2_residual: l2,
            degenerate: true,
        });
    }
    Ok(TruncatedFunction {
        source: f.clone(),
        eps,
        c_star,
        l1_tilde: f.moment_above(c_star, 1),
        l2_residual: f.moment_below(c_star, 2).max(0.0).sqrt(),
        degenerate: false,
    })
}

/// `N = ceil(2 (r ‖f̃‖₁ / (ε − ε′))² ln(1/δ))`, as a float so overflow stays visible.
pub fn budget_formula(r: f64, l1_tilde: f64, eps: f64, eps_prime: f64, delta: f64) -> f64 {
    let gap = eps - eps_prime;
    (2.0 * (r * l1_tilde / gap).powi(2) * (1.0 / delta).ln()).ceil()
}

/// Fractions of `ε` tried for `ε′`.
pub const EPS_PRIME_GRID: [f64; 7] = [0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75];

/// One evaluated `ε′` candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetCandidate {
    pub eps_prime: f64,
    pub l1_tilde: f64,
    pub n_samples: f64,
}

/// Chosen `ε′` with its truncation and budget.
#[derive(Debug, Clone)]
pub struct BudgetPlan {
    pub eps: f64,
    pub delta: f64,
    pub r: f64,
    pub eps_prime: f64,
    pub plan_l1: f64,
    /// Budget as computed; may exceed `u64` range for absurd inputs.
    pub n_raw: f64,
    pub trunc: TruncatedFunction,
    pub candidates: Vec<BudgetCandidate>,
}

impl BudgetPlan {
    pub fn n_samples(&self) -> u64 {
        if self.n_raw >= u64::MAX as f64 {
            u64::MAX
        } else {
            self.n_raw as u64
        }
    }
}

/// Minimises the budget over `ε′ ∈ {0, ε/8, …, 3ε/4}`; ties go to the smaller `ε′`.
pub fn budget_optimize(f: &Arc<Target>, eps: f64, delta: f64, r: f64) -> Result<BudgetPlan> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition(format!("epsilon must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Precondition(format!("delta must lie in (0,1), got {delta}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Precondition(format!("r must be positive, got {r}")));
    }
    let mut best: Option<(BudgetCandidate, TruncatedFunction)> = None;
    let mut candidates = Vec::with_capacity(EPS_PRIME_GRID.len());
    for frac in EPS_PRIME_GRID {
        let ep = frac * eps;
        let trunc = truncate(f, ep)?;
        let n = budget_formula(r, trunc.l1_tilde, eps, ep, delta);
        let cand = BudgetCandidate {
            eps_prime: ep,
            l1_tilde: trunc.l1_tilde,
            n_samples: n,
        };
        candidates.push(cand);
        if best.as_ref().is_none_or(|(b, _)| n < b.n_samples) {
            best = Some((cand, trunc));
        }
    }
    let (cand, trunc) = best.expect("grid is nonempty");
    Ok(BudgetPlan {
        eps,
        delta,
        r,
        eps_prime: cand.eps_prime,
        plan_l1: cand.l1_tilde,
        n_raw: cand.n_samples,
        trunc,
        candidates,
    })
}

/// Which construction produced a witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessBranch {
    /// `g = h/‖h‖₂` with `h = f·1{|f| < ε²/‖f̃‖₁}`.
    LowPart,
    /// `g = (ε/‖f̃‖₁)·sgn(f)·1{|f| ≥ c*}`.
    SignOnSupport,
}

/// The three quantities the witness must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessProperties {
    /// `∫ f g dμ`, at least `ε`.
    pub inner: f64,
    /// `‖g‖₂`, at most 1.
    pub l2: f64,
    /// `‖g‖∞`, at most `ε/‖f̃‖₁`.
    pub linf: f64,
}

impl WitnessProperties {
    pub fn holds(&self, eps: f64, l1_tilde: f64, tol: f64) -> bool {
        self.inner >= eps - tol && self.l2 <= 1.0 + tol && self.linf <= eps / l1_tilde + tol
    }
}

/// Bounded function with large overlap with `f` and small sup-norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub eps: f64,
    pub branch: WitnessBranch,
    pub c_star: f64,
    pub l1_tilde: f64,
    /// `ε²/‖f̃‖₁`.
    pub t: f64,
    /// `g = scale·f` on the low part, or `g = scale·sgn f` on the support.
    pub scale: f64,
    pub properties: WitnessProperties,
}

impl Witness {
    /// `g` as a function of the value `f(λ)`.
    pub fn g_of(&self, f: f64) -> f64 {
        match self.branch {
            WitnessBranch::LowPart => {
                if f.abs() < self.t {
                    self.scale * f
                } else {
                    0.0
                }
            }
            WitnessBranch::SignOnSupport => {
                if f != 0.0 && f.abs() >= self.c_star {
                    self.scale * f.signum()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.properties.holds(self.eps, self.l1_tilde, tol)
    }

    /// Figure `(r‖f̃‖₁/(2ε))² ln(1/(3δ))` built from this witness's truncation.
    pub fn lower_bound_figure(&self, r: f64, l1_tilde_2eps: f64, delta: f64) -> f64 {
        (r * l1_tilde_2eps / (2.0 * self.eps)).powi(2) * (1.0 / (3.0 * delta)).ln()
    }
}

/// Builds the adversarial `g` for `(f, ε)`, `0 < ε < ‖f‖₂`.
pub fn adversarial_g(f: &Arc<Target>, eps: f64) -> Result<Witness> {
    let l2 = f.l2();
    if !(eps > 0.0 && eps < l2) {
        return Err(Error::Precondition(format!(
            "witness needs 0 < eps < ||f||_2 = {l2}, got {eps}"
        )));
    }
    let trunc = truncate(f, eps)?;
    let l1 = trunc.l1_tilde;
    let t = eps * eps / l1;
    if trunc.c_star < t {
        let h2 = f.moment_below(t, 2).sqrt();
        let scale = 1.0 / h2;
        Ok(Witness {
            eps,
            branch: WitnessBranch::LowPart,
            c_star: trunc.c_star,
            l1_tilde: l1,
            t,
            scale,
            properties: WitnessProperties {
                inner: f.moment_below(t, 2) * scale,
                l2: 1.0,
                linf: f.sup_below(t) * scale,
            },
        })
    } else {
        let scale = eps / l1;
        Ok(Witness {
            eps,
            branch: WitnessBranch::SignOnSupport,
            c_star: trunc.c_star,
            l1_tilde: l1,
            t,
            scale,
            properties: WitnessProperties {
                inner: scale * f.moment_above(trunc.c_star, 1),
                l2: scale * f.moment_above(trunc.c_star, 0).sqrt(),
                linf: scale,
            },
        })
    }
}

/// Empirical tail constant and whether it looks bounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCertificate {
    pub kappa_hat: f64,
    /// Same maximum on the grid with geometric midpoints inserted.
    pub kappa_refined: f64,
    /// Grid index where the maximum is attained.
    pub argmax: usize,
    pub pass: bool,
}

/// `κ̂ = max_δ tail(δ)/δ^γ` over `delta_grid` (positive, decreasing).
///
/// Passes when `κ̂` is finite, refinement of the grid moves it by at most 50%, and the
/// maximum is not attained at the smallest `δ` (which would suggest growth beyond it).
pub fn tail_decay_certificate<F: LevelFunctionals + ?Sized>(
    f: &F,
    omega0_radius: f64,
    gamma: f64,
    delta_grid: &[f64],
) -> Result<TailCertificate> {
    if !(gamma > 0.0) {
        return Err(Error::Precondition(format!("gamma must be positive, got {gamma}")));
    }
    if delta_grid.is_empty()
        || delta_grid.iter().any(|d| !(*d > 0.0))
        || delta_grid.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::Precondition("delta grid must be positive and decreasing".into()));
    }
    let ratio = |d: f64| -> Result<f64> { Ok(f.tail_mass(d, omega0_radius)? / d.powf(gamma)) };
    let mut kappa = 0.0;
    let mut argmax = 0;
    for (i, d) in delta_grid.iter().enumerate() {
        let v = ratio(*d)?;
        if v > kappa || v.is_nan() {
            kappa = v;
            argmax = i;
        }
    }
    let mut refined = kappa;
    for w in delta_grid.windows(2) {
        let v = ratio((w[0] * w[1]).sqrt())?;
        if v > refined || v.is_nan() {
            refined = v;
        }
    }
    let finite = kappa.is_finite() && refined.is_finite();
    let stable = finite && refined <= 1.5 * kappa.max(f64::MIN_POSITIVE);
    let interior = kappa == 0.0 || argmax + 1 < delta_grid.len();
    Ok(TailCertificate {
        kappa_hat: kappa,
        kappa_refined: refined,
        argmax,
        pass: finite && (kappa == 0.0 || stable) && interior,
    })
}

/// `‖f‖₁ − 2κ^{1/(1+γ)} ε^{γ/(1+γ)} − ε √μ(Ω₀)`.
pub fn smoothed_l1_lower_bound(
    l1: f64,
    kappa: f64,
    gamma: f64,
    omega0_measure: f64,
    eps: f64,
) -> Result<f64> {
    if [l1, kappa, omega0_measure, eps].iter().any(|v| !(*v >= 0.0)) || !(gamma > 0.0) {
        return Err(Error::Precondition(
            "lower bound needs nonnegative inputs and positive gamma".into(),
        ));
    }
    let kp = 2.0 * kappa.powf(1.0 / (1.0 + gamma));
    Ok(l1 - kp * eps.powf(gamma / (1.0 + gamma)) - eps * omega0_measure.sqrt())
}

/// `μ_W` measure of the disc `|α| ≤ ρ` on one mode.
pub fn disc_measure(rho: f64) -> f64 {
    PI * PI * rho * rho
}
