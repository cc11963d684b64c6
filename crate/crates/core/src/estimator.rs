//! Importance-sampling overlap estimator with simulated binary black boxes.
//!
//! `λ` is drawn from `|f̃|/‖f̃‖₁`, the black box returns `y ∈ {±r}` with mean `g(λ)`, and
//! the estimate is the mean of `y·‖f̃‖₁·sgn f̃(λ)`.

use std::f64::consts::{FRAC_2_PI, SQRT_2};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cv_states::{PhasePoint, RadialProfile, SpikeState, WignerEvaluator};
use crate::dv_states::{pauli_expectation, CharacteristicTable, StateModel};
use crate::error::{Error, Result};
use crate::format::round_json;
use crate::quadrature::GaussLegendre;
use crate::smoothing::{
    budget_optimize, CvTarget, Domain, Lambda, Target, TruncatedFunction, TruncationSummary,
};

/// Largest budget the estimator will run.
pub const MAX_SAMPLES: u64 = 1 << 31;

const CLAMP_WINDOW: f64 = 1e-9;
const CDF_KNOTS: usize = 4096;
const MAX_REJECTIONS: usize = 10_000_000;

/// RNG for `λ` draws of trial `k`.
pub fn lambda_rng(master: u64, k: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(master);
    r.set_stream(2 * k);
    r
}

/// RNG for the black box of trial `k`.
pub fn blackbox_rng(master: u64, k: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(master);
    r.set_stream(2 * k + 1);
    r
}

/// The function a black box measures: `W_σ` or `χ_σ`.
pub trait MeasuredFunction: Send + Sync {
    fn value(&self, lambda: &Lambda) -> Result<f64>;
    fn descriptor(&self) -> String;
}

impl MeasuredFunction for WignerEvaluator {
    fn value(&self, lambda: &Lambda) -> Result<f64> {
        match lambda {
            Lambda::Phase(p) => self.eval(p),
            Lambda::Pauli(_) => Err(Error::Contract("Pauli string given to a Wigner box".into())),
        }
    }
    fn descriptor(&self) -> String {
        WignerEvaluator::descriptor(self)
    }
}

impl MeasuredFunction for CharacteristicTable {
    fn value(&self, lambda: &Lambda) -> Result<f64> {
        match lambda {
            Lambda::Pauli(p) if p.n() == self.n() => Ok(CharacteristicTable::value(self, p)),
            Lambda::Pauli(p) => Err(Error::DimensionMismatch {
                expected: self.n() as usize,
                got: p.n() as usize,
            }),
            Lambda::Phase(_) => Err(Error::Contract("phase point given to a Pauli box".into())),
        }
    }
    fn descriptor(&self) -> String {
        format!("pauli-table:{}", self.n())
    }
}

impl MeasuredFunction for StateModel {
    fn value(&self, lambda: &Lambda) -> Result<f64> {
        match lambda {
            Lambda::Pauli(p) => pauli_expectation(p, self),
            Lambda::Phase(_) => Err(Error::Contract("phase point given to a Pauli box".into())),
        }
    }
    fn descriptor(&self) -> String {
        format!("qubits:{}", self.n())
    }
}

/// Plain closure with a label, mostly for tests.
pub struct FnMeasured<F>(pub F, pub String);

impl<F: Fn(&Lambda) -> f64 + Send + Sync> MeasuredFunction for FnMeasured<F> {
    fn value(&self, lambda: &Lambda) -> Result<f64> {
        Ok((self.0)(lambda))
    }
    fn descriptor(&self) -> String {
        self.1.clone()
    }
}

/// Binary measurement with outcomes `±r` and mean `g(λ)`.
pub struct BlackBoxSampler {
    g: Arc<dyn MeasuredFunction>,
    r: f64,
    rng: ChaCha8Rng,
}

impl BlackBoxSampler {
    pub fn new(g: Arc<dyn MeasuredFunction>, r: f64, rng: ChaCha8Rng) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Precondition(format!("outcome magnitude must be positive, got {r}")));
        }
        Ok(Self { g, r, rng })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn descriptor(&self) -> String {
        self.g.descriptor()
    }

    /// `P(+r)` at `λ`, with values just above `r` clamped.
    pub fn prob_plus(&self, lambda: &Lambda) -> Result<f64> {
        let v = self.g.value(lambda)?;
        if !(v.abs() <= self.r + CLAMP_WINDOW) {
            return Err(Error::Contract(format!(
                "|g(λ)| = {} exceeds the outcome magnitude {}",
                v.abs(),
                self.r
            )));
        }
        Ok(0.5 * (1.0 + v.clamp(-self.r, self.r) / self.r))
    }

    pub fn sample(&mut self, lambda: &Lambda) -> Result<f64> {
        let p = self.prob_plus(lambda)?;
        Ok(if self.rng.random::<f64>() < p { self.r } else { -self.r })
    }
}

/// Black box for `g` with the default stream of `seed`.
pub fn make_blackbox(g: Arc<dyn MeasuredFunction>, r: f64, seed: u64) -> Result<BlackBoxSampler> {
    BlackBoxSampler::new(g, r, blackbox_rng(seed, 0))
}

/// One importance draw: the point and `sgn f̃(λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub lambda: Lambda,
    pub sign: f64,
}

/// Piece of the tabulated radial CDF, linear between its ends.
#[derive(Debug, Clone)]
pub struct CdfSegment {
    s0: f64,
    s1: f64,
    c0: f64,
    c1: f64,
}

/// Sampler for `|f̃|/‖f̃‖₁`.
#[derive(Debug, Clone)]
pub enum LambdaSampler {
    Pauli {
        n: u32,
        slots: Vec<usize>,
        signs: Vec<f64>,
        dist: WeightedIndex<f64>,
    },
    Radial {
        profile: RadialProfile,
        segments: Vec<CdfSegment>,
    },
    Spike {
        state: SpikeState,
        c_star: f64,
    },
}

impl LambdaSampler {
    pub fn new(trunc: &TruncatedFunction) -> Result<Self> {
        if trunc.degenerate || !(trunc.l1_tilde > 0.0) {
            return Err(Error::Precondition("cannot sample from a zero truncation".into()));
        }
        let c = trunc.c_star;
        match trunc.source.as_ref() {
            Target::Pauli(t) => {
                let mut slots = Vec::new();
                let mut signs = Vec::new();
                let mut weights = Vec::new();
                for (i, v) in t.values().iter().enumerate() {
                    if *v != 0.0 && v.abs() >= c {
                        slots.push(i);
                        signs.push(v.signum());
                        weights.push(v.abs());
                    }
                }
                let dist = WeightedIndex::new(&weights)
                    .map_err(|e| Error::Precondition(format!("bad sampling weights: {e}")))?;
                Ok(Self::Pauli {
                    n: t.n(),
                    slots,
                    signs,
                    dist,
                })
            }
            Target::Wigner(CvTarget::Radial { profile, .. }) => Ok(Self::Radial {
                segments: radial_cdf(profile, c),
                profile: profile.clone(),
            }),
            Target::Wigner(CvTarget::Spike { levels, .. }) => Ok(Self::Spike {
                state: levels.state().clone(),
                c_star: c,
            }),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw> {
        match self {
            Self::Pauli {
                n,
                slots,
                signs,
                dist,
            } => {
                let k = dist.sample(rng);
                Ok(Draw {
                    lambda: Lambda::Pauli(crate::dv_states::PauliString::from_index(
                        *n,
                        slots[k] + 1,
                    )),
                    sign: signs[k],
                })
            }
            Self::Radial { profile, segments } => {
                let s = invert_cdf(segments, rng.random::<f64>());
                let th = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                let (cx, cp) = profile.center();
                Ok(Draw {
                    lambda: Lambda::Phase(PhasePoint::xp(
                        cx + SQRT_2 * s * th.cos(),
                        cp + SQRT_2 * s * th.sin(),
                    )),
                    sign: sign0(profile.value(s)),
                })
            }
            Self::Spike { state, c_star } => {
                let mu = state.positions();
                for _ in 0..MAX_REJECTIONS {
                    let a = mu[rng.random_range(0..mu.len())];
                    let b = mu[rng.random_range(0..mu.len())];
                    let zx: f64 = rng.sample(StandardNormal);
                    let zp: f64 = rng.sample(StandardNormal);
                    let x = 0.5 * (a + b) + 0.5 * zx;
                    let p = zp;
                    let w = state.eval(x, p);
                    if w.abs() < *c_star || w == 0.0 {
                        continue;
                    }
                    if rng.random::<f64>() * state.envelope(x, p) < w.abs() {
                        return Ok(Draw {
                            lambda: Lambda::Phase(PhasePoint::xp(x, p)),
                            sign: w.signum(),
                        });
                    }
                }
                Err(Error::NoConvergence(format!(
                    "rejection sampler for spike:{} accepted nothing in {MAX_REJECTIONS} tries",
                    state.n()
                )))
            }
        }
    }
}

fn sign0(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum()
    }
}

/// Tabulates `s ↦ ∫ s′|f̃(s′)| ds′` over the kept intervals.
fn radial_cdf(profile: &RadialProfile, c: f64) -> Vec<CdfSegment> {
    let intervals = profile.kept_intervals(c);
    let total_len: f64 = intervals.iter().map(|(a, b)| b - a).sum();
    let gl = GaussLegendre::new(8);
    let mut segs = Vec::new();
    let mut acc = 0.0;
    for (a, b) in intervals {
        let m = ((CDF_KNOTS as f64 * (b - a) / total_len).round() as usize).max(16);
        let h = (b - a) / m as f64;
        for j in 0..m {
            let s0 = a + j as f64 * h;
            let s1 = if j + 1 == m { b } else { s0 + h };
            let mass = gl.integrate(s0, s1, |s| s * profile.value(s).abs());
            segs.push(CdfSegment {
                s0,
                s1,
                c0: acc,
                c1: acc + mass,
            });
            acc += mass;
        }
    }
    for s in &mut segs {
        s.c0 /= acc;
        s.c1 /= acc;
    }
    segs
}

fn invert_cdf(segs: &[CdfSegment], u: f64) -> f64 {
    let i = segs.partition_point(|s| s.c1 < u).min(segs.len() - 1);
    let s = &segs[i];
    let w = s.c1 - s.c0;
    if w <= 0.0 {
        return s.s0;
    }
    s.s0 + (s.s1 - s.s0) * ((u - s.c0) / w).clamp(0.0, 1.0)
}

/// Budget and truncation for one estimation task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub epsilon: f64,
    pub eps_prime: f64,
    pub delta: f64,
    pub r: f64,
    pub n_samples: u64,
    pub truncation: TruncationSummary,
    pub domain: Domain,
}

/// A plan together with its `λ` sampler; reusable across trials.
#[derive(Debug, Clone)]
pub struct Estimator {
    plan: SamplingPlan,
    sampler: Option<LambdaSampler>,
    target: Arc<Target>,
}

impl Estimator {
    /// Chooses `ε′` and `N` and tabulates the sampler. Refuses budgets above `2^31`.
    pub fn prepare(f: &Arc<Target>, eps: f64, delta: f64, r: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Precondition(format!("epsilon must lie in (0,1), got {eps}")));
        }
        let bp = budget_optimize(f, eps, delta, r)?;
        let n = bp.n_samples();
        if n > MAX_SAMPLES {
            return Err(Error::BudgetOverflow { n });
        }
        let sampler = if bp.trunc.degenerate || bp.trunc.l1_tilde == 0.0 {
            None
        } else {
            Some(LambdaSampler::new(&bp.trunc)?)
        };
        Ok(Self {
            plan: SamplingPlan {
                epsilon: eps,
                eps_prime: bp.eps_prime,
                delta,
                r,
                n_samples: n,
                truncation: bp.trunc.summary(),
                domain: f.domain(),
            },
            sampler,
            target: f.clone(),
        })
    }

    pub fn plan(&self) -> &SamplingPlan {
        &self.plan
    }

    pub fn sampler(&self) -> Option<&LambdaSampler> {
        self.sampler.as_ref()
    }

    pub fn target(&self) -> &Arc<Target> {
        &self.target
    }

    /// One sample `X = y·‖f̃‖₁·sgn f̃(λ)`.
    pub fn single<R: Rng + ?Sized>(&self, bb: &mut BlackBoxSampler, rng: &mut R) -> Result<f64> {
        let Some(s) = &self.sampler else {
            return Ok(0.0);
        };
        let d = s.draw(rng)?;
        let y = bb.sample(&d.lambda)?;
        Ok(y * self.plan.truncation.l1_tilde * d.sign)
    }

    /// Mean of `N` samples.
    pub fn run<R: Rng + ?Sized>(&self, bb: &mut BlackBoxSampler, rng: &mut R) -> Result<f64> {
        if (bb.r() - self.plan.r).abs() > 1e-12 * self.plan.r {
            return Err(Error::Precondition(format!(
                "black box outcome magnitude {} does not match the plan's {}",
                bb.r(),
                self.plan.r
            )));
        }
        let n = self.plan.n_samples;
        if n == 0 || self.sampler.is_none() {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for _ in 0..n {
            acc += self.single(bb, rng)?;
        }
        Ok(acc / n as f64)
    }

    pub fn report(&self, estimate: f64, seed: u64, descriptors: Vec<String>) -> EstimationReport {
        EstimationReport {
            schema: 1,
            estimate,
            n_samples: self.plan.n_samples,
            epsilon: self.plan.epsilon,
            eps_prime: self.plan.eps_prime,
            delta: self.plan.delta,
            seed,
            truth: None,
            within_eps: None,
            domain: self.plan.domain,
            state_descriptors: descriptors,
            r: self.plan.r,
            l1_tilde: self.plan.truncation.l1_tilde,
            c_star: finite(self.plan.truncation.c_star),
            elapsed: Duration::ZERO,
        }
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Outcome of one estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub schema: u32,
    pub estimate: f64,
    pub n_samples: u64,
    pub epsilon: f64,
    pub eps_prime: f64,
    pub delta: f64,
    pub seed: u64,
    pub truth: Option<f64>,
    pub within_eps: Option<bool>,
    pub domain: Domain,
    pub state_descriptors: Vec<String>,
    pub r: f64,
    pub l1_tilde: f64,
    pub c_star: Option<f64>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl EstimationReport {
    pub fn with_truth(mut self, truth: f64) -> Self {
        self.truth = Some(truth);
        self.within_eps = Some((self.estimate - truth).abs() <= self.epsilon);
        self
    }

    /// JSON with floats rounded to 12 significant digits; elapsed time is left out.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serialises");
        round_json(&mut v);
        serde_json::to_string_pretty(&v).expect("value serialises")
    }
}

/// Estimates `∫ f g dμ` with `λ` drawn from stream 0 of `seed`.
pub fn estimate_overlap(
    f: &Arc<Target>,
    bb: &mut BlackBoxSampler,
    eps: f64,
    delta: f64,
    seed: u64,
) -> Result<EstimationReport> {
    let start = Instant::now();
    let est = Estimator::prepare(f, eps, delta, bb.r())?;
    let value = est.run(bb, &mut lambda_rng(seed, 0))?;
    let mut rep = est.report(value, seed, vec![f.descriptor(), bb.descriptor()]);
    rep.elapsed = start.elapsed();
    Ok(rep)
}

/// `F(ρ, σ) = π^m ∫ W_ρ W_σ` for pure `ρ`, with `σ` behind a displaced-parity box.
pub fn estimate_fidelity_wigner(
    rho: &WignerEvaluator,
    sigma_box: &mut BlackBoxSampler,
    eps: f64,
    delta: f64,
    seed: u64,
) -> Result<EstimationReport> {
    if !rho.is_pure() {
        return Err(Error::Precondition(format!("{} is not a pure state", rho.descriptor())));
    }
    let r = FRAC_2_PI.powi(rho.modes() as i32);
    if (sigma_box.r() - r).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "displaced-parity boxes have outcomes ±{r}, got ±{}",
            sigma_box.r()
        )));
    }
    let f = Target::wigner(rho)?;
    estimate_overlap(&f, sigma_box, eps, delta, seed)
}

/// `F(ρ, σ) = 1/d + ∫ χ_ρ χ_σ dμ_P` for pure `ρ`, with `σ` behind a Pauli box.
pub fn estimate_fidelity_pauli(
    rho: &CharacteristicTable,
    sigma_box: &mut BlackBoxSampler,
    eps: f64,
    delta: f64,
    seed: u64,
) -> Result<EstimationReport> {
    let d = rho.dim() as f64;
    let purity = (1.0 + d * rho.l2() * rho.l2()) / d;
    if (purity - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("target has purity {purity}, not 1")));
    }
    if sigma_box.r() != 1.0 {
        return Err(Error::Precondition("Pauli boxes have outcomes ±1".into()));
    }
    let f = Target::pauli(rho.clone());
    let mut rep = estimate_overlap(&f, sigma_box, eps, delta, seed)?;
    rep.estimate += 1.0 / d;
    Ok(rep)
}
