//! Textual state descriptors.
//!
//! ```text
//! vacuum | fock:N | coherent:RE[:IM] | spike:N            one optical mode
//! ghz:N | mm:N | basis:N:B | haar:N:SEED                  N qubits
//! mix:PART=W,PART=W,...                                   PART is fockN, spikeN, ghzN,
//!                                                         mmN, vacuum or a full descriptor
//! ```

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cv_states::{fidelity_closed_form, norms_adaptive, WignerEvaluator};
use crate::dv_states::{
    char_table, fidelity_from_tables, haar_state, CharacteristicTable, StateModel,
    MAX_TABLE_QUBITS,
};
use crate::error::{Error, Result};
use crate::estimator::MeasuredFunction;
use crate::smoothing::{truncate, Target};

/// Largest Fock index accepted from text.
pub const MAX_FOCK: u32 = 1000;

#[derive(Debug, Clone)]
pub enum StateKind {
    Wigner(WignerEvaluator),
    Qubits(StateModel),
}

/// Norms of one state. Optical values are plain Lebesgue norms (vacuum `l1 = 1`);
/// qubit values are table norms under the `1/d` counting measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateNorms {
    pub domain: String,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub eps: f64,
    /// Truncated `l1` at `eps`, in the same units; absent for unsupported geometries.
    pub smoothed_l1: Option<f64>,
    pub c_star: Option<f64>,
}

/// A parsed state together with the text it came from.
#[derive(Debug, Clone)]
pub struct StateSpec {
    label: String,
    kind: StateKind,
}

fn parse_num<T: FromStr>(s: &str, what: &str, whole: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{what} '{s}' in state descriptor '{whole}'")))
}

fn qubits(n: u32, whole: &str) -> Result<u32> {
    if n == 0 {
        return Err(Error::Parse(format!("qubit count must be positive in '{whole}'")));
    }
    Ok(n)
}

impl StateSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (family, rest) = text.split_once(':').unwrap_or((text, ""));
        let args: Vec<&str> = if rest.is_empty() { Vec::new() } else { rest.split(':').collect() };
        let arity = |lo: usize, hi: usize| -> Result<()> {
            if args.len() < lo || args.len() > hi {
                Err(Error::Parse(format!("wrong number of parameters in '{text}'")))
            } else {
                Ok(())
            }
        };
        let kind = match family {
            "vacuum" => {
                arity(0, 0)?;
                StateKind::Wigner(WignerEvaluator::vacuum())
            }
            "fock" => {
                arity(1, 1)?;
                let n: u32 = parse_num(args[0], "photon number", text)?;
                if n > MAX_FOCK {
                    return Err(Error::Capacity(format!("Fock index {n} above {MAX_FOCK}")));
                }
                StateKind::Wigner(WignerEvaluator::fock(n))
            }
            "coherent" => {
                arity(1, 2)?;
                let re: f64 = parse_num(args[0], "real part", text)?;
                let im: f64 = match args.get(1) {
                    Some(s) => parse_num(s, "imaginary part", text)?,
                    None => 0.0,
                };
                StateKind::Wigner(WignerEvaluator::coherent1(re, im)?)
            }
            "spike" => {
                arity(1, 1)?;
                let n: u32 = parse_num(args[0], "spike index", text)?;
                if n == 0 {
                    return Err(Error::Parse(format!("spike index must be positive in '{text}'")));
                }
                StateKind::Wigner(WignerEvaluator::spike(n)?)
            }
            "ghz" => {
                arity(1, 1)?;
                let n = qubits(parse_num(args[0], "qubit count", text)?, text)?;
                StateKind::Qubits(StateModel::ghz(n)?)
            }
            "mm" => {
                arity(1, 1)?;
                let n = qubits(parse_num(args[0], "qubit count", text)?, text)?;
                StateKind::Qubits(StateModel::maximally_mixed(n))
            }
            "basis" => {
                arity(2, 2)?;
                let n = qubits(parse_num(args[0], "qubit count", text)?, text)?;
                let b: usize = parse_num(args[1], "basis index", text)?;
                StateKind::Qubits(StateModel::basis(n, b)?)
            }
            "haar" => {
                arity(2, 2)?;
                let n = qubits(parse_num(args[0], "qubit count", text)?, text)?;
                let seed: u64 = parse_num(args[1], "seed", text)?;
                StateKind::Qubits(haar_state(n, seed)?)
            }
            "mix" => Self::parse_mix(rest, text)?,
            _ => return Err(Error::Parse(format!("unknown state family '{family}'"))),
        };
        Ok(Self {
            label: text.to_string(),
            kind,
        })
    }

    fn parse_mix(rest: &str, whole: &str) -> Result<StateKind> {
        let mut wig = Vec::new();
        let mut qub = Vec::new();
        for part in rest.split(',') {
            let (name, w) = part
                .rsplit_once('=')
                .ok_or_else(|| Error::Parse(format!("mixture part '{part}' lacks '=weight'")))?;
            let w: f64 = parse_num(w, "mixture weight", whole)?;
            let name = name.trim();
            let spec = if name.contains(':') || name == "vacuum" {
                Self::parse(name)?
            } else {
                let split = name
                    .find(|c: char| c.is_ascii_digit())
                    .ok_or_else(|| Error::Parse(format!("mixture part '{name}' needs an index")))?;
                Self::parse(&format!("{}:{}", &name[..split], &name[split..]))?
            };
            match spec.kind {
                StateKind::Wigner(e) => wig.push((w, e)),
                StateKind::Qubits(s) => qub.push((w, s)),
            }
        }
        match (wig.is_empty(), qub.is_empty()) {
            (false, true) => Ok(StateKind::Wigner(WignerEvaluator::mixture(wig)?)),
            (true, false) => Ok(StateKind::Qubits(StateModel::mixture(qub)?)),
            _ => Err(Error::Parse(format!("mixture '{whole}' mixes optical and qubit states"))),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &StateKind {
        &self.kind
    }

    pub fn is_pure(&self) -> bool {
        match &self.kind {
            StateKind::Wigner(w) => w.is_pure(),
            StateKind::Qubits(s) => s.purity().is_ok_and(|p| (p - 1.0).abs() < 1e-9),
        }
    }

    /// Black-box outcome magnitude for this state's measurement.
    pub fn r(&self) -> f64 {
        match &self.kind {
            StateKind::Wigner(w) => std::f64::consts::FRAC_2_PI.powi(w.modes() as i32),
            StateKind::Qubits(_) => 1.0,
        }
    }

    /// Characteristic table; capacity-limited to small registers.
    pub fn table(&self) -> Result<CharacteristicTable> {
        match &self.kind {
            StateKind::Qubits(s) => char_table(s),
            StateKind::Wigner(_) => Err(Error::Precondition(format!(
                "'{}' is an optical state and has no Pauli table",
                self.label
            ))),
        }
    }

    /// The estimation target built from this state.
    pub fn target(&self) -> Result<Arc<Target>> {
        match &self.kind {
            StateKind::Wigner(w) => Target::wigner(w),
            StateKind::Qubits(_) => Ok(Target::pauli(self.table()?)),
        }
    }

    /// The function a black box prepared in this state measures.
    pub fn measured(&self) -> Result<Arc<dyn MeasuredFunction>> {
        Ok(match &self.kind {
            StateKind::Wigner(w) => Arc::new(w.clone()),
            StateKind::Qubits(s) if s.n() <= MAX_TABLE_QUBITS => Arc::new(char_table(s)?),
            StateKind::Qubits(s) => Arc::new(s.clone()),
        })
    }

    pub fn norms(&self, eps: f64) -> Result<StateNorms> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::Precondition(format!("epsilon must lie in [0,1), got {eps}")));
        }
        let finite = |x: f64| x.is_finite().then_some(x);
        match &self.kind {
            StateKind::Wigner(w) => {
                let (n, _) = norms_adaptive(w)?;
                let scale = std::f64::consts::PI.powi(w.modes() as i32);
                let (smoothed_l1, c_star) = match self.target() {
                    Ok(f) => {
                        let t = truncate(&f, eps)?;
                        (Some(t.l1_tilde / scale), finite(t.c_star))
                    }
                    Err(Error::Precondition(_)) => (None, None),
                    Err(e) => return Err(e),
                };
                Ok(StateNorms {
                    domain: "cv".into(),
                    l1: n.l1,
                    l2: n.l2,
                    linf: n.linf,
                    eps,
                    smoothed_l1,
                    c_star,
                })
            }
            StateKind::Qubits(_) => {
                let table = self.table()?;
                let t = truncate(&Target::pauli(table.clone()), eps)?;
                Ok(StateNorms {
                    domain: "dv".into(),
                    l1: table.l1(),
                    l2: table.l2(),
                    linf: table.linf(),
                    eps,
                    smoothed_l1: Some(t.l1_tilde),
                    c_star: finite(t.c_star),
                })
            }
        }
    }

    /// Exact `F(self, other)` where a closed form or exact table exists.
    pub fn fidelity(&self, other: &StateSpec) -> Option<f64> {
        match (&self.kind, &other.kind) {
            (StateKind::Wigner(a), StateKind::Wigner(b)) => fidelity_closed_form(a, b),
            (StateKind::Qubits(a), StateKind::Qubits(b)) if a.n() == b.n() => {
                Some(fidelity_from_tables(&char_table(a).ok()?, &char_table(b).ok()?))
            }
            _ => None,
        }
    }
}

impl FromStr for StateSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_parse() {
        for d in [
            "vacuum", "fock:3", "coherent:1", "coherent:0.5:-1", "spike:2", "ghz:3", "mm:2",
            "basis:2:3", "haar:3:7", "mix:fock0=0.7,fock1=0.3", "mix:ghz3=0.6,mm3=0.4",
            "mix:coherent:1:0=0.5,vacuum=0.5",
        ] {
            let s = StateSpec::parse(d).unwrap();
            assert_eq!(s.label(), d);
        }
    }

    #[test]
    fn bad_descriptors() {
        for d in ["fock:-1", "fock", "squeezed:1", "ghz:0", "mix:fock0=0.7,ghz2=0.3", "coherent:a"] {
            assert!(matches!(StateSpec::parse(d), Err(Error::Parse(_))), "{d}");
        }
        assert!(matches!(StateSpec::parse("spike:9"), Err(Error::Capacity(_))));
        assert!(matches!(StateSpec::parse("ghz:9").unwrap().target(), Err(Error::Capacity(_))));
    }

    #[test]
    fn norms_in_reporting_units() {
        let v = StateSpec::parse("vacuum").unwrap().norms(0.1).unwrap();
        assert!((v.l1 - 1.0).abs() < 1e-9);
        assert!((v.smoothed_l1.unwrap() - 0.9).abs() < 1e-6);
        let g = StateSpec::parse("ghz:3").unwrap().norms(0.0).unwrap();
        assert_eq!((g.l1, g.smoothed_l1), (0.875, Some(0.875)));
        assert!(StateSpec::parse("ghz:3").unwrap().norms(1.5).is_err());
    }

    #[test]
    fn truths() {
        let f = |a: &str, b: &str| {
            StateSpec::parse(a).unwrap().fidelity(&StateSpec::parse(b).unwrap()).unwrap()
        };
        assert!((f("fock:0", "mix:fock0=0.7,fock1=0.3") - 0.7).abs() < 1e-12);
        assert!((f("ghz:3", "mix:ghz3=0.6,mm3=0.4") - 0.65).abs() < 1e-12);
        assert!((f("ghz:3", "mm:3") - 0.125).abs() < 1e-12);
        assert!((f("vacuum", "coherent:1") - (-1f64).exp()).abs() < 1e-12);
    }
}
