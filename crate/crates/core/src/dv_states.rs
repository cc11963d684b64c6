//! Pauli strings, qubit state models and characteristic-function tables.
//!
//! Norms of a characteristic function are taken under `μ_P = (1/d)·counting` on the
//! `4^n − 1` non-identity Pauli strings.

use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest qubit count for full characteristic tables.
pub const MAX_TABLE_QUBITS: u32 = 8;
/// Largest qubit count for state vectors and stabiliser groups.
pub const MAX_VECTOR_QUBITS: u32 = 12;

/// An `n`-qubit Pauli string `i^{|x∧z|} X^x Z^z` (Hermitian; `Y` at sites with both bits).
/// Site `k` is bit `k` of both words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    n: u32,
    xbits: u64,
    zbits: u64,
}

impl PauliString {
    pub fn new(n: u32, xbits: u64, zbits: u64) -> Result<Self> {
        if n == 0 || n > 31 {
            return Err(Error::Contract(format!("unsupported qubit count {n}")));
        }
        let mask = (1u64 << n) - 1;
        if xbits & !mask != 0 || zbits & !mask != 0 {
            return Err(Error::Contract(format!("bits outside {n} qubits")));
        }
        Ok(Self { n, xbits, zbits })
    }

    pub fn identity(n: u32) -> Self {
        Self { n, xbits: 0, zbits: 0 }
    }

    /// String at position `index` of the lexicographic order on the word `x‖z`.
    pub fn from_index(n: u32, index: usize) -> Self {
        let mask = (1u64 << n) - 1;
        let i = index as u64;
        Self {
            n,
            xbits: i >> n,
            zbits: i & mask,
        }
    }

    pub fn index(&self) -> usize {
        ((self.xbits << self.n) | self.zbits) as usize
    }

    /// Parses letters `I, X, Y, Z`; the first letter is site 0.
    pub fn parse(s: &str) -> Result<Self> {
        let mut x = 0u64;
        let mut z = 0u64;
        let n = s.chars().count() as u32;
        for (k, ch) in s.chars().enumerate() {
            let (bx, bz) = match ch.to_ascii_uppercase() {
                'I' => (0, 0),
                'X' => (1, 0),
                'Y' => (1, 1),
                'Z' => (0, 1),
                other => return Err(Error::Contract(format!("bad Pauli letter {other:?}"))),
            };
            x |= bx << k;
            z |= bz << k;
        }
        Self::new(n, x, z)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn xbits(&self) -> u64 {
        self.xbits
    }

    pub fn zbits(&self) -> u64 {
        self.zbits
    }

    pub fn is_identity(&self) -> bool {
        self.xbits == 0 && self.zbits == 0
    }

    pub fn weight(&self) -> u32 {
        (self.xbits | self.zbits).count_ones()
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        ((self.xbits & other.zbits) ^ (self.zbits & other.xbits)).count_ones().is_multiple_of(2)
    }

    /// `self · other = i^phase · result`, phase mod 4.
    pub fn mul(&self, other: &PauliString) -> (u8, PauliString) {
        let x3 = self.xbits ^ other.xbits;
        let z3 = self.zbits ^ other.zbits;
        let y1 = (self.xbits & self.zbits).count_ones() as i64;
        let y2 = (other.xbits & other.zbits).count_ones() as i64;
        let y3 = (x3 & z3).count_ones() as i64;
        let cross = 2 * (self.zbits & other.xbits).count_ones() as i64;
        let phase = (y1 + y2 - y3 + cross).rem_euclid(4) as u8;
        (
            phase,
            PauliString {
                n: self.n,
                xbits: x3,
                zbits: z3,
            },
        )
    }

    /// Applies the string to a state vector.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let phase = I_POW[((self.xbits & self.zbits).count_ones() % 4) as usize];
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        for (b, a) in psi.iter().enumerate() {
            let sign = if (b as u64 & self.zbits).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            out[b ^ self.xbits as usize] = phase * a * sign;
        }
        out
    }

    /// `Re ⟨ψ|P|ψ⟩` without materialising `P|ψ⟩`.
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let y = (self.xbits & self.zbits).count_ones() % 4;
        let x = self.xbits as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, a) in psi.iter().enumerate() {
            let t = psi[b ^ x].conj() * a;
            if (b as u64 & self.zbits).count_ones().is_multiple_of(2) {
                acc += t;
            } else {
                acc -= t;
            }
        }
        (I_POW[y as usize] * acc).re
    }
}

const I_POW: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.n {
            let c = match ((self.xbits >> k) & 1, (self.zbits >> k) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (1, 1) => 'Y',
                _ => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// An `n`-qubit state.
#[derive(Debug, Clone)]
pub enum StateModel {
    Vector { n: u32, amps: Vec<Complex64> },
    Mixture { n: u32, parts: Vec<(f64, StateModel)> },
    MaximallyMixed { n: u32 },
}

impl StateModel {
    pub fn vector(amps: Vec<Complex64>) -> Result<Self> {
        let d = amps.len();
        if d < 2 || !d.is_power_of_two() {
            return Err(Error::Contract(format!("amplitude count {d} is not 2^n")));
        }
        let n = d.trailing_zeros();
        if n > MAX_VECTOR_QUBITS {
            return Err(Error::Capacity(format!("{n} qubits exceeds {MAX_VECTOR_QUBITS}")));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Contract(format!("state vector has squared norm {norm}")));
        }
        Ok(Self::Vector { n, amps })
    }

    /// Computational basis state `|b⟩`.
    pub fn basis(n: u32, b: usize) -> Result<Self> {
        let d = 1usize << n;
        if b >= d {
            return Err(Error::Contract(format!("basis index {b} out of range")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); d];
        amps[b] = Complex64::new(1.0, 0.0);
        Self::vector(amps)
    }

    pub fn ghz(n: u32) -> Result<Self> {
        if n == 0 || n > MAX_VECTOR_QUBITS {
            return Err(Error::Capacity(format!("GHZ on {n} qubits unsupported")));
        }
        let d = 1usize << n;
        let mut amps = vec![Complex64::new(0.0, 0.0); d];
        let a = std::f64::consts::FRAC_1_SQRT_2;
        amps[0] = Complex64::new(a, 0.0);
        amps[d - 1] = Complex64::new(a, 0.0);
        Ok(Self::Vector { n, amps })
    }

    pub fn maximally_mixed(n: u32) -> Self {
        Self::MaximallyMixed { n }
    }

    pub fn mixture(parts: Vec<(f64, StateModel)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Contract("empty mixture".into()));
        }
        let n = parts[0].1.n();
        let mut total = 0.0;
        for (w, s) in &parts {
            if !(0.0..=1.0).contains(w) {
                return Err(Error::Contract(format!("mixture weight {w} outside [0,1]")));
            }
            if s.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n as usize,
                    got: s.n() as usize,
                });
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Contract(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self::Mixture { n, parts })
    }

    pub fn n(&self) -> u32 {
        match self {
            Self::Vector { n, .. } | Self::Mixture { n, .. } | Self::MaximallyMixed { n } => *n,
        }
    }

    pub fn dim(&self) -> usize {
        1usize << self.n()
    }

    pub fn amplitudes(&self) -> Option<&[Complex64]> {
        match self {
            Self::Vector { amps, .. } => Some(amps),
            _ => None,
        }
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> Result<f64> {
        match self {
            Self::Vector { .. } => Ok(1.0),
            Self::MaximallyMixed { n } => Ok(1.0 / (1u64 << n) as f64),
            Self::Mixture { .. } => {
                let t = char_table(self)?;
                Ok((1.0 + t.values.iter().map(|v| v * v).sum::<f64>()) / self.dim() as f64)
            }
        }
    }
}

/// `χ_s(P) = Tr(P s)`.
pub fn pauli_expectation(p: &PauliString, s: &StateModel) -> Result<f64> {
    if p.n() != s.n() {
        return Err(Error::DimensionMismatch {
            expected: s.n() as usize,
            got: p.n() as usize,
        });
    }
    Ok(expectation_unchecked(p, s))
}

fn expectation_unchecked(p: &PauliString, s: &StateModel) -> f64 {
    match s {
        StateModel::Vector { amps, .. } => p.expectation(amps).clamp(-1.0, 1.0),
        StateModel::MaximallyMixed { .. } => {
            if p.is_identity() {
                1.0
            } else {
                0.0
            }
        }
        StateModel::Mixture { parts, .. } => parts
            .iter()
            .map(|(w, part)| w * expectation_unchecked(p, part))
            .sum(),
    }
}

/// `P ↦ χ(P)` over all non-identity strings, with norms under `μ_P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicTable {
    n: u32,
    values: Vec<f64>,
    l1: f64,
    l2: f64,
    linf: f64,
}

impl CharacteristicTable {
    /// Table from values in enumeration order (index `i` holds the string with index `i+1`).
    pub fn from_values(n: u32, values: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_TABLE_QUBITS {
            return Err(Error::Capacity(format!(
                "full tables support 1..={MAX_TABLE_QUBITS} qubits, got {n}"
            )));
        }
        let want = (1usize << (2 * n)) - 1;
        if values.len() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || v.abs() > 1.0 + 1e-12) {
            return Err(Error::Contract("characteristic values must lie in [-1, 1]".into()));
        }
        let d = (1u64 << n) as f64;
        let l1 = values.iter().map(|v| v.abs()).sum::<f64>() / d;
        let l2 = (values.iter().map(|v| v * v).sum::<f64>() / d).sqrt();
        let linf = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        Ok(Self {
            n,
            values,
            l1,
            l2,
            linf,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    /// Weight of one string under `μ_P`.
    pub fn atom(&self) -> f64 {
        1.0 / self.dim() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `χ(P)`; the identity has value 1.
    pub fn value(&self, p: &PauliString) -> f64 {
        match p.index() {
            0 => 1.0,
            i => self.values[i - 1],
        }
    }

    pub fn string_at(&self, slot: usize) -> PauliString {
        PauliString::from_index(self.n, slot + 1)
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn linf(&self) -> f64 {
        self.linf
    }

    pub fn nonzero(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    /// Writes `index,xbits,zbits,value` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Contract(format!("csv write failed: {e}"));
        w.write_record(["index", "xbits", "zbits", "value"]).map_err(io)?;
        for (slot, v) in self.values.iter().enumerate() {
            let p = self.string_at(slot);
            w.write_record([
                p.index().to_string(),
                format!("{:#x}", p.xbits()),
                format!("{:#x}", p.zbits()),
                crate::format::sig12(*v).to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::Contract(format!("csv flush failed: {e}")))?;
        Ok(())
    }
}

/// Full characteristic table of `s`.
pub fn char_table(s: &StateModel) -> Result<CharacteristicTable> {
    let n = s.n();
    if n > MAX_TABLE_QUBITS {
        return Err(Error::Capacity(format!(
            "{n} qubits exceeds the {MAX_TABLE_QUBITS}-qubit full-table limit; use sampled norms"
        )));
    }
    let count = 1usize << (2 * n);
    let values: Vec<f64> = (1..count)
        .into_par_iter()
        .map(|i| expectation_unchecked(&PauliString::from_index(n, i), s))
        .collect();
    CharacteristicTable::from_values(n, values)
}

/// The `2^n` signed elements of the group generated by `generators`.
pub fn stabilizer_group(generators: &[(i8, PauliString)]) -> Result<Vec<(i8, PauliString)>> {
    let n = validate_generators(generators)?;
    let mut out = Vec::with_capacity(1 << n);
    for mask in 0u64..(1u64 << n) {
        let mut acc = PauliString::identity(n);
        let mut phase = 0u8;
        let mut sign = 1i8;
        for (j, (s, g)) in generators.iter().enumerate() {
            if mask >> j & 1 == 1 {
                let (ph, prod) = acc.mul(g);
                phase = (phase + ph) % 4;
                acc = prod;
                sign *= *s;
            }
        }
        // commuting Hermitian factors give a real phase
        debug_assert!(phase.is_multiple_of(2));
        if phase == 2 {
            sign = -sign;
        }
        out.push((sign, acc));
    }
    Ok(out)
}

fn validate_generators(generators: &[(i8, PauliString)]) -> Result<u32> {
    let bad = |m: &str| Err(Error::InvalidGenerators(m.into()));
    let Some((_, first)) = generators.first() else {
        return bad("no generators");
    };
    let n = first.n();
    if n > MAX_VECTOR_QUBITS {
        return Err(Error::Capacity(format!("{n} qubits exceeds {MAX_VECTOR_QUBITS}")));
    }
    if generators.len() != n as usize {
        return Err(Error::InvalidGenerators(format!(
            "need {n} generators, got {}",
            generators.len()
        )));
    }
    for (s, g) in generators {
        if g.n() != n {
            return bad("generators act on different qubit counts");
        }
        if *s != 1 && *s != -1 {
            return bad("signs must be +1 or -1");
        }
    }
    for (i, (_, a)) in generators.iter().enumerate() {
        for (_, b) in &generators[i + 1..] {
            if !a.commutes(b) {
                return Err(Error::InvalidGenerators(format!("{a} and {b} anticommute")));
            }
        }
    }
    // rank over GF(2) of the 2n-bit symplectic vectors
    let mut rows: Vec<u64> = generators
        .iter()
        .map(|(_, g)| (g.xbits() << n) | g.zbits())
        .collect();
    let mut rank = 0;
    for bit in (0..2 * n).rev() {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r] >> bit & 1 == 1) else {
            continue;
        };
        rows.swap(rank, pivot);
        for r in 0..rows.len() {
            if r != rank && rows[r] >> bit & 1 == 1 {
                rows[r] ^= rows[rank];
            }
        }
        rank += 1;
    }
    if rank != n as usize {
        return bad("generators are not independent");
    }
    Ok(n)
}

/// Characteristic table of the stabiliser state fixed by `generators`.
pub fn stabilizer_char(generators: &[(i8, PauliString)]) -> Result<CharacteristicTable> {
    let n = validate_generators(generators)?;
    if n > MAX_TABLE_QUBITS {
        return Err(Error::Capacity(format!(
            "{n} qubits exceeds the {MAX_TABLE_QUBITS}-qubit full-table limit"
        )));
    }
    let mut values = vec![0.0; (1usize << (2 * n)) - 1];
    for (sign, p) in stabilizer_group(generators)? {
        if !p.is_identity() {
            values[p.index() - 1] = sign as f64;
        }
    }
    CharacteristicTable::from_values(n, values)
}

/// State vector fixed by the generators, built as `Π (1 + g)/2` applied to a basis state.
pub fn stabilizer_state(generators: &[(i8, PauliString)]) -> Result<StateModel> {
    let n = validate_generators(generators)?;
    let d = 1usize << n;
    for b in 0..d {
        let mut psi = vec![Complex64::new(0.0, 0.0); d];
        psi[b] = Complex64::new(1.0, 0.0);
        for (s, g) in generators {
            let gp = g.apply(&psi);
            for (u, v) in psi.iter_mut().zip(gp) {
                *u = 0.5 * (*u + *s as f64 * v);
            }
        }
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for a in &mut psi {
                *a /= norm;
            }
            return StateModel::vector(psi);
        }
    }
    Err(Error::InvalidGenerators("projector annihilates every basis state".into()))
}

/// `+X^{⊗n}` and `+Z_i Z_{i+1}`.
pub fn ghz_generators(n: u32) -> Result<Vec<(i8, PauliString)>> {
    if n == 0 || n > MAX_VECTOR_QUBITS {
        return Err(Error::Capacity(format!("GHZ on {n} qubits unsupported")));
    }
    let all = (1u64 << n) - 1;
    let mut gens = vec![(1, PauliString::new(n, all, 0)?)];
    for i in 0..n - 1 {
        gens.push((1, PauliString::new(n, 0, 0b11 << i)?));
    }
    Ok(gens)
}

/// Haar-random pure state: i.i.d. standard complex Gaussians, normalised.
pub fn haar_state(n: u32, seed: u64) -> Result<StateModel> {
    if n == 0 || n > MAX_VECTOR_QUBITS {
        return Err(Error::Precondition(format!(
            "Haar states support 1..={MAX_VECTOR_QUBITS} qubits, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 1usize << n;
    let mut amps: Vec<Complex64> = (0..d)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    Ok(StateModel::Vector { n, amps })
}

/// `F(ρ,σ) = (1/d)(1 + Σ_{P≠1} χ_ρ(P) χ_σ(P))` for pure `ρ`.
pub fn fidelity_pauli_exact(rho: &StateModel, sigma: &StateModel) -> Result<f64> {
    if rho.n() != sigma.n() {
        return Err(Error::DimensionMismatch {
            expected: rho.n() as usize,
            got: sigma.n() as usize,
        });
    }
    let tr = char_table(rho)?;
    let ts = char_table(sigma)?;
    let purity = (1.0 + tr.values.iter().map(|v| v * v).sum::<f64>()) / tr.dim() as f64;
    if purity < 1.0 - 1e-9 {
        return Err(Error::Contract(format!(
            "fidelity target must be pure, Tr rho^2 = {purity}"
        )));
    }
    Ok(fidelity_from_tables(&tr, &ts))
}

/// `(1/d)(1 + Σ χ_a χ_b)` for two tables on the same qubits.
pub fn fidelity_from_tables(a: &CharacteristicTable, b: &CharacteristicTable) -> f64 {
    let dot: f64 = a.values.iter().zip(&b.values).map(|(u, v)| u * v).sum();
    (1.0 + dot) / a.dim() as f64
}

/// Dense-matrix helpers used as independent oracles.
pub mod dense {
    use super::*;

    /// Row-major `d×d` matrix of a Pauli string.
    pub fn pauli_matrix(p: &PauliString) -> Vec<Complex64> {
        let n = p.n();
        let d = 1usize << n;
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let site = |k: u32| -> [[Complex64; 2]; 2] {
            match ((p.xbits() >> k) & 1, (p.zbits() >> k) & 1) {
                (0, 0) => [[one, zero], [zero, one]],
                (1, 0) => [[zero, one], [one, zero]],
                (1, 1) => [[zero, -i], [i, zero]],
                _ => [[one, zero], [zero, -one]],
            }
        };
        let mats: Vec<_> = (0..n).map(site).collect();
        let mut m = vec![zero; d * d];
        for r in 0..d {
            for c in 0..d {
                let mut v = one;
                for (k, s) in mats.iter().enumerate() {
                    v *= s[(r >> k) & 1][(c >> k) & 1];
                }
                m[r * d + c] = v;
            }
        }
        m
    }

    /// Row-major density matrix.
    pub fn density_matrix(s: &StateModel) -> Vec<Complex64> {
        let d = s.dim();
        match s {
            StateModel::Vector { amps, .. } => {
                let mut m = vec![Complex64::new(0.0, 0.0); d * d];
                for r in 0..d {
                    for c in 0..d {
                        m[r * d + c] = amps[r] * amps[c].conj();
                    }
                }
                m
            }
            StateModel::MaximallyMixed { .. } => {
                let mut m = vec![Complex64::new(0.0, 0.0); d * d];
                for r in 0..d {
                    m[r * d + r] = Complex64::new(1.0 / d as f64, 0.0);
                }
                m
            }
            StateModel::Mixture { parts, .. } => {
                let mut m = vec![Complex64::new(0.0, 0.0); d * d];
                for (w, part) in parts {
                    for (u, v) in m.iter_mut().zip(density_matrix(part)) {
                        *u += *w * v;
                    }
                }
                m
            }
        }
    }

    pub fn matmul(a: &[Complex64], b: &[Complex64], d: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for k in 0..d {
                let x = a[r * d + k];
                if x == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..d {
                    out[r * d + c] += x * b[k * d + c];
                }
            }
        }
        out
    }

    pub fn trace(a: &[Complex64], d: usize) -> Complex64 {
        (0..d).map(|i| a[i * d + i]).sum()
    }
}
