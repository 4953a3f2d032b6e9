//! Single-qubit noise channels and independent product maps.
//!
//! Every channel is parametrized by `p ∈ [0, 1]`, which doubles as the time
//! coordinate: `p = 0` is the untouched state and `p = 1` the asymptotic limit.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Pauli;

/// Dense 2x2 complex matrix, row major.
pub type Mat2 = [[Complex64; 2]; 2];

/// Tolerance for trace preservation of constructed channels.
pub const COMPLETENESS_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn check_prob(what: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::ProbabilityRange { what, value: p })
    }
}

/// Pauli channel `ρ ↦ Σ_μ p_μ σ_μ ρ σ_μ` with probabilities `(p_I, p_X, p_Y, p_Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliQubitChannel {
    probs: [f64; 4],
}

impl PauliQubitChannel {
    pub fn new(probs: [f64; 4]) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidChannel(format!("negative Pauli probability in {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > COMPLETENESS_TOL {
            return Err(Error::Unnormalized { sum });
        }
        Ok(Self { probs })
    }

    pub fn identity() -> Self {
        Self {
            probs: [1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn probs(&self) -> [f64; 4] {
        self.probs
    }

    pub fn prob(&self, p: Pauli) -> f64 {
        self.probs[p.index()]
    }

    /// Kraus form `√p_μ σ_μ`, dropping zero-probability terms.
    pub fn kraus(&self) -> Vec<Mat2> {
        Pauli::ALL
            .iter()
            .filter(|p| self.probs[p.index()] > 0.0)
            .map(|p| scale(&p.matrix(), self.probs[p.index()].sqrt()))
            .collect()
    }
}

/// Channel given by an explicit Kraus set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausQubitChannel {
    kraus: Vec<Mat2>,
}

impl KrausQubitChannel {
    /// Validates `Σ K†K = 1` within [`COMPLETENESS_TOL`].
    pub fn new(kraus: Vec<Mat2>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidChannel("empty Kraus set".into()));
        }
        let report = check_kraus_completeness(&kraus);
        if !report.passed {
            return Err(Error::InvalidChannel(format!(
                "Kraus set is not trace preserving (residual {:.3e})",
                report.residual
            )));
        }
        Ok(Self { kraus })
    }

    pub fn kraus(&self) -> &[Mat2] {
        &self.kraus
    }
}

/// Noise acting on one qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QubitChannel {
    Pauli(PauliQubitChannel),
    Kraus(KrausQubitChannel),
}

impl QubitChannel {
    pub fn is_pauli(&self) -> bool {
        matches!(self, QubitChannel::Pauli(_))
    }

    pub fn as_pauli(&self) -> Option<&PauliQubitChannel> {
        match self {
            QubitChannel::Pauli(c) => Some(c),
            QubitChannel::Kraus(_) => None,
        }
    }

    /// Kraus operators, Pauli channels expanded as `√p σ`.
    pub fn kraus_operators(&self) -> Vec<Mat2> {
        match self {
            QubitChannel::Pauli(c) => c.kraus(),
            QubitChannel::Kraus(c) => c.kraus.clone(),
        }
    }

    /// `Σ K ρ K†` on a single-qubit matrix.
    pub fn apply(&self, rho: &Mat2) -> Mat2 {
        let mut out = [[ZERO; 2]; 2];
        for k in self.kraus_operators() {
            let t = mul(&mul(&k, rho), &adjoint(&k));
            add_assign(&mut out, &t);
        }
        out
    }
}

impl From<PauliQubitChannel> for QubitChannel {
    fn from(c: PauliQubitChannel) -> Self {
        QubitChannel::Pauli(c)
    }
}

impl From<KrausQubitChannel> for QubitChannel {
    fn from(c: KrausQubitChannel) -> Self {
        QubitChannel::Kraus(c)
    }
}

/// Independent map `ℰ_1 ⊗ ... ⊗ ℰ_n`; entry `i` acts on vertex `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductChannel {
    per_qubit: Vec<QubitChannel>,
}

impl ProductChannel {
    pub fn new(per_qubit: Vec<QubitChannel>) -> Result<Self> {
        if per_qubit.is_empty() {
            return Err(Error::InvalidChannel("product channel on zero qubits".into()));
        }
        Ok(Self { per_qubit })
    }

    /// Same channel on each of `n` qubits.
    pub fn uniform(n: usize, channel: impl Into<QubitChannel>) -> Self {
        Self {
            per_qubit: vec![channel.into(); n.max(1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::uniform(n, PauliQubitChannel::identity())
    }

    pub fn len(&self) -> usize {
        self.per_qubit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_qubit.is_empty()
    }

    pub fn qubit(&self, i: usize) -> &QubitChannel {
        &self.per_qubit[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &QubitChannel> {
        self.per_qubit.iter()
    }

    pub fn is_all_pauli(&self) -> bool {
        self.per_qubit.iter().all(QubitChannel::is_pauli)
    }

    /// Per-qubit Pauli probabilities, or `NonPauliChannel`.
    pub fn pauli_probs(&self) -> Result<Vec<[f64; 4]>> {
        self.per_qubit
            .iter()
            .map(|c| c.as_pauli().map(|p| p.probs()).ok_or(Error::NonPauliChannel))
            .collect()
    }

    pub(crate) fn require_len(&self, n: usize) -> Result<()> {
        if self.len() == n {
            Ok(())
        } else {
            Err(Error::WidthMismatch {
                expected: n,
                got: self.len(),
            })
        }
    }
}

/// `(1-p, p/3, p/3, p/3)`.
pub fn depolarizing(p: f64) -> Result<PauliQubitChannel> {
    check_prob("depolarizing", p)?;
    PauliQubitChannel::new([1.0 - p, p / 3.0, p / 3.0, p / 3.0])
}

/// `(1-p/2, 0, 0, p/2)`.
pub fn dephasing(p: f64) -> Result<PauliQubitChannel> {
    check_prob("dephasing", p)?;
    PauliQubitChannel::new([1.0 - p / 2.0, 0.0, 0.0, p / 2.0])
}

pub fn bit_flip(p: f64) -> Result<PauliQubitChannel> {
    check_prob("bit flip", p)?;
    PauliQubitChannel::new([1.0 - p, p, 0.0, 0.0])
}

pub fn bit_phase_flip(p: f64) -> Result<PauliQubitChannel> {
    check_prob("bit-phase flip", p)?;
    PauliQubitChannel::new([1.0 - p, 0.0, p, 0.0])
}

/// Infinite-temperature limit of the thermal bath written as a Pauli channel.
pub fn diffusive_pauli(p: f64) -> Result<PauliQubitChannel> {
    check_prob("diffusive", p)?;
    let s = (1.0 - p).sqrt();
    let z = (0.5 * (1.0 - p / 2.0 - s)).max(0.0);
    PauliQubitChannel::new([0.5 * (1.0 - p / 2.0 + s), p / 4.0, p / 4.0, z])
}

/// Generalized amplitude damping with mean bath occupation `nbar`.
///
/// Operators in order: `K_0 = a diag(1, √(1-p))`, `K_1 = a √p |0⟩⟨1|`,
/// `K_2 = b diag(√(1-p), 1)`, `K_3 = b √p |1⟩⟨0|` with
/// `a = √((n̄+1)/(2n̄+1))` and `b = √(n̄/(2n̄+1))`.
pub fn gad(nbar: f64, p: f64) -> Result<KrausQubitChannel> {
    if !nbar.is_finite() || nbar < 0.0 {
        return Err(Error::InvalidChannel(format!("mean occupation {nbar} must be finite and >= 0")));
    }
    check_prob("generalized amplitude damping", p)?;
    let a = ((nbar + 1.0) / (2.0 * nbar + 1.0)).sqrt();
    let b = (nbar / (2.0 * nbar + 1.0)).sqrt();
    Ok(gad_with_weights(a, b, p))
}

/// Zero-temperature limit, `gad(0, p)`; `K_2` and `K_3` vanish.
pub fn amplitude_damping(p: f64) -> Result<KrausQubitChannel> {
    gad(0.0, p)
}

/// `n̄ → ∞` limit of the thermal Kraus set, both branches weighted `1/√2`.
///
/// This is the same map as [`diffusive_pauli`] in a non-Pauli decomposition.
pub fn gad_diffusive_limit(p: f64) -> Result<KrausQubitChannel> {
    check_prob("diffusive thermal limit", p)?;
    let w = std::f64::consts::FRAC_1_SQRT_2;
    Ok(gad_with_weights(w, w, p))
}

fn gad_with_weights(a: f64, b: f64, p: f64) -> KrausQubitChannel {
    let s = (1.0 - p).sqrt();
    let sp = p.sqrt();
    let candidates = [
        [[re(a), ZERO], [ZERO, re(a * s)]],
        [[ZERO, re(a * sp)], [ZERO, ZERO]],
        [[re(b * s), ZERO], [ZERO, re(b)]],
        [[ZERO, ZERO], [re(b * sp), ZERO]],
    ];
    // Zero operators carry no weight; keeping them would only add empty terms.
    let kraus = candidates
        .into_iter()
        .filter(|k| k.iter().flatten().any(|z| *z != ZERO))
        .collect();
    KrausQubitChannel { kraus }
}

/// Outcome of a trace-preservation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletenessReport {
    /// Frobenius norm of `Σ K†K - 1`.
    pub residual: f64,
    pub passed: bool,
}

pub fn check_kraus_completeness(kraus: &[Mat2]) -> CompletenessReport {
    let mut sum = [[ZERO; 2]; 2];
    for k in kraus {
        add_assign(&mut sum, &mul(&adjoint(k), k));
    }
    sum[0][0] -= 1.0;
    sum[1][1] -= 1.0;
    let residual = sum.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    CompletenessReport {
        residual,
        passed: residual <= COMPLETENESS_TOL,
    }
}

/// Worst per-qubit completeness residual of a product channel.
pub fn check_completeness(channel: &ProductChannel) -> CompletenessReport {
    let residual = channel
        .iter()
        .map(|c| check_kraus_completeness(&c.kraus_operators()).residual)
        .fold(0.0, f64::max);
    CompletenessReport {
        residual,
        passed: residual <= COMPLETENESS_TOL,
    }
}

pub(crate) fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

pub(crate) fn adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

fn add_assign(a: &mut Mat2, b: &Mat2) {
    for r in 0..2 {
        for c in 0..2 {
            a[r][c] += b[r][c];
        }
    }
}

pub(crate) fn scale(a: &Mat2, s: f64) -> Mat2 {
    let mut out = *a;
    for z in out.iter_mut().flatten() {
        *z *= s;
    }
    out
}

/// Channel strength: either the sweep variable or a fixed number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strength {
    Sweep,
    Fixed(f64),
}

impl Strength {
    fn resolve(self, p: f64) -> f64 {
        match self {
            Strength::Sweep => p,
            Strength::Fixed(x) => x,
        }
    }
}

/// Mean bath occupation for `gad` specs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Occupation {
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelFamily {
    Depolarizing,
    Dephasing,
    BitFlip,
    BitPhaseFlip,
    AmplitudeDamping,
    Gad(Occupation),
    DiffusivePauli,
}

/// Parsed channel spec string such as `depol:p`, `gad:1.5:p` or `dephase:0.2`.
///
/// A literal `p` marks the swept strength; `gad:inf:p` selects the
/// infinite-temperature thermal Kraus set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub family: ChannelFamily,
    pub strength: Strength,
}

impl ChannelSpec {
    /// Single-qubit channel at sweep value `p`.
    pub fn instantiate(&self, p: f64) -> Result<QubitChannel> {
        let p = self.strength.resolve(p);
        Ok(match self.family {
            ChannelFamily::Depolarizing => depolarizing(p)?.into(),
            ChannelFamily::Dephasing => dephasing(p)?.into(),
            ChannelFamily::BitFlip => bit_flip(p)?.into(),
            ChannelFamily::BitPhaseFlip => bit_phase_flip(p)?.into(),
            ChannelFamily::DiffusivePauli => diffusive_pauli(p)?.into(),
            ChannelFamily::AmplitudeDamping => amplitude_damping(p)?.into(),
            ChannelFamily::Gad(Occupation::Finite(nbar)) => gad(nbar, p)?.into(),
            ChannelFamily::Gad(Occupation::Infinite) => gad_diffusive_limit(p)?.into(),
        })
    }

    /// Uniform product channel on `n` qubits at sweep value `p`.
    pub fn product(&self, n: usize, p: f64) -> Result<ProductChannel> {
        Ok(ProductChannel::uniform(n, self.instantiate(p)?))
    }

    pub fn is_pauli(&self) -> bool {
        !matches!(
            self.family,
            ChannelFamily::AmplitudeDamping | ChannelFamily::Gad(_)
        )
    }
}

impl FromStr for ChannelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidChannel(format!("unrecognized channel spec {s:?}"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let strength = |t: &str| -> Result<Strength> {
            if t == "p" {
                return Ok(Strength::Sweep);
            }
            let v: f64 = t.parse().map_err(|_| bad())?;
            check_prob("channel spec", v)?;
            Ok(Strength::Fixed(v))
        };
        let (family, strength) = match parts.as_slice() {
            ["depol", t] => (ChannelFamily::Depolarizing, strength(t)?),
            ["dephase", t] => (ChannelFamily::Dephasing, strength(t)?),
            ["bitflip", t] => (ChannelFamily::BitFlip, strength(t)?),
            ["bitphaseflip", t] => (ChannelFamily::BitPhaseFlip, strength(t)?),
            ["ad", t] => (ChannelFamily::AmplitudeDamping, strength(t)?),
            ["diffusive", t] => (ChannelFamily::DiffusivePauli, strength(t)?),
            ["gad", nbar, t] => {
                let occ = if *nbar == "inf" {
                    Occupation::Infinite
                } else {
                    let v: f64 = nbar.parse().map_err(|_| bad())?;
                    if !v.is_finite() || v < 0.0 {
                        return Err(bad());
                    }
                    Occupation::Finite(v)
                };
                (ChannelFamily::Gad(occ), strength(t)?)
            }
            _ => return Err(bad()),
        };
        Ok(Self { family, strength })
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let strength = match self.strength {
            Strength::Sweep => "p".to_string(),
            Strength::Fixed(v) => format!("{v}"),
        };
        match self.family {
            ChannelFamily::Depolarizing => write!(f, "depol:{strength}"),
            ChannelFamily::Dephasing => write!(f, "dephase:{strength}"),
            ChannelFamily::BitFlip => write!(f, "bitflip:{strength}"),
            ChannelFamily::BitPhaseFlip => write!(f, "bitphaseflip:{strength}"),
            ChannelFamily::AmplitudeDamping => write!(f, "ad:{strength}"),
            ChannelFamily::DiffusivePauli => write!(f, "diffusive:{strength}"),
            ChannelFamily::Gad(Occupation::Infinite) => write!(f, "gad:inf:{strength}"),
            ChannelFamily::Gad(Occupation::Finite(n)) => write!(f, "gad:{n}:{strength}"),
        }
    }
}

impl Serialize for ChannelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ChannelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(k: usize) -> impl Iterator<Item = f64> {
        (0..k).map(move |i| i as f64 / (k - 1) as f64)
    }

    fn close(a: [f64; 4], b: [f64; 4]) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-15)
    }

    fn sample_state() -> Mat2 {
        [
            [re(0.7), Complex64::new(0.1, 0.3)],
            [Complex64::new(0.1, -0.3), re(0.3)],
        ]
    }

    #[test]
    fn pauli_constructors() {
        assert!(close(depolarizing(0.0).unwrap().probs(), [1.0, 0.0, 0.0, 0.0]));
        assert!(close(depolarizing(1.0).unwrap().probs(), [0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]));
        assert!(close(depolarizing(0.3).unwrap().probs(), [0.7, 0.1, 0.1, 0.1]));
        assert!(close(dephasing(1.0).unwrap().probs(), [0.5, 0.0, 0.0, 0.5]));
        assert!(close(dephasing(0.5).unwrap().probs(), [0.75, 0.0, 0.0, 0.25]));
        assert!(close(bit_flip(0.0).unwrap().probs(), [1.0, 0.0, 0.0, 0.0]));
        assert!(close(bit_phase_flip(0.2).unwrap().probs(), [0.8, 0.0, 0.2, 0.0]));
        assert!(close(diffusive_pauli(0.0).unwrap().probs(), [1.0, 0.0, 0.0, 0.0]));
        assert!(close(diffusive_pauli(1.0).unwrap().probs(), [0.25; 4]));
        for bad in [-0.1, 1.5, f64::NAN] {
            assert!(depolarizing(bad).is_err());
            assert!(dephasing(bad).is_err());
            assert!(gad(1.0, bad).is_err());
        }
        assert!(gad(-1.0, 0.5).is_err());
    }

    #[test]
    fn zero_temperature_limit_is_amplitude_damping() {
        let ch = gad(0.0, 0.36).unwrap();
        let k = ch.kraus();
        assert_eq!(k.len(), 2);
        assert_eq!(k[0], [[re(1.0), ZERO], [ZERO, re(0.8)]]);
        assert_eq!(k[1], [[ZERO, re(0.6)], [ZERO, ZERO]]);
    }

    #[test]
    fn thermal_branch_weights() {
        let k = gad(1.0, 0.5).unwrap().kraus().to_vec();
        assert_eq!(k.len(), 4);
        assert!((k[0][0][0].re - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((k[2][1][1].re - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn completeness_over_parameter_grids() {
        for p in grid(100) {
            for c in [
                QubitChannel::from(depolarizing(p).unwrap()),
                dephasing(p).unwrap().into(),
                bit_flip(p).unwrap().into(),
                bit_phase_flip(p).unwrap().into(),
                diffusive_pauli(p).unwrap().into(),
                gad_diffusive_limit(p).unwrap().into(),
            ] {
                assert!(check_kraus_completeness(&c.kraus_operators()).residual <= 1e-12);
            }
            for nbar in [0.0, 0.5, 1.0, 10.0, 1e3] {
                let c = gad(nbar, p).unwrap();
                assert!(check_kraus_completeness(c.kraus()).residual <= 1e-12, "{nbar} {p}");
            }
        }
    }

    #[test]
    fn completeness_negative_control() {
        let id = ProductChannel::identity(3);
        assert_eq!(check_completeness(&id).residual, 0.0);
        let scaled: Vec<Mat2> = gad(1.0, 0.3).unwrap().kraus().iter().map(|k| scale(k, 1.01)).collect();
        let report = check_kraus_completeness(&scaled);
        assert!(!report.passed && report.residual > 1e-3);
        assert!(KrausQubitChannel::new(scaled).is_err());
    }

    #[test]
    fn pauli_channels_preserve_trace_and_hermiticity() {
        let rho = sample_state();
        for p in grid(11) {
            for c in [depolarizing(p).unwrap(), dephasing(p).unwrap(), diffusive_pauli(p).unwrap()] {
                let out = QubitChannel::from(c).apply(&rho);
                assert!(((out[0][0] + out[1][1]) - re(1.0)).norm() < 1e-12);
                assert!((out[0][1] - out[1][0].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn large_occupation_approaches_diffusive_pauli() {
        let rho = sample_state();
        for p in grid(11) {
            let thermal = QubitChannel::from(gad(1e3, p).unwrap()).apply(&rho);
            let pauli = QubitChannel::from(diffusive_pauli(p).unwrap()).apply(&rho);
            let limit = QubitChannel::from(gad_diffusive_limit(p).unwrap()).apply(&rho);
            for r in 0..2 {
                for c in 0..2 {
                    assert!((thermal[r][c] - pauli[r][c]).norm() < 1e-3);
                    assert!((limit[r][c] - pauli[r][c]).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn spec_strings_roundtrip() {
        for s in ["depol:p", "dephase:0.25", "bitflip:p", "bitphaseflip:p", "ad:p", "gad:1.5:p", "gad:inf:p", "diffusive:p"] {
            let spec: ChannelSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("depol".parse::<ChannelSpec>().is_err());
        assert!("depol:2".parse::<ChannelSpec>().is_err());
        assert!("gad:-1:p".parse::<ChannelSpec>().is_err());
        let fixed: ChannelSpec = "dephase:0.25".parse().unwrap();
        assert_eq!(fixed.instantiate(0.9).unwrap(), dephasing(0.25).unwrap().into());
        assert!(!"ad:p".parse::<ChannelSpec>().unwrap().is_pauli());
    }
}
