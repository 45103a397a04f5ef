//! Phase-free Bell-state algebra.
//!
//! A Bell state is labelled by two bits `(x, z)`: `x` is set when the pair is
//! anticorrelated in the computational basis (`ZZ = -1`) and `z` is set when it
//! is anticorrelated in the diagonal basis (`XX = -1`).
//!
//! ```text
//! |Φ⁺⟩ = (|00⟩ + |11⟩)/√2   (0,0)
//! |Φ⁻⟩ = (|00⟩ − |11⟩)/√2   (0,1)
//! |Ψ⁺⟩ = (|01⟩ + |10⟩)/√2   (1,0)
//! |Ψ⁻⟩ = (|01⟩ − |10⟩)/√2   (1,1)
//! ```
//!
//! With this convention the four labels form the group Z₂ × Z₂ under XOR, a
//! single-qubit Pauli shifts a pair's label by its own label, and entanglement
//! swapping is a three-way XOR. All statements here hold up to global phase;
//! [`crate::qstate`] keeps exact amplitudes.
//!
//! The secret encoding follows the operator matrices directly:
//! `u1 = I`, `u2 = Z`, `u3 = X`, `u4 = |0⟩⟨1| − |1⟩⟨0| = ZX`. Applied to one
//! qubit of `Ψ⁻` these give `Ψ⁻, Ψ⁺, Φ⁻, Φ⁺` respectively. Some worked
//! examples in the literature on this protocol pair `u3` with `Φ⁺` and `u4`
//! with `Φ⁻` instead; the label chains in those examples are reproduced
//! exactly, only the final bit decoding differs.

use std::fmt;
use std::ops::BitXor;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One of the four Bell states, as an `(x, z)` Pauli-coset label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BellLabel {
    pub x: bool,
    pub z: bool,
}

impl BellLabel {
    pub const PHI_PLUS: BellLabel = BellLabel { x: false, z: false };
    pub const PHI_MINUS: BellLabel = BellLabel { x: false, z: true };
    pub const PSI_PLUS: BellLabel = BellLabel { x: true, z: false };
    pub const PSI_MINUS: BellLabel = BellLabel { x: true, z: true };

    /// All four labels in index order `Φ⁺, Φ⁻, Ψ⁺, Ψ⁻`.
    pub const ALL: [BellLabel; 4] = [
        Self::PHI_PLUS,
        Self::PHI_MINUS,
        Self::PSI_PLUS,
        Self::PSI_MINUS,
    ];

    pub const fn new(x: bool, z: bool) -> Self {
        BellLabel { x, z }
    }

    /// Index `2x + z`, matching the order of [`BellLabel::ALL`].
    pub const fn index(self) -> usize {
        (self.x as usize) << 1 | self.z as usize
    }

    pub fn from_index(index: usize) -> Self {
        Self::ALL[index & 3]
    }

    /// Lowercase ASCII name: `phi+`, `phi-`, `psi+`, `psi-`.
    pub const fn name(self) -> &'static str {
        match (self.x, self.z) {
            (false, false) => "phi+",
            (false, true) => "phi-",
            (true, false) => "psi+",
            (true, true) => "psi-",
        }
    }

    /// XOR of an arbitrary number of labels; `Φ⁺` for an empty iterator.
    pub fn xor_all<I: IntoIterator<Item = BellLabel>>(labels: I) -> Self {
        labels.into_iter().fold(Self::PHI_PLUS, |acc, l| acc ^ l)
    }
}

impl BitXor for BellLabel {
    type Output = BellLabel;

    fn bitxor(self, rhs: Self) -> Self {
        BellLabel {
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
        }
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BellLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "phi+" => Ok(Self::PHI_PLUS),
            "phi-" => Ok(Self::PHI_MINUS),
            "psi+" => Ok(Self::PSI_PLUS),
            "psi-" => Ok(Self::PSI_MINUS),
            other => Err(Error::Input(format!("unknown Bell label {other:?}"))),
        }
    }
}

/// Two secret bits, stored as the value `0..4` of the bit string read
/// most-significant first (`"10"` is 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SecretBits(u8);

impl SecretBits {
    pub const ALL: [SecretBits; 4] = [SecretBits(0), SecretBits(1), SecretBits(2), SecretBits(3)];

    pub fn from_value(value: u8) -> Result<Self> {
        if value < 4 {
            Ok(SecretBits(value))
        } else {
            Err(Error::Input(format!(
                "secret value {value} does not fit in two bits"
            )))
        }
    }

    pub const fn value(self) -> u8 {
        self.0
    }
}

impl fmt::Display for SecretBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02b}", self.0)
    }
}

impl FromStr for SecretBits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "00" => Ok(SecretBits(0)),
            "01" => Ok(SecretBits(1)),
            "10" => Ok(SecretBits(2)),
            "11" => Ok(SecretBits(3)),
            other => Err(Error::Input(format!(
                "secret must be one of 00, 01, 10, 11; got {other:?}"
            ))),
        }
    }
}

/// The dealer's four encoding operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliOp {
    /// `|0⟩⟨0| + |1⟩⟨1|`
    U1,
    /// `|0⟩⟨0| − |1⟩⟨1|`
    U2,
    /// `|1⟩⟨0| + |0⟩⟨1|`
    U3,
    /// `|0⟩⟨1| − |1⟩⟨0|`
    U4,
}

impl PauliOp {
    pub const ALL: [PauliOp; 4] = [PauliOp::U1, PauliOp::U2, PauliOp::U3, PauliOp::U4];

    /// Label shift this operation induces on any Bell pair it touches.
    pub const fn op_label(self) -> BellLabel {
        match self {
            PauliOp::U1 => BellLabel::PHI_PLUS,
            PauliOp::U2 => BellLabel::PHI_MINUS,
            PauliOp::U3 => BellLabel::PSI_PLUS,
            PauliOp::U4 => BellLabel::PSI_MINUS,
        }
    }

    pub fn from_op_label(label: BellLabel) -> Self {
        Self::ALL[label.index()]
    }

    pub const fn secret_bits(self) -> SecretBits {
        SecretBits(self as u8)
    }

    pub fn from_secret(bits: SecretBits) -> Self {
        Self::ALL[bits.0 as usize]
    }

    pub const fn name(self) -> &'static str {
        match self {
            PauliOp::U1 => "u1",
            PauliOp::U2 => "u2",
            PauliOp::U3 => "u3",
            PauliOp::U4 => "u4",
        }
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Single-qubit measurement basis used in detection rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    /// `{|0⟩, |1⟩}`
    Rectilinear,
    /// `{|+⟩, |−⟩}`
    Diagonal,
}

impl Basis {
    pub const fn name(self) -> &'static str {
        match self {
            Basis::Rectilinear => "rectilinear",
            Basis::Diagonal => "diagonal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Correlation {
    Correlated,
    Anticorrelated,
}

impl Correlation {
    pub fn of_bits(a: bool, b: bool) -> Self {
        if a == b {
            Correlation::Correlated
        } else {
            Correlation::Anticorrelated
        }
    }
}

/// Parses a two-character bit string into the encoding operation it selects.
pub fn encode_secret(bits: &str) -> Result<PauliOp> {
    bits.parse::<SecretBits>().map(PauliOp::from_secret)
}

/// Label of a Bell pair after `op` is applied to either of its qubits.
pub fn pauli_action_on_bell(op: PauliOp, label: BellLabel) -> BellLabel {
    label ^ op.op_label()
}

/// Label of the surviving pair `(a, d)` when pairs `(a, b)` and `(c, d)` are
/// swapped by a Bell measurement on `(b, c)` with outcome `measured`.
pub fn swap_outcome(l_ab: BellLabel, l_cd: BellLabel, measured: BellLabel) -> BellLabel {
    l_ab ^ l_cd ^ measured
}

/// Inverse of [`swap_outcome`]: recovers the `(b, c)` outcome from the two
/// initial labels and the surviving pair's label.
pub fn infer_link(l_ab: BellLabel, l_cd: BellLabel, l_ad: BellLabel) -> BellLabel {
    l_ab ^ l_cd ^ l_ad
}

/// Recovers the dealer's operation on a closed chain of Bell pairs.
///
/// `initial` holds the pre-encoding label of every pair in the ring and
/// `measured` the outcome of every Bell measurement that closes it, the
/// dealer's own measurement included. Because the product of all `Z` (and all
/// `X`) operators on the ring commutes with every Bell measurement, the XOR of
/// the encoded initial labels equals the XOR of the outcomes.
pub fn ring_reconstruct(initial: &[BellLabel], measured: &[BellLabel]) -> Result<PauliOp> {
    if initial.is_empty() {
        return Err(Error::Input("ring must contain at least one pair".into()));
    }
    if initial.len() != measured.len() {
        return Err(Error::Input(format!(
            "ring has {} initial pairs but {} measured pairs",
            initial.len(),
            measured.len()
        )));
    }
    let shift = BellLabel::xor_all(initial.iter().chain(measured).copied());
    Ok(PauliOp::from_op_label(shift))
}

/// Expected correlation when both qubits of a pair with `label` are measured
/// in `basis`.
pub fn detect_correlation_rule(label: BellLabel, basis: Basis) -> Correlation {
    let anti = match basis {
        Basis::Rectilinear => label.x,
        Basis::Diagonal => label.z,
    };
    if anti {
        Correlation::Anticorrelated
    } else {
        Correlation::Correlated
    }
}
