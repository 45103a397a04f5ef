//! Exhaustive checks of the label algebra against the statevector oracle.

use rand::Rng;

use crate::bell::{pauli_action_on_bell, swap_outcome, BellLabel, PauliOp};
use crate::error::{Error, Result};
use crate::qstate::{PureState, QubitId, AMPLITUDE_TOL};

fn q(i: u32) -> QubitId {
    QubitId(i)
}

/// One `(l_ab, l_cd, outcome)` row of the swap table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapCase {
    pub l_ab: BellLabel,
    pub l_cd: BellLabel,
    pub measured: BellLabel,
    pub predicted: BellLabel,
    /// Surviving-pair label seen by the oracle; `None` if the outcome never
    /// occurred.
    pub oracle: Option<BellLabel>,
    /// Born probability of the outcome.
    pub probability: f64,
    /// Sampled frequency of the outcome.
    pub frequency: f64,
    pub samples: usize,
}

impl SwapCase {
    pub fn label_matches(&self) -> bool {
        self.oracle == Some(self.predicted)
    }

    /// Sampled frequency within `tol` of 1/4 and Born probability exact.
    pub fn frequency_ok(&self, tol: f64) -> bool {
        (self.frequency - 0.25).abs() <= tol && (self.probability - 0.25).abs() < 1e-12
    }
}

/// The 64-row table `(l_ab, l_cd, l_meas) -> l_out` from the label algebra.
pub fn swap_table() -> Vec<[BellLabel; 4]> {
    let mut rows = Vec::with_capacity(64);
    for l_ab in BellLabel::ALL {
        for l_cd in BellLabel::ALL {
            for m in BellLabel::ALL {
                rows.push([l_ab, l_cd, m, swap_outcome(l_ab, l_cd, m)]);
            }
        }
    }
    rows
}

/// Prepares `(1,2)` and `(3,4)`, Bell-measures `(2,3)` `samples` times per
/// input pair and records what `(1,4)` collapses to for every outcome.
/// A single sample whose surviving pair disagrees with the table marks that
/// row as failed.
pub fn check_swap_table(samples: usize, rng: &mut impl Rng) -> Result<Vec<SwapCase>> {
    let mut cases = Vec::with_capacity(64);
    for l_ab in BellLabel::ALL {
        for l_cd in BellLabel::ALL {
            let mut initial = PureState::new_register();
            initial.add_bell_pair(q(1), q(2), l_ab)?;
            initial.add_bell_pair(q(3), q(4), l_cd)?;
            let probs = initial.bell_probabilities(q(2), q(3))?;
            let mut counts = [0usize; 4];
            let mut seen: [Option<Option<BellLabel>>; 4] = [None; 4];
            for _ in 0..samples {
                let mut s = initial.clone();
                let m = s.measure_bell(q(2), q(3), rng)?;
                let out = s.pair_label(q(1), q(4))?;
                counts[m.index()] += 1;
                let slot = &mut seen[m.index()];
                match *slot {
                    None => *slot = Some(out),
                    Some(prev) if prev != out => *slot = Some(None),
                    Some(_) => {}
                }
            }
            for m in BellLabel::ALL {
                cases.push(SwapCase {
                    l_ab,
                    l_cd,
                    measured: m,
                    predicted: swap_outcome(l_ab, l_cd, m),
                    oracle: seen[m.index()].flatten(),
                    probability: probs[m.index()],
                    frequency: if samples == 0 {
                        0.0
                    } else {
                        counts[m.index()] as f64 / samples as f64
                    },
                    samples,
                });
            }
        }
    }
    Ok(cases)
}

/// A product of two Bell pairs re-expanded in the crossed pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Identity {
    pub name: &'static str,
    pub left: ((u32, u32), BellLabel),
    pub right: ((u32, u32), BellLabel),
    pub pairing: ((u32, u32), (u32, u32)),
    /// The terms with coefficient magnitude 1/2, as `(first pair, second pair)`.
    pub terms: [(BellLabel, BellLabel); 4],
}

use BellLabel as L;

/// The three four-qubit re-expansions behind the four-party attack.
pub const IDENTITIES: [Identity; 3] = [
    Identity {
        name: "phi-(1,2) psi-(7,8) over (1,8)(2,7)",
        left: ((1, 2), L::PHI_MINUS),
        right: ((7, 8), L::PSI_MINUS),
        pairing: ((1, 8), (2, 7)),
        terms: [
            (L::PHI_MINUS, L::PSI_MINUS),
            (L::PHI_PLUS, L::PSI_PLUS),
            (L::PSI_MINUS, L::PHI_MINUS),
            (L::PSI_PLUS, L::PHI_PLUS),
        ],
    },
    Identity {
        name: "psi+(2,7) psi-(3,4) over (2,3)(4,7)",
        left: ((2, 7), L::PSI_PLUS),
        right: ((3, 4), L::PSI_MINUS),
        pairing: ((2, 3), (4, 7)),
        terms: [
            (L::PHI_MINUS, L::PHI_PLUS),
            (L::PHI_PLUS, L::PHI_MINUS),
            (L::PSI_PLUS, L::PSI_MINUS),
            (L::PSI_MINUS, L::PSI_PLUS),
        ],
    },
    Identity {
        name: "phi+(4,7) psi-(5,6) over (4,5)(6,7)",
        left: ((4, 7), L::PHI_PLUS),
        right: ((5, 6), L::PSI_MINUS),
        pairing: ((4, 5), (6, 7)),
        terms: [
            (L::PHI_MINUS, L::PSI_PLUS),
            (L::PHI_PLUS, L::PSI_MINUS),
            (L::PSI_PLUS, L::PHI_MINUS),
            (L::PSI_MINUS, L::PHI_PLUS),
        ],
    },
];

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub identity: Identity,
    /// `|c_ij|` for `|B_i⟩ ⊗ |B_j⟩` in the identity's pairing.
    pub magnitudes: [[f64; 4]; 4],
}

impl IdentityCheck {
    pub fn nonzero_terms(&self, tol: f64) -> usize {
        self.magnitudes
            .iter()
            .flatten()
            .filter(|&&m| m > tol)
            .count()
    }

    /// Magnitude 1/2 on exactly the listed terms and 0 elsewhere.
    pub fn passed(&self, tol: f64) -> bool {
        let listed = |i: usize, j: usize| {
            self.identity
                .terms
                .iter()
                .any(|&(a, b)| a.index() == i && b.index() == j)
        };
        (0..4).all(|i| {
            (0..4).all(|j| {
                let want = if listed(i, j) { 0.5 } else { 0.0 };
                (self.magnitudes[i][j] - want).abs() <= tol
            })
        })
    }
}

pub fn check_identity(identity: &Identity) -> Result<IdentityCheck> {
    let mut s = PureState::new_register();
    let ((a, b), la) = identity.left;
    let ((c, d), lc) = identity.right;
    s.add_bell_pair(q(a), q(b), la)?;
    s.add_bell_pair(q(c), q(d), lc)?;
    let ((p, r), (t, u)) = identity.pairing;
    let coeffs = s.bell_coefficients(((q(p), q(r)), (q(t), q(u))))?;
    Ok(IdentityCheck {
        identity: *identity,
        magnitudes: coeffs.map(|row| row.map(|c| c.norm())),
    })
}

pub fn check_identities() -> Result<Vec<IdentityCheck>> {
    IDENTITIES.iter().map(check_identity).collect()
}

/// `u_k` applied to qubit 1 of a `Ψ⁻` pair `(1,2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCoding {
    pub labels: [BellLabel; 4],
    /// `|⟨u_a Ψ⁻ | u_b Ψ⁻⟩|` for `a < b`.
    pub overlaps: Vec<((PauliOp, PauliOp), f64)>,
}

impl DenseCoding {
    pub fn orthogonal_pairs(&self) -> usize {
        self.overlaps
            .iter()
            .filter(|(_, o)| *o < AMPLITUDE_TOL)
            .count()
    }

    pub fn labels_match_action(&self) -> bool {
        PauliOp::ALL
            .iter()
            .zip(self.labels)
            .all(|(&op, l)| l == pauli_action_on_bell(op, BellLabel::PSI_MINUS))
    }

    pub fn passed(&self) -> bool {
        let distinct: std::collections::BTreeSet<usize> =
            self.labels.iter().map(|l| l.index()).collect();
        distinct.len() == 4
            && self.orthogonal_pairs() == self.overlaps.len()
            && self.labels_match_action()
    }
}

pub fn check_dense_coding() -> Result<DenseCoding> {
    let states = PauliOp::ALL
        .iter()
        .map(|&op| {
            let mut s = PureState::new_register();
            s.add_bell_pair(q(1), q(2), BellLabel::PSI_MINUS)?;
            s.apply_op(q(1), op)?;
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut labels = [BellLabel::PHI_PLUS; 4];
    for (slot, s) in labels.iter_mut().zip(&states) {
        *slot = s
            .pair_label(q(1), q(2))?
            .ok_or_else(|| Error::State("encoded pair is not a Bell state".into()))?;
    }
    let mut overlaps = Vec::new();
    for a in 0..4 {
        for b in a + 1..4 {
            let o = states[a].inner_product(&states[b])?.norm();
            overlaps.push(((PauliOp::ALL[a], PauliOp::ALL[b]), o));
        }
    }
    Ok(DenseCoding { labels, overlaps })
}
