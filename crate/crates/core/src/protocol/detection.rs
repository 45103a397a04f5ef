use rand::Rng;

use crate::bell::{detect_correlation_rule, Basis, BellLabel, Correlation};
use crate::error::Result;
use crate::qstate::{PureState, QubitId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubroundOutcome {
    pub basis: Basis,
    pub bits: (bool, bool),
    pub passed: bool,
}

/// One eavesdropping check on the pair `(qa, qb)`, nominally in state
/// `expected`. The dealer picks a basis uniformly, both qubits are measured in
/// it and then consumed; the round passes iff the observed correlation is the
/// one `expected` forces.
pub fn detection_subround<R: Rng>(
    state: &mut PureState,
    qa: QubitId,
    qb: QubitId,
    expected: BellLabel,
    rng: &mut R,
) -> Result<SubroundOutcome> {
    let basis = if rng.gen_bool(0.5) {
        Basis::Diagonal
    } else {
        Basis::Rectilinear
    };
    let a = state.measure_qubit(qa, basis, rng)?;
    let b = state.measure_qubit(qb, basis, rng)?;
    state.discard(qa)?;
    state.discard(qb)?;
    let passed = Correlation::of_bits(a, b) == detect_correlation_rule(expected, basis);
    Ok(SubroundOutcome {
        basis,
        bits: (a, b),
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pair(label: BellLabel) -> PureState {
        let mut s = PureState::new_register();
        s.add_bell_pair(QubitId(1), QubitId(2), label).unwrap();
        s
    }

    #[test]
    fn untouched_pairs_always_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for label in BellLabel::ALL {
            for _ in 0..200 {
                let mut s = pair(label);
                let out =
                    detection_subround(&mut s, QubitId(1), QubitId(2), label, &mut rng).unwrap();
                assert!(out.passed);
                assert!(s.is_consumed(QubitId(1)) && s.is_consumed(QubitId(2)));
            }
        }
    }

    #[test]
    fn phi_minus_diagonal_is_anticorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut seen = 0;
        while seen < 100 {
            let mut s = pair(BellLabel::PHI_MINUS);
            let out = detection_subround(
                &mut s,
                QubitId(1),
                QubitId(2),
                BellLabel::PHI_MINUS,
                &mut rng,
            )
            .unwrap();
            if out.basis == Basis::Diagonal {
                assert_ne!(out.bits.0, out.bits.1);
                assert!(out.passed);
                seen += 1;
            }
        }
    }

    #[test]
    fn wrong_expectation_fails_in_some_basis() {
        // Ψ⁻ tested as if it were Φ⁺ disagrees in both bases.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let mut s = pair(BellLabel::PSI_MINUS);
            let out = detection_subround(
                &mut s,
                QubitId(1),
                QubitId(2),
                BellLabel::PHI_PLUS,
                &mut rng,
            )
            .unwrap();
            assert!(!out.passed);
        }
    }

    #[test]
    fn intercepted_qubit_fails_a_quarter_of_the_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let trials = 10_000;
        let mut fails = 0;
        for _ in 0..trials {
            let mut s = pair(BellLabel::PSI_MINUS);
            let eve = if rng.gen_bool(0.5) {
                Basis::Diagonal
            } else {
                Basis::Rectilinear
            };
            s.measure_qubit(QubitId(2), eve, &mut rng).unwrap();
            let out = detection_subround(
                &mut s,
                QubitId(1),
                QubitId(2),
                BellLabel::PSI_MINUS,
                &mut rng,
            )
            .unwrap();
            fails += usize::from(!out.passed);
        }
        let rate = fails as f64 / trials as f64;
        // Analytic rate 1/4: mismatched basis (1/2) times random correlation (1/2).
        let sigma = (0.25f64 * 0.75 / trials as f64).sqrt();
        assert!((rate - 0.25).abs() < 5.0 * sigma, "rate {rate}");
    }
}
