//! Dense statevector simulator over labelled qubits.
//!
//! This is the ground truth the label algebra in [`crate::bell`] is checked
//! against. Amplitude index bit order: the first qubit in [`PureState::qubits`]
//! is the most significant bit. Measured qubits are tombstoned rather than
//! re-indexed so that qubit numbers stay stable across a protocol run.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::bell::{Basis, BellLabel, PauliOp};
use crate::error::{Error, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 12;

/// Tolerance for algebraic identities on amplitudes.
pub const AMPLITUDE_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitId(pub u32);

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Gates the oracle can apply to a single qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Pauli(PauliOp),
    /// Hadamard; maps the rectilinear basis onto the diagonal basis.
    ToDiagonal,
}

impl From<PauliOp> for Gate {
    fn from(op: PauliOp) -> Self {
        Gate::Pauli(op)
    }
}

impl Gate {
    fn matrix(self) -> [[Complex64; 2]; 2] {
        let c = |re: f64| Complex64::new(re, 0.0);
        match self {
            Gate::Pauli(PauliOp::U1) => [[ONE, ZERO], [ZERO, ONE]],
            Gate::Pauli(PauliOp::U2) => [[ONE, ZERO], [ZERO, -ONE]],
            Gate::Pauli(PauliOp::U3) => [[ZERO, ONE], [ONE, ZERO]],
            Gate::Pauli(PauliOp::U4) => [[ZERO, ONE], [-ONE, ZERO]],
            Gate::ToDiagonal => [
                [c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)],
                [c(FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2)],
            ],
        }
    }
}

/// Amplitudes `(|00⟩, |01⟩, |10⟩, |11⟩)` of the Bell state with `label`.
pub fn bell_amplitudes(label: BellLabel) -> [Complex64; 4] {
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    match (label.x, label.z) {
        (false, false) => [s, ZERO, ZERO, s],
        (false, true) => [s, ZERO, ZERO, -s],
        (true, false) => [ZERO, s, s, ZERO],
        (true, true) => [ZERO, s, -s, ZERO],
    }
}

/// A pure state of the active qubits, plus the set of consumed qubit ids.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    qubits: Vec<QubitId>,
    amplitudes: Vec<Complex64>,
    consumed: BTreeSet<QubitId>,
}

impl Default for PureState {
    fn default() -> Self {
        Self::new_register()
    }
}

impl PureState {
    /// The empty register: no qubits, scalar amplitude 1.
    pub fn new_register() -> Self {
        PureState {
            qubits: Vec::new(),
            amplitudes: vec![ONE],
            consumed: BTreeSet::new(),
        }
    }

    /// Builds a state from explicit amplitudes. The vector must have length
    /// `2^qubits.len()` and unit norm.
    pub fn from_amplitudes(qubits: Vec<QubitId>, amplitudes: Vec<Complex64>) -> Result<Self> {
        let unique: BTreeSet<_> = qubits.iter().collect();
        if unique.len() != qubits.len() {
            return Err(Error::Input("duplicate qubit id".into()));
        }
        if qubits.len() > MAX_QUBITS || amplitudes.len() != 1 << qubits.len() {
            return Err(Error::Input(format!(
                "{} amplitudes do not describe {} qubits",
                amplitudes.len(),
                qubits.len()
            )));
        }
        let state = PureState {
            qubits,
            amplitudes,
            consumed: BTreeSet::new(),
        };
        if (state.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!(
                "state norm {} is not 1",
                state.norm()
            )));
        }
        Ok(state)
    }

    /// Active qubits in amplitude bit order (first = most significant).
    pub fn qubits(&self) -> &[QubitId] {
        &self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_consumed(&self, q: QubitId) -> bool {
        self.consumed.contains(&q)
    }

    pub fn is_active(&self, q: QubitId) -> bool {
        self.qubits.contains(&q)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn position(&self, q: QubitId) -> Result<usize> {
        if self.consumed.contains(&q) {
            return Err(Error::State(format!("qubit {q} has already been consumed")));
        }
        self.qubits
            .iter()
            .position(|&x| x == q)
            .ok_or_else(|| Error::Input(format!("qubit {q} is not in the register")))
    }

    fn shift(&self, pos: usize) -> usize {
        self.qubits.len() - 1 - pos
    }

    fn distinct_positions(&self, qa: QubitId, qb: QubitId) -> Result<(usize, usize)> {
        if qa == qb {
            return Err(Error::Input(format!("qubit {qa} paired with itself")));
        }
        Ok((self.position(qa)?, self.position(qb)?))
    }

    fn append(&mut self, ids: &[QubitId], local: &[Complex64]) {
        let mut out = Vec::with_capacity(self.amplitudes.len() * local.len());
        for &a in &self.amplitudes {
            out.extend(local.iter().map(|&b| a * b));
        }
        self.amplitudes = out;
        self.qubits.extend_from_slice(ids);
    }

    fn check_fresh(&self, ids: &[QubitId]) -> Result<()> {
        for &q in ids {
            if self.qubits.contains(&q) || self.consumed.contains(&q) {
                return Err(Error::Input(format!("qubit {q} already exists")));
            }
        }
        if self.qubits.len() + ids.len() > MAX_QUBITS {
            return Err(Error::Input(format!(
                "register would exceed {MAX_QUBITS} qubits"
            )));
        }
        Ok(())
    }

    /// Tensor-extends the register with a Bell pair on two fresh qubits.
    pub fn add_bell_pair(&mut self, qa: QubitId, qb: QubitId, label: BellLabel) -> Result<()> {
        if qa == qb {
            return Err(Error::Input(format!("qubit {qa} paired with itself")));
        }
        self.check_fresh(&[qa, qb])?;
        self.append(&[qa, qb], &bell_amplitudes(label));
        Ok(())
    }

    /// Prepares a new Bell pair on two previously consumed qubit ids.
    pub fn reprepare_bell_pair(
        &mut self,
        qa: QubitId,
        qb: QubitId,
        label: BellLabel,
    ) -> Result<()> {
        if qa == qb {
            return Err(Error::Input(format!("qubit {qa} paired with itself")));
        }
        for q in [qa, qb] {
            if !self.consumed.contains(&q) {
                return Err(Error::State(format!(
                    "qubit {q} must be consumed before it is prepared again"
                )));
            }
        }
        if self.qubits.len() + 2 > MAX_QUBITS {
            return Err(Error::Input(format!(
                "register would exceed {MAX_QUBITS} qubits"
            )));
        }
        self.consumed.remove(&qa);
        self.consumed.remove(&qb);
        self.append(&[qa, qb], &bell_amplitudes(label));
        Ok(())
    }

    /// Prepares a fresh qubit in `|0⟩` (`bit = false`) or `|1⟩`.
    pub fn add_qubit(&mut self, q: QubitId, bit: bool) -> Result<()> {
        self.check_fresh(&[q])?;
        let local = if bit { [ZERO, ONE] } else { [ONE, ZERO] };
        self.append(&[q], &local);
        Ok(())
    }

    pub fn apply_op(&mut self, q: QubitId, gate: impl Into<Gate>) -> Result<()> {
        let pos = self.position(q)?;
        let m = gate.into().matrix();
        let bit = 1usize << self.shift(pos);
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | bit];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    /// Drops the bits at `positions` from a full index.
    fn reduced_index(&self, index: usize, positions: &[usize]) -> usize {
        let n = self.qubits.len();
        let mut out = 0;
        for pos in 0..n {
            if positions.contains(&pos) {
                continue;
            }
            out = (out << 1) | (index >> (n - 1 - pos)) & 1;
        }
        out
    }

    /// For each Bell label, the unnormalised state of the other qubits after
    /// projecting `(qa, qb)` onto that label.
    fn bell_projections(&self, pa: usize, pb: usize) -> [Vec<Complex64>; 4] {
        let rest_len = self.amplitudes.len() >> 2;
        let mut rest: [Vec<Complex64>; 4] = std::array::from_fn(|_| vec![ZERO; rest_len]);
        let (sa, sb) = (self.shift(pa), self.shift(pb));
        let bells = BellLabel::ALL.map(bell_amplitudes);
        for (i, &amp) in self.amplitudes.iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            let local = ((i >> sa) & 1) << 1 | (i >> sb) & 1;
            let r = self.reduced_index(i, &[pa, pb]);
            for (slot, bell) in rest.iter_mut().zip(&bells) {
                slot[r] += bell[local].conj() * amp;
            }
        }
        rest
    }

    fn remove_positions(&mut self, positions: &[usize], rest: Vec<Complex64>) {
        let removed: Vec<QubitId> = positions.iter().map(|&p| self.qubits[p]).collect();
        self.qubits.retain(|q| !removed.contains(q));
        self.consumed.extend(removed);
        self.amplitudes = rest;
    }

    fn sample_index(weights: &[f64], rng: &mut impl Rng) -> usize {
        let total: f64 = weights.iter().sum();
        let mut r = rng.gen::<f64>() * total;
        for (i, &w) in weights.iter().enumerate() {
            if r < w {
                return i;
            }
            r -= w;
        }
        // Rounding can leave r marginally above the last bucket.
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }

    /// Born probabilities of the four Bell outcomes on `(qa, qb)`, indexed as
    /// [`BellLabel::ALL`].
    pub fn bell_probabilities(&self, qa: QubitId, qb: QubitId) -> Result<[f64; 4]> {
        let (pa, pb) = self.distinct_positions(qa, qb)?;
        let rest = self.bell_projections(pa, pb);
        Ok(rest.map(|v| v.iter().map(|a| a.norm_sqr()).sum()))
    }

    fn collapse_bell(&mut self, qa: QubitId, qb: QubitId, rng: &mut impl Rng) -> Result<BellLabel> {
        let (pa, pb) = self.distinct_positions(qa, qb)?;
        let rest = self.bell_projections(pa, pb);
        let weights: Vec<f64> = rest
            .iter()
            .map(|v| v.iter().map(|a| a.norm_sqr()).sum())
            .collect();
        let k = Self::sample_index(&weights, rng);
        let scale = 1.0 / weights[k].sqrt();
        let collapsed = rest[k].iter().map(|a| a * scale).collect();
        self.remove_positions(&[pa, pb], collapsed);
        Ok(BellLabel::ALL[k])
    }

    /// Destructive Bell-basis measurement: samples an outcome with Born
    /// probabilities, collapses, and consumes both qubits.
    pub fn measure_bell(
        &mut self,
        qa: QubitId,
        qb: QubitId,
        rng: &mut impl Rng,
    ) -> Result<BellLabel> {
        self.collapse_bell(qa, qb, rng)
    }

    /// Non-demolition Bell measurement: as [`PureState::measure_bell`] but the
    /// pair stays in the register, prepared in the observed Bell state.
    pub fn project_bell(
        &mut self,
        qa: QubitId,
        qb: QubitId,
        rng: &mut impl Rng,
    ) -> Result<BellLabel> {
        let label = self.collapse_bell(qa, qb, rng)?;
        self.consumed.remove(&qa);
        self.consumed.remove(&qb);
        self.append(&[qa, qb], &bell_amplitudes(label));
        Ok(label)
    }

    /// Single-qubit measurement in `basis`. The qubit stays active, collapsed
    /// onto the observed basis state; `true` means `|1⟩` or `|−⟩`.
    pub fn measure_qubit(&mut self, q: QubitId, basis: Basis, rng: &mut impl Rng) -> Result<bool> {
        let pos = self.position(q)?;
        if basis == Basis::Diagonal {
            self.apply_op(q, Gate::ToDiagonal)?;
        }
        let bit = 1usize << self.shift(pos);
        let p1: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        let p0 = (1.0 - p1).max(0.0);
        let outcome = Self::sample_index(&[p0, p1], rng) == 1;
        let scale = 1.0 / if outcome { p1 } else { p0 }.sqrt();
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if (i & bit != 0) == outcome {
                *a *= scale;
            } else {
                *a = ZERO;
            }
        }
        if basis == Basis::Diagonal {
            self.apply_op(q, Gate::ToDiagonal)?;
        }
        Ok(outcome)
    }

    /// Consumes a qubit that is unentangled with the rest of the register,
    /// such as one that has just been measured.
    pub fn discard(&mut self, q: QubitId) -> Result<()> {
        let pos = self.position(q)?;
        let s = self.shift(pos);
        let half = self.amplitudes.len() / 2;
        let mut r0 = Vec::with_capacity(half);
        let mut r1 = Vec::with_capacity(half);
        for (i, &a) in self.amplitudes.iter().enumerate() {
            if (i >> s) & 1 == 0 {
                r0.push(a);
            } else {
                r1.push(a);
            }
        }
        let n0: f64 = r0.iter().map(|a| a.norm_sqr()).sum();
        let n1: f64 = r1.iter().map(|a| a.norm_sqr()).sum();
        let overlap: Complex64 = r0.iter().zip(&r1).map(|(a, b)| a.conj() * b).sum();
        if (overlap.norm_sqr() - n0 * n1).abs() > 1e-10 {
            return Err(Error::State(format!(
                "qubit {q} is entangled with the register and cannot be discarded"
            )));
        }
        let (rest, norm) = if n0 >= n1 { (r0, n0) } else { (r1, n1) };
        let scale = 1.0 / norm.sqrt();
        self.remove_positions(&[pos], rest.into_iter().map(|a| a * scale).collect());
        Ok(())
    }

    /// Bell label of `(qa, qb)` if that pair factors out of the register in a
    /// Bell state, `None` otherwise.
    pub fn pair_label(&self, qa: QubitId, qb: QubitId) -> Result<Option<BellLabel>> {
        let probs = self.bell_probabilities(qa, qb)?;
        Ok(probs
            .iter()
            .position(|&p| (p - 1.0).abs() < 1e-9)
            .map(BellLabel::from_index))
    }

    /// Coefficients of a four-qubit state in the Bell ⊗ Bell basis of the
    /// given pairing; entry `[i][j]` multiplies `|B_i⟩_{ab} ⊗ |B_j⟩_{cd}`.
    pub fn bell_coefficients(
        &self,
        pairing: ((QubitId, QubitId), (QubitId, QubitId)),
    ) -> Result<[[Complex64; 4]; 4]> {
        let ((qa, qb), (qc, qd)) = pairing;
        let wanted: BTreeSet<QubitId> = [qa, qb, qc, qd].into_iter().collect();
        let active: BTreeSet<QubitId> = self.qubits.iter().copied().collect();
        if wanted.len() != 4 || active != wanted {
            return Err(Error::Input(format!(
                "pairing must name exactly the {} active qubits",
                self.qubits.len()
            )));
        }
        let pos = [qa, qb, qc, qd].map(|q| self.position(q).expect("checked above"));
        let shifts = pos.map(|p| self.shift(p));
        let bells = BellLabel::ALL.map(bell_amplitudes);
        let mut out = [[ZERO; 4]; 4];
        for (idx, &amp) in self.amplitudes.iter().enumerate() {
            let bit = |k: usize| (idx >> shifts[k]) & 1;
            let ab = bit(0) << 1 | bit(1);
            let cd = bit(2) << 1 | bit(3);
            for (i, bi) in bells.iter().enumerate() {
                for (j, bj) in bells.iter().enumerate() {
                    out[i][j] += bi[ab].conj() * bj[cd].conj() * amp;
                }
            }
        }
        Ok(out)
    }

    /// Amplitudes re-expressed in the given qubit order.
    pub fn amplitudes_in_order(&self, order: &[QubitId]) -> Result<Vec<Complex64>> {
        let mine: BTreeSet<_> = self.qubits.iter().collect();
        let theirs: BTreeSet<_> = order.iter().collect();
        if mine != theirs || order.len() != self.qubits.len() {
            return Err(Error::Input("qubit sets differ".into()));
        }
        let n = order.len();
        // src_shift[k]: shift in self of the qubit at position k in `order`.
        let src_shift: Vec<usize> = order
            .iter()
            .map(|q| self.shift(self.qubits.iter().position(|x| x == q).unwrap()))
            .collect();
        let mut out = vec![ZERO; self.amplitudes.len()];
        for (dst, slot) in out.iter_mut().enumerate() {
            let mut src = 0;
            for (k, &s) in src_shift.iter().enumerate() {
                src |= ((dst >> (n - 1 - k)) & 1) << s;
            }
            *slot = self.amplitudes[src];
        }
        Ok(out)
    }

    /// `⟨other|self⟩` over the same set of active qubits.
    pub fn inner_product(&self, other: &PureState) -> Result<Complex64> {
        let theirs = other.amplitudes_in_order(&self.qubits)?;
        Ok(theirs
            .iter()
            .zip(&self.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// True iff some unit complex `c` gives `max |self − c·other| ≤ tol`.
    pub fn equal_up_to_global_phase(&self, other: &PureState, tol: f64) -> Result<bool> {
        let theirs = other.amplitudes_in_order(&self.qubits)?;
        let overlap: Complex64 = theirs
            .iter()
            .zip(&self.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        Ok(self
            .amplitudes
            .iter()
            .zip(&theirs)
            .all(|(a, b)| (a - phase * b).norm() <= tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use BellLabel as B;

    fn q(i: u32) -> QubitId {
        QubitId(i)
    }

    fn pair(label: BellLabel) -> PureState {
        let mut s = PureState::new_register();
        s.add_bell_pair(q(1), q(2), label).unwrap();
        s
    }

    fn close(a: &[Complex64], b: &[f64]) -> bool {
        a.len() == b.len()
            && a.iter()
                .zip(b)
                .all(|(x, &y)| (x - Complex64::new(y, 0.0)).norm() < 1e-12)
    }

    const H: f64 = FRAC_1_SQRT_2;

    #[test]
    fn empty_register() {
        let s = PureState::new_register();
        assert_eq!(s.num_qubits(), 0);
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bell_pair_amplitudes() {
        assert!(close(pair(B::PSI_MINUS).amplitudes(), &[0.0, H, -H, 0.0]));
        assert!(close(pair(B::PHI_PLUS).amplitudes(), &[H, 0.0, 0.0, H]));
        assert!(close(pair(B::PHI_MINUS).amplitudes(), &[H, 0.0, 0.0, -H]));
        assert!(close(pair(B::PSI_PLUS).amplitudes(), &[0.0, H, H, 0.0]));
    }

    #[test]
    fn successive_pairs_build_a_product() {
        let mut s = pair(B::PSI_MINUS);
        s.add_bell_pair(q(3), q(4), B::PHI_PLUS).unwrap();
        assert_eq!(s.num_qubits(), 4);
        // |Ψ⁻⟩ ⊗ |Φ⁺⟩: amplitude of |0100⟩ is (1/√2)(1/√2).
        assert!((s.amplitudes()[0b0100].re - 0.5).abs() < 1e-12);
        assert!((s.amplitudes()[0b1011].re + 0.5).abs() < 1e-12);
        for k in (5..=7).step_by(2) {
            s.add_bell_pair(q(k), q(k + 1), B::PSI_MINUS).unwrap();
        }
        assert_eq!(s.num_qubits(), 8);
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut s = pair(B::PSI_MINUS);
        assert!(matches!(
            s.add_bell_pair(q(2), q(3), B::PHI_PLUS),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            s.add_bell_pair(q(5), q(5), B::PHI_PLUS),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn register_cap() {
        let mut s = PureState::new_register();
        for k in 0..6 {
            s.add_bell_pair(q(2 * k + 1), q(2 * k + 2), B::PHI_PLUS)
                .unwrap();
        }
        assert!(s.add_bell_pair(q(13), q(14), B::PHI_PLUS).is_err());
    }

    #[test]
    fn u1_is_identity() {
        let mut s = pair(B::PSI_MINUS);
        let before = s.clone();
        s.apply_op(q(1), PauliOp::U1).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn paulis_on_psi_minus_by_matrix_arithmetic() {
        // u2 = diag(1,-1) on the first qubit of (0, h, -h, 0) flips the sign
        // of the |10⟩ term: (0, h, h, 0) = Ψ⁺.
        let mut s = pair(B::PSI_MINUS);
        s.apply_op(q(1), PauliOp::U2).unwrap();
        assert!(close(s.amplitudes(), &[0.0, H, H, 0.0]));

        // u4 maps |0⟩→−|1⟩, |1⟩→|0⟩: h|01⟩ − h|10⟩ → −h|11⟩ − h|00⟩ = −Φ⁺.
        let mut s = pair(B::PSI_MINUS);
        s.apply_op(q(1), PauliOp::U4).unwrap();
        assert!(close(s.amplitudes(), &[-H, 0.0, 0.0, -H]));
        assert!(s
            .equal_up_to_global_phase(&pair(B::PHI_PLUS), 1e-12)
            .unwrap());

        // u3 = X: h|11⟩ − h|00⟩ = −Φ⁻.
        let mut s = pair(B::PSI_MINUS);
        s.apply_op(q(1), PauliOp::U3).unwrap();
        assert!(close(s.amplitudes(), &[-H, 0.0, 0.0, H]));
    }

    #[test]
    fn apply_op_unknown_and_consumed() {
        let mut s = pair(B::PHI_PLUS);
        assert!(matches!(
            s.apply_op(q(9), PauliOp::U2),
            Err(Error::Input(_))
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        s.measure_bell(q(1), q(2), &mut rng).unwrap();
        assert!(matches!(
            s.apply_op(q(1), PauliOp::U2),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn measure_bell_on_definite_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut s = pair(B::PHI_PLUS);
            assert_eq!(s.measure_bell(q(1), q(2), &mut rng).unwrap(), B::PHI_PLUS);
            assert_eq!(s.num_qubits(), 0);
            assert!(s.is_consumed(q(1)) && s.is_consumed(q(2)));
        }
    }

    #[test]
    fn remeasure_consumed_is_state_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = pair(B::PSI_MINUS);
        s.measure_bell(q(1), q(2), &mut rng).unwrap();
        assert!(matches!(
            s.measure_bell(q(1), q(2), &mut rng),
            Err(Error::State(_))
        ));
        assert!(matches!(
            s.measure_qubit(q(1), Basis::Rectilinear, &mut rng),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn swap_probabilities_are_quarter() {
        let mut s = PureState::new_register();
        s.add_bell_pair(q(1), q(2), B::PHI_MINUS).unwrap();
        s.add_bell_pair(q(7), q(8), B::PSI_MINUS).unwrap();
        for p in s.bell_probabilities(q(1), q(8)).unwrap() {
            assert!((p - 0.25).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let outcome = s.clone().measure_bell(q(1), q(8), &mut rng).unwrap();
        let mut t = s.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        t.measure_bell(q(1), q(8), &mut rng).unwrap();
        let survivor = t.pair_label(q(2), q(7)).unwrap().unwrap();
        assert_eq!(
            survivor,
            crate::bell::swap_outcome(B::PHI_MINUS, B::PSI_MINUS, outcome)
        );
    }

    #[test]
    fn project_bell_keeps_pair() {
        let mut s = PureState::new_register();
        s.add_bell_pair(q(1), q(2), B::PSI_MINUS).unwrap();
        s.add_bell_pair(q(3), q(4), B::PSI_MINUS).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = s.project_bell(q(1), q(4), &mut rng).unwrap();
        assert_eq!(s.num_qubits(), 4);
        assert_eq!(s.pair_label(q(1), q(4)).unwrap(), Some(m));
        assert_eq!(
            s.pair_label(q(2), q(3)).unwrap(),
            Some(crate::bell::swap_outcome(B::PSI_MINUS, B::PSI_MINUS, m))
        );
    }

    #[test]
    fn measure_qubit_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let mut s = PureState::new_register();
            s.add_qubit(q(1), false).unwrap();
            assert!(!s.measure_qubit(q(1), Basis::Rectilinear, &mut rng).unwrap());
        }
        for basis in [Basis::Rectilinear, Basis::Diagonal] {
            for _ in 0..200 {
                let mut s = pair(B::PSI_MINUS);
                let a = s.measure_qubit(q(1), basis, &mut rng).unwrap();
                let b = s.measure_qubit(q(2), basis, &mut rng).unwrap();
                assert_ne!(a, b, "{basis:?}");
                assert!((s.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn discard_requires_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = pair(B::PSI_MINUS);
        assert!(matches!(s.discard(q(1)), Err(Error::State(_))));
        s.measure_qubit(q(1), Basis::Diagonal, &mut rng).unwrap();
        s.discard(q(1)).unwrap();
        s.discard(q(2)).unwrap();
        assert_eq!(s.num_qubits(), 0);
        s.reprepare_bell_pair(q(1), q(2), B::PHI_MINUS).unwrap();
        assert_eq!(s.pair_label(q(1), q(2)).unwrap(), Some(B::PHI_MINUS));
    }

    #[test]
    fn bell_coefficients_of_product() {
        for l1 in B::ALL {
            for l2 in B::ALL {
                let mut s = PureState::new_register();
                s.add_bell_pair(q(1), q(2), l1).unwrap();
                s.add_bell_pair(q(3), q(4), l2).unwrap();
                let c = s.bell_coefficients(((q(1), q(2)), (q(3), q(4)))).unwrap();
                for (i, row) in c.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        let want = if i == l1.index() && j == l2.index() {
                            1.0
                        } else {
                            0.0
                        };
                        assert!((v.norm() - want).abs() < 1e-12);
                    }
                }
            }
        }
        let s = pair(B::PHI_PLUS);
        assert!(matches!(
            s.bell_coefficients(((q(1), q(2)), (q(3), q(4)))),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn global_phase_equality() {
        let s = pair(B::PSI_MINUS);
        assert!(s.equal_up_to_global_phase(&s, 1e-12).unwrap());
        let mut neg = s.clone();
        neg.apply_op(q(1), PauliOp::U3).unwrap();
        neg.apply_op(q(2), PauliOp::U3).unwrap(); // X⊗X Ψ⁻ = −Ψ⁻
        assert!(close(neg.amplitudes(), &[0.0, -H, H, 0.0]));
        assert!(s.equal_up_to_global_phase(&neg, 1e-12).unwrap());
        assert!(!s
            .equal_up_to_global_phase(&pair(B::PSI_PLUS), 1e-12)
            .unwrap());
        let mut other = PureState::new_register();
        other.add_bell_pair(q(1), q(3), B::PSI_MINUS).unwrap();
        assert!(matches!(
            s.equal_up_to_global_phase(&other, 1e-12),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn reordering_preserves_state() {
        let mut s = pair(B::PSI_MINUS);
        s.add_bell_pair(q(3), q(4), B::PHI_MINUS).unwrap();
        let reordered = s.amplitudes_in_order(&[q(4), q(2), q(3), q(1)]).unwrap();
        let t = PureState::from_amplitudes(vec![q(4), q(2), q(3), q(1)], reordered).unwrap();
        assert!((t.inner_product(&s).unwrap() - ONE).norm() < 1e-12);
    }
}
