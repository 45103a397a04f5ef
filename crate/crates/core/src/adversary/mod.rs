//! Adversary strategies plugged into the protocol engines.
//!
//! An [`Adversary`] sees a run only through its hooks, and the engine only
//! ever hands it data belonging to the colluding agents: their holdings,
//! their own outcomes, and qubits in flight on a tapped channel. Every hook
//! request is validated against qubit ownership; a violation aborts the run
//! with [`Error::SimulationFault`].

mod inference;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::bell::{Basis, BellLabel, PauliOp, SecretBits};
use crate::error::{Error, Result};
use crate::protocol::{Channel, PartyId, QubitPair, Transcript, TrialRng};
use crate::qstate::{PureState, QubitId};

pub use inference::{CoalitionView, Target};

/// Qubits held by each colluding agent at a decision point.
pub type CoalitionHoldings = BTreeMap<usize, Vec<QubitId>>;

/// A side-channel transfer of one qubit between colluding agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Handoff {
    pub from: usize,
    pub to: usize,
    pub qubit: QubitId,
}

/// Access to the qubits in flight on one channel.
pub struct ChannelTap<'a> {
    channel: &'a Channel,
    state: &'a mut PureState,
    transcript: &'a mut Transcript,
}

impl<'a> ChannelTap<'a> {
    pub(crate) fn new(
        channel: &'a Channel,
        state: &'a mut PureState,
        transcript: &'a mut Transcript,
    ) -> Self {
        ChannelTap {
            channel,
            state,
            transcript,
        }
    }

    pub fn channel_id(&self) -> usize {
        self.channel.id
    }

    pub fn in_flight(&self) -> &[QubitId] {
        &self.channel.in_flight
    }

    /// Measures an in-flight qubit; it continues to the receiver in the
    /// observed basis state.
    pub fn measure(&mut self, q: QubitId, basis: Basis, rng: &mut TrialRng) -> Result<bool> {
        if !self.channel.in_flight.contains(&q) {
            return Err(Error::SimulationFault(format!(
                "qubit {q} is not in flight on channel {}",
                self.channel.id
            )));
        }
        let bit = self.state.measure_qubit(q, basis, rng)?;
        self.transcript
            .record_single(PartyId::Eavesdropper, q, basis, bit);
        Ok(bit)
    }
}

/// Hooks an adversary may use during a run. Defaults behave honestly.
pub trait Adversary {
    /// Agent indices under the adversary's control.
    fn colluders(&self) -> &BTreeSet<usize>;

    /// Called for every channel transmission while qubits are in flight.
    fn on_channel(&mut self, _tap: &mut ChannelTap<'_>, _rng: &mut TrialRng) -> Result<()> {
        Ok(())
    }

    /// Called once message mode is committed at a step, before the agents
    /// measure; colluders may exchange the qubits they hold.
    fn on_message_round(&mut self, _holdings: &CoalitionHoldings) -> Vec<Handoff> {
        Vec::new()
    }

    /// Which pair a colluding agent Bell-measures instead of `nominal`. If
    /// the agent does not hold the pair yet, the measurement is deferred.
    fn on_measurement(&mut self, _agent: usize, nominal: QubitPair) -> QubitPair {
        nominal
    }

    /// A colluding agent's private outcome.
    fn on_outcome(&mut self, _agent: usize, _pair: QubitPair, _label: BellLabel) {}

    /// Label a colluding agent announces for its nominal pair.
    fn on_announcement(
        &mut self,
        _agent: usize,
        _nominal: QubitPair,
        own: BellLabel,
        _rng: &mut TrialRng,
    ) -> BellLabel {
        own
    }

    /// The coalition's guess at the secret after the run.
    fn guess(&mut self, _view: &CoalitionView) -> Option<SecretBits> {
        None
    }
}

/// Immutable description of an adversary; each run gets its own instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryStrategy {
    Honest,
    Collusion { i: usize, j: usize, fakes: FakeMode },
    InterceptResend { channel: usize },
}

impl AdversaryStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            AdversaryStrategy::Honest => "none",
            AdversaryStrategy::Collusion { .. } => "collusion",
            AdversaryStrategy::InterceptResend { .. } => "intercept-resend",
        }
    }

    /// Checks the strategy against a run with `n_agents` agents.
    pub fn validate(
        &self,
        n_agents: usize,
        channels: std::ops::RangeInclusive<usize>,
    ) -> Result<()> {
        match *self {
            AdversaryStrategy::Honest => Ok(()),
            AdversaryStrategy::Collusion { i, j, .. } => {
                if i == 0 || i >= j || j > n_agents {
                    Err(Error::Input(format!(
                        "colluders ({i},{j}) must satisfy 1 <= i < j <= {n_agents}"
                    )))
                } else {
                    Ok(())
                }
            }
            AdversaryStrategy::InterceptResend { channel } => {
                if channels.contains(&channel) {
                    Ok(())
                } else {
                    Err(Error::Input(format!(
                        "channel {channel} is outside {channels:?}"
                    )))
                }
            }
        }
    }

    pub fn instantiate(&self) -> Box<dyn Adversary + Send> {
        match *self {
            AdversaryStrategy::Honest => Box::new(Honest::default()),
            AdversaryStrategy::Collusion { i, j, fakes } => {
                Box::new(CollusionSwap::new(i, j, fakes))
            }
            AdversaryStrategy::InterceptResend { channel } => {
                Box::new(InterceptResend::new(channel))
            }
        }
    }
}

/// No adversary at all.
pub fn honest() -> AdversaryStrategy {
    AdversaryStrategy::Honest
}

/// Agents `i < j` exchange their received qubits and measure across each
/// other's pairs, announcing canonical fake labels.
pub fn collusion_swap(i: usize, j: usize) -> Result<AdversaryStrategy> {
    if i == 0 || i >= j {
        return Err(Error::Input(format!(
            "colluders ({i},{j}) must satisfy 1 <= i < j"
        )));
    }
    Ok(AdversaryStrategy::Collusion {
        i,
        j,
        fakes: FakeMode::Canonical,
    })
}

/// Measure-and-resend eavesdropping on channel `channel`.
pub fn intercept_resend(channel: usize) -> AdversaryStrategy {
    AdversaryStrategy::InterceptResend { channel }
}

#[derive(Debug, Default)]
pub struct Honest {
    colluders: BTreeSet<usize>,
}

impl Adversary for Honest {
    fn colluders(&self) -> &BTreeSet<usize> {
        &self.colluders
    }
}

#[derive(Debug)]
pub struct InterceptResend {
    channel: usize,
    colluders: BTreeSet<usize>,
}

impl InterceptResend {
    pub fn new(channel: usize) -> Self {
        InterceptResend {
            channel,
            colluders: BTreeSet::new(),
        }
    }
}

impl Adversary for InterceptResend {
    fn colluders(&self) -> &BTreeSet<usize> {
        &self.colluders
    }

    fn on_channel(&mut self, tap: &mut ChannelTap<'_>, rng: &mut TrialRng) -> Result<()> {
        if tap.channel_id() != self.channel {
            return Ok(());
        }
        for q in tap.in_flight().to_vec() {
            let basis = if rng.gen_bool(0.5) {
                Basis::Diagonal
            } else {
                Basis::Rectilinear
            };
            tap.measure(q, basis, rng)?;
        }
        Ok(())
    }
}

/// How colluders choose their fake announcements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FakeMode {
    /// Announce the true outcomes, each under the other colluder's pair.
    #[default]
    Canonical,
    /// Shift both by the same uniformly random Pauli.
    Randomized,
}

/// Labels the colluders announce for their nominal pairs. Their XOR equals
/// the XOR of the two true outcomes, which is all the honest-chain check can
/// see; the choice never depends on the dealer's outcome.
pub fn fake_announcements(
    l_i_measured: BellLabel,
    l_j_measured: BellLabel,
    mode: FakeMode,
    rng: &mut impl Rng,
) -> (BellLabel, BellLabel) {
    match mode {
        FakeMode::Canonical => (l_i_measured, l_j_measured),
        FakeMode::Randomized => {
            let u = PauliOp::ALL[rng.gen_range(0..4)].op_label();
            (l_i_measured ^ u, l_j_measured ^ u)
        }
    }
}

/// What the colluders learn during one message-mode run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollusionState {
    pub rerouted: Vec<QubitId>,
    pub outcomes: BTreeMap<usize, (QubitPair, BellLabel)>,
    pub fakes: Option<(BellLabel, BellLabel)>,
    /// Agent `j`'s reading of the dealer's encoded pair `(1,2)`.
    pub deduced_encoded: Option<BellLabel>,
    /// Agent `i`'s reading of the XOR of the bypassed agents' outcomes.
    pub deduced_intermediate: Option<BellLabel>,
}

/// The rewiring attack: agent `i` hands its received qubit `2i` to agent `j`,
/// agent `j` hands `2j` to agent `i`, then `i` measures `(2i+1, 2j)` and `j`
/// measures `(2i, 2j+1)`. In the ring protocol this closes the dealer's pair
/// and agents `j..n` into a chain that skips agents `i+1..j-1` entirely.
#[derive(Debug)]
pub struct CollusionSwap {
    i: usize,
    j: usize,
    fakes: FakeMode,
    colluders: BTreeSet<usize>,
    handed_off: bool,
    state: CollusionState,
}

impl CollusionSwap {
    pub fn new(i: usize, j: usize, fakes: FakeMode) -> Self {
        CollusionSwap {
            i,
            j,
            fakes,
            colluders: [i, j].into_iter().collect(),
            handed_off: false,
            state: CollusionState::default(),
        }
    }

    pub fn state(&self) -> &CollusionState {
        &self.state
    }

    /// Agent `j`'s deduction: the dealer's pair `(1,2)` and the last pair were
    /// swapped by the dealer's `(1, 2n+2)` measurement and then measured
    /// directly by agent `j`, so the encoded label is their XOR.
    pub fn deduce_encoded(
        last_pair_initial: BellLabel,
        dealer: BellLabel,
        agent_j: BellLabel,
    ) -> BellLabel {
        last_pair_initial ^ dealer ^ agent_j
    }

    /// Agent `i`'s deduction: its measurement closes the pairs of slots
    /// `i..j-1` into a ring with the bypassed agents.
    pub fn deduce_intermediate(bypassed_initials: &[BellLabel], agent_i: BellLabel) -> BellLabel {
        BellLabel::xor_all(bypassed_initials.iter().copied()) ^ agent_i
    }
}

impl Adversary for CollusionSwap {
    fn colluders(&self) -> &BTreeSet<usize> {
        &self.colluders
    }

    fn on_message_round(&mut self, holdings: &CoalitionHoldings) -> Vec<Handoff> {
        let qi = crate::protocol::qubit_of(2 * self.i);
        let qj = crate::protocol::qubit_of(2 * self.j);
        let holds = |agent: usize, q: QubitId| holdings.get(&agent).is_some_and(|v| v.contains(&q));
        if self.handed_off || !holds(self.i, qi) || !holds(self.j, qj) {
            return Vec::new();
        }
        self.handed_off = true;
        self.state.rerouted = vec![qi, qj];
        vec![
            Handoff {
                from: self.i,
                to: self.j,
                qubit: qi,
            },
            Handoff {
                from: self.j,
                to: self.i,
                qubit: qj,
            },
        ]
    }

    fn on_measurement(&mut self, agent: usize, nominal: QubitPair) -> QubitPair {
        let q = crate::protocol::qubit_of;
        if agent == self.i {
            (q(2 * self.i + 1), q(2 * self.j))
        } else if agent == self.j {
            (q(2 * self.i), q(2 * self.j + 1))
        } else {
            nominal
        }
    }

    fn on_outcome(&mut self, agent: usize, pair: QubitPair, label: BellLabel) {
        self.state.outcomes.insert(agent, (pair, label));
    }

    fn on_announcement(
        &mut self,
        agent: usize,
        _nominal: QubitPair,
        own: BellLabel,
        rng: &mut TrialRng,
    ) -> BellLabel {
        if self.state.fakes.is_none() {
            let (Some(&(_, li)), Some(&(_, lj))) = (
                self.state.outcomes.get(&self.i),
                self.state.outcomes.get(&self.j),
            ) else {
                return own;
            };
            self.state.fakes = Some(fake_announcements(li, lj, self.fakes, rng));
        }
        let (fi, fj) = self.state.fakes.expect("set above");
        if agent == self.i {
            fi
        } else if agent == self.j {
            fj
        } else {
            own
        }
    }

    fn guess(&mut self, view: &CoalitionView) -> Option<SecretBits> {
        let initial = view.initial_labels();
        let n = initial.len().checked_sub(1)?;
        let dealer = view.public_label(PartyId::Dealer)?;
        let (_, lj) = *self.state.outcomes.get(&self.j)?;
        let (_, li) = *self.state.outcomes.get(&self.i)?;
        self.state.deduced_encoded = Some(Self::deduce_encoded(initial[n], dealer, lj));
        self.state.deduced_intermediate =
            Some(Self::deduce_intermediate(&initial[self.i..self.j], li));
        // The exact solver covers chains that also pass through honest agents
        // outside the bypassed range; fall back to agent j's direct rule.
        let encoded_shift = view
            .solve(Target::Encoding)
            .unwrap_or_else(|| self.state.deduced_encoded.unwrap() ^ initial[0]);
        Some(PauliOp::from_op_label(encoded_shift).secret_bits())
    }
}

/// Result of asking whether a coalition can reconstruct the secret.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recovery {
    Secret(SecretBits),
    Insufficient,
}

/// Whether the coalition's own records plus the dealer's public outcome pin
/// down the dealer's secret.
pub fn coalition_recovers(
    transcript: &Transcript,
    coalition: &BTreeSet<usize>,
    initial_labels: &[BellLabel],
) -> Recovery {
    let view =
        CoalitionView::from_transcript(transcript, coalition).with_initial_labels(initial_labels);
    match view.solve(Target::Encoding) {
        Some(shift) => Recovery::Secret(PauliOp::from_op_label(shift).secret_bits()),
        None => Recovery::Insufficient,
    }
}

/// The label `party` measured at its last Bell measurement, if the coalition
/// can work it out without `party`'s help.
pub fn coalition_infers_outcome(
    transcript: &Transcript,
    coalition: &BTreeSet<usize>,
    party: PartyId,
) -> Option<BellLabel> {
    let view = CoalitionView::from_transcript(transcript, coalition);
    let seq = view.last_measurement_of(party)?;
    view.solve(Target::Outcome(seq))
}
