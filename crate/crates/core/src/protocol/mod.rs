//! Executable protocol runs over the statevector oracle.
//!
//! Qubit numbering follows the usual four-party pictures: party slot `k`
//! (dealer = 0, agents `1..=n`) owns the pair `(2k+1, 2k+2)`, so with three
//! agents the pairs are `(1,2) (3,4) (5,6) (7,8)`.
//!
//! * [`run_zhang_man`]: every party prepares its own `Ψ⁻` and passes one
//!   qubit around the ring; the dealer encodes on qubit 1 and everyone
//!   Bell-measures the two qubits they end up with.
//! * [`run_improved`]: the dealer prepares every pair and hands agent `k` the
//!   qubits `(2k, 2k+1)` one step at a time, Bell-measuring `(1, 2k+2)` after
//!   each hand-over so the secret is re-split at every step.
//!
//! Both protocols end with an announcement phase: agents publish their Bell
//! outcomes, the dealer checks them against her secret, and only then
//! publishes her own `(1, 2n+2)` outcome.

mod detection;
mod engine;
mod network;
mod transcript;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bell::{BellLabel, SecretBits};
use crate::error::{Error, Result};
use crate::qstate::{QubitId, MAX_QUBITS};

pub use detection::{detection_subround, SubroundOutcome};
pub use engine::{
    channel_range, reconstruct_from_transcript, run_improved, run_improved_with, run_trial,
    run_zhang_man, run_zhang_man_with,
};
pub use network::{Channel, Holder, Network};
pub use transcript::{
    format_announcement, parse_announcements, Announcement, BellRecord, CheckKind, DetectionRecord,
    Event, PrivateRecord, Transcript,
};

pub type QubitPair = (QubitId, QubitId);

/// Random stream owned by one trial.
pub type TrialRng = ChaCha8Rng;

/// Per-trial stream: the master seed selects the key, the trial index the
/// ChaCha stream, so trial `i` sees the same numbers under any scheduling.
pub fn trial_rng(master_seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartyId {
    Dealer,
    Agent(usize),
    /// Outside party tapping a channel.
    Eavesdropper,
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartyId::Dealer => f.write_str("dealer"),
            PartyId::Agent(k) => write!(f, "agent{k}"),
            PartyId::Eavesdropper => f.write_str("eavesdropper"),
        }
    }
}

impl FromStr for PartyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dealer" => Ok(PartyId::Dealer),
            "eavesdropper" => Ok(PartyId::Eavesdropper),
            _ => s
                .strip_prefix("agent")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k >= 1)
                .map(PartyId::Agent)
                .ok_or_else(|| Error::Input(format!("unknown party {s:?}"))),
        }
    }
}

/// The pair prepared for party slot `k`.
pub fn pair_of_slot(k: usize) -> QubitPair {
    (qubit_of(2 * k + 1), qubit_of(2 * k + 2))
}

pub fn qubit_of(n: usize) -> QubitId {
    QubitId(n as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    ZhangMan,
    Improved,
}

impl ProtocolKind {
    pub const fn name(self) -> &'static str {
        match self {
            ProtocolKind::ZhangMan => "zhang-man",
            ProtocolKind::Improved => "improved",
        }
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zhang-man" | "zhang_man" => Ok(ProtocolKind::ZhangMan),
            "improved" => Ok(ProtocolKind::Improved),
            other => Err(Error::Input(format!("unknown protocol {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Detect,
    Message,
}

impl Mode {
    pub const fn name(self) -> &'static str {
        match self {
            Mode::Detect => "detect",
            Mode::Message => "message",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub protocol: ProtocolKind,
    pub n_agents: usize,
    /// Probability of choosing the detecting mode at each decision point.
    pub p_detect: f64,
    pub trials: u64,
    pub master_seed: u64,
    /// Improved protocol only: detection rounds allowed per step before the
    /// trial ends without delivering a message.
    pub max_step_attempts: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            protocol: ProtocolKind::ZhangMan,
            n_agents: 3,
            p_detect: 0.25,
            trials: 10_000,
            master_seed: 0,
            max_step_attempts: 64,
        }
    }
}

impl ProtocolConfig {
    pub fn new(protocol: ProtocolKind, n_agents: usize) -> Self {
        ProtocolConfig {
            protocol,
            n_agents,
            ..Default::default()
        }
    }

    pub fn with_p_detect(mut self, p: f64) -> Self {
        self.p_detect = p;
        self
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    /// Both protocols use `2(n+1)` qubits.
    pub fn qubit_count(&self) -> usize {
        2 * (self.n_agents + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 2 {
            return Err(Error::Input(format!(
                "need at least 2 agents, got {}",
                self.n_agents
            )));
        }
        if self.qubit_count() > MAX_QUBITS {
            return Err(Error::Input(format!(
                "{} agents need {} qubits; the simulator holds at most {MAX_QUBITS}",
                self.n_agents,
                self.qubit_count()
            )));
        }
        if !(0.0..=1.0).contains(&self.p_detect) {
            return Err(Error::Input(format!(
                "p_detect {} is not a probability",
                self.p_detect
            )));
        }
        if self.max_step_attempts == 0 {
            return Err(Error::Input("max_step_attempts must be positive".into()));
        }
        Ok(())
    }

    /// Every pair starts as `Ψ⁻`.
    pub fn initial_labels(&self) -> Vec<BellLabel> {
        vec![BellLabel::PSI_MINUS; self.n_agents + 1]
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone)]
pub struct TrialReport {
    pub protocol: ProtocolKind,
    pub n_agents: usize,
    pub mode: Mode,
    pub secret: Option<SecretBits>,
    /// What all agents together reconstruct; present iff the message mode
    /// completed.
    pub authorized_reconstruction: Option<SecretBits>,
    pub adversary_guess: Option<SecretBits>,
    pub detected: bool,
    pub transcript: Transcript,
}

impl TrialReport {
    pub fn recovered(&self) -> bool {
        self.secret.is_some() && self.secret == self.authorized_reconstruction
    }

    pub fn attack_succeeded(&self) -> bool {
        self.secret.is_some() && self.secret == self.adversary_guess
    }

    /// `(failed, total)` correlation sub-rounds on pairs containing `qubit`.
    pub fn subrounds_touching(&self, qubit: QubitId) -> (usize, usize) {
        self.transcript
            .detections()
            .iter()
            .filter_map(|d| match d.kind {
                CheckKind::Subround { pair, .. } if pair.0 == qubit || pair.1 == qubit => {
                    Some(d.passed)
                }
                _ => None,
            })
            .fold((0, 0), |(f, t), passed| (f + usize::from(!passed), t + 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn config_validation() {
        assert!(ProtocolConfig::default().validate().is_ok());
        assert!(ProtocolConfig::new(ProtocolKind::ZhangMan, 1)
            .validate()
            .is_err());
        assert!(ProtocolConfig::new(ProtocolKind::Improved, 5)
            .validate()
            .is_ok());
        assert!(ProtocolConfig::new(ProtocolKind::Improved, 6)
            .validate()
            .is_err());
        assert!(ProtocolConfig::default()
            .with_p_detect(1.5)
            .validate()
            .is_err());
        assert_eq!(
            ProtocolConfig::new(ProtocolKind::Improved, 3).qubit_count(),
            8
        );
    }

    #[test]
    fn party_names() {
        for p in [PartyId::Dealer, PartyId::Agent(4), PartyId::Eavesdropper] {
            assert_eq!(p.to_string().parse::<PartyId>().unwrap(), p);
        }
        assert!("agent0".parse::<PartyId>().is_err());
        assert!("alice".parse::<PartyId>().is_err());
    }

    #[test]
    fn trial_streams_are_stable_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| trial_rng(7, 3).next_u64()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        assert_ne!(trial_rng(7, 3).next_u64(), trial_rng(7, 4).next_u64());
        assert_ne!(trial_rng(7, 3).next_u64(), trial_rng(8, 3).next_u64());
    }
}
