use std::collections::BTreeMap;

use rand::Rng;

use crate::adversary::{
    Adversary, AdversaryStrategy, ChannelTap, CoalitionHoldings, CoalitionView,
};
use crate::bell::{ring_reconstruct, BellLabel, PauliOp, SecretBits};
use crate::error::{Error, Result};
use crate::qstate::PureState;

use super::{
    detection_subround, pair_of_slot, qubit_of, trial_rng, Announcement, CheckKind,
    DetectionRecord, Event, Mode, Network, PartyId, ProtocolConfig, ProtocolKind, QubitPair,
    Transcript, TrialReport, TrialRng,
};

fn slot_party(k: usize) -> PartyId {
    if k == 0 {
        PartyId::Dealer
    } else {
        PartyId::Agent(k)
    }
}

/// The pair agent `k` measures when following the protocol.
fn nominal_pair(k: usize) -> QubitPair {
    (qubit_of(2 * k), qubit_of(2 * k + 1))
}

/// The dealer's final pair `(1, 2n+2)`.
fn dealer_pair(n: usize) -> QubitPair {
    (qubit_of(1), qubit_of(2 * n + 2))
}

struct Run<'a> {
    config: &'a ProtocolConfig,
    adversary: &'a mut dyn Adversary,
    rng: &'a mut TrialRng,
    state: PureState,
    net: Network,
    transcript: Transcript,
    initial: Vec<BellLabel>,
    pending: Vec<(usize, QubitPair)>,
    outcomes: BTreeMap<usize, BellLabel>,
    secret: Option<SecretBits>,
    dealer_outcome: Option<BellLabel>,
}

impl<'a> Run<'a> {
    fn new(
        config: &'a ProtocolConfig,
        adversary: &'a mut dyn Adversary,
        rng: &'a mut TrialRng,
    ) -> Self {
        let initial = config.initial_labels();
        Run {
            config,
            adversary,
            rng,
            state: PureState::new_register(),
            net: Network::new(),
            transcript: Transcript::new(initial.clone()),
            initial,
            pending: Vec::new(),
            outcomes: BTreeMap::new(),
            secret: None,
            dealer_outcome: None,
        }
    }

    fn n(&self) -> usize {
        self.config.n_agents
    }

    fn is_colluder(&self, k: usize) -> bool {
        self.adversary.colluders().contains(&k)
    }

    fn prepare(&mut self, party: PartyId, slot: usize) -> Result<()> {
        let pair = pair_of_slot(slot);
        self.state
            .add_bell_pair(pair.0, pair.1, self.initial[slot])?;
        self.net.assign(pair.0, party);
        self.net.assign(pair.1, party);
        self.transcript
            .push_event(Event::Prepare { party, pair, slot });
        Ok(())
    }

    fn reprepare(&mut self, pair: QubitPair, label: BellLabel, slot: Option<usize>) -> Result<()> {
        self.state.reprepare_bell_pair(pair.0, pair.1, label)?;
        self.net.assign(pair.0, PartyId::Dealer);
        self.net.assign(pair.1, PartyId::Dealer);
        self.transcript.push_event(Event::Reprepare {
            party: PartyId::Dealer,
            pair,
            slot,
        });
        Ok(())
    }

    fn transmit(
        &mut self,
        id: usize,
        from: PartyId,
        to: PartyId,
        qubits: &[crate::qstate::QubitId],
    ) -> Result<()> {
        let channel = self.net.send(id, from, to, qubits)?;
        for &qubit in qubits {
            self.transcript.push_event(Event::Send { from, to, qubit });
            self.transcript.record_mut(from).sent.push(qubit);
        }
        {
            let mut tap = ChannelTap::new(&channel, &mut self.state, &mut self.transcript);
            self.adversary.on_channel(&mut tap, self.rng)?;
        }
        self.net.deliver(channel);
        for &qubit in qubits {
            self.transcript.record_mut(to).received.push(qubit);
        }
        Ok(())
    }

    fn choose_mode(&mut self, step: usize) -> Mode {
        let mode = if self.rng.gen_bool(self.config.p_detect) {
            Mode::Detect
        } else {
            Mode::Message
        };
        self.transcript.record_mode(step, mode);
        mode
    }

    fn bell(&mut self, party: PartyId, pair: QubitPair, destructive: bool) -> Result<BellLabel> {
        if !self.net.holds(party, pair.0) || !self.net.holds(party, pair.1) {
            return Err(Error::SimulationFault(format!(
                "{party} cannot measure ({},{}) without holding both qubits",
                pair.0, pair.1
            )));
        }
        let label = if destructive {
            self.state.measure_bell(pair.0, pair.1, self.rng)?
        } else {
            self.state.project_bell(pair.0, pair.1, self.rng)?
        };
        self.transcript.record_bell(party, pair, label, destructive);
        Ok(label)
    }

    /// One correlation check on `pair`, whose qubits sit with `holders`.
    fn subround(
        &mut self,
        step: usize,
        pair: QubitPair,
        holders: (PartyId, PartyId),
        expected: BellLabel,
    ) -> Result<bool> {
        let out = detection_subround(&mut self.state, pair.0, pair.1, expected, self.rng)?;
        self.transcript
            .record_single(holders.0, pair.0, out.basis, out.bits.0);
        self.transcript
            .record_single(holders.1, pair.1, out.basis, out.bits.1);
        self.transcript.push_detection(DetectionRecord {
            step,
            kind: CheckKind::Subround {
                pair,
                basis: out.basis,
            },
            passed: out.passed,
        });
        Ok(out.passed)
    }

    fn encode_secret(&mut self) -> Result<()> {
        let secret = SecretBits::ALL[self.rng.gen_range(0..4)];
        let q1 = qubit_of(1);
        self.state.apply_op(q1, PauliOp::from_secret(secret))?;
        self.transcript.push_event(Event::Encode {
            party: PartyId::Dealer,
            qubit: q1,
        });
        self.transcript.record_mut(PartyId::Dealer).secret = Some(secret);
        self.secret = Some(secret);
        Ok(())
    }

    fn colluder_holdings(&self) -> CoalitionHoldings {
        self.adversary
            .colluders()
            .iter()
            .map(|&k| (k, self.net.held_by(PartyId::Agent(k))))
            .collect()
    }

    fn message_round(&mut self) -> Result<()> {
        if self.adversary.colluders().is_empty() {
            return Ok(());
        }
        let holdings = self.colluder_holdings();
        for h in self.adversary.on_message_round(&holdings) {
            if !self.is_colluder(h.from) || !self.is_colluder(h.to) {
                return Err(Error::SimulationFault(format!(
                    "hand-over of qubit {} from agent{} to agent{} involves an honest agent",
                    h.qubit, h.from, h.to
                )));
            }
            let (from, to) = (PartyId::Agent(h.from), PartyId::Agent(h.to));
            self.net.handoff(from, to, h.qubit)?;
            self.transcript.push_event(Event::Handoff {
                from,
                to,
                qubit: h.qubit,
            });
            self.transcript.record_mut(from).sent.push(h.qubit);
            self.transcript.record_mut(to).received.push(h.qubit);
        }
        Ok(())
    }

    fn agent_measure(&mut self, k: usize) -> Result<()> {
        let nominal = nominal_pair(k);
        if !self.is_colluder(k) {
            let label = self.bell(PartyId::Agent(k), nominal, true)?;
            self.outcomes.insert(k, label);
            return Ok(());
        }
        let pair = self.adversary.on_measurement(k, nominal);
        self.pending.push((k, pair));
        self.flush_pending()
    }

    /// Carries out deferred colluder measurements whose qubits are now held.
    fn flush_pending(&mut self) -> Result<()> {
        let pending = std::mem::take(&mut self.pending);
        for (k, pair) in pending {
            let party = PartyId::Agent(k);
            if self.net.holds(party, pair.0) && self.net.holds(party, pair.1) {
                let label = self.bell(party, pair, true)?;
                self.outcomes.insert(k, label);
                self.adversary.on_outcome(k, pair, label);
            } else {
                self.pending.push((k, pair));
            }
        }
        Ok(())
    }

    fn announce_all(&mut self) -> Result<()> {
        if let Some(&(k, pair)) = self.pending.first() {
            return Err(Error::SimulationFault(format!(
                "agent{k} never came to hold ({},{})",
                pair.0, pair.1
            )));
        }
        let n = self.n();
        let mut announced = Vec::with_capacity(n + 1);
        for k in 1..=n {
            let own = *self
                .outcomes
                .get(&k)
                .ok_or_else(|| Error::SimulationFault(format!("agent{k} has no outcome")))?;
            let nominal = nominal_pair(k);
            let label = if self.is_colluder(k) {
                self.adversary.on_announcement(k, nominal, own, self.rng)
            } else {
                own
            };
            announced.push(label);
            self.transcript.announce(Announcement {
                party: PartyId::Agent(k),
                pair: nominal,
                label,
            });
        }
        // The dealer checks the agents' chain against her secret before she
        // reveals her own outcome.
        let dealer = self
            .dealer_outcome
            .expect("message mode measured the dealer pair");
        announced.push(dealer);
        let consistent = ring_reconstruct(&self.initial, &announced)?.secret_bits()
            == self.secret.expect("encoded");
        self.transcript.push_detection(DetectionRecord {
            step: n + 1,
            kind: CheckKind::Announcements,
            passed: consistent,
        });
        self.transcript.announce(Announcement {
            party: PartyId::Dealer,
            pair: dealer_pair(n),
            label: dealer,
        });
        Ok(())
    }

    fn finish(self, mode: Mode) -> Result<TrialReport> {
        let detected = self.transcript.is_detected();
        let (authorized_reconstruction, adversary_guess) = if mode == Mode::Message {
            let recon = reconstruct_from_transcript(&self.transcript, &self.initial)?;
            let colluders = self.adversary.colluders().clone();
            let guess = if colluders.is_empty() {
                None
            } else {
                let view = CoalitionView::from_transcript(&self.transcript, &colluders);
                self.adversary.guess(&view)
            };
            (Some(recon), guess)
        } else {
            (None, None)
        };
        Ok(TrialReport {
            protocol: self.config.protocol,
            n_agents: self.config.n_agents,
            mode,
            secret: self.secret.filter(|_| mode == Mode::Message),
            authorized_reconstruction,
            adversary_guess,
            detected,
            transcript: self.transcript,
        })
    }
}

fn check_protocol(config: &ProtocolConfig, want: ProtocolKind) -> Result<()> {
    config.validate()?;
    if config.protocol != want {
        return Err(Error::Input(format!(
            "configuration is for {}, not {}",
            config.protocol.name(),
            want.name()
        )));
    }
    Ok(())
}

/// Channels an intercept-resend adversary may target.
pub fn channel_range(config: &ProtocolConfig) -> std::ops::RangeInclusive<usize> {
    match config.protocol {
        // Channel k carries party k's qubit 2k+2 to party k+1.
        ProtocolKind::ZhangMan => 0..=config.n_agents,
        // Channel k carries qubits (2k, 2k+1) from the dealer to agent k.
        ProtocolKind::Improved => 1..=config.n_agents,
    }
}

/// One run of the ring protocol with a custom adversary.
pub fn run_zhang_man_with(
    config: &ProtocolConfig,
    adversary: &mut dyn Adversary,
    rng: &mut TrialRng,
) -> Result<TrialReport> {
    check_protocol(config, ProtocolKind::ZhangMan)?;
    let n = config.n_agents;
    let mut run = Run::new(config, adversary, rng);

    for k in 0..=n {
        run.prepare(slot_party(k), k)?;
    }
    for k in 0..=n {
        let to = slot_party((k + 1) % (n + 1));
        run.transmit(k, slot_party(k), to, &[qubit_of(2 * k + 2)])?;
    }

    match run.choose_mode(1) {
        Mode::Detect => {
            for k in 0..=n {
                let holders = (slot_party(k), slot_party((k + 1) % (n + 1)));
                run.subround(1, pair_of_slot(k), holders, run.initial[k])?;
            }
            run.finish(Mode::Detect)
        }
        Mode::Message => {
            run.encode_secret()?;
            run.dealer_outcome = Some(run.bell(PartyId::Dealer, dealer_pair(n), true)?);
            run.message_round()?;
            for k in 1..=n {
                run.agent_measure(k)?;
            }
            run.announce_all()?;
            run.finish(Mode::Message)
        }
    }
}

/// One run of the step-by-step protocol with a custom adversary.
pub fn run_improved_with(
    config: &ProtocolConfig,
    adversary: &mut dyn Adversary,
    rng: &mut TrialRng,
) -> Result<TrialReport> {
    check_protocol(config, ProtocolKind::Improved)?;
    let n = config.n_agents;
    let mut run = Run::new(config, adversary, rng);
    let q1 = qubit_of(1);

    for k in 0..=n {
        run.prepare(PartyId::Dealer, k)?;
    }
    // Label the dealer knows for the link pair (1, 2k).
    let mut link_label = run.initial[0];

    for k in 1..=n {
        let agent = PartyId::Agent(k);
        let link = (q1, qubit_of(2 * k));
        let own = pair_of_slot(k);
        let mut delivered = false;
        for _ in 0..config.max_step_attempts {
            run.transmit(
                k,
                PartyId::Dealer,
                agent,
                &[qubit_of(2 * k), qubit_of(2 * k + 1)],
            )?;
            if run.choose_mode(k) == Mode::Detect {
                let link_ok = run.subround(k, link, (PartyId::Dealer, agent), link_label)?;
                let own_ok =
                    run.subround(k, (own.1, own.0), (PartyId::Dealer, agent), run.initial[k])?;
                if !(link_ok && own_ok) {
                    return run.finish(Mode::Detect);
                }
                run.reprepare(link, link_label, None)?;
                run.reprepare(own, run.initial[k], Some(k))?;
                continue;
            }
            if k == 1 {
                run.encode_secret()?;
            }
            let last = k == n;
            link_label = run.bell(PartyId::Dealer, (q1, qubit_of(2 * k + 2)), last)?;
            if last {
                run.dealer_outcome = Some(link_label);
            }
            run.message_round()?;
            run.agent_measure(k)?;
            delivered = true;
            break;
        }
        if !delivered {
            return run.finish(Mode::Detect);
        }
    }
    run.announce_all()?;
    run.finish(Mode::Message)
}

pub fn run_zhang_man(
    config: &ProtocolConfig,
    strategy: &AdversaryStrategy,
    rng: &mut TrialRng,
) -> Result<TrialReport> {
    strategy.validate(config.n_agents, channel_range(config))?;
    let mut adversary = strategy.instantiate();
    run_zhang_man_with(config, adversary.as_mut(), rng)
}

pub fn run_improved(
    config: &ProtocolConfig,
    strategy: &AdversaryStrategy,
    rng: &mut TrialRng,
) -> Result<TrialReport> {
    strategy.validate(config.n_agents, channel_range(config))?;
    let mut adversary = strategy.instantiate();
    run_improved_with(config, adversary.as_mut(), rng)
}

/// Trial `index` of an experiment, on its own random stream.
pub fn run_trial(
    config: &ProtocolConfig,
    strategy: &AdversaryStrategy,
    index: u64,
) -> Result<TrialReport> {
    let mut rng = trial_rng(config.master_seed, index);
    match config.protocol {
        ProtocolKind::ZhangMan => run_zhang_man(config, strategy, &mut rng),
        ProtocolKind::Improved => run_improved(config, strategy, &mut rng),
    }
}

/// Secret recovered by all agents together from the public announcements.
pub fn reconstruct_from_transcript(
    transcript: &Transcript,
    initial_labels: &[BellLabel],
) -> Result<SecretBits> {
    let n = initial_labels
        .len()
        .checked_sub(1)
        .ok_or_else(|| Error::Input("no initial labels".into()))?;
    let measured = transcript.ring_announcements(n)?;
    Ok(ring_reconstruct(initial_labels, &measured)?.secret_bits())
}
