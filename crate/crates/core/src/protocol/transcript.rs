use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::bell::{Basis, BellLabel, SecretBits};
use crate::error::{Error, Result};
use crate::qstate::QubitId;

use super::{Mode, PartyId, QubitPair};

/// A public Bell-outcome announcement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Announcement {
    pub party: PartyId,
    pub pair: QubitPair,
    pub label: BellLabel,
}

/// Measurement schedule entries. These record what was done to which qubits,
/// never the outcomes; outcomes live in the private records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// Initial preparation of pair slot `slot`.
    Prepare {
        party: PartyId,
        pair: QubitPair,
        slot: usize,
    },
    /// Regeneration after a detection round. `slot: None` means the pair is
    /// prepared in the label it held before it was tested.
    Reprepare {
        party: PartyId,
        pair: QubitPair,
        slot: Option<usize>,
    },
    Send {
        from: PartyId,
        to: PartyId,
        qubit: QubitId,
    },
    /// Side-channel exchange between colluders.
    Handoff {
        from: PartyId,
        to: PartyId,
        qubit: QubitId,
    },
    /// The dealer's secret operation.
    Encode { party: PartyId, qubit: QubitId },
    BellMeasure {
        seq: usize,
        party: PartyId,
        pair: QubitPair,
        destructive: bool,
    },
    SingleMeasure {
        party: PartyId,
        qubit: QubitId,
        basis: Basis,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BellRecord {
    pub seq: usize,
    pub pair: QubitPair,
    pub label: BellLabel,
}

/// What one party saw and did during a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PrivateRecord {
    pub bell: Vec<BellRecord>,
    pub single: Vec<(QubitId, Basis, bool)>,
    pub received: Vec<QubitId>,
    pub sent: Vec<QubitId>,
    pub secret: Option<SecretBits>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// Correlation test of one Bell pair in a random basis.
    Subround { pair: QubitPair, basis: Basis },
    /// Dealer compares the agents' announcements against her secret before
    /// revealing her own outcome.
    Announcements,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionRecord {
    pub step: usize,
    pub kind: CheckKind,
    pub passed: bool,
}

/// Classical record of one protocol run.
#[derive(Debug, Clone, Default)]
pub struct Transcript {
    modes: Vec<(usize, Mode)>,
    announcements: Vec<Announcement>,
    events: Vec<Event>,
    private: BTreeMap<PartyId, PrivateRecord>,
    detections: Vec<DetectionRecord>,
    initial_labels: Vec<BellLabel>,
    next_seq: usize,
    access_log: RefCell<Vec<PartyId>>,
}

impl Transcript {
    pub fn new(initial_labels: Vec<BellLabel>) -> Self {
        Transcript {
            initial_labels,
            ..Default::default()
        }
    }

    pub fn initial_labels(&self) -> &[BellLabel] {
        &self.initial_labels
    }

    /// Mode chosen at each attempt, tagged with the protocol step.
    pub fn modes(&self) -> &[(usize, Mode)] {
        &self.modes
    }

    pub fn announcements(&self) -> &[Announcement] {
        &self.announcements
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn detections(&self) -> &[DetectionRecord] {
        &self.detections
    }

    /// Reads a party's private record. Every call is logged, see
    /// [`Transcript::accessed_private_records`].
    pub fn private_record(&self, party: PartyId) -> Option<&PrivateRecord> {
        self.access_log.borrow_mut().push(party);
        self.private.get(&party)
    }

    /// Parties whose private records have been read since the transcript
    /// was created.
    pub fn accessed_private_records(&self) -> BTreeSet<PartyId> {
        self.access_log.borrow().iter().copied().collect()
    }

    /// The dealer's secret. Reading it is logged like any private access.
    pub fn dealer_secret(&self) -> Option<SecretBits> {
        self.private_record(PartyId::Dealer).and_then(|r| r.secret)
    }

    pub(crate) fn record_mode(&mut self, step: usize, mode: Mode) {
        self.modes.push((step, mode));
    }

    pub(crate) fn push_event(&mut self, event: Event) {
        self.events.push(event);
    }

    pub(crate) fn announce(&mut self, a: Announcement) {
        self.announcements.push(a);
    }

    pub(crate) fn push_detection(&mut self, d: DetectionRecord) {
        self.detections.push(d);
    }

    pub(crate) fn record_mut(&mut self, party: PartyId) -> &mut PrivateRecord {
        self.private.entry(party).or_default()
    }

    /// Logs a Bell measurement in the schedule and the measuring party's
    /// private record; returns its sequence number.
    pub(crate) fn record_bell(
        &mut self,
        party: PartyId,
        pair: QubitPair,
        label: BellLabel,
        destructive: bool,
    ) -> usize {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.events.push(Event::BellMeasure {
            seq,
            party,
            pair,
            destructive,
        });
        self.record_mut(party)
            .bell
            .push(BellRecord { seq, pair, label });
        seq
    }

    pub(crate) fn record_single(
        &mut self,
        party: PartyId,
        qubit: QubitId,
        basis: Basis,
        bit: bool,
    ) {
        self.events.push(Event::SingleMeasure {
            party,
            qubit,
            basis,
        });
        self.record_mut(party).single.push((qubit, basis, bit));
    }

    /// The latest announcement made by `party`.
    pub fn announcement_of(&self, party: PartyId) -> Option<&Announcement> {
        self.announcements.iter().rev().find(|a| a.party == party)
    }

    /// Announced labels of the dealer and agents `1..=n_agents`, dealer first.
    pub fn ring_announcements(&self, n_agents: usize) -> Result<Vec<BellLabel>> {
        std::iter::once(PartyId::Dealer)
            .chain((1..=n_agents).map(PartyId::Agent))
            .map(|p| {
                self.announcement_of(p)
                    .map(|a| a.label)
                    .ok_or_else(|| Error::IncompleteTranscript(format!("no announcement from {p}")))
            })
            .collect()
    }

    pub fn is_detected(&self) -> bool {
        self.detections.iter().any(|d| !d.passed)
    }

    /// Line-oriented text form: one record per line, announcements as
    /// `announce party=<p> pair=<a>,<b> label=<l>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (step, mode) in &self.modes {
            let _ = writeln!(out, "mode step={step} value={}", mode.name());
        }
        for d in &self.detections {
            let result = if d.passed { "pass" } else { "fail" };
            match d.kind {
                CheckKind::Subround { pair, basis } => {
                    let _ = writeln!(
                        out,
                        "check step={} kind=subround pair={},{} basis={} result={result}",
                        d.step,
                        pair.0,
                        pair.1,
                        basis.name()
                    );
                }
                CheckKind::Announcements => {
                    let _ = writeln!(
                        out,
                        "check step={} kind=announcements result={result}",
                        d.step
                    );
                }
            }
        }
        for a in &self.announcements {
            let _ = writeln!(out, "{}", format_announcement(a));
        }
        out
    }
}

pub fn format_announcement(a: &Announcement) -> String {
    format!(
        "announce party={} pair={},{} label={}",
        a.party, a.pair.0, a.pair.1, a.label
    )
}

/// Parses the `announce` lines of a transcript text, ignoring other records.
pub fn parse_announcements(text: &str) -> Result<Vec<Announcement>> {
    let bad = |line: &str| Error::Input(format!("malformed announcement line {line:?}"));
    let mut out = Vec::new();
    for line in text.lines() {
        let mut fields = line.split_whitespace();
        if fields.next() != Some("announce") {
            continue;
        }
        let mut party = None;
        let mut pair = None;
        let mut label = None;
        for field in fields {
            let (key, value) = field.split_once('=').ok_or_else(|| bad(line))?;
            match key {
                "party" => party = Some(value.parse::<PartyId>()?),
                "pair" => {
                    let (a, b) = value.split_once(',').ok_or_else(|| bad(line))?;
                    let a = a.parse().map_err(|_| bad(line))?;
                    let b = b.parse().map_err(|_| bad(line))?;
                    pair = Some((QubitId(a), QubitId(b)));
                }
                "label" => label = Some(value.parse::<BellLabel>()?),
                _ => return Err(bad(line)),
            }
        }
        match (party, pair, label) {
            (Some(party), Some(pair), Some(label)) => out.push(Announcement { party, pair, label }),
            _ => return Err(bad(line)),
        }
    }
    Ok(out)
}
