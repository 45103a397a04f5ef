//! What a coalition can deduce from its own records and public announcements.
//!
//! Every state in these protocols is a product of Bell pairs, so the label of
//! each live pair is an XOR of symbols: the dealer's encoding shift and the
//! outcomes of earlier Bell measurements. Replaying the measurement schedule
//! tracks those expressions; measuring a pair that already exists yields a
//! linear constraint. The coalition can recover a symbol iff it lies in the
//! span of the constraints once its known outcomes are substituted.
//!
//! Single-qubit measurements break a pair's expression; any constraint that
//! would touch a broken pair carries no information and is dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::BitXor;

use crate::bell::BellLabel;
use crate::protocol::{Announcement, Event, PartyId, QubitPair, Transcript};
use crate::qstate::QubitId;

/// Symbol to solve for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// The dealer's operation, as its label shift.
    Encoding,
    /// The outcome of the Bell measurement with this sequence number.
    Outcome(usize),
}

/// Symbol 0 is the encoding; the measurement with sequence `s` is `s + 1`.
const MAX_SYMBOLS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Expr {
    mask: u128,
    constant: BellLabel,
}

impl Expr {
    fn constant(label: BellLabel) -> Self {
        Expr {
            mask: 0,
            constant: label,
        }
    }

    fn symbol(index: usize) -> Self {
        Expr {
            mask: 1 << index,
            constant: BellLabel::PHI_PLUS,
        }
    }
}

impl BitXor for Expr {
    type Output = Expr;

    fn bitxor(self, rhs: Expr) -> Expr {
        Expr {
            mask: self.mask ^ rhs.mask,
            constant: self.constant ^ rhs.constant,
        }
    }
}

fn key(a: QubitId, b: QubitId) -> QubitPair {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Pairing of live qubits and the (possibly broken) label of each pair.
#[derive(Default)]
struct PairTracker {
    partner: BTreeMap<QubitId, QubitId>,
    label: BTreeMap<QubitPair, Option<Expr>>,
    before_break: BTreeMap<QubitPair, Expr>,
}

impl PairTracker {
    fn link(&mut self, a: QubitId, b: QubitId, e: Option<Expr>) {
        self.unlink(a);
        self.unlink(b);
        self.partner.insert(a, b);
        self.partner.insert(b, a);
        self.label.insert(key(a, b), e);
    }

    fn unlink(&mut self, q: QubitId) {
        if let Some(p) = self.partner.remove(&q) {
            self.partner.remove(&p);
            self.label.remove(&key(q, p));
        }
    }

    fn expr_of(&self, q: QubitId) -> Option<Expr> {
        let p = self.partner.get(&q)?;
        self.label.get(&key(q, *p)).copied().flatten()
    }
}

/// The records a coalition of agents can read: its members' private records
/// and the dealer's public outcome. Other agents' announced outcomes are their
/// shares of the secret and only count when those agents join the coalition.
#[derive(Debug, Clone)]
pub struct CoalitionView {
    coalition: BTreeSet<usize>,
    events: Vec<Event>,
    initial_labels: Vec<BellLabel>,
    private: BTreeMap<usize, BellLabel>,
    public: Vec<Announcement>,
}

impl CoalitionView {
    /// Reads the private records of the coalition's agents only.
    pub fn from_transcript(transcript: &Transcript, coalition: &BTreeSet<usize>) -> Self {
        let mut private = BTreeMap::new();
        for &agent in coalition {
            if let Some(record) = transcript.private_record(PartyId::Agent(agent)) {
                private.extend(record.bell.iter().map(|b| (b.seq, b.label)));
            }
        }
        CoalitionView {
            coalition: coalition.clone(),
            events: transcript.events().to_vec(),
            initial_labels: transcript.initial_labels().to_vec(),
            private,
            public: transcript
                .announcements()
                .iter()
                .filter(|a| a.party == PartyId::Dealer)
                .copied()
                .collect(),
        }
    }

    pub fn with_initial_labels(mut self, labels: &[BellLabel]) -> Self {
        self.initial_labels = labels.to_vec();
        self
    }

    pub fn coalition(&self) -> &BTreeSet<usize> {
        &self.coalition
    }

    pub fn initial_labels(&self) -> &[BellLabel] {
        &self.initial_labels
    }

    pub fn announcements(&self) -> &[Announcement] {
        &self.public
    }

    /// Latest label publicly announced by `party`.
    pub fn public_label(&self, party: PartyId) -> Option<BellLabel> {
        self.public
            .iter()
            .rev()
            .find(|a| a.party == party)
            .map(|a| a.label)
    }

    pub fn last_measurement_of(&self, party: PartyId) -> Option<usize> {
        self.events.iter().rev().find_map(|e| match *e {
            Event::BellMeasure { seq, party: p, .. } if p == party => Some(seq),
            _ => None,
        })
    }

    /// Outcomes known to the coalition, by sequence number. A public
    /// announcement counts when it names a pair the announcer measured.
    fn known_outcomes(&self) -> BTreeMap<usize, BellLabel> {
        let mut known = self.private.clone();
        for a in &self.public {
            let measured = self.events.iter().rev().find_map(|e| match *e {
                Event::BellMeasure {
                    seq, party, pair, ..
                } if party == a.party && key(pair.0, pair.1) == key(a.pair.0, a.pair.1) => {
                    Some(seq)
                }
                _ => None,
            });
            if let Some(seq) = measured {
                known.entry(seq).or_insert(a.label);
            }
        }
        known
    }

    /// Replays the schedule and returns the linear constraints it implies.
    fn constraints(&self) -> Option<Vec<Expr>> {
        let mut pairs = PairTracker::default();
        let mut rows = Vec::new();
        let initial = |slot: usize| self.initial_labels.get(slot).copied().map(Expr::constant);
        for event in &self.events {
            match *event {
                Event::Prepare { pair, slot, .. } => pairs.link(pair.0, pair.1, initial(slot)),
                Event::Reprepare { pair, slot, .. } => {
                    let e = match slot {
                        Some(s) => initial(s),
                        None => pairs.before_break.get(&key(pair.0, pair.1)).copied(),
                    };
                    pairs.link(pair.0, pair.1, e);
                }
                Event::Encode { qubit, .. } => {
                    if let Some(&p) = pairs.partner.get(&qubit) {
                        if let Some(Some(e)) = pairs.label.get_mut(&key(qubit, p)) {
                            *e = *e ^ Expr::symbol(0);
                        }
                    }
                }
                Event::BellMeasure {
                    seq, pair: (b, c), ..
                } => {
                    if seq + 1 >= MAX_SYMBOLS {
                        return None;
                    }
                    let m = Expr::symbol(seq + 1);
                    match (
                        pairs.partner.get(&b).copied(),
                        pairs.partner.get(&c).copied(),
                    ) {
                        (Some(pb), _) if pb == c => {
                            if let Some(e) = pairs.expr_of(b) {
                                rows.push(e ^ m);
                            }
                        }
                        (Some(a), Some(d)) => {
                            let joined = match (pairs.expr_of(b), pairs.expr_of(c)) {
                                (Some(e1), Some(e2)) => Some(e1 ^ e2 ^ m),
                                _ => None,
                            };
                            pairs.unlink(b);
                            pairs.unlink(c);
                            pairs.link(a, d, joined);
                        }
                        _ => {}
                    }
                    pairs.link(b, c, Some(m));
                }
                Event::SingleMeasure { qubit, .. } => {
                    if let Some(&p) = pairs.partner.get(&qubit) {
                        let k = key(qubit, p);
                        if let Some(Some(e)) = pairs.label.get(&k).copied() {
                            pairs.before_break.insert(k, e);
                        }
                        pairs.label.insert(k, None);
                    }
                }
                Event::Send { .. } | Event::Handoff { .. } => {}
            }
        }
        Some(rows)
    }

    /// Value of `target` if the coalition's knowledge determines it.
    pub fn solve(&self, target: Target) -> Option<BellLabel> {
        let known = self.known_outcomes();
        let target_bit = match target {
            Target::Encoding => 0,
            Target::Outcome(seq) => {
                if let Some(&label) = known.get(&seq) {
                    return Some(label);
                }
                seq + 1
            }
        };
        if target_bit >= MAX_SYMBOLS {
            return None;
        }
        // Substitute known outcomes, then reduce to echelon form keyed by
        // each row's lowest remaining symbol.
        let mut pivots: BTreeMap<u32, Expr> = BTreeMap::new();
        for mut row in self.constraints()? {
            for (&seq, &label) in &known {
                let bit = 1u128 << (seq + 1);
                if row.mask & bit != 0 {
                    row.mask ^= bit;
                    row.constant = row.constant ^ label;
                }
            }
            while row.mask != 0 {
                let low = row.mask.trailing_zeros();
                match pivots.get(&low) {
                    Some(&p) => row = row ^ p,
                    None => {
                        pivots.insert(low, row);
                        break;
                    }
                }
            }
        }
        // Tracks "target ⊕ Σ mask = constant".
        let mut t = Expr::symbol(target_bit);
        while t.mask != 0 {
            let low = t.mask.trailing_zeros();
            t = t ^ *pivots.get(&low)?;
        }
        Some(t.constant)
    }
}
