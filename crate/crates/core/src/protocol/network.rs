use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::qstate::QubitId;

use super::PartyId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Holder {
    Party(PartyId),
    InFlight { channel: usize },
}

/// A directed quantum channel and the qubits currently travelling on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Channel {
    pub id: usize,
    pub from: PartyId,
    pub to: PartyId,
    pub in_flight: Vec<QubitId>,
}

/// Tracks who holds each qubit. Every transfer and measurement in a run is
/// checked against it.
#[derive(Debug, Clone, Default)]
pub struct Network {
    holders: BTreeMap<QubitId, Holder>,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, q: QubitId, party: PartyId) {
        self.holders.insert(q, Holder::Party(party));
    }

    pub fn holder(&self, q: QubitId) -> Option<Holder> {
        self.holders.get(&q).copied()
    }

    pub fn holds(&self, party: PartyId, q: QubitId) -> bool {
        self.holder(q) == Some(Holder::Party(party))
    }

    /// Qubits held by `party`, in id order.
    pub fn held_by(&self, party: PartyId) -> Vec<QubitId> {
        self.holders
            .iter()
            .filter(|(_, h)| **h == Holder::Party(party))
            .map(|(q, _)| *q)
            .collect()
    }

    /// Puts `qubits` in flight from `from` to `to` on channel `id`.
    pub fn send(
        &mut self,
        id: usize,
        from: PartyId,
        to: PartyId,
        qubits: &[QubitId],
    ) -> Result<Channel> {
        for &q in qubits {
            if !self.holds(from, q) {
                return Err(Error::SimulationFault(format!(
                    "{from} cannot send qubit {q} it does not hold"
                )));
            }
        }
        for &q in qubits {
            self.holders.insert(q, Holder::InFlight { channel: id });
        }
        Ok(Channel {
            id,
            from,
            to,
            in_flight: qubits.to_vec(),
        })
    }

    pub fn deliver(&mut self, channel: Channel) {
        for q in channel.in_flight {
            self.holders.insert(q, Holder::Party(channel.to));
        }
    }

    /// Direct hand-over outside the quantum channels (a colluders' exchange).
    pub fn handoff(&mut self, from: PartyId, to: PartyId, q: QubitId) -> Result<()> {
        if !self.holds(from, q) {
            return Err(Error::SimulationFault(format!(
                "{from} cannot hand over qubit {q} it does not hold"
            )));
        }
        self.holders.insert(q, Holder::Party(to));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn send_requires_ownership_and_delivers_in_order() {
        let mut net = Network::new();
        let (a, b) = (PartyId::Dealer, PartyId::Agent(1));
        net.assign(QubitId(1), a);
        net.assign(QubitId(2), a);
        assert!(matches!(
            net.send(0, b, a, &[QubitId(1)]),
            Err(Error::SimulationFault(_))
        ));
        let ch = net.send(0, a, b, &[QubitId(2), QubitId(1)]).unwrap();
        assert_eq!(
            net.holder(QubitId(2)),
            Some(Holder::InFlight { channel: 0 })
        );
        // In flight on one channel, so it cannot be sent on another.
        assert!(net.send(1, a, b, &[QubitId(2)]).is_err());
        assert_eq!(ch.in_flight, vec![QubitId(2), QubitId(1)]);
        net.deliver(ch);
        assert_eq!(net.held_by(b), vec![QubitId(1), QubitId(2)]);
        assert!(net.held_by(a).is_empty());
    }

    #[test]
    fn handoff_checks_holder() {
        let mut net = Network::new();
        net.assign(QubitId(6), PartyId::Agent(3));
        assert!(net
            .handoff(PartyId::Agent(1), PartyId::Agent(3), QubitId(6))
            .is_err());
        net.handoff(PartyId::Agent(3), PartyId::Agent(1), QubitId(6))
            .unwrap();
        assert!(net.holds(PartyId::Agent(1), QubitId(6)));
    }
}
