//! Monte-Carlo experiments and their summary statistics.
//!
//! Trials fan out over a thread pool; each trial draws from its own stream
//! (see [`crate::protocol::trial_rng`]) and records are collected in trial
//! order, so results depend only on the master seed.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::adversary::AdversaryStrategy;
use crate::bell::SecretBits;
use crate::error::{Error, Result};
use crate::protocol::{run_trial, CheckKind, Mode, PartyId, ProtocolConfig, TrialReport};

/// Plugin mutual information, in bits, of a joint count table whose rows are
/// the secret and whose columns are whatever it is compared against.
pub fn estimate_mi<R: AsRef<[u64]>>(joint_counts: &[R]) -> Result<f64> {
    let total: u64 = joint_counts.iter().flat_map(|r| r.as_ref().iter()).sum();
    if total == 0 {
        return Err(Error::Input("mutual information of an empty table".into()));
    }
    let n = total as f64;
    let cols = joint_counts
        .iter()
        .map(|r| r.as_ref().len())
        .max()
        .unwrap_or(0);
    let row_sums: Vec<f64> = joint_counts
        .iter()
        .map(|r| r.as_ref().iter().sum::<u64>() as f64)
        .collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|c| {
            joint_counts
                .iter()
                .map(|r| r.as_ref().get(c).copied().unwrap_or(0))
                .sum::<u64>() as f64
        })
        .collect();
    let mut mi = 0.0;
    for (row, &rs) in joint_counts.iter().zip(&row_sums) {
        for (&count, &cs) in row.as_ref().iter().zip(&col_sums) {
            if count > 0 {
                let p = count as f64 / n;
                mi += p * (count as f64 * n / (rs * cs)).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Expected upward bias of the plugin estimator for an `rows × cols` table
/// of `n` independent samples: `(rows−1)(cols−1) / (2n ln 2)` bits.
pub fn mi_bias(rows: usize, cols: usize, n: u64) -> f64 {
    if n == 0 || rows == 0 || cols == 0 {
        return 0.0;
    }
    ((rows - 1) * (cols - 1)) as f64 / (2.0 * n as f64 * std::f64::consts::LN_2)
}

/// Compact per-trial record, the unit of the report file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub index: u64,
    pub mode: Mode,
    pub secret: Option<SecretBits>,
    pub reconstruction: Option<SecretBits>,
    pub guess: Option<SecretBits>,
    pub detected: bool,
    pub subrounds: usize,
    pub subround_failures: usize,
    /// Colluders' full classical view as a base-4 number: the dealer's
    /// public label followed by each colluder's true outcome.
    pub colluder_view: Option<u32>,
}

impl TrialRecord {
    pub fn from_report(index: u64, report: &TrialReport, colluders: &BTreeSet<usize>) -> Self {
        let (subrounds, subround_failures) = report
            .transcript
            .detections()
            .iter()
            .filter(|d| matches!(d.kind, CheckKind::Subround { .. }))
            .fold((0, 0), |(t, f), d| (t + 1, f + usize::from(!d.passed)));
        let colluder_view = if report.mode == Mode::Message && !colluders.is_empty() {
            let t = &report.transcript;
            let dealer = t
                .announcement_of(PartyId::Dealer)
                .map(|a| a.label.index() as u32);
            dealer.and_then(|d| {
                colluders.iter().try_fold(d, |acc, &k| {
                    let rec = t.private_record(PartyId::Agent(k))?;
                    Some(acc * 4 + rec.bell.last()?.label.index() as u32)
                })
            })
        } else {
            None
        };
        TrialRecord {
            index,
            mode: report.mode,
            secret: report.secret,
            reconstruction: report.authorized_reconstruction,
            guess: report.adversary_guess,
            detected: report.detected,
            subrounds,
            subround_failures,
            colluder_view,
        }
    }

    pub fn recovered(&self) -> bool {
        self.secret.is_some() && self.secret == self.reconstruction
    }

    pub fn attack_succeeded(&self) -> bool {
        self.secret.is_some() && self.secret == self.guess
    }
}

/// Aggregate counters. Merging is commutative and associative.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Counters {
    pub trials: u64,
    pub message_trials: u64,
    pub recovered: u64,
    pub attack_successes: u64,
    pub detected: u64,
    pub subrounds: u64,
    pub subround_failures: u64,
    pub secret_vs_guess: [[u64; 4]; 4],
    pub secret_vs_view: BTreeMap<u32, [u64; 4]>,
}

impl Counters {
    pub fn add(&mut self, r: &TrialRecord) {
        self.trials += 1;
        self.detected += u64::from(r.detected);
        self.subrounds += r.subrounds as u64;
        self.subround_failures += r.subround_failures as u64;
        if r.mode != Mode::Message {
            return;
        }
        self.message_trials += 1;
        self.recovered += u64::from(r.recovered());
        self.attack_successes += u64::from(r.attack_succeeded());
        if let (Some(s), Some(g)) = (r.secret, r.guess) {
            self.secret_vs_guess[s.value() as usize][g.value() as usize] += 1;
        }
        if let (Some(s), Some(v)) = (r.secret, r.colluder_view) {
            self.secret_vs_view.entry(v).or_default()[s.value() as usize] += 1;
        }
    }

    pub fn merge(mut self, other: Counters) -> Counters {
        self.trials += other.trials;
        self.message_trials += other.message_trials;
        self.recovered += other.recovered;
        self.attack_successes += other.attack_successes;
        self.detected += other.detected;
        self.subrounds += other.subrounds;
        self.subround_failures += other.subround_failures;
        for (row, o) in self.secret_vs_guess.iter_mut().zip(other.secret_vs_guess) {
            for (c, oc) in row.iter_mut().zip(o) {
                *c += oc;
            }
        }
        for (k, v) in other.secret_vs_view {
            let slot = self.secret_vs_view.entry(k).or_default();
            for (c, oc) in slot.iter_mut().zip(v) {
                *c += oc;
            }
        }
        self
    }

    pub fn summary(&self, seed: u64) -> SummaryStats {
        let frac = |num: u64, den: u64| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let guessed: u64 = self.secret_vs_guess.iter().flatten().sum();
        let mi_bits = if guessed == 0 {
            0.0
        } else {
            estimate_mi(&self.secret_vs_guess).unwrap_or(0.0)
        };
        // Rows = secret, columns = distinct views.
        let view_table: Vec<Vec<u64>> = (0..4)
            .map(|s| self.secret_vs_view.values().map(|v| v[s]).collect())
            .collect();
        let viewed: u64 = self.secret_vs_view.values().flatten().sum();
        let mi_view_bits = if viewed == 0 {
            0.0
        } else {
            estimate_mi(&view_table).unwrap_or(0.0)
        };
        SummaryStats {
            trials: self.trials,
            message_trials: self.message_trials,
            recovery_rate: frac(self.recovered, self.message_trials),
            attack_success_rate: frac(self.attack_successes, self.message_trials),
            detection_rate: frac(self.detected, self.trials),
            subround_failure_rate: frac(self.subround_failures, self.subrounds),
            mi_bits,
            mi_bias_bits: mi_bias(4, 4, guessed),
            mi_view_bits,
            mi_view_bias_bits: mi_bias(4, self.secret_vs_view.len().max(1), viewed),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub trials: u64,
    pub message_trials: u64,
    /// Message trials in which all agents together recover the secret.
    pub recovery_rate: f64,
    /// Message trials in which the colluders' guess is right.
    pub attack_success_rate: f64,
    /// Trials in which any check failed.
    pub detection_rate: f64,
    pub subround_failure_rate: f64,
    /// Secret vs colluders' guess.
    pub mi_bits: f64,
    pub mi_bias_bits: f64,
    /// Secret vs colluders' full classical view.
    pub mi_view_bits: f64,
    pub mi_view_bias_bits: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub records: Vec<TrialRecord>,
    pub summary: SummaryStats,
}

/// Summary recomputed from per-trial records.
pub fn summarize(records: &[TrialRecord], seed: u64) -> SummaryStats {
    let mut c = Counters::default();
    for r in records {
        c.add(r);
    }
    c.summary(seed)
}

/// Runs `config.trials` trials in parallel.
pub fn run_experiment(config: &ProtocolConfig, strategy: &AdversaryStrategy) -> Result<Experiment> {
    config.validate()?;
    let colluders: BTreeSet<usize> = strategy.instantiate().colluders().clone();
    let records = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            run_trial(config, strategy, i).map(|r| TrialRecord::from_report(i, &r, &colluders))
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = records
        .par_iter()
        .fold(Counters::default, |mut c, r| {
            c.add(r);
            c
        })
        .reduce(Counters::default, Counters::merge)
        .summary(config.master_seed);
    Ok(Experiment { records, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mi_of_independent_table_is_zero() {
        let t = [[25u64; 4]; 4];
        assert!(estimate_mi(&t).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mi_of_diagonal_table_is_two_bits() {
        let mut t = [[0u64; 4]; 4];
        for (i, row) in t.iter_mut().enumerate() {
            row[i] = 17;
        }
        assert!((estimate_mi(&t).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mi_handles_ragged_and_empty() {
        assert!(matches!(estimate_mi(&[[0u64; 4]; 4]), Err(Error::Input(_))));
        // One bit shared through a 4x2 table.
        let t = vec![vec![10u64, 0], vec![10, 0], vec![0, 10], vec![0, 10]];
        assert!((estimate_mi(&t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bias_formula() {
        let b = mi_bias(4, 4, 10_000);
        assert!((b - 9.0 / (20_000.0 * std::f64::consts::LN_2)).abs() < 1e-15);
        assert_eq!(mi_bias(4, 4, 0), 0.0);
    }

    #[test]
    fn counters_merge_matches_sequential() {
        let rec = |i: u64, s: u8, g: u8| TrialRecord {
            index: i,
            mode: Mode::Message,
            secret: Some(SecretBits::from_value(s).unwrap()),
            reconstruction: Some(SecretBits::from_value(s).unwrap()),
            guess: Some(SecretBits::from_value(g).unwrap()),
            detected: i.is_multiple_of(3),
            subrounds: 1,
            subround_failures: (i % 2) as usize,
            colluder_view: Some((i % 5) as u32),
        };
        let records: Vec<_> = (0..40)
            .map(|i| rec(i, (i % 4) as u8, ((i / 2) % 4) as u8))
            .collect();
        let mut a = Counters::default();
        let mut b = Counters::default();
        for r in &records[..17] {
            a.add(r);
        }
        for r in &records[17..] {
            b.add(r);
        }
        let mut all = Counters::default();
        for r in &records {
            all.add(r);
        }
        assert_eq!(a.clone().merge(b.clone()), all);
        assert_eq!(b.merge(a), all);
    }

    #[test]
    fn zero_trials_give_empty_summary() {
        let s = summarize(&[], 5);
        assert_eq!(s.trials, 0);
        assert_eq!(s.recovery_rate, 0.0);
        assert_eq!(s.mi_bits, 0.0);
        assert_eq!(s.seed, 5);
    }
}
