//! Plain-text report: a header line, one `key=value` record per trial, and a
//! summary block.

use std::fmt::Write as _;

use qss_core::adversary::AdversaryStrategy;
use qss_core::stats::{SummaryStats, TrialRecord};
use qss_core::SecretBits;

use crate::config::RunSettings;

fn bits(b: Option<SecretBits>) -> String {
    b.map_or_else(|| "-".to_string(), |b| b.to_string())
}

pub fn header(settings: &RunSettings) -> String {
    let c = &settings.config;
    let adversary = match settings.strategy {
        AdversaryStrategy::Honest => "adversary=none".to_string(),
        AdversaryStrategy::Collusion { i, j, fakes } => {
            format!(
                "adversary=collusion colluders={i},{j} fakes={}",
                format!("{fakes:?}").to_lowercase()
            )
        }
        AdversaryStrategy::InterceptResend { channel } => {
            format!("adversary=intercept-resend channel={channel}")
        }
    };
    format!(
        "run protocol={} agents={} {adversary} trials={} seed={} p_detect={}",
        c.protocol.name(),
        c.n_agents,
        c.trials,
        c.master_seed,
        c.p_detect
    )
}

pub fn trial_line(r: &TrialRecord) -> String {
    format!(
        "trial={} mode={} secret={} reconstruction={} guess={} detected={} subrounds={} subround_failures={}",
        r.index,
        r.mode.name(),
        bits(r.secret),
        bits(r.reconstruction),
        bits(r.guess),
        r.detected,
        r.subrounds,
        r.subround_failures
    )
}

pub fn summary_block(s: &SummaryStats) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "summary trials={}", s.trials);
    let _ = writeln!(out, "summary message_trials={}", s.message_trials);
    let _ = writeln!(out, "summary recovery_rate={:.6}", s.recovery_rate);
    let _ = writeln!(
        out,
        "summary attack_success_rate={:.6}",
        s.attack_success_rate
    );
    let _ = writeln!(out, "summary detection_rate={:.6}", s.detection_rate);
    let _ = writeln!(
        out,
        "summary subround_failure_rate={:.6}",
        s.subround_failure_rate
    );
    let _ = writeln!(out, "summary mi_bits={:.6}", s.mi_bits);
    let _ = writeln!(out, "summary mi_view_bits={:.6}", s.mi_view_bits);
    let _ = writeln!(out, "summary seed={}", s.seed);
    let _ = writeln!(
        out,
        "note plugin MI bias ~ (rows-1)(cols-1)/(2N ln 2): mi_bits {:.6}, mi_view_bits {:.6}",
        s.mi_bias_bits, s.mi_view_bias_bits
    );
    out
}

pub fn render(settings: &RunSettings, records: &[TrialRecord], summary: &SummaryStats) -> String {
    let mut out = header(settings);
    out.push('\n');
    for r in records {
        out.push_str(&trial_line(r));
        out.push('\n');
    }
    out.push_str(&summary_block(summary));
    out
}

pub const SUMMARY_CSV_HEADER: &str = "protocol,agents,adversary,trials,message_trials,recovery_rate,attack_success_rate,detection_rate,subround_failure_rate,mi_bits,mi_bias_bits,mi_view_bits,mi_view_bias_bits,seed";

pub fn summary_csv(settings: &RunSettings, s: &SummaryStats) -> String {
    format!(
        "{SUMMARY_CSV_HEADER}\n{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
        settings.config.protocol.name(),
        settings.config.n_agents,
        settings.strategy.name(),
        s.trials,
        s.message_trials,
        s.recovery_rate,
        s.attack_success_rate,
        s.detection_rate,
        s.subround_failure_rate,
        s.mi_bits,
        s.mi_bias_bits,
        s.mi_view_bits,
        s.mi_view_bias_bits,
        s.seed
    )
}

/// Pulls `key=value` out of a report's summary lines.
pub fn summary_value(report: &str, key: &str) -> Option<String> {
    let prefix = format!("summary {key}=");
    report
        .lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .map(str::to_string)
}
