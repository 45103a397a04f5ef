//! Run settings: defaults, then a `key = value` file, then flags.

use std::path::{Path, PathBuf};

use qss_core::adversary::{AdversaryStrategy, FakeMode};
use qss_core::protocol::{channel_range, ProtocolConfig, ProtocolKind};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub protocol: Option<String>,
    pub agents: Option<usize>,
    pub adversary: Option<String>,
    pub colluders: Option<String>,
    pub channel: Option<usize>,
    pub fakes: Option<String>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub p_detect: Option<f64>,
    pub out: Option<PathBuf>,
    pub summary_csv: Option<PathBuf>,
}

impl Overrides {
    /// Fields set in `other` win.
    pub fn merge(self, other: Overrides) -> Overrides {
        Overrides {
            protocol: other.protocol.or(self.protocol),
            agents: other.agents.or(self.agents),
            adversary: other.adversary.or(self.adversary),
            colluders: other.colluders.or(self.colluders),
            channel: other.channel.or(self.channel),
            fakes: other.fakes.or(self.fakes),
            trials: other.trials.or(self.trials),
            seed: other.seed.or(self.seed),
            p_detect: other.p_detect.or(self.p_detect),
            out: other.out.or(self.out),
            summary_csv: other.summary_csv.or(self.summary_csv),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {value:?}")))
}

/// Parses a config file body. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Overrides, CliError> {
    let mut o = Overrides::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("line {}: expected key = value", lineno + 1))
        })?;
        let (key, value) = (key.trim(), value.trim().to_string());
        match key.replace('-', "_").as_str() {
            "protocol" => o.protocol = Some(value),
            "agents" | "n" => o.agents = Some(parse_num(key, &value)?),
            "adversary" => o.adversary = Some(value),
            "colluders" => o.colluders = Some(value),
            "channel" => o.channel = Some(parse_num(key, &value)?),
            "fakes" => o.fakes = Some(value),
            "trials" => o.trials = Some(parse_num(key, &value)?),
            "seed" => o.seed = Some(parse_num(key, &value)?),
            "p_detect" => o.p_detect = Some(parse_num(key, &value)?),
            "out" => o.out = Some(PathBuf::from(value)),
            "summary_csv" => o.summary_csv = Some(PathBuf::from(value)),
            _ => {
                return Err(CliError::Config(format!(
                    "line {}: unknown key {key:?}",
                    lineno + 1
                )))
            }
        }
    }
    Ok(o)
}

pub fn load_config(path: &Path) -> Result<Overrides, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub config: ProtocolConfig,
    pub strategy: AdversaryStrategy,
    pub out: Option<PathBuf>,
    pub summary_csv: Option<PathBuf>,
}

fn parse_colluders(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("--colluders expects i,j, got {s:?}"));
    let (i, j) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        i.trim().parse().map_err(|_| bad())?,
        j.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn resolve(o: Overrides) -> Result<RunSettings, CliError> {
    let protocol: ProtocolKind = o.protocol.as_deref().unwrap_or("zhang-man").parse()?;
    let mut config = ProtocolConfig::new(protocol, o.agents.unwrap_or(3));
    if let Some(p) = o.p_detect {
        config.p_detect = p;
    }
    if let Some(t) = o.trials {
        config.trials = t;
    }
    if let Some(s) = o.seed {
        config.master_seed = s;
    }
    config.validate()?;

    let fakes = match o.fakes.as_deref().unwrap_or("canonical") {
        "canonical" => FakeMode::Canonical,
        "randomized" => FakeMode::Randomized,
        other => return Err(CliError::Config(format!("unknown fake mode {other:?}"))),
    };
    let strategy = match o.adversary.as_deref().unwrap_or("none") {
        "none" => AdversaryStrategy::Honest,
        "collusion" => {
            let (i, j) = parse_colluders(o.colluders.as_deref().unwrap_or("1,3"))?;
            AdversaryStrategy::Collusion { i, j, fakes }
        }
        "intercept-resend" => {
            let channel = o
                .channel
                .ok_or_else(|| CliError::Config("intercept-resend needs --channel".into()))?;
            AdversaryStrategy::InterceptResend { channel }
        }
        other => return Err(CliError::Config(format!("unknown adversary {other:?}"))),
    };
    strategy.validate(config.n_agents, channel_range(&config))?;
    Ok(RunSettings {
        config,
        strategy,
        out: o.out,
        summary_csv: o.summary_csv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let s = resolve(Overrides::default()).unwrap();
        assert_eq!(s.config.protocol, ProtocolKind::ZhangMan);
        assert_eq!(s.config.n_agents, 3);
        assert_eq!(s.config.p_detect, 0.25);
        assert_eq!(s.config.trials, 10_000);
        assert_eq!(s.strategy, AdversaryStrategy::Honest);
    }

    #[test]
    fn file_then_flags() {
        let file = parse_config(
            "# lab\nprotocol = improved\ntrials=50\np-detect = 0.5\n\nseed=9 # trailing\n",
        )
        .unwrap();
        let flags = Overrides {
            trials: Some(7),
            ..Default::default()
        };
        let s = resolve(file.merge(flags)).unwrap();
        assert_eq!(s.config.protocol, ProtocolKind::Improved);
        assert_eq!(s.config.trials, 7);
        assert_eq!(s.config.p_detect, 0.5);
        assert_eq!(s.config.master_seed, 9);
    }

    #[test]
    fn config_errors() {
        assert!(parse_config("protocol improved").is_err());
        assert!(parse_config("colour = blue").is_err());
        assert!(parse_config("trials = many").is_err());
        let bad = |o: Overrides| matches!(resolve(o), Err(CliError::Config(_)));
        assert!(bad(Overrides {
            protocol: Some("bb84".into()),
            ..Default::default()
        }));
        assert!(bad(Overrides {
            adversary: Some("mallory".into()),
            ..Default::default()
        }));
        assert!(bad(Overrides {
            adversary: Some("collusion".into()),
            colluders: Some("3,1".into()),
            ..Default::default()
        }));
        assert!(bad(Overrides {
            adversary: Some("intercept-resend".into()),
            ..Default::default()
        }));
        assert!(bad(Overrides {
            agents: Some(9),
            ..Default::default()
        }));
    }
}
