//! `qss`: seeded Monte-Carlo runs, oracle verification and the swap table.
//!
//! Exit codes: 0 on success, 1 when an invariant check or the simulation
//! itself fails, 2 on a configuration error.

pub mod config;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qss_core::adversary::AdversaryStrategy;
use qss_core::protocol::trial_rng;
use qss_core::stats::{run_experiment, summarize, SummaryStats, TrialRecord};
use qss_core::verify::{check_dense_coding, check_identities, check_swap_table, swap_table};

use config::{load_config, resolve, Overrides, RunSettings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl From<qss_core::Error> for CliError {
    fn from(e: qss_core::Error) -> Self {
        match e {
            qss_core::Error::Input(m) => CliError::Config(m),
            other => CliError::Simulation(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qss", about = "Quantum secret sharing simulation lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a seeded Monte-Carlo experiment and write a report.
    Run(Box<RunArgs>),
    /// Check the label algebra against the statevector oracle.
    Verify(VerifyArgs),
    /// Print the 64-row swap table as CSV.
    Table,
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// zhang-man or improved
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub agents: Option<usize>,
    /// none, collusion or intercept-resend
    #[arg(long)]
    pub adversary: Option<String>,
    /// Colluding agents as i,j
    #[arg(long)]
    pub colluders: Option<String>,
    /// Channel tapped by intercept-resend
    #[arg(long)]
    pub channel: Option<usize>,
    /// Colluders' fake announcements: canonical or randomized
    #[arg(long)]
    pub fakes: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "p-detect")]
    pub p_detect: Option<f64>,
    /// Report file; stdout if absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the summary as CSV
    #[arg(long = "summary-csv")]
    pub summary_csv: Option<PathBuf>,
    /// key = value file; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            protocol: self.protocol.clone(),
            agents: self.agents,
            adversary: self.adversary.clone(),
            colluders: self.colluders.clone(),
            channel: self.channel,
            fakes: self.fakes.clone(),
            trials: self.trials,
            seed: self.seed,
            p_detect: self.p_detect,
            out: self.out.clone(),
            summary_csv: self.summary_csv.clone(),
        }
    }

    pub fn settings(&self) -> Result<RunSettings, CliError> {
        let base = match &self.config {
            Some(path) => load_config(path)?,
            None => Overrides::default(),
        };
        resolve(base.merge(self.overrides()))
    }
}

#[derive(Debug, Args, Default)]
pub struct VerifyArgs {
    #[arg(long = "swap-table")]
    pub swap_table: bool,
    #[arg(long)]
    pub identities: bool,
    #[arg(long = "dense-coding")]
    pub dense_coding: bool,
    /// Samples per input pair for the swap-table frequencies
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// A finished experiment.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub settings: RunSettings,
    pub records: Vec<TrialRecord>,
    pub summary: SummaryStats,
    pub report: String,
}

fn in_unit(name: &str, x: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(CliError::Invariant(format!(
            "{name} = {x} is outside [0,1]"
        )))
    }
}

pub fn check_invariants(
    settings: &RunSettings,
    records: &[TrialRecord],
    s: &SummaryStats,
) -> Result<(), CliError> {
    if records.len() as u64 != s.trials
        || s.trials != settings.config.trials
        || s.message_trials > s.trials
    {
        return Err(CliError::Invariant(format!(
            "{} records, {} trials, {} message trials",
            records.len(),
            s.trials,
            s.message_trials
        )));
    }
    in_unit("recovery_rate", s.recovery_rate)?;
    in_unit("attack_success_rate", s.attack_success_rate)?;
    in_unit("detection_rate", s.detection_rate)?;
    in_unit("subround_failure_rate", s.subround_failure_rate)?;
    for (name, mi) in [("mi_bits", s.mi_bits), ("mi_view_bits", s.mi_view_bits)] {
        if !(0.0..=2.0 + 1e-9).contains(&mi) {
            return Err(CliError::Invariant(format!(
                "{name} = {mi} is outside [0,2]"
            )));
        }
    }
    if summarize(records, s.seed) != *s {
        return Err(CliError::Invariant(
            "summary disagrees with the per-trial records".into(),
        ));
    }
    if settings.strategy == AdversaryStrategy::Honest {
        if s.message_trials > 0 && s.recovery_rate != 1.0 {
            return Err(CliError::Invariant(format!(
                "honest recovery rate {}",
                s.recovery_rate
            )));
        }
        if s.detection_rate != 0.0 {
            return Err(CliError::Invariant(format!(
                "honest detection rate {}",
                s.detection_rate
            )));
        }
    }
    Ok(())
}

pub fn execute_run(settings: RunSettings) -> Result<RunOutput, CliError> {
    let exp = run_experiment(&settings.config, &settings.strategy)?;
    check_invariants(&settings, &exp.records, &exp.summary)?;
    let report = report::render(&settings, &exp.records, &exp.summary);
    if let Some(path) = &settings.out {
        std::fs::write(path, &report)?;
    }
    if let Some(path) = &settings.summary_csv {
        std::fs::write(path, report::summary_csv(&settings, &exp.summary))?;
    }
    Ok(RunOutput {
        settings,
        records: exp.records,
        summary: exp.summary,
        report,
    })
}

/// One line of the verification table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub fn verify(args: &VerifyArgs) -> Result<Vec<CheckLine>, CliError> {
    let all = !(args.swap_table || args.identities || args.dense_coding);
    let mut lines = Vec::new();
    if all || args.swap_table {
        let mut rng = trial_rng(args.seed, 0);
        let cases = check_swap_table(args.samples, &mut rng)?;
        let labels = cases.iter().filter(|c| c.label_matches()).count();
        let freqs = cases.iter().filter(|c| c.frequency_ok(0.022)).count();
        for c in cases
            .iter()
            .filter(|c| !c.label_matches() || !c.frequency_ok(0.022))
        {
            lines.push(CheckLine {
                name: format!("swap {} {} {}", c.l_ab, c.l_cd, c.measured),
                passed: false,
                detail: format!(
                    "predicted {} oracle {:?} frequency {:.4}",
                    c.predicted,
                    c.oracle.map(|l| l.to_string()),
                    c.frequency
                ),
            });
        }
        lines.push(CheckLine {
            name: "swap-table".into(),
            passed: labels == cases.len() && freqs == cases.len(),
            detail: format!(
                "{labels}/{} labels, {freqs}/{} frequencies within 0.022",
                cases.len(),
                cases.len()
            ),
        });
    }
    if all || args.identities {
        let checks = check_identities()?;
        let mut terms = 0;
        for c in &checks {
            terms += c.nonzero_terms(1e-12);
            lines.push(CheckLine {
                name: format!("identity {}", c.identity.name),
                passed: c.passed(1e-12),
                detail: format!("{} nonzero terms", c.nonzero_terms(1e-12)),
            });
        }
        let ok = checks.iter().filter(|c| c.passed(1e-12)).count();
        lines.push(CheckLine {
            name: "identities".into(),
            passed: ok == checks.len(),
            detail: format!(
                "{ok}/{} identities, {terms} nonzero terms of magnitude 0.5",
                checks.len()
            ),
        });
    }
    if all || args.dense_coding {
        let d = check_dense_coding()?;
        let labels: Vec<String> = d.labels.iter().map(|l| l.to_string()).collect();
        lines.push(CheckLine {
            name: "dense-coding".into(),
            passed: d.passed(),
            detail: format!(
                "{}/{} orthogonal pairs, labels {}",
                d.orthogonal_pairs(),
                d.overlaps.len(),
                labels.join(" ")
            ),
        });
    }
    Ok(lines)
}

pub fn table_csv() -> String {
    let mut out = String::from("l_ab,l_cd,l_meas,l_out\n");
    for [a, b, m, o] in swap_table() {
        out.push_str(&format!("{a},{b},{m},{o}\n"));
    }
    out
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Run(args) => {
            let settings = args.settings()?;
            let to_file = settings.out.is_some();
            let out = execute_run(settings)?;
            if to_file {
                stdout.write_all(report::summary_block(&out.summary).as_bytes())?;
            } else {
                stdout.write_all(out.report.as_bytes())?;
            }
            Ok(0)
        }
        Command::Verify(args) => {
            let lines = verify(&args)?;
            let width = lines.iter().map(|l| l.name.len()).max().unwrap_or(0);
            for l in &lines {
                let result = if l.passed { "pass" } else { "FAIL" };
                writeln!(stdout, "{:width$}  {result}  {}", l.name, l.detail)?;
            }
            Ok(if lines.iter().all(|l| l.passed) { 0 } else { 1 })
        }
        Command::Table => {
            stdout.write_all(table_csv().as_bytes())?;
            Ok(0)
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "qss: {e}");
            e.exit_code()
        }
    }
}
