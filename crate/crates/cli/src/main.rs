//! `fso-linksim`: run, sweep and budget free-space optical link scenarios.

use std::fs::File;
use std::io::{self, BufWriter, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fso_core::channel::Weather;
use fso_core::export::{write_eye_csv, write_sweep_csv};
use fso_core::scenario::{
    self, link_budget, run_link_detailed, sweep_values, ScenarioConfig, SeedMode, SweepParam,
};
use fso_core::Error;

#[derive(Debug, Parser)]
#[command(
    name = "fso-linksim",
    version,
    about = "Free-space optical link simulator"
)]
struct Cli {
    #[command(flatten)]
    scenario: ScenarioArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Weather preset for the channel.
    #[arg(long, global = true, value_enum)]
    preset: Option<PresetArg>,

    /// TOML scenario file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Receiver noise seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Disable receiver noise.
    #[arg(long, global = true)]
    no_noise: bool,

    /// Attenuation coefficient override, dB/km.
    #[arg(long, global = true, value_name = "DB_PER_KM")]
    gamma: Option<f64>,

    /// Link range override, km.
    #[arg(long = "range-km", global = true, value_name = "KM")]
    range_km: Option<f64>,

    /// Laser power override, dBm.
    #[arg(
        long = "power-dbm",
        global = true,
        value_name = "DBM",
        allow_negative_numbers = true
    )]
    power_dbm: Option<f64>,

    /// Write the JSON result to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    Rain,
    Fog,
    Clear,
}

impl From<PresetArg> for Weather {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Rain => Weather::Rain,
            PresetArg::Fog => Weather::Fog,
            PresetArg::Clear => Weather::Clear,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one end-to-end simulation and print the JSON report.
    Simulate {
        /// Write eye traces as CSV (trace_id,phase_ui,current_a).
        #[arg(long, value_name = "FILE")]
        eye_csv: Option<PathBuf>,

        /// Include wall-clock timing in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Sweep one parameter and print a CSV table.
    Sweep {
        #[arg(long, value_parser = parse_sweep_param)]
        param: SweepParam,

        #[arg(long, allow_negative_numbers = true)]
        from: f64,

        #[arg(long, allow_negative_numbers = true)]
        to: f64,

        #[arg(long)]
        steps: usize,

        /// Give each point its own derived noise seed.
        #[arg(long)]
        per_point_seeds: bool,

        /// Write the CSV table to FILE instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Print the loss breakdown and link margins.
    Budget {
        /// Drop beam-spread loss (zero divergence, receiver at least as wide as transmitter).
        #[arg(long)]
        no_geometric: bool,

        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Find the longest range that still reaches a Q target.
    MaxRange {
        #[arg(long)]
        q_target: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

fn parse_sweep_param(s: &str) -> Result<SweepParam, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Runtime(format!("cannot write {}: {e}", path.display()))
}

fn resolve_config(args: &ScenarioArgs) -> Result<ScenarioConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => ScenarioConfig::load(path).map_err(|e| Failure::Config(e.to_string()))?,
        None => ScenarioConfig::default(),
    };
    if let Some(p) = args.preset {
        config.channel = scenario::ChannelSetting::from_preset(p.into());
    }
    if let Some(g) = args.gamma {
        config.channel.params.gamma_db_per_km = g;
    }
    if let Some(r) = args.range_km {
        config.channel.params.range_km = r;
    }
    if let Some(p) = args.power_dbm {
        config.laser.power_dbm = p;
    }
    if let Some(seed) = args.seed {
        config.noise.rng_seed = seed;
    }
    if args.no_noise {
        config.noise.enabled = false;
    }
    config
        .validate()
        .map_err(|e| Failure::Config(e.to_string()))?;
    Ok(config)
}

/// Writes `text` to `path`, or stdout when no path is given.
fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(e.to_string())),
    }
}

fn json_text<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Four significant digits for human-readable tables.
fn sig4(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&magnitude) {
        return format!("{x:.3e}");
    }
    let decimals = (3 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn styled(text: &str, code: &str, stream_is_tty: bool) -> String {
    if stream_is_tty && std::env::var_os("FSO_LINKSIM_NO_COLOR").is_none() {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut config = resolve_config(&cli.scenario)?;
    let json_path = cli.scenario.json.as_deref();
    match cli.command {
        Command::Simulate { eye_csv, timing } => {
            let run = run_link_detailed(&config)?;
            if let Some(path) = &eye_csv {
                let file = File::create(path).map_err(|e| io_failure(path, e))?;
                write_eye_csv(&run.eye, BufWriter::new(file))?;
            }
            let mut report = run.report;
            if !timing {
                report.timing_s = None;
            }
            emit(json_path, &report.to_json()?)
        }
        Command::Sweep {
            param,
            from,
            to,
            steps,
            per_point_seeds,
            out,
        } => {
            let values =
                sweep_values(from, to, steps).map_err(|e| Failure::Config(e.to_string()))?;
            let mode = if per_point_seeds {
                SeedMode::PerPoint
            } else {
                SeedMode::Common
            };
            let rows = scenario::sweep(&config, param, &values, mode)?;
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            let text = String::from_utf8(buf).map_err(|e| Failure::Runtime(e.to_string()))?;
            emit(out.as_deref(), &text)?;
            if let Some(path) = json_path {
                emit(Some(path), &json_text(&rows)?)?;
            }
            Ok(())
        }
        Command::Budget {
            no_geometric,
            format,
        } => {
            if no_geometric {
                let p = &mut config.channel.params;
                p.divergence_rad = 0.0;
                p.rx_aperture_m = p.rx_aperture_m.max(p.tx_aperture_m);
            }
            let budget = link_budget(&config)?;
            if format == Format::Json || json_path.is_some() {
                emit(json_path, &json_text(&budget)?)?;
            }
            if format == Format::Table {
                let tty = io::stdout().is_terminal();
                let paper = budget
                    .budget
                    .paper_link_margin
                    .map_or_else(|| "undefined".to_string(), sig4);
                let rows = [
                    ("atmospheric_db", sig4(budget.losses.atmospheric_db)),
                    ("geometric_db", sig4(budget.losses.geometric_db)),
                    ("extra_db", sig4(budget.losses.extra_db)),
                    ("total_db", sig4(budget.losses.total_db)),
                    ("transmittance", sig4(budget.losses.transmittance)),
                    ("modulation_penalty_db", sig4(budget.modulation_penalty_db)),
                    ("received_power_dbm", sig4(budget.received_power_dbm)),
                    ("sensitivity_dbm", sig4(budget.budget.sensitivity_dbm)),
                    ("link_margin_db", sig4(budget.budget.link_margin_db)),
                    ("paper_link_margin (non-physical)", paper),
                ];
                let mut out = String::new();
                out.push_str(&styled(
                    &format!("{:<34} {}", "quantity", "value"),
                    "1",
                    tty,
                ));
                out.push('\n');
                for (name, value) in rows {
                    out.push_str(&format!("{name:<34} {value}\n"));
                }
                emit(None, &out)?;
            }
            Ok(())
        }
        Command::MaxRange { q_target } => {
            let range = scenario::max_range_for_q(&config, q_target)?;
            match json_path {
                Some(path) => emit(
                    Some(path),
                    &json_text(&serde_json::json!({
                        "q_target": q_target,
                        "max_range_km": range,
                    }))?,
                ),
                None => emit(None, &format!("{range}\n")),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (message, code) = match failure {
                Failure::Config(m) => (m, 1),
                Failure::Runtime(m) => (m, 2),
            };
            let prefix = styled("error:", "31;1", io::stderr().is_terminal());
            eprintln!("{prefix} {message}");
            ExitCode::from(code)
        }
    }
}
