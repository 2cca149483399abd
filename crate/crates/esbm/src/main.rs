//! Command-line front end: assembles a scenario from a preset, a config
//! file, or flags, runs it, and writes the CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use esbm::scenario::{self, Scenario};
use esbm::Error;

/// Open-system oscillator sweeps with pulsed decoupling.
///
/// A run starts from `--preset NAME` or `--config FILE` (or the built-in
/// default scenario) and any other flags then override the resulting
/// fields. Curve-level flags apply to every curve. The CSV goes to stdout
/// unless the scenario names an output file.
#[derive(Debug, Parser)]
#[command(name = "esbm", version, disable_help_subcommand = true)]
struct Cli {
    /// Built-in figure scenario: fig1a, fig1b, fig2, fig3a, fig3b, fig4.
    #[arg(long)]
    preset: Option<String>,

    /// Scenario file, flat `key = value` lines or JSON.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Named environment for all curves: ohmic, superohmic, oneoverf.
    #[arg(long)]
    env: Option<String>,

    /// Spectral exponent nu for all curves.
    #[arg(long)]
    exponent: Option<f64>,

    /// Coupling strength gamma for all curves.
    #[arg(long)]
    gamma: Option<f64>,

    /// Ultraviolet cutoff in GHz for all curves.
    #[arg(long = "uv-cutoff")]
    uv_cutoff: Option<f64>,

    /// Infrared cutoff in GHz for all curves.
    #[arg(long = "ir-cutoff")]
    ir_cutoff: Option<f64>,

    /// Bath temperature in millikelvin for all curves.
    #[arg(long = "temp-mk")]
    temp_mk: Option<f64>,

    /// Oscillator frequency in GHz for all curves.
    #[arg(long)]
    omega: Option<f64>,

    /// Oscillator mass for all curves.
    #[arg(long)]
    mass: Option<f64>,

    /// Evolution window in ns.
    #[arg(long)]
    tfinal: Option<f64>,

    /// Grid steps across the window.
    #[arg(long)]
    steps: Option<usize>,

    /// Pulse interval in ns for all curves; 0 disables pulsing.
    #[arg(long = "pulse-interval")]
    pulse_interval: Option<f64>,

    /// Kick angle in radians for all curves.
    #[arg(long = "kick-angle")]
    kick_angle: Option<f64>,

    /// Sampled bath modes per curve; 0 uses continuum kernels.
    #[arg(long)]
    nbath: Option<usize>,

    /// Constant field strength V for all curves.
    #[arg(long)]
    field: Option<f64>,

    /// Reported quantity: uncertainty, populations, coherence, pauli,
    /// leakage, decay_factor.
    #[arg(long)]
    observable: Option<String>,

    /// Sweep axis: time, pulse-interval, field-strength, none.
    #[arg(long)]
    sweep: Option<String>,

    /// Number of sweep points.
    #[arg(long)]
    points: Option<usize>,

    /// Output CSV path; empty prints to stdout.
    #[arg(long)]
    out: Option<String>,

    /// Initial qubit state: ground, excited, superposition.
    #[arg(long)]
    initial: Option<String>,

    /// Print the assembled scenario instead of running it.
    #[arg(long = "print-config", default_value_t = false)]
    print_config: bool,
}

fn build_scenario(cli: &Cli) -> Result<Scenario, Error> {
    let mut sc = match (&cli.preset, &cli.config) {
        (Some(_), Some(_)) => {
            return Err(Error::Config {
                key: "config".to_string(),
                reason: "--preset and --config are mutually exclusive".to_string(),
            })
        }
        (Some(name), None) => scenario::figure_presets(name)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            scenario::parse_config(&text)?
        }
        (None, None) => Scenario::default(),
    };

    if let Some(v) = &cli.observable {
        sc.observable = v.parse()?;
    }
    if let Some(v) = &cli.sweep {
        sc.sweep = v.parse()?;
    }
    if let Some(v) = &cli.initial {
        sc.initial = v.parse()?;
    }
    if let Some(v) = cli.tfinal {
        sc.tfinal = v;
    }
    if let Some(v) = cli.steps {
        sc.steps = v;
    }
    if let Some(v) = cli.points {
        sc.points = v;
    }
    if let Some(v) = &cli.out {
        sc.out = v.clone();
    }

    if let Some(name) = &cli.env {
        let (label, exponent, ir) = scenario::env_defaults(name)?;
        let single_default = sc.curves.len() == 1 && sc.curves[0].label == "ohmic";
        for c in sc.curves.iter_mut() {
            c.exponent = exponent;
            c.ir_cutoff = ir;
            if single_default {
                c.label = label.to_string();
            }
        }
    }
    for c in sc.curves.iter_mut() {
        if let Some(v) = cli.exponent {
            c.exponent = v;
        }
        if let Some(v) = cli.gamma {
            c.gamma = v;
        }
        if let Some(v) = cli.uv_cutoff {
            c.uv_cutoff = v;
        }
        if let Some(v) = cli.ir_cutoff {
            c.ir_cutoff = v;
        }
        if let Some(v) = cli.temp_mk {
            c.temp_mk = v;
        }
        if let Some(v) = cli.omega {
            c.omega = v;
        }
        if let Some(v) = cli.mass {
            c.mass = v;
        }
        if let Some(v) = cli.field {
            c.field = v;
        }
        if let Some(v) = cli.pulse_interval {
            c.pulse_interval = v;
        }
        if let Some(v) = cli.kick_angle {
            c.kick_angle = v;
        }
        if let Some(v) = cli.nbath {
            c.nbath = v;
        }
    }
    Ok(sc)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let sc = build_scenario(cli)?;
    if cli.print_config {
        print!("{}", scenario::print_config(&sc));
        return Ok(());
    }
    let artifact = scenario::run_scenario(&sc)?;
    for w in &artifact.warnings {
        eprintln!("warning: {w}");
    }
    if sc.out.is_empty() {
        print!("{}", artifact.csv);
    } else {
        std::fs::write(&sc.out, &artifact.csv)
            .map_err(|e| Error::Io(format!("{}: {e}", sc.out)))?;
        eprintln!("wrote {}", sc.out);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
