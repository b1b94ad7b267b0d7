use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use mirrorsim_cli::config::{Experiment, ExperimentConfig, RawOptions};
use mirrorsim_cli::report::write_report;
use mirrorsim_cli::{experiments, sim};

#[derive(Parser)]
#[command(name = "mirrorsim", version, about = "Current-mirror THD and mismatch experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (freq-thd, length-thd, dc-length, dc-ron) or `all`.
    Run(Box<RunArgs>),
    /// Run the analyses listed in a netlist.
    Sim {
        netlist: PathBuf,
        /// Directory for transient waveform CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    experiment: String,
    #[arg(long)]
    netlist: Option<String>,
    /// Memristor-free netlist; by default the memristors are shorted.
    #[arg(long)]
    baseline: Option<String>,
    /// Frequencies (Hz), comma separated or start:stop:step.
    #[arg(long, allow_hyphen_values = true)]
    freqs: Option<String>,
    /// Effective channel lengths (m) for length-thd.
    #[arg(long, allow_hyphen_values = true)]
    lengths: Option<String>,
    /// Length offsets (m) for dc-length or resistance settings (ohm) for dc-ron.
    #[arg(long, allow_hyphen_values = true)]
    sweep: Option<String>,
    /// Supply voltages (V) applied to the supply and output sources.
    #[arg(long)]
    supplies: Option<String>,
    #[arg(long)]
    ppp: Option<String>,
    #[arg(long)]
    periods: Option<String>,
    #[arg(long)]
    harmonics: Option<String>,
    /// THD observable, V(node) or I(device); defaults to the output source current.
    #[arg(long)]
    observable: Option<String>,
    #[arg(long)]
    supply_source: Option<String>,
    #[arg(long)]
    output_source: Option<String>,
    /// Parameter override DEVICE.PARAM=value; repeatable.
    #[arg(long = "set", value_name = "DEVICE.PARAM=VALUE")]
    set: Vec<String>,
    /// key = value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<String>,
}

impl RunArgs {
    fn raw(&self) -> RawOptions {
        RawOptions {
            netlist: self.netlist.clone(),
            baseline: self.baseline.clone(),
            freqs: self.freqs.clone(),
            lengths: self.lengths.clone(),
            sweep: self.sweep.clone(),
            supplies: self.supplies.clone(),
            ppp: self.ppp.clone(),
            periods: self.periods.clone(),
            harmonics: self.harmonics.clone(),
            observable: self.observable.clone(),
            supply_source: self.supply_source.clone(),
            output_source: self.output_source.clone(),
            set: self.set.clone(),
            out: self.out.clone(),
        }
    }
}

fn run(args: &RunArgs) -> Result<()> {
    let file = match &args.config {
        Some(p) => RawOptions::from_file(p)?,
        None => RawOptions::default(),
    };
    let cfg = ExperimentConfig::from_raw(&args.raw().over(file))?;
    let which: Vec<Experiment> = if args.experiment.eq_ignore_ascii_case("all") {
        Experiment::ALL.to_vec()
    } else {
        vec![args.experiment.parse()?]
    };
    let timestamp = chrono::Utc::now().to_rfc3339();
    for e in which {
        let started = std::time::Instant::now();
        let report = experiments::run(&cfg, e)?;
        let files = write_report(&report, &cfg.out_dir, &timestamp)?;
        println!("{e}: {} files in {:.2} s", files.len(), started.elapsed().as_secs_f64());
        for f in &report.fits {
            println!(
                "  {} {} V {}: slope {:.6e} {} (r^2 = {:.6})",
                f.variant, f.supply_v, f.group, f.slope_display, f.display_unit, f.fit.r_squared
            );
        }
    }
    Ok(())
}

fn simulate(netlist: &PathBuf, out: Option<&PathBuf>) -> Result<()> {
    let text = std::fs::read_to_string(netlist).with_context(|| format!("reading {}", netlist.display()))?;
    let (summary, waves) = sim::simulate_text(&text)?;
    print!("{summary}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (k, w) in waves.iter().enumerate() {
            let path = dir.join(format!("tran{k}.csv"));
            std::fs::write(&path, sim::waveform_csv(w)?).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Sim { netlist, out } => simulate(netlist, out.as_ref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            for cause in e.chain().skip(1) {
                eprintln!("  caused by: {cause}");
            }
            ExitCode::FAILURE
        }
    }
}
