use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use bdris::harness::{self, parse_list, parse_range, preset, validate, SweepPlan, PRESET_NAMES};
use bdris::impairment::{max_affected, write_audit_csv, ImpairmentKind, ImpairmentSpec};
use bdris::system::{ConfigFile, NoiseMode};
use bdris::training::{dump_design, realizability_report};
use bdris::{build_training, NoiseSpec, Result, SystemConfig};

#[derive(Parser)]
#[command(
    name = "bdris",
    version,
    about = "BD-RIS channel estimation under hardware impairments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// NMSE versus SNR for each impairment kind and group size.
    SweepSnr {
        #[command(flatten)]
        shared: Shared,
        /// Share of each kind's maximum affected impedances.
        #[arg(long)]
        fraction: Option<f64>,
        /// SNR axis as start:step:stop (dB, inclusive) or a single value.
        #[arg(long, default_value = "-10:2:30")]
        snr: String,
    },
    /// NMSE versus affected fraction at a fixed SNR.
    SweepFraction {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        snr_db: Option<f64>,
        /// Fraction axis as start:step:stop (inclusive).
        #[arg(long, default_value = "0:0.05:0.5")]
        fractions: String,
    },
    /// Named experiments. All use N=32, M_T=2, M_R=4, K=100, seed 42 and
    /// snr-normalized noise:
    ///   fig3: Type 1 at 20%, SNR -10:2:30 dB, nbar {1,2,4,8,32};
    ///   fig4: ideal vs Type 2 at 20%, same axes;
    ///   fig5: ideal vs Type 3 at 20%, same axes;
    ///   fig6: Types 1, 2, 3 at 20%, same axes;
    ///   fig7: Types 1, 2, 3 at 10 dB, fraction 0:0.05:0.5, nbar 4.
    #[command(verbatim_doc_comment)]
    Preset {
        #[arg(long, value_parser = PRESET_NAMES)]
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Runs a single trial and reports it.
    Trial {
        /// Print full diagnostics as JSON.
        #[arg(long)]
        dump: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "type3")]
        kind: ImpairmentKind,
        #[arg(long)]
        nbar: Option<usize>,
        #[arg(long)]
        fraction: Option<f64>,
        /// SNR in dB; "inf" disables noise.
        #[arg(long)]
        snr_db: Option<f64>,
        #[arg(long, default_value_t = 0)]
        index: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        noise_mode: Option<NoiseMode>,
        /// Also score per-group channels recovered by rank-1 decoupling.
        #[arg(long)]
        decouple: bool,
        /// Write affected impedance positions as CSV.
        #[arg(long)]
        audit_csv: Option<PathBuf>,
    },
    /// Runs the self-check suite; exit status reflects the verdict.
    Validate,
    /// Writes X, S' and Omega of a training design as CSV dumps.
    DumpTraining {
        #[arg(long, default_value_t = 4)]
        nbar: usize,
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m_t: usize,
        #[arg(long)]
        out_dir: PathBuf,
        /// Also print per-slot unitarity/symmetry residual summary.
        #[arg(long)]
        realizability: bool,
    },
}

#[derive(Args)]
struct Shared {
    /// JSON configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated subset of ideal,type1,type2,type3.
    #[arg(long, default_value = "ideal,type1,type2,type3")]
    kinds: String,
    /// Comma-separated group sizes; each must divide n.
    #[arg(long)]
    nbar: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    noise_mode: Option<NoiseMode>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m_t: Option<usize>,
    #[arg(long)]
    m_r: Option<usize>,
    /// Lower edge of the amplitude distortion draw.
    #[arg(long, default_value_t = 0.0)]
    amp_min: f64,
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    path.map_or_else(|| Ok(ConfigFile::default()), ConfigFile::load)
}

impl Shared {
    fn plan(&self, snrs_db: Vec<f64>, fractions: Vec<f64>) -> Result<(SweepPlan, &Path, usize)> {
        let file = load_config(self.config.as_deref())?;
        let nbars = match &self.nbar {
            Some(list) => parse_list(list)?,
            None => file.nbar.map_or_else(|| vec![1, 2, 4, 8, 32], |n| vec![n]),
        };
        let plan = SweepPlan {
            m_t: self.m_t.or(file.m_t).unwrap_or(2),
            m_r: self.m_r.or(file.m_r).unwrap_or(4),
            n: self.n.or(file.n).unwrap_or(32),
            nbars,
            kinds: parse_list(&self.kinds)?,
            snrs_db,
            fractions,
            trials: self.trials.or(file.trials).unwrap_or(100),
            master_seed: self.seed.or(file.master_seed).unwrap_or(bdris::system::DEFAULT_SEED),
            noise_mode: self.noise_mode.or(file.noise_mode).unwrap_or_default(),
            amp_min: self.amp_min,
        };
        Ok((plan, &self.out, self.workers))
    }

    fn file(&self) -> Result<ConfigFile> {
        load_config(self.config.as_deref())
    }
}

fn sweep(plan: &SweepPlan, out: &Path, workers: usize) -> Result<()> {
    let records = harness::run_sweep(plan, workers)?;
    harness::write_csv(&records, out)?;
    eprintln!(
        "{} records ({} trials) written to {}",
        records.len(),
        plan.total_trials(),
        out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::SweepSnr { shared, fraction, snr } => {
            let fraction = fraction.or(shared.file()?.fraction).unwrap_or(0.2);
            let (plan, out, workers) = shared.plan(parse_range(&snr)?, vec![fraction])?;
            sweep(&plan, out, workers)?;
        }
        Command::SweepFraction {
            shared,
            snr_db,
            fractions,
        } => {
            let snr = snr_db.or(shared.file()?.snr_db).unwrap_or(10.0);
            let (plan, out, workers) = shared.plan(vec![snr], parse_range(&fractions)?)?;
            sweep(&plan, out, workers)?;
        }
        Command::Preset {
            name,
            out,
            trials,
            seed,
            workers,
        } => {
            let mut p = preset(&name)?;
            if let Some(k) = trials {
                p.plan.trials = k;
            }
            if let Some(s) = seed {
                p.plan.master_seed = s;
            }
            eprintln!("{}: {}", p.name, p.description);
            sweep(&p.plan, &out, workers)?;
        }
        Command::Trial {
            dump,
            config,
            kind,
            nbar,
            fraction,
            snr_db,
            index,
            seed,
            noise_mode,
            decouple,
            audit_csv,
        } => {
            let file = load_config(config.as_deref())?;
            let mut cfg = file.to_system_config()?;
            if let Some(nbar) = nbar {
                cfg = cfg.with_nbar(nbar)?;
            }
            if let Some(seed) = seed {
                cfg = cfg.with_seed(seed);
            }
            if let Some(mode) = noise_mode {
                cfg = cfg.with_noise_mode(mode);
            }
            let spec = ImpairmentSpec::new(kind, fraction.or(file.fraction).unwrap_or(0.2))?;
            let noise = NoiseSpec::new(snr_db.or(file.snr_db).unwrap_or(10.0), cfg.noise_mode);
            let design = build_training(&cfg)?;
            let o = harness::run_trial(&cfg, &design, &spec, noise, index, decouple)?;
            if let Some(path) = &audit_csv {
                write_audit_csv(path, index, &o.impairment)?;
            }
            if dump {
                let report = json!({
                    "trial_index": index,
                    "config": &cfg,
                    "impairment_type": kind,
                    "fraction": spec.fraction,
                    "snr_db": noise.snr_db,
                    "noise_mode": cfg.noise_mode,
                    "shapes": {
                        "H": [o.channels.h.rows(), o.channels.h.cols()],
                        "G": [o.channels.g.rows(), o.channels.g.cols()],
                        "X": [design.x().rows(), design.x().cols()],
                        "S_prime": [design.s_prime().rows(), design.s_prime().cols()],
                        "Omega": [design.omega().rows(), design.omega().cols()],
                        "y": [cfg.m_r * cfg.t],
                        "c": [o.channel.len()],
                    },
                    "orthogonality_residual": design.orthogonality_residual(),
                    "sigma2": o.sigma2,
                    "max_affected": max_affected(kind, &cfg),
                    "affected_count": o.impairment.affected_count(),
                    "affected": o.impairment.affected(),
                    "nmse": o.nmse,
                    "decoupled_nmse": o.decoupled.as_ref().map(|groups| {
                        groups.iter().map(|(h, g)| json!({"h": h, "g": g})).collect::<Vec<_>>()
                    }),
                });
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!(
                    "trial {index}: {kind} nbar={} fraction={} snr_db={} affected={}/{} nmse={:e}",
                    cfg.nbar,
                    spec.fraction,
                    noise.snr_db,
                    o.impairment.affected_count(),
                    max_affected(kind, &cfg),
                    o.nmse
                );
            }
        }
        Command::Validate => {
            let checks = validate::run_all();
            let mut ok = true;
            for c in &checks {
                ok &= c.passed;
                println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("{}", if ok { "all checks passed" } else { "validation FAILED" });
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
        Command::DumpTraining {
            nbar,
            n,
            m_t,
            out_dir,
            realizability,
        } => {
            let cfg = SystemConfig::new(m_t, 1, n, nbar)?;
            let design = build_training(&cfg)?;
            dump_design(&design, &out_dir)?;
            println!(
                "X {}x{}, S' {}x{}, Omega {}x{} written to {} (orthogonality residual {:e})",
                design.x().rows(),
                design.x().cols(),
                design.s_prime().rows(),
                design.s_prime().cols(),
                design.omega().rows(),
                design.omega().cols(),
                out_dir.display(),
                design.orthogonality_residual()
            );
            if realizability {
                let report = realizability_report(&design);
                let worst_u = report.iter().map(|r| r.unitarity).fold(0.0, f64::max);
                let worst_s = report.iter().map(|r| r.symmetry).fold(0.0, f64::max);
                println!(
                    "{} slot/group pairs: max unitarity residual {worst_u:e}, max symmetry residual {worst_s:e}",
                    report.len()
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
