//! Command-line front end: run the bundled scenarios or a custom sweep, and
//! export single instances as LP files for external MILP solvers.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fd_isac_core::channels::{rician_channel, SiUncertainty};
use fd_isac_core::config::{parse_config, ScenarioConfig, ScenarioId};
use fd_isac_core::milp::{build_milp, export_lp, precompute};
use fd_isac_core::runner::{csv_string, run, run_nonrobust_comparison, sweep_cells, SolveMode};

#[derive(Parser)]
#[command(
    name = "fd-isac",
    about = "Joint timeslot allocation and beam selection for a full-duplex sensing/communication base station"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a bundled scenario sweep and emit CSV.
    Scenario {
        /// One of: i, ii, iii, iv
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        realizations: Option<usize>,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep described by a flat key = value config file.
    Custom {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the MILP for the first sweep cell of a config as a CPLEX-LP
    /// text file (channel drawn from realization 0 of the master seed).
    ExportLp {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(path: &PathBuf) -> anyhow::Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    Ok(parse_config(&text)?)
}

fn apply_overrides(cfg: &mut ScenarioConfig, seed: Option<u64>, realizations: Option<usize>) {
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(realizations) = realizations {
        cfg.realizations = realizations;
    }
}

fn write_output(text: &str, out: Option<PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run_and_render(cfg: &ScenarioConfig) -> anyhow::Result<String> {
    let mut rows = run(cfg)?;
    // scenario iii carries the paper's robust-vs-blind reliability
    // comparison, so emit both solver modes
    if cfg.scenario_id == ScenarioId::III {
        rows.extend(run_nonrobust_comparison(cfg)?);
    }
    debug_assert!(rows.iter().all(|r| matches!(r.mode, SolveMode::Robust | SolveMode::SiBlind)));
    Ok(csv_string(&rows))
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Scenario { name, seed, realizations, out } => {
            let id = ScenarioId::parse(&name)?;
            let mut cfg = ScenarioConfig::scenario(id);
            apply_overrides(&mut cfg, seed, realizations);
            let csv = run_and_render(&cfg)?;
            write_output(&csv, out)?;
        }
        Command::Custom { config, seed, realizations, out } => {
            let mut cfg = load_config(&config)?;
            apply_overrides(&mut cfg, seed, realizations);
            let csv = run_and_render(&cfg)?;
            write_output(&csv, out)?;
        }
        Command::ExportLp { config, out, seed } => {
            let mut cfg = load_config(&config)?;
            apply_overrides(&mut cfg, seed, None);
            let cells = sweep_cells(&cfg);
            let cell = cells.first().context("config defines no sweep cells")?;

            let tx_geom = fd_isac_core::beams::ArrayGeometry::half_wavelength(cfg.n_tx);
            let rx_geom = fd_isac_core::beams::ArrayGeometry::half_wavelength(cfg.n_rx)
                .with_axis_offset(cell.array_separation_m);
            let tx_cb = fd_isac_core::beams::build_codebook(
                &tx_geom,
                &fd_isac_core::beams::default_directions(),
                &fd_isac_core::beams::default_tx_beamwidth_map(),
                cfg.tx_power_w,
            )?;
            let rx_cb = fd_isac_core::beams::build_codebook(
                &rx_geom,
                &fd_isac_core::beams::default_directions(),
                &fd_isac_core::beams::default_rx_beamwidth_map(),
                cfg.rx_power_w,
            )?;
            let comm = fd_isac_core::channels::CommChannelParams {
                k_factor: cfg.k_factor,
                los_angle_deg: cfg.los_angle_deg,
                distance_m: cfg.distance_m,
                carrier_ghz: cfg.carrier_ghz,
                noise_power_dbw: cfg.noise_com_dbw,
            };
            let sensing = fd_isac_core::channels::SensingParams {
                target_angle_deg: cell.theta_deg,
                reflection_coeff: cell.reflection_coeff,
                noise_power_dbw: cfg.noise_sen_dbw,
                sinr_threshold: cell.sinr_threshold,
                min_sensing_slots: cell.min_sensing_slots,
            };
            let si = SiUncertainty::new(cell.si_nominal, cell.si_radius)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(0);
            let h = rician_channel(&tx_geom, &comm, &mut rng)?;
            let channels = fd_isac_core::channels::ChannelSet::from_parts(
                h,
                cfg.noise_com_dbw,
                fd_isac_core::channels::sensing_outer(&tx_geom, &rx_geom, cell.theta_deg)?,
                fd_isac_core::channels::si_channel(&tx_geom, &rx_geom, cfg.carrier_ghz)?,
                sensing,
                si,
            )?;
            let coeffs = precompute(&channels, &tx_cb, &rx_cb, cfg.bandwidth_hz, cfg.slot_duration_s)?;
            let model = build_milp(&coeffs, cell.slots, cell.min_sensing_slots)?;
            std::fs::write(&out, export_lp(&model))
                .with_context(|| format!("writing {}", out.display()))?;
            eprintln!(
                "wrote {} ({} binaries, {} continuous, {} rows)",
                out.display(),
                model.n_binary(),
                model.n_continuous(),
                model.rows.len()
            );
        }
    }
    Ok(())
}
