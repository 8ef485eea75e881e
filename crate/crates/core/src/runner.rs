//! Monte Carlo sweep driver behind the command line: expands a scenario
//! configuration into its Cartesian cell grid, solves every (cell,
//! realization) instance with the structured exact solver, re-validates each
//! solution through the nonlinear metrics, and aggregates plot-ready CSV
//! rows.
//!
//! Reproducibility: realization `r` draws its channel from stream `r` of a
//! ChaCha8 generator seeded with the master seed, so results do not depend
//! on sweep order or worker scheduling, and cells sharing a realization
//! index see the same channel (which makes the monotonicity of sweeps hold
//! per seed, not just in the mean).

use std::collections::HashMap;
use std::io::Write;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::beams::{
    build_codebook, default_directions, default_rx_beamwidth_map, default_tx_beamwidth_map,
    ArrayGeometry, BeamError, Codebook,
};
use crate::channels::{
    rician_channel, sensing_outer, si_channel, ChannelSet, ChannelError, CommChannelParams,
    SensingParams, SiUncertainty,
};
use crate::config::{ConfigError, ScenarioConfig, ScenarioId};
use crate::metrics::{evaluate_schedule, MetricsError};
use crate::milp::{precompute, CoefficientTable, MilpError};
use crate::solver::{solve_structured, SolveStatus, Solution};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Beam(#[from] BeamError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cell {cell}, realization {realization}: solver/metrics disagreement: {detail}")]
    Validation { cell: usize, realization: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Whether a run honors the residual-SI uncertainty or deliberately ignores
/// it (the baseline whose solutions are then re-judged at the true worst
/// case).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Robust,
    SiBlind,
}

impl SolveMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveMode::Robust => "robust",
            SolveMode::SiBlind => "si_blind",
        }
    }
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub theta_deg: f64,
    pub sinr_threshold: f64,
    pub si_nominal: f64,
    pub si_radius: f64,
    pub min_sensing_slots: usize,
    pub slots: usize,
    pub reflection_coeff: f64,
    pub array_separation_m: f64,
}

/// Cartesian product of the sweep axes in field order (theta outermost,
/// separation innermost).
pub fn sweep_cells(config: &ScenarioConfig) -> Vec<SweepCell> {
    let mut cells = Vec::with_capacity(config.cell_count());
    for &theta_deg in &config.theta_deg {
        for &sinr_threshold in &config.sinr_threshold {
            for &si_nominal in &config.si_nominal {
                for &si_radius in &config.si_radius {
                    for &min_sensing_slots in &config.min_sensing_slots {
                        for &slots in &config.slots {
                            for &reflection_coeff in &config.reflection_coeff {
                                for &array_separation_m in &config.array_separation_m {
                                    cells.push(SweepCell {
                                        theta_deg,
                                        sinr_threshold,
                                        si_nominal,
                                        si_radius,
                                        min_sensing_slots,
                                        slots,
                                        reflection_coeff,
                                        array_separation_m,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    cells
}

/// One aggregated output row. `realization` is None for the per-cell mean
/// row and Some(r) for single-realization rows (emitted when the
/// configuration asks for them). Means are taken over the realizations
/// counted as feasible; None when there are none.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: ScenarioId,
    pub mode: SolveMode,
    pub realization: Option<usize>,
    pub cell: SweepCell,
    pub realizations: usize,
    pub mean_throughput_bits: Option<f64>,
    pub feasibility_fraction: f64,
    pub mean_worst_case_sinr: Option<f64>,
    pub modal_tx_direction_deg: Option<f64>,
    pub modal_tx_beamwidth_deg: Option<f64>,
    pub modal_rx_direction_deg: Option<f64>,
    pub modal_rx_beamwidth_deg: Option<f64>,
}

/// Outcome of one (cell, realization) solve.
#[derive(Debug, Clone)]
struct CellSample {
    feasible: bool,
    throughput_bits: Option<f64>,
    min_worst_sinr: Option<f64>,
    /// (direction, beamwidth) of the tx codeword per sensing slot, or per
    /// communication slot when the cell has no sensing quota.
    tx_beams: Vec<(f64, f64)>,
    rx_beams: Vec<(f64, f64)>,
}

struct Workspace {
    tx_cb: Codebook,
    rx_cb: Codebook,
    comm: CommChannelParams,
    /// steering outer products per distinct target angle (bit-keyed)
    a_cache: HashMap<u64, Array2<Complex64>>,
    /// SI channels per distinct array separation (bit-keyed)
    q_cache: HashMap<u64, Array2<Complex64>>,
    cells: Vec<SweepCell>,
}

fn build_workspace(config: &ScenarioConfig) -> Result<Workspace, RunnerError> {
    let tx_geom = ArrayGeometry::half_wavelength(config.n_tx);
    let tx_cb = build_codebook(&tx_geom, &default_directions(), &default_tx_beamwidth_map(), config.tx_power_w)?;
    let rx_geom_base = ArrayGeometry::half_wavelength(config.n_rx);
    let rx_cb = build_codebook(&rx_geom_base, &default_directions(), &default_rx_beamwidth_map(), config.rx_power_w)?;
    let comm = CommChannelParams {
        k_factor: config.k_factor,
        los_angle_deg: config.los_angle_deg,
        distance_m: config.distance_m,
        carrier_ghz: config.carrier_ghz,
        noise_power_dbw: config.noise_com_dbw,
    };
    let cells = sweep_cells(config);
    let mut a_cache = HashMap::new();
    let mut q_cache = HashMap::new();
    for cell in &cells {
        a_cache.entry(cell.theta_deg.to_bits()).or_insert(sensing_outer(
            &tx_geom,
            &rx_geom_base,
            cell.theta_deg,
        )?);
        q_cache.entry(cell.array_separation_m.to_bits()).or_insert(si_channel(
            &tx_geom,
            &rx_geom_base.with_axis_offset(cell.array_separation_m),
            config.carrier_ghz,
        )?);
    }
    Ok(Workspace { tx_cb, rx_cb, comm, a_cache, q_cache, cells })
}

impl Workspace {
    fn sensing_params(&self, config: &ScenarioConfig, cell: &SweepCell) -> SensingParams {
        SensingParams {
            target_angle_deg: cell.theta_deg,
            reflection_coeff: cell.reflection_coeff,
            noise_power_dbw: config.noise_sen_dbw,
            sinr_threshold: cell.sinr_threshold,
            min_sensing_slots: cell.min_sensing_slots,
        }
    }

    fn channel_set(
        &self,
        config: &ScenarioConfig,
        cell: &SweepCell,
        h: &Array1<Complex64>,
        si: SiUncertainty,
    ) -> Result<ChannelSet, ChannelError> {
        ChannelSet::from_parts(
            h.clone(),
            config.noise_com_dbw,
            self.a_cache[&cell.theta_deg.to_bits()].clone(),
            self.q_cache[&cell.array_separation_m.to_bits()].clone(),
            self.sensing_params(config, cell),
            si,
        )
    }
}

/// Beam summaries of an optimal schedule: tx beams of the sensing slots (or
/// of the communication slots when the quota is zero) and rx beams of the
/// sensing slots.
fn beam_summary(sol: &Solution, tx_cb: &Codebook, rx_cb: &Codebook) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let mut tx = Vec::new();
    let mut rx = Vec::new();
    for slot in &sol.schedule {
        if slot.sense_on {
            if let Some(b) = slot.tx_index {
                let cw = &tx_cb.codewords[b];
                tx.push((cw.direction_deg, cw.beamwidth_deg));
            }
            if let Some(c) = slot.rx_index {
                let cw = &rx_cb.codewords[c];
                rx.push((cw.direction_deg, cw.beamwidth_deg));
            }
        }
    }
    if tx.is_empty() {
        for slot in &sol.schedule {
            if slot.comm_on {
                if let Some(b) = slot.tx_index {
                    let cw = &tx_cb.codewords[b];
                    tx.push((cw.direction_deg, cw.beamwidth_deg));
                }
            }
        }
    }
    (tx, rx)
}

/// Most frequent (direction, beamwidth) pair; ties toward the smaller pair.
fn modal(pairs: &[(f64, f64)]) -> Option<(f64, f64)> {
    let mut counts: HashMap<(u64, u64), usize> = HashMap::new();
    for &(d, w) in pairs {
        *counts.entry((d.to_bits(), w.to_bits())).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|((d, w), n)| ((f64::from_bits(d), f64::from_bits(w)), n))
        .max_by(|a, b| {
            a.1.cmp(&b.1)
                .then(b.0 .0.partial_cmp(&a.0 .0).unwrap())
                .then(b.0 .1.partial_cmp(&a.0 .1).unwrap())
        })
        .map(|(pair, _)| pair)
}

fn solve_cell(
    config: &ScenarioConfig,
    ws: &Workspace,
    mode: SolveMode,
    cell_idx: usize,
    cell: &SweepCell,
    realization: usize,
    h: &Array1<Complex64>,
    base: &CoefficientTable,
) -> Result<CellSample, RunnerError> {
    let infeasible = CellSample {
        feasible: false,
        throughput_bits: None,
        min_worst_sinr: None,
        tx_beams: Vec::new(),
        rx_beams: Vec::new(),
    };
    let true_si = match SiUncertainty::new(cell.si_nominal, cell.si_radius) {
        Ok(si) => si,
        Err(e) => return Err(e.into()),
    };
    let true_coeffs = base.with_robustness(cell.sinr_threshold, cell.si_nominal, cell.si_radius);
    let solve_coeffs = match mode {
        SolveMode::Robust => true_coeffs.clone(),
        SolveMode::SiBlind => base.with_robustness(cell.sinr_threshold, 0.0, 0.0),
    };
    let sol = solve_structured(&solve_coeffs, cell.slots, cell.min_sensing_slots);
    if sol.status != SolveStatus::Optimal {
        return Ok(infeasible);
    }

    // re-validate the claimed solution through the nonlinear metrics under
    // the true uncertainty
    let channels = ws.channel_set(config, cell, h, true_si)?;
    let eval = evaluate_schedule(
        &channels,
        &ws.tx_cb,
        &ws.rx_cb,
        &sol.schedule,
        config.bandwidth_hz,
        config.slot_duration_s,
        cell.min_sensing_slots,
        cell.slots,
    )?;
    let rel = (eval.total_bits - sol.objective_bits).abs() / sol.objective_bits.abs().max(1.0);
    if rel > 1e-9 {
        return Err(RunnerError::Validation {
            cell: cell_idx,
            realization,
            detail: format!("objective {} vs metrics {}", sol.objective_bits, eval.total_bits),
        });
    }
    match mode {
        SolveMode::Robust => {
            if !eval.feasible {
                return Err(RunnerError::Validation {
                    cell: cell_idx,
                    realization,
                    detail: format!("robust solution re-evaluates infeasible: {:?}", eval.violation),
                });
            }
        }
        SolveMode::SiBlind => {
            // the blind design only counts as feasible if it survives the
            // true worst case
            if !eval.feasible {
                return Ok(infeasible);
            }
        }
    }

    let (tx_beams, rx_beams) = beam_summary(&sol, &ws.tx_cb, &ws.rx_cb);
    // worst-case SINR under the true uncertainty, tightest sensing slot
    let min_worst_sinr = sol
        .schedule
        .iter()
        .filter(|slot| slot.sense_on)
        .map(|slot| true_coeffs.worst_case_sinr(slot.tx_index.unwrap(), slot.rx_index.unwrap()))
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x))));
    Ok(CellSample {
        feasible: true,
        throughput_bits: Some(sol.objective_bits),
        min_worst_sinr,
        tx_beams,
        rx_beams,
    })
}

fn run_mode(config: &ScenarioConfig, mode: SolveMode) -> Result<Vec<ResultRow>, RunnerError> {
    let ws = build_workspace(config)?;
    let tx_geom = ArrayGeometry::half_wavelength(config.n_tx);

    // realization-major: one channel draw per realization, shared by every
    // cell; base coefficient tables cached per (theta, psi, separation)
    let samples: Vec<Vec<CellSample>> = (0..config.realizations)
        .into_par_iter()
        .map(|r| -> Result<Vec<CellSample>, RunnerError> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(r as u64);
            let h = rician_channel(&tx_geom, &ws.comm, &mut rng)?;
            let mut base_tables: HashMap<(u64, u64, u64), CoefficientTable> = HashMap::new();
            let mut out = Vec::with_capacity(ws.cells.len());
            for (cell_idx, cell) in ws.cells.iter().enumerate() {
                let key = (
                    cell.theta_deg.to_bits(),
                    cell.reflection_coeff.to_bits(),
                    cell.array_separation_m.to_bits(),
                );
                if !base_tables.contains_key(&key) {
                    let channels = ws.channel_set(
                        config,
                        cell,
                        &h,
                        SiUncertainty::with_cap(0.0, 0.0, f64::INFINITY).unwrap(),
                    )?;
                    let table = precompute(
                        &channels,
                        &ws.tx_cb,
                        &ws.rx_cb,
                        config.bandwidth_hz,
                        config.slot_duration_s,
                    )?;
                    base_tables.insert(key, table);
                }
                let base = &base_tables[&key];
                out.push(solve_cell(config, &ws, mode, cell_idx, cell, r, &h, base)?);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, _>>()?;

    // deterministic reduction in (cell, realization) order
    let mut rows = Vec::new();
    for (cell_idx, cell) in ws.cells.iter().enumerate() {
        let per_real: Vec<&CellSample> = samples.iter().map(|s| &s[cell_idx]).collect();
        if config.per_realization {
            for (r, sample) in per_real.iter().enumerate() {
                rows.push(ResultRow {
                    scenario: config.scenario_id,
                    mode,
                    realization: Some(r),
                    cell: *cell,
                    realizations: config.realizations,
                    mean_throughput_bits: sample.throughput_bits,
                    feasibility_fraction: if sample.feasible { 1.0 } else { 0.0 },
                    mean_worst_case_sinr: sample.min_worst_sinr,
                    modal_tx_direction_deg: modal(&sample.tx_beams).map(|p| p.0),
                    modal_tx_beamwidth_deg: modal(&sample.tx_beams).map(|p| p.1),
                    modal_rx_direction_deg: modal(&sample.rx_beams).map(|p| p.0),
                    modal_rx_beamwidth_deg: modal(&sample.rx_beams).map(|p| p.1),
                });
            }
        }
        let feasible: Vec<&&CellSample> = per_real.iter().filter(|s| s.feasible).collect();
        let fraction = feasible.len() as f64 / config.realizations as f64;
        let mean = |extract: &dyn Fn(&CellSample) -> Option<f64>| -> Option<f64> {
            let values: Vec<f64> = feasible.iter().filter_map(|s| extract(s)).collect();
            if values.is_empty() {
                None
            } else {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            }
        };
        let tx_pool: Vec<(f64, f64)> = feasible.iter().flat_map(|s| s.tx_beams.clone()).collect();
        let rx_pool: Vec<(f64, f64)> = feasible.iter().flat_map(|s| s.rx_beams.clone()).collect();
        rows.push(ResultRow {
            scenario: config.scenario_id,
            mode,
            realization: None,
            cell: *cell,
            realizations: config.realizations,
            mean_throughput_bits: mean(&|s| s.throughput_bits),
            feasibility_fraction: fraction,
            mean_worst_case_sinr: mean(&|s| s.min_worst_sinr),
            modal_tx_direction_deg: modal(&tx_pool).map(|p| p.0),
            modal_tx_beamwidth_deg: modal(&tx_pool).map(|p| p.1),
            modal_rx_direction_deg: modal(&rx_pool).map(|p| p.0),
            modal_rx_beamwidth_deg: modal(&rx_pool).map(|p| p.1),
        });
    }
    Ok(rows)
}

/// Run the configured sweep with the robust solver.
pub fn run(config: &ScenarioConfig) -> Result<Vec<ResultRow>, RunnerError> {
    run_mode(config, SolveMode::Robust)
}

/// Run the configured sweep with a solver that ignores residual
/// self-interference (nominal = radius = 0) and then judge each solution at
/// the configured true worst case. The feasibility fraction reports how
/// often the blind design actually survives.
pub fn run_nonrobust_comparison(config: &ScenarioConfig) -> Result<Vec<ResultRow>, RunnerError> {
    run_mode(config, SolveMode::SiBlind)
}

pub const CSV_HEADER: &str = "scenario,mode,realization,theta_deg,sinr_threshold,si_nominal,si_radius,min_sensing_slots,slots,reflection_coeff,array_separation_m,realizations,mean_throughput_bits,feasibility_fraction,mean_worst_case_sinr,modal_tx_direction_deg,modal_tx_beamwidth_deg,modal_rx_direction_deg,modal_rx_beamwidth_deg";

fn opt_to_string(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Serialize rows as UTF-8 CSV with the fixed header. Missing values (cells
/// with no feasible realization) are empty fields; every number prints in
/// shortest round-trip decimal form, so identical runs are byte-identical.
pub fn emit_csv<W: Write>(rows: &[ResultRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.scenario.as_str(),
            row.mode.as_str(),
            row.realization.map(|r| r.to_string()).unwrap_or_else(|| "mean".into()),
            row.cell.theta_deg,
            row.cell.sinr_threshold,
            row.cell.si_nominal,
            row.cell.si_radius,
            row.cell.min_sensing_slots,
            row.cell.slots,
            row.cell.reflection_coeff,
            row.cell.array_separation_m,
            row.realizations,
            opt_to_string(row.mean_throughput_bits),
            row.feasibility_fraction,
            opt_to_string(row.mean_worst_case_sinr),
            opt_to_string(row.modal_tx_direction_deg),
            opt_to_string(row.modal_tx_beamwidth_deg),
            opt_to_string(row.modal_rx_direction_deg),
            opt_to_string(row.modal_rx_beamwidth_deg),
        )?;
    }
    Ok(())
}

/// Render rows to an in-memory CSV string.
pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    emit_csv(rows, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("CSV is UTF-8")
}
