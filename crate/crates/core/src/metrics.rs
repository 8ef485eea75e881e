//! Physical-layer metrics evaluated directly from codewords and channels:
//! communication rate, sensing SINR, the worst-case robust SINR test, and
//! whole-schedule feasibility. This is the nonlinear ground truth the MILP
//! reformulation is verified against.

use thiserror::Error;

use ndarray::Array1;
use num_complex::Complex64;

use crate::beams::{Codebook, Codeword};
use crate::channels::ChannelSet;
use crate::linalg::{inner, norm_sq, quad_form};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("sensing SINR is undefined on a slot with sensing disabled")]
    SensingDisabled,
    #[error("slot references tx codeword {0} outside the codebook")]
    TxIndexOutOfRange(usize),
    #[error("slot references rx codeword {0} outside the codebook")]
    RxIndexOutOfRange(usize),
    #[error("slot needs a tx codeword but none is selected")]
    MissingTxCodeword,
    #[error("slot needs an rx codeword but none is selected")]
    MissingRxCodeword,
    #[error("schedule has {got} slots, expected {expected}")]
    ScheduleLength { got: usize, expected: usize },
}

/// What one timeslot does: communication and/or sensing flags plus the
/// selected codeword indices. A transmit codeword is required whenever the
/// slot is active; a receive codeword exactly when it senses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotAssignment {
    pub comm_on: bool,
    pub sense_on: bool,
    pub tx_index: Option<usize>,
    pub rx_index: Option<usize>,
}

impl SlotAssignment {
    pub fn idle() -> Self {
        Self { comm_on: false, sense_on: false, tx_index: None, rx_index: None }
    }

    pub fn comm_only(tx_index: usize) -> Self {
        Self { comm_on: true, sense_on: false, tx_index: Some(tx_index), rx_index: None }
    }

    pub fn shared(tx_index: usize, rx_index: usize) -> Self {
        Self { comm_on: true, sense_on: true, tx_index: Some(tx_index), rx_index: Some(rx_index) }
    }

    pub fn sense_only(tx_index: usize, rx_index: usize) -> Self {
        Self { comm_on: false, sense_on: true, tx_index: Some(tx_index), rx_index: Some(rx_index) }
    }

    /// A slot is active when it communicates, senses, or both.
    pub fn active(&self) -> bool {
        self.comm_on || self.sense_on
    }
}

/// Outcome of checking a schedule against the full constraint set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEvaluation {
    pub total_bits: f64,
    pub feasible: bool,
    /// First violated constraint, by tag, with the offending slot when the
    /// constraint is per-slot.
    pub violation: Option<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub tag: &'static str,
    pub slot: Option<usize>,
}

/// Throughput of one communication-enabled slot:
/// W T log2(1 + |h_bar^H w|^2) bits.
pub fn comm_rate_bits(h_bar: &Array1<Complex64>, tx: &Codeword, bandwidth_hz: f64, slot_s: f64) -> f64 {
    let snr = inner(h_bar, &tx.weights).norm_sqr();
    bandwidth_hz * slot_s * (1.0 + snr).log2()
}

fn select<'c>(
    cb: &'c Codebook,
    index: Option<usize>,
    missing: MetricsError,
    out_of_range: fn(usize) -> MetricsError,
) -> Result<&'c Codeword, MetricsError> {
    let idx = index.ok_or(missing)?;
    cb.codeword(idx).ok_or_else(|| out_of_range(idx))
}

/// Sensing SINR of a sensing slot for a given residual-SI factor `upsilon`:
/// |r^H G t|^2 / (upsilon^2 |r^H Q t|^2 + sigma_sen^2 ||r||^2) with
/// G = psi A(theta). Calling this on a slot that does not sense is an error,
/// not zero.
pub fn sensing_sinr(
    channels: &ChannelSet,
    tx_cb: &Codebook,
    rx_cb: &Codebook,
    assignment: &SlotAssignment,
    upsilon: f64,
) -> Result<f64, MetricsError> {
    if !assignment.sense_on {
        return Err(MetricsError::SensingDisabled);
    }
    let tx = select(tx_cb, assignment.tx_index, MetricsError::MissingTxCodeword, MetricsError::TxIndexOutOfRange)?;
    let rx = select(rx_cb, assignment.rx_index, MetricsError::MissingRxCodeword, MetricsError::RxIndexOutOfRange)?;
    let psi = channels.sensing.reflection_coeff;
    let echo = quad_form(&rx.weights, &channels.steering_outer, &tx.weights);
    let leak = quad_form(&rx.weights, &channels.si_matrix, &tx.weights);
    let signal = psi * psi * echo.norm_sqr();
    let interference = upsilon * upsilon * leak.norm_sqr();
    let noise = channels.sensing.noise_power_w() * norm_sq(&rx.weights);
    Ok(signal / (interference + noise))
}

/// Worst-case robust feasibility of a sensing slot: true iff
/// |r^H A t|^2 >= (Lambda/psi^2) ((nominal+radius)^2 |r^H Q t|^2
///                + sigma_sen^2 ||r||^2),
/// i.e. the SINR threshold holds at the worst residual-SI factor in the
/// uncertainty interval.
pub fn robust_sinr_feasible(
    channels: &ChannelSet,
    tx_cb: &Codebook,
    rx_cb: &Codebook,
    assignment: &SlotAssignment,
) -> Result<bool, MetricsError> {
    if !assignment.sense_on {
        return Err(MetricsError::SensingDisabled);
    }
    let tx = select(tx_cb, assignment.tx_index, MetricsError::MissingTxCodeword, MetricsError::TxIndexOutOfRange)?;
    let rx = select(rx_cb, assignment.rx_index, MetricsError::MissingRxCodeword, MetricsError::RxIndexOutOfRange)?;
    let psi = channels.sensing.reflection_coeff;
    let lambda = channels.sensing.sinr_threshold;
    let worst = channels.si.worst_case();
    let gain = quad_form(&rx.weights, &channels.steering_outer, &tx.weights).norm_sqr();
    let leak = quad_form(&rx.weights, &channels.si_matrix, &tx.weights).norm_sqr();
    let noise = channels.sensing.noise_power_w() * norm_sq(&rx.weights);
    let rhs = lambda / (psi * psi) * (worst * worst * leak + noise);
    Ok(gain >= rhs)
}

/// Evaluate a complete schedule: total throughput over communication slots
/// plus feasibility of the structural counting constraints and the robust
/// SINR requirement on every sensing slot. Infeasibility is a result, not an
/// error; the report names the first violated constraint tag. Check order:
/// per-slot selection structure (C6, C9), the horizon bound (C4), the
/// sensing-slot quota (C13), then the robust SINR (C12) slot by slot.
pub fn evaluate_schedule(
    channels: &ChannelSet,
    tx_cb: &Codebook,
    rx_cb: &Codebook,
    schedule: &[SlotAssignment],
    bandwidth_hz: f64,
    slot_s: f64,
    min_sensing_slots: usize,
    slots: usize,
) -> Result<ScheduleEvaluation, MetricsError> {
    if schedule.len() != slots {
        return Err(MetricsError::ScheduleLength { got: schedule.len(), expected: slots });
    }
    let mut violation: Option<Violation> = None;
    let record = |tag: &'static str, slot: Option<usize>, v: &mut Option<Violation>| {
        if v.is_none() {
            *v = Some(Violation { tag, slot });
        }
    };

    let mut total_bits = 0.0;
    for (s, slot) in schedule.iter().enumerate() {
        // one-hot selection structure: tx present iff active (C6), rx present
        // iff sensing (C9)
        if slot.active() != slot.tx_index.is_some() {
            record("C6", Some(s), &mut violation);
        }
        if slot.sense_on != slot.rx_index.is_some() {
            record("C9", Some(s), &mut violation);
        }
        if let Some(b) = slot.tx_index {
            if tx_cb.codeword(b).is_none() {
                return Err(MetricsError::TxIndexOutOfRange(b));
            }
        }
        if let Some(c) = slot.rx_index {
            if rx_cb.codeword(c).is_none() {
                return Err(MetricsError::RxIndexOutOfRange(c));
            }
        }
        if slot.comm_on {
            if let Some(b) = slot.tx_index {
                total_bits += comm_rate_bits(&channels.h_bar, &tx_cb.codewords[b], bandwidth_hz, slot_s);
            }
        }
    }

    let active = schedule.iter().filter(|a| a.active()).count();
    if active > slots {
        record("C4", None, &mut violation);
    }
    let sensing = schedule.iter().filter(|a| a.sense_on).count();
    if sensing < min_sensing_slots {
        record("C13", None, &mut violation);
    }
    for (s, slot) in schedule.iter().enumerate() {
        if slot.sense_on && slot.tx_index.is_some() && slot.rx_index.is_some() {
            if !robust_sinr_feasible(channels, tx_cb, rx_cb, slot)? {
                record("C12", Some(s), &mut violation);
            }
        }
    }

    Ok(ScheduleEvaluation { total_bits, feasible: violation.is_none(), violation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beams::{
        build_codebook, default_directions, default_rx_beamwidth_map, default_tx_beamwidth_map,
        ArrayGeometry,
    };
    use crate::channels::{ChannelSet, CommChannelParams, SensingParams, SiUncertainty};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) struct Scene {
        pub channels: ChannelSet,
        pub tx_cb: Codebook,
        pub rx_cb: Codebook,
    }

    pub(crate) fn paper_defaults(
        theta_deg: f64,
        sinr_threshold: f64,
        si: SiUncertainty,
        k_factor: f64,
        seed: u64,
    ) -> Scene {
        let tx_geom = ArrayGeometry::half_wavelength(8);
        let rx_geom = ArrayGeometry::half_wavelength(16).with_axis_offset(0.15);
        let comm = CommChannelParams {
            k_factor,
            los_angle_deg: 90.0,
            distance_m: 60.0,
            carrier_ghz: 41.0,
            noise_power_dbw: -114.0,
        };
        let sensing = SensingParams {
            target_angle_deg: theta_deg,
            reflection_coeff: 6e-4,
            noise_power_dbw: -74.0,
            sinr_threshold,
            min_sensing_slots: 1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let channels = ChannelSet::build(&tx_geom, &rx_geom, &comm, sensing, si, &mut rng).unwrap();
        let tx_cb = build_codebook(&tx_geom, &default_directions(), &default_tx_beamwidth_map(), 1.0).unwrap();
        let rx_cb = build_codebook(&rx_geom, &default_directions(), &default_rx_beamwidth_map(), 0.25).unwrap();
        Scene { channels, tx_cb, rx_cb }
    }

    /// Index of the codeword steered at `dir` with the narrowest beamwidth
    /// (full array) in a default codebook.
    fn full_array_index(cb: &Codebook, dir: f64) -> usize {
        cb.codewords
            .iter()
            .find(|cw| cw.direction_deg == dir && cw.n_active == cw.weights.len())
            .unwrap()
            .index
    }

    #[test]
    fn zero_channel_rate_is_zero() {
        let scene = paper_defaults(90.0, 3.0, SiUncertainty::new(0.0, 0.0).unwrap(), 100.0, 1);
        let h_bar = Array1::from_elem(8, Complex64::new(0.0, 0.0));
        let rate = comm_rate_bits(&h_bar, &scene.tx_cb.codewords[0], 2e8, 1e-3);
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn los_matched_rate_matches_link_budget() {
        // closed-form oracle: W T log2(1 + P_tx N_tx 10^((114 - PL)/10))
        let scene = paper_defaults(90.0, 3.0, SiUncertainty::new(0.0, 0.0).unwrap(), 1e12, 7);
        let idx = full_array_index(&scene.tx_cb, 90.0);
        let rate = comm_rate_bits(&scene.channels.h_bar, &scene.tx_cb.codewords[idx], 2e8, 1e-3);
        let pl = crate::channels::uma_pathloss_db(60.0, 41.0).unwrap();
        let oracle = 2e8 * 1e-3 * (1.0 + 8.0 * 10f64.powf((114.0 - pl) / 10.0)).log2();
        assert!((rate / oracle - 1.0).abs() < 0.02, "rate {rate} vs oracle {oracle}");
        assert!((oracle - 1.5729044e6).abs() < 1e2);
    }

    #[test]
    fn matched_sensing_sinr_matches_hand_budget() {
        let scene = paper_defaults(90.0, 3.0, SiUncertainty::new(0.0, 0.0).unwrap(), 100.0, 1);
        let a = SlotAssignment::shared(
            full_array_index(&scene.tx_cb, 90.0),
            full_array_index(&scene.rx_cb, 90.0),
        );
        let sinr = sensing_sinr(&scene.channels, &scene.tx_cb, &scene.rx_cb, &a, 0.0).unwrap();
        // hand budget: psi^2 P_rx P_tx / (sigma_sen^2 P_rx) = 9e-8 / 9.95e-9
        let oracle = (6e-4f64).powi(2) * 0.25 * 1.0 / (10f64.powf(-7.4) * 0.25);
        assert!((sinr / oracle - 1.0).abs() < 1e-9, "sinr {sinr} vs {oracle}");
        assert!((sinr - 9.0428).abs() < 1e-3);
    }

    #[test]
    fn zero_reflection_gives_zero_sinr() {
        let mut scene = paper_defaults(90.0, 3.0, SiUncertainty::new(0.0, 0.0).unwrap(), 100.0, 1);
        // reflection_coeff must stay positive for construction; emulate
        // psi -> 0 by scaling: signal term is psi^2 * gain.
        scene.channels.sensing.reflection_coeff = 1e-30;
        let a = SlotAssignment::shared(0, 0);
        let sinr = sensing_sinr(&scene.channels, &scene.tx_cb, &scene.rx_cb, &a, 0.5).unwrap();
        assert!(sinr < 1e-40);
    }

    #[test]
    fn sinr_decreases_when_upsilon_doubles() {
        let scene = paper_defaults(100.0, 3.0, SiUncertainty::new(0.2, 0.0).unwrap(), 100.0, 1);
        let a = SlotAssignment::shared(
            full_array_index(&scene.tx_cb, 100.0),
            full_array_index(&scene.rx_cb, 100.0),
        );
        let lo = sensing_sinr(&scene.channels, &scene.tx_cb, &scene.rx_cb, &a, 0.4).unwrap();
        let hi = sensing_sinr(&scene.channels, &scene.tx_cb, &scene.rx_cb, &a, 0.8).unwrap();
        assert!(hi < lo, "SINR must strictly decrease: {lo} -> {hi}");
    }

    #[test]
    fn sensing_sinr_rejects_non_sensing_slot() {
        let scene = paper_defaults(90.0, 3.0, SiUncertainty::new(0.0, 0.0).unwrap(), 100.0, 1);
        let a = SlotAssignment::comm_only(0);
        assert_eq!(
            sensing_sinr(&scene.channels, &scene.tx_cb, &scene.rx_cb, &a, 0.0),
            Err(MetricsError::SensingDisabled)
        );
    }

    #[test]
    fn robust_collapses_to_nominal_when_uncertainty_vanishes() {
        let scene = paper_defaults(110.0, 3.0, SiUncertainty::new(0.0, 0.0).unwrap(), 100.0, 5);
        for b in (0..scene.tx_cb.len()).step_by(7) {
            for c in (0..scene.rx_cb.len()).step_by(11) {
                let a = SlotAssignment::shared(b, c);
                let robust = robust_sinr_feasible(&scene.channels, &scene.tx_cb, &scene.rx_cb, &a).unwrap();
                let sinr = sensing_sinr(&scene.channels, &scene.tx_cb, &scene.rx_cb, &a, 0.0).unwrap();
                assert_eq!(robust, sinr >= 3.0, "mismatch at ({b},{c}): sinr {sinr}");
            }
        }
    }

    #[test]
    fn robust_feasible_implies_grid_sweep_holds() {
        // 100-point grid oracle over the uncertainty interval.
        let si = SiUncertainty::new(0.3, 0.1).unwrap();
        let scene = paper_defaults(100.0, 2.0, si, 100.0, 11);
        let mut checked = 0;
        for b in 0..scene.tx_cb.len() {
            for c in (0..scene.rx_cb.len()).step_by(5) {
                let a = SlotAssignment::shared(b, c);
                if robust_sinr_feasible(&scene.channels, &scene.tx_cb, &scene.rx_cb, &a).unwrap() {
                    checked += 1;
                    let lo: f64 = (si.nominal - si.radius).max(0.0);
                    let hi = si.nominal + si.radius;
                    for k in 0..100 {
                        let u = lo + (hi - lo) * k as f64 / 99.0;
                        let sinr =
                            sensing_sinr(&scene.channels, &scene.tx_cb, &scene.rx_cb, &a, u).unwrap();
                        assert!(
                            sinr >= 2.0 * (1.0 - 1e-12),
                            "feasible pair ({b},{c}) dips to {sinr} at upsilon {u}"
                        );
                    }
                }
            }
        }
        assert!(checked > 0, "oracle never exercised");
    }

    #[test]
    fn infinite_threshold_is_infeasible() {
        let mut scene = paper_defaults(90.0, 3.0, SiUncertainty::new(0.0, 0.0).unwrap(), 100.0, 1);
        scene.channels.sensing.sinr_threshold = 1e30;
        let a = SlotAssignment::shared(
            full_array_index(&scene.tx_cb, 90.0),
            full_array_index(&scene.rx_cb, 90.0),
        );
        assert!(!robust_sinr_feasible(&scene.channels, &scene.tx_cb, &scene.rx_cb, &a).unwrap());
    }

    #[test]
    fn worst_case_sits_at_the_upper_endpoint() {
        let si = SiUncertainty::new(0.4, 0.2).unwrap();
        let scene = paper_defaults(100.0, 3.0, si, 100.0, 3);
        let a = SlotAssignment::shared(
            full_array_index(&scene.tx_cb, 100.0),
            full_array_index(&scene.rx_cb, 100.0),
        );
        let worst = sensing_sinr(&scene.channels, &scene.tx_cb, &scene.rx_cb, &a, si.worst_case()).unwrap();
        let lo: f64 = (si.nominal - si.radius).max(0.0);
        for k in 0..100 {
            let u = lo + (si.worst_case() - lo) * k as f64 / 99.0;
            let sinr = sensing_sinr(&scene.channels, &scene.tx_cb, &scene.rx_cb, &a, u).unwrap();
            assert!(worst <= sinr * (1.0 + 1e-12));
        }
    }

    #[test]
    fn robust_false_stays_false_as_parameters_tighten() {
        let base = paper_defaults(130.0, 3.0, SiUncertainty::new(0.2, 0.05).unwrap(), 100.0, 13);
        for b in (0..base.tx_cb.len()).step_by(3) {
            for c in (0..base.rx_cb.len()).step_by(9) {
                let a = SlotAssignment::shared(b, c);
                if robust_sinr_feasible(&base.channels, &base.tx_cb, &base.rx_cb, &a).unwrap() {
                    continue;
                }
                for (lambda, nom, rad) in
                    [(4.0, 0.2, 0.05), (3.0, 0.4, 0.05), (3.0, 0.2, 0.2), (5.0, 0.5, 0.3)]
                {
                    let mut tighter = base.channels.clone();
                    tighter.sensing.sinr_threshold = lambda;
                    tighter.si = SiUncertainty::new(nom, rad).unwrap();
                    assert!(
                        !robust_sinr_feasible(&tighter, &base.tx_cb, &base.rx_cb, &a).unwrap(),
                        "infeasible pair became feasible under tighter (L={lambda}, nom={nom}, rad={rad})"
                    );
                }
            }
        }
    }

    #[test]
    fn rx_norm_identity_under_one_hot_selection() {
        let scene = paper_defaults(90.0, 3.0, SiUncertainty::new(0.0, 0.0).unwrap(), 100.0, 1);
        for c in 0..scene.rx_cb.len() {
            // sum over the codebook of ||c_c||^2 rho_c with one-hot rho
            let direct = norm_sq(&scene.rx_cb.codewords[c].weights);
            let via_sum: f64 = scene
                .rx_cb
                .codewords
                .iter()
                .enumerate()
                .map(|(i, cw)| if i == c { norm_sq(&cw.weights) } else { 0.0 })
                .sum();
            assert_eq!(direct, via_sum);
            assert!((direct - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn all_idle_schedule_without_quota_is_feasible() {
        let scene = paper_defaults(90.0, 3.0, SiUncertainty::new(0.0, 0.0).unwrap(), 100.0, 1);
        let schedule = vec![SlotAssignment::idle(); 3];
        let eval = evaluate_schedule(
            &scene.channels,
            &scene.tx_cb,
            &scene.rx_cb,
            &schedule,
            2e8,
            1e-3,
            0,
            3,
        )
        .unwrap();
        assert_eq!(eval.total_bits, 0.0);
        assert!(eval.feasible);
    }

    #[test]
    fn all_idle_schedule_violates_sensing_quota() {
        let scene = paper_defaults(90.0, 3.0, SiUncertainty::new(0.0, 0.0).unwrap(), 100.0, 1);
        let schedule = vec![SlotAssignment::idle(); 3];
        let eval = evaluate_schedule(
            &scene.channels,
            &scene.tx_cb,
            &scene.rx_cb,
            &schedule,
            2e8,
            1e-3,
            1,
            3,
        )
        .unwrap();
        assert!(!eval.feasible);
        assert_eq!(eval.violation, Some(Violation { tag: "C13", slot: None }));
    }

    #[test]
    fn shared_slot_at_paper_defaults_hits_16_mbit() {
        let scene = paper_defaults(90.0, 3.0, SiUncertainty::new(0.0, 0.0).unwrap(), 100.0, 2);
        let a = SlotAssignment::shared(
            full_array_index(&scene.tx_cb, 90.0),
            full_array_index(&scene.rx_cb, 90.0),
        );
        let eval =
            evaluate_schedule(&scene.channels, &scene.tx_cb, &scene.rx_cb, &[a], 2e8, 1e-3, 1, 1)
                .unwrap();
        assert!(eval.feasible, "violation: {:?}", eval.violation);
        assert!((eval.total_bits / 1.6e6 - 1.0).abs() < 0.15, "bits {}", eval.total_bits);
    }

    #[test]
    fn structural_violations_are_tagged() {
        let scene = paper_defaults(90.0, 3.0, SiUncertainty::new(0.0, 0.0).unwrap(), 100.0, 1);
        // active slot with no tx codeword
        let broken = SlotAssignment { comm_on: true, sense_on: false, tx_index: None, rx_index: None };
        let eval =
            evaluate_schedule(&scene.channels, &scene.tx_cb, &scene.rx_cb, &[broken], 2e8, 1e-3, 0, 1)
                .unwrap();
        assert_eq!(eval.violation.as_ref().unwrap().tag, "C6");
        // sensing slot with no rx codeword
        let broken = SlotAssignment { comm_on: true, sense_on: true, tx_index: Some(0), rx_index: None };
        let eval =
            evaluate_schedule(&scene.channels, &scene.tx_cb, &scene.rx_cb, &[broken], 2e8, 1e-3, 0, 1)
                .unwrap();
        assert_eq!(eval.violation.as_ref().unwrap().tag, "C9");
        // wrong length is an error, not a violation
        assert_eq!(
            evaluate_schedule(&scene.channels, &scene.tx_cb, &scene.rx_cb, &[], 2e8, 1e-3, 0, 1),
            Err(MetricsError::ScheduleLength { got: 0, expected: 1 })
        );
    }
}
