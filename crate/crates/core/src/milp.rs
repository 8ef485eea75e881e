//! Exact linear reformulation of the joint timeslot/beam-selection problem.
//!
//! All nonlinearity is folded into precomputed scalar coefficients: the
//! per-codeword rate, the per-pair sensing gain and self-interference leak,
//! and the receive-noise terms. The binary structure is then captured by the
//! product-linearization rows (`D*` for tx-selection x comm flag, `G2`-`G5`
//! for tx x rx selection), the or-decomposition rows (`F*`), the counting
//! rows (`C4`, `C6`, `C9`, `C13`), and the robust sensing rows (`G1`, `G6`)
//! coupled by the auxiliary continuous `z` per slot.

use ndarray::Array2;
use std::fmt::Write as _;
use thiserror::Error;

use crate::beams::Codebook;
use crate::channels::ChannelSet;
use crate::linalg::{inner, matvec, norm_sq};
use crate::metrics::SlotAssignment;

/// Relative tolerance for deciding whether a point satisfies a row.
pub const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MilpError {
    #[error("codebooks must be nonempty")]
    EmptyCodebook,
    #[error("codeword length {got} does not match channel dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("horizon must contain at least one slot")]
    EmptyHorizon,
    #[error("min sensing slots {min_sensing_slots} exceeds horizon {slots}: provably infeasible")]
    QuotaExceedsHorizon { min_sensing_slots: usize, slots: usize },
    #[error("schedule has {got} slots, model expects {expected}")]
    ScheduleLength { got: usize, expected: usize },
    #[error("slot {slot} is malformed: {reason}")]
    MalformedSlot { slot: usize, reason: &'static str },
}

/// Every scalar constant the linear model needs, precomputed from channels
/// and codebooks.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    /// W T log2(1 + |h_bar^H b|^2) per transmit codeword, bits.
    pub rate_per_tx: Vec<f64>,
    /// |h_bar^H b|^2 per transmit codeword.
    pub comm_gain: Vec<f64>,
    /// |c^H A(theta) b|^2 per (tx, rx) pair, indexed [b][c].
    pub sense_gain: Array2<f64>,
    /// |c^H Q b|^2 per (tx, rx) pair, indexed [b][c].
    pub si_leak: Array2<f64>,
    /// sigma_sen^2 ||c||^2 per receive codeword, watts.
    pub rx_noise: Vec<f64>,
    /// (Lambda / psi^2) (nominal + radius)^2.
    pub robust_scale: f64,
    /// Lambda / psi^2.
    pub noise_scale: f64,
    /// The SINR threshold Lambda itself, kept so worst-case SINRs can be
    /// reconstructed from the scaled terms.
    pub sinr_threshold: f64,
}

impl CoefficientTable {
    pub fn l_tx(&self) -> usize {
        self.rate_per_tx.len()
    }

    pub fn l_rx(&self) -> usize {
        self.rx_noise.len()
    }

    /// Worst-case robust feasibility of pair (b, c): the linear-row form of
    /// the sensing constraint under one-hot selection.
    pub fn pair_feasible(&self, b: usize, c: usize) -> bool {
        self.sense_gain[[b, c]]
            >= self.robust_scale * self.si_leak[[b, c]] + self.noise_scale * self.rx_noise[c]
    }

    /// Sensing SINR of pair (b, c) at the worst-case residual-SI factor.
    pub fn worst_case_sinr(&self, b: usize, c: usize) -> f64 {
        let denom = self.robust_scale * self.si_leak[[b, c]] + self.noise_scale * self.rx_noise[c];
        self.sinr_threshold * self.sense_gain[[b, c]] / denom
    }

    /// Same gain/leak/noise tables under a different robustness setting.
    /// Cheap compared to re-running `precompute`; used by parameter sweeps
    /// where the channel realization is shared across cells.
    pub fn with_robustness(&self, sinr_threshold: f64, si_nominal: f64, si_radius: f64) -> Self {
        let mut out = self.clone();
        let psi_sq = self.psi_squared();
        out.sinr_threshold = sinr_threshold;
        out.noise_scale = sinr_threshold / psi_sq;
        let worst = si_nominal + si_radius;
        out.robust_scale = out.noise_scale * worst * worst;
        out
    }

    /// psi^2 recovered from the stored scale factors.
    pub fn psi_squared(&self) -> f64 {
        self.sinr_threshold / self.noise_scale
    }
}

/// Precompute the full coefficient table. Every entry equals the direct
/// complex inner-product computation.
pub fn precompute(
    channels: &ChannelSet,
    tx_cb: &Codebook,
    rx_cb: &Codebook,
    bandwidth_hz: f64,
    slot_s: f64,
) -> Result<CoefficientTable, MilpError> {
    if tx_cb.is_empty() || rx_cb.is_empty() {
        return Err(MilpError::EmptyCodebook);
    }
    let n_tx = channels.n_tx();
    let n_rx = channels.n_rx();
    if channels.h_bar.len() != n_tx {
        return Err(MilpError::DimensionMismatch { got: channels.h_bar.len(), expected: n_tx });
    }
    for cw in &tx_cb.codewords {
        if cw.weights.len() != n_tx {
            return Err(MilpError::DimensionMismatch { got: cw.weights.len(), expected: n_tx });
        }
    }
    for cw in &rx_cb.codewords {
        if cw.weights.len() != n_rx {
            return Err(MilpError::DimensionMismatch { got: cw.weights.len(), expected: n_rx });
        }
    }

    let l_tx = tx_cb.len();
    let l_rx = rx_cb.len();
    let mut comm_gain = Vec::with_capacity(l_tx);
    let mut rate_per_tx = Vec::with_capacity(l_tx);
    let mut sense_gain = Array2::zeros((l_tx, l_rx));
    let mut si_leak = Array2::zeros((l_tx, l_rx));
    for (b, tx) in tx_cb.codewords.iter().enumerate() {
        let gain = inner(&channels.h_bar, &tx.weights).norm_sqr();
        comm_gain.push(gain);
        rate_per_tx.push(bandwidth_hz * slot_s * (1.0 + gain).log2());
        let echo = matvec(&channels.steering_outer, &tx.weights);
        let leak = matvec(&channels.si_matrix, &tx.weights);
        for (c, rx) in rx_cb.codewords.iter().enumerate() {
            sense_gain[[b, c]] = inner(&rx.weights, &echo).norm_sqr();
            si_leak[[b, c]] = inner(&rx.weights, &leak).norm_sqr();
        }
    }
    let sigma_sen_sq = channels.sensing.noise_power_w();
    let rx_noise: Vec<f64> =
        rx_cb.codewords.iter().map(|cw| sigma_sen_sq * norm_sq(&cw.weights)).collect();

    let psi = channels.sensing.reflection_coeff;
    let lambda = channels.sensing.sinr_threshold;
    let noise_scale = lambda / (psi * psi);
    let worst = channels.si.worst_case();
    Ok(CoefficientTable {
        rate_per_tx,
        comm_gain,
        sense_gain,
        si_leak,
        rx_noise,
        robust_scale: noise_scale * worst * worst,
        noise_scale,
        sinr_threshold: lambda,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    /// Continuous with lower bound 0 (the E1 nonnegativity constraint is
    /// encoded as this bound, not as a row).
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDef {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[allow(missing_docs)]
pub enum RowTag {
    C4,
    C6,
    C9,
    C13,
    D1,
    D2,
    D3,
    D4,
    E1,
    F1,
    F2,
    F3,
    F4,
    G1,
    G2,
    G3,
    G4,
    G5,
    G6,
}

impl RowTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowTag::C4 => "C4",
            RowTag::C6 => "C6",
            RowTag::C9 => "C9",
            RowTag::C13 => "C13",
            RowTag::D1 => "D1",
            RowTag::D2 => "D2",
            RowTag::D3 => "D3",
            RowTag::D4 => "D4",
            RowTag::E1 => "E1",
            RowTag::F1 => "F1",
            RowTag::F2 => "F2",
            RowTag::F3 => "F3",
            RowTag::F4 => "F4",
            RowTag::G1 => "G1",
            RowTag::G2 => "G2",
            RowTag::G3 => "G3",
            RowTag::G4 => "G4",
            RowTag::G5 => "G5",
            RowTag::G6 => "G6",
        }
    }
}

/// One tagged linear constraint: sum(terms) sense rhs.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub tag: RowTag,
    pub terms: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Row {
    /// Signed violation of the row at a point; <= 0 means satisfied.
    pub fn violation(&self, point: &[f64]) -> f64 {
        let lhs: f64 = self.terms.iter().map(|&(v, c)| c * point[v]).sum();
        match self.sense {
            RowSense::Le => lhs - self.rhs,
            RowSense::Ge => self.rhs - lhs,
            RowSense::Eq => (lhs - self.rhs).abs(),
        }
    }

    pub fn satisfied(&self, point: &[f64]) -> bool {
        let lhs: f64 = self.terms.iter().map(|&(v, c)| c * point[v]).sum();
        let scale = 1f64.max(lhs.abs()).max(self.rhs.abs());
        self.violation(point) <= ROW_TOLERANCE * scale
    }
}

/// The complete mixed-integer linear model for one problem instance.
///
/// Variable layout (contiguous ids): kappa[s], zeta[s], gamma[s],
/// chi[s][b], rho[s][c], delta[s][b], pi[s][b][c], then the continuous
/// z[s]. Binariness of the seven binary families stands in for the original
/// binary-domain constraints; gamma is declared binary explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub slots: usize,
    pub l_tx: usize,
    pub l_rx: usize,
    pub min_sensing_slots: usize,
    pub vars: Vec<VarDef>,
    pub rows: Vec<Row>,
    /// Maximized linear objective: sum of rate_per_tx[b] * delta[b][s].
    pub objective: Vec<(usize, f64)>,
    /// Positive factor applied to the G1/G6 rows on LP export so the emitted
    /// file avoids the raw Lambda/psi^2 magnitudes (optimum-preserving).
    pub si_row_scale: f64,
    /// SINR threshold, kept for reconstructing worst-case SINR reports.
    pub sinr_threshold: f64,
}

impl MilpModel {
    pub fn kappa(&self, s: usize) -> usize {
        s
    }

    pub fn zeta(&self, s: usize) -> usize {
        self.slots + s
    }

    pub fn gamma(&self, s: usize) -> usize {
        2 * self.slots + s
    }

    pub fn chi(&self, b: usize, s: usize) -> usize {
        3 * self.slots + s * self.l_tx + b
    }

    pub fn rho(&self, c: usize, s: usize) -> usize {
        3 * self.slots + self.slots * self.l_tx + s * self.l_rx + c
    }

    pub fn delta(&self, b: usize, s: usize) -> usize {
        3 * self.slots + self.slots * (self.l_tx + self.l_rx) + s * self.l_tx + b
    }

    pub fn pi(&self, b: usize, c: usize, s: usize) -> usize {
        3 * self.slots
            + self.slots * (2 * self.l_tx + self.l_rx)
            + s * self.l_tx * self.l_rx
            + b * self.l_rx
            + c
    }

    pub fn z(&self, s: usize) -> usize {
        self.slots * (3 + 2 * self.l_tx + self.l_rx + self.l_tx * self.l_rx) + s
    }

    pub fn n_binary(&self) -> usize {
        self.slots * (3 + 2 * self.l_tx + self.l_rx + self.l_tx * self.l_rx)
    }

    pub fn n_continuous(&self) -> usize {
        self.slots
    }

    pub fn n_vars(&self) -> usize {
        self.n_binary() + self.n_continuous()
    }

    pub fn rows_with_tag(&self, tag: RowTag) -> usize {
        self.rows.iter().filter(|r| r.tag == tag).count()
    }

    /// Objective value at a point.
    pub fn objective_value(&self, point: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * point[v]).sum()
    }

    /// First violated row at a point, if any.
    pub fn first_violated(&self, point: &[f64]) -> Option<&Row> {
        self.rows.iter().find(|r| !r.satisfied(point))
    }
}

/// Materialize the model rows for `slots` timeslots with a sensing quota of
/// `min_sensing_slots`. Row counts per family: D 4*L_tx*S, F 4*S,
/// G2-G5 4*L_tx*L_rx*S, G1 S, G6 S, C6 S, C9 S, C4 1, C13 1.
pub fn build_milp(
    coeffs: &CoefficientTable,
    slots: usize,
    min_sensing_slots: usize,
) -> Result<MilpModel, MilpError> {
    if slots == 0 {
        return Err(MilpError::EmptyHorizon);
    }
    if min_sensing_slots > slots {
        return Err(MilpError::QuotaExceedsHorizon { min_sensing_slots, slots });
    }
    let l_tx = coeffs.l_tx();
    let l_rx = coeffs.l_rx();
    if l_tx == 0 || l_rx == 0 {
        return Err(MilpError::EmptyCodebook);
    }

    let mut model = MilpModel {
        slots,
        l_tx,
        l_rx,
        min_sensing_slots,
        vars: Vec::new(),
        rows: Vec::new(),
        objective: Vec::new(),
        si_row_scale: 1.0 / coeffs.noise_scale,
        sinr_threshold: coeffs.sinr_threshold,
    };

    let mut vars = vec![VarDef { name: String::new(), kind: VarKind::Binary }; model.n_vars()];
    for s in 0..slots {
        vars[model.kappa(s)].name = format!("kappa_s{s}");
        vars[model.zeta(s)].name = format!("zeta_s{s}");
        vars[model.gamma(s)].name = format!("gamma_s{s}");
        for b in 0..l_tx {
            vars[model.chi(b, s)].name = format!("chi_b{b}_s{s}");
            vars[model.delta(b, s)].name = format!("delta_b{b}_s{s}");
        }
        for c in 0..l_rx {
            vars[model.rho(c, s)].name = format!("rho_c{c}_s{s}");
        }
        for b in 0..l_tx {
            for c in 0..l_rx {
                vars[model.pi(b, c, s)].name = format!("pi_b{b}_c{c}_s{s}");
            }
        }
        let z = model.z(s);
        vars[z] = VarDef { name: format!("z_s{s}"), kind: VarKind::Continuous };
    }
    model.vars = vars;

    for s in 0..slots {
        for b in 0..l_tx {
            model.objective.push((model.delta(b, s), coeffs.rate_per_tx[b]));
        }
    }

    let mut rows = Vec::new();
    // C4: the horizon bound on active slots
    rows.push(Row {
        name: "C4".into(),
        tag: RowTag::C4,
        terms: (0..slots).map(|s| (model.gamma(s), 1.0)).collect(),
        sense: RowSense::Le,
        rhs: slots as f64,
    });
    // C6/C9: one codeword exactly when the slot is active / sensing
    for s in 0..slots {
        let mut terms: Vec<(usize, f64)> = (0..l_tx).map(|b| (model.chi(b, s), 1.0)).collect();
        terms.push((model.gamma(s), -1.0));
        rows.push(Row { name: format!("C6_s{s}"), tag: RowTag::C6, terms, sense: RowSense::Eq, rhs: 0.0 });
        let mut terms: Vec<(usize, f64)> = (0..l_rx).map(|c| (model.rho(c, s), 1.0)).collect();
        terms.push((model.zeta(s), -1.0));
        rows.push(Row { name: format!("C9_s{s}"), tag: RowTag::C9, terms, sense: RowSense::Eq, rhs: 0.0 });
    }
    // C13: sensing quota
    rows.push(Row {
        name: "C13".into(),
        tag: RowTag::C13,
        terms: (0..slots).map(|s| (model.zeta(s), 1.0)).collect(),
        sense: RowSense::Ge,
        rhs: min_sensing_slots as f64,
    });
    // D1-D4: delta = chi AND kappa
    for s in 0..slots {
        for b in 0..l_tx {
            let (chi, kappa, delta) = (model.chi(b, s), model.kappa(s), model.delta(b, s));
            rows.push(Row {
                name: format!("D1_s{s}_b{b}"),
                tag: RowTag::D1,
                terms: vec![(delta, 1.0), (chi, -1.0)],
                sense: RowSense::Le,
                rhs: 0.0,
            });
            rows.push(Row {
                name: format!("D2_s{s}_b{b}"),
                tag: RowTag::D2,
                terms: vec![(delta, 1.0), (kappa, -1.0)],
                sense: RowSense::Le,
                rhs: 0.0,
            });
            rows.push(Row {
                name: format!("D3_s{s}_b{b}"),
                tag: RowTag::D3,
                terms: vec![(delta, 1.0), (chi, -1.0), (kappa, -1.0)],
                sense: RowSense::Ge,
                rhs: -1.0,
            });
            rows.push(Row {
                name: format!("D4_s{s}_b{b}"),
                tag: RowTag::D4,
                terms: vec![(delta, 1.0)],
                sense: RowSense::Ge,
                rhs: 0.0,
            });
        }
    }
    // F1-F4: gamma = kappa OR zeta
    for s in 0..slots {
        let (kappa, zeta, gamma) = (model.kappa(s), model.zeta(s), model.gamma(s));
        rows.push(Row {
            name: format!("F1_s{s}"),
            tag: RowTag::F1,
            terms: vec![(gamma, 1.0), (kappa, -1.0), (zeta, -1.0)],
            sense: RowSense::Le,
            rhs: 0.0,
        });
        rows.push(Row {
            name: format!("F2_s{s}"),
            tag: RowTag::F2,
            terms: vec![(gamma, 1.0), (kappa, -1.0)],
            sense: RowSense::Ge,
            rhs: 0.0,
        });
        rows.push(Row {
            name: format!("F3_s{s}"),
            tag: RowTag::F3,
            terms: vec![(gamma, 1.0), (zeta, -1.0)],
            sense: RowSense::Ge,
            rhs: 0.0,
        });
        rows.push(Row {
            name: format!("F4_s{s}"),
            tag: RowTag::F4,
            terms: vec![(gamma, 1.0)],
            sense: RowSense::Le,
            rhs: 1.0,
        });
    }
    // G2-G5: pi = chi AND rho
    for s in 0..slots {
        for b in 0..l_tx {
            for c in 0..l_rx {
                let (chi, rho, pi) = (model.chi(b, s), model.rho(c, s), model.pi(b, c, s));
                rows.push(Row {
                    name: format!("G2_s{s}_b{b}_c{c}"),
                    tag: RowTag::G2,
                    terms: vec![(pi, 1.0), (chi, -1.0)],
                    sense: RowSense::Le,
                    rhs: 0.0,
                });
                rows.push(Row {
                    name: format!("G3_s{s}_b{b}_c{c}"),
                    tag: RowTag::G3,
                    terms: vec![(pi, 1.0), (rho, -1.0)],
                    sense: RowSense::Le,
                    rhs: 0.0,
                });
                rows.push(Row {
                    name: format!("G4_s{s}_b{b}_c{c}"),
                    tag: RowTag::G4,
                    terms: vec![(pi, 1.0), (chi, -1.0), (rho, -1.0)],
                    sense: RowSense::Ge,
                    rhs: -1.0,
                });
                rows.push(Row {
                    name: format!("G5_s{s}_b{b}_c{c}"),
                    tag: RowTag::G5,
                    terms: vec![(pi, 1.0)],
                    sense: RowSense::Ge,
                    rhs: 0.0,
                });
            }
        }
    }
    // G1: accumulated sensing gain must cover z; G6: z must cover the
    // worst-case interference plus noise. Binary pi makes |x pi|^2 = |x|^2 pi.
    for s in 0..slots {
        let mut terms: Vec<(usize, f64)> = Vec::with_capacity(l_tx * l_rx + 1);
        for b in 0..l_tx {
            for c in 0..l_rx {
                terms.push((model.pi(b, c, s), coeffs.sense_gain[[b, c]]));
            }
        }
        terms.push((model.z(s), -1.0));
        rows.push(Row { name: format!("G1_s{s}"), tag: RowTag::G1, terms, sense: RowSense::Ge, rhs: 0.0 });

        let mut terms: Vec<(usize, f64)> = Vec::with_capacity(l_tx * l_rx + l_rx + 1);
        terms.push((model.z(s), 1.0));
        for b in 0..l_tx {
            for c in 0..l_rx {
                terms.push((model.pi(b, c, s), -coeffs.robust_scale * coeffs.si_leak[[b, c]]));
            }
        }
        for c in 0..l_rx {
            terms.push((model.rho(c, s), -coeffs.noise_scale * coeffs.rx_noise[c]));
        }
        rows.push(Row { name: format!("G6_s{s}"), tag: RowTag::G6, terms, sense: RowSense::Ge, rhs: 0.0 });
    }
    model.rows = rows;

    assert_eq!(model.rows_with_tag(RowTag::C4), 1);
    assert_eq!(model.rows_with_tag(RowTag::C6), slots);
    assert_eq!(model.rows_with_tag(RowTag::C9), slots);
    assert_eq!(model.rows_with_tag(RowTag::C13), 1);
    for tag in [RowTag::D1, RowTag::D2, RowTag::D3, RowTag::D4] {
        assert_eq!(model.rows_with_tag(tag), l_tx * slots);
    }
    for tag in [RowTag::F1, RowTag::F2, RowTag::F3, RowTag::F4] {
        assert_eq!(model.rows_with_tag(tag), slots);
    }
    for tag in [RowTag::G2, RowTag::G3, RowTag::G4, RowTag::G5] {
        assert_eq!(model.rows_with_tag(tag), l_tx * l_rx * slots);
    }
    assert_eq!(model.rows_with_tag(RowTag::G1), slots);
    assert_eq!(model.rows_with_tag(RowTag::G6), slots);

    Ok(model)
}

/// Map a schedule onto a full variable valuation: kappa/zeta from the slot
/// flags, one-hot chi/rho from the indices, gamma = kappa OR zeta,
/// delta = chi AND kappa, pi = chi AND rho, and z at its maximum feasible
/// value (the accumulated sensing gain of the selected pair), which makes
/// valuation feasibility coincide with schedule feasibility.
pub fn assignment_to_point(
    model: &MilpModel,
    coeffs: &CoefficientTable,
    schedule: &[SlotAssignment],
) -> Result<Vec<f64>, MilpError> {
    if schedule.len() != model.slots {
        return Err(MilpError::ScheduleLength { got: schedule.len(), expected: model.slots });
    }
    let mut point = vec![0.0; model.n_vars()];
    for (s, slot) in schedule.iter().enumerate() {
        if slot.active() != slot.tx_index.is_some() {
            return Err(MilpError::MalformedSlot {
                slot: s,
                reason: "tx codeword must be selected exactly when the slot is active",
            });
        }
        if slot.sense_on != slot.rx_index.is_some() {
            return Err(MilpError::MalformedSlot {
                slot: s,
                reason: "rx codeword must be selected exactly when the slot senses",
            });
        }
        if slot.comm_on {
            point[model.kappa(s)] = 1.0;
        }
        if slot.sense_on {
            point[model.zeta(s)] = 1.0;
        }
        if slot.active() {
            point[model.gamma(s)] = 1.0;
        }
        if let Some(b) = slot.tx_index {
            if b >= model.l_tx {
                return Err(MilpError::MalformedSlot { slot: s, reason: "tx index out of range" });
            }
            point[model.chi(b, s)] = 1.0;
            if slot.comm_on {
                point[model.delta(b, s)] = 1.0;
            }
        }
        if let Some(c) = slot.rx_index {
            if c >= model.l_rx {
                return Err(MilpError::MalformedSlot { slot: s, reason: "rx index out of range" });
            }
            point[model.rho(c, s)] = 1.0;
            if let Some(b) = slot.tx_index {
                point[model.pi(b, c, s)] = 1.0;
                point[model.z(s)] = coeffs.sense_gain[[b, c]];
            }
        }
    }
    Ok(point)
}

fn fmt_coef(x: f64) -> String {
    // >= 12 significant digits that round-trip exactly; normalize the
    // exponent to a portable signed two-digit form.
    let s = format!("{:.16e}", x);
    match s.find('e') {
        Some(pos) => {
            let (mantissa, exp) = s.split_at(pos);
            let exp: i32 = exp[1..].parse().unwrap();
            format!("{}e{}{:02}", mantissa, if exp < 0 { '-' } else { '+' }, exp.abs())
        }
        None => s,
    }
}

fn push_wrapped(out: &mut String, line: &mut String, piece: &str) {
    if line.len() + piece.len() > 76 {
        out.push_str(line);
        out.push('\n');
        line.clear();
        line.push_str("   ");
    }
    line.push_str(piece);
}

fn write_terms(out: &mut String, line: &mut String, terms: &[(usize, f64)], vars: &[VarDef], scale: f64) {
    for (i, &(v, coef)) in terms.iter().enumerate() {
        let c = coef * scale;
        let sign = if c < 0.0 {
            " - "
        } else if i == 0 {
            " "
        } else {
            " + "
        };
        let piece = format!("{sign}{} {}", fmt_coef(c.abs()), vars[v].name);
        push_wrapped(out, line, &piece);
    }
}

/// Serialize the model in CPLEX-LP textual conventions. The G1/G6 rows are
/// scaled by the positive factor `si_row_scale` (recorded in the header
/// comment) so every printed magnitude stays near unity; positive row
/// scaling preserves the optimum.
pub fn export_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("\\ full-duplex sensing/communication timeslot and beam selection\n");
    let _ = writeln!(
        out,
        "\\ rows G1_*/G6_* scaled by psi^2/Lambda_sinr = {}",
        fmt_coef(model.si_row_scale)
    );
    out.push_str("Maximize\n");
    let mut line = String::from(" obj:");
    write_terms(&mut out, &mut line, &model.objective, &model.vars, 1.0);
    out.push_str(&line);
    out.push('\n');

    out.push_str("Subject To\n");
    for row in &model.rows {
        let scale = match row.tag {
            RowTag::G1 | RowTag::G6 => model.si_row_scale,
            _ => 1.0,
        };
        let mut line = format!(" {}:", row.name);
        write_terms(&mut out, &mut line, &row.terms, &model.vars, scale);
        let sense = match row.sense {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        };
        let piece = format!(" {} {}", sense, fmt_coef(row.rhs * scale));
        push_wrapped(&mut out, &mut line, &piece);
        out.push_str(&line);
        out.push('\n');
    }

    out.push_str("Bounds\n");
    for var in &model.vars {
        if var.kind == VarKind::Continuous {
            let _ = writeln!(out, " {} >= 0", var.name);
        }
    }

    out.push_str("Binaries\n");
    let mut line = String::from(" ");
    for var in &model.vars {
        if var.kind == VarKind::Binary {
            push_wrapped(&mut out, &mut line, &format!("{} ", var.name));
        }
    }
    out.push_str(line.trim_end());
    out.push('\n');
    out.push_str("End\n");
    out
}

/// Write the exported model to a file.
pub fn write_lp(model: &MilpModel, path: &std::path::Path) -> std::io::Result<()> {
    std::fs::write(path, export_lp(model))
}
