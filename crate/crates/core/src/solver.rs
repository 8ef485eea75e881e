//! Three independent routes to the global optimum: a structured closed form
//! (fast path), depth-first branch-and-bound over the MILP (validation path),
//! and exhaustive enumeration (oracle). All three use identical tie-breaking
//! (lowest tx index, then lowest rx index, then earliest slot) so outputs are
//! reproducible byte for byte, and tests certify that they agree.

use thiserror::Error;

use crate::metrics::SlotAssignment;
use crate::milp::{CoefficientTable, MilpModel, RowTag};

/// Relative tolerance for objective agreement between solvers.
pub const CERTIFY_TOLERANCE: f64 = 1e-9;

/// Default cap on the number of enumerated schedules in the brute-force path.
pub const DEFAULT_ENUMERATION_CAP: f64 = 1e8;

/// Default branch-and-bound node budget.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("enumeration size {size:.3e} exceeds the configured cap {cap:.3e}")]
    EnumerationCapExceeded { size: f64, cap: f64 },
    #[error("branch-and-bound node budget {budget} exhausted after {explored} nodes")]
    NodeBudgetExceeded { budget: u64, explored: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverId {
    Structured,
    BranchBound,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleReason {
    /// No (tx, rx) codeword pair survives the worst-case sensing constraint.
    NoFeasibleBeamPair,
    /// The sensing quota exceeds the number of timeslots.
    QuotaExceedsHorizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible(InfeasibleReason),
}

/// A solver result: the schedule, its objective, and the worst-case sensing
/// SINR per slot (None for slots that do not sense).
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub schedule: Vec<SlotAssignment>,
    pub objective_bits: f64,
    pub status: SolveStatus,
    pub per_slot_worst_sinr: Vec<Option<f64>>,
    pub solver_id: SolverId,
}

impl Solution {
    fn infeasible(reason: InfeasibleReason, solver_id: SolverId) -> Self {
        Self {
            schedule: Vec::new(),
            objective_bits: 0.0,
            status: SolveStatus::Infeasible(reason),
            per_slot_worst_sinr: Vec::new(),
            solver_id,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Best communication codeword: highest rate, lowest index on ties.
fn best_comm(coeffs: &CoefficientTable) -> (usize, f64) {
    let mut best = (0usize, f64::NEG_INFINITY);
    for (b, &rate) in coeffs.rate_per_tx.iter().enumerate() {
        if rate > best.1 {
            best = (b, rate);
        }
    }
    best
}

/// Best robust-feasible (tx, rx) pair by rate, lexicographically lowest on
/// ties. None when no pair satisfies the worst-case sensing constraint.
fn best_shared(coeffs: &CoefficientTable) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for b in 0..coeffs.l_tx() {
        for c in 0..coeffs.l_rx() {
            if coeffs.pair_feasible(b, c) {
                let rate = coeffs.rate_per_tx[b];
                if best.map_or(true, |(_, _, r)| rate > r) {
                    best = Some((b, c, rate));
                }
            }
        }
    }
    best
}

fn finish(coeffs: &CoefficientTable, schedule: Vec<SlotAssignment>, solver_id: SolverId) -> Solution {
    let objective_bits = schedule
        .iter()
        .map(|slot| match (slot.comm_on, slot.tx_index) {
            (true, Some(b)) => coeffs.rate_per_tx[b],
            _ => 0.0,
        })
        .sum();
    let per_slot_worst_sinr = schedule
        .iter()
        .map(|slot| match (slot.sense_on, slot.tx_index, slot.rx_index) {
            (true, Some(b), Some(c)) => Some(coeffs.worst_case_sinr(b, c)),
            _ => None,
        })
        .collect();
    Solution { schedule, objective_bits, status: SolveStatus::Optimal, per_slot_worst_sinr, solver_id }
}

/// Closed-form exact solver. Channel invariance over the horizon makes slots
/// exchangeable, so the optimum places the sensing quota in the first
/// `min_sensing_slots` slots, shares them with communication on the best
/// robust-feasible pair, and runs the best communication codeword elsewhere.
/// Correctness is never assumed: the enumeration oracle gates it in tests.
pub fn solve_structured(coeffs: &CoefficientTable, slots: usize, min_sensing_slots: usize) -> Solution {
    if min_sensing_slots > slots {
        return Solution::infeasible(InfeasibleReason::QuotaExceedsHorizon, SolverId::Structured);
    }
    let (b_comm, _) = best_comm(coeffs);
    let shared = if min_sensing_slots > 0 {
        match best_shared(coeffs) {
            Some(pair) => Some(pair),
            None => {
                return Solution::infeasible(InfeasibleReason::NoFeasibleBeamPair, SolverId::Structured)
            }
        }
    } else {
        None
    };
    let schedule: Vec<SlotAssignment> = (0..slots)
        .map(|s| {
            if s < min_sensing_slots {
                let (b, c, _) = shared.unwrap();
                SlotAssignment::shared(b, c)
            } else {
                SlotAssignment::comm_only(b_comm)
            }
        })
        .collect();
    finish(coeffs, schedule, SolverId::Structured)
}

/// Exhaustive oracle with the sensing-first symmetry reduction: the first
/// `min_sensing_slots` slots enumerate shared (tx, rx) pairs, the remaining
/// slots enumerate communication codewords plus idle. Enumeration order is
/// lexicographic and only strict improvements replace the incumbent, which
/// reproduces the structured tie-breaking.
pub fn solve_bruteforce(
    coeffs: &CoefficientTable,
    slots: usize,
    min_sensing_slots: usize,
) -> Result<Solution, SolverError> {
    solve_bruteforce_with_cap(coeffs, slots, min_sensing_slots, DEFAULT_ENUMERATION_CAP)
}

pub fn solve_bruteforce_with_cap(
    coeffs: &CoefficientTable,
    slots: usize,
    min_sensing_slots: usize,
    cap: f64,
) -> Result<Solution, SolverError> {
    if min_sensing_slots > slots {
        return Ok(Solution::infeasible(InfeasibleReason::QuotaExceedsHorizon, SolverId::BruteForce));
    }
    let l_tx = coeffs.l_tx() as f64;
    let l_rx = coeffs.l_rx() as f64;
    let size = (l_tx * l_rx).powi(min_sensing_slots as i32)
        * (l_tx + 1.0).powi((slots - min_sensing_slots) as i32);
    if size > cap {
        return Err(SolverError::EnumerationCapExceeded { size, cap });
    }

    struct Search<'a> {
        coeffs: &'a CoefficientTable,
        slots: usize,
        min_sensing_slots: usize,
        current: Vec<SlotAssignment>,
        best: Option<(f64, Vec<SlotAssignment>)>,
    }

    impl Search<'_> {
        fn recurse(&mut self, s: usize, acc: f64) {
            if s == self.slots {
                if self.best.as_ref().map_or(true, |(obj, _)| acc > *obj) {
                    self.best = Some((acc, self.current.clone()));
                }
                return;
            }
            if s < self.min_sensing_slots {
                for b in 0..self.coeffs.l_tx() {
                    for c in 0..self.coeffs.l_rx() {
                        if self.coeffs.pair_feasible(b, c) {
                            self.current.push(SlotAssignment::shared(b, c));
                            self.recurse(s + 1, acc + self.coeffs.rate_per_tx[b]);
                            self.current.pop();
                        }
                    }
                }
            } else {
                for b in 0..self.coeffs.l_tx() {
                    self.current.push(SlotAssignment::comm_only(b));
                    self.recurse(s + 1, acc + self.coeffs.rate_per_tx[b]);
                    self.current.pop();
                }
                self.current.push(SlotAssignment::idle());
                self.recurse(s + 1, acc);
                self.current.pop();
            }
        }
    }

    let mut search = Search { coeffs, slots, min_sensing_slots, current: Vec::new(), best: None };
    search.recurse(0, 0.0);
    match search.best {
        Some((_, schedule)) => Ok(finish(coeffs, schedule, SolverId::BruteForce)),
        None => Ok(Solution::infeasible(InfeasibleReason::NoFeasibleBeamPair, SolverId::BruteForce)),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BranchBoundOptions {
    pub node_budget: u64,
}

impl Default for BranchBoundOptions {
    fn default() -> Self {
        Self { node_budget: DEFAULT_NODE_BUDGET }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BranchBoundStats {
    /// Visited search nodes (slot decisions taken).
    pub nodes: u64,
}

/// Per-slot structure recovered from the model rows; identical for every slot
/// by construction, so slot 0 is read.
struct ModelTables {
    rate: Vec<f64>,
    gain: Vec<f64>,
    g6_pi: Vec<f64>,
    g6_rho: Vec<f64>,
}

fn extract_tables(model: &MilpModel) -> ModelTables {
    let l_tx = model.l_tx;
    let l_rx = model.l_rx;
    let mut rate = vec![0.0; l_tx];
    let delta_base = model.delta(0, 0);
    for &(v, c) in &model.objective {
        if v >= delta_base && v < delta_base + l_tx {
            rate[v - delta_base] = c;
        }
    }
    let mut gain = vec![0.0; l_tx * l_rx];
    let mut g6_pi = vec![0.0; l_tx * l_rx];
    let mut g6_rho = vec![0.0; l_rx];
    let pi_base = model.pi(0, 0, 0);
    let rho_base = model.rho(0, 0);
    for row in &model.rows {
        if row.tag == RowTag::G1 && row.name == "G1_s0" {
            for &(v, c) in &row.terms {
                if v >= pi_base && v < pi_base + l_tx * l_rx {
                    gain[v - pi_base] = c;
                }
            }
        }
        if row.tag == RowTag::G6 && row.name == "G6_s0" {
            for &(v, c) in &row.terms {
                if v >= pi_base && v < pi_base + l_tx * l_rx {
                    g6_pi[v - pi_base] = -c;
                } else if v >= rho_base && v < rho_base + l_rx {
                    g6_rho[v - rho_base] = -c;
                }
            }
        }
    }
    ModelTables { rate, gain, g6_pi, g6_rho }
}

impl ModelTables {
    fn pair_feasible(&self, b: usize, c: usize, l_rx: usize) -> bool {
        self.gain[b * l_rx + c] >= self.g6_pi[b * l_rx + c] + self.g6_rho[c]
    }
}

struct BbSearch<'m> {
    model: &'m MilpModel,
    tables: &'m ModelTables,
    comm_order: &'m [usize],
    pair_order: &'m [(usize, usize)],
    slots: usize,
    v_comm: f64,
    v_shared: Option<f64>,
    budget: u64,
    nodes: u64,
    current: Vec<SlotAssignment>,
    incumbent: Option<(f64, Vec<SlotAssignment>)>,
}

impl BbSearch<'_> {
    /// Admissible bound on an undecided tail of `u` slots of which `owed`
    /// are still claimed by the sensing quota.
    fn tail_bound(&self, u: usize, owed: usize) -> f64 {
        if owed > u {
            return f64::NEG_INFINITY;
        }
        if owed == 0 {
            return u as f64 * self.v_comm;
        }
        match self.v_shared {
            None => f64::NEG_INFINITY,
            Some(vs) => (u - owed) as f64 * self.v_comm + owed as f64 * vs,
        }
    }

    fn prune(&self, value: f64) -> bool {
        self.incumbent.as_ref().map_or(false, |(best, _)| value <= *best)
    }

    /// Verify a complete assignment against the model rows, then accept it
    /// as the incumbent.
    fn leaf(&mut self, acc: f64) {
        if !self.incumbent.as_ref().map_or(true, |(obj, _)| acc > *obj) {
            return;
        }
        let mut point = vec![0.0; self.model.n_vars()];
        for (s, slot) in self.current.iter().enumerate() {
            if slot.comm_on {
                point[self.model.kappa(s)] = 1.0;
            }
            if slot.sense_on {
                point[self.model.zeta(s)] = 1.0;
            }
            if slot.active() {
                point[self.model.gamma(s)] = 1.0;
            }
            if let Some(b) = slot.tx_index {
                point[self.model.chi(b, s)] = 1.0;
                if slot.comm_on {
                    point[self.model.delta(b, s)] = 1.0;
                }
                if let Some(c) = slot.rx_index {
                    point[self.model.rho(c, s)] = 1.0;
                    point[self.model.pi(b, c, s)] = 1.0;
                    point[self.model.z(s)] = self.tables.gain[b * self.model.l_rx + c];
                }
            }
        }
        if self.model.first_violated(&point).is_none() {
            self.incumbent = Some((acc, self.current.clone()));
        }
    }

    /// Returns false when the node budget is exhausted.
    fn recurse(&mut self, s: usize, acc: f64, owed: usize) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        if s == self.slots {
            if owed == 0 {
                self.leaf(acc);
            }
            return true;
        }
        let rest = self.slots - s - 1;

        // zeta = 0, kappa = 1: communicate (children by rate, descending)
        if self.tail_bound(rest, owed) > f64::NEG_INFINITY {
            for &b in self.comm_order {
                let bound = acc + self.tables.rate[b] + self.tail_bound(rest, owed);
                if self.prune(bound) {
                    continue;
                }
                self.current.push(SlotAssignment::comm_only(b));
                let ok = self.recurse(s + 1, acc + self.tables.rate[b], owed);
                self.current.pop();
                if !ok {
                    return false;
                }
            }
        }
        let owed_after = owed.saturating_sub(1);
        if self.tail_bound(rest, owed_after) > f64::NEG_INFINITY {
            // zeta = 1, kappa = 1: share the slot
            for &(b, c) in self.pair_order {
                let bound = acc + self.tables.rate[b] + self.tail_bound(rest, owed_after);
                if self.prune(bound) {
                    continue;
                }
                self.current.push(SlotAssignment::shared(b, c));
                let ok = self.recurse(s + 1, acc + self.tables.rate[b], owed_after);
                self.current.pop();
                if !ok {
                    return false;
                }
            }
            // zeta = 1, kappa = 0: sense without communicating
            for &(b, c) in self.pair_order {
                let bound = acc + self.tail_bound(rest, owed_after);
                if self.prune(bound) {
                    continue;
                }
                self.current.push(SlotAssignment::sense_only(b, c));
                let ok = self.recurse(s + 1, acc, owed_after);
                self.current.pop();
                if !ok {
                    return false;
                }
            }
        }
        // zeta = 0, kappa = 0: idle
        if self.tail_bound(rest, owed) > f64::NEG_INFINITY {
            let bound = acc + self.tail_bound(rest, owed);
            if !self.prune(bound) {
                self.current.push(SlotAssignment::idle());
                let ok = self.recurse(s + 1, acc, owed);
                self.current.pop();
                if !ok {
                    return false;
                }
            }
        }
        true
    }
}

/// Depth-first branch-and-bound over the MILP binaries in family order
/// (zeta, kappa, then the one-hot chi/rho choices); delta, pi, gamma, and z
/// are propagated through the D/F/G logic rows. The bound adds, for each
/// undecided slot, the best communication rate, downgraded to the best
/// shared-pair rate on slots the sensing quota still claims. Every incumbent
/// is verified against the full row set before acceptance.
pub fn solve_branch_bound(model: &MilpModel) -> Result<Solution, SolverError> {
    solve_branch_bound_with(model, BranchBoundOptions::default()).map(|(s, _)| s)
}

pub fn solve_branch_bound_with(
    model: &MilpModel,
    options: BranchBoundOptions,
) -> Result<(Solution, BranchBoundStats), SolverError> {
    let tables = extract_tables(model);
    let l_tx = model.l_tx;
    let l_rx = model.l_rx;

    let mut comm_order: Vec<usize> = (0..l_tx).collect();
    comm_order.sort_by(|&a, &b| tables.rate[b].partial_cmp(&tables.rate[a]).unwrap().then(a.cmp(&b)));
    let mut pair_order: Vec<(usize, usize)> = Vec::new();
    for b in 0..l_tx {
        for c in 0..l_rx {
            if tables.pair_feasible(b, c, l_rx) {
                pair_order.push((b, c));
            }
        }
    }
    pair_order.sort_by(|&(ab, ac), &(bb, bc)| {
        tables.rate[bb].partial_cmp(&tables.rate[ab]).unwrap().then(ab.cmp(&bb)).then(ac.cmp(&bc))
    });

    let v_comm = comm_order.first().map(|&b| tables.rate[b].max(0.0)).unwrap_or(0.0);
    let v_shared = pair_order.first().map(|&(b, _)| tables.rate[b]);

    let mut search = BbSearch {
        model,
        tables: &tables,
        comm_order: &comm_order,
        pair_order: &pair_order,
        slots: model.slots,
        v_comm,
        v_shared,
        budget: options.node_budget,
        nodes: 0,
        current: Vec::new(),
        incumbent: None,
    };
    if !search.recurse(0, 0.0, model.min_sensing_slots) {
        return Err(SolverError::NodeBudgetExceeded {
            budget: options.node_budget,
            explored: search.nodes,
        });
    }
    let stats = BranchBoundStats { nodes: search.nodes };
    let solution = match search.incumbent {
        Some((_, schedule)) => {
            let objective_bits = schedule
                .iter()
                .map(|slot| match (slot.comm_on, slot.tx_index) {
                    (true, Some(b)) => tables.rate[b],
                    _ => 0.0,
                })
                .sum();
            let per_slot_worst_sinr = schedule
                .iter()
                .map(|slot| match (slot.sense_on, slot.tx_index, slot.rx_index) {
                    (true, Some(b), Some(c)) => {
                        let denom = tables.g6_pi[b * l_rx + c] + tables.g6_rho[c];
                        Some(model.sinr_threshold * tables.gain[b * l_rx + c] / denom)
                    }
                    _ => None,
                })
                .collect();
            Solution {
                schedule,
                objective_bits,
                status: SolveStatus::Optimal,
                per_slot_worst_sinr,
                solver_id: SolverId::BranchBound,
            }
        }
        None => Solution::infeasible(InfeasibleReason::NoFeasibleBeamPair, SolverId::BranchBound),
    };
    Ok((solution, stats))
}

/// Objective-level certification: statuses must match, and optimal solutions
/// must agree in objective to relative tolerance.
pub fn certify(a: &Solution, b: &Solution) -> bool {
    match (&a.status, &b.status) {
        (SolveStatus::Optimal, SolveStatus::Optimal) => {
            let scale = 1f64.max(a.objective_bits.abs()).max(b.objective_bits.abs());
            (a.objective_bits - b.objective_bits).abs() <= CERTIFY_TOLERANCE * scale
        }
        (SolveStatus::Infeasible(_), SolveStatus::Infeasible(_)) => true,
        _ => false,
    }
}
