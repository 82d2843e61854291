//! Collision-model homogenization: partial-swap collisions drive a system
//! qubit toward the reservoir state. Includes reservoir reuse without reset
//! and a feasibility scan over reservoir size and coupling strength.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    apply_unitary, partial_trace, trace_distance, C64, DensityMatrix, UnitaryMatrix,
};

/// Permitted deviation between a reuse config's reservoir state and the one
/// the task is defined against.
const XI_MATCH_TOL: f64 = 1e-12;

/// Reservoir description: `n` qubits in state `xi`, each coupled to the
/// system once via a partial swap of strength `eta`.
#[derive(Debug, Clone)]
pub struct HomogenizerConfig {
    n: usize,
    eta: f64,
    xi: DensityMatrix,
}

impl HomogenizerConfig {
    /// Requires `n ≥ 1`, `eta ∈ (0, π/2]`, and a qubit `xi`.
    pub fn new(n: usize, eta: f64, xi: DensityMatrix) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "reservoir needs at least one qubit".into(),
            ));
        }
        if !eta.is_finite() || eta <= 0.0 || eta > FRAC_PI_2 {
            return Err(Error::InvalidArgument(format!(
                "coupling strength must lie in (0, pi/2], got {eta}"
            )));
        }
        if xi.dim() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "reservoir state must be a qubit, got dim {}",
                xi.dim()
            )));
        }
        Ok(Self { n, eta, xi })
    }

    /// Reservoir of `n` qubits prepared in the state `task` assumes.
    pub fn for_task(task: ReuseTask, n: usize, eta: f64) -> Result<Self> {
        Self::new(n, eta, task.required_reservoir())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn xi(&self) -> &DensityMatrix {
        &self.xi
    }
}

/// Two-qubit partial swap cos η·1 + i sin η·S in the basis
/// |00⟩, |01⟩, |10⟩, |11⟩.
pub fn partial_swap(eta: f64) -> UnitaryMatrix {
    assert!(eta.is_finite(), "coupling angle must be finite");
    let c = C64::new(eta.cos(), 0.0);
    let is = C64::new(0.0, eta.sin());
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = c + is;
    m[(3, 3)] = c + is;
    m[(1, 1)] = c;
    m[(2, 2)] = c;
    m[(1, 2)] = is;
    m[(2, 1)] = is;
    UnitaryMatrix::new(m).expect("cos η·1 + i sin η·S is unitary for real η")
}

/// Marginal of a two-qubit state, rescaled to unit trace. The joint trace is
/// the product of the input traces, so without the rescale an ulp-level
/// deviation would double at every collision and derail long reuse runs.
fn unit_trace_marginal(joint: &DensityMatrix, keep: usize) -> Result<DensityMatrix> {
    let reduced = partial_trace(joint, &[2, 2], keep)?;
    let tr = reduced.matrix().trace().re;
    DensityMatrix::new(reduced.matrix().unscale(tr))
}

fn collide_with(
    swap: &UnitaryMatrix,
    system: &DensityMatrix,
    partner: &DensityMatrix,
) -> Result<(DensityMatrix, DensityMatrix)> {
    let joint = apply_unitary(swap, &system.tensor(partner))?;
    Ok((
        unit_trace_marginal(&joint, 0)?,
        unit_trace_marginal(&joint, 1)?,
    ))
}

/// One partial-swap collision; returns the reduced (system, partner) pair.
///
/// Reduced system state: cos²η·ρ + sin²η·ξ + i sin η cos η (ξρ − ρξ);
/// the partner gets the same expression with ρ and ξ exchanged.
pub fn collide(
    system: &DensityMatrix,
    partner: &DensityMatrix,
    eta: f64,
) -> Result<(DensityMatrix, DensityMatrix)> {
    if system.dim() != 2 || partner.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "collision takes two qubits, got dims {} and {}",
            system.dim(),
            partner.dim()
        )));
    }
    collide_with(&partial_swap(eta), system, partner)
}

/// Passes `rho` through one collision with each reservoir qubit in order,
/// discarding correlations after every step. Returns the final system state
/// and the post-collision reservoir states.
pub fn homogenize(
    rho: &DensityMatrix,
    cfg: &HomogenizerConfig,
) -> Result<(DensityMatrix, Vec<DensityMatrix>)> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "system must be a qubit, got dim {}",
            rho.dim()
        )));
    }
    let swap = partial_swap(cfg.eta);
    let mut system = rho.clone();
    let mut reservoir = vec![cfg.xi.clone(); cfg.n];
    for slot in reservoir.iter_mut() {
        let (s, r) = collide_with(&swap, &system, slot)?;
        system = s;
        *slot = r;
    }
    Ok((system, reservoir))
}

/// Repeated-use task: which transformation the reservoir is asked to perform
/// on every fresh system qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReuseTask {
    /// Fresh |0⟩⟨0| systems driven toward I/2 by an I/2 reservoir.
    PureToMixed,
    /// Fresh I/2 systems driven toward |1⟩⟨1| by a |1⟩⟨1| reservoir.
    MixedToPure,
}

impl ReuseTask {
    pub fn label(self) -> &'static str {
        match self {
            ReuseTask::PureToMixed => "pure_to_mixed",
            ReuseTask::MixedToPure => "mixed_to_pure",
        }
    }

    /// Reservoir qubit state the task is defined against.
    pub fn required_reservoir(self) -> DensityMatrix {
        match self {
            ReuseTask::PureToMixed => DensityMatrix::maximally_mixed(2),
            ReuseTask::MixedToPure => DensityMatrix::from_diagonal(&[0.0, 1.0])
                .expect("basis-state diagonal is a valid state"),
        }
    }

    /// State each fresh system qubit starts in.
    pub fn fresh_input(self) -> DensityMatrix {
        match self {
            ReuseTask::PureToMixed => DensityMatrix::from_diagonal(&[1.0, 0.0])
                .expect("basis-state diagonal is a valid state"),
            ReuseTask::MixedToPure => DensityMatrix::maximally_mixed(2),
        }
    }

    /// State the task tries to produce on every use.
    pub fn target(self) -> DensityMatrix {
        match self {
            ReuseTask::PureToMixed => DensityMatrix::maximally_mixed(2),
            ReuseTask::MixedToPure => DensityMatrix::from_diagonal(&[0.0, 1.0])
                .expect("basis-state diagonal is a valid state"),
        }
    }
}

/// Outcome of one reservoir use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReuseRecord {
    /// 1-based index of the system qubit passed through the reservoir.
    pub use_index: usize,
    /// Trace distance of the output system state from the task target.
    pub task_error: f64,
    /// Mean trace distance of the reservoir qubits from their initial state.
    pub reservoir_drift: f64,
}

/// Passes `m` fresh system qubits through the same reservoir without reset;
/// reservoir states accumulate damage across uses.
///
/// `cfg.xi` must equal the reservoir state the task assumes.
pub fn reuse_experiment(
    task: ReuseTask,
    m: usize,
    cfg: &HomogenizerConfig,
) -> Result<Vec<ReuseRecord>> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "reuse experiment needs at least one use".into(),
        ));
    }
    let required = task.required_reservoir();
    let max_dev = (cfg.xi.matrix() - required.matrix())
        .iter()
        .map(|e| e.norm())
        .fold(0.0, f64::max);
    if max_dev > XI_MATCH_TOL {
        return Err(Error::InvalidArgument(format!(
            "reservoir state deviates from the {} reservoir by {max_dev:.3e}",
            task.label()
        )));
    }

    let swap = partial_swap(cfg.eta);
    let fresh = task.fresh_input();
    let target = task.target();
    let mut reservoir = vec![cfg.xi.clone(); cfg.n];
    let mut records = Vec::with_capacity(m);
    for use_index in 1..=m {
        let mut system = fresh.clone();
        for slot in reservoir.iter_mut() {
            let (s, r) = collide_with(&swap, &system, slot)?;
            system = s;
            *slot = r;
        }
        let task_error = trace_distance(&system, &target)?;
        let mut drift = 0.0;
        for slot in &reservoir {
            drift += trace_distance(slot, &cfg.xi)?;
        }
        records.push(ReuseRecord {
            use_index,
            task_error,
            reservoir_drift: drift / cfg.n as f64,
        });
    }
    Ok(records)
}

/// One cell of a reuse feasibility scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityEntry {
    pub n: usize,
    pub eta: f64,
    /// Every one of the `m` uses met the accuracy target.
    pub feasible: bool,
    /// Largest use count whose errors all met the target: the maximal number
    /// of uses this cell supports, capped at `m`.
    pub feasible_prefix: usize,
}

/// Runs `reuse_experiment` on every (n, eta) grid cell; a cell is feasible
/// iff all `m` task errors stay within `eps_acc`.
pub fn constructor_feasibility_scan(
    task: ReuseTask,
    m: usize,
    eps_acc: f64,
    n_grid: &[usize],
    eta_grid: &[f64],
) -> Result<Vec<FeasibilityEntry>> {
    if n_grid.is_empty() || eta_grid.is_empty() {
        return Err(Error::InvalidArgument("feasibility grid is empty".into()));
    }
    if eps_acc <= 0.0 || !eps_acc.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "accuracy target must be positive and finite, got {eps_acc}"
        )));
    }
    let mut table = Vec::with_capacity(n_grid.len() * eta_grid.len());
    for &n in n_grid {
        for &eta in eta_grid {
            let cfg = HomogenizerConfig::for_task(task, n, eta)?;
            let records = reuse_experiment(task, m, &cfg)?;
            let feasible_prefix = records
                .iter()
                .take_while(|r| r.task_error <= eps_acc)
                .count();
            table.push(FeasibilityEntry {
                n,
                eta,
                feasible: feasible_prefix == m,
                feasible_prefix,
            });
        }
    }
    Ok(table)
}
