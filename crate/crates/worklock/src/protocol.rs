//! Work extraction from qubit coherence using a ladder reference.
//!
//! A coherent qubit ψ(p,φ) = √(1−p)|0⟩ + √p·e^{−iφ}|1⟩ cannot yield more
//! work than its dephased counterpart under energy-conserving operations
//! alone. Coupling it to an L-level ladder reference through the joint
//! unitary V(U) approximately enacts an arbitrary qubit rotation U while
//! conserving total energy, unlocking the coherent contribution. This
//! module builds V(U), runs pre-processing, models the work-extraction
//! step, repumps the reference, and sweeps the (r, quality) plane where
//! the coherent protocol beats the best incoherent strategy.
//!
//! The qubit gap equals one ladder quantum; both are the unit of energy.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{partial_trace_raw, C64, DensityMatrix, PureState, UnitaryMatrix};
use crate::thermo::{dephase, single_shot_work, HamiltonianSpec, ThermalContext};

/// Work charged per repump step, in qubit-gap units.
pub const REPUMP_COST: f64 = 1.0;
/// A protocol failure probability must undercut the incoherent baseline by
/// this much before a sweep point counts as an improvement.
const IMPROVEMENT_MARGIN: f64 = 1e-9;
/// Slack for the feasibility bound quality ≤ (L−1)/L.
const QUALITY_FEASIBILITY_TOL: f64 = 1e-9;

/// System Hamiltonian diag(0, 1): the qubit gap is resonant with the
/// ladder spacing, which is what makes V(U) energy conserving.
pub fn system_hamiltonian() -> HamiltonianSpec {
    HamiltonianSpec::two_level(1.0)
}

/// ψ(p,φ) = √(1−p)|0⟩ + √p·e^{−iφ}|1⟩.
pub fn make_input(p: f64, phi: f64) -> Result<PureState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must lie in [0, 1], got {p}")));
    }
    let amps = nalgebra::DVector::from_vec(vec![
        C64::new((1.0 - p).sqrt(), 0.0),
        C64::from_polar(p.sqrt(), -phi),
    ]);
    PureState::new(amps)
}

/// Qubit input parameters (p, φ).
#[derive(Debug, Clone, Copy)]
pub struct CoherentInput {
    p: f64,
    phi: f64,
}

impl CoherentInput {
    pub fn new(p: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("p must lie in [0, 1], got {p}")));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidArgument("phi must be finite".into()));
        }
        Ok(Self { p, phi })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn state(&self) -> PureState {
        make_input(self.p, self.phi).expect("parameters validated on construction")
    }
}

/// Target thermal distribution (1−r, r) with its coherent Gibbs state
/// |γ⟩ = √(1−r)|0⟩ + √r|1⟩.
#[derive(Debug, Clone, Copy)]
pub struct GibbsTarget {
    r: f64,
}

impl GibbsTarget {
    pub fn new(r: f64) -> Result<Self> {
        if !(r.is_finite() && 0.0 < r && r < 1.0) {
            return Err(Error::InvalidArgument(format!("r must lie in (0, 1), got {r}")));
        }
        Ok(Self { r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn coherent_gibbs(&self) -> PureState {
        make_input(self.r, 0.0).expect("r validated on construction")
    }
}

/// U(p,φ): rotates ψ(p,φ) onto |1⟩ exactly. For φ = 0 this is the real
/// rotation [[√p, −√(1−p)], [√(1−p), √p]]; general φ right-multiplies it
/// by diag(1, e^{iφ}).
pub fn rotation_unitary(p: f64, phi: f64) -> UnitaryMatrix {
    assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1]");
    let a = p.sqrt();
    let b = (1.0 - p).sqrt();
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(a, 0.0),
            -C64::from_polar(b, phi),
            C64::new(b, 0.0),
            C64::from_polar(a, phi),
        ],
    );
    UnitaryMatrix::new(m).expect("rotation matrices are unitary")
}

/// Ladder shift Δ = Σ |n+1⟩⟨n|, truncated at dimension L (Δ|L−1⟩ = 0).
pub fn shift_operator(l: usize) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(l, l);
    for n in 0..l.saturating_sub(1) {
        m[(n + 1, n)] = C64::new(1.0, 0.0);
    }
    m
}

/// ⟨Δ̄⟩ = ½·Tr(ρ(Δ+Δ†)); 0 for any Fock state, (L−1)/L for the uniform
/// superposition, approaching 1 as L grows.
pub fn coherence_quality(rho: &DensityMatrix) -> f64 {
    let delta = shift_operator(rho.dim());
    let sym = &delta + delta.adjoint();
    0.5 * (rho.matrix() * sym).trace().re
}

/// L-level ladder reference with its coherence quality cached.
#[derive(Debug, Clone)]
pub struct ReferenceState {
    rho: DensityMatrix,
    quality: f64,
}

impl ReferenceState {
    pub fn from_density(rho: DensityMatrix) -> Self {
        let quality = coherence_quality(&rho);
        Self { rho, quality }
    }

    /// Pure uniform superposition (1/√L)·Σ|n⟩, quality (L−1)/L.
    pub fn uniform_superposition(l: usize) -> Result<Self> {
        check_ladder_dim(l)?;
        let amp = C64::new(1.0 / (l as f64).sqrt(), 0.0);
        let amps = nalgebra::DVector::from_element(l, amp);
        Ok(Self::from_density(PureState::new(amps)?.density()))
    }

    /// Fock state |n⟩⟨n|, quality 0.
    pub fn fock(l: usize, n: usize) -> Result<Self> {
        check_ladder_dim(l)?;
        if n >= l {
            return Err(Error::InvalidArgument(format!("Fock level {n} outside 0..{l}")));
        }
        Ok(Self::from_density(PureState::basis(l, n).density()))
    }

    /// Reference at an exact requested quality t ∈ [0, (L−1)/L]: the mixture
    /// λ·|u⟩⟨u| + (1−λ)·D(|u⟩⟨u|) of the uniform superposition with its
    /// dephased (maximally mixed) version, λ = tL/(L−1).
    pub fn with_quality(l: usize, quality: f64) -> Result<Self> {
        check_ladder_dim(l)?;
        let max_quality = (l as f64 - 1.0) / l as f64;
        if !quality.is_finite() || quality < 0.0 || quality > max_quality + QUALITY_FEASIBILITY_TOL
        {
            return Err(Error::InvalidArgument(format!(
                "quality {quality} outside the feasible range [0, {max_quality}] for L = {l}"
            )));
        }
        let lambda = (quality * l as f64 / (l as f64 - 1.0)).min(1.0);
        let uniform = lambda / l as f64;
        let extra = (1.0 - lambda) / l as f64;
        let mat = DMatrix::from_fn(l, l, |i, j| {
            C64::new(if i == j { uniform + extra } else { uniform }, 0.0)
        });
        Ok(Self::from_density(DensityMatrix::new(mat)?))
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn quality(&self) -> f64 {
        self.quality
    }
}

fn check_ladder_dim(l: usize) -> Result<()> {
    if l < 2 {
        return Err(Error::InvalidArgument(format!(
            "ladder dimension must be at least 2, got {l}"
        )));
    }
    Ok(())
}

/// Joint unitary V(U) on C²⊗C^L (system slow index). Total energy
/// n_S + n_R splits the space into shells; V acts as U on each interior
/// shell span{|0,k⟩, |1,k−1⟩} and as identity on the two singleton shells
/// |0,0⟩ and |1,L−1⟩.
pub fn build_v(u: &UnitaryMatrix, l: usize) -> Result<UnitaryMatrix> {
    if u.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "shell unitary must be 2x2, got dim {}",
            u.dim()
        )));
    }
    check_ladder_dim(l)?;
    let um = u.matrix();
    let dim = 2 * l;
    let mut v = DMatrix::<C64>::zeros(dim, dim);
    v[(0, 0)] = C64::new(1.0, 0.0);
    v[(dim - 1, dim - 1)] = C64::new(1.0, 0.0);
    for shell in 1..l {
        let top = shell; // |0, shell⟩
        let bot = l + shell - 1; // |1, shell−1⟩
        v[(top, top)] = um[(0, 0)];
        v[(top, bot)] = um[(0, 1)];
        v[(bot, top)] = um[(1, 0)];
        v[(bot, bot)] = um[(1, 1)];
    }
    UnitaryMatrix::new(v)
}

/// Reduced outputs of one V(U) application.
#[derive(Debug, Clone)]
pub struct PreprocessOutput {
    pub system: DensityMatrix,
    pub reference: ReferenceState,
    /// Probability mass the truncated top shell handles incorrectly:
    /// (1 − |⟨1|U|1⟩|²)·⟨1,L−1|ρ_S⊗ρ_R|1,L−1⟩. Zero for U = 1, O(1/L)
    /// for uniform-population references.
    pub boundary_leakage: f64,
}

/// ρ'_S = Tr_R[V(ρ_S⊗ρ_R)V†] and ρ'_R = Tr_S of the same joint state.
pub fn preprocess(
    system: &DensityMatrix,
    reference: &ReferenceState,
    u: &UnitaryMatrix,
) -> Result<PreprocessOutput> {
    if system.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "system must be a qubit, got dim {}",
            system.dim()
        )));
    }
    let l = reference.dim();
    let v = build_v(u, l)?;
    let joint = system.matrix().kronecker(reference.density().matrix());
    let top = 2 * l - 1;
    let boundary_leakage = (1.0 - u.matrix()[(1, 1)].norm_sqr()) * joint[(top, top)].re;
    let vm = v.matrix();
    let after = vm * joint * vm.adjoint();
    let sys = DensityMatrix::new(partial_trace_raw(&after, &[2, l], 0)?)?;
    let reference_after = DensityMatrix::new(partial_trace_raw(&after, &[2, l], 1)?)?;
    Ok(PreprocessOutput {
        system: sys,
        reference: ReferenceState::from_density(reference_after),
        boundary_leakage,
    })
}

/// Channel quality q = ⟨1|ρ'_S|1⟩; 1 means the ideal map onto |1⟩⟨1|.
pub fn quality_q(rho_s_prime: &DensityMatrix) -> f64 {
    rho_s_prime.population(1)
}

/// Outcome of the modeled work-extraction step.
#[derive(Debug, Clone, Copy)]
pub struct WorkExtraction {
    /// Overlap of ρ'_S with the intended rotated state.
    pub fidelity_sq: f64,
    pub success_prob: f64,
    /// Single-shot work certified when the extraction succeeds.
    pub work_on_success: f64,
    /// success_prob · work_on_success.
    pub expected_work: f64,
}

fn extraction_model(
    fidelity_sq: f64,
    ideal: &DensityMatrix,
    ideal_failure: f64,
    ctx: &ThermalContext,
) -> Result<WorkExtraction> {
    let h = system_hamiltonian();
    let work = single_shot_work(ideal, &h, ctx, ideal_failure)?.value;
    // the ideal branch succeeds with 1 − ε, the orthogonal branch with ε
    let success_prob =
        fidelity_sq * (1.0 - ideal_failure) + (1.0 - fidelity_sq) * ideal_failure;
    Ok(WorkExtraction {
        fidelity_sq,
        success_prob,
        work_on_success: work,
        expected_work: success_prob * work,
    })
}

/// Work extraction against the coherent Gibbs target: succeeds with
/// probability (1−r)·fid² + r·(1−fid²), fid² = ⟨γ|ρ'_S|γ⟩, redeeming the
/// single-shot work of D(|γ⟩⟨γ|) at failure tolerance r.
pub fn extract_work(
    rho_s_prime: &DensityMatrix,
    target: &GibbsTarget,
    ctx: &ThermalContext,
) -> Result<WorkExtraction> {
    if rho_s_prime.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "extraction needs a qubit, got dim {}",
            rho_s_prime.dim()
        )));
    }
    let gamma = target.coherent_gibbs();
    let fidelity_sq = rho_s_prime.expectation(&gamma);
    let ideal = dephase(&gamma.density(), &system_hamiltonian())?;
    extraction_model(fidelity_sq, &ideal, target.r(), ctx)
}

/// Work extraction certifying the excited level: succeeds with probability
/// q = ⟨1|ρ'_S|1⟩, redeeming the deterministic single-shot work of |1⟩⟨1|.
pub fn extract_work_excited(
    rho_s_prime: &DensityMatrix,
    ctx: &ThermalContext,
) -> Result<WorkExtraction> {
    if rho_s_prime.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "extraction needs a qubit, got dim {}",
            rho_s_prime.dim()
        )));
    }
    let ideal = PureState::basis(2, 1).density();
    extraction_model(quality_q(rho_s_prime), &ideal, 0.0, ctx)
}

/// One repump step: ρ → ΔρΔ† + ⟨L−1|ρ|L−1⟩·|L−1⟩⟨L−1|, costing one unit
/// of work. The retained top-level term keeps the map trace preserving.
pub fn repump(reference: &ReferenceState) -> (ReferenceState, f64) {
    let l = reference.dim();
    let delta = shift_operator(l);
    let m = reference.density().matrix();
    let mut shifted = &delta * m * delta.adjoint();
    shifted[(l - 1, l - 1)] += m[(l - 1, l - 1)];
    let trace = shifted.trace().re;
    let rho = DensityMatrix::new(shifted.unscale(trace)).expect("repump preserves state validity");
    (ReferenceState::from_density(rho), REPUMP_COST)
}

/// Which state the pre-processing rotation aims for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationTarget {
    /// ψ → |1⟩, then certify the excited level.
    Excited,
    /// ψ → |γ_r⟩, then extract against the thermal distribution (1−r, r).
    CoherentGibbs,
}

/// One full protocol cycle: pre-process, extract, repump.
#[derive(Debug, Clone)]
pub struct ProtocolResult {
    /// Overlap of the pre-processed system with the intended target state.
    pub q: f64,
    pub success_prob: f64,
    /// Expected work from the extraction step.
    pub work_extracted: f64,
    pub repump_cost: f64,
    /// work_extracted − repump_cost.
    pub net_work: f64,
    pub reference_after: ReferenceState,
}

pub fn run_cycle(
    input: &CoherentInput,
    reference: &ReferenceState,
    target: &GibbsTarget,
    ctx: &ThermalContext,
    rotation: RotationTarget,
) -> Result<ProtocolResult> {
    let rho_s = input.state().density();
    let to_excited = rotation_unitary(input.p(), input.phi());
    let u = match rotation {
        RotationTarget::Excited => to_excited,
        RotationTarget::CoherentGibbs => {
            let gamma_to_excited = rotation_unitary(target.r(), 0.0);
            UnitaryMatrix::new(gamma_to_excited.matrix().adjoint() * to_excited.matrix())?
        }
    };
    let pre = preprocess(&rho_s, reference, &u)?;
    let extraction = match rotation {
        RotationTarget::Excited => extract_work_excited(&pre.system, ctx)?,
        RotationTarget::CoherentGibbs => extract_work(&pre.system, target, ctx)?,
    };
    let (reference_after, repump_cost) = repump(&pre.reference);
    Ok(ProtocolResult {
        q: extraction.fidelity_sq,
        success_prob: extraction.success_prob,
        work_extracted: extraction.expected_work,
        repump_cost,
        net_work: extraction.expected_work - repump_cost,
        reference_after,
    })
}

/// Result at one (r, quality) sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepOutcome {
    Evaluated {
        q: f64,
        success_prob: f64,
        /// Failure probability of the best incoherent strategy certifying
        /// the same work: min(machine run on the dephased input, direct
        /// single-shot certification).
        failure_prob_incoherent: f64,
        improvement: bool,
        boundary_leakage: f64,
    },
    /// Requested quality exceeds the (L−1)/L maximum for this L.
    InfeasibleQuality,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub r: f64,
    pub quality: f64,
    pub l: usize,
    pub outcome: SweepOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub l: usize,
    pub points: Vec<SweepPoint>,
}

/// Evaluates one (r, quality) point: the coherent Gibbs input γ_r runs
/// through a quality-t reference toward |1⟩; its dephased twin runs through
/// the incoherent (quality-0) reference. Improvement means the coherent
/// run's failure probability undercuts both the twin's and the direct
/// single-shot certification failure 1−r.
pub fn sweep_point(r: f64, quality: f64, l: usize, ctx: &ThermalContext) -> Result<SweepPoint> {
    let target = GibbsTarget::new(r)?;
    let input = CoherentInput::new(r, 0.0)?;
    if !(0.0..=1.0).contains(&quality) {
        return Err(Error::InvalidArgument(format!(
            "quality {quality} outside [0, 1]"
        )));
    }
    let max_quality = (l as f64 - 1.0) / l as f64;
    if quality > max_quality + QUALITY_FEASIBILITY_TOL {
        return Ok(SweepPoint {
            r,
            quality,
            l,
            outcome: SweepOutcome::InfeasibleQuality,
        });
    }
    let reference = ReferenceState::with_quality(l, quality)?;
    let twin_reference = ReferenceState::with_quality(l, 0.0)?;
    let point = sweep_point_with(&input, &target, &reference, &twin_reference, ctx)?;
    Ok(point)
}

fn sweep_point_with(
    input: &CoherentInput,
    target: &GibbsTarget,
    reference: &ReferenceState,
    twin_reference: &ReferenceState,
    ctx: &ThermalContext,
) -> Result<SweepPoint> {
    let u = rotation_unitary(input.p(), input.phi());
    let pre = preprocess(&input.state().density(), reference, &u)?;
    let extraction = extract_work_excited(&pre.system, ctx)?;
    let failure_protocol = 1.0 - extraction.success_prob;

    let dephased = dephase(&input.state().density(), &system_hamiltonian())?;
    let twin = preprocess(&dephased, twin_reference, &u)?;
    let twin_extraction = extract_work_excited(&twin.system, ctx)?;
    let failure_twin = 1.0 - twin_extraction.success_prob;
    // certifying the same work directly from D(γ_r) fails with 1−r
    let failure_incoherent = failure_twin.min(1.0 - target.r());

    Ok(SweepPoint {
        r: target.r(),
        quality: reference.quality(),
        l: reference.dim(),
        outcome: SweepOutcome::Evaluated {
            q: extraction.fidelity_sq,
            success_prob: extraction.success_prob,
            failure_prob_incoherent: failure_incoherent,
            improvement: failure_protocol < failure_incoherent - IMPROVEMENT_MARGIN,
            boundary_leakage: pre.boundary_leakage,
        },
    })
}

/// Full (r, quality) sweep; points are ordered quality-major, r-minor.
pub fn sweep_improvement(
    r_grid: &[f64],
    quality_grid: &[f64],
    l: usize,
    ctx: &ThermalContext,
) -> Result<SweepGrid> {
    if r_grid.is_empty() || quality_grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grids must be non-empty".into()));
    }
    check_ladder_dim(l)?;
    let mut points = Vec::with_capacity(r_grid.len() * quality_grid.len());
    let max_quality = (l as f64 - 1.0) / l as f64;
    let twin_reference = ReferenceState::with_quality(l, 0.0)?;
    for &quality in quality_grid {
        if !(0.0..=1.0).contains(&quality) {
            return Err(Error::InvalidArgument(format!(
                "quality {quality} outside [0, 1]"
            )));
        }
        let reference = if quality <= max_quality + QUALITY_FEASIBILITY_TOL {
            Some(ReferenceState::with_quality(l, quality)?)
        } else {
            None
        };
        for &r in r_grid {
            let target = GibbsTarget::new(r)?;
            let input = CoherentInput::new(r, 0.0)?;
            match &reference {
                Some(reference) => {
                    points.push(sweep_point_with(&input, &target, reference, &twin_reference, ctx)?)
                }
                None => points.push(SweepPoint {
                    r,
                    quality,
                    l,
                    outcome: SweepOutcome::InfeasibleQuality,
                }),
            }
        }
    }
    Ok(SweepGrid { l, points })
}
