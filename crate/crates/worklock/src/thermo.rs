//! Thermodynamic quantities for systems with diagonal Hamiltonians:
//! Gibbs states, free energies, dephasing, average and single-shot work,
//! work-locking, and the Landauer bound. Entropies are in nats throughout;
//! work therefore comes out in the same energy units as the Hamiltonian.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{C64, DensityMatrix, von_neumann_entropy};

/// Energies below this spacing are treated as one degenerate level.
const DEGENERACY_TOL: f64 = 1e-12;
/// Off-diagonal weight beyond this disqualifies a state as incoherent.
const INCOHERENCE_TOL: f64 = 1e-9;
/// Populations below this do not count toward the support.
const SUPPORT_TOL: f64 = 1e-12;
/// Slack added to epsilon so exact-probability removals stay admissible.
const EPSILON_SLACK: f64 = 1e-12;
/// Level count above which exhaustive subset search is refused.
const MAX_ENUM_LEVELS: usize = 20;

/// Diagonal Hamiltonian given by its energy levels.
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    energies: Vec<f64>,
}

impl HamiltonianSpec {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::InvalidArgument("Hamiltonian needs at least one level".into()));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("non-finite energy level".into()));
        }
        Ok(Self { energies })
    }

    /// Two levels at energies 0 and `gap`.
    pub fn two_level(gap: f64) -> Self {
        Self { energies: vec![0.0, gap] }
    }

    /// Equally spaced ladder 0, 1, …, dim−1.
    pub fn ladder(dim: usize) -> Self {
        Self { energies: (0..dim).map(|n| n as f64).collect() }
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Level indices grouped by equal energy (within `DEGENERACY_TOL`).
    fn degenerate_blocks(&self) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.energies.len()).collect();
        order.sort_by(|&a, &b| self.energies[a].total_cmp(&self.energies[b]));
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for idx in order {
            match blocks.last_mut() {
                Some(block)
                    if (self.energies[idx] - self.energies[block[0]]).abs() <= DEGENERACY_TOL =>
                {
                    block.push(idx)
                }
                _ => blocks.push(vec![idx]),
            }
        }
        blocks
    }
}

/// Heat-bath temperature as an energy, kT > 0.
#[derive(Debug, Clone, Copy)]
pub struct ThermalContext {
    kt: f64,
}

impl ThermalContext {
    pub fn new(kt: f64) -> Result<Self> {
        if !(kt.is_finite() && kt > 0.0) {
            return Err(Error::InvalidArgument(format!("kT must be positive, got {kt}")));
        }
        Ok(Self { kt })
    }

    pub fn kt(&self) -> f64 {
        self.kt
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorkKind {
    Average,
    SingleShot { epsilon: f64 },
}

/// A work value in energy units, tagged with how it was obtained.
#[derive(Debug, Clone, Copy)]
pub struct WorkQuantity {
    pub value: f64,
    pub kind: WorkKind,
}

fn check_dims(rho: &DensityMatrix, h: &HamiltonianSpec) -> Result<()> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dim {} vs Hamiltonian dim {}",
            rho.dim(),
            h.dim()
        )));
    }
    Ok(())
}

/// Largest off-diagonal magnitude connecting distinct energy blocks.
fn cross_block_weight(rho: &DensityMatrix, h: &HamiltonianSpec) -> f64 {
    let blocks = h.degenerate_blocks();
    let mut block_of = vec![0usize; h.dim()];
    for (b, block) in blocks.iter().enumerate() {
        for &i in block {
            block_of[i] = b;
        }
    }
    let m = rho.matrix();
    let mut worst: f64 = 0.0;
    for i in 0..h.dim() {
        for j in 0..h.dim() {
            if block_of[i] != block_of[j] {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

fn require_incoherent(rho: &DensityMatrix, h: &HamiltonianSpec, what: &str) -> Result<()> {
    let w = cross_block_weight(rho, h);
    if w > INCOHERENCE_TOL {
        return Err(Error::CoherentInput(format!(
            "{what} is defined for states diagonal in the energy eigenbasis; \
             found off-diagonal weight {w:.3e} (use accessible_work for coherent states)"
        )));
    }
    Ok(())
}

/// Thermal state e^{−H/kT}/Z. The minimum energy is subtracted before
/// exponentiation so large energies cannot overflow.
pub fn gibbs_state(h: &HamiltonianSpec, ctx: &ThermalContext) -> DensityMatrix {
    let e_min = h.energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = h.energies.iter().map(|e| (-(e - e_min) / ctx.kt).exp()).collect();
    let z: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();
    DensityMatrix::from_diagonal(&probs).expect("normalized Boltzmann weights form a state")
}

/// F(ρ) = Tr(ρH) − kT·S(ρ).
pub fn free_energy(rho: &DensityMatrix, h: &HamiltonianSpec, ctx: &ThermalContext) -> Result<f64> {
    check_dims(rho, h)?;
    let energy: f64 = (0..h.dim()).map(|i| rho.population(i) * h.energies[i]).sum();
    Ok(energy - ctx.kt * von_neumann_entropy(rho))
}

/// Projects onto the energy eigenspaces of `h`: coherences between
/// distinct energies vanish, structure inside degenerate blocks survives.
pub fn dephase(rho: &DensityMatrix, h: &HamiltonianSpec) -> Result<DensityMatrix> {
    check_dims(rho, h)?;
    let blocks = h.degenerate_blocks();
    let m = rho.matrix();
    let mut out = DMatrix::<C64>::zeros(h.dim(), h.dim());
    for block in &blocks {
        for &i in block {
            for &j in block {
                out[(i, j)] = m[(i, j)];
            }
        }
    }
    DensityMatrix::new(out)
}

/// ⟨W⟩(ρ) = F(ρ) − F(γ) for states with no energy-basis coherence.
pub fn average_work(
    rho: &DensityMatrix,
    h: &HamiltonianSpec,
    ctx: &ThermalContext,
) -> Result<WorkQuantity> {
    check_dims(rho, h)?;
    require_incoherent(rho, h, "average_work")?;
    let gamma = gibbs_state(h, ctx);
    let value = free_energy(rho, h, ctx)? - free_energy(&gamma, h, ctx)?;
    Ok(WorkQuantity { value, kind: WorkKind::Average })
}

/// Work obtainable with no coherent resource: ⟨W⟩ of the dephased state.
pub fn accessible_work(
    rho: &DensityMatrix,
    h: &HamiltonianSpec,
    ctx: &ThermalContext,
) -> Result<WorkQuantity> {
    average_work(&dephase(rho, h)?, h, ctx)
}

/// F(ρ) − F(D(ρ)) = kT·(S(D(ρ)) − S(ρ)) ≥ 0; the free energy locked
/// in coherence.
pub fn work_locking_gap(
    rho: &DensityMatrix,
    h: &HamiltonianSpec,
    ctx: &ThermalContext,
) -> Result<f64> {
    let deph = dephase(rho, h)?;
    Ok(ctx.kt * (von_neumann_entropy(&deph) - von_neumann_entropy(rho)))
}

/// Single-shot work at failure probability `epsilon`:
/// −kT·ln min Tr(Πγ), minimized over projectors Π obtained from the
/// support of ρ by removing level sets of total probability ≤ ε.
/// Exhaustive subset search; refuses supports larger than 20 levels.
pub fn single_shot_work(
    rho: &DensityMatrix,
    h: &HamiltonianSpec,
    ctx: &ThermalContext,
    epsilon: f64,
) -> Result<WorkQuantity> {
    check_dims(rho, h)?;
    require_incoherent(rho, h, "single_shot_work")?;
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in [0, 1), got {epsilon}"
        )));
    }
    let support: Vec<usize> = (0..h.dim()).filter(|&i| rho.population(i) > SUPPORT_TOL).collect();
    if support.len() > MAX_ENUM_LEVELS {
        return Err(Error::InvalidArgument(format!(
            "support of {} levels exceeds the {MAX_ENUM_LEVELS}-level enumeration limit",
            support.len()
        )));
    }
    let gamma = gibbs_state(h, ctx);
    let full_gibbs: f64 = support.iter().map(|&i| gamma.population(i)).sum();

    let mut best = full_gibbs;
    for mask in 0u32..(1u32 << support.len()) {
        let removed_prob: f64 = support
            .iter()
            .enumerate()
            .filter(|&(bit, _)| mask >> bit & 1 == 1)
            .map(|(_, &i)| rho.population(i))
            .sum();
        if removed_prob > epsilon + EPSILON_SLACK {
            continue;
        }
        let kept_gibbs: f64 = support
            .iter()
            .enumerate()
            .filter(|&(bit, _)| mask >> bit & 1 == 0)
            .map(|(_, &i)| gamma.population(i))
            .sum();
        if kept_gibbs > 0.0 && kept_gibbs < best {
            best = kept_gibbs;
        }
    }
    Ok(WorkQuantity {
        value: -ctx.kt * best.ln(),
        kind: WorkKind::SingleShot { epsilon },
    })
}

/// kT·(S(ρ) − S(ρ′)): minimal energy cost of the entropy change.
/// Negative when entropy increases.
pub fn landauer_cost(
    rho: &DensityMatrix,
    rho_prime: &DensityMatrix,
    ctx: &ThermalContext,
) -> Result<f64> {
    if rho.dim() != rho_prime.dim() {
        return Err(Error::DimensionMismatch(format!(
            "landauer_cost dims {} vs {}",
            rho.dim(),
            rho_prime.dim()
        )));
    }
    Ok(ctx.kt * (von_neumann_entropy(rho) - von_neumann_entropy(rho_prime)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::PureState;
    use nalgebra::DVector;
    use std::f64::consts::LN_2;

    fn h01() -> HamiltonianSpec {
        HamiltonianSpec::two_level(1.0)
    }

    fn kt1() -> ThermalContext {
        ThermalContext::new(1.0).unwrap()
    }

    fn plus() -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState::new(DVector::from_vec(vec![C64::new(h, 0.0), C64::new(h, 0.0)]))
            .unwrap()
            .density()
    }

    // ln Z for H = diag(0,1): Z = 1 + e^{-1/kT}
    fn ln_z(kt: f64) -> f64 {
        (1.0 + (-1.0 / kt).exp()).ln()
    }

    #[test]
    fn gibbs_limits_and_closed_form() {
        let hot = gibbs_state(&h01(), &ThermalContext::new(1e9).unwrap());
        assert!((hot.population(0) - 0.5).abs() < 1e-9);

        let g = gibbs_state(&h01(), &kt1());
        let z = 1.0 + (-1.0f64).exp();
        assert!((g.population(0) - 1.0 / z).abs() < 1e-15);
        assert!((g.population(1) - (-1.0f64).exp() / z).abs() < 1e-15);

        let cold = gibbs_state(&h01(), &ThermalContext::new(1e-9).unwrap());
        assert!((cold.population(0) - 1.0).abs() < 1e-12);

        // huge offsets must not overflow
        let shifted = gibbs_state(&HamiltonianSpec::new(vec![1e9, 1e9 + 1.0]).unwrap(), &kt1());
        assert!((shifted.population(0) - 1.0 / z).abs() < 1e-15);
    }

    #[test]
    fn free_energy_known_values() {
        let one = PureState::basis(2, 1).density();
        assert!((free_energy(&one, &h01(), &kt1()).unwrap() - 1.0).abs() < 1e-12);

        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((free_energy(&mixed, &h01(), &kt1()).unwrap() - (0.5 - LN_2)).abs() < 1e-12);

        let gamma = gibbs_state(&h01(), &kt1());
        assert!((free_energy(&gamma, &h01(), &kt1()).unwrap() + ln_z(1.0)).abs() < 1e-12);
    }

    #[test]
    fn dephase_removes_cross_energy_terms_only() {
        let p: f64 = 0.3;
        let phi = 0.7;
        let amps = DVector::from_vec(vec![
            C64::new((1.0 - p).sqrt(), 0.0),
            C64::from_polar(p.sqrt(), -phi),
        ]);
        let rho = PureState::new(amps).unwrap().density();
        let d = dephase(&rho, &h01()).unwrap();
        assert!((d.population(0) - (1.0 - p)).abs() < 1e-12);
        assert!(d.matrix()[(0, 1)].norm() < 1e-15);

        let again = dephase(&d, &h01()).unwrap();
        assert_eq!(again.matrix(), d.matrix());

        let half = dephase(&plus(), &h01()).unwrap();
        assert!((half.population(0) - 0.5).abs() < 1e-12);

        // degenerate Hamiltonian keeps in-block coherence
        let degenerate = HamiltonianSpec::new(vec![1.0, 1.0]).unwrap();
        let kept = dephase(&plus(), &degenerate).unwrap();
        assert!((kept.matrix()[(0, 1)].re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn average_work_examples() {
        let gamma = gibbs_state(&h01(), &kt1());
        assert!(average_work(&gamma, &h01(), &kt1()).unwrap().value.abs() < 1e-10);

        let one = PureState::basis(2, 1).density();
        let expected = 1.0 + ln_z(1.0);
        assert!((average_work(&one, &h01(), &kt1()).unwrap().value - expected).abs() < 1e-12);

        assert!(matches!(
            average_work(&plus(), &h01(), &kt1()),
            Err(Error::CoherentInput(_))
        ));
    }

    #[test]
    fn accessible_work_examples() {
        let expected = (0.5 - LN_2) + ln_z(1.0);
        let got = accessible_work(&plus(), &h01(), &kt1()).unwrap().value;
        assert!((got - expected).abs() < 1e-12);

        let diag = DensityMatrix::from_diagonal(&[0.8, 0.2]).unwrap();
        let a = accessible_work(&diag, &h01(), &kt1()).unwrap().value;
        let b = average_work(&diag, &h01(), &kt1()).unwrap().value;
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn work_locking_gap_examples() {
        assert!((work_locking_gap(&plus(), &h01(), &kt1()).unwrap() - LN_2).abs() < 1e-12);
        let diag = DensityMatrix::from_diagonal(&[0.8, 0.2]).unwrap();
        assert!(work_locking_gap(&diag, &h01(), &kt1()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_shot_work_examples() {
        let one = PureState::basis(2, 1).density();
        let w = single_shot_work(&one, &h01(), &kt1(), 0.0).unwrap();
        assert!((w.value - (1.0 + ln_z(1.0))).abs() < 1e-12);
        assert_eq!(w.kind, WorkKind::SingleShot { epsilon: 0.0 });

        let gamma = gibbs_state(&h01(), &kt1());
        assert!(single_shot_work(&gamma, &h01(), &kt1(), 0.0).unwrap().value.abs() < 1e-12);

        // once the excited level is removable the certificate jumps to −ln γ00
        let p = 0.2;
        let rho = DensityMatrix::from_diagonal(&[1.0 - p, p]).unwrap();
        let w = single_shot_work(&rho, &h01(), &kt1(), p).unwrap();
        assert!((w.value - ln_z(1.0)).abs() < 1e-12);
        let below = single_shot_work(&rho, &h01(), &kt1(), p / 2.0).unwrap();
        assert!(below.value.abs() < 1e-12);

        assert!(matches!(
            single_shot_work(&plus(), &h01(), &kt1(), 0.1),
            Err(Error::CoherentInput(_))
        ));
        assert!(matches!(
            single_shot_work(&rho, &h01(), &kt1(), 1.0),
            Err(Error::InvalidArgument(_))
        ));

        let big = DensityMatrix::maximally_mixed(24);
        let h_big = HamiltonianSpec::ladder(24);
        assert!(matches!(
            single_shot_work(&big, &h_big, &kt1(), 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn single_shot_work_prefers_largest_gibbs_weight_removal() {
        // three levels; epsilon admits removing either level 0 or level 2,
        // and removing the ground level lowers Tr(Πγ) more
        let h = HamiltonianSpec::ladder(3);
        let rho = DensityMatrix::from_diagonal(&[0.05, 0.9, 0.05]).unwrap();
        let gamma = gibbs_state(&h, &kt1());
        let w = single_shot_work(&rho, &h, &kt1(), 0.05).unwrap();
        let expected = -(gamma.population(1) + gamma.population(2)).ln();
        assert!((w.value - expected).abs() < 1e-12);
    }

    #[test]
    fn landauer_cost_examples() {
        let mixed = DensityMatrix::maximally_mixed(2);
        let zero = PureState::basis(2, 0).density();
        assert!((landauer_cost(&mixed, &zero, &kt1()).unwrap() - LN_2).abs() < 1e-12);
        assert!(landauer_cost(&mixed, &mixed, &kt1()).unwrap().abs() < 1e-15);
        assert!((landauer_cost(&zero, &mixed, &kt1()).unwrap() + LN_2).abs() < 1e-12);
    }

    #[test]
    fn thermal_context_rejects_bad_kt() {
        assert!(ThermalContext::new(0.0).is_err());
        assert!(ThermalContext::new(-1.0).is_err());
        assert!(ThermalContext::new(f64::NAN).is_err());
    }
}
