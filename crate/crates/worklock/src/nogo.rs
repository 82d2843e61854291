//! Audits of the no-go results for universal work extraction: the
//! distinguishability precondition, the best-common-rotation ceiling,
//! unitary overlap invariance, mismatch tolerance of the pre-processing
//! rotation, and identical-work schedules.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{apply_unitary, fidelity, C64, DensityMatrix, PureState, UnitaryMatrix};
use crate::protocol::{make_input, preprocess, quality_q, rotation_unitary, ReferenceState};
use crate::sample::{haar_unitary, random_density, random_pure};
use crate::thermo::{gibbs_state, HamiltonianSpec, ThermalContext};

/// Fidelity at or below this counts as perfectly distinguishable.
pub const DISTINGUISHABILITY_TOL: f64 = 1e-10;

/// Overlap deviation from 1 beyond which two states count as distinct in the
/// double-rotation audit.
const DISTINCT_TOL: f64 = 1e-6;

/// A set of candidate input states with the work amount requested from each.
#[derive(Debug, Clone)]
pub struct WorkTaskSpec {
    states: Vec<DensityMatrix>,
    works: Vec<f64>,
}

impl WorkTaskSpec {
    /// Requires equally many qubit states and finite works, at least one.
    pub fn new(states: Vec<DensityMatrix>, works: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidArgument(
                "work task needs at least one state".into(),
            ));
        }
        if states.len() != works.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} states but {} work values",
                states.len(),
                works.len()
            )));
        }
        if let Some(bad) = states.iter().find(|s| s.dim() != 2) {
            return Err(Error::DimensionMismatch(format!(
                "task states must be qubits, got dim {}",
                bad.dim()
            )));
        }
        if works.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "work values must be finite".into(),
            ));
        }
        Ok(Self { states, works })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn works(&self) -> &[f64] {
        &self.works
    }
}

/// Verdict for one unordered pair of task states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairVerdict {
    pub i: usize,
    pub j: usize,
    pub fidelity: f64,
    pub same_work: bool,
    pub permitted: bool,
}

/// Extracting different works from a pair is permitted iff the pair is
/// perfectly distinguishable (fidelity ≤ 1e-10); pairs with equal requested
/// works are always permitted.
pub fn check_distinguishability_precondition(spec: &WorkTaskSpec) -> Result<Vec<PairVerdict>> {
    let n = spec.n_states();
    let mut verdicts = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let f = fidelity(&spec.states[i], &spec.states[j])?;
            let same_work = spec.works[i] == spec.works[j];
            verdicts.push(PairVerdict {
                i,
                j,
                fidelity: f,
                same_work,
                permitted: same_work || f <= DISTINGUISHABILITY_TOL,
            });
        }
    }
    Ok(verdicts)
}

/// The unitary maximizing the worse of the two excited-level weights
/// |⟨1|Uψ_i⟩|², together with the value it attains: (1 + |⟨ψ₁|ψ₂⟩|)/2.
///
/// The optimum sends the phase-aligned bisector of the two states to |1⟩,
/// splitting the Bures angle between them evenly.
pub fn best_common_rotation(psi1: &PureState, psi2: &PureState) -> Result<(UnitaryMatrix, f64)> {
    if psi1.dim() != 2 || psi2.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "rotation is defined for qubits, got dims {} and {}",
            psi1.dim(),
            psi2.dim()
        )));
    }
    let z = psi1.inner(psi2);
    let phase = if z.norm() > 0.0 {
        z / z.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    // ⟨ψ₁|ψ₂·phase*⟩ = |z| ≥ 0, so the sum below has norm² = 2 + 2|z| ≥ 2
    let aligned = psi2.amplitudes().map(|a| a * phase.conj());
    let bisector_raw = psi1.amplitudes() + aligned;
    let bisector = bisector_raw.unscale(bisector_raw.norm());

    let mut m = DMatrix::zeros(2, 2);
    m[(0, 0)] = -bisector[1];
    m[(0, 1)] = bisector[0];
    m[(1, 0)] = bisector[0].conj();
    m[(1, 1)] = bisector[1].conj();
    let u = UnitaryMatrix::new(m).expect("bisector rows are orthonormal by construction");

    let excited_weight = |psi: &PureState| -> f64 {
        let rotated = u.matrix() * psi.amplitudes();
        rotated[1].norm_sqr()
    };
    let attained = excited_weight(psi1).min(excited_weight(psi2));
    Ok((u, attained))
}

/// Result of a randomized unitary-invariance audit.
#[derive(Debug, Clone, Serialize)]
pub struct OverlapInvarianceReport {
    pub n_trials: usize,
    pub seed: u64,
    /// Max over trials of ||⟨Uψ₁|Uψ₂⟩| − |⟨ψ₁|ψ₂⟩||.
    pub max_pure_overlap_deviation: f64,
    /// Max over trials of |F(Uρ₁U†, Uρ₂U†) − F(ρ₁, ρ₂)|.
    pub max_mixed_fidelity_deviation: f64,
    /// Trials whose sampled U took two states with overlap < 1 − 1e-6 both
    /// to within fidelity 1 − 1e-6 of |1⟩. Must stay zero.
    pub double_rotation_violations: usize,
}

/// Samples n_trials of (ψ₁, ψ₂, ρ₁, ρ₂, U) and measures how well unitaries
/// preserve overlaps and fidelities; each trial is seeded by
/// `seed XOR trial index` so trials are order-independent.
pub fn overlap_invariance_audit(n_trials: usize, seed: u64) -> Result<OverlapInvarianceReport> {
    if n_trials == 0 {
        return Err(Error::InvalidArgument("audit needs at least one trial".into()));
    }
    let excited = PureState::basis(2, 1);
    let mut max_pure = 0.0f64;
    let mut max_mixed = 0.0f64;
    let mut violations = 0usize;
    for trial in 0..n_trials {
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ trial as u64);
        let psi1 = random_pure(2, &mut rng);
        let psi2 = random_pure(2, &mut rng);
        let u = haar_unitary(2, &mut rng);
        let rho1 = random_density(2, &mut rng);
        let rho2 = random_density(2, &mut rng);

        let rotate = |psi: &PureState| -> Result<PureState> {
            PureState::new(u.matrix() * psi.amplitudes())
        };
        let r1 = rotate(&psi1)?;
        let r2 = rotate(&psi2)?;
        let before = psi1.inner(&psi2).norm();
        let after = r1.inner(&r2).norm();
        max_pure = max_pure.max((after - before).abs());

        let f_before = fidelity(&rho1, &rho2)?;
        let f_after = fidelity(&apply_unitary(&u, &rho1)?, &apply_unitary(&u, &rho2)?)?;
        max_mixed = max_mixed.max((f_after - f_before).abs());

        if before < 1.0 - DISTINCT_TOL {
            let to_excited_1 = r1.inner(&excited).norm();
            let to_excited_2 = r2.inner(&excited).norm();
            if to_excited_1 > 1.0 - DISTINCT_TOL && to_excited_2 > 1.0 - DISTINCT_TOL {
                violations += 1;
            }
        }
    }
    Ok(OverlapInvarianceReport {
        n_trials,
        seed,
        max_pure_overlap_deviation: max_pure,
        max_mixed_fidelity_deviation: max_mixed,
        double_rotation_violations: violations,
    })
}

/// One sample of the mismatch tolerance curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TolerancePoint {
    pub delta: f64,
    /// Excited-level weight of the pre-processed system state.
    pub q: f64,
    /// Probability-weight mismatch 1 − |⟨ψ(p)|ψ(p+δ)⟩|².
    pub eps_prob: f64,
    /// 1 − q with the reference-limited deficit at δ = 0 subtracted.
    pub signal: f64,
}

/// Tolerance of the tuned pre-processing rotation against input mismatch:
/// how fast q degrades when the input is ψ(p+δ) but the rotation was tuned
/// to ψ(p).
#[derive(Debug, Clone, Serialize)]
pub struct ToleranceCurve {
    pub p_center: f64,
    /// 1 − q at δ = 0: what the reference alone costs.
    pub q_ideal_deficit: f64,
    /// Least-squares slope through the origin of signal vs eps_prob.
    pub fitted_slope: f64,
    /// Least-squares slope through the origin of signal vs signed δ.
    pub fitted_slope_delta: f64,
    /// |1 − q(δ)| ≤ fitted_slope·|δ| + q_ideal_deficit held at every point.
    pub bound_holds: bool,
    /// Work certified by a perfect excited-level outcome, −kT·ln γ₁.
    pub certified_work: f64,
    pub points: Vec<TolerancePoint>,
}

/// Runs ψ(p_center+δ) through the rotation tuned to p_center for each δ in
/// the grid. Every shifted probability p_center+δ must stay in [0, 1].
pub fn epsilon_tolerance_curve(
    p_center: f64,
    delta_grid: &[f64],
    reference: &ReferenceState,
    ctx: &ThermalContext,
) -> Result<ToleranceCurve> {
    if !(p_center > 0.0 && p_center < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "center probability must lie in (0, 1), got {p_center}"
        )));
    }
    if delta_grid.is_empty() {
        return Err(Error::InvalidArgument("empty mismatch grid".into()));
    }
    for &delta in delta_grid {
        let p = p_center + delta;
        if !delta.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "shifted probability {p} outside [0, 1] for mismatch {delta}"
            )));
        }
    }

    let tuned = rotation_unitary(p_center, 0.0);
    let center_state = make_input(p_center, 0.0)?;
    let q_at = |p: f64| -> Result<f64> {
        let input = make_input(p, 0.0)?;
        let out = preprocess(&input.density(), reference, &tuned)?;
        Ok(quality_q(&out.system))
    };

    let q_ideal_deficit = 1.0 - q_at(p_center)?;
    let mut points = Vec::with_capacity(delta_grid.len());
    for &delta in delta_grid {
        let p = p_center + delta;
        let q = q_at(p)?;
        let overlap = center_state.inner(&make_input(p, 0.0)?).norm();
        let eps_prob = (1.0 - overlap * overlap).max(0.0);
        points.push(TolerancePoint {
            delta,
            q,
            eps_prob,
            signal: 1.0 - q - q_ideal_deficit,
        });
    }

    let slope = |xs: &dyn Fn(&TolerancePoint) -> f64| -> f64 {
        let num: f64 = points.iter().map(|pt| xs(pt) * pt.signal).sum();
        let den: f64 = points.iter().map(|pt| xs(pt) * xs(pt)).sum();
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    };
    let fitted_slope = slope(&|pt: &TolerancePoint| pt.eps_prob);
    let fitted_slope_delta = slope(&|pt: &TolerancePoint| pt.delta);

    let bound_holds = points
        .iter()
        .all(|pt| (1.0 - pt.q).abs() <= fitted_slope * pt.delta.abs() + q_ideal_deficit + 1e-12);

    let gamma = gibbs_state(&HamiltonianSpec::two_level(1.0), ctx);
    let certified_work = -ctx.kt() * gamma.population(1).ln();

    Ok(ToleranceCurve {
        p_center,
        q_ideal_deficit,
        fitted_slope,
        fitted_slope_delta,
        bound_holds,
        certified_work,
        points,
    })
}

/// Work schedule when every state must yield the same amount; nothing here
/// asserts that a protocol attaining it exists.
#[derive(Debug, Clone, Serialize)]
pub struct IdenticalWorkSchedule {
    /// Smallest requested work: the only amount every state can cover.
    pub w_common: f64,
    /// Per state: its requested work covers w_common.
    pub feasible: Vec<bool>,
}

/// Schedules the largest work extractable from every state alike: the
/// minimum of the requested works.
pub fn identical_work_schedule(spec: &WorkTaskSpec) -> IdenticalWorkSchedule {
    let w_common = spec.works.iter().copied().fold(f64::INFINITY, f64::min);
    let feasible = spec.works.iter().map(|&w| w >= w_common).collect();
    IdenticalWorkSchedule { w_common, feasible }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn qubit(a0: C64, a1: C64) -> PureState {
        PureState::new(nalgebra::DVector::from_vec(vec![a0, a1])).unwrap()
    }

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn plus_state() -> PureState {
        qubit(re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2))
    }

    /// Independent search for the best common rotation value. The rotation
    /// target that maximizes the worse overlap lies on the Bloch geodesic
    /// between the two states (each overlap's superlevel set is a geodesic
    /// cap, and projecting onto the geodesic shrinks the distance to both
    /// endpoints), so a 1D grid with shrinking refinement suffices.
    fn optimize_min_overlap(psi1: &PureState, psi2: &PureState) -> f64 {
        fn bloch(psi: &PureState) -> [f64; 3] {
            let a = psi.amplitudes();
            let z = a[0].conj() * a[1];
            [2.0 * z.re, 2.0 * z.im, a[0].norm_sqr() - a[1].norm_sqr()]
        }
        fn combine(x: f64, a: &[f64; 3], y: f64, b: &[f64; 3]) -> [f64; 3] {
            [x * a[0] + y * b[0], x * a[1] + y * b[1], x * a[2] + y * b[2]]
        }
        let b1 = bloch(psi1);
        let b2 = bloch(psi2);
        let dot = (b1[0] * b2[0] + b1[1] * b2[1] + b1[2] * b2[2]).clamp(-1.0, 1.0);
        let omega = dot.acos();
        // antipodal endpoints leave the geodesic plane free; fix one
        let perp = {
            let seed = if b1[0].abs() < 0.9 {
                [1.0, 0.0, 0.0]
            } else {
                [0.0, 1.0, 0.0]
            };
            let cross = [
                b1[1] * seed[2] - b1[2] * seed[1],
                b1[2] * seed[0] - b1[0] * seed[2],
                b1[0] * seed[1] - b1[1] * seed[0],
            ];
            let n = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
            [cross[0] / n, cross[1] / n, cross[2] / n]
        };
        let point = |s: f64| -> [f64; 3] {
            if omega < 1e-12 {
                b1
            } else if std::f64::consts::PI - omega < 1e-9 {
                combine((s * std::f64::consts::PI).cos(), &b1, (s * std::f64::consts::PI).sin(), &perp)
            } else {
                combine(
                    ((1.0 - s) * omega).sin() / omega.sin(),
                    &b1,
                    (s * omega).sin() / omega.sin(),
                    &b2,
                )
            }
        };
        let objective = |s: f64| -> f64 {
            let b = point(s);
            let theta = b[2].clamp(-1.0, 1.0).acos();
            let phi = b[1].atan2(b[0]);
            let chi = qubit(re((theta / 2.0).cos()), C64::from_polar((theta / 2.0).sin(), phi));
            chi.inner(psi1).norm_sqr().min(chi.inner(psi2).norm_sqr())
        };
        let mut best = (0.0f64, f64::NEG_INFINITY);
        for k in 0..=2000 {
            let s = k as f64 / 2000.0;
            let v = objective(s);
            if v > best.1 {
                best = (s, v);
            }
        }
        let mut span = 1.0 / 2000.0;
        for _ in 0..12 {
            let center = best.0;
            for j in -5i32..=5 {
                let s = (center + span * j as f64 / 5.0).clamp(0.0, 1.0);
                let v = objective(s);
                if v > best.1 {
                    best = (s, v);
                }
            }
            span /= 5.0;
        }
        best.1
    }

    #[test]
    fn verdict_examples() {
        let zero = PureState::basis(2, 0).density();
        let one = PureState::basis(2, 1).density();
        let plus = plus_state().density();

        let spec =
            WorkTaskSpec::new(vec![zero.clone(), one.clone()], vec![1.0, 2.0]).unwrap();
        let v = check_distinguishability_precondition(&spec).unwrap();
        assert_eq!(v.len(), 1);
        assert!(v[0].permitted);
        assert!(!v[0].same_work);
        assert!(v[0].fidelity <= DISTINGUISHABILITY_TOL);

        let spec = WorkTaskSpec::new(vec![zero.clone(), plus.clone()], vec![1.0, 2.0]).unwrap();
        let v = check_distinguishability_precondition(&spec).unwrap();
        assert!(!v[0].permitted);
        assert!((v[0].fidelity - FRAC_1_SQRT_2).abs() < 1e-12);

        let spec = WorkTaskSpec::new(vec![zero, plus], vec![2.0, 2.0]).unwrap();
        let v = check_distinguishability_precondition(&spec).unwrap();
        assert!(v[0].permitted);
        assert!(v[0].same_work);
    }

    #[test]
    fn verdicts_are_symmetric_and_unitary_invariant() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let states: Vec<DensityMatrix> = (0..4).map(|_| random_density(2, &mut rng)).collect();
        let works = vec![1.0, 2.0, 2.0, 3.0];
        let spec = WorkTaskSpec::new(states.clone(), works.clone()).unwrap();
        let verdicts = check_distinguishability_precondition(&spec).unwrap();

        let mut reversed_states = states.clone();
        reversed_states.reverse();
        let mut reversed_works = works.clone();
        reversed_works.reverse();
        let reversed_spec = WorkTaskSpec::new(reversed_states, reversed_works).unwrap();
        let reversed = check_distinguishability_precondition(&reversed_spec).unwrap();
        let n = 4;
        for v in &verdicts {
            let (ri, rj) = (n - 1 - v.j, n - 1 - v.i);
            let mirror = reversed.iter().find(|w| w.i == ri && w.j == rj).unwrap();
            assert_eq!(v.permitted, mirror.permitted);
            assert!((v.fidelity - mirror.fidelity).abs() < 1e-12);
        }

        let u = haar_unitary(2, &mut rng);
        let rotated: Vec<DensityMatrix> = states
            .iter()
            .map(|s| apply_unitary(&u, s).unwrap())
            .collect();
        let rotated_spec = WorkTaskSpec::new(rotated, works).unwrap();
        let after = check_distinguishability_precondition(&rotated_spec).unwrap();
        for (v, w) in verdicts.iter().zip(&after) {
            assert_eq!(v.permitted, w.permitted);
            assert!((v.fidelity - w.fidelity).abs() < 1e-9);
        }
    }

    #[test]
    fn task_spec_validation() {
        assert!(WorkTaskSpec::new(vec![], vec![]).is_err());
        let q = DensityMatrix::maximally_mixed(2);
        assert!(WorkTaskSpec::new(vec![q.clone()], vec![1.0, 2.0]).is_err());
        assert!(WorkTaskSpec::new(vec![q.clone()], vec![f64::NAN]).is_err());
        assert!(WorkTaskSpec::new(vec![DensityMatrix::maximally_mixed(3)], vec![1.0]).is_err());
        assert_eq!(WorkTaskSpec::new(vec![q], vec![1.0]).unwrap().n_states(), 1);
    }

    #[test]
    fn best_common_rotation_closed_forms() {
        let zero = PureState::basis(2, 0);
        let one = PureState::basis(2, 1);

        let (_, same) = best_common_rotation(&zero, &zero).unwrap();
        assert!((same - 1.0).abs() < 1e-12);

        let (_, orthogonal) = best_common_rotation(&zero, &one).unwrap();
        assert!((orthogonal - 0.5).abs() < 1e-12);

        let partial = qubit(re(0.8), re(0.6));
        let (_, v) = best_common_rotation(&zero, &partial).unwrap();
        assert!((v - 0.9).abs() < 1e-12);

        let (u, both) = best_common_rotation(&zero, &plus_state()).unwrap();
        assert!((both - (1.0 + FRAC_1_SQRT_2) / 2.0).abs() < 1e-12);
        let rotated = u.matrix() * zero.amplitudes();
        assert!((rotated[1].norm_sqr() - both).abs() < 1e-12);
    }

    #[test]
    fn rotation_ceiling_matches_independent_optimizer() {
        let mut rng = ChaCha12Rng::seed_from_u64(97);
        for _ in 0..100 {
            let psi1 = random_pure(2, &mut rng);
            let psi2 = random_pure(2, &mut rng);
            let c = psi1.inner(&psi2).norm();
            let closed = (1.0 + c) / 2.0;
            let (_, attained) = best_common_rotation(&psi1, &psi2).unwrap();
            assert!((attained - closed).abs() < 1e-12);
            let searched = optimize_min_overlap(&psi1, &psi2);
            assert!(searched <= closed + 1e-9);
            assert!((searched - closed).abs() < 1e-6);
        }
    }

    #[test]
    fn overlap_audit_is_clean_and_deterministic() {
        let report = overlap_invariance_audit(1000, 7).unwrap();
        assert_eq!(report.n_trials, 1000);
        assert!(report.max_pure_overlap_deviation < 1e-10);
        assert!(report.max_mixed_fidelity_deviation < 1e-9);
        assert_eq!(report.double_rotation_violations, 0);

        let again = overlap_invariance_audit(1000, 7).unwrap();
        assert_eq!(
            report.max_pure_overlap_deviation,
            again.max_pure_overlap_deviation
        );
        assert_eq!(
            report.max_mixed_fidelity_deviation,
            again.max_mixed_fidelity_deviation
        );

        assert!(overlap_invariance_audit(0, 7).is_err());

        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let psi = random_pure(2, &mut rng);
        let u = haar_unitary(2, &mut rng);
        let rotated = PureState::new(u.matrix() * psi.amplitudes()).unwrap();
        assert!((rotated.inner(&rotated).norm() - psi.inner(&psi).norm()).abs() < 1e-15);
    }

    #[test]
    fn tolerance_curve_reference_values() {
        let reference = ReferenceState::uniform_superposition(50).unwrap();
        let ctx = ThermalContext::new(1.0).unwrap();
        let grid = [-0.2, -0.1, -0.05, -0.02, -0.01, 0.01, 0.02, 0.05, 0.1, 0.2];
        let curve = epsilon_tolerance_curve(0.5, &grid, &reference, &ctx).unwrap();

        assert!((curve.q_ideal_deficit - 0.009999999999999232).abs() < 1e-9);
        let expected_q = [
            0.9450924181056732,
            0.9780999895855026,
            0.9865438441822443,
            0.9892078430744353,
            0.9897019901980392,
            0.9901019901980391,
            0.9900078430744352,
            0.9885438441822443,
            0.9820999895855026,
            0.9530924181056735,
        ];
        for (pt, &want) in curve.points.iter().zip(&expected_q) {
            assert!((pt.q - want).abs() < 1e-9, "delta={}", pt.delta);
        }

        // closed form q = κ² + (p' − κ²)/L for a uniform reference
        for pt in &curve.points {
            let p = 0.5 + pt.delta;
            let kappa_sq = 1.0 - pt.eps_prob;
            let want = kappa_sq + (p - kappa_sq) / 50.0;
            assert!((pt.q - want).abs() < 1e-12);
        }

        assert!((curve.fitted_slope - 0.98).abs() < 1e-9);
        assert!((curve.fitted_slope_delta - (-0.02)).abs() < 1e-9);
        assert!(curve.bound_holds);
        assert!((curve.certified_work - (1.0 + (1.0 + (-1.0f64).exp()).ln())).abs() < 1e-12);

        // two-point finite difference at δ = ±0.01 agrees with the signed
        // slope within 15%
        let at = |d: f64| {
            curve
                .points
                .iter()
                .find(|pt| (pt.delta - d).abs() < 1e-12)
                .unwrap()
                .signal
        };
        let fd = (at(0.01) - at(-0.01)) / 0.02;
        assert!((fd - curve.fitted_slope_delta).abs() <= 0.15 * curve.fitted_slope_delta.abs());

        // mismatch sign asymmetry is the ladder's 1/L bias: q(+δ) − q(−δ) = 2δ/L
        for d in [0.01, 0.02, 0.05, 0.1, 0.2] {
            let q_plus = curve
                .points
                .iter()
                .find(|pt| (pt.delta - d).abs() < 1e-12)
                .unwrap()
                .q;
            let q_minus = curve
                .points
                .iter()
                .find(|pt| (pt.delta + d).abs() < 1e-12)
                .unwrap()
                .q;
            assert!((q_plus - q_minus - 2.0 * d / 50.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tolerance_curve_validation() {
        let reference = ReferenceState::uniform_superposition(10).unwrap();
        let ctx = ThermalContext::new(1.0).unwrap();
        assert!(epsilon_tolerance_curve(0.0, &[0.1], &reference, &ctx).is_err());
        assert!(epsilon_tolerance_curve(1.0, &[-0.1], &reference, &ctx).is_err());
        assert!(epsilon_tolerance_curve(0.5, &[], &reference, &ctx).is_err());
        assert!(epsilon_tolerance_curve(0.5, &[0.6], &reference, &ctx).is_err());
        assert!(epsilon_tolerance_curve(0.9, &[0.1], &reference, &ctx).is_ok());
    }

    #[test]
    fn schedule_examples() {
        let q = DensityMatrix::maximally_mixed(2);
        let spec =
            WorkTaskSpec::new(vec![q.clone(), q.clone(), q.clone()], vec![3.0, 5.0, 7.0]).unwrap();
        let schedule = identical_work_schedule(&spec);
        assert_eq!(schedule.w_common, 3.0);
        assert_eq!(schedule.feasible, vec![true, true, true]);

        let single = WorkTaskSpec::new(vec![q], vec![4.5]).unwrap();
        let schedule = identical_work_schedule(&single);
        assert_eq!(schedule.w_common, 4.5);

        // equal works on a non-orthogonal pair: permitted and schedulable
        let zero = PureState::basis(2, 0).density();
        let plus = plus_state().density();
        let pair = WorkTaskSpec::new(vec![zero, plus], vec![2.0, 2.0]).unwrap();
        let verdicts = check_distinguishability_precondition(&pair).unwrap();
        assert!(verdicts[0].permitted);
        let schedule = identical_work_schedule(&pair);
        assert_eq!(schedule.w_common, 2.0);
        assert!(schedule.feasible.iter().all(|&f| f));
    }

    #[test]
    fn schedule_reports_survive_serialization() {
        let q = DensityMatrix::maximally_mixed(2);
        let spec = WorkTaskSpec::new(vec![q.clone(), q], vec![1.0, 2.5]).unwrap();
        let verdicts = check_distinguishability_precondition(&spec).unwrap();
        let schedule = identical_work_schedule(&spec);
        let report = overlap_invariance_audit(5, 11).unwrap();
        let json = serde_json::json!({
            "verdicts": verdicts,
            "schedule": schedule,
            "audit": report,
        });
        let text = serde_json::to_string(&json).unwrap();
        assert!(text.contains("\"w_common\":1.0"));
        assert!(text.contains("\"double_rotation_violations\":0"));
    }
}
