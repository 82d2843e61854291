//! Dense complex linear algebra and quantum state primitives.
//!
//! Everything is immutable after construction and validated on entry:
//! pure states are unit vectors, density matrices are Hermitian PSD with
//! unit trace, unitaries satisfy U†U = 1. All tolerances are absolute.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const HERMITIAN_TOL: f64 = 1e-10;
pub(crate) const TRACE_TOL: f64 = 1e-10;
pub(crate) const NORM_TOL: f64 = 1e-10;
pub(crate) const UNITARY_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated before a matrix is rejected as non-PSD.
pub(crate) const EIGENVALUE_FLOOR: f64 = -1e-9;
/// Eigenvalues below this contribute nothing to entropies.
pub(crate) const ENTROPY_CUTOFF: f64 = 1e-12;

/// Eigendecomposition of a Hermitian matrix; eigenvalues are real.
pub(crate) fn hermitian_eigen(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

/// Square root of a PSD Hermitian matrix, clamping small negative eigenvalues to zero.
pub(crate) fn sqrt_psd(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(m);
    let roots = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| C64::new(v.max(0.0).sqrt(), 0.0)),
    );
    &vecs * DMatrix::from_diagonal(&roots) * vecs.adjoint()
}

fn max_abs_entry(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|e| e.norm()).fold(0.0, f64::max)
}

/// Unit-norm state vector.
#[derive(Debug, Clone)]
pub struct PureState {
    amps: DVector<C64>,
}

impl PureState {
    pub fn new(amps: DVector<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidState("empty amplitude vector".into()));
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "state norm {norm} differs from 1 beyond {NORM_TOL}"
            )));
        }
        Ok(Self { amps })
    }

    /// Computational basis vector |k⟩.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index out of range");
        let mut amps = DVector::zeros(dim);
        amps[k] = C64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// Rank-one projector |ψ⟩⟨ψ|.
    pub fn density(&self) -> DensityMatrix {
        let m = &self.amps * self.amps.adjoint();
        DensityMatrix { mat: m }
    }

    /// Kronecker product; the left factor is the slow index.
    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState {
            amps: self.amps.kronecker(&other.amps),
        }
    }
}

/// Hermitian, PSD, unit-trace operator.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.is_empty() {
            return Err(Error::InvalidState("density matrix must be square and nonempty".into()));
        }
        let herm_dev = max_abs_entry(&(&mat - mat.adjoint()));
        if herm_dev > 2.0 * HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "Hermiticity violated by {herm_dev:.3e}"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        // work with the exactly Hermitian part so downstream eigensolves are stable
        let mat = (&mat + mat.adjoint()).scale(0.5);
        let (vals, _) = hermitian_eigen(&mat);
        if let Some(bad) = vals.iter().copied().find(|&v| v < EIGENVALUE_FLOOR) {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {bad:.3e} below floor {EIGENVALUE_FLOOR:.0e}"
            )));
        }
        Ok(Self { mat })
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        let diag = DVector::from_iterator(probs.len(), probs.iter().map(|&p| C64::new(p, 0.0)));
        Self::new(DMatrix::from_diagonal(&diag))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mat = DMatrix::<C64>::identity(dim, dim).scale(1.0 / dim as f64);
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    /// Diagonal entry ⟨k|ρ|k⟩.
    pub fn population(&self, k: usize) -> f64 {
        self.mat[(k, k)].re
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn expectation(&self, psi: &PureState) -> f64 {
        let v = psi.amplitudes();
        (v.adjoint() * &self.mat * v)[(0, 0)].re
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            mat: self.mat.kronecker(&other.mat),
        }
    }
}

/// Matrix with U†U = 1.
#[derive(Debug, Clone)]
pub struct UnitaryMatrix {
    mat: DMatrix<C64>,
}

impl UnitaryMatrix {
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.is_empty() {
            return Err(Error::InvalidUnitary("matrix must be square and nonempty".into()));
        }
        let dev = max_abs_entry(&(mat.adjoint() * &mat - DMatrix::identity(mat.nrows(), mat.ncols())));
        if dev > UNITARY_TOL {
            return Err(Error::InvalidUnitary(format!(
                "U†U deviates from identity by {dev:.3e}"
            )));
        }
        Ok(Self { mat })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn tensor(&self, other: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix {
            mat: self.mat.kronecker(&other.mat),
        }
    }
}

/// Trace out every subsystem except `keep`. `dims` lists the subsystem
/// dimensions in tensor order (left factor slow); their product must equal
/// the full dimension.
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: usize) -> Result<DensityMatrix> {
    DensityMatrix::new(partial_trace_raw(rho.matrix(), dims, keep)?)
}

/// `partial_trace` on a raw matrix, skipping state validation of the input.
pub(crate) fn partial_trace_raw(
    m: &DMatrix<C64>,
    dims: &[usize],
    keep: usize,
) -> Result<DMatrix<C64>> {
    let total: usize = dims.iter().product();
    if total != m.nrows() || dims.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dims {dims:?} do not factor dimension {}",
            m.nrows()
        )));
    }
    if keep >= dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "keep index {keep} out of range for {} subsystems",
            dims.len()
        )));
    }

    // stride of each subsystem in the flattened index
    let mut strides = vec![1usize; dims.len()];
    for s in (0..dims.len().saturating_sub(1)).rev() {
        strides[s] = strides[s + 1] * dims[s + 1];
    }
    let kept_dim = dims[keep];
    let env_dims: Vec<usize> = dims
        .iter()
        .enumerate()
        .filter(|&(s, _)| s != keep)
        .map(|(_, &d)| d)
        .collect();
    let env_strides: Vec<usize> = strides
        .iter()
        .enumerate()
        .filter(|&(s, _)| s != keep)
        .map(|(_, &d)| d)
        .collect();
    let env_total: usize = env_dims.iter().product::<usize>().max(1);

    let mut out = DMatrix::<C64>::zeros(kept_dim, kept_dim);
    for e in 0..env_total {
        // offset of this environment configuration in the flattened index
        let mut rem = e;
        let mut offset = 0usize;
        for (s, &d) in env_dims.iter().enumerate() {
            let idx = rem % d;
            rem /= d;
            offset += idx * env_strides[s];
        }
        for a in 0..kept_dim {
            for b in 0..kept_dim {
                out[(a, b)] += m[(offset + a * strides[keep], offset + b * strides[keep])];
            }
        }
    }
    Ok(out)
}

/// Uhlmann fidelity F(ρ,σ) = Tr√(√ρ σ √ρ); equals |⟨ψ|φ⟩| on pure states.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity of dims {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let s = sqrt_psd(rho.matrix());
    let inner = &s * sigma.matrix() * &s;
    let (vals, _) = hermitian_eigen(&inner);
    let f = vals.iter().map(|&v| v.max(0.0).sqrt()).sum::<f64>();
    Ok(f.clamp(0.0, 1.0 + 1e-9).min(1.0))
}

/// Trace distance ½‖ρ−σ‖₁.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "trace distance of dims {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let diff = rho.matrix() - sigma.matrix();
    let (vals, _) = hermitian_eigen(&diff);
    Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
}

/// Von Neumann entropy −Tr(ρ ln ρ) in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let (vals, _) = hermitian_eigen(rho.matrix());
    vals.iter()
        .filter(|&&v| v > ENTROPY_CUTOFF)
        .map(|&v| -v * v.ln())
        .sum()
}

/// UρU†.
pub fn apply_unitary(u: &UnitaryMatrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if u.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "unitary dim {} on state dim {}",
            u.dim(),
            rho.dim()
        )));
    }
    DensityMatrix::new(u.matrix() * rho.matrix() * u.matrix().adjoint())
}
