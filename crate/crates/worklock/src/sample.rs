//! Seed-controlled random states and unitaries for audits and property tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{C64, DensityMatrix, PureState, UnitaryMatrix};

fn gaussian<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix, with column
/// phases fixed by the diagonal of R so the distribution is exactly Haar.
pub fn haar_unitary<R: Rng>(dim: usize, rng: &mut R) -> UnitaryMatrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    UnitaryMatrix::new(q).expect("QR factor of a Gaussian matrix is unitary")
}

/// Uniformly random pure state.
pub fn random_pure<R: Rng>(dim: usize, rng: &mut R) -> PureState {
    let v = DVector::from_fn(dim, |_, _| gaussian(rng));
    let n = v.norm();
    PureState::new(v.unscale(n)).expect("normalized Gaussian vector is a pure state")
}

/// Full-rank random density matrix GG†/Tr(GG†).
pub fn random_density<R: Rng>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    DensityMatrix::new(w.unscale(tr)).expect("normalized Wishart matrix is a density matrix")
}
