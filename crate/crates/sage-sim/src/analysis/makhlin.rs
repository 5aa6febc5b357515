//! Local invariants and fidelity measures for two-qubit gates.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Local-unitary invariants of a two-qubit gate. (G1, G2) = (0, 1)
/// characterizes the CNOT equivalence class; the identity has (1, 3).
#[derive(Clone, Copy, Debug)]
pub struct MakhlinInvariants {
    pub g1: C64,
    pub g2: f64,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// The magic-basis transformation matrix.
pub fn bell_basis_q() -> DMatrix<C64> {
    let s = 1.0 / 2.0f64.sqrt();
    DMatrix::from_row_slice(
        4,
        4,
        &[
            c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, s),
            c(0.0, 0.0), c(0.0, s), c(s, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.0, s), c(-s, 0.0), c(0.0, 0.0),
            c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -s),
        ],
    )
}

/// CNOT with qubit 1 as control, in the basis |00>, |01>, |10>, |11>.
pub fn cnot_matrix() -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(4, 4);
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 1)] = c(1.0, 0.0);
    m[(2, 3)] = c(1.0, 0.0);
    m[(3, 2)] = c(1.0, 0.0);
    m
}

pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    let d = u.ncols();
    (u.adjoint() * u - DMatrix::<C64>::identity(d, d))
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Closest unitary in the polar sense: M (M^dag M)^{-1/2}. Used to gauge
/// slightly sub-unitary projected propagators before invariant evaluation.
pub fn polar_unitarize(m: &DMatrix<C64>) -> DMatrix<C64> {
    let gram = m.adjoint() * m;
    let eig = gram.symmetric_eigen();
    let d = m.ncols();
    let mut inv_sqrt = DMatrix::<C64>::zeros(d, d);
    for k in 0..d {
        let lam = eig.eigenvalues[k].max(1e-300);
        inv_sqrt[(k, k)] = c(1.0 / lam.sqrt(), 0.0);
    }
    m * (&eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint())
}

/// Makhlin invariants of a 4x4 unitary: with m = M_B^T M_B and
/// M_B = Q^dag U Q, G1 = tr(m)^2 det(U^dag)/16 and
/// G2 = (tr(m)^2 - tr(m^2)) det(U^dag)/4.
pub fn makhlin_invariants(u: &DMatrix<C64>) -> Result<MakhlinInvariants> {
    if u.nrows() != 4 || u.ncols() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            got: u.nrows(),
        });
    }
    let dev = unitarity_deviation(u);
    if dev > 1e-8 {
        return Err(Error::NotUnitary { dev });
    }
    let q = bell_basis_q();
    let mb = q.adjoint() * u * &q;
    let m = mb.transpose() * &mb;
    let det_u_dag = u.determinant().conj();
    let tr = m.trace();
    let tr2 = (&m * &m).trace();
    let g1 = tr * tr * det_u_dag / c(16.0, 0.0);
    let g2c = (tr * tr - tr2) * det_u_dag / c(4.0, 0.0);
    if g2c.im.abs() > 1e-10 {
        return Err(Error::FitFailure(format!(
            "G2 has imaginary part {:.3e} for a unitary input",
            g2c.im
        )));
    }
    Ok(MakhlinInvariants { g1, g2: g2c.re })
}

/// Euclidean distance of (G1, G2) from the CNOT values (0, 1). The input may
/// be a slightly sub-unitary projected block; it is re-unitarized first.
pub fn cnot_deviation(u: &DMatrix<C64>) -> Result<f64> {
    let inv = makhlin_invariants(&polar_unitarize(u))?;
    Ok((inv.g1.norm_sqr() + (inv.g2 - 1.0).powi(2)).sqrt())
}

/// Average gate fidelity F = (|tr(T^dag M)|^2 + tr(M^dag M)) / (d(d+1)) with
/// d = 4. Leakage enters through tr(M^dag M) < d.
pub fn average_gate_fidelity(m: &DMatrix<C64>, target: &DMatrix<C64>) -> Result<f64> {
    if m.nrows() != 4 || m.ncols() != 4 || target.nrows() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            got: m.nrows(),
        });
    }
    // spectral norm of M must not exceed 1 (within tolerance)
    let gram = m.adjoint() * m;
    let top = gram.clone().symmetric_eigen().eigenvalues.max();
    if top > 1.0 + 1e-8 {
        return Err(Error::NotUnitary {
            dev: top.sqrt() - 1.0,
        });
    }
    let d = 4.0;
    let tr_target = (target.adjoint() * m).trace().norm_sqr();
    let tr_mm = gram.trace().re;
    Ok((tr_target + tr_mm) / (d * (d + 1.0)))
}

/// Mean leakage of a projected propagator, 1 - tr(M^dag M)/d.
pub fn gate_leakage(m: &DMatrix<C64>) -> f64 {
    let d = m.ncols() as f64;
    1.0 - (m.adjoint() * m).trace().re / d
}

/// Fidelity of the renormalized block M / sqrt(tr(M^dag M)/d) against the
/// target: the "free of leakage" figure, insensitive to uniform population
/// loss.
pub fn leakage_free_fidelity(m: &DMatrix<C64>, target: &DMatrix<C64>) -> Result<f64> {
    let d = m.ncols() as f64;
    let norm = ((m.adjoint() * m).trace().re / d).sqrt();
    if norm <= 0.0 {
        return Err(Error::NotUnitary { dev: 1.0 });
    }
    let rescaled = m / C64::new(norm, 0.0);
    average_gate_fidelity(&rescaled, target)
}
