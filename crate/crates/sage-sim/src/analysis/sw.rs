//! Schrieffer-Wolff effective Hamiltonians on the two-qubit computational
//! subspace, plus the exact least-action block diagonalization used to
//! cross-check them.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::HermitianOperator;

/// Effective 4x4 Hermitian operator on {|00>, |01>, |10>, |11>}.
#[derive(Clone, Debug)]
pub struct EffectiveHamiltonian {
    matrix: DMatrix<C64>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn matrix(&self) -> DMatrix<C64> {
        let c = |re: f64, im: f64| C64::new(re, im);
        match self {
            Pauli::I => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]),
            Pauli::X => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
            Pauli::Y => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
            Pauli::Z => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Pauli::I => "1",
            Pauli::X => "x",
            Pauli::Y => "y",
            Pauli::Z => "z",
        }
    }
}

/// Real coefficients on the sixteen two-qubit Pauli strings, indexed by
/// (qubit-1 Pauli, qubit-2 Pauli).
#[derive(Clone, Copy, Debug)]
pub struct PauliDecomposition {
    pub coeffs: [[f64; 4]; 4],
}

impl PauliDecomposition {
    pub fn coeff(&self, p1: Pauli, p2: Pauli) -> f64 {
        self.coeffs[p1 as usize][p2 as usize]
    }

    pub fn reconstruct(&self) -> DMatrix<C64> {
        let mut m = DMatrix::<C64>::zeros(4, 4);
        for p1 in Pauli::ALL {
            for p2 in Pauli::ALL {
                let w = self.coeff(p1, p2);
                if w != 0.0 {
                    m += p1.matrix().kronecker(&p2.matrix()) * C64::new(w, 0.0);
                }
            }
        }
        m
    }

    /// Largest traceless coefficient magnitude (everything except the 1x1
    /// string).
    pub fn max_traceless(&self) -> f64 {
        let mut m = 0.0f64;
        for p1 in Pauli::ALL {
            for p2 in Pauli::ALL {
                if p1 == Pauli::I && p2 == Pauli::I {
                    continue;
                }
                m = m.max(self.coeff(p1, p2).abs());
            }
        }
        m
    }
}

impl fmt::Display for PauliDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for p1 in Pauli::ALL {
            for p2 in Pauli::ALL {
                let wv = self.coeff(p1, p2);
                if wv.abs() < 1e-9 {
                    continue;
                }
                if !first {
                    write!(f, " {} ", if wv >= 0.0 { "+" } else { "-" })?;
                } else if wv < 0.0 {
                    write!(f, "-")?;
                }
                let aw = wv.abs();
                match (p1, p2) {
                    (Pauli::I, Pauli::I) => write!(f, "{aw:.4} 1")?,
                    (Pauli::I, p) => write!(f, "{aw:.4} s2{}", p.label())?,
                    (p, Pauli::I) => write!(f, "{aw:.4} s1{}", p.label())?,
                    (p, q) => write!(f, "{aw:.4} s1{} s2{}", p.label(), q.label())?,
                }
                first = false;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl EffectiveHamiltonian {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        HermitianOperator::new(matrix.clone())?;
        if matrix.nrows() != 4 {
            return Err(Error::Dimension {
                expected: 4,
                got: matrix.nrows(),
            });
        }
        Ok(EffectiveHamiltonian { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Projects onto the sixteen Pauli strings. Coefficients are real for
    /// Hermitian input; the reconstruction matches to 1e-12.
    pub fn pauli_decompose(&self) -> PauliDecomposition {
        let mut coeffs = [[0.0; 4]; 4];
        for p1 in Pauli::ALL {
            for p2 in Pauli::ALL {
                let basis = p1.matrix().kronecker(&p2.matrix());
                let w = (basis.adjoint() * &self.matrix).trace() / C64::new(4.0, 0.0);
                coeffs[p1 as usize][p2 as usize] = w.re;
            }
        }
        PauliDecomposition { coeffs }
    }
}

/// Perturbative effective Hamiltonian on a degenerate computational subspace.
///
/// `h0` is the unperturbed operator (block-diagonal with the computational
/// columns as exact eigenvectors of common energy), `v` the perturbation, and
/// `comp_columns` the dim x 4 embedding of the computational states. Orders 2
/// and 3 are supported; with vanishing P V P (true for interqubit exchange
/// between singlet-only qubits) the third order is
/// P V R (Q V Q) R V P with R the reduced resolvent of h0.
pub fn schrieffer_wolff(
    h0: &HermitianOperator,
    v: &HermitianOperator,
    comp_columns: &DMatrix<C64>,
    order: u8,
) -> Result<EffectiveHamiltonian> {
    if !(order == 2 || order == 3) {
        return Err(Error::Config(format!("SW order must be 2 or 3, got {order}")));
    }
    let dim = h0.dim();
    if v.dim() != dim || comp_columns.nrows() != dim || comp_columns.ncols() != 4 {
        return Err(Error::Dimension {
            expected: dim,
            got: comp_columns.nrows(),
        });
    }
    let scale = h0.max_abs().max(1e-300);
    // computational energy and degeneracy check
    let h0p = h0.entries() * comp_columns;
    let e_block = comp_columns.adjoint() * &h0p;
    let e0 = e_block.trace().re / 4.0;
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { C64::new(e0, 0.0) } else { C64::new(0.0, 0.0) };
            if (e_block[(i, j)] - want).norm() > 1e-9 * scale {
                return Err(Error::DegeneracyViolation(
                    "computational columns are not a degenerate eigenbasis of H0".into(),
                ));
            }
        }
    }
    let prop = h0.eigendecompose();
    let evals = prop.eigenvalues_mhz();
    let vecs = prop.eigenvectors();
    let mut q_idx = Vec::new();
    for k in 0..dim {
        if (evals[k] - e0).abs() > 1e-9 * scale {
            q_idx.push(k);
        }
    }
    if q_idx.len() != dim - 4 {
        return Err(Error::DegeneracyViolation(format!(
            "expected exactly 4 states at the computational energy, found {}",
            dim - q_idx.len()
        )));
    }
    let nq = q_idx.len();
    let mut q_cols = DMatrix::<C64>::zeros(dim, nq);
    let mut denom = DVector::<f64>::zeros(nq);
    for (c, &k) in q_idx.iter().enumerate() {
        q_cols.set_column(c, &vecs.column(k));
        let d = e0 - evals[k];
        if d.abs() < 1e-9 * scale {
            return Err(Error::DegeneracyViolation(format!(
                "energy denominator {d:.3e} below tolerance"
            )));
        }
        denom[c] = d;
    }
    let v_pq = comp_columns.adjoint() * v.entries() * &q_cols; // 4 x nq
    // H2 = V_PQ R V_QP
    let mut v_pq_r = v_pq.clone();
    for c in 0..nq {
        let r = C64::new(1.0 / denom[c], 0.0);
        for row in 0..4 {
            v_pq_r[(row, c)] *= r;
        }
    }
    let h2 = &v_pq_r * v_pq.adjoint();
    let mut eff = h2;
    if order == 3 {
        let v_qq = q_cols.adjoint() * v.entries() * &q_cols;
        let h3 = &v_pq_r * v_qq * v_pq_r.adjoint();
        eff += h3;
    }
    // drop numerically-zero anti-Hermitian dust
    let sym = (&eff + eff.adjoint()) * C64::new(0.5, 0.0);
    EffectiveHamiltonian::new(sym)
}

/// Exact effective Hamiltonian by least-action block diagonalization: the
/// four eigenvectors of `h_full` with the largest computational overlap are
/// rotated onto the computational frame by the unitarized overlap matrix.
/// Includes the unperturbed energy on the diagonal.
pub fn exact_block_diagonalization(
    h_full: &HermitianOperator,
    comp_columns: &DMatrix<C64>,
) -> Result<EffectiveHamiltonian> {
    let dim = h_full.dim();
    if comp_columns.nrows() != dim || comp_columns.ncols() != 4 {
        return Err(Error::Dimension {
            expected: dim,
            got: comp_columns.nrows(),
        });
    }
    let prop = h_full.eigendecompose();
    let overlaps = comp_columns.adjoint() * prop.eigenvectors(); // 4 x dim
    let mut weights: Vec<(f64, usize)> = (0..dim)
        .map(|k| {
            let w: f64 = (0..4).map(|c| overlaps[(c, k)].norm_sqr()).sum();
            (w, k)
        })
        .collect();
    weights.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let sel: Vec<usize> = weights[..4].iter().map(|w| w.1).collect();
    let mut o = DMatrix::<C64>::zeros(4, 4);
    let mut energies = [0.0f64; 4];
    for (c, &k) in sel.iter().enumerate() {
        for row in 0..4 {
            o[(row, c)] = overlaps[(row, k)];
        }
        energies[c] = prop.eigenvalues_mhz()[k];
    }
    // unitarize: W = O (O^dag O)^{-1/2}
    let gram = o.adjoint() * &o;
    let eig = gram.symmetric_eigen();
    let mut inv_sqrt = DMatrix::<C64>::zeros(4, 4);
    for k in 0..4 {
        let lam = eig.eigenvalues[k];
        if lam < 1e-6 {
            return Err(Error::DegeneracyViolation(
                "selected eigenvectors poorly overlap the computational frame".into(),
            ));
        }
        inv_sqrt[(k, k)] = C64::new(1.0 / lam.sqrt(), 0.0);
    }
    let w = &o * (&eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint());
    let mut e_diag = DMatrix::<C64>::zeros(4, 4);
    for k in 0..4 {
        e_diag[(k, k)] = C64::new(energies[k], 0.0);
    }
    let eff = &w * e_diag * w.adjoint();
    let sym = (&eff + eff.adjoint()) * C64::new(0.5, 0.0);
    EffectiveHamiltonian::new(sym)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn pauli_roundtrip_on_known_matrix() {
        // diag(a,b,b,c) decomposes onto 1, z1, z2, z1z2 only
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(-2.0, 0.0),
            C64::new(-2.0, 0.0),
            C64::new(3.0, 0.0),
        ]));
        let eff = EffectiveHamiltonian::new(m.clone()).unwrap();
        let dec = eff.pauli_decompose();
        assert_relative_eq!(dec.coeff(Pauli::I, Pauli::I), 0.0, epsilon = 1e-14);
        assert_relative_eq!(dec.coeff(Pauli::Z, Pauli::Z), 2.0, epsilon = 1e-14);
        assert_relative_eq!(dec.coeff(Pauli::Z, Pauli::I), -0.5, epsilon = 1e-14);
        assert_relative_eq!(dec.coeff(Pauli::I, Pauli::Z), -0.5, epsilon = 1e-14);
        let back = dec.reconstruct();
        assert!((back - m).iter().fold(0.0f64, |mx, z| mx.max(z.norm())) < 1e-12);
    }

    #[test]
    fn identity_decomposes_to_identity_only() {
        let eff = EffectiveHamiltonian::new(DMatrix::identity(4, 4)).unwrap();
        let dec = eff.pauli_decompose();
        assert_relative_eq!(dec.coeff(Pauli::I, Pauli::I), 1.0, epsilon = 1e-14);
        assert!(dec.max_traceless() < 1e-14);
    }

    proptest! {
        #[test]
        fn pauli_decompose_reconstructs_random_hermitian(seed in 0u64..64) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let mut m = DMatrix::<C64>::zeros(4, 4);
            for i in 0..4 {
                m[(i, i)] = C64::new(rng.gen_range(-2.0..2.0), 0.0);
                for j in (i + 1)..4 {
                    let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
            let eff = EffectiveHamiltonian::new(m.clone()).unwrap();
            let back = eff.pauli_decompose().reconstruct();
            let dev = (back - m).iter().fold(0.0f64, |mx, z| mx.max(z.norm()));
            prop_assert!(dev < 1e-12);
        }
    }
}
