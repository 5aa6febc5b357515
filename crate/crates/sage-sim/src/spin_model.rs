//! Heisenberg + Zeeman Hamiltonians on coupling graphs, S_z sector
//! restriction, and the closed-form single-qubit matrices used as
//! independent oracles.
//!
//! Conventions: H = (1/4) sum_bonds J_ij sigma_i . sigma_j - sum_i h_i
//! sigma_i^z with J in MHz and h in MHz (fields are stored in kHz at the
//! `CouplingSet` level and converted here). Under the exp(-i 2 pi H t)
//! phase convention this makes a two-spin exchange oscillation complete one
//! period in exactly 1/J, i.e. 100 ns at 10 MHz.
//!
//! Product states are bitmasks: bit (i-1) set means spin i is up.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::{Bond, CouplingSet, DeviceGeometry};
use crate::operator::HermitianOperator;

pub const KHZ_TO_MHZ: f64 = 1e-3;

/// Ordered basis of product states with fixed total S_z.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    pub n_spins: usize,
    /// Twice the total S_z, kept integral for exactness.
    pub sz_twice: i32,
    /// Ascending bitmasks; bit (i-1) set = spin i up.
    pub states: Vec<u16>,
    index_of: HashMap<u16, usize>,
}

impl SectorBasis {
    pub fn new(n_spins: usize, sz_twice: i32) -> Result<Arc<Self>> {
        if n_spins > 12 {
            return Err(Error::TooManySpins { n_spins });
        }
        let n = n_spins as i32;
        // n_up - n_down = sz_twice and n_up + n_down = n
        let two_nup = n + sz_twice;
        if two_nup < 0 || two_nup > 2 * n || two_nup % 2 != 0 {
            return Err(Error::Geometry(format!(
                "no S_z = {}/2 sector for {n_spins} spins",
                sz_twice
            )));
        }
        let n_up = (two_nup / 2) as u32;
        let states: Vec<u16> = (0u16..1 << n_spins)
            .filter(|m| m.count_ones() == n_up)
            .collect();
        let index_of = states.iter().enumerate().map(|(k, &m)| (m, k)).collect();
        Ok(Arc::new(SectorBasis {
            n_spins,
            sz_twice,
            states,
            index_of,
        }))
    }

    pub fn sz(&self) -> f64 {
        self.sz_twice as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, mask: u16) -> Option<usize> {
        self.index_of.get(&mask).copied()
    }

    /// A sector vector from (mask, amplitude) pairs.
    pub fn vector(&self, amplitudes: &[(u16, C64)]) -> DVector<C64> {
        let mut v = DVector::zeros(self.dim());
        for &(mask, amp) in amplitudes {
            let k = self.index_of(mask).expect("mask outside sector");
            v[k] = amp;
        }
        v
    }
}

fn site_bit(site: u8) -> usize {
    usize::from(site) - 1
}

/// Dense Heisenberg + Zeeman matrix on the full 2^n space, from raw bond and
/// field lists (fields already in MHz). Internal workhorse shared with the
/// calibration simulations.
pub(crate) fn heisenberg_dense(
    n_spins: usize,
    bonds_mhz: &[(Bond, f64)],
    fields_mhz: &[f64],
) -> DMatrix<C64> {
    let dim = 1usize << n_spins;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for &(bond, j) in bonds_mhz {
        let (a, b) = bond.sites();
        let (ba, bb) = (site_bit(a), site_bit(b));
        for s in 0..dim {
            let same = ((s >> ba) & 1) == ((s >> bb) & 1);
            if same {
                m[(s, s)] += C64::new(j / 4.0, 0.0);
            } else {
                m[(s, s)] -= C64::new(j / 4.0, 0.0);
                let flipped = s ^ (1 << ba) ^ (1 << bb);
                m[(flipped, s)] += C64::new(j / 2.0, 0.0);
            }
        }
    }
    for (i, &h) in fields_mhz.iter().enumerate() {
        if h == 0.0 {
            continue;
        }
        for s in 0..dim {
            let up = (s >> i) & 1 == 1;
            let sign = if up { 1.0 } else { -1.0 };
            m[(s, s)] -= C64::new(h * sign, 0.0);
        }
    }
    m
}

/// The disordered Heisenberg Hamiltonian with onsite Zeeman term on the full
/// 2^n space. Commutes with total S^z.
pub fn build_heisenberg(
    geometry: &DeviceGeometry,
    couplings: &CouplingSet,
) -> Result<HermitianOperator> {
    if geometry.n_spins > 12 {
        return Err(Error::TooManySpins {
            n_spins: geometry.n_spins,
        });
    }
    geometry.validate()?;
    couplings.validate_for(geometry)?;
    let bonds: Vec<(Bond, f64)> = geometry
        .bonds
        .iter()
        .map(|&b| (b, couplings.j(b)))
        .collect();
    let fields: Vec<f64> = (1..=geometry.n_spins)
        .map(|i| couplings.h(i as u8) * KHZ_TO_MHZ)
        .collect();
    HermitianOperator::new(heisenberg_dense(geometry.n_spins, &bonds, &fields))
}

/// Restricts a full-space operator to the given S_z sector, rejecting
/// operators that mix sectors beyond 1e-10 of their scale.
pub fn project_to_sector(
    h: &HermitianOperator,
    basis: &SectorBasis,
) -> Result<HermitianOperator> {
    let full_dim = 1usize << basis.n_spins;
    if h.dim() != full_dim {
        return Err(Error::Dimension {
            expected: full_dim,
            got: h.dim(),
        });
    }
    let scale = h.max_abs().max(1e-300);
    let m = h.entries();
    let mut max_mix = 0.0f64;
    for s in 0..full_dim {
        let pop_s = (s as u16).count_ones();
        for t in 0..full_dim {
            if (t as u16).count_ones() != pop_s {
                max_mix = max_mix.max(m[(t, s)].norm());
            }
        }
    }
    if max_mix > 1e-10 * scale {
        return Err(Error::SectorMixing {
            max_mix: max_mix / scale,
        });
    }
    let d = basis.dim();
    let mut block = DMatrix::<C64>::zeros(d, d);
    for (kj, &mj) in basis.states.iter().enumerate() {
        for (ki, &mi) in basis.states.iter().enumerate() {
            block[(ki, kj)] = m[(mi as usize, mj as usize)];
        }
    }
    HermitianOperator::new(block)
}

/// Builds the sector-restricted Hamiltonian in one step.
pub fn sector_hamiltonian(
    geometry: &DeviceGeometry,
    couplings: &CouplingSet,
    basis: &SectorBasis,
) -> Result<HermitianOperator> {
    let full = build_heisenberg(geometry, couplings)?;
    project_to_sector(&full, basis)
}

fn labeled_column(basis: &SectorBasis, parts: &[(u16, f64)]) -> DVector<C64> {
    let amps: Vec<(u16, C64)> = parts
        .iter()
        .map(|&(m, a)| (m, C64::new(a, 0.0)))
        .collect();
    basis.vector(&amps)
}

/// Change of basis from the S_z = 0 product basis of four spins to the ordered
/// labeled basis {|0>, |1>, |T1>, |T2>, |T3>, |Q>}. Columns are the labeled
/// states; the first two span the computational subspace.
///
/// Product-state composition of each column (masks: bit i-1 = spin i up):
/// |0> = (|udud> - |uddu> - |duud> + |dudu>)/2, and so on for the triplet and
/// quintet combinations.
pub fn labeled_eigenbasis_4dot() -> DMatrix<C64> {
    let basis = SectorBasis::new(4, 0).expect("static");
    let s3 = 3.0f64.sqrt();
    // masks: uudd=3, udud=5, duud=6, uddu=9, dudu=10, dduu=12
    let cols = [
        labeled_column(&basis, &[(5, 0.5), (9, -0.5), (6, -0.5), (10, 0.5)]),
        labeled_column(
            &basis,
            &[
                (3, 1.0 / s3),
                (5, -0.5 / s3),
                (9, -0.5 / s3),
                (6, -0.5 / s3),
                (10, -0.5 / s3),
                (12, 1.0 / s3),
            ],
        ),
        labeled_column(&basis, &[(5, 0.5), (9, 0.5), (6, -0.5), (10, -0.5)]),
        labeled_column(&basis, &[(5, 0.5), (9, -0.5), (6, 0.5), (10, -0.5)]),
        labeled_column(
            &basis,
            &[(3, 1.0 / 2.0f64.sqrt()), (12, -1.0 / 2.0f64.sqrt())],
        ),
        labeled_column(
            &basis,
            &[
                (3, 1.0 / 6.0f64.sqrt()),
                (5, 1.0 / 6.0f64.sqrt()),
                (6, 1.0 / 6.0f64.sqrt()),
                (9, 1.0 / 6.0f64.sqrt()),
                (10, 1.0 / 6.0f64.sqrt()),
                (12, 1.0 / 6.0f64.sqrt()),
            ],
        ),
    ];
    DMatrix::from_columns(&cols)
}

/// Change of basis from the S_z = +1/2 product basis of three spins to the
/// labeled basis {|0>, |1>, |L>}; the first two columns are computational.
pub fn labeled_eigenbasis_3dot() -> DMatrix<C64> {
    let basis = SectorBasis::new(3, 1).expect("static");
    let s2 = 2.0f64.sqrt();
    let s3 = 3.0f64.sqrt();
    let s6 = 6.0f64.sqrt();
    // masks: uud=3, udu=5, duu=6
    let cols = [
        labeled_column(&basis, &[(5, 1.0 / s2), (6, -1.0 / s2)]),
        labeled_column(&basis, &[(3, s2 / s3), (5, -1.0 / s6), (6, -1.0 / s6)]),
        labeled_column(&basis, &[(3, 1.0 / s3), (5, 1.0 / s3), (6, 1.0 / s3)]),
    ];
    DMatrix::from_columns(&cols)
}

/// Computational columns |ab> = |a>_{1-4} x |b>_{5-8} of the two-qubit
/// system, embedded in the S_z = 0 sector of eight spins (70 x 4, column
/// order |00>, |01>, |10>, |11>).
pub fn pair_computational_columns() -> DMatrix<C64> {
    let basis4 = SectorBasis::new(4, 0).expect("static");
    let basis8 = SectorBasis::new(8, 0).expect("static");
    let lab = labeled_eigenbasis_4dot();
    let single: Vec<Vec<(u16, C64)>> = (0..2)
        .map(|col| {
            basis4
                .states
                .iter()
                .enumerate()
                .map(|(k, &mask)| (mask, lab[(k, col)]))
                .filter(|(_, a)| a.norm() > 0.0)
                .collect()
        })
        .collect();
    let mut cols = Vec::with_capacity(4);
    for a in 0..2 {
        for b in 0..2 {
            let mut v = DVector::<C64>::zeros(basis8.dim());
            for &(ma, ca) in &single[a] {
                for &(mb, cb) in &single[b] {
                    let mask = ma | (mb << 4);
                    let k = basis8.index_of(mask).expect("product of Sz=0 masks");
                    v[k] = ca * cb;
                }
            }
            cols.push(v);
        }
    }
    DMatrix::from_columns(&cols)
}

/// Labeled basis appropriate for an encoding's sector (first two columns
/// computational).
pub fn labeled_eigenbasis(geometry: &DeviceGeometry) -> DMatrix<C64> {
    match geometry.n_spins {
        3 => labeled_eigenbasis_3dot(),
        4 => labeled_eigenbasis_4dot(),
        n => panic!("no labeled basis for {n} spins"),
    }
}

/// The sector basis an encoding's computational states live in.
pub fn encoding_sector(geometry: &DeviceGeometry) -> Result<Arc<SectorBasis>> {
    match geometry.n_spins {
        3 => SectorBasis::new(3, 1),
        4 => SectorBasis::new(4, 0),
        8 => SectorBasis::new(8, 0),
        n => Err(Error::Geometry(format!("unsupported spin count {n}"))),
    }
}

/// Closed-form 6x6 single-qubit matrix of a four-spin system in the labeled
/// basis, transcribed entry-by-entry. Exactly equals the labeled-basis
/// conjugation of `build_heisenberg` projected to S_z = 0.
pub fn reference_matrix_4dot(couplings: &CouplingSet) -> Result<HermitianOperator> {
    let b = |i, j| Bond::new(i, j).expect("static");
    let j12 = couplings.j(b(1, 2));
    let j13 = couplings.j(b(1, 3));
    let j14 = couplings.j(b(1, 4));
    let j23 = couplings.j(b(2, 3));
    let j24 = couplings.j(b(2, 4));
    let j34 = couplings.j(b(3, 4));
    let ja = j12 + j34;
    let jb = j13 + j24;
    let jc = j14 + j23;
    let jda = j12 - j34;
    let jdb = j13 - j24;
    let jdc = j14 - j23;
    let h = |i: u8| couplings.h(i) * KHZ_TO_MHZ;
    let d = |i, j| h(i) - h(j);
    let s3 = 3.0f64.sqrt();
    let s2 = 2.0f64.sqrt();
    let r23 = (2.0f64 / 3.0).sqrt();

    let mut m = DMatrix::<f64>::zeros(6, 6);
    m[(0, 0)] = -0.75 * ja;
    m[(0, 1)] = s3 / 4.0 * (jc - jb);
    m[(0, 2)] = -d(3, 4);
    m[(0, 3)] = -d(1, 2);
    m[(1, 1)] = 0.25 * (ja - 2.0 * (jb + jc));
    m[(1, 2)] = d(1, 2) / s3;
    m[(1, 3)] = d(3, 4) / s3;
    m[(1, 4)] = r23 * (-d(1, 3) - d(2, 4));
    m[(2, 2)] = -0.25 * (ja + 2.0 * jda);
    m[(2, 3)] = 0.25 * (jb - jc);
    m[(2, 4)] = -s2 / 4.0 * (jdb + jdc);
    m[(2, 5)] = -r23 * d(1, 2);
    m[(3, 3)] = 0.25 * (2.0 * jda - ja);
    m[(3, 4)] = s2 / 4.0 * (jdb - jdc);
    m[(3, 5)] = -r23 * d(3, 4);
    m[(4, 4)] = 0.25 * (ja - jb - jc);
    m[(4, 5)] = (-d(1, 3) - d(2, 4)) / s3;
    m[(5, 5)] = 0.25 * (ja + jb + jc);
    for i in 0..6 {
        for j in (i + 1)..6 {
            m[(j, i)] = m[(i, j)];
        }
    }
    HermitianOperator::from_real(m)
}

/// Closed-form 3x3 single-qubit matrix of a three-spin system in the labeled
/// basis {|0>, |1>, |L>}. Differs from the projected brute-force Hamiltonian
/// by the constant offset -(h1+h2+h3)/3 times identity.
pub fn reference_matrix_3dot(couplings: &CouplingSet) -> Result<HermitianOperator> {
    let b = |i, j| Bond::new(i, j).expect("static");
    let j12 = couplings.j(b(1, 2));
    let j13 = couplings.j(b(1, 3));
    let j23 = couplings.j(b(2, 3));
    let h = |i: u8| couplings.h(i) * KHZ_TO_MHZ;
    let d = |i, j| h(i) - h(j);
    let s2 = 2.0f64.sqrt();
    let s3 = 3.0f64.sqrt();
    let s6 = 6.0f64.sqrt();

    let mut m = DMatrix::<f64>::zeros(3, 3);
    m[(0, 0)] = d(1, 3) + d(2, 3) - 2.25 * j12;
    m[(0, 1)] = s3 * (d(1, 2) - 0.75 * j13 + 0.75 * j23);
    m[(0, 2)] = -s6 * d(1, 2);
    m[(1, 1)] = -d(1, 3) - d(2, 3) + 0.75 * j12 - 1.5 * (j13 + j23);
    m[(1, 2)] = -s2 * (d(1, 3) + d(2, 3));
    m[(2, 2)] = 0.75 * (j12 + j13 + j23);
    for i in 0..3 {
        for j in (i + 1)..3 {
            m[(j, i)] = m[(i, j)];
        }
    }
    HermitianOperator::from_real(m / 3.0)
}

/// A 2x2 Hermitian operator on the encoded qubit, stored as real Pauli
/// coefficients on {1, sigma_x, sigma_y, sigma_z}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncodedQubitOperator {
    pub coeff_i: f64,
    pub coeff_x: f64,
    pub coeff_y: f64,
    pub coeff_z: f64,
}

impl EncodedQubitOperator {
    pub fn matrix(&self) -> DMatrix<C64> {
        let (ci, cx, cy, cz) = (self.coeff_i, self.coeff_x, self.coeff_y, self.coeff_z);
        DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(ci + cz, 0.0),
                C64::new(cx, -cy),
                C64::new(cx, cy),
                C64::new(ci - cz, 0.0),
            ],
        )
    }

    /// Bloch vector (x, y, z) of the traceless part.
    pub fn bloch(&self) -> [f64; 3] {
        [self.coeff_x, self.coeff_y, self.coeff_z]
    }
}

/// Encoded-qubit Hamiltonian of an always-on gapless qubit in terms of the
/// generic couplings (J_a, J_b, J_c): for the T shape these are
/// (J_12, J_13, J_14) and for the triangle (J_12, J_13, J_23). Traceless by
/// construction; gapless when J_a = J_b = J_c.
pub fn encoded_qubit_hamiltonian(ja: f64, jb: f64, jc: f64) -> EncodedQubitOperator {
    EncodedQubitOperator {
        coeff_i: 0.0,
        coeff_x: 3.0f64.sqrt() / 4.0 * (jc - jb),
        coeff_y: 0.0,
        coeff_z: 0.25 * (jb + jc) - 0.5 * ja,
    }
}

/// Encoded qubit Hamiltonian of the T-shaped four-spin qubit,
/// H_q = (J_14/4)(sqrt3 x + z) - (J_13/4)(sqrt3 x - z) - (J_12/2) z.
pub fn sage_qubit_hamiltonian(j12: f64, j13: f64, j14: f64) -> EncodedQubitOperator {
    encoded_qubit_hamiltonian(j12, j13, j14)
}

/// Spectral summary of a sector-restricted Hamiltonian. Computational states
/// are identified by overlap with the labeled basis columns, never by energy
/// ordering (the qubit is deliberately gapless).
#[derive(Clone, Copy, Debug)]
pub struct SpectralReport {
    pub qubit_splitting_mhz: f64,
    pub min_gap_to_leakage_mhz: f64,
    pub leakage_hotspot: bool,
}

pub fn spectral_report(
    h: &HermitianOperator,
    labeled: &DMatrix<C64>,
    computational_dim: usize,
    coupling_scale_mhz: f64,
) -> Result<SpectralReport> {
    if labeled.nrows() != h.dim() {
        return Err(Error::Dimension {
            expected: h.dim(),
            got: labeled.nrows(),
        });
    }
    let prop = h.eigendecompose();
    let dim = h.dim();
    let comp_cols = labeled.columns(0, computational_dim);
    // weight of each eigenvector on the computational subspace
    let overlaps = comp_cols.adjoint() * prop.eigenvectors();
    let mut weights: Vec<(f64, usize)> = (0..dim)
        .map(|k| {
            let w: f64 = (0..computational_dim)
                .map(|c| overlaps[(c, k)].norm_sqr())
                .sum();
            (w, k)
        })
        .collect();
    weights.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let comp_idx: Vec<usize> = weights[..computational_dim].iter().map(|w| w.1).collect();
    let evals = prop.eigenvalues_mhz();
    let comp_e: Vec<f64> = comp_idx.iter().map(|&k| evals[k]).collect();
    let mut splitting = 0.0f64;
    for i in 0..comp_e.len() {
        for j in (i + 1)..comp_e.len() {
            splitting = splitting.max((comp_e[i] - comp_e[j]).abs());
        }
    }
    let mut min_gap = f64::INFINITY;
    for k in 0..dim {
        if comp_idx.contains(&k) {
            continue;
        }
        for &e in &comp_e {
            min_gap = min_gap.min((evals[k] - e).abs());
        }
    }
    Ok(SpectralReport {
        qubit_splitting_mhz: splitting,
        min_gap_to_leakage_mhz: min_gap,
        leakage_hotspot: min_gap < 1e-6 * coupling_scale_mhz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Bond, CouplingSet, DeviceGeometry};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn b(i: u8, j: u8) -> Bond {
        Bond::new(i, j).unwrap()
    }

    fn max_abs_diff(a: &DMatrix<C64>, c: &DMatrix<C64>) -> f64 {
        (a - c).iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    #[test]
    fn sector_sizes() {
        assert_eq!(SectorBasis::new(4, 0).unwrap().dim(), 6);
        assert_eq!(SectorBasis::new(3, 1).unwrap().dim(), 3);
        assert_eq!(SectorBasis::new(8, 0).unwrap().dim(), 70);
        assert!(SectorBasis::new(13, 1).is_err());
        assert!(SectorBasis::new(3, 0).is_err());
    }

    #[test]
    fn two_spin_couplings_off_gives_zero() {
        let geo = DeviceGeometry::eo_linear();
        let h = build_heisenberg(&geo, &CouplingSet::new()).unwrap();
        assert_eq!(h.max_abs(), 0.0);
    }

    #[test]
    fn two_spin_spectrum_and_splitting() {
        // Brute-force 4x4 diagonalization oracle: a single bond J gives the
        // singlet at -3J/4 and a threefold-degenerate triplet at +J/4, so the
        // singlet-triplet splitting equals J.
        let bonds = [(b(1, 2), 10.0)];
        let h = HermitianOperator::new(heisenberg_dense(2, &bonds, &[0.0, 0.0])).unwrap();
        let mut evals: Vec<f64> = h.eigendecompose().eigenvalues_mhz().iter().copied().collect();
        evals.sort_by(|a, c| a.partial_cmp(c).unwrap());
        assert_relative_eq!(evals[0], -7.5, epsilon = 1e-10);
        for k in 1..4 {
            assert_relative_eq!(evals[k], 2.5, epsilon = 1e-10);
        }
        assert_relative_eq!(evals[1] - evals[0], 10.0, epsilon = 1e-10);
    }

    #[test]
    fn heisenberg_commutes_with_total_sz_always_and_s2_for_global_field() {
        let geo = DeviceGeometry::sage_t();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut cs = CouplingSet::uniform_exchange(&geo, 3.0);
        for i in 1..=4 {
            cs = cs.with_h(i, rng.gen_range(-100.0..100.0));
        }
        let h = build_heisenberg(&geo, &cs).unwrap();
        let dim = 16;
        // total S^z in units of sigma/2: diagonal, commutation is exact by
        // construction; check the matrix is popcount-block-diagonal instead.
        for s in 0..dim {
            for t in 0..dim {
                if (s as u16).count_ones() != (t as u16).count_ones() {
                    assert!(h.entries()[(t, s)].norm() < 1e-12);
                }
            }
        }
        // total S^2 commutation for a global field
        let mut cs2 = CouplingSet::uniform_exchange(&geo, 3.0);
        for i in 1..=4 {
            cs2 = cs2.with_h(i, 55.0);
        }
        let hg = build_heisenberg(&geo, &cs2).unwrap();
        // S^2 = (1/4)(sum sigma_i)^2 = (3n/4) I + (1/2) sum_{i<j} sigma_i.sigma_j
        let mut pair_bonds = Vec::new();
        for i in 1..=4u8 {
            for j in (i + 1)..=4 {
                pair_bonds.push((b(i, j), 2.0));
            }
        }
        let s2 = heisenberg_dense(4, &pair_bonds, &[0.0; 4]);
        let comm = hg.entries() * &s2 - &s2 * hg.entries();
        assert!(comm.iter().fold(0.0f64, |m, z| m.max(z.norm())) < 1e-10);
    }

    #[test]
    fn project_rejects_sector_mixing() {
        let mut m = DMatrix::<C64>::zeros(8, 8);
        m[(0, 1)] = C64::new(1.0, 0.0); // couples popcount 0 and 1
        m[(1, 0)] = C64::new(1.0, 0.0);
        let h = HermitianOperator::new(m).unwrap();
        let basis = SectorBasis::new(3, 1).unwrap();
        assert!(matches!(
            project_to_sector(&h, &basis),
            Err(Error::SectorMixing { .. })
        ));
    }

    #[test]
    fn labeled_bases_are_unitary() {
        for basis in [labeled_eigenbasis_4dot(), labeled_eigenbasis_3dot()] {
            let dev = max_abs_diff(
                &(basis.adjoint() * &basis),
                &DMatrix::identity(basis.ncols(), basis.ncols()),
            );
            assert!(dev < 1e-12, "{dev}");
        }
    }

    #[test]
    fn labeled_state_zero_has_half_amplitudes() {
        let basis4 = SectorBasis::new(4, 0).unwrap();
        let lab = labeled_eigenbasis_4dot();
        let expect = [(5u16, 0.5), (9, -0.5), (6, -0.5), (10, 0.5)];
        for (mask, amp) in expect {
            let k = basis4.index_of(mask).unwrap();
            assert_relative_eq!(lab[(k, 0)].re, amp, epsilon = 1e-15);
            assert_relative_eq!(lab[(k, 0)].im, 0.0, epsilon = 1e-15);
        }
    }

    fn random_couplings_4dot(rng: &mut ChaCha12Rng) -> CouplingSet {
        let geo = DeviceGeometry::box_4dot();
        let mut cs = CouplingSet::new();
        for &bond in &geo.bonds {
            cs = cs.with_j(bond, rng.gen_range(0.0..20.0));
        }
        for i in 1..=4 {
            cs = cs.with_h(i, rng.gen_range(-500.0..500.0));
        }
        cs
    }

    #[test]
    fn reference_matrix_4dot_matches_brute_force_100_draws() {
        let geo = DeviceGeometry::box_4dot();
        let basis = SectorBasis::new(4, 0).unwrap();
        let lab = labeled_eigenbasis_4dot();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..100 {
            let cs = random_couplings_4dot(&mut rng);
            let brute = sector_hamiltonian(&geo, &cs, &basis).unwrap();
            let in_labeled = brute.conjugate_by(&lab).unwrap();
            let closed = reference_matrix_4dot(&cs).unwrap();
            let scale = cs.max_scale_mhz().max(1e-12);
            let dev = max_abs_diff(in_labeled.entries(), closed.entries());
            assert!(dev < 1e-10 * scale, "dev {dev} scale {scale}");
        }
    }

    #[test]
    fn reference_matrix_3dot_matches_brute_force_up_to_offset() {
        // The closed form differs from brute force by -(h1+h2+h3)/3 * I,
        // computed here numerically from the trace and checked against that
        // analytic expression.
        let geo = DeviceGeometry::triage_triangle();
        let basis = SectorBasis::new(3, 1).unwrap();
        let lab = labeled_eigenbasis_3dot();
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        for _ in 0..100 {
            let mut cs = CouplingSet::new();
            for &bond in &geo.bonds {
                cs = cs.with_j(bond, rng.gen_range(0.0..20.0));
            }
            let mut hsum = 0.0;
            for i in 1..=3 {
                let h = rng.gen_range(-500.0..500.0);
                hsum += h * KHZ_TO_MHZ;
                cs = cs.with_h(i, h);
            }
            let brute = sector_hamiltonian(&geo, &cs, &basis).unwrap();
            let in_labeled = brute.conjugate_by(&lab).unwrap();
            let closed = reference_matrix_3dot(&cs).unwrap();
            let diff = in_labeled.entries() - closed.entries();
            let offset = diff.trace().re / 3.0;
            assert_relative_eq!(offset, -hsum / 3.0, epsilon = 1e-10, max_relative = 1e-8);
            let residual = &diff - DMatrix::<C64>::identity(3, 3) * C64::new(offset, 0.0);
            let scale = cs.max_scale_mhz().max(1e-12);
            assert!(
                residual.iter().fold(0.0f64, |m, z| m.max(z.norm())) < 1e-10 * scale
            );
        }
    }

    #[test]
    fn reference_matrices_zero_for_zero_couplings() {
        let zero = CouplingSet::new();
        assert_eq!(reference_matrix_4dot(&zero).unwrap().max_abs(), 0.0);
        assert_eq!(reference_matrix_3dot(&zero).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn three_dot_splitting_for_single_bond() {
        // J_12 only: |0> at -(3/4)J, |1> at +(1/4)J, splitting J; verified
        // against the 8x8 diagonalization through sector_hamiltonian.
        let cs = CouplingSet::new().with_j(b(1, 2), 8.0);
        let m = reference_matrix_3dot(&cs).unwrap();
        assert_relative_eq!(m.entries()[(0, 0)].re, -6.0, epsilon = 1e-12);
        assert_relative_eq!(m.entries()[(1, 1)].re, 2.0, epsilon = 1e-12);
        let geo = DeviceGeometry::eo_linear();
        let basis = SectorBasis::new(3, 1).unwrap();
        let brute = sector_hamiltonian(&geo, &cs, &basis)
            .unwrap()
            .conjugate_by(&labeled_eigenbasis_3dot())
            .unwrap();
        assert!(max_abs_diff(brute.entries(), m.entries()) < 1e-12);
    }

    #[test]
    fn uniform_gradient_couples_one_to_leakage() {
        // Delta_13 = Delta_23 = delta with no exchange: the |1>-|L> entry is
        // -sqrt2 (Delta_13 + Delta_23)/3.
        let delta_khz = 300.0;
        let cs = CouplingSet::new()
            .with_h(1, delta_khz)
            .with_h(2, delta_khz)
            .with_h(3, 0.0);
        let m = reference_matrix_3dot(&cs).unwrap();
        let expect = -2.0f64.sqrt() * 2.0 * (delta_khz * KHZ_TO_MHZ) / 3.0;
        assert_relative_eq!(m.entries()[(1, 2)].re, expect, epsilon = 1e-12);
        assert_relative_eq!(m.entries()[(0, 1)].re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gradients_never_couple_the_computational_pair() {
        // With arbitrary fields and zero exchange the 6x6 has exactly zero
        // |0>-|1> entry: gradients only couple states of different total S.
        let mut rng = ChaCha12Rng::seed_from_u64(44);
        for _ in 0..20 {
            let mut cs = CouplingSet::new();
            for i in 1..=4 {
                cs = cs.with_h(i, rng.gen_range(-900.0..900.0));
            }
            let m = reference_matrix_4dot(&cs).unwrap();
            assert_eq!(m.entries()[(0, 1)], C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn eq3_consistency_with_computational_block() {
        // The traceless part of the 6x6 computational block equals the
        // encoded-qubit Hamiltonian for 100 random T-shape couplings.
        let mut rng = ChaCha12Rng::seed_from_u64(45);
        for _ in 0..100 {
            let (j12, j13, j14) = (
                rng.gen_range(0.0..15.0),
                rng.gen_range(0.0..15.0),
                rng.gen_range(0.0..15.0),
            );
            let cs = CouplingSet::new()
                .with_j(b(1, 2), j12)
                .with_j(b(1, 3), j13)
                .with_j(b(1, 4), j14);
            let m = reference_matrix_4dot(&cs).unwrap();
            let block = m.entries().view((0, 0), (2, 2)).clone_owned();
            let tr_half = block.trace() / C64::new(2.0, 0.0);
            let traceless = &block - DMatrix::identity(2, 2) * tr_half;
            let hq = sage_qubit_hamiltonian(j12, j13, j14).matrix();
            assert!(max_abs_diff(&traceless, &hq) < 1e-10);
        }
    }

    #[test]
    fn gapless_iff_equal_effective_couplings() {
        for ja in [1.0, 2.0, 3.0] {
            for jb in [1.0, 2.0, 3.0] {
                for jc in [1.0, 2.0, 3.0] {
                    let hq = encoded_qubit_hamiltonian(ja, jb, jc);
                    let splitting =
                        2.0 * (hq.coeff_x.powi(2) + hq.coeff_z.powi(2)).sqrt();
                    let gapless = (ja - jb).abs() < 1e-12 && (jb - jc).abs() < 1e-12;
                    assert_eq!(splitting < 1e-12, gapless, "{ja} {jb} {jc}");
                }
            }
        }
    }

    #[test]
    fn sage_uniform_spectrum_and_gap() {
        let geo = DeviceGeometry::sage_t();
        let j = 10.0;
        let cs = CouplingSet::uniform_exchange(&geo, j);
        let basis = SectorBasis::new(4, 0).unwrap();
        let h = sector_hamiltonian(&geo, &cs, &basis).unwrap();
        let rep = spectral_report(&h, &labeled_eigenbasis_4dot(), 2, j).unwrap();
        assert!(rep.qubit_splitting_mhz < 1e-9 * j);
        assert_relative_eq!(rep.min_gap_to_leakage_mhz, j / 2.0, epsilon = 1e-9 * j);
        assert!(!rep.leakage_hotspot);
    }

    #[test]
    fn box_uniform_reaches_same_gap() {
        // Equal bonds J/2 on all six pairs give J_a = J_b = J_c = J with all
        // J_delta zero: gap J/2, the second optimal point.
        let geo = DeviceGeometry::box_4dot();
        let j = 10.0;
        let cs = CouplingSet::uniform_exchange(&geo, j / 2.0);
        let basis = SectorBasis::new(4, 0).unwrap();
        let h = sector_hamiltonian(&geo, &cs, &basis).unwrap();
        let rep = spectral_report(&h, &labeled_eigenbasis_4dot(), 2, j).unwrap();
        assert!(rep.qubit_splitting_mhz < 1e-9 * j);
        assert_relative_eq!(rep.min_gap_to_leakage_mhz, j / 2.0, epsilon = 1e-9 * j);
    }

    #[test]
    fn linear_chain_has_leakage_hotspot() {
        // A four-dot chain (J_12 = J_34 = J, J_23 swept) has a leakage state
        // crossing the computational pair near J_23 = 2J.
        let geo = DeviceGeometry::box_4dot();
        let basis = SectorBasis::new(4, 0).unwrap();
        let lab = labeled_eigenbasis_4dot();
        let j = 5.0;
        let mut hit = false;
        let mut min_gap = f64::INFINITY;
        for k in 0..=400 {
            let x = 3.0 * j * k as f64 / 400.0;
            let cs = CouplingSet::new()
                .with_j(b(1, 2), j)
                .with_j(b(3, 4), j)
                .with_j(b(2, 3), x);
            let h = sector_hamiltonian(&geo, &cs, &basis).unwrap();
            let rep = spectral_report(&h, &lab, 2, cs.max_scale_mhz()).unwrap();
            min_gap = min_gap.min(rep.min_gap_to_leakage_mhz);
            hit |= rep.leakage_hotspot;
        }
        assert!(hit, "no hotspot found; min gap seen {min_gap}");
    }

    #[test]
    fn too_many_spins_rejected() {
        let geo = DeviceGeometry {
            n_spins: 13,
            bonds: vec![],
            encoding: crate::geometry::Encoding::Box4Dot,
            computational_labels: String::new(),
        };
        assert!(matches!(
            build_heisenberg(&geo, &CouplingSet::new()),
            Err(Error::TooManySpins { .. })
        ));
    }
}
