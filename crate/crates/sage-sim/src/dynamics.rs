//! Exact time evolution of sector-restricted states under piecewise-constant
//! schedules, and the derived observables: coherence, leakage, entanglement
//! entropy.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gates::PulseSchedule;
use crate::geometry::{CouplingSet, DeviceGeometry};
use crate::noise::{apply_noise, sample_realization_in_context, NoiseRealization, NoiseSpec};
use crate::operator::HermitianOperator;
use crate::spin_model::{
    encoding_sector, labeled_eigenbasis, sector_hamiltonian, SectorBasis,
};

/// A pure state in a fixed S_z sector.
#[derive(Clone, Debug)]
pub struct QuantumState {
    pub basis: Arc<SectorBasis>,
    amplitudes: DVector<C64>,
}

impl QuantumState {
    /// Validates normalization to 1e-10.
    pub fn new(basis: Arc<SectorBasis>, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::Dimension {
                expected: basis.dim(),
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Couplings(format!("state norm {norm} is not 1")));
        }
        Ok(QuantumState { basis, amplitudes })
    }

    /// Normalized superposition sum_i c_i |col_i> of columns of a matrix.
    pub fn from_columns(
        basis: Arc<SectorBasis>,
        columns: &DMatrix<C64>,
        weights: &[C64],
    ) -> Result<Self> {
        let mut v = DVector::<C64>::zeros(columns.nrows());
        for (k, w) in weights.iter().enumerate() {
            v += columns.column(k) * *w;
        }
        let norm = v.norm();
        if norm < 1e-12 {
            return Err(Error::Couplings("zero superposition".into()));
        }
        QuantumState::new(basis, v / C64::new(norm, 0.0))
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn overlap(&self, other: &QuantumState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// Times (ns, strictly increasing) and one scalar observable per time.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times_ns: Vec<f64>,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn new(times_ns: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times_ns.len() != values.len() {
            return Err(Error::Dimension {
                expected: times_ns.len(),
                got: values.len(),
            });
        }
        if times_ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("trajectory times must strictly increase".into()));
        }
        Ok(Trajectory { times_ns, values })
    }
}

/// exp(-i 2 pi H t) |psi> by eigendecomposition. For repeated times on one
/// Hamiltonian use `HermitianOperator::eigendecompose` directly.
pub fn evolve(h: &HermitianOperator, t_ns: f64, psi: &QuantumState) -> Result<QuantumState> {
    if h.dim() != psi.basis.dim() {
        return Err(Error::Dimension {
            expected: psi.basis.dim(),
            got: h.dim(),
        });
    }
    let out = h.eigendecompose().apply(t_ns, psi.amplitudes());
    QuantumState::new(psi.basis.clone(), out)
}

/// Sector propagator of one schedule segment with noise applied.
fn segment_hamiltonian(
    geometry: &DeviceGeometry,
    couplings: &CouplingSet,
    r: &NoiseRealization,
    basis: &SectorBasis,
) -> Result<HermitianOperator> {
    let noisy = apply_noise(couplings, r);
    sector_hamiltonian(geometry, &noisy, basis)
}

/// Left-to-right application of the schedule's segments, each evolved under
/// the same quasistatic realization.
pub fn run_schedule(
    schedule: &PulseSchedule,
    r: &NoiseRealization,
    psi0: &QuantumState,
) -> Result<QuantumState> {
    if schedule.geometry.n_spins != psi0.basis.n_spins {
        return Err(Error::Dimension {
            expected: psi0.basis.n_spins,
            got: schedule.geometry.n_spins,
        });
    }
    let mut amp = psi0.amplitudes().clone();
    for seg in &schedule.segments {
        let h = segment_hamiltonian(&schedule.geometry, &seg.couplings, r, &psi0.basis)?;
        amp = h.eigendecompose().apply(seg.duration_ns, &amp);
    }
    QuantumState::new(psi0.basis.clone(), amp)
}

/// Full sector unitary of a schedule under one realization.
pub fn schedule_unitary(schedule: &PulseSchedule, r: &NoiseRealization) -> Result<DMatrix<C64>> {
    let basis = encoding_sector(&schedule.geometry)?;
    let mut u = DMatrix::<C64>::identity(basis.dim(), basis.dim());
    for seg in &schedule.segments {
        let h = segment_hamiltonian(&schedule.geometry, &seg.couplings, r, &basis)?;
        u = h.eigendecompose().apply_columns(seg.duration_ns, &u);
    }
    Ok(u)
}

/// Idle couplings of an encoding: every bond at `j_idle_mhz` for always-on
/// encodings, zero exchange for the conventional linear qubit.
pub fn idle_couplings(geometry: &DeviceGeometry, j_idle_mhz: f64) -> CouplingSet {
    match geometry.encoding {
        crate::geometry::Encoding::EoLinear => CouplingSet::uniform_exchange(geometry, 0.0),
        _ => CouplingSet::uniform_exchange(geometry, j_idle_mhz),
    }
}

/// Ensemble-averaged |rho_01| of an idling encoded qubit, with phases tracked
/// in the frame of the ideal (noiseless) idle evolution. Starts from
/// (|0> + |1>)/sqrt2. Realization k uses stream id k under the given context.
pub fn coherence_trace(
    geometry: &DeviceGeometry,
    j_idle_mhz: f64,
    spec: &NoiseSpec,
    n_realizations: usize,
    times_ns: &[f64],
    master_seed: u64,
    context: u64,
) -> Result<Trajectory> {
    let basis = encoding_sector(geometry)?;
    let labeled = labeled_eigenbasis(geometry);
    let comp = labeled.columns(0, 2).clone_owned();
    let idle = idle_couplings(geometry, j_idle_mhz);
    let psi0 = {
        let mut v = DVector::<C64>::zeros(basis.dim());
        v += comp.column(0) * C64::new(1.0 / 2.0f64.sqrt(), 0.0);
        v += comp.column(1) * C64::new(1.0 / 2.0f64.sqrt(), 0.0);
        v
    };
    // reference frame: ideal idle evolution of the computational columns
    let h_ideal = sector_hamiltonian(geometry, &idle, &basis)?;
    let prop_ideal = h_ideal.eigendecompose();
    let frames: Vec<DMatrix<C64>> = times_ns
        .iter()
        .map(|&t| prop_ideal.apply_columns(t, &comp))
        .collect();

    let per_realization: Vec<Vec<C64>> = (0..n_realizations)
        .into_par_iter()
        .map(|k| {
            let r = sample_realization_in_context(spec, geometry, context, k as u64, master_seed);
            let h = segment_hamiltonian(geometry, &idle, &r, &basis)
                .expect("idle couplings stay valid under noise");
            let prop = h.eigendecompose();
            times_ns
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    let psi = prop.apply(t, &psi0);
                    let a0 = frames[i].column(0).dotc(&psi);
                    let a1 = frames[i].column(1).dotc(&psi);
                    a0 * a1.conj()
                })
                .collect()
        })
        .collect();

    // deterministic ordered reduction over stream ids
    let mut mean = vec![C64::new(0.0, 0.0); times_ns.len()];
    for row in &per_realization {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let values = mean
        .iter()
        .map(|m| (m / C64::new(n_realizations as f64, 0.0)).norm())
        .collect();
    Trajectory::new(times_ns.to_vec(), values)
}

/// Population outside the space spanned by the projector columns.
pub fn leakage(psi: &QuantumState, comp_columns: &DMatrix<C64>) -> f64 {
    let overlaps = comp_columns.adjoint() * psi.amplitudes();
    (1.0 - overlaps.norm_squared()).max(0.0)
}

/// Von Neumann entanglement entropy (natural log) of spins 1-4 against spins
/// 5-8 for an eight-spin sector state. The reference value for a maximally
/// entangled qubit pair is ln 2.
pub fn entanglement_entropy(psi: &QuantumState) -> Result<f64> {
    if psi.basis.n_spins != 8 {
        return Err(Error::Dimension {
            expected: 8,
            got: psi.basis.n_spins,
        });
    }
    // embed the sector amplitudes into the 2^8 product space and reshape
    // with spins 1-4 as rows, spins 5-8 as columns
    let mut m = DMatrix::<C64>::zeros(16, 16);
    for (k, &mask) in psi.basis.states.iter().enumerate() {
        let row = (mask & 0x0f) as usize;
        let col = (mask >> 4) as usize;
        m[(row, col)] = psi.amplitudes()[k];
    }
    let rho_a = &m * m.adjoint();
    let eig = rho_a.symmetric_eigen();
    let mut s = 0.0;
    for &p in eig.eigenvalues.iter() {
        if p > 1e-15 {
            s -= p * p.ln();
        }
    }
    Ok(s)
}
