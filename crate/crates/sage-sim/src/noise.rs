//! Quasistatic disorder: uniform per-site field offsets and per-bond relative
//! exchange errors, drawn from deterministic per-stream generators, plus the
//! calibration of the dimensionless widths to Q_eff and T2_eff.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::fit::{fit_gaussian_decay_xy, GaussianDecayFit};
use crate::error::{Error, Result};
use crate::geometry::{Bond, CouplingSet, DeviceGeometry};
use crate::operator::{HermitianOperator, NS_PER_US};
use crate::spin_model::heisenberg_dense;

/// Disorder widths: fields uniform in [-delta_h, +delta_h] (kHz), relative
/// exchange errors uniform in [-delta_j, +delta_j] (dimensionless).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub delta_h_khz: f64,
    pub delta_j: f64,
}

impl NoiseSpec {
    pub fn new(delta_h_khz: f64, delta_j: f64) -> Result<Self> {
        if !(delta_h_khz >= 0.0) {
            return Err(Error::NoiseSpec(format!(
                "delta_h must be non-negative, got {delta_h_khz}"
            )));
        }
        if !(0.0..1.0).contains(&delta_j) {
            return Err(Error::NoiseSpec(format!(
                "delta_j must lie in [0, 1), got {delta_j}"
            )));
        }
        Ok(NoiseSpec {
            delta_h_khz,
            delta_j,
        })
    }

    pub fn zero() -> Self {
        NoiseSpec {
            delta_h_khz: 0.0,
            delta_j: 0.0,
        }
    }
}

/// The deterministic lineage that produced a realization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPath {
    pub master_seed: u64,
    pub context: u64,
    pub stream_id: u64,
}

/// A ChaCha generator keyed by (master seed, context, stream id) through
/// SHA-256, so streams are independent and scheduling-order free.
pub fn derive_rng(master_seed: u64, context: u64, stream_id: u64) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"sage-sim/stream/v1");
    hasher.update(master_seed.to_le_bytes());
    hasher.update(context.to_le_bytes());
    hasher.update(stream_id.to_le_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(seed)
}

/// Stable 64-bit hash of labeled parts, used to key noise streams by
/// experiment structure rather than by loop scheduling.
pub fn stream_key(parts: &[(&str, u64)]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"sage-sim/key/v1");
    for (label, value) in parts {
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
        hasher.update(value.to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// One quasistatic draw: field offsets per site and relative exchange errors
/// per bond. Held constant for the full duration of a trace or sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    pub h_khz: BTreeMap<u8, f64>,
    pub eps: BTreeMap<Bond, f64>,
    pub seed_path: SeedPath,
}

impl NoiseRealization {
    pub fn zero(geometry: &DeviceGeometry) -> Self {
        NoiseRealization {
            h_khz: (1..=geometry.n_spins as u8).map(|i| (i, 0.0)).collect(),
            eps: geometry.bonds.iter().map(|&b| (b, 0.0)).collect(),
            seed_path: SeedPath {
                master_seed: 0,
                context: 0,
                stream_id: 0,
            },
        }
    }
}

/// Samples one realization. The underlying unit draws depend only on
/// (master_seed, context, stream_id) and the geometry's site/bond layout, so
/// sweeping the widths rescales a fixed set of draws rather than resampling.
pub fn sample_realization_in_context(
    spec: &NoiseSpec,
    geometry: &DeviceGeometry,
    context: u64,
    stream_id: u64,
    master_seed: u64,
) -> NoiseRealization {
    let mut rng = derive_rng(master_seed, context, stream_id);
    let mut h_khz = BTreeMap::new();
    for site in 1..=geometry.n_spins as u8 {
        let unit: f64 = rng.gen_range(-1.0..=1.0);
        h_khz.insert(site, unit * spec.delta_h_khz);
    }
    let mut eps = BTreeMap::new();
    let mut bonds = geometry.bonds.clone();
    bonds.sort();
    for bond in bonds {
        let unit: f64 = rng.gen_range(-1.0..=1.0);
        eps.insert(bond, unit * spec.delta_j);
    }
    NoiseRealization {
        h_khz,
        eps,
        seed_path: SeedPath {
            master_seed,
            context,
            stream_id,
        },
    }
}

/// Samples with the context derived from the geometry itself.
pub fn sample_realization(
    spec: &NoiseSpec,
    geometry: &DeviceGeometry,
    stream_id: u64,
    master_seed: u64,
) -> NoiseRealization {
    let context = stream_key(&[
        ("geometry", geometry.n_spins as u64),
        ("bonds", geometry.bonds.len() as u64),
    ]);
    sample_realization_in_context(spec, geometry, context, stream_id, master_seed)
}

/// Multiplicative exchange noise and additive field offsets:
/// J -> J (1 + eps), h -> h + h_noise. Bonds with J = 0 stay at zero.
pub fn apply_noise(base: &CouplingSet, r: &NoiseRealization) -> CouplingSet {
    let mut out = base.clone();
    for (bond, j) in out.j_mhz.iter_mut() {
        let eps = r.eps.get(bond).copied().unwrap_or(0.0);
        *j *= 1.0 + eps;
    }
    for (site, dh) in &r.h_khz {
        if *dh != 0.0 {
            *out.h_khz.entry(*site).or_insert(0.0) += dh;
        }
    }
    out
}

const CALIBRATION_SEED: u64 = 0x5a6e_0001;

fn exchange_pair_bond() -> Bond {
    Bond::new(1, 2).expect("static")
}

/// Two-spin exchange-oscillation calibration: simulates singlet return under
/// multiplicative exchange noise, fits a Gaussian envelope to the oscillation
/// extrema, and reports the oscillation count at 1/e envelope decay.
pub fn calibrate_qeff(delta_j: f64, n_realizations: usize, master_seed: u64) -> Result<f64> {
    if delta_j <= 0.0 {
        return Err(Error::NoiseSpec("calibrate_qeff requires delta_j > 0".into()));
    }
    let j0 = 10.0;
    // uniform-width phase spread reaches 1/e near 0.35/delta_j oscillations
    let k_max = (2.5 * 0.37 / delta_j).ceil() as usize;
    let peak_times_us: Vec<f64> = (0..=k_max).map(|k| k as f64 / j0).collect();
    let psi0 = {
        // |up,down> is mask 0b01 = index 1 of the full 2-spin space
        let mut v = DVector::<C64>::zeros(4);
        v[1] = C64::new(1.0, 0.0);
        v
    };
    let context = stream_key(&[("calibrate", 1), ("qeff_mil", (delta_j * 1e6) as u64)]);
    let mut envelope = vec![0.0f64; peak_times_us.len()];
    for k in 0..n_realizations {
        let mut rng = derive_rng(master_seed, context, k as u64);
        let unit: f64 = rng.gen_range(-1.0..=1.0);
        let j = j0 * (1.0 + unit * delta_j);
        let h = HermitianOperator::new(heisenberg_dense(
            2,
            &[(exchange_pair_bond(), j)],
            &[0.0, 0.0],
        ))
        .expect("hermitian by construction");
        let prop = h.eigendecompose();
        for (i, &t_us) in peak_times_us.iter().enumerate() {
            let psi = prop.apply(t_us * NS_PER_US, &psi0);
            let survival = psi[1].norm_sqr();
            envelope[i] += 2.0 * survival - 1.0;
        }
    }
    for e in envelope.iter_mut() {
        *e /= n_realizations as f64;
    }
    let fit = fit_gaussian_decay_xy(&peak_times_us, &envelope)?;
    let GaussianDecayFit { a, b, t2r_us, .. } = fit;
    let target = (a + b) / std::f64::consts::E;
    if target <= b || a <= 0.0 {
        return Err(Error::FitFailure(
            "envelope does not reach 1/e within the window".into(),
        ));
    }
    let t_e = t2r_us * (a / (target - b)).ln().sqrt();
    Ok(j0 * t_e)
}

/// Two-spin singlet-triplet dephasing calibration: precession under the field
/// gradient h1 - h2 with each field uniform in [-delta_h, delta_h], Gaussian
/// fit of the ensemble-averaged coherence.
pub fn calibrate_t2eff(delta_h_khz: f64, n_realizations: usize, master_seed: u64) -> Result<f64> {
    if delta_h_khz <= 0.0 {
        return Err(Error::NoiseSpec(
            "calibrate_t2eff requires delta_h > 0".into(),
        ));
    }
    let dh_mhz = delta_h_khz * 1e-3;
    let t_scale_us = 3.0f64.sqrt() / (4.0 * std::f64::consts::PI * dh_mhz);
    let n_t = 200;
    let times_us: Vec<f64> = (0..n_t)
        .map(|i| 2.5 * t_scale_us * i as f64 / (n_t - 1) as f64)
        .collect();
    // Ramsey on the singlet-triplet qubit: prepare |S>, let the gradient
    // h1 - h2 wind the |ud>/|du> phases, read the singlet return. The fringe
    // 2 P_S - 1 = <cos(4 pi Delta t)> is the dephasing envelope.
    let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
    let s_state = {
        let mut v = DVector::<C64>::zeros(4);
        v[1] = C64::new(inv_sqrt2, 0.0);
        v[2] = C64::new(-inv_sqrt2, 0.0);
        v
    };
    let context = stream_key(&[("calibrate", 2), ("t2eff_hz", (delta_h_khz * 1e3) as u64)]);
    let mut fringe = vec![0.0f64; n_t];
    for k in 0..n_realizations {
        let mut rng = derive_rng(master_seed, context, k as u64);
        let u1: f64 = rng.gen_range(-1.0..=1.0);
        let u2: f64 = rng.gen_range(-1.0..=1.0);
        let fields = [u1 * dh_mhz, u2 * dh_mhz];
        let h = HermitianOperator::new(heisenberg_dense(2, &[], &fields))
            .expect("hermitian by construction");
        let prop = h.eigendecompose();
        for (i, &t_us) in times_us.iter().enumerate() {
            let psi = prop.apply(t_us * NS_PER_US, &s_state);
            let p_singlet = s_state.dotc(&psi).norm_sqr();
            fringe[i] += 2.0 * p_singlet - 1.0;
        }
    }
    let values: Vec<f64> = fringe.iter().map(|f| f / n_realizations as f64).collect();
    let spread = values.iter().fold(f64::MIN, |m, &v| m.max(v))
        - values.iter().fold(f64::MAX, |m, &v| m.min(v));
    if spread < 0.01 * values[0].abs() {
        return Err(Error::NoDecay {
            lower_bound_us: *times_us.last().unwrap(),
        });
    }
    let fit = fit_gaussian_decay_xy(&times_us, &values)?;
    Ok(fit.t2r_us)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DeviceGeometry;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn spec_validation() {
        assert!(NoiseSpec::new(-1.0, 0.0).is_err());
        assert!(NoiseSpec::new(0.0, 1.0).is_err());
        assert!(NoiseSpec::new(50.0, 5e-3).is_ok());
    }

    #[test]
    fn zero_widths_give_zero_realization() {
        let geo = DeviceGeometry::sage_t();
        let r = sample_realization(&NoiseSpec::zero(), &geo, 3, 99);
        assert!(r.h_khz.values().all(|&v| v == 0.0));
        assert!(r.eps.values().all(|&v| v == 0.0));
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let geo = DeviceGeometry::sage_t();
        let spec = NoiseSpec::new(50.0, 5e-3).unwrap();
        let a = sample_realization(&spec, &geo, 7, 123);
        let b = sample_realization(&spec, &geo, 7, 123);
        assert_eq!(a, b);
        let c = sample_realization(&spec, &geo, 8, 123);
        assert_ne!(a, c);
    }

    #[test]
    fn sweeping_widths_rescales_fixed_draws() {
        let geo = DeviceGeometry::sage_t();
        let s1 = NoiseSpec::new(50.0, 5e-3).unwrap();
        let s2 = NoiseSpec::new(100.0, 5e-3).unwrap();
        let a = sample_realization(&s1, &geo, 11, 5);
        let b = sample_realization(&s2, &geo, 11, 5);
        for site in 1..=4u8 {
            assert_relative_eq!(b.h_khz[&site], 2.0 * a.h_khz[&site], epsilon = 1e-14);
        }
        assert_eq!(a.eps, b.eps);
    }

    #[test]
    fn uniform_moments() {
        // 1e5 draws of a single h_i at 50 kHz: mean within 3 sigma of 0,
        // variance within 3 sigma of (50)^2/3.
        let geo = DeviceGeometry::sage_t();
        let spec = NoiseSpec::new(50.0, 0.0).unwrap();
        let n = 100_000usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for k in 0..n {
            let r = sample_realization(&spec, &geo, k as u64, 2024);
            let v = r.h_khz[&1];
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let sigma_mean = 50.0 / 3.0f64.sqrt() / (n as f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma_mean, "mean {mean}");
        let var_expect = 50.0f64.powi(2) / 3.0;
        // var estimator sd ~ var * sqrt(4/5 / n) for uniform
        let sigma_var = var_expect * (4.0 / (5.0 * n as f64)).sqrt() * 2.0;
        assert!((var - var_expect).abs() < 3.0 * sigma_var, "var {var}");
    }

    #[test]
    fn apply_noise_is_multiplicative_and_additive() {
        let geo = DeviceGeometry::eo_linear();
        let b12 = Bond::new(1, 2).unwrap();
        let b23 = Bond::new(2, 3).unwrap();
        // zero base exchange stays exactly zero under charge noise
        let base = CouplingSet::uniform_exchange(&geo, 0.0);
        let spec = NoiseSpec::new(50.0, 0.5).unwrap();
        let r = sample_realization(&spec, &geo, 0, 7);
        let noisy = apply_noise(&base, &r);
        assert_eq!(noisy.j(b12), 0.0);
        assert_eq!(noisy.j(b23), 0.0);

        let mut r2 = NoiseRealization::zero(&geo);
        r2.eps.insert(b12, 5e-3);
        let base2 = CouplingSet::uniform_exchange(&geo, 10.0);
        let noisy2 = apply_noise(&base2, &r2);
        assert_relative_eq!(noisy2.j(b12), 10.0 * 1.005, epsilon = 1e-12);
        assert_relative_eq!(noisy2.j(b23), 10.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn realization_respects_bounds(stream in 0u64..4096, dh in 0.0f64..500.0, dj in 0.0f64..0.99) {
            let geo = DeviceGeometry::sage_t();
            let spec = NoiseSpec::new(dh, dj).unwrap();
            let r = sample_realization(&spec, &geo, stream, 77);
            for v in r.h_khz.values() {
                prop_assert!(v.abs() <= dh + 1e-12);
            }
            for e in r.eps.values() {
                prop_assert!(e.abs() <= dj + 1e-15);
            }
        }

        #[test]
        fn noisy_exchange_stays_within_relative_band(stream in 0u64..2048) {
            // J0 = 10 MHz, delta_j = 5e-3: all noisy J within [9.95, 10.05]
            let geo = DeviceGeometry::sage_t();
            let spec = NoiseSpec::new(0.0, 5e-3).unwrap();
            let base = CouplingSet::uniform_exchange(&geo, 10.0);
            let r = sample_realization(&spec, &geo, stream, 3);
            let noisy = apply_noise(&base, &r);
            for (_, j) in noisy.j_mhz {
                prop_assert!((9.95..=10.05).contains(&j));
            }
        }
    }

    #[test]
    fn calibrations_hit_anchor_scales() {
        // smoke-sized ensembles here; the acceptance suite runs 2500
        let q = calibrate_qeff(5e-3, 400, 11).unwrap();
        assert!((q - 70.0).abs() / 70.0 < 0.15, "Qeff {q}");
        let t2 = calibrate_t2eff(50.0, 400, 11).unwrap();
        assert!((t2 - 2.6).abs() / 2.6 < 0.15, "T2eff {t2}");
    }

    #[test]
    fn calibration_rejects_zero_widths() {
        assert!(calibrate_qeff(0.0, 10, 1).is_err());
        assert!(calibrate_t2eff(0.0, 10, 1).is_err());
    }
}
