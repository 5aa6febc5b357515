//! Damped least-squares fitting of the two decay models used throughout:
//! Gaussian A exp[-(t/T2R)^2] + B and exponential A p^N + B.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};

/// Result of a Gaussian decay fit.
#[derive(Clone, Copy, Debug)]
pub struct GaussianDecayFit {
    pub a: f64,
    pub b: f64,
    pub t2r_us: f64,
    pub covariance: [[f64; 3]; 3],
    pub residual_norm: f64,
}

/// Result of an exponential benchmarking fit, with the per-Clifford fidelity
/// from the single-qubit depolarizing relation F = 1 - (1 - p)/2.
#[derive(Clone, Copy, Debug)]
pub struct RbDecayFit {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub clifford_fidelity: f64,
    pub covariance: [[f64; 3]; 3],
    pub residual_norm: f64,
}

struct LmOutcome {
    params: [f64; 3],
    cost: f64,
    covariance: [[f64; 3]; 3],
}

/// Damped least squares on a 3-parameter model. `eval` returns (model value,
/// gradient) at one abscissa. Converges when the relative step drops below
/// 1e-10; the best multistart by cost wins.
fn levenberg_marquardt(
    xs: &[f64],
    ys: &[f64],
    eval: &dyn Fn(&[f64; 3], f64) -> (f64, [f64; 3]),
    clamp: &dyn Fn(&mut [f64; 3]),
    starts: &[[f64; 3]],
) -> Option<LmOutcome> {
    let n = xs.len();
    let mut best: Option<LmOutcome> = None;
    for start in starts {
        let mut params = *start;
        clamp(&mut params);
        let cost_of = |p: &[f64; 3]| -> f64 {
            xs.iter()
                .zip(ys)
                .map(|(&x, &y)| {
                    let (m, _) = eval(p, x);
                    (y - m).powi(2)
                })
                .sum()
        };
        let mut lambda = 1e-3;
        let mut cost = cost_of(&params);
        for _ in 0..400 {
            let mut jtj = SMatrix::<f64, 3, 3>::zeros();
            let mut jtr = SVector::<f64, 3>::zeros();
            for (&x, &y) in xs.iter().zip(ys) {
                let (m, g) = eval(&params, x);
                let r = y - m;
                for i in 0..3 {
                    jtr[i] += g[i] * r;
                    for j in 0..3 {
                        jtj[(i, j)] += g[i] * g[j];
                    }
                }
            }
            let mut damped = jtj;
            for i in 0..3 {
                damped[(i, i)] += lambda * (jtj[(i, i)].abs() + 1e-12);
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                break;
            };
            let mut trial = params;
            for i in 0..3 {
                trial[i] += step[i];
            }
            clamp(&mut trial);
            let trial_cost = cost_of(&trial);
            if trial_cost < cost {
                let scale = trial
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs()))
                    .max(1e-30);
                let rel = step.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
                params = trial;
                cost = trial_cost;
                lambda = (lambda * 0.3).max(1e-14);
                if rel < 1e-10 {
                    break;
                }
            } else {
                lambda *= 10.0;
                if lambda > 1e14 {
                    break;
                }
            }
        }
        let replace = match &best {
            None => true,
            Some(b) => cost < b.cost,
        };
        if replace {
            // covariance estimate sigma^2 (JtJ)^-1 at the optimum
            let mut jtj = SMatrix::<f64, 3, 3>::zeros();
            for &x in xs {
                let (_, g) = eval(&params, x);
                for i in 0..3 {
                    for j in 0..3 {
                        jtj[(i, j)] += g[i] * g[j];
                    }
                }
            }
            let dof = (n.saturating_sub(3)).max(1) as f64;
            let sigma2 = cost / dof;
            let cov = jtj
                .try_inverse()
                .map(|inv| {
                    let mut c = [[0.0; 3]; 3];
                    for i in 0..3 {
                        for j in 0..3 {
                            c[i][j] = inv[(i, j)] * sigma2;
                        }
                    }
                    c
                })
                .unwrap_or([[0.0; 3]; 3]);
            best = Some(LmOutcome {
                params,
                cost,
                covariance: cov,
            });
        }
    }
    best
}

fn check_decay(xs: &[f64], ys: &[f64], min_samples: usize) -> Result<()> {
    if xs.len() < min_samples || xs.len() != ys.len() {
        return Err(Error::FitFailure(format!(
            "need at least {min_samples} samples, got {}",
            xs.len()
        )));
    }
    let max = ys.iter().cloned().fold(f64::MIN, f64::max);
    let min = ys.iter().cloned().fold(f64::MAX, f64::min);
    if max - min < 0.01 * max.abs().max(1e-30) {
        return Err(Error::NoDecay {
            lower_bound_us: xs.iter().cloned().fold(0.0, f64::max),
        });
    }
    Ok(())
}

/// Fits A exp[-(t/T2R)^2] + B on (times in us, values). Multi-start over T2R
/// decades around the window.
pub fn fit_gaussian_decay_xy(times_us: &[f64], values: &[f64]) -> Result<GaussianDecayFit> {
    check_decay(times_us, values, 20)?;
    let t_max = times_us.iter().cloned().fold(0.0, f64::max);
    let y0 = values[0];
    let y_end = *values.last().unwrap();
    let starts: Vec<[f64; 3]> = (0..8)
        .map(|k| {
            let t = t_max * 10f64.powf(-1.5 + 3.0 * k as f64 / 7.0);
            [y0 - y_end, y_end, t]
        })
        .collect();
    let eval = |p: &[f64; 3], t: f64| -> (f64, [f64; 3]) {
        let (a, _b, tau) = (p[0], p[1], p[2]);
        let e = (-(t / tau).powi(2)).exp();
        (a * e + p[1], [e, 1.0, a * e * 2.0 * t * t / tau.powi(3)])
    };
    let clamp = |p: &mut [f64; 3]| {
        if p[2] <= 0.0 {
            p[2] = p[2].abs().max(t_max * 1e-6);
        }
    };
    let out = levenberg_marquardt(times_us, values, &eval, &clamp, &starts)
        .ok_or_else(|| Error::FitFailure("gaussian fit did not converge".into()))?;
    let [a, b, t2r_us] = out.params;
    if !(t2r_us > 0.0) || !t2r_us.is_finite() {
        return Err(Error::FitFailure(format!("unphysical T2R {t2r_us}")));
    }
    Ok(GaussianDecayFit {
        a,
        b,
        t2r_us,
        covariance: out.covariance,
        residual_norm: out.cost.sqrt(),
    })
}

/// Fits A p^N + B on (sequence length, mean fidelity) points.
pub fn fit_rb_decay(points: &[(f64, f64)]) -> Result<RbDecayFit> {
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    if xs.len() < 5 {
        return Err(Error::FitFailure(format!(
            "need at least 5 sequence lengths, got {}",
            xs.len()
        )));
    }
    if let Err(Error::NoDecay { .. }) = check_decay(&xs, &ys, 5) {
        // flat curve: perfect gates
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        return Ok(RbDecayFit {
            a: 0.0,
            b: mean,
            p: 1.0,
            clifford_fidelity: 1.0,
            covariance: [[0.0; 3]; 3],
            residual_norm: 0.0,
        });
    }
    let y0 = ys[0];
    let y_end = *ys.last().unwrap();
    let starts: Vec<[f64; 3]> = [0.9999, 0.999, 0.995, 0.99, 0.97, 0.9, 0.7, 0.5]
        .iter()
        .map(|&p| [y0 - y_end, y_end, p])
        .collect();
    let eval = |p: &[f64; 3], n: f64| -> (f64, [f64; 3]) {
        let (a, _b, q) = (p[0], p[1], p[2]);
        let e = q.powf(n);
        (a * e + p[1], [e, 1.0, a * n * q.powf(n - 1.0)])
    };
    let clamp = |p: &mut [f64; 3]| {
        p[2] = p[2].clamp(1e-9, 1.0);
    };
    let out = levenberg_marquardt(&xs, &ys, &eval, &clamp, &starts)
        .ok_or_else(|| Error::FitFailure("rb fit did not converge".into()))?;
    let [a, b, p] = out.params;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::FitFailure(format!("unphysical p {p}")));
    }
    Ok(RbDecayFit {
        a,
        b,
        p,
        clifford_fidelity: 1.0 - (1.0 - p) / 2.0,
        covariance: out.covariance,
        residual_norm: out.cost.sqrt(),
    })
}
