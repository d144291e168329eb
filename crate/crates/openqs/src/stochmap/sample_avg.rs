//! Monte-Carlo approximation of the stochastic map,
//! U‾(t,0) ≈ (1/N₀) Σ_j U[f_j](t,0) • U[f_j]†(t,0).

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::StochasticHamiltonian;
use crate::error::{OqsError, Result};
use crate::linalg::{CMatrix, OperatorBasis, SuperOperator};
use crate::propagators::{Generator, IntegratorCfg};

/// Number of fixed reduction chunks; keeping this constant makes the
/// floating-point summation tree independent of the worker count, so results
/// are bit-identical for a given (seed, n_samples).
const CHUNKS: usize = 256;

/// Sample-average map at every integrator step from 0 to `t_max`.
///
/// Per sample: the driving process is drawn on the integrator's sampling
/// grid (half steps for RK4), the trajectory-wise evolution operator is
/// propagated, and its conjugation map U • U† is accumulated at each step.
/// Seeded deterministically; sample j uses RNG stream j.
pub fn sample_average_series(
    h: &StochasticHamiltonian,
    t_max: f64,
    n_samples: usize,
    cfg: &IntegratorCfg,
    seed: u64,
) -> Result<Vec<(f64, SuperOperator)>> {
    if n_samples == 0 {
        return Err(OqsError::BadParameter {
            name: "n_samples",
            reason: "need at least one sample".into(),
        });
    }
    let d = h.dim();
    let n_steps = steps_for(t_max, cfg.step);
    let out_times: Vec<f64> = (0..=n_steps)
        .map(|i| (i as f64 * cfg.step).min(t_max))
        .collect();

    let spacing = cfg.sample_spacing();
    let n_nodes = (t_max / spacing).ceil() as usize + 1;
    let sample_grid: Vec<f64> = (0..=n_nodes).map(|i| i as f64 * spacing).collect();

    let chunk_bounds: Vec<(u64, u64)> = (0..CHUNKS)
        .map(|c| {
            let lo = (c * n_samples / CHUNKS) as u64;
            let hi = ((c + 1) * n_samples / CHUNKS) as u64;
            (lo, hi)
        })
        .collect();

    let partials: Vec<Result<Vec<CMatrix>>> = chunk_bounds
        .par_iter()
        .map(|&(lo, hi)| {
            let mut acc = vec![CMatrix::zeros(d * d, d * d); out_times.len()];
            for j in lo..hi {
                accumulate_sample(h, &sample_grid, &out_times, cfg, seed, j, &mut acc)?;
            }
            Ok(acc)
        })
        .collect();

    let mut total = vec![CMatrix::zeros(d * d, d * d); out_times.len()];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part?) {
            *t += p;
        }
    }

    let weight = C64::new(1.0 / n_samples as f64, 0.0);
    let basis = OperatorBasis::ket_bra(d);
    out_times
        .into_iter()
        .zip(total)
        .map(|(t, m)| Ok((t, SuperOperator::from_matrix(basis.clone(), m * weight)?)))
        .collect()
}

/// Sample-average map at a single time `t`.
pub fn sample_average_map(
    h: &StochasticHamiltonian,
    t: f64,
    n_samples: usize,
    cfg: &IntegratorCfg,
    seed: u64,
) -> Result<SuperOperator> {
    let series = sample_average_series(h, t, n_samples, cfg, seed)?;
    Ok(series.into_iter().last().expect("non-empty series").1)
}

fn steps_for(t_max: f64, h: f64) -> usize {
    if t_max <= 0.0 {
        return 0;
    }
    let n_full = (t_max / h).floor() as usize;
    let remainder = t_max - n_full as f64 * h;
    if remainder > t_max * 1e-12 {
        n_full + 1
    } else {
        n_full
    }
}

fn accumulate_sample(
    h: &StochasticHamiltonian,
    sample_grid: &[f64],
    out_times: &[f64],
    cfg: &IntegratorCfg,
    seed: u64,
    stream: u64,
    acc: &mut [CMatrix],
) -> Result<()> {
    let traj = sample_process(h, sample_grid, seed, stream)?;
    let d = h.dim();
    let minus_i = C64::new(0.0, -1.0);
    let base = h.h0.mat() * minus_i;
    let coupling = h.v.mat() * (minus_i * h.lambda);
    let generator =
        Generator::new(d, move |t| &base + &coupling * C64::new(traj.value_at(t), 0.0));

    let mut index = 0usize;
    let t_max = *out_times.last().expect("non-empty");
    crate::propagators::propagate_observed(&generator, 0.0, t_max, cfg, |_, u| {
        // accumulate the conjugation map U • U† of this trajectory
        add_conjugation(&mut acc[index], u);
        index += 1;
    })?;
    debug_assert_eq!(index, out_times.len());
    Ok(())
}

fn sample_process(
    h: &StochasticHamiltonian,
    grid: &[f64],
    seed: u64,
    stream: u64,
) -> Result<crate::stochastic::Trajectory> {
    use crate::stochastic::ProcessSpec;
    // one ChaCha stream per sample; the gauss-sum sampler consumes
    // `n_components` streams per sample, so space its seeds out
    match &h.process {
        ProcessSpec::Rtn(s) => crate::stochastic::sample_rtn(s, grid, splitmix(seed, stream)),
        ProcessSpec::Asym(s) => crate::stochastic::sample_asym(s, grid, splitmix(seed, stream)),
        ProcessSpec::GaussSum(s) => {
            crate::stochastic::sample_gauss_sum(s, grid, splitmix(seed, stream))
        }
    }
}

/// SplitMix64 step: decorrelates per-sample seeds derived from one base seed.
fn splitmix(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(index.wrapping_mul(0x9e3779b97f4a7c15))
        .wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// acc += (U • U†) in the diagonal-first ket-bra basis, written directly
/// from matrix entries: the map's matrix element between basis slots
/// (a,b) ← (c,d) is U[a,c]·conj(U[b,d]).
fn add_conjugation(acc: &mut CMatrix, u: &CMatrix) {
    let d = u.nrows();
    let pair_of = |k: usize| -> (usize, usize) {
        if k < d {
            (k, k)
        } else {
            let q = k - d;
            let n = q / (d - 1);
            let r = q % (d - 1);
            let m = if r < n { r } else { r + 1 };
            (n, m)
        }
    };
    let n2 = d * d;
    for col in 0..n2 {
        let (c, dd) = pair_of(col);
        for row in 0..n2 {
            let (a, b) = pair_of(row);
            acc[(row, col)] += u[(a, c)] * u[(b, dd)].conj();
        }
    }
}
