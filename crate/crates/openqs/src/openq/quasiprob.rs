use num_complex::Complex64 as C64;

use super::{SEModel, SpectralDecompF};
use crate::error::{OqsError, Result};
use crate::linalg::{CMatrix, Operator};

/// Default cap on the quasi-probability order k (memory is |Ω(F)|^{2k}).
pub const DEFAULT_ORDER_CAP: usize = 3;

const MAX_TENSOR_ENTRIES: usize = 1 << 24;

/// Joint quasi-probability Q_F^(k) as a complex tensor over k pairs
/// (f_i, f̄_i) of eigenvalue indices at descending times s_1 > ... > s_k.
///
/// Values are stored slot-major: the index is Σ_i (f_i·nf + f̄_i)·nf^{2(k-1-i)}
/// with nf = |Ω(F)|.
#[derive(Clone, Debug)]
pub struct QuasiProbTensor {
    pub times: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    values: Vec<C64>,
}

impl QuasiProbTensor {
    pub(crate) fn from_parts(times: Vec<f64>, eigenvalues: Vec<f64>, values: Vec<C64>) -> Self {
        Self {
            times,
            eigenvalues,
            values,
        }
    }

    pub fn order(&self) -> usize {
        self.times.len()
    }

    pub fn nf(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Entry at the given list of (f_i, f̄_i) index pairs (slot 1 first).
    pub fn get(&self, pairs: &[(usize, usize)]) -> C64 {
        assert_eq!(pairs.len(), self.order());
        let nf = self.nf();
        let mut idx = 0usize;
        for &(f, fb) in pairs {
            idx = idx * nf * nf + f * nf + fb;
        }
        self.values[idx]
    }

    /// Consistency contraction: sums the (f_i, f̄_i) pair of `slot`
    /// (0-based), producing the order-(k-1) tensor.
    pub fn sum_over_slot(&self, slot: usize) -> QuasiProbTensor {
        let k = self.order();
        assert!(slot < k && k >= 1);
        let nf = self.nf();
        let pair_count = nf * nf;
        let outer: usize = pair_count.pow(slot as u32);
        let inner: usize = pair_count.pow((k - 1 - slot) as u32);
        let mut values = vec![C64::new(0.0, 0.0); outer * inner];
        for o in 0..outer {
            for c in 0..pair_count {
                for i in 0..inner {
                    values[o * inner + i] += self.values[(o * pair_count + c) * inner + i];
                }
            }
        }
        let mut times = self.times.clone();
        times.remove(slot);
        QuasiProbTensor {
            times,
            eigenvalues: self.eigenvalues.clone(),
            values,
        }
    }

    /// Σ over all indices; 1 for any proper quasi-probability.
    pub fn total(&self) -> C64 {
        self.values.iter().sum()
    }

    /// Diagonal part P^(k)(f) = Q^(k)(f, f): real, non-negative, normalized.
    /// Returned as an nf^k-entry tensor (slot-major).
    pub fn diagonal(&self) -> Vec<C64> {
        let k = self.order();
        let nf = self.nf();
        let n_diag = nf.pow(k as u32);
        let mut out = Vec::with_capacity(n_diag);
        for d_idx in 0..n_diag {
            // expand to the paired index with f̄_i = f_i
            let mut rem = d_idx;
            let mut digits = vec![0usize; k];
            for i in (0..k).rev() {
                digits[i] = rem % nf;
                rem /= nf;
            }
            let mut idx = 0usize;
            for &f in &digits {
                idx = idx * nf * nf + f * nf + f;
            }
            out.push(self.values[idx]);
        }
        out
    }

    /// Interference part Φ^(k) = Q^(k) - δ_{f,f̄}P^(k): the full tensor with
    /// the diagonal zeroed.
    pub fn interference(&self) -> Vec<C64> {
        let k = self.order();
        let nf = self.nf();
        let mut out = self.values.clone();
        for (idx, v) in out.iter_mut().enumerate() {
            let mut rem = idx;
            let mut diagonal = true;
            for _ in 0..k {
                let pair = rem % (nf * nf);
                rem /= nf * nf;
                if pair % nf != pair / nf {
                    diagonal = false;
                    break;
                }
            }
            if diagonal {
                *v = C64::new(0.0, 0.0);
            }
        }
        out
    }

    /// max |Φ^(k)| over the tensor.
    pub fn max_interference(&self) -> f64 {
        self.interference()
            .iter()
            .fold(0.0f64, |acc, z| acc.max(z.norm()))
    }

    /// Contraction Σ Q·w_1(f_1,f̄_1)···w_k(f_k,f̄_k) with per-slot weights
    /// chosen from the forward (f) or backward (f̄) eigenvalue.
    pub fn contract(&self, forward: &[bool]) -> C64 {
        assert_eq!(forward.len(), self.order());
        let nf = self.nf();
        let k = self.order();
        let mut acc = C64::new(0.0, 0.0);
        for (idx, v) in self.values.iter().enumerate() {
            let mut rem = idx;
            let mut weight = 1.0;
            for i in (0..k).rev() {
                let pair = rem % (nf * nf);
                rem /= nf * nf;
                let (f, fb) = (pair / nf, pair % nf);
                weight *= if forward[i] {
                    self.eigenvalues[f]
                } else {
                    self.eigenvalues[fb]
                };
            }
            acc += v * weight;
        }
        acc
    }
}

/// Q_F^(k) at descending `times` with the default order cap.
pub fn quasi_probability(m: &SEModel, times: &[f64]) -> Result<QuasiProbTensor> {
    quasi_probability_capped(m, times, DEFAULT_ORDER_CAP)
}

/// Q_F^(k)(f_1,f̄_1,s_1;…;f_k,f̄_k,s_k)
///   = tr_E[P_I(f_1,s_1)⋯P_I(f_k,s_k) ρ_E P_I(f̄_k,s_k)⋯P_I(f̄_1,s_1)],
/// assembled depth-first from the innermost (earliest) slot outwards.
pub fn quasi_probability_capped(
    m: &SEModel,
    times: &[f64],
    order_cap: usize,
) -> Result<QuasiProbTensor> {
    let k = times.len();
    if k == 0 || k > order_cap {
        return Err(OqsError::CapExceeded {
            what: "quasi-probability order k",
            got: k,
            cap: order_cap,
        });
    }
    for (i, w) in times.windows(2).enumerate() {
        if w[1] >= w[0] {
            return Err(OqsError::UnorderedTimes {
                index: i + 1,
                value: w[1],
            });
        }
    }
    if times[k - 1] < 0.0 {
        return Err(OqsError::UnorderedTimes {
            index: k - 1,
            value: times[k - 1],
        });
    }
    let decomp = SpectralDecompF::new(&m.f)?;
    let nf = decomp.len();
    let entries = (nf * nf).pow(k as u32);
    if entries > MAX_TENSOR_ENTRIES {
        return Err(OqsError::CapExceeded {
            what: "tensor entries |Ω(F)|^2k",
            got: entries,
            cap: MAX_TENSOR_ENTRIES,
        });
    }

    // interaction-picture projectors per (slot, eigenvalue)
    let (h_vals, h_kets) = m.he.herm_eigen();
    let projectors: Vec<Vec<CMatrix>> = times
        .iter()
        .map(|&s| {
            (0..nf)
                .map(|idx| {
                    decomp
                        .projector_interaction(idx, &h_vals, &h_kets, s)
                        .into_mat()
                })
                .collect()
        })
        .collect();

    let mut values = vec![C64::new(0.0, 0.0); entries];
    // depth-first over slots k-1 (earliest) .. 0 (latest); `x` carries the
    // partially sandwiched environment operator
    fn recurse(
        slot: isize,
        x: &CMatrix,
        idx: usize,
        projectors: &[Vec<CMatrix>],
        nf: usize,
        values: &mut [C64],
    ) {
        if slot < 0 {
            values[idx] = x.trace();
            return;
        }
        let s = slot as usize;
        let stride = (nf * nf).pow((projectors.len() - 1 - s) as u32);
        for f in 0..nf {
            for fb in 0..nf {
                let sandwiched = &projectors[s][f] * x * &projectors[s][fb];
                let sub_idx = idx + (f * nf + fb) * stride;
                recurse(slot - 1, &sandwiched, sub_idx, projectors, nf, values);
            }
        }
    }
    recurse(
        k as isize - 1,
        m.rho_e.mat(),
        0,
        &projectors,
        nf,
        &mut values,
    );

    Ok(QuasiProbTensor {
        times: times.to_vec(),
        eigenvalues: decomp.eigenvalues,
        values,
    })
}

/// The four second quasi-moments at t > s:
/// (⟨F(t)F(s)⟩, ⟨F̄(t)F̄(s)⟩, ⟨F(t)F̄(s)⟩, ⟨F̄(t)F(s)⟩), computed directly
/// from operator products.
pub fn quasi_moments_second(m: &SEModel, t: f64, s: f64) -> Result<[C64; 4]> {
    if s >= t {
        return Err(OqsError::UnorderedTimes { index: 1, value: s });
    }
    let ft = m.f_interaction(t);
    let fs = m.f_interaction(s);
    let rho = &m.rho_e;
    let ff = (&(&ft * &fs) * rho).trace();
    let fbfb = (&(&fs * &ft) * rho).trace();
    let ffb = (&(&ft * rho) * &fs).trace();
    let fbf = (&(&fs * rho) * &ft).trace();
    Ok([ff, fbfb, ffb, fbf])
}

/// Correlation function C_F(τ) = ½tr({X(τ), X(0)}ρ_E) and susceptibility
/// K_F(τ) = (i/2)tr([X(τ), X(0)]ρ_E) with X(u) = F_I(u) - ⟨F(u)⟩ on a τ grid.
pub fn correlation_and_susceptibility(m: &SEModel, taus: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let x_at = |u: f64| -> Operator {
        let f_i = m.f_interaction(u);
        let mean = (&f_i * &m.rho_e).trace().re;
        let d = f_i.dim();
        Operator::new(f_i.mat() - CMatrix::identity(d, d) * C64::new(mean, 0.0)).expect("square")
    };
    let x0 = x_at(0.0);
    let mut c = Vec::with_capacity(taus.len());
    let mut kappa = Vec::with_capacity(taus.len());
    for &tau in taus {
        let xt = x_at(tau);
        let z = (&(&xt * &x0) * &m.rho_e).trace();
        let zr = (&(&x0 * &xt) * &m.rho_e).trace();
        c.push(0.5 * (z + zr).re);
        kappa.push(0.5 * (C64::new(0.0, 1.0) * (z - zr)).re);
    }
    Ok((c, kappa))
}
