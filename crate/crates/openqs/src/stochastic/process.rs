use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{OqsError, Result};

/// Random telegraph noise: dichotomic ±1 process switching at rate `w`,
/// initial value +1 with probability (1+p)/2.
///
/// First distribution P^(1)(r,t) = (1 + p r e^{-2wt})/2; joint distributions
/// factor into nearest-neighbour conditionals.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RtnSpec {
    pub w: f64,
    pub p: f64,
}

impl RtnSpec {
    pub fn new(w: f64, p: f64) -> Result<Self> {
        if w < 0.0 || !w.is_finite() || w.is_nan() {
            return Err(OqsError::BadParameter {
                name: "w",
                reason: format!("switching rate must be ≥ 0, got {w}"),
            });
        }
        if !(-1.0..=1.0).contains(&p) {
            return Err(OqsError::BadParameter {
                name: "p",
                reason: format!("initial bias must lie in [-1, 1], got {p}"),
            });
        }
        Ok(Self { w, p })
    }

    /// Zero-average RTN (p = 0).
    pub fn unbiased(w: f64) -> Result<Self> {
        Self::new(w, 0.0)
    }

    /// P^(1)(r, t) = (1 + p r e^{-2wt})/2.
    pub fn first_distribution(&self, r: f64, t: f64) -> f64 {
        (1.0 + self.p * r * (-2.0 * self.w * t).exp()) / 2.0
    }

    /// Conditional u_{r,r'}(dt) = (1 + r r' e^{-2w dt})/2.
    pub fn conditional(&self, r: f64, r_prev: f64, dt: f64) -> f64 {
        (1.0 + r * r_prev * (-2.0 * self.w * dt).exp()) / 2.0
    }

    /// Mean R̄(t) = p e^{-2wt}.
    pub fn mean(&self, t: f64) -> f64 {
        self.p * (-2.0 * self.w * t).exp()
    }

    /// Autocorrelation C(t1,t2) = e^{-2w|t1-t2|} - p² e^{-2w(t1+t2)}.
    pub fn autocorrelation(&self, t1: f64, t2: f64) -> f64 {
        (-2.0 * self.w * (t1 - t2).abs()).exp()
            - self.p * self.p * (-2.0 * self.w * (t1 + t2)).exp()
    }
}

/// Joint probability of the RTN passing through the given (r_i, t_i) points,
/// times strictly decreasing:
/// P^(k) = P^(1)(r_k,t_k) ∏_j (1 + r_j r_{j+1} e^{-2w(t_j - t_{j+1})})/2.
pub fn rtn_joint(spec: &RtnSpec, points: &[(f64, f64)]) -> Result<f64> {
    check_points(points)?;
    let (r_last, t_last) = points[points.len() - 1];
    let mut prob = spec.first_distribution(r_last, t_last);
    for pair in points.windows(2) {
        let (r_j, t_j) = pair[0];
        let (r_next, t_next) = pair[1];
        prob *= spec.conditional(r_j, r_next, t_j - t_next);
    }
    Ok(prob)
}

/// k-th moment R̄(t1)···R̄(tk) for strictly decreasing times: pairs of
/// consecutive times contribute e^{-2w(t_odd - t_even)}; an unpaired earliest
/// time contributes p e^{-2w t_last}.
pub fn rtn_moment(spec: &RtnSpec, times: &[f64]) -> Result<f64> {
    for (i, w) in times.windows(2).enumerate() {
        if w[1] >= w[0] {
            return Err(OqsError::UnorderedTimes {
                index: i + 1,
                value: w[1],
            });
        }
    }
    if times.is_empty() {
        return Ok(1.0);
    }
    let mut m = 1.0;
    let mut iter = times.chunks_exact(2);
    for pair in iter.by_ref() {
        m *= (-2.0 * spec.w * (pair[0] - pair[1])).exp();
    }
    if let [t_last] = iter.remainder() {
        m *= spec.p * (-2.0 * spec.w * t_last).exp();
    }
    Ok(m)
}

fn check_points(points: &[(f64, f64)]) -> Result<()> {
    if points.is_empty() {
        return Err(OqsError::BadParameter {
            name: "points",
            reason: "need at least one (r, t) pair".into(),
        });
    }
    for (i, &(r, t)) in points.iter().enumerate() {
        if r != 1.0 && r != -1.0 {
            return Err(OqsError::BadProcessValue(r));
        }
        if t < 0.0 {
            return Err(OqsError::UnorderedTimes { index: i, value: t });
        }
        if i > 0 && t >= points[i - 1].1 {
            return Err(OqsError::UnorderedTimes { index: i, value: t });
        }
    }
    Ok(())
}

/// Dichotomic ±1 process with unequal switching rates: `w_plus` is the rate
/// of switching into +1, `w_minus` into -1.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AsymTelegraphSpec {
    pub w_plus: f64,
    pub w_minus: f64,
    pub p: f64,
}

impl AsymTelegraphSpec {
    pub fn new(w_plus: f64, w_minus: f64, p: f64) -> Result<Self> {
        if w_plus < 0.0 || w_minus < 0.0 || w_plus.is_nan() || w_minus.is_nan() {
            return Err(OqsError::BadParameter {
                name: "w_plus/w_minus",
                reason: "rates must be ≥ 0".into(),
            });
        }
        if !(-1.0..=1.0).contains(&p) {
            return Err(OqsError::BadParameter {
                name: "p",
                reason: format!("initial bias must lie in [-1, 1], got {p}"),
            });
        }
        Ok(Self {
            w_plus,
            w_minus,
            p,
        })
    }

    pub fn w_bar(&self) -> f64 {
        (self.w_plus + self.w_minus) / 2.0
    }

    /// Conditional matrix U(t): rows/cols ordered (+1, -1); `u[r][r']` is the
    /// probability of r at time t given r' at time 0.
    pub fn conditional_matrix(&self, t: f64) -> [[f64; 2]; 2] {
        let wb = self.w_bar();
        if wb == 0.0 {
            return [[1.0, 0.0], [0.0, 1.0]];
        }
        let decay = (-2.0 * wb * t).exp();
        let (wp, wm) = (self.w_plus, self.w_minus);
        [
            [
                (wp + wm * decay) / (2.0 * wb),
                wp * (1.0 - decay) / (2.0 * wb),
            ],
            [
                wm * (1.0 - decay) / (2.0 * wb),
                (wm + wp * decay) / (2.0 * wb),
            ],
        ]
    }

    /// Mean T̄(t) = σ + (p - σ)e^{-2w̄t} with σ = (w₊-w₋)/(w₊+w₋).
    pub fn mean(&self, t: f64) -> f64 {
        let wb = self.w_bar();
        if wb == 0.0 {
            return self.p;
        }
        let sigma = (self.w_plus - self.w_minus) / (2.0 * wb);
        sigma + (self.p - sigma) * (-2.0 * wb * t).exp()
    }

    /// Stationary probability of +1: w₊/(w₊+w₋).
    pub fn stationary_plus(&self) -> f64 {
        let wb = self.w_bar();
        if wb == 0.0 {
            (1.0 + self.p) / 2.0
        } else {
            self.w_plus / (2.0 * wb)
        }
    }
}

/// G(t) = Σ_{i=1}^N R_i(t)/√N for independent zero-average RTNs; approaches
/// a Gaussian process with the base RTN's autocorrelation as N grows.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GaussSumSpec {
    pub base: RtnSpec,
    pub n_components: usize,
}

impl GaussSumSpec {
    pub fn new(w: f64, n_components: usize) -> Result<Self> {
        if n_components == 0 {
            return Err(OqsError::BadParameter {
                name: "n_components",
                reason: "need at least one component".into(),
            });
        }
        Ok(Self {
            base: RtnSpec::unbiased(w)?,
            n_components,
        })
    }
}

/// Parametric description of a supported driving process.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ProcessSpec {
    Rtn(RtnSpec),
    Asym(AsymTelegraphSpec),
    GaussSum(GaussSumSpec),
}

impl ProcessSpec {
    pub fn mean(&self, t: f64) -> f64 {
        match self {
            ProcessSpec::Rtn(s) => s.mean(t),
            ProcessSpec::Asym(s) => s.mean(t),
            ProcessSpec::GaussSum(_) => 0.0,
        }
    }

    pub fn is_zero_mean(&self) -> bool {
        match self {
            ProcessSpec::Rtn(s) => s.p == 0.0,
            ProcessSpec::Asym(s) => s.p == 0.0 && s.w_plus == s.w_minus,
            ProcessSpec::GaussSum(_) => true,
        }
    }

    pub fn sample(&self, grid: &[f64], seed: u64) -> Result<Trajectory> {
        match self {
            ProcessSpec::Rtn(s) => sample_rtn(s, grid, seed),
            ProcessSpec::Asym(s) => sample_asym(s, grid, seed),
            ProcessSpec::GaussSum(s) => sample_gauss_sum(s, grid, seed),
        }
    }
}

/// Sampled trajectory on a strictly increasing grid; between grid points the
/// value is held constant (zero-order hold on [t_i, t_{i+1})).
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: Vec<f64>,
    values: Vec<f64>,
    seed: u64,
}

impl Trajectory {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Value at time `t` under zero-order hold.
    pub fn value_at(&self, t: f64) -> f64 {
        match self
            .grid
            .binary_search_by(|g| g.partial_cmp(&t).expect("finite times"))
        {
            Ok(i) => self.values[i],
            Err(0) => self.values[0],
            Err(i) => self.values[i - 1],
        }
    }

    /// a·F(t) + b.
    pub fn affine(&self, a: f64, b: f64) -> Trajectory {
        Trajectory {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| a * v + b).collect(),
            seed: self.seed,
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(OqsError::BadParameter {
            name: "grid",
            reason: "empty sampling grid".into(),
        });
    }
    if grid[0] < 0.0 {
        return Err(OqsError::BadParameter {
            name: "grid",
            reason: "grid must start at t ≥ 0".into(),
        });
    }
    for (i, w) in grid.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(OqsError::UnorderedTimes {
                index: i + 1,
                value: w[1],
            });
        }
    }
    Ok(())
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    // counter-based parallel seeding: one base seed, one ChaCha stream per
    // trajectory index
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sample_dichotomic(
    grid: &[f64],
    seed: u64,
    stream: u64,
    p_plus_initial: f64,
    cond: impl Fn(f64, f64) -> f64,
) -> Trajectory {
    let mut rng = rng_for(seed, stream);
    let mut values = Vec::with_capacity(grid.len());
    // the chain's initial distribution lives at t = 0; advance to grid[0]
    // with the conditional when the grid starts later
    let at_zero = if rng.gen::<f64>() < p_plus_initial {
        1.0
    } else {
        -1.0
    };
    let first = if grid[0] > 0.0 {
        let p_plus = cond(at_zero, grid[0]);
        if rng.gen::<f64>() < p_plus {
            1.0
        } else {
            -1.0
        }
    } else {
        at_zero
    };
    values.push(first);
    for w in grid.windows(2) {
        let dt = w[1] - w[0];
        let prev = *values.last().expect("non-empty");
        // probability that the next value is +1 given `prev`
        let p_plus = cond(prev, dt);
        values.push(if rng.gen::<f64>() < p_plus { 1.0 } else { -1.0 });
    }
    Trajectory {
        grid: grid.to_vec(),
        values,
        seed,
    }
}

/// Markov-chain sample of RTN on `grid`; deterministic given (spec, grid, seed).
pub fn sample_rtn(spec: &RtnSpec, grid: &[f64], seed: u64) -> Result<Trajectory> {
    check_grid(grid)?;
    Ok(sample_dichotomic(
        grid,
        seed,
        0,
        (1.0 + spec.p) / 2.0,
        |prev, dt| spec.conditional(1.0, prev, dt),
    ))
}

/// Markov-chain sample of the asymmetric telegraph process.
pub fn sample_asym(spec: &AsymTelegraphSpec, grid: &[f64], seed: u64) -> Result<Trajectory> {
    check_grid(grid)?;
    Ok(sample_dichotomic(
        grid,
        seed,
        0,
        (1.0 + spec.p) / 2.0,
        |prev, dt| {
            let u = spec.conditional_matrix(dt);
            if prev > 0.0 {
                u[0][0]
            } else {
                u[0][1]
            }
        },
    ))
}

/// Sum of `n_components` independent zero-average RTN samples scaled by 1/√N.
pub fn sample_gauss_sum(spec: &GaussSumSpec, grid: &[f64], seed: u64) -> Result<Trajectory> {
    check_grid(grid)?;
    let n = spec.n_components;
    let scale = 1.0 / (n as f64).sqrt();
    let mut values = vec![0.0; grid.len()];
    for i in 0..n {
        let tr = sample_dichotomic(grid, seed, i as u64, 0.5, |prev, dt| {
            spec.base.conditional(1.0, prev, dt)
        });
        for (acc, v) in values.iter_mut().zip(tr.values.iter()) {
            *acc += scale * v;
        }
    }
    Ok(Trajectory {
        grid: grid.to_vec(),
        values,
        seed,
    })
}
