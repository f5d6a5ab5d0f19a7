//! Recurrent random neural network used by every decision node.
//!
//! Neuron `k` of a node's network corresponds to the node's k-th neighbor.
//! Excitation probabilities solve the nonlinear fixed point
//!
//! ```text
//! q_i = lambda_plus(i) / (r(i) + lambda_minus(i))
//! lambda_plus(i)  = sum_j q_j w_plus(j,i)  + Lambda_i
//! lambda_minus(i) = sum_j q_j w_minus(j,i) + lambda_i
//! ```
//!
//! and reinforcement learning shifts weight mass towards (or away from) the
//! neuron of the last chosen next hop, then rescales each row so the total
//! fire rate of every neuron is conserved.

use thiserror::Error;

const SOLVE_TOLERANCE: f64 = 1e-9;
const SOLVE_MAX_ITERATIONS: usize = 10_000;
const SOLVE_DAMPING: f64 = 0.5;
// q is a probability; clip just below 1 and report so unstable states are
// visible rather than silently wrong.
const Q_CLIP: f64 = 1.0 - 1e-12;

#[derive(Debug, Error)]
pub enum RnnError {
    #[error("fixed point did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("smoothing constant must satisfy 0 < a < 1 (got {0})")]
    BadSmoothing(f64),
    #[error("winner index {winner} out of range for {neurons} neurons")]
    BadWinner { winner: usize, neurons: usize },
}

/// State of one node's network: `n` neurons, row-major rate matrices
/// (`w_plus[i*n+j]` is the rate at which neuron `i` fires excitatory spikes
/// at neuron `j`), external arrival rates, the per-neuron total fire rate,
/// and the last solved excitation vector.
#[derive(Debug, Clone)]
pub struct RnnState {
    n: usize,
    w_plus: Vec<f64>,
    w_minus: Vec<f64>,
    /// External positive arrival rate per neuron.
    lambda_plus_ext: Vec<f64>,
    /// External negative arrival rate per neuron.
    lambda_minus_ext: Vec<f64>,
    /// Total fire rate per neuron. Kept as an explicit anchor: it equals the
    /// row sums for states built by `uniform`, and reinforcement preserves
    /// row sums by construction, so the anchor stays valid.
    r: Vec<f64>,
    q: Vec<f64>,
    clipped: bool,
}

impl RnnState {
    /// Uniform initialization: off-diagonal weights `0.5/(n-1)` in both
    /// matrices (so every row sums to 1), `Lambda = 0.25`, `lambda = 0`,
    /// fire rate 1 per neuron. A single-neuron network keeps rate 1 with no
    /// recurrent weights (it fires to the outside).
    pub fn uniform(n: usize) -> Self {
        assert!(n >= 1, "a node's network needs at least one neuron");
        let mut w_plus = vec![0.0; n * n];
        let mut w_minus = vec![0.0; n * n];
        if n >= 2 {
            let w = 0.5 / (n as f64 - 1.0);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        w_plus[i * n + j] = w;
                        w_minus[i * n + j] = w;
                    }
                }
            }
        }
        let mut state = RnnState {
            n,
            w_plus,
            w_minus,
            lambda_plus_ext: vec![0.25; n],
            lambda_minus_ext: vec![0.0; n],
            r: vec![1.0; n],
            q: vec![0.0; n],
            clipped: false,
        };
        state.solve().expect("uniform state converges");
        state
    }

    /// Build from explicit rates. `r = None` derives the fire rates from the
    /// row sums; an explicit `r` models neurons that also fire outside the
    /// network.
    pub fn with_rates(
        w_plus: Vec<f64>,
        w_minus: Vec<f64>,
        lambda_plus_ext: Vec<f64>,
        lambda_minus_ext: Vec<f64>,
        r: Option<Vec<f64>>,
    ) -> Self {
        let n = lambda_plus_ext.len();
        assert_eq!(w_plus.len(), n * n);
        assert_eq!(w_minus.len(), n * n);
        assert_eq!(lambda_minus_ext.len(), n);
        let r = r.unwrap_or_else(|| {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|m| w_plus[i * n + m] + w_minus[i * n + m])
                        .sum()
                })
                .collect()
        });
        RnnState {
            n,
            w_plus,
            w_minus,
            lambda_plus_ext,
            lambda_minus_ext,
            r,
            q: vec![0.0; n],
            clipped: false,
        }
    }

    pub fn neuron_count(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn w_plus(&self, i: usize, j: usize) -> f64 {
        self.w_plus[i * self.n + j]
    }

    pub fn w_minus(&self, i: usize, j: usize) -> f64 {
        self.w_minus[i * self.n + j]
    }

    /// True when the last solve had to clip some excitation into [0, 1).
    pub fn was_clipped(&self) -> bool {
        self.clipped
    }

    /// Total fire rate of neuron `i` recomputed from the weight matrices.
    pub fn row_rate(&self, i: usize) -> f64 {
        (0..self.n)
            .map(|m| self.w_plus[i * self.n + m] + self.w_minus[i * self.n + m])
            .sum()
    }

    fn fixed_point_step(&self, q: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut num = self.lambda_plus_ext[i];
            let mut den = self.r[i] + self.lambda_minus_ext[i];
            for j in 0..self.n {
                num += q[j] * self.w_plus[j * self.n + i];
                den += q[j] * self.w_minus[j * self.n + i];
            }
            out[i] = if den > 0.0 {
                num / den
            } else if num > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
        }
    }

    /// Solve the excitation fixed point by damped iteration from `q = 0`.
    pub fn solve(&mut self) -> Result<&[f64], RnnError> {
        let n = self.n;
        let mut q = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut iterations = 0;
        loop {
            self.fixed_point_step(&q, &mut next);
            let mut delta = 0.0f64;
            for i in 0..n {
                let damped = (1.0 - SOLVE_DAMPING) * q[i] + SOLVE_DAMPING * next[i].min(Q_CLIP);
                delta = delta.max((damped - q[i]).abs());
                q[i] = damped;
            }
            iterations += 1;
            if delta < SOLVE_TOLERANCE * 1e-3 {
                break;
            }
            if iterations >= SOLVE_MAX_ITERATIONS {
                let residual = self.residual_of(&q);
                if residual >= SOLVE_TOLERANCE {
                    return Err(RnnError::NonConvergence {
                        residual,
                        iterations,
                    });
                }
                break;
            }
        }
        self.clipped = false;
        for v in q.iter_mut() {
            if *v >= Q_CLIP {
                *v = Q_CLIP;
                self.clipped = true;
            }
            if *v < 0.0 {
                *v = 0.0;
                self.clipped = true;
            }
        }
        self.q = q;
        Ok(&self.q)
    }

    /// Max-norm residual of the fixed point at `q`, skipping clipped
    /// components (they cannot satisfy the equation by definition).
    pub fn residual(&self) -> f64 {
        self.residual_of(&self.q)
    }

    fn residual_of(&self, q: &[f64]) -> f64 {
        let mut image = vec![0.0; self.n];
        self.fixed_point_step(q, &mut image);
        let mut res = 0.0f64;
        for i in 0..self.n {
            if q[i] >= Q_CLIP {
                continue;
            }
            res = res.max((q[i] - image[i]).abs());
        }
        res
    }

    /// Index of the most excited neuron; ties go to the smallest index.
    pub fn most_excited(&self) -> usize {
        let mut best = 0;
        for i in 1..self.n {
            if self.q[i] > self.q[best] {
                best = i;
            }
        }
        best
    }

    /// Reinforcement-learning update for the `winner` neuron given the last
    /// reward and the previous decision threshold.
    ///
    /// Reward branch (`t_prev <= r_l`): excitatory weights into the winner's
    /// column grow by `|r_l - t_prev|`; every other off-diagonal inhibitory
    /// weight grows by that amount over `n - 2`. The punishment branch is the
    /// mirror image. Each row is then rescaled so its total fire rate is
    /// unchanged, and the excitation vector is re-solved.
    ///
    /// Degenerate sizes: with two neurons the side term lands on the single
    /// other neuron (divide by `max(n-2, 1)`); with one neuron there is no
    /// off-diagonal weight to move and the call only re-solves.
    pub fn reinforce(&mut self, winner: usize, r_l: f64, t_prev: f64) -> Result<(), RnnError> {
        let n = self.n;
        if winner >= n {
            return Err(RnnError::BadWinner { winner, neurons: n });
        }
        if n >= 2 {
            let delta = (r_l - t_prev).abs();
            let side = delta / (n as f64 - 2.0).max(1.0);
            let rewarding = t_prev <= r_l;
            let r_before: Vec<f64> = (0..n).map(|i| self.row_rate(i)).collect();
            for i in 0..n {
                for k in 0..n {
                    if k == i {
                        continue;
                    }
                    if k == winner {
                        if rewarding {
                            self.w_plus[i * n + k] += delta;
                        } else {
                            self.w_minus[i * n + k] += delta;
                        }
                    } else if rewarding {
                        self.w_minus[i * n + k] += side;
                    } else {
                        self.w_plus[i * n + k] += side;
                    }
                }
            }
            for i in 0..n {
                let after = self.row_rate(i);
                if after > 0.0 {
                    let scale = r_before[i] / after;
                    for k in 0..n {
                        self.w_plus[i * n + k] *= scale;
                        self.w_minus[i * n + k] *= scale;
                    }
                }
            }
        }
        self.solve()?;
        Ok(())
    }
}

/// Exponentially smoothed decision threshold; the first observed reward only
/// initializes it to zero.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdState {
    t: f64,
    a_smooth: f64,
    initialized: bool,
}

impl ThresholdState {
    pub fn new(a_smooth: f64) -> Result<Self, RnnError> {
        if !(a_smooth > 0.0 && a_smooth < 1.0) {
            return Err(RnnError::BadSmoothing(a_smooth));
        }
        Ok(ThresholdState {
            t: 0.0,
            a_smooth,
            initialized: false,
        })
    }

    pub fn current(&self) -> f64 {
        self.t
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn update(&mut self, r_l: f64) {
        if !self.initialized {
            self.t = 0.0;
            self.initialized = true;
        } else {
            self.t = self.a_smooth * self.t + (1.0 - self.a_smooth) * r_l;
        }
    }
}
