//! Precomputed risk sets and design rows shared by every EM iteration.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{expand_design, log_sum_exp, Dataset, ModelConfig, StepFunction};

/// Counting-process bookkeeping for a dataset: distinct event times, tie
/// counts and nested risk sets.
#[derive(Debug, Clone)]
pub struct RiskSetIndex {
    event_times: Vec<f64>,
    event_counts: Vec<usize>,
    events_at: Vec<Vec<usize>>,
    /// Subjects sorted by follow-up time.
    order: Vec<usize>,
    /// `risk_start[j]` is the first position in `order` with time `>= t_j`;
    /// the final entry is `n`.
    risk_start: Vec<usize>,
    /// Number of event times `<= T_i`, so `Λ(T_i)` is the cumulative hazard
    /// at jump `cum_index[i] - 1`.
    cum_index: Vec<usize>,
    event_jump: Vec<Option<usize>>,
}

impl RiskSetIndex {
    pub fn new(data: &Dataset) -> Self {
        let obs = data.observations();
        let n = obs.len();
        let event_times = data.event_times();
        let m = event_times.len();

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| obs[a].time.total_cmp(&obs[b].time).then(a.cmp(&b)));

        let mut event_counts = vec![0; m];
        let mut events_at = vec![Vec::new(); m];
        let mut cum_index = vec![0; n];
        let mut event_jump = vec![None; n];
        for (i, o) in obs.iter().enumerate() {
            let k = event_times.partition_point(|&t| t <= o.time);
            cum_index[i] = k;
            if o.status {
                let j = k - 1;
                event_jump[i] = Some(j);
                event_counts[j] += 1;
                events_at[j].push(i);
            }
        }

        let mut risk_start: Vec<usize> = event_times
            .iter()
            .map(|&t| order.partition_point(|&i| obs[i].time < t))
            .collect();
        risk_start.push(n);

        RiskSetIndex {
            event_times,
            event_counts,
            events_at,
            order,
            risk_start,
            cum_index,
            event_jump,
        }
    }

    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    pub fn num_event_times(&self) -> usize {
        self.event_times.len()
    }

    pub fn event_counts(&self) -> &[usize] {
        &self.event_counts
    }

    /// Subjects with an event at `t_j`.
    pub fn events_at(&self, j: usize) -> &[usize] {
        &self.events_at[j]
    }

    /// Subjects with follow-up time `>= t_j`.
    pub fn risk_set(&self, j: usize) -> &[usize] {
        &self.order[self.risk_start[j]..]
    }

    /// Subjects entering the risk set at `t_j` when sweeping backwards in time,
    /// that is those with `t_j <= T_i < t_{j+1}`.
    pub(crate) fn entering(&self, j: usize) -> &[usize] {
        &self.order[self.risk_start[j]..self.risk_start[j + 1]]
    }

    /// Index of the jump at the subject's event time, if it is an event.
    pub fn event_jump(&self, subject: usize) -> Option<usize> {
        self.event_jump[subject]
    }

    /// `Λ(T_i)` for subject `i` given the cumulative hazard at each jump.
    pub(crate) fn cumhaz_at(&self, subject: usize, cumulative: &[f64]) -> f64 {
        match self.cum_index[subject] {
            0 => 0.0,
            k => cumulative[k - 1],
        }
    }
}

/// Design rows laid out flat for the inner loops.
#[derive(Debug, Clone)]
pub(crate) struct Design {
    pub index: RiskSetIndex,
    pub n: usize,
    pub num_classes: usize,
    /// Membership row width `p + 1`.
    pub pw: usize,
    /// Hazard design width `qL + L - 1`.
    pub dim: usize,
    /// `n x pw`, intercept first.
    pub xm: Vec<f64>,
    /// `n x L x dim`.
    pub z: Vec<f64>,
}

/// Posterior weights and each subject's log-likelihood contribution.
pub(crate) struct EStep {
    pub weights: DMatrix<f64>,
    pub terms: Vec<f64>,
}

impl EStep {
    pub fn loglik(&self) -> f64 {
        self.terms.iter().sum()
    }
}

impl Design {
    pub fn new(data: &Dataset, config: &ModelConfig) -> Result<Self> {
        config.validate(data.num_covariates())?;
        let n = data.len();
        let num_classes = config.num_classes;
        let pw = config.membership_width();
        let dim = config.gamma_len();
        let mut xm = Vec::with_capacity(n * pw);
        let mut z = Vec::with_capacity(n * num_classes * dim);
        for obs in data.observations() {
            xm.push(1.0);
            xm.extend(config.membership_row(obs));
            let xbar = config.survival_row(obs);
            for l in 0..num_classes {
                z.extend(expand_design(&xbar, l, num_classes)?);
            }
        }
        Ok(Design {
            index: RiskSetIndex::new(data),
            n,
            num_classes,
            pw,
            dim,
            xm,
            z,
        })
    }

    #[inline]
    pub fn xm_row(&self, i: usize) -> &[f64] {
        &self.xm[i * self.pw..(i + 1) * self.pw]
    }

    #[inline]
    pub fn z_row(&self, i: usize, l: usize) -> &[f64] {
        let start = (i * self.num_classes + l) * self.dim;
        &self.z[start..start + self.dim]
    }

    /// `n x L` matrix of hazard linear predictors.
    pub fn hazard_predictors(&self, gamma: &DVector<f64>) -> Vec<f64> {
        if self.dim == 0 {
            return vec![0.0; self.n * self.num_classes];
        }
        let g = gamma.as_slice();
        self.z.chunks_exact(self.dim).map(|z| dot(z, g)).collect()
    }

    /// `n x L` matrix of log membership probabilities.
    pub fn log_membership(&self, alpha: &DMatrix<f64>) -> Vec<f64> {
        let l_count = self.num_classes;
        let mut out = vec![0.0; self.n * l_count];
        let mut eta = vec![0.0; l_count];
        for i in 0..self.n {
            let x = self.xm_row(i);
            for k in 1..l_count {
                eta[k] = (0..self.pw).map(|c| alpha[(k - 1, c)] * x[c]).sum();
            }
            let lse = log_sum_exp(&eta);
            for k in 0..l_count {
                out[i * l_count + k] = eta[k] - lse;
            }
        }
        out
    }

    pub fn check_baseline(&self, baseline: &StepFunction) -> Result<()> {
        if baseline.jump_times() != self.index.event_times() {
            return Err(Error::Dimension(format!(
                "baseline has {} jumps but the data have {} distinct event times at different locations",
                baseline.len(),
                self.index.num_event_times()
            )));
        }
        Ok(())
    }

    /// Posterior membership probabilities and per-subject log-likelihood
    /// terms at `(alpha, gamma, baseline)`.
    pub fn e_step(
        &self,
        alpha: &DMatrix<f64>,
        gamma: &DVector<f64>,
        baseline: &StepFunction,
    ) -> Result<EStep> {
        let l_count = self.num_classes;
        let logp = self.log_membership(alpha);
        let eta = self.hazard_predictors(gamma);
        let cumulative = baseline.cumulative();
        let log_jumps: Vec<f64> = baseline.jump_sizes().iter().map(|d| d.ln()).collect();
        let mut weights = DMatrix::zeros(self.n, l_count);
        let mut terms = Vec::with_capacity(self.n);
        let mut buf = vec![0.0; l_count];
        for i in 0..self.n {
            let cum = self.index.cumhaz_at(i, cumulative);
            let jump = self.index.event_jump(i).map(|j| log_jumps[j]);
            for l in 0..l_count {
                let e = eta[i * l_count + l];
                let mut v = logp[i * l_count + l] - cum * e.exp();
                if let Some(lj) = jump {
                    v += lj + e;
                }
                buf[l] = v;
            }
            let lse = log_sum_exp(&buf);
            if !lse.is_finite() {
                return Err(Error::DegenerateLikelihood { subject: i });
            }
            for l in 0..l_count {
                weights[(i, l)] = (buf[l] - lse).exp();
            }
            terms.push(lse);
        }
        Ok(EStep { weights, terms })
    }

    /// Weighted Breslow estimator: jump `D_j / Σ_{i at risk} Σ_l w_il e^{η_il}`
    /// at each distinct event time.
    pub fn breslow(&self, weights: &DMatrix<f64>, gamma: &DVector<f64>) -> Result<StepFunction> {
        let l_count = self.num_classes;
        let eta = self.hazard_predictors(gamma);
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let risk: Vec<f64> = (0..self.n)
            .map(|i| {
                (0..l_count)
                    .map(|l| weights[(i, l)] * (eta[i * l_count + l] - shift).exp())
                    .sum()
            })
            .collect();
        let m = self.index.num_event_times();
        let mut sizes = vec![0.0; m];
        let mut s0 = 0.0;
        for j in (0..m).rev() {
            s0 += self.index.entering(j).iter().map(|&i| risk[i]).sum::<f64>();
            let d = self.index.event_counts()[j] as f64 / s0 * (-shift).exp();
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::ZeroRiskSet {
                    time: self.index.event_times()[j],
                });
            }
            sizes[j] = d;
        }
        Ok(StepFunction::from_parts(self.index.event_times().to_vec(), sizes))
    }

    /// Weighted membership log-likelihood `Σ_i Σ_l w_il log p_il`.
    pub fn membership_objective(&self, weights: &DMatrix<f64>, alpha: &DMatrix<f64>) -> f64 {
        let logp = self.log_membership(alpha);
        let l_count = self.num_classes;
        let mut v = 0.0;
        for i in 0..self.n {
            for l in 0..l_count {
                let w = weights[(i, l)];
                if w > 0.0 {
                    v += w * logp[i * l_count + l];
                }
            }
        }
        v
    }

    pub fn membership_derivatives(
        &self,
        weights: &DMatrix<f64>,
        alpha: &DMatrix<f64>,
    ) -> (f64, DVector<f64>, DMatrix<f64>) {
        let l_count = self.num_classes;
        let pw = self.pw;
        let k = (l_count - 1) * pw;
        let logp = self.log_membership(alpha);
        let mut value = 0.0;
        let mut grad = DVector::zeros(k);
        let mut info = DMatrix::zeros(k, k);
        let mut p = vec![0.0; l_count];
        for i in 0..self.n {
            let x = self.xm_row(i);
            for l in 0..l_count {
                p[l] = logp[i * l_count + l].exp();
                let w = weights[(i, l)];
                if w > 0.0 {
                    value += w * logp[i * l_count + l];
                }
            }
            for a in 1..l_count {
                let resid = weights[(i, a)] - p[a];
                for c in 0..pw {
                    grad[(a - 1) * pw + c] += resid * x[c];
                }
                for b in a..l_count {
                    let cov = if a == b { p[a] * (1.0 - p[a]) } else { -p[a] * p[b] };
                    for c in 0..pw {
                        let row = (a - 1) * pw + c;
                        let start = if a == b { c } else { 0 };
                        for e in start..pw {
                            info[(row, (b - 1) * pw + e)] += cov * x[c] * x[e];
                        }
                    }
                }
            }
        }
        info.fill_lower_triangle_with_upper_triangle();
        (value, grad, info)
    }

    /// Profiled hazard objective `Σ_j [Σ_{i∈D_j} Σ_l w_il η_il - D_j log S0_j]`.
    pub fn hazard_objective(&self, weights: &DMatrix<f64>, gamma: &DVector<f64>) -> f64 {
        let l_count = self.num_classes;
        let eta = self.hazard_predictors(gamma);
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut value = 0.0;
        let mut s0 = 0.0;
        for j in (0..self.index.num_event_times()).rev() {
            for &i in self.index.entering(j) {
                for l in 0..l_count {
                    s0 += weights[(i, l)] * (eta[i * l_count + l] - shift).exp();
                }
            }
            for &i in self.index.events_at(j) {
                for l in 0..l_count {
                    value += weights[(i, l)] * eta[i * l_count + l];
                }
            }
            value -= self.index.event_counts()[j] as f64 * (s0.ln() + shift);
        }
        value
    }

    pub fn hazard_derivatives(
        &self,
        weights: &DMatrix<f64>,
        gamma: &DVector<f64>,
    ) -> (f64, DVector<f64>, DMatrix<f64>) {
        let l_count = self.num_classes;
        let dim = self.dim;
        let eta = self.hazard_predictors(gamma);
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut value = 0.0;
        let mut grad = DVector::zeros(dim);
        let mut info = DMatrix::zeros(dim, dim);
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; dim];
        // upper triangle of S2, row-major
        let mut s2 = vec![0.0; dim * dim];
        for j in (0..self.index.num_event_times()).rev() {
            for &i in self.index.entering(j) {
                for l in 0..l_count {
                    let w = weights[(i, l)];
                    if w == 0.0 {
                        continue;
                    }
                    let v = w * (eta[i * l_count + l] - shift).exp();
                    let z = self.z_row(i, l);
                    s0 += v;
                    for a in 0..dim {
                        let va = v * z[a];
                        if va == 0.0 {
                            continue;
                        }
                        s1[a] += va;
                        let row = &mut s2[a * dim..(a + 1) * dim];
                        for b in a..dim {
                            row[b] += va * z[b];
                        }
                    }
                }
            }
            for &i in self.index.events_at(j) {
                for l in 0..l_count {
                    let w = weights[(i, l)];
                    if w == 0.0 {
                        continue;
                    }
                    value += w * eta[i * l_count + l];
                    let z = self.z_row(i, l);
                    for a in 0..dim {
                        grad[a] += w * z[a];
                    }
                }
            }
            let dj = self.index.event_counts()[j] as f64;
            value -= dj * (s0.ln() + shift);
            for a in 0..dim {
                let ma = s1[a] / s0;
                grad[a] -= dj * ma;
                for b in a..dim {
                    info[(a, b)] += dj * (s2[a * dim + b] / s0 - ma * s1[b] / s0);
                }
            }
        }
        info.fill_lower_triangle_with_upper_triangle();
        (value, grad, info)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
