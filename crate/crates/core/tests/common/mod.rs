//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's estimation code.
#![allow(dead_code)]

use lcsurv::model::{Dataset, ModelConfig, Observation, Parameters, StepFunction};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Random right-censored data with `p` standard normal covariates and an
/// exponential event time. With `ties`, times are rounded to one decimal.
pub fn random_fixture(seed: u64, n: usize, p: usize, ties: bool) -> Dataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let obs = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..p)
                .map(|_| {
                    // Box-Muller
                    let u1: f64 = 1.0 - rng.random::<f64>();
                    let u2: f64 = rng.random();
                    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                })
                .collect();
            let eta: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let t = -(1.0 - rng.random::<f64>()).ln() / (0.5 * eta.exp());
            let c = rng.random_range(0.2..6.0);
            let mut time = t.min(c);
            if ties {
                time = ((time * 10.0).round() / 10.0).max(0.1);
            }
            Observation::new(time, t <= c, x).unwrap()
        })
        .collect();
    Dataset::with_default_names(obs).unwrap()
}

fn risk(x: &[f64], beta: &[f64]) -> f64 {
    x.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>().exp()
}

/// Breslow partial log-likelihood by direct double sum.
pub fn naive_partial_loglik(data: &Dataset, beta: &[f64]) -> f64 {
    let obs = data.observations();
    let mut ll = 0.0;
    for o in obs.iter().filter(|o| o.status) {
        let denom: f64 = obs
            .iter()
            .filter(|j| j.time >= o.time)
            .map(|j| risk(&j.covariates, beta))
            .sum();
        let eta: f64 = o.covariates.iter().zip(beta).map(|(a, b)| a * b).sum();
        ll += eta - denom.ln();
    }
    ll
}

/// Score of the Breslow partial likelihood by direct double sum.
pub fn naive_score(data: &Dataset, beta: &[f64]) -> Vec<f64> {
    let obs = data.observations();
    let p = beta.len();
    let mut score = vec![0.0; p];
    for o in obs.iter().filter(|o| o.status) {
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        for j in obs.iter().filter(|j| j.time >= o.time) {
            let r = risk(&j.covariates, beta);
            s0 += r;
            for k in 0..p {
                s1[k] += r * j.covariates[k];
            }
        }
        for k in 0..p {
            score[k] += o.covariates[k] - s1[k] / s0;
        }
    }
    score
}

/// Negative Hessian of the partial likelihood by central differences of the score.
pub fn numeric_information(data: &Dataset, beta: &[f64]) -> Vec<Vec<f64>> {
    let p = beta.len();
    let h = 1e-5;
    let mut info = vec![vec![0.0; p]; p];
    for k in 0..p {
        let mut up = beta.to_vec();
        up[k] += h;
        let mut down = beta.to_vec();
        down[k] -= h;
        let su = naive_score(data, &up);
        let sd = naive_score(data, &down);
        for r in 0..p {
            info[r][k] = -(su[r] - sd[r]) / (2.0 * h);
        }
    }
    for r in 0..p {
        for k in 0..r {
            let m = 0.5 * (info[r][k] + info[k][r]);
            info[r][k] = m;
            info[k][r] = m;
        }
    }
    info
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            solve(a.to_vec(), e)
        })
        .collect();
    (0..n).map(|r| (0..n).map(|c| cols[c][r]).collect()).collect()
}

/// Maximizes the Breslow partial likelihood with damped Newton steps built
/// from the naive score and a finite-difference Hessian.
pub fn cox_oracle(data: &Dataset) -> Vec<f64> {
    let p = data.num_covariates();
    let mut beta = vec![0.0; p];
    let mut ll = naive_partial_loglik(data, &beta);
    for _ in 0..200 {
        let score = naive_score(data, &beta);
        if score.iter().all(|s| s.abs() < 1e-11) {
            break;
        }
        let step = solve(numeric_information(data, &beta), score);
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let cll = naive_partial_loglik(data, &cand);
            if cll >= ll - 1e-12 || t < 1e-8 {
                beta = cand;
                ll = cll;
                break;
            }
            t *= 0.5;
        }
    }
    beta
}

/// Breslow cumulative hazard at each distinct event time, by direct sums.
pub fn naive_breslow(data: &Dataset, beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let obs = data.observations();
    let mut times: Vec<f64> = obs.iter().filter(|o| o.status).map(|o| o.time).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut cum = Vec::with_capacity(times.len());
    let mut total = 0.0;
    for &t in &times {
        let d = obs.iter().filter(|o| o.status && o.time == t).count() as f64;
        let denom: f64 = obs
            .iter()
            .filter(|o| o.time >= t)
            .map(|o| risk(&o.covariates, beta))
            .sum();
        total += d / denom;
        cum.push(total);
    }
    (times, cum)
}

/// Single-class observed-data log-likelihood with the Breslow baseline plugged in.
pub fn cox_full_loglik(data: &Dataset, beta: &[f64]) -> f64 {
    let (times, cum) = naive_breslow(data, beta);
    let mut ll = 0.0;
    for o in data.observations() {
        let k = times.partition_point(|&t| t <= o.time);
        let lam = if k == 0 { 0.0 } else { cum[k - 1] };
        let r = risk(&o.covariates, beta);
        ll -= lam * r;
        if o.status {
            let jump = cum[k - 1] - if k >= 2 { cum[k - 2] } else { 0.0 };
            ll += (jump * r).ln();
        }
    }
    ll
}

/// Parameters for `num_classes` classes on `p` covariates used in both submodels,
/// with a baseline jumping at every event time of `data`.
pub fn params_strategy(num_classes: usize, p: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    let config = ModelConfig::new(num_classes, p);
    (
        prop::collection::vec(-1.5..1.5f64, config.alpha_len()),
        prop::collection::vec(-1.0..1.0f64, config.gamma_len()),
        0.01..0.3f64,
    )
}

pub fn build_params(data: &Dataset, config: &ModelConfig, alpha: &[f64], gamma: &[f64], jump: f64) -> Parameters {
    let times = data.event_times();
    let sizes = vec![jump; times.len()];
    let mut params = Parameters::zeros(config, StepFunction::new(times, sizes).unwrap());
    params.alpha = DMatrix::from_row_slice(config.num_classes - 1, config.membership_width(), alpha);
    params.gamma = DVector::from_row_slice(gamma);
    params
}

/// Relabels classes so new class `k` is old class `perm[k]`, re-expressing
/// every coefficient against the new reference class.
pub fn permute(params: &Parameters, perm: &[usize], q: usize) -> Parameters {
    let l = perm.len();
    let pw = params.alpha.ncols();
    let alpha_full = |k: usize| -> Vec<f64> {
        if k == 0 {
            vec![0.0; pw]
        } else {
            params.alpha.row(k - 1).iter().copied().collect()
        }
    };
    let g = &params.gamma;
    // class-specific intercept and slopes
    let hazard = |k: usize| -> (f64, Vec<f64>) {
        let mut slope: Vec<f64> = g.iter().take(q).copied().collect();
        let mut a = 0.0;
        if k > 0 {
            let off = q + (k - 1) * (q + 1);
            a = g[off];
            for c in 0..q {
                slope[c] += g[off + 1 + c];
            }
        }
        (a, slope)
    };
    let (a0, s0) = hazard(perm[0]);
    let ref_alpha = alpha_full(perm[0]);
    let mut alpha = DMatrix::zeros(l - 1, pw);
    let mut gamma = vec![0.0; g.len()];
    gamma[..q].copy_from_slice(&s0);
    for k in 1..l {
        let row = alpha_full(perm[k]);
        for c in 0..pw {
            alpha[(k - 1, c)] = row[c] - ref_alpha[c];
        }
        let (a, s) = hazard(perm[k]);
        let off = q + (k - 1) * (q + 1);
        gamma[off] = a - a0;
        for c in 0..q {
            gamma[off + 1 + c] = s[c] - s0[c];
        }
    }
    let sizes: Vec<f64> = params.baseline.jump_sizes().iter().map(|d| d * a0.exp()).collect();
    Parameters {
        alpha,
        gamma: DVector::from_vec(gamma),
        baseline: StepFunction::new(params.baseline.jump_times().to_vec(), sizes).unwrap(),
    }
}
