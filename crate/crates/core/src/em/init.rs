use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::model::{Dataset, Initialization, ModelConfig, PosteriorWeights};
use crate::rng::stream_rng;

/// Weight on a subject's own cluster when converting hard labels to weights.
pub const OWN_CLASS_WEIGHT: f64 = 0.9;

const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITER: usize = 200;

/// Starting posterior weights for the EM algorithm.
pub fn initialize_weights(data: &Dataset, config: &ModelConfig) -> Result<PosteriorWeights> {
    initialize_with(data, config, &config.initialization, 0)
}

pub(crate) fn initialize_with(
    data: &Dataset,
    config: &ModelConfig,
    init: &Initialization,
    stream: u64,
) -> Result<PosteriorWeights> {
    let n = data.len();
    let l = config.num_classes;
    if let Initialization::Supplied(w) = init {
        if w.num_subjects() != n || w.num_classes() != l {
            return Err(Error::Dimension(format!(
                "supplied weights are {}x{}, expected {n}x{l}",
                w.num_subjects(),
                w.num_classes()
            )));
        }
        return Ok(w.clone());
    }
    if l == 1 {
        return Ok(PosteriorWeights::from_matrix_unchecked(DMatrix::from_element(n, 1, 1.0)));
    }
    let mut rng = stream_rng(config.seed, stream);
    match init {
        Initialization::Random => Ok(random_weights(n, l, &mut rng)),
        Initialization::Kmeans => {
            let times: Vec<f64> = data.observations().iter().map(|o| o.time).collect();
            let clusters = kmeans_1d(&times, l, KMEANS_RESTARTS, &mut rng);
            PosteriorWeights::perturbed(&clusters.labels, l, OWN_CLASS_WEIGHT)
        }
        Initialization::Supplied(_) => unreachable!(),
    }
}

/// Rows drawn uniformly from the probability simplex.
pub fn random_weights(n: usize, num_classes: usize, rng: &mut ChaCha8Rng) -> PosteriorWeights {
    let mut m = DMatrix::zeros(n, num_classes);
    for i in 0..n {
        let mut total = 0.0;
        for l in 0..num_classes {
            let e: f64 = Exp1.sample(rng);
            m[(i, l)] = e;
            total += e;
        }
        for l in 0..num_classes {
            m[(i, l)] /= total;
        }
    }
    PosteriorWeights::from_matrix_unchecked(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kmeans1d {
    /// Cluster of each value; clusters are numbered by increasing centre.
    pub labels: Vec<usize>,
    pub centers: Vec<f64>,
    pub inertia: f64,
}

/// Lloyd's algorithm in one dimension with k-means++ seeding, keeping the
/// best of `restarts` runs.
pub fn kmeans_1d(values: &[f64], k: usize, restarts: usize, rng: &mut ChaCha8Rng) -> Kmeans1d {
    assert!(k >= 1 && !values.is_empty());
    let mut best: Option<Kmeans1d> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(values, plus_plus_seeds(values, k, rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let mut best = best.unwrap();
    let mut rank: Vec<usize> = (0..k).collect();
    rank.sort_by(|&a, &b| best.centers[a].total_cmp(&best.centers[b]));
    let mut relabel = vec![0; k];
    for (new, &old) in rank.iter().enumerate() {
        relabel[old] = new;
    }
    best.labels.iter_mut().for_each(|l| *l = relabel[*l]);
    best.centers = rank.iter().map(|&c| best.centers[c]).collect();
    best
}

fn plus_plus_seeds(values: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centers = vec![values[rng.random_range(0..values.len())]];
    let mut d2: Vec<f64> = values.iter().map(|v| (v - centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = values.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..values.len())
        };
        let c = values[pick];
        centers.push(c);
        for (d, v) in d2.iter_mut().zip(values) {
            *d = d.min((v - c).powi(2));
        }
    }
    centers
}

fn nearest(centers: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (c, center) in centers.iter().enumerate().skip(1) {
        if (v - center).abs() < (v - centers[best]).abs() {
            best = c;
        }
    }
    best
}

fn lloyd(values: &[f64], mut centers: Vec<f64>) -> Kmeans1d {
    let k = centers.len();
    let mut labels: Vec<usize> = values.iter().map(|&v| nearest(&centers, v)).collect();
    for _ in 0..KMEANS_MAX_ITER {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&v, &l) in values.iter().zip(&labels) {
            sums[l] += v;
            counts[l] += 1;
        }
        for c in 0..k {
            // empty clusters keep their centre
            if counts[c] > 0 {
                centers[c] = sums[c] / counts[c] as f64;
            }
        }
        let next: Vec<usize> = values.iter().map(|&v| nearest(&centers, v)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let inertia = values
        .iter()
        .zip(&labels)
        .map(|(v, &l)| (v - centers[l]).powi(2))
        .sum();
    Kmeans1d {
        labels,
        centers,
        inertia,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Observation;
    use rand::SeedableRng;

    fn times_data(times: &[f64]) -> Dataset {
        Dataset::with_default_names(
            times
                .iter()
                .map(|&t| Observation::new(t, true, vec![]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_class_is_all_ones() {
        let data = times_data(&[1.0, 2.0, 3.0]);
        for init in [Initialization::Random, Initialization::Kmeans] {
            let config = ModelConfig::new(1, 0).with_initialization(init);
            let w = initialize_weights(&data, &config).unwrap();
            assert!(w.matrix().iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn kmeans_splits_separated_times() {
        let data = times_data(&[1.0, 1.0, 1.0, 9.0, 9.0, 9.0]);
        let config = ModelConfig::new(2, 0).with_initialization(Initialization::Kmeans);
        let w = initialize_weights(&data, &config).unwrap();
        for i in 0..3 {
            assert_eq!(w.get(i, 0), 0.9);
            assert!((w.get(i, 1) - 0.1).abs() < 1e-15);
            assert_eq!(w.get(i + 3, 1), 0.9);
        }
    }

    #[test]
    fn kmeans_three_groups_ordered_by_centre() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values = [10.0, 0.1, 5.0, 0.2, 10.2, 5.1, 0.0];
        let km = kmeans_1d(&values, 3, 10, &mut rng);
        assert_eq!(km.labels, vec![2, 0, 1, 0, 2, 1, 0]);
        assert!(km.centers.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn seeded_initialization_is_deterministic() {
        let data = times_data(&[0.5, 1.0, 1.5, 2.0, 7.0]);
        let config = ModelConfig::new(3, 0)
            .with_initialization(Initialization::Random)
            .with_seed(11);
        let a = initialize_weights(&data, &config).unwrap();
        let b = initialize_weights(&data, &config).unwrap();
        assert_eq!(a, b);
        for row in a.matrix().row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
        let other = initialize_weights(&data, &config.clone().with_seed(12)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn supplied_weights_checked() {
        let data = times_data(&[1.0, 2.0]);
        let w = PosteriorWeights::one_hot(&[0, 1, 1], 2).unwrap();
        let config = ModelConfig::new(2, 0).with_initialization(Initialization::Supplied(w));
        assert!(initialize_weights(&data, &config).is_err());
    }
}
