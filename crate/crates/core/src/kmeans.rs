//! k-means with k-means++ seeding, used to initialize LDNN discriminants.
//!
//! Rows are sorted lexicographically before seeding so the result is
//! invariant to sample order under a fixed rng seed.

use rand::Rng;

use crate::error::{ChmError, Result};
use crate::features::FeatureMatrix;

const MAX_ITERS: usize = 50;
const DEGENERATE_RETRIES: usize = 3;
const JITTER: f64 = 1e-6;

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lex_sorted_rows(matrix: &FeatureMatrix) -> Vec<usize> {
    let mut order: Vec<usize> = (0..matrix.pixel_count()).collect();
    order.sort_by(|&a, &b| {
        matrix
            .row(a)
            .iter()
            .zip(matrix.row(b))
            .find_map(|(x, y)| x.partial_cmp(y).filter(|o| o.is_ne()))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    order
}

fn seed_plus_plus<R: Rng>(rows: &[&[f64]], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(rows[rng.random_range(0..rows.len())].to_vec());
    let mut dists: Vec<f64> = rows.iter().map(|r| dist_sq(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = dists.iter().sum();
        let next = if total > 0.0 {
            // weighted by squared distance to the nearest centroid
            let mut target = rng.random::<f64>() * total;
            let mut chosen = rows.len() - 1;
            for (i, &d) in dists.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..rows.len())
        };
        let centroid = rows[next].to_vec();
        for (d, row) in dists.iter_mut().zip(rows) {
            *d = d.min(dist_sq(row, &centroid));
        }
        centroids.push(centroid);
    }
    centroids
}

fn lloyd<R: Rng>(rows: &[&[f64]], centroids: &mut [Vec<f64>], rng: &mut R) {
    let k = centroids.len();
    let dim = centroids[0].len();
    let mut assignment = vec![0usize; rows.len()];
    for _ in 0..MAX_ITERS {
        let mut changed = false;
        for (a, row) in assignment.iter_mut().zip(rows) {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (ci, c) in centroids.iter().enumerate() {
                let d = dist_sq(row, c);
                if d < best_d {
                    best_d = d;
                    best = ci;
                }
            }
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, row) in assignment.iter().zip(rows) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(*row) {
                *s += v;
            }
        }
        for ci in 0..k {
            if counts[ci] == 0 {
                // empty cluster: re-seed from a random sample
                centroids[ci] = rows[rng.random_range(0..rows.len())].to_vec();
                changed = true;
            } else {
                let inv = 1.0 / counts[ci] as f64;
                for (c, s) in centroids[ci].iter_mut().zip(&sums[ci]) {
                    *c = s * inv;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

fn has_coincident(centroids: &[Vec<f64>]) -> Option<usize> {
    for i in 1..centroids.len() {
        for j in 0..i {
            if centroids[i] == centroids[j] {
                return Some(i);
            }
        }
    }
    None
}

/// Clusters the rows of `matrix` into `k` centroids.
pub fn kmeans<R: Rng>(matrix: &FeatureMatrix, k: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(ChmError::InvalidConfig("k must be >= 1".into()));
    }
    if matrix.pixel_count() < k {
        return Err(ChmError::InsufficientSamples {
            needed: k,
            available: matrix.pixel_count(),
        });
    }
    let order = lex_sorted_rows(matrix);
    let rows: Vec<&[f64]> = order.iter().map(|&i| matrix.row(i)).collect();
    let mut centroids = seed_plus_plus(&rows, k, rng);
    lloyd(&rows, &mut centroids, rng);
    for _ in 0..DEGENERATE_RETRIES {
        let Some(dup) = has_coincident(&centroids) else {
            return Ok(centroids);
        };
        centroids[dup] = rows[rng.random_range(0..rows.len())].to_vec();
        lloyd(&rows, &mut centroids, rng);
    }
    while let Some(dup) = has_coincident(&centroids) {
        for v in &mut centroids[dup] {
            *v += JITTER * (rng.random::<f64>() - 0.5);
        }
    }
    Ok(centroids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn matrix(rows: &[[f64; 2]]) -> FeatureMatrix {
        let values: Vec<f64> = rows.iter().flatten().copied().collect();
        FeatureMatrix::new(rows.len(), 2, values, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn two_well_separated_clusters() {
        let m = matrix(&[
            [0.0, 1.0],
            [0.0, 0.9],
            [0.1, 1.0],
            [5.0, 5.0],
            [5.1, 5.0],
            [5.0, 4.9],
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut cents = kmeans(&m, 2, &mut rng).unwrap();
        cents.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert!((cents[0][0] - 0.0333).abs() < 1e-3);
        assert!((cents[1][0] - 5.0333).abs() < 1e-3);
    }

    #[test]
    fn order_invariant_under_fixed_seed() {
        let a = matrix(&[[0.0, 1.0], [2.0, 3.0], [4.0, 0.0], [1.0, 1.0], [3.0, 3.0]]);
        let b = matrix(&[[3.0, 3.0], [0.0, 1.0], [1.0, 1.0], [4.0, 0.0], [2.0, 3.0]]);
        let ca = kmeans(&a, 2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let cb = kmeans(&b, 2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(ca, cb);
    }

    #[test]
    fn coincident_points_get_distinct_centroids() {
        let m = matrix(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]);
        let cents = kmeans(&m, 2, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_ne!(cents[0], cents[1]);
    }

    #[test]
    fn insufficient_samples_error() {
        let m = matrix(&[[1.0, 1.0]]);
        assert!(matches!(
            kmeans(&m, 2, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(ChmError::InsufficientSamples { .. })
        ));
    }
}
