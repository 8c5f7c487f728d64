//! Lloyd k-means with k-means++ seeding, deterministic given a seed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::rng;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    /// `k x dim` centroid matrix.
    pub centroids: DataMatrix,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
}

#[inline]
fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let d = *x as f64 - *y as f64;
        acc += d * d;
    }
    acc
}

/// k-means++ seeding: returns `k` row indices. The first index is drawn
/// uniformly, subsequent ones proportionally to squared distance from the
/// chosen set. Degenerate weights fall back to the lowest unchosen index.
pub fn kmeanspp_seed(data: &DataMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    debug_assert!(k >= 1 && k <= data.rows);
    let mut chosen = Vec::with_capacity(k);
    let mut is_chosen = vec![false; data.rows];
    let first = rng.gen_range(0..data.rows);
    chosen.push(first);
    is_chosen[first] = true;

    let mut dist: Vec<f64> = (0..data.rows)
        .into_par_iter()
        .map(|i| sq_dist(data.row(i), data.row(first)))
        .collect();

    while chosen.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 && total.is_finite() {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, d) in dist.iter().enumerate() {
                acc += d;
                if acc >= target && !is_chosen[i] {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| (0..data.rows).find(|i| !is_chosen[*i]).unwrap())
        } else {
            (0..data.rows).find(|i| !is_chosen[*i]).unwrap()
        };
        chosen.push(next);
        is_chosen[next] = true;
        let next_row = data.row(next);
        dist.par_iter_mut().enumerate().for_each(|(i, d)| {
            let nd = sq_dist(data.row(i), next_row);
            if nd < *d {
                *d = nd;
            }
        });
    }
    chosen
}

/// Full Lloyd iteration to convergence (assignments stable) or `max_iters`.
pub fn lloyd(data: &DataMatrix, k: usize, max_iters: usize, seed: u64) -> Result<KMeansResult> {
    if data.rows < k || k == 0 {
        return Err(Error::invalid(format!("k-means needs rows >= k >= 1, got {} rows, k={k}", data.rows)));
    }
    let mut rng = rng::root_rng(seed);
    let seeds = kmeanspp_seed(data, k, &mut rng);
    let mut centroids = data.select_rows(&seeds);
    let mut assignments = vec![usize::MAX; data.rows];
    let mut iterations = 0;

    for _ in 0..max_iters {
        iterations += 1;
        // Assign (ties to the lowest centroid index).
        let new_assign: Vec<usize> = (0..data.rows)
            .into_par_iter()
            .map(|i| {
                let row = data.row(i);
                let mut best = 0usize;
                let mut best_d = f64::INFINITY;
                for c in 0..k {
                    let d = sq_dist(row, centroids.row(c));
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                best
            })
            .collect();
        let changed = new_assign != assignments;
        assignments = new_assign;

        // Update.
        let mut sums = vec![0.0f64; k * data.dim];
        let mut counts = vec![0usize; k];
        for (i, &a) in assignments.iter().enumerate() {
            counts[a] += 1;
            let row = data.row(i);
            let acc = &mut sums[a * data.dim..(a + 1) * data.dim];
            for (s, x) in acc.iter_mut().zip(row) {
                *s += *x as f64;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Reseed an empty cluster at the point farthest from its
                // assigned centroid (ties to the lowest index).
                let mut far_i = 0usize;
                let mut far_d = -1.0f64;
                for i in 0..data.rows {
                    let d = sq_dist(data.row(i), centroids.row(assignments[i]));
                    if d > far_d {
                        far_d = d;
                        far_i = i;
                    }
                }
                let row = data.row(far_i).to_vec();
                centroids.row_mut(c).copy_from_slice(&row);
                assignments[far_i] = c;
            } else {
                let nf = counts[c] as f64;
                let acc = &sums[c * data.dim..(c + 1) * data.dim];
                for (dst, s) in centroids.row_mut(c).iter_mut().zip(acc) {
                    *dst = (*s / nf) as f32;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let inertia = inertia_of(data, &centroids, &assignments);
    Ok(KMeansResult { centroids, assignments, inertia, iterations })
}

/// Sum of squared distances of each sample to its assigned centroid.
pub fn inertia_of(data: &DataMatrix, centroids: &DataMatrix, assignments: &[usize]) -> f64 {
    let chunk = 1024;
    let partials: Vec<f64> = (0..data.rows)
        .collect::<Vec<_>>()
        .par_chunks(chunk)
        .map(|idxs| {
            idxs.iter().map(|&i| sq_dist(data.row(i), centroids.row(assignments[i]))).sum::<f64>()
        })
        .collect();
    partials.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> DataMatrix {
        // Three tight clusters at (0,0), (5,5), (-5,5).
        let mut rows = Vec::new();
        let centers = [(0.0f32, 0.0f32), (5.0, 5.0), (-5.0, 5.0)];
        let mut s = 3u64;
        for i in 0..300 {
            let (cx, cy) = centers[i % 3];
            s = crate::rng::splitmix64(s);
            let jx = (s % 100) as f32 / 1000.0;
            s = crate::rng::splitmix64(s);
            let jy = (s % 100) as f32 / 1000.0;
            rows.push(vec![cx + jx, cy + jy]);
        }
        DataMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn recovers_distinct_repeated_rows() {
        let mut rows = Vec::new();
        for _ in 0..20 {
            rows.push(vec![1.0f32, -1.0]);
            rows.push(vec![-1.0, 1.0]);
        }
        let data = DataMatrix::from_rows(&rows).unwrap();
        let res = lloyd(&data, 2, 50, 7).unwrap();
        assert!(res.inertia < 1e-12);
        let mut cents: Vec<Vec<f32>> = (0..2).map(|c| res.centroids.row(c).to_vec()).collect();
        cents.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert_eq!(cents[0], vec![-1.0, 1.0]);
        assert_eq!(cents[1], vec![1.0, -1.0]);
    }

    #[test]
    fn separates_blobs() {
        let data = blobs();
        let res = lloyd(&data, 3, 50, 1).unwrap();
        assert!(res.inertia / data.rows as f64 on_average_below(), "{}", res.inertia);

        fn on_average_below() -> f64 {
            0.01
        }
        // Same seed reproduces exactly.
        let res2 = lloyd(&data, 3, 50, 1).unwrap();
        assert_eq!(res.assignments, res2.assignments);
        assert_eq!(res.centroids, res2.centroids);
    }

    #[test]
    fn rejects_k_above_rows() {
        let data = DataMatrix::from_rows(&[vec![0.0f32], vec![1.0]]).unwrap();
        assert!(lloyd(&data, 3, 10, 0).is_err());
    }
}
