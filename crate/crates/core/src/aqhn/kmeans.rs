use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{squared_distance, DenseMatrix};

pub const DEFAULT_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    /// k × d center matrix.
    pub centers: DenseMatrix,
    /// Center index per row of the clustered matrix.
    pub assignment: Vec<usize>,
    /// Sum of squared distances to assigned centers.
    pub inertia: f64,
    /// Inertia after the seeding assignment and after each Lloyd iteration.
    pub inertia_history: Vec<f64>,
    /// Lloyd iterations performed.
    pub iterations: usize,
}

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or `max_iters` is reached. Ties go to the lower center index.
///
/// Clusters that end up empty (including surplus centers when there are
/// fewer distinct rows than `k`) are re-seeded on the row farthest from its
/// center, so exactly `k` centers are always returned.
pub fn kmeans(e: &DenseMatrix, k: usize, seed: u64, max_iters: usize) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::InvalidParameter("k-means needs k >= 1".into()));
    }
    if e.rows() == 0 {
        return Err(Error::InvalidParameter("k-means on an empty matrix".into()));
    }
    if !e.is_finite() {
        return Err(Error::NonFinite("k-means input"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_plus_plus(e, k, &mut rng);
    let (mut assignment, mut dist) = assign(e, &centers);
    let mut history = vec![dist.iter().sum::<f64>()];
    let mut iterations = 0;

    while iterations < max_iters {
        iterations += 1;
        update_centers(e, &mut centers, &assignment, &dist);
        let (next, next_dist) = assign(e, &centers);
        history.push(next_dist.iter().sum());
        let fixpoint = next == assignment;
        assignment = next;
        dist = next_dist;
        if fixpoint {
            break;
        }
    }

    Ok(Clustering {
        centers,
        assignment,
        inertia: *history.last().unwrap(),
        inertia_history: history,
        iterations,
    })
}

fn seed_plus_plus(e: &DenseMatrix, k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let n = e.rows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n)
        .map(|i| squared_distance(e.row(i), e.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave target at the very top of the range
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            // fewer distinct rows than k: duplicate; Lloyd re-seeds it later
            chosen[0]
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(e.row(i), e.row(next)));
        }
    }
    e.gather_rows(&chosen)
}

fn assign(e: &DenseMatrix, centers: &DenseMatrix) -> (Vec<usize>, Vec<f64>) {
    (0..e.rows())
        .map(|i| {
            let mut best = (0, squared_distance(e.row(i), centers.row(0)));
            for c in 1..centers.rows() {
                let d = squared_distance(e.row(i), centers.row(c));
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .unzip()
}

fn update_centers(e: &DenseMatrix, centers: &mut DenseMatrix, assignment: &[usize], dist: &[f64]) {
    let k = centers.rows();
    let d = e.cols();
    let mut sums = DenseMatrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &c) in assignment.iter().enumerate() {
        counts[c] += 1;
        for (s, &x) in sums.row_mut(c).iter_mut().zip(e.row(i)) {
            *s += x;
        }
    }
    let mut taken = vec![false; e.rows()];
    for c in 0..k {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            for (dst, &s) in centers.row_mut(c).iter_mut().zip(sums.row(c)) {
                *dst = s * inv;
            }
            continue;
        }
        // farthest row from its current center, lowest index on ties
        let mut far: Option<usize> = None;
        for i in 0..e.rows() {
            if !taken[i] && far.is_none_or(|f| dist[i] > dist[f]) {
                far = Some(i);
            }
        }
        let Some(far) = far else { continue };
        taken[far] = true;
        centers.row_mut(c).copy_from_slice(e.row(far));
    }
}
