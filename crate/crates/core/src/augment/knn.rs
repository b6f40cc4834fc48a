use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use crate::augment::FramePool;
use crate::error::{Error, Result};
use crate::Features;

fn dot(a: ArrayView1<'_, f32>, b: ArrayView1<'_, f32>) -> f64 {
    a.iter().zip(b.iter()).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// `1 - cos(a, b)`, computed in `f64`. A zero vector is at distance 1 from
/// everything.
pub fn cosine_distance(a: ArrayView1<'_, f32>, b: ArrayView1<'_, f32>) -> f64 {
    let denom = dot(a, a).sqrt() * dot(b, b).sqrt();
    if denom == 0.0 {
        1.0
    } else {
        1.0 - dot(a, b) / denom
    }
}

/// Indices of the `k` pool rows nearest to `query`, ordered by distance
/// and then by index.
pub fn nearest_indices(query: ArrayView1<'_, f32>, pool: &Array2<f32>, pool_norms: &[f64], k: usize) -> Vec<usize> {
    let qn = dot(query, query).sqrt();
    // Kept sorted by (distance, index); small k makes insertion cheap.
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    for (j, row) in pool.outer_iter().enumerate() {
        let denom = qn * pool_norms[j];
        let d = if denom == 0.0 { 1.0 } else { 1.0 - dot(query, row) / denom };
        if best.len() == k && d >= best[k - 1].0 {
            continue;
        }
        let at = best.partition_point(|&(bd, _)| bd <= d);
        best.insert(at, (d, j));
        best.truncate(k);
    }
    best.into_iter().map(|(_, j)| j).collect()
}

/// Replaces every source frame by the mean of its `k` nearest pool frames.
///
/// Ties in distance go to the lower pool index. The mean is accumulated in
/// `f64` over the selected rows in ascending index order. Length, hop and
/// feature kind are preserved.
pub fn knn_convert(source: &Features, pool: &FramePool, k: usize) -> Result<Features> {
    if k == 0 || k > pool.len() {
        return Err(Error::Parameter(format!("k = {k} but the pool holds {} frames", pool.len())));
    }
    if source.dim() != pool.dim() {
        return Err(Error::Validation(format!(
            "source has dimension {}, pool has {}",
            source.dim(),
            pool.dim()
        )));
    }
    let norms: Vec<f64> = pool.frames.outer_iter().map(|r| dot(r, r).sqrt()).collect();
    let frames = source.frames();
    let rows: Vec<Vec<f32>> = (0..frames.nrows())
        .into_par_iter()
        .map(|t| {
            let q = frames.row(t);
            let mut idx = nearest_indices(q, &pool.frames, &norms, k);
            idx.sort_unstable();
            let mut acc = vec![0.0f64; pool.dim()];
            for j in idx {
                for (a, &v) in acc.iter_mut().zip(pool.frames.row(j)) {
                    *a += v as f64;
                }
            }
            acc.into_iter().map(|a| (a / k as f64) as f32).collect()
        })
        .collect();
    let mut out = Array2::zeros(source.frames().dim());
    for (mut dst, row) in out.outer_iter_mut().zip(rows) {
        dst.assign(&ArrayView1::from(&row));
    }
    source.with_frames(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::FeatureKind;
    use crate::augment::build_pool;
    use ndarray::array;

    fn feats(a: Array2<f32>) -> Features {
        Features::new(a, 10_000, FeatureKind::External).unwrap()
    }

    #[test]
    fn pool_of_source_with_k1_is_identity() {
        let src = feats(array![[1.0, 0.0], [0.3, 2.0], [-1.0, 0.5]]);
        let pool = build_pool("t", &[src.clone()], 60.0).unwrap();
        assert_eq!(knn_convert(&src, &pool, 1).unwrap(), src);
    }

    #[test]
    fn k_equal_to_pool_size_gives_the_mean() {
        let src = feats(array![[1.0, 0.0], [0.0, 1.0]]);
        let pool = build_pool("t", &[feats(array![[1.0, 2.0], [3.0, 4.0], [5.0, 9.0]])], 60.0).unwrap();
        let out = knn_convert(&src, &pool, 3).unwrap();
        for row in out.frames().outer_iter() {
            assert_eq!(row.to_vec(), vec![3.0, 5.0]);
        }
    }

    #[test]
    fn ties_prefer_lower_index() {
        // Rows 0 and 2 are parallel to the query; so is row 1 (scaled).
        let pool = array![[2.0f32, 0.0], [0.0, 1.0], [1.0, 0.0], [3.0, 0.0]];
        let norms: Vec<f64> = pool.outer_iter().map(|r| dot(r, r).sqrt()).collect();
        let q = array![5.0f32, 0.0];
        assert_eq!(nearest_indices(q.view(), &pool, &norms, 2), vec![0, 2]);
        assert_eq!(nearest_indices(q.view(), &pool, &norms, 3), vec![0, 2, 3]);
    }

    #[test]
    fn k_larger_than_pool_is_rejected() {
        let src = feats(array![[1.0, 0.0]]);
        let pool = build_pool("t", &[src.clone()], 60.0).unwrap();
        assert!(matches!(knn_convert(&src, &pool, 2), Err(Error::Parameter(_))));
        assert!(matches!(knn_convert(&src, &pool, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn zero_vectors_are_maximally_distant() {
        assert_eq!(cosine_distance(array![0.0f32, 0.0].view(), array![1.0f32, 0.0].view()), 1.0);
        assert!(cosine_distance(array![1.0f32, 1.0].view(), array![2.0f32, 2.0].view()).abs() < 1e-15);
    }
}
