use crate::descriptor::Descriptor;
use crate::kdtree::KdTree;

/// A matched keypoint pair between two images, ordered `image_i < image_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPair {
    pub image_i: usize,
    pub image_j: usize,
    pub kp_i: usize,
    pub kp_j: usize,
    pub distance: f32,
}

const BRUTE_FORCE_LIMIT: usize = 1000;

/// Nearest-neighbor matching with Lowe ratio test and symmetric cross-check.
///
/// Returns `(index_a, index_b, distance)` triples sorted by `index_a`. The
/// exact k-d tree takes over beyond 1000 descriptors; below that a brute
/// force scan is faster and trivially correct.
pub fn match_descriptors(
    desc_a: &[Descriptor],
    desc_b: &[Descriptor],
    ratio: f32,
) -> Vec<(usize, usize, f32)> {
    if desc_a.is_empty() || desc_b.is_empty() {
        return Vec::new();
    }
    let forward = nearest2_all(desc_a, desc_b);
    let backward_nn: Vec<Option<usize>> = nearest2_all(desc_b, desc_a)
        .into_iter()
        .map(|(nn, _)| nn.map(|(i, _)| i))
        .collect();

    let mut out = Vec::new();
    for (ia, (nn, second)) in forward.into_iter().enumerate() {
        let Some((ib, d1)) = nn else { continue };
        let d2 = second.map(|(_, d)| d).unwrap_or(f32::INFINITY);
        if d1 >= ratio * d2 {
            continue;
        }
        // cross-check: b's nearest in a must be this query
        if backward_nn[ib] == Some(ia) {
            out.push((ia, ib, d1));
        }
    }
    out
}

fn nearest2_all(
    queries: &[Descriptor],
    db: &[Descriptor],
) -> Vec<(Option<(usize, f32)>, Option<(usize, f32)>)> {
    if db.len() < BRUTE_FORCE_LIMIT {
        queries
            .iter()
            .map(|q| {
                let mut best: [(f32, usize); 2] = [(f32::INFINITY, usize::MAX); 2];
                for (i, d) in db.iter().enumerate() {
                    let dist = q.distance(d);
                    if dist < best[1].0 {
                        if dist < best[0].0 {
                            best[1] = best[0];
                            best[0] = (dist, i);
                        } else {
                            best[1] = (dist, i);
                        }
                    }
                }
                let unpack =
                    |b: (f32, usize)| if b.1 == usize::MAX { None } else { Some((b.1, b.0)) };
                (unpack(best[0]), unpack(best[1]))
            })
            .collect()
    } else {
        let tree = KdTree::build(db);
        queries.iter().map(|q| tree.nearest2(q)).collect()
    }
}

/// [`match_descriptors`] wrapped into [`MatchPair`]s for an ordered image
/// pair.
pub fn match_images(
    image_i: usize,
    image_j: usize,
    desc_i: &[Descriptor],
    desc_j: &[Descriptor],
    ratio: f32,
) -> Vec<MatchPair> {
    assert!(image_i < image_j, "pairs are ordered: image_i < image_j");
    match_descriptors(desc_i, desc_j, ratio)
        .into_iter()
        .map(|(kp_i, kp_j, distance)| MatchPair { image_i, image_j, kp_i, kp_j, distance })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis_descriptor(dim: usize) -> Descriptor {
        let mut v = vec![0.0f32; 128];
        v[dim] = 1.0;
        Descriptor { v }
    }

    #[test]
    fn orthonormal_duplicates_match_one_to_one() {
        let a = vec![basis_descriptor(0), basis_descriptor(1)];
        let b = vec![basis_descriptor(0), basis_descriptor(1)];
        let m = match_descriptors(&a, &b, 0.8);
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].0, m[0].1), (0, 0));
        assert_eq!((m[1].0, m[1].1), (1, 1));
        assert!(m.iter().all(|&(_, _, d)| d < 1e-6));
    }

    #[test]
    fn zero_ratio_rejects_everything() {
        let a = vec![basis_descriptor(0), basis_descriptor(1)];
        let b = vec![basis_descriptor(0), basis_descriptor(2)];
        assert!(match_descriptors(&a, &b, 0.0).is_empty());
    }

    #[test]
    fn cross_check_is_antisymmetric_consistent() {
        // two a-descriptors close to the same b-descriptor: only the closer
        // one survives the cross-check
        let mut near = basis_descriptor(0);
        near.v[1] = 0.05;
        let norm: f32 = near.v.iter().map(|x| x * x).sum::<f32>().sqrt();
        for v in near.v.iter_mut() {
            *v /= norm;
        }
        let a = vec![basis_descriptor(0), near];
        let b = vec![basis_descriptor(0), basis_descriptor(5)];
        let m = match_descriptors(&a, &b, 0.99);
        for &(ia, ib, _) in &m {
            // b's nearest in a must be exactly ia
            let mut best = (f32::INFINITY, usize::MAX);
            for (i, d) in a.iter().enumerate() {
                let dist = b[ib].distance(d);
                if dist < best.0 {
                    best = (dist, i);
                }
            }
            assert_eq!(best.1, ia);
        }
    }

    #[test]
    fn empty_inputs_yield_empty_output() {
        assert!(match_descriptors(&[], &[basis_descriptor(0)], 0.8).is_empty());
        assert!(match_descriptors(&[basis_descriptor(0)], &[], 0.8).is_empty());
    }
}
