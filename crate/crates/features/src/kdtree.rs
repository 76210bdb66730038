use crate::descriptor::Descriptor;

/// Exact k-d tree over descriptors with backtracking search.
///
/// At desk scale an exact tree beats approximate indexes on simplicity and
/// is directly verifiable against exhaustive scan.
pub struct KdTree<'a> {
    descriptors: &'a [Descriptor],
    nodes: Vec<Node>,
    root: usize,
}

enum Node {
    Leaf { items: Vec<u32> },
    Split { dim: u16, value: f32, left: usize, right: usize },
}

const LEAF_SIZE: usize = 8;

impl<'a> KdTree<'a> {
    pub fn build(descriptors: &'a [Descriptor]) -> Self {
        let mut tree = KdTree { descriptors, nodes: Vec::new(), root: 0 };
        let mut indices: Vec<u32> = (0..descriptors.len() as u32).collect();
        tree.root = tree.build_node(&mut indices);
        tree
    }

    fn build_node(&mut self, indices: &mut [u32]) -> usize {
        if indices.len() <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { items: indices.to_vec() });
            return self.nodes.len() - 1;
        }
        // split along the dimension with the largest spread
        let dim = {
            let mut best_dim = 0usize;
            let mut best_spread = -1.0f32;
            for d in 0..self.descriptors[indices[0] as usize].v.len() {
                let mut lo = f32::INFINITY;
                let mut hi = f32::NEG_INFINITY;
                for &i in indices.iter() {
                    let v = self.descriptors[i as usize].v[d];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                if hi - lo > best_spread {
                    best_spread = hi - lo;
                    best_dim = d;
                }
            }
            best_dim
        };
        let mid = indices.len() / 2;
        indices.select_nth_unstable_by(mid, |&a, &b| {
            self.descriptors[a as usize].v[dim]
                .partial_cmp(&self.descriptors[b as usize].v[dim])
                .unwrap()
                .then(a.cmp(&b))
        });
        let value = self.descriptors[indices[mid] as usize].v[dim];
        let (lo, hi) = indices.split_at_mut(mid);
        let left = self.build_node(lo);
        let right = self.build_node(hi);
        self.nodes.push(Node::Split { dim: dim as u16, value, left, right });
        self.nodes.len() - 1
    }

    /// Exact nearest and second-nearest neighbors: (index, distance) pairs.
    pub fn nearest2(&self, query: &Descriptor) -> (Option<(usize, f32)>, Option<(usize, f32)>) {
        let mut best: [(f32, usize); 2] = [(f32::INFINITY, usize::MAX); 2];
        self.search(self.root, query, &mut best);
        let unpack = |b: (f32, usize)| {
            if b.1 == usize::MAX {
                None
            } else {
                Some((b.1, b.0.sqrt()))
            }
        };
        (unpack(best[0]), unpack(best[1]))
    }

    fn search(&self, node: usize, query: &Descriptor, best: &mut [(f32, usize); 2]) {
        match &self.nodes[node] {
            Node::Leaf { items } => {
                for &i in items {
                    let d2 = sq_dist(&self.descriptors[i as usize], query);
                    if d2 < best[1].0 {
                        if d2 < best[0].0 {
                            best[1] = best[0];
                            best[0] = (d2, i as usize);
                        } else {
                            best[1] = (d2, i as usize);
                        }
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let q = query.v[*dim as usize];
                let (near, far) = if q < *value { (*left, *right) } else { (*right, *left) };
                self.search(near, query, best);
                let plane = q - value;
                if plane * plane < best[1].0 {
                    self.search(far, query, best);
                }
            }
        }
    }
}

fn sq_dist(a: &Descriptor, b: &Descriptor) -> f32 {
    a.v.iter()
        .zip(&b.v)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}
