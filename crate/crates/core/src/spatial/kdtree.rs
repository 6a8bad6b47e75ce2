use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// A search hit: point index and Euclidean distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Static k-d tree over `K`-dimensional points.
///
/// Nodes split the longest edge of their points' bounding box at the lower
/// median, so every left point is `<=` the split value and every right
/// point `>=` it.
#[derive(Debug, Clone)]
pub struct KdTree<const K: usize> {
    points: Vec<[f64; K]>,
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

/// Builds a tree; nodes holding at most `leaf_capacity` points become leaves.
pub fn kd_build<const K: usize>(points: &[[f64; K]], leaf_capacity: usize) -> KdTree<K> {
    KdTree::new(points.to_vec(), leaf_capacity)
}

/// Candidate ordered by squared distance, then by index.
#[derive(Debug, Clone, Copy)]
struct Cand(f64, usize);

impl PartialEq for Cand {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Cand {}
impl PartialOrd for Cand {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cand {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then(self.1.cmp(&o.1))
    }
}

#[inline]
fn sq_dist<const K: usize>(a: &[f64; K], b: &[f64; K]) -> f64 {
    let mut s = 0.0;
    for i in 0..K {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

impl<const K: usize> KdTree<K> {
    pub fn new(points: Vec<[f64; K]>, leaf_capacity: usize) -> Self {
        let cap = leaf_capacity.max(1);
        let mut tree = KdTree {
            perm: (0..points.len()).collect(),
            points,
            nodes: Vec::new(),
        };
        if !tree.points.is_empty() {
            tree.build(0, tree.points.len(), cap);
        }
        tree
    }

    fn build(&mut self, start: usize, end: usize, cap: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= cap {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let slice = &self.perm[start..end];
        let mut lo = [f64::INFINITY; K];
        let mut hi = [f64::NEG_INFINITY; K];
        for &i in slice {
            for a in 0..K {
                lo[a] = lo[a].min(self.points[i][a]);
                hi[a] = hi[a].max(self.points[i][a]);
            }
        }
        let mut axis = 0;
        for a in 1..K {
            if hi[a] - lo[a] > hi[axis] - lo[axis] {
                axis = a;
            }
        }
        let pts = &self.points;
        self.perm[start..end].sort_unstable_by(|&a, &b| {
            pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b))
        });
        let mid = start + (end - start - 1) / 2;
        let value = self.points[self.perm[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid + 1, cap);
        let right = self.build(mid + 1, end, cap);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> &[f64; K] {
        &self.points[index]
    }

    /// Split axis and value of the root, if the root is internal.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first()? {
            Node::Split { axis, value, .. } => Some((*axis, *value)),
            Node::Leaf { .. } => None,
        }
    }

    /// Point indices of every leaf, left to right.
    pub fn leaves(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        if !self.nodes.is_empty() {
            self.collect_leaves(0, &mut out);
        }
        out
    }

    fn collect_leaves(&self, id: usize, out: &mut Vec<Vec<usize>>) {
        match self.nodes[id] {
            Node::Leaf { start, end } => out.push(self.perm[start..end].to_vec()),
            Node::Split { left, right, .. } => {
                self.collect_leaves(left, out);
                self.collect_leaves(right, out);
            }
        }
    }

    /// Checks the split invariant over every internal node.
    pub fn check_invariants(&self) -> bool {
        fn walk<const K: usize>(t: &KdTree<K>, id: usize, out: &mut Vec<usize>) -> bool {
            match t.nodes[id] {
                Node::Leaf { start, end } => {
                    out.extend_from_slice(&t.perm[start..end]);
                    true
                }
                Node::Split { axis, value, left, right } => {
                    let mut l = Vec::new();
                    let mut r = Vec::new();
                    let ok = walk(t, left, &mut l) && walk(t, right, &mut r);
                    let ok = ok
                        && l.iter().all(|&i| t.points[i][axis] <= value)
                        && r.iter().all(|&i| t.points[i][axis] >= value);
                    out.extend(l);
                    out.extend(r);
                    ok
                }
            }
        }
        if self.nodes.is_empty() {
            return self.points.is_empty();
        }
        let mut all = Vec::new();
        let ok = walk(self, 0, &mut all);
        all.sort_unstable();
        ok && all == (0..self.points.len()).collect::<Vec<_>>()
    }

    /// Closest point to `query`; ties go to the lowest index.
    pub fn nearest(&self, query: &[f64; K]) -> Option<Neighbor> {
        self.k_nearest(query, 1).into_iter().next()
    }

    /// The `k` closest points in nondecreasing distance, ties by index. Asking
    /// for more points than the tree holds returns all of them.
    pub fn k_nearest(&self, query: &[f64; K], k: usize) -> Vec<Neighbor> {
        self.k_nearest_sq(query, k)
            .into_iter()
            .map(|(index, d2)| Neighbor {
                index,
                distance: d2.sqrt(),
            })
            .collect()
    }

    /// Like [`KdTree::k_nearest`] but reports squared distances.
    pub fn k_nearest_sq(&self, query: &[f64; K], k: usize) -> Vec<(usize, f64)> {
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, k, &mut heap);
        let mut v: Vec<Cand> = heap.into_vec();
        v.sort_unstable();
        v.into_iter().map(|c| (c.1, c.0)).collect()
    }

    fn search(&self, id: usize, q: &[f64; K], k: usize, heap: &mut BinaryHeap<Cand>) {
        match self.nodes[id] {
            Node::Leaf { start, end } => {
                for &i in &self.perm[start..end] {
                    let c = Cand(sq_dist(q, &self.points[i]), i);
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, heap);
                if heap.len() < k || diff * diff <= heap.peek().unwrap().0 {
                    self.search(far, q, k, heap);
                }
            }
        }
    }
}
