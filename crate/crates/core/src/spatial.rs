//! Exact nearest-neighbour search over small 3D point sets.

use alloc::vec::Vec;

use crate::geometry::Point;

const LEAF_SIZE: usize = 8;

/// Squared Euclidean distance. Every nearest-neighbour path in the crate goes
/// through this so that indexed and exhaustive searches agree bit for bit.
#[inline]
pub fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[inline]
pub fn distance(a: &Point, b: &Point) -> f64 {
    libm::sqrt(dist2(&a.coords.into(), &b.coords.into()))
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: u32,
        end: u32,
    },
    Split {
        axis: u8,
        value: f64,
        left: u32,
        right: u32,
    },
}

/// Static k-d tree answering exact nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<[f64; 3]>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(points: &[Point]) -> Self {
        let points: Vec<[f64; 3]> = points.iter().map(|p| p.coords.into()).collect();
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::new();
        if !points.is_empty() {
            build(&points, &mut order, 0, &mut nodes);
        }
        Self {
            points,
            order,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and Euclidean distance of the closest stored point.
    pub fn nearest(&self, query: &Point) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let q: [f64; 3] = query.coords.into();
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, &q, &mut best);
        Some((best.0, libm::sqrt(best.1)))
    }

    pub fn nearest_distance(&self, query: &Point) -> Option<f64> {
        self.nearest(query).map(|(_, d)| d)
    }

    fn search(&self, node: usize, q: &[f64; 3], best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start as usize..end as usize] {
                    let d = dist2(q, &self.points[i as usize]);
                    if d < best.1 || (d == best.1 && (i as usize) < best.0) {
                        *best = (i as usize, d);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis as usize] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near as usize, q, best);
                if diff * diff <= best.1 {
                    self.search(far as usize, q, best);
                }
            }
        }
    }
}

fn build(points: &[[f64; 3]], order: &mut [u32], offset: usize, nodes: &mut Vec<Node>) -> u32 {
    let id = nodes.len() as u32;
    if order.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: offset as u32,
            end: (offset + order.len()) as u32,
        });
        return id;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in order.iter() {
        let p = &points[i as usize];
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let axis = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap_or(0);
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis].total_cmp(&points[b as usize][axis])
    });
    let value = points[order[mid] as usize][axis];
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let (left_half, right_half) = order.split_at_mut(mid);
    let left = build(points, left_half, offset, nodes);
    let right = build(points, right_half, offset + mid, nodes);
    nodes[id as usize] = Node::Split {
        axis: axis as u8,
        value,
        left,
        right,
    };
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(points: &[Point], q: &Point) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d = dist2(&q.coords.into(), &p.coords.into());
            if d < best.1 {
                best = (i, d);
            }
        }
        (best.0, libm::sqrt(best.1))
    }

    #[test]
    fn empty_tree() {
        assert!(KdTree::new(&[]).nearest(&Point::origin()).is_none());
    }

    #[test]
    fn duplicate_points_pick_lowest_index() {
        let pts = alloc::vec![Point::new(1.0, 0.0, 0.0); 20];
        assert_eq!(KdTree::new(&pts).nearest(&Point::origin()), Some((0, 1.0)));
    }

    proptest! {
        #[test]
        fn matches_exhaustive_search(
            pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..300),
            qs in prop::collection::vec((-1.5f64..1.5, -1.5f64..1.5, -1.5f64..1.5), 1..20),
        ) {
            let pts: Vec<Point> = pts.into_iter().map(|(x, y, z)| Point::new(x, y, z)).collect();
            let tree = KdTree::new(&pts);
            for (x, y, z) in qs {
                let q = Point::new(x, y, z);
                prop_assert_eq!(tree.nearest(&q).unwrap(), brute(&pts, &q));
            }
        }
    }
}
