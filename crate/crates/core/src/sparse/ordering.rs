use super::{CsrMatrix, LinOp};
use std::collections::VecDeque;

const LEAF_SIZE: usize = 48;

/// Fill-reducing nested-dissection ordering of a structurally symmetric
/// matrix. Returns `perm` with `perm[new] = old`.
///
/// Separators are the middle level set of a breadth-first search from a
/// pseudo-peripheral node. Leaves keep their natural order, so small
/// matrices get the identity permutation.
pub fn nested_dissection(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut nd = Dissector {
        a,
        stamp: vec![0; n],
        level: vec![0; n],
        next_stamp: 0,
        out: Vec::with_capacity(n),
    };
    nd.dissect((0..n).collect());
    nd.out
}

struct Dissector<'a> {
    a: &'a CsrMatrix,
    stamp: Vec<usize>,
    level: Vec<usize>,
    next_stamp: usize,
    out: Vec<usize>,
}



impl Dissector<'_> {
    fn mark(&mut self, set: &[usize]) -> usize {
        self.next_stamp += 1;
        for &v in set {
            self.stamp[v] = self.next_stamp;
        }
        self.next_stamp
    }

    /// BFS inside the set marked `id`; returns the visit order and fills
    /// `level`. `seen` must be a fresh stamp.
    fn bfs(&mut self, start: usize, id: usize, seen: usize) -> Vec<usize> {
        let mut order = vec![start];
        let mut queue = VecDeque::from([start]);
        self.stamp[start] = seen;
        self.level[start] = 0;
        while let Some(v) = queue.pop_front() {
            let (cols, _) = self.a.row(v);
            for &w in cols {
                if self.stamp[w] == id {
                    self.stamp[w] = seen;
                    self.level[w] = self.level[v] + 1;
                    order.push(w);
                    queue.push_back(w);
                }
            }
        }
        order
    }

    fn dissect(&mut self, mut set: Vec<usize>) {
        set.sort_unstable();
        if set.len() <= LEAF_SIZE {
            self.out.extend_from_slice(&set);
            return;
        }
        let id = self.mark(&set);
        self.next_stamp += 1;
        let seen = self.next_stamp;
        let first = self.bfs(set[0], id, seen);
        if first.len() < set.len() {
            // Disconnected: handle each component separately.
            let mut components = vec![first];
            for &v in &set {
                if self.stamp[v] == id {
                    components.push(self.bfs(v, id, seen));
                }
            }
            for c in components {
                self.dissect(c);
            }
            return;
        }

        // Pseudo-peripheral start: repeat BFS from the farthest node.
        let mut order = first;
        let mut depth = self.level[*order.last().unwrap()];
        for _ in 0..4 {
            let far = *order.last().unwrap();
            let id2 = self.mark(&set);
            self.next_stamp += 1;
            let seen2 = self.next_stamp;
            let o = self.bfs(far, id2, seen2);
            let d = self.level[*o.last().unwrap()];
            order = o;
            if d <= depth {
                break;
            }
            depth = d;
        }
        let depth = self.level[*order.last().unwrap()];
        if depth < 2 {
            self.out.extend_from_slice(&set);
            return;
        }
        let mid = depth.div_ceil(2);
        let (mut left, mut sep, mut right) = (Vec::new(), Vec::new(), Vec::new());
        for &v in &order {
            match self.level[v].cmp(&mid) {
                std::cmp::Ordering::Less => left.push(v),
                std::cmp::Ordering::Equal => sep.push(v),
                std::cmp::Ordering::Greater => right.push(v),
            }
        }
        self.dissect(left);
        self.dissect(right);
        sep.sort_unstable();
        self.out.extend_from_slice(&sep);
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn grid_laplacian(n: usize) -> CsrMatrix {
        let idx = |i: usize, j: usize| j * n + i;
        let mut t = Vec::new();
        for j in 0..n {
            for i in 0..n {
                t.push((idx(i, j), idx(i, j), 4.0));
                if i + 1 < n {
                    t.push((idx(i, j), idx(i + 1, j), -1.0));
                    t.push((idx(i + 1, j), idx(i, j), -1.0));
                }
                if j + 1 < n {
                    t.push((idx(i, j), idx(i, j + 1), -1.0));
                    t.push((idx(i, j + 1), idx(i, j), -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(n * n, n * n, &t).unwrap()
    }

    #[test]
    fn is_a_permutation() {
        let a = grid_laplacian(30);
        let p = nested_dissection(&a);
        let mut s = p.clone();
        s.sort_unstable();
        assert_eq!(s, (0..900).collect::<Vec<_>>());
    }

    #[test]
    fn small_matrices_keep_natural_order() {
        let a = grid_laplacian(5);
        assert_eq!(nested_dissection(&a), (0..25).collect::<Vec<_>>());
    }

    #[test]
    fn disconnected_blocks() {
        let a = CsrMatrix::identity(100);
        let p = nested_dissection(&a);
        assert_eq!(p.len(), 100);
    }
}
