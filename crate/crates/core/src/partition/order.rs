//! Breadth-first orderings over the symmetrized sparsity graph.

use crate::sparse::csr::SparseCsr;

/// Undirected adjacency built from the pattern of `A + A^T`, self-loops
/// dropped. Neighbor lists are sorted ascending.
pub(crate) struct Adjacency {
    ptr: Vec<usize>,
    nbrs: Vec<usize>,
}

impl Adjacency {
    pub fn from_pattern(a: &SparseCsr) -> Self {
        let n = a.n_rows();
        let t = a.transpose();
        let mut ptr = vec![0usize; n + 1];
        let mut nbrs = Vec::with_capacity(2 * a.nnz());
        for i in 0..n {
            let (fwd, _) = a.row(i);
            let (bwd, _) = t.row(i);
            // merge two sorted lists, dropping duplicates and the diagonal
            let (mut p, mut q) = (0, 0);
            while p < fwd.len() || q < bwd.len() {
                let j = match (fwd.get(p), bwd.get(q)) {
                    (Some(&x), Some(&y)) if x == y => {
                        p += 1;
                        q += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        p += 1;
                        x
                    }
                    (Some(_), Some(&y)) => {
                        q += 1;
                        y
                    }
                    (Some(&x), None) => {
                        p += 1;
                        x
                    }
                    (None, Some(&y)) => {
                        q += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                if j != i {
                    nbrs.push(j);
                }
            }
            ptr[i + 1] = nbrs.len();
        }
        Adjacency { ptr, nbrs }
    }

    pub fn n(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.nbrs[self.ptr[i]..self.ptr[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.ptr[i + 1] - self.ptr[i]
    }
}

/// Connected components, each listed ascending. Returned ordered by
/// descending size (ties: smallest contained vertex first).
pub(crate) fn components(adj: &Adjacency) -> Vec<Vec<usize>> {
    let n = adj.n();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            comp.push(v);
            for &w in adj.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    comps
}

/// BFS level structure from `root` within its component: (max level,
/// level of every reached vertex; usize::MAX for unreached).
fn bfs_levels(adj: &Adjacency, root: usize, level: &mut [usize]) -> usize {
    for l in level.iter_mut() {
        *l = usize::MAX;
    }
    let mut queue = std::collections::VecDeque::new();
    level[root] = 0;
    queue.push_back(root);
    let mut depth = 0;
    while let Some(v) = queue.pop_front() {
        depth = level[v];
        for &w in adj.neighbors(v) {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    depth
}

/// Vertex of large eccentricity found by the shrinking-wave heuristic:
/// start at a minimum-degree vertex, repeatedly jump to a minimum-degree
/// vertex of the deepest BFS level while the eccentricity keeps growing.
pub(crate) fn pseudo_peripheral(adj: &Adjacency, component: &[usize], scratch: &mut [usize]) -> usize {
    let mut root = component
        .iter()
        .copied()
        .min_by_key(|&v| (adj.degree(v), v))
        .expect("empty component");
    let mut ecc = bfs_levels(adj, root, scratch);
    loop {
        let candidate = component
            .iter()
            .copied()
            .filter(|&v| scratch[v] == ecc)
            .min_by_key(|&v| (adj.degree(v), v))
            .expect("deepest level is non-empty");
        let cand_ecc = bfs_levels(adj, candidate, scratch);
        if cand_ecc > ecc {
            root = candidate;
            ecc = cand_ecc;
        } else {
            // restore the level structure of the chosen root
            bfs_levels(adj, root, scratch);
            return root;
        }
    }
}

/// Cuthill-McKee ordering of the whole graph: per component (largest
/// first), BFS from a pseudo-peripheral vertex, appending unvisited
/// neighbors by ascending (degree, index). Returns `order[new] = old`.
pub(crate) fn cuthill_mckee(adj: &Adjacency) -> Vec<usize> {
    let n = adj.n();
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut scratch = vec![usize::MAX; n];
    let mut nbr_buf: Vec<usize> = Vec::new();
    for comp in components(adj) {
        let root = pseudo_peripheral(adj, &comp, &mut scratch);
        let head = order.len();
        visited[root] = true;
        order.push(root);
        let mut cursor = head;
        while cursor < order.len() {
            let v = order[cursor];
            cursor += 1;
            nbr_buf.clear();
            nbr_buf.extend(adj.neighbors(v).iter().copied().filter(|&w| !visited[w]));
            nbr_buf.sort_unstable_by_key(|&w| (adj.degree(w), w));
            for &w in &nbr_buf {
                visited[w] = true;
                order.push(w);
            }
        }
        debug_assert_eq!(order.len() - head, comp.len());
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::poisson::poisson3d;

    fn chain(n: usize) -> SparseCsr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseCsr::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn chain_orders_naturally() {
        let a = chain(10);
        let adj = Adjacency::from_pattern(&a);
        let order = cuthill_mckee(&adj);
        // endpoints have degree 1; vertex 0 wins the tie and the chain
        // unrolls in natural order
        assert_eq!(order, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn ordering_is_a_permutation() {
        let a = poisson3d(4, 3, 2).unwrap();
        let adj = Adjacency::from_pattern(&a);
        let mut order = cuthill_mckee(&adj);
        assert_eq!(order.len(), a.n_rows());
        order.sort_unstable();
        assert_eq!(order, (0..a.n_rows()).collect::<Vec<_>>());
    }

    #[test]
    fn components_split_disconnected_graph() {
        // two chains: 0-1-2 and 3-4
        let t = vec![
            (0, 1, 1.0),
            (1, 0, 1.0),
            (1, 2, 1.0),
            (2, 1, 1.0),
            (3, 4, 1.0),
            (4, 3, 1.0),
        ];
        let a = SparseCsr::from_triplets(5, 5, &t).unwrap();
        let adj = Adjacency::from_pattern(&a);
        let comps = components(&adj);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0], vec![0, 1, 2]);
        assert_eq!(comps[1], vec![3, 4]);
    }
}
