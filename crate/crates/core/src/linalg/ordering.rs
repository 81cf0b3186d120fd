//! Graph bisection and nested-dissection orderings on symmetric patterns.
//!
//! Separators come from BFS level structures rooted at a pseudo-peripheral
//! vertex: the level where the cumulative vertex count crosses one half is
//! the separator. Disconnected patterns are split along components and need
//! no separator.

use std::collections::VecDeque;

use crate::linalg::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderingMethod {
    NestedDissection,
    Natural,
}

/// Vertex bisection of a graph: no edge joins `part_a` and `part_b`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bisection {
    pub part_a: Vec<usize>,
    pub part_b: Vec<usize>,
    pub separator: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Ordering {
    /// `perm[k]` is the original index placed at position `k`.
    pub perm: Vec<usize>,
    pub method: OrderingMethod,
    /// Top-level bisection; positions are `part_a`, then `part_b`, then the
    /// separator, each ordered recursively.
    pub top: Option<Bisection>,
}

impl Ordering {
    pub fn natural(n: usize) -> Self {
        Self { perm: (0..n).collect(), method: OrderingMethod::Natural, top: None }
    }

    /// Inverse map: original index → position.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.perm.len()];
        for (k, &i) in self.perm.iter().enumerate() {
            inv[i] = k;
        }
        inv
    }
}

/// Pluggable partitioner, so an external graph partitioner can replace the
/// built-in BFS separator.
pub trait Partitioner: Sync {
    /// Splits the vertices of a connected symmetric `graph` (no self loops).
    fn bisect(&self, graph: &CsrMatrix) -> Bisection;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LevelSetPartitioner;

impl Partitioner for LevelSetPartitioner {
    fn bisect(&self, graph: &CsrMatrix) -> Bisection {
        level_set_bisection(graph)
    }
}

const LEAF_SIZE: usize = 8;

/// Nested dissection with the built-in partitioner. `pattern` is symmetrized
/// internally, so any square sparsity pattern is accepted.
pub fn nested_dissection(pattern: &CsrMatrix) -> Ordering {
    nested_dissection_with(pattern, &LevelSetPartitioner)
}

pub fn nested_dissection_with<P: Partitioner + ?Sized>(pattern: &CsrMatrix, partitioner: &P) -> Ordering {
    let n = pattern.nrows();
    let graph = pattern.symmetrized_pattern();
    if n <= LEAF_SIZE {
        return Ordering::natural(n);
    }
    let top = bisect(&graph, partitioner);
    let mut perm = Vec::with_capacity(n);
    for part in [&top.part_a, &top.part_b] {
        dissect(&graph, part, partitioner, &mut perm);
    }
    perm.extend_from_slice(&top.separator);
    Ordering { perm, method: OrderingMethod::NestedDissection, top: Some(top) }
}

fn dissect<P: Partitioner + ?Sized>(graph: &CsrMatrix, nodes: &[usize], partitioner: &P, out: &mut Vec<usize>) {
    if nodes.len() <= LEAF_SIZE {
        out.extend_from_slice(nodes);
        return;
    }
    let sub = graph.select(nodes);
    let b = bisect(&sub, partitioner);
    if b.part_a.is_empty() || b.part_b.is_empty() {
        out.extend_from_slice(nodes);
        return;
    }
    for part in [&b.part_a, &b.part_b] {
        let global: Vec<usize> = part.iter().map(|&k| nodes[k]).collect();
        dissect(graph, &global, partitioner, out);
    }
    out.extend(b.separator.iter().map(|&k| nodes[k]));
}

/// Bisects a symmetric graph; components are balanced without a separator.
pub fn bisect<P: Partitioner + ?Sized>(graph: &CsrMatrix, partitioner: &P) -> Bisection {
    let comps = components(graph);
    if comps.len() > 1 {
        let mut sorted = comps;
        sorted.sort_by_key(|c| std::cmp::Reverse(c.len()));
        let mut b = Bisection::default();
        for c in sorted {
            if b.part_a.len() <= b.part_b.len() {
                b.part_a.extend(c);
            } else {
                b.part_b.extend(c);
            }
        }
        b.part_a.sort_unstable();
        b.part_b.sort_unstable();
        return b;
    }
    partitioner.bisect(graph)
}

/// Connected components in order of their smallest vertex.
pub fn components(graph: &CsrMatrix) -> Vec<Vec<usize>> {
    let n = graph.nrows();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut head = 0;
        while head < comp.len() {
            let u = comp[head];
            head += 1;
            for &v in graph.row(u).0 {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

fn bfs_levels(graph: &CsrMatrix, root: usize) -> Vec<Vec<usize>> {
    let n = graph.nrows();
    let mut depth = vec![usize::MAX; n];
    depth[root] = 0;
    let mut levels = vec![vec![root]];
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in graph.row(u).0 {
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                if levels.len() <= depth[v] {
                    levels.push(Vec::new());
                }
                levels[depth[v]].push(v);
                queue.push_back(v);
            }
        }
    }
    levels
}

/// Pseudo-peripheral vertex (George–Liu iteration).
pub fn pseudo_peripheral(graph: &CsrMatrix) -> usize {
    let n = graph.nrows();
    let degree = |u: usize| graph.row(u).0.len();
    let mut root = (0..n).min_by_key(|&u| degree(u)).unwrap_or(0);
    let mut ecc = bfs_levels(graph, root).len();
    for _ in 0..8 {
        let levels = bfs_levels(graph, root);
        let cand = *levels.last().unwrap().iter().min_by_key(|&&u| degree(u)).unwrap();
        let e = bfs_levels(graph, cand).len();
        if e <= ecc {
            break;
        }
        root = cand;
        ecc = e;
    }
    root
}

fn level_set_bisection(graph: &CsrMatrix) -> Bisection {
    let n = graph.nrows();
    if n < 3 {
        return Bisection { part_a: (0..n).collect(), ..Default::default() };
    }
    let levels = bfs_levels(graph, pseudo_peripheral(graph));
    let mut acc = 0;
    let mut sep = levels.len() - 1;
    for (k, lvl) in levels.iter().enumerate() {
        if acc + lvl.len() >= n.div_ceil(2) {
            sep = k;
            break;
        }
        acc += lvl.len();
    }
    // Keep both sides nonempty when the structure allows it.
    if sep == 0 && levels.len() > 2 {
        sep = 1;
    }
    if sep + 1 >= levels.len() && levels.len() > 2 {
        sep = levels.len() - 2;
    }
    let mut b = Bisection::default();
    for (k, lvl) in levels.into_iter().enumerate() {
        let dst = match k.cmp(&sep) {
            std::cmp::Ordering::Less => &mut b.part_a,
            std::cmp::Ordering::Equal => &mut b.separator,
            std::cmp::Ordering::Greater => &mut b.part_b,
        };
        dst.extend(lvl);
    }
    b.part_a.sort_unstable();
    b.part_b.sort_unstable();
    b.separator.sort_unstable();
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> CsrMatrix {
        let t: Vec<_> = (0..n - 1).flat_map(|i| [(i, i + 1, 1.0), (i + 1, i, 1.0)]).collect();
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    fn grid(k: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..k {
            for j in 0..k {
                let a = i * k + j;
                if i + 1 < k {
                    t.extend([(a, a + k, 1.0), (a + k, a, 1.0)]);
                }
                if j + 1 < k {
                    t.extend([(a, a + 1, 1.0), (a + 1, a, 1.0)]);
                }
            }
        }
        CsrMatrix::from_triplets(k * k, k * k, &t).unwrap()
    }

    fn is_permutation(p: &[usize]) -> bool {
        let mut s = p.to_vec();
        s.sort_unstable();
        s.iter().enumerate().all(|(i, &v)| i == v)
    }

    fn no_cross_edges(g: &CsrMatrix, b: &Bisection) -> bool {
        let mut side = vec![0u8; g.nrows()];
        b.part_a.iter().for_each(|&i| side[i] = 1);
        b.part_b.iter().for_each(|&i| side[i] = 2);
        g.iter().all(|(i, j, _)| side[i] * side[j] != 2)
    }

    #[test]
    fn path_separator_is_one_vertex() {
        let g = path(31);
        let o = nested_dissection(&g);
        let top = o.top.as_ref().unwrap();
        assert_eq!(top.separator.len(), 1);
        assert!(top.part_a.len().abs_diff(top.part_b.len()) <= 1);
        assert!(is_permutation(&o.perm));
        assert!(no_cross_edges(&g, top));
    }

    #[test]
    fn grid_separator_is_about_one_side() {
        let k = 12;
        let g = grid(k);
        let o = nested_dissection(&g);
        let top = o.top.as_ref().unwrap();
        assert!(top.separator.len() <= k + 1, "separator {}", top.separator.len());
        assert!(no_cross_edges(&g, top));
        assert!(is_permutation(&o.perm));
    }

    #[test]
    fn disconnected_components_are_contiguous() {
        let t = [(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0), (3, 4, 1.0), (4, 3, 1.0)];
        let g = CsrMatrix::from_triplets(5, 5, &t).unwrap();
        let b = bisect(&g, &LevelSetPartitioner);
        assert!(b.separator.is_empty());
        assert_eq!(b.part_a, vec![2, 3, 4]);
        assert_eq!(b.part_b, vec![0, 1]);
    }

    #[test]
    fn tiny_inputs_fall_back_to_natural() {
        let o = nested_dissection(&path(5));
        assert_eq!(o.method, OrderingMethod::Natural);
        assert_eq!(o.perm, vec![0, 1, 2, 3, 4]);
    }
}
