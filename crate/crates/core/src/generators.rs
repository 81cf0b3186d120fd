//! Synthetic chains and graphs for tests, examples and benchmarks.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::linalg::sparse::CsrMatrix;
use crate::markov::StochasticMatrix;
use crate::structured::PeriodicChain;

/// Random irreducible sparse chain: a random Hamiltonian cycle plus each
/// other entry with probability `density`, weights uniform in (0, 1].
pub fn random_irreducible<R: Rng + ?Sized>(n: usize, density: f64, rng: &mut R) -> StochasticMatrix {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut t = Vec::new();
    for k in 0..n {
        t.push((order[k], order[(k + 1) % n], 1.0 - rng.random::<f64>()));
    }
    for i in 0..n {
        for j in 0..n {
            if rng.random::<f64>() < density {
                t.push((i, j, 1.0 - rng.random::<f64>()));
            }
        }
    }
    normalize(CsrMatrix::from_triplets(n, n, &t).expect("in range"))
}

/// Dense m×n row-stochastic matrix with positive entries.
pub fn random_stochastic_dense<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(rows, cols, |_, _| 1.0 - rng.random::<f64>());
    for mut r in m.row_iter_mut() {
        let s = r.sum();
        r /= s;
    }
    m
}

/// Dense sub-stochastic m×n block with every row summing to `r`.
pub fn random_rowsum_block<R: Rng + ?Sized>(rows: usize, cols: usize, r: f64, rng: &mut R) -> DMatrix<f64> {
    random_stochastic_dense(rows, cols, rng) * r
}

/// Chain with P₁₁𝟙 = r₁𝟙 and P₂₂𝟙 = r₂𝟙 for blocks of size n₁, n₂.
pub fn constant_rowsum_chain<R: Rng + ?Sized>(n1: usize, n2: usize, r1: f64, r2: f64, rng: &mut R) -> StochasticMatrix {
    let n = n1 + n2;
    let mut p = DMatrix::zeros(n, n);
    p.view_mut((0, 0), (n1, n1)).copy_from(&random_rowsum_block(n1, n1, r1, rng));
    p.view_mut((0, n1), (n1, n2)).copy_from(&random_rowsum_block(n1, n2, 1.0 - r1, rng));
    p.view_mut((n1, 0), (n2, n1)).copy_from(&random_rowsum_block(n2, n1, 1.0 - r2, rng));
    p.view_mut((n1, n1), (n2, n2)).copy_from(&random_rowsum_block(n2, n2, r2, rng));
    StochasticMatrix::from_dense(&p).expect("rows sum to one")
}

/// Adjacency of the k₁×k₂ grid graph (4-neighbour).
pub fn grid_graph(k1: usize, k2: usize) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..k1 {
        for j in 0..k2 {
            let a = i * k2 + j;
            if i + 1 < k1 {
                t.extend([(a, a + k2, 1.0), (a + k2, a, 1.0)]);
            }
            if j + 1 < k2 {
                t.extend([(a, a + 1, 1.0), (a + 1, a, 1.0)]);
            }
        }
    }
    CsrMatrix::from_triplets(k1 * k2, k1 * k2, &t).expect("in range")
}

/// Grid graph plus `shortcuts` random undirected long-range edges.
pub fn grid_with_shortcuts<R: Rng + ?Sized>(k1: usize, k2: usize, shortcuts: usize, rng: &mut R) -> CsrMatrix {
    let n = k1 * k2;
    let mut t: Vec<_> = grid_graph(k1, k2).iter().collect();
    for _ in 0..shortcuts {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            t.extend([(a, b, 1.0), (b, a, 1.0)]);
        }
    }
    let m = CsrMatrix::from_triplets(n, n, &t).expect("in range");
    let ones: Vec<_> = m.iter().map(|(i, j, _)| (i, j, 1.0)).collect();
    CsrMatrix::from_triplets(n, n, &ones).expect("in range")
}

/// Adjacency of the path 0 – 1 – … – n−1.
pub fn path_graph(n: usize) -> CsrMatrix {
    let t: Vec<_> = (0..n.saturating_sub(1)).flat_map(|i| [(i, i + 1, 1.0), (i + 1, i, 1.0)]).collect();
    CsrMatrix::from_triplets(n, n, &t).expect("in range")
}

/// Adjacency of the complete bipartite graph K_{a,b}; the first `a`
/// vertices form one side.
pub fn complete_bipartite(a: usize, b: usize) -> CsrMatrix {
    let n = a + b;
    let t: Vec<_> = (0..a).flat_map(|i| (a..n).flat_map(move |j| [(i, j, 1.0), (j, i, 1.0)])).collect();
    CsrMatrix::from_triplets(n, n, &t).expect("in range")
}

/// Zero-row-sum perturbation direction `E = (Q − P)/2` for a random
/// stochastic Q on the pattern of P plus the diagonal, so that P + εE stays
/// stochastic for ε ≤ 1 and ‖E‖_∞ ≤ 1.
pub fn random_perturbation<R: Rng + ?Sized>(p: &StochasticMatrix, rng: &mut R) -> DMatrix<f64> {
    let pd = p.to_dense();
    let n = pd.nrows();
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if pd[(i, j)] > 0.0 || i == j {
                q[(i, j)] = 1.0 - rng.random::<f64>();
            }
        }
        let s = q.row(i).sum();
        q.row_mut(i).iter_mut().for_each(|v| *v /= s);
    }
    (q - pd) * 0.5
}

/// Periodic chain with the given class sizes and dense positive blocks.
pub fn random_periodic<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> PeriodicChain {
    let d = sizes.len();
    let blocks: Vec<_> = (0..d).map(|k| random_stochastic_dense(sizes[(k + 1) % d], sizes[k], rng)).collect();
    PeriodicChain::from_dense(&blocks).expect("consistent sizes")
}

fn normalize(a: CsrMatrix) -> StochasticMatrix {
    crate::markov::random_walk(&a).expect("every row has an entry")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_chains_are_irreducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 2, 10, 80] {
            let p = random_irreducible(n, 0.05, &mut rng);
            assert!(p.check_irreducible().irreducible);
        }
    }

    #[test]
    fn rowsum_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = constant_rowsum_chain(3, 4, 0.5, 0.25, &mut rng);
        assert_eq!(p.block_row_sum(0..3, 1e-12).map(|r| (r * 1e12).round()), Some(0.5e12));
        let e = random_perturbation(&p, &mut rng);
        assert!(e.row_iter().all(|r| r.sum().abs() < 1e-14));
    }
}
