//! Fill-reducing ordering and its effect on sparse LU and on the
//! divide-and-conquer split.

use kemeny::generators::grid_graph;
use kemeny::linalg::{nested_dissection, SparseLu};
use kemeny::markov::random_walk;

fn main() -> kemeny::Result<()> {
    let a = grid_graph(60, 60);
    let p = random_walk(&a)?;
    let m = p.matrix().identity_minus();
    // Make the system nonsingular.
    let shifted = m.add_scaled(1.0, &kemeny::linalg::CsrMatrix::identity(m.nrows()), 1e-3)?;

    let nd = nested_dissection(&a);
    if let Some(top) = &nd.top {
        println!(
            "top bisection: {} | {} with separator {}",
            top.part_a.len(),
            top.part_b.len(),
            top.separator.len()
        );
    }
    let natural: Vec<usize> = (0..m.nrows()).collect();
    let plain = SparseLu::factor_ordered(&shifted, &natural)?;
    let ordered = SparseLu::factor_ordered(&shifted, &nd.perm)?;
    println!("LU nnz, natural order:     {}", plain.nnz());
    println!("LU nnz, nested dissection: {}", ordered.nnz());

    let b = vec![1.0; m.nrows()];
    let (x1, x2) = (plain.solve(&b), ordered.solve(&b));
    let diff = x1.iter().zip(&x2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("solutions agree to {diff:.1e}");
    Ok(())
}
