//! Randomized trace estimate of κ on a grid graph.

use kemeny::direct::kemeny_direct;
use kemeny::generators::grid_graph;
use kemeny::hutch::{kemeny_hutchpp_walk, sample_count, HutchConfig};
use kemeny::markov::symmetric_walk;

fn main() -> kemeny::Result<()> {
    let walk = symmetric_walk(&grid_graph(30, 30))?;
    let exact = kemeny_direct(&walk.random_walk())?.kappa;
    println!("30×30 grid, exact κ = {exact:.6}");

    for (delta, eps) in [(0.25, 0.1), (0.25, 0.05), (0.1, 0.02)] {
        let cfg = HutchConfig { delta, epsilon: eps, seed: 1, ..Default::default() };
        let r = kemeny_hutchpp_walk(&walk, &cfg)?;
        println!(
            "δ = {delta}, ε = {eps}: l = {:>3}, κ ≈ {:.6}, rel err {:.2e}, CG iterations {}",
            sample_count(delta, eps),
            r.kappa,
            (r.kappa - exact).abs() / exact,
            r.diagnostics.krylov_iterations.unwrap_or(0)
        );
    }
    Ok(())
}
