//! Recursive stochastic complements on a sparse chain, compared with the
//! dense answer, plus one level of the decomposition written out.

use std::time::Instant;

use kemeny::direct::kemeny_direct;
use kemeny::dnc::{kemeny_dnc_auto, theta_via_solves, DncConfig, SplitStrategy, ThetaSolver};
use kemeny::generators::grid_with_shortcuts;
use kemeny::markov::{random_walk, stationary_default, stochastic_complements};
use kemeny::BlockPartition;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kemeny::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = random_walk(&grid_with_shortcuts(30, 40, 60, &mut rng))?;
    println!("chain: n = {}, nnz = {}", p.dim(), p.nnz());

    let t = Instant::now();
    let exact = kemeny_direct(&p)?.kappa;
    println!("direct            κ = {exact:.10} ({:.2} s)", t.elapsed().as_secs_f64());

    for (label, cfg) in [
        ("halving, LU", DncConfig::default()),
        ("halving, GMRES", DncConfig { n0: 128, solver: ThetaSolver::Gmres, ..Default::default() }),
        ("nested dissection", DncConfig { n0: 128, split: SplitStrategy::NestedDissection, ..Default::default() }),
    ] {
        let t = Instant::now();
        let r = kemeny_dnc_auto(&p, &cfg)?;
        println!(
            "{label:<17} κ = {:.10}  rel err {:.1e}  depth {}  ({:.2} s)",
            r.kappa,
            (r.kappa - exact).abs() / exact,
            r.diagnostics.depth.unwrap_or(0),
            t.elapsed().as_secs_f64()
        );
    }

    // κ(P) = κ(P₁) + κ(P₂) + γ for a single split.
    let split = BlockPartition::halving(p.dim())?;
    let pi = stationary_default(&p)?;
    let pair = stochastic_complements(&p, split, &pi)?;
    let tg = theta_via_solves(&p, split, &pair.pihat1, &pair.pihat2, ThetaSolver::SparseLu, 1e-12)?;
    let k1 = kemeny_direct(&pair.p1)?.kappa;
    let k2 = kemeny_direct(&pair.p2)?.kappa;
    println!("κ(P₁) = {k1:.6}, κ(P₂) = {k2:.6}, θ = {:.6}, γ = {:.6}", tg.theta, tg.gamma);
    println!("sum = {:.10}", k1 + k2 + tg.gamma);
    Ok(())
}
