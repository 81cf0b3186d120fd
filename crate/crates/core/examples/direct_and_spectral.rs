//! Kemeny's constant of small chains by the deflated inverse and by eigenvalues.

use kemeny::direct::{kemeny_direct, kemeny_direct_with, kemeny_eig, DirectOptions};
use kemeny::generators::random_irreducible;
use kemeny::StochasticMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kemeny::Result<()> {
    let uniform = StochasticMatrix::uniform(10);
    println!("uniform n=10      κ = {:.12} (expect 9)", kemeny_direct(&uniform)?.kappa);

    let cycle = StochasticMatrix::directed_cycle(25);
    println!("directed 25-cycle κ = {:.12} (expect 12)", kemeny_direct(&cycle)?.kappa);

    let two = StochasticMatrix::two_state(0.3, 0.1)?;
    println!("two-state         κ = {:.12} (expect 1/(a+b) = 2.5)", kemeny_direct(&two)?.kappa);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = random_irreducible(200, 0.03, &mut rng);
    let d = kemeny_direct(&p)?;
    let e = kemeny_eig(&p)?;
    println!("random n=200: direct {:.10}, eig {:.10}", d.kappa, e.kappa);

    // Any h with hᵀ𝟙 ≠ 0 gives the same value.
    let h: Vec<f64> = (0..200).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
    let other = kemeny_direct_with(&p, &DirectOptions { h: Some(h), ..Default::default() })?;
    println!("with h = e₁:  {:.10}", other.kappa);
    println!("lower bound (n−1)/2 holds: {}", d.satisfies_lower_bound(1e-12));
    Ok(())
}
