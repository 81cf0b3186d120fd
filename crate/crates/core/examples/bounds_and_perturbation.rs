//! A-priori intervals for the block mass, θ and γ, and the first-order
//! change of κ under a perturbation.

use kemeny::bounds::{gamma_bounds, perturbation_bound, pi1_bounds, theta_upper_bound, PerturbationSpec};
use kemeny::direct::kemeny_direct;
use kemeny::dnc::{theta_via_solves, ThetaSolver};
use kemeny::generators::{random_irreducible, random_perturbation};
use kemeny::markov::stationary_default;
use kemeny::BlockPartition;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kemeny::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let p = random_irreducible(60, 0.1, &mut rng);
    let split = BlockPartition::new(25, 60)?;
    let pi = stationary_default(&p)?;
    let (h1, a1) = pi.restrict(split.first());
    let (h2, _) = pi.restrict(split.second());

    let b = pi1_bounds(&p, split)?;
    println!("‖π₁‖ = {a1:.6} in [{:.6}, {:.6}] (trivial: {})", b.interval.lo, b.interval.hi, b.trivial);

    let tg = theta_via_solves(&p, split, &h1, &h2, ThetaSolver::SparseLu, 1e-12)?;
    let tb = theta_upper_bound(&p, split, &h1)?;
    println!("θ = {:.6} ≤ {:.6}", tg.theta, tb.value);

    let g = gamma_bounds(&p, split, Some(tg.theta))?;
    println!("γ = {:.6} in [{:.6}, {:.6}]", tg.gamma, g.interval.lo, g.interval.hi);

    let e = random_perturbation(&p, &mut rng);
    let k0 = kemeny_direct(&p)?.kappa;
    println!("{:>8} {:>14} {:>14} {:>12}", "ε", "Δκ", "first order", "bound");
    for eps in [1e-2, 1e-3, 1e-4] {
        let spec = PerturbationSpec::new(e.clone(), eps)?;
        let est = perturbation_bound(&p, &spec, None)?;
        let dk = kemeny_direct(&spec.apply(&p)?)?.kappa - k0;
        println!("{eps:>8.0e} {dk:>14.6e} {:>14.6e} {:>12.4e}", est.first_order, est.bound);
    }
    Ok(())
}
