//! Closed forms for Kronecker products, constant block row sums and the
//! κ(AB)/κ(BA) identities.

use kemeny::direct::{kemeny_direct, kemeny_product_identity_check};
use kemeny::generators::{constant_rowsum_chain, random_stochastic_dense};
use kemeny::structured::{kemeny_constant_rowsum, kemeny_kronecker, kronecker_gamma};
use kemeny::{BlockPartition, StochasticMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kemeny::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = StochasticMatrix::from_dense(&random_stochastic_dense(4, 4, &mut rng))?;
    let b = StochasticMatrix::from_dense(&random_stochastic_dense(6, 6, &mut rng))?;
    let k = kemeny_kronecker(&a, &b)?;
    let ab = StochasticMatrix::new(a.matrix().kron(b.matrix()))?;
    println!("A ⊗ B: closed form {:.12}, direct {:.12}, γ = {:.6}", k.kappa, kemeny_direct(&ab)?.kappa, kronecker_gamma(&a)?);

    let p = constant_rowsum_chain(7, 5, 0.6, 0.3, &mut rng);
    let split = BlockPartition::new(7, 12)?;
    let r = kemeny_constant_rowsum(&p, split)?;
    println!(
        "row sums ({}, {}): κ = {:.12} (direct {:.12}), α₁ = {:.6}",
        r.r1,
        r.r2,
        r.result.kappa,
        kemeny_direct(&p)?.kappa,
        r.alpha1
    );

    let a = random_stochastic_dense(3, 7, &mut rng);
    let b = random_stochastic_dense(7, 3, &mut rng);
    let (kab, kba) = kemeny_product_identity_check(&a, &b)?;
    println!("κ(BA) − κ(AB) = {:.12} (expect 4)", kba - kab);
    Ok(())
}
