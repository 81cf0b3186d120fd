//! Write a graph to Matrix Market, then run the batch pipeline on it the way
//! the CLI does.

use std::time::Instant;

use kemeny::dnc::DncConfig;
use kemeny::generators::grid_with_shortcuts;
use kemeny::io::{read_matrix_market, run, write_matrix_market, MethodChoice, OutputFormat, RunConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kemeny::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = grid_with_shortcuts(20, 25, 30, &mut rng);
    let path = std::env::temp_dir().join("kemeny_example_grid.mtx");
    write_matrix_market(&path, &a)?;
    assert_eq!(read_matrix_market(&path)?, a);

    let small_leaves = DncConfig { n0: 64, ..Default::default() };
    for method in [MethodChoice::Auto, MethodChoice::Dnc] {
        let cfg = RunConfig { input: path.clone(), method, dnc: small_leaves.clone(), ..Default::default() };
        let t = Instant::now();
        let report = run(&cfg)?;
        print!("{}", report.to_human(t.elapsed().as_secs_f64()));
        println!();
    }
    let cfg = RunConfig { input: path.clone(), format: OutputFormat::Csv, method: MethodChoice::Direct, ..Default::default() };
    print!("{}", run(&cfg)?.render(0.0));
    std::fs::remove_file(path)?;
    Ok(())
}
