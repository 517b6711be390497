//! Simulate a sample under the coalescent and estimate its compatible tree counts.

use coalcount::rng::{substream, Domain};
use coalcount::{closed_form_unconstrained, count_matrix, simulate_matrix, CountConfig};

pub fn run_example() -> coalcount::Result<()> {
    let (n, mu, seed) = (12, 8.0, 2024);
    let sim = simulate_matrix(n, mu, &mut substream(seed, Domain::Simulation, 0));
    println!("n={n} mu={mu}: {} segregating sites", sim.matrix.n_sites());

    let config = CountConfig {
        n_draws: 5_000,
        seed,
        progress: false,
        ..CountConfig::default()
    };
    let report = count_matrix(&sim.matrix, &config)?;
    let all = closed_form_unconstrained(n)?;
    for e in &report.estimates {
        println!(
            "{:<8} {}  (rse {:.3}, ess {:>7.1}, of {} unconstrained)",
            e.resolution.as_str(),
            e.estimate,
            e.rse,
            e.ess,
            all.get(e.resolution)
        );
    }
    Ok(())
}

fn main() -> coalcount::Result<()> {
    run_example()
}
