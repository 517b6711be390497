//! Generate a coalescent genealogy, scatter mutations on it and write the matrix.

use coalcount::rng::{substream, Domain};
use coalcount::{parse_matrix, simulate_matrix, MatrixFormat, SimulationMeta};

pub fn run_example() -> coalcount::Result<()> {
    let (n, mu, seed) = (8, 4.0, 17);
    let data = simulate_matrix(n, mu, &mut substream(seed, Domain::Simulation, 0));

    let g = &data.genealogy;
    println!(
        "total branch length {:.3}, {} branches",
        g.total_length(),
        g.branches().len()
    );
    let meta = SimulationMeta::new(mu, seed, &data);
    println!("{}", serde_json::to_string(&meta)?);

    let csv = data.matrix.to_csv();
    print!("{csv}");
    assert_eq!(parse_matrix(&csv, MatrixFormat::Csv)?, data.matrix);
    print!("{}", data.matrix.to_plain01());
    Ok(())
}

fn main() -> coalcount::Result<()> {
    run_example()
}
