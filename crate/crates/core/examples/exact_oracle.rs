//! Compare importance-sampling estimates against exhaustive enumeration.

use coalcount::{
    count_matrix, enumerate_compatible, prepare, CountConfig, IncidenceMatrix, Resolution,
};

pub fn run_example() -> coalcount::Result<()> {
    let matrix = IncidenceMatrix::from_strings(&["0100", "1010", "0001", "0001", "0001", "0001"])?;
    let exact = enumerate_compatible(&prepare(&matrix)?.kingman, 10_000_000)?;
    let report = count_matrix(
        &matrix,
        &CountConfig {
            n_draws: 20_000,
            seed: 8,
            progress: false,
            ..CountConfig::default()
        },
    )?;

    for r in Resolution::ALL {
        let e = report.get(r).expect("all resolutions requested");
        let truth: f64 = exact.get(r).to_string().parse().expect("small count");
        let z = (e.value() - truth) / e.std_error.max(f64::MIN_POSITIVE);
        println!(
            "{:<8} exact {:>4}  estimate {}  z {z:+.2}",
            r.as_str(),
            exact.get(r),
            e.estimate
        );
    }
    if let Some(trees) = &exact.enumerated_trees {
        println!("first labeled trees: {:?}", &trees[..trees.len().min(3)]);
    }
    Ok(())
}

fn main() -> coalcount::Result<()> {
    run_example()
}
