//! Numbers of unconstrained trees at each resolution, with and without data.

use coalcount::{
    closed_form_unconstrained, count_topologies, CountConfig, KingmanPhylogeny, Resolution,
};

pub fn run_example() -> coalcount::Result<()> {
    println!(
        "{:>3} {:>14} {:>10} {:>10} {:>6}",
        "n", "kingman", "tajima", "labeled", "shape"
    );
    for n in [2, 4, 6, 8, 10] {
        let c = closed_form_unconstrained(n)?;
        println!(
            "{n:>3} {:>14} {:>10} {:>10} {:>6}",
            c.kingman, c.tajima, c.labeled, c.shape
        );
    }

    // With no segregating sites every tree is compatible. The Kingman sampler is then
    // uniform, so its estimate is exact; the other resolutions still carry noise.
    let n = 8;
    let kp = KingmanPhylogeny::unconstrained(n);
    let tp = kp.to_tajima();
    let report = count_topologies(
        &kp,
        &tp,
        &CountConfig {
            n_draws: 200,
            seed: 1,
            progress: false,
            ..CountConfig::default()
        },
    )?;
    let exact = closed_form_unconstrained(n)?;
    for r in Resolution::ALL {
        let e = report.get(r).expect("all resolutions requested");
        println!(
            "n={n} {r:<8} estimate {} (rse {:.1e}), exact {}",
            e.estimate,
            e.rse,
            exact.get(r)
        );
    }
    Ok(())
}

fn main() -> coalcount::Result<()> {
    run_example()
}
