//! The shape sampler records one path through the phylogeny, but several node
//! orderings can give the same ranked shape. Backtracking sums over all of them.

use coalcount::rng::{substream, Domain};
use coalcount::{backtrack_q, exact_q_tajima, prepare, sample_tajima, IncidenceMatrix};

pub fn run_example() -> coalcount::Result<()> {
    let matrix = IncidenceMatrix::from_strings(&["110", "110", "100", "101", "000", "000"])?;
    let prepared = prepare(&matrix)?;
    let tp = &prepared.tajima;

    let exact = exact_q_tajima(tp, 1_000_000)?;
    println!(
        "{} compatible ranked shapes, total proposal mass {:.6}",
        exact.log_q.len(),
        exact.total_probability
    );

    for i in 0..6 {
        let mut draw = sample_tajima(tp, &mut substream(4, Domain::Tajima, i));
        let bt = backtrack_q(tp, &mut draw, 1_000_000)?;
        println!(
            "draw {i}: {:?}\n  path q {:.5}  summed q {:.5}  orderings {}  oracle q {:.5}",
            draw.chain.events(),
            draw.log_q_path.exp(),
            bt.log_q_total.exp(),
            bt.orderings,
            exact.log_q[&draw.chain].exp()
        );
    }
    Ok(())
}

fn main() -> coalcount::Result<()> {
    run_example()
}
