//! Weight diagnostics: how the sample size affects the relative error and the
//! largest-weight share, and how to combine accumulators from separate runs.

use coalcount::rng::{substream, Domain};
use coalcount::{prepare, sample_kingman, Accumulator, IncidenceMatrix, Resolution};

pub fn run_example() -> coalcount::Result<()> {
    let matrix =
        IncidenceMatrix::from_strings(&["1100", "1100", "1010", "0001", "0001", "0000", "0000"])?;
    let kp = prepare(&matrix)?.kingman;

    let mut total = Accumulator::new();
    for (batch, size) in [100u64, 1_000, 10_000].into_iter().enumerate() {
        let mut acc = Accumulator::new();
        for i in 0..size {
            let draw = sample_kingman(&kp, &mut substream(batch as u64, Domain::Kingman, i));
            acc.accumulate(-draw.log_q)?;
        }
        let e = acc.finalize(Resolution::Kingman)?;
        println!(
            "N={size:>6}: {}  rse {:.4}  cv2 {:.3}  ess {:>8.1}  q_n {:.4}",
            e.estimate, e.rse, e.cv2, e.ess, e.q_n
        );
        total.merge(&acc);
    }
    let e = total.finalize(Resolution::Kingman)?;
    println!("pooled N={}: {}  rse {:.4}", total.len(), e.estimate, e.rse);
    Ok(())
}

fn main() -> coalcount::Result<()> {
    run_example()
}
