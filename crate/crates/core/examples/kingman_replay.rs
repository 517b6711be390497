//! Draw ranked labeled trees and confirm each one's proposal probability by replay.

use coalcount::rng::{substream, Domain};
use coalcount::{
    is_compatible, prepare, project_to_labeled, replay_kingman, sample_kingman, IncidenceMatrix,
};

pub fn run_example() -> coalcount::Result<()> {
    let matrix = IncidenceMatrix::from_strings(&["0100", "1010", "0001", "0001", "0001", "0001"])?;
    let prepared = prepare(&matrix)?;
    let kp = &prepared.kingman;

    for i in 0..5 {
        let draw = sample_kingman(kp, &mut substream(11, Domain::Kingman, i));
        let (nodes, log_q) = replay_kingman(kp, &draw.topology).expect("sampled trees replay");
        assert_eq!(nodes, draw.node_sequence);
        assert!(is_compatible(&draw.topology, kp));
        let labeled = project_to_labeled(&draw.topology, kp.labels());
        println!(
            "draw {i}: 1/q = {:>6.1}  labeled {}  rankings {}",
            (-log_q).exp(),
            labeled.encoding,
            labeled.coefficient.exact().unwrap_or(0)
        );
    }
    Ok(())
}

fn main() -> coalcount::Result<()> {
    run_example()
}
