//! End-to-end counting: data to phylogenies, parallel draws, estimates.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{combine, Accumulator, CountEstimate, Resolution};
use crate::incidence::{deduplicate, IncidenceMatrix};
use crate::kingman::sample_kingman;
use crate::numeric::Coefficient;
use crate::phylogeny::{
    build_perfect_phylogeny, to_kingman, to_tajima, KingmanPhylogeny, PerfectPhylogeny,
    TajimaPhylogeny,
};
use crate::rng::{substream, Domain};
use crate::tajima::{backtrack_q, sample_tajima, DEFAULT_BACKTRACK_BUDGET};
use crate::topology::{labeled_coefficient, shape_coefficient};

/// Draws processed between progress reports.
pub const CHUNK: u64 = 10_000;

/// The phylogenies a data set induces at both sampler resolutions.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub perfect: PerfectPhylogeny,
    pub kingman: KingmanPhylogeny,
    pub tajima: TajimaPhylogeny,
}

/// Builds the perfect phylogeny of an ISM-compatible matrix and its reductions.
pub fn prepare(matrix: &IncidenceMatrix) -> Result<Prepared> {
    let data = deduplicate(matrix);
    let perfect = build_perfect_phylogeny(&data)?;
    Ok(Prepared {
        kingman: to_kingman(&perfect, &data),
        tajima: to_tajima(&perfect, &data),
        perfect,
    })
}

/// Settings for one counting run.
#[derive(Debug, Clone, PartialEq)]
pub struct CountConfig {
    pub n_draws: u64,
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub resolutions: Vec<Resolution>,
    pub backtrack_budget: u64,
    /// Print running estimates to standard error after every chunk.
    pub progress: bool,
}

impl Default for CountConfig {
    fn default() -> Self {
        Self {
            n_draws: 10_000,
            seed: 0,
            workers: 0,
            resolutions: Resolution::ALL.to_vec(),
            backtrack_budget: DEFAULT_BACKTRACK_BUDGET,
            progress: false,
        }
    }
}

/// Estimates for every requested resolution, in request order.
#[derive(Debug, Clone, PartialEq)]
pub struct CountReport {
    pub estimates: Vec<CountEstimate>,
    pub seed: u64,
    pub n_draws: u64,
    pub elapsed_ms: u64,
}

impl CountReport {
    pub fn get(&self, resolution: Resolution) -> Option<&CountEstimate> {
        self.estimates.iter().find(|e| e.resolution == resolution)
    }
}

const SLOTS: usize = 4;

fn slot(r: Resolution) -> usize {
    match r {
        Resolution::Kingman => 0,
        Resolution::Tajima => 1,
        Resolution::Labeled => 2,
        Resolution::Shape => 3,
    }
}

/// Log-weights of draw `index` for the wanted resolutions (NaN elsewhere).
fn draw_weights(
    kp: &KingmanPhylogeny,
    tp: &TajimaPhylogeny,
    config: &CountConfig,
    wanted: &[bool; SLOTS],
    index: u64,
) -> Result<[f64; SLOTS]> {
    let mut w = [f64::NAN; SLOTS];
    if wanted[0] || wanted[2] {
        let d = sample_kingman(kp, &mut substream(config.seed, Domain::Kingman, index));
        w[0] = combine(Resolution::Kingman, d.log_q, &Coefficient::one());
        if wanted[2] {
            w[2] = combine(
                Resolution::Labeled,
                d.log_q,
                &labeled_coefficient(&d.topology),
            );
        }
    }
    if wanted[1] || wanted[3] {
        let mut d = sample_tajima(tp, &mut substream(config.seed, Domain::Tajima, index));
        backtrack_q(tp, &mut d, config.backtrack_budget)?;
        let log_q = d.log_q_total.expect("set by backtracking");
        w[1] = combine(Resolution::Tajima, log_q, &Coefficient::one());
        if wanted[3] {
            w[3] = combine(Resolution::Shape, log_q, &shape_coefficient(&d.chain));
        }
    }
    Ok(w)
}

/// Runs the importance sampler for the requested resolutions.
///
/// Draw `i` uses substream `i`, and weights are pooled in index order, so the
/// report is identical for any number of workers.
pub fn count_topologies(
    kp: &KingmanPhylogeny,
    tp: &TajimaPhylogeny,
    config: &CountConfig,
) -> Result<CountReport> {
    if config.n_draws < 2 {
        return Err(Error::Config(format!(
            "n_draws must be at least 2, got {}",
            config.n_draws
        )));
    }
    if config.resolutions.is_empty() {
        return Err(Error::Config("no resolutions requested".into()));
    }
    if kp.n_individuals() != tp.n_individuals() {
        return Err(Error::Invalid("phylogenies disagree on sample size".into()));
    }
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut wanted = [false; SLOTS];
    for &r in &config.resolutions {
        wanted[slot(r)] = true;
    }
    let mut acc = [Accumulator::new(); SLOTS];
    let mut done = 0;
    while done < config.n_draws {
        let end = (done + CHUNK).min(config.n_draws);
        let results: Vec<Result<[f64; SLOTS]>> = pool.install(|| {
            (done..end)
                .into_par_iter()
                .map(|i| draw_weights(kp, tp, config, &wanted, i))
                .collect()
        });
        let failures = results.iter().filter(|r| r.is_err()).count();
        if failures > 0 {
            eprintln!(
                "{failures} of {} draws exceeded the backtracking budget",
                end - done
            );
            return Err(results
                .into_iter()
                .find_map(|r| r.err())
                .expect("a failure"));
        }
        for w in results.into_iter().map(|r| r.expect("checked")) {
            for (s, a) in acc.iter_mut().enumerate() {
                if wanted[s] {
                    a.accumulate(w[s])?;
                }
            }
        }
        done = end;
        if config.progress {
            let mut line = format!("[{done}/{}]", config.n_draws);
            for &r in &config.resolutions {
                if let Ok(e) = acc[slot(r)].finalize(r) {
                    line.push_str(&format!(" {r}={} cv2={:.3}", e.estimate, e.cv2));
                }
            }
            eprintln!("{line}");
        }
    }
    let estimates = config
        .resolutions
        .iter()
        .map(|&r| acc[slot(r)].finalize(r))
        .collect::<Result<Vec<_>>>()?;
    Ok(CountReport {
        estimates,
        seed: config.seed,
        n_draws: config.n_draws,
        elapsed_ms: start.elapsed().as_millis() as u64,
    })
}

/// [`prepare`] followed by [`count_topologies`].
pub fn count_matrix(matrix: &IncidenceMatrix, config: &CountConfig) -> Result<CountReport> {
    let p = prepare(matrix)?;
    count_topologies(&p.kingman, &p.tajima, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn six_sample() -> IncidenceMatrix {
        crate::incidence::parse_matrix(
            "id,s1,s2,s3,s4\na,0,1,0,0\nb,1,0,1,0\nc,0,0,0,1\nd,0,0,0,1\ne,0,0,0,1\nf,0,0,0,1\n",
            crate::incidence::MatrixFormat::Csv,
        )
        .unwrap()
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let m = six_sample();
        let base = CountConfig {
            n_draws: 2_500,
            seed: 42,
            ..CountConfig::default()
        };
        let one = count_matrix(
            &m,
            &CountConfig {
                workers: 1,
                ..base.clone()
            },
        )
        .unwrap();
        let four = count_matrix(&m, &CountConfig { workers: 4, ..base }).unwrap();
        assert_eq!(one.estimates, four.estimates);
    }

    #[test]
    fn unconstrained_kingman_has_zero_variance() {
        let kp = KingmanPhylogeny::unconstrained(6);
        let tp = kp.to_tajima();
        let cfg = CountConfig {
            n_draws: 500,
            resolutions: vec![Resolution::Kingman],
            ..CountConfig::default()
        };
        let r = count_topologies(&kp, &tp, &cfg).unwrap();
        let k = r.get(Resolution::Kingman).unwrap();
        assert_eq!((k.std_error, k.cv2, k.ess), (0.0, 0.0, 500.0));
        assert_eq!(k.estimate, "2.70000e3");
    }

    #[test]
    fn config_is_validated() {
        let kp = KingmanPhylogeny::unconstrained(3);
        let tp = kp.to_tajima();
        let cfg = CountConfig {
            n_draws: 1,
            ..CountConfig::default()
        };
        assert!(matches!(
            count_topologies(&kp, &tp, &cfg),
            Err(Error::Config(_))
        ));
    }
}
