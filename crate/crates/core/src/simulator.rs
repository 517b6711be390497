//! Synthetic infinite-sites data: a Kingman genealogy with exponential waiting
//! times, Poisson mutations placed uniformly along its branches.

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::incidence::{deduplicate, IncidenceMatrix};
use crate::kingman::uniform_pair;
use crate::topology::{Lineage, MergeSequence};

/// A ranked labeled tree with coalescent waiting times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedGenealogy {
    pub topology: MergeSequence,
    /// `times[i]` is the waiting time while `n - i` lineages are extant.
    pub times: Vec<f64>,
}

/// A non-root branch of a genealogy.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub lineage: Lineage,
    pub length: f64,
    /// Sorted leaf indices below the branch.
    pub leaves: Vec<u32>,
}

impl TimedGenealogy {
    pub fn n_leaves(&self) -> usize {
        self.topology.n_leaves()
    }

    /// Total branch length `Σ k t_k`.
    pub fn total_length(&self) -> f64 {
        let n = self.n_leaves();
        self.times
            .iter()
            .enumerate()
            .map(|(i, t)| (n - i) as f64 * t)
            .sum()
    }

    /// Every branch except the (absent) one above the root.
    pub fn branches(&self) -> Vec<Branch> {
        let merges = self.topology.merges();
        let clades = self.topology.clades();
        let mut at = Vec::with_capacity(merges.len());
        let mut clock = 0.0;
        for t in &self.times {
            clock += t;
            at.push(clock);
        }
        let mut out = Vec::with_capacity(2 * merges.len());
        for (step, &(a, b)) in merges.iter().enumerate() {
            for x in [a, b] {
                let (start, leaves) = match x {
                    Lineage::Leaf(i) => (0.0, vec![i]),
                    Lineage::Internal(r) => (at[r as usize], clades[r as usize].clone()),
                };
                out.push(Branch {
                    lineage: x,
                    length: at[step] - start,
                    leaves,
                });
            }
        }
        out
    }
}

/// Draws a genealogy from the standard coalescent with constant population size.
pub fn simulate_genealogy<R: Rng + ?Sized>(n: usize, rng: &mut R) -> TimedGenealogy {
    assert!(n >= 2, "a genealogy needs at least 2 leaves");
    let mut lineages: Vec<Lineage> = (0..n as u32).map(Lineage::Leaf).collect();
    let mut merges = Vec::with_capacity(n - 1);
    let mut times = Vec::with_capacity(n - 1);
    for step in 0..n as u32 - 1 {
        let k = lineages.len();
        let rate = (k * (k - 1)) as f64 / 2.0;
        times.push(Exp::new(rate).expect("positive rate").sample(rng));
        let (i, j) = uniform_pair(rng, k);
        let b = lineages.swap_remove(j);
        let a = lineages.swap_remove(i);
        merges.push((a.min(b), a.max(b)));
        lineages.push(Lineage::Internal(step));
    }
    TimedGenealogy {
        topology: MergeSequence::from_trusted(n, merges),
        times,
    }
}

/// Leaf sets of `m` mutations placed uniformly over the genealogy's total length.
pub fn place_mutations<R: Rng + ?Sized>(
    genealogy: &TimedGenealogy,
    m: usize,
    rng: &mut R,
) -> Vec<Vec<u32>> {
    let branches = genealogy.branches();
    let total: f64 = branches.iter().map(|b| b.length).sum();
    (0..m)
        .map(|_| {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = &branches[branches.len() - 1];
            for b in &branches {
                if u < b.length {
                    chosen = b;
                    break;
                }
                u -= b.length;
            }
            chosen.leaves.clone()
        })
        .collect()
}

/// Incidence matrix with one column per mutation.
pub fn matrix_from_mutations(n: usize, mutations: &[Vec<u32>]) -> IncidenceMatrix {
    let mut rows = vec![vec![false; mutations.len()]; n];
    for (j, leaves) in mutations.iter().enumerate() {
        for &i in leaves {
            rows[i as usize][j] = true;
        }
    }
    IncidenceMatrix::new(rows, None, None).expect("n >= 2 and rectangular")
}

/// A simulated data set with the genealogy that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub matrix: IncidenceMatrix,
    pub genealogy: TimedGenealogy,
}

/// Draws a genealogy, `m ~ Poisson(mu L)` mutations, and the resulting matrix.
pub fn simulate_matrix<R: Rng + ?Sized>(n: usize, mu: f64, rng: &mut R) -> SimulatedData {
    assert!(
        mu >= 0.0 && mu.is_finite(),
        "mutation rate must be finite and non-negative"
    );
    let genealogy = simulate_genealogy(n, rng);
    let lambda = mu * genealogy.total_length();
    let m = if lambda > 0.0 {
        Poisson::new(lambda).expect("positive mean").sample(rng) as usize
    } else {
        0
    };
    let mutations = place_mutations(&genealogy, m, rng);
    SimulatedData {
        matrix: matrix_from_mutations(n, &mutations),
        genealogy,
    }
}

/// Sidecar describing a simulated matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationMeta {
    pub n: usize,
    pub mu: f64,
    pub seed: u64,
    /// Number of segregating sites.
    pub m: usize,
    /// Number of distinct haplotypes.
    pub k: usize,
    /// Total branch length of the genealogy.
    #[serde(rename = "L")]
    pub total_length: f64,
}

impl SimulationMeta {
    pub fn new(mu: f64, seed: u64, data: &SimulatedData) -> Self {
        Self {
            n: data.matrix.n_individuals(),
            mu,
            seed,
            m: data.matrix.n_sites(),
            k: deduplicate(&data.matrix).len(),
            total_length: data.genealogy.total_length(),
        }
    }
}
