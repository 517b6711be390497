//! Sequential sampler for ranked labeled trees compatible with a Kingman phylogeny.
//!
//! At every step a node holding at least two particles is picked with probability
//! proportional to its particle count, and a uniform pair inside it coalesces. A
//! node whose subtree has been reduced to a single particle hands that particle to
//! its parent.

use rand::Rng;

use crate::numeric::ln_pairs;
use crate::phylogeny::KingmanPhylogeny;
use crate::topology::{Lineage, MergeSequence};

/// One sampled topology with the phylogeny nodes visited and its proposal log-probability.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDraw {
    pub topology: MergeSequence,
    pub node_sequence: Vec<usize>,
    /// Natural log of the proposal probability `q(g)`.
    pub log_q: f64,
}

/// Mutable per-draw particle placement over a shared phylogeny.
#[derive(Debug, Clone)]
pub(crate) struct KingmanFrontier<'a> {
    kp: &'a KingmanPhylogeny,
    pub(crate) particles: Vec<Vec<Lineage>>,
    /// Children whose subtree has not yet collapsed into a single promoted particle.
    pending: Vec<usize>,
    pub(crate) total: u32,
    pub(crate) step: u32,
}

impl<'a> KingmanFrontier<'a> {
    pub(crate) fn new(kp: &'a KingmanPhylogeny) -> Self {
        let tree = kp.tree();
        let particles = (0..tree.len())
            .map(|v| {
                kp.particles(v)
                    .iter()
                    .map(|&i| Lineage::Leaf(i as u32))
                    .collect()
            })
            .collect();
        let pending = (0..tree.len()).map(|v| tree.children(v).len()).collect();
        let mut f = Self {
            kp,
            particles,
            pending,
            total: kp.n_individuals() as u32,
            step: 0,
        };
        for v in tree.post_order() {
            f.settle(v);
        }
        f
    }

    /// Promotes the last particle of every finished node up the tree.
    fn settle(&mut self, mut v: usize) {
        let tree = self.kp.tree();
        while let Some(p) = tree.parent(v) {
            if self.particles[v].len() != 1 || self.pending[v] != 0 {
                break;
            }
            let x = self.particles[v].pop().expect("one particle");
            self.particles[p].push(x);
            self.pending[v] = usize::MAX;
            self.pending[p] -= 1;
            v = p;
        }
    }

    pub(crate) fn is_done(&self) -> bool {
        self.total == 1
    }

    /// Sum of particle counts over nodes holding at least two.
    pub(crate) fn active_weight(&self) -> u32 {
        self.particles
            .iter()
            .map(|p| p.len() as u32)
            .filter(|&c| c >= 2)
            .sum()
    }

    /// Merges particles `i` and `j` of node `v`, returning the merged pair.
    pub(crate) fn merge(&mut self, v: usize, i: usize, j: usize) -> (Lineage, Lineage) {
        let (lo, hi) = (i.min(j), i.max(j));
        let b = self.particles[v].swap_remove(hi);
        let a = self.particles[v].swap_remove(lo);
        self.particles[v].push(Lineage::Internal(self.step));
        self.step += 1;
        self.total -= 1;
        self.settle(v);
        (a.min(b), a.max(b))
    }

    /// Node currently holding lineage `x`, if any.
    pub(crate) fn locate(&self, x: Lineage) -> Option<(usize, usize)> {
        self.particles
            .iter()
            .enumerate()
            .find_map(|(v, ps)| ps.iter().position(|&y| y == x).map(|i| (v, i)))
    }
}

/// Uniform index pair `i < j` among `m` items.
pub(crate) fn uniform_pair<R: Rng + ?Sized>(rng: &mut R, m: usize) -> (usize, usize) {
    let i = rng.random_range(0..m);
    let mut j = rng.random_range(0..m - 1);
    if j >= i {
        j += 1;
    }
    (i.min(j), i.max(j))
}

/// Index chosen with probability proportional to `weights`, given their total.
pub(crate) fn weighted_index<R: Rng + ?Sized>(
    rng: &mut R,
    weights: impl Iterator<Item = u32>,
    total: u32,
) -> usize {
    let mut u = rng.random_range(0..total);
    for (i, w) in weights.enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    unreachable!("weights sum to total")
}

/// Draws one compatible ranked labeled tree and its proposal probability.
pub fn sample_kingman<R: Rng + ?Sized>(kp: &KingmanPhylogeny, rng: &mut R) -> SampleDraw {
    let n = kp.n_individuals();
    let mut f = KingmanFrontier::new(kp);
    let mut merges = Vec::with_capacity(n - 1);
    let mut nodes = Vec::with_capacity(n - 1);
    let mut log_q = 0.0;
    while !f.is_done() {
        let total = f.active_weight();
        let v = weighted_index(
            rng,
            f.particles
                .iter()
                .map(|p| if p.len() >= 2 { p.len() as u32 } else { 0 }),
            total,
        );
        let m = f.particles[v].len() as u32;
        log_q += f64::from(m).ln() - f64::from(total).ln() - ln_pairs(m);
        let (i, j) = uniform_pair(rng, m as usize);
        merges.push(f.merge(v, i, j));
        nodes.push(v);
    }
    SampleDraw {
        topology: MergeSequence::from_trusted(n, merges),
        node_sequence: nodes,
        log_q,
    }
}

/// Replays a merge sequence through the sampler, returning the node sequence and
/// `log q(g)`, or `None` if the sampler could never produce it.
pub fn replay_kingman(kp: &KingmanPhylogeny, g: &MergeSequence) -> Option<(Vec<usize>, f64)> {
    if g.n_leaves() != kp.n_individuals() {
        return None;
    }
    let mut f = KingmanFrontier::new(kp);
    let mut nodes = Vec::with_capacity(g.merges().len());
    let mut log_q = 0.0;
    for &(a, b) in g.merges() {
        let (va, ia) = f.locate(a)?;
        let (vb, ib) = f.locate(b)?;
        if va != vb {
            return None;
        }
        let m = f.particles[va].len() as u32;
        let total = f.active_weight();
        log_q += f64::from(m).ln() - f64::from(total).ln() - ln_pairs(m);
        f.merge(va, ia, ib);
        nodes.push(va);
    }
    Some((nodes, log_q))
}

/// True iff every phylogeny node's descendant individuals form a clade of `g`.
pub fn is_compatible(g: &MergeSequence, kp: &KingmanPhylogeny) -> bool {
    if g.n_leaves() != kp.n_individuals() {
        return false;
    }
    let clades: std::collections::HashSet<Vec<u32>> = g.clades().into_iter().collect();
    kp.descendant_sets().into_iter().all(|set| {
        set.len() <= 1 || clades.contains(&set.iter().map(|&i| i as u32).collect::<Vec<_>>())
    })
}
