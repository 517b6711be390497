//! Sequential sampler for ranked tree shapes compatible with a Tajima phylogeny,
//! and the backtracking sum over node orderings that turns a sampled path
//! probability `q(g, v)` into the marginal `q(g)`.
//!
//! Particles are unlabeled singletons or vintages (lineages named by the step that
//! created them). Several node orderings can produce the same chain, so the
//! marginal requires summing over every ordering the sampler could have taken.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kingman::{uniform_pair, weighted_index};
use crate::numeric::{ln_pairs, log_add_exp};
use crate::phylogeny::TajimaPhylogeny;
use crate::topology::{Coalescence, TajimaChain};

/// Default cap on partial states explored by [`backtrack_q`].
pub const DEFAULT_BACKTRACK_BUDGET: u64 = 100_000_000;

const DEAD: u32 = u32::MAX;

/// One sampled ranked tree shape.
#[derive(Debug, Clone, PartialEq)]
pub struct TajimaDraw {
    pub chain: TajimaChain,
    pub node_sequence: Vec<usize>,
    /// `log q(g, v)` of the sampled path.
    pub log_q_path: f64,
    /// `log q(g)`, filled in by [`backtrack_q`].
    pub log_q_total: Option<f64>,
}

/// Outcome of summing over all node orderings of a chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backtrack {
    pub log_q_total: f64,
    /// Number of distinct node orderings producing the chain (saturating).
    pub orderings: u128,
    /// Partial states expanded (memo hits excluded).
    pub explored: u64,
}

/// Per-draw singleton counts and vintage residency over a shared phylogeny.
#[derive(Debug, Clone)]
pub(crate) struct TajimaFrontier<'a> {
    tp: &'a TajimaPhylogeny,
    pub(crate) alpha: Vec<u32>,
    /// Singletons plus resident vintages at each node.
    pub(crate) size: Vec<u32>,
    pending: Vec<u32>,
    /// Node holding each vintage, or `DEAD` once merged.
    pub(crate) location: Vec<u32>,
    pub(crate) total: u32,
}

impl<'a> TajimaFrontier<'a> {
    pub(crate) fn new(tp: &'a TajimaPhylogeny) -> Self {
        let tree = tp.tree();
        let alpha: Vec<u32> = tp.counts().iter().map(|&c| c as u32).collect();
        let mut f = Self {
            tp,
            size: alpha.clone(),
            alpha,
            pending: (0..tree.len())
                .map(|v| tree.children(v).len() as u32)
                .collect(),
            location: Vec::with_capacity(tp.n_individuals()),
            total: tp.n_individuals() as u32,
        };
        for v in tree.post_order() {
            f.settle(v);
        }
        f
    }

    pub(crate) fn step(&self) -> u32 {
        self.location.len() as u32
    }

    pub(crate) fn is_done(&self) -> bool {
        self.total == 1
    }

    pub(crate) fn active_weight(&self) -> u32 {
        self.size.iter().filter(|&&s| s >= 2).sum()
    }

    fn settle(&mut self, mut v: usize) {
        let tree = self.tp.tree();
        while let Some(p) = tree.parent(v) {
            if self.size[v] != 1 || self.pending[v] != 0 {
                break;
            }
            if self.alpha[v] == 1 {
                self.alpha[v] = 0;
                self.alpha[p] += 1;
            } else {
                let r = self
                    .location
                    .iter()
                    .position(|&l| l == v as u32)
                    .expect("resident vintage");
                self.location[r] = p as u32;
            }
            self.size[v] = 0;
            self.pending[v] = DEAD;
            self.size[p] += 1;
            self.pending[p] -= 1;
            v = p;
        }
    }

    /// Vintages resident at `v`, oldest first.
    pub(crate) fn vintages_at(&self, v: usize) -> Vec<u32> {
        (0..self.location.len() as u32)
            .filter(|&r| self.location[r as usize] == v as u32)
            .collect()
    }

    /// Whether node `v` can host `event` right now.
    pub(crate) fn feasible(&self, v: usize, event: Coalescence) -> bool {
        if self.size[v] < 2 {
            return false;
        }
        let here = |r: u32| self.location.get(r as usize) == Some(&(v as u32));
        match event {
            Coalescence::Cherry => self.alpha[v] >= 2,
            Coalescence::SingletonVintage(r) => self.alpha[v] >= 1 && here(r),
            Coalescence::Vintages(a, b) => here(a) && here(b),
        }
    }

    /// `ln q(v) + ln q(event | v)`; the event must be feasible at `v`.
    pub(crate) fn ln_prob(&self, v: usize, event: Coalescence, active_weight: u32) -> f64 {
        let s = self.size[v];
        let selection = f64::from(s).ln() - f64::from(active_weight).ln();
        let ways = match event {
            Coalescence::Cherry => ln_pairs(self.alpha[v]),
            Coalescence::SingletonVintage(_) => f64::from(self.alpha[v]).ln(),
            Coalescence::Vintages(..) => 0.0,
        };
        selection + ways - ln_pairs(s)
    }

    pub(crate) fn apply(&mut self, v: usize, event: Coalescence) {
        match event {
            Coalescence::Cherry => self.alpha[v] -= 2,
            Coalescence::SingletonVintage(r) => {
                self.alpha[v] -= 1;
                self.location[r as usize] = DEAD;
            }
            Coalescence::Vintages(a, b) => {
                self.location[a as usize] = DEAD;
                self.location[b as usize] = DEAD;
            }
        }
        self.location.push(v as u32);
        self.size[v] -= 1;
        self.total -= 1;
        self.settle(v);
    }

    /// Nodes that could host `event`. Vintage events have at most one candidate.
    pub(crate) fn candidates(&self, event: Coalescence) -> Vec<usize> {
        let vintage_home = |r: u32| {
            self.location
                .get(r as usize)
                .copied()
                .filter(|&l| l != DEAD)
        };
        match event {
            Coalescence::Cherry => (0..self.size.len())
                .filter(|&v| self.feasible(v, event))
                .collect(),
            Coalescence::SingletonVintage(r) | Coalescence::Vintages(r, _) => vintage_home(r)
                .map(|l| l as usize)
                .filter(|&v| self.feasible(v, event))
                .into_iter()
                .collect(),
        }
    }

    /// Order-free description of the remaining work: the tree of unfinished nodes
    /// with their singleton counts and resident vintages, children sorted. States
    /// with equal keys have identical continuations.
    pub(crate) fn canonical_key(&self, order: &[usize]) -> Vec<u32> {
        let tree = self.tp.tree();
        let mut resident: Vec<Vec<u32>> = vec![Vec::new(); self.size.len()];
        for (r, &l) in self.location.iter().enumerate() {
            if l != DEAD {
                resident[l as usize].push(r as u32);
            }
        }
        let mut codes: Vec<Option<Vec<u32>>> = vec![None; self.size.len()];
        for &v in order {
            if self.pending[v] == DEAD {
                continue;
            }
            let mut kids: Vec<Vec<u32>> = tree
                .children(v)
                .iter()
                .filter_map(|&c| codes[c].take())
                .collect();
            kids.sort_unstable();
            let mut code = Vec::with_capacity(
                4 + resident[v].len() + kids.iter().map(Vec::len).sum::<usize>(),
            );
            code.push(self.alpha[v]);
            code.push(resident[v].len() as u32);
            code.extend_from_slice(&resident[v]);
            code.push(kids.len() as u32);
            for k in kids {
                code.extend(k);
            }
            codes[v] = Some(code);
        }
        let mut key = vec![self.step()];
        key.extend(codes[tree.root()].take().unwrap_or_default());
        key
    }
}

/// Draws one compatible ranked tree shape with its path probability `q(g, v)`.
pub fn sample_tajima<R: Rng + ?Sized>(tp: &TajimaPhylogeny, rng: &mut R) -> TajimaDraw {
    let n = tp.n_individuals();
    let mut f = TajimaFrontier::new(tp);
    let mut events = Vec::with_capacity(n - 1);
    let mut nodes = Vec::with_capacity(n - 1);
    let mut log_q = 0.0;
    while !f.is_done() {
        let total = f.active_weight();
        let v = weighted_index(
            rng,
            f.size.iter().map(|&s| if s >= 2 { s } else { 0 }),
            total,
        );
        let (i, j) = uniform_pair(rng, f.size[v] as usize);
        let alpha = f.alpha[v] as usize;
        let event = if j < alpha {
            Coalescence::Cherry
        } else {
            let vintages = f.vintages_at(v);
            if i < alpha {
                Coalescence::SingletonVintage(vintages[j - alpha])
            } else {
                Coalescence::Vintages(vintages[i - alpha], vintages[j - alpha])
            }
        };
        log_q += f.ln_prob(v, event, total);
        f.apply(v, event);
        events.push(event);
        nodes.push(v);
    }
    TajimaDraw {
        chain: TajimaChain::from_trusted(n, events),
        node_sequence: nodes,
        log_q_path: log_q,
        log_q_total: None,
    }
}

/// `log q(g, v)` for an explicit node ordering, or `None` if infeasible.
pub fn replay_tajima(tp: &TajimaPhylogeny, chain: &TajimaChain, nodes: &[usize]) -> Option<f64> {
    if chain.n_leaves() != tp.n_individuals() || nodes.len() != chain.events().len() {
        return None;
    }
    let mut f = TajimaFrontier::new(tp);
    let mut log_q = 0.0;
    for (&e, &v) in chain.events().iter().zip(nodes) {
        if v >= f.size.len() || !f.feasible(v, e) {
            return None;
        }
        log_q += f.ln_prob(v, e, f.active_weight());
        f.apply(v, e);
    }
    Some(log_q)
}

struct Search<'c> {
    events: &'c [Coalescence],
    order: Vec<usize>,
    /// Individuals below each node and its ancestors.
    path_sizes: Vec<Vec<u32>>,
    /// Sorted clade sizes of each vintage and its ancestors in the chain.
    lineage_sizes: Vec<Vec<u32>>,
    memo: HashMap<Vec<u32>, (f64, u128)>,
    explored: u64,
    budget: u64,
}

impl Search<'_> {
    fn visit(&mut self, f: &TajimaFrontier<'_>) -> Result<(f64, u128)> {
        let t = f.step() as usize;
        if t == self.events.len() {
            return Ok((0.0, 1));
        }
        let key = f.canonical_key(&self.order);
        if let Some(&hit) = self.memo.get(&key) {
            return Ok(hit);
        }
        self.explored += 1;
        if self.explored > self.budget {
            return Err(Error::SearchBudgetExceeded {
                budget: self.budget,
            });
        }
        let event = self.events[t];
        let weight = f.active_weight();
        let mut acc = (f64::NEG_INFINITY, 0u128);
        for v in f.candidates(event) {
            // Every subtree above v ends as a single clade, which must be an
            // ancestor of the vintage created here.
            if !self.path_sizes[v]
                .iter()
                .all(|d| self.lineage_sizes[t].binary_search(d).is_ok())
            {
                continue;
            }
            let step = f.ln_prob(v, event, weight);
            let mut next = f.clone();
            next.apply(v, event);
            let (ln_rest, count) = self.visit(&next)?;
            acc.0 = log_add_exp(acc.0, step + ln_rest);
            acc.1 = acc.1.saturating_add(count);
        }
        self.memo.insert(key, acc);
        Ok(acc)
    }
}

/// Sums `q(g, v')` over every node ordering `v'` yielding `chain`.
///
/// Depth-first over steps: cherries may occur at any node with two singletons,
/// vintage events only where their operands reside. A vintage created at node `v`
/// must have, for `v` and each of its ancestors, an ancestor clade whose size is
/// that node's subtree size; placements failing this are pruned. Partial states are
/// memoized by their canonical remaining-work key.
pub fn backtrack_chain(
    tp: &TajimaPhylogeny,
    chain: &TajimaChain,
    budget: u64,
) -> Result<Backtrack> {
    if chain.n_leaves() != tp.n_individuals() {
        return Err(Error::Invalid(
            "chain and phylogeny disagree on sample size".into(),
        ));
    }
    let tree = tp.tree();
    let order = tree.post_order();
    let mut below: Vec<u32> = tp.counts().iter().map(|&c| c as u32).collect();
    for &v in &order {
        if let Some(p) = tree.parent(v) {
            below[p] += below[v];
        }
    }
    let path_sizes = (0..tree.len())
        .map(|v| {
            std::iter::successors(Some(v), |&w| tree.parent(w))
                .map(|w| below[w])
                .collect()
        })
        .collect();
    let events = chain.events();
    let sizes = chain.clade_sizes();
    let mut consumer = vec![None; events.len()];
    for (t, e) in events.iter().enumerate() {
        match *e {
            Coalescence::Cherry => {}
            Coalescence::SingletonVintage(r) => consumer[r as usize] = Some(t),
            Coalescence::Vintages(a, b) => {
                consumer[a as usize] = Some(t);
                consumer[b as usize] = Some(t);
            }
        }
    }
    let lineage_sizes = (0..events.len())
        .map(|t| {
            let mut v: Vec<u32> = std::iter::successors(Some(t), |&r| consumer[r])
                .map(|r| sizes[r])
                .collect();
            v.sort_unstable();
            v
        })
        .collect();
    let mut search = Search {
        events,
        order,
        path_sizes,
        lineage_sizes,
        memo: HashMap::new(),
        explored: 0,
        budget,
    };
    let (log_q_total, orderings) = search.visit(&TajimaFrontier::new(tp))?;
    Ok(Backtrack {
        log_q_total,
        orderings,
        explored: search.explored,
    })
}

/// Completes a draw with its marginal `log q(g)`; the sampled ordering must be among
/// those found.
pub fn backtrack_q(tp: &TajimaPhylogeny, draw: &mut TajimaDraw, budget: u64) -> Result<Backtrack> {
    let bt = backtrack_chain(tp, &draw.chain, budget)?;
    let replayed = replay_tajima(tp, &draw.chain, &draw.node_sequence);
    assert!(
        replayed
            .is_some_and(|lq| (lq - draw.log_q_path).abs() < 1e-9 && lq <= bt.log_q_total + 1e-9),
        "sampled ordering was not rediscovered by backtracking"
    );
    // A unique ordering is the sampled one; keep its value bit-for-bit.
    draw.log_q_total = Some(if bt.orderings == 1 {
        draw.log_q_path
    } else {
        bt.log_q_total.max(draw.log_q_path)
    });
    Ok(bt)
}
