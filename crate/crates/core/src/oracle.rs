//! Exact references: brute-force enumeration of compatible topologies for small
//! instances, closed-form counts for the unconstrained case, and exact proposal
//! probabilities for distributional tests.

use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::estimator::Resolution;
use crate::kingman::KingmanFrontier;
use crate::numeric::{log_add_exp, Coefficient};
use crate::phylogeny::{KingmanPhylogeny, TajimaPhylogeny};
use crate::tajima::TajimaFrontier;
use crate::topology::{
    project_to_labeled, project_to_shape, Coalescence, Lineage, MergeSequence, TajimaChain,
};

/// Default cap on complete sequences visited by the enumerators.
pub const DEFAULT_ENUM_BUDGET: u64 = 10_000_000;

/// Exact number of compatible topologies at each resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactCounts {
    pub kingman: BigUint,
    pub tajima: BigUint,
    pub labeled: BigUint,
    pub shape: BigUint,
    /// Canonical labeled-tree encodings, sorted, when produced by enumeration.
    pub enumerated_trees: Option<Vec<String>>,
}

impl ExactCounts {
    pub fn get(&self, resolution: Resolution) -> &BigUint {
        match resolution {
            Resolution::Kingman => &self.kingman,
            Resolution::Tajima => &self.tajima,
            Resolution::Labeled => &self.labeled,
            Resolution::Shape => &self.shape,
        }
    }

    fn from_u64(k: u64, t: u64, l: u64, s: u64) -> Self {
        Self {
            kingman: k.into(),
            tajima: t.into(),
            labeled: l.into(),
            shape: s.into(),
            enumerated_trees: None,
        }
    }
}

/// Everything collected by one exhaustive pass over the compatible merge sequences.
#[derive(Debug, Clone, Default)]
pub struct CompatibleSets {
    pub kingman: u64,
    /// Distinct labeled trees and their ranking multiplicities.
    pub labeled: HashMap<String, Coefficient>,
    pub chains: HashSet<TajimaChain>,
    /// Distinct shapes and their ranking multiplicities.
    pub shapes: HashMap<String, Coefficient>,
}

impl CompatibleSets {
    pub fn counts(&self) -> ExactCounts {
        let mut trees: Vec<String> = self.labeled.keys().cloned().collect();
        trees.sort_unstable();
        ExactCounts {
            enumerated_trees: Some(trees),
            ..ExactCounts::from_u64(
                self.kingman,
                self.chains.len() as u64,
                self.labeled.len() as u64,
                self.shapes.len() as u64,
            )
        }
    }
}

/// Calls `visit` on every compatible merge sequence with its proposal log-probability.
fn for_each_kingman<F>(kp: &KingmanPhylogeny, budget: u64, mut visit: F) -> Result<u64>
where
    F: FnMut(&[(Lineage, Lineage)], f64),
{
    fn walk<F: FnMut(&[(Lineage, Lineage)], f64)>(
        f: &KingmanFrontier<'_>,
        merges: &mut Vec<(Lineage, Lineage)>,
        log_q: f64,
        seen: &mut u64,
        budget: u64,
        visit: &mut F,
    ) -> Result<()> {
        if f.is_done() {
            *seen += 1;
            if *seen > budget {
                return Err(Error::BudgetExceeded { budget });
            }
            visit(merges, log_q);
            return Ok(());
        }
        let total = f64::from(f.active_weight());
        for (v, ps) in f.particles.iter().enumerate() {
            let m = ps.len();
            if m < 2 {
                continue;
            }
            let step = (m as f64).ln() - total.ln() - crate::numeric::ln_pairs(m as u32);
            for i in 0..m {
                for j in i + 1..m {
                    let mut next = f.clone();
                    merges.push(next.merge(v, i, j));
                    walk(&next, merges, log_q + step, seen, budget, visit)?;
                    merges.pop();
                }
            }
        }
        Ok(())
    }
    let mut seen = 0;
    walk(
        &KingmanFrontier::new(kp),
        &mut Vec::new(),
        0.0,
        &mut seen,
        budget,
        &mut visit,
    )?;
    Ok(seen)
}

/// Enumerates every compatible ranked labeled tree and collects its projections.
pub fn enumerate_sets(kp: &KingmanPhylogeny, budget: u64) -> Result<CompatibleSets> {
    let n = kp.n_individuals();
    let mut sets = CompatibleSets::default();
    let mut shape_of: HashMap<TajimaChain, ()> = HashMap::new();
    // An unranked labeled tree is its set of clades; bitmasks make that cheap to hash.
    let mut clade_sets: HashSet<Vec<u128>> = HashSet::new();
    let mut masks: Vec<u128> = Vec::with_capacity(n);
    sets.kingman = for_each_kingman(kp, budget, |merges, _| {
        let g = MergeSequence::from_trusted(n, merges.to_vec());
        let fresh = if n <= 128 {
            masks.clear();
            for &(a, b) in merges {
                let bit = |x: Lineage| match x {
                    Lineage::Leaf(i) => 1u128 << i,
                    Lineage::Internal(t) => masks[t as usize],
                };
                let m = bit(a) | bit(b);
                masks.push(m);
            }
            let mut key = masks.clone();
            key.sort_unstable();
            clade_sets.insert(key)
        } else {
            true
        };
        if fresh {
            let lab = project_to_labeled(&g, kp.labels());
            sets.labeled.entry(lab.encoding).or_insert(lab.coefficient);
        }
        let chain = g.to_tajima_chain();
        if shape_of.insert(chain.clone(), ()).is_none() {
            let shape = project_to_shape(&chain);
            sets.shapes
                .entry(shape.encoding)
                .or_insert(shape.coefficient);
            sets.chains.insert(chain);
        }
    })?;
    Ok(sets)
}

/// Exact compatible counts at all four resolutions by exhaustive enumeration.
pub fn enumerate_compatible(kp: &KingmanPhylogeny, budget: u64) -> Result<ExactCounts> {
    if budget == 0 {
        return Err(Error::Config("enumeration budget must be positive".into()));
    }
    Ok(enumerate_sets(kp, budget)?.counts())
}

/// Exact Kingman proposal `log q(g)` for every compatible ranked labeled tree.
pub fn exact_q_kingman(kp: &KingmanPhylogeny, budget: u64) -> Result<HashMap<MergeSequence, f64>> {
    let n = kp.n_individuals();
    let mut out = HashMap::new();
    for_each_kingman(kp, budget, |merges, log_q| {
        out.insert(MergeSequence::from_trusted(n, merges.to_vec()), log_q);
    })?;
    Ok(out)
}

/// Exact Tajima proposal over all sampler paths.
#[derive(Debug, Clone, Default)]
pub struct TajimaExact {
    /// `log q(g)` per compatible ranked tree shape.
    pub log_q: HashMap<TajimaChain, f64>,
    /// Number of node orderings producing each chain.
    pub orderings: HashMap<TajimaChain, u128>,
    /// Σ over chains of `q(g)`; 1 up to rounding.
    pub total_probability: f64,
}

/// Enumerates every `(chain, node ordering)` path of the Tajima sampler.
pub fn exact_q_tajima(tp: &TajimaPhylogeny, budget: u64) -> Result<TajimaExact> {
    fn walk(
        f: &TajimaFrontier<'_>,
        events: &mut Vec<Coalescence>,
        log_q: f64,
        seen: &mut u64,
        budget: u64,
        out: &mut TajimaExact,
        n: usize,
    ) -> Result<()> {
        if f.is_done() {
            *seen += 1;
            if *seen > budget {
                return Err(Error::BudgetExceeded { budget });
            }
            let chain = TajimaChain::from_trusted(n, events.clone());
            let e = out.log_q.entry(chain.clone()).or_insert(f64::NEG_INFINITY);
            *e = log_add_exp(*e, log_q);
            *out.orderings.entry(chain).or_insert(0) += 1;
            return Ok(());
        }
        let weight = f.active_weight();
        for v in 0..f.size.len() {
            if f.size[v] < 2 {
                continue;
            }
            let vintages = f.vintages_at(v);
            let mut options = Vec::new();
            if f.alpha[v] >= 2 {
                options.push(Coalescence::Cherry);
            }
            if f.alpha[v] >= 1 {
                options.extend(vintages.iter().map(|&r| Coalescence::SingletonVintage(r)));
            }
            for (i, &a) in vintages.iter().enumerate() {
                options.extend(
                    vintages[i + 1..]
                        .iter()
                        .map(|&b| Coalescence::Vintages(a, b)),
                );
            }
            for e in options {
                let step = f.ln_prob(v, e, weight);
                let mut next = f.clone();
                next.apply(v, e);
                events.push(e);
                walk(&next, events, log_q + step, seen, budget, out, n)?;
                events.pop();
            }
        }
        Ok(())
    }
    let mut out = TajimaExact::default();
    let mut seen = 0;
    walk(
        &TajimaFrontier::new(tp),
        &mut Vec::new(),
        0.0,
        &mut seen,
        budget,
        &mut out,
        tp.n_individuals(),
    )?;
    out.total_probability = out.log_q.values().map(|l| l.exp()).sum();
    Ok(out)
}

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// Euler zigzag number `E_m` (alternating permutations) via the Seidel–Entringer triangle.
pub fn zigzag(m: usize) -> BigUint {
    let mut row = vec![BigUint::one()];
    for k in 1..=m {
        let mut next = Vec::with_capacity(k + 1);
        next.push(BigUint::zero());
        for j in 1..=k {
            let x = &next[j - 1] + &row[k - j];
            next.push(x);
        }
        row = next;
    }
    row.pop().expect("non-empty row")
}

/// Wedderburn–Etherington number: unranked unlabeled binary trees with `n` leaves.
pub fn wedderburn_etherington(n: usize) -> BigUint {
    let mut a: Vec<BigUint> = vec![BigUint::zero(), BigUint::one()];
    for m in 2..=n {
        let mut x = BigUint::zero();
        for i in 1..m.div_ceil(2) {
            x += &a[i] * &a[m - i];
        }
        if m % 2 == 0 {
            let h = &a[m / 2];
            x += h * (h + 1u32) / 2u32;
        }
        a.push(x);
    }
    a.swap_remove(n)
}

/// Unconstrained counts for `n` leaves.
pub fn closed_form_unconstrained(n: usize) -> Result<ExactCounts> {
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    let n64 = n as u64;
    let kingman = (factorial(n64) * factorial(n64 - 1)) >> (n - 1);
    let labeled = (1..=(2 * n64).saturating_sub(3))
        .step_by(2)
        .fold(BigUint::one(), |acc, k| acc * k);
    Ok(ExactCounts {
        kingman,
        tajima: zigzag(n - 1),
        labeled,
        shape: wedderburn_etherington(n),
        enumerated_trees: None,
    })
}

/// `ln P(g)` of any ranked labeled tree under the unconstrained Kingman jump chain.
pub fn ln_kingman_unconstrained_probability(n: usize) -> f64 {
    use statrs::function::factorial::ln_factorial;
    let n = n as u64;
    (n - 1) as f64 * std::f64::consts::LN_2 - ln_factorial(n) - ln_factorial(n - 1)
}

/// `ln P(g)` of a ranked tree shape with `cherries` cherries under the unconstrained chain.
pub fn ln_tajima_unconstrained_probability(n: usize, cherries: usize) -> f64 {
    (n as f64 - cherries as f64 - 1.0) * std::f64::consts::LN_2
        - statrs::function::factorial::ln_factorial(n as u64 - 1)
}

/// Every ranked tree shape on `n` leaves, by direct enumeration of chains.
pub fn all_ranked_shapes(n: usize) -> Vec<TajimaChain> {
    fn walk(
        n: usize,
        singletons: usize,
        alive: &mut Vec<u32>,
        events: &mut Vec<Coalescence>,
        out: &mut Vec<TajimaChain>,
    ) {
        if events.len() + 1 == n {
            out.push(TajimaChain::from_trusted(n, events.clone()));
            return;
        }
        let t = events.len() as u32;
        let mut options = Vec::new();
        if singletons >= 2 {
            options.push(Coalescence::Cherry);
        }
        if singletons >= 1 {
            options.extend(alive.iter().map(|&r| Coalescence::SingletonVintage(r)));
        }
        for (i, &a) in alive.iter().enumerate() {
            options.extend(alive[i + 1..].iter().map(|&b| Coalescence::Vintages(a, b)));
        }
        for e in options {
            let saved = alive.clone();
            let used = match e {
                Coalescence::Cherry => 2,
                Coalescence::SingletonVintage(r) => {
                    alive.retain(|&x| x != r);
                    1
                }
                Coalescence::Vintages(a, b) => {
                    alive.retain(|&x| x != a && x != b);
                    0
                }
            };
            alive.push(t);
            events.push(e);
            walk(n, singletons - used, alive, events, out);
            events.pop();
            *alive = saved;
        }
    }
    let mut out = Vec::new();
    if n >= 2 {
        walk(n, n, &mut Vec::new(), &mut Vec::new(), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(x: u64) -> BigUint {
        x.into()
    }

    fn three_clade() -> KingmanPhylogeny {
        KingmanPhylogeny::from_parts(
            vec![None, Some(0), Some(0), Some(0)],
            &[vec![], vec!["a"], vec!["b"], vec!["c", "d", "e", "f"]],
        )
        .unwrap()
    }

    #[test]
    fn closed_forms_small() {
        let c = closed_form_unconstrained(5).unwrap();
        assert_eq!(
            (c.kingman, c.tajima, c.labeled, c.shape),
            (big(180), big(5), big(105), big(3))
        );
        let c = closed_form_unconstrained(1).unwrap();
        assert_eq!(
            (c.kingman, c.tajima, c.labeled, c.shape),
            (big(1), big(1), big(1), big(1))
        );
        let we: Vec<BigUint> = (1..=11).map(wedderburn_etherington).collect();
        assert_eq!(we, [1u64, 1, 1, 2, 3, 6, 11, 23, 46, 98, 207].map(big));
        let zz: Vec<BigUint> = (0..=8).map(zigzag).collect();
        assert_eq!(zz, [1u64, 1, 1, 2, 5, 16, 61, 272, 1385].map(big));
    }

    #[test]
    fn closed_forms_at_thirty() {
        let c = closed_form_unconstrained(30).unwrap();
        let sig3 = |x: &BigUint| format!("{:.2e}", num_traits::ToPrimitive::to_f64(x).unwrap());
        assert_eq!(sig3(&c.kingman), "4.37e54");
        assert_eq!(sig3(&c.tajima), "2.31e25");
        assert_eq!(sig3(&c.labeled), "4.95e38");
        assert_eq!(sig3(&c.shape), "1.41e9");
    }

    #[test]
    fn oracle_matches_closed_form() {
        for n in 2..=7 {
            let kp = KingmanPhylogeny::unconstrained(n);
            let mut e = enumerate_compatible(&kp, DEFAULT_ENUM_BUDGET).unwrap();
            e.enumerated_trees = None;
            assert_eq!(e, closed_form_unconstrained(n).unwrap(), "n = {n}");
        }
    }

    #[test]
    fn projection_multiplicities_sum_to_ranked_counts() {
        for kp in [three_clade(), KingmanPhylogeny::unconstrained(6)] {
            let sets = enumerate_sets(&kp, DEFAULT_ENUM_BUDGET).unwrap();
            let lt: u128 = sets.labeled.values().map(|c| c.exact().unwrap()).sum();
            assert_eq!(lt, u128::from(sets.kingman));
            let ts: u128 = sets.shapes.values().map(|c| c.exact().unwrap()).sum();
            assert_eq!(ts, sets.chains.len() as u128);
        }
    }

    #[test]
    fn three_clade_quadruple() {
        let c = enumerate_compatible(&three_clade(), DEFAULT_ENUM_BUDGET).unwrap();
        // 18 rankings of the 4-clade, times 4 interleavings of the {a,b} cherry plus
        // 2 x 18 trees where a or b joins the finished clade first.
        assert_eq!(
            (c.kingman, c.tajima, c.labeled, c.shape),
            (big(108), big(10), big(45), big(4))
        );
    }

    #[test]
    fn shape_coefficient_counts_preimages() {
        for n in 2..=10 {
            let mut preimages: HashMap<String, (u128, u128)> = HashMap::new();
            for chain in all_ranked_shapes(n) {
                let p = project_to_shape(&chain);
                let e = preimages
                    .entry(p.encoding)
                    .or_insert((0, p.coefficient.exact().unwrap()));
                assert_eq!(e.1, p.coefficient.exact().unwrap());
                e.0 += 1;
            }
            for (shape, (count, coefficient)) in &preimages {
                assert_eq!(count, coefficient, "n = {n}, shape {shape}");
            }
            assert_eq!(BigUint::from(preimages.len()), wedderburn_etherington(n));
        }
    }

    #[test]
    fn kingman_probabilities_sum_to_one() {
        let q = exact_q_kingman(&three_clade(), DEFAULT_ENUM_BUDGET).unwrap();
        assert_eq!(q.len(), 108);
        let total: f64 = q.values().map(|l| l.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tajima_exact_identities() {
        let tp = TajimaPhylogeny::unconstrained(4);
        let ex = exact_q_tajima(&tp, DEFAULT_ENUM_BUDGET).unwrap();
        assert_eq!(ex.log_q.len(), 2);
        assert!((ex.total_probability - 1.0).abs() < 1e-12);
        for (chain, lq) in &ex.log_q {
            let expected = ln_tajima_unconstrained_probability(4, chain.cherries());
            assert!((lq - expected).abs() < 1e-12);
        }
        let tp = three_clade().to_tajima();
        let ex = exact_q_tajima(&tp, DEFAULT_ENUM_BUDGET).unwrap();
        assert_eq!(ex.log_q.len(), 10);
        assert!((ex.total_probability - 1.0).abs() < 1e-12);
        for (chain, lq) in &ex.log_q {
            let bt = crate::tajima::backtrack_chain(&tp, chain, 1_000_000).unwrap();
            assert_eq!(bt.orderings, ex.orderings[chain]);
            assert!((bt.log_q_total - lq).abs() < 1e-10 * lq.abs().max(1.0));
        }
    }
}
