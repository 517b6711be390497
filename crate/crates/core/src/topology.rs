//! Encodings of the four tree resolutions and the coefficients linking ranked
//! trees to their unranked projections.
//!
//! A ranked labeled tree is stored as its merge sequence; a ranked tree shape as
//! its sequence of singleton/vintage coalescences. Internal lineages in both are
//! named by the step that created them, counting from 0 at the first merge.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ln_binomial, Coefficient};

/// A lineage in a merge sequence: an input individual or the product of merge step `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lineage {
    Leaf(u32),
    Internal(u32),
}

/// Ranked labeled tree as the ordered list of pairwise merges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MergeSequence {
    n_leaves: usize,
    merges: Vec<(Lineage, Lineage)>,
}

impl MergeSequence {
    /// Validates that every step merges two currently extant lineages and that a
    /// single lineage remains at the end. Pairs are stored smaller-first.
    pub fn new(n_leaves: usize, merges: Vec<(Lineage, Lineage)>) -> Result<Self> {
        if n_leaves < 1 || merges.len() + 1 != n_leaves {
            return Err(Error::Invalid(format!(
                "{n_leaves} leaves need {} merges, got {}",
                n_leaves.saturating_sub(1),
                merges.len()
            )));
        }
        let mut leaf_used = vec![false; n_leaves];
        let mut internal_used = vec![false; merges.len()];
        let mut normalized = Vec::with_capacity(merges.len());
        for (t, &(a, b)) in merges.iter().enumerate() {
            for x in [a, b] {
                let slot = match x {
                    Lineage::Leaf(i) if (i as usize) < n_leaves => &mut leaf_used[i as usize],
                    Lineage::Internal(s) if (s as usize) < t => &mut internal_used[s as usize],
                    _ => {
                        return Err(Error::Invalid(format!(
                            "step {t} merges non-existent lineage {x:?}"
                        )))
                    }
                };
                if *slot {
                    return Err(Error::Invalid(format!(
                        "step {t} merges {x:?} a second time"
                    )));
                }
                *slot = true;
            }
            if a == b {
                return Err(Error::Invalid(format!("step {t} merges {a:?} with itself")));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        Ok(Self {
            n_leaves,
            merges: normalized,
        })
    }

    pub(crate) fn from_trusted(n_leaves: usize, merges: Vec<(Lineage, Lineage)>) -> Self {
        Self { n_leaves, merges }
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn merges(&self) -> &[(Lineage, Lineage)] {
        &self.merges
    }

    fn size_of(&self, sizes: &[u32], x: Lineage) -> u32 {
        match x {
            Lineage::Leaf(_) => 1,
            Lineage::Internal(t) => sizes[t as usize],
        }
    }

    /// Number of leaves below the lineage created at each step.
    pub fn clade_sizes(&self) -> Vec<u32> {
        let mut sizes = Vec::with_capacity(self.merges.len());
        for &(a, b) in &self.merges {
            let s = self.size_of(&sizes, a) + self.size_of(&sizes, b);
            sizes.push(s);
        }
        sizes
    }

    /// Sorted leaf indices below the lineage created at each step.
    pub fn clades(&self) -> Vec<Vec<u32>> {
        let mut clades: Vec<Vec<u32>> = Vec::with_capacity(self.merges.len());
        for &(a, b) in &self.merges {
            let mut c = Vec::new();
            for x in [a, b] {
                match x {
                    Lineage::Leaf(i) => c.push(i),
                    Lineage::Internal(t) => c.extend_from_slice(&clades[t as usize]),
                }
            }
            c.sort_unstable();
            clades.push(c);
        }
        clades
    }

    /// Forgets leaf labels, giving the ranked tree shape.
    pub fn to_tajima_chain(&self) -> TajimaChain {
        let events = self
            .merges
            .iter()
            .map(|&pair| match pair {
                (Lineage::Leaf(_), Lineage::Leaf(_)) => Coalescence::Cherry,
                (Lineage::Leaf(_), Lineage::Internal(r))
                | (Lineage::Internal(r), Lineage::Leaf(_)) => Coalescence::SingletonVintage(r),
                (Lineage::Internal(a), Lineage::Internal(b)) => {
                    Coalescence::Vintages(a.min(b), a.max(b))
                }
            })
            .collect();
        TajimaChain {
            n_leaves: self.n_leaves,
            events,
        }
    }
}

/// One step of a ranked tree shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Coalescence {
    /// Two singletons merge.
    Cherry,
    /// A singleton merges with the vintage created at the given step.
    SingletonVintage(u32),
    /// Two vintages merge; the smaller step comes first.
    Vintages(u32, u32),
}

/// Ranked tree shape as its jump-chain event sequence. Event `t` creates vintage `t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TajimaChain {
    n_leaves: usize,
    events: Vec<Coalescence>,
}

impl TajimaChain {
    /// Validates singleton/vintage bookkeeping along the chain.
    pub fn new(n_leaves: usize, events: Vec<Coalescence>) -> Result<Self> {
        if n_leaves < 1 || events.len() + 1 != n_leaves {
            return Err(Error::Invalid(
                "a chain over n leaves has n-1 events".into(),
            ));
        }
        let mut singletons = n_leaves as i64;
        let mut alive = vec![false; events.len()];
        for (t, e) in events.iter().enumerate() {
            let mut take = |r: u32| -> Result<()> {
                let r = r as usize;
                if r >= t || !alive[r] {
                    return Err(Error::Invalid(format!(
                        "event {t} uses unavailable vintage {r}"
                    )));
                }
                alive[r] = false;
                Ok(())
            };
            match *e {
                Coalescence::Cherry => singletons -= 2,
                Coalescence::SingletonVintage(r) => {
                    singletons -= 1;
                    take(r)?;
                }
                Coalescence::Vintages(a, b) => {
                    if a >= b {
                        return Err(Error::Invalid(format!(
                            "event {t} vintages must be increasing"
                        )));
                    }
                    take(a)?;
                    take(b)?;
                }
            }
            if singletons < 0 {
                return Err(Error::Invalid(format!("event {t} runs out of singletons")));
            }
            alive[t] = true;
        }
        if singletons != 0 {
            return Err(Error::Invalid("chain leaves singletons unmerged".into()));
        }
        Ok(Self { n_leaves, events })
    }

    pub(crate) fn from_trusted(n_leaves: usize, events: Vec<Coalescence>) -> Self {
        Self { n_leaves, events }
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn events(&self) -> &[Coalescence] {
        &self.events
    }

    /// Number of cherry events.
    pub fn cherries(&self) -> usize {
        self.events
            .iter()
            .filter(|e| **e == Coalescence::Cherry)
            .count()
    }

    /// Leaf counts below each vintage.
    pub fn clade_sizes(&self) -> Vec<u32> {
        let mut sizes: Vec<u32> = Vec::with_capacity(self.events.len());
        for e in &self.events {
            let s = match *e {
                Coalescence::Cherry => 2,
                Coalescence::SingletonVintage(r) => 1 + sizes[r as usize],
                Coalescence::Vintages(a, b) => sizes[a as usize] + sizes[b as usize],
            };
            sizes.push(s);
        }
        sizes
    }

    /// The ranked shape of the clade under vintage `v`, with its internal events
    /// renumbered from zero. Two clades are the same ranked shape iff codes match.
    pub fn ranked_clade_code(&self, v: u32) -> Vec<Coalescence> {
        let mut members = Vec::new();
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            members.push(x);
            match self.events[x as usize] {
                Coalescence::Cherry => {}
                Coalescence::SingletonVintage(r) => stack.push(r),
                Coalescence::Vintages(a, b) => stack.extend([a, b]),
            }
        }
        members.sort_unstable();
        let rank: HashMap<u32, u32> = members
            .iter()
            .enumerate()
            .map(|(i, &m)| (m, i as u32))
            .collect();
        members
            .iter()
            .map(|&m| match self.events[m as usize] {
                Coalescence::Cherry => Coalescence::Cherry,
                Coalescence::SingletonVintage(r) => Coalescence::SingletonVintage(rank[&r]),
                Coalescence::Vintages(a, b) => Coalescence::Vintages(rank[&a], rank[&b]),
            })
            .collect()
    }
}

impl fmt::Display for TajimaChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, e) in self.events.iter().enumerate() {
            if t > 0 {
                f.write_str(" ")?;
            }
            match e {
                Coalescence::Cherry => write!(f, "C")?,
                Coalescence::SingletonVintage(r) => write!(f, "S{r}")?,
                Coalescence::Vintages(a, b) => write!(f, "V{a},{b}")?,
            }
        }
        Ok(())
    }
}

/// Result of forgetting the ranking of a ranked tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Canonical nested-parenthesis encoding of the unranked tree.
    pub encoding: String,
    /// How many ranked trees share this unranked tree.
    pub coefficient: Coefficient,
}

fn interleavings(a: u32, b: u32) -> (Option<u128>, f64) {
    let (n, k) = (u64::from(a + b - 2), u64::from(a - 1));
    (crate::numeric::binomial_u128(n, k), ln_binomial(n, k))
}

/// Canonical labeled tree (children ordered by smallest leaf label) and the number
/// of rankings it admits: the product over merges of the ways to interleave the
/// two merging clades' internal events.
pub fn project_to_labeled(g: &MergeSequence, labels: &[String]) -> Projection {
    let mut enc: Vec<(String, String)> = Vec::with_capacity(g.merges.len()); // (encoding, min label)
    let leaf = |i: u32| {
        labels
            .get(i as usize)
            .cloned()
            .unwrap_or_else(|| i.to_string())
    };
    for &(a, b) in &g.merges {
        let mut parts: Vec<(String, String)> = [a, b]
            .iter()
            .map(|&x| match x {
                Lineage::Leaf(i) => (leaf(i), leaf(i)),
                Lineage::Internal(t) => enc[t as usize].clone(),
            })
            .collect();
        parts.sort_by(|x, y| x.1.cmp(&y.1));
        let min = parts[0].1.clone();
        enc.push((format!("({},{})", parts[0].0, parts[1].0), min));
    }
    let encoding = match enc.pop() {
        Some((e, _)) => e,
        None => leaf(0),
    };
    Projection {
        encoding,
        coefficient: labeled_coefficient(g),
    }
}

/// Number of ranked labeled trees sharing `g`'s unranked labeled tree.
pub fn labeled_coefficient(g: &MergeSequence) -> Coefficient {
    let sizes = g.clade_sizes();
    g.merges.iter().fold(Coefficient::one(), |c, &(a, b)| {
        let (exact, ln) = interleavings(g.size_of(&sizes, a), g.size_of(&sizes, b));
        c.times(exact, ln)
    })
}

/// Interned unranked shape identifiers for every vintage of a chain (leaf = 0).
fn shape_ids(chain: &TajimaChain) -> Vec<u32> {
    let mut table: HashMap<(u32, u32), u32> = HashMap::new();
    let mut ids: Vec<u32> = Vec::with_capacity(chain.events.len());
    for e in &chain.events {
        let (a, b) = match *e {
            Coalescence::Cherry => (0, 0),
            Coalescence::SingletonVintage(r) => (0, ids[r as usize]),
            Coalescence::Vintages(x, y) => (ids[x as usize], ids[y as usize]),
        };
        let key = (a.min(b), a.max(b));
        let next = table.len() as u32 + 1;
        ids.push(*table.entry(key).or_insert(next));
    }
    ids
}

/// Whether the clades under vintages `a` and `b` have the same unranked shape.
pub fn same_unranked_shape(chain: &TajimaChain, a: u32, b: u32) -> bool {
    let ids = shape_ids(chain);
    ids[a as usize] == ids[b as usize]
}

/// Canonical tree shape (children sorted by encoding) and the number of ranked
/// shapes projecting onto it.
pub fn project_to_shape(chain: &TajimaChain) -> Projection {
    let mut enc: Vec<String> = Vec::with_capacity(chain.events.len());
    for e in &chain.events {
        let (a, b) = match *e {
            Coalescence::Cherry => ("x", "x"),
            Coalescence::SingletonVintage(r) => ("x", enc[r as usize].as_str()),
            Coalescence::Vintages(x, y) => (enc[x as usize].as_str(), enc[y as usize].as_str()),
        };
        let merged = if a <= b {
            format!("({a},{b})")
        } else {
            format!("({b},{a})")
        };
        enc.push(merged);
    }
    Projection {
        encoding: enc.pop().unwrap_or_else(|| "x".to_string()),
        coefficient: shape_coefficient(chain),
    }
}

/// Number of ranked tree shapes sharing `chain`'s unranked shape.
///
/// Each merge contributes the interleavings of the two clades' internal events,
/// halved when the two clades are identical non-trivial shapes.
pub fn shape_coefficient(chain: &TajimaChain) -> Coefficient {
    let sizes = chain.clade_sizes();
    let ids = shape_ids(chain);
    let mut coefficient = Coefficient::one();
    let mut halvings = 0u32;
    for e in &chain.events {
        let (sa, sb) = match *e {
            Coalescence::Cherry => (1, 1),
            Coalescence::SingletonVintage(r) => (1, sizes[r as usize]),
            Coalescence::Vintages(a, b) => {
                if ids[a as usize] == ids[b as usize] {
                    halvings += 1;
                }
                (sizes[a as usize], sizes[b as usize])
            }
        };
        let (exact, ln) = interleavings(sa, sb);
        coefficient = coefficient.times(exact, ln);
    }
    coefficient.halved(halvings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Coalescence::*;
    use Lineage::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n)
            .map(|i| ((b'a' + i as u8) as char).to_string())
            .collect()
    }

    #[test]
    fn balanced_four_leaf_tree_has_two_rankings() {
        let g = MergeSequence::new(
            4,
            vec![
                (Leaf(0), Leaf(1)),
                (Leaf(2), Leaf(3)),
                (Internal(0), Internal(1)),
            ],
        )
        .unwrap();
        let p = project_to_labeled(&g, &labels(4));
        assert_eq!(p.encoding, "((a,b),(c,d))");
        assert_eq!(p.coefficient.exact(), Some(2));
        let shape = project_to_shape(&g.to_tajima_chain());
        assert_eq!(shape.encoding, "((x,x),(x,x))");
        assert_eq!(shape.coefficient.exact(), Some(1));
    }

    #[test]
    fn caterpillars_have_one_ranking() {
        for n in 2..9u32 {
            let mut merges = vec![(Leaf(0), Leaf(1))];
            for t in 1..n - 1 {
                merges.push((Leaf(t + 1), Internal(t - 1)));
            }
            let g = MergeSequence::new(n as usize, merges).unwrap();
            assert_eq!(
                project_to_labeled(&g, &labels(n as usize))
                    .coefficient
                    .exact(),
                Some(1)
            );
            assert_eq!(
                project_to_shape(&g.to_tajima_chain()).coefficient.exact(),
                Some(1)
            );
        }
    }

    #[test]
    fn labeled_encoding_ignores_merge_order() {
        let g1 = MergeSequence::new(
            4,
            vec![
                (Leaf(0), Leaf(1)),
                (Leaf(2), Leaf(3)),
                (Internal(0), Internal(1)),
            ],
        )
        .unwrap();
        let g2 = MergeSequence::new(
            4,
            vec![
                (Leaf(3), Leaf(2)),
                (Leaf(1), Leaf(0)),
                (Internal(1), Internal(0)),
            ],
        )
        .unwrap();
        let l = labels(4);
        assert_eq!(
            project_to_labeled(&g1, &l).encoding,
            project_to_labeled(&g2, &l).encoding
        );
        assert_ne!(
            g1.to_tajima_chain(),
            TajimaChain::new(4, vec![Cherry, SingletonVintage(0), SingletonVintage(1)]).unwrap()
        );
        assert_eq!(g1.to_tajima_chain(), g2.to_tajima_chain());
    }

    #[test]
    fn rejects_malformed_sequences() {
        assert!(MergeSequence::new(3, vec![(Leaf(0), Leaf(1)), (Leaf(0), Leaf(2))]).is_err());
        assert!(MergeSequence::new(3, vec![(Leaf(0), Leaf(1)), (Leaf(2), Internal(1))]).is_err());
        assert!(MergeSequence::new(3, vec![(Leaf(0), Leaf(1))]).is_err());
        assert!(TajimaChain::new(3, vec![Cherry, Cherry]).is_err());
        assert!(TajimaChain::new(4, vec![Cherry, Cherry, Vintages(1, 0)]).is_err());
        assert!(
            TajimaChain::new(4, vec![Cherry, SingletonVintage(0), SingletonVintage(0)]).is_err()
        );
        assert!(TajimaChain::new(4, vec![Cherry, Cherry, Vintages(0, 1)]).is_ok());
    }

    #[test]
    fn ranked_clade_codes_renumber() {
        // Two cherries joined, twice, then joined at the root.
        let chain = TajimaChain::new(
            8,
            vec![
                Cherry,
                Cherry,
                Cherry,
                Vintages(0, 1),
                Cherry,
                Vintages(2, 4),
                Vintages(3, 5),
            ],
        )
        .unwrap();
        assert_eq!(chain.ranked_clade_code(3), chain.ranked_clade_code(5));
        assert_eq!(
            chain.ranked_clade_code(3),
            vec![Cherry, Cherry, Vintages(0, 1)]
        );
        assert!(same_unranked_shape(&chain, 3, 5));
        assert!(!same_unranked_shape(&chain, 0, 3));
        // ((2 choose... ) root: C(6,3)=20 halved -> 10, each side 2 halved -> 1.
        assert_eq!(project_to_shape(&chain).coefficient.exact(), Some(10));
    }
}
