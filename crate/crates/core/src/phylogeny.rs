//! Perfect phylogeny construction and the label-set / frequency reductions that
//! drive the two samplers.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::incidence::{sets_conflict, HaplotypeData, RowSet};

/// Rooted tree stored as parent links plus ordered child lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedTree {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
}

impl RootedTree {
    /// Validates that `parent` describes a single rooted, connected, acyclic tree.
    pub fn from_parents(parent: Vec<Option<usize>>) -> Result<Self> {
        let len = parent.len();
        let roots: Vec<usize> = (0..len).filter(|&v| parent[v].is_none()).collect();
        let [root] = roots[..] else {
            return Err(Error::Invalid(format!(
                "expected exactly one root, found {}",
                roots.len()
            )));
        };
        let mut children = vec![Vec::new(); len];
        for (v, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= len || p == v {
                    return Err(Error::Invalid(format!("node {v} has invalid parent {p}")));
                }
                children[p].push(v);
            }
        }
        let tree = Self {
            parent,
            children,
            root,
        };
        if tree.post_order().len() != len {
            return Err(Error::Invalid("parent links contain a cycle".into()));
        }
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.children[v].is_empty()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.is_leaf(v)).collect()
    }

    /// Nodes reachable from the root, children before parents.
    pub fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![(self.root, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                out.push(v);
            } else {
                stack.push((v, true));
                for &c in self.children[v].iter().rev() {
                    stack.push((c, false));
                }
            }
            if out.len() > self.len() {
                break;
            }
        }
        out
    }
}

/// Gusfield-style perfect phylogeny: each non-zero site labels exactly one edge
/// and each haplotype labels one leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerfectPhylogeny {
    tree: RootedTree,
    /// Sites on the edge entering each node (empty for the root).
    edge_sites: Vec<Vec<String>>,
    leaf_haplotype: Vec<Option<usize>>,
}

/// Builds the unique perfect phylogeny for conflict-free haplotype data.
///
/// Distinct non-zero carrier sets are sorted by decreasing size, which places every
/// set after all of its supersets; each set hangs below its smallest superset and
/// each haplotype is threaded to the smallest set containing it.
pub fn build_perfect_phylogeny(data: &HaplotypeData) -> Result<PerfectPhylogeny> {
    let haps = data.haplotypes();
    let m = data.site_labels().len();
    let columns: Vec<RowSet> = (0..m).map(|j| RowSet::from_column(haps, j)).collect();
    for i in 0..m {
        for j in i + 1..m {
            if sets_conflict(&columns[i], &columns[j]) {
                return Err(Error::IsmViolation {
                    first: data.site_labels()[i].clone(),
                    second: data.site_labels()[j].clone(),
                });
            }
        }
    }

    // Group identical non-empty columns; each group becomes one edge.
    let mut group_of: HashMap<&RowSet, usize> = HashMap::new();
    let mut groups: Vec<(RowSet, Vec<usize>)> = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        if col.len() == 0 {
            continue;
        }
        match group_of.get(col) {
            Some(&g) => groups[g].1.push(j),
            None => {
                group_of.insert(col, groups.len());
                groups.push((col.clone(), vec![j]));
            }
        }
    }
    groups.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.1[0].cmp(&b.1[0])));

    let d = groups.len();
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut edge_sites: Vec<Vec<String>> = vec![Vec::new()];
    for (idx, (set, sites)) in groups.iter().enumerate() {
        let size = set.len();
        let p = (0..idx)
            .rev()
            .find(|&o| groups[o].0.intersection_len(set) == size)
            .map_or(0, |o| o + 1);
        parent.push(Some(p));
        edge_sites.push(
            sites
                .iter()
                .map(|&j| data.site_labels()[j].clone())
                .collect(),
        );
    }

    // Smallest carrier set containing each haplotype (root if none).
    let home: Vec<usize> = (0..haps.len())
        .map(|h| {
            (0..d)
                .rev()
                .find(|&g| groups[g].0.contains(h))
                .map_or(0, |g| g + 1)
        })
        .collect();
    let mut has_child_set = vec![false; d + 1];
    for p in parent.iter().flatten() {
        has_child_set[*p] = true;
    }
    let mut residents = vec![0usize; d + 1];
    for &v in &home {
        residents[v] += 1;
    }

    let mut leaf_haplotype = vec![None; d + 1];
    for (h, &v) in home.iter().enumerate() {
        if !has_child_set[v] && residents[v] == 1 {
            leaf_haplotype[v] = Some(h);
        } else {
            parent.push(Some(v));
            edge_sites.push(Vec::new());
            leaf_haplotype.push(Some(h));
        }
    }
    Ok(PerfectPhylogeny {
        tree: RootedTree::from_parents(parent)?,
        edge_sites,
        leaf_haplotype,
    })
}

impl PerfectPhylogeny {
    pub fn tree(&self) -> &RootedTree {
        &self.tree
    }

    pub fn edge_sites(&self, v: usize) -> &[String] {
        &self.edge_sites[v]
    }

    pub fn leaf_haplotype(&self, v: usize) -> Option<usize> {
        self.leaf_haplotype[v]
    }

    /// Leaf node carrying each haplotype, indexed by haplotype.
    pub fn haplotype_leaves(&self) -> Vec<usize> {
        let mut out: Vec<(usize, usize)> = self
            .leaf_haplotype
            .iter()
            .enumerate()
            .filter_map(|(v, h)| h.map(|h| (h, v)))
            .collect();
        out.sort_unstable();
        out.into_iter().map(|(_, v)| v).collect()
    }

    /// Site labels on the root-to-leaf path of every haplotype, in path order.
    pub fn path_sites(&self) -> Vec<Vec<String>> {
        self.haplotype_leaves()
            .into_iter()
            .map(|leaf| {
                let mut path = vec![leaf];
                while let Some(p) = self.tree.parent(*path.last().unwrap()) {
                    path.push(p);
                }
                path.iter()
                    .rev()
                    .flat_map(|&v| self.edge_sites[v].iter().cloned())
                    .collect()
            })
            .collect()
    }

    /// Order-independent serialization used to compare phylogenies for isomorphism.
    pub fn canonical_form(&self) -> String {
        fn walk(pp: &PerfectPhylogeny, v: usize) -> String {
            let mut sites = pp.edge_sites[v].clone();
            sites.sort();
            let mut kids: Vec<String> = pp.tree.children(v).iter().map(|&c| walk(pp, c)).collect();
            kids.sort();
            let leaf = if pp.leaf_haplotype[v].is_some() {
                "*"
            } else {
                ""
            };
            format!("[{}{leaf}{}]", sites.join(" "), kids.concat())
        }
        walk(self, self.tree.root())
    }
}

/// Perfect phylogeny with edge labels dropped and individual labels attached to nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KingmanPhylogeny {
    tree: RootedTree,
    edge_sites: Vec<Vec<String>>,
    particles: Vec<Vec<usize>>,
    labels: Vec<String>,
}

/// Perfect phylogeny with edge labels dropped and haplotype frequencies attached to nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TajimaPhylogeny {
    tree: RootedTree,
    edge_sites: Vec<Vec<String>>,
    counts: Vec<usize>,
}

/// Removes mutation-free pendant leaves, folding their haplotypes into the parent.
/// Returns the surviving tree, its edge sites, and for each haplotype the node it sits at.
fn collapse(pp: &PerfectPhylogeny) -> (RootedTree, Vec<Vec<String>>, Vec<usize>) {
    let len = pp.tree.len();
    let dropped: Vec<bool> = (0..len)
        .map(|v| pp.tree.is_leaf(v) && v != pp.tree.root() && pp.edge_sites[v].is_empty())
        .collect();
    let mut new_id = vec![usize::MAX; len];
    let mut next = 0;
    for v in 0..len {
        if !dropped[v] {
            new_id[v] = next;
            next += 1;
        }
    }
    let mut parent = Vec::with_capacity(next);
    let mut edge_sites = Vec::with_capacity(next);
    for v in (0..len).filter(|&v| !dropped[v]) {
        parent.push(pp.tree.parent(v).map(|p| new_id[p]));
        edge_sites.push(pp.edge_sites[v].clone());
    }
    let home = pp
        .haplotype_leaves()
        .into_iter()
        .map(|leaf| {
            if dropped[leaf] {
                new_id[pp
                    .tree
                    .parent(leaf)
                    .expect("dropped leaves are not the root")]
            } else {
                new_id[leaf]
            }
        })
        .collect();
    let tree = RootedTree::from_parents(parent).expect("collapsing preserves tree structure");
    (tree, edge_sites, home)
}

/// Attaches each haplotype's individuals to its leaf, or to the parent when the
/// pendant edge carries no sites.
pub fn to_kingman(pp: &PerfectPhylogeny, data: &HaplotypeData) -> KingmanPhylogeny {
    let (tree, edge_sites, home) = collapse(pp);
    let mut particles = vec![Vec::new(); tree.len()];
    for (h, &v) in home.iter().enumerate() {
        particles[v].extend_from_slice(&data.groups()[h]);
    }
    for p in &mut particles {
        p.sort_unstable();
    }
    KingmanPhylogeny {
        tree,
        edge_sites,
        particles,
        labels: data.individual_labels().to_vec(),
    }
}

/// As [`to_kingman`] with haplotype frequencies in place of label sets.
pub fn to_tajima(pp: &PerfectPhylogeny, data: &HaplotypeData) -> TajimaPhylogeny {
    let (tree, edge_sites, home) = collapse(pp);
    let mut counts = vec![0; tree.len()];
    for (h, &v) in home.iter().enumerate() {
        counts[v] += data.frequencies()[h];
    }
    TajimaPhylogeny {
        tree,
        edge_sites,
        counts,
    }
}

impl KingmanPhylogeny {
    /// Builds a phylogeny directly from parent links and per-node label lists.
    pub fn from_parts<S: AsRef<str>>(
        parent: Vec<Option<usize>>,
        node_labels: &[Vec<S>],
    ) -> Result<Self> {
        let tree = RootedTree::from_parents(parent)?;
        if node_labels.len() != tree.len() {
            return Err(Error::Invalid("one label list per node is required".into()));
        }
        let mut labels: Vec<String> = Vec::new();
        let mut particles = Vec::with_capacity(tree.len());
        for node in node_labels {
            let mut ids = Vec::with_capacity(node.len());
            for l in node {
                let l = l.as_ref();
                if labels.iter().any(|x| x == l) {
                    return Err(Error::Invalid(format!("label {l:?} appears twice")));
                }
                ids.push(labels.len());
                labels.push(l.to_string());
            }
            particles.push(ids);
        }
        let kp = Self {
            edge_sites: vec![Vec::new(); tree.len()],
            tree,
            particles,
            labels,
        };
        kp.validate()?;
        Ok(kp)
    }

    /// A single node holding every label: no constraints at all.
    pub fn unconstrained(n: usize) -> Self {
        let labels: Vec<String> = (1..=n).map(|i| format!("i{i}")).collect();
        Self::from_parts(vec![None], &[labels]).expect("single node tree is valid")
    }

    fn validate(&self) -> Result<()> {
        if self.labels.len() < 2 {
            return Err(Error::Invalid("at least 2 individuals are required".into()));
        }
        for v in self.tree.leaves() {
            if self.particles[v].is_empty() && v != self.tree.root() {
                return Err(Error::Invalid(format!("leaf {v} carries no individuals")));
            }
        }
        Ok(())
    }

    pub fn tree(&self) -> &RootedTree {
        &self.tree
    }

    pub fn n_individuals(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Individual indices placed at node `v`.
    pub fn particles(&self, v: usize) -> &[usize] {
        &self.particles[v]
    }

    pub fn edge_sites(&self, v: usize) -> &[String] {
        &self.edge_sites[v]
    }

    /// Frequency view of the same phylogeny.
    pub fn to_tajima(&self) -> TajimaPhylogeny {
        TajimaPhylogeny {
            tree: self.tree.clone(),
            edge_sites: self.edge_sites.clone(),
            counts: self.particles.iter().map(Vec::len).collect(),
        }
    }

    /// Individuals below each node (inclusive), sorted.
    pub fn descendant_sets(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.particles.clone();
        for v in self.tree.post_order() {
            if let Some(p) = self.tree.parent(v) {
                let below = out[v].clone();
                out[p].extend(below);
            }
        }
        for s in &mut out {
            s.sort_unstable();
        }
        out
    }
}

impl TajimaPhylogeny {
    pub fn from_parts(parent: Vec<Option<usize>>, counts: Vec<usize>) -> Result<Self> {
        let tree = RootedTree::from_parents(parent)?;
        if counts.len() != tree.len() {
            return Err(Error::Invalid("one count per node is required".into()));
        }
        let tp = Self {
            edge_sites: vec![Vec::new(); tree.len()],
            tree,
            counts,
        };
        if tp.n_individuals() < 2 {
            return Err(Error::Invalid("at least 2 individuals are required".into()));
        }
        for v in tp.tree.leaves() {
            if tp.counts[v] == 0 && v != tp.tree.root() {
                return Err(Error::Invalid(format!("leaf {v} has count 0")));
            }
        }
        Ok(tp)
    }

    pub fn unconstrained(n: usize) -> Self {
        Self::from_parts(vec![None], vec![n]).expect("single node tree is valid")
    }

    pub fn tree(&self) -> &RootedTree {
        &self.tree
    }

    pub fn count(&self, v: usize) -> usize {
        self.counts[v]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n_individuals(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn edge_sites(&self, v: usize) -> &[String] {
        &self.edge_sites[v]
    }
}

/// Output formats for [`export_phylogeny`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Dot,
}

/// JSON interchange form shared by all phylogeny variants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhylogenyDocument {
    pub root: usize,
    pub nodes: Vec<NodeRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub sites: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub haplotype: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

/// Anything that can be written out as a [`PhylogenyDocument`].
pub trait PhylogenyExport {
    fn to_document(&self) -> PhylogenyDocument;
}

fn base_records(tree: &RootedTree, edge_sites: &[Vec<String>]) -> Vec<NodeRecord> {
    (0..tree.len())
        .map(|v| NodeRecord {
            id: v,
            parent: tree.parent(v),
            sites: edge_sites[v].clone(),
            haplotype: None,
            particles: None,
            count: None,
        })
        .collect()
}

impl PhylogenyExport for PerfectPhylogeny {
    fn to_document(&self) -> PhylogenyDocument {
        let mut nodes = base_records(&self.tree, &self.edge_sites);
        for (rec, h) in nodes.iter_mut().zip(&self.leaf_haplotype) {
            rec.haplotype = *h;
        }
        PhylogenyDocument {
            root: self.tree.root(),
            nodes,
        }
    }
}

impl PhylogenyExport for KingmanPhylogeny {
    fn to_document(&self) -> PhylogenyDocument {
        let mut nodes = base_records(&self.tree, &self.edge_sites);
        for (rec, ps) in nodes.iter_mut().zip(&self.particles) {
            rec.particles = Some(ps.iter().map(|&i| self.labels[i].clone()).collect());
        }
        PhylogenyDocument {
            root: self.tree.root(),
            nodes,
        }
    }
}

impl PhylogenyExport for TajimaPhylogeny {
    fn to_document(&self) -> PhylogenyDocument {
        let mut nodes = base_records(&self.tree, &self.edge_sites);
        for (rec, &c) in nodes.iter_mut().zip(&self.counts) {
            rec.count = Some(c);
        }
        PhylogenyDocument {
            root: self.tree.root(),
            nodes,
        }
    }
}

fn document_tree(doc: &PhylogenyDocument) -> Result<(RootedTree, Vec<Vec<String>>)> {
    for (i, rec) in doc.nodes.iter().enumerate() {
        if rec.id != i {
            return Err(Error::Invalid(format!(
                "node ids must be 0..n in order, found {} at {i}",
                rec.id
            )));
        }
    }
    let tree = RootedTree::from_parents(doc.nodes.iter().map(|r| r.parent).collect())?;
    if tree.root() != doc.root {
        return Err(Error::Invalid(
            "root field does not match parent links".into(),
        ));
    }
    Ok((tree, doc.nodes.iter().map(|r| r.sites.clone()).collect()))
}

impl PerfectPhylogeny {
    pub fn from_document(doc: &PhylogenyDocument) -> Result<Self> {
        let (tree, edge_sites) = document_tree(doc)?;
        Ok(Self {
            tree,
            edge_sites,
            leaf_haplotype: doc.nodes.iter().map(|r| r.haplotype).collect(),
        })
    }
}

impl KingmanPhylogeny {
    pub fn from_document(doc: &PhylogenyDocument) -> Result<Self> {
        let (tree, edge_sites) = document_tree(doc)?;
        let node_labels: Vec<Vec<String>> = doc
            .nodes
            .iter()
            .map(|r| r.particles.clone().unwrap_or_default())
            .collect();
        let mut kp = Self::from_parts(tree.parents().to_vec(), &node_labels)?;
        kp.edge_sites = edge_sites;
        Ok(kp)
    }
}

impl TajimaPhylogeny {
    pub fn from_document(doc: &PhylogenyDocument) -> Result<Self> {
        let (tree, edge_sites) = document_tree(doc)?;
        let mut tp = Self::from_parts(
            tree.parents().to_vec(),
            doc.nodes.iter().map(|r| r.count.unwrap_or(0)).collect(),
        )?;
        tp.edge_sites = edge_sites;
        Ok(tp)
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Serializes a phylogeny deterministically as JSON or Graphviz DOT.
pub fn export_phylogeny<P: PhylogenyExport + ?Sized>(p: &P, format: ExportFormat) -> String {
    let doc = p.to_document();
    match format {
        ExportFormat::Json => serde_json::to_string_pretty(&doc).expect("document serializes"),
        ExportFormat::Dot => {
            let mut out = String::from("digraph phylogeny {\n  node [shape=circle];\n");
            for rec in &doc.nodes {
                let label = if let Some(ps) = &rec.particles {
                    format!("{{{}}}", ps.join(","))
                } else if let Some(c) = rec.count {
                    c.to_string()
                } else if let Some(h) = rec.haplotype {
                    format!("h{}", h + 1)
                } else {
                    String::new()
                };
                let _ = writeln!(out, "  n{} [label=\"{}\"];", rec.id, dot_escape(&label));
            }
            for rec in &doc.nodes {
                if let Some(p) = rec.parent {
                    let _ = writeln!(
                        out,
                        "  n{p} -> n{} [label=\"{}\"];",
                        rec.id,
                        dot_escape(&rec.sites.join(" "))
                    );
                }
            }
            out.push_str("}\n");
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::incidence::{deduplicate, parse_matrix, IncidenceMatrix, MatrixFormat};

    const SIX_SAMPLE_CSV: &str =
        "id,s1,s2,s3,s4\na,0,1,0,0\nb,1,0,1,0\nc,0,0,0,1\nd,0,0,0,1\ne,0,0,0,1\nf,0,0,0,1\n";

    fn six_sample() -> (HaplotypeData, PerfectPhylogeny) {
        let data = deduplicate(&parse_matrix(SIX_SAMPLE_CSV, MatrixFormat::Csv).unwrap());
        let pp = build_perfect_phylogeny(&data).unwrap();
        (data, pp)
    }

    #[test]
    fn six_sample_perfect_phylogeny() {
        let (_, pp) = six_sample();
        let t = pp.tree();
        assert_eq!(t.len(), 4);
        assert_eq!(t.leaves().len(), 3);
        assert_eq!(t.children(t.root()).len(), 3);
        let leaves = pp.haplotype_leaves();
        assert_eq!(pp.edge_sites(leaves[0]), ["s2"]);
        assert_eq!(pp.edge_sites(leaves[1]), ["s1", "s3"]);
        assert_eq!(pp.edge_sites(leaves[2]), ["s4"]);
        let total: usize = (0..t.len()).map(|v| pp.edge_sites(v).len()).sum();
        assert_eq!(total, 4);
    }

    #[test]
    fn six_sample_reductions() {
        let (data, pp) = six_sample();
        let kp = to_kingman(&pp, &data);
        let mut sets: Vec<Vec<&str>> = (0..kp.tree().len())
            .filter(|&v| !kp.particles(v).is_empty())
            .map(|v| {
                kp.particles(v)
                    .iter()
                    .map(|&i| kp.labels()[i].as_str())
                    .collect()
            })
            .collect();
        sets.sort();
        assert_eq!(sets, vec![vec!["a"], vec!["b"], vec!["c", "d", "e", "f"]]);
        let tp = to_tajima(&pp, &data);
        assert_eq!(tp.tree().len(), 4);
        let mut leaf_counts: Vec<usize> = tp.tree().leaves().iter().map(|&v| tp.count(v)).collect();
        leaf_counts.sort();
        assert_eq!(leaf_counts, [1, 1, 4]);
        assert_eq!(tp.count(tp.tree().root()), 0);
    }

    #[test]
    fn single_haplotype_is_root_only() {
        let m = IncidenceMatrix::from_strings(&["00", "00", "00"]).unwrap();
        let data = deduplicate(&m);
        let pp = build_perfect_phylogeny(&data).unwrap();
        assert_eq!(pp.tree().len(), 1);
        let kp = to_kingman(&pp, &data);
        assert_eq!(kp.particles(0), [0, 1, 2]);
        assert_eq!(to_tajima(&pp, &data).counts(), [3]);
    }

    #[test]
    fn conflicting_data_is_rejected() {
        let m = IncidenceMatrix::from_strings(&["10", "11", "01"]).unwrap();
        match build_perfect_phylogeny(&deduplicate(&m)) {
            Err(Error::IsmViolation { first, second }) => {
                assert_eq!((first.as_str(), second.as_str()), ("s1", "s2"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pendant_edges_without_sites_collapse() {
        // Haplotypes 00 and 10 and 11: 00 sits at the root, 10 at the s1 node.
        let m = IncidenceMatrix::from_strings(&["00", "10", "11", "11"]).unwrap();
        let data = deduplicate(&m);
        let pp = build_perfect_phylogeny(&data).unwrap();
        assert_eq!(pp.tree().leaves().len(), 3);
        let kp = to_kingman(&pp, &data);
        assert_eq!(kp.tree().len(), 3);
        assert_eq!(kp.particles(kp.tree().root()), [0]);
        let tp = to_tajima(&pp, &data);
        assert_eq!(tp.counts(), [1, 1, 2]);
    }

    #[test]
    fn star_collapse_puts_everything_internal() {
        // Both haplotypes share s1 and differ nowhere else below it: 11 vs 10.
        let m = IncidenceMatrix::from_strings(&["10", "10", "11"]).unwrap();
        let data = deduplicate(&m);
        let kp = to_kingman(&build_perfect_phylogeny(&data).unwrap(), &data);
        // root -> s1 node {i1,i2} -> s2 leaf {i3}
        assert_eq!(kp.tree().len(), 3);
        assert_eq!(kp.particles(1), [0, 1]);
        assert_eq!(kp.particles(2), [2]);
    }

    #[test]
    fn json_round_trip_and_dot() {
        let (data, pp) = six_sample();
        let tp = to_tajima(&pp, &data);
        let kp = to_kingman(&pp, &data);
        for json in [
            export_phylogeny(&pp, ExportFormat::Json),
            export_phylogeny(&kp, ExportFormat::Json),
            export_phylogeny(&tp, ExportFormat::Json),
        ] {
            let doc: PhylogenyDocument = serde_json::from_str(&json).unwrap();
            let again = if doc.nodes.iter().any(|n| n.particles.is_some()) {
                export_phylogeny(
                    &KingmanPhylogeny::from_document(&doc).unwrap(),
                    ExportFormat::Json,
                )
            } else if doc.nodes.iter().any(|n| n.count.is_some()) {
                export_phylogeny(
                    &TajimaPhylogeny::from_document(&doc).unwrap(),
                    ExportFormat::Json,
                )
            } else {
                export_phylogeny(
                    &PerfectPhylogeny::from_document(&doc).unwrap(),
                    ExportFormat::Json,
                )
            };
            assert_eq!(json, again);
        }
        let dot = export_phylogeny(&tp, ExportFormat::Dot);
        assert_eq!(dot.matches("[label=").count(), 4 + 3);
        assert!(dot.contains("label=\"4\""));
    }

    #[test]
    fn rejects_bad_parent_links() {
        assert!(RootedTree::from_parents(vec![None, None]).is_err());
        assert!(RootedTree::from_parents(vec![Some(1), Some(0)]).is_err());
        assert!(RootedTree::from_parents(vec![None, Some(2), Some(1)]).is_err());
        assert!(
            KingmanPhylogeny::from_parts(vec![None, Some(0)], &[vec!["a", "b"], vec![]]).is_err()
        );
    }
}
