//! Skeletons of marked trees: the ancestor tree `R`, its `t`-neighbourhood
//! `R^[t]` and the contraction `s.R^[t]` with length labels; proper `k`-trees
//! and the shape law of the limit tree.

mod local;

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::OffspringModel;
use crate::error::Result;
use crate::tree::{NodeId, PlaneTree};

pub use local::{
    certified_root, perm_local_distance, pointed_fringe, realize_rooted_permutation, realize_signed, realize_window,
    restrict_rooted, tree_local_distance, RootedPermutation,
};

/// A set of outdegrees; marked vertices are those with outdegree in the set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Omega {
    degrees: BTreeSet<usize>,
}

impl Omega {
    pub fn new(degrees: impl IntoIterator<Item = usize>) -> Self {
        Omega { degrees: degrees.into_iter().collect() }
    }

    /// `Ω = {0}`: marks are leaves.
    pub fn leaves() -> Self {
        Omega::new([0])
    }

    pub fn contains(&self, d: usize) -> bool {
        self.degrees.contains(&d)
    }

    pub fn degrees(&self) -> &BTreeSet<usize> {
        &self.degrees
    }

    /// `P(ξ ∈ Ω)`.
    pub fn probability(&self, model: &OffspringModel) -> f64 {
        self.degrees.iter().map(|&d| model.prob(d)).sum()
    }
}

/// `s.R^[t](T, v)` as a shape plus unscaled middle-segment lengths.
#[derive(Clone, Debug, Serialize)]
pub struct SkeletonView {
    #[serde(serialize_with = "serialize_shape")]
    pub shape: PlaneTree<()>,
    /// `marks[j]` is the vertex of `shape` carrying mark `j + 1`.
    pub marks: Vec<NodeId>,
    /// Essential vertices of `shape` in preorder (root first, duplicates merged).
    pub essential: Vec<NodeId>,
    /// Heights in the original tree of `essential`.
    pub essential_heights: Vec<usize>,
    /// Deleted-vertex counts of the `2k - 1` edges, indexed by the non-root
    /// essential vertices in preorder; zero-padded when some coincide.
    pub label_counts: Vec<u64>,
    /// Lower endpoint in `shape` of each middle edge (`None` if the essential
    /// vertices are at distance `2t` or less, or absent).
    pub label_nodes: Vec<Option<NodeId>>,
    /// Original vertex of each shape vertex.
    pub origin: Vec<NodeId>,
    pub generic: bool,
    pub k: usize,
    pub t: usize,
    pub scale: f64,
    pub omega: Option<Omega>,
}

fn serialize_shape<S: serde::Serializer>(shape: &PlaneTree<()>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&plain_shape_string(shape, |_| String::new()))
}

/// Nested-parenthesis form; `tag(v)` is written after the opening of vertex `v`.
fn plain_shape_string<D>(tree: &PlaneTree<D>, tag: impl Fn(NodeId) -> String) -> String {
    fn go<D>(tree: &PlaneTree<D>, v: NodeId, tag: &impl Fn(NodeId) -> String, out: &mut String) {
        out.push('(');
        out.push_str(&tag(v));
        for c in tree.children(v) {
            go(tree, c, tag, out);
        }
        out.push(')');
    }
    let mut out = String::new();
    go(tree, 0, &tag, &mut out);
    out
}

impl SkeletonView {
    /// `Lab`: the labels scaled by `s`.
    pub fn labels(&self) -> Vec<f64> {
        self.label_counts.iter().map(|&c| self.scale * c as f64).collect()
    }

    pub fn label_sum(&self) -> f64 {
        self.labels().iter().sum()
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_omega(mut self, omega: Omega) -> Self {
        self.omega = Some(omega);
        self
    }

    /// `Sh`: key of the marked shape; `=` flags middle edges, `#j` marks.
    pub fn shape_key(&self) -> String {
        let mut tags = vec![String::new(); self.shape.len()];
        for v in self.label_nodes.iter().flatten() {
            tags[*v].push('=');
        }
        for (j, &v) in self.marks.iter().enumerate() {
            let _ = write!(tags[v], "#{}", j + 1);
        }
        plain_shape_string(&self.shape, |v| tags[v].clone())
    }

    /// Reinserts the deleted middle vertices; returns `R^[t]` with its marks.
    pub fn expand(&self) -> (PlaneTree<()>, Vec<NodeId>) {
        let mut extra = vec![0u64; self.shape.len()];
        for (i, node) in self.label_nodes.iter().enumerate() {
            if let Some(v) = node {
                extra[*v] = self.label_counts[i];
            }
        }
        let mut out: PlaneTree<()> = PlaneTree::leaf();
        let mut map = vec![0; self.shape.len()];
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            let kids: Vec<NodeId> = self.shape.children(v).collect();
            for &c in &kids {
                let mut parent = map[v];
                for _ in 0..extra[c] {
                    parent = out.add_child(parent, None);
                }
                map[c] = out.add_child(parent, None);
            }
            stack.extend(kids.into_iter().rev());
        }
        let marks = self.marks.iter().map(|&v| map[v]).collect();
        (out, marks)
    }

    /// `p_G` of the shape for the offspring model (zero if not generic).
    pub fn shape_probability(&self, model: &OffspringModel, omega: &Omega) -> f64 {
        if !self.generic {
            return 0.0;
        }
        let k = self.k as i32;
        let odd: f64 = (1..self.k).map(|i| (2 * i - 1) as f64).product();
        let pref = omega.probability(model).powi(-k) / (model.sigma2.powi(k - 1) * odd);
        pref * (0..self.shape.len()).map(|v| model.prob(self.shape.degree(v))).product::<f64>()
    }
}

/// Essential vertices (root, marks, closest common ancestors) of `tree` in preorder.
fn essential_vertices<D>(tree: &PlaneTree<D>, marks: &[NodeId]) -> Vec<NodeId> {
    let order = preorder_index(tree);
    let mut sorted: Vec<NodeId> = marks.to_vec();
    sorted.sort_by_key(|&v| order[v]);
    sorted.dedup();
    let mut ess: BTreeSet<(usize, NodeId)> = BTreeSet::new();
    ess.insert((0, tree.root()));
    for w in sorted.windows(2) {
        let u = tree.lca(w[0], w[1]);
        ess.insert((order[u], u));
    }
    for &v in &sorted {
        ess.insert((order[v], v));
    }
    ess.into_iter().map(|(_, v)| v).collect()
}

fn preorder_index<D>(tree: &PlaneTree<D>) -> Vec<usize> {
    let mut idx = vec![0; tree.len()];
    for (i, v) in tree.preorder().into_iter().enumerate() {
        idx[v] = i;
    }
    idx
}

/// Vertices of `R(T, v)`.
fn ancestor_closure<D>(tree: &PlaneTree<D>, marks: &[NodeId]) -> Vec<bool> {
    let mut in_r = vec![false; tree.len()];
    for &m in marks {
        let mut v = Some(m);
        while let Some(x) = v {
            if in_r[x] {
                break;
            }
            in_r[x] = true;
            v = tree.parent(x);
        }
    }
    in_r
}

/// Distance within `R` to the nearest essential vertex (`usize::MAX` off `R`).
fn essential_distance<D>(tree: &PlaneTree<D>, in_r: &[bool], ess: &[NodeId]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; tree.len()];
    let mut queue: VecDeque<NodeId> = VecDeque::new();
    for &e in ess {
        dist[e] = 0;
        queue.push_back(e);
    }
    while let Some(v) = queue.pop_front() {
        let nbrs = tree.parent(v).into_iter().chain(tree.children(v).filter(|&c| in_r[c]));
        for w in nbrs.collect::<Vec<_>>() {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Vertices of `R^[t](T, v)`: `R` plus whole branches at corners within distance `t`
/// of an essential vertex.
fn neighbourhood_vertices<D>(tree: &PlaneTree<D>, marks: &[NodeId], t: usize) -> (Vec<bool>, Vec<NodeId>, Vec<bool>) {
    let in_r = ancestor_closure(tree, marks);
    let ess = essential_vertices(tree, marks);
    let dist = essential_distance(tree, &in_r, &ess);
    let mut keep = in_r.clone();
    for v in tree.preorder() {
        if keep[v] && !in_r[v] {
            continue;
        }
        if in_r[v] && dist[v] <= t {
            for c in tree.children(v).filter(|&c| !in_r[c]) {
                for x in tree.preorder_from(c) {
                    keep[x] = true;
                }
            }
        }
    }
    (keep, ess, in_r)
}

/// `R^[t](T, v)` as a plain tree with its marks.
pub fn neighbourhood_tree<D>(tree: &PlaneTree<D>, marks: &[NodeId], t: usize) -> (PlaneTree<()>, Vec<NodeId>) {
    let (keep, _, _) = neighbourhood_vertices(tree, marks, t);
    let mut out: PlaneTree<()> = PlaneTree::leaf();
    let mut map = vec![usize::MAX; tree.len()];
    map[tree.root()] = 0;
    for v in tree.preorder() {
        for c in tree.children(v).filter(|&c| keep[c]) {
            map[c] = out.add_child(map[v], None);
        }
    }
    (out, marks.iter().map(|&m| map[m]).collect())
}

/// `s.R^[t](T, v)`, marks given as vertices of `tree` (repeats allowed).
pub fn extract_skeleton<D>(tree: &PlaneTree<D>, marks: &[NodeId], t: usize, s: f64) -> SkeletonView {
    let k = marks.len();
    let (keep, ess, _) = neighbourhood_vertices(tree, marks, t);
    let mut is_ess = vec![false; tree.len()];
    for &e in &ess {
        is_ess[e] = true;
    }

    // middle segments: skip[a] = (b, deleted) where a is the last kept vertex above
    let mut jump: Vec<Option<(NodeId, u64)>> = vec![None; tree.len()];
    let mut middle_lower: Vec<Option<NodeId>> = vec![None; tree.len()];
    let mut lengths = Vec::new();
    for &y in ess.iter().skip(1) {
        let x = tree.ancestors(y).find(|&a| is_ess[a]).expect("root is essential");
        let len = tree.depth(y) - tree.depth(x);
        lengths.push(len);
        if len > 2 * t {
            let path: Vec<NodeId> = std::iter::once(y).chain(tree.ancestors(y)).take(len + 1).collect();
            // path[i] is at distance i above y
            let lower = path[t];
            let upper = path[len - t];
            let deleted = (len - 2 * t - 1) as u64;
            middle_lower[y] = Some(lower);
            if deleted > 0 {
                jump[tree.child_toward(upper, lower)] = Some((lower, deleted));
            }
        }
    }

    let mut shape: PlaneTree<()> = PlaneTree::leaf();
    let mut map = vec![usize::MAX; tree.len()];
    let mut origin = vec![tree.root()];
    map[tree.root()] = 0;
    let mut deleted_at = vec![0u64; tree.len()];
    let mut stack = vec![tree.root()];
    while let Some(v) = stack.pop() {
        let mut kids = Vec::new();
        for c in tree.children(v).filter(|&c| keep[c]) {
            let (target, del) = jump[c].unwrap_or((c, 0));
            map[target] = shape.add_child(map[v], None);
            origin.push(target);
            deleted_at[target] = del;
            kids.push(target);
        }
        stack.extend(kids.into_iter().rev());
    }

    let mut label_counts = vec![0u64; (2 * k).saturating_sub(1)];
    let mut label_nodes = vec![None; label_counts.len()];
    for (i, &y) in ess.iter().skip(1).enumerate() {
        if let Some(lower) = middle_lower[y] {
            label_counts[i] = deleted_at[lower];
            label_nodes[i] = Some(map[lower]);
        }
    }
    let generic = ess.len() == 2 * k && lengths.iter().all(|&l| l > 2 * t);
    SkeletonView {
        marks: marks.iter().map(|&m| map[m]).collect(),
        essential: ess.iter().map(|&e| map[e]).collect(),
        essential_heights: ess.iter().map(|&e| tree.depth(e)).collect(),
        shape,
        label_counts,
        label_nodes,
        origin,
        generic,
        k,
        t,
        scale: s,
        omega: None,
    }
}

/// `R*(T, v)`: the ancestor tree with unmarked non-root vertices of outdegree
/// one removed. Decorations list the (1-based) marks carried by each vertex.
pub fn reduced_tree<D>(tree: &PlaneTree<D>, marks: &[NodeId]) -> PlaneTree<Vec<usize>> {
    let in_r = ancestor_closure(tree, marks);
    let mut labels: Vec<Vec<usize>> = vec![Vec::new(); tree.len()];
    for (j, &m) in marks.iter().enumerate() {
        labels[m].push(j + 1);
    }
    let mut out: PlaneTree<Vec<usize>> = PlaneTree::with_root(Some(labels[tree.root()].clone()));
    let mut stack = vec![(tree.root(), 0)];
    while let Some((v, image)) = stack.pop() {
        let mut created = Vec::new();
        for c in tree.children(v).filter(|&c| in_r[c]) {
            // descend through unmarked single-child vertices
            let mut x = c;
            loop {
                let kids: Vec<NodeId> = tree.children(x).filter(|&y| in_r[y]).collect();
                if kids.len() == 1 && labels[x].is_empty() {
                    x = kids[0];
                } else {
                    break;
                }
            }
            let id = out.add_child(image, Some(labels[x].clone()));
            created.push((x, id));
        }
        stack.extend(created.into_iter().rev());
    }
    out
}

/// The proper `k`-tree read from a reduced tree, if it is one.
pub fn as_proper_tree(reduced: &PlaneTree<Vec<usize>>) -> Option<PlaneTree<usize>> {
    let k = reduced.leaves().len();
    if reduced.degree(0) != 1 || reduced.dec(0).is_some_and(|l| !l.is_empty()) {
        return None;
    }
    for v in 1..reduced.len() {
        let labels = reduced.dec(v).map(Vec::as_slice).unwrap_or(&[]);
        let ok = if reduced.is_leaf(v) { labels.len() == 1 } else { labels.is_empty() && reduced.degree(v) == 2 };
        if !ok {
            return None;
        }
    }
    let out = reduced.map_dec(|v, l| if reduced.is_leaf(v) { l[0] } else { 0 });
    let out = relabel_internal(&out);
    (out.leaves().iter().filter_map(|&v| out.dec(v)).collect::<BTreeSet<_>>().len() == k).then_some(out)
}

fn relabel_internal(tree: &PlaneTree<usize>) -> PlaneTree<usize> {
    let mut out = tree.clone();
    for v in 0..tree.len() {
        if !tree.is_leaf(v) {
            out.set_dec(v, None);
        }
    }
    out
}

/// Key of a proper `k`-tree: the binary genealogy below the root edge.
pub fn proper_tree_key(tree: &PlaneTree<usize>) -> String {
    plain_shape_string(tree, |v| tree.dec(v).map(usize::to_string).unwrap_or_default())
}

/// Rémy's growth of a leaf-labelled binary tree: leaf `i` is inserted by
/// `choose(2i - 3) = (edge, new leaf on the left)`. The result is wrapped in a root edge.
fn remy_build(k: usize, mut choose: impl FnMut(usize) -> (usize, bool)) -> PlaneTree<usize> {
    let mut kids: Vec<Option<(usize, usize)>> = vec![None];
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut label = vec![1];
    let mut root = 0;
    for i in 2..=k {
        let (x, left) = choose(kids.len());
        let y = kids.len();
        let z = y + 1;
        kids.push(Some(if left { (z, x) } else { (x, z) }));
        parent.push(parent[x]);
        label.push(0);
        kids.push(None);
        parent.push(Some(y));
        label.push(i);
        match parent[x] {
            None => root = y,
            Some(p) => {
                let (a, b) = kids[p].expect("parent is internal");
                kids[p] = Some(if a == x { (y, b) } else { (a, y) });
            }
        }
        parent[x] = Some(y);
    }
    let mut out: PlaneTree<usize> = PlaneTree::with_root(Some(0));
    let mut stack = vec![(root, 0)];
    while let Some((b, parent_id)) = stack.pop() {
        match kids[b] {
            None => {
                out.add_child(parent_id, Some(label[b]));
            }
            Some((l, r)) => {
                let id = out.add_child(parent_id, Some(0));
                stack.push((r, id));
                stack.push((l, id));
            }
        }
    }
    relabel_internal(&out)
}

/// A uniform proper `k`-tree (each of the `2^{k-1}(2k-3)!!` with equal probability).
pub fn remy_proper_tree<R: Rng + ?Sized>(k: usize, rng: &mut R) -> PlaneTree<usize> {
    remy_build(k, |m| (rng.gen_range(0..m), rng.gen()))
}

/// All proper `k`-trees.
pub fn proper_k_trees(k: usize) -> Vec<PlaneTree<usize>> {
    let mut choices: Vec<Vec<(usize, bool)>> = vec![Vec::new()];
    for i in 2..=k {
        let m = 2 * i - 3;
        choices = choices
            .into_iter()
            .flat_map(|c| {
                (0..m).flat_map(move |x| {
                    let c = c.clone();
                    [false, true].into_iter().map(move |l| {
                        let mut c = c.clone();
                        c.push((x, l));
                        c
                    })
                })
            })
            .collect();
    }
    choices
        .into_iter()
        .map(|c| {
            let mut it = c.into_iter();
            remy_build(k, |_| it.next().expect("one choice per insertion"))
        })
        .collect()
}

/// `k! Cat_{k-1} = 2^{k-1} (2k-3)!!`.
pub fn proper_k_tree_count(k: usize) -> u64 {
    (1..k).map(|i| 2 * (2 * i as u64 - 1)).product()
}

/// Heights of the non-root essential vertices of a skeleton (parity targets).
pub fn essential_parities(view: &SkeletonView) -> Vec<bool> {
    view.essential_heights.iter().skip(1).map(|h| h % 2 == 1).collect()
}

/// Validates that `marks` are vertices of `tree` with outdegree in `omega`.
pub fn check_marks<D>(tree: &PlaneTree<D>, marks: &[NodeId], omega: &Omega) -> Result<()> {
    for &m in marks {
        if m >= tree.len() || !omega.contains(tree.degree(m)) {
            return crate::error::invalid(format!("vertex {m} is not a mark with outdegree in Ω"));
        }
    }
    Ok(())
}
