use std::ops::Deref;

use crate::class::ClassSpec;
use crate::error::{invalid, Error, Result};
use crate::perm::Permutation;
use crate::tree::{NodeId, PlaneTree};

use super::{canonical_tree, check_arities, eval_tree, CanonicalTree, DecompositionTree, HasSize, Node};

/// A child slot of a gadget root: a single leaf, or an increasing run of `m >= 2` leaves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Leaf,
    Plus(usize),
}

impl Slot {
    pub fn size(self) -> usize {
        match self {
            Slot::Leaf => 1,
            Slot::Plus(m) => m,
        }
    }
}

/// A simple root `α` whose children are leaves or ⊕-vertices, fused into one decoration.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gadget {
    root: Permutation,
    slots: Vec<Slot>,
}

impl Gadget {
    pub fn new(root: Permutation, slots: Vec<Slot>) -> Result<Self> {
        if !root.is_simple() {
            return invalid(format!("gadget root {root} is not simple"));
        }
        if slots.len() != root.len() {
            return invalid(format!("gadget root {root} needs {} slots, got {}", root.len(), slots.len()));
        }
        if slots.iter().any(|s| matches!(s, Slot::Plus(m) if *m < 2)) {
            return invalid("Plus slots need at least two leaves");
        }
        Ok(Gadget { root, slots })
    }

    pub fn root(&self) -> &Permutation {
        &self.root
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Number of gadget leaves.
    pub fn size(&self) -> usize {
        self.slots.iter().map(|s| s.size()).sum()
    }

    /// Slot (0-based) holding the gadget leaf at 0-based position `i`.
    pub fn slot_of(&self, mut i: usize) -> usize {
        for (j, s) in self.slots.iter().enumerate() {
            if i < s.size() {
                return j;
            }
            i -= s.size();
        }
        panic!("gadget leaf index out of range")
    }

    /// The permutation this gadget stands for: `α[⊕_{m_1}, …]`.
    pub fn evaluate(&self) -> Permutation {
        let parts: Vec<Permutation> = self.slots.iter().map(|s| Permutation::identity(s.size())).collect();
        Permutation::substitute(&self.root, &parts).expect("slot count matches")
    }
}

/// Decorations from `Ĝ(S)`: gadgets and the unsigned `⊛_k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PackedNode {
    Star(usize),
    Gadget(Gadget),
}

impl PackedNode {
    pub fn size(&self) -> usize {
        match self {
            PackedNode::Star(k) => *k,
            PackedNode::Gadget(g) => g.size(),
        }
    }

    pub fn is_gadget(&self) -> bool {
        matches!(self, PackedNode::Gadget(_))
    }
}

impl HasSize for PackedNode {
    fn size(&self) -> usize {
        PackedNode::size(self)
    }
}

/// A `Ĝ(S)`-decorated plane tree; in bijection with ⊕-indecomposable class members.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackedTree(PlaneTree<PackedNode>);

impl PackedTree {
    pub fn new(tree: PlaneTree<PackedNode>) -> Result<Self> {
        check_arities(&tree)?;
        Ok(PackedTree(tree))
    }

    pub(crate) fn new_unchecked(tree: PlaneTree<PackedNode>) -> Self {
        debug_assert!(check_arities(&tree).is_ok());
        PackedTree(tree)
    }

    pub fn single_leaf() -> Self {
        PackedTree(PlaneTree::leaf())
    }

    pub fn into_inner(self) -> PlaneTree<PackedNode> {
        self.0
    }

    /// Number of leaves.
    pub fn size(&self) -> usize {
        self.0.leaf_count()
    }

    /// Every gadget root lies in `spec`.
    pub fn decorations_in(&self, spec: &ClassSpec) -> bool {
        (0..self.len()).all(|v| match self.dec(v) {
            Some(PackedNode::Gadget(g)) => spec.contains_simple(g.root()),
            _ => true,
        })
    }

    /// Nearest gadget-decorated strict ancestor of `v`, with its distance.
    pub fn gadget_ancestor(&self, v: NodeId) -> Option<(NodeId, usize)> {
        self.ancestors(v)
            .enumerate()
            .find(|&(_, a)| self.dec(a).is_some_and(PackedNode::is_gadget))
            .map(|(i, a)| (a, i + 1))
    }

    /// Do leaves `l1` (earlier) and `l2` form an inversion?
    pub fn is_inversion(&self, l1: NodeId, l2: NodeId) -> bool {
        let u = self.lca(l1, l2);
        match self.dec(u).expect("common ancestor is internal") {
            PackedNode::Gadget(g) => {
                let s1 = g.slot_of(self.rank(self.child_toward(u, l1)));
                let s2 = g.slot_of(self.rank(self.child_toward(u, l2)));
                s1 != s2 && g.root().at(s1 + 1) > g.root().at(s2 + 1)
            }
            PackedNode::Star(_) => match self.gadget_ancestor(u) {
                Some((_, d)) => d % 2 == 1,
                None => self.depth(u) % 2 == 0,
            },
        }
    }
}

impl Deref for PackedTree {
    type Target = PlaneTree<PackedNode>;
    fn deref(&self) -> &PlaneTree<PackedNode> {
        &self.0
    }
}

/// A nonempty sequence of packed trees, one per ⊕-component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecoratedForest(Vec<PackedTree>);

impl DecoratedForest {
    pub fn new(trees: Vec<PackedTree>) -> Result<Self> {
        if trees.is_empty() {
            return invalid("a forest needs at least one tree");
        }
        Ok(DecoratedForest(trees))
    }

    pub fn trees(&self) -> &[PackedTree] {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.iter().map(PackedTree::size).sum()
    }
}

/// Merges each simple vertex with its ⊕-children into a gadget; remaining signs become `⊛`.
pub fn pack(tree: &CanonicalTree) -> Result<PackedTree> {
    if matches!(tree.dec(0), Some(Node::Plus(_))) {
        return invalid("cannot pack a tree with a ⊕ root");
    }
    let mut out = PlaneTree::<PackedNode>::leaf();
    let mut work: Vec<(NodeId, NodeId)> = vec![(0, 0)];
    while let Some((v, id)) = work.pop() {
        let kids: Vec<NodeId> = match tree.dec(v) {
            None => continue,
            Some(Node::Plus(k)) | Some(Node::Minus(k)) => {
                out.set_dec(id, Some(PackedNode::Star(*k)));
                tree.children(v).collect()
            }
            Some(Node::Simple(alpha)) => {
                let mut slots = Vec::with_capacity(alpha.len());
                let mut kids = Vec::new();
                for c in tree.children(v) {
                    match tree.dec(c) {
                        Some(Node::Plus(m)) => {
                            slots.push(Slot::Plus(*m));
                            kids.extend(tree.children(c));
                        }
                        _ => {
                            slots.push(Slot::Leaf);
                            kids.push(c);
                        }
                    }
                }
                out.set_dec(id, Some(PackedNode::Gadget(Gadget::new(alpha.clone(), slots)?)));
                kids
            }
        };
        for c in kids {
            let cid = out.add_child(id, None);
            work.push((c, cid));
        }
    }
    Ok(PackedTree::new_unchecked(out))
}

/// Inverse of [`pack`]: a `⊛` at the root or below a gadget is ⊖, and signs alternate below.
pub fn unpack(tree: &PackedTree) -> CanonicalTree {
    let mut out = DecompositionTree::leaf();
    // (packed vertex, canonical vertex, sign of a ⊛ parent: true for ⊕)
    let mut work: Vec<(NodeId, NodeId, Option<bool>)> = vec![(0, 0, None)];
    while let Some((v, id, parent_plus)) = work.pop() {
        match tree.dec(v) {
            None => {}
            Some(PackedNode::Star(k)) => {
                let plus = parent_plus.map(|s| !s).unwrap_or(false);
                out.set_dec(id, Some(if plus { Node::Plus(*k) } else { Node::Minus(*k) }));
                for c in tree.children(v) {
                    let cid = out.add_child(id, None);
                    work.push((c, cid, Some(plus)));
                }
            }
            Some(PackedNode::Gadget(g)) => {
                out.set_dec(id, Some(Node::Simple(g.root().clone())));
                let mut kids = tree.children(v);
                for slot in g.slots() {
                    match *slot {
                        Slot::Leaf => {
                            let cid = out.add_child(id, None);
                            work.push((kids.next().expect("arity checked"), cid, None));
                        }
                        Slot::Plus(m) => {
                            let plus = out.add_child(id, Some(Node::Plus(m)));
                            for _ in 0..m {
                                let cid = out.add_child(plus, None);
                                work.push((kids.next().expect("arity checked"), cid, None));
                            }
                        }
                    }
                }
            }
        }
    }
    CanonicalTree::new(out).expect("unpacking a valid packed tree yields a canonical tree")
}

/// The forest bijection: one packed tree per ⊕-component.
pub fn forest_encode(nu: &Permutation, spec: &ClassSpec) -> Result<DecoratedForest> {
    let mut trees = Vec::new();
    for comp in nu.plus_components() {
        let tree = pack(&canonical_tree(&comp))?;
        if !tree.decorations_in(spec) {
            return Err(Error::NotInClass(nu.to_string(), spec.name.clone()));
        }
        trees.push(tree);
    }
    DecoratedForest::new(trees)
}

pub fn forest_decode(forest: &DecoratedForest) -> Permutation {
    let parts: Vec<Permutation> =
        forest.trees().iter().map(|t| eval_tree(&unpack(t)).expect("canonical trees evaluate")).collect();
    Permutation::plus_sum(&parts)
}

/// Pattern of the 1-based leaves `leaves` (increasing), read off the tree alone.
pub fn read_pattern(tree: &PackedTree, leaves: &[usize]) -> Result<Permutation> {
    let all = tree.leaves();
    let nodes = select_leaves(leaves, all.len())?.into_iter().map(|i| all[i]).collect::<Vec<_>>();
    Ok(pattern_from_inversions(nodes.len(), |a, b| tree.is_inversion(nodes[a], nodes[b])))
}

/// [`read_pattern`] over a forest; leaves of distinct trees never form inversions.
pub fn read_pattern_forest(forest: &DecoratedForest, leaves: &[usize]) -> Result<Permutation> {
    let per_tree: Vec<Vec<NodeId>> = forest.trees().iter().map(|t| t.leaves()).collect();
    let mut located = Vec::new();
    let mut offsets = Vec::new();
    let mut acc = 0;
    for l in &per_tree {
        offsets.push(acc);
        acc += l.len();
    }
    for i in select_leaves(leaves, acc)? {
        let t = offsets.partition_point(|&o| o <= i) - 1;
        located.push((t, per_tree[t][i - offsets[t]]));
    }
    Ok(pattern_from_inversions(located.len(), |a, b| {
        let ((ta, la), (tb, lb)) = (located[a], located[b]);
        ta == tb && forest.trees()[ta].is_inversion(la, lb)
    }))
}

fn select_leaves(leaves: &[usize], count: usize) -> Result<Vec<usize>> {
    if leaves.is_empty() {
        return invalid("no leaves queried");
    }
    let mut prev = 0;
    for &l in leaves {
        if l == 0 || l > count {
            return invalid(format!("leaf {l} out of range 1..{count}"));
        }
        if l <= prev {
            return invalid("leaves must be strictly increasing");
        }
        prev = l;
    }
    Ok(leaves.iter().map(|&l| l - 1).collect())
}

/// Builds the permutation whose inversion relation among positions is `inv(a, b)` (`a < b`).
pub(crate) fn pattern_from_inversions(k: usize, inv: impl Fn(usize, usize) -> bool) -> Permutation {
    let mut values = vec![1u32; k];
    for a in 0..k {
        for b in a + 1..k {
            if inv(a, b) {
                values[a] += 1;
            } else {
                values[b] += 1;
            }
        }
    }
    Permutation::from_vec_unchecked(values)
}
