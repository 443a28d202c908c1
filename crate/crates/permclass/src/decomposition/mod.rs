//! Substitution decomposition: canonical trees, packed trees, the forest
//! bijection and reading patterns directly off packed trees.

mod packed;
mod text;

pub(crate) use packed::pattern_from_inversions;
pub use packed::{
    forest_decode, forest_encode, pack, read_pattern, read_pattern_forest, unpack, DecoratedForest, Gadget, PackedNode,
    PackedTree, Slot,
};
pub use text::parse_decomposition_tree;

use std::ops::Deref;

use crate::class::ClassSpec;
use crate::error::{invalid, Result};
use crate::perm::{standardize_distinct, Permutation};
use crate::tree::{NodeId, PlaneTree};

/// Decorations from `Ŝ = S ∪ {⊕_k, ⊖_k}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Plus(usize),
    Minus(usize),
    Simple(Permutation),
}

impl Node {
    pub fn size(&self) -> usize {
        match self {
            Node::Plus(k) | Node::Minus(k) => *k,
            Node::Simple(a) => a.len(),
        }
    }

    fn theta(&self) -> Permutation {
        match self {
            Node::Plus(k) => Permutation::identity(*k),
            Node::Minus(k) => Permutation::decreasing(*k),
            Node::Simple(a) => a.clone(),
        }
    }
}

/// Any `Ŝ`-decorated tree; not necessarily canonical.
pub type DecompositionTree = PlaneTree<Node>;

/// A decomposition tree without ⊕–⊕ or ⊖–⊖ edges, in bijection with permutations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalTree(DecompositionTree);

impl CanonicalTree {
    /// Checks decoration sizes and the no-adjacent-equal-signs rule.
    pub fn new(tree: DecompositionTree) -> Result<Self> {
        check_arities(&tree)?;
        for v in 1..tree.len() {
            let p = tree.parent(v).expect("non-root");
            match (tree.dec(p), tree.dec(v)) {
                (Some(Node::Plus(_)), Some(Node::Plus(_))) | (Some(Node::Minus(_)), Some(Node::Minus(_))) => {
                    return invalid("adjacent vertices with the same sign");
                }
                _ => {}
            }
        }
        Ok(CanonicalTree(tree))
    }

    pub fn into_inner(self) -> DecompositionTree {
        self.0
    }

    /// Number of leaves.
    pub fn size(&self) -> usize {
        self.0.leaf_count()
    }
}

impl Deref for CanonicalTree {
    type Target = DecompositionTree;
    fn deref(&self) -> &DecompositionTree {
        &self.0
    }
}

fn check_arities<D>(tree: &PlaneTree<D>) -> Result<()>
where
    D: HasSize,
{
    for v in 0..tree.len() {
        match tree.dec(v) {
            None if tree.is_leaf(v) => {}
            None => return invalid(format!("internal vertex {v} has no decoration")),
            Some(d) if d.size() != tree.degree(v) || d.size() < 2 => {
                return invalid(format!(
                    "vertex {v}: decoration of size {} but outdegree {}",
                    d.size(),
                    tree.degree(v)
                ));
            }
            Some(_) => {}
        }
    }
    Ok(())
}

pub(crate) trait HasSize {
    fn size(&self) -> usize;
}

impl HasSize for Node {
    fn size(&self) -> usize {
        Node::size(self)
    }
}

/// One level of the Albert–Atkinson decomposition of `nu` (`|nu| >= 2`).
pub fn substitution_decompose(nu: &Permutation) -> Result<(Node, Vec<Permutation>)> {
    let n = nu.len();
    if n < 2 {
        return invalid("cannot decompose a permutation of size 1");
    }
    let plus = nu.plus_components();
    if plus.len() > 1 {
        return Ok((Node::Plus(plus.len()), plus));
    }
    let minus = nu.minus_components();
    if minus.len() > 1 {
        return Ok((Node::Minus(minus.len()), minus));
    }
    // Simple root: the maximal proper blocks partition [n]; greedily take the
    // longest proper block starting at each cut.
    let v = nu.values();
    let mut parts = Vec::new();
    let mut leaders = Vec::new();
    let mut start = 0;
    while start < n {
        let (mut lo, mut hi) = (v[start], v[start]);
        let mut end = start;
        for j in start + 1..n {
            lo = lo.min(v[j]);
            hi = hi.max(v[j]);
            if (hi - lo) as usize == j - start && j - start + 1 < n {
                end = j;
            }
        }
        parts.push(standardize_distinct(&v[start..=end]));
        leaders.push(v[start]);
        start = end + 1;
    }
    let alpha = standardize_distinct(&leaders);
    debug_assert!(alpha.is_simple());
    Ok((Node::Simple(alpha), parts))
}

/// The canonical tree of `nu`; leaf `i` in depth-first order is entry `i`.
pub fn canonical_tree(nu: &Permutation) -> CanonicalTree {
    let mut tree = DecompositionTree::leaf();
    let mut work: Vec<(NodeId, Permutation)> = vec![(0, nu.clone())];
    while let Some((id, sigma)) = work.pop() {
        if sigma.len() == 1 {
            continue;
        }
        let (dec, parts) = substitution_decompose(&sigma).expect("size >= 2");
        tree.set_dec(id, Some(dec));
        let ids: Vec<NodeId> = parts.iter().map(|_| tree.add_child(id, None)).collect();
        work.extend(ids.into_iter().zip(parts).rev());
    }
    debug_assert!(CanonicalTree::new(tree.clone()).is_ok());
    CanonicalTree(tree)
}

/// Nested substitution; accepts non-canonical trees.
pub fn eval_tree(tree: &DecompositionTree) -> Result<Permutation> {
    check_arities(tree)?;
    let mut value: Vec<Option<Permutation>> = vec![None; tree.len()];
    for v in tree.preorder().into_iter().rev() {
        let perm = match tree.dec(v) {
            None => Permutation::identity(1),
            Some(dec) => {
                let parts: Vec<Permutation> =
                    tree.children(v).map(|c| value[c].take().expect("child evaluated")).collect();
                Permutation::substitute(&dec.theta(), &parts)?
            }
        };
        value[v] = Some(perm);
    }
    Ok(value[0].take().expect("root evaluated"))
}

/// Every simple decoration of the canonical tree of `nu` is in `spec`.
pub fn class_membership(nu: &Permutation, spec: &ClassSpec) -> bool {
    let tree = canonical_tree(nu);
    (0..tree.len()).all(|v| match tree.dec(v) {
        Some(Node::Simple(a)) => spec.contains_simple(a),
        _ => true,
    })
}
