//! Local topologies: rooted permutations with `r_h` and `d_p`, pointed trees
//! with `f•_h` and `d_t`, and the realization of rooted permutations from
//! (pointed) packed trees.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::class::ClassSpec;
use crate::decomposition::{eval_tree, pattern_from_inversions, unpack};
use crate::error::{invalid, Error, Result};
use crate::perm::Permutation;
use crate::sampler::PointedPackedTree;
use crate::tree::{NodeId, PlaneTree};

/// A finite rooted permutation `(ν, i)`, `i` 1-based; equivalently the total
/// order on `A = [1-i, |ν|-i]` with `ℓ ≼ j` iff `ν(ℓ+i) ≤ ν(j+i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RootedPermutation {
    pub perm: Permutation,
    pub root: usize,
}

impl RootedPermutation {
    pub fn new(perm: Permutation, root: usize) -> Result<Self> {
        if root == 0 || root > perm.len() {
            return invalid(format!("root {root} outside 1..{}", perm.len()));
        }
        Ok(RootedPermutation { perm, root })
    }

    /// The window `A` as `(lo, hi)`.
    pub fn window(&self) -> (i64, i64) {
        (1 - self.root as i64, (self.perm.len() - self.root) as i64)
    }

    /// `ℓ ≼ j` for `ℓ, j ∈ A`.
    pub fn precedes(&self, l: i64, j: i64) -> bool {
        let at = |x: i64| self.perm.at((x + self.root as i64) as usize);
        at(l) <= at(j)
    }

    /// Rebuilds from a window and a total order given by ranks.
    pub fn from_order(lo: i64, ranks: &[u32]) -> Result<Self> {
        if lo > 0 || (lo + ranks.len() as i64) <= 0 {
            return invalid("window must contain 0");
        }
        Ok(RootedPermutation { perm: Permutation::new(ranks.to_vec())?, root: (1 - lo) as usize })
    }
}

impl fmt::Display for RootedPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.perm, self.root)
    }
}

/// `r_h`: the pattern on positions `[max(1, i-h), min(|ν|, i+h)]`.
pub fn restrict_rooted(r: &RootedPermutation, h: usize) -> RootedPermutation {
    let a = r.root.saturating_sub(h).max(1);
    let b = (r.root + h).min(r.perm.len());
    RootedPermutation { perm: r.perm.window(a, b), root: r.root - a + 1 }
}

/// `d_p = 2^{-sup{h : r_h(r1) = r_h(r2)}}`; zero for equal arguments.
pub fn perm_local_distance(r1: &RootedPermutation, r2: &RootedPermutation) -> f64 {
    if r1 == r2 {
        return 0.0;
    }
    // r_0 always agrees; agreement is monotone in h
    let limit = r1.perm.len().max(r2.perm.len());
    let mut sup = 0;
    for h in 1..=limit {
        if restrict_rooted(r1, h) != restrict_rooted(r2, h) {
            break;
        }
        sup = h;
    }
    2f64.powi(-(sup as i32))
}

/// `f•_h`: the fringe at the `h`-th ancestor of `leaf` (the root when the spine
/// is shorter), with the image of `leaf`.
pub fn pointed_fringe<D: Clone>(tree: &PlaneTree<D>, leaf: NodeId, h: usize) -> (PlaneTree<D>, NodeId) {
    let top = tree.ancestors(leaf).take(h).last().unwrap_or(leaf);
    let (fringe, map) = tree.fringe(top);
    let image = map.iter().find(|&&(old, _)| old == leaf).expect("leaf lies in its fringe").1;
    (fringe, image)
}

/// `d_t = 2^{-sup{h : f•_h(t1) = f•_h(t2)}}` on pointed decorated trees.
pub fn tree_local_distance<D: Clone + PartialEq>(t1: (&PlaneTree<D>, NodeId), t2: (&PlaneTree<D>, NodeId)) -> f64 {
    let same = |h: usize| {
        let (a, la) = pointed_fringe(t1.0, t1.1, h);
        let (b, lb) = pointed_fringe(t2.0, t2.1, h);
        a.same_as(&b) && same_position(&a, la, &b, lb)
    };
    if !same(0) {
        return 1.0;
    }
    // past both spines the fringes are frozen
    let limit = t1.0.depth(t1.1).max(t2.0.depth(t2.1));
    let mut sup = 0;
    for h in 1..=limit {
        if !same(h) {
            return 2f64.powi(-(sup as i32));
        }
        sup = h;
    }
    0.0
}

fn same_position<D>(a: &PlaneTree<D>, la: NodeId, b: &PlaneTree<D>, lb: NodeId) -> bool {
    let pa = a.preorder().iter().position(|&v| v == la);
    let pb = b.preorder().iter().position(|&v| v == lb);
    pa == pb
}

/// Leaves in DFS order, the index of the pointed leaf, and the contiguous runs of
/// explicit (non-stub) leaves before and after it.
struct LeafLayout {
    leaves: Vec<NodeId>,
    pos: usize,
    run_before: usize,
    run_after: usize,
    /// Leaf-index range `[lo, hi]` of each spine vertex's fringe.
    ranges: Vec<(usize, usize)>,
}

fn layout(pt: &PointedPackedTree) -> LeafLayout {
    let leaves = pt.tree.leaves();
    let mut index = vec![usize::MAX; pt.tree.len()];
    for (i, &l) in leaves.iter().enumerate() {
        index[l] = i;
    }
    let pos = index[pt.leaf];
    let run_before = leaves[..pos].iter().rev().take_while(|&&l| !pt.stub[l]).count();
    let run_after = leaves[pos + 1..].iter().take_while(|&&l| !pt.stub[l]).count();
    // leaf range of each spine vertex
    let mut lo = vec![usize::MAX; pt.tree.len()];
    let mut hi = vec![0; pt.tree.len()];
    for v in pt.tree.preorder().into_iter().rev() {
        if pt.tree.is_leaf(v) {
            lo[v] = index[v];
            hi[v] = index[v];
        }
        if let Some(p) = pt.tree.parent(v) {
            lo[p] = lo[p].min(lo[v]);
            hi[p] = hi[p].max(hi[v]);
        }
    }
    let ranges = pt.spine.iter().map(|&u| (lo[u], hi[u])).collect();
    LeafLayout { leaves, pos, run_before, run_after, ranges }
}

impl LeafLayout {
    /// Explicit leaves before/after the pointed leaf inside the fringe of `u_j`.
    fn counts(&self, j: usize) -> (usize, usize) {
        let (lo, hi) = self.ranges[j];
        (self.run_before.min(self.pos - lo), self.run_after.min(hi - self.pos))
    }
}

/// Lowest spine vertex `u_j` (`j ≥ 1`) whose fringe holds `before` explicit leaves
/// before and `after` after the pointed leaf and which pins down their order: a
/// gadget-decorated vertex when `spec` has simple permutations; any vertex for the
/// separable class (the sign is supplied separately); the root of a finite tree.
pub fn certified_root(pt: &PointedPackedTree, spec: &ClassSpec, before: usize, after: usize) -> Option<NodeId> {
    let lay = layout(pt);
    let separable = spec.simples().next().is_none();
    (1..pt.spine.len()).map(|j| (j, pt.spine[j])).find_map(|(j, u)| {
        let (b, a) = lay.counts(j);
        if b < before || a < after {
            return None;
        }
        let pinned =
            separable || pt.tree.dec(u).is_some_and(|d| d.is_gadget()) || (!pt.infinite && j == pt.spine.len() - 1);
        pinned.then_some(u)
    })
}

fn window_leaves(pt: &PointedPackedTree, before: usize, after: usize) -> Vec<NodeId> {
    let lay = layout(pt);
    lay.leaves[lay.pos - before..=lay.pos + after].to_vec()
}

/// The window `[-before, after]` of the rooted permutation realized by `pt`.
pub fn realize_window(
    pt: &PointedPackedTree,
    spec: &ClassSpec,
    before: usize,
    after: usize,
) -> Result<RootedPermutation> {
    if pt.infinite && spec.simples().next().is_none() {
        return invalid("separable infinite trees need a sign: use realize_signed");
    }
    if certified_root(pt, spec, before, after).is_none() {
        return Err(Error::InsufficientRealization(format!(
            "no certified fringe holds {before} leaves before and {after} after the pointed leaf"
        )));
    }
    let nodes = window_leaves(pt, before, after);
    let perm = pattern_from_inversions(nodes.len(), |a, b| pt.tree.is_inversion(nodes[a], nodes[b]));
    RootedPermutation::new(perm, before + 1)
}

/// `RP(P, ℓ)`: for a finite tree without stubs the full `(DT⁻¹(P), i)`, otherwise
/// the certified window of half-width `w`.
pub fn realize_rooted_permutation(pt: &PointedPackedTree, spec: &ClassSpec, w: usize) -> Result<RootedPermutation> {
    if !pt.infinite && pt.stub.iter().all(|s| !s) {
        let perm = eval_tree(&unpack(&pt.tree))?;
        let root = pt.tree.leaves().iter().position(|&l| l == pt.leaf).expect("pointed leaf") + 1;
        return RootedPermutation::new(perm, root);
    }
    realize_window(pt, spec, w, w)
}

/// Separable realization: `⊛` vertices alternate signs along each path, anchored
/// by `parent_plus` at the parent `u_1` of the pointed leaf; `⊕` reads as a
/// non-inversion.
pub fn realize_signed(
    pt: &PointedPackedTree,
    parent_plus: bool,
    before: usize,
    after: usize,
) -> Result<RootedPermutation> {
    let lay = layout(pt);
    let top = pt.spine.len() - 1;
    if top == 0 || lay.counts(top).0 < before || lay.counts(top).1 < after {
        return Err(Error::InsufficientRealization(format!(
            "fewer than {before}/{after} explicit leaves around the pointed leaf"
        )));
    }
    if (0..pt.tree.len()).any(|v| pt.tree.dec(v).is_some_and(|d| d.is_gadget())) {
        return invalid("signed realization applies to separable trees");
    }
    let nodes = lay.leaves[lay.pos - before..=lay.pos + after].to_vec();
    let anchor = pt.tree.depth(pt.spine[1]);
    let perm = pattern_from_inversions(nodes.len(), |a, b| {
        let u = pt.tree.lca(nodes[a], nodes[b]);
        let plus = parent_plus == ((pt.tree.depth(u) + anchor) % 2 == 0);
        !plus
    });
    RootedPermutation::new(perm, before + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::OffspringModel;
    use crate::decomposition::{canonical_tree, pack, PackedTree};
    use crate::sampler::{sample_limit_window, stream_rng};
    use proptest::prelude::*;
    use rand::Rng;

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    fn rp(s: &str, i: usize) -> RootedPermutation {
        RootedPermutation::new(p(s), i).unwrap()
    }

    #[test]
    fn restriction_examples() {
        assert_eq!(restrict_rooted(&rp("1532467", 3), 1), rp("321", 2));
        assert_eq!(restrict_rooted(&rp("87532461", 4), 2), rp("54213", 3));
        assert_eq!(restrict_rooted(&rp("2413", 2), 10), rp("2413", 2));
        assert_eq!(restrict_rooted(&rp("2413", 2), 0), rp("1", 1));
    }

    #[test]
    fn order_form_round_trip() {
        let r = rp("87532461", 4);
        assert_eq!(r.window(), (-3, 4));
        assert!(r.precedes(0, -1) && !r.precedes(-3, 0));
        assert_eq!(RootedPermutation::from_order(-3, r.perm.values()).unwrap(), r);
    }

    #[test]
    fn distance_examples() {
        let r = rp("2413", 2);
        assert_eq!(perm_local_distance(&r, &r), 0.0);
        // agree at r_0 only
        assert_eq!(perm_local_distance(&rp("12", 1), &rp("21", 1)), 1.0);
        // agree at r_1, differ at r_2
        assert_eq!(perm_local_distance(&rp("1234", 2), &rp("1243", 2)), 0.5);
    }

    #[test]
    fn tree_distance_examples() {
        let a: PackedTree = "(* (* . .) .)".parse().unwrap();
        let b: PackedTree = "(* (* . .) . .)".parse().unwrap();
        let la = a.leaves()[0];
        let lb = b.leaves()[0];
        assert_eq!(tree_local_distance((&a, la), (&a, la)), 0.0);
        // same parent, different grandparent
        assert_eq!(tree_local_distance((&a, la), (&b, lb)), 0.5);
        // different parent decoration
        let c: PackedTree = "(* (* . . .) .)".parse().unwrap();
        assert_eq!(tree_local_distance((&a, la), (&c, c.leaves()[0])), 1.0);
        // the pointed leaf's position matters
        assert_eq!(tree_local_distance((&a, la), (&a, a.leaves()[1])), 1.0);
    }

    #[test]
    fn fringe_nesting() {
        let t: PackedTree = "(* (* (* . .) .) . .)".parse().unwrap();
        let l = t.leaves()[1];
        for h in 0..4 {
            let (f, fl) = pointed_fringe(&t, l, h);
            for g in 0..=h {
                let (a, al) = pointed_fringe(&f, fl, g);
                let (b, bl) = pointed_fringe(&t, l, g);
                assert!(a.same_as(&b) && same_position(&a, al, &b, bl));
            }
        }
    }

    #[test]
    fn finite_realization() {
        let leaf = PointedPackedTree::from_finite(PackedTree::single_leaf(), 0).unwrap();
        assert_eq!(realize_rooted_permutation(&leaf, &ClassSpec::separable(), 1).unwrap(), rp("1", 1));
    }

    #[test]
    fn example_tree_window_reads_213() {
        let s4 = ClassSpec::from_simples("s4", vec![p("2413"), p("3142")]).unwrap();
        let tree: PackedTree = "(* . . (g 2413 [P2,L,L,P2] (* . (* . .) .) . (* . (* . .)) . . .))".parse().unwrap();
        let leaves = tree.leaves();
        // point at leaf 6 and read leaves 4, 6, 12 through a window around it
        let pt = PointedPackedTree::from_finite(tree.clone(), leaves[5]).unwrap();
        let full = realize_rooted_permutation(&pt, &s4, 0).unwrap();
        let ix = [4usize, 6, 12];
        let pat = full.perm.pattern_at(&ix).unwrap();
        assert_eq!(pat, p("213"));
        // the same window read through the gadget-rooted fringe
        let w = realize_window(&pt, &s4, 2, 6).unwrap();
        assert_eq!(w.perm.pattern_at(&[1, 3, 9]).unwrap(), p("213"));
    }

    #[test]
    fn signs_give_complements() {
        let tree: PackedTree = "(* (* . .) .)".parse().unwrap();
        let first = tree.leaves()[0];
        let pt = PointedPackedTree::from_finite(tree, first).unwrap();
        let plus = realize_signed(&pt, true, 0, 2).unwrap();
        let minus = realize_signed(&pt, false, 0, 2).unwrap();
        assert_eq!(plus.perm, minus.perm.complement());
        // the finite convention puts ⊖ at the root, so ⊕ at depth 1
        let finite = realize_rooted_permutation(&pt, &ClassSpec::separable(), 0).unwrap();
        assert_eq!(finite, plus);
        assert_eq!(plus, rp("231", 1));
    }

    #[test]
    fn uncertifiable_window() {
        let s4 = ClassSpec::from_simples("s4", vec![p("2413"), p("3142")]).unwrap();
        let model = OffspringModel::auto(&s4).unwrap();
        let mut rng = stream_rng(31, 0);
        let pt = sample_limit_window(&model, &s4, 1, 1, 10_000, &mut rng).unwrap();
        assert!(realize_window(&pt, &s4, 1, 1).is_ok());
        assert!(matches!(realize_window(&pt, &s4, 500, 500), Err(Error::InsufficientRealization(_))));
    }

    #[test]
    fn restriction_commutes_with_realization() {
        let s4 = ClassSpec::from_simples("s4", vec![p("2413"), p("3142")]).unwrap();
        let model = OffspringModel::auto(&s4).unwrap();
        let mut rng = stream_rng(32, 0);
        for _ in 0..100 {
            let pt = sample_limit_window(&model, &s4, 3, 3, 10_000, &mut rng).unwrap();
            let wide = realize_window(&pt, &s4, 3, 3).unwrap();
            let h = rng.gen_range(0..=3);
            assert_eq!(restrict_rooted(&wide, h), realize_window(&pt, &s4, h, h).unwrap());
        }
    }

    #[test]
    fn finite_realization_matches_decode() {
        let s4 = ClassSpec::from_simples("s4", vec![p("2413"), p("3142")]).unwrap();
        for nu in Permutation::all(6).filter(|nu| nu.plus_components().len() == 1) {
            let Ok(tree) = pack(&canonical_tree(&nu)) else { continue };
            if !tree.decorations_in(&s4) {
                continue;
            }
            for (i, &l) in tree.leaves().iter().enumerate() {
                let pt = PointedPackedTree::from_finite(tree.clone(), l).unwrap();
                assert_eq!(
                    realize_rooted_permutation(&pt, &s4, 0).unwrap(),
                    RootedPermutation::new(nu.clone(), i + 1).unwrap()
                );
            }
        }
    }

    fn arb_rooted() -> impl Strategy<Value = RootedPermutation> {
        (1usize..7).prop_flat_map(|n| {
            (Just(n), Just((1..=n as u32).collect::<Vec<_>>()).prop_shuffle(), 1..=n)
                .prop_map(|(_, v, i)| RootedPermutation::new(Permutation::new(v).unwrap(), i).unwrap())
        })
    }

    proptest! {
        #[test]
        fn perm_distance_is_ultrametric(a in arb_rooted(), b in arb_rooted(), c in arb_rooted()) {
            let (ab, bc, ac) = (perm_local_distance(&a, &b), perm_local_distance(&b, &c), perm_local_distance(&a, &c));
            prop_assert!(ac <= ab.max(bc));
            prop_assert_eq!(ab, perm_local_distance(&b, &a));
        }

        #[test]
        fn restriction_is_idempotent(a in arb_rooted(), h in 0usize..6, g in 0usize..6) {
            let once = restrict_rooted(&a, h);
            prop_assert_eq!(restrict_rooted(&once, h), once.clone());
            prop_assert_eq!(restrict_rooted(&once, g.min(h)), restrict_rooted(&a, g.min(h)));
        }

        #[test]
        fn tree_distance_is_ultrametric(seqs in proptest::collection::vec(proptest::collection::vec(0u32..3, 1..9), 3)) {
            let trees: Vec<PlaneTree<()>> = seqs.iter().map(|s| tree_from_code(s)).collect();
            let pointed: Vec<(&PlaneTree<()>, NodeId)> = trees.iter().map(|t| (t, *t.leaves().last().unwrap())).collect();
            let d = |i: usize, j: usize| tree_local_distance(pointed[i], pointed[j]);
            prop_assert!(d(0, 2) <= d(0, 1).max(d(1, 2)));
            prop_assert_eq!(d(0, 0), 0.0);
        }
    }

    /// A plane tree from an arbitrary code: vertex `i` receives `code[i]` children
    /// while vertices remain to be expanded.
    fn tree_from_code(code: &[u32]) -> PlaneTree<()> {
        let mut t: PlaneTree<()> = PlaneTree::leaf();
        let mut frontier = std::collections::VecDeque::from([0]);
        for &c in code {
            let Some(v) = frontier.pop_front() else { break };
            for _ in 0..c {
                frontier.push_back(t.add_child(v, None));
            }
        }
        t
    }
}
