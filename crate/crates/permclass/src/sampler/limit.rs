//! Realizations of the two limit objects: the pointed tree `P•_∞` (a spine of
//! `ξ̂`-vertices with Galton–Watson branches) and the stretched skeleton tree
//! `T^{k,t}_Ω`.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::conditioned::gw_unconditioned;
use super::gadget::{decorate, sample_gadget};
use crate::analytic::OffspringModel;
use crate::class::ClassSpec;
use crate::decomposition::{PackedNode, PackedTree};
use crate::error::{Error, Result};
use crate::skeleton::{certified_root, remy_proper_tree, Omega};
use crate::tree::{NodeId, PlaneTree};

/// A finite piece of a pointed packed tree.
///
/// `tree` is rooted at the top realized spine vertex `spine[height]`. Vertices
/// flagged in `stub` are unexplored subtrees standing in as leaves: they are
/// never part of a certified window.
#[derive(Clone, Debug)]
pub struct PointedPackedTree {
    pub tree: PackedTree,
    pub leaf: NodeId,
    /// `spine[i] = u_i`; `spine[0] = leaf`.
    pub spine: Vec<NodeId>,
    pub stub: Vec<bool>,
    /// Whether the spine continues above the root (a realization of `P•_∞`).
    pub infinite: bool,
    /// Vertex budget of fully sampled fringe branches (0 when branches are explored lazily).
    pub fringe_cap: usize,
    /// Branches redrawn because they exceeded the budget.
    pub fringe_resamples: u64,
}

impl PointedPackedTree {
    /// A finite packed tree pointed at `leaf`.
    pub fn from_finite(tree: PackedTree, leaf: NodeId) -> Result<Self> {
        if leaf >= tree.len() || !tree.is_leaf(leaf) {
            return crate::error::invalid("the distinguished vertex must be a leaf");
        }
        let mut spine = vec![leaf];
        spine.extend(tree.ancestors(leaf));
        let stub = vec![false; tree.len()];
        Ok(PointedPackedTree { tree, leaf, spine, stub, infinite: false, fringe_cap: 0, fringe_resamples: 0 })
    }

    pub fn height(&self) -> usize {
        self.spine.len() - 1
    }

    /// Children counts of the spine vertices `u_1..u_h` with the rank of `u_{i-1}`.
    pub fn spine_offspring(&self) -> Vec<(usize, usize)> {
        (1..self.spine.len()).map(|i| (self.tree.degree(self.spine[i]), self.tree.rank(self.spine[i - 1]))).collect()
    }
}

/// A branch hanging off the spine, possibly partially explored.
#[derive(Clone, Debug)]
struct Branch {
    tree: PlaneTree<PackedNode>,
    stub: Vec<bool>,
}

impl Branch {
    fn stub() -> Self {
        Branch { tree: PlaneTree::leaf(), stub: vec![true] }
    }

    fn full(tree: PackedTree) -> Self {
        let n = tree.len();
        Branch { tree: tree.into_inner(), stub: vec![false; n] }
    }

    /// Lazily explores a `ξ`-Galton–Watson tree, nearest leaves first (from the
    /// right when `from_right`), until `need` leaves are found. Returns the count.
    fn explore<R: Rng + ?Sized>(
        model: &OffspringModel,
        spec: &ClassSpec,
        need: usize,
        from_right: bool,
        rng: &mut R,
    ) -> (Self, usize) {
        let mut b = Branch::stub();
        let mut found = 0;
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            if found >= need {
                break;
            }
            b.stub[v] = false;
            let d = model.sample_xi(rng);
            if d == 0 {
                found += 1;
                continue;
            }
            b.tree.set_dec(v, Some(sample_gadget(d, spec, rng)));
            let kids: Vec<NodeId> = (0..d).map(|_| b.tree.add_child(v, None)).collect();
            b.stub.resize(b.tree.len(), true);
            // the stack pops the nearest child first
            if from_right {
                stack.extend(kids);
            } else {
                stack.extend(kids.into_iter().rev());
            }
        }
        (b, found)
    }
}

struct Level {
    dec: PackedNode,
    left: Vec<Branch>,
    right: Vec<Branch>,
}

fn assemble(levels: &[Level], infinite: bool, fringe_cap: usize, fringe_resamples: u64) -> PointedPackedTree {
    let h = levels.len();
    let mut tree: PlaneTree<PackedNode> =
        PlaneTree::with_root(if h == 0 { None } else { Some(levels[h - 1].dec.clone()) });
    let mut stub = vec![false];
    let mut spine = vec![0; h + 1];
    spine[h] = 0;
    for i in (1..=h).rev() {
        let v = spine[i];
        let level = &levels[i - 1];
        for b in &level.left {
            copy_branch(&mut tree, &mut stub, v, b);
        }
        let dec = if i >= 2 { Some(levels[i - 2].dec.clone()) } else { None };
        spine[i - 1] = tree.add_child(v, dec);
        stub.push(false);
        for b in &level.right {
            copy_branch(&mut tree, &mut stub, v, b);
        }
    }
    PointedPackedTree {
        tree: PackedTree::new_unchecked(tree),
        leaf: spine[0],
        spine,
        stub,
        infinite,
        fringe_cap,
        fringe_resamples,
    }
}

fn copy_branch(tree: &mut PlaneTree<PackedNode>, stub: &mut Vec<bool>, parent: NodeId, b: &Branch) {
    let root = tree.add_child(parent, b.tree.dec(0).cloned());
    stub.push(b.stub[0]);
    let mut work = vec![(0, root)];
    while let Some((old, new)) = work.pop() {
        for c in b.tree.children(old) {
            let id = tree.add_child(new, b.tree.dec(c).cloned());
            stub.push(b.stub[c]);
            work.push((c, id));
        }
    }
}

fn spine_level<R: Rng + ?Sized>(model: &OffspringModel, spec: &ClassSpec, rng: &mut R) -> (usize, usize, PackedNode) {
    let d = model.sample_xi_hat(rng);
    let pos = rng.gen_range(0..d);
    (d, pos, sample_gadget(d, spec, rng))
}

fn full_branch<R: Rng + ?Sized>(
    model: &OffspringModel,
    spec: &ClassSpec,
    cap: usize,
    resamples: &mut u64,
    rng: &mut R,
) -> Branch {
    loop {
        if let Some(shape) = gw_unconditioned(model, cap, rng) {
            return Branch::full(decorate(&shape, spec, rng));
        }
        *resamples += 1;
    }
}

/// `P•_∞` up to spine height `h`, every branch sampled in full (branches above
/// `fringe_cap` vertices are redrawn and counted).
pub fn sample_limit_pointed_tree<R: Rng + ?Sized>(
    model: &OffspringModel,
    spec: &ClassSpec,
    h: usize,
    fringe_cap: usize,
    rng: &mut R,
) -> Result<PointedPackedTree> {
    if h == 0 || fringe_cap == 0 {
        return crate::error::invalid("spine height and fringe cap must be positive");
    }
    let mut resamples = 0;
    let mut levels = Vec::with_capacity(h);
    for _ in 0..h {
        let (d, pos, dec) = spine_level(model, spec, rng);
        let left = (0..pos).map(|_| full_branch(model, spec, fringe_cap, &mut resamples, rng)).collect();
        let right = (pos + 1..d).map(|_| full_branch(model, spec, fringe_cap, &mut resamples, rng)).collect();
        levels.push(Level { dec, left, right });
    }
    Ok(assemble(&levels, true, fringe_cap, resamples))
}

/// Grows `P•_∞` upward until the window of `before` leaves before and `after`
/// leaves after `u_0` is certified (see [`certified_root`]); branches are
/// explored lazily, nearest leaves first, so no truncation enters the window.
pub fn sample_limit_window<R: Rng + ?Sized>(
    model: &OffspringModel,
    spec: &ClassSpec,
    before: usize,
    after: usize,
    max_height: usize,
    rng: &mut R,
) -> Result<PointedPackedTree> {
    let (mut got_before, mut got_after) = (0, 0);
    let mut levels: Vec<Level> = Vec::new();
    while levels.len() < max_height {
        let (d, pos, dec) = spine_level(model, spec, rng);
        // left branches, nearest (rightmost) first
        let mut left: Vec<Branch> = Vec::with_capacity(pos);
        for _ in 0..pos {
            if got_before < before {
                let (b, f) = Branch::explore(model, spec, before - got_before, true, rng);
                got_before += f;
                left.push(b);
            } else {
                left.push(Branch::stub());
            }
        }
        left.reverse();
        let mut right = Vec::with_capacity(d - pos - 1);
        for _ in pos + 1..d {
            if got_after < after {
                let (b, f) = Branch::explore(model, spec, after - got_after, false, rng);
                got_after += f;
                right.push(b);
            } else {
                right.push(Branch::stub());
            }
        }
        levels.push(Level { dec, left, right });
        if got_before >= before && got_after >= after {
            let pt = assemble(&levels, true, 0, 0);
            if certified_root(&pt, spec, before, after).is_some() {
                return Ok(pt);
            }
        }
    }
    Err(Error::InsufficientRealization(format!(
        "no certified window of ({before}, {after}) leaves within spine height {max_height}"
    )))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitTreeOptions {
    /// Vertex budget of grafted Galton–Watson branches; `None` leaves them as stubs.
    pub graft_cap: Option<usize>,
}

impl Default for LimitTreeOptions {
    fn default() -> Self {
        LimitTreeOptions { graft_cap: Some(10_000) }
    }
}

/// A realization of `T^{k,t}_Ω`.
#[derive(Clone, Debug)]
pub struct LimitSkeletonTree {
    pub tree: PackedTree,
    /// `marks[j]` is distinguished vertex `j + 1`.
    pub marks: Vec<NodeId>,
    /// The proper `k`-tree drawn at the first step (leaf decorations are mark labels).
    pub ktree: PlaneTree<usize>,
    /// Stretch labels, indexed by the edges of `ktree` in preorder of their lower end.
    pub labels: Vec<f64>,
    /// Lower endpoint in `tree` of each labelled (central) edge.
    pub label_nodes: Vec<NodeId>,
    pub stub: Vec<bool>,
    pub t: usize,
    pub graft_resamples: u64,
}

/// Stretch vector with density `(3·5···(2k-3)) (Σs) exp(-(Σs)²/2)` on `(0,∞)^{2k-1}`:
/// the total is `χ_{2k}`-distributed and the split is uniform on the simplex.
pub fn sample_stretch<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let mut exp1 = || -(1.0 - rng.gen::<f64>()).ln();
    let gamma_k: f64 = (0..k).map(|_| exp1()).sum();
    let total = (2.0 * gamma_k).sqrt();
    let parts: Vec<f64> = (0..2 * k - 1).map(|_| exp1()).collect();
    let norm: f64 = parts.iter().sum();
    parts.into_iter().map(|x| total * x / norm).collect()
}

enum Task {
    /// `v` stands for vertex `x` of the proper k-tree.
    Skel {
        v: NodeId,
        x: NodeId,
    },
    /// `v` lies on the path toward k-tree vertex `y`, `steps` edges above it.
    Path {
        v: NodeId,
        y: NodeId,
        steps: usize,
    },
    Graft {
        v: NodeId,
    },
    Mark {
        v: NodeId,
    },
}

/// The four-step construction: uniform proper `k`-tree, stretch, thicken with
/// `ξ̂ - 1` / `ξ* - 2`, graft Galton–Watson branches (Ω-conditioned root degree at marks).
pub fn sample_limit_skeleton_tree<R: Rng + ?Sized>(
    k: usize,
    t: usize,
    model: &OffspringModel,
    spec: &ClassSpec,
    omega: &Omega,
    opts: &LimitTreeOptions,
    rng: &mut R,
) -> Result<LimitSkeletonTree> {
    if k == 0 {
        return crate::error::invalid("at least one distinguished vertex");
    }
    let omega_weights: Vec<f64> =
        (0..model.pmf.len()).map(|d| if omega.contains(d) { model.prob(d) } else { 0.0 }).collect();
    if omega_weights.iter().sum::<f64>() <= 0.0 {
        return crate::error::invalid("P(ξ ∈ Ω) must be positive");
    }
    let omega_dist = rand::distributions::WeightedIndex::new(&omega_weights).expect("positive mass");

    let ktree = remy_proper_tree(k, rng);
    let labels = sample_stretch(k, rng);
    let edge_index: Vec<usize> = {
        let mut idx = vec![usize::MAX; ktree.len()];
        for (i, v) in ktree.preorder().into_iter().skip(1).enumerate() {
            idx[v] = i;
        }
        idx
    };

    let mut shape: PlaneTree<()> = PlaneTree::leaf();
    let mut stub = vec![false];
    let mut marks = vec![0; k];
    let mut label_nodes = vec![0; 2 * k - 1];
    let mut resamples = 0;
    let mut work = vec![Task::Skel { v: 0, x: 0 }];
    let new_child = |shape: &mut PlaneTree<()>, stub: &mut Vec<bool>, v: NodeId| {
        stub.push(false);
        shape.add_child(v, None)
    };
    while let Some(task) = work.pop() {
        match task {
            Task::Skel { v, x } => {
                let kids: Vec<NodeId> = ktree.children(x).collect();
                if kids.is_empty() {
                    marks[*ktree.dec(x).expect("k-tree leaves are labelled") - 1] = v;
                    work.push(Task::Mark { v });
                    continue;
                }
                let d = if kids.len() == 1 { model.sample_xi_hat(rng) } else { model.sample_xi_star(rng) };
                let mut slots: Vec<usize> = index::sample(rng, d, kids.len()).into_vec();
                slots.sort_unstable();
                let mut next = 0;
                for i in 0..d {
                    let c = new_child(&mut shape, &mut stub, v);
                    if next < slots.len() && slots[next] == i {
                        let y = kids[next];
                        next += 1;
                        if t == 0 {
                            label_nodes[edge_index[y]] = c;
                        }
                        work.push(Task::Path { v: c, y, steps: 2 * t });
                    } else {
                        work.push(Task::Graft { v: c });
                    }
                }
            }
            Task::Path { v, y, steps } => {
                if steps == 0 {
                    work.push(Task::Skel { v, x: y });
                    continue;
                }
                let d = model.sample_xi_hat(rng);
                let pos = rng.gen_range(0..d);
                for i in 0..d {
                    let c = new_child(&mut shape, &mut stub, v);
                    if i == pos {
                        if steps - 1 == t {
                            label_nodes[edge_index[y]] = c;
                        }
                        work.push(Task::Path { v: c, y, steps: steps - 1 });
                    } else {
                        work.push(Task::Graft { v: c });
                    }
                }
            }
            Task::Mark { v } => {
                for _ in 0..omega_dist.sample_from(rng) {
                    let c = new_child(&mut shape, &mut stub, v);
                    work.push(Task::Graft { v: c });
                }
            }
            Task::Graft { v } => match opts.graft_cap {
                None => stub[v] = true,
                Some(cap) => {
                    let branch = loop {
                        if let Some(b) = gw_unconditioned(model, cap, rng) {
                            break b;
                        }
                        resamples += 1;
                    };
                    let mut copy = vec![(0, v)];
                    while let Some((old, new)) = copy.pop() {
                        for c in branch.children(old) {
                            let id = new_child(&mut shape, &mut stub, new);
                            copy.push((c, id));
                        }
                    }
                }
            },
        }
    }
    Ok(LimitSkeletonTree {
        tree: decorate(&shape, spec, rng),
        marks,
        ktree,
        labels,
        label_nodes,
        stub,
        t,
        graft_resamples: resamples,
    })
}

trait SampleFrom {
    fn sample_from<R: Rng + ?Sized>(&self, rng: &mut R) -> usize;
}

impl SampleFrom for rand::distributions::WeightedIndex<f64> {
    fn sample_from<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rand::distributions::Distribution::sample(self, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::stream_rng;
    use crate::stats::{chi_cdf, ks_p_value, ks_statistic, mean_se};

    fn s4() -> ClassSpec {
        ClassSpec::from_simples("s4", vec!["2413".parse().unwrap(), "3142".parse().unwrap()]).unwrap()
    }

    #[test]
    fn spine_offspring_is_size_biased() {
        let spec = s4();
        let m = OffspringModel::auto(&spec).unwrap();
        let mut rng = stream_rng(11, 0);
        let mut degs = Vec::new();
        let mut first = 0u64;
        let mut total = 0u64;
        for _ in 0..400 {
            let pt = sample_limit_pointed_tree(&m, &spec, 10, 5000, &mut rng).unwrap();
            assert!(pt.tree.is_leaf(pt.leaf));
            for (d, r) in pt.spine_offspring() {
                degs.push(d as f64);
                total += 1;
                first += (r == 0) as u64;
            }
        }
        let est = mean_se(&degs);
        assert!((est.mean - m.mean_xi_hat()).abs() < 4.0 * est.se, "{est:?}");
        // P(u_{i-1} is the first child) = E[1/ξ̂] = Σ P(ξ=d) = 1 - a
        let f = first as f64 / total as f64;
        assert!((f - (1.0 - m.a)).abs() < 4.0 * (f * (1.0 - f) / total as f64).sqrt());
    }

    #[test]
    fn lazy_window_is_certified() {
        for spec in [ClassSpec::separable(), s4()] {
            let m = OffspringModel::auto(&spec).unwrap();
            let mut rng = stream_rng(12, 0);
            for _ in 0..200 {
                let pt = sample_limit_window(&m, &spec, 2, 3, 10_000, &mut rng).unwrap();
                let root = certified_root(&pt, &spec, 2, 3).unwrap();
                assert!(pt.spine.contains(&root));
            }
        }
    }

    /// CDF of `Σu` under the stretch density, by midpoint integration of
    /// `S^{2k-1} e^{-S²/2}` (the simplex volume is `S^{2k-2}/(2k-2)!`).
    fn integrated_cdf(k: usize) -> impl Fn(f64) -> f64 {
        let h = 1e-3;
        let dens = move |s: f64| s.powi(2 * k as i32 - 1) * (-s * s / 2.0).exp();
        let mut cum = vec![0.0];
        for i in 0..12_000 {
            let x = (i as f64 + 0.5) * h;
            cum.push(cum[i] + dens(x) * h);
        }
        let total = *cum.last().unwrap();
        move |x: f64| {
            let i = ((x / h) as usize).min(cum.len() - 1);
            cum[i] / total
        }
    }

    #[test]
    fn stretch_total_is_chi() {
        for k in [1usize, 2, 3, 4] {
            let cdf = integrated_cdf(k);
            for x in [0.5, 1.5, 2.5, 4.0] {
                assert!((cdf(x) - chi_cdf(x, 2 * k)).abs() < 2e-3, "k={k} x={x}");
            }
            let mut rng = stream_rng(13, k as u64);
            let sums: Vec<f64> = (0..4000).map(|_| sample_stretch(k, &mut rng).iter().sum()).collect();
            let d = ks_statistic(&sums, &cdf);
            assert!(ks_p_value(d, sums.len()) > 1e-3, "k={k} D={d}");
        }
    }

    #[test]
    fn stretch_split_is_flat() {
        // coordinates of a flat simplex point with m parts are Beta(1, m-1)
        let mut rng = stream_rng(15, 0);
        let k = 3;
        let m = 2 * k - 1;
        let firsts: Vec<f64> = (0..4000)
            .map(|_| {
                let s = sample_stretch(k, &mut rng);
                s[0] / s.iter().sum::<f64>()
            })
            .collect();
        let d = ks_statistic(&firsts, |x| 1.0 - (1.0 - x).powi(m as i32 - 1));
        assert!(ks_p_value(d, firsts.len()) > 1e-3, "D={d}");
    }

    #[test]
    fn skeleton_tree_structure() {
        let spec = s4();
        let m = OffspringModel::auto(&spec).unwrap();
        let omega = Omega::leaves();
        let mut rng = stream_rng(14, 0);
        for k in 1..=3 {
            for t in 0..=2 {
                let lt = sample_limit_skeleton_tree(k, t, &m, &spec, &omega, &LimitTreeOptions::default(), &mut rng)
                    .unwrap();
                assert_eq!(lt.marks.len(), k);
                assert!(lt.marks.iter().all(|&v| lt.tree.is_leaf(v)));
                assert_eq!(lt.labels.len(), 2 * k - 1);
                // every mark sits at depth (2t+1) * (number of k-tree edges above it)
                for (j, &v) in lt.marks.iter().enumerate() {
                    let x = (0..lt.ktree.len()).find(|&x| lt.ktree.dec(x) == Some(&(j + 1))).unwrap();
                    assert_eq!(lt.tree.depth(v), (2 * t + 1) * lt.ktree.depth(x));
                }
            }
        }
    }
}
