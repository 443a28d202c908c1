use rand::seq::index;
use rand::Rng;

use crate::analytic::binomial_f64;
use crate::class::ClassSpec;
use crate::decomposition::{Gadget, PackedNode, PackedTree, Slot};
use crate::tree::PlaneTree;

/// A uniform decoration of size `d` among the `q_d` elements of `Ĝ(S)`.
pub fn sample_gadget<R: Rng + ?Sized>(d: usize, spec: &ClassSpec, rng: &mut R) -> PackedNode {
    assert!(d >= 2, "decorations have size at least 2");
    let weights: Vec<(usize, f64)> =
        spec.sizes().filter(|&a| a <= d).map(|a| (a, spec.s(a) as f64 * binomial_f64(d - 1, a - 1))).collect();
    let total = 1.0 + weights.iter().map(|w| w.1).sum::<f64>();
    let mut x = rng.gen::<f64>() * total;
    if x < 1.0 || weights.is_empty() {
        return PackedNode::Star(d);
    }
    x -= 1.0;
    let mut a = weights.last().expect("nonempty").0;
    for &(size, w) in &weights {
        if x < w {
            a = size;
            break;
        }
        x -= w;
    }
    let roots = spec.simples_of_size(a);
    let alpha = roots[rng.gen_range(0..roots.len())].clone();
    // uniform composition of d into a parts: choose a-1 of the d-1 cut points
    let mut cuts: Vec<usize> = index::sample(rng, d - 1, a - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    cuts.push(d);
    let mut prev = 0;
    let slots = cuts
        .into_iter()
        .map(|c| {
            let m = c - prev;
            prev = c;
            if m == 1 {
                Slot::Leaf
            } else {
                Slot::Plus(m)
            }
        })
        .collect();
    PackedNode::Gadget(Gadget::new(alpha, slots).expect("valid gadget"))
}

/// Independent uniform decorations on every internal vertex, in preorder.
pub fn decorate<R: Rng + ?Sized>(shape: &PlaneTree<()>, spec: &ClassSpec, rng: &mut R) -> PackedTree {
    let mut decs: Vec<Option<PackedNode>> = vec![None; shape.len()];
    for v in shape.preorder() {
        if !shape.is_leaf(v) {
            decs[v] = Some(sample_gadget(shape.degree(v), spec, rng));
        }
    }
    let mut tree = shape.map_dec(|_, _| PackedNode::Star(0));
    for (v, d) in decs.into_iter().enumerate() {
        tree.set_dec(v, d);
    }
    PackedTree::new_unchecked(tree)
}
