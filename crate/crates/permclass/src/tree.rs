//! Array-backed rooted plane trees: parent / first-child / next-sibling links
//! with a parallel decoration table. Node 0 is always the root.

pub type NodeId = usize;

const NIL: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct PlaneTree<D> {
    parent: Vec<usize>,
    first_child: Vec<usize>,
    last_child: Vec<usize>,
    next_sibling: Vec<usize>,
    degree: Vec<u32>,
    rank: Vec<u32>,
    depth: Vec<u32>,
    dec: Vec<Option<D>>,
}

impl<D> PlaneTree<D> {
    pub fn with_root(dec: Option<D>) -> Self {
        PlaneTree {
            parent: vec![NIL],
            first_child: vec![NIL],
            last_child: vec![NIL],
            next_sibling: vec![NIL],
            degree: vec![0],
            rank: vec![0],
            depth: vec![0],
            dec: vec![dec],
        }
    }

    pub fn leaf() -> Self {
        Self::with_root(None)
    }

    /// Appends a new last child under `parent`.
    pub fn add_child(&mut self, parent: NodeId, dec: Option<D>) -> NodeId {
        let id = self.parent.len();
        self.parent.push(parent);
        self.first_child.push(NIL);
        self.last_child.push(NIL);
        self.next_sibling.push(NIL);
        self.rank.push(self.degree[parent]);
        self.degree.push(0);
        self.depth.push(self.depth[parent] + 1);
        self.dec.push(dec);
        match self.last_child[parent] {
            NIL => self.first_child[parent] = id,
            last => self.next_sibling[last] = id,
        }
        self.last_child[parent] = id;
        self.degree[parent] += 1;
        id
    }

    pub fn root(&self) -> NodeId {
        0
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        (self.parent[v] != NIL).then_some(self.parent[v])
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.degree[v] as usize
    }

    /// 0-based position of `v` among its siblings.
    pub fn rank(&self, v: NodeId) -> usize {
        self.rank[v] as usize
    }

    pub fn depth(&self, v: NodeId) -> usize {
        self.depth[v] as usize
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.degree[v] == 0
    }

    pub fn dec(&self, v: NodeId) -> Option<&D> {
        self.dec[v].as_ref()
    }

    pub fn set_dec(&mut self, v: NodeId, dec: Option<D>) {
        self.dec[v] = dec;
    }

    pub fn children(&self, v: NodeId) -> Children<'_, D> {
        Children { tree: self, next: self.first_child[v] }
    }

    pub fn child(&self, v: NodeId, i: usize) -> Option<NodeId> {
        self.children(v).nth(i)
    }

    /// Vertices in depth-first (preorder) order of the subtree at `v`.
    pub fn preorder_from(&self, v: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            out.push(u);
            let start = stack.len();
            stack.extend(self.children(u));
            stack[start..].reverse();
        }
        out
    }

    pub fn preorder(&self) -> Vec<NodeId> {
        self.preorder_from(0)
    }

    /// Leaves in depth-first order; the i-th entry is leaf `i + 1`.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.preorder().into_iter().filter(|&v| self.is_leaf(v)).collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.degree.iter().filter(|&&d| d == 0).count()
    }

    pub fn height(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0) as usize
    }

    /// Ancestors of `v` from its parent up to the root.
    pub fn ancestors(&self, v: NodeId) -> Ancestors<'_, D> {
        Ancestors { tree: self, next: self.parent[v] }
    }

    /// Closest common ancestor.
    pub fn lca(&self, mut u: NodeId, mut v: NodeId) -> NodeId {
        while self.depth[u] > self.depth[v] {
            u = self.parent[u];
        }
        while self.depth[v] > self.depth[u] {
            v = self.parent[v];
        }
        while u != v {
            u = self.parent[u];
            v = self.parent[v];
        }
        u
    }

    /// The ancestor of `v` (or `v` itself) that is a child of `anc`.
    pub fn child_toward(&self, anc: NodeId, mut v: NodeId) -> NodeId {
        while self.parent[v] != anc {
            v = self.parent[v];
        }
        v
    }

    /// `a` is an ancestor of `v` (or equal).
    pub fn is_ancestor(&self, a: NodeId, mut v: NodeId) -> bool {
        while self.depth[v] > self.depth[a] {
            v = self.parent[v];
        }
        v == a
    }

    /// Number of leaves in every subtree.
    pub fn subtree_leaf_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.len()];
        for v in self.preorder().into_iter().rev() {
            if self.is_leaf(v) {
                counts[v] = 1;
            }
            if let Some(p) = self.parent(v) {
                counts[p] += counts[v];
            }
        }
        counts
    }

    /// Copy of the fringe subtree rooted at `v`, plus the map from old to new ids.
    pub fn fringe(&self, v: NodeId) -> (PlaneTree<D>, Vec<(NodeId, NodeId)>)
    where
        D: Clone,
    {
        let mut out = PlaneTree::with_root(self.dec[v].clone());
        let mut map = vec![(v, 0)];
        let mut stack = vec![(v, 0)];
        while let Some((old, new)) = stack.pop() {
            let mut created = Vec::new();
            for c in self.children(old) {
                let id = out.add_child(new, self.dec[c].clone());
                map.push((c, id));
                created.push((c, id));
            }
            stack.extend(created.into_iter().rev());
        }
        (out, map)
    }

    pub fn map_dec<E>(&self, mut f: impl FnMut(NodeId, &D) -> E) -> PlaneTree<E> {
        PlaneTree {
            parent: self.parent.clone(),
            first_child: self.first_child.clone(),
            last_child: self.last_child.clone(),
            next_sibling: self.next_sibling.clone(),
            degree: self.degree.clone(),
            rank: self.rank.clone(),
            depth: self.depth.clone(),
            dec: self.dec.iter().enumerate().map(|(v, d)| d.as_ref().map(|d| f(v, d))).collect(),
        }
    }

    /// Undecorated copy.
    pub fn shape(&self) -> PlaneTree<()> {
        self.map_dec(|_, _| ())
    }

    /// Preorder outdegree sequence.
    pub fn degree_sequence(&self) -> Vec<u32> {
        self.preorder().into_iter().map(|v| self.degree[v]).collect()
    }

    /// Compares shape and decorations, independently of internal numbering.
    pub fn same_as(&self, other: &PlaneTree<D>) -> bool
    where
        D: PartialEq,
    {
        let (a, b) = (self.preorder(), other.preorder());
        a.len() == b.len()
            && a.iter().zip(&b).all(|(&u, &v)| self.degree[u] == other.degree[v] && self.dec[u] == other.dec[v])
    }
}

impl PlaneTree<()> {
    /// Rebuilds a tree from its preorder outdegree sequence (a Łukasiewicz word).
    pub fn from_degree_sequence(degrees: &[u32]) -> Option<Self> {
        let (&first, rest) = degrees.split_first()?;
        let mut tree = PlaneTree::with_root(None);
        let mut open: Vec<(NodeId, u32)> = Vec::new();
        if first > 0 {
            open.push((0, first));
        }
        for &d in rest {
            let (parent, remaining) = open.last_mut()?;
            let parent = *parent;
            *remaining -= 1;
            if *remaining == 0 {
                open.pop();
            }
            let id = tree.add_child(parent, None);
            if d > 0 {
                open.push((id, d));
            }
        }
        open.is_empty().then_some(tree)
    }
}

impl<D: PartialEq> PartialEq for PlaneTree<D> {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl<D: Eq> Eq for PlaneTree<D> {}

pub struct Children<'a, D> {
    tree: &'a PlaneTree<D>,
    next: usize,
}

impl<D> Iterator for Children<'_, D> {
    type Item = NodeId;
    fn next(&mut self) -> Option<NodeId> {
        (self.next != NIL).then(|| {
            let cur = self.next;
            self.next = self.tree.next_sibling[cur];
            cur
        })
    }
}

pub struct Ancestors<'a, D> {
    tree: &'a PlaneTree<D>,
    next: usize,
}

impl<D> Iterator for Ancestors<'_, D> {
    type Item = NodeId;
    fn next(&mut self) -> Option<NodeId> {
        (self.next != NIL).then(|| {
            let cur = self.next;
            self.next = self.tree.parent[cur];
            cur
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PlaneTree<()> {
        // root(a(leaf, leaf), leaf, b(leaf))
        PlaneTree::from_degree_sequence(&[3, 2, 0, 0, 0, 1, 0]).unwrap()
    }

    #[test]
    fn degree_sequence_round_trip() {
        let t = sample();
        assert_eq!(t.len(), 7);
        assert_eq!(t.leaf_count(), 4);
        assert_eq!(t.degree_sequence(), vec![3, 2, 0, 0, 0, 1, 0]);
        assert_eq!(t.height(), 2);
        assert!(PlaneTree::from_degree_sequence(&[2, 0]).is_none());
        assert!(PlaneTree::from_degree_sequence(&[1, 0, 0]).is_none());
        assert_eq!(PlaneTree::from_degree_sequence(&[0]).unwrap().leaf_count(), 1);
    }

    #[test]
    fn navigation() {
        let t = sample();
        let leaves = t.leaves();
        assert_eq!(leaves.len(), 4);
        let (l1, l2, l4) = (leaves[0], leaves[1], leaves[3]);
        let a = t.parent(l1).unwrap();
        assert_eq!(t.lca(l1, l2), a);
        assert_eq!(t.lca(l1, l4), 0);
        assert_eq!(t.rank(l2), 1);
        assert_eq!(t.child_toward(0, l4), t.parent(l4).unwrap());
        assert!(t.is_ancestor(0, l4));
        assert!(!t.is_ancestor(a, l4));
        assert_eq!(t.ancestors(l1).collect::<Vec<_>>(), vec![a, 0]);
        assert_eq!(t.subtree_leaf_counts()[a], 2);
    }

    #[test]
    fn fringe_copy_and_equality() {
        let t = sample();
        let a = t.child(0, 0).unwrap();
        let (f, map) = t.fringe(a);
        assert_eq!(f.degree_sequence(), vec![2, 0, 0]);
        assert_eq!(map.len(), 3);
        // same shape built in a different order compares equal
        let mut u = PlaneTree::<()>::leaf();
        let x = u.add_child(0, None);
        u.add_child(0, None);
        let z = u.add_child(0, None);
        u.add_child(z, None);
        u.add_child(x, None);
        u.add_child(x, None);
        assert_eq!(u, t);
    }
}
