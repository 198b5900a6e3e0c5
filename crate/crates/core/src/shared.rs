//! Hash-consed tree prefixes.
//!
//! Equal subtrees share one node, so a prefix of the fixed point of depth
//! `N` takes `O(N * kappa_N)` nodes instead of `2^N` bits. The substitution
//! and truncation act on node ids with memoization. This is what lets patch
//! censuses scan generation depths far beyond what a packed prefix can hold.

use std::collections::{BTreeMap, HashMap};

use crate::address::{Address, Letter};
use crate::bits::Bits;
use crate::complexity::Witnesses;
use crate::error::{Error, Result};
use crate::tree::{Substreetution, TreePrefix};

pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Node {
    color: u8,
    height: u32,
    kids: Option<(NodeId, NodeId)>,
}

/// An arena of distinct subtree prefixes. Two ids are equal iff the prefixes are.
pub struct SubtreeStore {
    s: Substreetution,
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
    images: HashMap<NodeId, NodeId>,
    truncations: HashMap<(NodeId, u32), NodeId>,
}

impl SubtreeStore {
    pub fn new(s: Substreetution) -> Self {
        SubtreeStore {
            s,
            nodes: Vec::new(),
            index: HashMap::new(),
            images: HashMap::new(),
            truncations: HashMap::new(),
        }
    }

    pub fn substitution(&self) -> &Substreetution {
        &self.s
    }

    /// Number of distinct nodes created so far.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn intern(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node);
        self.index.insert(node, id);
        id
    }

    pub fn leaf(&mut self, color: u8) -> NodeId {
        self.intern(Node {
            color,
            height: 1,
            kids: None,
        })
    }

    /// Panics if the children have different heights.
    pub fn node(&mut self, color: u8, a: NodeId, b: NodeId) -> NodeId {
        let h = self.height(a);
        assert_eq!(h, self.height(b), "children must have equal height");
        self.intern(Node {
            color,
            height: h + 1,
            kids: Some((a, b)),
        })
    }

    pub fn color(&self, id: NodeId) -> u8 {
        self.nodes[id as usize].color
    }

    pub fn height(&self, id: NodeId) -> u32 {
        self.nodes[id as usize].height
    }

    pub fn children(&self, id: NodeId) -> Option<(NodeId, NodeId)> {
        self.nodes[id as usize].kids
    }

    pub fn child(&self, id: NodeId, letter: Letter) -> Option<NodeId> {
        self.children(id).map(|(a, b)| match letter {
            Letter::A => a,
            Letter::B => b,
        })
    }

    /// First `n` lines of `id` (`n >= 1`). Returns `id` itself if it is not deeper than `n`.
    pub fn truncate(&mut self, id: NodeId, n: u32) -> NodeId {
        assert!(n >= 1, "truncation depth must be positive");
        if n >= self.height(id) {
            return id;
        }
        if let Some(&t) = self.truncations.get(&(id, n)) {
            return t;
        }
        let color = self.color(id);
        let t = if n == 1 {
            self.leaf(color)
        } else {
            let (a, b) = self.children(id).expect("height > n >= 2");
            let ta = self.truncate(a, n - 1);
            let tb = self.truncate(b, n - 1);
            self.node(color, ta, tb)
        };
        self.truncations.insert((id, n), t);
        t
    }

    /// The substitution image, of twice the height.
    pub fn apply(&mut self, id: NodeId) -> NodeId {
        if let Some(&t) = self.images.get(&id) {
            return t;
        }
        let img = self.s.images()[self.color(id) as usize];
        let t = match self.children(id) {
            None => {
                let a = self.leaf(img.a);
                let b = self.leaf(img.b);
                self.node(img.root, a, b)
            }
            Some((a, b)) => {
                let ha = self.apply(a);
                let hb = self.apply(b);
                let g = *self.s.grammar();
                let pick = |l: Letter| if l == Letter::A { ha } else { hb };
                let left = self.node(img.a, pick(g[0]), pick(g[1]));
                let right = self.node(img.b, pick(g[2]), pick(g[3]));
                self.node(img.root, left, right)
            }
        };
        self.images.insert(id, t);
        t
    }

    pub fn apply_truncated(&mut self, id: NodeId, n: u32) -> NodeId {
        let t = self.apply(id);
        self.truncate(t, n)
    }

    /// The first `depth` lines of the fixed point with the given root color.
    pub fn fixed_point(&mut self, root: u8, depth: u32) -> Result<NodeId> {
        if depth == 0 {
            return Err(Error::ZeroDepth);
        }
        if !self.s.fixes(root) {
            return Err(Error::NonFixedRoot { color: root });
        }
        let mut t = self.leaf(root);
        while self.height(t) < depth {
            t = self.apply_truncated(t, depth);
        }
        Ok(t)
    }

    pub fn from_prefix(&mut self, p: &TreePrefix) -> NodeId {
        self.intern_site(p, 0, 0)
    }

    fn intern_site(&mut self, p: &TreePrefix, level: u32, pos: usize) -> NodeId {
        let color = p.bit_at(level, pos) as u8;
        if level + 1 == p.depth() {
            return self.leaf(color);
        }
        let a = self.intern_site(p, level + 1, 2 * pos);
        let b = self.intern_site(p, level + 1, 2 * pos + 1);
        self.node(color, a, b)
    }

    pub fn to_prefix(&self, id: NodeId) -> TreePrefix {
        let depth = self.height(id);
        let mut bits = Bits::zeros((1usize << depth) - 1);
        // level by level; each line holds node ids left to right
        let mut line = vec![id];
        for level in 0..depth {
            let off = (1usize << level) - 1;
            for (i, &n) in line.iter().enumerate() {
                if self.color(n) == 1 {
                    bits.set(off + i, true);
                }
            }
            if level + 1 < depth {
                line = line
                    .iter()
                    .flat_map(|&n| {
                        let (a, b) = self.children(n).expect("not a leaf");
                        [a, b]
                    })
                    .collect();
            }
        }
        TreePrefix::new(depth, bits).expect("bit count matches depth")
    }

    /// All depth-`n` windows of `tree` rooted at addresses with
    /// `|w| <= height(tree) - n`, with minimal witnesses per parity class.
    ///
    /// Each level is kept as the set of distinct subtrees found there, with
    /// the lexicographically smallest address of each; the smallest address
    /// of a child is the smallest parent address extended by the letter.
    pub fn windows(&mut self, tree: NodeId, n: u32) -> Result<BTreeMap<NodeId, Witnesses>> {
        let depth = self.height(tree);
        if n == 0 || n > depth {
            return Err(Error::PatchDepth { n, depth });
        }
        let mut found: BTreeMap<NodeId, Witnesses> = BTreeMap::new();
        let mut level: BTreeMap<NodeId, Address> = BTreeMap::from([(tree, Address::empty())]);
        for l in 0..=depth - n {
            for (&id, addr) in &level {
                let p = self.truncate(id, n);
                found.entry(p).or_default().note(addr.clone());
            }
            if l == depth - n {
                break;
            }
            let mut next: BTreeMap<NodeId, Address> = BTreeMap::new();
            for (&id, addr) in &level {
                let (a, b) = self.children(id).expect("above the window floor");
                for (child, letter) in [(a, Letter::A), (b, Letter::B)] {
                    let mut w = addr.clone();
                    w.push(letter);
                    match next.get(&child) {
                        Some(old) if *old <= w => {}
                        _ => {
                            next.insert(child, w);
                        }
                    }
                }
            }
            level = next;
        }
        Ok(found)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_sharing() {
        let s = Substreetution::jacaranda();
        let j = s.fixed_point(0, 12).unwrap();
        let mut st = SubtreeStore::new(s);
        let id = st.from_prefix(&j);
        assert_eq!(st.to_prefix(id), j);
        // far fewer nodes than the 4095 sites
        assert!(st.len() < 400, "{}", st.len());
    }

    #[test]
    fn fixed_point_matches_packed_generation() {
        let s = Substreetution::jacaranda();
        let mut st = SubtreeStore::new(s.clone());
        for root in [0, 1] {
            for depth in [1, 2, 5, 9, 16] {
                let id = st.fixed_point(root, depth).unwrap();
                assert_eq!(st.to_prefix(id), s.fixed_point(root, depth).unwrap());
            }
        }
    }

    #[test]
    fn apply_matches_packed_apply() {
        let s = Substreetution::jacaranda();
        let mut st = SubtreeStore::new(s.clone());
        for enc in ["3:5a", "2:40", "4:fffe", "3:12"] {
            let t = TreePrefix::decode(enc).unwrap();
            let id = st.from_prefix(&t);
            let h = st.apply(id);
            assert_eq!(st.to_prefix(h), s.apply(&t).unwrap(), "{enc}");
            let ht = st.apply_truncated(id, 5);
            assert_eq!(st.to_prefix(ht), s.apply_truncated(&t, 5));
        }
    }

    #[test]
    fn deep_fixed_point_is_small() {
        let mut st = SubtreeStore::new(Substreetution::jacaranda());
        let j = st.fixed_point(0, 80).unwrap();
        assert_eq!(st.height(j), 80);
        assert!(st.len() < 200_000);
    }

    #[test]
    fn rejects_unfixed_root() {
        let s: Substreetution = "110,010;BBAB".parse().unwrap();
        let mut st = SubtreeStore::new(s);
        assert!(matches!(
            st.fixed_point(0, 4),
            Err(Error::NonFixedRoot { color: 0 })
        ));
    }
}
