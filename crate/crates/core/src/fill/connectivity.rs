//! Shield-tile connectivity by same-layer abutment.

use crate::geom::shared_boundary;
use crate::index::ShapeRef;
use crate::layout::{FillKind, Layout, NetClass};

/// Disjoint-set forest with path compression and union by rank.
#[derive(Clone, Debug)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        match self.rank[a].cmp(&self.rank[b]) {
            std::cmp::Ordering::Less => self.parent[a] = b,
            std::cmp::Ordering::Greater => self.parent[b] = a,
            std::cmp::Ordering::Equal => {
                self.parent[b] = a;
                self.rank[a] += 1;
            }
        }
    }
}

/// Ids of Shield fill tiles that cannot reach a Reference shape through a
/// chain of same-layer abutments (shared boundary of positive length).
/// Empty means every shield tile is grounded.
pub fn check_shield_connectivity(layout: &Layout) -> Vec<u64> {
    let index = layout.build_index();
    // Nodes: fills by position, then a single sink standing for "reference".
    let sink = layout.fills.len();
    let mut uf = UnionFind::new(sink + 1);
    for (fi, f) in layout.fills.iter().enumerate() {
        if f.kind != FillKind::Shield {
            continue;
        }
        for (rect, other) in index.touching(f.layer, &f.rect) {
            let connects = shared_boundary(&f.rect, rect) > 0 || f.rect.interiors_intersect(rect);
            if !connects {
                continue;
            }
            match other {
                ShapeRef::Net { net, .. } if layout.nets[net].class == NetClass::Reference => {
                    uf.union(fi, sink)
                }
                ShapeRef::Fill { fill }
                    if fill != fi && layout.fills[fill].kind == FillKind::Shield =>
                {
                    uf.union(fi, fill)
                }
                _ => {}
            }
        }
    }
    let grounded = uf.find(sink);
    let mut bad: Vec<u64> = layout
        .fills
        .iter()
        .enumerate()
        .filter(|(fi, f)| f.kind == FillKind::Shield && uf.find(*fi) != grounded)
        .map(|(_, f)| f.id)
        .collect();
    bad.sort_unstable();
    bad
}
