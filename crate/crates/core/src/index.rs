//! Per-layer R-tree over layout rectangles.

use rstar::{RTree, RTreeObject, AABB};

use crate::geom::Rect;

/// Where an indexed rectangle came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ShapeRef {
    /// `shape` is the position within `nets[net].shapes`.
    Net { net: usize, shape: usize },
    /// Position within whichever fill list the index was built from.
    Fill { fill: usize },
}

#[derive(Clone, Debug)]
struct Entry {
    rect: Rect,
    item: ShapeRef,
}

impl RTreeObject for Entry {
    type Envelope = AABB<[i64; 2]>;

    fn envelope(&self) -> Self::Envelope {
        AABB::from_corners(
            [self.rect.x_lo, self.rect.y_lo],
            [self.rect.x_hi, self.rect.y_hi],
        )
    }
}

/// One R-tree per routing layer.
#[derive(Clone, Debug, Default)]
pub struct ShapeIndex {
    layers: Vec<RTree<Entry>>,
}

impl ShapeIndex {
    pub fn new(num_layers: usize) -> Self {
        ShapeIndex {
            layers: (0..num_layers).map(|_| RTree::new()).collect(),
        }
    }

    /// Bulk-loads `(layer, rect, item)` triples.
    pub fn bulk(
        num_layers: usize,
        items: impl IntoIterator<Item = (usize, Rect, ShapeRef)>,
    ) -> Self {
        let mut per_layer: Vec<Vec<Entry>> = vec![Vec::new(); num_layers];
        for (layer, rect, item) in items {
            per_layer[layer].push(Entry { rect, item });
        }
        ShapeIndex {
            layers: per_layer.into_iter().map(RTree::bulk_load).collect(),
        }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn insert(&mut self, layer: usize, rect: Rect, item: ShapeRef) {
        self.layers[layer].insert(Entry { rect, item });
    }

    /// Every indexed rectangle on `layer` whose closed extent touches `area`
    /// (boundary contact included). Order is unspecified.
    pub fn touching<'a>(
        &'a self,
        layer: usize,
        area: &Rect,
    ) -> impl Iterator<Item = (&'a Rect, ShapeRef)> + 'a {
        let env = AABB::from_corners([area.x_lo, area.y_lo], [area.x_hi, area.y_hi]);
        self.layers[layer]
            .locate_in_envelope_intersecting(&env)
            .map(|e| (&e.rect, e.item))
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(RTree::size).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_includes_boundary_contact() {
        let mut idx = ShapeIndex::new(2);
        idx.insert(0, Rect::new(0, 0, 10, 10), ShapeRef::Fill { fill: 0 });
        idx.insert(0, Rect::new(20, 0, 30, 10), ShapeRef::Fill { fill: 1 });
        idx.insert(1, Rect::new(0, 0, 10, 10), ShapeRef::Fill { fill: 2 });
        let mut hits: Vec<_> = idx
            .touching(0, &Rect::new(10, 0, 15, 5))
            .map(|(_, r)| r)
            .collect();
        hits.sort();
        assert_eq!(hits, vec![ShapeRef::Fill { fill: 0 }]);
        assert_eq!(idx.len(), 3);
    }
}
