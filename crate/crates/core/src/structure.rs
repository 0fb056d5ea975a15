//! Finite structures with named binary relations.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::symbol::{Symbol, Vocabulary};

pub type Pair = (usize, usize);
pub type Relation = BTreeSet<Pair>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("vocabularies differ")]
    VocabularyMismatch,
    #[error("unknown relation symbol {0}")]
    UnknownSymbol(Symbol),
    #[error("duplicate relation symbol {0}")]
    DuplicateSymbol(Symbol),
    #[error("vertex {vertex} out of range for universe of size {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("permutation has length {got}, structure has {expected} vertices")]
    PermutationLength { expected: usize, got: usize },
    #[error("images do not form a bijection")]
    NotBijective,
}

/// A universe `0..n` with one binary relation per vocabulary symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Structure {
    n: usize,
    relations: BTreeMap<Symbol, Relation>,
}

impl Structure {
    pub fn new(n: usize) -> Self {
        Structure {
            n,
            relations: BTreeMap::new(),
        }
    }

    /// Adds `symbol` with the given pairs.
    pub fn with_relation(
        mut self,
        symbol: Symbol,
        pairs: impl IntoIterator<Item = Pair>,
    ) -> Result<Self, StructureError> {
        if self.relations.contains_key(&symbol) {
            return Err(StructureError::DuplicateSymbol(symbol));
        }
        let mut rel = Relation::new();
        for (u, v) in pairs {
            for x in [u, v] {
                if x >= self.n {
                    return Err(StructureError::VertexOutOfRange {
                        vertex: x,
                        n: self.n,
                    });
                }
            }
            rel.insert((u, v));
        }
        self.relations.insert(symbol, rel);
        Ok(self)
    }

    pub(crate) fn from_parts(n: usize, relations: BTreeMap<Symbol, Relation>) -> Self {
        debug_assert!(relations.values().flatten().all(|&(u, v)| u < n && v < n));
        Structure { n, relations }
    }

    pub(crate) fn into_parts(self) -> (usize, BTreeMap<Symbol, Relation>) {
        (self.n, self.relations)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vocabulary(&self) -> Vocabulary {
        self.relations.keys().cloned().collect()
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.relations.keys()
    }

    pub fn contains_symbol(&self, s: &Symbol) -> bool {
        self.relations.contains_key(s)
    }

    pub fn relation(&self, s: &Symbol) -> Option<&Relation> {
        self.relations.get(s)
    }

    pub fn relations(&self) -> &BTreeMap<Symbol, Relation> {
        &self.relations
    }

    /// Side-by-side union; the second structure's vertices are shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &Structure) -> Result<Structure, StructureError> {
        if !self.relations.keys().eq(other.relations.keys()) {
            return Err(StructureError::VocabularyMismatch);
        }
        let shift = self.n;
        let relations = self
            .relations
            .iter()
            .map(|(s, rel)| {
                let mut out = rel.clone();
                out.extend(
                    other.relations[s]
                        .iter()
                        .map(|&(u, v)| (u + shift, v + shift)),
                );
                (s.clone(), out)
            })
            .collect();
        Ok(Structure {
            n: self.n + other.n,
            relations,
        })
    }

    /// Keeps the symbols of `sub_vocab` and the vertices of `vertex_set`, renumbered in order.
    pub fn subrestriction(
        &self,
        sub_vocab: &Vocabulary,
        vertex_set: &BTreeSet<usize>,
    ) -> Result<Structure, StructureError> {
        if let Some(s) = sub_vocab.iter().find(|s| !self.relations.contains_key(*s)) {
            return Err(StructureError::UnknownSymbol(s.clone()));
        }
        if let Some(&v) = vertex_set.iter().find(|&&v| v >= self.n) {
            return Err(StructureError::VertexOutOfRange {
                vertex: v,
                n: self.n,
            });
        }
        let mut index = vec![usize::MAX; self.n];
        for (i, &v) in vertex_set.iter().enumerate() {
            index[v] = i;
        }
        let relations = sub_vocab
            .iter()
            .map(|s| {
                let rel = self.relations[s]
                    .iter()
                    .filter(|&&(u, v)| index[u] != usize::MAX && index[v] != usize::MAX)
                    .map(|&(u, v)| (index[u], index[v]))
                    .collect();
                (s.clone(), rel)
            })
            .collect();
        Ok(Structure {
            n: vertex_set.len(),
            relations,
        })
    }

    /// Renames vertex `v` to `p.image(v)`.
    pub fn apply_permutation(&self, p: &VertexPermutation) -> Result<Structure, StructureError> {
        if p.len() != self.n {
            return Err(StructureError::PermutationLength {
                expected: self.n,
                got: p.len(),
            });
        }
        let relations = self
            .relations
            .iter()
            .map(|(s, rel)| {
                (
                    s.clone(),
                    rel.iter().map(|&(u, v)| (p.image(u), p.image(v))).collect(),
                )
            })
            .collect();
        Ok(Structure {
            n: self.n,
            relations,
        })
    }

    /// Components of the Gaifman graph, each sorted, ordered by least element.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(u, v) in self.relations.values().flatten() {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..self.n {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().push(v);
        }
        groups.into_values().collect()
    }

    pub fn edge_count(&self) -> usize {
        self.relations.values().map(BTreeSet::len).sum()
    }
}

/// A bijection on `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexPermutation {
    images: Vec<usize>,
}

impl VertexPermutation {
    pub fn new(images: Vec<usize>) -> Result<Self, StructureError> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            if i >= images.len() || seen[i] {
                return Err(StructureError::NotBijective);
            }
            seen[i] = true;
        }
        Ok(VertexPermutation { images })
    }

    pub fn identity(n: usize) -> Self {
        VertexPermutation {
            images: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, v: usize) -> usize {
        self.images[v]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (v, &i) in self.images.iter().enumerate() {
            inv[i] = v;
        }
        VertexPermutation { images: inv }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: &str) -> Symbol {
        s.parse().unwrap()
    }

    fn cycle(n: usize) -> Structure {
        let pairs = (0..n).flat_map(|i| [(i, (i + 1) % n), ((i + 1) % n, i)]);
        Structure::new(n).with_relation(sym("0"), pairs).unwrap()
    }

    fn two_triangles() -> Structure {
        let tri = |o: usize| {
            (0..3).flat_map(move |i| [(o + i, o + (i + 1) % 3), (o + (i + 1) % 3, o + i)])
        };
        Structure::new(6)
            .with_relation(sym("0"), tri(0).chain(tri(3)))
            .unwrap()
    }

    #[test]
    fn union_of_cycle_and_triangles() {
        let u = cycle(6).disjoint_union(&two_triangles()).unwrap();
        assert_eq!(u.n(), 12);
        assert_eq!(u.edge_count(), 24);
        assert_eq!(u.connected_components().len(), 3);
    }

    #[test]
    fn union_of_single_edges() {
        let p2 = Structure::new(2).with_relation(sym("0"), [(0, 1)]).unwrap();
        let u = p2.disjoint_union(&p2).unwrap();
        assert_eq!(
            u.relation(&sym("0"))
                .unwrap()
                .iter()
                .copied()
                .collect::<Vec<_>>(),
            vec![(0, 1), (2, 3)]
        );
    }

    #[test]
    fn union_rejects_vocabulary_mismatch() {
        let a = Structure::new(1).with_relation(sym("0"), []).unwrap();
        let b = Structure::new(1).with_relation(sym("1"), []).unwrap();
        assert_eq!(
            a.disjoint_union(&b),
            Err(StructureError::VocabularyMismatch)
        );
    }

    #[test]
    fn subrestriction_cases() {
        let c6 = cycle(6);
        let path = c6
            .subrestriction(&c6.vocabulary(), &[0, 1, 2].into())
            .unwrap();
        assert_eq!(path.edge_count(), 4);
        let bare = c6
            .subrestriction(&Vocabulary::new(), &(0..6).collect())
            .unwrap();
        assert_eq!((bare.n(), bare.edge_count()), (6, 0));
        let empty = c6
            .subrestriction(&c6.vocabulary(), &BTreeSet::new())
            .unwrap();
        assert_eq!((empty.n(), empty.edge_count()), (0, 0));
        assert!(c6
            .subrestriction(&[sym("1")].into(), &BTreeSet::new())
            .is_err());
    }

    #[test]
    fn permutation_cases() {
        let c6 = cycle(6);
        assert_eq!(
            c6.apply_permutation(&VertexPermutation::identity(6))
                .unwrap(),
            c6
        );
        let rot = VertexPermutation::new((0..6).map(|i| (i + 1) % 6).collect()).unwrap();
        assert_eq!(c6.apply_permutation(&rot).unwrap(), c6);
        let p2 = Structure::new(2).with_relation(sym("0"), [(0, 1)]).unwrap();
        let swapped = p2
            .apply_permutation(&VertexPermutation::new(vec![1, 0]).unwrap())
            .unwrap();
        assert!(swapped.relation(&sym("0")).unwrap().contains(&(1, 0)));
        assert!(c6
            .apply_permutation(&VertexPermutation::identity(5))
            .is_err());
        assert!(VertexPermutation::new(vec![0, 0]).is_err());
    }

    #[test]
    fn components() {
        assert_eq!(cycle(6).connected_components().len(), 1);
        let tt = two_triangles().connected_components();
        assert_eq!(tt.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 3]);
    }
}
