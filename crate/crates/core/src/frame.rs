//! Finite bimodal frames: a quasi-order `R` and an equivalence `E` over a
//! small world set, with the derived relations and the depth/layer machinery
//! built on top of them.
//!
//! Relations are dense boolean matrices with bit-packed rows, so every
//! relational query is a handful of word operations per world.

use std::fmt;

use thiserror::Error;

/// Hard cap on frame size; one machine word per relation row.
pub const MAX_WORLDS: usize = 64;

/// A subset of the worlds of a frame of known size.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WorldSet {
    universe: u16,
    bits: u64,
}

impl WorldSet {
    fn mask(universe: usize) -> u64 {
        if universe == 64 {
            !0
        } else {
            (1u64 << universe) - 1
        }
    }

    pub fn empty(universe: usize) -> Self {
        assert!(universe <= MAX_WORLDS, "frame too large: {universe} worlds");
        WorldSet { universe: universe as u16, bits: 0 }
    }

    pub fn full(universe: usize) -> Self {
        assert!(universe <= MAX_WORLDS, "frame too large: {universe} worlds");
        WorldSet { universe: universe as u16, bits: Self::mask(universe) }
    }

    pub fn singleton(universe: usize, world: usize) -> Self {
        let mut s = Self::empty(universe);
        s.insert(world);
        s
    }

    pub fn from_bits(universe: usize, bits: u64) -> Self {
        assert!(universe <= MAX_WORLDS, "frame too large: {universe} worlds");
        WorldSet { universe: universe as u16, bits: bits & Self::mask(universe) }
    }

    pub fn from_worlds<I: IntoIterator<Item = usize>>(universe: usize, worlds: I) -> Self {
        let mut s = Self::empty(universe);
        for w in worlds {
            s.insert(w);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.universe as usize
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn contains(&self, world: usize) -> bool {
        world < self.universe() && self.bits & (1 << world) != 0
    }

    pub fn insert(&mut self, world: usize) {
        assert!(world < self.universe(), "world {world} out of range");
        self.bits |= 1 << world;
    }

    pub fn remove(&mut self, world: usize) {
        assert!(world < self.universe(), "world {world} out of range");
        self.bits &= !(1 << world);
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn union(&self, other: &WorldSet) -> WorldSet {
        debug_assert_eq!(self.universe, other.universe);
        WorldSet { universe: self.universe, bits: self.bits | other.bits }
    }

    pub fn intersect(&self, other: &WorldSet) -> WorldSet {
        debug_assert_eq!(self.universe, other.universe);
        WorldSet { universe: self.universe, bits: self.bits & other.bits }
    }

    pub fn minus(&self, other: &WorldSet) -> WorldSet {
        debug_assert_eq!(self.universe, other.universe);
        WorldSet { universe: self.universe, bits: self.bits & !other.bits }
    }

    pub fn complement(&self) -> WorldSet {
        WorldSet {
            universe: self.universe,
            bits: !self.bits & Self::mask(self.universe()),
        }
    }

    pub fn is_subset(&self, other: &WorldSet) -> bool {
        debug_assert_eq!(self.universe, other.universe);
        self.bits & !other.bits == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let bits = self.bits;
        (0..self.universe()).filter(move |w| bits & (1 << w) != 0)
    }

    /// Least world in the set, if any.
    pub fn min(&self) -> Option<usize> {
        if self.bits == 0 {
            None
        } else {
            Some(self.bits.trailing_zeros() as usize)
        }
    }
}

impl fmt::Debug for WorldSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A binary relation on `{0, .., n-1}`, one bit row per world.
///
/// `rows[x]` holds the successor set of `x`: bit `y` is set iff `x` relates
/// to `y`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    n: usize,
    rows: Vec<u64>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_WORLDS, "frame too large: {n} worlds");
        Relation { n, rows: vec![0; n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = Self::empty(n);
        for x in 0..n {
            r.rows[x] = 1 << x;
        }
        r
    }

    pub fn total(n: usize) -> Self {
        let mut r = Self::empty(n);
        let mask = WorldSet::mask(n);
        for row in &mut r.rows {
            *row = mask;
        }
        r
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut r = Self::empty(n);
        for &(x, y) in pairs {
            r.set(x, y);
        }
        r
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.rows[x] & (1 << y) != 0
    }

    pub fn set(&mut self, x: usize, y: usize) {
        assert!(x < self.n && y < self.n, "pair ({x},{y}) out of range");
        self.rows[x] |= 1 << y;
    }

    /// Successor set `{y : x -> y}`.
    pub fn row(&self, x: usize) -> WorldSet {
        WorldSet { universe: self.n as u16, bits: self.rows[x] }
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for x in 0..self.n {
            for y in 0..self.n {
                if self.contains(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// `{x : exists y in s with x -> y}`.
    pub fn preimage(&self, s: &WorldSet) -> WorldSet {
        let mut bits = 0;
        for x in 0..self.n {
            if self.rows[x] & s.bits != 0 {
                bits |= 1 << x;
            }
        }
        WorldSet { universe: self.n as u16, bits }
    }

    /// `{y : exists x in s with x -> y}`.
    pub fn image(&self, s: &WorldSet) -> WorldSet {
        let mut bits = 0;
        for x in s.iter() {
            bits |= self.rows[x];
        }
        WorldSet { universe: self.n as u16, bits }
    }

    /// Relational composite: `x -> z` iff `x -self-> y -other-> z` for some `y`.
    pub fn then(&self, other: &Relation) -> Relation {
        assert_eq!(self.n, other.n);
        let mut out = Relation::empty(self.n);
        for x in 0..self.n {
            let mut acc = 0;
            let mut left = self.rows[x];
            while left != 0 {
                let y = left.trailing_zeros() as usize;
                left &= left - 1;
                acc |= other.rows[y];
            }
            out.rows[x] = acc;
        }
        out
    }

    pub fn union(&self, other: &Relation) -> Relation {
        assert_eq!(self.n, other.n);
        let rows = self.rows.iter().zip(&other.rows).map(|(a, b)| a | b).collect();
        Relation { n: self.n, rows }
    }

    pub fn intersect(&self, other: &Relation) -> Relation {
        assert_eq!(self.n, other.n);
        let rows = self.rows.iter().zip(&other.rows).map(|(a, b)| a & b).collect();
        Relation { n: self.n, rows }
    }

    pub fn inverse(&self) -> Relation {
        let mut out = Relation::empty(self.n);
        for x in 0..self.n {
            for y in 0..self.n {
                if self.contains(x, y) {
                    out.set(y, x);
                }
            }
        }
        out
    }

    pub fn reflexive_closure(&self) -> Relation {
        let mut out = self.clone();
        for x in 0..self.n {
            out.rows[x] |= 1 << x;
        }
        out
    }

    pub fn transitive_closure(&self) -> Relation {
        let mut out = self.clone();
        for k in 0..self.n {
            let row_k = out.rows[k];
            for x in 0..self.n {
                if out.rows[x] & (1 << k) != 0 {
                    out.rows[x] |= row_k;
                }
            }
        }
        out
    }

    pub fn symmetric_closure(&self) -> Relation {
        self.union(&self.inverse())
    }

    /// Least equivalence containing the relation.
    pub fn equivalence_closure(&self) -> Relation {
        self.symmetric_closure().reflexive_closure().transitive_closure()
    }

    /// Least quasi-order containing the relation.
    pub fn quasi_order_closure(&self) -> Relation {
        self.reflexive_closure().transitive_closure()
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.n).all(|x| self.contains(x, x))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|x| self.row(x).iter().all(|y| self.contains(y, x)))
    }

    pub fn is_transitive(&self) -> bool {
        self.then(self).is_subrelation_of(self)
    }

    pub fn is_antisymmetric(&self) -> bool {
        (0..self.n).all(|x| {
            self.row(x).iter().all(|y| x == y || !self.contains(y, x))
        })
    }

    pub fn is_quasi_order(&self) -> bool {
        self.is_reflexive() && self.is_transitive()
    }

    pub fn is_equivalence(&self) -> bool {
        self.is_reflexive() && self.is_symmetric() && self.is_transitive()
    }

    pub fn is_subrelation_of(&self, other: &Relation) -> bool {
        assert_eq!(self.n, other.n);
        self.rows.iter().zip(&other.rows).all(|(a, b)| a & !b == 0)
    }

    /// First pair in `self` missing from `other`, scanning rows in order.
    pub fn witness_not_subrelation(&self, other: &Relation) -> Option<(usize, usize)> {
        for x in 0..self.n {
            let extra = self.rows[x] & !other.rows[x];
            if extra != 0 {
                return Some((x, extra.trailing_zeros() as usize));
            }
        }
        None
    }

    /// Equivalence classes ordered by least member. Requires an equivalence.
    pub fn classes(&self) -> Vec<WorldSet> {
        debug_assert!(self.is_equivalence());
        let mut seen = 0u64;
        let mut out = Vec::new();
        for x in 0..self.n {
            if seen & (1 << x) == 0 {
                let class = self.row(x);
                seen |= class.bits;
                out.push(class);
            }
        }
        out
    }

    /// Restriction to a subset, reindexed by the sorted member list.
    pub fn restrict_to(&self, worlds: &[usize]) -> Relation {
        let mut out = Relation::empty(worlds.len());
        for (i, &x) in worlds.iter().enumerate() {
            for (j, &y) in worlds.iter().enumerate() {
                if self.contains(x, y) {
                    out.set(i, j);
                }
            }
        }
        out
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Relation{:?}", self.pairs())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame must have at least one world")]
    Empty,
    #[error("frame exceeds {MAX_WORLDS} worlds: {0}")]
    TooManyWorlds(usize),
    #[error("relation sizes disagree: R on {r} worlds, E on {e}")]
    SizeMismatch { r: usize, e: usize },
    #[error("R is not a quasi-order: {0}")]
    NotQuasiOrder(&'static str),
    #[error("E is not an equivalence: {0}")]
    NotEquivalence(&'static str),
    #[error("commutation RE <= ER fails at x={x}, y={y}, y'={y_prime}")]
    CommutationFails { x: usize, y: usize, y_prime: usize },
}

/// A finite frame for the bimodal language: a quasi-order `R` and an
/// equivalence `E` with `RE <= ER` (every E-then-R step can be matched by an
/// R-then-E step). Immutable once validated.
#[derive(Clone, PartialEq, Eq)]
pub struct Ms4Frame {
    r: Relation,
    e: Relation,
    labels: Option<Vec<String>>,
}

impl Ms4Frame {
    /// Checks the three frame axioms and builds the frame.
    pub fn validate(r: Relation, e: Relation) -> Result<Ms4Frame, FrameError> {
        if r.size() != e.size() {
            return Err(FrameError::SizeMismatch { r: r.size(), e: e.size() });
        }
        if r.size() == 0 {
            return Err(FrameError::Empty);
        }
        if r.size() > MAX_WORLDS {
            return Err(FrameError::TooManyWorlds(r.size()));
        }
        if !r.is_reflexive() {
            return Err(FrameError::NotQuasiOrder("not reflexive"));
        }
        if !r.is_transitive() {
            return Err(FrameError::NotQuasiOrder("not transitive"));
        }
        if !e.is_reflexive() {
            return Err(FrameError::NotEquivalence("not reflexive"));
        }
        if !e.is_symmetric() {
            return Err(FrameError::NotEquivalence("not symmetric"));
        }
        if !e.is_transitive() {
            return Err(FrameError::NotEquivalence("not transitive"));
        }
        // RE <= ER: x E y R y' must be matched by x R x' E y'.
        let e_then_r = e.then(&r);
        let r_then_e = r.then(&e);
        if let Some((x, y_prime)) = e_then_r.witness_not_subrelation(&r_then_e) {
            let y = e
                .row(x)
                .iter()
                .find(|&y| r.contains(y, y_prime))
                .expect("composite pair must have an intermediate world");
            return Err(FrameError::CommutationFails { x, y, y_prime });
        }
        Ok(Ms4Frame { r, e, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Ms4Frame {
        assert_eq!(labels.len(), self.size());
        self.labels = Some(labels);
        self
    }

    pub fn size(&self) -> usize {
        self.r.size()
    }

    pub fn r(&self) -> &Relation {
        &self.r
    }

    pub fn e(&self) -> &Relation {
        &self.e
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, world: usize) -> String {
        match &self.labels {
            Some(ls) => ls[world].clone(),
            None => world.to_string(),
        }
    }

    pub fn worlds(&self) -> WorldSet {
        WorldSet::full(self.size())
    }

    /// The reachability quasi-order `Q`: first an R-step, then an E-step.
    /// This is the dual relation of the composite modality `dia . ex`.
    pub fn q_relation(&self) -> Relation {
        let q = self.r.then(&self.e);
        assert!(q.is_quasi_order(), "Q must be a quasi-order on a valid frame");
        q
    }

    /// `S = R union E`, the step relation for path conditions.
    pub fn s_relation(&self) -> Relation {
        self.r.union(&self.e)
    }

    /// `E_R = R intersect R^-1`, whose classes are the R-clusters.
    pub fn er_relation(&self) -> Relation {
        self.r.intersect(&self.r.inverse())
    }

    /// `E_Q = Q intersect Q^-1`, whose classes are the Q-clusters.
    pub fn eq_relation(&self) -> Relation {
        let q = self.q_relation();
        q.intersect(&q.inverse())
    }

    pub fn e_clusters(&self) -> Vec<WorldSet> {
        self.e.classes()
    }

    pub fn r_clusters(&self) -> Vec<WorldSet> {
        self.er_relation().classes()
    }

    pub fn q_clusters(&self) -> Vec<WorldSet> {
        self.eq_relation().classes()
    }

    /// Quasi-maximal points of `A`: members whose R-successors inside `A`
    /// all see them back.
    pub fn qmax(&self, a: &WorldSet) -> WorldSet {
        let mut out = WorldSet::empty(self.size());
        for x in a.iter() {
            let succs_in_a = self.r.row(x).intersect(a);
            if succs_in_a.iter().all(|y| self.r.contains(y, x)) {
                out.insert(x);
            }
        }
        out
    }

    /// Strict-maximal points of `A` (used on antisymmetric frames, where
    /// they coincide with the quasi-maximal points).
    pub fn max(&self, a: &WorldSet) -> WorldSet {
        let mut out = WorldSet::empty(self.size());
        for x in a.iter() {
            let succs_in_a = self.r.row(x).intersect(a);
            if succs_in_a.iter().all(|y| y == x) {
                out.insert(x);
            }
        }
        out
    }

    /// Strips quasi-maximal strata until the frame is exhausted.
    pub fn layers(&self) -> LayerDecomposition {
        let mut remaining = self.worlds();
        let mut layers = Vec::new();
        while !remaining.is_empty() {
            let layer = self.qmax(&remaining);
            if layer.is_empty() {
                // Unreachable on a quasi-order; kept so a corrupt relation
                // cannot loop forever.
                break;
            }
            remaining = remaining.minus(&layer);
            layers.push(layer);
        }
        LayerDecomposition { layers, residue: remaining }
    }

    /// Number of nonempty layers = length of the longest strict R-chain.
    pub fn depth(&self) -> usize {
        self.layers().layers.len()
    }

    /// 1-based layer index of a world.
    pub fn point_depth(&self, world: usize) -> usize {
        assert!(world < self.size());
        self.layers()
            .layers
            .iter()
            .position(|l| l.contains(world))
            .map(|i| i + 1)
            .expect("every world lies in some layer of a finite frame")
    }

    /// Depth of the quotient frame.
    pub fn q_depth(&self) -> usize {
        self.quotient().frame.depth()
    }

    /// Collapses E-classes to single worlds, lifting R existentially; the
    /// quotient carries the identity equivalence.
    pub fn quotient(&self) -> Quotient {
        let classes = self.e.classes();
        let m = classes.len();
        let mut class_of = vec![0usize; self.size()];
        for (i, c) in classes.iter().enumerate() {
            for x in c.iter() {
                class_of[x] = i;
            }
        }
        let mut r_bar = Relation::empty(m);
        for (a, ca) in classes.iter().enumerate() {
            let reach = self.r.image(ca);
            for (b, cb) in classes.iter().enumerate() {
                if !reach.intersect(cb).is_empty() {
                    r_bar.set(a, b);
                }
            }
        }
        let frame = Ms4Frame::validate(r_bar, Relation::identity(m))
            .expect("quotient of a valid frame is a valid frame");
        Quotient { frame, classes, class_of }
    }

    /// Intersects both relations with `U^2`. The result can violate the
    /// commutation axiom, so it is returned unvalidated with the verdict
    /// attached.
    pub fn restrict(&self, u: &WorldSet) -> Restriction {
        let worlds: Vec<usize> = u.iter().collect();
        let r = self.r.restrict_to(&worlds);
        let e = self.e.restrict_to(&worlds);
        let validity = Ms4Frame::validate(r.clone(), e.clone()).map(|_| ());
        Restriction { worlds, r, e, validity }
    }

    /// Worlds whose Q-cone is the whole frame.
    pub fn q_roots(&self) -> WorldSet {
        let q = self.q_relation();
        let full = self.worlds();
        let mut out = WorldSet::empty(self.size());
        for x in 0..self.size() {
            if q.row(x) == full {
                out.insert(x);
            }
        }
        out
    }

    pub fn si_class(&self) -> SiClass {
        let roots = self.q_roots();
        if roots == self.worlds() {
            SiClass::Simple
        } else if !roots.is_empty() {
            SiClass::SubdirectlyIrreducible
        } else {
            SiClass::NotSi
        }
    }

    /// A set is flat when R restricted to it is symmetric.
    pub fn flat(&self, a: &WorldSet) -> bool {
        a.iter().all(|x| {
            self.r.row(x).intersect(a).iter().all(|y| self.r.contains(y, x))
        })
    }

    /// A set is E-saturated when it is a union of E-clusters.
    pub fn e_saturated(&self, a: &WorldSet) -> bool {
        self.e.image(a) == *a
    }

    /// Passive points of `U`: members with no R-path that leaves `U` and
    /// comes back (x R y R z with y outside, z inside).
    pub fn passive_points(&self, u: &WorldSet) -> WorldSet {
        let outside = u.complement();
        let mut out = WorldSet::empty(self.size());
        for x in u.iter() {
            let active = self
                .r
                .row(x)
                .intersect(&outside)
                .iter()
                .any(|y| !self.r.row(y).intersect(u).is_empty());
            if !active {
                out.insert(x);
            }
        }
        out
    }
}

impl fmt::Debug for Ms4Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ms4Frame")
            .field("n", &self.size())
            .field("r", &self.r)
            .field("e", &self.e)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiClass {
    Simple,
    SubdirectlyIrreducible,
    NotSi,
}

/// Layer stratification of a frame. `residue` collects worlds in no finite
/// layer; on finite frames it is always empty and kept only so reports have
/// a stable shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerDecomposition {
    pub layers: Vec<WorldSet>,
    pub residue: WorldSet,
}

/// Quotient frame together with the class map that projects onto it.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub frame: Ms4Frame,
    pub classes: Vec<WorldSet>,
    pub class_of: Vec<usize>,
}

/// Unvalidated restriction of a frame to a subset, reindexed by `worlds`.
#[derive(Debug, Clone)]
pub struct Restriction {
    pub worlds: Vec<usize>,
    pub r: Relation,
    pub e: Relation,
    pub validity: Result<(), FrameError>,
}

impl Restriction {
    pub fn size(&self) -> usize {
        self.worlds.len()
    }

    pub fn into_frame(self) -> Result<Ms4Frame, FrameError> {
        self.validity?;
        Ms4Frame::validate(self.r, self.e)
    }
}

/// A finite frame with two equivalence relations and no commutation
/// requirement.
#[derive(Clone, PartialEq, Eq)]
pub struct S52Frame {
    e1: Relation,
    e2: Relation,
    labels: Option<Vec<String>>,
}

impl S52Frame {
    pub fn validate(e1: Relation, e2: Relation) -> Result<S52Frame, FrameError> {
        if e1.size() != e2.size() {
            return Err(FrameError::SizeMismatch { r: e1.size(), e: e2.size() });
        }
        if e1.size() == 0 {
            return Err(FrameError::Empty);
        }
        if e1.size() > MAX_WORLDS {
            return Err(FrameError::TooManyWorlds(e1.size()));
        }
        for (rel, which) in [(&e1, "E1"), (&e2, "E2")] {
            if !rel.is_reflexive() {
                return Err(FrameError::NotEquivalence(match which {
                    "E1" => "E1 not reflexive",
                    _ => "E2 not reflexive",
                }));
            }
            if !rel.is_symmetric() {
                return Err(FrameError::NotEquivalence(match which {
                    "E1" => "E1 not symmetric",
                    _ => "E2 not symmetric",
                }));
            }
            if !rel.is_transitive() {
                return Err(FrameError::NotEquivalence(match which {
                    "E1" => "E1 not transitive",
                    _ => "E2 not transitive",
                }));
            }
        }
        Ok(S52Frame { e1, e2, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> S52Frame {
        assert_eq!(labels.len(), self.size());
        self.labels = Some(labels);
        self
    }

    pub fn size(&self) -> usize {
        self.e1.size()
    }

    pub fn e1(&self) -> &Relation {
        &self.e1
    }

    pub fn e2(&self) -> &Relation {
        &self.e2
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Reads the pair as a bimodal frame (`R = E1`, `E = E2`); fails when
    /// the two equivalences do not commute.
    pub fn as_ms4(&self) -> Result<Ms4Frame, FrameError> {
        Ms4Frame::validate(self.e1.clone(), self.e2.clone())
    }
}

impl fmt::Debug for S52Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("S52Frame")
            .field("n", &self.size())
            .field("e1", &self.e1)
            .field("e2", &self.e2)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{chain_frame, grid_frame};

    /// Two worlds `a = 0`, `b = 1` with `a R b` and E total.
    pub(crate) fn two_world_slide() -> Ms4Frame {
        let r = Relation::from_pairs(2, &[(0, 0), (1, 1), (0, 1)]);
        let e = Relation::total(2);
        Ms4Frame::validate(r, e).unwrap()
    }

    #[test]
    fn validate_single_world() {
        let f = Ms4Frame::validate(Relation::identity(1), Relation::identity(1)).unwrap();
        assert_eq!(f.size(), 1);
    }

    #[test]
    fn validate_slide_frame() {
        let f = two_world_slide();
        assert_eq!(f.size(), 2);
    }

    #[test]
    fn identity_r_always_commutes() {
        let f = Ms4Frame::validate(Relation::identity(2), Relation::total(2)).unwrap();
        assert_eq!(f.depth(), 1);
    }

    #[test]
    fn validate_rejects_bad_relations() {
        let not_refl = Relation::from_pairs(2, &[(0, 1)]);
        assert!(matches!(
            Ms4Frame::validate(not_refl, Relation::identity(2)),
            Err(FrameError::NotQuasiOrder(_))
        ));

        let not_trans = Relation::from_pairs(3, &[(0, 0), (1, 1), (2, 2), (0, 1), (1, 2)]);
        assert!(matches!(
            Ms4Frame::validate(not_trans, Relation::identity(3)),
            Err(FrameError::NotQuasiOrder(_))
        ));

        let not_sym = Relation::from_pairs(2, &[(0, 0), (1, 1), (0, 1)]);
        assert!(matches!(
            Ms4Frame::validate(Relation::identity(2), not_sym),
            Err(FrameError::NotEquivalence(_))
        ));
    }

    #[test]
    fn validate_reports_commutation_witness() {
        // 0 E 1, 1 R 2, but 0 has no R-successor E-related to 2.
        let r = Relation::from_pairs(3, &[(0, 0), (1, 1), (2, 2), (1, 2)]);
        let e = Relation::from_pairs(3, &[(0, 0), (1, 1), (2, 2), (0, 1), (1, 0)]);
        let err = Ms4Frame::validate(r, e).unwrap_err();
        assert_eq!(err, FrameError::CommutationFails { x: 0, y: 1, y_prime: 2 });
    }

    #[test]
    fn q_relation_on_chain_is_r() {
        let f = chain_frame(3).unwrap();
        assert_eq!(f.q_relation(), *f.r());
        assert_eq!(f.s_relation(), *f.r());
        assert_eq!(f.er_relation(), Relation::identity(3));
    }

    #[test]
    fn q_relation_on_grid_is_total() {
        let (_, f) = grid_frame(2, 2).unwrap();
        assert_eq!(f.q_relation(), Relation::total(4));
    }

    #[test]
    fn q_relation_on_slide_frame() {
        let f = two_world_slide();
        assert_eq!(f.q_relation(), Relation::total(2));
        assert_eq!(f.eq_relation(), Relation::total(2));
        assert_eq!(f.er_relation(), Relation::identity(2));
    }

    #[test]
    fn qmax_examples() {
        let l3 = chain_frame(3).unwrap();
        assert_eq!(l3.qmax(&l3.worlds()), WorldSet::singleton(3, 0));
        assert_eq!(l3.qmax(&WorldSet::empty(3)), WorldSet::empty(3));

        let f = two_world_slide();
        assert_eq!(f.qmax(&f.worlds()), WorldSet::singleton(2, 1));
    }

    #[test]
    fn qmax_nonempty_on_nonempty_sets() {
        let f = two_world_slide();
        for bits in 1u64..4 {
            let a = WorldSet::from_bits(2, bits);
            assert!(!f.qmax(&a).is_empty(), "qmax of {a:?} empty");
        }
    }

    #[test]
    fn layers_of_chain() {
        let f = chain_frame(4).unwrap();
        let dec = f.layers();
        assert_eq!(dec.layers.len(), 4);
        for (i, layer) in dec.layers.iter().enumerate() {
            assert_eq!(*layer, WorldSet::singleton(4, i));
        }
        assert!(dec.residue.is_empty());
        assert_eq!(f.depth(), 4);
        assert_eq!(f.point_depth(0), 1);
        assert_eq!(f.point_depth(3), 4);
    }

    #[test]
    fn layers_of_cluster_and_slide() {
        let cluster = Ms4Frame::validate(Relation::total(3), Relation::identity(3)).unwrap();
        assert_eq!(cluster.depth(), 1);

        let f = two_world_slide();
        let dec = f.layers();
        assert_eq!(dec.layers, vec![WorldSet::singleton(2, 1), WorldSet::singleton(2, 0)]);
        assert_eq!(f.depth(), 2);
    }

    #[test]
    fn quotient_examples() {
        let l2 = chain_frame(2).unwrap();
        let q = l2.quotient();
        assert_eq!(q.frame.size(), 2);
        assert_eq!(*q.frame.r(), *l2.r());

        let f = two_world_slide();
        let q = f.quotient();
        assert_eq!(q.frame.size(), 1);
        assert_eq!(f.q_depth(), 1);
        assert_eq!(f.depth(), 2);

        let (_, grid) = grid_frame(2, 2).unwrap();
        let q = grid.quotient();
        assert_eq!(q.frame.size(), 2);
        assert_eq!(*q.frame.r(), Relation::total(2));
        assert_eq!(grid.q_depth(), 1);
    }

    #[test]
    fn quotient_class_map_is_p_morphism_for_both_relations() {
        for f in [chain_frame(3).unwrap(), two_world_slide(), grid_frame(2, 3).unwrap().1] {
            let q = f.quotient();
            let n = f.size();
            // Forth and back for (R, R-bar).
            for x in 0..n {
                for y in 0..n {
                    if f.r().contains(x, y) {
                        assert!(q.frame.r().contains(q.class_of[x], q.class_of[y]));
                    }
                }
                for beta in 0..q.frame.size() {
                    if q.frame.r().contains(q.class_of[x], beta) {
                        let ok = (0..n)
                            .any(|y| q.class_of[y] == beta && f.r().contains(x, y));
                        assert!(ok, "back condition fails at x={x}, beta={beta}");
                    }
                }
            }
            // Forth and back for (E, identity).
            for x in 0..n {
                for y in 0..n {
                    if f.e().contains(x, y) {
                        assert_eq!(q.class_of[x], q.class_of[y]);
                    }
                }
                // Identity on classes: the only E-bar-successor is the class
                // itself, witnessed by x.
                assert!(f.e().contains(x, x));
            }
        }
    }

    #[test]
    fn restrict_examples() {
        let l3 = chain_frame(3).unwrap();
        let d1 = l3.layers().layers[0];
        let sub = l3.restrict(&d1);
        assert_eq!(sub.size(), 1);
        assert!(sub.validity.is_ok());
        let f = sub.into_frame().unwrap();
        assert_eq!(f.size(), 1);

        let slide = two_world_slide();
        let sub = slide.restrict(&WorldSet::singleton(2, 0));
        assert_eq!(sub.size(), 1);
        assert!(sub.into_frame().is_ok());
    }

    #[test]
    fn q_roots_and_si_class() {
        let l3 = chain_frame(3).unwrap();
        assert_eq!(l3.q_roots(), WorldSet::singleton(3, 2));
        assert_eq!(l3.si_class(), SiClass::SubdirectlyIrreducible);

        let (_, grid) = grid_frame(2, 2).unwrap();
        assert_eq!(grid.q_roots(), grid.worlds());
        assert_eq!(grid.si_class(), SiClass::Simple);

        let two_chains =
            Ms4Frame::validate(Relation::identity(2), Relation::identity(2)).unwrap();
        assert!(two_chains.q_roots().is_empty());
        assert_eq!(two_chains.si_class(), SiClass::NotSi);
    }

    #[test]
    fn flat_saturated_passive() {
        let l2 = chain_frame(2).unwrap();
        for x in 0..2 {
            assert!(l2.flat(&WorldSet::singleton(2, x)));
        }

        let slide = two_world_slide();
        assert!(!slide.flat(&slide.e().row(0)));
        assert!(slide.e_saturated(&slide.worlds()));
        assert!(!slide.e_saturated(&WorldSet::singleton(2, 0)));

        // In L2 world 0 is the R-maximum; it cannot leave {0} and return.
        let u = WorldSet::singleton(2, 0);
        assert_eq!(l2.passive_points(&u), u);
    }

    #[test]
    fn depth_matches_longest_strict_chain_oracle() {
        // Independent oracle: longest path in the strict order by memoized DFS.
        fn longest_chain(f: &Ms4Frame) -> usize {
            fn go(f: &Ms4Frame, x: usize, memo: &mut [Option<usize>]) -> usize {
                if let Some(v) = memo[x] {
                    return v;
                }
                let mut best = 1;
                for y in f.r().row(x).iter() {
                    if !f.r().contains(y, x) {
                        best = best.max(1 + go(f, y, memo));
                    }
                }
                memo[x] = Some(best);
                best
            }
            let mut memo = vec![None; f.size()];
            (0..f.size()).map(|x| go(f, x, &mut memo)).max().unwrap_or(0)
        }

        for f in [
            chain_frame(1).unwrap(),
            chain_frame(4).unwrap(),
            two_world_slide(),
            grid_frame(2, 2).unwrap().1,
            grid_frame(3, 2).unwrap().1,
        ] {
            assert_eq!(f.depth(), longest_chain(&f), "depth oracle mismatch");
            let dec = f.layers();
            let mut seen = WorldSet::empty(f.size());
            for layer in &dec.layers {
                assert!(seen.intersect(layer).is_empty(), "layers overlap");
                seen = seen.union(layer);
            }
            assert_eq!(seen, f.worlds(), "layers do not cover the frame");
        }
    }
}
