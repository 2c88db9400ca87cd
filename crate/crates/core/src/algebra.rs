//! Finite Boolean algebras of world sets with operator tables, generated
//! subalgebras by worklist saturation, the approximate-existential closure
//! used to shrink countermodels, and the dual-frame construction on atoms.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formula::Formula;
use crate::frame::{FrameError, Ms4Frame, Relation, WorldSet};
use crate::semantics::{self, Budget, SemanticsError, Valuation, Verdict};

/// Which operator tables an algebra carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub dia: bool,
    pub ex: bool,
    pub bdia: bool,
}

impl Signature {
    pub const DIA: Signature = Signature { dia: true, ex: false, bdia: false };
    pub const EX: Signature = Signature { dia: false, ex: true, bdia: false };
    pub const DIA_EX: Signature = Signature { dia: true, ex: true, bdia: false };
    pub const DIA_BDIA: Signature = Signature { dia: true, ex: false, bdia: true };
}

/// A finite Boolean algebra of subsets of a frame's worlds, closed under the
/// operators in its signature. The carrier is sorted and deduplicated, and
/// operators are stored as index tables into it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteBao {
    universe: usize,
    carrier: Vec<WorldSet>,
    dia: Option<Vec<usize>>,
    ex: Option<Vec<usize>>,
    bdia: Option<Vec<usize>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("not a subalgebra: {0}")]
    NotSubalgebra(String),
    #[error("algebra identity fails: {0}")]
    IdentityViolation(String),
    #[error("dual frame is not a valid frame: {0}")]
    DualFrameInvalid(#[from] FrameError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

impl FiniteBao {
    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn carrier(&self) -> &[WorldSet] {
        &self.carrier
    }

    pub fn len(&self) -> usize {
        self.carrier.len()
    }

    pub fn is_empty(&self) -> bool {
        self.carrier.is_empty()
    }

    pub fn signature(&self) -> Signature {
        Signature { dia: self.dia.is_some(), ex: self.ex.is_some(), bdia: self.bdia.is_some() }
    }

    pub fn index_of(&self, set: &WorldSet) -> Option<usize> {
        self.carrier.binary_search(set).ok()
    }

    pub fn dia_table(&self) -> Option<&[usize]> {
        self.dia.as_deref()
    }

    pub fn ex_table(&self) -> Option<&[usize]> {
        self.ex.as_deref()
    }

    pub fn bdia_table(&self) -> Option<&[usize]> {
        self.bdia.as_deref()
    }

    pub fn apply_dia(&self, i: usize) -> usize {
        self.dia.as_ref().expect("dia table present")[i]
    }

    pub fn apply_ex(&self, i: usize) -> usize {
        self.ex.as_ref().expect("ex table present")[i]
    }

    fn bottom(&self) -> usize {
        self.index_of(&WorldSet::empty(self.universe)).expect("carrier contains empty set")
    }

    fn top(&self) -> usize {
        self.index_of(&WorldSet::full(self.universe)).expect("carrier contains full set")
    }

    fn meet(&self, i: usize, j: usize) -> usize {
        self.index_of(&self.carrier[i].intersect(&self.carrier[j]))
            .expect("carrier closed under meets")
    }

    fn join(&self, i: usize, j: usize) -> usize {
        self.index_of(&self.carrier[i].union(&self.carrier[j]))
            .expect("carrier closed under joins")
    }

    fn compl(&self, i: usize) -> usize {
        self.index_of(&self.carrier[i].complement()).expect("carrier closed under complement")
    }

    fn leq(&self, i: usize, j: usize) -> bool {
        self.carrier[i].is_subset(&self.carrier[j])
    }

    /// Minimal nonzero elements. In a finite Boolean algebra of sets these
    /// partition the union of the carrier.
    pub fn atoms(&self) -> Vec<WorldSet> {
        self.carrier
            .iter()
            .filter(|a| !a.is_empty())
            .filter(|a| {
                self.carrier
                    .iter()
                    .all(|b| b.is_empty() || !b.is_subset(a) || *b == **a)
            })
            .cloned()
            .collect()
    }

    /// Indices of elements fixed by the `ex` table.
    pub fn ex_fixpoints(&self) -> Vec<usize> {
        match &self.ex {
            None => Vec::new(),
            Some(table) => (0..self.carrier.len()).filter(|&i| table[i] == i).collect(),
        }
    }

    /// Indices of elements fixed by the dual of the `dia` table
    /// (`box a = -dia -a`).
    pub fn box_fixpoints(&self) -> Vec<usize> {
        match &self.dia {
            None => Vec::new(),
            Some(table) => (0..self.carrier.len())
                .filter(|&i| self.compl(table[self.compl(i)]) == i)
                .collect(),
        }
    }

    /// Checks the Boolean closure conditions of a carrier.
    fn check_boolean_closure(&self) -> Result<(), AlgebraError> {
        let err = |msg: String| Err(AlgebraError::NotSubalgebra(msg));
        if self.index_of(&WorldSet::empty(self.universe)).is_none() {
            return err("missing empty set".to_string());
        }
        if self.index_of(&WorldSet::full(self.universe)).is_none() {
            return err("missing full set".to_string());
        }
        for a in &self.carrier {
            if self.index_of(&a.complement()).is_none() {
                return err(format!("complement of {a:?} missing"));
            }
            for b in &self.carrier {
                if self.index_of(&a.intersect(b)).is_none() {
                    return err(format!("meet of {a:?} and {b:?} missing"));
                }
            }
        }
        Ok(())
    }

    /// Asserts, elementwise over the carrier, every algebra identity the
    /// signature requires: the closure-operator identities for each unary
    /// operator, the S5 law for `ex`, and left commutativity when both
    /// tables are present.
    pub fn verify_identities(&self) -> Result<(), AlgebraError> {
        let fail = |msg: String| Err(AlgebraError::IdentityViolation(msg));
        let bottom = self.bottom();
        let unary_tables: Vec<(&str, &[usize], bool)> = [
            ("dia", &self.dia, false),
            ("ex", &self.ex, true),
            ("bdia", &self.bdia, false),
        ]
        .into_iter()
        .filter_map(|(name, table, s5)| table.as_deref().map(|t| (name, t, s5)))
        .collect();

        for (name, table, s5) in &unary_tables {
            if table[bottom] != bottom {
                return fail(format!("{name} 0 != 0"));
            }
            for i in 0..self.carrier.len() {
                if !self.leq(i, table[i]) {
                    return fail(format!("a <= {name} a fails at {:?}", self.carrier[i]));
                }
                if !self.leq(table[table[i]], table[i]) {
                    return fail(format!("{name} {name} a <= {name} a fails at {:?}", self.carrier[i]));
                }
                for j in 0..self.carrier.len() {
                    if table[self.join(i, j)] != self.join(table[i], table[j]) {
                        return fail(format!(
                            "{name} (a | b) != {name} a | {name} b at {:?}, {:?}",
                            self.carrier[i], self.carrier[j]
                        ));
                    }
                }
                if *s5 {
                    // ex (-(ex -a)) <= -(ex -a), i.e. ex all a <= all a
                    let all_a = self.compl(table[self.compl(i)]);
                    if !self.leq(table[all_a], all_a) {
                        return fail(format!("ex all a <= all a fails at {:?}", self.carrier[i]));
                    }
                }
            }
        }

        if let (Some(dia), Some(ex)) = (&self.dia, &self.ex) {
            for i in 0..self.carrier.len() {
                if !self.leq(ex[dia[i]], dia[ex[i]]) {
                    return fail(format!(
                        "ex dia a <= dia ex a fails at {:?}",
                        self.carrier[i]
                    ));
                }
            }
        }
        Ok(())
    }
}

fn dia_of(frame: &Ms4Frame, a: &WorldSet) -> WorldSet {
    frame.r().preimage(a)
}

fn ex_of(frame: &Ms4Frame, a: &WorldSet) -> WorldSet {
    frame.e().image(a)
}

fn bdia_of(frame: &Ms4Frame, a: &WorldSet) -> WorldSet {
    frame.r().preimage(&frame.e().image(a))
}

fn build_tables(frame: &Ms4Frame, carrier: &[WorldSet], signature: Signature) -> FiniteBao {
    let index = |set: &WorldSet| -> usize {
        carrier.binary_search(set).expect("carrier closed under signature operators")
    };
    let table = |op: fn(&Ms4Frame, &WorldSet) -> WorldSet| -> Vec<usize> {
        carrier.iter().map(|a| index(&op(frame, a))).collect()
    };
    FiniteBao {
        universe: frame.size(),
        carrier: carrier.to_vec(),
        dia: signature.dia.then(|| table(dia_of)),
        ex: signature.ex.then(|| table(ex_of)),
        bdia: signature.bdia.then(|| table(bdia_of)),
    }
}

/// Full powerset algebra of a frame with both operator tables.
pub fn dual_algebra(frame: &Ms4Frame) -> FiniteBao {
    let n = frame.size();
    assert!(n <= 24, "powerset algebra materialization is capped at 24 worlds");
    let carrier: Vec<WorldSet> = (0u64..(1u64 << n)).map(|bits| WorldSet::from_bits(n, bits)).collect();
    build_tables(frame, &carrier, Signature::DIA_EX)
}

/// Least carrier containing the generators, the empty and full sets, closed
/// under meet, complement, and the operators in the signature. Worklist
/// saturation; the carrier comes out sorted, so the result is independent of
/// generator order.
pub fn generated_subalgebra(
    frame: &Ms4Frame,
    generators: &[WorldSet],
    signature: Signature,
) -> FiniteBao {
    let n = frame.size();
    let mut members: std::collections::BTreeSet<WorldSet> = std::collections::BTreeSet::new();
    let mut queue: Vec<WorldSet> = Vec::new();

    let mut push = |set: WorldSet, members: &mut std::collections::BTreeSet<WorldSet>, queue: &mut Vec<WorldSet>| {
        if members.insert(set) {
            queue.push(set);
        }
    };

    push(WorldSet::empty(n), &mut members, &mut queue);
    push(WorldSet::full(n), &mut members, &mut queue);
    for g in generators {
        assert_eq!(g.universe(), n, "generator universe mismatch");
        push(*g, &mut members, &mut queue);
    }

    while let Some(a) = queue.pop() {
        push(a.complement(), &mut members, &mut queue);
        if signature.dia {
            push(dia_of(frame, &a), &mut members, &mut queue);
        }
        if signature.ex {
            push(ex_of(frame, &a), &mut members, &mut queue);
        }
        if signature.bdia {
            push(bdia_of(frame, &a), &mut members, &mut queue);
        }
        let snapshot: Vec<WorldSet> = members.iter().copied().collect();
        for b in snapshot {
            push(a.intersect(&b), &mut members, &mut queue);
        }
    }

    let carrier: Vec<WorldSet> = members.into_iter().collect();
    build_tables(frame, &carrier, signature)
}

/// Extends a dia-closed Boolean subalgebra with the least existential
/// approximation: `ex' a` is the meet of the E-saturated members of the
/// carrier above `a`. The result satisfies every bimodal algebra identity,
/// which is asserted before returning.
pub fn approximate_exists(frame: &Ms4Frame, sub: &FiniteBao) -> Result<FiniteBao, AlgebraError> {
    if sub.universe != frame.size() {
        return Err(AlgebraError::NotSubalgebra("universe mismatch".to_string()));
    }
    sub.check_boolean_closure()?;
    let dia_table = sub
        .dia
        .as_ref()
        .ok_or_else(|| AlgebraError::NotSubalgebra("missing dia table".to_string()))?;
    for (i, &di) in dia_table.iter().enumerate() {
        if sub.carrier[di] != dia_of(frame, &sub.carrier[i]) {
            return Err(AlgebraError::NotSubalgebra("dia table disagrees with frame".to_string()));
        }
    }

    // E-saturated members of the carrier are exactly the fixpoints of the
    // frame's existential operator that happen to lie in the carrier.
    let saturated: Vec<usize> = (0..sub.carrier.len())
        .filter(|&i| ex_of(frame, &sub.carrier[i]) == sub.carrier[i])
        .collect();

    let ex_table: Vec<usize> = (0..sub.carrier.len())
        .map(|i| {
            let mut acc = WorldSet::full(sub.universe);
            for &j in &saturated {
                if sub.leq(i, j) {
                    acc = acc.intersect(&sub.carrier[j]);
                }
            }
            sub.index_of(&acc).expect("meet of carrier members is in the carrier")
        })
        .collect();

    let out = FiniteBao {
        universe: sub.universe,
        carrier: sub.carrier.clone(),
        dia: sub.dia.clone(),
        ex: Some(ex_table),
        bdia: sub.bdia.clone(),
    };
    out.verify_identities()?;

    // ex' dia ex' a = dia ex' a, the operator form of left commutativity.
    let ex = out.ex.as_ref().expect("just built");
    for i in 0..out.carrier.len() {
        let lhs = ex[out.apply_dia(ex[i])];
        let rhs = out.apply_dia(ex[i]);
        if lhs != rhs {
            return Err(AlgebraError::IdentityViolation(format!(
                "ex' dia ex' a != dia ex' a at {:?}",
                out.carrier[i]
            )));
        }
    }
    Ok(out)
}

/// Dual frame on the atoms of a fully closed algebra: atom `x` relates to
/// atom `y` via an operator table when `x <= op(y)` (the finite form of the
/// ultrafilter condition, with principal ultrafilters standing in for
/// atoms). The atom map is checked to preserve and reflect each operator.
pub struct DualFrame {
    pub frame: Ms4Frame,
    pub atoms: Vec<WorldSet>,
}

pub fn dual_frame_of_subalgebra(
    frame: &Ms4Frame,
    algebra: &FiniteBao,
) -> Result<DualFrame, AlgebraError> {
    algebra.check_boolean_closure()?;
    if algebra.dia.is_none() || algebra.ex.is_none() {
        return Err(AlgebraError::NotSubalgebra(
            "dual frame needs both dia and ex tables".to_string(),
        ));
    }
    let atoms = algebra.atoms();
    let m = atoms.len();
    let atom_index: Vec<usize> = atoms
        .iter()
        .map(|a| algebra.index_of(a).expect("atoms lie in the carrier"))
        .collect();

    let mut r = Relation::empty(m);
    let mut e = Relation::empty(m);
    for (i, _) in atoms.iter().enumerate() {
        for (j, _) in atoms.iter().enumerate() {
            if algebra.leq(atom_index[i], algebra.apply_dia(atom_index[j])) {
                r.set(i, j);
            }
            if algebra.leq(atom_index[i], algebra.apply_ex(atom_index[j])) {
                e.set(i, j);
            }
        }
    }
    let dual = Ms4Frame::validate(r, e)?;

    // The map sending a carrier element to its set of atoms must commute
    // with both operators; this is the exhaustive preservation check.
    let atoms_below = |i: usize| -> WorldSet {
        WorldSet::from_worlds(
            m,
            atoms.iter().enumerate().filter(|(_, a)| a.is_subset(&algebra.carrier[i])).map(|(k, _)| k),
        )
    };
    for i in 0..algebra.carrier.len() {
        let via_algebra = atoms_below(algebra.apply_dia(i));
        let via_frame = dual.r().preimage(&atoms_below(i));
        if via_algebra != via_frame {
            return Err(AlgebraError::IdentityViolation(format!(
                "atom map does not preserve dia at {:?}",
                algebra.carrier[i]
            )));
        }
        let via_algebra = atoms_below(algebra.apply_ex(i));
        let via_frame = dual.e().image(&atoms_below(i));
        if via_algebra != via_frame {
            return Err(AlgebraError::IdentityViolation(format!(
                "atom map does not preserve ex at {:?}",
                algebra.carrier[i]
            )));
        }
    }

    Ok(DualFrame { frame: dual, atoms })
}

/// Outcome of the countermodel-shrinking pipeline.
#[derive(Debug)]
pub enum FmpOutcome {
    AlreadyValid,
    Countermodel(FmpCountermodel),
}

#[derive(Debug)]
pub struct FmpCountermodel {
    pub frame: Ms4Frame,
    pub valuation: Valuation,
    pub world: usize,
    pub carrier_size: usize,
}

/// When `phi` fails on `frame`, builds the dia-subalgebra generated by the
/// subterm extensions of the falsifying valuation, closes it with the
/// approximate existential, and returns the induced countermodel on the
/// atom frame. The result frame never exceeds the source in depth, and the
/// target formula fails at the image of the original witness world.
pub fn fmp_countermodel(
    frame: &Ms4Frame,
    phi: &Formula,
    budget: &Budget,
) -> Result<FmpOutcome, AlgebraError> {
    let verdict = semantics::valid(frame, phi, budget)?;
    let cm = match verdict {
        Verdict::Valid => return Ok(FmpOutcome::AlreadyValid),
        Verdict::Invalid(cm) => cm,
    };

    let extensions = semantics::eval_subterms(frame, &cm.valuation, phi)?;
    let generators: Vec<WorldSet> = extensions.iter().map(|(_, ext)| *ext).collect();
    let sub = generated_subalgebra(frame, &generators, Signature::DIA);
    let closed = approximate_exists(frame, &sub)?;
    let dual = dual_frame_of_subalgebra(frame, &closed)?;

    // Induced valuation: a variable holds at an atom when the atom sits
    // inside the variable's original extension.
    let m = dual.frame.size();
    let mut valuation = Valuation::new();
    for var in phi.vars() {
        let ext = cm.valuation.get(&var).expect("countermodel binds all variables");
        let moved = WorldSet::from_worlds(
            m,
            dual.atoms.iter().enumerate().filter(|(_, a)| a.is_subset(ext)).map(|(i, _)| i),
        );
        valuation.set(var, moved);
    }
    let world = dual
        .atoms
        .iter()
        .position(|a| a.contains(cm.world))
        .expect("atoms partition the worlds");

    // The computation of phi in the subalgebra matches the one in the full
    // powerset, so phi must fail at the image world.
    let ext = semantics::eval(&dual.frame, &valuation, phi)?;
    if ext.contains(world) {
        return Err(AlgebraError::IdentityViolation(
            "shrunk frame fails to falsify the formula at the image world".to_string(),
        ));
    }
    if dual.frame.depth() > frame.depth() {
        return Err(AlgebraError::IdentityViolation(
            "shrunk frame exceeds the source depth".to_string(),
        ));
    }

    Ok(FmpOutcome::Countermodel(FmpCountermodel {
        frame: dual.frame,
        valuation,
        world,
        carrier_size: closed.len(),
    }))
}

/// One row of a subalgebra growth curve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthRow {
    pub k: usize,
    pub max_size: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthCurve {
    pub rows: Vec<GrowthRow>,
}

impl GrowthCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,max_size,trials\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{}\n", row.k, row.max_size, row.trials));
        }
        out
    }
}

/// Samples `trials` nested generator tuples per frame (seeded, one substream
/// per sample) and reports, for each k up to `k_max`, the largest subalgebra
/// generated by the first k sets under the dia/ex signature. Nesting makes
/// each trial's curve monotone in k, so the maxima are too.
pub fn growth_probe(
    frames: &[Ms4Frame],
    k_max: usize,
    trials: usize,
    seed: u64,
) -> GrowthCurve {
    let mut max_size = vec![0usize; k_max + 1];
    for (fi, frame) in frames.iter().enumerate() {
        let n = frame.size();
        for trial in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((fi as u64) << 32) | trial as u64);
            let gens: Vec<WorldSet> = (0..k_max)
                .map(|_| {
                    let bits: u64 = rng.gen();
                    WorldSet::from_bits(n, bits)
                })
                .collect();
            for k in 1..=k_max {
                let sub = generated_subalgebra(frame, &gens[..k], Signature::DIA_EX);
                max_size[k] = max_size[k].max(sub.len());
            }
        }
    }
    GrowthCurve {
        rows: (1..=k_max).map(|k| GrowthRow { k, max_size: max_size[k], trials }).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{chain_frame, grid_frame};
    use crate::formula::{build_axiom, AxiomName};

    fn slide() -> Ms4Frame {
        let r = Relation::from_pairs(2, &[(0, 0), (1, 1), (0, 1)]);
        Ms4Frame::validate(r, Relation::total(2)).unwrap()
    }

    #[test]
    fn dual_algebra_of_singleton() {
        let b = dual_algebra(&chain_frame(1).unwrap());
        assert_eq!(b.len(), 2);
        assert_eq!(b.dia_table().unwrap(), &[0, 1]);
        assert_eq!(b.ex_table().unwrap(), &[0, 1]);
        b.verify_identities().unwrap();
    }

    #[test]
    fn dual_algebra_tables() {
        let l2 = chain_frame(2).unwrap();
        let b = dual_algebra(&l2);
        let zero = WorldSet::singleton(2, 0);
        let i = b.index_of(&zero).unwrap();
        assert_eq!(b.carrier()[b.apply_dia(i)], WorldSet::full(2));
        assert_eq!(b.apply_ex(i), i);
        b.verify_identities().unwrap();

        let s = slide();
        let b = dual_algebra(&s);
        let a = WorldSet::singleton(2, 0);
        let i = b.index_of(&a).unwrap();
        assert_eq!(b.carrier()[b.apply_ex(i)], WorldSet::full(2));
        b.verify_identities().unwrap();
    }

    #[test]
    fn generated_with_no_generators_is_two_element() {
        let l2 = chain_frame(2).unwrap();
        let b = generated_subalgebra(&l2, &[], Signature::DIA);
        assert_eq!(b.len(), 2);
    }

    #[test]
    fn generated_in_one_cluster_under_ex() {
        let f = Ms4Frame::validate(Relation::identity(2), Relation::total(2)).unwrap();
        let b = generated_subalgebra(&f, &[WorldSet::singleton(2, 0)], Signature::EX);
        assert_eq!(b.len(), 4);
        let i = b.index_of(&WorldSet::singleton(2, 0)).unwrap();
        assert_eq!(b.carrier()[b.apply_ex(i)], WorldSet::full(2));
    }

    #[test]
    fn generated_rows_in_grid() {
        let (_, grid) = grid_frame(2, 2).unwrap();
        // Worlds are row-major: row 0 is {0, 1}.
        let row0 = WorldSet::from_worlds(4, [0, 1]);
        let b = generated_subalgebra(&grid, &[row0], Signature::DIA);
        assert_eq!(b.len(), 4);
        assert!(b.index_of(&row0.complement()).is_some());
    }

    #[test]
    fn generated_is_order_independent() {
        let (_, grid) = grid_frame(2, 3).unwrap();
        let g1 = WorldSet::from_worlds(6, [0, 1, 2]);
        let g2 = WorldSet::from_worlds(6, [0, 3]);
        let a = generated_subalgebra(&grid, &[g1, g2], Signature::DIA_EX);
        let b = generated_subalgebra(&grid, &[g2, g1], Signature::DIA_EX);
        assert_eq!(a, b);
    }

    #[test]
    fn approximate_exists_on_trivial_subalgebra() {
        let f = slide();
        let b = generated_subalgebra(&f, &[], Signature::DIA);
        let closed = approximate_exists(&f, &b).unwrap();
        assert_eq!(closed.ex_table().unwrap(), &[0, 1]);
    }

    #[test]
    fn approximate_exists_is_identity_when_e_is_discrete() {
        let l2 = chain_frame(2).unwrap();
        let b = generated_subalgebra(&l2, &[WorldSet::singleton(2, 0)], Signature::DIA);
        let closed = approximate_exists(&l2, &b).unwrap();
        let table = closed.ex_table().unwrap();
        for (i, &ei) in table.iter().enumerate() {
            assert_eq!(i, ei);
        }
    }

    #[test]
    fn approximate_exists_in_grid_rows() {
        let (_, grid) = grid_frame(2, 2).unwrap();
        let row0 = WorldSet::from_worlds(4, [0, 1]);
        let b = generated_subalgebra(&grid, &[row0], Signature::DIA);
        let closed = approximate_exists(&grid, &b).unwrap();
        let i = closed.index_of(&row0).unwrap();
        assert_eq!(closed.carrier()[closed.apply_ex(i)], WorldSet::full(4));
    }

    #[test]
    fn approximate_exists_matches_true_ex_when_present() {
        let f = slide();
        let b = dual_algebra(&f);
        let sub = FiniteBao {
            universe: b.universe,
            carrier: b.carrier.clone(),
            dia: b.dia.clone(),
            ex: None,
            bdia: None,
        };
        let closed = approximate_exists(&f, &sub).unwrap();
        assert_eq!(closed.ex_table(), b.ex_table());
    }

    #[test]
    fn approximate_exists_rejects_non_subalgebra() {
        let f = slide();
        let bad = FiniteBao {
            universe: 2,
            carrier: vec![WorldSet::empty(2), WorldSet::singleton(2, 0)],
            dia: Some(vec![0, 1]),
            ex: None,
            bdia: None,
        };
        assert!(matches!(
            approximate_exists(&f, &bad),
            Err(AlgebraError::NotSubalgebra(_))
        ));
    }

    #[test]
    fn dual_frame_round_trip_on_chains() {
        for n in 1..=3 {
            let f = chain_frame(n).unwrap();
            let b = dual_algebra(&f);
            let dual = dual_frame_of_subalgebra(&f, &b).unwrap();
            assert_eq!(*dual.frame.r(), *f.r());
            assert_eq!(*dual.frame.e(), *f.e());
        }
    }

    #[test]
    fn dual_frame_of_row_subalgebra() {
        let (_, grid) = grid_frame(2, 2).unwrap();
        let row0 = WorldSet::from_worlds(4, [0, 1]);
        let b = generated_subalgebra(&grid, &[row0], Signature::DIA);
        let closed = approximate_exists(&grid, &b).unwrap();
        let dual = dual_frame_of_subalgebra(&grid, &closed).unwrap();
        assert_eq!(dual.frame.size(), 2);
        assert_eq!(*dual.frame.r(), Relation::identity(2));
        assert_eq!(*dual.frame.e(), Relation::total(2));
    }

    #[test]
    fn dual_frame_of_two_element_algebra() {
        let f = slide();
        let b = generated_subalgebra(&f, &[], Signature::DIA);
        let closed = approximate_exists(&f, &b).unwrap();
        let dual = dual_frame_of_subalgebra(&f, &closed).unwrap();
        assert_eq!(dual.frame.size(), 1);
    }

    #[test]
    fn ex_fixpoints_are_saturated_sets() {
        let f = slide();
        let b = dual_algebra(&f);
        let fixed: Vec<WorldSet> =
            b.ex_fixpoints().into_iter().map(|i| b.carrier()[i]).collect();
        for set in &fixed {
            assert!(f.e_saturated(set));
        }
        assert_eq!(fixed.len(), 2);

        let upsets: Vec<WorldSet> =
            b.box_fixpoints().into_iter().map(|i| b.carrier()[i]).collect();
        for set in &upsets {
            for x in set.iter() {
                assert!(f.r().row(x).is_subset(set), "{set:?} is not an R-upset");
            }
        }
    }

    #[test]
    fn fmp_on_already_valid_input() {
        let l1 = chain_frame(1).unwrap();
        let p1 = build_axiom(AxiomName::P(1)).unwrap();
        assert!(matches!(
            fmp_countermodel(&l1, &p1, &Budget::default()).unwrap(),
            FmpOutcome::AlreadyValid
        ));
    }

    #[test]
    fn fmp_shrinks_p1_countermodel() {
        let l2 = chain_frame(2).unwrap();
        let p1 = build_axiom(AxiomName::P(1)).unwrap();
        match fmp_countermodel(&l2, &p1, &Budget::default()).unwrap() {
            FmpOutcome::AlreadyValid => panic!("P1 fails on a depth-2 chain"),
            FmpOutcome::Countermodel(out) => {
                assert!(out.frame.depth() <= 2);
                assert!(out.frame.size() <= out.carrier_size);
                let ext = semantics::eval(&out.frame, &out.valuation, &p1).unwrap();
                assert!(!ext.contains(out.world));
            }
        }
    }

    #[test]
    fn fmp_handles_cas_on_slide_frame() {
        let f = slide();
        let cas = build_axiom(AxiomName::MCasPlus).unwrap();
        match fmp_countermodel(&f, &cas, &Budget::default()).unwrap() {
            FmpOutcome::AlreadyValid => panic!("cas fails on the slide frame"),
            FmpOutcome::Countermodel(out) => {
                let ext = semantics::eval(&out.frame, &out.valuation, &cas).unwrap();
                assert!(!ext.contains(out.world));
            }
        }
    }

    #[test]
    fn growth_probe_is_bounded_and_deterministic() {
        let l2 = chain_frame(2).unwrap();
        let curve = growth_probe(&[l2.clone()], 3, 4, 7);
        for row in &curve.rows {
            assert!(row.max_size <= 16);
        }
        let again = growth_probe(&[l2], 3, 4, 7);
        assert_eq!(curve, again);

        let l1 = chain_frame(1).unwrap();
        let curve = growth_probe(&[l1], 2, 3, 1);
        assert!(curve.rows.iter().all(|r| r.max_size == 2));
    }

    #[test]
    fn growth_probe_sees_grid_growth() {
        let frames: Vec<Ms4Frame> =
            (2..=4).map(|k| grid_frame(k, k).unwrap().1).collect();
        // Staircase generator: cells on or below the diagonal.
        let sizes: Vec<usize> = frames
            .iter()
            .map(|f| {
                let k = (f.size() as f64).sqrt() as usize;
                let stair = WorldSet::from_worlds(
                    f.size(),
                    (0..f.size()).filter(|w| w % k <= w / k),
                );
                generated_subalgebra(f, &[stair], Signature::DIA_EX).len()
            })
            .collect();
        assert!(sizes.windows(2).all(|w| w[0] < w[1]), "sizes not increasing: {sizes:?}");
    }
}
