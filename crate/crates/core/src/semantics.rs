//! Brute-force model checking: extensions of formulas under a valuation and
//! validity by exhaustive enumeration of all valuations over the variables
//! occurring in the formula.
//!
//! Formulas are compiled once into a flat table of subterm nodes (children
//! before parents), so each valuation costs one linear pass of word
//! operations. Valuation enumeration is deterministic: variables are sorted,
//! each gets an n-bit block of the valuation index, earlier variables vary
//! fastest, and the reported countermodel is the one with the least index
//! and, within it, the least falsifying world. The index space is chunked
//! and searched in parallel; the chunk order makes the result independent of
//! scheduling.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::formula::Formula;
use crate::frame::{Ms4Frame, WorldSet};

/// Assignment of world sets to variable names over a fixed frame.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Valuation {
    map: BTreeMap<String, WorldSet>,
}

impl Valuation {
    pub fn new() -> Valuation {
        Valuation { map: BTreeMap::new() }
    }

    pub fn assign(mut self, var: impl Into<String>, set: WorldSet) -> Valuation {
        self.map.insert(var.into(), set);
        self
    }

    pub fn set(&mut self, var: impl Into<String>, set: WorldSet) {
        self.map.insert(var.into(), set);
    }

    pub fn get(&self, var: &str) -> Option<&WorldSet> {
        self.map.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &WorldSet)> {
        self.map.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Keeps only the worlds in `kept` (given as sorted original indices),
    /// renumbering them by position.
    pub fn restrict_to(&self, kept: &[usize], new_universe: usize) -> Valuation {
        let mut out = Valuation::new();
        for (var, set) in &self.map {
            let moved = WorldSet::from_worlds(
                new_universe,
                kept.iter().enumerate().filter(|(_, &w)| set.contains(w)).map(|(i, _)| i),
            );
            out.set(var.clone(), moved);
        }
        out
    }
}

impl fmt::Debug for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.map.iter()).finish()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("unbound variable: {0}")]
    UnboundVariable(String),
    #[error("valuation space of {needed} exceeds budget of {budget} valuations")]
    BudgetExceeded { needed: u128, budget: u64 },
}

/// Cap on the number of valuations `valid` may enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_valuations: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_valuations: 1 << 30 }
    }
}

impl Budget {
    pub fn new(max_valuations: u64) -> Budget {
        Budget { max_valuations }
    }
}

/// A falsifying valuation and world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Countermodel {
    pub valuation: Valuation,
    pub world: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid(Countermodel),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn countermodel(&self) -> Option<&Countermodel> {
        match self {
            Verdict::Valid => None,
            Verdict::Invalid(cm) => Some(cm),
        }
    }
}

enum Node {
    Var(usize),
    Top,
    Bot,
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Imp(usize, usize),
    Dia(usize),
    Ex(usize),
}

/// Formula flattened over its deduplicated subterm table.
pub struct Compiled {
    subterms: Vec<Formula>,
    nodes: Vec<Node>,
    vars: Vec<String>,
}

impl Compiled {
    pub fn new(phi: &Formula) -> Compiled {
        let subterms = phi.subterms();
        let vars: Vec<String> = phi.vars().into_iter().collect();
        let index: std::collections::HashMap<&Formula, usize> =
            subterms.iter().enumerate().map(|(i, t)| (t, i)).collect();
        let nodes = subterms
            .iter()
            .map(|t| match t {
                Formula::Var(name) => {
                    Node::Var(vars.binary_search(name).expect("var table covers formula"))
                }
                Formula::Top => Node::Top,
                Formula::Bot => Node::Bot,
                Formula::Not(a) => Node::Not(index[&**a]),
                Formula::And(a, b) => Node::And(index[&**a], index[&**b]),
                Formula::Or(a, b) => Node::Or(index[&**a], index[&**b]),
                Formula::Imp(a, b) => Node::Imp(index[&**a], index[&**b]),
                Formula::Dia(a) => Node::Dia(index[&**a]),
                Formula::Ex(a) => Node::Ex(index[&**a]),
            })
            .collect();
        Compiled { subterms, nodes, vars }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn subterms(&self) -> &[Formula] {
        &self.subterms
    }

    /// One pass over the node table; `assignment[i]` is the extension of
    /// variable `i` as raw bits. Returns the extension of every subterm.
    fn eval_bits(&self, frame: &Ms4Frame, assignment: &[u64], out: &mut [u64]) {
        let n = frame.size();
        let full = WorldSet::full(n).bits();
        for (i, node) in self.nodes.iter().enumerate() {
            out[i] = match *node {
                Node::Var(v) => assignment[v],
                Node::Top => full,
                Node::Bot => 0,
                Node::Not(a) => !out[a] & full,
                Node::And(a, b) => out[a] & out[b],
                Node::Or(a, b) => out[a] | out[b],
                Node::Imp(a, b) => (!out[a] & full) | out[b],
                Node::Dia(a) => {
                    let target = out[a];
                    let mut bits = 0;
                    for x in 0..n {
                        if frame.r().row(x).bits() & target != 0 {
                            bits |= 1 << x;
                        }
                    }
                    bits
                }
                Node::Ex(a) => {
                    let target = out[a];
                    let mut bits = 0;
                    for x in 0..n {
                        if frame.e().row(x).bits() & target != 0 {
                            bits |= 1 << x;
                        }
                    }
                    bits
                }
            };
        }
    }

    fn assignment_from(&self, frame: &Ms4Frame, v: &Valuation) -> Result<Vec<u64>, SemanticsError> {
        self.vars
            .iter()
            .map(|name| {
                v.get(name)
                    .map(|s| s.bits())
                    .ok_or_else(|| SemanticsError::UnboundVariable(name.clone()))
            })
            .collect()
    }
}

/// Extension of `phi` in `frame` under `v`.
pub fn eval(frame: &Ms4Frame, v: &Valuation, phi: &Formula) -> Result<WorldSet, SemanticsError> {
    let compiled = Compiled::new(phi);
    let assignment = compiled.assignment_from(frame, v)?;
    let mut out = vec![0u64; compiled.nodes.len()];
    compiled.eval_bits(frame, &assignment, &mut out);
    Ok(WorldSet::from_bits(frame.size(), *out.last().expect("nonempty node table")))
}

/// Extensions of every subterm of `phi`, in subterm-table order.
pub fn eval_subterms(
    frame: &Ms4Frame,
    v: &Valuation,
    phi: &Formula,
) -> Result<Vec<(Formula, WorldSet)>, SemanticsError> {
    let compiled = Compiled::new(phi);
    let assignment = compiled.assignment_from(frame, v)?;
    let mut out = vec![0u64; compiled.nodes.len()];
    compiled.eval_bits(frame, &assignment, &mut out);
    Ok(compiled
        .subterms
        .iter()
        .cloned()
        .zip(out.into_iter().map(|bits| WorldSet::from_bits(frame.size(), bits)))
        .collect())
}

fn decode_valuation(compiled: &Compiled, frame: &Ms4Frame, index: u64) -> Valuation {
    let n = frame.size();
    let mask = WorldSet::full(n).bits();
    let mut v = Valuation::new();
    for (i, name) in compiled.vars.iter().enumerate() {
        let bits = (index >> (i * n)) & mask;
        v.set(name.clone(), WorldSet::from_bits(n, bits));
    }
    v
}

/// Validity over all valuations of the variables of `phi`, within `budget`.
pub fn valid(frame: &Ms4Frame, phi: &Formula, budget: &Budget) -> Result<Verdict, SemanticsError> {
    let compiled = Compiled::new(phi);
    let n = frame.size();
    let k = compiled.vars.len();
    let needed: u128 = 1u128 << (k * n).min(127);
    if (k * n) >= 64 || needed > budget.max_valuations as u128 {
        return Err(SemanticsError::BudgetExceeded { needed, budget: budget.max_valuations });
    }
    let total = 1u64 << (k * n);
    let full = WorldSet::full(n).bits();

    const CHUNK: u64 = 1 << 12;
    let chunks = total.div_ceil(CHUNK);

    let found = (0..chunks)
        .into_par_iter()
        .find_map_first(|chunk| {
            let mut out = vec![0u64; compiled.nodes.len()];
            let mut assignment = vec![0u64; k];
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(total);
            for index in start..end {
                let mask = full;
                for (i, slot) in assignment.iter_mut().enumerate() {
                    *slot = (index >> (i * n)) & mask;
                }
                compiled.eval_bits(frame, &assignment, &mut out);
                let root = *out.last().expect("nonempty node table");
                if root != full {
                    let world = (!root & full).trailing_zeros() as usize;
                    return Some((index, world));
                }
            }
            None
        });

    Ok(match found {
        None => Verdict::Valid,
        Some((index, world)) => Verdict::Invalid(Countermodel {
            valuation: decode_valuation(&compiled, frame, index),
            world,
        }),
    })
}

/// Outcome for one frame in a batch validity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrameVerdict {
    Valid,
    Invalid(Countermodel),
    BudgetExceeded { needed: u128 },
}

#[derive(Debug, Clone)]
pub struct ValidityReport {
    pub verdicts: Vec<FrameVerdict>,
}

impl ValidityReport {
    /// True when every completed check was valid and none tripped the budget.
    pub fn all_valid(&self) -> bool {
        self.verdicts.iter().all(|v| matches!(v, FrameVerdict::Valid))
    }

    pub fn valid_flags(&self) -> Vec<Option<bool>> {
        self.verdicts
            .iter()
            .map(|v| match v {
                FrameVerdict::Valid => Some(true),
                FrameVerdict::Invalid(_) => Some(false),
                FrameVerdict::BudgetExceeded { .. } => None,
            })
            .collect()
    }
}

/// Checks `phi` on each frame in order; budget trips are recorded per frame.
pub fn valid_over(frames: &[Ms4Frame], phi: &Formula, budget: &Budget) -> ValidityReport {
    let verdicts = frames
        .iter()
        .map(|f| match valid(f, phi, budget) {
            Ok(Verdict::Valid) => FrameVerdict::Valid,
            Ok(Verdict::Invalid(cm)) => FrameVerdict::Invalid(cm),
            Err(SemanticsError::BudgetExceeded { needed, .. }) => {
                FrameVerdict::BudgetExceeded { needed }
            }
            Err(SemanticsError::UnboundVariable(_)) => {
                unreachable!("valid binds every variable it enumerates")
            }
        })
        .collect();
    ValidityReport { verdicts }
}
