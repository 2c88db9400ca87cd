//! First-order and semantic frame-condition checkers, each paired with a
//! modal axiom so that correspondence can be cross-checked against the
//! brute-force validity oracle.

use serde::Serialize;
use thiserror::Error;

use crate::frame::{Ms4Frame, SiClass, WorldSet};

/// Verdict of a condition check with a re-checkable witness on failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    pub condition: String,
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl ConditionReport {
    fn pass(condition: &str) -> ConditionReport {
        ConditionReport { condition: condition.to_string(), holds: true, witness: None }
    }

    fn fail(condition: &str, witness: Witness) -> ConditionReport {
        ConditionReport { condition: condition.to_string(), holds: false, witness: Some(witness) }
    }
}

/// Worlds (and sets of worlds) that violate a condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Witness {
    Pair { x: usize, y: usize },
    Triple { x: usize, y: usize, z: usize },
    SetAndWorld { set: Vec<usize>, world: usize },
    Path { worlds: Vec<usize>, steps: Vec<StepTag> },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConditionError {
    #[error("{clusters} E-clusters exceed the cluster cap of {cap}")]
    ClusterBudgetExceeded { clusters: usize, cap: usize },
}

/// `ER <= RE`: every R-then-E step can be matched by an E-then-R step.
pub fn check_barcan(f: &Ms4Frame) -> ConditionReport {
    let er = f.r().then(f.e());
    let re = f.e().then(f.r());
    match er.witness_not_subrelation(&re) {
        None => ConditionReport::pass("barcan"),
        Some((x, z)) => {
            let y = f
                .r()
                .row(x)
                .iter()
                .find(|&y| f.e().contains(y, z))
                .expect("composite pair has an intermediate world");
            ConditionReport::fail("barcan", Witness::Triple { x, y, z })
        }
    }
}

/// `E <= R` pointwise.
pub fn check_ed(f: &Ms4Frame) -> ConditionReport {
    match f.e().witness_not_subrelation(f.r()) {
        None => ConditionReport::pass("ed"),
        Some((x, y)) => ConditionReport::fail("ed", Witness::Pair { x, y }),
    }
}

/// Strong connectedness: `x R y` and `x R z` imply `y R z` or `z R y`.
pub fn check_sc(f: &Ms4Frame) -> ConditionReport {
    for x in 0..f.size() {
        let succs: Vec<usize> = f.r().row(x).iter().collect();
        for &y in &succs {
            for &z in &succs {
                if !f.r().contains(y, z) && !f.r().contains(z, y) {
                    return ConditionReport::fail("sc", Witness::Triple { x, y, z });
                }
            }
        }
    }
    ConditionReport::pass("sc")
}

/// On finite frames the grz condition (every subset has strictly maximal
/// points above each member) reduces to R having no proper cluster, i.e.
/// antisymmetry; a proper cluster violates it with the cluster itself as the
/// chosen subset.
pub fn check_grz_finite(f: &Ms4Frame) -> ConditionReport {
    for x in 0..f.size() {
        for y in f.r().row(x).iter() {
            if x != y && f.r().contains(y, x) {
                return ConditionReport::fail("grz", Witness::Pair { x, y });
            }
        }
    }
    ConditionReport::pass("grz")
}

/// Semantic condition for the monadic Casari axiom: in every union `U` of
/// E-clusters, quasi-maximal points of `U` have flat E-clusters. Enumerates
/// the `2^c` cluster unions, so it fails fast when `c` exceeds `cap`.
pub fn check_mcas_semantic(f: &Ms4Frame, cap: usize) -> Result<ConditionReport, ConditionError> {
    let clusters = f.e_clusters();
    let c = clusters.len();
    if c > cap {
        return Err(ConditionError::ClusterBudgetExceeded { clusters: c, cap });
    }
    for selector in 1u64..(1 << c) {
        let mut u = WorldSet::empty(f.size());
        for (i, cluster) in clusters.iter().enumerate() {
            if selector & (1 << i) != 0 {
                u = u.union(cluster);
            }
        }
        for x in f.qmax(&u).iter() {
            if !f.flat(&f.e().row(x)) {
                return Ok(ConditionReport::fail(
                    "mcas+",
                    Witness::SetAndWorld { set: u.iter().collect(), world: x },
                ));
            }
        }
    }
    Ok(ConditionReport::pass("mcas+"))
}

/// Step labels along an S-path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StepTag {
    R,
    E,
    Both,
}

/// An irreducible S-path: consecutive worlds S-related, all worlds distinct,
/// and no forward S-shortcut skipping a step. `proper` means no step lies in
/// `R` intersect `E`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathWitness {
    pub worlds: Vec<usize>,
    pub steps: Vec<StepTag>,
    pub proper: bool,
}

impl PathWitness {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSearch {
    pub length: usize,
    pub witness: PathWitness,
    /// Set when the search stopped at `cap`; the true maximum is >= `length`.
    pub hit_cap: bool,
}

fn step_tag(f: &Ms4Frame, x: usize, y: usize) -> StepTag {
    match (f.r().contains(x, y), f.e().contains(x, y)) {
        (true, true) => StepTag::Both,
        (true, false) => StepTag::R,
        (false, true) => StepTag::E,
        (false, false) => unreachable!("not an S-step"),
    }
}

fn tag_path(f: &Ms4Frame, worlds: &[usize]) -> PathWitness {
    let steps: Vec<StepTag> =
        worlds.windows(2).map(|w| step_tag(f, w[0], w[1])).collect();
    let proper = !steps.iter().any(|t| matches!(t, StepTag::Both));
    PathWitness { worlds: worlds.to_vec(), steps, proper }
}

/// Exact maximum length of an (optionally proper) irreducible S-path, by
/// depth-first search. A partial path is extended only by worlds that keep
/// both irreducibility clauses intact, so every visited path is irreducible;
/// candidates are tried in world-index order. Stops early once a path of
/// `cap` steps is found.
pub fn longest_irreducible_path(f: &Ms4Frame, proper: bool, cap: usize) -> PathSearch {
    assert!(cap >= 1, "path cap must be at least 1");
    let s = f.s_relation();
    let n = f.size();
    let mut best: Vec<usize> = vec![0];
    let mut stack: Vec<usize> = Vec::with_capacity(n);

    fn extend(
        f: &Ms4Frame,
        s: &crate::frame::Relation,
        proper: bool,
        cap: usize,
        stack: &mut Vec<usize>,
        best: &mut Vec<usize>,
    ) -> bool {
        if stack.len() > best.len() {
            *best = stack.clone();
            if best.len() - 1 >= cap {
                return true;
            }
        }
        let last = *stack.last().expect("stack nonempty");
        for y in s.row(last).iter() {
            if stack.contains(&y) {
                continue;
            }
            if proper && f.r().contains(last, y) && f.e().contains(last, y) {
                continue;
            }
            // Forward shortcut: an S-edge from any earlier world (strictly
            // before the current endpoint) to the new one is prohibited.
            if stack[..stack.len() - 1].iter().any(|&x| s.contains(x, y)) {
                continue;
            }
            stack.push(y);
            if extend(f, s, proper, cap, stack, best) {
                return true;
            }
            stack.pop();
        }
        false
    }

    'outer: for start in 0..n {
        stack.clear();
        stack.push(start);
        if extend(f, &s, proper, cap, &mut stack, &mut best) {
            break 'outer;
        }
    }

    let length = best.len() - 1;
    PathSearch { length, witness: tag_path(f, &best), hit_cap: length >= cap }
}

/// Reducible-path property with bound `m`: no irreducible S-path of length
/// `m + 1` exists.
pub fn check_rp(f: &Ms4Frame, m: usize) -> ConditionReport {
    assert!(m >= 1, "path bound must be at least 1");
    let name = format!("rp{m}");
    let search = longest_irreducible_path(f, false, m + 1);
    if search.length <= m {
        ConditionReport::pass(&name)
    } else {
        ConditionReport::fail(
            &name,
            Witness::Path { worlds: search.witness.worlds, steps: search.witness.steps },
        )
    }
}

/// Named classes a frame belongs to, computed from condition checkers and
/// the depth machinery (never from formula validity). Sorted and
/// deterministic.
pub fn classify(f: &Ms4Frame, cluster_cap: usize) -> Vec<String> {
    let mut out = vec!["MS4".to_string()];
    let depth = f.depth();
    let q_depth = f.q_depth();
    let barcan = check_barcan(f).holds;
    if barcan {
        out.push("MS4B".to_string());
        out.push(format!("MS4B[{depth}]"));
    }
    match check_mcas_semantic(f, cluster_cap) {
        Ok(report) if report.holds => out.push("M+S4".to_string()),
        _ => {}
    }
    if q_depth == 1 {
        out.push("MS4_S".to_string());
    }
    if check_grz_finite(f).holds {
        out.push("grz".to_string());
    }
    if check_sc(f).holds {
        out.push("sc".to_string());
    }
    if check_ed(f).holds {
        out.push("ed".to_string());
    }
    out.push(format!("depth {depth}"));
    out.push(format!("q-depth {q_depth}"));
    if f.si_class() == SiClass::Simple {
        out.push("simple".to_string());
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{chain_frame, grid_frame, product_frame};
    use crate::frame::{Ms4Frame, Relation};

    fn slide() -> Ms4Frame {
        let r = Relation::from_pairs(2, &[(0, 0), (1, 1), (0, 1)]);
        Ms4Frame::validate(r, Relation::total(2)).unwrap()
    }

    #[test]
    fn chains_pass_the_four_point_conditions() {
        for n in 1..=4 {
            let f = chain_frame(n).unwrap();
            assert!(check_barcan(&f).holds);
            assert!(check_ed(&f).holds);
            assert!(check_sc(&f).holds);
            assert!(check_grz_finite(&f).holds);
        }
    }

    #[test]
    fn slide_frame_conditions() {
        let f = slide();
        assert!(check_barcan(&f).holds);
        assert!(!check_ed(&f).holds);
        assert!(check_sc(&f).holds);
        assert!(check_grz_finite(&f).holds);
    }

    #[test]
    fn proper_r_cluster_fails_grz() {
        let f = Ms4Frame::validate(Relation::total(2), Relation::identity(2)).unwrap();
        let report = check_grz_finite(&f);
        assert!(!report.holds);
        assert_eq!(report.witness, Some(Witness::Pair { x: 0, y: 1 }));
    }

    #[test]
    fn mcas_semantic_examples() {
        for n in 1..=3 {
            assert!(check_mcas_semantic(&chain_frame(n).unwrap(), 20).unwrap().holds);
        }

        let report = check_mcas_semantic(&slide(), 20).unwrap();
        assert!(!report.holds);
        assert_eq!(
            report.witness,
            Some(Witness::SetAndWorld { set: vec![0, 1], world: 1 })
        );

        let product = product_frame(chain_frame(2).unwrap().r(), 2).unwrap();
        assert!(check_mcas_semantic(&product, 20).unwrap().holds);
    }

    #[test]
    fn mcas_cluster_budget() {
        let f = Ms4Frame::validate(Relation::identity(3), Relation::identity(3)).unwrap();
        assert!(matches!(
            check_mcas_semantic(&f, 2),
            Err(ConditionError::ClusterBudgetExceeded { clusters: 3, cap: 2 })
        ));
    }

    #[test]
    fn longest_path_on_chain_is_one_step() {
        for n in 2..=4 {
            let f = chain_frame(n).unwrap();
            let search = longest_irreducible_path(&f, false, 8);
            assert_eq!(search.length, 1, "chain of {n}");
            assert!(!search.hit_cap);
        }
    }

    #[test]
    fn longest_path_on_small_grid() {
        let (_, f) = grid_frame(2, 2).unwrap();
        let search = longest_irreducible_path(&f, false, 8);
        assert_eq!(search.length, 2);
        // Steps of an irreducible grid path alternate between the two
        // relations.
        assert_eq!(search.witness.steps.len(), 2);
        assert_ne!(search.witness.steps[0], search.witness.steps[1]);
        assert!(search.witness.proper);
    }

    #[test]
    fn path_cap_reports_partial_search() {
        let (_, f) = grid_frame(3, 3).unwrap();
        let search = longest_irreducible_path(&f, false, 1);
        assert!(search.hit_cap);
        assert_eq!(search.length, 1);
    }

    #[test]
    fn rp_bounds_on_grid() {
        let (_, grid) = grid_frame(2, 2).unwrap();
        assert!(!check_rp(&grid, 1).holds);
        assert!(check_rp(&grid, 2).holds);
        assert!(check_rp(&chain_frame(3).unwrap(), 1).holds);
    }

    #[test]
    fn classify_examples() {
        let l2 = chain_frame(2).unwrap();
        let classes = classify(&l2, 20);
        for want in ["MS4", "MS4B", "M+S4", "grz", "sc", "ed", "depth 2", "q-depth 2"] {
            assert!(classes.iter().any(|c| c == want), "L2 missing {want}: {classes:?}");
        }

        let (_, grid) = grid_frame(2, 2).unwrap();
        let classes = classify(&grid, 20);
        for want in ["MS4", "MS4B", "M+S4", "MS4_S", "depth 1", "simple"] {
            assert!(classes.iter().any(|c| c == want), "grid missing {want}: {classes:?}");
        }

        let classes = classify(&slide(), 20);
        for want in ["MS4", "MS4B", "MS4_S", "depth 2", "q-depth 1"] {
            assert!(classes.iter().any(|c| c == want), "slide missing {want}: {classes:?}");
        }
        assert!(!classes.iter().any(|c| c == "M+S4"), "slide is not M+S4: {classes:?}");
    }
}
