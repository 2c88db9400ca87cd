//! Builders for the named frame constructions, random and exhaustive frame
//! generators for the verification suites, and the textual frame recipes
//! the command line accepts.

use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formula::Formula;
use crate::frame::{FrameError, Ms4Frame, Relation, S52Frame, WorldSet, MAX_WORLDS};
use crate::semantics::{self, Valuation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructionError {
    #[error("size must be at least 1")]
    ZeroSize,
    #[error("input frame is empty")]
    EmptyFrame,
    #[error("the first factor must be a quasi-order")]
    NotQuasiOrder,
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Descending chain with the discrete equivalence: worlds `0..n`, `x R y`
/// iff `x >= y`, `E` the identity. World 0 is the R-maximum.
pub fn chain_frame(n: usize) -> Result<Ms4Frame, ConstructionError> {
    if n == 0 {
        return Err(ConstructionError::ZeroSize);
    }
    let mut r = Relation::empty(n);
    for x in 0..n {
        for y in 0..=x {
            r.set(x, y);
        }
    }
    Ok(Ms4Frame::validate(r, Relation::identity(n))?)
}

/// `r x c` grid in row-major order. The two-equivalence view has rows as
/// `E1`-classes and columns as `E2`-classes; the bimodal view reads `R = E1`
/// and `E = E2` (rows and columns commute, so it always validates).
pub fn grid_frame(rows: usize, cols: usize) -> Result<(S52Frame, Ms4Frame), ConstructionError> {
    if rows == 0 || cols == 0 {
        return Err(ConstructionError::ZeroSize);
    }
    let n = rows * cols;
    let mut e1 = Relation::empty(n);
    let mut e2 = Relation::empty(n);
    for a in 0..n {
        for b in 0..n {
            if a / cols == b / cols {
                e1.set(a, b);
            }
            if a % cols == b % cols {
                e2.set(a, b);
            }
        }
    }
    let s52 = S52Frame::validate(e1.clone(), e2.clone())?;
    let ms4 = Ms4Frame::validate(e1, e2)?;
    Ok((s52, ms4))
}

/// Product of a quasi-order with a k-element cluster: `(x, i) R (x', i')`
/// iff `x R x'` and `i = i'`; `(x, i) E (x', i')` iff `x = x'`. World
/// `(x, i)` is index `x * k + i`.
pub fn product_frame(order: &Relation, k: usize) -> Result<Ms4Frame, ConstructionError> {
    if k == 0 || order.size() == 0 {
        return Err(ConstructionError::ZeroSize);
    }
    if !order.is_quasi_order() {
        return Err(ConstructionError::NotQuasiOrder);
    }
    let m = order.size();
    let n = m * k;
    let mut r = Relation::empty(n);
    let mut e = Relation::empty(n);
    for x in 0..m {
        for i in 0..k {
            let a = x * k + i;
            for y in 0..m {
                if order.contains(x, y) {
                    r.set(a, y * k + i);
                }
            }
            for j in 0..k {
                e.set(a, x * k + j);
            }
        }
    }
    Ok(Ms4Frame::validate(r, e)?)
}

/// The rail construction on a two-equivalence frame, with the bookkeeping
/// needed to inspect it.
#[derive(Debug, Clone)]
pub struct RailFrame {
    pub frame: Ms4Frame,
    /// Worlds `0..base` are the original frame.
    pub base: usize,
    /// Worlds `base..base+classes` form the top rail, one per `E2`-class.
    pub top_rail: Vec<usize>,
    /// Worlds `base+classes..` form the bottom rail.
    pub bottom_rail: Vec<usize>,
    /// `E2`-class index of each original world.
    pub class_of: Vec<usize>,
}

/// Embeds a two-equivalence frame into a depth-3 bimodal frame by adding a
/// top rail (an R-cluster seen by everything) and a bottom rail (an
/// R-cluster that sees everything), one rail point per `E2`-class. The new
/// equivalence is the least one containing `E2` and linking every world to
/// both of its rail points.
pub fn translate(input: &S52Frame) -> Result<RailFrame, ConstructionError> {
    let base = input.size();
    if base == 0 {
        return Err(ConstructionError::EmptyFrame);
    }
    let classes = input.e2().classes();
    let t = classes.len();
    let n = base + 2 * t;
    if n > MAX_WORLDS {
        return Err(ConstructionError::Frame(FrameError::TooManyWorlds(n)));
    }
    let top_rail: Vec<usize> = (base..base + t).collect();
    let bottom_rail: Vec<usize> = (base + t..n).collect();
    let mut class_of = vec![0usize; base];
    for (ci, class) in classes.iter().enumerate() {
        for x in class.iter() {
            class_of[x] = ci;
        }
    }

    // R = E1 on the base, bottom rail sees everything, everything in the
    // base sees the top rail, and the top rail is a cluster.
    let mut r = Relation::empty(n);
    for x in 0..base {
        for y in 0..base {
            if input.e1().contains(x, y) {
                r.set(x, y);
            }
        }
        for &tw in &top_rail {
            r.set(x, tw);
        }
    }
    for &bw in &bottom_rail {
        for y in 0..n {
            r.set(bw, y);
        }
    }
    for &a in &top_rail {
        for &b in &top_rail {
            r.set(a, b);
        }
    }

    let mut e_gen = Relation::empty(n);
    for x in 0..base {
        for y in 0..base {
            if input.e2().contains(x, y) {
                e_gen.set(x, y);
            }
        }
        e_gen.set(x, top_rail[class_of[x]]);
        e_gen.set(x, bottom_rail[class_of[x]]);
    }
    let e = e_gen.equivalence_closure();

    let frame = Ms4Frame::validate(r, e)?;
    Ok(RailFrame { frame, base, top_rail, bottom_rail, class_of })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FiltrationError {
    #[error("frame fails precondition: {0}")]
    PreconditionFailed(String),
    #[error("the formula holds everywhere under the given valuation")]
    NotFalsified,
    #[error(transparent)]
    Semantics(#[from] crate::semantics::SemanticsError),
}

/// Per-subterm truth comparison between the source frame (at the selected
/// worlds) and the extracted chain.
#[derive(Debug, Clone)]
pub struct SubtermAgreement {
    pub subterm: Formula,
    /// Truth at `selected[i]` in the source frame.
    pub source: Vec<bool>,
    /// Truth at chain world `i`.
    pub chain: Vec<bool>,
}

impl SubtermAgreement {
    pub fn agrees(&self) -> bool {
        self.source == self.chain
    }
}

#[derive(Debug, Clone)]
pub struct Filtration {
    /// The extracted chain; world 0 is the R-maximum.
    pub chain: Ms4Frame,
    /// Source world represented by each chain world.
    pub selected: Vec<usize>,
    /// The source valuation restricted to the selected worlds.
    pub valuation: Valuation,
    /// Chain world at which the target formula fails.
    pub failing_world: usize,
    pub agreement: Vec<SubtermAgreement>,
}

/// Extracts a falsifying chain from a frame validating grz, sc and ed, by
/// selective filtration: seed with a maximal falsifying point, then add a
/// maximal witness for every unwitnessed dia-subterm until stable. Maximal
/// points are chosen with the least world index for determinism. On finite
/// frames of this class the equivalence is discrete (E inside R plus
/// antisymmetry), so no E-witnesses are ever needed.
pub fn selective_filtration(
    frame: &Ms4Frame,
    phi: &Formula,
    valuation: &Valuation,
) -> Result<Filtration, FiltrationError> {
    for (name, ok) in [
        ("grz", crate::conditions::check_grz_finite(frame).holds),
        ("sc", crate::conditions::check_sc(frame).holds),
        ("ed", crate::conditions::check_ed(frame).holds),
    ] {
        if !ok {
            return Err(FiltrationError::PreconditionFailed(name.to_string()));
        }
    }

    let extensions = semantics::eval_subterms(frame, valuation, phi)?;
    let ext_of = |psi: &Formula| -> WorldSet {
        extensions
            .iter()
            .find(|(t, _)| t == psi)
            .map(|(_, ext)| *ext)
            .expect("subterm table covers the formula")
    };

    let failing = ext_of(phi).complement();
    if failing.is_empty() {
        return Err(FiltrationError::NotFalsified);
    }

    let seed = frame
        .max(&failing)
        .min()
        .expect("a nonempty set has maximal points on a finite frame");

    let dia_subterms: Vec<(Formula, WorldSet, WorldSet)> = extensions
        .iter()
        .filter_map(|(t, ext)| match t {
            Formula::Dia(body) => Some((t.clone(), *ext, ext_of(body))),
            _ => None,
        })
        .collect();

    let mut selected = vec![seed];
    let mut queue = vec![seed];
    while let Some(x) = queue.pop() {
        for (_, dia_ext, body_ext) in &dia_subterms {
            if dia_ext.contains(x) && !body_ext.contains(x) {
                let candidates = frame.max(body_ext).intersect(&frame.r().row(x));
                let witness = candidates
                    .min()
                    .expect("a witnessed dia-subterm has a maximal witness");
                if !selected.contains(&witness) {
                    selected.push(witness);
                    queue.push(witness);
                }
            }
        }
    }

    // Order by the chain convention: world 0 sees only itself. Selected
    // points are mutually R-comparable and R is antisymmetric, so sorting
    // by the number of successors inside the selection linearizes them.
    selected.sort_by_key(|&x| {
        frame.r().row(x).intersect(&WorldSet::from_worlds(frame.size(), selected.iter().copied())).len()
    });

    let m = selected.len();
    let chain = chain_frame(m).expect("selection is nonempty");
    let chain_valuation = valuation_on_selection(valuation, &selected, phi)?;

    let agreement: Vec<SubtermAgreement> = extensions
        .iter()
        .map(|(t, ext)| {
            let chain_ext = semantics::eval(&chain, &chain_valuation, t)
                .expect("chain valuation binds all variables");
            SubtermAgreement {
                subterm: t.clone(),
                source: selected.iter().map(|&x| ext.contains(x)).collect(),
                chain: (0..m).map(|i| chain_ext.contains(i)).collect(),
            }
        })
        .collect();

    let failing_world = selected
        .iter()
        .position(|&x| x == seed)
        .expect("seed is selected");

    Ok(Filtration { chain, selected, valuation: chain_valuation, failing_world, agreement })
}

fn valuation_on_selection(
    valuation: &Valuation,
    selected: &[usize],
    phi: &Formula,
) -> Result<Valuation, crate::semantics::SemanticsError> {
    let mut out = Valuation::new();
    for var in phi.vars() {
        let ext = valuation
            .get(&var)
            .ok_or_else(|| crate::semantics::SemanticsError::UnboundVariable(var.clone()))?;
        let moved = WorldSet::from_worlds(
            selected.len(),
            selected.iter().enumerate().filter(|(_, &w)| ext.contains(w)).map(|(i, _)| i),
        );
        out.set(var, moved);
    }
    Ok(out)
}

/// Density and retry knobs for the random frame generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomFrameParams {
    pub r_density: f64,
    pub e_density: f64,
    pub max_attempts: u32,
}

impl Default for RandomFrameParams {
    fn default() -> Self {
        RandomFrameParams { r_density: 0.3, e_density: 0.3, max_attempts: 1000 }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenerationError {
    #[error("gave up after {0} rejected samples")]
    GiveUp(u32),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
}

/// Samples directed pairs at the given densities, repairs the closures
/// (reflexive-transitive for R, equivalence for E), and keeps the first
/// sample whose pair commutes. Deterministic per (params, seed).
pub fn random_frame(
    n: usize,
    params: &RandomFrameParams,
    seed: u64,
) -> Result<Ms4Frame, GenerationError> {
    if n == 0 {
        return Err(GenerationError::Construction(ConstructionError::ZeroSize));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..params.max_attempts {
        let mut r = Relation::empty(n);
        let mut e = Relation::empty(n);
        for x in 0..n {
            for y in 0..n {
                if x != y && rng.gen_bool(params.r_density) {
                    r.set(x, y);
                }
                if x < y && rng.gen_bool(params.e_density) {
                    e.set(x, y);
                }
            }
        }
        let r = r.quasi_order_closure();
        let e = e.equivalence_closure();
        if let Ok(frame) = Ms4Frame::validate(r, e) {
            return Ok(frame);
        }
    }
    Err(GenerationError::GiveUp(params.max_attempts))
}

/// Random two-equivalence frame: two independently sampled partitions.
/// Never rejects.
pub fn random_s52_frame(n: usize, seed: u64) -> Result<S52Frame, ConstructionError> {
    if n == 0 {
        return Err(ConstructionError::ZeroSize);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut partition = |rng: &mut ChaCha8Rng| -> Relation {
        // Chinese-restaurant style block assignment.
        let mut block = vec![0usize; n];
        let mut blocks = 1;
        for (x, b) in block.iter_mut().enumerate().skip(1) {
            *b = rng.gen_range(0..=blocks.min(x));
            if *b == blocks {
                blocks += 1;
            }
        }
        let mut rel = Relation::empty(n);
        for x in 0..n {
            for y in 0..n {
                if block[x] == block[y] {
                    rel.set(x, y);
                }
            }
        }
        rel
    };
    let e1 = partition(&mut rng);
    let e2 = partition(&mut rng);
    Ok(S52Frame::validate(e1, e2)?)
}

/// All labeled valid frames on `n` worlds, in lexicographic matrix order:
/// every reflexive-transitive R paired with every equivalence E, filtered by
/// the commutation axiom. Practical for `n <= 4`.
pub fn enumerate_frames(n: usize) -> impl Iterator<Item = Ms4Frame> {
    let preorders = enumerate_preorders(n);
    let equivalences = enumerate_equivalences(n);
    preorders.into_iter().flat_map(move |r| {
        equivalences
            .clone()
            .into_iter()
            .filter_map(move |e| Ms4Frame::validate(r.clone(), e).ok())
    })
}

fn enumerate_preorders(n: usize) -> Vec<Relation> {
    let off_diagonal: Vec<(usize, usize)> =
        (0..n).flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y))).collect();
    let mut out = Vec::new();
    for mask in 0u64..(1 << off_diagonal.len()) {
        let mut r = Relation::identity(n);
        for (i, &(x, y)) in off_diagonal.iter().enumerate() {
            if mask & (1 << i) != 0 {
                r.set(x, y);
            }
        }
        if r.is_transitive() {
            out.push(r);
        }
    }
    out
}

fn enumerate_equivalences(n: usize) -> Vec<Relation> {
    // Partitions in restricted-growth-string order.
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    loop {
        let mut rel = Relation::empty(n);
        for x in 0..n {
            for y in 0..n {
                if rgs[x] == rgs[y] {
                    rel.set(x, y);
                }
            }
        }
        out.push(rel);

        // Next restricted growth string.
        let mut i = n;
        loop {
            if i == 1 {
                return out;
            }
            i -= 1;
            let max_prefix = rgs[..i].iter().copied().max().unwrap_or(0);
            if rgs[i] <= max_prefix {
                rgs[i] += 1;
                for v in rgs.iter_mut().skip(i + 1) {
                    *v = 0;
                }
                break;
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecipeError {
    #[error("cannot parse frame recipe {0:?}")]
    Malformed(String),
    #[error("recipe field {0:?} is not a number")]
    BadNumber(String),
    #[error("recipe requires a file: {0}")]
    Io(String),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error("frame file error: {0}")]
    FrameFile(String),
}

/// Textual frame recipes accepted by the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameRecipe {
    Chain(usize),
    Grid(usize, usize),
    Product { chain: usize, cluster: usize },
    Translate(PathBuf),
    Random { n: usize, params: RandomFrameParams, seed: u64 },
    File(PathBuf),
    EnumerateAll(usize),
}

impl FromStr for FrameRecipe {
    type Err = RecipeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| RecipeError::Malformed(s.to_string()))?;
        let num = |text: &str| -> Result<usize, RecipeError> {
            text.parse().map_err(|_| RecipeError::BadNumber(text.to_string()))
        };
        match kind {
            "chain" => Ok(FrameRecipe::Chain(num(rest)?)),
            "grid" => {
                let (r, c) = rest
                    .split_once('x')
                    .ok_or_else(|| RecipeError::Malformed(s.to_string()))?;
                Ok(FrameRecipe::Grid(num(r)?, num(c)?))
            }
            "product" => {
                let (order, k) = rest
                    .split_once(',')
                    .ok_or_else(|| RecipeError::Malformed(s.to_string()))?;
                let chain = order
                    .strip_prefix("chain")
                    .ok_or_else(|| RecipeError::Malformed(s.to_string()))?;
                let cluster = k
                    .strip_prefix('k')
                    .ok_or_else(|| RecipeError::Malformed(s.to_string()))?;
                Ok(FrameRecipe::Product { chain: num(chain)?, cluster: num(cluster)? })
            }
            "translate" => Ok(FrameRecipe::Translate(PathBuf::from(rest))),
            "random" => {
                let mut n = None;
                let mut seed = 0u64;
                let mut params = RandomFrameParams::default();
                for field in rest.split(',') {
                    let (key, value) = field
                        .split_once('=')
                        .ok_or_else(|| RecipeError::Malformed(s.to_string()))?;
                    match key {
                        "n" => n = Some(num(value)?),
                        "seed" => {
                            seed = value
                                .parse()
                                .map_err(|_| RecipeError::BadNumber(value.to_string()))?
                        }
                        "rd" => {
                            params.r_density = value
                                .parse()
                                .map_err(|_| RecipeError::BadNumber(value.to_string()))?
                        }
                        "ed" => {
                            params.e_density = value
                                .parse()
                                .map_err(|_| RecipeError::BadNumber(value.to_string()))?
                        }
                        _ => return Err(RecipeError::Malformed(s.to_string())),
                    }
                }
                let n = n.ok_or_else(|| RecipeError::Malformed(s.to_string()))?;
                Ok(FrameRecipe::Random { n, params, seed })
            }
            "file" => Ok(FrameRecipe::File(PathBuf::from(rest))),
            "enumerate" => Ok(FrameRecipe::EnumerateAll(num(rest)?)),
            _ => Err(RecipeError::Malformed(s.to_string())),
        }
    }
}

impl FrameRecipe {
    /// Builds every frame the recipe denotes (a single frame for all but
    /// `enumerate:`).
    pub fn build(&self) -> Result<Vec<Ms4Frame>, RecipeError> {
        match self {
            FrameRecipe::Chain(n) => Ok(vec![chain_frame(*n)?]),
            FrameRecipe::Grid(r, c) => Ok(vec![grid_frame(*r, *c)?.1]),
            FrameRecipe::Product { chain, cluster } => {
                let order = chain_frame(*chain)?;
                Ok(vec![product_frame(order.r(), *cluster)?])
            }
            FrameRecipe::Translate(path) => {
                let s52 = crate::json::load_s52_frame(path)
                    .map_err(|e| RecipeError::FrameFile(e.to_string()))?;
                Ok(vec![translate(&s52)?.frame])
            }
            FrameRecipe::Random { n, params, seed } => Ok(vec![random_frame(*n, params, *seed)?]),
            FrameRecipe::File(path) => {
                let frame = crate::json::load_ms4_frame(path)
                    .map_err(|e| RecipeError::FrameFile(e.to_string()))?;
                Ok(vec![frame])
            }
            FrameRecipe::EnumerateAll(n) => Ok(enumerate_frames(*n).collect()),
        }
    }
}
