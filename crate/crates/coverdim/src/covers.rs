//! Cover combinatorics: order, refinement, Lebesgue numbers, the unit-cube
//! cover, order-preserving merges, staged refinement over an exhaustion, and
//! the star-cover dimension bound.
//!
//! Covers here are families of finite id subsets over a ground set.
//! "Openness" plays no role at this scale: order and refinement are purely
//! combinatorial, and the metric enters only through Lebesgue numbers and
//! diameters.

use std::collections::{BTreeMap, HashMap};

use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::geometry::rational::{q_from_f64, q_int, q_ratio, q_to_f64, Q};
use crate::space::{Exhaustion, FiniteMetricSpace, SampleSet};
use crate::subdivision;
use crate::IdSet;

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("cover set {0:?} is empty")]
    EmptySet(String),
    #[error("cover set {0:?} contains id {1:?} outside the ground set")]
    UnknownId(String, String),
    #[error("union of cover sets misses ground id {0:?}")]
    UnionMismatch(String),
    #[error("duplicate ground id {0:?}")]
    DuplicateGroundId(String),
    #[error("ground sets differ (e.g. {0:?})")]
    GroundMismatch(String),
    #[error("region contains {0:?}, which is not in the ground set")]
    BadRegion(String),
    #[error("{0:?} does not refine {1:?}")]
    NotARefinement(String, String),
    #[error("x1 and x2 do not cover the ground set (missing {0:?})")]
    SplitNotCovering(String),
    #[error("grid pitch {pitch} is too coarse: must be at most lambda/24 = {bound}")]
    PitchTooCoarse { pitch: f64, bound: f64 },
    #[error("cube cover spec invalid: {0}")]
    InvalidCubeSpec(String),
    #[error("refiner contract violated at stage {stage}: {reason}")]
    StageContract { stage: usize, reason: String },
    #[error("exhaustion ground does not match cover ground")]
    ExhaustionMismatch,
    #[error("rounds must be at least 1")]
    InvalidRounds,
    #[error(transparent)]
    Space(#[from] crate::space::SpaceError),
}

/// A finite cover: labeled nonempty subsets of a ground set whose union is
/// the whole ground set.
#[derive(Debug, Clone)]
pub struct Cover {
    ground: Vec<String>,
    sets: Vec<(String, IdSet)>,
}

impl Cover {
    pub fn new(ground: Vec<String>, sets: Vec<(String, IdSet)>) -> Result<Self, CoverError> {
        let mut ground_set = IdSet::new();
        for id in &ground {
            if !ground_set.insert(id.clone()) {
                return Err(CoverError::DuplicateGroundId(id.clone()));
            }
        }
        let mut seen = IdSet::new();
        for (label, ids) in &sets {
            if ids.is_empty() {
                return Err(CoverError::EmptySet(label.clone()));
            }
            for id in ids {
                if !ground_set.contains(id) {
                    return Err(CoverError::UnknownId(label.clone(), id.clone()));
                }
                seen.insert(id.clone());
            }
        }
        if let Some(missing) = ground_set.difference(&seen).next() {
            return Err(CoverError::UnionMismatch(missing.clone()));
        }
        Ok(Cover { ground, sets })
    }

    /// Convenience constructor with labels `S0, S1, ...`.
    pub fn from_sets(ground: Vec<String>, sets: Vec<IdSet>) -> Result<Self, CoverError> {
        let labeled = sets
            .into_iter()
            .enumerate()
            .map(|(i, s)| (format!("S{i}"), s))
            .collect();
        Cover::new(ground, labeled)
    }

    pub fn ground(&self) -> &[String] {
        &self.ground
    }

    pub fn ground_set(&self) -> IdSet {
        self.ground.iter().cloned().collect()
    }

    pub fn sets(&self) -> &[(String, IdSet)] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Restriction to a sub-ground: sets are intersected with `region` and
    /// empty intersections are pruned.
    pub fn restrict(&self, region: &IdSet) -> Result<Cover, CoverError> {
        let ground_set = self.ground_set();
        if let Some(bad) = region.difference(&ground_set).next() {
            return Err(CoverError::BadRegion(bad.clone()));
        }
        let sets = self
            .sets
            .iter()
            .filter_map(|(label, ids)| {
                let inter: IdSet = ids.intersection(region).cloned().collect();
                (!inter.is_empty()).then(|| (label.clone(), inter))
            })
            .collect();
        Cover::new(region.iter().cloned().collect(), sets)
    }
}

/// Multiplicity of each ground point: how many cover sets contain it.
fn multiplicities(cover: &Cover) -> HashMap<&str, usize> {
    let mut counts: HashMap<&str, usize> = HashMap::with_capacity(cover.ground.len());
    for (_, ids) in &cover.sets {
        for id in ids {
            *counts.entry(id.as_str()).or_insert(0) += 1;
        }
    }
    counts
}

/// The order of a cover: the largest `m` such that some point lies in
/// `m + 1` of its sets.
pub fn order(cover: &Cover) -> usize {
    multiplicities(cover).values().copied().max().unwrap_or(1) - 1
}

/// The order counted only at points of `region`; `None` when the region is
/// empty (there is no point to witness any multiplicity).
pub fn order_in(cover: &Cover, region: &IdSet) -> Result<Option<usize>, CoverError> {
    let ground_set = cover.ground_set();
    if let Some(bad) = region.difference(&ground_set).next() {
        return Err(CoverError::BadRegion(bad.clone()));
    }
    if region.is_empty() {
        return Ok(None);
    }
    let counts = multiplicities(cover);
    let max = region
        .iter()
        .map(|id| counts.get(id.as_str()).copied().unwrap_or(0))
        .max()
        .unwrap_or(0);
    Ok(Some(max.saturating_sub(1)))
}

/// Witness of a refinement: for each set of the finer cover, the index of the
/// first containing set of the coarser cover.
pub type RefinementWitness = Vec<usize>;

/// Does `v` refine `u`? Both must share the ground set. On success the
/// witness maps each `v`-set to the first `u`-set containing it.
pub fn refines(v: &Cover, u: &Cover) -> Result<Option<RefinementWitness>, CoverError> {
    let vg = v.ground_set();
    let ug = u.ground_set();
    if vg != ug {
        let example = vg.symmetric_difference(&ug).next().cloned().unwrap_or_default();
        return Err(CoverError::GroundMismatch(example));
    }
    let mut witness = Vec::with_capacity(v.sets.len());
    for (_, vset) in &v.sets {
        match u.sets.iter().position(|(_, uset)| vset.is_subset(uset)) {
            Some(i) => witness.push(i),
            None => return Ok(None),
        }
    }
    Ok(Some(witness))
}

/// The Lebesgue number of a cover on a finite metric space:
/// `min over x of max over sets U containing x of d(x, ground \ U)`,
/// with the distance to an empty complement capped at `diam + 1`.
///
/// Every subset of diameter strictly below the returned value lies inside
/// some cover set.
pub fn lebesgue_number(cover: &Cover, space: &FiniteMetricSpace) -> Result<f64, CoverError> {
    let ground_set = cover.ground_set();
    let space_set: IdSet = space.ids().iter().cloned().collect();
    if ground_set != space_set {
        let example = ground_set
            .symmetric_difference(&space_set)
            .next()
            .cloned()
            .unwrap_or_default();
        return Err(CoverError::GroundMismatch(example));
    }
    let cap = space.total_diameter() + 1.0;
    let complements: Vec<IdSet> = cover
        .sets
        .iter()
        .map(|(_, ids)| ground_set.difference(ids).cloned().collect())
        .collect();
    let mut lambda = f64::INFINITY;
    for x in space.ids() {
        let mut best: f64 = 0.0;
        for ((_, ids), complement) in cover.sets.iter().zip(&complements) {
            if !ids.contains(x) {
                continue;
            }
            let d = space.distance_to_set(x, complement.iter()).unwrap_or(cap).min(cap);
            best = best.max(d);
        }
        lambda = lambda.min(best);
    }
    Ok(lambda)
}

/// One axis of a unit-lattice cube: either the integer `{k}` or the open
/// interval `(k, k+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CubeAxis {
    Fixed(i64),
    Interval(i64),
}

/// Parameters of the scaled cube cover: dimension, the Lebesgue scale
/// `lambda`, an axis-aligned box, and the evaluation grid pitch.
///
/// All parameters are exact rationals so that membership of grid points in
/// the cover sets is decided exactly.
#[derive(Debug, Clone)]
pub struct CubeCoverSpec {
    n: usize,
    lambda: Q,
    bounds: Vec<(Q, Q)>,
    pitch: Q,
}

impl CubeCoverSpec {
    pub fn new(n: usize, lambda: Q, bounds: Vec<(Q, Q)>, pitch: Q) -> Result<Self, CoverError> {
        if n == 0 {
            return Err(CoverError::InvalidCubeSpec("dimension must be positive".into()));
        }
        if bounds.len() != n {
            return Err(CoverError::InvalidCubeSpec(format!(
                "expected {n} axis bounds, got {}",
                bounds.len()
            )));
        }
        if !lambda.is_positive() || !pitch.is_positive() {
            return Err(CoverError::InvalidCubeSpec("lambda and pitch must be positive".into()));
        }
        if bounds.iter().any(|(lo, hi)| lo > hi) {
            return Err(CoverError::InvalidCubeSpec("box is empty".into()));
        }
        let bound = &lambda / q_int(24);
        if pitch > bound {
            return Err(CoverError::PitchTooCoarse {
                pitch: q_to_f64(&pitch),
                bound: q_to_f64(&bound),
            });
        }
        Ok(CubeCoverSpec { n, lambda, bounds, pitch })
    }

    /// Spec from f64 parameters (converted exactly) with a symmetric box.
    pub fn symmetric(n: usize, lambda: f64, half_width: f64, pitch: f64) -> Result<Self, CoverError> {
        let hw = q_from_f64(half_width);
        CubeCoverSpec::new(
            n,
            q_from_f64(lambda),
            (0..n).map(|_| (-hw.clone(), hw.clone())).collect(),
            q_from_f64(pitch),
        )
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> &Q {
        &self.lambda
    }

    /// Exact grid values along each axis: `lo, lo + pitch, ...` up to `hi`.
    pub fn axis_values(&self) -> Vec<Vec<Q>> {
        self.bounds
            .iter()
            .map(|(lo, hi)| {
                let mut values = Vec::new();
                let mut v = lo.clone();
                while v <= *hi {
                    values.push(v.clone());
                    v += &self.pitch;
                }
                values
            })
            .collect()
    }

    /// Grid id for a multi-index, matching the ids used by [`cube_cover`].
    pub fn grid_id(index: &[usize]) -> String {
        let mut s = String::from("g");
        for (k, j) in index.iter().enumerate() {
            if k > 0 {
                s.push('_');
            }
            s.push_str(&j.to_string());
        }
        s
    }
}

/// Diagnostics emitted alongside the cube cover.
#[derive(Debug, Clone)]
pub struct CubeCoverReport {
    /// Order of the cover on the grid.
    pub order: usize,
    /// Per-set sup-norm diameters, aligned with the cover's set order.
    pub diameters: Vec<f64>,
    /// Largest set diameter.
    pub max_diameter: f64,
    /// Exact check `max diameter <= lambda / 2`.
    pub within_half_lambda: bool,
}

/// Membership of a scaled point `u` (original coordinate times `3/lambda`)
/// in the neighborhood `U(C)`: with `F` the fixed axes and `J` the interval
/// axes of `C`, the point lies in `U(C)` iff
/// `max_{i in F} |u_i - k_i| < min(1/4, min_{i in J} dist(u_i, Z))`.
///
/// This is the closed form of "some `x in C` has `|u - x|_inf < eps(x)/2`"
/// where `eps(x) = min(1/2, distance of each non-integer coordinate to Z)`.
pub fn cube_membership(u: &[Q], cube: &[CubeAxis]) -> bool {
    let quarter = q_ratio(1, 4);
    let mut fixed_max = Q::zero();
    let mut interval_min: Option<Q> = None;
    for (coord, axis) in u.iter().zip(cube) {
        match axis {
            CubeAxis::Fixed(k) => {
                let d = (coord - q_int(*k)).abs();
                if d > fixed_max {
                    fixed_max = d;
                }
            }
            CubeAxis::Interval(k) => {
                let above = coord - q_int(*k);
                let below = q_int(k + 1) - coord;
                if !above.is_positive() || !below.is_positive() {
                    return false;
                }
                let d = above.min(below);
                interval_min = Some(match interval_min {
                    None => d,
                    Some(m) => m.min(d),
                });
            }
        }
    }
    let mut cap = quarter;
    if let Some(m) = interval_min {
        cap = cap.min(m);
    }
    fixed_max < cap
}

/// Build the scaled cube cover over the grid samples of the box.
///
/// The cover sets are the neighborhoods `(lambda/3) * U(C)` for the unit
/// cubes `C` of every stratum, intersected with the grid; empty sets are
/// pruned. Membership is decided exactly. The report carries the order on
/// the grid and exact per-set sup-norm diameters.
pub fn cube_cover(spec: &CubeCoverSpec) -> Result<(Cover, CubeCoverReport), CoverError> {
    let n = spec.n;
    let scale = q_int(3) / &spec.lambda;
    let axes = spec.axis_values();

    // per-axis tables of the scaled coordinate's floor and distance to Z
    struct Entry {
        floor: i64,
        nearest: i64,
        dist: Q,
        zero: bool,
    }
    let tables: Vec<Vec<Entry>> = axes
        .iter()
        .map(|values| {
            values
                .iter()
                .map(|x| {
                    let u = &scale * x;
                    let fl = u.floor();
                    let frac = &u - &fl;
                    let floor = fl.to_integer().to_i64().expect("grid coordinate out of range");
                    let half = q_ratio(1, 2);
                    let dist = if frac <= half { frac.clone() } else { q_int(1) - &frac };
                    let nearest = if frac <= half { floor } else { floor + 1 };
                    Entry { floor, nearest, zero: frac.is_zero(), dist }
                })
                .collect()
        })
        .collect();

    // rank distances globally so per-point work is integer comparisons
    let mut distinct: Vec<Q> = tables
        .iter()
        .flatten()
        .filter(|e| !e.zero)
        .map(|e| e.dist.clone())
        .collect();
    distinct.sort();
    distinct.dedup();
    let quarter = q_ratio(1, 4);
    let lt_quarter: Vec<bool> = distinct.iter().map(|d| *d < quarter).collect();
    let rank_of: HashMap<Q, usize> = distinct.iter().cloned().zip(0..).collect();
    let ranked: Vec<Vec<(i64, i64, Option<usize>)>> = tables
        .iter()
        .map(|col| {
            col.iter()
                .map(|e| (e.floor, e.nearest, (!e.zero).then(|| rank_of[&e.dist])))
                .collect()
        })
        .collect();

    let mut sets: BTreeMap<Vec<CubeAxis>, IdSet> = BTreeMap::new();
    let mut extents: HashMap<Vec<CubeAxis>, Vec<(usize, usize)>> = HashMap::new();
    let mut max_multiplicity = 0usize;
    let mut ground = Vec::new();

    let mut index = vec![0usize; n];
    'grid: loop {
        let id = CubeCoverSpec::grid_id(&index);
        ground.push(id.clone());

        // axes with positive distance, sorted by distance descending
        let mut nonzero: Vec<(usize, usize)> = Vec::with_capacity(n); // (rank, axis)
        for (axis, &j) in index.iter().enumerate() {
            if let Some(rank) = ranked[axis][j].2 {
                nonzero.push((rank, axis));
            }
        }
        nonzero.sort_by(|a, b| b.cmp(a));

        // candidate interval sets are the upper level sets of the distance
        // function; a cut qualifies iff the largest remaining distance is
        // below 1/4
        let mut cuts: Vec<usize> = vec![0];
        for c in 1..=nonzero.len() {
            if c == nonzero.len() || nonzero[c].0 != nonzero[c - 1].0 {
                cuts.push(c);
            }
        }
        let mut multiplicity = 0usize;
        for &c in &cuts {
            let qualifies = c == nonzero.len() || lt_quarter[nonzero[c].0];
            if !qualifies {
                continue;
            }
            multiplicity += 1;
            let mut key: Vec<CubeAxis> = (0..n)
                .map(|axis| CubeAxis::Fixed(ranked[axis][index[axis]].1))
                .collect();
            for &(_, axis) in &nonzero[..c] {
                key[axis] = CubeAxis::Interval(ranked[axis][index[axis]].0);
            }
            sets.entry(key.clone()).or_default().insert(id.clone());
            let ext = extents.entry(key).or_insert_with(|| vec![(usize::MAX, 0); n]);
            for (axis, &j) in index.iter().enumerate() {
                ext[axis].0 = ext[axis].0.min(j);
                ext[axis].1 = ext[axis].1.max(j);
            }
        }
        max_multiplicity = max_multiplicity.max(multiplicity);

        // odometer increment
        for axis in (0..n).rev() {
            index[axis] += 1;
            if index[axis] < axes[axis].len() {
                continue 'grid;
            }
            index[axis] = 0;
        }
        break;
    }

    let labeled: Vec<(String, IdSet)> = sets
        .iter()
        .map(|(key, ids)| (cube_label(key), ids.clone()))
        .collect();
    let mut diameters = Vec::with_capacity(labeled.len());
    let mut max_diameter_q = Q::zero();
    for key in sets.keys() {
        let ext = &extents[key];
        let mut diam = Q::zero();
        for axis in 0..n {
            let span = q_int((ext[axis].1 - ext[axis].0) as i64) * &spec.pitch;
            if span > diam {
                diam = span;
            }
        }
        if diam > max_diameter_q {
            max_diameter_q = diam.clone();
        }
        diameters.push(q_to_f64(&diam));
    }
    let half_lambda = &spec.lambda / q_int(2);
    let report = CubeCoverReport {
        order: max_multiplicity.saturating_sub(1),
        max_diameter: q_to_f64(&max_diameter_q),
        within_half_lambda: max_diameter_q <= half_lambda,
        diameters,
    };
    let cover = Cover::new(ground, labeled)?;
    Ok((cover, report))
}

fn cube_label(key: &[CubeAxis]) -> String {
    let d = key.iter().filter(|a| matches!(a, CubeAxis::Interval(_))).count();
    let body = key
        .iter()
        .map(|axis| match axis {
            CubeAxis::Fixed(k) => format!("[{k}]"),
            CubeAxis::Interval(k) => format!("({},{})", k, k + 1),
        })
        .collect::<Vec<_>>()
        .join("x");
    format!("d{d}:{body}")
}

/// Merge a refinement into its coarser cover: each coarse set `S` is
/// replaced by the union `V(S)` of the fine sets witnessed to lie inside it,
/// and empty unions are pruned.
///
/// If `a1` has order at most `d` at points of `x1` and `a2` has order at
/// most `d` at points of `x2`, with `x1` and `x2` jointly covering the
/// ground set, the merged cover has order at most `d` everywhere: a point of
/// `x1` lies only in sets `V(S)` with distinct parents `S` containing it,
/// and a point of `x2` lies only in sets witnessed by distinct `a2`-sets
/// containing it.
pub fn merge_refinements(
    a1: &Cover,
    a2: &Cover,
    x1: &IdSet,
    x2: &IdSet,
) -> Result<Cover, CoverError> {
    let ground_set = a1.ground_set();
    let union: IdSet = x1.union(x2).cloned().collect();
    if let Some(missing) = ground_set.difference(&union).next() {
        return Err(CoverError::SplitNotCovering(missing.clone()));
    }
    let witness = refines(a2, a1)?
        .ok_or_else(|| CoverError::NotARefinement("a2".into(), "a1".into()))?;
    amalgamate(a1, a2, &witness)
}

/// `V(S) = union of fine sets mapped to S`, empty sets pruned.
fn amalgamate(coarse: &Cover, fine: &Cover, witness: &[usize]) -> Result<Cover, CoverError> {
    let mut unions: Vec<IdSet> = vec![IdSet::new(); coarse.sets.len()];
    for ((_, ids), &target) in fine.sets.iter().zip(witness) {
        unions[target].extend(ids.iter().cloned());
    }
    let labeled = coarse
        .sets
        .iter()
        .zip(unions)
        .filter_map(|((label, _), ids)| {
            (!ids.is_empty()).then(|| (format!("V({label})"), ids))
        })
        .collect();
    Cover::new(coarse.ground.clone(), labeled)
}

/// A callback producing, for a given cover and region, a refinement of that
/// cover with order at most `d` in the region.
pub type Refiner<'a> = dyn FnMut(&Cover, &IdSet) -> Result<Cover, CoverError> + 'a;

/// Staged construction of a bounded-order refinement over an exhaustion.
///
/// Starting from `u`, each stage obtains from the refiner a refinement `W`
/// of the current cover with order at most `d` on the fresh annulus
/// `C_i \ C_{i-1}`, verifies that contract, and amalgamates `W` into the
/// current cover. After stage `i` the running cover has order at most `d`
/// at every point of `C_i`: points of `C_{i-1}` lie in sets with distinct
/// parents (bounded by the previous stage), and fresh points lie in sets
/// witnessed by distinct `W`-sets (bounded by the refiner contract). The
/// final stage covers the whole ground set, so the result has order at most
/// `d` everywhere and refines `u`.
pub fn staged_cover(
    u: &Cover,
    exhaustion: &Exhaustion,
    refiner: &mut Refiner<'_>,
    d: usize,
) -> Result<Cover, CoverError> {
    let ground_set = u.ground_set();
    if exhaustion.ground() != &ground_set {
        return Err(CoverError::ExhaustionMismatch);
    }
    let mut current = u.clone();
    let mut previous_stage = IdSet::new();
    for (i, stage) in exhaustion.stages().iter().enumerate() {
        let region: IdSet = stage.difference(&previous_stage).cloned().collect();
        if region.is_empty() {
            previous_stage = stage.clone();
            continue;
        }
        let w = refiner(&current, &region).map_err(|e| CoverError::StageContract {
            stage: i + 1,
            reason: format!("refiner failed: {e}"),
        })?;
        let witness = refines(&w, &current)
            .map_err(|e| CoverError::StageContract { stage: i + 1, reason: e.to_string() })?
            .ok_or_else(|| CoverError::StageContract {
                stage: i + 1,
                reason: "refiner output does not refine the current cover".into(),
            })?;
        let w_order = order_in(&w, &region).map_err(|e| CoverError::StageContract {
            stage: i + 1,
            reason: e.to_string(),
        })?;
        if let Some(o) = w_order {
            if o > d {
                return Err(CoverError::StageContract {
                    stage: i + 1,
                    reason: format!("refiner order {o} in the stage region exceeds bound {d}"),
                });
            }
        }
        current = amalgamate(&current, &w, &witness)?;
        previous_stage = stage.clone();
    }
    Ok(current)
}

/// An honest refiner backed by vertex-star covers of iterated barycentric
/// subdivision: subdivides until the star cover refines the given cover.
/// Star covers of an `n`-complex have order at most `n` everywhere, so the
/// region contract holds for any `d >= n`.
pub fn star_refiner(samples: &SampleSet, max_rounds: usize) -> impl FnMut(&Cover, &IdSet) -> Result<Cover, CoverError> + '_ {
    move |current: &Cover, _region: &IdSet| {
        for rounds in 0..=max_rounds {
            let candidate = subdivision::star_cover(samples, &current.ground_set(), rounds)?;
            if refines(&candidate, current)?.is_some() {
                return Ok(candidate);
            }
        }
        Err(CoverError::InvalidCubeSpec(format!(
            "star cover does not refine the target within {max_rounds} subdivision rounds"
        )))
    }
}

/// Upper bound for the covering dimension: the order of the vertex-star
/// cover of the `rounds`-fold barycentric subdivision, restricted to the
/// samples. For a valid `n`-complex this is at most `n`.
pub fn dimension_upper_bound(samples: &SampleSet, rounds: usize) -> Result<usize, CoverError> {
    if rounds < 1 {
        return Err(CoverError::InvalidRounds);
    }
    let cover = subdivision::star_cover(samples, &samples.id_set(), rounds)?;
    Ok(order(&cover))
}
