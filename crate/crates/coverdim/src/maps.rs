//! Sample maps and PL maps, fiber diameters, partitions of unity, proper
//! height functions, escape ladders, and blend extensions.
//!
//! A *sample map* is a table of values at sample ids; a *PL map* is
//! determined by vertex images and evaluated barycentrically. The fiber
//! diameter functional measures how far a map is from injective on a region;
//! the distance-quotient partition of unity realizes subordinate weight
//! functions explicitly; the proper height function and escape ladders give
//! the finite-stage certificate of properness.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::covers::{Cover, CoverError};
use crate::geometry::rational::q_to_f64;
use crate::geometry::{delta_metric, GeometryError};
use crate::space::{sup_distance, Exhaustion, FiniteMetricSpace, SampleSet, SimplicialComplex, SpaceError};
use crate::IdSet;

/// Tolerance for partition-of-unity sums.
pub const POU_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("value for {0:?} missing from map domain")]
    DomainMismatch(String),
    #[error("map dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("vertex {0:?} has no image")]
    MissingVertexImage(String),
    #[error("point outside complex: {0}")]
    PointOutsideComplex(String),
    #[error("invalid barycentric input: {0}")]
    InvalidBarycentric(String),
    #[error("cover ground does not match the space (e.g. {0:?})")]
    GroundMismatch(String),
    #[error("weights do not sum to one at {id:?} (sum = {sum})")]
    PartitionSum { id: String, sum: f64 },
    #[error("denominator vanished at {0:?}: the sets do not cover the space")]
    DenominatorZero(String),
    #[error("blend width must be positive, got {0}")]
    NonpositiveWidth(f64),
    #[error("|h| exceeds the declared bound {bound} at {id:?}")]
    BoundViolated { id: String, bound: f64 },
    #[error("ladder must be strictly increasing")]
    LadderNotIncreasing,
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A map from sample ids to vectors in `R^N`, stored in id order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMap {
    dim: usize,
    values: BTreeMap<String, Vec<f64>>,
}

impl SampleMap {
    pub fn new(dim: usize) -> Self {
        SampleMap { dim, values: BTreeMap::new() }
    }

    pub fn from_values(dim: usize, values: BTreeMap<String, Vec<f64>>) -> Result<Self, MapError> {
        for v in values.values() {
            if v.len() != dim {
                return Err(MapError::DimensionMismatch(dim, v.len()));
            }
        }
        Ok(SampleMap { dim, values })
    }

    /// Tabulate a function over the ids of a space.
    pub fn tabulate<F: FnMut(&str) -> Vec<f64>>(
        dim: usize,
        ids: impl IntoIterator<Item = impl AsRef<str>>,
        mut f: F,
    ) -> Result<Self, MapError> {
        let mut values = BTreeMap::new();
        for id in ids {
            let v = f(id.as_ref());
            if v.len() != dim {
                return Err(MapError::DimensionMismatch(dim, v.len()));
            }
            values.insert(id.as_ref().to_string(), v);
        }
        Ok(SampleMap { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn insert(&mut self, id: String, value: Vec<f64>) -> Result<(), MapError> {
        if value.len() != self.dim {
            return Err(MapError::DimensionMismatch(self.dim, value.len()));
        }
        self.values.insert(id, value);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.values.get(id).map(|v| v.as_slice())
    }

    pub fn require(&self, id: &str) -> Result<&[f64], MapError> {
        self.get(id).ok_or_else(|| MapError::DomainMismatch(id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<f64>)> {
        self.values.iter()
    }

    pub fn domain(&self) -> IdSet {
        self.values.keys().cloned().collect()
    }

    pub fn domain_ids(&self) -> Vec<&String> {
        self.values.keys().collect()
    }

    /// Largest sup-norm over the domain.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .values()
            .map(|v| v.iter().fold(0.0f64, |m, x| m.max(x.abs())))
            .fold(0.0, f64::max)
    }
}

/// A piecewise-linear map into `R^N`, determined by vertex images and
/// evaluated barycentrically.
#[derive(Debug, Clone)]
pub struct PlMap {
    complex: Arc<SimplicialComplex>,
    dim: usize,
    vertex_images: BTreeMap<String, Vec<f64>>,
}

impl PlMap {
    pub fn new(
        complex: Arc<SimplicialComplex>,
        dim: usize,
        vertex_images: BTreeMap<String, Vec<f64>>,
    ) -> Result<Self, MapError> {
        for v in complex.vertices() {
            match vertex_images.get(v) {
                None => return Err(MapError::MissingVertexImage(v.clone())),
                Some(img) if img.len() != dim => {
                    return Err(MapError::DimensionMismatch(dim, img.len()))
                }
                _ => {}
            }
        }
        Ok(PlMap { complex, dim, vertex_images })
    }

    pub fn complex(&self) -> &SimplicialComplex {
        &self.complex
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_images(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.vertex_images
    }

    pub fn vertex_image(&self, v: &str) -> Option<&[f64]> {
        self.vertex_images.get(v).map(|x| x.as_slice())
    }

    /// Barycentric evaluation at a point of a listed simplex.
    pub fn evaluate(&self, simplex: &[String], bary: &[f64]) -> Result<Vec<f64>, MapError> {
        if simplex.len() != bary.len() {
            return Err(MapError::InvalidBarycentric("length mismatch".into()));
        }
        let mut indices = Vec::with_capacity(simplex.len());
        for v in simplex {
            let i = self
                .complex
                .vertex_index(v)
                .ok_or_else(|| MapError::PointOutsideComplex(format!("unknown vertex {v:?}")))?;
            indices.push(i);
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if !self.complex.contains_simplex(&sorted) {
            return Err(MapError::PointOutsideComplex(format!("{simplex:?} is not a simplex")));
        }
        let sum: f64 = bary.iter().sum();
        if bary.iter().any(|&b| b < -1e-12) || (sum - 1.0).abs() > 1e-12 {
            return Err(MapError::InvalidBarycentric(format!(
                "coordinates must be nonnegative and sum to 1, got sum {sum}"
            )));
        }
        let mut out = vec![0.0; self.dim];
        for (v, &b) in simplex.iter().zip(bary) {
            let img = &self.vertex_images[v];
            for (o, x) in out.iter_mut().zip(img) {
                *o += b * x;
            }
        }
        Ok(out)
    }

    /// Evaluate at every sample of a sample set.
    pub fn at_samples(&self, samples: &SampleSet) -> Result<SampleMap, MapError> {
        let mut values = BTreeMap::new();
        for sample in samples.samples() {
            let mut out = vec![0.0; self.dim];
            for (v, b) in sample.support().iter().zip(sample.barycentric()) {
                let name = self.complex.vertex_name(*v);
                let img = self
                    .vertex_images
                    .get(name)
                    .ok_or_else(|| MapError::MissingVertexImage(name.to_string()))?;
                let w = q_to_f64(b);
                for (o, x) in out.iter_mut().zip(img) {
                    *o += w * x;
                }
            }
            values.insert(sample.id().to_string(), out);
        }
        SampleMap::from_values(self.dim, values)
    }
}

/// Nonnegative weights subordinate to a cover, summing to one at each sample.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    cover: Cover,
    ids: Vec<String>,
    /// weights[set][sample position in `ids`]
    weights: Vec<Vec<f64>>,
}

impl PartitionOfUnity {
    pub fn cover(&self) -> &Cover {
        &self.cover
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn set_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, set: usize, id: &str) -> f64 {
        match self.ids.binary_search_by(|x| x.as_str().cmp(id)) {
            Ok(pos) => self.weights[set][pos],
            Err(_) => 0.0,
        }
    }

    /// The weight vector of a sample across all sets.
    pub fn weights_at(&self, id: &str) -> Vec<f64> {
        (0..self.set_count()).map(|s| self.weight(s, id)).collect()
    }
}

/// The explicit distance-quotient partition of unity subordinate to a cover:
/// `phi_i(x) = g_i(x) / sum_j g_j(x)` with `g_i(x) = d(x, ground \ U_i)`
/// (and `g_i = 1` when `U_i` is the whole ground set).
///
/// Supports are contained in the cover sets exactly: a sample outside `U_i`
/// lies in the complement, so `g_i` vanishes there. Local finiteness is
/// automatic (finitely many sets). Weights are reproducible bit for bit.
pub fn partition_of_unity(
    cover: &Cover,
    space: &FiniteMetricSpace,
) -> Result<PartitionOfUnity, MapError> {
    let ground_set = cover.ground_set();
    let space_set: IdSet = space.ids().iter().cloned().collect();
    if ground_set != space_set {
        let example = ground_set
            .symmetric_difference(&space_set)
            .next()
            .cloned()
            .unwrap_or_default();
        return Err(MapError::GroundMismatch(example));
    }
    let mut ids: Vec<String> = space.ids().to_vec();
    ids.sort();
    let complements: Vec<IdSet> = cover
        .sets()
        .iter()
        .map(|(_, s)| ground_set.difference(s).cloned().collect())
        .collect();
    let mut raw: Vec<Vec<f64>> = Vec::with_capacity(cover.sets().len());
    for complement in &complements {
        let row: Vec<f64> = ids
            .iter()
            .map(|x| match space.distance_to_set(x, complement.iter()) {
                Some(d) => d,
                None => 1.0,
            })
            .collect();
        raw.push(row);
    }
    let mut weights = vec![vec![0.0; ids.len()]; raw.len()];
    for (pos, id) in ids.iter().enumerate() {
        let total: f64 = raw.iter().map(|row| row[pos]).sum();
        if total <= 0.0 {
            return Err(MapError::DenominatorZero(id.clone()));
        }
        for (set, row) in raw.iter().enumerate() {
            weights[set][pos] = row[pos] / total;
        }
    }
    let pou = PartitionOfUnity { cover: cover.clone(), ids, weights };
    for id in pou.ids.clone() {
        let sum: f64 = (0..pou.set_count()).map(|s| pou.weight(s, &id)).sum();
        if (sum - 1.0).abs() > POU_SUM_TOL {
            return Err(MapError::PartitionSum { id, sum });
        }
    }
    Ok(pou)
}

/// The fiber-diameter functional at tolerance `tau`: the largest distance
/// `d(x, y)` over sample pairs of `region` whose images differ by at most
/// `tau` in sup-norm. `tau = 0` measures exact sample fibers; the functional
/// is nondecreasing in `tau`.
pub fn fiber_diameter(
    map: &SampleMap,
    region: &IdSet,
    tau: f64,
    space: &FiniteMetricSpace,
) -> Result<f64, MapError> {
    let members: Vec<&String> = region.iter().collect();
    for id in &members {
        map.require(id)?;
        if !space.contains(id) {
            return Err(MapError::DomainMismatch((*id).clone()));
        }
    }
    let mut diam: f64 = 0.0;
    for (i, x) in members.iter().enumerate() {
        let fx = map.get(x).unwrap();
        for y in &members[i + 1..] {
            let fy = map.get(y).unwrap();
            if sup_distance(fx, fy) <= tau {
                diam = diam.max(space.distance(x, y));
            }
        }
    }
    Ok(diam)
}

/// Is the map in `U_eps(region)`, i.e. is its fiber diameter below `eps`?
pub fn in_u_eps(
    map: &SampleMap,
    region: &IdSet,
    eps: f64,
    tau: f64,
    space: &FiniteMetricSpace,
) -> Result<bool, MapError> {
    Ok(fiber_diameter(map, region, tau, space)? < eps)
}

/// Instantiation of the openness certificate for `U_eps`: a threshold `b`
/// strictly between the fiber diameter and `eps`, and a radius `rho0 > 0`
/// such that every map within `rho0` of `f` (in the uniform metric) still
/// has fiber diameter at most `b < eps`.
#[derive(Debug, Clone, Copy)]
pub struct UEpsOpenness {
    pub b: f64,
    pub rho0: f64,
}

/// Compute the openness radius: `rho0 = (1/2) min delta(f(x), f(y))` over
/// the "far pairs" `d(x,y) >= b`. Returns `None` when `f` is not in
/// `U_eps(region)` at `tau = 0`.
pub fn u_eps_openness_radius(
    map: &SampleMap,
    region: &IdSet,
    eps: f64,
    space: &FiniteMetricSpace,
) -> Result<Option<UEpsOpenness>, MapError> {
    let delta = fiber_diameter(map, region, 0.0, space)?;
    if delta >= eps {
        return Ok(None);
    }
    let b = (delta + eps) / 2.0;
    let members: Vec<&String> = region.iter().collect();
    let mut min_sep = f64::INFINITY;
    for (i, x) in members.iter().enumerate() {
        for y in &members[i + 1..] {
            if space.distance(x, y) >= b {
                let sep = delta_metric(map.get(x).unwrap(), map.get(y).unwrap())?;
                min_sep = min_sep.min(sep);
            }
        }
    }
    // no far pairs at all: the region is smaller than b, so any map
    // whatsoever has fiber diameter < b; the radius caps at 1 (the
    // diameter of the bounded metric)
    let rho0 = if min_sep.is_finite() { min_sep / 2.0 } else { 1.0 };
    Ok(Some(UEpsOpenness { b, rho0 }))
}

/// The proper height function of an exhaustion: `f(x) = sum_k k phi_k(x)`
/// with weights subordinate to the stage-derived cover.
///
/// Stages are turned into a cover by their annuli `C_k \ C_{k-1}`, each
/// optionally widened by the points of the next annulus within
/// `shell_width` of `C_k`. With `shell_width = 0` the supports are disjoint
/// and `f` equals `k` exactly on the k-th annulus; positive widths smooth
/// the transition. The minimum of `f` outside stage `k` is nondecreasing in
/// `k`, which is the finite form of escaping to infinity.
pub fn proper_height(
    exhaustion: &Exhaustion,
    space: &FiniteMetricSpace,
    shell_width: f64,
) -> Result<SampleMap, MapError> {
    let space_set: IdSet = space.ids().iter().cloned().collect();
    if exhaustion.ground() != &space_set {
        let example = exhaustion
            .ground()
            .symmetric_difference(&space_set)
            .next()
            .cloned()
            .unwrap_or_default();
        return Err(MapError::GroundMismatch(example));
    }
    let stages = exhaustion.stages();
    let mut labeled: Vec<(String, IdSet)> = Vec::new();
    let mut stage_of_set: Vec<usize> = Vec::new();
    let mut prev = IdSet::new();
    for (k, stage) in stages.iter().enumerate() {
        let mut u: IdSet = stage.difference(&prev).cloned().collect();
        if shell_width > 0.0 && k + 1 < stages.len() {
            for x in stages[k + 1].difference(stage) {
                if let Some(d) = space.distance_to_set(x, stage.iter()) {
                    if d < shell_width {
                        u.insert(x.clone());
                    }
                }
            }
        }
        if !u.is_empty() {
            labeled.push((format!("U{}", k + 1), u));
            stage_of_set.push(k + 1);
        }
        prev = stage.clone();
    }
    let cover = Cover::new(space.ids().to_vec(), labeled)?;
    let pou = partition_of_unity(&cover, space)?;
    SampleMap::tabulate(1, space.ids(), |id| {
        let mut h = 0.0;
        for (set, &k) in stage_of_set.iter().enumerate() {
            h += k as f64 * pou.weight(set, id);
        }
        vec![h]
    })
}

/// Does `f` escape to infinity along the given stage list? For each rung
/// `R` of the (strictly increasing) ladder there must be a stage `C` with
/// `|f(x)|_inf > R` for every `x` outside `C`; an empty complement
/// satisfies this vacuously, which is the compact case.
pub fn escapes_to_infinity(
    f: &SampleMap,
    stages: &[IdSet],
    ladder: &[f64],
) -> Result<bool, MapError> {
    Ok(escape_witnesses(f, stages, ladder)?.iter().all(Option::is_some))
}

/// For each ladder rung, the first witnessing stage index (if any).
pub fn escape_witnesses(
    f: &SampleMap,
    stages: &[IdSet],
    ladder: &[f64],
) -> Result<Vec<Option<usize>>, MapError> {
    if ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MapError::LadderNotIncreasing);
    }
    let norms: BTreeMap<&String, f64> = f
        .iter()
        .map(|(id, v)| (id, v.iter().fold(0.0f64, |m, x| m.max(x.abs()))))
        .collect();
    Ok(ladder
        .iter()
        .map(|&r| {
            stages.iter().position(|stage| {
                norms
                    .iter()
                    .filter(|(id, _)| !stage.contains(**id))
                    .all(|(_, &norm)| norm > r)
            })
        })
        .collect())
}

/// Extend a bounded map off its region by the nearest-point blend:
/// `H(x) = beta(x) h(pi(x))` with `pi` the nearest region sample (ties by
/// id order) and `beta(x) = max(0, 1 - d(x, region)/width)`.
///
/// `H` agrees with `h` on the region, never exceeds the bound `r`, and
/// vanishes at distance `width` or more from the region.
pub fn blend_extend(
    h: &SampleMap,
    region: &IdSet,
    space: &FiniteMetricSpace,
    r: f64,
    width: f64,
) -> Result<SampleMap, MapError> {
    if !(width > 0.0) {
        return Err(MapError::NonpositiveWidth(width));
    }
    for id in region {
        let v = h.require(id)?;
        let norm = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if norm > r {
            return Err(MapError::BoundViolated { id: id.clone(), bound: r });
        }
    }
    SampleMap::tabulate(h.dim(), space.ids(), |id| {
        if region.contains(id) {
            return h.get(id).unwrap().to_vec();
        }
        // nearest region sample; BTreeSet iteration makes the first
        // minimizer the one with the smallest id
        let mut nearest: Option<(&String, f64)> = None;
        for candidate in region {
            let d = space.distance(id, candidate);
            if nearest.as_ref().map_or(true, |&(_, best)| d < best) {
                nearest = Some((candidate, d));
            }
        }
        match nearest {
            None => vec![0.0; h.dim()],
            Some((pi, d)) => {
                let beta = (1.0 - d / width).max(0.0);
                h.get(pi).unwrap().iter().map(|x| beta * x).collect()
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::Cover;
    use crate::fixtures;
    use crate::geometry::rho_metric;
    use crate::space::{build_exhaustion, realize_metric};

    fn segment_space() -> (SampleSet, FiniteMetricSpace) {
        realize_metric(&fixtures::segment(), &fixtures::segment_coords(), 0.1).unwrap()
    }

    #[test]
    fn pl_map_evaluation() {
        let complex = Arc::new(fixtures::segment());
        let mut images = BTreeMap::new();
        images.insert("a".to_string(), vec![0.0, 0.0]);
        images.insert("b".to_string(), vec![2.0, 4.0]);
        let map = PlMap::new(complex, 2, images).unwrap();
        assert_eq!(map.evaluate(&["a".into()], &[1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(
            map.evaluate(&["a".into(), "b".into()], &[0.5, 0.5]).unwrap(),
            vec![1.0, 2.0]
        );
        assert!(map.evaluate(&["a".into(), "zz".into()], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn triangle_barycenter_evaluation() {
        let complex = Arc::new(
            SimplicialComplex::from_maximal(
                2,
                vec!["a".into(), "b".into(), "c".into()],
                vec![vec!["a".into(), "b".into(), "c".into()]],
            )
            .unwrap(),
        );
        let mut images = BTreeMap::new();
        images.insert("a".to_string(), vec![0.0]);
        images.insert("b".to_string(), vec![3.0]);
        images.insert("c".to_string(), vec![6.0]);
        let map = PlMap::new(complex, 1, images).unwrap();
        let v = map
            .evaluate(
                &["a".into(), "b".into(), "c".into()],
                &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            )
            .unwrap();
        assert!((v[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn fiber_diameter_examples() {
        let (samples, space) = segment_space();
        let region = samples.id_set();
        // injective map: zero fiber diameter at tau = 0
        let inj = SampleMap::tabulate(1, space.ids(), |id| {
            vec![samples.get(id).unwrap().position()[0]]
        })
        .unwrap();
        assert_eq!(fiber_diameter(&inj, &region, 0.0, &space).unwrap(), 0.0);
        // constant map: fiber diameter = region diameter
        let constant = SampleMap::tabulate(1, space.ids(), |_| vec![0.0]).unwrap();
        let d = fiber_diameter(&constant, &region, 0.0, &space).unwrap();
        assert_eq!(d, space.total_diameter());
        assert!(in_u_eps(&inj, &region, 1e-6, 0.0, &space).unwrap());
        assert!(!in_u_eps(&constant, &region, d, 0.0, &space).unwrap());
    }

    #[test]
    fn fiber_diameter_monotone_in_tau() {
        let (samples, space) = segment_space();
        let region = samples.id_set();
        let map = SampleMap::tabulate(1, space.ids(), |id| {
            let x = samples.get(id).unwrap().position()[0];
            vec![(x * 3.0).sin()]
        })
        .unwrap();
        let taus = [0.0, 1e-9, 1e-3, 0.1, 1.0];
        let mut last = -1.0;
        for &tau in &taus {
            let d = fiber_diameter(&map, &region, tau, &space).unwrap();
            assert!(d >= last);
            last = d;
        }
    }

    #[test]
    fn partition_of_unity_single_set() {
        let (samples, space) = segment_space();
        let cover = Cover::from_sets(space.ids().to_vec(), vec![samples.id_set()]).unwrap();
        let pou = partition_of_unity(&cover, &space).unwrap();
        for id in space.ids() {
            assert_eq!(pou.weight(0, id), 1.0);
        }
    }

    #[test]
    fn partition_of_unity_two_overlapping_intervals() {
        let (samples, space) = segment_space();
        let left: IdSet = space
            .ids()
            .iter()
            .filter(|id| samples.get(id).unwrap().position()[0] < 0.7)
            .cloned()
            .collect();
        let right: IdSet = space
            .ids()
            .iter()
            .filter(|id| samples.get(id).unwrap().position()[0] > 0.3)
            .cloned()
            .collect();
        let cover = Cover::from_sets(space.ids().to_vec(), vec![left.clone(), right.clone()]).unwrap();
        let pou = partition_of_unity(&cover, &space).unwrap();
        for id in space.ids() {
            let w0 = pou.weight(0, id);
            let w1 = pou.weight(1, id);
            assert!((w0 + w1 - 1.0).abs() <= POU_SUM_TOL);
            let x = samples.get(id).unwrap().position()[0];
            if x > 0.3 && x < 0.7 {
                assert!(w0 > 0.0 && w0 < 1.0, "overlap weight should be interior");
            }
            // support containment is exact
            if !left.contains(id) {
                assert_eq!(w0, 0.0);
            }
            if !right.contains(id) {
                assert_eq!(w1, 0.0);
            }
            // a point in exactly one set carries full weight there
            if left.contains(id) && !right.contains(id) {
                assert_eq!(w0, 1.0);
            }
        }
    }

    #[test]
    fn partition_weights_are_reproducible() {
        let (samples, space) = segment_space();
        let left: IdSet = space.ids().iter().take(8).cloned().collect();
        let rest: IdSet = space.ids().iter().skip(4).cloned().collect();
        let cover = Cover::from_sets(space.ids().to_vec(), vec![left, rest]).unwrap();
        let a = partition_of_unity(&cover, &space).unwrap();
        let b = partition_of_unity(&cover, &space).unwrap();
        for id in space.ids() {
            assert_eq!(a.weights_at(id), b.weights_at(id));
        }
        let _ = samples;
    }

    #[test]
    fn proper_height_single_stage_is_one() {
        let (_, space) = segment_space();
        let exhaustion = build_exhaustion(&space, 1).unwrap();
        let f = proper_height(&exhaustion, &space, 0.0).unwrap();
        for id in space.ids() {
            assert_eq!(f.get(id).unwrap(), &[1.0]);
        }
    }

    #[test]
    fn proper_height_stage_minima_nondecreasing() {
        let (_, space) = segment_space();
        let exhaustion = build_exhaustion(&space, 5).unwrap();
        let f = proper_height(&exhaustion, &space, 0.0).unwrap();
        let mut last = 0.0;
        let mut prev = IdSet::new();
        for stage in exhaustion.stages() {
            let annulus: Vec<&String> = stage.difference(&prev).collect();
            if let Some(min) = annulus
                .iter()
                .map(|id| f.get(id).unwrap()[0])
                .min_by(|a, b| a.partial_cmp(b).unwrap())
            {
                assert!(min >= last);
                last = min;
            }
            prev = stage.clone();
        }
    }

    #[test]
    fn proper_height_two_distant_clusters() {
        // two far-apart clusters, two stages, empty shells: f is exactly 1
        // on the first cluster and 2 on the second
        let ids = vec!["a".to_string(), "b".to_string(), "c".to_string(), "d".to_string()];
        let d = |x: f64, y: f64| (x - y).abs();
        let pos = [0.0, 0.1, 100.0, 100.1];
        let dist: Vec<Vec<f64>> = pos
            .iter()
            .map(|&x| pos.iter().map(|&y| d(x, y)).collect())
            .collect();
        let space = FiniteMetricSpace::new(ids.clone(), dist).unwrap();
        let stages = vec![
            ["a", "b"].iter().map(|s| s.to_string()).collect::<IdSet>(),
            ids.iter().cloned().collect::<IdSet>(),
        ];
        let exhaustion = Exhaustion::new(stages).unwrap();
        let f = proper_height(&exhaustion, &space, 0.0).unwrap();
        assert_eq!(f.get("a").unwrap(), &[1.0]);
        assert_eq!(f.get("b").unwrap(), &[1.0]);
        assert_eq!(f.get("c").unwrap(), &[2.0]);
        assert_eq!(f.get("d").unwrap(), &[2.0]);
    }

    #[test]
    fn escape_ladder_examples() {
        let (_, space) = segment_space();
        let exhaustion = build_exhaustion(&space, 3).unwrap();
        // compact case: final stage is everything, any ladder passes
        let f = SampleMap::tabulate(1, space.ids(), |_| vec![0.5]).unwrap();
        assert!(escapes_to_infinity(&f, exhaustion.stages(), &[1.0, 2.0]).unwrap());
        // constant zero with a strict ladder and no full final stage
        let partial: Vec<IdSet> = vec![exhaustion.stages()[0].clone()];
        assert!(!escapes_to_infinity(&f, &partial, &[1.0]).unwrap());
        // non-increasing ladder is rejected
        assert!(escapes_to_infinity(&f, exhaustion.stages(), &[2.0, 1.0]).is_err());
    }

    #[test]
    fn escape_preserved_under_small_perturbation() {
        // rho(f, g) < 1 and f escapes on ladder + 1 => g escapes on ladder
        let (_, space) = segment_space();
        let exhaustion = build_exhaustion(&space, 4).unwrap();
        let f = proper_height(&exhaustion, &space, 0.0).unwrap();
        let scaled = SampleMap::tabulate(1, space.ids(), |id| vec![f.get(id).unwrap()[0] * 3.0])
            .unwrap();
        let g = SampleMap::tabulate(1, space.ids(), |id| {
            vec![scaled.get(id).unwrap()[0] + 0.9]
        })
        .unwrap();
        let all = space.ids().iter().cloned().collect();
        assert!(rho_metric(&scaled, &g, &all).unwrap() < 1.0);
        let ladder = [4.0, 7.0];
        let shifted = [5.0, 8.0];
        let stages = &exhaustion.stages()[..exhaustion.len() - 1];
        if escapes_to_infinity(&scaled, stages, &shifted).unwrap() {
            assert!(escapes_to_infinity(&g, stages, &ladder).unwrap());
        }
    }

    #[test]
    fn blend_extension_behavior() {
        let (samples, space) = segment_space();
        let region: IdSet = space
            .ids()
            .iter()
            .filter(|id| samples.get(id).unwrap().position()[0] < 0.35)
            .cloned()
            .collect();
        let h = SampleMap::tabulate(2, region.iter(), |_| vec![0.4, -0.2]).unwrap();
        let w = 0.3;
        let ext = blend_extend(&h, &region, &space, 0.5, w).unwrap();
        for id in space.ids() {
            let v = ext.get(id).unwrap();
            let norm = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(norm <= 0.5 + 1e-12);
            if region.contains(id) {
                assert_eq!(v, h.get(id).unwrap());
            } else {
                let d = space.distance_to_set(id, region.iter()).unwrap();
                if d >= w {
                    assert_eq!(v, &[0.0, 0.0]);
                } else {
                    let beta = 1.0 - d / w;
                    assert!((v[0] - beta * 0.4).abs() < 1e-12);
                }
            }
        }
        // region = everything: extension is the identity
        let all = space.ids().iter().cloned().collect::<IdSet>();
        let full = SampleMap::tabulate(2, space.ids(), |_| vec![0.1, 0.1]).unwrap();
        let same = blend_extend(&full, &all, &space, 0.2, 1.0).unwrap();
        assert_eq!(same, full);
    }

    #[test]
    fn blend_rejects_bad_inputs() {
        let (_, space) = segment_space();
        let region: IdSet = space.ids().iter().take(3).cloned().collect();
        let h = SampleMap::tabulate(1, region.iter(), |_| vec![2.0]).unwrap();
        assert!(matches!(
            blend_extend(&h, &region, &space, 1.0, 0.0),
            Err(MapError::NonpositiveWidth(_))
        ));
        assert!(matches!(
            blend_extend(&h, &region, &space, 0.5, 1.0),
            Err(MapError::BoundViolated { .. })
        ));
    }

    #[test]
    fn openness_radius_protects_fiber_diameter() {
        let (samples, space) = segment_space();
        let region = samples.id_set();
        let f = SampleMap::tabulate(1, space.ids(), |id| {
            vec![samples.get(id).unwrap().position()[0]]
        })
        .unwrap();
        let eps = 0.5;
        let cert = u_eps_openness_radius(&f, &region, eps, &space).unwrap().unwrap();
        assert!(cert.rho0 > 0.0);
        // any g within rho0 of f stays inside U_eps at tau = 0
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g = SampleMap::tabulate(1, space.ids(), |id| {
                let bump = (rng.gen::<f64>() - 0.5) * 1.8 * cert.rho0;
                vec![f.get(id).unwrap()[0] + bump]
            })
            .unwrap();
            let all = space.ids().iter().cloned().collect();
            if rho_metric(&f, &g, &all).unwrap() < cert.rho0 {
                let d = fiber_diameter(&g, &region, 0.0, &space).unwrap();
                assert!(d <= cert.b, "fiber diameter {d} escaped the bound {}", cert.b);
            }
        }
    }
}
