//! Ground objects: finite metric spaces, simplicial complexes with sampled
//! geometric realizations, and exhaustions by nested finite stages.
//!
//! The ambient space is always a *finite sample* of the geometric realization
//! of an abstract complex. The metric is the sup-norm distance between
//! reference images of the samples, so every infimum and supremum appearing
//! in the classical theory becomes a finite minimum or maximum.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::geometry::rational::{q_from_f64, q_to_f64, Q};
use crate::IdSet;

/// Tolerance for the triangle inequality and metric symmetry checks.
pub const METRIC_TOL: f64 = 1e-12;
/// Tolerance for barycentric coordinate sums on ingestion.
pub const BARY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("metric is not square: {0} ids but {1} rows")]
    MetricShape(usize, usize),
    #[error("metric violates {what} at ({i},{j})")]
    MetricAxiom { what: &'static str, i: usize, j: usize },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("unknown id {0:?}")]
    UnknownId(String),
    #[error("complex is not face-closed: missing face {0:?}")]
    NotFaceClosed(Vec<String>),
    #[error("simplex {0:?} has cardinality {1}, exceeding n+1 = {2}")]
    SimplexTooLarge(Vec<String>, usize, usize),
    #[error("complex of dimension n = {0} has no simplex of cardinality n+1")]
    MissingTopSimplex(usize),
    #[error("vertex {0:?} appears in no simplex")]
    IsolatedVertex(String),
    #[error("simplex references unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("empty simplex listed")]
    EmptySimplex,
    #[error("mesh must be positive, got {0}")]
    NonpositiveMesh(f64),
    #[error("reference coordinates are not injective: {0:?} and {1:?} coincide")]
    CoordsNotInjective(String, String),
    #[error("reference coordinates missing for vertex {0:?}")]
    CoordsMissing(String),
    #[error("coordinate vectors have mixed dimensions")]
    CoordsMixedDim,
    #[error("batch count must be at least 1")]
    InvalidBatchCount,
    #[error("cannot exhaust an empty space (first stage must be nonempty)")]
    EmptySpace,
    #[error("exhaustion stages are not nested at stage {0}")]
    StagesNotNested(usize),
    #[error("exhaustion has no stages")]
    NoStages,
    #[error("sample {0:?} has invalid barycentric coordinates: {1}")]
    InvalidBarycentric(String, String),
    #[error("simplex {0:?} contains no sample")]
    UnsampledSimplex(Vec<String>),
}

/// A finite metric space: ordered ids plus an explicit distance matrix.
///
/// Construction validates the metric axioms exactly (zero diagonal, symmetry,
/// positivity off the diagonal) and the triangle inequality within
/// [`METRIC_TOL`].
#[derive(Debug, Clone)]
pub struct FiniteMetricSpace {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    dist: Vec<f64>,
}

impl FiniteMetricSpace {
    pub fn new(ids: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self, SpaceError> {
        let n = ids.len();
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(SpaceError::MetricShape(n, dist.len()));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(SpaceError::DuplicateId(id.clone()));
            }
        }
        let flat: Vec<f64> = dist.iter().flatten().copied().collect();
        let space = FiniteMetricSpace { ids, index, dist: flat };
        space.validate()?;
        Ok(space)
    }

    fn validate(&self) -> Result<(), SpaceError> {
        let n = self.ids.len();
        for i in 0..n {
            if self.dist[i * n + i] != 0.0 {
                return Err(SpaceError::MetricAxiom { what: "zero diagonal", i, j: i });
            }
            for j in 0..n {
                let d = self.dist[i * n + j];
                if !d.is_finite() || d < 0.0 {
                    return Err(SpaceError::MetricAxiom { what: "nonnegativity", i, j });
                }
                if (d - self.dist[j * n + i]).abs() > METRIC_TOL {
                    return Err(SpaceError::MetricAxiom { what: "symmetry", i, j });
                }
                if i != j && d <= 0.0 {
                    return Err(SpaceError::MetricAxiom { what: "positivity", i, j });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let dij = self.dist[i * n + j];
                for k in 0..n {
                    if self.dist[i * n + k] + self.dist[k * n + j] < dij - METRIC_TOL {
                        return Err(SpaceError::MetricAxiom { what: "triangle inequality", i, j });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn index_of(&self, id: &str) -> Result<usize, SpaceError> {
        self.index.get(id).copied().ok_or_else(|| SpaceError::UnknownId(id.to_string()))
    }

    /// Distance between two ids. Panics on unknown ids; use [`Self::contains`]
    /// to guard untrusted input.
    pub fn distance(&self, a: &str, b: &str) -> f64 {
        let i = self.index[a];
        let j = self.index[b];
        self.dist[i * self.ids.len() + j]
    }

    pub fn distance_by_index(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.ids.len() + j]
    }

    /// Distance from `id` to a set of ids; `None` when the set is empty
    /// (the classical d(x, emptyset) = +infinity case).
    pub fn distance_to_set<'a, I>(&self, id: &str, set: I) -> Option<f64>
    where
        I: IntoIterator<Item = &'a String>,
    {
        set.into_iter()
            .map(|other| self.distance(id, other))
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    }

    /// Diameter of a subset (0 for empty or singleton sets).
    pub fn diameter<'a, I>(&self, set: I) -> f64
    where
        I: IntoIterator<Item = &'a String> + Clone,
    {
        let mut diam: f64 = 0.0;
        let items: Vec<&String> = set.into_iter().collect();
        for (k, a) in items.iter().enumerate() {
            for b in &items[k + 1..] {
                diam = diam.max(self.distance(a, b));
            }
        }
        diam
    }

    /// Diameter of the whole space.
    pub fn total_diameter(&self) -> f64 {
        self.diameter(self.ids.iter())
    }

    /// Restriction of the metric to a subset of ids (order inherited).
    pub fn restrict(&self, keep: &IdSet) -> Result<FiniteMetricSpace, SpaceError> {
        for id in keep {
            if !self.contains(id) {
                return Err(SpaceError::UnknownId(id.clone()));
            }
        }
        let ids: Vec<String> = self.ids.iter().filter(|id| keep.contains(*id)).cloned().collect();
        let dist = ids
            .iter()
            .map(|a| ids.iter().map(|b| self.distance(a, b)).collect())
            .collect();
        FiniteMetricSpace::new(ids, dist)
    }
}

/// An abstract simplicial complex of intrinsic dimension `n`.
///
/// The simplex list must be face-closed (every nonempty subset of a listed
/// simplex is listed) and its maximal cardinality must be exactly `n + 1`.
#[derive(Debug, Clone)]
pub struct SimplicialComplex {
    n: usize,
    vertices: Vec<String>,
    vertex_index: HashMap<String, u32>,
    /// All faces, as sorted vertex-index vectors, in canonical order
    /// (by cardinality, then lexicographic).
    simplices: Vec<Vec<u32>>,
    simplex_set: HashSet<Vec<u32>>,
}

impl SimplicialComplex {
    /// Build from an explicit, face-closed simplex list.
    pub fn new(
        n: usize,
        vertices: Vec<String>,
        simplices: Vec<Vec<String>>,
    ) -> Result<Self, SpaceError> {
        let mut vertex_index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if vertex_index.insert(v.clone(), i as u32).is_some() {
                return Err(SpaceError::DuplicateId(v.clone()));
            }
        }
        let mut indexed: Vec<Vec<u32>> = Vec::with_capacity(simplices.len());
        for s in &simplices {
            if s.is_empty() {
                return Err(SpaceError::EmptySimplex);
            }
            let mut ix: Vec<u32> = Vec::with_capacity(s.len());
            for v in s {
                let vi = *vertex_index.get(v).ok_or_else(|| SpaceError::UnknownVertex(v.clone()))?;
                ix.push(vi);
            }
            ix.sort_unstable();
            ix.dedup();
            if ix.len() != s.len() {
                return Err(SpaceError::DuplicateId(format!("{s:?}")));
            }
            indexed.push(ix);
        }
        indexed.sort_by(|a, b| (a.len(), a.as_slice()).cmp(&(b.len(), b.as_slice())));
        indexed.dedup();
        let simplex_set: HashSet<Vec<u32>> = indexed.iter().cloned().collect();

        // face-closedness: every subset obtained by dropping one vertex is listed
        for s in &indexed {
            if s.len() > 1 {
                for drop in 0..s.len() {
                    let mut face = s.clone();
                    face.remove(drop);
                    if !simplex_set.contains(&face) {
                        let named = face.iter().map(|&i| vertices[i as usize].clone()).collect();
                        return Err(SpaceError::NotFaceClosed(named));
                    }
                }
            }
        }
        let max_card = indexed.iter().map(|s| s.len()).max().unwrap_or(0);
        if max_card > n + 1 {
            let big = indexed.iter().find(|s| s.len() == max_card).unwrap();
            let named = big.iter().map(|&i| vertices[i as usize].clone()).collect();
            return Err(SpaceError::SimplexTooLarge(named, max_card, n + 1));
        }
        if max_card != n + 1 {
            return Err(SpaceError::MissingTopSimplex(n));
        }
        let mut seen = vec![false; vertices.len()];
        for s in &indexed {
            for &v in s {
                seen[v as usize] = true;
            }
        }
        if let Some(i) = seen.iter().position(|&b| !b) {
            return Err(SpaceError::IsolatedVertex(vertices[i].clone()));
        }
        Ok(SimplicialComplex { n, vertices, vertex_index, simplices: indexed, simplex_set })
    }

    /// Build from maximal simplices, taking the face closure automatically.
    pub fn from_maximal(
        n: usize,
        vertices: Vec<String>,
        maximal: Vec<Vec<String>>,
    ) -> Result<Self, SpaceError> {
        let mut all: BTreeSet<Vec<String>> = BTreeSet::new();
        for s in &maximal {
            let mut sorted = s.clone();
            sorted.sort();
            let k = sorted.len();
            for mask in 1u32..(1 << k) {
                let face: Vec<String> = (0..k)
                    .filter(|&i| mask & (1 << i) != 0)
                    .map(|i| sorted[i].clone())
                    .collect();
                all.insert(face);
            }
        }
        SimplicialComplex::new(n, vertices, all.into_iter().collect())
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_index(&self, v: &str) -> Option<u32> {
        self.vertex_index.get(v).copied()
    }

    pub fn vertex_name(&self, i: u32) -> &str {
        &self.vertices[i as usize]
    }

    /// All faces in canonical order, as sorted vertex-index vectors.
    pub fn simplices(&self) -> &[Vec<u32>] {
        &self.simplices
    }

    /// All faces as vertex-id lists, in canonical order.
    pub fn simplices_named(&self) -> Vec<Vec<String>> {
        self.simplices
            .iter()
            .map(|s| s.iter().map(|&i| self.vertices[i as usize].clone()).collect())
            .collect()
    }

    pub fn contains_simplex(&self, sorted_indices: &[u32]) -> bool {
        self.simplex_set.contains(sorted_indices)
    }

    /// Maximal simplices (not a proper face of any other simplex).
    pub fn maximal_simplices(&self) -> Vec<Vec<u32>> {
        self.simplices
            .iter()
            .filter(|s| {
                !self.simplices.iter().any(|t| {
                    t.len() > s.len() && s.iter().all(|v| t.binary_search(v).is_ok())
                })
            })
            .cloned()
            .collect()
    }
}

/// Injective map from vertices to reference coordinates in `R^m`.
#[derive(Debug, Clone)]
pub struct ReferenceCoords {
    dim: usize,
    coords: BTreeMap<String, Vec<f64>>,
}

impl ReferenceCoords {
    pub fn new(coords: BTreeMap<String, Vec<f64>>) -> Result<Self, SpaceError> {
        let mut dim = None;
        for v in coords.values() {
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => return Err(SpaceError::CoordsMixedDim),
                _ => {}
            }
        }
        Ok(ReferenceCoords { dim: dim.unwrap_or(0), coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, v: &str) -> Option<&[f64]> {
        self.coords.get(v).map(|c| c.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<f64>)> {
        self.coords.iter()
    }
}

/// Sup-norm distance between two coordinate vectors.
pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// One sample point of a geometric realization: a face of the complex plus
/// exact barycentric coordinates (all strictly positive, summing to one).
#[derive(Debug, Clone)]
pub struct Sample {
    id: String,
    support: Vec<u32>,
    bary: Vec<Q>,
    position: Vec<f64>,
}

impl Sample {
    pub(crate) fn from_parts(id: String, support: Vec<u32>, bary: Vec<Q>, position: Vec<f64>) -> Self {
        Sample { id, support, bary, position }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Sorted vertex indices of the carrier face.
    pub fn support(&self) -> &[u32] {
        &self.support
    }

    /// Exact barycentric coordinates aligned with [`Self::support`].
    pub fn barycentric(&self) -> &[Q] {
        &self.bary
    }

    /// Reference-coordinate position of the sample.
    pub fn position(&self) -> &[f64] {
        &self.position
    }
}

/// A finite sample of the geometric realization of a complex.
#[derive(Debug, Clone)]
pub struct SampleSet {
    complex: Arc<SimplicialComplex>,
    samples: Vec<Sample>,
    index: HashMap<String, usize>,
    mesh: f64,
}

impl SampleSet {
    pub fn complex(&self) -> &SimplicialComplex {
        &self.complex
    }

    pub fn complex_arc(&self) -> Arc<SimplicialComplex> {
        Arc::clone(&self.complex)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.index.get(id).map(|&i| &self.samples[i])
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.samples.iter().map(|s| s.id())
    }

    pub fn id_set(&self) -> IdSet {
        self.samples.iter().map(|s| s.id().to_string()).collect()
    }

    /// Declared covering radius: every point of every simplex lies within
    /// this distance of some sample.
    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    /// The sample id at a given vertex, if one exists.
    pub fn sample_at_vertex(&self, vertex: &str) -> Option<&Sample> {
        let vi = self.complex.vertex_index(vertex)?;
        self.samples.iter().find(|s| s.support == [vi])
    }

    /// Reassemble a sample set from stored parts, re-validating invariants.
    pub(crate) fn from_parts(
        complex: Arc<SimplicialComplex>,
        samples: Vec<Sample>,
        mesh: f64,
    ) -> Result<Self, SpaceError> {
        for s in &samples {
            let sum: Q = s.bary.iter().sum();
            if s.bary.iter().any(|b| !b.is_positive()) || sum != q_one() {
                return Err(SpaceError::InvalidBarycentric(
                    s.id.clone(),
                    "support coordinates must be positive and sum to one".into(),
                ));
            }
            let mut sorted = s.support.clone();
            sorted.sort_unstable();
            if sorted != s.support || !complex.contains_simplex(&sorted) {
                return Err(SpaceError::NotFaceClosed(
                    s.support.iter().map(|&i| complex.vertex_name(i).to_string()).collect(),
                ));
            }
        }
        for s in complex.simplices() {
            let hit = samples
                .iter()
                .any(|smp| smp.support.iter().all(|v| s.binary_search(v).is_ok()));
            if !hit {
                let named = s.iter().map(|&i| complex.vertex_name(i).to_string()).collect();
                return Err(SpaceError::UnsampledSimplex(named));
            }
        }
        let index = samples.iter().enumerate().map(|(i, s)| (s.id.clone(), i)).collect();
        Ok(SampleSet { complex, samples, index, mesh })
    }

    /// Build a sample set from explicit (simplex, barycentric) pairs.
    ///
    /// Barycentric vectors are given over the listed simplex's sorted vertex
    /// order; they are normalized to exact rationals summing to one. Samples
    /// that describe the same geometric point (same support face and reduced
    /// coordinates) are merged. Every simplex of the complex must contain at
    /// least one sample.
    pub fn from_explicit(
        complex: Arc<SimplicialComplex>,
        coords: &ReferenceCoords,
        points: Vec<(Vec<String>, Vec<f64>)>,
        declared_mesh: f64,
    ) -> Result<Self, SpaceError> {
        let mut builder = SampleBuilder::new(Arc::clone(&complex), coords)?;
        for (simplex, bary) in points {
            let mut ix: Vec<u32> = Vec::new();
            for v in &simplex {
                ix.push(
                    complex.vertex_index(v).ok_or_else(|| SpaceError::UnknownVertex(v.clone()))?,
                );
            }
            let order: Vec<usize> = {
                let mut idx: Vec<usize> = (0..ix.len()).collect();
                idx.sort_by_key(|&i| ix[i]);
                idx
            };
            let sorted_ix: Vec<u32> = order.iter().map(|&i| ix[i]).collect();
            if !complex.contains_simplex(&sorted_ix) {
                let named = simplex.clone();
                return Err(SpaceError::NotFaceClosed(named));
            }
            if bary.len() != ix.len() {
                return Err(SpaceError::InvalidBarycentric(
                    format!("{simplex:?}"),
                    "length mismatch".into(),
                ));
            }
            let sum: f64 = bary.iter().sum();
            if bary.iter().any(|&b| b < -BARY_TOL) || (sum - 1.0).abs() > BARY_TOL {
                return Err(SpaceError::InvalidBarycentric(
                    format!("{simplex:?}"),
                    format!("nonnegative coordinates summing to 1 required, sum = {sum}"),
                ));
            }
            let sorted_bary: Vec<Q> = order
                .iter()
                .map(|&i| q_from_f64(bary[i].max(0.0)))
                .collect();
            let total: Q = sorted_bary.iter().sum();
            let normalized: Vec<Q> = sorted_bary.iter().map(|b| b / &total).collect();
            builder.push(&sorted_ix, &normalized);
        }
        builder.finish(declared_mesh)
    }
}

/// Accumulates samples with geometric deduplication.
struct SampleBuilder<'a> {
    complex: Arc<SimplicialComplex>,
    coords: &'a ReferenceCoords,
    samples: Vec<Sample>,
    seen: HashMap<(Vec<u32>, Vec<Q>), usize>,
}

impl<'a> SampleBuilder<'a> {
    fn new(complex: Arc<SimplicialComplex>, coords: &'a ReferenceCoords) -> Result<Self, SpaceError> {
        for v in complex.vertices() {
            if coords.get(v).is_none() {
                return Err(SpaceError::CoordsMissing(v.clone()));
            }
        }
        Ok(SampleBuilder { complex, coords, samples: Vec::new(), seen: HashMap::new() })
    }

    /// Add the point with barycentric coordinates `bary` over the sorted
    /// simplex `simplex`; returns its (possibly pre-existing) sample index.
    fn push(&mut self, simplex: &[u32], bary: &[Q]) -> usize {
        let mut support: Vec<u32> = Vec::new();
        let mut support_bary: Vec<Q> = Vec::new();
        for (v, b) in simplex.iter().zip(bary) {
            if !b.is_zero() {
                support.push(*v);
                support_bary.push(b.clone());
            }
        }
        let key = (support.clone(), support_bary.clone());
        if let Some(&i) = self.seen.get(&key) {
            return i;
        }
        let dim = self.coords.dim();
        let mut position = vec![0.0; dim];
        for (v, b) in support.iter().zip(&support_bary) {
            let c = self.coords.get(self.complex.vertex_name(*v)).unwrap();
            let w = q_to_f64(b);
            for (p, x) in position.iter_mut().zip(c) {
                *p += w * x;
            }
        }
        let idx = self.samples.len();
        let id = format!("s{idx}");
        self.samples.push(Sample { id, support, bary: support_bary, position });
        self.seen.insert(key, idx);
        idx
    }

    fn finish(self, mesh: f64) -> Result<SampleSet, SpaceError> {
        // every simplex must carry at least one sample (a sample lies in a
        // simplex when its support face is contained in it)
        for s in self.complex.simplices() {
            let hit = self.samples.iter().any(|smp| {
                smp.support.iter().all(|v| s.binary_search(v).is_ok())
            });
            if !hit {
                let named = s.iter().map(|&i| self.complex.vertex_name(i).to_string()).collect();
                return Err(SpaceError::UnsampledSimplex(named));
            }
        }
        let index = self.samples.iter().enumerate().map(|(i, s)| (s.id.clone(), i)).collect();
        Ok(SampleSet { complex: self.complex, samples: self.samples, index, mesh })
    }
}

/// Sample the geometric realization of `complex` on barycentric grids fine
/// enough that every point of every simplex lies within `mesh` of a sample,
/// and return the samples together with the induced sup-norm metric space.
///
/// The grid resolution is global (shared by all simplices) so samples on
/// shared faces coincide exactly; enumeration order is lexicographic by
/// simplex and then by grid coordinates, making sample ids deterministic.
pub fn realize_metric(
    complex: &SimplicialComplex,
    coords: &ReferenceCoords,
    mesh: f64,
) -> Result<(SampleSet, FiniteMetricSpace), SpaceError> {
    if !(mesh > 0.0) {
        return Err(SpaceError::NonpositiveMesh(mesh));
    }
    let verts = complex.vertices();
    for (i, a) in verts.iter().enumerate() {
        let ca = coords.get(a).ok_or_else(|| SpaceError::CoordsMissing(a.clone()))?;
        for b in &verts[i + 1..] {
            let cb = coords.get(b).ok_or_else(|| SpaceError::CoordsMissing(b.clone()))?;
            if sup_distance(ca, cb) == 0.0 {
                return Err(SpaceError::CoordsNotInjective(a.clone(), b.clone()));
            }
        }
    }

    // one global resolution keeps shared-face grids identical
    let mut resolution: u64 = 1;
    for s in complex.simplices() {
        let k = s.len() - 1;
        if k == 0 {
            continue;
        }
        let mut diam: f64 = 0.0;
        for (i, &a) in s.iter().enumerate() {
            for &b in &s[i + 1..] {
                diam = diam.max(sup_distance(
                    coords.get(complex.vertex_name(a)).unwrap(),
                    coords.get(complex.vertex_name(b)).unwrap(),
                ));
            }
        }
        let need = ((k as f64) * diam / mesh).ceil() as u64;
        resolution = resolution.max(need.max(1));
    }

    let arc = Arc::new(complex.clone());
    let mut builder = SampleBuilder::new(Arc::clone(&arc), coords)?;
    let r = resolution;
    for s in complex.simplices() {
        for numerators in compositions(r, s.len()) {
            let bary: Vec<Q> = numerators
                .iter()
                .map(|&a| Q::new(a.into(), r.into()))
                .collect();
            builder.push(s, &bary);
        }
    }
    let sample_set = builder.finish(mesh)?;

    let ids: Vec<String> = sample_set.samples.iter().map(|s| s.id.clone()).collect();
    let dist: Vec<Vec<f64>> = sample_set
        .samples
        .iter()
        .map(|a| {
            sample_set
                .samples
                .iter()
                .map(|b| if a.id == b.id { 0.0 } else { sup_distance(&a.position, &b.position) })
                .collect()
        })
        .collect();
    let space = FiniteMetricSpace::new(ids, dist)?;
    Ok((sample_set, space))
}

/// All vectors of `parts` nonnegative integers summing to `total`, in
/// lexicographic order.
fn compositions(total: u64, parts: usize) -> Vec<Vec<u64>> {
    fn rec(total: u64, parts: usize, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in 0..=total {
            prefix.push(a);
            rec(total - a, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::new(), &mut out);
    out
}

/// Largest distance from any probe point to its nearest sample, where probe
/// points are drawn from barycentric grids `factor` times finer than the
/// sample grids. Used to check the covering-radius postcondition of
/// [`realize_metric`].
pub fn covering_radius(
    samples: &SampleSet,
    coords: &ReferenceCoords,
    factor: u64,
) -> f64 {
    let complex = samples.complex();
    let mut base: u64 = 1;
    for s in samples.samples() {
        for b in s.barycentric() {
            let den = b.denom();
            if let Some(d) = u64::try_from(den.clone()).ok() {
                base = num_integer::lcm(base, d);
            }
        }
    }
    let probe_res = base.saturating_mul(factor).min(512);
    let mut worst: f64 = 0.0;
    for s in complex.simplices() {
        let verts: Vec<&[f64]> =
            s.iter().map(|&v| coords.get(complex.vertex_name(v)).unwrap()).collect();
        let members: Vec<&Sample> = samples
            .samples()
            .iter()
            .filter(|smp| smp.support().iter().all(|v| s.binary_search(v).is_ok()))
            .collect();
        for numerators in compositions(probe_res, s.len()) {
            let mut p = vec![0.0; coords.dim()];
            for (w, c) in numerators.iter().zip(&verts) {
                let t = *w as f64 / probe_res as f64;
                for (pi, ci) in p.iter_mut().zip(*c) {
                    *pi += t * ci;
                }
            }
            let nearest = members
                .iter()
                .map(|m| sup_distance(&p, m.position()))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest);
        }
    }
    worst
}

/// Nested stages `C_1 <= C_2 <= ... <= C_K` whose union is the ground set.
#[derive(Debug, Clone)]
pub struct Exhaustion {
    stages: Vec<IdSet>,
}

impl Exhaustion {
    pub fn new(stages: Vec<IdSet>) -> Result<Self, SpaceError> {
        if stages.is_empty() {
            return Err(SpaceError::NoStages);
        }
        if stages[0].is_empty() {
            return Err(SpaceError::EmptySpace);
        }
        for i in 1..stages.len() {
            if !stages[i - 1].is_subset(&stages[i]) {
                return Err(SpaceError::StagesNotNested(i));
            }
        }
        Ok(Exhaustion { stages })
    }

    pub fn stages(&self) -> &[IdSet] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Ground set = final stage (stages are nested).
    pub fn ground(&self) -> &IdSet {
        self.stages.last().unwrap()
    }

    /// Stage for 1-based index `k`, clamped to the final stage.
    pub fn stage_clamped(&self, k: usize) -> &IdSet {
        let i = k.saturating_sub(1).min(self.stages.len() - 1);
        &self.stages[i]
    }
}

/// Exhaust a space by `batch_count` nested prefixes of its id order.
///
/// Stage `k` holds the first `ceil(len * k / batch_count)` ids; the final
/// stage is the whole space. Deterministic given the space's id ordering.
pub fn build_exhaustion(
    space: &FiniteMetricSpace,
    batch_count: usize,
) -> Result<Exhaustion, SpaceError> {
    if batch_count < 1 {
        return Err(SpaceError::InvalidBatchCount);
    }
    if space.is_empty() {
        return Err(SpaceError::EmptySpace);
    }
    let n = space.len();
    let mut stages = Vec::with_capacity(batch_count);
    for k in 1..=batch_count {
        let take = (n * k).div_ceil(batch_count);
        stages.push(space.ids()[..take].iter().cloned().collect());
    }
    Exhaustion::new(stages)
}

/// Convenience: exact rational one.
pub(crate) fn q_one() -> BigRational {
    BigRational::one()
}
