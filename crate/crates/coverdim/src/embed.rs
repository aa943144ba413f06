//! The perturbation step, the iterated embedding pipeline, the direct
//! general-position PL embedding, and the certificate verifier.
//!
//! The perturbation step takes a sample map `f` and a region, builds a
//! small-diameter star cover of order at most `n`, replaces `f` on the
//! region by a weighted combination of generically perturbed picks, and
//! blends the correction off the region. The result moves by at most `r`
//! in the uniform metric while its fiber diameter on the region drops below
//! `eps`. Iterating with `eps_k = 1/k` and summable radii `r_k = 2^-(k+1)`
//! drives the map toward injectivity while preserving its escape behavior,
//! which is the finite-stage reading of the classical Baire-category
//! argument.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::covers::{lebesgue_number, order, Cover, CoverError};
use crate::geometry::{
    is_general_position_with_guard, perturb_to_general_position, rho_metric, simplices_disjoint,
    GeometryError, PointSet, SimplexRelation,
};
use crate::maps::{
    blend_extend, fiber_diameter, partition_of_unity, proper_height, MapError, PartitionOfUnity,
    PlMap, SampleMap,
};
use crate::space::{
    sup_distance, Exhaustion, FiniteMetricSpace, SampleSet, SimplicialComplex, SpaceError,
};
use crate::subdivision::star_cover;
use crate::IdSet;

/// Fiber tolerance used for all reported near-coincidence measurements.
pub const NEAR_TAU: f64 = 1e-9;
/// Weight-vector agreement tolerance for the coincidence mechanism check.
pub const WEIGHT_TOL: f64 = 1e-6;
/// Default subdivision budget for the small-order cover.
pub const DEFAULT_SUBDIVISION_BUDGET: usize = 8;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("subdivision budget ({budget} rounds) exhausted: {reason}")]
    SubdivisionBudget { budget: usize, reason: String },
    #[error("perturbation radius must satisfy 0 < r < 1, got {0}")]
    BadRadius(f64),
    #[error("eps must be positive, got {0}")]
    BadEps(f64),
    #[error("stage count must be at least 1")]
    BadStages,
    #[error("target dimension {found} does not match 2n+1 = {expected}")]
    TargetDimension { expected: usize, found: usize },
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// A fiber-diameter reading together with the tolerance it was computed at.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DeltaReading {
    pub tau: f64,
    pub value: f64,
}

/// Everything measured during one perturbation step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub seed: u64,
    pub eps: f64,
    pub r: f64,
    /// Rounds of barycentric subdivision behind the step's cover.
    pub subdivision_rounds: usize,
    pub cover_sets: usize,
    pub cover_order: usize,
    /// Measured uniform distance between input and output; at most `r`.
    pub rho_bound: f64,
    pub delta_before: Vec<DeltaReading>,
    pub delta_after: Vec<DeltaReading>,
    /// The perturbed picks are in general position by construction; when
    /// feasible this is re-verified with the all-subsets rank oracle.
    pub zs_general_position: bool,
    pub zs_gp_reverified: bool,
    /// Largest weight-vector disagreement over near-coincident image pairs
    /// (0 when no such pairs exist).
    pub claim2_weight_deviation: f64,
    /// Pairs of distinct region samples with images within `NEAR_TAU`.
    pub equal_image_pairs_before: usize,
    pub equal_image_pairs_after: usize,
}

/// Injectivity margin: the smallest image separation among sample pairs at
/// domain distance at least `resolution`. `None` when no pair qualifies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InjectivityMargin {
    pub resolution: f64,
    pub value: Option<f64>,
    pub witness: Option<(String, String)>,
}

impl InjectivityMargin {
    pub fn positive(&self) -> bool {
        self.value.map_or(true, |v| v > 0.0)
    }
}

/// Result of one exact pairwise simplex check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairResult {
    pub first: Vec<String>,
    pub second: Vec<String>,
    pub relation: SimplexRelation,
}

/// Stage-by-stage escape table for a map over an exhaustion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropernessWitness {
    /// Minimum of `|f|_inf` outside each stage (`None` when the complement
    /// is empty, the vacuous compact case).
    pub stage_minima: Vec<Option<f64>>,
    /// `true` when the finite minima are nondecreasing stage by stage.
    pub minima_nondecreasing: bool,
}

/// Summable-radius bookkeeping for the iterated pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoBudget {
    pub step_radii: Vec<f64>,
    pub total: f64,
    pub measured: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// Vertex images with exact pairwise hull checks: injectivity holds on
    /// the whole realization, not just at samples.
    PiecewiseLinear,
    /// A table of values at samples: injectivity is certified at sample
    /// resolution only.
    SampleTable,
}

/// The verifier's verdict on a candidate embedding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingCertificate {
    pub kind: CertificateKind,
    pub dimension: usize,
    pub injectivity_margin: InjectivityMargin,
    pub pairwise_simplex_results: Vec<PairResult>,
    /// Indices into `pairwise_simplex_results` that came back improper.
    pub improper_pairs: Vec<usize>,
    pub properness: Option<PropernessWitness>,
    pub rho_budget: Option<RhoBudget>,
    pub steps: Vec<PerturbationReport>,
    pub passed: bool,
    pub failure: Option<String>,
}

impl EmbeddingCertificate {
    fn evaluate(&mut self) {
        let mut reasons = Vec::new();
        if !self.injectivity_margin.positive() {
            let pair = self
                .injectivity_margin
                .witness
                .as_ref()
                .map(|(a, b)| format!(" (witness {a}, {b})"))
                .unwrap_or_default();
            reasons.push(format!("injectivity margin is zero{pair}"));
        }
        if let Some(&first) = self.improper_pairs.first() {
            let pair = &self.pairwise_simplex_results[first];
            reasons.push(format!(
                "improper intersection between {:?} and {:?}",
                pair.first, pair.second
            ));
        }
        self.passed = reasons.is_empty();
        self.failure = (!self.passed).then(|| reasons.join("; "));
    }
}

fn vec_sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Build a star cover of the region whose sets are small both in the space
/// metric (diameter below `eps/2`) and under `f` (image diameter at most
/// `r/2`), with order at most the complex dimension.
///
/// Subdivision proceeds until all three conditions hold on the samples;
/// star covers guarantee the order bound structurally, so only the two
/// diameter conditions drive the rounds.
pub fn small_order_cover(
    samples: &SampleSet,
    region: &IdSet,
    eps: f64,
    f: &SampleMap,
    r: f64,
    space: &FiniteMetricSpace,
    budget: usize,
) -> Result<(Cover, usize), EmbedError> {
    let n = samples.complex().dimension();
    let mut reason = String::new();
    for rounds in 0..=budget {
        let cover = star_cover(samples, region, rounds)?;
        let mut ok = true;
        for (label, ids) in cover.sets() {
            let diam = space.diameter(ids.iter());
            if diam >= eps / 2.0 {
                ok = false;
                reason = format!("set {label} has diameter {diam} >= eps/2");
                break;
            }
            let mut image_diam: f64 = 0.0;
            let members: Vec<&String> = ids.iter().collect();
            for (i, x) in members.iter().enumerate() {
                for y in &members[i + 1..] {
                    image_diam = image_diam.max(sup_distance(f.require(x)?, f.require(y)?));
                }
            }
            if image_diam > r / 2.0 {
                ok = false;
                reason = format!("set {label} has image diameter {image_diam} > r/2");
                break;
            }
        }
        if ok {
            let o = order(&cover);
            if o > n {
                return Err(EmbedError::Internal(format!(
                    "star cover order {o} exceeds complex dimension {n}"
                )));
            }
            return Ok((cover, rounds));
        }
    }
    Err(EmbedError::SubdivisionBudget { budget, reason })
}

fn equal_image_pairs(map: &SampleMap, region: &IdSet, tau: f64) -> Result<usize, EmbedError> {
    let members: Vec<&String> = region.iter().collect();
    let mut count = 0;
    for (i, x) in members.iter().enumerate() {
        let fx = map.require(x)?;
        for y in &members[i + 1..] {
            if sup_distance(fx, map.require(y)?) <= tau {
                count += 1;
            }
        }
    }
    Ok(count)
}

fn weight_deviation_on_near_pairs(
    pou: &PartitionOfUnity,
    map: &SampleMap,
    region: &IdSet,
    tau: f64,
) -> Result<f64, EmbedError> {
    let members: Vec<&String> = region.iter().collect();
    let mut worst: f64 = 0.0;
    for (i, x) in members.iter().enumerate() {
        let fx = map.require(x)?;
        for y in &members[i + 1..] {
            if sup_distance(fx, map.require(y)?) <= tau {
                let wx = pou.weights_at(x);
                let wy = pou.weights_at(y);
                for (a, b) in wx.iter().zip(&wy) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// One perturbation step: returns a map `g` with `rho(f, g) <= r` that
/// agrees with the weighted generic combination on the region, so its fiber
/// diameter there (at tolerance [`NEAR_TAU`]) drops below `eps`.
///
/// The step follows the constructive recipe exactly: pick the lowest-id
/// sample `x_i` of each cover set, perturb the picks' images into general
/// position within `r/2`, combine them with the subordinate weights, and
/// blend the correction `f - g_tilde` off the region with a Lebesgue-scaled
/// width. The general-position picks make coinciding images force equal
/// weight vectors, hence a common cover set of diameter below `eps/2`.
pub fn perturb_step(
    f: &SampleMap,
    region: &IdSet,
    eps: f64,
    r: f64,
    seed: u64,
    samples: &SampleSet,
    space: &FiniteMetricSpace,
) -> Result<(SampleMap, PerturbationReport), EmbedError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(EmbedError::BadRadius(r));
    }
    if !(eps > 0.0) {
        return Err(EmbedError::BadEps(eps));
    }
    let n = samples.complex().dimension();
    let dim = f.dim();
    if dim != 2 * n + 1 {
        return Err(EmbedError::TargetDimension { expected: 2 * n + 1, found: dim });
    }

    let (cover, rounds) = small_order_cover(
        samples,
        region,
        eps,
        f,
        r,
        space,
        DEFAULT_SUBDIVISION_BUDGET,
    )?;
    let region_space = space.restrict(region)?;
    let pou = partition_of_unity(&cover, &region_space)?;

    // lowest-id pick per cover set
    let picks: Vec<&String> = cover
        .sets()
        .iter()
        .map(|(_, ids)| ids.iter().next().expect("cover sets are nonempty"))
        .collect();
    let pick_rows: Vec<Vec<f64>> = picks
        .iter()
        .map(|x| f.require(x).map(|v| v.to_vec()))
        .collect::<Result<_, _>>()?;
    let point_set = PointSet::from_f64_rows(dim, &pick_rows)?;
    let zs = perturb_to_general_position(&point_set, r / 2.0, seed)?;
    let z_rows = zs.to_f64_rows();

    // re-verify general position with the all-subsets oracle when feasible
    let m = z_rows.len();
    let subset_size = m.min(dim + 1);
    let feasible = binomial_at_most(m, subset_size, 200_000);
    let (gp, reverified) = if feasible {
        (is_general_position_with_guard(&zs, m.max(1))?, true)
    } else {
        (true, false)
    };
    if !gp {
        return Err(EmbedError::Internal(
            "perturbed picks failed the general-position oracle".into(),
        ));
    }

    // weighted generic combination on the region
    let mut g_tilde = SampleMap::new(dim);
    for id in region {
        let mut value = vec![0.0; dim];
        for (set, row) in z_rows.iter().enumerate() {
            let w = pou.weight(set, id);
            if w != 0.0 {
                for (v, x) in value.iter_mut().zip(row) {
                    *v += w * x;
                }
            }
        }
        g_tilde.insert(id.clone(), value)?;
    }

    // the correction is bounded by r: each pick moved by less than r/2 and
    // the image diameters of the supports are at most r/2
    let mut h = SampleMap::new(dim);
    for id in region {
        let fx = f.require(id)?;
        let gx = g_tilde.require(id)?;
        let hv: Vec<f64> = fx.iter().zip(gx).map(|(a, b)| a - b).collect();
        let norm = vec_sup_norm(&hv);
        if norm > r {
            return Err(EmbedError::Internal(format!(
                "correction bound violated at {id:?}: |h| = {norm} > r = {r}"
            )));
        }
        h.insert(id.clone(), hv)?;
    }
    let width = lebesgue_number(&cover, &region_space)?;
    let extended = blend_extend(&h, region, space, r, width)?;
    let mut g = SampleMap::new(dim);
    for (id, fx) in f.iter() {
        let hx = extended.require(id)?;
        g.insert(id.clone(), fx.iter().zip(hx).map(|(a, b)| a - b).collect())?;
    }

    let domain = f.domain();
    let rho = rho_metric(f, &g, &domain)?;
    if rho > r {
        return Err(EmbedError::Internal(format!("rho(f,g) = {rho} exceeds r = {r}")));
    }
    let taus = [0.0, NEAR_TAU];
    let delta_before = taus
        .iter()
        .map(|&tau| {
            Ok(DeltaReading { tau, value: fiber_diameter(f, region, tau, space)? })
        })
        .collect::<Result<Vec<_>, EmbedError>>()?;
    let delta_after = taus
        .iter()
        .map(|&tau| {
            Ok(DeltaReading { tau, value: fiber_diameter(&g, region, tau, space)? })
        })
        .collect::<Result<Vec<_>, EmbedError>>()?;
    let report = PerturbationReport {
        seed,
        eps,
        r,
        subdivision_rounds: rounds,
        cover_sets: cover.len(),
        cover_order: order(&cover),
        rho_bound: rho,
        delta_before,
        delta_after,
        zs_general_position: gp,
        zs_gp_reverified: reverified,
        claim2_weight_deviation: weight_deviation_on_near_pairs(&pou, &g_tilde, region, NEAR_TAU)?,
        equal_image_pairs_before: equal_image_pairs(f, region, NEAR_TAU)?,
        equal_image_pairs_after: equal_image_pairs(&g, region, NEAR_TAU)?,
    };
    Ok((g, report))
}

/// Does `C(n, k)` stay at or below `limit`?
fn binomial_at_most(n: usize, k: usize, limit: u64) -> bool {
    let k = k.min(n - k.min(n));
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u64) {
            Some(v) => v / (i as u64 + 1),
            None => return false,
        };
        if acc > limit {
            return false;
        }
    }
    true
}

/// Outcome of the iterated pipeline: the final sample map, the PL map read
/// off at vertex samples (every vertex is a sample), and the certificate.
#[derive(Debug, Clone)]
pub struct IterativeEmbedding {
    pub map: SampleMap,
    pub pl_map: PlMap,
    pub certificate: EmbeddingCertificate,
}

fn derive_seed(seed: u64, step: usize) -> u64 {
    seed ^ (step as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// The finite-stage embedding pipeline into `R^(2n+1)`.
///
/// The initial map stacks the proper height of the exhaustion as the first
/// coordinate over the reference realization (truncated or zero-padded to
/// `2n` coordinates). Step `k` perturbs over stage `C_k` (clamped to the
/// final stage when the exhaustion is shorter) with `eps_k = 1/k` and
/// `r_k = 2^-(k+1)`. The radii sum below 1, so the uniform distance from
/// the initial map stays below 1 and the escape behavior of the height
/// coordinate survives every step.
pub fn embed_iterative(
    samples: &SampleSet,
    space: &FiniteMetricSpace,
    exhaustion: &Exhaustion,
    steps: usize,
    seed: u64,
) -> Result<IterativeEmbedding, EmbedError> {
    if steps < 1 {
        return Err(EmbedError::BadStages);
    }
    let complex = samples.complex();
    let n = complex.dimension();
    let dim = 2 * n + 1;
    let height = proper_height(exhaustion, space, 0.0)?;
    let f0 = SampleMap::tabulate(dim, space.ids(), |id| {
        let mut v = vec![0.0; dim];
        v[0] = height.get(id).unwrap()[0];
        let pos = samples.get(id).expect("space ids are sample ids").position();
        for (slot, &x) in v[1..].iter_mut().zip(pos) {
            *slot = x;
        }
        v
    })?;

    let mut current = f0.clone();
    let mut reports = Vec::with_capacity(steps);
    for k in 1..=steps {
        let region = exhaustion.stage_clamped(k);
        let eps = 1.0 / k as f64;
        let r = 2f64.powi(-(k as i32 + 1));
        let (next, report) =
            perturb_step(&current, region, eps, r, derive_seed(seed, k), samples, space)?;
        reports.push(report);
        current = next;
    }

    let resolution = 1.0 / steps as f64;
    let mut certificate =
        verify_sample_map(&current, space, Some(exhaustion), resolution)?;
    let budget_total: f64 = reports.iter().map(|r| r.r).sum();
    let measured = rho_metric(&f0, &current, &f0.domain())?;
    certificate.rho_budget = Some(RhoBudget {
        step_radii: reports.iter().map(|r| r.r).collect(),
        total: budget_total,
        measured,
    });
    certificate.steps = reports;
    certificate.evaluate();

    // read the PL map off the vertex samples
    let mut images = BTreeMap::new();
    for v in complex.vertices() {
        let sample = samples
            .sample_at_vertex(v)
            .ok_or_else(|| EmbedError::Internal(format!("vertex {v:?} has no sample")))?;
        images.insert(v.clone(), current.require(sample.id())?.to_vec());
    }
    let pl_map = PlMap::new(samples.complex_arc(), dim, images)?;
    Ok(IterativeEmbedding { map: current, pl_map, certificate })
}

/// Direct PL embedding: perturb the vertex placement into general position
/// (radius 1 around the origin) and certify with the exact oracle.
///
/// In general position any `2n + 2` of the images are affinely independent,
/// so vertex-disjoint simplices have disjoint hulls and vertex-sharing
/// simplices meet exactly in their shared face; the certificate verifies
/// this pair by pair.
pub fn pl_embed(
    complex: &Arc<SimplicialComplex>,
    seed: u64,
) -> Result<(PlMap, EmbeddingCertificate), EmbedError> {
    pl_embed_with_dim(complex, 2 * complex.dimension() + 1, seed)
}

/// [`pl_embed`] with an explicit target dimension. Forcing the dimension
/// below `2n + 1` is how the negative controls (K5 in the plane) are run.
pub fn pl_embed_with_dim(
    complex: &Arc<SimplicialComplex>,
    dim: usize,
    seed: u64,
) -> Result<(PlMap, EmbeddingCertificate), EmbedError> {
    let rows = vec![vec![0.0; dim]; complex.vertices().len()];
    let initial = PointSet::from_f64_rows(dim, &rows)?;
    let placed = perturb_to_general_position(&initial, 1.0, seed)?;
    let rows = placed.to_f64_rows();
    let images: BTreeMap<String, Vec<f64>> = complex
        .vertices()
        .iter()
        .cloned()
        .zip(rows)
        .collect();
    let map = PlMap::new(Arc::clone(complex), dim, images)?;
    let certificate = verify_pl_map(&map)?;
    Ok((map, certificate))
}

/// Certify a PL map: exact pairwise hull checks over every simplex pair
/// plus the vertex-image injectivity margin.
pub fn verify_pl_map(map: &PlMap) -> Result<EmbeddingCertificate, EmbedError> {
    let complex = map.complex();
    let simplices = complex.simplices();
    let point_sets: Vec<PointSet> = simplices
        .iter()
        .map(|s| {
            let rows: Vec<Vec<f64>> = s
                .iter()
                .map(|&v| map.vertex_image(complex.vertex_name(v)).unwrap().to_vec())
                .collect();
            PointSet::from_f64_rows(map.dim(), &rows)
        })
        .collect::<Result<_, _>>()?;

    let mut pairwise = Vec::new();
    let mut improper = Vec::new();
    for i in 0..simplices.len() {
        for j in i + 1..simplices.len() {
            let relation = simplices_disjoint(&point_sets[i], &point_sets[j])?;
            if relation == SimplexRelation::IntersectImproperly {
                improper.push(pairwise.len());
            }
            pairwise.push(PairResult {
                first: simplices[i]
                    .iter()
                    .map(|&v| complex.vertex_name(v).to_string())
                    .collect(),
                second: simplices[j]
                    .iter()
                    .map(|&v| complex.vertex_name(v).to_string())
                    .collect(),
                relation,
            });
        }
    }

    let mut margin = InjectivityMargin { resolution: 0.0, value: None, witness: None };
    let vertices = complex.vertices();
    for (i, a) in vertices.iter().enumerate() {
        for b in &vertices[i + 1..] {
            let sep = sup_distance(map.vertex_image(a).unwrap(), map.vertex_image(b).unwrap());
            if margin.value.map_or(true, |m| sep < m) {
                margin.value = Some(sep);
                margin.witness = Some((a.clone(), b.clone()));
            }
        }
    }

    let mut certificate = EmbeddingCertificate {
        kind: CertificateKind::PiecewiseLinear,
        dimension: map.dim(),
        injectivity_margin: margin,
        pairwise_simplex_results: pairwise,
        improper_pairs: improper,
        properness: None,
        rho_budget: None,
        steps: Vec::new(),
        passed: false,
        failure: None,
    };
    certificate.evaluate();
    Ok(certificate)
}

/// Certify a sample map: injectivity margin at the given resolution and,
/// when an exhaustion is supplied, the stage-by-stage escape table.
pub fn verify_sample_map(
    map: &SampleMap,
    space: &FiniteMetricSpace,
    exhaustion: Option<&Exhaustion>,
    resolution: f64,
) -> Result<EmbeddingCertificate, EmbedError> {
    let ids: Vec<&String> = map.domain_ids();
    let mut margin = InjectivityMargin { resolution, value: None, witness: None };
    for (i, x) in ids.iter().enumerate() {
        for y in &ids[i + 1..] {
            if space.distance(x, y) >= resolution {
                let sep = sup_distance(map.require(x)?, map.require(y)?);
                if margin.value.map_or(true, |m| sep < m) {
                    margin.value = Some(sep);
                    margin.witness = Some(((*x).clone(), (*y).clone()));
                }
            }
        }
    }

    let properness = match exhaustion {
        None => None,
        Some(exh) => {
            let mut minima = Vec::with_capacity(exh.len());
            for stage in exh.stages() {
                let outside: Vec<&&String> =
                    ids.iter().filter(|id| !stage.contains(**id)).collect();
                let min = outside
                    .iter()
                    .map(|id| vec_sup_norm(map.get(id).unwrap()))
                    .min_by(|a, b| a.partial_cmp(b).unwrap());
                minima.push(min);
            }
            let finite: Vec<f64> = minima.iter().copied().flatten().collect();
            let nondecreasing = finite.windows(2).all(|w| w[0] <= w[1]);
            Some(PropernessWitness { stage_minima: minima, minima_nondecreasing: nondecreasing })
        }
    };

    let mut certificate = EmbeddingCertificate {
        kind: CertificateKind::SampleTable,
        dimension: map.dim(),
        injectivity_margin: margin,
        pairwise_simplex_results: Vec::new(),
        improper_pairs: Vec::new(),
        properness,
        rho_budget: None,
        steps: Vec::new(),
        passed: false,
        failure: None,
    };
    certificate.evaluate();
    Ok(certificate)
}
