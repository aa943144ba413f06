//! Exact geometric predicates and the general-position machinery.
//!
//! Affine independence and general position are decided by rank computations
//! over exact rationals; the simplex-disjointness oracle reduces convex-hull
//! intersection to exact linear-program feasibility. Randomized perturbation
//! draws points from a fine rational lattice inside the sup-norm ball, so the
//! perturbation bound and all certificates are exact statements, never
//! float-tolerance claims.

pub mod lp;
pub mod rational;

use itertools::Itertools;
use num_traits::{Signed, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::maps::SampleMap;
use crate::IdSet;
use lp::{solve, LpOutcome, StandardLp};
use rational::{q_from_f64, q_to_f64, Q};

/// Default retry budget per point for [`perturb_to_general_position`].
pub const DEFAULT_RETRY_BUDGET: usize = 1000;
/// Default point-count guard for [`is_general_position`].
pub const DEFAULT_GP_GUARD: usize = 64;
/// Lattice resolution for perturbation draws: offsets are integer multiples
/// of `r / 2^20`, strictly inside the open ball of radius `r`.
const DRAW_LATTICE: i64 = 1 << 20;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("perturbation radius must be positive, got {0}")]
    NonpositiveRadius(f64),
    #[error("retry budget ({budget}) exhausted at point {index}")]
    RetryBudgetExhausted { index: usize, budget: usize },
    #[error("general-position guard exceeded: {count} points > limit {guard}")]
    GuardExceeded { count: usize, guard: usize },
    #[error("degenerate simplex: vertex set is not affinely independent")]
    DegenerateSimplex,
    #[error("maps disagree on domain: {0:?}")]
    DomainMismatch(String),
    #[error("point set is empty")]
    Empty,
}

/// An ordered list of points in `R^N` with exact rational coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    ids: Vec<String>,
    coords: Vec<Vec<Q>>,
}

impl PointSet {
    pub fn new(dim: usize, ids: Vec<String>, coords: Vec<Vec<Q>>) -> Result<Self, GeometryError> {
        for c in &coords {
            if c.len() != dim {
                return Err(GeometryError::DimensionMismatch(dim, c.len()));
            }
        }
        assert_eq!(ids.len(), coords.len());
        Ok(PointSet { dim, ids, coords })
    }

    /// Exact rationalization of float rows; ids default to `p0, p1, ...`.
    pub fn from_f64_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self, GeometryError> {
        let ids = (0..rows.len()).map(|i| format!("p{i}")).collect();
        let coords = rows
            .iter()
            .map(|r| r.iter().map(|&x| q_from_f64(x)).collect())
            .collect();
        PointSet::new(dim, ids, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn coords(&self) -> &[Vec<Q>] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[Q] {
        &self.coords[i]
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        self.coords
            .iter()
            .map(|row| row.iter().map(q_to_f64).collect())
            .collect()
    }
}

/// The bounded sup-norm metric `min(1, |x - y|_inf)` on `R^N`.
pub fn delta_metric(x: &[f64], y: &[f64]) -> Result<f64, GeometryError> {
    if x.len() != y.len() {
        return Err(GeometryError::DimensionMismatch(x.len(), y.len()));
    }
    let sup = x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(sup.min(1.0))
}

/// The uniform metric `max over samples of delta(f(x), g(x))` on sample maps.
pub fn rho_metric(f: &SampleMap, g: &SampleMap, samples: &IdSet) -> Result<f64, GeometryError> {
    let mut worst: f64 = 0.0;
    for id in samples {
        let fx = f.get(id).ok_or_else(|| GeometryError::DomainMismatch(id.clone()))?;
        let gx = g.get(id).ok_or_else(|| GeometryError::DomainMismatch(id.clone()))?;
        worst = worst.max(delta_metric(fx, gx)?);
    }
    Ok(worst)
}

/// Row-reduce over exact rationals; true iff the rows are linearly
/// independent.
fn rows_independent(mut rows: Vec<Vec<Q>>) -> bool {
    let m = rows.len();
    if m == 0 {
        return true;
    }
    let n = rows[0].len();
    if m > n {
        return false;
    }
    let mut row = 0;
    for col in 0..n {
        if row == m {
            break;
        }
        let pivot = (row..m).find(|&r| !rows[r][col].is_zero());
        let Some(p) = pivot else { continue };
        rows.swap(row, p);
        let inv = rows[row][col].clone();
        for r in row + 1..m {
            if rows[r][col].is_zero() {
                continue;
            }
            let factor = &rows[r][col] / &inv;
            for c in col..n {
                let delta = &factor * &rows[row][c];
                rows[r][c] -= delta;
            }
        }
        row += 1;
    }
    row == m
}

/// Affine independence of rational points: the homogenized vectors
/// `(p_i, 1)` must be linearly independent. More than `N + 1` points in
/// `R^N` are always dependent (returned as `false`, not an error).
pub fn points_affinely_independent(points: &[Vec<Q>]) -> bool {
    if points.is_empty() {
        return true;
    }
    let n = points[0].len();
    if points.len() > n + 1 {
        return false;
    }
    let rows = points
        .iter()
        .map(|p| {
            let mut row = p.clone();
            row.push(Q::from_integer(1.into()));
            row
        })
        .collect();
    rows_independent(rows)
}

/// Affine independence of a point set, computed exactly.
pub fn is_affinely_independent(points: &PointSet) -> bool {
    points_affinely_independent(points.coords())
}

/// General position with the default point-count guard.
pub fn is_general_position(points: &PointSet) -> Result<bool, GeometryError> {
    is_general_position_with_guard(points, DEFAULT_GP_GUARD)
}

/// `true` iff every subset of cardinality at most `N + 1` is affinely
/// independent. Checking subsets of size exactly `min(count, N + 1)`
/// suffices: subsets of an affinely independent set are affinely
/// independent.
pub fn is_general_position_with_guard(
    points: &PointSet,
    guard: usize,
) -> Result<bool, GeometryError> {
    let count = points.len();
    if count > guard {
        return Err(GeometryError::GuardExceeded { count, guard });
    }
    let size = count.min(points.dim() + 1);
    for subset in (0..count).combinations(size) {
        let chosen: Vec<Vec<Q>> = subset.iter().map(|&i| points.point(i).to_vec()).collect();
        if !points_affinely_independent(&chosen) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Does appending `candidate` to `accepted` (already in general position)
/// preserve general position? Only maximal prior subsets need checking:
/// if `y` lies in the affine hull of a smaller subset it lies in the hull
/// of every superset.
fn extends_general_position(accepted: &[Vec<Q>], candidate: &[Q], dim: usize) -> bool {
    let k = accepted.len();
    let take = k.min(dim);
    if take == 0 {
        return true;
    }
    for subset in (0..k).combinations(take) {
        let mut chosen: Vec<Vec<Q>> = subset.iter().map(|&i| accepted[i].clone()).collect();
        chosen.push(candidate.to_vec());
        if !points_affinely_independent(&chosen) {
            return false;
        }
    }
    true
}

/// Move each point (after the first) by strictly less than `r` in sup-norm
/// so that the result is in general position.
///
/// The first point is kept exactly; later points are redrawn from a rational
/// lattice inside the open ball until every subset containing the new point
/// is affinely independent. Deterministic for a fixed seed. Coincident input
/// points are allowed (the draws separate them), which the perturbation
/// pipeline relies on when a map collapses several picks to one image.
pub fn perturb_to_general_position(
    points: &PointSet,
    r: f64,
    seed: u64,
) -> Result<PointSet, GeometryError> {
    perturb_with_budget(points, r, seed, DEFAULT_RETRY_BUDGET)
}

pub fn perturb_with_budget(
    points: &PointSet,
    r: f64,
    seed: u64,
    budget: usize,
) -> Result<PointSet, GeometryError> {
    if !(r > 0.0) {
        return Err(GeometryError::NonpositiveRadius(r));
    }
    let rq = q_from_f64(r);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vec<Q>> = Vec::with_capacity(points.len());
    for (index, x) in points.coords().iter().enumerate() {
        if index == 0 {
            out.push(x.clone());
            continue;
        }
        let mut accepted = false;
        for _ in 0..budget {
            let y: Vec<Q> = x
                .iter()
                .map(|c| {
                    let j = rng.gen_range(-(DRAW_LATTICE - 1)..DRAW_LATTICE);
                    c + &rq * Q::new(j.into(), DRAW_LATTICE.into())
                })
                .collect();
            if extends_general_position(&out, &y, points.dim()) {
                out.push(y);
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(GeometryError::RetryBudgetExhausted { index, budget });
        }
    }
    PointSet::new(points.dim(), points.ids().to_vec(), out)
}

/// How two geometric simplices meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplexRelation {
    /// Convex hulls do not intersect.
    Disjoint,
    /// The hulls intersect exactly in the hull of the shared vertices.
    IntersectInCommonFace,
    /// Any other nonempty intersection.
    IntersectImproperly,
}

/// Exact decision of how the convex hulls of two vertex sets intersect.
///
/// Both inputs must be affinely independent (honest geometric simplices).
/// Feasibility of `sum lam_i a_i = sum mu_j b_j` with barycentric
/// constraints decides intersection; when the vertex sets share points the
/// intersection is the shared face iff no barycentric mass can be placed on
/// a non-shared vertex (barycentric coordinates over a simplex are unique).
pub fn simplices_disjoint(
    s1: &PointSet,
    s2: &PointSet,
) -> Result<SimplexRelation, GeometryError> {
    if s1.dim() != s2.dim() {
        return Err(GeometryError::DimensionMismatch(s1.dim(), s2.dim()));
    }
    if s1.is_empty() || s2.is_empty() {
        return Err(GeometryError::Empty);
    }
    if !is_affinely_independent(s1) || !is_affinely_independent(s2) {
        return Err(GeometryError::DegenerateSimplex);
    }
    let n = s1.dim();
    let a = s1.len();
    let b = s2.len();

    let mut rows: Vec<Vec<Q>> = Vec::with_capacity(n + 2);
    let mut rhs: Vec<Q> = Vec::with_capacity(n + 2);
    for c in 0..n {
        let mut row = Vec::with_capacity(a + b);
        for i in 0..a {
            row.push(s1.point(i)[c].clone());
        }
        for j in 0..b {
            row.push(-s2.point(j)[c].clone());
        }
        rows.push(row);
        rhs.push(Q::zero());
    }
    let mut norm1 = vec![Q::zero(); a + b];
    for e in norm1.iter_mut().take(a) {
        *e = Q::from_integer(1.into());
    }
    let mut norm2 = vec![Q::zero(); a + b];
    for e in norm2.iter_mut().skip(a) {
        *e = Q::from_integer(1.into());
    }
    rows.push(norm1);
    rhs.push(Q::from_integer(1.into()));
    rows.push(norm2);
    rhs.push(Q::from_integer(1.into()));

    let feasibility = StandardLp { rows: rows.clone(), rhs: rhs.clone(), objective: vec![Q::zero(); a + b] };
    match solve(&feasibility) {
        LpOutcome::Infeasible => return Ok(SimplexRelation::Disjoint),
        LpOutcome::Unbounded => unreachable!("feasibility problem has zero objective"),
        LpOutcome::Optimal { .. } => {}
    }

    // shared vertices by exact coordinate equality
    let shared1: Vec<bool> = (0..a)
        .map(|i| (0..b).any(|j| s1.point(i) == s2.point(j)))
        .collect();
    let shared2: Vec<bool> = (0..b)
        .map(|j| (0..a).any(|i| s2.point(j) == s1.point(i)))
        .collect();
    if !shared1.iter().any(|&s| s) {
        return Ok(SimplexRelation::IntersectImproperly);
    }

    // the intersection equals the shared face iff no feasible point puts
    // positive weight on a non-shared vertex of either simplex
    for (idx, &is_shared) in shared1.iter().enumerate() {
        if is_shared {
            continue;
        }
        let mut objective = vec![Q::zero(); a + b];
        objective[idx] = Q::from_integer(1.into());
        if let LpOutcome::Optimal { value, .. } =
            solve(&StandardLp { rows: rows.clone(), rhs: rhs.clone(), objective })
        {
            if value.is_positive() {
                return Ok(SimplexRelation::IntersectImproperly);
            }
        }
    }
    for (idx, &is_shared) in shared2.iter().enumerate() {
        if is_shared {
            continue;
        }
        let mut objective = vec![Q::zero(); a + b];
        objective[a + idx] = Q::from_integer(1.into());
        if let LpOutcome::Optimal { value, .. } =
            solve(&StandardLp { rows: rows.clone(), rhs: rhs.clone(), objective })
        {
            if value.is_positive() {
                return Ok(SimplexRelation::IntersectImproperly);
            }
        }
    }
    Ok(SimplexRelation::IntersectInCommonFace)
}

#[cfg(test)]
mod tests {
    use super::rational::{q_int, q_ratio, q_sup_distance};
    use super::*;

    fn pset(rows: &[&[f64]]) -> PointSet {
        let dim = rows[0].len();
        PointSet::from_f64_rows(dim, &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_metric(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(delta_metric(&[0.0], &[0.3]).unwrap(), 0.3);
        assert_eq!(delta_metric(&[0.0], &[7.0]).unwrap(), 1.0);
        assert!(delta_metric(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn affine_independence_examples() {
        assert!(is_affinely_independent(&pset(&[&[2.0, 3.0, 4.0]])));
        assert!(is_affinely_independent(&pset(&[
            &[0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
        ])));
        // collinear: 0, e1, 2*e1
        assert!(!is_affinely_independent(&pset(&[
            &[0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0],
            &[2.0, 0.0, 0.0],
        ])));
    }

    #[test]
    fn too_many_points_are_dependent_not_an_error() {
        let p = pset(&[&[0.0], &[1.0], &[2.0]]);
        assert!(!is_affinely_independent(&p));
    }

    #[test]
    fn general_position_basics() {
        assert!(is_general_position(&pset(&[&[0.0, 0.0], &[1.0, 3.0]])).unwrap());
        // 4 coplanar points in R^3
        assert!(!is_general_position(&pset(&[
            &[0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[1.0, 1.0, 0.0],
        ]))
        .unwrap());
    }

    #[test]
    fn guard_is_enforced() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let p = PointSet::from_f64_rows(1, &rows).unwrap();
        assert!(matches!(
            is_general_position_with_guard(&p, 4),
            Err(GeometryError::GuardExceeded { .. })
        ));
    }

    #[test]
    fn perturbation_rejects_zero_radius() {
        let p = pset(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]);
        assert!(matches!(
            perturb_to_general_position(&p, 0.0, 7),
            Err(GeometryError::NonpositiveRadius(_))
        ));
    }

    #[test]
    fn collinear_points_become_generic_within_radius() {
        // 5 collinear points in R^3, r = 0.1, seed 7
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 0.0, 0.0]).collect();
        let p = PointSet::from_f64_rows(3, &rows).unwrap();
        let out = perturb_to_general_position(&p, 0.1, 7).unwrap();
        assert!(is_general_position(&out).unwrap());
        let r = q_ratio(1, 10);
        for (x, y) in p.coords().iter().zip(out.coords()) {
            assert!(q_sup_distance(x, y) < r, "perturbation exceeded radius");
        }
        // first point kept exactly
        assert_eq!(p.point(0), out.point(0));
    }

    #[test]
    fn perturbation_is_deterministic() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64, 1.0]).collect();
        let p = PointSet::from_f64_rows(2, &rows).unwrap();
        let a = perturb_to_general_position(&p, 0.25, 42).unwrap();
        let b = perturb_to_general_position(&p, 0.25, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coincident_inputs_are_separated() {
        let rows = vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5]];
        let p = PointSet::from_f64_rows(2, &rows).unwrap();
        let out = perturb_to_general_position(&p, 0.2, 3).unwrap();
        assert!(is_general_position(&out).unwrap());
    }

    #[test]
    fn disjoint_parallel_segments() {
        let s1 = pset(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let s2 = pset(&[&[0.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(simplices_disjoint(&s1, &s2).unwrap(), SimplexRelation::Disjoint);
    }

    #[test]
    fn crossing_segments_intersect_improperly() {
        let s1 = pset(&[&[0.0, 0.0], &[1.0, 1.0]]);
        let s2 = pset(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(
            simplices_disjoint(&s1, &s2).unwrap(),
            SimplexRelation::IntersectImproperly
        );
    }

    #[test]
    fn shared_edge_triangles_meet_in_common_face() {
        let s1 = pset(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.5]]);
        let s2 = pset(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.3, -1.0, 2.0]]);
        assert_eq!(
            simplices_disjoint(&s1, &s2).unwrap(),
            SimplexRelation::IntersectInCommonFace
        );
    }

    #[test]
    fn overlapping_collinear_segments_are_improper() {
        // share vertex (1,0) but overlap beyond it
        let s1 = pset(&[&[0.0, 0.0], &[2.0, 0.0]]);
        let s2 = pset(&[&[1.0, 0.0], &[3.0, 0.0]]);
        assert_eq!(
            simplices_disjoint(&s1, &s2).unwrap(),
            SimplexRelation::IntersectImproperly
        );
    }

    #[test]
    fn degenerate_input_is_an_error() {
        let s1 = pset(&[&[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0]]);
        let s2 = pset(&[&[0.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(
            simplices_disjoint(&s1, &s2),
            Err(GeometryError::DegenerateSimplex)
        ));
    }

    #[test]
    fn oracle_is_symmetric() {
        let s1 = pset(&[&[0.0, 0.0], &[1.0, 1.0]]);
        let s2 = pset(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(
            simplices_disjoint(&s1, &s2).unwrap(),
            simplices_disjoint(&s2, &s1).unwrap()
        );
        let d1 = pset(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let d2 = pset(&[&[5.0, 5.0], &[6.0, 5.0]]);
        assert_eq!(
            simplices_disjoint(&d1, &d2).unwrap(),
            simplices_disjoint(&d2, &d1).unwrap()
        );
    }

    #[test]
    fn touching_at_midpoint_without_shared_vertex_is_improper() {
        // segment endpoint lies in the interior of the other segment
        let s1 = pset(&[&[0.0, 0.0], &[2.0, 0.0]]);
        let s2 = pset(&[&[1.0, 0.0], &[1.0, 5.0]]);
        assert_eq!(
            simplices_disjoint(&s1, &s2).unwrap(),
            SimplexRelation::IntersectImproperly
        );
    }

    #[test]
    fn brute_force_rank_agreement() {
        // determinant-expansion oracle for affine independence, N <= 4
        fn det(m: &[Vec<Q>]) -> Q {
            let n = m.len();
            if n == 1 {
                return m[0][0].clone();
            }
            let mut acc = Q::zero();
            for (j, head) in m[0].iter().enumerate() {
                if head.is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Q>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(c, _)| c != j)
                            .map(|(_, v)| v.clone())
                            .collect()
                    })
                    .collect();
                let term = head * det(&minor);
                if j % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            acc
        }
        // affinely independent iff some maximal square minor of the
        // homogenized matrix has nonzero determinant
        fn oracle(points: &[Vec<Q>]) -> bool {
            let k = points.len();
            let n = points[0].len();
            if k > n + 1 {
                return false;
            }
            let homog: Vec<Vec<Q>> = points
                .iter()
                .map(|p| {
                    let mut row = p.clone();
                    row.push(q_int(1));
                    row
                })
                .collect();
            (0..n + 1).combinations(k).any(|cols| {
                let square: Vec<Vec<Q>> = homog
                    .iter()
                    .map(|row| cols.iter().map(|&c| row[c].clone()).collect())
                    .collect();
                !det(&square).is_zero()
            })
        }

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let n = rng.gen_range(1..=4usize);
            let k = rng.gen_range(1..=(n + 2));
            let points: Vec<Vec<Q>> = (0..k)
                .map(|_| (0..n).map(|_| q_ratio(rng.gen_range(-3..=3), rng.gen_range(1..=3))).collect())
                .collect();
            assert_eq!(points_affinely_independent(&points), oracle(&points));
        }
    }
}
