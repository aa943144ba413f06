//! Iterated barycentric subdivision, computed lazily through sample carriers.
//!
//! A point of a simplex determines, for each subdivision round, the unique
//! subdivided cell whose interior contains it: the chain of cumulative level
//! sets of its barycentric coordinate function. Only the cells actually
//! touched by samples are materialized, so deep subdivisions of small sample
//! sets stay cheap. The vertex stars of the subdivided complex then form the
//! canonical order-`n` cover: a sample lies in the star of a subdivision
//! vertex exactly when that vertex belongs to its carrier, hence every sample
//! lies in at most `n + 1` stars.

use std::collections::HashMap;

use num_traits::Zero;

use crate::covers::{Cover, CoverError};
use crate::geometry::rational::Q;
use crate::space::SampleSet;
use crate::IdSet;

/// Interns subdivision vertices per level in deterministic first-touch order.
struct Registry {
    levels: Vec<HashMap<Vec<u32>, u32>>,
}

impl Registry {
    fn new(rounds: usize) -> Self {
        Registry { levels: vec![HashMap::new(); rounds] }
    }

    fn intern(&mut self, level: usize, face: Vec<u32>) -> u32 {
        let map = &mut self.levels[level];
        let next = map.len() as u32;
        *map.entry(face).or_insert(next)
    }
}

/// Carrier of each sample in the `rounds`-fold barycentric subdivision:
/// the sorted vertex ids of the unique subdivided cell whose interior
/// contains the sample. Level-0 vertices are the complex's own vertices;
/// deeper vertices are interned barycenters.
pub fn carriers(samples: &SampleSet, rounds: usize) -> Vec<Vec<u32>> {
    let mut registry = Registry::new(rounds);
    samples
        .samples()
        .iter()
        .map(|sample| {
            let mut face: Vec<u32> = sample.support().to_vec();
            let mut coords: Vec<Q> = sample.barycentric().to_vec();
            for level in 0..rounds {
                let (next_face, next_coords) = subdivide_once(&face, &coords, level, &mut registry);
                face = next_face;
                coords = next_coords;
            }
            face
        })
        .collect()
}

/// One subdivision round: group the (strictly positive) barycentric
/// coordinates by value; the cumulative groups, largest values first, are
/// the barycenters spanning the carrier cell.
fn subdivide_once(
    face: &[u32],
    coords: &[Q],
    level: usize,
    registry: &mut Registry,
) -> (Vec<u32>, Vec<Q>) {
    debug_assert!(coords.iter().all(|c| !c.is_zero()));
    let mut order: Vec<usize> = (0..face.len()).collect();
    order.sort_by(|&a, &b| coords[b].cmp(&coords[a]).then(face[a].cmp(&face[b])));

    let mut new_face: Vec<u32> = Vec::new();
    let mut new_coords: Vec<Q> = Vec::new();
    let mut group: Vec<u32> = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let value = coords[order[i]].clone();
        while i < order.len() && coords[order[i]] == value {
            group.push(face[order[i]]);
            i += 1;
        }
        let next_value = if i < order.len() { coords[order[i]].clone() } else { Q::zero() };
        let mut cumulative = group.clone();
        cumulative.sort_unstable();
        let size = Q::from_integer((cumulative.len() as i64).into());
        let id = registry.intern(level, cumulative);
        new_face.push(id);
        new_coords.push(size * (value - next_value));
    }
    // the chain is enumerated largest-group-last already (cumulative), but
    // vertex ids must be sorted for canonical face keys downstream
    let mut idx: Vec<usize> = (0..new_face.len()).collect();
    idx.sort_by_key(|&i| new_face[i]);
    (
        idx.iter().map(|&i| new_face[i]).collect(),
        idx.iter().map(|&i| new_coords[i].clone()).collect(),
    )
}

/// The vertex-star cover of the `rounds`-fold barycentric subdivision,
/// restricted to the samples of `region`: one set per subdivision vertex,
/// containing the region samples whose carrier includes that vertex.
///
/// The order of this cover never exceeds the complex dimension `n`, because
/// a sample lies in exactly `|carrier|` stars and carriers span at most
/// `n + 1` vertices.
pub fn star_cover(
    samples: &SampleSet,
    region: &IdSet,
    rounds: usize,
) -> Result<Cover, CoverError> {
    let all_carriers = carriers(samples, rounds);
    let mut sets: Vec<(u32, IdSet)> = Vec::new();
    let mut by_vertex: HashMap<u32, usize> = HashMap::new();
    for (sample, carrier) in samples.samples().iter().zip(&all_carriers) {
        if !region.contains(sample.id()) {
            continue;
        }
        for &w in carrier {
            let slot = *by_vertex.entry(w).or_insert_with(|| {
                sets.push((w, IdSet::new()));
                sets.len() - 1
            });
            sets[slot].1.insert(sample.id().to_string());
        }
    }
    sets.sort_by_key(|(w, _)| *w);
    let labeled = sets
        .into_iter()
        .map(|(w, ids)| (format!("st{rounds}_{w}"), ids))
        .collect();
    Cover::new(region.iter().cloned().collect(), labeled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::space::realize_metric;

    #[test]
    fn segment_carriers_have_expected_sizes() {
        let complex = fixtures::segment();
        let coords = fixtures::segment_coords();
        // mesh 0.2 -> resolution 5: samples at k/5
        let (samples, _) = realize_metric(&complex, &coords, 0.2).unwrap();
        let c1 = carriers(&samples, 1);
        for (sample, carrier) in samples.samples().iter().zip(&c1) {
            assert!(!carrier.is_empty() && carrier.len() <= 2);
            if sample.support().len() == 1 {
                assert_eq!(carrier.len(), 1, "vertices stay vertices");
            }
        }
    }

    #[test]
    fn star_cover_orders_are_bounded_by_dimension() {
        let complex = fixtures::hexagon();
        let coords = fixtures::hexagon_coords();
        let (samples, _) = realize_metric(&complex, &coords, 0.25).unwrap();
        for rounds in 0..3 {
            let cover = star_cover(&samples, &samples.id_set(), rounds).unwrap();
            assert!(crate::covers::order(&cover) <= 1);
        }
    }

    #[test]
    fn deeper_subdivision_refines_shallower() {
        let complex = fixtures::hexagon();
        let coords = fixtures::hexagon_coords();
        let (samples, _) = realize_metric(&complex, &coords, 0.25).unwrap();
        let coarse = star_cover(&samples, &samples.id_set(), 1).unwrap();
        let fine = star_cover(&samples, &samples.id_set(), 2).unwrap();
        assert!(crate::covers::refines(&fine, &coarse).unwrap().is_some());
    }
}
