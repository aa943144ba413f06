//! Shipped test complexes: segment, hexagon circle, K5, the 7-vertex torus,
//! and the 6-vertex projective plane, each with reference coordinates.
//!
//! These are the standard small objects of PL topology: the 7-vertex torus
//! triangulates the torus with the complete graph K7 (every vertex pair is
//! an edge), and the 6-vertex triangulation of the projective plane is the
//! antipodal quotient of the icosahedron.

use std::collections::BTreeMap;

use crate::space::{ReferenceCoords, SimplicialComplex};

fn coords_from(pairs: &[(&str, &[f64])]) -> ReferenceCoords {
    let map: BTreeMap<String, Vec<f64>> =
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect();
    ReferenceCoords::new(map).unwrap()
}

/// A single vertex (dimension 0).
pub fn single_vertex() -> SimplicialComplex {
    SimplicialComplex::from_maximal(0, vec!["o".into()], vec![vec!["o".into()]]).unwrap()
}

pub fn single_vertex_coords() -> ReferenceCoords {
    coords_from(&[("o", &[0.0])])
}

/// One edge on vertices `a`, `b` (dimension 1).
pub fn segment() -> SimplicialComplex {
    SimplicialComplex::from_maximal(
        1,
        vec!["a".into(), "b".into()],
        vec![vec!["a".into(), "b".into()]],
    )
    .unwrap()
}

/// `a = 0`, `b = 1` on the real line.
pub fn segment_coords() -> ReferenceCoords {
    coords_from(&[("a", &[0.0]), ("b", &[1.0])])
}

/// The hexagonal circle: six vertices, six edges (dimension 1).
pub fn hexagon() -> SimplicialComplex {
    let vertices: Vec<String> = (0..6).map(|i| format!("v{i}")).collect();
    let edges: Vec<Vec<String>> = (0..6)
        .map(|i| vec![format!("v{i}"), format!("v{}", (i + 1) % 6)])
        .collect();
    SimplicialComplex::from_maximal(1, vertices, edges).unwrap()
}

/// Vertices on the unit circle at multiples of 60 degrees.
pub fn hexagon_coords() -> ReferenceCoords {
    let mut pairs: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for i in 0..6 {
        let theta = std::f64::consts::PI / 3.0 * i as f64;
        pairs.insert(format!("v{i}"), vec![theta.cos(), theta.sin()]);
    }
    ReferenceCoords::new(pairs).unwrap()
}

/// The complete graph K5 (dimension 1): five vertices, all ten edges.
pub fn k5() -> SimplicialComplex {
    let vertices: Vec<String> = (0..5).map(|i| format!("p{i}")).collect();
    let mut edges = Vec::new();
    for i in 0..5 {
        for j in i + 1..5 {
            edges.push(vec![format!("p{i}"), format!("p{j}")]);
        }
    }
    SimplicialComplex::from_maximal(1, vertices, edges).unwrap()
}

/// Regular pentagon in the plane.
pub fn k5_coords() -> ReferenceCoords {
    let mut pairs: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for i in 0..5 {
        let theta = 2.0 * std::f64::consts::PI / 5.0 * i as f64;
        pairs.insert(format!("p{i}"), vec![theta.cos(), theta.sin()]);
    }
    ReferenceCoords::new(pairs).unwrap()
}

/// The 7-vertex (Csaszar) torus: triangles `{i, i+1, i+3}` and
/// `{i, i+2, i+3}` mod 7. Fourteen triangles, twenty-one edges
/// (the complete graph K7), Euler characteristic zero.
pub fn torus7() -> SimplicialComplex {
    let vertices: Vec<String> = (0..7).map(|i| format!("t{i}")).collect();
    let mut faces = Vec::new();
    for i in 0..7u32 {
        faces.push(vec![
            format!("t{i}"),
            format!("t{}", (i + 1) % 7),
            format!("t{}", (i + 3) % 7),
        ]);
        faces.push(vec![
            format!("t{i}"),
            format!("t{}", (i + 2) % 7),
            format!("t{}", (i + 3) % 7),
        ]);
    }
    SimplicialComplex::from_maximal(2, vertices, faces).unwrap()
}

/// Coordinates of a geometric realization of the Csaszar torus in 3-space.
pub fn torus7_coords() -> ReferenceCoords {
    coords_from(&[
        ("t0", &[3.0, -3.0, 0.0]),
        ("t1", &[-3.0, 3.0, 0.0]),
        ("t2", &[-3.0, -3.0, 1.0]),
        ("t3", &[3.0, 3.0, 1.0]),
        ("t4", &[-1.0, -2.0, 3.0]),
        ("t5", &[1.0, 2.0, 3.0]),
        ("t6", &[0.0, 0.0, 15.0]),
    ])
}

/// The 6-vertex projective plane: ten triangles on K6, the antipodal
/// quotient of the icosahedron. Euler characteristic one; every edge lies
/// in exactly two triangles.
pub fn rp2_6() -> SimplicialComplex {
    let vertices: Vec<String> = (1..=6).map(|i| format!("r{i}")).collect();
    let faces_idx: [[u32; 3]; 10] = [
        [1, 2, 3],
        [1, 2, 4],
        [1, 3, 5],
        [1, 4, 6],
        [1, 5, 6],
        [2, 3, 6],
        [2, 4, 5],
        [2, 5, 6],
        [3, 4, 5],
        [3, 4, 6],
    ];
    let faces = faces_idx
        .iter()
        .map(|f| f.iter().map(|i| format!("r{i}")).collect())
        .collect();
    SimplicialComplex::from_maximal(2, vertices, faces).unwrap()
}

pub fn rp2_6_coords() -> ReferenceCoords {
    coords_from(&[
        ("r1", &[0.0, 0.0, 0.0]),
        ("r2", &[1.0, 0.0, 0.0]),
        ("r3", &[0.0, 1.0, 0.0]),
        ("r4", &[0.0, 0.0, 1.0]),
        ("r5", &[1.0, 1.0, 0.3]),
        ("r6", &[0.4, 1.0, 1.0]),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    /// Pseudomanifold check: in a closed surface triangulation every edge
    /// lies in exactly two triangles.
    fn edge_degrees(complex: &SimplicialComplex) -> HashMap<Vec<u32>, usize> {
        let mut degrees: HashMap<Vec<u32>, usize> = HashMap::new();
        for s in complex.simplices().iter().filter(|s| s.len() == 3) {
            for drop in 0..3 {
                let mut e = s.clone();
                e.remove(drop);
                *degrees.entry(e).or_insert(0) += 1;
            }
        }
        degrees
    }

    #[test]
    fn torus7_is_a_closed_surface_with_euler_zero() {
        let t = torus7();
        let v = t.vertices().len() as i64;
        let e = t.simplices().iter().filter(|s| s.len() == 2).count() as i64;
        let f = t.simplices().iter().filter(|s| s.len() == 3).count() as i64;
        assert_eq!((v, e, f), (7, 21, 14));
        assert_eq!(v - e + f, 0);
        assert!(edge_degrees(&t).values().all(|&d| d == 2));
    }

    #[test]
    fn rp2_6_has_euler_one() {
        let p = rp2_6();
        let v = p.vertices().len() as i64;
        let e = p.simplices().iter().filter(|s| s.len() == 2).count() as i64;
        let f = p.simplices().iter().filter(|s| s.len() == 3).count() as i64;
        assert_eq!((v, e, f), (6, 15, 10));
        assert_eq!(v - e + f, 1);
        assert!(edge_degrees(&p).values().all(|&d| d == 2));
    }

    #[test]
    fn k5_has_ten_edges() {
        let k = k5();
        assert_eq!(k.simplices().iter().filter(|s| s.len() == 2).count(), 10);
    }
}
