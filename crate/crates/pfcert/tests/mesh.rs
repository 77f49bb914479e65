//! Simplicial complex construction, validation, stars, face
//! classification, the example corpus, and the text mesh format.

mod common;

use pfcert::examples::{example_mesh, EXAMPLE_NAMES};
use pfcert::mesh::{FaceClass, Simplex, SimplicialComplex};
use pfcert::meshio::{parse_mesh_str, write_mesh};

#[test]
fn kuhn_cube_counts() {
    let c = common::example("cubeKuhn");
    assert_eq!(c.n(), 3);
    assert_eq!(c.num_vertices(), 8);
    assert_eq!(c.cells().len(), 6);
    assert_eq!(c.skeleton(1).len(), 19);
    assert_eq!(c.skeleton(2).len(), 18);
    let classes = c.classify_faces().unwrap();
    let boundary = classes.values().filter(|f| **f == FaceClass::Boundary).count();
    let interior = classes.values().filter(|f| **f == FaceClass::Interior).count();
    assert_eq!(boundary, 12);
    assert_eq!(interior, 6);
    assert_eq!(c.boundary_faces().len(), 12);
}

#[test]
fn kuhn_cube_diagonal_star_is_everything() {
    let c = common::example("cubeKuhn");
    // Locate the main-diagonal vertices (0,0,0) and (1,1,1) by coordinates.
    let locate = |target: &[f64]| -> usize {
        (0..c.num_vertices())
            .find(|&v| {
                c.vertex(v)
                    .iter()
                    .zip(target)
                    .all(|(a, b)| (a - b).abs() < 1e-12)
            })
            .expect("corner vertex present")
    };
    let v0 = locate(&[0.0, 0.0, 0.0]);
    let v7 = locate(&[1.0, 1.0, 1.0]);
    let diag = Simplex::new(vec![v0, v7]);
    assert!(c.contains_simplex(&diag));
    let star = c.star(&diag).unwrap();
    assert_eq!(star.cell_indices.len(), 6);
}

#[test]
fn face_count_identity_all_examples() {
    // #boundary + 2 * #interior faces = (n+1) * #cells.
    for name in EXAMPLE_NAMES {
        let c = common::example(name);
        let classes = c.classify_faces().unwrap();
        let boundary = classes.values().filter(|f| **f == FaceClass::Boundary).count();
        let interior = classes.values().filter(|f| **f == FaceClass::Interior).count();
        assert_eq!(
            boundary + 2 * interior,
            (c.n() + 1) * c.cells().len(),
            "face identity fails for {name}"
        );
    }
}

#[test]
fn closure_and_euler_all_examples() {
    for name in EXAMPLE_NAMES {
        let c = common::example(name);
        // Closure: every subsimplex of every cell is present in the skeleta.
        for cell in c.cells() {
            for d in 0..=c.n() {
                for s in cell.subsimplices(d) {
                    assert!(c.contains_simplex(&s), "{name}: missing subsimplex {s:?}");
                }
            }
        }
        let expected = if *name == "annulus8" { 0 } else { 1 };
        assert_eq!(c.euler_characteristic(), expected, "Euler of {name}");
        assert!(c.is_face_connected(), "{name} must be face-connected");
    }
}

#[test]
fn example_corpus_sizes() {
    assert_eq!(common::example("square2").cells().len(), 2);
    assert_eq!(common::example("Lshape4").cells().len(), 4);
    assert_eq!(common::example("slit5").cells().len(), 5);
    assert_eq!(common::example("cube5").cells().len(), 5);
    assert_eq!(common::example("fichera24").cells().len(), 24);
    assert_eq!(common::example("annulus8").cells().len(), 8);
    assert!(example_mesh("nonesuch").is_none());
}

#[test]
fn square2_structure() {
    let c = common::example("square2");
    // The diagonal is the single interior edge; four boundary edges.
    let classes = c.classify_faces().unwrap();
    let interior: Vec<&Simplex> = classes
        .iter()
        .filter(|(_, cl)| **cl == FaceClass::Interior)
        .map(|(s, _)| s)
        .collect();
    assert_eq!(interior.len(), 1);
    assert_eq!(c.boundary_faces().len(), 4);
    assert!(!c.is_boundary_simplex(interior[0]));
    // Star of a diagonal endpoint contains both triangles.
    let v = interior[0].vertices()[0];
    let star = c.star(&Simplex::new(vec![v])).unwrap();
    assert_eq!(star.cell_indices.len(), 2);
    // One face-connected component.
    let (components, _) = c.face_connected_components();
    assert_eq!(components.len(), 1);
    // Interface of cell 1 against {0}: a single shared edge, as faces.
    let iface = c.simplicial_intersection(1, &[0]);
    assert_eq!(iface.shared_maximal.len(), 1);
    assert_eq!(iface.shared_maximal[0].dim(), 1);
    assert!(iface.as_faces.is_some());
}

#[test]
fn vertex_touching_triangles_are_two_components() {
    let c = SimplicialComplex::<f64>::build(
        2,
        vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![2.0, 0.0],
            vec![1.0, 1.0],
        ],
        &[vec![0, 1, 2], vec![1, 3, 4]],
    )
    .unwrap();
    let (components, _) = c.face_connected_components();
    assert_eq!(components.len(), 2);
    assert!(!c.is_face_connected());
    // A cell disjoint from the prior set has an empty interface.
    assert!(c.simplicial_intersection(1, &[]).is_empty());
}

#[test]
fn build_rejects_invalid_meshes() {
    // Overlapping cells sharing an edge.
    let overlap = SimplicialComplex::<f64>::build(
        2,
        vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.4, 0.2],
        ],
        &[vec![0, 1, 2], vec![0, 1, 3]],
    );
    assert!(overlap.is_err());
    // Pseudomanifold violation: three triangles on one edge.
    let pinched = SimplicialComplex::<f64>::build(
        2,
        vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
            vec![-0.5, -1.5],
        ],
        &[vec![0, 1, 2], vec![0, 1, 3], vec![0, 1, 4]],
    );
    // Either rejected outright or flagged by face classification.
    match pinched {
        Err(_) => {}
        Ok(c) => assert!(c.classify_faces().is_err()),
    }
    // Degenerate cell.
    let degenerate = SimplicialComplex::<f64>::build(
        2,
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]],
        &[vec![0, 1, 2]],
    );
    assert!(degenerate.is_err());
    // Unused vertex.
    let unused = SimplicialComplex::<f64>::build(
        2,
        vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![5.0, 5.0],
        ],
        &[vec![0, 1, 2]],
    );
    assert!(unused.is_err());
    // Vertex index out of range.
    let oob = SimplicialComplex::<f64>::build(
        2,
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        &[vec![0, 1, 7]],
    );
    assert!(oob.is_err());
}

#[test]
fn simplex_combinatorics() {
    let s = Simplex::new(vec![3, 1, 2]);
    assert_eq!(s.vertices(), &[1, 2, 3]);
    assert_eq!(s.dim(), 2);
    assert!(s.has_vertex(2));
    let t = Simplex::new(vec![2, 3, 4]);
    assert_eq!(s.intersection(&t), Some(Simplex::new(vec![2, 3])));
    assert_eq!(s.facets().count(), 3);
    assert_eq!(s.subsimplices(1).len(), 3);
    assert_eq!(
        Simplex::new(vec![1, 2, 3, 9]).complement_within(&s),
        Some(Simplex::new(vec![9]))
    );
    assert_eq!(s.complement_within(&Simplex::new(vec![1, 2, 3, 9])), None);
    assert!(Simplex::new(vec![1, 2, 3]).contains(&Simplex::new(vec![1, 3])));
}

#[test]
fn star_and_link() {
    let c = common::example("Lshape4");
    // The fan center is a vertex contained in all four triangles.
    let center = (0..c.num_vertices())
        .find(|&v| {
            c.star(&Simplex::new(vec![v]))
                .map(|s| s.cell_indices.len() == 4)
                .unwrap_or(false)
        })
        .expect("fan center exists");
    let star = c.star(&Simplex::new(vec![center])).unwrap();
    assert_eq!(star.cell_indices.len(), 4);
    let link = c.link(&Simplex::new(vec![center])).unwrap();
    assert!(!link.is_empty());
    assert!(link.iter().all(|s| !s.has_vertex(center)));
    // Restriction to the star keeps the cell count.
    let sub = star.to_subcomplex(&c);
    assert_eq!(sub.cells().len(), 4);
}

#[test]
fn mesh_roundtrip_all_examples() {
    for name in EXAMPLE_NAMES {
        let c = common::example(name);
        let text = write_mesh(&c);
        let back = parse_mesh_str(&text).unwrap();
        assert_eq!(back.n(), c.n());
        assert_eq!(back.num_vertices(), c.num_vertices());
        assert_eq!(back.cells().len(), c.cells().len());
        for v in 0..c.num_vertices() {
            assert_eq!(back.vertex(v), c.vertex(v), "coordinates of {name} drift");
        }
        for (a, b) in back.cells().iter().zip(c.cells()) {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn mesh_parse_errors_and_comments() {
    assert!(parse_mesh_str("").is_err());
    assert!(parse_mesh_str("2 3").is_err());
    assert!(parse_mesh_str("x 3 1\n0 0\n1 0\n0 1\n0 1 2").is_err());
    // Wrong coordinate arity.
    assert!(parse_mesh_str("2 3 1\n0 0 9\n1 0\n0 1\n0 1 2").is_err());
    // Malformed cell arity.
    assert!(parse_mesh_str("2 3 1\n0 0\n1 0\n0 1\n0 1").is_err());
    // Comments and blank lines are fine.
    let ok = parse_mesh_str("# a triangle\n2 3 1\n\n0 0\n1 0 # second\n0 1\n0 1 2\n");
    assert!(ok.is_ok());
    assert_eq!(ok.unwrap().cells().len(), 1);
}

#[test]
fn map_coords_scales_geometry() {
    let c = common::example("square2");
    let scaled = c.map_coords(|v| v * 2.0);
    let g0 = pfcert::geometry::cell_geometry(&c, 0).unwrap();
    let g1 = pfcert::geometry::cell_geometry(&scaled, 0).unwrap();
    assert!((g1.diameter - 2.0 * g0.diameter).abs() < 1e-12);
    assert!((g1.volume - 4.0 * g0.volume).abs() < 1e-12);
}
