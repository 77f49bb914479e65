//! Built-in example mesh corpus, generated in code so the meshes are exact
//! and auditable. All coordinates are dyadic rationals, so regeneration is
//! bit-for-bit reproducible.

use std::collections::BTreeMap;

use crate::mesh::{MeshError, SimplicialComplex};

type C64 = SimplicialComplex<f64>;

/// Names of the built-in example meshes.
pub const EXAMPLE_NAMES: &[&str] = &[
    "square2",
    "Lshape4",
    "slit5",
    "slit8a",
    "slit8b",
    "cube5",
    "cubeKuhn",
    "crossedBricks5",
    "crossedBricksKuhn",
    "fichera24",
    "annulus8",
];

/// Generates a built-in example mesh by name.
pub fn example_mesh(name: &str) -> Option<Result<C64, MeshError>> {
    let out = match name {
        "square2" => square2(),
        "Lshape4" => lshape4(),
        "slit5" => slit5(),
        "slit8a" => slit8a(),
        "slit8b" => slit8b(),
        "cube5" => cube5(),
        "cubeKuhn" => cube_kuhn(),
        "crossedBricks5" => crossed_bricks5(),
        "crossedBricksKuhn" => crossed_bricks_kuhn(),
        "fichera24" => fichera24(),
        "annulus8" => annulus8(),
        _ => return None,
    };
    Some(out)
}

/// The unit square split along a diagonal: two triangles.
fn square2() -> Result<C64, MeshError> {
    C64::build(
        2,
        vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ],
        &[vec![0, 1, 3], vec![0, 3, 2]],
    )
}

/// The L-shaped domain `(-1,1)² ∖ [0,1)×(-1,0]` as a fan of four triangles
/// around the reentrant corner.
fn lshape4() -> Result<C64, MeshError> {
    C64::build(
        2,
        vec![
            vec![0.0, 0.0],   // 0: reentrant corner
            vec![0.0, -1.0],  // 1
            vec![-1.0, -1.0], // 2
            vec![-1.0, 1.0],  // 3
            vec![1.0, 1.0],   // 4
            vec![1.0, 0.0],   // 5
        ],
        &[
            vec![0, 1, 2],
            vec![0, 2, 3],
            vec![0, 3, 4],
            vec![0, 4, 5],
        ],
    )
}

/// The slit square `(-1,1)² ∖ [0,1)×{0}` as a fan of five triangles around
/// the slit tip; the outer slit endpoint `(1,0)` is doubled (one copy per
/// side of the slit) so the complex is combinatorially a 2-ball.
fn slit5() -> Result<C64, MeshError> {
    C64::build(
        2,
        vec![
            vec![0.0, 0.0],   // 0: slit tip
            vec![1.0, 0.0],   // 1: slit mouth, lower side
            vec![1.0, -1.0],  // 2
            vec![-1.0, -1.0], // 3
            vec![-1.0, 1.0],  // 4
            vec![1.0, 1.0],   // 5
            vec![1.0, 0.0],   // 6: slit mouth, upper side
        ],
        &[
            vec![0, 1, 2],
            vec![0, 2, 3],
            vec![0, 3, 4],
            vec![0, 4, 5],
            vec![0, 5, 6],
        ],
    )
}

/// The slit square as a fan of eight triangles around the slit tip, with
/// boundary midpoints; slit mouth doubled.
fn slit8a() -> Result<C64, MeshError> {
    C64::build(
        2,
        vec![
            vec![0.0, 0.0],   // 0: slit tip
            vec![1.0, 0.0],   // 1: slit mouth, lower side
            vec![1.0, -1.0],  // 2
            vec![0.0, -1.0],  // 3
            vec![-1.0, -1.0], // 4
            vec![-1.0, 0.0],  // 5
            vec![-1.0, 1.0],  // 6
            vec![0.0, 1.0],   // 7
            vec![1.0, 1.0],   // 8
            vec![1.0, 0.0],   // 9: slit mouth, upper side
        ],
        &[
            vec![0, 1, 2],
            vec![0, 2, 3],
            vec![0, 3, 4],
            vec![0, 4, 5],
            vec![0, 5, 6],
            vec![0, 6, 7],
            vec![0, 7, 8],
            vec![0, 8, 9],
        ],
    )
}

/// The slit square as four axis-aligned unit squares, each split along a
/// diagonal through the slit tip; slit mouth doubled.
fn slit8b() -> Result<C64, MeshError> {
    C64::build(
        2,
        vec![
            vec![0.0, 0.0],   // 0: slit tip
            vec![1.0, 0.0],   // 1: slit mouth, lower side
            vec![1.0, -1.0],  // 2
            vec![0.0, -1.0],  // 3
            vec![-1.0, -1.0], // 4
            vec![-1.0, 0.0],  // 5
            vec![-1.0, 1.0],  // 6
            vec![0.0, 1.0],   // 7
            vec![1.0, 1.0],   // 8
            vec![1.0, 0.0],   // 9: slit mouth, upper side
        ],
        &[
            // lower-right square (0,-1)×(1,0)
            vec![0, 1, 2],
            vec![0, 2, 3],
            // lower-left square
            vec![0, 3, 4],
            vec![0, 4, 5],
            // upper-left square
            vec![0, 5, 6],
            vec![0, 6, 7],
            // upper-right square
            vec![0, 7, 8],
            vec![0, 8, 9],
        ],
    )
}

/// Parity of the five-tetrahedron cube pattern: the central tetrahedron
/// spans the four odd-parity or the four even-parity corners.
#[derive(Clone, Copy)]
enum CubeParity {
    Odd,
    Even,
}

/// The five-tetrahedron split of the unit cube at `origin`, as vertex
/// coordinates (cube corners in binary-counter order) and local cells.
fn cube5_cells(parity: CubeParity) -> Vec<Vec<usize>> {
    match parity {
        // Central tetrahedron on the odd-parity corners {1,2,4,7}.
        CubeParity::Odd => vec![
            vec![0, 1, 2, 4],
            vec![1, 2, 3, 7],
            vec![1, 4, 5, 7],
            vec![2, 4, 6, 7],
            vec![1, 2, 4, 7],
        ],
        // Central tetrahedron on the even-parity corners {0,3,5,6}.
        CubeParity::Even => vec![
            vec![0, 1, 3, 5],
            vec![0, 2, 3, 6],
            vec![0, 4, 5, 6],
            vec![3, 5, 6, 7],
            vec![0, 3, 5, 6],
        ],
    }
}

/// Kuhn (Freudenthal) split of the unit cube: six tetrahedra along
/// monotone lattice paths from corner 0 to corner 7.
fn kuhn_cells() -> Vec<Vec<usize>> {
    let axes = [0usize, 1, 2];
    let mut cells = Vec::with_capacity(6);
    for p0 in axes {
        for p1 in axes {
            if p1 == p0 {
                continue;
            }
            let v1 = 1usize << p0;
            let v2 = v1 | (1usize << p1);
            cells.push(vec![0, v1, v2, 7]);
        }
    }
    cells
}

/// Helper accumulating cubes into one complex, deduplicating shared
/// vertices by exact (doubled) integer coordinates.
struct CubeAssembler {
    coords: Vec<Vec<f64>>,
    index: BTreeMap<[i64; 3], usize>,
    cells: Vec<Vec<usize>>,
}

impl CubeAssembler {
    fn new() -> Self {
        CubeAssembler {
            coords: Vec::new(),
            index: BTreeMap::new(),
            cells: Vec::new(),
        }
    }

    fn vertex(&mut self, p: [i64; 3]) -> usize {
        if let Some(&i) = self.index.get(&p) {
            return i;
        }
        let i = self.coords.len();
        self.coords.push(p.iter().map(|&x| x as f64).collect());
        self.index.insert(p, i);
        i
    }

    /// Adds a unit cube with lower corner `origin` and the given local
    /// cell pattern over binary-counter corners.
    fn add_cube(&mut self, origin: [i64; 3], local_cells: &[Vec<usize>]) {
        let corner_ids: Vec<usize> = (0..8)
            .map(|b| {
                self.vertex([
                    origin[0] + ((b >> 0) & 1) as i64,
                    origin[1] + ((b >> 1) & 1) as i64,
                    origin[2] + ((b >> 2) & 1) as i64,
                ])
            })
            .collect();
        for cell in local_cells {
            self.cells.push(cell.iter().map(|&l| corner_ids[l]).collect());
        }
    }

    fn build(self) -> Result<C64, MeshError> {
        C64::build(3, self.coords, &self.cells)
    }
}

/// The unit cube split into five tetrahedra.
fn cube5() -> Result<C64, MeshError> {
    let mut a = CubeAssembler::new();
    a.add_cube([0, 0, 0], &cube5_cells(CubeParity::Odd));
    a.build()
}

/// The unit cube in the six-tetrahedron Kuhn triangulation.
fn cube_kuhn() -> Result<C64, MeshError> {
    let mut a = CubeAssembler::new();
    a.add_cube([0, 0, 0], &kuhn_cells());
    a.build()
}

/// Crossed bricks: the union of three unit bricks crossing at the corner
/// cube `(-1,0)³`, assembled from four unit cubes. With the five-tet
/// pattern the central cube uses the odd parity and the arms the even
/// parity so that the face diagonals match across the shared faces.
fn crossed_bricks5() -> Result<C64, MeshError> {
    let mut a = CubeAssembler::new();
    a.add_cube([-1, -1, -1], &cube5_cells(CubeParity::Odd));
    a.add_cube([0, -1, -1], &cube5_cells(CubeParity::Even));
    a.add_cube([-1, 0, -1], &cube5_cells(CubeParity::Even));
    a.add_cube([-1, -1, 0], &cube5_cells(CubeParity::Even));
    a.build()
}

/// Crossed bricks from four Kuhn cubes (translated Kuhn patterns are
/// face-to-face compatible).
fn crossed_bricks_kuhn() -> Result<C64, MeshError> {
    let mut a = CubeAssembler::new();
    a.add_cube([-1, -1, -1], &kuhn_cells());
    a.add_cube([0, -1, -1], &kuhn_cells());
    a.add_cube([-1, 0, -1], &kuhn_cells());
    a.add_cube([-1, -1, 0], &kuhn_cells());
    a.build()
}

/// The Fichera corner `(-1,1)³ ∖ [0,1)³` as the cone from the reentrant
/// corner (the origin) over its outer boundary: the three full square
/// faces split into four triangles through their centers, the three
/// L-shaped faces fanned from their reentrant corners — 24 tetrahedra.
fn fichera24() -> Result<C64, MeshError> {
    let mut a = CubeAssembler::new();
    let apex = a.vertex([0, 0, 0]);
    // place(axis, level, (u, v)) embeds 2D face coordinates in 3D.
    let place = |axis: usize, level: i64, uv: (i64, i64)| -> [i64; 3] {
        let mut p = [0i64; 3];
        p[axis] = level;
        p[(axis + 1) % 3] = uv.0;
        p[(axis + 2) % 3] = uv.1;
        p
    };
    let mut triangles: Vec<[[i64; 3]; 3]> = Vec::new();
    for axis in 0..3 {
        // Full square face at coordinate -1: fan around the face center.
        let corners = [(-1, -1), (1, -1), (1, 1), (-1, 1)];
        for i in 0..4 {
            triangles.push([
                place(axis, -1, corners[i]),
                place(axis, -1, corners[(i + 1) % 4]),
                place(axis, -1, (0, 0)),
            ]);
        }
        // L-shaped face at coordinate +1: fan from its reentrant corner
        // over the four edges not containing it.
        let poly = [(-1, -1), (1, -1), (1, 0), (0, 0), (0, 1), (-1, 1)];
        let reentrant = poly[3];
        for &(i, j) in &[(0usize, 1usize), (1, 2), (4, 5), (5, 0)] {
            triangles.push([
                place(axis, 1, reentrant),
                place(axis, 1, poly[i]),
                place(axis, 1, poly[j]),
            ]);
        }
    }
    let mut cells = Vec::with_capacity(24);
    for t in triangles {
        let ids: Vec<usize> = t.iter().map(|&p| a.vertex(p)).collect();
        cells.push(vec![apex, ids[0], ids[1], ids[2]]);
    }
    a.cells = cells;
    a.build()
}

/// A square annulus of eight triangles (outer square `(-1,1)²`, inner
/// square hole `(-1/2,1/2)²`). Not a 2-ball: Euler characteristic 0; it
/// admits no shelling.
fn annulus8() -> Result<C64, MeshError> {
    let outer = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
    let inner = [[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]];
    let mut coords = Vec::with_capacity(8);
    for p in outer.iter().chain(inner.iter()) {
        coords.push(p.to_vec());
    }
    let mut cells = Vec::with_capacity(8);
    for i in 0..4 {
        let o_i = i;
        let o_j = (i + 1) % 4;
        let i_i = 4 + i;
        let i_j = 4 + (i + 1) % 4;
        cells.push(vec![o_i, o_j, i_i]);
        cells.push(vec![o_j, i_j, i_i]);
    }
    C64::build(2, coords, &cells)
}
