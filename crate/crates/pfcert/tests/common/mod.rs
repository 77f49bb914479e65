//! Shared helpers for the integration test suites.
#![allow(dead_code)]

use nalgebra::DVector;
use pfcert::mesh::SimplicialComplex;
use pfcert::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dv(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

pub fn example(name: &str) -> Complex {
    pfcert::examples::example_mesh(name)
        .expect("known example name")
        .expect("example mesh builds")
}

/// The reference simplex in dimension `n` (origin plus unit basis vectors).
pub fn reference_simplex(n: usize) -> Vec<DVector<f64>> {
    let mut pts = vec![DVector::zeros(n)];
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        pts.push(e);
    }
    pts
}

/// A single-cell complex over the reference simplex in dimension `n`.
pub fn reference_cell_complex(n: usize) -> Complex {
    let coords: Vec<Vec<f64>> = reference_simplex(n)
        .into_iter()
        .map(|v| v.iter().copied().collect())
        .collect();
    let cell: Vec<usize> = (0..=n).collect();
    SimplicialComplex::build(n, coords, &[cell]).expect("reference cell")
}

/// Random nondegenerate simplex with vertices in `[-1,1]^n`.
pub fn random_simplex(n: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    loop {
        let pts: Vec<DVector<f64>> = (0..=n)
            .map(|_| DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let refs: Vec<&DVector<f64>> = pts.iter().collect();
        let vol = pfcert::geometry::simplex_volume(&refs);
        let diam = pfcert::geometry::points_diameter(&refs);
        if vol > 1e-3 * diam.powi(n as i32) {
            return pts;
        }
    }
}

/// Random face-neighboring pair: a shared `(n-1)`-face, one apex on each
/// side of its hyperplane. Returns `(face, apex1, apex2)`.
pub fn random_face_pair(
    n: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<DVector<f64>>, DVector<f64>, DVector<f64>) {
    loop {
        let pts = random_simplex(n, rng);
        let face: Vec<DVector<f64>> = pts[..n].to_vec();
        let apex1 = pts[n].clone();
        // Decompose apex1 relative to the face plane, then place apex2 on
        // the opposite side with independent in-plane and normal parts.
        let origin = &face[0];
        let mut basis = nalgebra::DMatrix::<f64>::zeros(n, n - 1);
        for (j, p) in face[1..].iter().enumerate() {
            basis.set_column(j, &(p - origin));
        }
        let q = basis.qr().q();
        let d1 = &apex1 - origin;
        let inplane1 = &q * (q.transpose() * &d1);
        let normal1 = &d1 - &inplane1;
        let t: f64 = rng.random_range(0.2..2.0);
        let mut inplane2 = DVector::zeros(n);
        for j in 0..n - 1 {
            let c: f64 = rng.random_range(-1.0..1.0);
            inplane2 += q.column(j) * c;
        }
        let apex2 = origin + inplane2 - normal1 * t;
        let refs2: Vec<&DVector<f64>> = face.iter().chain(std::iter::once(&apex2)).collect();
        let vol2 = pfcert::geometry::simplex_volume(&refs2);
        let diam2 = pfcert::geometry::points_diameter(&refs2);
        if vol2 > 1e-3 * diam2.powi(n as i32) {
            return (face, apex1, apex2);
        }
    }
}

/// Regular hexagon fan: six equilateral unit triangles around the origin.
pub fn hexagon_fan() -> Complex {
    let mut coords = vec![vec![0.0, 0.0]];
    for i in 0..6 {
        let a = std::f64::consts::PI / 3.0 * i as f64;
        coords.push(vec![a.cos(), a.sin()]);
    }
    let cells: Vec<Vec<usize>> = (0..6).map(|i| vec![0, 1 + i, 1 + (i + 1) % 6]).collect();
    SimplicialComplex::build(2, coords, &cells).expect("hexagon fan")
}

/// A path-like strip of `m` triangles between two jittered rows of points.
/// Jitter can occasionally produce an invalid mesh; callers retry.
pub fn try_strip_mesh(
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Complex, pfcert::mesh::MeshError> {
    let cols = m / 2 + 2;
    let mut coords = Vec::new();
    for i in 0..cols {
        coords.push(vec![i as f64 + rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)]);
    }
    for i in 0..cols {
        coords.push(vec![
            i as f64 + 0.5 + rng.random_range(-0.2..0.2),
            1.0 + rng.random_range(-0.2..0.2),
        ]);
    }
    let b = |i: usize| i;
    let t = |i: usize| cols + i;
    let mut cells = Vec::new();
    for i in 0..cols - 1 {
        cells.push(vec![b(i), b(i + 1), t(i)]);
        cells.push(vec![b(i + 1), t(i + 1), t(i)]);
        if cells.len() >= m {
            break;
        }
    }
    cells.truncate(m.max(1));
    // Drop unused vertices and remap indices.
    let mut remap = vec![usize::MAX; coords.len()];
    let mut kept = Vec::new();
    for cell in &cells {
        for &v in cell {
            if remap[v] == usize::MAX {
                remap[v] = kept.len();
                kept.push(coords[v].clone());
            }
        }
    }
    let cells: Vec<Vec<usize>> = cells
        .iter()
        .map(|cell| cell.iter().map(|&v| remap[v]).collect())
        .collect();
    SimplicialComplex::build(2, kept, &cells)
}

/// Random triangulated 2-ball: a fan around an interior center point of a
/// star-shaped polygon, or a jittered strip.
pub fn random_2ball(rng: &mut ChaCha8Rng) -> Complex {
    loop {
        if rng.random_range(0..2) == 0 {
            // Fan around the origin.
            let m: usize = rng.random_range(3..=12);
            let mut angles: Vec<f64> = (0..m)
                .map(|i| {
                    2.0 * std::f64::consts::PI * (i as f64 + rng.random_range(0.05..0.95))
                        / m as f64
                })
                .collect();
            angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut coords = vec![vec![0.0, 0.0]];
            for &a in &angles {
                let r: f64 = rng.random_range(0.5..1.5);
                coords.push(vec![r * a.cos(), r * a.sin()]);
            }
            let cells: Vec<Vec<usize>> =
                (0..m).map(|i| vec![0, 1 + i, 1 + (i + 1) % m]).collect();
            if let Ok(c) = SimplicialComplex::build(2, coords, &cells) {
                return c;
            }
        } else {
            let m: usize = rng.random_range(2..=12);
            if let Ok(c) = try_strip_mesh(m, rng) {
                return c;
            }
        }
    }
}

/// A permissive search configuration for shelling searches in tests.
pub fn plain_search_config<'a>(
    seed: u64,
    budget: usize,
    step_cost: &'a dyn Fn(&[usize], usize, &pfcert::shelling::StepInfo) -> f64,
    total_cost: &'a dyn Fn(&pfcert::shelling::Shelling) -> f64,
) -> pfcert::shelling::SearchConfig<'a> {
    pfcert::shelling::SearchConfig {
        seed,
        per_root: 2,
        budget,
        step_cost,
        total_cost,
    }
}

pub fn rel_err(x: f64, target: f64) -> f64 {
    (x - target).abs() / target.abs().max(1e-300)
}
