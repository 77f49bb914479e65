//! Metric quantities of simplices and simplex pairs: volumes, diameters,
//! heights, shape measures, mesh ratios, face reflections, and affine
//! pullback factors.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::constants::LebesgueExponent;
use crate::mesh::SimplicialComplex;
use crate::scalar::Real;

/// Errors from geometric computations.
#[derive(Debug, Clone, thiserror::Error)]
pub enum GeometryError {
    #[error("simplex is degenerate (volume {0:e})")]
    Degenerate(f64),
    #[error("cells are not face neighbors (shared vertices: {0})")]
    NotFaceNeighbors(usize),
    #[error("affine map is singular")]
    SingularMap,
}

/// Factorial as a scalar; arguments stay tiny (at most the dimension plus
/// one).
pub fn factorial<R: Real>(k: usize) -> R {
    (1..=k).fold(R::one(), |acc, i| acc * R::num_usize(i))
}

/// Matrix whose columns are `p_i - p_0` for `i = 1..d`.
fn edge_matrix<R: Real>(pts: &[&DVector<R>]) -> DMatrix<R> {
    let n = pts[0].len();
    let d = pts.len() - 1;
    DMatrix::from_fn(n, d, |r, c| pts[c + 1][r] - pts[0][r])
}

/// Unsigned volume of the simplex spanned by `pts` (a `d`-simplex embedded in
/// `n`-space, `d <= n`): `sqrt(det(EᵀE)) / d!` with `E` the edge matrix.
pub fn simplex_volume<R: Real>(pts: &[&DVector<R>]) -> R {
    let d = pts.len() - 1;
    if d == 0 {
        return R::one();
    }
    let e = edge_matrix(pts);
    let g = e.transpose() * &e;
    let det = g.determinant();
    let det = if det > R::zero() { det } else { R::zero() };
    <R as Float>::sqrt(det) / factorial::<R>(d)
}

/// Largest pairwise distance among the points.
pub fn points_diameter<R: Real>(pts: &[&DVector<R>]) -> R {
    let mut best = R::zero();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = (pts[i] - pts[j]).norm();
            if d > best {
                best = d;
            }
        }
    }
    best
}

/// Sign of the determinant of the edge matrix (cells only, so the matrix is
/// square). Returns 0 for degenerate input.
pub fn orientation_sign<R: Real>(pts: &[&DVector<R>]) -> i8 {
    let e = edge_matrix(pts);
    let det = e.determinant();
    if det > R::zero() {
        1
    } else if det < R::zero() {
        -1
    } else {
        0
    }
}

/// Barycentric coordinates of `x` with respect to the simplex `pts`
/// (top-dimensional). Returns `None` when the simplex is degenerate.
pub fn barycentric<R: Real>(pts: &[&DVector<R>], x: &DVector<R>) -> Option<DVector<R>> {
    let e = edge_matrix(pts);
    let rhs = x - pts[0];
    let lu = e.lu();
    let mu = lu.solve(&rhs)?;
    let mut lambda = DVector::zeros(pts.len());
    let mut rest = R::zero();
    for i in 0..mu.len() {
        lambda[i + 1] = mu[i];
        rest += mu[i];
    }
    lambda[0] = R::one() - rest;
    Some(lambda)
}

/// Whether `x` lies in the closed simplex, with slack `tol` on the
/// barycentric coordinates (negative `tol` demands strict interiority).
pub fn point_in_simplex<R: Real>(pts: &[&DVector<R>], x: &DVector<R>, tol: R) -> bool {
    match barycentric(pts, x) {
        Some(l) => l.iter().all(|&c| c >= -tol),
        None => false,
    }
}

/// Whether the interiors of two top-dimensional simplices overlap by more
/// than the relative tolerance.
///
/// Uses the separating-axis test (exact for convex polytopes) in dimensions
/// one to three; higher dimensions fall back to testing a barycentric lattice
/// of interior points of one simplex for strict containment in the other.
pub fn simplices_interior_overlap<R: Real>(
    a: &[&DVector<R>],
    b: &[&DVector<R>],
    tol: R,
) -> bool {
    let n = a[0].len();
    let scale = <R as Float>::max(points_diameter(a), points_diameter(b));
    let eps = tol * scale;
    match n {
        1 => {
            let (amin, amax) = interval(a, &DVector::from_element(1, R::one()));
            let (bmin, bmax) = interval(b, &DVector::from_element(1, R::one()));
            <R as Float>::min(amax, bmax) - <R as Float>::max(amin, bmin) > eps
        }
        2 | 3 => {
            for axis in separating_axes(a, b, n) {
                let norm = axis.norm();
                if norm <= R::num(1e-300) {
                    continue;
                }
                let axis = axis / norm;
                let (amin, amax) = interval(a, &axis);
                let (bmin, bmax) = interval(b, &axis);
                if <R as Float>::min(amax, bmax) - <R as Float>::max(amin, bmin) <= eps {
                    return false;
                }
            }
            true
        }
        _ => {
            // Lattice fallback: strictly interior sample points of `a`.
            for l in barycentric_lattice::<R>(a.len(), 4) {
                let mut x = DVector::zeros(n);
                for (i, p) in a.iter().enumerate() {
                    x += *p * l[i];
                }
                if point_in_simplex(b, &x, -tol) {
                    return true;
                }
            }
            false
        }
    }
}

/// Projection interval of the points onto a direction.
fn interval<R: Real>(pts: &[&DVector<R>], axis: &DVector<R>) -> (R, R) {
    let mut lo = R::infinity();
    let mut hi = R::neg_infinity();
    for p in pts {
        let t = p.dot(axis);
        if t < lo {
            lo = t;
        }
        if t > hi {
            hi = t;
        }
    }
    (lo, hi)
}

/// Candidate separating axes for the SAT in 2D/3D: facet normals of both
/// simplices plus, in 3D, cross products of edge directions.
fn separating_axes<R: Real>(
    a: &[&DVector<R>],
    b: &[&DVector<R>],
    n: usize,
) -> Vec<DVector<R>> {
    let mut axes = Vec::new();
    if n == 2 {
        for pts in [a, b] {
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    let e = pts[j] - pts[i];
                    axes.push(DVector::from_vec(vec![-e[1], e[0]]));
                }
            }
        }
    } else {
        let cross = |u: &DVector<R>, v: &DVector<R>| {
            DVector::from_vec(vec![
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ])
        };
        let edges = |pts: &[&DVector<R>]| -> Vec<DVector<R>> {
            let mut out = Vec::new();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    out.push(pts[j] - pts[i]);
                }
            }
            out
        };
        let ea = edges(a);
        let eb = edges(b);
        for pts in [a, b] {
            // Facet normals: each facet omits one vertex.
            for omit in 0..pts.len() {
                let rest: Vec<&DVector<R>> = pts
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != omit)
                    .map(|(_, p)| *p)
                    .collect();
                axes.push(cross(&(rest[1] - rest[0]), &(rest[2] - rest[0])));
            }
        }
        for u in &ea {
            for v in &eb {
                axes.push(cross(u, v));
            }
        }
    }
    axes
}

/// Strictly positive barycentric lattice points with denominator `q` for a
/// simplex on `k` vertices.
fn barycentric_lattice<R: Real>(k: usize, q: usize) -> Vec<Vec<R>> {
    // Compositions of q into k positive parts.
    let mut out = Vec::new();
    let mut parts = vec![1usize; k];
    fn rec<R: Real>(parts: &mut Vec<usize>, i: usize, left: usize, out: &mut Vec<Vec<R>>, q: usize) {
        let k = parts.len();
        if i == k - 1 {
            parts[i] = left;
            out.push(parts.iter().map(|&p| R::num_usize(p) / R::num_usize(q)).collect());
            return;
        }
        let max = left - (k - 1 - i);
        for v in 1..=max {
            parts[i] = v;
            rec::<R>(parts, i + 1, left - v, out, q);
        }
    }
    if q >= k {
        rec::<R>(&mut parts, 0, q, &mut out, q);
    }
    out
}

/// Shape measure computed from exhaustive ordering enumeration, or the
/// documented fallback bound for high dimensions.
#[derive(Debug, Clone, Copy)]
pub struct KappaM<R> {
    pub value: R,
    /// False when the fallback bound `n · κ_A` was used instead of the exact
    /// enumeration (dimensions above four).
    pub exact: bool,
}

/// Metric data of a single top-dimensional simplex.
#[derive(Debug, Clone)]
pub struct SimplexGeometry<R: Real> {
    pub volume: R,
    pub diameter: R,
    /// Distance of each vertex to the affine hull of the opposite facet.
    pub heights: Vec<R>,
    pub min_height: R,
    pub barycenter: DVector<R>,
    /// Aspect shape measure: diameter over minimum height.
    pub kappa_a: R,
    /// Algebraic shape measure over affine maps from the reference simplex.
    pub kappa_m: KappaM<R>,
}

/// Computes all metric data of a simplex given its vertex coordinates.
pub fn geometry_of<R: Real>(pts: &[&DVector<R>]) -> Result<SimplexGeometry<R>, GeometryError> {
    let d = pts.len() - 1;
    let volume = simplex_volume(pts);
    let diameter = points_diameter(pts);
    let tol = R::num(1e-12) * <R as Float>::powi(diameter, d as i32);
    if !(volume > tol) {
        return Err(GeometryError::Degenerate(volume.as_f64()));
    }
    let mut heights = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        let facet: Vec<&DVector<R>> = pts
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, p)| *p)
            .collect();
        let facet_vol = simplex_volume(&facet);
        heights.push(R::num_usize(d) * volume / facet_vol);
    }
    let min_height = heights.iter().copied().fold(R::infinity(), <R as Float>::min);
    let mut barycenter = DVector::zeros(pts[0].len());
    for p in pts {
        barycenter += *p;
    }
    barycenter /= R::num_usize(pts.len());
    let kappa_a = diameter / min_height;
    let kappa_m = kappa_m_of(pts, kappa_a);
    Ok(SimplexGeometry {
        volume,
        diameter,
        heights,
        min_height,
        barycenter,
        kappa_a,
        kappa_m,
    })
}

/// Algebraic shape measure: the largest condition number `‖Jφ‖·‖Jφ⁻¹‖` over
/// affine maps `φ` from the reference simplex induced by vertex orderings.
///
/// Exhaustive over the `(n+1)!` orderings for `n ≤ 4`; beyond that the bound
/// `n·κ_A` is substituted and flagged.
fn kappa_m_of<R: Real>(pts: &[&DVector<R>], kappa_a: R) -> KappaM<R> {
    let d = pts.len() - 1;
    if d > 4 {
        return KappaM {
            value: R::num_usize(d) * kappa_a,
            exact: false,
        };
    }
    let mut worst = R::zero();
    for perm in (0..pts.len()).permutations(pts.len()) {
        let ordered: Vec<&DVector<R>> = perm.iter().map(|&i| pts[i]).collect();
        let e = edge_matrix(&ordered);
        let sv = singular_values(&e);
        let cond = sv[0] / sv[sv.len() - 1];
        if cond > worst {
            worst = cond;
        }
    }
    KappaM {
        value: worst,
        exact: true,
    }
}

/// Descending singular values of a square matrix.
pub fn singular_values<R: Real>(m: &DMatrix<R>) -> Vec<R> {
    let svd = m.clone().svd(false, false);
    let mut sv: Vec<R> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// An affine map `x ↦ L·x + t` with cached singular values and determinant.
#[derive(Debug, Clone)]
pub struct AffineMap<R: Real> {
    pub linear: DMatrix<R>,
    pub offset: DVector<R>,
    /// Descending singular values of the linear part.
    pub singular_values: Vec<R>,
    pub det: R,
}

impl<R: Real> AffineMap<R> {
    pub fn new(linear: DMatrix<R>, offset: DVector<R>) -> Self {
        let singular_values = singular_values(&linear);
        let det = linear.determinant();
        AffineMap {
            linear,
            offset,
            singular_values,
            det,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n), DVector::zeros(n))
    }

    /// The affine map sending the reference simplex's vertices
    /// `0, e_1, …, e_n` to the given points in order.
    pub fn from_reference(pts: &[&DVector<R>]) -> Self {
        Self::new(edge_matrix(pts), pts[0].clone())
    }

    /// The unique affine map sending `src[i] ↦ dst[i]` for `n+1` affinely
    /// independent source points.
    pub fn interpolating(
        src: &[&DVector<R>],
        dst: &[&DVector<R>],
    ) -> Result<Self, GeometryError> {
        let es = edge_matrix(src);
        let ed = edge_matrix(dst);
        let inv = es.clone().try_inverse().ok_or(GeometryError::SingularMap)?;
        let linear = ed * inv;
        let offset = dst[0] - &linear * src[0];
        Ok(Self::new(linear, offset))
    }

    pub fn apply(&self, x: &DVector<R>) -> DVector<R> {
        &self.linear * x + &self.offset
    }

    /// Largest singular value (operator norm of the linear part).
    pub fn norm(&self) -> R {
        self.singular_values[0]
    }

    pub fn inverse(&self) -> Result<Self, GeometryError> {
        let inv = self
            .linear
            .clone()
            .try_inverse()
            .ok_or(GeometryError::SingularMap)?;
        let offset = -(&inv * &self.offset);
        Ok(Self::new(inv, offset))
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        Self::new(
            &self.linear * &other.linear,
            &self.linear * &other.offset + &self.offset,
        )
    }
}

/// Norm factor for the pullback of `k`-forms along an affine map:
/// `σ₁⋯σ_k · |det|^{-1/p}`. The determinant factor is `1` at `p = ∞`.
pub fn pullback_factor<R: Real>(
    map: &AffineMap<R>,
    k: usize,
    p: LebesgueExponent<R>,
) -> Result<R, GeometryError> {
    let adet = <R as Float>::abs(map.det);
    if adet <= R::zero() {
        return Err(GeometryError::SingularMap);
    }
    let mut prod = R::one();
    for i in 0..k {
        prod *= map.singular_values[i];
    }
    Ok(prod * p.root_inv(adet))
}

/// Norm factor for the pullback along the inverse map, expressed through the
/// forward map's data: `σ_n⁻¹⋯σ_{n-k+1}⁻¹ · |det|^{1/p}`.
pub fn pullback_factor_inverse<R: Real>(
    map: &AffineMap<R>,
    k: usize,
    p: LebesgueExponent<R>,
) -> Result<R, GeometryError> {
    let adet = <R as Float>::abs(map.det);
    if adet <= R::zero() {
        return Err(GeometryError::SingularMap);
    }
    let nsv = map.singular_values.len();
    let mut prod = R::one();
    for i in 0..k {
        prod /= map.singular_values[nsv - 1 - i];
    }
    Ok(prod * p.root(adet))
}

/// A face reflection between two cells sharing a codimension-one face,
/// together with its closed-form singular data.
#[derive(Debug, Clone)]
pub struct FaceReflection<R: Real> {
    /// The unique affine map `T1 → T2` fixing the shared face pointwise.
    pub map: AffineMap<R>,
    /// Reduced-matrix entry `-h2/h1` (ratio of apex heights, negated).
    pub a: R,
    /// Reduced-matrix entry: in-plane apex displacement over `h1`.
    pub c: R,
    /// Closed-form largest singular value.
    pub sigma_plus: R,
    /// Closed-form smallest singular value; the remaining `n-2` equal one.
    pub sigma_minus: R,
}

/// Closed-form singular values of the reduced reflection matrix
/// `[[a, 0], [c, 1]]` via the stable quadratic-characteristic form.
pub fn reflection_singular_values<R: Real>(a: R, c: R) -> (R, R) {
    let s = R::one() + a * a + c * c;
    let disc = <R as Float>::sqrt(<R as Float>::max(s * s - R::num(4.0) * a * a, R::zero()));
    let two = R::num(2.0);
    let plus = <R as Float>::sqrt((s + disc) / two);
    let minus = <R as Float>::sqrt(<R as Float>::max((s - disc) / two, R::zero()));
    (plus, minus)
}

/// Builds the face reflection for two cells sharing exactly one
/// codimension-one face, from explicit vertex coordinates.
///
/// `face` holds the shared face's points; `apex1`/`apex2` are the opposite
/// vertices in the two cells.
pub fn face_reflection_points<R: Real>(
    face: &[&DVector<R>],
    apex1: &DVector<R>,
    apex2: &DVector<R>,
) -> Result<FaceReflection<R>, GeometryError> {
    let mut src: Vec<&DVector<R>> = face.to_vec();
    src.push(apex1);
    let mut dst: Vec<&DVector<R>> = face.to_vec();
    dst.push(apex2);
    let map = AffineMap::interpolating(&src, &dst)?;

    // Orthogonal decomposition of both apexes relative to the face plane.
    let origin = face[0];
    let e = edge_matrix(face);
    // Orthonormal basis of the face plane via thin QR.
    let qr = e.qr();
    let q = qr.q();
    let project = |v: &DVector<R>| -> DVector<R> { &q * (q.transpose() * v) };
    let d1 = apex1 - origin;
    let d2 = apex2 - origin;
    let b1 = project(&d1);
    let b2 = project(&d2);
    let h1 = (&d1 - &b1).norm();
    let h2 = (&d2 - &b2).norm();
    if h1 <= R::zero() || h2 <= R::zero() {
        return Err(GeometryError::SingularMap);
    }
    // The apexes lie on opposite sides of the face plane, hence the sign.
    let a = -(h2 / h1);
    let c = (&b2 - &b1).norm() / h1;
    let (sigma_plus, sigma_minus) = reflection_singular_values(a, c);
    Ok(FaceReflection {
        map,
        a,
        c,
        sigma_plus,
        sigma_minus,
    })
}

/// Builds the face reflection `Ξ: cell1 → cell2` within a complex.
pub fn face_reflection<R: Real>(
    c: &SimplicialComplex<R>,
    cell1: usize,
    cell2: usize,
) -> Result<FaceReflection<R>, GeometryError> {
    let s1 = &c.cells()[cell1];
    let s2 = &c.cells()[cell2];
    let shared = s1.intersection(s2);
    let shared = match shared {
        Some(s) if s.dim() + 1 == c.n() => s,
        Some(s) => return Err(GeometryError::NotFaceNeighbors(s.dim() + 1)),
        None => return Err(GeometryError::NotFaceNeighbors(0)),
    };
    let apex1 = s1.complement_within(&shared).ok_or(GeometryError::SingularMap)?;
    let apex2 = s2.complement_within(&shared).ok_or(GeometryError::SingularMap)?;
    let face_pts = c.simplex_points(&shared);
    face_reflection_points(
        &face_pts,
        c.vertex(apex1.vertices()[0]),
        c.vertex(apex2.vertices()[0]),
    )
}

/// Worst-case geometric ratios over cell pairs of a mesh.
#[derive(Debug, Clone, Copy)]
pub struct MeshRatios<R> {
    /// Largest volume ratio between face-neighboring cells (both
    /// directions).
    pub c_rho: R,
    /// Largest diameter ratio between intersecting cells.
    pub c_theta: R,
    /// Largest operator norm of a face reflection between neighboring cells.
    pub c_xi: R,
}

/// Computes the mesh ratios; a mesh without neighboring or intersecting
/// pairs reports ones by convention.
pub fn mesh_ratios<R: Real>(c: &SimplicialComplex<R>) -> MeshRatios<R> {
    let cells = c.cells();
    let mut c_rho = R::one();
    let mut c_theta = R::one();
    let mut c_xi = R::one();
    let geo: Vec<SimplexGeometry<R>> = cells
        .iter()
        .map(|s| geometry_of(&c.simplex_points(s)).expect("validated cells"))
        .collect();
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            let shared = cells[i].intersection(&cells[j]);
            if shared.is_none() {
                continue;
            }
            let ratio = <R as Float>::max(
                geo[i].diameter / geo[j].diameter,
                geo[j].diameter / geo[i].diameter,
            );
            c_theta = <R as Float>::max(c_theta, ratio);
            if shared.as_ref().map(|s| s.dim() + 1 == c.n()) == Some(true) {
                let vr = <R as Float>::max(
                    geo[i].volume / geo[j].volume,
                    geo[j].volume / geo[i].volume,
                );
                c_rho = <R as Float>::max(c_rho, vr);
                if let Ok(refl) = face_reflection(c, i, j) {
                    c_xi = <R as Float>::max(c_xi, refl.map.norm());
                }
                if let Ok(refl) = face_reflection(c, j, i) {
                    c_xi = <R as Float>::max(c_xi, refl.map.norm());
                }
            }
        }
    }
    MeshRatios { c_rho, c_theta, c_xi }
}

/// Convenience wrapper: geometry of cell `i` of a complex.
pub fn cell_geometry<R: Real>(
    c: &SimplicialComplex<R>,
    i: usize,
) -> Result<SimplexGeometry<R>, GeometryError> {
    geometry_of(&c.simplex_points(&c.cells()[i]))
}
