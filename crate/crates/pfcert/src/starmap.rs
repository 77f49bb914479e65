//! Star-shapedness radii, the piecewise-affine star reflection and its
//! appendix contraction counterpart, pullback transfer constants, and
//! numeric verification of the constructed maps.

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::constants::LebesgueExponent;
use crate::geometry::{
    self, face_reflection, geometry_of, point_in_simplex, simplices_interior_overlap,
    AffineMap, GeometryError,
};
use crate::mesh::{MeshError, Simplex, SimplicialComplex};
use crate::scalar::Real;

/// Errors from star-map construction.
#[derive(Debug, thiserror::Error)]
pub enum StarMapError {
    #[error("{0:?} is not an interior simplex of dimension below n")]
    NotInteriorSimplex(Simplex),
    #[error("star-shape verification failed: boundary plane at distance {distance} < radius {radius}")]
    StarShapeViolation { distance: f64, radius: f64 },
    #[error("the cell is the whole star; the complement is empty")]
    EmptyComplement,
    #[error("degenerate pivot: the barycenters of S and S' coincide")]
    PivotDegenerate,
    #[error("cell {0} does not belong to the star")]
    CellNotInStar(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Star-shapedness data of a local star.
#[derive(Debug, Clone)]
pub struct StarShapeInfo<R: Real> {
    /// Barycenter of the center simplex `S`.
    pub center: DVector<R>,
    /// Radius `ϱ = h/(ℓ+1)` of a ball around the center with respect to
    /// which the star is star-shaped.
    pub radius: R,
    /// Dimension of `S`.
    pub ell: usize,
    /// The governing height `h`: the minimum height of any vertex of `S`
    /// within any cell of the star. (Taking the minimum is what the
    /// barycentric-subdivision argument requires.)
    pub height: R,
}

/// Component of `v` orthogonal to the span of the columns of `basis`.
fn residual<R: Real>(basis: &DMatrix<R>, v: &DVector<R>) -> DVector<R> {
    if basis.ncols() == 0 {
        return v.clone();
    }
    let qr = basis.clone().qr();
    let q = qr.q();
    v - &q * (q.transpose() * v)
}

/// Distance from a point to the affine hull of a set of points.
fn distance_to_hull<R: Real>(pts: &[&DVector<R>], x: &DVector<R>) -> R {
    let n = pts[0].len();
    let mut basis = DMatrix::zeros(n, pts.len() - 1);
    for (j, p) in pts[1..].iter().enumerate() {
        basis.set_column(j, &(*p - pts[0]));
    }
    residual(&basis, &(x - pts[0])).norm()
}

/// Computes the star-shapedness radius of the star of `s` and verifies that
/// the ball clears every boundary hyperplane of the star.
pub fn star_inradius<R: Real>(
    c: &SimplicialComplex<R>,
    s: &Simplex,
) -> Result<StarShapeInfo<R>, StarMapError> {
    let n = c.n();
    if s.dim() >= n || c.is_boundary_simplex(s) {
        return Err(StarMapError::NotInteriorSimplex(s.clone()));
    }
    let star = c.star(s)?;
    let ell = s.dim();

    // h = minimum height of any vertex of S within any star cell.
    let mut h = R::infinity();
    for &ci in &star.cell_indices {
        let cell = &c.cells()[ci];
        let pts = c.simplex_points(cell);
        let geo = geometry_of(&pts)?;
        for (pos, &v) in cell.vertices().iter().enumerate() {
            if s.has_vertex(v) {
                h = <R as Float>::min(h, geo.heights[pos]);
            }
        }
    }
    let radius = h / R::num_usize(ell + 1);

    // Barycenter of S.
    let s_pts = c.simplex_points(s);
    let mut center = DVector::zeros(n);
    for p in &s_pts {
        center += *p;
    }
    center /= R::num_usize(s_pts.len());

    // Boundary hyperplane check: the ball must clear the affine hull of
    // every boundary face of the star subcomplex.
    let sub = star.to_subcomplex(c);
    for f in sub.boundary_faces() {
        let pts = sub.simplex_points(&f);
        let dist = distance_to_hull(&pts, &center);
        if dist < radius * R::num(1.0 - 1e-9) {
            return Err(StarMapError::StarShapeViolation {
                distance: dist.as_f64(),
                radius: radius.as_f64(),
            });
        }
    }
    Ok(StarShapeInfo {
        center,
        radius,
        ell,
        height: h,
    })
}

/// Which closed-form singular-value family a piece belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceKind {
    /// Star reflection piece: reduced matrix `[[-ρ, 0], [-(1+ρ)tanβ, 1]]`.
    Theta,
    /// Contraction piece: reduced matrix `[[ρ/(1+ρ), 0], [-tanβ/(1+ρ), 1]]`.
    Phi,
    /// Plain face reflection (the improved construction at `ℓ = n-1`).
    Reflection,
}

/// Closed-form data of one affine piece.
#[derive(Debug, Clone)]
pub struct PieceMeta<R> {
    pub kind: PieceKind,
    pub rho: R,
    pub tan_beta: R,
    /// Closed-form largest singular value.
    pub sigma_max: R,
    /// Closed-form smallest singular value; the remaining `n-2` equal one.
    pub sigma_min: R,
    /// Closed-form absolute determinant.
    pub det: R,
}

/// One affine piece of a piecewise map: a simplex domain and the map on it.
#[derive(Debug, Clone)]
pub struct Piece<R: Real> {
    pub domain: Vec<DVector<R>>,
    pub map: AffineMap<R>,
    pub meta: PieceMeta<R>,
}

/// A piecewise-affine map: explicit affine pieces with disjoint interiors,
/// extended by the identity elsewhere.
#[derive(Debug, Clone)]
pub struct PiecewiseAffineMap<R: Real> {
    pub n: usize,
    pub pieces: Vec<Piece<R>>,
    /// Whether the map's domain extends beyond the pieces (where it acts as
    /// the identity); transfer constants then include the factor one.
    pub identity_complement: bool,
    /// Faces along which the map is required to be the identity.
    pub identity_faces: Vec<Vec<DVector<R>>>,
    /// Dimension of the center simplex the construction was built around.
    pub ell: usize,
    /// The admissible pivot weight `ρ` shared by all pieces.
    pub rho: R,
    /// Closed-form bound on the largest singular value over all pieces
    /// (the `μ`-type bound with `tanβ` replaced by its shape-measure bound).
    pub mu: R,
    /// Closed-form absolute determinant of each piece.
    pub det_bound: R,
}

impl<R: Real> PiecewiseAffineMap<R> {
    /// Evaluates the map at a point: the first piece containing the point
    /// applies; elsewhere the identity.
    pub fn eval(&self, x: &DVector<R>, tol: R) -> DVector<R> {
        for piece in &self.pieces {
            let pts: Vec<&DVector<R>> = piece.domain.iter().collect();
            if point_in_simplex(&pts, x, tol) {
                return piece.map.apply(x);
            }
        }
        x.clone()
    }
}

/// The two barycenters and the pieces of the double barycentric split of a
/// cell `T` at `z_S` and `z_{S'}`.
struct SplitData<R: Real> {
    z_s: DVector<R>,
    z_sp: DVector<R>,
    /// For each piece: the domain vertices, with the position of `z_{S'}`
    /// recorded so it can be replaced by an image vertex.
    pieces: Vec<(Vec<DVector<R>>, usize)>,
}

/// Splits the cell `t_cell` by barycentric refinement of `S` at `z_S` and of
/// the complementary simplex `S'` at `z_{S'}`.
fn double_split<R: Real>(
    c: &SimplicialComplex<R>,
    s: &Simplex,
    t_cell: usize,
) -> Result<SplitData<R>, StarMapError> {
    let cell = &c.cells()[t_cell];
    let s_prime = cell
        .complement_within(s)
        .ok_or_else(|| StarMapError::NotInteriorSimplex(s.clone()))?;

    let bary = |sx: &Simplex| -> DVector<R> {
        let pts = c.simplex_points(sx);
        let mut z = DVector::zeros(c.n());
        for p in &pts {
            z += *p;
        }
        z / R::num_usize(pts.len())
    };
    let z_s = bary(s);
    let z_sp = bary(&s_prime);

    let sv = s.vertices();
    let tv = s_prime.vertices();
    let mut pieces = Vec::new();
    for &si in sv {
        for &tj in tv {
            let mut domain = vec![z_s.clone(), z_sp.clone()];
            for &v in sv {
                if v != si {
                    domain.push(c.vertex(v).clone());
                }
            }
            for &v in tv {
                if v != tj {
                    domain.push(c.vertex(v).clone());
                }
            }
            // For ℓ = 0 (or dim S' = 0) the corresponding refinement is
            // trivial and every choice of omitted vertex coincides.
            if domain.len() == c.n() + 1 {
                pieces.push((domain, 1));
            }
        }
        if sv.len() == 1 {
            break;
        }
    }
    Ok(SplitData { z_s, z_sp, pieces })
}

/// Height/offset decomposition of `z_{S'} - z_S` relative to the face of a
/// piece opposite `z_{S'}`: returns `(‖h‖, tanβ)`.
fn height_decomposition<R: Real>(
    domain: &[DVector<R>],
    z_sp_pos: usize,
    z_s: &DVector<R>,
    z_sp: &DVector<R>,
) -> (R, R) {
    let n = z_s.len();
    let face: Vec<&DVector<R>> = domain
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != z_sp_pos)
        .map(|(_, p)| p)
        .collect();
    let mut basis = DMatrix::zeros(n, face.len() - 1);
    for (j, p) in face[1..].iter().enumerate() {
        basis.set_column(j, &(*p - face[0]));
    }
    let d = z_sp - z_s;
    let h = residual(&basis, &d);
    let hn = h.norm();
    let bn = (&d - &h).norm();
    (hn, bn / hn)
}

/// Closed-form singular values of the reduced reflection-type matrix
/// `[[ -ρ, 0 ], [ -(1+ρ)tanβ, 1 ]]`.
fn theta_singular_values<R: Real>(rho: R, tan_beta: R) -> (R, R) {
    let one = R::one();
    let half = R::num(0.5);
    let a = <R as Float>::sqrt(
        (one + rho) * (one + rho) + (one + rho) * (one + rho) * tan_beta * tan_beta,
    );
    let b = <R as Float>::sqrt(
        (one - rho) * (one - rho) + (one + rho) * (one + rho) * tan_beta * tan_beta,
    );
    (half * (a + b), half * (a - b))
}

/// Closed-form singular values of the reduced contraction matrix
/// `[[ ρ/(1+ρ), 0 ], [ -tanβ/(1+ρ), 1 ]]`.
fn phi_singular_values<R: Real>(rho: R, tan_beta: R) -> (R, R) {
    let one = R::one();
    let two = R::num(2.0);
    let denom = two * (one + rho);
    let a = <R as Float>::sqrt(
        (two * rho + one) * (two * rho + one) + tan_beta * tan_beta,
    ) / denom;
    let b = <R as Float>::sqrt(one + tan_beta * tan_beta) / denom;
    (a + b, a - b)
}

/// Builds the star reflection `Ξ₁ : T → U` for the star of `s` and a cell
/// `t_cell` of that star, where `U` is the closure of the star minus `T`.
///
/// The construction follows the double barycentric split of `T` at `z_S`
/// and `z_{S'}`, with pivot `y = z_S - ρ·(z_{S'} - z_S)` and the maximal
/// admissible `ρ = min(1, ϱ/‖z_{S'} - z_S‖)`. For `ℓ = n-1` the plain face
/// reflection is strictly better and used instead.
pub fn build_star_reflection<R: Real>(
    c: &SimplicialComplex<R>,
    s: &Simplex,
    t_cell: usize,
) -> Result<PiecewiseAffineMap<R>, StarMapError> {
    let n = c.n();
    let info = star_inradius(c, s)?;
    let star = c.star(s)?;
    if !star.cell_indices.contains(&t_cell) {
        return Err(StarMapError::CellNotInStar(t_cell));
    }
    if star.cell_indices.len() < 2 {
        return Err(StarMapError::EmptyComplement);
    }
    let cell = &c.cells()[t_cell];
    let geo = geometry_of(&c.simplex_points(cell))?;

    // Interface faces of T containing S: the map must be the identity there.
    let identity_faces: Vec<Vec<DVector<R>>> = cell
        .facets()
        .filter(|(_, f)| f.contains(s))
        .map(|(_, f)| c.simplex_points(&f).into_iter().cloned().collect())
        .collect();

    if s.dim() + 1 == n {
        // Improved construction: S is a shared facet, the star has exactly
        // two cells, and the face reflection maps T onto the other cell.
        let other = *star
            .cell_indices
            .iter()
            .find(|&&ci| ci != t_cell)
            .expect("two-cell star");
        let refl = face_reflection(c, t_cell, other)?;
        let det = <R as Float>::abs(refl.map.det);
        let meta = PieceMeta {
            kind: PieceKind::Reflection,
            rho: det,
            tan_beta: <R as Float>::abs(refl.c),
            sigma_max: refl.sigma_plus,
            sigma_min: refl.sigma_minus,
            det,
        };
        let domain: Vec<DVector<R>> =
            c.simplex_points(cell).into_iter().cloned().collect();
        let mu = refl.sigma_plus;
        return Ok(PiecewiseAffineMap {
            n,
            pieces: vec![Piece {
                domain,
                map: refl.map,
                meta,
            }],
            identity_complement: false,
            identity_faces,
            ell: s.dim(),
            rho: det,
            mu,
            det_bound: det,
        });
    }

    let split = double_split(c, s, t_cell)?;
    let dir = &split.z_sp - &split.z_s;
    let dist = dir.norm();
    if !(dist > R::zero()) {
        return Err(StarMapError::PivotDegenerate);
    }
    let rho = <R as Float>::min(R::one(), info.radius / dist);
    let y = &split.z_s - &dir * rho;

    let mut pieces = Vec::with_capacity(split.pieces.len());
    for (domain, z_sp_pos) in &split.pieces {
        let mut image = domain.clone();
        image[*z_sp_pos] = y.clone();
        let src: Vec<&DVector<R>> = domain.iter().collect();
        let dst: Vec<&DVector<R>> = image.iter().collect();
        let map = AffineMap::interpolating(&src, &dst)?;
        let (_, tan_beta) = height_decomposition(domain, *z_sp_pos, &split.z_s, &split.z_sp);
        let (sigma_max, sigma_min) = theta_singular_values(rho, tan_beta);
        pieces.push(Piece {
            domain: domain.clone(),
            map,
            meta: PieceMeta {
                kind: PieceKind::Theta,
                rho,
                tan_beta,
                sigma_max,
                sigma_min,
                det: rho,
            },
        });
    }

    // μ_{T,ℓ}: the closed-form σ₁ bound with tanβ replaced by (n-ℓ)·κ_A(T).
    let ell = s.dim();
    let tb_bound = R::num_usize(n - ell) * geo.kappa_a;
    let (mu, _) = theta_singular_values(rho, tb_bound);

    Ok(PiecewiseAffineMap {
        n,
        pieces,
        identity_complement: false,
        identity_faces,
        ell,
        rho,
        mu,
        det_bound: rho,
    })
}

/// Builds the contraction `Ξ₂` mapping the star of `s` onto the closure of
/// the star minus the cell `t_cell`, the identity away from `T` and its
/// mirror wedge.
pub fn build_star_contraction<R: Real>(
    c: &SimplicialComplex<R>,
    s: &Simplex,
    t_cell: usize,
) -> Result<PiecewiseAffineMap<R>, StarMapError> {
    let n = c.n();
    let info = star_inradius(c, s)?;
    let star = c.star(s)?;
    if !star.cell_indices.contains(&t_cell) {
        return Err(StarMapError::CellNotInStar(t_cell));
    }
    if star.cell_indices.len() < 2 {
        return Err(StarMapError::EmptyComplement);
    }
    let cell = &c.cells()[t_cell];
    let geo = geometry_of(&c.simplex_points(cell))?;

    let split = double_split(c, s, t_cell)?;
    let dir = &split.z_sp - &split.z_s;
    let dist = dir.norm();
    if !(dist > R::zero()) {
        return Err(StarMapError::PivotDegenerate);
    }
    let rho = <R as Float>::min(R::one(), info.radius / dist);
    let y = &split.z_s - &dir * rho;

    // The contraction formula is the identity exactly where the pivot
    // coordinate λ equals -ρ; within the wedges that set reduces to the
    // pivot point itself, which is what gets recorded and verified.
    let mut pieces = Vec::new();
    let identity_faces = vec![vec![y.clone()]];
    for (domain, z_sp_pos) in &split.pieces {
        let (_, tan_beta) = height_decomposition(domain, *z_sp_pos, &split.z_s, &split.z_sp);
        // Φ is one affine map on the union of the piece and its mirror:
        // x ↦ x − [λ(x) + ρ]/(1+ρ) · d with λ(x) = ⟨h, x - z_S⟩/‖h‖·/‖...‖
        // realized by vertex interpolation: z_{S'} ↦ z_S, every other
        // vertex v (with λ(v) = 0) ↦ v − ρ/(1+ρ)·d.
        let shift = &dir * (rho / (R::one() + rho));
        let mut image = Vec::with_capacity(domain.len());
        for (i, v) in domain.iter().enumerate() {
            if i == *z_sp_pos {
                image.push(split.z_s.clone());
            } else {
                image.push(v - &shift);
            }
        }
        let src: Vec<&DVector<R>> = domain.iter().collect();
        let dst: Vec<&DVector<R>> = image.iter().collect();
        let map = AffineMap::interpolating(&src, &dst)?;
        let (sigma_max, sigma_min) = phi_singular_values(rho, tan_beta);
        let det = rho / (R::one() + rho);
        let meta = PieceMeta {
            kind: PieceKind::Phi,
            rho,
            tan_beta,
            sigma_max,
            sigma_min,
            det,
        };
        // Mirror piece: the same affine map applies on the reflected wedge.
        let mut mirror = domain.clone();
        mirror[*z_sp_pos] = y.clone();
        pieces.push(Piece {
            domain: domain.clone(),
            map: map.clone(),
            meta: meta.clone(),
        });
        pieces.push(Piece {
            domain: mirror,
            map,
            meta,
        });
    }

    let ell = s.dim();
    let tb_bound = R::num_usize(n - ell) * geo.kappa_a;
    let (mu, _) = phi_singular_values(rho, tb_bound);

    Ok(PiecewiseAffineMap {
        n,
        pieces,
        identity_complement: true,
        identity_faces,
        ell,
        rho,
        mu,
        det_bound: rho / (R::one() + rho),
    })
}

/// Pullback transfer constants of a piecewise-affine map at degree `k` and
/// exponent `p`.
#[derive(Debug, Clone, Copy)]
pub struct TransferConstants<R> {
    pub k: usize,
    /// `max over pieces of σ₁⋯σ_k·|det|^{-1/p}`.
    pub forward: R,
    /// `max over pieces of σ_n⁻¹⋯σ_{n-k+1}⁻¹·|det|^{1/p}`.
    pub inverse: R,
    /// The closed-form `μ`-based bound on `forward`.
    pub bound_mu: R,
}

/// Computes exact per-piece transfer constants and the closed-form bound.
/// Maps with an identity complement include the identity's factor one.
pub fn transfer_constants<R: Real>(
    map: &PiecewiseAffineMap<R>,
    k: usize,
    p: LebesgueExponent<R>,
) -> Result<TransferConstants<R>, GeometryError> {
    let mut forward = if map.identity_complement || map.pieces.is_empty() {
        R::one()
    } else {
        R::zero()
    };
    let mut inverse = forward;
    for piece in &map.pieces {
        forward = <R as Float>::max(forward, geometry::pullback_factor(&piece.map, k, p)?);
        inverse = <R as Float>::max(
            inverse,
            geometry::pullback_factor_inverse(&piece.map, k, p)?,
        );
    }
    // Closed-form bound: singular values bounded by μ ≥ σ₁, ones, and
    // det/μ ≤ σ_n, with the exact per-piece determinant value.
    let n = map.n;
    let mut sv = vec![R::one(); n];
    sv[0] = mu_of(map);
    sv[n - 1] = map.det_bound / sv[0];
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut prod = R::one();
    for s in sv.iter().take(k) {
        prod *= *s;
    }
    let mut bound_mu = prod * p.root_inv(map.det_bound);
    if map.identity_complement {
        bound_mu = <R as Float>::max(bound_mu, R::one());
    }
    Ok(TransferConstants {
        k,
        forward,
        inverse,
        bound_mu,
    })
}

fn mu_of<R: Real>(map: &PiecewiseAffineMap<R>) -> R {
    <R as Float>::max(map.mu, R::one())
}

/// Outcome of [`verify_piecewise_map`].
#[derive(Debug, Clone, Default)]
pub struct MapVerification {
    pub failures: Vec<String>,
}

impl MapVerification {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks a constructed piecewise map: continuity across shared piece
/// vertices, injectivity via pairwise image-overlap, identity along the
/// recorded faces, and agreement of the closed-form singular data with the
/// numeric SVD. Tolerances are relative at `1e-10` (continuity `1e-12`).
pub fn verify_piecewise_map<R: Real>(map: &PiecewiseAffineMap<R>) -> MapVerification {
    let mut report = MapVerification::default();
    let scale = map
        .pieces
        .iter()
        .flat_map(|p| p.domain.iter())
        .map(|v| v.norm())
        .fold(R::one(), <R as Float>::max);
    let tol_cont = R::num(1e-12) * scale;
    let tol_rel = R::num(1e-10);

    // Continuity: pieces must agree at shared domain vertices.
    for i in 0..map.pieces.len() {
        for j in i + 1..map.pieces.len() {
            let (pi, pj) = (&map.pieces[i], &map.pieces[j]);
            for v in &pi.domain {
                if pj.domain.iter().any(|w| (w - v).norm() <= tol_cont) {
                    let d = (pi.map.apply(v) - pj.map.apply(v)).norm();
                    if d > tol_cont * R::num(10.0) {
                        report.failures.push(format!(
                            "pieces {i} and {j} disagree at a shared vertex by {:.3e}",
                            d.as_f64()
                        ));
                    }
                }
            }
        }
    }

    // Injectivity: images of distinct pieces must not overlap.
    for i in 0..map.pieces.len() {
        for j in i + 1..map.pieces.len() {
            let img = |p: &Piece<R>| -> Vec<DVector<R>> {
                p.domain.iter().map(|v| p.map.apply(v)).collect()
            };
            let ii = img(&map.pieces[i]);
            let jj = img(&map.pieces[j]);
            let ri: Vec<&DVector<R>> = ii.iter().collect();
            let rj: Vec<&DVector<R>> = jj.iter().collect();
            if simplices_interior_overlap(&ri, &rj, R::num(1e-10)) {
                report
                    .failures
                    .push(format!("images of pieces {i} and {j} overlap"));
            }
        }
    }

    // Identity along the recorded faces, sampled on a barycentric grid.
    for (fi, face) in map.identity_faces.iter().enumerate() {
        for sample in barycentric_grid::<R>(face.len(), 4) {
            let mut x = DVector::zeros(map.n);
            for (w, pt) in sample.iter().zip(face.iter()) {
                x += pt * *w;
            }
            let y = map.eval(&x, tol_cont * R::num(100.0));
            let d = (&y - &x).norm();
            if d > tol_cont * R::num(100.0) {
                report.failures.push(format!(
                    "identity violated on face {fi} by {:.3e}",
                    d.as_f64()
                ));
                break;
            }
        }
    }

    // Closed-form singular data versus numeric SVD.
    for (i, piece) in map.pieces.iter().enumerate() {
        let sv = &piece.map.singular_values;
        let top = sv[0];
        let bottom = sv[sv.len() - 1];
        let rel = |x: R, y: R| <R as Float>::abs(x - y) / <R as Float>::max(y, R::num(1e-30));
        if rel(top, piece.meta.sigma_max) > tol_rel {
            report.failures.push(format!(
                "piece {i}: σ_max {:.12} vs closed form {:.12}",
                top.as_f64(),
                piece.meta.sigma_max.as_f64()
            ));
        }
        if rel(bottom, piece.meta.sigma_min) > tol_rel {
            report.failures.push(format!(
                "piece {i}: σ_min {:.12} vs closed form {:.12}",
                bottom.as_f64(),
                piece.meta.sigma_min.as_f64()
            ));
        }
        for mid in &sv[1..sv.len() - 1] {
            if <R as Float>::abs(*mid - R::one()) > tol_rel {
                report
                    .failures
                    .push(format!("piece {i}: interior singular value {:.12} ≠ 1", mid.as_f64()));
            }
        }
        let adet = <R as Float>::abs(piece.map.det);
        if rel(adet, piece.meta.det) > tol_rel {
            report.failures.push(format!(
                "piece {i}: |det| {:.12} vs closed form {:.12}",
                adet.as_f64(),
                piece.meta.det.as_f64()
            ));
        }
        if piece.meta.sigma_max > mu_of(map) * (R::one() + tol_rel)
            && piece.meta.kind != PieceKind::Reflection
        {
            report.failures.push(format!(
                "piece {i}: σ_max {:.12} exceeds μ bound {:.12}",
                piece.meta.sigma_max.as_f64(),
                map.mu.as_f64()
            ));
        }
    }

    // Pieces tile their union without interior overlap.
    for i in 0..map.pieces.len() {
        for j in i + 1..map.pieces.len() {
            let ri: Vec<&DVector<R>> = map.pieces[i].domain.iter().collect();
            let rj: Vec<&DVector<R>> = map.pieces[j].domain.iter().collect();
            if simplices_interior_overlap(&ri, &rj, R::num(1e-10)) {
                report
                    .failures
                    .push(format!("domains of pieces {i} and {j} overlap"));
            }
        }
    }
    report
}

/// All nonnegative integer compositions of `levels` into `m` parts, scaled
/// to barycentric weights.
fn barycentric_grid<R: Real>(m: usize, levels: usize) -> Vec<Vec<R>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; m];
    fn rec(i: usize, left: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i + 1 == current.len() {
            current[i] = left;
            out.push(current.clone());
            return;
        }
        for v in 0..=left {
            current[i] = v;
            rec(i + 1, left - v, current, out);
        }
    }
    let mut raw = Vec::new();
    rec(0, levels, &mut current, &mut raw);
    for comp in raw {
        out.push(
            comp.iter()
                .map(|&v| R::num_usize(v) / R::num_usize(levels))
                .collect(),
        );
    }
    out
}
