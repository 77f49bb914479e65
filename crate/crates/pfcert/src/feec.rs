//! Reference Poincaré–Friedrichs constants at `p = 2` via lowest-order
//! Whitney-form generalized eigenvalue problems with full or partial
//! essential boundary conditions.
//!
//! This module is deliberately `f64`-only: the oracle's role is numerical
//! validation, not certified arithmetic.

use std::collections::HashMap;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::simplex_volume;
use crate::mesh::{MeshError, Simplex, SimplicialComplex};

type C64 = SimplicialComplex<f64>;

/// Errors from the finite element oracle.
#[derive(Debug, thiserror::Error)]
pub enum FeecError {
    #[error("uniform refinement supports dimensions 2 and 3, got {0}")]
    UnsupportedDimension(usize),
    #[error("invalid boundary selection: {0}")]
    InvalidBoundarySelection(String),
    #[error("form degree {k} out of range for dimension {n}")]
    DegreeOutOfRange { n: usize, k: usize },
    #[error("eigenvalue solver failed to converge: {0}")]
    SolverDivergence(String),
    #[error(
        "kernel misdetection: smallest positive candidate {lambda:.3e} is not separated from the kernel cluster (max {kernel_max:.3e})"
    )]
    KernelMisdetection { lambda: f64, kernel_max: f64 },
    #[error("mixed constraint requested but no constraint matrix is available (k = 0?)")]
    ConstraintUnavailable,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Essential boundary condition selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BcSelection {
    /// Natural boundary conditions everywhere.
    None,
    /// Essential boundary conditions on the whole boundary.
    All,
    /// Essential boundary conditions on the listed boundary faces, indexed
    /// into [`SimplicialComplex::boundary_faces`] order.
    Faces(Vec<usize>),
}

/// Uniform refinement: red 4-split in 2D; 8-split in 3D with the interior
/// diagonal chosen to minimize the longest resulting edge (equivalently the
/// shortest of the three octahedron diagonals), ties broken by vertex index.
pub fn uniform_refine(c: &C64) -> Result<C64, FeecError> {
    let n = c.n();
    if n != 2 && n != 3 {
        return Err(FeecError::UnsupportedDimension(n));
    }
    let mut coords: Vec<Vec<f64>> = c
        .coords()
        .iter()
        .map(|v| v.iter().copied().collect())
        .collect();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, coords: &mut Vec<Vec<f64>>| -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = midpoints.get(&key) {
            return m;
        }
        let m = coords.len();
        let pa = coords[a].clone();
        let pb = &coords[b];
        coords.push(pa.iter().zip(pb.iter()).map(|(x, y)| 0.5 * (x + y)).collect());
        midpoints.insert(key, m);
        m
    };

    let mut cells: Vec<Vec<usize>> = Vec::with_capacity(c.cells().len() << n);
    for cell in c.cells() {
        let v = cell.vertices();
        if n == 2 {
            let (a, b, cc) = (v[0], v[1], v[2]);
            let mab = midpoint(a, b, &mut coords);
            let mbc = midpoint(b, cc, &mut coords);
            let mac = midpoint(a, cc, &mut coords);
            cells.push(vec![a, mab, mac]);
            cells.push(vec![mab, b, mbc]);
            cells.push(vec![mac, mbc, cc]);
            cells.push(vec![mab, mbc, mac]);
        } else {
            // Edge midpoints keyed by local index pair.
            let mut m = [[0usize; 4]; 4];
            for i in 0..4 {
                for j in i + 1..4 {
                    m[i][j] = midpoint(v[i], v[j], &mut coords);
                    m[j][i] = m[i][j];
                }
            }
            // Corner tetrahedra.
            for i in 0..4 {
                let mut t = vec![v[i]];
                for j in 0..4 {
                    if j != i {
                        t.push(m[i][j]);
                    }
                }
                cells.push(t);
            }
            // Central octahedron: three candidate diagonals, each leaving a
            // 4-cycle of the remaining midpoints.
            let diagonals = [
                ((0, 1), (2, 3), [(0, 2), (0, 3), (1, 3), (1, 2)]),
                ((0, 2), (1, 3), [(0, 1), (0, 3), (2, 3), (1, 2)]),
                ((0, 3), (1, 2), [(0, 1), (0, 2), (2, 3), (1, 3)]),
            ];
            let edge_len = |a: usize, b: usize, coords: &[Vec<f64>]| -> f64 {
                coords[a]
                    .iter()
                    .zip(coords[b].iter())
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            };
            let mut best: Option<(f64, (usize, usize), [(usize, usize); 4])> = None;
            for &((i, j), (k, l), cycle) in &diagonals {
                let d1 = m[i][j];
                let d2 = m[k][l];
                let len = edge_len(d1, d2, &coords);
                let key = (d1.min(d2), d1.max(d2));
                let better = match &best {
                    None => true,
                    Some((bl, bkey, _)) => {
                        len < *bl || (len == *bl && key < (bkey.0.min(bkey.1), bkey.0.max(bkey.1)))
                    }
                };
                if better {
                    best = Some((len, (d1, d2), cycle));
                }
            }
            let (_, (d1, d2), cycle) = best.expect("three candidates");
            for i in 0..4 {
                let (a1, a2) = cycle[i];
                let (b1, b2) = cycle[(i + 1) % 4];
                cells.push(vec![d1, d2, m[a1][a2], m[b1][b2]]);
            }
        }
    }
    Ok(C64::build(n, coords, &cells)?)
}

/// The discrete de Rham complex of a mesh: degrees of freedom per degree
/// and exact integer signed incidence matrices.
pub struct DiscreteComplex {
    pub n: usize,
    /// `dof_counts[k]` = number of `k`-simplices.
    pub dof_counts: Vec<usize>,
    /// `incidence[k]` = `D_k` as triplets `(row: (k+1)-dof, col: k-dof, ±1)`.
    pub incidence: Vec<Vec<(usize, usize, i64)>>,
}

/// Builds the discrete complex (purely combinatorial, exact).
pub fn discrete_complex(c: &C64) -> DiscreteComplex {
    let n = c.n();
    let dof_counts: Vec<usize> = (0..=n).map(|k| c.skeleton(k).len()).collect();
    let mut incidence = Vec::with_capacity(n);
    for k in 0..n {
        let mut d_k = Vec::new();
        for (row, s) in c.skeleton(k + 1).iter().enumerate() {
            for (j, facet) in s.facets() {
                let col = c.simplex_index(&facet).expect("closed skeleton");
                let sign = if j % 2 == 0 { 1 } else { -1 };
                d_k.push((row, col, sign));
            }
        }
        incidence.push(d_k);
    }
    DiscreteComplex {
        n,
        dof_counts,
        incidence,
    }
}

/// Sparse symmetric matrix data in triplet form (deterministic order).
#[derive(Debug, Clone)]
pub struct SparseMatrixData {
    pub nrows: usize,
    pub ncols: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

impl SparseMatrixData {
    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for &(i, j, v) in &self.triplets {
            m[(i, j)] += v;
        }
        m
    }

    pub fn to_sparse(&self) -> SparseColMat<usize, f64> {
        let trips: Vec<Triplet<usize, usize, f64>> = self
            .triplets
            .iter()
            .map(|&(i, j, v)| Triplet::new(i, j, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trips)
            .expect("valid triplets")
    }
}

/// Mass and stiffness of the Whitney `k`-form space after essential
/// boundary condition deletion, plus the divergence constraint matrix
/// `B = M_k D_{k-1}` for the mixed formulation (present when `k ≥ 1`).
pub struct OperatorPair {
    pub k: usize,
    /// Kept `k`-dofs as indices into the full `k`-skeleton.
    pub kept: Vec<usize>,
    pub mass: SparseMatrixData,
    pub stiffness: SparseMatrixData,
    pub constraint: Option<SparseMatrixData>,
}

/// Determinant of the `rows × cols` minor of `g` (sizes `0..=3`).
fn minor_det(g: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    match rows.len() {
        0 => 1.0,
        1 => g[(rows[0], cols[0])],
        2 => {
            g[(rows[0], cols[0])] * g[(rows[1], cols[1])]
                - g[(rows[0], cols[1])] * g[(rows[1], cols[0])]
        }
        _ => {
            let k = rows.len();
            DMatrix::from_fn(k, k, |i, j| g[(rows[i], cols[j])]).determinant()
        }
    }
}

/// Local Whitney `k`-form mass matrix on one cell, over the lexicographic
/// `(k+1)`-subsets of the local vertices. Entries are exact: the Gram
/// matrix of the barycentric gradients is constant, and products of
/// barycentric coordinates integrate to `vol·(1+δ_ab)/((n+1)(n+2))`.
fn local_whitney_mass(points: &[&DVector<f64>], k: usize) -> (Vec<Vec<usize>>, DMatrix<f64>) {
    let n = points.len() - 1;
    let vol = simplex_volume(points);
    // Barycentric gradients: rows of the inverse edge matrix, plus the
    // negated sum for vertex 0.
    let b = DMatrix::from_fn(n, n, |i, j| points[j + 1][i] - points[0][i]);
    let binv = b.try_inverse().expect("nondegenerate cell");
    let mut grads = vec![DVector::zeros(n); n + 1];
    for i in 1..=n {
        grads[i] = binv.row(i - 1).transpose();
    }
    for i in 1..=n {
        let g = grads[i].clone();
        grads[0] -= g;
    }
    let gram = DMatrix::from_fn(n + 1, n + 1, |a, b2| grads[a].dot(&grads[b2]));

    let subsets: Vec<Vec<usize>> = (0..=n).combinations(k + 1).collect();
    let kfact: f64 = (1..=k).map(|i| i as f64).product::<f64>().max(1.0);
    let scale = kfact * kfact * vol / (((n + 1) * (n + 2)) as f64);
    let mut mass = DMatrix::zeros(subsets.len(), subsets.len());
    for (si, sigma) in subsets.iter().enumerate() {
        for (ti, tau) in subsets.iter().enumerate().skip(si) {
            let mut acc = 0.0;
            for (j, &a) in sigma.iter().enumerate() {
                let rows: Vec<usize> = sigma
                    .iter()
                    .enumerate()
                    .filter(|&(idx, _)| idx != j)
                    .map(|(_, &x)| x)
                    .collect();
                for (l, &b2) in tau.iter().enumerate() {
                    let cols: Vec<usize> = tau
                        .iter()
                        .enumerate()
                        .filter(|&(idx, _)| idx != l)
                        .map(|(_, &x)| x)
                        .collect();
                    let sign = if (j + l) % 2 == 0 { 1.0 } else { -1.0 };
                    let lam = if a == b2 { 2.0 } else { 1.0 };
                    acc += sign * lam * minor_det(&gram, &rows, &cols);
                }
            }
            let val = scale * acc;
            mass[(si, ti)] = val;
            mass[(ti, si)] = val;
        }
    }
    (subsets, mass)
}

/// Local signed incidence from local `k`-subsets to local `(k+1)`-subsets.
fn local_incidence(subs_k: &[Vec<usize>], subs_k1: &[Vec<usize>]) -> DMatrix<f64> {
    let index: HashMap<&[usize], usize> =
        subs_k.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let mut d = DMatrix::zeros(subs_k1.len(), subs_k.len());
    for (row, s) in subs_k1.iter().enumerate() {
        for j in 0..s.len() {
            let facet: Vec<usize> = s
                .iter()
                .enumerate()
                .filter(|&(idx, _)| idx != j)
                .map(|(_, &x)| x)
                .collect();
            let col = index[facet.as_slice()];
            d[(row, col)] = if j % 2 == 0 { 1.0 } else { -1.0 };
        }
    }
    d
}

/// Resolves a boundary selection to the set of deleted `k`-dofs.
fn deleted_dofs(c: &C64, k: usize, bc: &BcSelection) -> Result<Vec<bool>, FeecError> {
    let dofs = c.skeleton(k);
    let mut deleted = vec![false; dofs.len()];
    let faces: Vec<Simplex> = match bc {
        BcSelection::None => return Ok(deleted),
        BcSelection::All => c.boundary_faces(),
        BcSelection::Faces(list) => {
            let all = c.boundary_faces();
            let mut out = Vec::with_capacity(list.len());
            for &i in list {
                if i >= all.len() {
                    return Err(FeecError::InvalidBoundarySelection(format!(
                        "face index {i} out of range ({} boundary faces)",
                        all.len()
                    )));
                }
                out.push(all[i].clone());
            }
            out
        }
    };
    if k > c.n() - 1 {
        return Ok(deleted);
    }
    for (i, dof) in dofs.iter().enumerate() {
        if faces.iter().any(|f| f.contains(dof)) {
            deleted[i] = true;
        }
    }
    Ok(deleted)
}

/// Assembles the Whitney `k`-form mass and stiffness (and the mixed
/// constraint matrix for `k ≥ 1`) with the given essential boundary
/// selection imposed by dof deletion on the face closures.
pub fn assemble_whitney(
    c: &C64,
    k: usize,
    bc: &BcSelection,
) -> Result<OperatorPair, FeecError> {
    let n = c.n();
    if k > n {
        return Err(FeecError::DegreeOutOfRange { n, k });
    }
    let deleted = deleted_dofs(c, k, bc)?;
    let kept: Vec<usize> = (0..deleted.len()).filter(|&i| !deleted[i]).collect();
    let mut kept_pos = vec![usize::MAX; deleted.len()];
    for (p, &i) in kept.iter().enumerate() {
        kept_pos[i] = p;
    }
    let nk = kept.len();

    let mut mass = Mat::<f64>::zeros(nk, nk);
    let mut stiffness = Mat::<f64>::zeros(nk, nk);
    for cell in c.cells() {
        let pts = c.simplex_points(cell);
        let (subs_k, m_loc) = local_whitney_mass(&pts, k);
        // Global kept positions of the local k-dofs.
        let glob: Vec<usize> = subs_k
            .iter()
            .map(|sub| {
                let s = Simplex::new(sub.iter().map(|&l| cell.vertices()[l]).collect());
                let gi = c.simplex_index(&s).expect("closed skeleton");
                kept_pos[gi]
            })
            .collect();
        for (a, &ga) in glob.iter().enumerate() {
            if ga == usize::MAX {
                continue;
            }
            for (b, &gb) in glob.iter().enumerate() {
                if gb == usize::MAX {
                    continue;
                }
                mass[(ga, gb)] += m_loc[(a, b)];
            }
        }
        if k < n {
            let (subs_k1, m1_loc) = local_whitney_mass(&pts, k + 1);
            let d_loc = local_incidence(&subs_k, &subs_k1);
            let s_loc = d_loc.transpose() * m1_loc * d_loc;
            for (a, &ga) in glob.iter().enumerate() {
                if ga == usize::MAX {
                    continue;
                }
                for (b, &gb) in glob.iter().enumerate() {
                    if gb == usize::MAX {
                        continue;
                    }
                    stiffness[(ga, gb)] += s_loc[(a, b)];
                }
            }
        }
    }

    // Mixed constraint B = M_k D̃_{k-1} over kept dofs of both degrees.
    let constraint = if k >= 1 {
        let deleted_prev = deleted_dofs(c, k - 1, bc)?;
        let kept_prev: Vec<usize> = (0..deleted_prev.len()).filter(|&i| !deleted_prev[i]).collect();
        let mut kept_prev_pos = vec![usize::MAX; deleted_prev.len()];
        for (p, &i) in kept_prev.iter().enumerate() {
            kept_prev_pos[i] = p;
        }
        let dc = discrete_complex(c);
        // D̃_{k-1} as dense (kept_k × kept_{k-1}).
        let mut d = Mat::<f64>::zeros(nk, kept_prev.len());
        for &(row, col, sign) in &dc.incidence[k - 1] {
            let r = kept_pos[row];
            let cc = kept_prev_pos[col];
            if r != usize::MAX && cc != usize::MAX {
                d[(r, cc)] += sign as f64;
            }
        }
        let b = &mass * &d;
        Some(dense_to_triplets(&b))
    } else {
        None
    };

    Ok(OperatorPair {
        k,
        kept,
        mass: dense_to_triplets(&mass),
        stiffness: dense_to_triplets(&stiffness),
        constraint,
    })
}

fn dense_to_triplets(m: &Mat<f64>) -> SparseMatrixData {
    let mut triplets = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != 0.0 {
                triplets.push((i, j, v));
            }
        }
    }
    SparseMatrixData {
        nrows: m.nrows(),
        ncols: m.ncols(),
        triplets,
    }
}

/// Kernel-removal constraint for the eigenvalue solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigConstraint {
    /// No constraint; the kernel is detected by thresholding.
    None,
    /// Saddle-point divergence-free constraint removing the exact forms.
    MixedDivfree,
}

/// Result of a reference eigenvalue computation.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EigenResult {
    pub lambda_min_positive: f64,
    pub kernel_dim: usize,
    /// `lambda^{-1/2}`: the discrete Poincaré–Friedrichs constant.
    pub constant: f64,
    pub refinement_level: usize,
    /// Size of the solved system.
    pub dofs: usize,
    /// Whether the sparse shift-invert cross-check ran and agreed.
    pub cross_checked: bool,
}

/// Dense symmetric generalized eigensolve `S x = λ M x` via the inverse
/// square root of `M`; returns ascending eigenvalues and eigenvectors (as
/// columns, in the original coordinates, `M`-orthonormal).
fn dense_generalized_eig(s: &Mat<f64>, m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>), FeecError> {
    let evd_m = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| FeecError::SolverDivergence(format!("mass EVD: {e:?}")))?;
    let mvals: Vec<f64> = evd_m.S().column_vector().iter().copied().collect();
    let mmax = mvals.iter().cloned().fold(0.0f64, f64::max);
    if mvals.iter().any(|&v| v <= mmax * 1e-14) {
        return Err(FeecError::SolverDivergence(
            "mass matrix is numerically singular".into(),
        ));
    }
    let u = evd_m.U();
    let nd = m.nrows();
    // M^{-1/2} = U diag(s^{-1/2}) U^T.
    let mut uh = Mat::<f64>::zeros(nd, nd);
    for j in 0..nd {
        let f = 1.0 / mvals[j].sqrt();
        for i in 0..nd {
            uh[(i, j)] = u[(i, j)] * f;
        }
    }
    let m_inv_half = &uh * u.transpose();
    let a = &m_inv_half * s * &m_inv_half;
    // Symmetrize against roundoff.
    let a = (&a + a.transpose()) * faer::Scale(0.5);
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| FeecError::SolverDivergence(format!("stiffness EVD: {e:?}")))?;
    let vals: Vec<f64> = evd.S().column_vector().iter().copied().collect();
    let vecs = &m_inv_half * evd.U();
    Ok((vals, vecs))
}

/// Orthonormal basis of the null space of `bt x = 0` (i.e. of the rows of
/// `b^T`), via the eigendecomposition of `b b^T`.
fn nullspace_basis(b: &Mat<f64>) -> Result<Mat<f64>, FeecError> {
    let w = b * b.transpose();
    let evd = w
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| FeecError::SolverDivergence(format!("nullspace EVD: {e:?}")))?;
    let vals: Vec<f64> = evd.S().column_vector().iter().copied().collect();
    let vmax = vals.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
    let tol = vmax * 1e-12;
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] < tol).collect();
    let u = evd.U();
    let mut z = Mat::<f64>::zeros(b.nrows(), cols.len());
    for (jz, &j) in cols.iter().enumerate() {
        for i in 0..b.nrows() {
            z[(i, jz)] = u[(i, j)];
        }
    }
    Ok(z)
}

/// Splits ascending eigenvalues into a kernel cluster and the smallest
/// positive eigenvalue, enforcing a factor-1000 separation.
fn split_kernel(vals: &[f64]) -> Result<(usize, f64), FeecError> {
    let vmax = vals.iter().cloned().fold(0.0f64, f64::max).max(1.0);
    let tol = vmax * 1e-10;
    let kernel_dim = vals.iter().take_while(|&&v| v < tol).count();
    if kernel_dim >= vals.len() {
        return Err(FeecError::SolverDivergence(
            "all eigenvalues are in the kernel cluster".into(),
        ));
    }
    let lambda = vals[kernel_dim];
    let kernel_max = if kernel_dim == 0 {
        vmax * 1e-15
    } else {
        vals[kernel_dim - 1].abs().max(vmax * 1e-15)
    };
    if lambda <= 1e3 * kernel_max {
        return Err(FeecError::KernelMisdetection { lambda, kernel_max });
    }
    Ok((kernel_dim, lambda))
}

/// Sparse shift-invert cross-check: block inverse iteration with a sparse
/// factorization. Without a constraint the operator is `(S+M)^{-1} M`
/// (Cholesky); with the divergence-free constraint the saddle-point matrix
/// `[[S+M, B], [B^T, 0]]` is factorized (LU) so each application solves the
/// mixed system exactly. Returns the ascending Ritz values of the block.
fn sparse_smallest_eigs(
    pair: &OperatorPair,
    constraint: EigConstraint,
    block: usize,
) -> Result<Vec<f64>, FeecError> {
    let nd = pair.mass.nrows;
    let block = block.min(nd.max(1));
    let m_sp = pair.mass.to_sparse();
    let s_dense = pair.stiffness.to_dense();
    let m_dense = pair.mass.to_dense();

    // Deterministic random start block.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_feec);
    let mut x = Mat::<f64>::zeros(nd, block);
    for j in 0..block {
        for i in 0..nd {
            x[(i, j)] = rng.random::<f64>() - 0.5;
        }
    }

    enum Factor {
        Chol(faer::sparse::linalg::solvers::Llt<usize, f64>),
        Lu(faer::sparse::linalg::solvers::Lu<usize, f64>, usize),
    }
    let factor = match constraint {
        EigConstraint::None => {
            // S + M.
            let mut trips: Vec<Triplet<usize, usize, f64>> = Vec::new();
            for &(i, j, v) in pair.stiffness.triplets.iter().chain(pair.mass.triplets.iter()) {
                trips.push(Triplet::new(i, j, v));
            }
            let sm = SparseColMat::try_new_from_triplets(nd, nd, &trips)
                .map_err(|e| FeecError::SolverDivergence(format!("sparse build: {e:?}")))?;
            let sym = faer::sparse::linalg::solvers::SymbolicLlt::try_new(sm.symbolic(), Side::Lower)
                .map_err(|e| FeecError::SolverDivergence(format!("symbolic llt: {e:?}")))?;
            let llt = faer::sparse::linalg::solvers::Llt::try_new_with_symbolic(sym, sm.as_ref(), Side::Lower)
                .map_err(|e| FeecError::SolverDivergence(format!("numeric llt: {e:?}")))?;
            Factor::Chol(llt)
        }
        EigConstraint::MixedDivfree => {
            let b = pair
                .constraint
                .as_ref()
                .ok_or(FeecError::ConstraintUnavailable)?;
            let nm = b.ncols;
            let total = nd + nm;
            let mut trips: Vec<Triplet<usize, usize, f64>> = Vec::new();
            for &(i, j, v) in pair.stiffness.triplets.iter().chain(pair.mass.triplets.iter()) {
                trips.push(Triplet::new(i, j, v));
            }
            for &(i, j, v) in &b.triplets {
                trips.push(Triplet::new(i, nd + j, v));
                trips.push(Triplet::new(nd + j, i, v));
            }
            let kmat = SparseColMat::try_new_from_triplets(total, total, &trips)
                .map_err(|e| FeecError::SolverDivergence(format!("sparse build: {e:?}")))?;
            let sym = faer::sparse::linalg::solvers::SymbolicLu::try_new(kmat.symbolic())
                .map_err(|e| FeecError::SolverDivergence(format!("symbolic lu: {e:?}")))?;
            let lu = faer::sparse::linalg::solvers::Lu::try_new_with_symbolic(sym, kmat.as_ref())
                .map_err(|e| FeecError::SolverDivergence(format!("numeric lu: {e:?}")))?;
            Factor::Lu(lu, total)
        }
    };

    let mut last: Option<Vec<f64>> = None;
    for _iter in 0..400 {
        // y = M x, extended by zeros for the multiplier block.
        let y = m_sp.as_ref() * x.as_ref();
        let x_new = match &factor {
            Factor::Chol(llt) => {
                let mut rhs = y;
                llt.solve_in_place(rhs.as_mut());
                rhs
            }
            Factor::Lu(lu, total) => {
                let mut rhs = Mat::<f64>::zeros(*total, block);
                for j in 0..block {
                    for i in 0..nd {
                        rhs[(i, j)] = y[(i, j)];
                    }
                }
                lu.solve_in_place(rhs.as_mut());
                let mut out = Mat::<f64>::zeros(nd, block);
                for j in 0..block {
                    for i in 0..nd {
                        out[(i, j)] = rhs[(i, j)];
                    }
                }
                out
            }
        };
        // Rayleigh–Ritz on the new block.
        let gs = x_new.transpose() * &s_dense * &x_new;
        let gm = x_new.transpose() * &m_dense * &x_new;
        let gs = (&gs + gs.transpose()) * faer::Scale(0.5);
        let gm = (&gm + gm.transpose()) * faer::Scale(0.5);
        match dense_generalized_eig(&gs, &gm) {
            Ok((vals, vecs)) => {
                x = &x_new * &vecs;
                let converged = match &last {
                    Some(prev) => prev
                        .iter()
                        .zip(vals.iter())
                        .all(|(a, b)| (a - b).abs() <= 1e-13 * b.abs().max(1.0)),
                    None => false,
                };
                last = Some(vals);
                if converged {
                    break;
                }
            }
            Err(_) => {
                // Block became rank-deficient; restart the deficient
                // directions with fresh random data.
                for j in 0..block {
                    for i in 0..nd {
                        x[(i, j)] = x_new[(i, j)] + 1e-8 * (rng.random::<f64>() - 0.5);
                    }
                }
            }
        }
    }
    last.ok_or_else(|| FeecError::SolverDivergence("block iteration produced no Ritz values".into()))
}

/// Smallest positive generalized eigenvalue of the operator pair.
///
/// Dense solve is authoritative: without a constraint the kernel is
/// removed by thresholding with a separation check; with `MixedDivfree`
/// the problem is reduced to the constraint null space first, removing the
/// exact forms exactly. Below 3000 dofs the sparse shift-invert path also
/// runs and must agree to `1e-8` relative.
pub fn smallest_positive_eig(
    pair: &OperatorPair,
    constraint: EigConstraint,
) -> Result<EigenResult, FeecError> {
    let nd = pair.mass.nrows;
    if nd == 0 {
        return Err(FeecError::SolverDivergence("empty system".into()));
    }
    let s = pair.stiffness.to_dense();
    let m = pair.mass.to_dense();

    let (kernel_dim, lambda, x) = match constraint {
        EigConstraint::None => {
            let (vals, vecs) = dense_generalized_eig(&s, &m)?;
            let (kd, lam) = split_kernel(&vals)?;
            let mut x = Mat::<f64>::zeros(nd, 1);
            for i in 0..nd {
                x[(i, 0)] = vecs[(i, kd)];
            }
            (kd, lam, x)
        }
        EigConstraint::MixedDivfree => {
            let b = pair
                .constraint
                .as_ref()
                .ok_or(FeecError::ConstraintUnavailable)?
                .to_dense();
            let z = nullspace_basis(&b)?;
            if z.ncols() == 0 {
                return Err(FeecError::SolverDivergence(
                    "divergence-free subspace is empty".into(),
                ));
            }
            let sz = z.transpose() * &s * &z;
            let mz = z.transpose() * &m * &z;
            let (vals, vecs) = dense_generalized_eig(&sz, &mz)?;
            let (kd, lam) = split_kernel(&vals)?;
            let mut xz = Mat::<f64>::zeros(z.ncols(), 1);
            for i in 0..z.ncols() {
                xz[(i, 0)] = vecs[(i, kd)];
            }
            (kd, lam, &z * &xz)
        }
    };

    // Residual check ‖S x − λ M x‖ ≤ 1e−8 ‖x‖_M.
    let r = &s * &x - (&m * &x) * faer::Scale(lambda);
    let rnorm = (0..nd).map(|i| r[(i, 0)] * r[(i, 0)]).sum::<f64>().sqrt();
    let xm = {
        let mx = &m * &x;
        (0..nd).map(|i| x[(i, 0)] * mx[(i, 0)]).sum::<f64>().sqrt()
    };
    if rnorm > 1e-8 * xm.max(1e-300) * lambda.max(1.0) {
        return Err(FeecError::SolverDivergence(format!(
            "eigen residual {rnorm:.3e} exceeds tolerance (‖x‖_M = {xm:.3e}, λ = {lambda:.6e})"
        )));
    }

    // Sparse shift-invert cross-check.
    let mut cross_checked = false;
    if nd < 3000 {
        let expected_kernel = match constraint {
            EigConstraint::None => kernel_dim,
            EigConstraint::MixedDivfree => 0,
        };
        let block = (expected_kernel + 8).min(nd);
        let ritz = sparse_smallest_eigs(pair, constraint, block)?;
        if ritz.len() <= expected_kernel {
            return Err(FeecError::SolverDivergence(
                "sparse block too small for kernel".into(),
            ));
        }
        let sparse_lambda = ritz[expected_kernel];
        let rel = (sparse_lambda - lambda).abs() / lambda.abs().max(1e-300);
        if rel > 1e-8 {
            return Err(FeecError::SolverDivergence(format!(
                "dense ({lambda:.10e}) and sparse shift-invert ({sparse_lambda:.10e}) disagree: rel {rel:.3e}"
            )));
        }
        cross_checked = true;
    }

    Ok(EigenResult {
        lambda_min_positive: lambda,
        kernel_dim,
        constant: lambda.powf(-0.5),
        refinement_level: 0,
        dofs: nd,
        cross_checked,
    })
}

/// Reference Poincaré–Friedrichs constant of `d` on Whitney `k`-forms at
/// `p = 2` after `refinements` uniform refinements.
///
/// The top-degree (divergence) constant without boundary conditions is
/// computed through its adjoint: it equals the full-Dirichlet gradient
/// constant, so the `k = 0` problem with essential conditions on the whole
/// boundary is solved instead of wrestling with the huge exact-form kernel
/// at degree `n-1`.
pub fn reference_pf_constant(
    c: &C64,
    k: usize,
    bc: &BcSelection,
    refinements: usize,
) -> Result<EigenResult, FeecError> {
    let n = c.n();
    if k + 1 > n {
        return Err(FeecError::DegreeOutOfRange { n, k });
    }
    let mut mesh = c.clone();
    for _ in 0..refinements {
        mesh = uniform_refine(&mesh)?;
    }
    let (solve_k, solve_bc) = if k == n - 1 && *bc == BcSelection::None {
        (0, BcSelection::All)
    } else {
        (k, bc.clone())
    };
    let pair = assemble_whitney(&mesh, solve_k, &solve_bc)?;
    let constraint = if solve_k >= 1 {
        EigConstraint::MixedDivfree
    } else {
        EigConstraint::None
    };
    let mut result = smallest_positive_eig(&pair, constraint)?;
    result.refinement_level = refinements;
    Ok(result)
}
