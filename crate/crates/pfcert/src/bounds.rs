//! Per-step recursion coefficients for the gradient and exterior-derivative
//! potential constructions, their unwrapping into a coefficient ledger, the
//! Hölder aggregation into a single Poincaré–Friedrichs constant, and the
//! end-to-end estimation driver.

use nalgebra::DMatrix;
use num_traits::Float;

use crate::constants::{
    self, Assumption, ConstantError, KFormBcMode, KFormVariant, LebesgueExponent,
};
use crate::geometry::{
    cell_geometry, face_reflection, mesh_ratios, GeometryError, SimplexGeometry,
};
use crate::mesh::SimplicialComplex;
use crate::scalar::Real;
use crate::shelling::{
    search_shelling, spanning_tree, SearchConfig, Shelling, ShellingError, SpanningTree,
};
use crate::starmap::{build_star_reflection, build_star_contraction, transfer_constants, StarMapError};

/// Errors from bound assembly.
#[derive(Debug, thiserror::Error)]
pub enum BoundError {
    #[error("complex is not face-connected")]
    Disconnected,
    #[error("the shelling closes a sphere (final interface is the whole boundary); no estimate applies")]
    SphereShelling,
    #[error("form degree {k} out of range for dimension {n}")]
    DegreeOutOfRange { n: usize, k: usize },
    #[error("a coefficient references position {referenced} at or after position {row}")]
    ForwardReferenceViolation { row: usize, referenced: usize },
    #[error("strategy requires a verified shelling")]
    ShellingNotVerified,
    #[error(transparent)]
    Constant(#[from] ConstantError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    StarMap(#[from] StarMapError),
    #[error(transparent)]
    Shelling(#[from] ShellingError),
}

/// Estimation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    GradientGlue,
    GradientPatch,
    ExteriorShelling,
    AppendixProduct,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Strategy::GradientGlue => "gradient_glue",
            Strategy::GradientPatch => "gradient_patch",
            Strategy::ExteriorShelling => "exterior_shelling",
            Strategy::AppendixProduct => "appendix_product",
        };
        f.write_str(s)
    }
}

/// Whether per-pair quantities or the global worst-case mesh ratios enter
/// the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientMode {
    /// Exact per-pair volume ratios and reflection norms (default).
    Individualized,
    /// The global `C_ρ`/`C_ξ` worst-case constants.
    Global,
}

/// How coefficient rows of a multi-cell union are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    /// Per-source-index `ℓ^p` combination (tighter; valid by Minkowski's
    /// inequality applied to the member rows).
    Minkowski,
    /// Plain summation of member rows.
    L1,
}

/// Choice of local mixed boundary-condition constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalMode {
    /// Only fully proved constants.
    Proved,
    /// Hilbert-space improved local constants at `p = 2` (flagged).
    Hilbert,
}

/// One step of a recursive estimate: direct `‖du‖` coefficients and grouped
/// `‖w‖` coefficients referencing earlier positions.
#[derive(Debug, Clone)]
pub struct StepRow<R> {
    /// `(position, coefficient)` pairs multiplying `‖du‖` on that position's
    /// cell; positions must not exceed the row's own.
    pub a: Vec<(usize, R)>,
    /// Groups of `(position, coefficient)` pairs multiplying the `L^p` norm
    /// of `w` over the positions' cells, each member weighted by its own
    /// coefficient; all positions strictly earlier than the row's own.
    pub b: Vec<Vec<(usize, R)>>,
    /// Human-readable provenance of the step's coefficients.
    pub note: String,
}

/// The per-step recursion rows in traversal order.
#[derive(Debug, Clone)]
pub struct RecursionRows<R> {
    pub rows: Vec<StepRow<R>>,
}

/// The unwrapped lower-triangular coefficient matrix: entry `(m, ℓ)`
/// multiplies `‖du‖` on the cell at position `ℓ` in the bound for `‖w‖` on
/// the cell at position `m`.
#[derive(Debug, Clone)]
pub struct BoundLedger<R: Real> {
    pub c: DMatrix<R>,
    pub provenance: Vec<String>,
}

/// Forward substitution of the recursion rows into the coefficient ledger,
/// realizing the chain sums without exponential enumeration.
pub fn unwrap<R: Real>(
    rows: &RecursionRows<R>,
    p: LebesgueExponent<R>,
    combine: Combine,
) -> Result<BoundLedger<R>, BoundError> {
    let m_total = rows.rows.len();
    let mut c = DMatrix::zeros(m_total, m_total);
    let mut provenance = Vec::with_capacity(m_total);
    for (m, row) in rows.rows.iter().enumerate() {
        for &(pos, coeff) in &row.a {
            if pos > m {
                return Err(BoundError::ForwardReferenceViolation {
                    row: m,
                    referenced: pos,
                });
            }
            c[(m, pos)] += coeff;
        }
        for group in &row.b {
            for &(j, _) in group {
                if j >= m {
                    return Err(BoundError::ForwardReferenceViolation {
                        row: m,
                        referenced: j,
                    });
                }
            }
            for col in 0..m_total {
                let contribution = if group.len() == 1 || combine == Combine::L1 {
                    let mut sum = R::zero();
                    for &(j, beta) in group {
                        sum += beta * c[(j, col)];
                    }
                    sum
                } else {
                    let values: Vec<R> =
                        group.iter().map(|&(j, beta)| beta * c[(j, col)]).collect();
                    p.norm(&values)
                };
                c[(m, col)] += contribution;
            }
        }
        provenance.push(row.note.clone());
    }
    Ok(BoundLedger { c, provenance })
}

/// The Hölder aggregation `(Σ_m (Σ_ℓ C_{m,ℓ}^q)^{p/q})^{1/p}` with the
/// conjugate exponent `q`; at `p = 2` this is the Frobenius norm, at `p = 1`
/// the sum of row maxima, at `p = ∞` the largest row sum.
pub fn holder_aggregate<R: Real>(ledger: &BoundLedger<R>, p: LebesgueExponent<R>) -> R {
    let q = p.conjugate();
    let rows = ledger.c.nrows();
    let mut row_norms = Vec::with_capacity(rows);
    for m in 0..rows {
        let entries: Vec<R> = (0..ledger.c.ncols()).map(|l| ledger.c[(m, l)]).collect();
        row_norms.push(q.norm(&entries));
    }
    p.norm(&row_norms)
}

/// The patch-combination factor `(1 + r^{q/p})^{1/q}` with its `p = 1` and
/// `p = ∞` limits `max(1, r)` and `2`.
fn patch_factor<R: Real>(r: R, p: LebesgueExponent<R>) -> R {
    if p.is_infinite() {
        R::num(2.0)
    } else if p.p() == R::one() {
        <R as Float>::max(R::one(), r)
    } else {
        let q = p.conjugate().p();
        <R as Float>::powf(R::one() + <R as Float>::powf(r, q - R::one()), R::one() / q)
    }
}

/// Local mixed boundary-condition gradient constant per the chosen mode.
fn local_grad_constant<R: Real>(
    geo: &SimplexGeometry<R>,
    p: LebesgueExponent<R>,
    mode: LocalMode,
) -> constants::ConstantValue<R> {
    match mode {
        LocalMode::Hilbert => constants::mixed_bc_gradient_constant(geo, p),
        LocalMode::Proved => constants::mixed_bc_gradient_constant_generic(geo, p),
    }
}

/// Gradient recursion variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientVariant {
    Glue,
    Patch,
}

/// Assembles the gradient recursion coefficients along a spanning tree.
///
/// Glue variant: the potential is transported to the next cell by the face
/// reflection and corrected by a one-face mixed boundary-condition
/// constant. Patch variant: a fresh potential on the two-cell face patch is
/// glued by a constant shift.
pub fn gradient_recursion_coeffs<R: Real>(
    c: &SimplicialComplex<R>,
    tree: &SpanningTree,
    p: LebesgueExponent<R>,
    variant: GradientVariant,
    coeff_mode: CoefficientMode,
    local_mode: LocalMode,
) -> Result<RecursionRows<R>, BoundError> {
    if !c.is_face_connected() {
        return Err(BoundError::Disconnected);
    }
    let order = &tree.order;
    let geos: Vec<SimplexGeometry<R>> = order
        .iter()
        .map(|&ci| cell_geometry(c, ci))
        .collect::<Result<_, _>>()?;
    let ratios = match coeff_mode {
        CoefficientMode::Global => Some(mesh_ratios(c)),
        CoefficientMode::Individualized => None,
    };

    let mut rows = Vec::with_capacity(order.len());
    let a0 = constants::convex_pf_gradient(p, geos[0].diameter);
    rows.push(StepRow {
        a: vec![(0, a0.value)],
        b: Vec::new(),
        note: format!("start cell {}: {}", order[0], a0.formula_id),
    });

    for m in 1..order.len() {
        let pm = tree.predecessor[m];
        let cell_m = order[m];
        let cell_p = order[pm];
        let r = geos[m].volume / geos[pm].volume;
        let (a_m, xi_norm) = match &ratios {
            Some(mr) => (p.root(mr.c_rho), mr.c_xi),
            None => {
                let refl = face_reflection(c, cell_m, cell_p)?;
                (p.root(r), refl.map.norm())
            }
        };
        match variant {
            GradientVariant::Glue => {
                let b_prime = local_grad_constant(&geos[m], p, local_mode);
                let transport = match &ratios {
                    Some(mr) => p.root(mr.c_rho) * mr.c_xi,
                    None => p.root(r) * xi_norm,
                };
                let b_second = b_prime.value * transport;
                rows.push(StepRow {
                    a: vec![(m, b_prime.value), (pm, b_second)],
                    b: vec![vec![(pm, a_m)]],
                    note: format!(
                        "glue {} <- {}: A={:.6e} B'={:.6e} ({}) B''={:.6e}",
                        cell_m,
                        cell_p,
                        a_m.as_f64(),
                        b_prime.value.as_f64(),
                        b_prime.formula_id,
                        b_second.as_f64()
                    ),
                });
            }
            GradientVariant::Patch => {
                let sm = &c.cells()[cell_m];
                let sp = &c.cells()[cell_p];
                let shared = sm
                    .intersection(sp)
                    .filter(|f| f.dim() + 1 == c.n())
                    .ok_or(GeometryError::NotFaceNeighbors(0))?;
                let apex_m = sm.complement_within(&shared).expect("facet complement");
                let apex_p = sp.complement_within(&shared).expect("facet complement");
                let face_pts = c.simplex_points(&shared);
                let patch = constants::face_patch_constant(
                    &face_pts,
                    c.vertex(apex_m.vertices()[0]),
                    c.vertex(apex_p.vertices()[0]),
                    p,
                )?;
                let factor = match &ratios {
                    Some(mr) => patch_factor(mr.c_rho, p),
                    None => patch_factor(r, p),
                };
                let b_star = factor * patch.value.value;
                rows.push(StepRow {
                    a: vec![(m, b_star), (pm, b_star)],
                    b: vec![vec![(pm, a_m)]],
                    note: format!(
                        "patch {} <- {}: A={:.6e} B*={:.6e} ({}, convex={})",
                        cell_m,
                        cell_p,
                        a_m.as_f64(),
                        b_star.as_f64(),
                        patch.value.formula_id,
                        patch.convex
                    ),
                });
            }
        }
    }
    Ok(RecursionRows { rows })
}

/// Poincaré–Friedrichs constant of the shelling's first cell, seeding the
/// recursion. At `k = 0` the sharp convex gradient constant applies; for
/// `k ≥ 1` in Hilbert mode at `p = 2` the conjectured degree-monotonicity
/// gives `δ/π`, while the proved mode uses the averaged-potential
/// operator-norm bound.
fn start_constant<R: Real>(
    geo: &SimplexGeometry<R>,
    n: usize,
    k: usize,
    p: LebesgueExponent<R>,
    local_mode: LocalMode,
) -> Result<constants::ConstantValue<R>, ConstantError> {
    if k == 0 {
        Ok(constants::convex_pf_gradient(p, geo.diameter))
    } else if local_mode == LocalMode::Hilbert && p.is_two() {
        Ok(constants::convex_pf_kform_hilbert(geo.diameter))
    } else {
        constants::convex_pf_kform(n, k + 1, geo.diameter, geo.volume, KFormVariant::Poincare)
    }
}

/// Per-target-cell pullback factors of a piecewise map at degree `k`: for
/// each listed cell, the worst factor over the pieces whose image lies in
/// that cell. Cells receiving no piece get zero; a piece whose image lands
/// in none of the cells (possible only through numerical tolerance issues)
/// falls back to charging every cell.
fn per_cell_pullback<R: Real>(
    c: &SimplicialComplex<R>,
    map: &crate::starmap::PiecewiseAffineMap<R>,
    cells: &[usize],
    k: usize,
    p: LebesgueExponent<R>,
) -> Result<Vec<R>, BoundError> {
    let tol = R::num(1e-9);
    let mut out = vec![R::zero(); cells.len()];
    for piece in &map.pieces {
        let factor = crate::geometry::pullback_factor(&piece.map, k, p)?;
        // Barycenter of the piece's image identifies the receiving cell.
        let mut bary = piece.map.apply(&piece.domain[0]);
        for v in piece.domain.iter().skip(1) {
            bary += piece.map.apply(v);
        }
        bary /= R::num_usize(piece.domain.len());
        let mut placed = false;
        for (slot, &ci) in cells.iter().enumerate() {
            let pts = c.simplex_points(&c.cells()[ci]);
            if crate::geometry::point_in_simplex(&pts, &bary, tol) {
                out[slot] = <R as Float>::max(out[slot], factor);
                placed = true;
                break;
            }
        }
        if !placed {
            for slot in out.iter_mut() {
                *slot = <R as Float>::max(*slot, factor);
            }
        }
    }
    Ok(out)
}

/// Assembles the exterior-derivative recursion coefficients along a
/// verified shelling, at form degree `k`.
///
/// Each step uses the mixed boundary-condition constant of the incoming
/// cell with its interface faces as essential boundary, and the per-star
/// pullback transfer constants of the star reflection at degrees `k` and
/// `k+1`. At `k = 0` the one-face gradient constant applies (vanishing
/// trace on more faces is a stronger constraint, so the single-face bound
/// remains valid and is much smaller).
pub fn exterior_recursion_coeffs<R: Real>(
    c: &SimplicialComplex<R>,
    sh: &Shelling,
    k: usize,
    p: LebesgueExponent<R>,
    local_mode: LocalMode,
    coeff_mode: CoefficientMode,
) -> Result<RecursionRows<R>, BoundError> {
    let n = c.n();
    if k + 1 > n {
        return Err(BoundError::DegreeOutOfRange { n, k });
    }
    if !sh.verified {
        return Err(BoundError::ShellingNotVerified);
    }
    let order = &sh.order;
    let mut position = vec![usize::MAX; c.cells().len()];
    for (i, &ci) in order.iter().enumerate() {
        position[ci] = i;
    }
    let geos: Vec<SimplexGeometry<R>> = order
        .iter()
        .map(|&ci| cell_geometry(c, ci))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::with_capacity(order.len());
    let a0 = start_constant(&geos[0], n, k, p, local_mode)?;
    rows.push(StepRow {
        a: vec![(0, a0.value)],
        b: Vec::new(),
        note: format!("start cell {}: {}", order[0], a0.formula_id),
    });

    for (m, step) in sh.steps.iter().enumerate() {
        let m = m + 1;
        if step.ell_m < 0 {
            return Err(BoundError::SphereShelling);
        }
        let ell = step.ell_m as usize;
        let cell_m = order[m];
        let s_m = step.s_m.as_ref().expect("ell >= 0 implies center simplex");

        // Mixed boundary-condition constant with the interface faces as
        // essential boundary: the interface has n-ℓ faces.
        let lemma_ell = n - ell - 1;
        let cmix = if k == 0 {
            local_grad_constant(&geos[m], p, local_mode)
        } else {
            let mode = match (local_mode, p.is_two()) {
                (LocalMode::Hilbert, true) => KFormBcMode::HilbertSimple,
                _ => KFormBcMode::Proved,
            };
            constants::mixed_bc_kform_constant(&geos[m], n, lemma_ell, k, p, mode)?
        };

        // Star reflection transfer at degrees k and k+1: either the
        // per-target-cell piece factors or the uniform worst case.
        let xi1 = build_star_reflection(c, s_m, cell_m)?;
        let (fwd_k, fwd_k1): (Vec<R>, Vec<R>) = match coeff_mode {
            CoefficientMode::Individualized => (
                per_cell_pullback(c, &xi1, &step.u_prev, k, p)?,
                per_cell_pullback(c, &xi1, &step.u_prev, k + 1, p)?,
            ),
            CoefficientMode::Global => {
                let f = transfer_constants(&xi1, k, p)?.forward;
                let f1 = transfer_constants(&xi1, k + 1, p)?.forward;
                (
                    vec![f; step.u_prev.len()],
                    vec![f1; step.u_prev.len()],
                )
            }
        };

        let u_positions: Vec<usize> = step.u_prev.iter().map(|&ci| position[ci]).collect();
        let mut a = vec![(m, cmix.value)];
        for (&up, &f1) in u_positions.iter().zip(&fwd_k1) {
            a.push((up, cmix.value * f1));
        }
        let group: Vec<(usize, R)> = u_positions.iter().copied().zip(fwd_k.iter().copied()).collect();
        let max_fwd = fwd_k.iter().fold(R::zero(), |acc, &v| <R as Float>::max(acc, v));
        let max_fwd1 = fwd_k1.iter().fold(R::zero(), |acc, &v| <R as Float>::max(acc, v));
        rows.push(StepRow {
            a,
            b: vec![group],
            note: format!(
                "shelling step {m} (cell {cell_m}, ell={ell}): C_mix={:.6e} ({}), max fwd_k={:.6e}, max fwd_k1={:.6e}, |U|={}",
                cmix.value.as_f64(),
                cmix.formula_id,
                max_fwd.as_f64(),
                max_fwd1.as_f64(),
                u_positions.len()
            ),
        });
    }
    Ok(RecursionRows { rows })
}

/// Result of an end-to-end estimate.
#[derive(Debug, Clone)]
pub struct EstimateResult<R: Real> {
    /// The certified upper bound.
    pub constant: R,
    pub k: usize,
    pub p: f64,
    pub strategy: Strategy,
    /// Cell indices in the traversal (tree or shelling) order used.
    pub traversal: Vec<usize>,
    /// The unwrapped coefficient ledger (absent for the product bound).
    pub ledger: Option<BoundLedger<R>>,
    /// Provenance flags inherited from the constituent constants.
    pub assumptions: Vec<Assumption>,
    /// Conjecture-free companion value computed with proved constants only
    /// on the same traversal.
    pub proved_constant: Option<R>,
}

/// The appendix product bound along a shelling: the start-cell potential
/// constant times, per step, the inverse contraction transfer at degree
/// `k+1` and the forward transfer at degree `k`.
pub fn product_bound<R: Real>(
    c: &SimplicialComplex<R>,
    sh: &Shelling,
    k: usize,
    p: LebesgueExponent<R>,
) -> Result<EstimateResult<R>, BoundError> {
    let n = c.n();
    if k + 1 > n {
        return Err(BoundError::DegreeOutOfRange { n, k });
    }
    if !sh.verified {
        return Err(BoundError::ShellingNotVerified);
    }
    let geo0 = cell_geometry(c, sh.order[0])?;
    let a0 = start_constant(&geo0, n, k, p, LocalMode::Proved)?;
    let mut constant = a0.value;
    let mut assumptions = a0.assumptions.clone();
    for (i, step) in sh.steps.iter().enumerate() {
        if step.ell_m < 0 {
            return Err(BoundError::SphereShelling);
        }
        let s_m = step.s_m.as_ref().expect("ell >= 0 implies center simplex");
        let cell_m = sh.order[i + 1];
        let xi2 = build_star_contraction(c, s_m, cell_m)?;
        let inv_k1 = transfer_constants(&xi2, k + 1, p)?.inverse;
        let fwd_k = transfer_constants(&xi2, k, p)?.forward;
        constant *= inv_k1 * fwd_k;
    }
    assumptions.dedup();
    Ok(EstimateResult {
        constant,
        k,
        p: p.p().as_f64(),
        strategy: Strategy::AppendixProduct,
        traversal: sh.order.clone(),
        ledger: None,
        assumptions,
        proved_constant: Some(constant),
    })
}

/// Configuration of the estimation driver.
#[derive(Debug, Clone)]
pub struct EstimateConfig {
    pub seed: u64,
    /// Verifier-call budget for shelling searches.
    pub budget: usize,
    /// Randomized candidates per root cell in shelling searches.
    pub per_root: usize,
    pub local_mode: LocalMode,
    pub combine: Combine,
    pub coefficient_mode: CoefficientMode,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            seed: 0,
            budget: 1_000_000,
            per_root: 4,
            local_mode: LocalMode::Hilbert,
            combine: Combine::Minkowski,
            coefficient_mode: CoefficientMode::Individualized,
        }
    }
}

/// Collects the assumption flags appearing in a recursion's notes by
/// recomputing the constituent constants is avoided; instead the flags are
/// derived from the modes in force.
fn mode_assumptions(local_mode: LocalMode, p_is_two: bool, k: usize) -> Vec<Assumption> {
    let mut out = vec![Assumption::Convexity];
    if local_mode == LocalMode::Hilbert && p_is_two {
        out.push(Assumption::HilbertOnly);
        if k > 0 {
            out.push(Assumption::ConjectureAdjacent);
        }
    }
    out
}

/// Evaluates the gradient pipeline for one spanning tree.
fn gradient_constant_for_tree<R: Real>(
    c: &SimplicialComplex<R>,
    tree: &SpanningTree,
    p: LebesgueExponent<R>,
    variant: GradientVariant,
    config: &EstimateConfig,
    local_mode: LocalMode,
) -> Result<R, BoundError> {
    let rows = gradient_recursion_coeffs(c, tree, p, variant, config.coefficient_mode, local_mode)?;
    let ledger = unwrap(&rows, p, config.combine)?;
    Ok(holder_aggregate(&ledger, p))
}

/// Evaluates the exterior pipeline for one shelling.
fn exterior_constant_for_shelling<R: Real>(
    c: &SimplicialComplex<R>,
    sh: &Shelling,
    k: usize,
    p: LebesgueExponent<R>,
    config: &EstimateConfig,
    local_mode: LocalMode,
) -> Result<R, BoundError> {
    let rows = exterior_recursion_coeffs(c, sh, k, p, local_mode, config.coefficient_mode)?;
    let ledger = unwrap(&rows, p, config.combine)?;
    Ok(holder_aggregate(&ledger, p))
}

/// End-to-end driver: picks a traversal (spanning tree or shelling) by
/// search, assembles the coefficients, unwraps and aggregates, and returns
/// the best result found together with its conjecture-free companion.
pub fn estimate_pf<R: Real>(
    c: &SimplicialComplex<R>,
    k: usize,
    p: LebesgueExponent<R>,
    strategy: Strategy,
    config: &EstimateConfig,
) -> Result<EstimateResult<R>, BoundError> {
    let n = c.n();
    if k + 1 > n {
        return Err(BoundError::DegreeOutOfRange { n, k });
    }
    match strategy {
        Strategy::GradientGlue | Strategy::GradientPatch => {
            if k != 0 {
                return Err(BoundError::DegreeOutOfRange { n, k });
            }
            let variant = if strategy == Strategy::GradientGlue {
                GradientVariant::Glue
            } else {
                GradientVariant::Patch
            };
            // Edge cost for the tree search: the transport coefficient of
            // the step, so expensive transitions sit deep in the tree.
            let cost = |child: usize, parent: usize| -> f64 {
                let vr = match (cell_geometry(c, child), cell_geometry(c, parent)) {
                    (Ok(gc), Ok(gp)) => (gc.volume / gp.volume).as_f64(),
                    _ => return f64::INFINITY,
                };
                match face_reflection(c, child, parent) {
                    Ok(refl) => vr.powf(1.0 / p.p().as_f64().min(1e6)) * refl.map.norm().as_f64(),
                    Err(_) => f64::INFINITY,
                }
            };
            let mut best: Option<(R, SpanningTree)> = None;
            for root in 0..c.cells().len() {
                let tree = spanning_tree(c, root, &cost)?;
                let value =
                    gradient_constant_for_tree(c, &tree, p, variant, config, config.local_mode)?;
                if best.as_ref().map(|(bv, _)| value < *bv).unwrap_or(true) {
                    best = Some((value, tree));
                }
            }
            let (constant, tree) = best.ok_or(BoundError::Disconnected)?;
            let proved =
                gradient_constant_for_tree(c, &tree, p, variant, config, LocalMode::Proved)?;
            let rows =
                gradient_recursion_coeffs(c, &tree, p, variant, config.coefficient_mode, config.local_mode)?;
            let ledger = unwrap(&rows, p, config.combine)?;
            Ok(EstimateResult {
                constant,
                k,
                p: p.p().as_f64(),
                strategy,
                traversal: tree.order.clone(),
                ledger: Some(ledger),
                assumptions: mode_assumptions(config.local_mode, p.is_two(), k),
                proved_constant: Some(proved),
            })
        }
        Strategy::ExteriorShelling => {
            let outcome = search_best_shelling(c, config, &|sh| {
                exterior_constant_for_shelling(c, sh, k, p, config, config.local_mode)
                    .map(|v| v.as_f64())
                    .unwrap_or(f64::INFINITY)
            })?;
            let sh = outcome;
            let constant = exterior_constant_for_shelling(c, &sh, k, p, config, config.local_mode)?;
            let proved = exterior_constant_for_shelling(c, &sh, k, p, config, LocalMode::Proved)?;
            let rows = exterior_recursion_coeffs(c, &sh, k, p, config.local_mode, config.coefficient_mode)?;
            let ledger = unwrap(&rows, p, config.combine)?;
            Ok(EstimateResult {
                constant,
                k,
                p: p.p().as_f64(),
                strategy,
                traversal: sh.order.clone(),
                ledger: Some(ledger),
                assumptions: mode_assumptions(config.local_mode, p.is_two(), k),
                proved_constant: Some(proved),
            })
        }
        Strategy::AppendixProduct => {
            let sh = search_best_shelling(c, config, &|sh| {
                product_bound(c, sh, k, p)
                    .map(|r| r.constant.as_f64())
                    .unwrap_or(f64::INFINITY)
            })?;
            product_bound(c, &sh, k, p)
        }
    }
}

/// Runs the shelling search with a cheap geometric step heuristic and the
/// given final objective; fails if no finite-cost shelling exists within
/// the budget.
fn search_best_shelling<R: Real>(
    c: &SimplicialComplex<R>,
    config: &EstimateConfig,
    objective: &dyn Fn(&Shelling) -> f64,
) -> Result<Shelling, BoundError> {
    let diam: Vec<f64> = (0..c.cells().len())
        .map(|i| {
            cell_geometry(c, i)
                .map(|g| (g.kappa_a * g.diameter).as_f64())
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    let step_cost = move |_prefix: &[usize], cand: usize, _info: &crate::shelling::StepInfo| {
        diam[cand]
    };
    let sc = SearchConfig {
        seed: config.seed,
        per_root: config.per_root,
        budget: config.budget,
        step_cost: &step_cost,
        total_cost: objective,
    };
    let outcome = search_shelling(c, &sc)?;
    if !outcome.cost.is_finite() {
        return Err(BoundError::SphereShelling);
    }
    Ok(outcome.shelling)
}
