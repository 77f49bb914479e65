//! Closed-form analytic constants: Poincaré and Poincaré–Friedrichs constants
//! over convex domains (scalar functions and differential forms), operator
//! norms of the averaged Poincaré and Bogovskiĭ potentials, mixed
//! boundary-condition constants on simplices, and two-cell face-patch
//! constants.

use nalgebra::DVector;
use num_traits::Float;

use crate::geometry::{
    factorial, geometry_of, points_diameter, simplex_volume, singular_values, AffineMap,
    GeometryError, SimplexGeometry,
};
use crate::scalar::Real;

/// Errors from constant evaluation.
#[derive(Debug, Clone, thiserror::Error)]
pub enum ConstantError {
    #[error("exponent out of range for this formula (p = {0})")]
    ExponentOutOfRange(f64),
    #[error("form degree out of range: k = {k}, n = {n}")]
    DegreeOutOfRange { n: usize, k: usize },
    #[error("hilbert_simple mode requires p = 2, got p = {0}")]
    ModeExponentMismatch(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A Lebesgue integrability exponent `p ∈ [1, ∞]`, with `∞` represented
/// explicitly, and access to the conjugate exponent `q` with `1/p + 1/q = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LebesgueExponent<R: Real> {
    p: R,
}

impl<R: Real> LebesgueExponent<R> {
    /// A finite or infinite exponent; `p` must be at least one.
    pub fn new(p: R) -> Result<Self, ConstantError> {
        if p >= R::one() {
            Ok(Self { p })
        } else {
            Err(ConstantError::ExponentOutOfRange(p.as_f64()))
        }
    }

    /// The exponent `p = 2` of the Hilbert-space setting.
    pub fn two() -> Self {
        Self { p: R::num(2.0) }
    }

    /// The exponent `p = 1`.
    pub fn one() -> Self {
        Self { p: R::one() }
    }

    /// The exponent `p = ∞`.
    pub fn infinity() -> Self {
        Self {
            p: <R as Float>::infinity(),
        }
    }

    /// The raw exponent value (possibly infinite).
    pub fn p(&self) -> R {
        self.p
    }

    /// The conjugate exponent `q = p/(p−1)`, with `q = ∞` for `p = 1` and
    /// `q = 1` for `p = ∞`.
    pub fn conjugate(&self) -> Self {
        if self.p == R::one() {
            Self::infinity()
        } else if self.is_infinite() {
            Self::one()
        } else {
            Self {
                p: self.p / (self.p - R::one()),
            }
        }
    }

    /// Whether this is the exponent `∞`.
    pub fn is_infinite(&self) -> bool {
        <R as Float>::is_infinite(self.p)
    }

    /// Whether this is the exponent `2`.
    pub fn is_two(&self) -> bool {
        self.p == R::num(2.0)
    }

    /// `x^{1/p}` for `x > 0`, with the convention `x^{1/∞} = 1`.
    pub fn root(&self, x: R) -> R {
        if self.is_infinite() {
            R::one()
        } else {
            <R as Float>::powf(x, R::one() / self.p)
        }
    }

    /// `x^{-1/p}` for `x > 0`, with the convention `x^{-1/∞} = 1`.
    pub fn root_inv(&self, x: R) -> R {
        R::one() / self.root(x)
    }

    /// The `p`-norm `(Σ_i x_i^p)^{1/p}` of a nonnegative vector, with the
    /// convention `max_i x_i` for `p = ∞`.
    pub fn norm(&self, xs: &[R]) -> R {
        if self.is_infinite() {
            xs.iter()
                .fold(R::zero(), |acc, &x| <R as Float>::max(acc, x))
        } else {
            let sum = xs
                .iter()
                .map(|&x| <R as Float>::powf(x, self.p))
                .fold(R::zero(), |a, b| a + b);
            self.root(sum)
        }
    }
}

/// Structural assumptions attached to a computed constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Assumption {
    /// Valid only over convex domains.
    Convexity,
    /// Valid only at `p = 2`.
    HilbertOnly,
    /// Improvement whose justification is variational/spectral folklore
    /// rather than a fully tracked proof; reported but never silently
    /// substituted for a proved value.
    ConjectureAdjacent,
    /// The `κ_M^{k−1}` factor would be `κ_M^{−1} < 1` at `k = 0` and has been
    /// clamped to one so the reported value never undercuts the proof.
    KappaMClamped,
    /// `κ_M` itself came from the `n·κ_A` fallback bound rather than the
    /// exhaustive ordering enumeration.
    KappaMFallback,
    /// Valid only for the top-degree (divergence) operator.
    TopDegreeOnly,
    /// Ratio over an empty pair set; reported as one by convention.
    EmptyPairConvention,
}

/// A computed constant together with its formula tag and assumption flags.
#[derive(Debug, Clone)]
pub struct ConstantValue<R> {
    /// The numeric value of the constant (finite, nonnegative).
    pub value: R,
    /// Stable identifier of the defining formula.
    pub formula_id: &'static str,
    /// Assumptions under which the value is a valid upper bound.
    pub assumptions: Vec<Assumption>,
}

impl<R: Real> ConstantValue<R> {
    fn new(value: R, formula_id: &'static str) -> Self {
        Self {
            value,
            formula_id,
            assumptions: Vec::new(),
        }
    }

    fn with(mut self, a: Assumption) -> Self {
        self.assumptions.push(a);
        self
    }

    /// Whether the constant relies on any conjecture-adjacent improvement.
    pub fn is_fully_proved(&self) -> bool {
        !self
            .assumptions
            .contains(&Assumption::ConjectureAdjacent)
    }
}

/// The optimal convex-domain Poincaré–Friedrichs constant per unit diameter,
/// `C_EFNT,p = p·sin(π/p) / (2π·(p−1)^{1/p})`, valid for `1 < p < ∞`.
pub fn efnt_constant<R: Real>(p: LebesgueExponent<R>) -> Result<R, ConstantError> {
    if p.p() <= R::one() || p.is_infinite() {
        return Err(ConstantError::ExponentOutOfRange(p.p().as_f64()));
    }
    let pi = R::PI();
    let pv = p.p();
    Ok(pv * <R as Float>::sin(pi / pv) / (R::num(2.0) * pi * p.root(pv - R::one())))
}

/// Convex-domain Poincaré–Friedrichs constant for the gradient:
/// `δ/2` at `p = 1`, `C_EFNT,p·δ` for `1 < p < ∞`, and `δ` at `p = ∞`.
pub fn convex_pf_gradient<R: Real>(p: LebesgueExponent<R>, delta: R) -> ConstantValue<R> {
    let value = if p.p() == R::one() {
        delta / R::num(2.0)
    } else if p.is_infinite() {
        delta
    } else {
        efnt_constant(p).expect("finite p > 1") * delta
    };
    ConstantValue::new(value, "convex-pf-gradient").with(Assumption::Convexity)
}

/// The Chua–Wheeden upper bound `2·(p/2)^{1/p}` for the convex-domain
/// Poincaré constant per unit diameter, `1 ≤ p < ∞`.
pub fn chua_wheeden_bound<R: Real>(p: LebesgueExponent<R>) -> Result<R, ConstantError> {
    if p.is_infinite() {
        return Err(ConstantError::ExponentOutOfRange(f64::INFINITY));
    }
    Ok(R::num(2.0) * p.root(p.p() / R::num(2.0)))
}

/// The factor `2^{|2/p − 1|}` bounding the Poincaré constant by the
/// Poincaré–Friedrichs constant (and vice versa).
pub fn pf_vs_poincare_factor<R: Real>(p: LebesgueExponent<R>) -> R {
    let e = if p.is_infinite() {
        R::one()
    } else {
        <R as Float>::abs(R::num(2.0) / p.p() - R::one())
    };
    <R as Float>::powf(R::num(2.0), e)
}

/// Binomial coefficient as a scalar; arguments stay small.
fn binomial<R: Real>(n: usize, k: usize) -> R {
    if k > n {
        return R::zero();
    }
    let k = k.min(n - k);
    let mut num = R::one();
    let mut den = R::one();
    for i in 0..k {
        num = num * R::num_usize(n - i);
        den = den * R::num_usize(i + 1);
    }
    num / den
}

/// Dimensional coefficient of the averaged Poincaré potential:
/// `C_P(n,k) = Σ_{ℓ=0}^{n−k} binom(n−k,ℓ) / ((n−ℓ)(ℓ+1))`.
pub fn poincare_op_constant<R: Real>(n: usize, k: usize) -> Result<R, ConstantError> {
    if k == 0 || k > n {
        return Err(ConstantError::DegreeOutOfRange { n, k });
    }
    let mut sum = R::zero();
    for ell in 0..=(n - k) {
        sum = sum + binomial::<R>(n - k, ell) / (R::num_usize(n - ell) * R::num_usize(ell + 1));
    }
    Ok(sum)
}

/// Dimensional coefficient of the averaged Bogovskiĭ potential:
/// `C_B(n,k) = Σ_{ℓ=0}^{k−1} binom(k−1,ℓ) / ((n−ℓ)(ℓ+1))`.
pub fn bogovskii_op_constant<R: Real>(n: usize, k: usize) -> Result<R, ConstantError> {
    if k == 0 || k > n {
        return Err(ConstantError::DegreeOutOfRange { n, k });
    }
    let mut sum = R::zero();
    for ell in 0..k {
        sum = sum + binomial::<R>(k - 1, ell) / (R::num_usize(n - ell) * R::num_usize(ell + 1));
    }
    Ok(sum)
}

/// `Γ(m/2)` for a positive half-integer argument given as `half = m`,
/// via the recursion `Γ(x+1) = x·Γ(x)` with `Γ(1/2) = √π` and `Γ(1) = 1`.
fn gamma_half<R: Real>(half: usize) -> R {
    debug_assert!(half >= 1);
    let mut value = if half % 2 == 0 {
        R::one() // Γ(1)
    } else {
        <R as Float>::sqrt(R::PI()) // Γ(1/2)
    };
    let start = if half % 2 == 0 { 2 } else { 1 };
    let mut arg = R::num_usize(start) / R::num(2.0);
    let mut m = start;
    while m < half {
        value = value * arg;
        arg = arg + R::num(0.5);
        m += 2;
    }
    value
}

/// Surface measure of the unit sphere in `R^n`: `2·π^{n/2} / Γ(n/2)`.
pub fn sphere_area<R: Real>(n: usize) -> R {
    assert!(n >= 1, "sphere dimension must be positive");
    let pi = R::PI();
    R::num(2.0) * <R as Float>::powf(pi, R::num_usize(n) / R::num(2.0)) / gamma_half::<R>(n)
}

/// Which averaged potential operator a k-form constant refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KFormVariant {
    /// Averaged Poincaré potential (no boundary conditions).
    Poincare,
    /// Averaged Bogovskiĭ potential (vanishing boundary trace).
    Bogovskii,
}

/// Operator-norm bound of the averaged Poincaré or Bogovskiĭ potential at
/// input degree `k` over a convex domain:
/// `C_{P/B}(n,k) · vol_{n−1}(S₁) · δ^{n+1} / vol(Ω)`. The bound does not
/// depend on the Lebesgue exponent.
pub fn convex_pf_kform<R: Real>(
    n: usize,
    k: usize,
    delta: R,
    volume: R,
    variant: KFormVariant,
) -> Result<ConstantValue<R>, ConstantError> {
    let coeff = match variant {
        KFormVariant::Poincare => poincare_op_constant::<R>(n, k)?,
        KFormVariant::Bogovskii => bogovskii_op_constant::<R>(n, k)?,
    };
    let value = coeff * sphere_area::<R>(n) * <R as Float>::powi(delta, n as i32 + 1) / volume;
    let id = match variant {
        KFormVariant::Poincare => "convex-pf-kform-poincare",
        KFormVariant::Bogovskii => "convex-pf-kform-bogovskii",
    };
    Ok(ConstantValue::new(value, id).with(Assumption::Convexity))
}

/// Convex-domain Poincaré–Friedrichs constant for k-forms at `p = 2` under
/// the conjectured monotonicity in the form degree: the constant is bounded
/// by the scalar (`k = 0`) value `δ/π`. Known for smoothly bounded convex
/// domains; conjectural on general convex domains, hence flagged.
pub fn convex_pf_kform_hilbert<R: Real>(delta: R) -> ConstantValue<R> {
    ConstantValue::new(delta / R::PI(), "convex-pf-kform-hilbert")
        .with(Assumption::Convexity)
        .with(Assumption::HilbertOnly)
        .with(Assumption::ConjectureAdjacent)
}

/// Hilbert-space divergence constant: the diameter itself bounds the
/// Poincaré–Friedrichs constant of the divergence at `p = 2` on any bounded
/// open set, by duality with the Friedrichs inequality.
pub fn hilbert_div_constant<R: Real>(delta: R) -> ConstantValue<R> {
    ConstantValue::new(delta, "hilbert-div-duality")
        .with(Assumption::HilbertOnly)
        .with(Assumption::TopDegreeOnly)
}

/// Poincaré–Friedrichs constant of a simplex with vanishing trace on one
/// face: `p^{−1/p}·δ(T)` for `p < ∞` and `δ(T)` at `p = ∞`. At `p = 2` the
/// improved value `δ(T)/π` is returned, flagged with its variational origin.
pub fn mixed_bc_gradient_constant<R: Real>(
    geo: &SimplexGeometry<R>,
    p: LebesgueExponent<R>,
) -> ConstantValue<R> {
    if p.is_two() {
        ConstantValue::new(geo.diameter / R::PI(), "mixed-bc-gradient-hilbert")
            .with(Assumption::HilbertOnly)
    } else {
        mixed_bc_gradient_constant_generic(geo, p)
    }
}

/// The generic (non-improved) mixed boundary-condition gradient constant
/// `p^{−1/p}·δ(T)`, valid for every `p` including `p = 2`.
pub fn mixed_bc_gradient_constant_generic<R: Real>(
    geo: &SimplexGeometry<R>,
    p: LebesgueExponent<R>,
) -> ConstantValue<R> {
    let value = if p.is_infinite() {
        geo.diameter
    } else {
        p.root_inv(p.p()) * geo.diameter
    };
    ConstantValue::new(value, "mixed-bc-gradient")
}

/// Evaluation mode for the mixed boundary-condition k-form constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KFormBcMode {
    /// The fully tracked bound
    /// `n! · 2^{ℓ+1} · C_B(n,k+1) · vol_{n−1}(S₁) · κ_M^{k−1} · √n · δ(T)`.
    Proved,
    /// The Hilbert-space surrogate `(2/π)·κ_M(T)^{k−1}·δ(T)`, only at
    /// `p = 2`; rests on the conjectured degree-monotonicity of convex
    /// Poincaré–Friedrichs constants.
    HilbertSimple,
}

/// Poincaré–Friedrichs constant for k-forms on a simplex with vanishing
/// trace along a union of `ℓ+1` faces.
///
/// `ell` counts boundary-condition faces minus one: with `ℓ+1` faces carrying
/// the essential condition, pass `ell = ℓ`. The proved bound is
/// `n!·2^{ell+1}·C_B(n,k+1)·vol_{n−1}(S₁)·κ_M(T)^{k−1}·√n·δ(T)`; the factor
/// `√n` bounds the norm of the reference chart per unit diameter. For `k = 0`
/// the `κ_M^{−1}` power is clamped to one and flagged so the reported value
/// never undercuts the derivation.
pub fn mixed_bc_kform_constant<R: Real>(
    geo: &SimplexGeometry<R>,
    n: usize,
    ell: usize,
    k: usize,
    p: LebesgueExponent<R>,
    mode: KFormBcMode,
) -> Result<ConstantValue<R>, ConstantError> {
    if ell >= n || k >= n {
        return Err(ConstantError::DegreeOutOfRange { n, k });
    }
    match mode {
        KFormBcMode::HilbertSimple => {
            if !p.is_two() {
                return Err(ConstantError::ModeExponentMismatch(p.p().as_f64()));
            }
            let mut cv = ConstantValue::new(R::zero(), "mixed-bc-kform-hilbert")
                .with(Assumption::HilbertOnly)
                .with(Assumption::ConjectureAdjacent);
            let kappa_pow = if k == 0 {
                cv = cv.with(Assumption::KappaMClamped);
                R::one()
            } else {
                <R as Float>::powi(geo.kappa_m.value, k as i32 - 1)
            };
            cv.value = R::num(2.0) / R::PI() * kappa_pow * geo.diameter;
            Ok(cv)
        }
        KFormBcMode::Proved => {
            let mut cv = ConstantValue::new(R::zero(), "mixed-bc-kform");
            let kappa_pow = if k == 0 {
                cv = cv.with(Assumption::KappaMClamped);
                R::one()
            } else {
                <R as Float>::powi(geo.kappa_m.value, k as i32 - 1)
            };
            if !geo.kappa_m.exact && k != 1 {
                cv = cv.with(Assumption::KappaMFallback);
            }
            let value = factorial::<R>(n)
                * <R as Float>::powi(R::num(2.0), ell as i32 + 1)
                * bogovskii_op_constant::<R>(n, k + 1)?
                * sphere_area::<R>(n)
                * kappa_pow
                * <R as Float>::sqrt(R::num_usize(n))
                * geo.diameter;
            cv.value = value;
            Ok(cv)
        }
    }
}

/// Poincaré–Friedrichs constants over the union of two face-neighboring
/// cells, with both the two-chart composition and the coarser closed-form
/// bound reported.
#[derive(Debug, Clone)]
pub struct FacePatchConstant<R> {
    /// Whether the union of the two cells is convex.
    pub convex: bool,
    /// The authoritative bound: the convex-domain constant when the union is
    /// convex, else the sharp two-chart composition.
    pub value: ConstantValue<R>,
    /// The sharp two-chart composition bound (always computed).
    pub sharp: R,
    /// The coarser closed-form bound
    /// `2·√n·C_grad(p; δ=1)·(vol ratio)^{1/p}·max(δ₁, δ₂)`.
    pub lemma: R,
    /// Diameter of the union.
    pub diameter: R,
}

/// Unsigned volume of the convex hull of a small point set, by enumerating
/// supporting hyperplanes over all `n`-subsets and summing pyramid volumes
/// from the centroid.
pub fn convex_hull_volume<R: Real>(pts: &[&DVector<R>]) -> R {
    let n = pts[0].len();
    let m = pts.len();
    debug_assert!(m >= n + 1);
    let mut centroid = DVector::<R>::zeros(n);
    for p in pts {
        centroid += *p;
    }
    centroid /= R::num_usize(m);
    let scale = points_diameter(pts);
    let tol = R::num(1e-10) * scale;

    let mut total = R::zero();
    // Every facet of the hull spans a hyperplane with all points on one side.
    let subsets = subsets_of_size(m, n);
    let mut seen_normals: Vec<(DVector<R>, R)> = Vec::new();
    for subset in subsets {
        let facet: Vec<&DVector<R>> = subset.iter().map(|&i| pts[i]).collect();
        if let Some(normal) = hyperplane_normal(&facet) {
            let offset = normal.dot(facet[0]);
            let mut pos = false;
            let mut neg = false;
            for p in pts {
                let s = normal.dot(p) - offset;
                if s > tol {
                    pos = true;
                }
                if s < -tol {
                    neg = true;
                }
            }
            if pos && neg {
                continue; // not supporting
            }
            // Deduplicate hyperplanes: collinear subsets can regenerate the
            // same supporting plane.
            let dup = seen_normals.iter().any(|(nrm, off)| {
                ((nrm - &normal).norm() < R::num(1e-9) && <R as Float>::abs(*off - offset) < tol)
                    || ((nrm + &normal).norm() < R::num(1e-9)
                        && <R as Float>::abs(*off + offset) < tol)
            });
            if dup {
                continue;
            }
            seen_normals.push((normal.clone(), offset));
            // Pyramid from the centroid over this facet. The facet may be a
            // polygon (more than n hull points coplanar); collect all points
            // on the plane and fan-triangulate from the first.
            let on_plane: Vec<&DVector<R>> = pts
                .iter()
                .filter(|p| <R as Float>::abs(normal.dot(p) - offset) <= tol)
                .copied()
                .collect();
            total = total + pyramid_volume(&on_plane, &centroid);
        }
    }
    total
}

/// All `k`-element index subsets of `0..m`, in lexicographic order.
fn subsets_of_size(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, m: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..m {
            current.push(i);
            rec(i + 1, m, k, current, out);
            current.pop();
        }
    }
    rec(0, m, k, &mut current, &mut out);
    out
}

/// Unit normal of the hyperplane spanned by `n` points in `R^n`, or `None`
/// if they are affinely dependent.
fn hyperplane_normal<R: Real>(pts: &[&DVector<R>]) -> Option<DVector<R>> {
    let n = pts[0].len();
    let mut e = nalgebra::DMatrix::<R>::zeros(n, n - 1);
    for c in 1..pts.len() {
        for r in 0..n {
            e[(r, c - 1)] = pts[c][r] - pts[0][r];
        }
    }
    // The normal spans the orthogonal complement of the column span of E.
    // Project each standard basis vector off the span and keep the longest
    // residual; affinely dependent point sets leave no usable residual.
    let qr = e.clone().qr();
    let r = qr.r();
    let mut scale = R::zero();
    let mut min_diag = <R as Float>::infinity();
    for i in 0..r.nrows().min(r.ncols()) {
        let d = <R as Float>::abs(r[(i, i)]);
        scale = <R as Float>::max(scale, d);
        min_diag = <R as Float>::min(min_diag, d);
    }
    if scale <= R::zero() || min_diag < R::num(1e-9) * scale {
        return None; // rank-deficient: no unique hyperplane
    }
    let q = qr.q();
    let mut best: Option<DVector<R>> = None;
    let mut best_norm = R::zero();
    for i in 0..n {
        let mut v = DVector::<R>::zeros(n);
        v[i] = R::one();
        let resid = &v - &q * (q.transpose() * &v);
        let rn = resid.norm();
        if rn > best_norm {
            best_norm = rn;
            best = Some(resid);
        }
    }
    let normal = best?;
    if best_norm <= R::num(1e-9) {
        None
    } else {
        Some(normal / best_norm)
    }
}

/// Volume of the pyramid with polygonal base `base` (coplanar points) and
/// apex `apex`, by fan triangulation of the base from its first point.
fn pyramid_volume<R: Real>(base: &[&DVector<R>], apex: &DVector<R>) -> R {
    let n = apex.len();
    if base.len() < n {
        return R::zero();
    }
    if base.len() == n {
        let mut pts: Vec<&DVector<R>> = base.to_vec();
        pts.push(apex);
        return simplex_volume(&pts);
    }
    // Order the coplanar base points around their centroid is unnecessary for
    // a fan over a convex polygon when we sum over the hull edges; for the
    // small sets here (at most n+2 points) we sum over all (n−1)-subsets
    // containing the first point that form hull facets of the base polygon.
    // In practice (n ≤ 3) the base is a convex polygon in a plane; a fan from
    // the first point over consecutive hull edges works after angular sort.
    if n == 2 {
        // Base is a segment: take extreme points.
        let mut best = R::zero();
        let mut pair = (base[0], base[1]);
        for i in 0..base.len() {
            for j in i + 1..base.len() {
                let d = (base[i] - base[j]).norm();
                if d > best {
                    best = d;
                    pair = (base[i], base[j]);
                }
            }
        }
        let pts = [pair.0, pair.1, apex];
        return simplex_volume(&pts);
    }
    // n == 3: angular sort around the base centroid within the plane.
    let mut centroid = DVector::<R>::zeros(n);
    for p in base {
        centroid += *p;
    }
    centroid /= R::num_usize(base.len());
    let u = (base[0] - &centroid).normalize();
    // Plane normal from two base edges.
    let e1 = base[1] - base[0];
    let e2 = base[base.len() - 1] - base[0];
    let mut normal = DVector::<R>::zeros(3);
    normal[0] = e1[1] * e2[2] - e1[2] * e2[1];
    normal[1] = e1[2] * e2[0] - e1[0] * e2[2];
    normal[2] = e1[0] * e2[1] - e1[1] * e2[0];
    let normal = normal.normalize();
    let mut v = DVector::<R>::zeros(3);
    v[0] = normal[1] * u[2] - normal[2] * u[1];
    v[1] = normal[2] * u[0] - normal[0] * u[2];
    v[2] = normal[0] * u[1] - normal[1] * u[0];
    let mut angles: Vec<(R, usize)> = base
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let d = *p - &centroid;
            (<R as Float>::atan2(d.dot(&v), d.dot(&u)), i)
        })
        .collect();
    angles.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut vol = R::zero();
    for w in 0..angles.len() {
        let i = angles[w].1;
        let j = angles[(w + 1) % angles.len()].1;
        let pts = [&centroid, base[i], base[j], apex];
        vol = vol + simplex_volume(&pts.iter().copied().collect::<Vec<_>>());
    }
    vol
}

/// Poincaré–Friedrichs constant over the union of two face-neighboring
/// cells.
///
/// `face` holds the shared face's points, `apex1`/`apex2` the opposite
/// vertices. When the union is convex (tested by comparing the convex-hull
/// volume against the summed cell volumes) the convex-domain constant with
/// the union's diameter applies. Otherwise the two-chart composition is
/// used: a convex reference union of diameter two is mapped onto the patch
/// by one chart per cell, and the chart norms and determinants enter the
/// transformed inequality directly. The coarser closed-form bound is
/// reported alongside.
pub fn face_patch_constant<R: Real>(
    face: &[&DVector<R>],
    apex1: &DVector<R>,
    apex2: &DVector<R>,
    p: LebesgueExponent<R>,
) -> Result<FacePatchConstant<R>, ConstantError> {
    let n = face[0].len();
    let mut pts1: Vec<&DVector<R>> = face.to_vec();
    pts1.push(apex1);
    let mut pts2: Vec<&DVector<R>> = face.to_vec();
    pts2.push(apex2);
    let geo1 = geometry_of(&pts1)?;
    let geo2 = geometry_of(&pts2)?;

    let mut all: Vec<&DVector<R>> = face.to_vec();
    all.push(apex1);
    all.push(apex2);
    let diameter = points_diameter(&all);
    let hull_vol = convex_hull_volume(&all);
    let sum_vol = geo1.volume + geo2.volume;
    let convex = <R as Float>::abs(hull_vol - sum_vol) <= R::num(1e-10) * sum_vol;

    // Two-chart composition. Chart i maps the reference union (diameter 2,
    // convex) onto the patch; chart 2 differs from the plain vertex chart by
    // an orthogonal coordinate flip, so norms and determinants agree with
    // the vertex chart's.
    let chart = |pts: &[&DVector<R>]| -> Result<(R, R), ConstantError> {
        let map = AffineMap::from_reference(pts);
        let norm = map.norm();
        let adet = <R as Float>::abs(map.det);
        if adet <= R::zero() {
            return Err(ConstantError::Geometry(GeometryError::SingularMap));
        }
        Ok((norm, adet))
    };
    let (norm1, det1) = chart(&pts1)?;
    let (norm2, det2) = chart(&pts2)?;
    let ref_constant = convex_pf_gradient(p, R::num(2.0)).value;
    let det_max = p.root(<R as Float>::max(det1, det2));
    let grad_max = <R as Float>::max(p.root_inv(det1) * norm1, p.root_inv(det2) * norm2);
    let sharp = ref_constant * det_max * grad_max;

    // Coarser closed-form bound with the local volume ratio.
    let vol_ratio = <R as Float>::max(geo1.volume / geo2.volume, geo2.volume / geo1.volume);
    let lemma = ref_constant
        * <R as Float>::sqrt(R::num_usize(n))
        * p.root(vol_ratio)
        * <R as Float>::max(geo1.diameter, geo2.diameter);

    let value = if convex {
        let mut cv = convex_pf_gradient(p, diameter);
        cv.formula_id = "face-patch-convex";
        cv
    } else {
        ConstantValue::new(sharp, "face-patch-two-chart")
    };
    Ok(FacePatchConstant {
        convex,
        value,
        sharp,
        lemma,
        diameter,
    })
}

/// Largest singular value of a matrix, for chart-norm checks.
pub fn operator_norm<R: Real>(m: &nalgebra::DMatrix<R>) -> R {
    singular_values(m)[0]
}
