//! Report assembly and emission: a versioned JSON schema carrying full
//! precision and provenance, and CSV tables mirroring the reference /
//! estimate / ratio layout per differential operator.

use serde::Serialize;

use crate::bounds::{Combine, CoefficientMode, EstimateResult, LocalMode};
use crate::constants::Assumption;
use crate::geometry::{cell_geometry, mesh_ratios};
use crate::mesh::SimplicialComplex;
use crate::scalar::Real;

/// Version of the crate emitting the report.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Version of the JSON report schema (see `schema/report.schema.json`).
pub const SCHEMA_VERSION: &str = "1";

/// Mesh-level metadata included in every report.
#[derive(Debug, Clone, Serialize)]
pub struct MeshMetadata {
    /// Example name, or the file path for external meshes.
    pub mesh: String,
    pub n: usize,
    pub num_vertices: usize,
    pub num_cells: usize,
    pub euler_characteristic: i64,
    /// Largest face-neighbor volume ratio `C_ρ`.
    pub c_rho: f64,
    /// Largest diameter ratio between intersecting cells `C_θ`.
    pub c_theta: f64,
    /// Largest face-reflection operator norm `C_ξ`.
    pub c_xi: f64,
    /// Worst aspect shape measure `κ_A` over the cells.
    pub kappa_a: f64,
    /// Worst algebraic shape measure `κ_M` over the cells.
    pub kappa_m: f64,
}

/// Echo of the estimation configuration that produced the results.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub budget: usize,
    pub per_root: usize,
    pub mode: String,
    pub combine: String,
    pub coefficient_mode: String,
    /// Refinement level of the reference solves, when references were run.
    pub refine: Option<usize>,
}

/// One estimate, optionally paired with its reference constant.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateRecord {
    pub k: usize,
    pub p: f64,
    pub strategy: String,
    /// The certified upper bound (full precision).
    pub constant: f64,
    /// Conjecture-free companion computed on the same traversal.
    pub proved_constant: Option<f64>,
    /// Provenance flags of the constituent constants.
    pub assumptions: Vec<Assumption>,
    /// Cell traversal (tree or shelling order) behind the estimate.
    pub traversal: Vec<usize>,
    /// The unwrapped coefficient ledger, row-major.
    pub ledger: Option<Vec<Vec<f64>>>,
    /// Human-readable per-step provenance notes.
    pub provenance: Vec<String>,
    /// Finite element reference constant, when computed.
    pub reference: Option<f64>,
    /// `constant / reference`, when a reference is present.
    pub ratio: Option<f64>,
}

/// The versioned report: metadata, configuration echo, and records.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: String,
    pub tool_version: String,
    /// Unix seconds at emission; excluded from determinism comparisons.
    pub timestamp: u64,
    pub config: ConfigEcho,
    pub mesh: MeshMetadata,
    pub estimates: Vec<EstimateRecord>,
}

/// Collects mesh metadata from a complex.
pub fn mesh_metadata<R: Real>(name: &str, c: &SimplicialComplex<R>) -> MeshMetadata {
    let ratios = mesh_ratios(c);
    let mut kappa_a = 0.0f64;
    let mut kappa_m = 0.0f64;
    for i in 0..c.cells().len() {
        if let Ok(g) = cell_geometry(c, i) {
            kappa_a = kappa_a.max(g.kappa_a.as_f64());
            kappa_m = kappa_m.max(g.kappa_m.value.as_f64());
        }
    }
    MeshMetadata {
        mesh: name.to_string(),
        n: c.n(),
        num_vertices: c.num_vertices(),
        num_cells: c.cells().len(),
        euler_characteristic: c.euler_characteristic(),
        c_rho: ratios.c_rho.as_f64(),
        c_theta: ratios.c_theta.as_f64(),
        c_xi: ratios.c_xi.as_f64(),
        kappa_a,
        kappa_m,
    }
}

/// Builds an estimate record from a result, attaching a reference if given.
pub fn estimate_record<R: Real>(
    est: &EstimateResult<R>,
    reference: Option<f64>,
) -> EstimateRecord {
    let ledger = est.ledger.as_ref().map(|l| {
        (0..l.c.nrows())
            .map(|m| (0..l.c.ncols()).map(|j| l.c[(m, j)].as_f64()).collect())
            .collect()
    });
    let provenance = est
        .ledger
        .as_ref()
        .map(|l| l.provenance.clone())
        .unwrap_or_default();
    let constant = est.constant.as_f64();
    EstimateRecord {
        k: est.k,
        p: est.p,
        strategy: est.strategy.to_string(),
        constant,
        proved_constant: est.proved_constant.map(|v| v.as_f64()),
        assumptions: est.assumptions.clone(),
        traversal: est.traversal.clone(),
        ledger,
        provenance,
        reference,
        ratio: reference.map(|r| constant / r),
    }
}

/// Echoes an estimation configuration.
pub fn config_echo(cfg: &crate::bounds::EstimateConfig, refine: Option<usize>) -> ConfigEcho {
    ConfigEcho {
        seed: cfg.seed,
        budget: cfg.budget,
        per_root: cfg.per_root,
        mode: match cfg.local_mode {
            LocalMode::Proved => "proved".into(),
            LocalMode::Hilbert => "hilbert".into(),
        },
        combine: match cfg.combine {
            Combine::Minkowski => "minkowski".into(),
            Combine::L1 => "l1".into(),
        },
        coefficient_mode: match cfg.coefficient_mode {
            CoefficientMode::Individualized => "individualized".into(),
            CoefficientMode::Global => "global".into(),
        },
        refine,
    }
}

/// Assembles a report; the timestamp is taken at the call.
pub fn build_report(
    mesh: MeshMetadata,
    config: ConfigEcho,
    estimates: Vec<EstimateRecord>,
) -> Report {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Report {
        schema_version: SCHEMA_VERSION.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        timestamp,
        config,
        mesh,
        estimates,
    }
}

/// Serializes a report to pretty JSON. Struct field order is fixed, so
/// identical inputs yield byte-identical output apart from the timestamp.
pub fn to_json(report: &Report) -> String {
    serde_json::to_string_pretty(report).expect("report serialization cannot fail")
}

/// Formats a value with four significant digits, mirroring the reference
/// tables; integral magnitudes above `10^4` lose their sub-unit digits.
pub fn sig4(x: f64) -> String {
    if x == 0.0 {
        return "0.000".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (3 - exp).max(0) as usize;
    let scale = 10f64.powi(3 - exp);
    let rounded = (x * scale).round() / scale;
    format!("{rounded:.decimals$}")
}

/// One row of a CSV table: the mesh name and `(ref, est, ratio)` triples
/// per column group, `None` entries rendered empty.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub mesh: String,
    pub cells: Vec<Option<f64>>,
}

/// Emits a CSV table with the given header columns and rows, numeric cells
/// formatted at four significant digits.
pub fn to_csv(header: &[&str], rows: &[TableRow]) -> String {
    let mut out = String::new();
    out.push_str("mesh,");
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.mesh);
        for cell in &row.cells {
            out.push(',');
            if let Some(v) = cell {
                out.push_str(&sig4(*v));
            }
        }
        out.push('\n');
    }
    out
}
