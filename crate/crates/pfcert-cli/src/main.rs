//! Command-line front end: estimation, shelling verification, the finite
//! element reference oracle, and full table reproduction.
//!
//! Exit codes: 0 on success, 1 on computation failure (with a JSON
//! diagnostic on stdout), 2 on usage errors.

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use pfcert::bounds::{estimate_pf, EstimateConfig, LocalMode, Strategy};
use pfcert::examples::{example_mesh, EXAMPLE_NAMES};
use pfcert::feec::{reference_pf_constant, BcSelection};
use pfcert::meshio::parse_mesh;
use pfcert::report::{
    build_report, config_echo, estimate_record, mesh_metadata, to_csv, to_json, TableRow,
};
use pfcert::shelling::verify_shelling;
use pfcert::{Complex, Exponent};

#[derive(Parser)]
#[command(
    name = "pfcert",
    version,
    about = "Certified upper bounds for Poincaré–Friedrichs constants over shellable simplicial meshes"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    /// Gradient tree estimate for k = 0, shelling estimate otherwise.
    Auto,
    GradientGlue,
    GradientPatch,
    ExteriorShelling,
    AppendixProduct,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Only fully proved constants.
    Proved,
    /// Hilbert-space improved constants at p = 2 (flagged in the output).
    Hilbert,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute a certified upper bound for the exterior derivative on k-forms.
    Estimate {
        /// Example mesh name or path to a mesh file.
        mesh: String,
        /// Form degree (0 = gradient; n-1 = divergence).
        #[arg(long, default_value_t = 0)]
        k: usize,
        /// Lebesgue exponent (a number, or "inf").
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Verifier-call budget for shelling searches.
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
        /// Also compute the finite element reference at this refinement level.
        #[arg(long)]
        refine: Option<usize>,
        #[arg(long, value_enum, default_value_t = ModeArg::Hilbert)]
        mode: ModeArg,
    },
    /// Check whether a cell order is a shelling of the mesh.
    VerifyShelling {
        /// Example mesh name or path to a mesh file.
        mesh: String,
        /// Cell indices, space- or comma-separated.
        #[arg(required = true)]
        order: Vec<String>,
    },
    /// Run the finite element reference eigenvalue oracle.
    Reference {
        /// Example mesh name or path to a mesh file.
        mesh: String,
        /// Form degree.
        #[arg(long)]
        k: usize,
        /// Essential boundary: "all", "none", or a comma-separated list of
        /// boundary-face indices.
        #[arg(long, default_value = "none")]
        bc: String,
        /// Uniform refinement level.
        #[arg(long, default_value_t = 2)]
        refine: usize,
    },
    /// Reproduce the reference / estimate / ratio tables (CSV on stdout).
    Tables {
        /// Which tables: "2d", "3d", or "all".
        #[arg(long, default_value = "all")]
        which: String,
        /// Uniform refinement level for the references (default 3 in 2D, 2 in 3D).
        #[arg(long)]
        refine: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
    },
}

fn fail(msg: impl std::fmt::Display) -> ! {
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({ "error": msg.to_string() })).unwrap()
    );
    std::process::exit(1);
}

fn load_mesh(spec: &str) -> (String, Complex) {
    match example_mesh(spec) {
        Some(Ok(c)) => (spec.to_string(), c),
        Some(Err(e)) => fail(format!("example mesh {spec}: {e}")),
        None => match parse_mesh(std::path::Path::new(spec)) {
            Ok(c) => (spec.to_string(), c),
            Err(e) => fail(format!("mesh {spec}: {e}")),
        },
    }
}

fn parse_p(s: &str) -> Exponent {
    if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
        return Exponent::infinity();
    }
    match s.parse::<f64>().map_err(|e| e.to_string()).and_then(|v| {
        Exponent::new(v).map_err(|e| e.to_string())
    }) {
        Ok(p) => p,
        Err(e) => fail(format!("invalid exponent {s}: {e}")),
    }
}

fn run_estimate(
    mesh: String,
    k: usize,
    p: String,
    strategy: StrategyArg,
    seed: u64,
    budget: usize,
    refine: Option<usize>,
    mode: ModeArg,
) {
    let (name, c) = load_mesh(&mesh);
    let p = parse_p(&p);
    let strategy = match strategy {
        StrategyArg::Auto => {
            if k == 0 {
                Strategy::GradientGlue
            } else {
                Strategy::ExteriorShelling
            }
        }
        StrategyArg::GradientGlue => Strategy::GradientGlue,
        StrategyArg::GradientPatch => Strategy::GradientPatch,
        StrategyArg::ExteriorShelling => Strategy::ExteriorShelling,
        StrategyArg::AppendixProduct => Strategy::AppendixProduct,
    };
    let config = EstimateConfig {
        seed,
        budget,
        local_mode: match mode {
            ModeArg::Proved => LocalMode::Proved,
            ModeArg::Hilbert => LocalMode::Hilbert,
        },
        ..EstimateConfig::default()
    };
    let est = match estimate_pf(&c, k, p, strategy, &config) {
        Ok(e) => e,
        Err(e) => fail(e),
    };
    let reference = refine.map(|r| {
        match reference_pf_constant(&c, k, &BcSelection::None, r) {
            Ok(res) => res.constant,
            Err(e) => fail(e),
        }
    });
    let report = build_report(
        mesh_metadata(&name, &c),
        config_echo(&config, refine),
        vec![estimate_record(&est, reference)],
    );
    println!("{}", to_json(&report));
}

fn run_verify_shelling(mesh: String, order_args: Vec<String>) {
    let (_, c) = load_mesh(&mesh);
    let mut order = Vec::new();
    for arg in order_args {
        for tok in arg.split(',').filter(|t| !t.trim().is_empty()) {
            match tok.trim().parse::<usize>() {
                Ok(v) => order.push(v),
                Err(_) => fail(format!("invalid cell index: {tok}")),
            }
        }
    }
    let m = c.cells().len();
    let mut seen = vec![false; m];
    if order.len() != m || order.iter().any(|&i| i >= m || std::mem::replace(&mut seen[i], true)) {
        fail(format!(
            "order must be a permutation of the {m} cell indices, got {:?}",
            order
        ));
    }
    match verify_shelling(&c, &order) {
        Ok(sh) => {
            let steps: Vec<_> = sh
                .steps
                .iter()
                .map(|s| {
                    json!({
                        "ell": s.ell_m,
                        "shared_faces": s.shared_face_count,
                        "center": s.s_m.as_ref().map(|x| x.vertices().to_vec()),
                    })
                })
                .collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "valid": true, "order": sh.order, "steps": steps,
                }))
                .unwrap()
            );
        }
        Err(v) => {
            let witness: Vec<Vec<usize>> =
                v.witness.iter().map(|s| s.vertices().to_vec()).collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "valid": false,
                    "step": v.step,
                    "kind": v.kind,
                    "witness": witness,
                    "message": v.to_string(),
                }))
                .unwrap()
            );
            std::process::exit(1);
        }
    }
}

fn parse_bc(s: &str) -> BcSelection {
    match s {
        "all" => BcSelection::All,
        "none" => BcSelection::None,
        list => {
            let faces: Result<Vec<usize>, _> =
                list.split(',').map(|t| t.trim().parse::<usize>()).collect();
            match faces {
                Ok(f) => BcSelection::Faces(f),
                Err(_) => fail(format!("invalid boundary selection: {list}")),
            }
        }
    }
}

fn run_reference(mesh: String, k: usize, bc: String, refine: usize) {
    let (name, c) = load_mesh(&mesh);
    let bc = parse_bc(&bc);
    match reference_pf_constant(&c, k, &bc, refine) {
        Ok(res) => {
            let mut v = serde_json::to_value(&res).unwrap();
            v["mesh"] = json!(name);
            v["k"] = json!(k);
            println!("{}", serde_json::to_string_pretty(&v).unwrap());
        }
        Err(e) => fail(e),
    }
}

/// One (mesh, k, strategy) estimation job plus the FEM reference for the
/// same (mesh, k); results are collected in deterministic job order.
fn run_tables(which: String, refine: Option<usize>, seed: u64, budget: usize) {
    let groups: Vec<(&str, &[&str])> = match which.as_str() {
        "2d" => vec![("2d", &EXAMPLE_NAMES[0..5])],
        "3d" => vec![("3d", &EXAMPLE_NAMES[5..10])],
        "all" => vec![("2d", &EXAMPLE_NAMES[0..5]), ("3d", &EXAMPLE_NAMES[5..10])],
        other => fail(format!("unknown table group: {other} (expected 2d, 3d, or all)")),
    };
    let p2 = Exponent::two();
    for (label, names) in groups {
        let n_dim = if label == "2d" { 2 } else { 3 };
        let refine = refine.unwrap_or(if n_dim == 2 { 3 } else { 2 });
        let config = EstimateConfig {
            seed,
            budget,
            ..EstimateConfig::default()
        };
        // All (mesh, k) reference and estimate jobs run concurrently;
        // par_iter + collect preserves the deterministic job order.
        let jobs: Vec<(usize, usize)> = (0..names.len())
            .flat_map(|mi| (0..n_dim).map(move |k| (mi, k)))
            .collect();
        let results: Vec<(f64, Vec<(Strategy, f64)>)> = jobs
            .par_iter()
            .map(|&(mi, k)| {
                let c = example_mesh(names[mi]).unwrap().unwrap();
                let reference = reference_pf_constant(&c, k, &BcSelection::None, refine)
                    .map(|r| r.constant)
                    .unwrap_or(f64::NAN);
                let strategies: Vec<Strategy> = if k == 0 {
                    vec![Strategy::GradientGlue, Strategy::ExteriorShelling]
                } else {
                    vec![Strategy::ExteriorShelling]
                };
                let ests = strategies
                    .into_iter()
                    .map(|s| {
                        let v = estimate_pf(&c, k, p2, s, &config)
                            .map(|e| e.constant)
                            .unwrap_or(f64::NAN);
                        (s, v)
                    })
                    .collect();
                (reference, ests)
            })
            .collect();
        let get = |mi: usize, k: usize| -> &(f64, Vec<(Strategy, f64)>) {
            &results[mi * n_dim + k]
        };

        // Gradient table: tree estimate, shelling estimate, ratios.
        let mut rows = Vec::new();
        for (mi, name) in names.iter().enumerate() {
            let (r, ests) = get(mi, 0);
            let tree = ests[0].1;
            let shell = ests[1].1;
            rows.push(TableRow {
                mesh: name.to_string(),
                cells: vec![
                    Some(*r),
                    Some(tree),
                    Some(tree / r),
                    Some(shell),
                    Some(shell / r),
                ],
            });
        }
        println!("# {label} gradient");
        print!(
            "{}",
            to_csv(
                &["grad_ref", "grad_est_tree", "grad_ratio_tree", "grad_est_shelling", "grad_ratio_shelling"],
                &rows
            )
        );

        // Remaining operators: curl (3D only) and divergence.
        let mut rows = Vec::new();
        for (mi, name) in names.iter().enumerate() {
            let mut cells = Vec::new();
            for k in 1..n_dim {
                let (r, ests) = get(mi, k);
                let est = ests[0].1;
                cells.extend([Some(*r), Some(est), Some(est / r)]);
            }
            rows.push(TableRow {
                mesh: name.to_string(),
                cells,
            });
        }
        let header: &[&str] = if n_dim == 2 {
            &["div_ref", "div_est", "div_ratio"]
        } else {
            &["curl_ref", "curl_est", "curl_ratio", "div_ref", "div_est", "div_ratio"]
        };
        println!("# {label} curl/divergence");
        print!("{}", to_csv(header, &rows));
    }
}

fn main() {
    match Cli::parse().cmd {
        Cmd::Estimate {
            mesh,
            k,
            p,
            strategy,
            seed,
            budget,
            refine,
            mode,
        } => run_estimate(mesh, k, p, strategy, seed, budget, refine, mode),
        Cmd::VerifyShelling { mesh, order } => run_verify_shelling(mesh, order),
        Cmd::Reference {
            mesh,
            k,
            bc,
            refine,
        } => run_reference(mesh, k, bc, refine),
        Cmd::Tables {
            which,
            refine,
            seed,
            budget,
        } => run_tables(which, refine, seed, budget),
    }
}
