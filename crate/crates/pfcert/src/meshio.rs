//! Plain-text mesh format: line 1 `n V C`, then `V` lines of `n` reals,
//! then `C` lines of `n+1` integer vertex ids (0-based). `#` starts a
//! comment; blank lines are ignored.

use crate::mesh::{MeshError, SimplicialComplex};

type C64 = SimplicialComplex<f64>;

/// Errors from mesh parsing.
#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

fn err(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Line {
        line,
        msg: msg.into(),
    }
}

/// Parses a mesh from its text representation.
pub fn parse_mesh_str(text: &str) -> Result<C64, ParseError> {
    // Meaningful lines with their original 1-based line numbers.
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| err(0, "empty mesh file"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(err(hline, "header must be `n V C`"));
    }
    let n: usize = parts[0]
        .parse()
        .map_err(|_| err(hline, "bad dimension in header"))?;
    let nv: usize = parts[1]
        .parse()
        .map_err(|_| err(hline, "bad vertex count in header"))?;
    let nc: usize = parts[2]
        .parse()
        .map_err(|_| err(hline, "bad cell count in header"))?;

    let mut coords = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(usize::MAX, "unexpected end of file in vertex block"))?;
        let row: Result<Vec<f64>, _> = l.split_whitespace().map(str::parse::<f64>).collect();
        let row = row.map_err(|_| err(ln, "bad coordinate"))?;
        if row.len() != n {
            return Err(err(ln, format!("expected {n} coordinates, got {}", row.len())));
        }
        coords.push(row);
    }
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(usize::MAX, "unexpected end of file in cell block"))?;
        let row: Result<Vec<usize>, _> = l.split_whitespace().map(str::parse::<usize>).collect();
        let row = row.map_err(|_| err(ln, "bad vertex id"))?;
        if row.len() != n + 1 {
            return Err(err(ln, format!("expected {} vertex ids, got {}", n + 1, row.len())));
        }
        if let Some(&v) = row.iter().find(|&&v| v >= nv) {
            return Err(err(ln, format!("vertex id {v} out of range (V = {nv})")));
        }
        cells.push(row);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(err(ln, "trailing content after cell block"));
    }
    Ok(C64::build(n, coords, &cells)?)
}

/// Parses a mesh from a file.
pub fn parse_mesh(path: &std::path::Path) -> Result<C64, ParseError> {
    parse_mesh_str(&std::fs::read_to_string(path)?)
}

/// Writes a mesh in the text format (full precision; round-trips exactly
/// for the built-in examples, whose coordinates are dyadic).
pub fn write_mesh(c: &C64) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{} {} {}\n",
        c.n(),
        c.num_vertices(),
        c.cells().len()
    ));
    for v in c.coords() {
        let row: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    for cell in c.cells() {
        let row: Vec<String> = cell.vertices().iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}
