//! Simplicial complex representation: incidence, stars, links, boundary
//! classification, face connectivity, and combinatorial intersections.
//!
//! A complex is built from vertex coordinates and top-dimensional cells; the
//! full skeleton is generated by closure. Complexes are immutable after
//! construction and cheap to restrict to subcomplexes (coordinates are
//! shared).

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DVector;

use crate::geometry;
use crate::scalar::Real;

/// Errors arising during complex construction and queries.
#[derive(Debug, Clone, thiserror::Error)]
pub enum MeshError {
    #[error("cell #{cell} is degenerate: volume {volume:e} below tolerance")]
    DegenerateCell { cell: usize, volume: f64 },
    #[error("cell #{0} duplicates an earlier cell")]
    DuplicateCell(usize),
    #[error("cells #{cell_a} and #{cell_b} have overlapping interiors")]
    NonRealizable { cell_a: usize, cell_b: usize },
    #[error("cell #{cell} references vertex id {id}, but only {count} vertices exist")]
    IndexOutOfRange { cell: usize, id: usize, count: usize },
    #[error("vertex {0} is not contained in any cell (complex not purely top-dimensional)")]
    UnusedVertex(usize),
    #[error("coordinate of vertex {0} is not finite or has wrong length")]
    BadCoordinate(usize),
    #[error("face {face:?} has {count} cofaces; a pseudomanifold allows at most 2")]
    NotPseudomanifold { face: Simplex, count: usize },
    #[error("simplex {0:?} is not a member of the complex")]
    SimplexNotFound(Simplex),
    #[error("complex is not face-connected")]
    Disconnected,
}

/// A simplex, stored as a strictly ascending tuple of vertex ids.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex {
    verts: Vec<usize>,
}

impl std::fmt::Debug for Simplex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Simplex{:?}", self.verts)
    }
}

impl Simplex {
    /// Creates a simplex from vertex ids; sorts them and panics on duplicates
    /// (duplicate ids never describe a valid simplex).
    pub fn new(mut verts: Vec<usize>) -> Self {
        verts.sort_unstable();
        assert!(
            verts.windows(2).all(|w| w[0] != w[1]),
            "duplicate vertex ids in simplex: {verts:?}"
        );
        Simplex { verts }
    }

    /// Vertex ids in ascending order.
    pub fn vertices(&self) -> &[usize] {
        &self.verts
    }

    /// Dimension, i.e. number of vertices minus one.
    pub fn dim(&self) -> usize {
        self.verts.len() - 1
    }

    /// Whether `other` is a subsimplex (face of any dimension) of `self`.
    pub fn contains(&self, other: &Simplex) -> bool {
        // Both sorted: subset test by merge scan.
        let mut it = self.verts.iter();
        other
            .verts
            .iter()
            .all(|v| it.by_ref().any(|w| w == v))
    }

    /// Whether the vertex id is among this simplex's vertices.
    pub fn has_vertex(&self, v: usize) -> bool {
        self.verts.binary_search(&v).is_ok()
    }

    /// The common subsimplex (intersection of vertex sets), if nonempty.
    pub fn intersection(&self, other: &Simplex) -> Option<Simplex> {
        let mut shared = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.verts.len() && j < other.verts.len() {
            match self.verts[i].cmp(&other.verts[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    shared.push(self.verts[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        if shared.is_empty() {
            None
        } else {
            Some(Simplex { verts: shared })
        }
    }

    /// All faces of codimension one (each omits exactly one vertex), paired
    /// with the index of the omitted vertex.
    pub fn facets(&self) -> impl Iterator<Item = (usize, Simplex)> + '_ {
        (0..self.verts.len()).map(move |i| {
            let mut v = self.verts.clone();
            v.remove(i);
            (i, Simplex { verts: v })
        })
    }

    /// All subsimplices of dimension `d`.
    pub fn subsimplices(&self, d: usize) -> Vec<Simplex> {
        let mut out = Vec::new();
        let k = d + 1;
        let m = self.verts.len();
        if k > m {
            return out;
        }
        // Iterative combination enumeration in lexicographic order.
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(Simplex {
                verts: idx.iter().map(|&i| self.verts[i]).collect(),
            });
            // Advance the combination.
            let mut i = k;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if idx[i] != i + m - k {
                    idx[i] += 1;
                    for j in i + 1..k {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Vertices of `self` not belonging to `other`, as a simplex (if any).
    pub fn complement_within(&self, other: &Simplex) -> Option<Simplex> {
        let rest: Vec<usize> = self
            .verts
            .iter()
            .copied()
            .filter(|v| !other.has_vertex(*v))
            .collect();
        if rest.is_empty() {
            None
        } else {
            Some(Simplex { verts: rest })
        }
    }
}

/// Classification of a codimension-one face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceClass {
    /// Shared by exactly two cells.
    Interior,
    /// Contained in exactly one cell.
    Boundary,
}

/// The intersection of a cell with a union of other cells, as maximal shared
/// subsimplices.
#[derive(Debug, Clone)]
pub struct InterfaceSet {
    /// Maximal common subsimplices; no member is a face of another.
    pub shared_maximal: Vec<Simplex>,
    /// Populated iff every maximal shared simplex is a codimension-one face
    /// of the cell.
    pub as_faces: Option<Vec<Simplex>>,
}

impl InterfaceSet {
    pub fn is_empty(&self) -> bool {
        self.shared_maximal.is_empty()
    }
}

/// Construction options for [`SimplicialComplex::build_with`].
#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Relative tolerance for the interior-overlap (realizability) check.
    pub overlap_tol: f64,
    /// Check all cell pairs for overlap instead of only pairs sharing a
    /// vertex.
    pub overlap_all_pairs: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            overlap_tol: 1e-12,
            overlap_all_pairs: false,
        }
    }
}

/// A finite simplicial complex embedded in Euclidean space, closed under
/// subsimplices and purely top-dimensional.
#[derive(Clone)]
pub struct SimplicialComplex<R: Real> {
    n: usize,
    coords: Arc<Vec<DVector<R>>>,
    /// `skeleta[d]` is the sorted list of `d`-simplices.
    skeleta: Vec<Vec<Simplex>>,
    /// Per dimension, the position of each simplex within `skeleta[d]`.
    index: Vec<HashMap<Simplex, usize>>,
    /// Codimension-one face -> indices of containing cells.
    cofaces: HashMap<Simplex, Vec<usize>>,
}

impl<R: Real> SimplicialComplex<R> {
    /// Builds and validates a complex from coordinates and top cells with
    /// default options.
    pub fn build(
        n: usize,
        coords: Vec<Vec<R>>,
        cells: &[Vec<usize>],
    ) -> Result<Self, MeshError> {
        Self::build_with(n, coords, cells, &BuildOptions::default())
    }

    /// Builds and validates a complex from coordinates and top cells.
    pub fn build_with(
        n: usize,
        coords: Vec<Vec<R>>,
        cells: &[Vec<usize>],
        options: &BuildOptions,
    ) -> Result<Self, MeshError> {
        let count = coords.len();
        let mut vectors = Vec::with_capacity(count);
        for (i, c) in coords.into_iter().enumerate() {
            if c.len() != n || c.iter().any(|x| !num_traits::Float::is_finite(*x)) {
                return Err(MeshError::BadCoordinate(i));
            }
            vectors.push(DVector::from_vec(c));
        }
        let coords = Arc::new(vectors);

        let mut simplices = Vec::with_capacity(cells.len());
        for (ci, cell) in cells.iter().enumerate() {
            for &id in cell {
                if id >= count {
                    return Err(MeshError::IndexOutOfRange {
                        cell: ci,
                        id,
                        count,
                    });
                }
            }
            let mut sorted = cell.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) || sorted.len() != n + 1 {
                return Err(MeshError::DegenerateCell {
                    cell: ci,
                    volume: 0.0,
                });
            }
            simplices.push(Simplex { verts: sorted });
        }

        // Duplicate cells.
        let mut seen: HashMap<&Simplex, usize> = HashMap::new();
        for (ci, s) in simplices.iter().enumerate() {
            if seen.insert(s, ci).is_some() {
                return Err(MeshError::DuplicateCell(ci));
            }
        }

        // Volumes.
        for (ci, s) in simplices.iter().enumerate() {
            let pts: Vec<&DVector<R>> = s.verts.iter().map(|&v| &coords[v]).collect();
            let vol = geometry::simplex_volume(&pts);
            let scale = geometry::points_diameter(&pts);
            let tol = R::num(1e-12) * num_traits::Float::powi(scale, n as i32);
            if !(vol > tol) {
                return Err(MeshError::DegenerateCell {
                    cell: ci,
                    volume: vol.as_f64(),
                });
            }
        }

        // Every vertex used.
        let mut used = vec![false; count];
        for s in &simplices {
            for &v in &s.verts {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(MeshError::UnusedVertex(v));
        }

        let complex = Self::from_cells(n, coords, simplices);

        // Geometric realizability: interiors of distinct cells must be
        // disjoint. By default only pairs sharing a vertex are checked.
        let cells = complex.cells();
        for a in 0..cells.len() {
            for b in a + 1..cells.len() {
                let share = cells[a].intersection(&cells[b]);
                if !options.overlap_all_pairs && share.is_none() {
                    continue;
                }
                let pa: Vec<&DVector<R>> =
                    cells[a].verts.iter().map(|&v| &complex.coords[v]).collect();
                let pb: Vec<&DVector<R>> =
                    cells[b].verts.iter().map(|&v| &complex.coords[v]).collect();
                if geometry::simplices_interior_overlap(&pa, &pb, R::num(options.overlap_tol)) {
                    return Err(MeshError::NonRealizable {
                        cell_a: a,
                        cell_b: b,
                    });
                }
            }
        }

        Ok(complex)
    }

    /// Assembles skeleta and coface maps from validated cells. Used both by
    /// `build_with` and by subcomplex restriction (which needs no geometric
    /// re-validation).
    fn from_cells(n: usize, coords: Arc<Vec<DVector<R>>>, cells: Vec<Simplex>) -> Self {
        let mut skeleta: Vec<Vec<Simplex>> = vec![Vec::new(); n + 1];
        let mut index: Vec<HashMap<Simplex, usize>> = vec![HashMap::new(); n + 1];
        for d in 0..=n {
            let mut set: Vec<Simplex> = cells
                .iter()
                .flat_map(|c| c.subsimplices(d))
                .collect();
            set.sort_unstable();
            set.dedup();
            for (i, s) in set.iter().enumerate() {
                index[d].insert(s.clone(), i);
            }
            skeleta[d] = set;
        }
        skeleta[n] = cells;
        index[n] = skeleta[n]
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();

        let mut cofaces: HashMap<Simplex, Vec<usize>> = HashMap::new();
        if n >= 1 {
            for (ci, cell) in skeleta[n].iter().enumerate() {
                for (_, f) in cell.facets() {
                    cofaces.entry(f).or_default().push(ci);
                }
            }
        }

        SimplicialComplex {
            n,
            coords,
            skeleta,
            index,
            cofaces,
        }
    }

    /// Restriction to a subset of cells; shares coordinates with the parent
    /// and keeps global vertex ids.
    pub fn restrict(&self, cell_indices: &[usize]) -> SimplicialComplex<R> {
        let cells: Vec<Simplex> = cell_indices
            .iter()
            .map(|&i| self.skeleta[self.n][i].clone())
            .collect();
        Self::from_cells(self.n, Arc::clone(&self.coords), cells)
    }

    /// Returns a copy with every coordinate transformed by `f`. The
    /// combinatorial structure is untouched; the caller is responsible for
    /// `f` being affine and orientation-safe.
    pub fn map_coords(&self, f: impl Fn(&DVector<R>) -> DVector<R>) -> SimplicialComplex<R> {
        let coords: Vec<DVector<R>> = self.coords.iter().map(f).collect();
        SimplicialComplex {
            n: self.n,
            coords: Arc::new(coords),
            skeleta: self.skeleta.clone(),
            index: self.index.clone(),
            cofaces: self.cofaces.clone(),
        }
    }

    /// Ambient (= top) dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len()
    }

    /// Coordinates of vertex `v`.
    pub fn vertex(&self, v: usize) -> &DVector<R> {
        &self.coords[v]
    }

    pub fn coords(&self) -> &[DVector<R>] {
        &self.coords
    }

    pub fn coords_arc(&self) -> Arc<Vec<DVector<R>>> {
        Arc::clone(&self.coords)
    }

    /// All `d`-simplices, sorted lexicographically.
    pub fn skeleton(&self, d: usize) -> &[Simplex] {
        &self.skeleta[d]
    }

    /// Top-dimensional cells.
    pub fn cells(&self) -> &[Simplex] {
        &self.skeleta[self.n]
    }

    /// Position of a simplex within its skeleton, if present.
    pub fn simplex_index(&self, s: &Simplex) -> Option<usize> {
        self.index.get(s.dim()).and_then(|m| m.get(s)).copied()
    }

    pub fn contains_simplex(&self, s: &Simplex) -> bool {
        self.simplex_index(s).is_some()
    }

    /// Coordinates of the vertices of `s`.
    pub fn simplex_points(&self, s: &Simplex) -> Vec<&DVector<R>> {
        s.verts.iter().map(|&v| &self.coords[v]).collect()
    }

    /// Indices of cells containing the codimension-one face `f`.
    pub fn face_cofaces(&self, f: &Simplex) -> &[usize] {
        self.cofaces.get(f).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Orientation sign of cell `i`: sign of the determinant of its edge
    /// matrix in ascending vertex order.
    pub fn cell_orientation(&self, i: usize) -> i8 {
        let pts = self.simplex_points(&self.cells()[i]);
        geometry::orientation_sign(&pts)
    }

    /// Euler characteristic from skeleton counts.
    pub fn euler_characteristic(&self) -> i64 {
        let mut chi = 0i64;
        for (d, sk) in self.skeleta.iter().enumerate() {
            let c = sk.len() as i64;
            chi += if d % 2 == 0 { c } else { -c };
        }
        chi
    }

    /// Classifies every codimension-one face as interior or boundary.
    ///
    /// Errors with [`MeshError::NotPseudomanifold`] if any face has three or
    /// more cofaces.
    pub fn classify_faces(&self) -> Result<HashMap<Simplex, FaceClass>, MeshError> {
        let mut out = HashMap::with_capacity(self.skeleta[self.n - 1].len());
        for f in &self.skeleta[self.n - 1] {
            let count = self.face_cofaces(f).len();
            let class = match count {
                1 => FaceClass::Boundary,
                2 => FaceClass::Interior,
                _ => {
                    return Err(MeshError::NotPseudomanifold {
                        face: f.clone(),
                        count,
                    })
                }
            };
            out.insert(f.clone(), class);
        }
        Ok(out)
    }

    /// Boundary faces (exactly one coface). Unlike [`classify_faces`], does
    /// not error on pseudomanifold violations; faces with three or more
    /// cofaces are simply not boundary.
    ///
    /// [`classify_faces`]: Self::classify_faces
    pub fn boundary_faces(&self) -> Vec<Simplex> {
        self.skeleta[self.n - 1]
            .iter()
            .filter(|f| self.face_cofaces(f).len() == 1)
            .cloned()
            .collect()
    }

    /// Whether a simplex of any dimension lies on the boundary, i.e. is
    /// contained in some boundary face.
    pub fn is_boundary_simplex(&self, s: &Simplex) -> bool {
        if s.dim() == self.n {
            return false;
        }
        self.boundary_faces().iter().any(|f| f.contains(s))
    }

    /// The local star of `s`: all cells containing `s`, plus the subsimplices
    /// of the star closure not containing `s` (the "boundary star").
    pub fn star(&self, s: &Simplex) -> Result<StarDecomposition, MeshError> {
        if !self.contains_simplex(s) {
            return Err(MeshError::SimplexNotFound(s.clone()));
        }
        let cell_indices: Vec<usize> = self
            .cells()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.contains(s))
            .map(|(i, _)| i)
            .collect();
        let mut closure: Vec<Simplex> = Vec::new();
        for &ci in &cell_indices {
            let cell = &self.cells()[ci];
            for d in 0..=self.n {
                closure.extend(cell.subsimplices(d));
            }
        }
        closure.sort_unstable();
        closure.dedup();
        let boundary_star: Vec<Simplex> = closure
            .iter()
            .filter(|t| !t.contains(s))
            .cloned()
            .collect();
        Ok(StarDecomposition {
            center: s.clone(),
            cell_indices,
            closure,
            boundary_star,
        })
    }

    /// The link of `s`: simplices disjoint from `s` whose join with `s` is in
    /// the complex. Returns the maximal members (dimension `n - dim(s) - 1`).
    pub fn link(&self, s: &Simplex) -> Result<Vec<Simplex>, MeshError> {
        let star = self.star(s)?;
        let mut out = Vec::new();
        for &ci in &star.cell_indices {
            if let Some(rest) = self.cells()[ci].complement_within(s) {
                out.push(rest);
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Partition of cells under the face-neighboring relation, plus the
    /// face-connection graph edges `(cell, cell, shared face)`.
    pub fn face_connected_components(
        &self,
    ) -> (Vec<Vec<usize>>, Vec<(usize, usize, Simplex)>) {
        let m = self.cells().len();
        let mut edges = Vec::new();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (f, cs) in &self.cofaces {
            if cs.len() == 2 {
                let (a, b) = (cs[0], cs[1]);
                edges.push((a.min(b), a.max(b), f.clone()));
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        edges.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut comp = vec![usize::MAX; m];
        let mut components = Vec::new();
        for start in 0..m {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut stack = vec![start];
            let mut members = Vec::new();
            comp[start] = id;
            while let Some(c) = stack.pop() {
                members.push(c);
                for &nb in &adj[c] {
                    if comp[nb] == usize::MAX {
                        comp[nb] = id;
                        stack.push(nb);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        (components, edges)
    }

    /// Whether the face-connection graph has a single component.
    pub fn is_face_connected(&self) -> bool {
        self.face_connected_components().0.len() == 1
    }

    /// Maximal common subsimplices between cell `cell` and the union of the
    /// cells in `prior` (combinatorial intersection).
    pub fn simplicial_intersection(&self, cell: usize, prior: &[usize]) -> InterfaceSet {
        let target = &self.cells()[cell];
        let mut shared: Vec<Simplex> = prior
            .iter()
            .filter_map(|&p| target.intersection(&self.cells()[p]))
            .collect();
        shared.sort_unstable();
        shared.dedup();
        // Keep only maximal members.
        let maximal: Vec<Simplex> = shared
            .iter()
            .filter(|s| !shared.iter().any(|t| t != *s && t.contains(s)))
            .cloned()
            .collect();
        let all_faces = !maximal.is_empty()
            && maximal.iter().all(|s| s.dim() + 1 == self.n);
        let as_faces = if all_faces {
            Some(maximal.clone())
        } else {
            None
        };
        InterfaceSet {
            shared_maximal: maximal,
            as_faces,
        }
    }
}

/// Result of [`SimplicialComplex::star`].
#[derive(Debug, Clone)]
pub struct StarDecomposition {
    /// The simplex the star is taken around.
    pub center: Simplex,
    /// Indices of the cells containing the center.
    pub cell_indices: Vec<usize>,
    /// Every simplex of the star's closure.
    pub closure: Vec<Simplex>,
    /// Members of the closure not containing the center.
    pub boundary_star: Vec<Simplex>,
}

impl StarDecomposition {
    /// Materializes the star as a standalone subcomplex of `parent`.
    pub fn to_subcomplex<R: Real>(&self, parent: &SimplicialComplex<R>) -> SimplicialComplex<R> {
        parent.restrict(&self.cell_indices)
    }
}
