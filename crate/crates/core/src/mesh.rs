//! Structured criss-cross triangulation, edge DOF masking and subdomain assignment.
//!
//! Every square of an `nx` x `ny` grid is split by both diagonals into four triangles that
//! share a center vertex. One degree of freedom lives on each edge, so a mesh carries
//! `(nx+1)*ny + nx*(ny+1) + 4*nx*ny` edge DOFs before masking.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x0.is_finite() && y0.is_finite() && x1.is_finite() && y1.is_finite()) {
            return Err(Error::InvalidInput("rectangle has non-finite corners".into()));
        }
        if x1 <= x0 || y1 <= y0 {
            return Err(Error::InvalidInput(format!(
                "degenerate rectangle [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    /// Strict containment: points on the rectangle boundary are outside.
    pub fn contains_strictly(&self, p: [f64; 2]) -> bool {
        p[0] > self.x0 && p[0] < self.x1 && p[1] > self.y0 && p[1] < self.y1
    }
}

impl TryFrom<[f64; 4]> for Rect {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        Rect::new(v[0], v[1], v[2], v[3])
    }
}

impl From<Rect> for [f64; 4] {
    fn from(r: Rect) -> Self {
        [r.x0, r.y0, r.x1, r.y1]
    }
}

/// Side of the outer rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];
}

/// Domain rectangle, conductor (PEC) rectangles and the Robin/Dirichlet split of the outer boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub domain: Rect,
    #[serde(default)]
    pub pec: Vec<Rect>,
    pub robin_sides: Vec<Side>,
    pub dirichlet_sides: Vec<Side>,
}

impl GeometrySpec {
    /// Unit square with Robin sides left/right and Dirichlet sides bottom/top, no conductors.
    pub fn unit_square() -> Self {
        Self {
            domain: Rect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 },
            pec: Vec::new(),
            robin_sides: vec![Side::Left, Side::Right],
            dirichlet_sides: vec![Side::Bottom, Side::Top],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for side in Side::ALL {
            let r = self.robin_sides.contains(&side);
            let d = self.dirichlet_sides.contains(&side);
            if r && d {
                return Err(Error::InvalidInput(format!("side {side:?} is both robin and dirichlet")));
            }
            if !r && !d {
                return Err(Error::InvalidInput(format!("side {side:?} has no boundary condition")));
            }
        }
        Ok(())
    }

    pub fn is_dirichlet(&self, side: Side) -> bool {
        self.dirichlet_sides.contains(&side)
    }

    pub fn is_robin(&self, side: Side) -> bool {
        self.robin_sides.contains(&side)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let geo: GeometrySpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        geo.validate()?;
        Ok(geo)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("geometry serializes")
    }

    /// Two-channel conductor layout on the unit square (approximation of a published layout).
    pub fn preset_geometry1() -> Self {
        Self::from_toml_str(include_str!("../configs/geometry1.toml")).expect("bundled geometry")
    }

    /// [`Self::preset_geometry1`] with the conductor pieces near the source removed.
    pub fn preset_geometry2() -> Self {
        Self::from_toml_str(include_str!("../configs/geometry2.toml")).expect("bundled geometry")
    }
}

/// Criss-cross triangulation of a rectangle.
///
/// Vertex layout: grid nodes `i + j*(nx+1)` first, then square centers `N + i + j*nx`.
/// Edge layout: horizontal grid edges, vertical grid edges, then four half-diagonals per square
/// (corner to center). Each edge is globally oriented from its lower to its higher vertex index.
#[derive(Clone, Debug)]
pub struct StructuredMesh {
    pub nx: usize,
    pub ny: usize,
    pub domain: Rect,
    pub hx: f64,
    pub hy: f64,
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples; triangle `4*s + k` lies in square `s`.
    pub triangles: Vec<[usize; 3]>,
    /// Vertex pairs `(lo, hi)`.
    pub edges: Vec<[usize; 2]>,
    /// Local edge `k` of a triangle joins local vertices `k` and `(k+1) % 3`.
    pub triangle_edges: Vec<[usize; 3]>,
    /// `+1` when the local orientation agrees with the global one.
    pub triangle_signs: Vec<[f64; 3]>,
    pub edge_triangles: Vec<[Option<usize>; 2]>,
}

impl StructuredMesh {
    pub fn new(nx: usize, ny: usize, domain: Rect) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidInput(format!("mesh counts must be positive, got {nx} x {ny}")));
        }
        let domain = Rect::new(domain.x0, domain.y0, domain.x1, domain.y1)?;
        let hx = domain.width() / nx as f64;
        let hy = domain.height() / ny as f64;

        let n_nodes = (nx + 1) * (ny + 1);
        let node = |i: usize, j: usize| i + j * (nx + 1);
        let center = |i: usize, j: usize| n_nodes + i + j * nx;

        let mut vertices = Vec::with_capacity(n_nodes + nx * ny);
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([domain.x0 + i as f64 * hx, domain.y0 + j as f64 * hy]);
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                vertices.push([
                    domain.x0 + (i as f64 + 0.5) * hx,
                    domain.y0 + (j as f64 + 0.5) * hy,
                ]);
            }
        }

        let n_horizontal = nx * (ny + 1);
        let n_vertical = (nx + 1) * ny;
        let horizontal = |i: usize, j: usize| i + j * nx;
        let vertical = |i: usize, j: usize| n_horizontal + i + j * (nx + 1);
        let diagonal = |i: usize, j: usize, k: usize| n_horizontal + n_vertical + 4 * (i + j * nx) + k;

        let n_edges = n_horizontal + n_vertical + 4 * nx * ny;
        let mut edges = vec![[0usize; 2]; n_edges];
        for j in 0..=ny {
            for i in 0..nx {
                edges[horizontal(i, j)] = [node(i, j), node(i + 1, j)];
            }
        }
        for j in 0..ny {
            for i in 0..=nx {
                edges[vertical(i, j)] = [node(i, j), node(i, j + 1)];
            }
        }

        let mut triangles = Vec::with_capacity(4 * nx * ny);
        let mut triangle_edges = Vec::with_capacity(4 * nx * ny);
        let mut triangle_signs = Vec::with_capacity(4 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let corners = [node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)];
                let sides = [horizontal(i, j), vertical(i + 1, j), horizontal(i, j + 1), vertical(i, j)];
                let c = center(i, j);
                for k in 0..4 {
                    edges[diagonal(i, j, k)] = [corners[k], c];
                }
                for k in 0..4 {
                    let a = corners[k];
                    let b = corners[(k + 1) % 4];
                    let tri = [a, b, c];
                    let local = [sides[k], diagonal(i, j, (k + 1) % 4), diagonal(i, j, k)];
                    let mut signs = [0.0; 3];
                    for l in 0..3 {
                        signs[l] = if tri[l] < tri[(l + 1) % 3] { 1.0 } else { -1.0 };
                    }
                    triangles.push(tri);
                    triangle_edges.push(local);
                    triangle_signs.push(signs);
                }
            }
        }

        let mut edge_triangles = vec![[None, None]; n_edges];
        for (t, local) in triangle_edges.iter().enumerate() {
            for &e in local {
                let slot = &mut edge_triangles[e];
                if slot[0].is_none() {
                    slot[0] = Some(t);
                } else {
                    debug_assert!(slot[1].is_none(), "edge shared by more than two triangles");
                    slot[1] = Some(t);
                }
            }
        }

        Ok(Self {
            nx,
            ny,
            domain,
            hx,
            hy,
            vertices,
            triangles,
            edges,
            triangle_edges,
            triangle_signs,
            edge_triangles,
        })
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Closed-form edge count of an `nx` x `ny` criss-cross mesh.
    pub fn expected_edge_count(nx: usize, ny: usize) -> usize {
        (nx + 1) * ny + nx * (ny + 1) + 4 * nx * ny
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Grid square `(i, j)` containing triangle `t`.
    pub fn triangle_square(&self, t: usize) -> (usize, usize) {
        let s = t / 4;
        (s % self.nx, s / self.nx)
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        (pb[0] - pa[0]).hypot(pb[1] - pa[1])
    }

    /// Triangles adjacent to edge `e` (one for boundary edges, two otherwise).
    pub fn adjacent_triangles(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        self.edge_triangles[e].iter().flatten().copied()
    }

    /// Outer boundary side carrying edge `e`, if any.
    pub fn boundary_side(&self, e: usize) -> Option<Side> {
        if self.edge_triangles[e][1].is_some() {
            return None;
        }
        let n_horizontal = self.nx * (self.ny + 1);
        let n_vertical = (self.nx + 1) * self.ny;
        if e < n_horizontal {
            let j = e / self.nx;
            if j == 0 {
                Some(Side::Bottom)
            } else {
                debug_assert_eq!(j, self.ny);
                Some(Side::Top)
            }
        } else if e < n_horizontal + n_vertical {
            let i = (e - n_horizontal) % (self.nx + 1);
            if i == 0 {
                Some(Side::Left)
            } else {
                debug_assert_eq!(i, self.nx);
                Some(Side::Right)
            }
        } else {
            None
        }
    }

    /// Per-edge statistics as CSV (`edge,x,y,length,boundary`).
    pub fn stats_csv(&self) -> String {
        let mut out = String::from("edge,x,y,length,boundary\n");
        for e in 0..self.n_edges() {
            let m = self.edge_midpoint(e);
            let side = self
                .boundary_side(e)
                .map(|s| format!("{s:?}").to_lowercase())
                .unwrap_or_default();
            out.push_str(&format!("{e},{},{},{},{side}\n", m[0], m[1], self.edge_length(e)));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisableReason {
    None,
    Pec,
    Dirichlet,
}

/// Active/disabled flags per mesh edge and the compact numbering of active edges.
///
/// Compact indices increase with edge index, so any sorted set of DOFs is also sorted by edge.
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveDofs {
    pub reason: Vec<DisableReason>,
    pub edge_to_dof: Vec<Option<usize>>,
    pub dof_to_edge: Vec<usize>,
}

impl ActiveDofs {
    pub fn n_active(&self) -> usize {
        self.dof_to_edge.len()
    }

    pub fn is_active(&self, e: usize) -> bool {
        self.edge_to_dof[e].is_some()
    }

    pub fn count(&self, reason: DisableReason) -> usize {
        self.reason.iter().filter(|&&r| r == reason).count()
    }
}

/// Disables edges whose midpoint lies strictly inside a conductor and edges on Dirichlet sides.
/// An edge satisfying both is attributed to the conductor.
pub fn mask_dofs(mesh: &StructuredMesh, geo: &GeometrySpec) -> Result<ActiveDofs> {
    geo.validate()?;
    if geo.domain != mesh.domain {
        return Err(Error::InvalidInput(format!(
            "geometry domain {:?} differs from mesh domain {:?}",
            geo.domain, mesh.domain
        )));
    }
    let mut reason = Vec::with_capacity(mesh.n_edges());
    let mut edge_to_dof = Vec::with_capacity(mesh.n_edges());
    let mut dof_to_edge = Vec::new();
    for e in 0..mesh.n_edges() {
        let mid = mesh.edge_midpoint(e);
        let r = if geo.pec.iter().any(|p| p.contains_strictly(mid)) {
            DisableReason::Pec
        } else if mesh.boundary_side(e).is_some_and(|s| geo.is_dirichlet(s)) {
            DisableReason::Dirichlet
        } else {
            DisableReason::None
        };
        if r == DisableReason::None {
            edge_to_dof.push(Some(dof_to_edge.len()));
            dof_to_edge.push(e);
        } else {
            edge_to_dof.push(None);
        }
        reason.push(r);
    }
    Ok(ActiveDofs { reason, edge_to_dof, dof_to_edge })
}

/// Ownership of an edge with respect to the subdomain grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeOwner {
    /// All adjacent triangles lie in this subdomain.
    Interior(usize),
    /// Adjacent triangles lie in two subdomains `(i, j)`, `i < j`.
    Interface(usize, usize),
}

/// Rectangular `mx` x `my` non-overlapping decomposition aligned with the mesh squares.
#[derive(Clone, Debug)]
pub struct SubdomainGrid {
    pub mx: usize,
    pub my: usize,
    /// Squares per subdomain along x and y.
    pub sx: usize,
    pub sy: usize,
    pub triangle_subdomain: Vec<usize>,
    pub edge_owner: Vec<EdgeOwner>,
}

pub fn assign_subdomains(mesh: &StructuredMesh, mx: usize, my: usize) -> Result<SubdomainGrid> {
    if mx == 0 || my == 0 {
        return Err(Error::InvalidInput("subdomain counts must be positive".into()));
    }
    if mesh.nx % mx != 0 || mesh.ny % my != 0 {
        return Err(Error::InvalidInput(format!(
            "subdomain grid {mx} x {my} does not divide mesh grid {} x {}",
            mesh.nx, mesh.ny
        )));
    }
    let sx = mesh.nx / mx;
    let sy = mesh.ny / my;
    let triangle_subdomain: Vec<usize> = (0..mesh.n_triangles())
        .map(|t| {
            let (i, j) = mesh.triangle_square(t);
            i / sx + (j / sy) * mx
        })
        .collect();
    let edge_owner = (0..mesh.n_edges())
        .map(|e| {
            let mut subs = mesh.adjacent_triangles(e).map(|t| triangle_subdomain[t]);
            let a = subs.next().expect("every edge has a triangle");
            match subs.next() {
                Some(b) if b != a => EdgeOwner::Interface(a.min(b), a.max(b)),
                _ => EdgeOwner::Interior(a),
            }
        })
        .collect();
    Ok(SubdomainGrid { mx, my, sx, sy, triangle_subdomain, edge_owner })
}

impl SubdomainGrid {
    pub fn n_subdomains(&self) -> usize {
        self.mx * self.my
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix + iy * self.mx
    }

    pub fn coords(&self, s: usize) -> (usize, usize) {
        (s % self.mx, s / self.mx)
    }

    /// All axis-adjacent pairs `(i, j)` with `i < j`: x-neighbors first, then y-neighbors.
    pub fn interfaces(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for iy in 0..self.my {
            for ix in 0..self.mx.saturating_sub(1) {
                out.push((self.index(ix, iy), self.index(ix + 1, iy)));
            }
        }
        for iy in 0..self.my.saturating_sub(1) {
            for ix in 0..self.mx {
                out.push((self.index(ix, iy), self.index(ix, iy + 1)));
            }
        }
        out
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        ax.abs_diff(bx) + ay.abs_diff(by) == 1
    }

    /// Triangles of subdomain `s` on a mesh with `nx` squares per row, ascending.
    pub fn triangles(&self, s: usize, nx: usize) -> Vec<usize> {
        let (ix, iy) = self.coords(s);
        let mut out = Vec::with_capacity(4 * self.sx * self.sy);
        for j in iy * self.sy..(iy + 1) * self.sy {
            for i in ix * self.sx..(ix + 1) * self.sx {
                let sq = i + j * nx;
                out.extend(4 * sq..4 * sq + 4);
            }
        }
        out
    }

    /// Subdomains in the inclusive block `[x0, x1] x [y0, y1]`, clipped at the grid.
    pub fn block(&self, x0: isize, x1: isize, y0: isize, y1: isize) -> Vec<usize> {
        let clip_x = |v: isize| v.clamp(0, self.mx as isize - 1) as usize;
        let clip_y = |v: isize| v.clamp(0, self.my as isize - 1) as usize;
        let mut out = Vec::new();
        for iy in clip_y(y0)..=clip_y(y1) {
            for ix in clip_x(x0)..=clip_x(x1) {
                out.push(self.index(ix, iy));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Rect {
        Rect::new(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn edge_counts_match_closed_form() {
        assert_eq!(StructuredMesh::new(1, 1, unit()).unwrap().n_edges(), 8);
        assert_eq!(StructuredMesh::new(3, 2, unit()).unwrap().n_edges(), 41);
        for nx in 1..=8 {
            for ny in 1..=8 {
                let m = StructuredMesh::new(nx, ny, unit()).unwrap();
                assert_eq!(m.n_edges(), StructuredMesh::expected_edge_count(nx, ny));
            }
        }
    }

    #[test]
    fn triangles_are_positive_and_edges_have_one_or_two_neighbours() {
        let m = StructuredMesh::new(4, 3, Rect::new(-1.0, 2.0, 1.0, 3.5).unwrap()).unwrap();
        for t in 0..m.n_triangles() {
            let [a, b, c] = m.triangle_coords(t);
            let area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            assert!(area2 > 0.0);
            for (l, &e) in m.triangle_edges[t].iter().enumerate() {
                let [p, q] = [m.triangles[t][l], m.triangles[t][(l + 1) % 3]];
                assert_eq!(m.edges[e], [p.min(q), p.max(q)]);
            }
        }
        for e in 0..m.n_edges() {
            let n = m.adjacent_triangles(e).count();
            assert_eq!(n == 1, m.boundary_side(e).is_some());
            assert!(n == 1 || n == 2);
        }
        let boundary = (0..m.n_edges()).filter(|&e| m.boundary_side(e).is_some()).count();
        assert_eq!(boundary, 2 * (4 + 3));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(StructuredMesh::new(0, 3, unit()).is_err());
        assert!(Rect::new(0.0, 0.0, 0.0, 1.0).is_err());
        let m = StructuredMesh::new(3, 3, unit()).unwrap();
        assert!(assign_subdomains(&m, 2, 1).is_err());
    }

    #[test]
    fn dirichlet_only_masks_top_and_bottom() {
        let m = StructuredMesh::new(2, 2, unit()).unwrap();
        let dofs = mask_dofs(&m, &GeometrySpec::unit_square()).unwrap();
        let disabled: Vec<usize> = (0..m.n_edges()).filter(|&e| !dofs.is_active(e)).collect();
        assert_eq!(disabled.len(), 4);
        for e in disabled {
            let y = m.edge_midpoint(e)[1];
            assert!(y == 0.0 || y == 1.0);
            assert_eq!(dofs.reason[e], DisableReason::Dirichlet);
        }
    }

    #[test]
    fn full_pec_disables_everything_and_wins_over_dirichlet() {
        let m = StructuredMesh::new(3, 3, unit()).unwrap();
        let mut geo = GeometrySpec::unit_square();
        geo.pec.push(Rect::new(-0.5, -0.5, 1.5, 1.5).unwrap());
        let dofs = mask_dofs(&m, &geo).unwrap();
        assert_eq!(dofs.n_active(), 0);
        assert_eq!(dofs.count(DisableReason::Pec), m.n_edges());
    }

    #[test]
    fn pec_boundary_edges_stay_active() {
        let m = StructuredMesh::new(4, 4, unit()).unwrap();
        let mut geo = GeometrySpec::unit_square();
        geo.pec.push(Rect::new(0.25, 0.25, 0.75, 0.75).unwrap());
        let dofs = mask_dofs(&m, &geo).unwrap();
        for e in 0..m.n_edges() {
            let p = m.edge_midpoint(e);
            let on_rect_boundary = (p[0] == 0.25 || p[0] == 0.75) && (0.25..=0.75).contains(&p[1])
                || (p[1] == 0.25 || p[1] == 0.75) && (0.25..=0.75).contains(&p[0]);
            if on_rect_boundary {
                assert!(dofs.is_active(e));
            }
        }
        // 2x2 squares inside: 4 interior grid edges + 16 half-diagonals.
        assert_eq!(dofs.count(DisableReason::Pec), 4 + 16);
    }

    #[test]
    fn compact_numbering_is_a_bijection() {
        let m = StructuredMesh::new(5, 4, unit()).unwrap();
        let dofs = mask_dofs(&m, &GeometrySpec::preset_geometry1_like_small()).unwrap();
        for (d, &e) in dofs.dof_to_edge.iter().enumerate() {
            assert_eq!(dofs.edge_to_dof[e], Some(d));
        }
        assert!(dofs.dof_to_edge.windows(2).all(|w| w[0] < w[1]));
    }

    impl GeometrySpec {
        fn preset_geometry1_like_small() -> Self {
            let mut g = GeometrySpec::unit_square();
            g.pec.push(Rect::new(0.3, 0.3, 0.7, 0.5).unwrap());
            g
        }
    }

    #[test]
    fn single_subdomain_has_no_interfaces() {
        let m = StructuredMesh::new(4, 4, unit()).unwrap();
        let g = assign_subdomains(&m, 1, 1).unwrap();
        assert!(g.edge_owner.iter().all(|o| *o == EdgeOwner::Interior(0)));
        assert!(g.interfaces().is_empty());
    }

    #[test]
    fn two_by_two_interfaces_lie_on_the_dividing_lines() {
        let m = StructuredMesh::new(4, 4, unit()).unwrap();
        let g = assign_subdomains(&m, 2, 2).unwrap();
        for e in 0..m.n_edges() {
            let [a, b] = m.edges[e];
            let (pa, pb) = (m.vertices[a], m.vertices[b]);
            let on_x = pa[0] == 0.5 && pb[0] == 0.5;
            let on_y = pa[1] == 0.5 && pb[1] == 0.5;
            match g.edge_owner[e] {
                EdgeOwner::Interface(i, j) => {
                    assert!(on_x || on_y, "edge {e}");
                    assert!(g.are_adjacent(i, j));
                }
                EdgeOwner::Interior(_) => assert!(!(on_x || on_y), "edge {e}"),
            }
        }
        let n_interface = g
            .edge_owner
            .iter()
            .filter(|o| matches!(o, EdgeOwner::Interface(..)))
            .count();
        assert_eq!(n_interface, 8);
    }

    #[test]
    fn ten_by_ten_grid_tag_counts() {
        let m = StructuredMesh::new(100, 100, unit()).unwrap();
        let g = assign_subdomains(&m, 10, 10).unwrap();
        let mut vol = std::collections::HashSet::new();
        let mut intf = std::collections::HashSet::new();
        for o in &g.edge_owner {
            match *o {
                EdgeOwner::Interior(i) => {
                    vol.insert(i);
                }
                EdgeOwner::Interface(i, j) => {
                    intf.insert((i, j));
                }
            }
        }
        assert_eq!(vol.len(), 100);
        assert_eq!(intf.len(), 180);
        assert_eq!(g.interfaces().len(), 180);
    }

    #[test]
    fn interface_tags_agree_with_triangle_subdomains() {
        let m = StructuredMesh::new(6, 6, unit()).unwrap();
        let g = assign_subdomains(&m, 3, 2).unwrap();
        for e in 0..m.n_edges() {
            let subs: Vec<usize> = m.adjacent_triangles(e).map(|t| g.triangle_subdomain[t]).collect();
            match g.edge_owner[e] {
                EdgeOwner::Interface(..) => assert_ne!(subs[0], subs[1]),
                EdgeOwner::Interior(i) => assert!(subs.iter().all(|&s| s == i)),
            }
        }
    }

    #[test]
    fn geometry_validation() {
        let mut g = GeometrySpec::unit_square();
        g.dirichlet_sides.push(Side::Left);
        assert!(g.validate().is_err());
        g.dirichlet_sides.pop();
        g.robin_sides.retain(|s| *s != Side::Left);
        assert!(g.validate().is_err());
    }

    #[test]
    fn bundled_geometries_parse() {
        let g1 = GeometrySpec::preset_geometry1();
        let g2 = GeometrySpec::preset_geometry2();
        assert!(g1.pec.len() > g2.pec.len());
        let back = GeometrySpec::from_toml_str(&g1.to_toml_string()).unwrap();
        assert_eq!(back, g1);
    }

    fn rect_strategy() -> impl Strategy<Value = Rect> {
        (0.0..0.9f64, 0.0..0.9f64, 0.05..0.5f64, 0.05..0.5f64)
            .prop_map(|(x, y, w, h)| Rect::new(x, y, x + w, y + h).unwrap())
    }

    proptest! {
        #[test]
        fn masking_is_idempotent_and_monotone(rects in prop::collection::vec(rect_strategy(), 0..4), extra in rect_strategy()) {
            let m = StructuredMesh::new(8, 6, unit()).unwrap();
            let mut geo = GeometrySpec::unit_square();
            geo.pec = rects;
            let a = mask_dofs(&m, &geo).unwrap();
            let b = mask_dofs(&m, &geo).unwrap();
            prop_assert_eq!(&a, &b);
            geo.pec.push(extra);
            let c = mask_dofs(&m, &geo).unwrap();
            for e in 0..m.n_edges() {
                prop_assert!(!( !a.is_active(e) && c.is_active(e)));
            }
            let disabled = m.n_edges() - c.n_active();
            prop_assert_eq!(disabled, c.count(DisableReason::Pec) + c.count(DisableReason::Dirichlet));
        }
    }
}
