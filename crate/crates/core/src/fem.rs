//! Lowest-order edge elements (Whitney 1-forms) and the frequency-affine system.
//!
//! With real basis functions the sesquilinear form is represented by
//! `A(w) = A_curl - w^2 A_mass + i w A_robin`, the load by `f(w) = -i w f_j`, and the energy
//! inner product by the Gram matrix `M = A_curl + w_max^2 A_mass + w_max A_robin`.
//! Material constants are folded into the blocks at assembly.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::mesh::{ActiveDofs, GeometrySpec, StructuredMesh};
use crate::sparse::{combine_same_pattern, Csr};
use crate::{c64, Error, Result};

pub const EPS0: f64 = 8.8541878128e-12;
pub const MU0: f64 = 4.0e-7 * PI;
/// Wave impedance of free space in Ohm.
pub const Z0: f64 = 376.730313;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub eps: f64,
    pub mu: f64,
    /// Surface admittance of the Robin boundary in S.
    pub kappa: f64,
    /// Angular frequency weighting the energy norm.
    pub omega_max: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self { eps: EPS0, mu: MU0, kappa: 1.0 / Z0, omega_max: 2.0 * PI * 1.0e9 }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps", self.eps), ("mu", self.mu), ("kappa", self.kappa), ("omega_max", self.omega_max)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("material parameter {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Ordered training/sweep frequencies in Hz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub frequencies: Vec<f64>,
}

impl ParameterSet {
    pub fn new(frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::InvalidInput("frequencies must be positive".into()));
        }
        if frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("frequencies must be strictly increasing".into()));
        }
        Ok(Self { frequencies })
    }

    /// `count` equidistant frequencies including both endpoints.
    pub fn linspace(f_min: f64, f_max: f64, count: usize) -> Result<Self> {
        match count {
            0 => Err(Error::InvalidInput("empty parameter set".into())),
            1 => Self::new(vec![f_min]),
            _ => {
                let step = (f_max - f_min) / (count - 1) as f64;
                let mut f: Vec<f64> = (0..count).map(|k| f_min + step * k as f64).collect();
                f[count - 1] = f_max;
                Self::new(f)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.frequencies.iter().map(|f| 2.0 * PI * f).collect()
    }
}

/// Gaussian current density `amplitude * exp(-|x - center|^2 / width) e_y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Excitation {
    pub center: [f64; 2],
    pub width: f64,
    pub amplitude: f64,
}

impl Default for Excitation {
    fn default() -> Self {
        Self { center: [0.1, 0.5], width: 1.25e-3, amplitude: 1.0 }
    }
}

impl Excitation {
    pub fn none() -> Self {
        Self { amplitude: 0.0, ..Self::default() }
    }

    pub fn current(&self, p: [f64; 2]) -> [f64; 2] {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        [0.0, self.amplitude * (-(dx * dx + dy * dy) / self.width).exp()]
    }
}

/// Degree-8 triangle rule with 16 points, barycentric coordinates and weights summing to one.
pub(crate) fn degree8_rule() -> Vec<([f64; 3], f64)> {
    let mut pts = vec![([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.144_315_607_677_787)];
    let sym3 = [
        (0.081_414_823_414_554, 0.459_292_588_292_723, 0.095_091_634_267_285),
        (0.658_861_384_496_480, 0.170_569_307_751_760, 0.103_217_370_534_718),
        (0.898_905_543_365_938, 0.050_547_228_317_031, 0.032_458_497_623_198),
    ];
    for (a, b, w) in sym3 {
        pts.push(([a, b, b], w));
        pts.push(([b, a, b], w));
        pts.push(([b, b, a], w));
    }
    let (a, b, c, w) = (0.008_394_777_409_958, 0.263_112_829_634_638, 0.728_492_392_955_404, 0.027_230_314_174_435);
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        pts.push((p, w));
    }
    pts
}

/// Geometry of one triangle for Whitney-form evaluation.
#[derive(Clone, Copy, Debug)]
pub struct WhitneyTriangle {
    pub coords: [[f64; 2]; 3],
    pub area: f64,
    pub grad: [[f64; 2]; 3],
}

impl WhitneyTriangle {
    pub fn new(coords: [[f64; 2]; 3]) -> Result<Self> {
        let [p0, p1, p2] = coords;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
        let scale = [p0, p1, p2]
            .iter()
            .flat_map(|p| p.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        if !det.is_finite() || det.abs() <= 1e-14 * scale * scale {
            return Err(Error::InvalidInput("degenerate triangle".into()));
        }
        let grad = [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ];
        Ok(Self { coords, area: 0.5 * det.abs(), grad })
    }

    /// Local vertex pair of local edge `k`.
    pub fn edge_vertices(k: usize) -> (usize, usize) {
        (k, (k + 1) % 3)
    }

    /// Constant scalar curl of the Whitney function of local edge `k`.
    pub fn curl(&self, k: usize) -> f64 {
        let (a, b) = Self::edge_vertices(k);
        let (ga, gb) = (self.grad[a], self.grad[b]);
        2.0 * (ga[0] * gb[1] - ga[1] * gb[0])
    }

    /// Whitney function of local edge `k` at barycentric point `lambda`.
    pub fn eval(&self, k: usize, lambda: [f64; 3]) -> [f64; 2] {
        let (a, b) = Self::edge_vertices(k);
        let (ga, gb) = (self.grad[a], self.grad[b]);
        [lambda[a] * gb[0] - lambda[b] * ga[0], lambda[a] * gb[1] - lambda[b] * ga[1]]
    }

    pub fn point(&self, lambda: [f64; 3]) -> [f64; 2] {
        let c = self.coords;
        [
            lambda[0] * c[0][0] + lambda[1] * c[1][0] + lambda[2] * c[2][0],
            lambda[0] * c[0][1] + lambda[1] * c[1][1] + lambda[2] * c[2][1],
        ]
    }
}

/// Local curl-curl and mass matrices of the three Whitney functions, without material factors
/// and in local edge orientation.
#[derive(Clone, Copy, Debug)]
pub struct ElementMatrices {
    pub curl_curl: [[f64; 3]; 3],
    pub mass: [[f64; 3]; 3],
}

pub fn element_matrices(coords: [[f64; 2]; 3]) -> Result<ElementMatrices> {
    let tri = WhitneyTriangle::new(coords)?;
    let dot = |p: [f64; 2], q: [f64; 2]| p[0] * q[0] + p[1] * q[1];
    // int lambda_p lambda_q = |T| (1 + delta_pq) / 12
    let lam = |p: usize, q: usize| tri.area * if p == q { 2.0 } else { 1.0 } / 12.0;
    let g = tri.grad;
    let mut curl_curl = [[0.0; 3]; 3];
    let mut mass = [[0.0; 3]; 3];
    for i in 0..3 {
        let (a, b) = WhitneyTriangle::edge_vertices(i);
        for j in 0..3 {
            let (c, d) = WhitneyTriangle::edge_vertices(j);
            curl_curl[i][j] = tri.area * tri.curl(i) * tri.curl(j);
            mass[i][j] = lam(a, c) * dot(g[b], g[d]) - lam(a, d) * dot(g[b], g[c]) - lam(b, c) * dot(g[a], g[d])
                + lam(b, d) * dot(g[a], g[c]);
        }
    }
    Ok(ElementMatrices { curl_curl, mass })
}

/// Frequency-affine full-order system over the active DOFs.
#[derive(Clone, Debug)]
pub struct AffineSystem {
    /// `(1/mu) * curl-curl`
    pub curl: Csr<f64>,
    /// `eps * mass`
    pub mass: Csr<f64>,
    /// `kappa * tangential boundary mass` on Robin sides
    pub robin: Csr<f64>,
    /// Energy inner product `curl + w_max^2 mass + w_max robin`.
    pub gram: Csr<f64>,
    /// `int j . phi_i`
    pub rhs: Vec<c64>,
    pub material: MaterialParams,
}

/// Assembles the three operator blocks and the Gram matrix (no load vector).
pub fn assemble_affine(
    mesh: &StructuredMesh,
    dofs: &ActiveDofs,
    geo: &GeometrySpec,
    mat: &MaterialParams,
) -> Result<(Csr<f64>, Csr<f64>, Csr<f64>, Csr<f64>)> {
    mat.validate()?;
    if dofs.reason.len() != mesh.n_edges() || geo.domain != mesh.domain {
        return Err(Error::InvalidInput("mesh, dofs and geometry are inconsistent".into()));
    }
    let n = dofs.n_active();
    // One triplet list with all three block values keeps a common sparsity pattern.
    let mut trip: Vec<(usize, usize, [f64; 3])> = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let em = element_matrices(mesh.triangle_coords(t))?;
        let edges = mesh.triangle_edges[t];
        let signs = mesh.triangle_signs[t];
        for i in 0..3 {
            let Some(di) = dofs.edge_to_dof[edges[i]] else { continue };
            for j in 0..3 {
                let Some(dj) = dofs.edge_to_dof[edges[j]] else { continue };
                let s = signs[i] * signs[j];
                trip.push((di, dj, [s * em.curl_curl[i][j] / mat.mu, s * em.mass[i][j] * mat.eps, 0.0]));
            }
        }
    }
    for e in 0..mesh.n_edges() {
        let (Some(d), Some(side)) = (dofs.edge_to_dof[e], mesh.boundary_side(e)) else { continue };
        if geo.is_robin(side) {
            // tangential trace of the own Whitney function is 1/|e| along the edge
            trip.push((d, d, [0.0, 0.0, mat.kappa / mesh.edge_length(e)]));
        }
    }
    let split = |k: usize| -> Csr<f64> {
        let t: Vec<(usize, usize, f64)> = trip.iter().map(|&(r, c, v)| (r, c, v[k])).collect();
        Csr::from_triplets(n, n, &t)
    };
    let (curl, mass, robin) = (split(0), split(1), split(2));
    let w = mat.omega_max;
    let gram_values = (0..curl.nnz())
        .map(|k| curl.values[k] + w * w * mass.values[k] + w * robin.values[k])
        .collect();
    let gram = Csr { values: gram_values, ..curl.clone() };
    Ok((curl, mass, robin, gram))
}

/// Load vector `int j . phi_i` with the 16-point degree-8 rule per triangle.
pub fn assemble_rhs(mesh: &StructuredMesh, dofs: &ActiveDofs, excitation: &Excitation) -> Result<Vec<c64>> {
    let rule = degree8_rule();
    let mut rhs = vec![c64::new(0.0, 0.0); dofs.n_active()];
    if excitation.amplitude == 0.0 {
        return Ok(rhs);
    }
    for t in 0..mesh.n_triangles() {
        let tri = WhitneyTriangle::new(mesh.triangle_coords(t))?;
        let edges = mesh.triangle_edges[t];
        let signs = mesh.triangle_signs[t];
        for k in 0..3 {
            let Some(d) = dofs.edge_to_dof[edges[k]] else { continue };
            let mut acc = 0.0;
            for (lambda, w) in &rule {
                let j = excitation.current(tri.point(*lambda));
                let phi = tri.eval(k, *lambda);
                acc += w * (j[0] * phi[0] + j[1] * phi[1]);
            }
            rhs[d] += c64::new(signs[k] * acc * tri.area, 0.0);
        }
    }
    Ok(rhs)
}

impl AffineSystem {
    pub fn assemble(
        mesh: &StructuredMesh,
        dofs: &ActiveDofs,
        geo: &GeometrySpec,
        mat: &MaterialParams,
        excitation: &Excitation,
    ) -> Result<Self> {
        let (curl, mass, robin, gram) = assemble_affine(mesh, dofs, geo, mat)?;
        let rhs = assemble_rhs(mesh, dofs, excitation)?;
        Ok(Self { curl, mass, robin, gram, rhs, material: *mat })
    }

    pub fn dim(&self) -> usize {
        self.curl.nrows
    }

    /// `A(w) = A_curl - w^2 A_mass + i w A_robin`.
    pub fn matrix_at(&self, omega: f64) -> Csr<c64> {
        combine_same_pattern(&[
            (&self.curl, c64::new(1.0, 0.0)),
            (&self.mass, c64::new(-omega * omega, 0.0)),
            (&self.robin, c64::new(0.0, omega)),
        ])
    }

    /// `f(w) = -i w f_j`.
    pub fn rhs_at(&self, omega: f64) -> Vec<c64> {
        let s = c64::new(0.0, -omega);
        self.rhs.iter().map(|v| s * v).collect()
    }

    pub fn system_at(&self, omega: f64) -> Result<(Csr<c64>, Vec<c64>)> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidInput(format!("omega must be positive, got {omega}")));
        }
        Ok((self.matrix_at(omega), self.rhs_at(omega)))
    }

    /// Energy norm `sqrt(x^H M x)`.
    pub fn energy_norm(&self, x: &[c64]) -> f64 {
        self.gram.form(x, x).re.max(0.0).sqrt()
    }
}
