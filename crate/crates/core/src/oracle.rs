//! Brute-force reference implementations for tests and the `verify`
//! subcommand: dense matrices assembled from scratch with different
//! formulas, a dense monolithic solve of the coupled potential system,
//! and direct evaluation of the unreduced scheme equations.
//!
//! Nothing here shares code with the production assembly or solver paths;
//! independence is the point.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::params::{BcMode, ModelParams};
use crate::potential_solver::Potentials;
use crate::potentials::PotentialSplit;
use crate::stepper::StepState;
use nalgebra::{DMatrix, DVector};

/// Largest coupled system the dense path will accept.
pub const DENSE_GUARD: usize = 2000;

/// Densely assembled matrices, built by independent formulas:
/// bulk stiffness via cotangents, areas via Heron's formula.
pub struct DenseOracle {
    pub mass_bulk: DVector<f64>,
    pub stiff_bulk: DMatrix<f64>,
    pub mass_surf: DVector<f64>,
    pub stiff_surf: DMatrix<f64>,
    pub n_total: usize,
    pub n_boundary: usize,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

impl DenseOracle {
    pub fn assemble(mesh: &Mesh) -> Self {
        let n = mesh.n_vertices();
        let nb = mesh.n_boundary_vertices;
        let mut mass_bulk = DVector::zeros(n);
        let mut stiff_bulk = DMatrix::zeros(n, n);
        for cell in &mesh.cells {
            let p = [
                mesh.vertices[cell[0]],
                mesh.vertices[cell[1]],
                mesh.vertices[cell[2]],
            ];
            // side lengths opposite each vertex
            let s = [dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1])];
            // Heron, in the numerically stable sorted form
            let mut e = s;
            e.sort_by(|x, y| y.partial_cmp(x).unwrap());
            let (a, b, c) = (e[0], e[1], e[2]);
            let area = 0.25
                * ((a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))).sqrt();
            for &v in cell {
                mass_bulk[v] += area / 3.0;
            }
            // cotangent weights: the off-diagonal coupling between the two
            // vertices adjacent to side k is -cot(angle at vertex k)/2
            for k in 0..3 {
                let (i, j) = (cell[(k + 1) % 3], cell[(k + 2) % 3]);
                let (sa, sb, sc) = (s[k], s[(k + 1) % 3], s[(k + 2) % 3]);
                let cos_k = (sb * sb + sc * sc - sa * sa) / (2.0 * sb * sc);
                let sin_k = 2.0 * area / (sb * sc);
                let w = 0.5 * cos_k / sin_k;
                stiff_bulk[(i, j)] -= w;
                stiff_bulk[(j, i)] -= w;
                stiff_bulk[(i, i)] += w;
                stiff_bulk[(j, j)] += w;
            }
        }
        let mut mass_surf = DVector::zeros(nb);
        let mut stiff_surf = DMatrix::zeros(nb, nb);
        for face in &mesh.boundary_faces {
            let len = dist(mesh.vertices[face[0]], mesh.vertices[face[1]]);
            let (i, j) = (face[0], face[1]);
            mass_surf[i] += 0.5 * len;
            mass_surf[j] += 0.5 * len;
            stiff_surf[(i, i)] += 1.0 / len;
            stiff_surf[(j, j)] += 1.0 / len;
            stiff_surf[(i, j)] -= 1.0 / len;
            stiff_surf[(j, i)] -= 1.0 / len;
        }
        Self {
            mass_bulk,
            stiff_bulk,
            mass_surf,
            stiff_surf,
            n_total: n,
            n_boundary: nb,
        }
    }

    /// All rows of the chemical-potential equation right-hand side,
    /// boundary rows first.
    pub fn residual(
        &self,
        phi: &[f64],
        phi_old: &[f64],
        params: &ModelParams,
        bulk: &PotentialSplit,
        surface: &PotentialSplit,
    ) -> DVector<f64> {
        let n = self.n_total;
        let nb = self.n_boundary;
        let ds = params.delta * params.sigma;
        let dis = params.sigma / params.delta;
        let phi_v = DVector::from_column_slice(phi);
        let mut r = &self.stiff_bulk * &phi_v * ds;
        for i in 0..n {
            r[i] += dis * self.mass_bulk[i] * bulk.mixed_d1(phi[i], phi_old[i]);
        }
        let phi_b = DVector::from_column_slice(&phi[..nb]);
        let surf = &self.stiff_surf * phi_b * (params.kappa * params.delta_gamma);
        for i in 0..nb {
            r[i] += surf[i]
                + self.mass_surf[i] / params.delta_gamma
                    * surface.mixed_d1(phi[i], phi_old[i]);
        }
        r
    }

    /// Solve the full coupled (n_total + n_boundary)-square system for the
    /// potentials by dense LU: unknowns are P (boundary rows first)
    /// followed by P_Gamma. Rows: mass coupling on the boundary, interior
    /// mass, flow-map compatibility.
    pub fn dense_coupled_solve(
        &self,
        phi: &[f64],
        phi_old: &[f64],
        params: &ModelParams,
        bulk: &PotentialSplit,
        surface: &PotentialSplit,
    ) -> Result<Potentials> {
        let n = self.n_total;
        let nb = self.n_boundary;
        let dim = n + nb;
        if dim > DENSE_GUARD {
            return Err(Error::DenseGuard {
                size: dim,
                guard: DENSE_GUARD,
            });
        }
        let r = self.residual(phi, phi_old, params, bulk, surface);

        let mut a = DMatrix::zeros(dim, dim);
        let mut rhs = DVector::zeros(dim);
        // boundary mass-coupling rows
        for i in 0..nb {
            a[(i, i)] = self.mass_bulk[i];
            a[(i, n + i)] = self.mass_surf[i];
            rhs[i] = r[i];
        }
        // interior mass rows
        for i in nb..n {
            a[(i, i)] = self.mass_bulk[i];
            rhs[i] = r[i];
        }
        // compatibility rows
        for i in 0..nb {
            let row = n + i;
            for j in 0..n {
                a[(row, j)] = params.m * self.stiff_bulk[(i, j)] / self.mass_bulk[i];
            }
            match params.bc_mode {
                BcMode::CahnHilliard => {
                    for j in 0..nb {
                        a[(row, n + j)] -=
                            params.m_gamma * self.stiff_surf[(i, j)] / self.mass_surf[i];
                    }
                }
                BcMode::AllenCahn => {
                    a[(row, n + i)] -= params.m_gamma;
                }
            }
        }

        let lu = a.lu();
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| Error::LinearSolve("dense coupled system is singular".into()))?;
        Ok(Potentials {
            p: sol.as_slice()[..n].to_vec(),
            p_gamma: sol.as_slice()[n..].to_vec(),
        })
    }
}

/// Residual norms of the three unreduced scheme equations at a converged
/// step, all measured in the infinity norm.
#[derive(Debug, Clone, Copy)]
pub struct MatrixformReport {
    /// Bulk evolution row: M phi + tau m L p - M phi_old.
    pub bulk_evolution: f64,
    /// Boundary evolution row.
    pub surface_evolution: f64,
    /// Chemical-potential definition row.
    pub potential_definition: f64,
    /// Scale used to normalize (max of term magnitudes).
    pub scale: f64,
}

impl MatrixformReport {
    pub fn max(&self) -> f64 {
        self.bulk_evolution
            .max(self.surface_evolution)
            .max(self.potential_definition)
    }
}

/// Evaluate the residuals of the unreduced scheme at a converged state.
pub fn verify_matrixform(
    oracle: &DenseOracle,
    state: &StepState,
    phi_old: &[f64],
    params: &ModelParams,
    bulk: &PotentialSplit,
    surface: &PotentialSplit,
) -> MatrixformReport {
    let n = oracle.n_total;
    let nb = oracle.n_boundary;
    let phi = DVector::from_column_slice(&state.phi);
    let old = DVector::from_column_slice(phi_old);
    let p = DVector::from_column_slice(&state.potentials.p);
    let pg = DVector::from_column_slice(&state.potentials.p_gamma);

    let mut scale = 0.0f64;
    let mut track = |v: f64| {
        scale = scale.max(v.abs());
        v
    };

    // bulk evolution
    let lp = &oracle.stiff_bulk * &p;
    let mut bulk_res = 0.0f64;
    for i in 0..n {
        let m_dphi = track(oracle.mass_bulk[i] * (phi[i] - old[i]));
        let flux = track(params.tau * params.m * lp[i]);
        bulk_res = bulk_res.max((m_dphi + flux).abs());
    }

    // surface evolution
    let mut surf_res = 0.0f64;
    match params.bc_mode {
        BcMode::CahnHilliard => {
            let lg_pg = &oracle.stiff_surf * &pg;
            for i in 0..nb {
                let m_dphi = track(oracle.mass_surf[i] * (phi[i] - old[i]));
                let flux = track(params.tau * params.m_gamma * lg_pg[i]);
                surf_res = surf_res.max((m_dphi + flux).abs());
            }
        }
        BcMode::AllenCahn => {
            for i in 0..nb {
                let m_dphi = track(oracle.mass_surf[i] * (phi[i] - old[i]));
                let flux = track(params.tau * params.m_gamma * oracle.mass_surf[i] * pg[i]);
                surf_res = surf_res.max((m_dphi + flux).abs());
            }
        }
    }

    // potential definition
    let r = oracle.residual(state.phi.as_slice(), phi_old, params, bulk, surface);
    let mut mu_res = 0.0f64;
    for i in 0..n {
        let mut lhs = track(oracle.mass_bulk[i] * p[i]);
        if i < nb {
            lhs += track(oracle.mass_surf[i] * pg[i]);
        }
        mu_res = mu_res.max((lhs - track(r[i])).abs());
    }

    MatrixformReport {
        bulk_evolution: bulk_res,
        surface_evolution: surf_res,
        potential_definition: mu_res,
        scale: scale.max(1.0),
    }
}
