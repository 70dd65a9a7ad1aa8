//! Lumped P1 mass and stiffness matrices on the bulk and on the boundary,
//! block index bookkeeping, and the nonlinear residual vectors of the
//! chemical-potential system.
//!
//! All nonlinear terms are evaluated nodally: with lumped masses the
//! interpolated products collapse to diagonal-mass-times-nodal-values.

use crate::error::{Error, Result};
use crate::linalg::{DiagMatrix, SparseSymMatrix};
use crate::mesh::Mesh;
use crate::params::ModelParams;
use crate::potentials::PotentialSplit;

/// Boundary-first block dimensions.
#[derive(Debug, Clone, Copy)]
pub struct BlockMaps {
    pub n_total: usize,
    pub n_boundary: usize,
}

impl BlockMaps {
    pub fn n_interior(&self) -> usize {
        self.n_total - self.n_boundary
    }
}

/// Assembled matrices for one mesh.
#[derive(Debug, Clone)]
pub struct Assembled {
    /// Lumped bulk mass.
    pub mass_bulk: DiagMatrix,
    /// Bulk stiffness.
    pub stiff_bulk: SparseSymMatrix,
    /// Lumped surface mass (boundary vertices only).
    pub mass_surf: DiagMatrix,
    /// Surface stiffness (tangential derivative along boundary edges).
    pub stiff_surf: SparseSymMatrix,
    pub maps: BlockMaps,
}

/// Lumped mass and stiffness on the bulk triangulation.
pub fn assemble_bulk(mesh: &Mesh) -> (DiagMatrix, SparseSymMatrix) {
    let n = mesh.n_vertices();
    let mut mass = vec![0.0f64; n];
    let mut triplets = Vec::with_capacity(9 * mesh.cells.len());
    for cell in &mesh.cells {
        let p = [
            mesh.vertices[cell[0]],
            mesh.vertices[cell[1]],
            mesh.vertices[cell[2]],
        ];
        let area = 0.5
            * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
        for &v in cell {
            mass[v] += area / 3.0;
        }
        // gradients of the barycentric coordinates
        let mut grads = [[0.0f64; 2]; 3];
        for k in 0..3 {
            let a = p[(k + 1) % 3];
            let b = p[(k + 2) % 3];
            grads[k] = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
        }
        for i in 0..3 {
            for j in 0..3 {
                let v = area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                triplets.push((cell[i], cell[j], v));
            }
        }
    }
    (
        DiagMatrix::new(mass),
        SparseSymMatrix::from_triplets(n, triplets),
    )
}

/// Lumped mass and stiffness on the induced boundary partition. On a
/// straight edge the surface gradient is the tangential derivative, so the
/// element stiffness is the 1D hat-function stiffness scaled by 1/|e|.
pub fn assemble_boundary(mesh: &Mesh) -> (DiagMatrix, SparseSymMatrix) {
    let nb = mesh.n_boundary_vertices;
    let mut mass = vec![0.0f64; nb];
    let mut triplets = Vec::with_capacity(4 * mesh.boundary_faces.len());
    for face in &mesh.boundary_faces {
        let a = mesh.vertices[face[0]];
        let b = mesh.vertices[face[1]];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        mass[face[0]] += 0.5 * len;
        mass[face[1]] += 0.5 * len;
        let k = 1.0 / len;
        triplets.push((face[0], face[0], k));
        triplets.push((face[1], face[1], k));
        triplets.push((face[0], face[1], -k));
        triplets.push((face[1], face[0], -k));
    }
    (
        DiagMatrix::new(mass),
        SparseSymMatrix::from_triplets(nb, triplets),
    )
}

/// Assemble everything for a mesh.
pub fn assemble(mesh: &Mesh) -> Assembled {
    let (mass_bulk, stiff_bulk) = assemble_bulk(mesh);
    let (mass_surf, stiff_surf) = assemble_boundary(mesh);
    Assembled {
        maps: BlockMaps {
            n_total: mesh.n_vertices(),
            n_boundary: mesh.n_boundary_vertices,
        },
        mass_bulk,
        stiff_bulk,
        mass_surf,
        stiff_surf,
    }
}

impl Assembled {
    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.maps.n_total {
            return Err(Error::LengthMismatch {
                expected: self.maps.n_total,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Interior-row residual of the chemical-potential equation:
    /// delta sigma (L restricted to interior rows) phi plus the lumped
    /// nodal mixed potential derivative.
    pub fn residual_interior(
        &self,
        phi: &[f64],
        phi_old: &[f64],
        params: &ModelParams,
        bulk: &PotentialSplit,
    ) -> Result<Vec<f64>> {
        self.check_len(phi)?;
        self.check_len(phi_old)?;
        let nb = self.maps.n_boundary;
        let ds = params.delta * params.sigma;
        let dis = params.sigma / params.delta;
        let mut r = self.stiff_bulk.apply_rows_from(phi, nb);
        for (k, rk) in r.iter_mut().enumerate() {
            let i = nb + k;
            *rk = ds * *rk + dis * self.mass_bulk.diag[i] * bulk.mixed_d1(phi[i], phi_old[i]);
        }
        Ok(r)
    }

    /// Boundary-row residual: the interior expression's boundary rows plus
    /// the surface Dirichlet and surface potential terms.
    pub fn residual_boundary(
        &self,
        phi: &[f64],
        phi_old: &[f64],
        params: &ModelParams,
        bulk: &PotentialSplit,
        surface: &PotentialSplit,
    ) -> Result<Vec<f64>> {
        self.check_len(phi)?;
        self.check_len(phi_old)?;
        let nb = self.maps.n_boundary;
        let ds = params.delta * params.sigma;
        let dis = params.sigma / params.delta;
        let dig = 1.0 / params.delta_gamma;
        let kd = params.kappa * params.delta_gamma;
        let mut r = self.stiff_bulk.apply_rows(phi, nb);
        let surf_stiff_phi = self.stiff_surf.apply(&phi[..nb]);
        for (i, ri) in r.iter_mut().enumerate() {
            *ri = ds * *ri
                + dis * self.mass_bulk.diag[i] * bulk.mixed_d1(phi[i], phi_old[i])
                + kd * surf_stiff_phi[i]
                + dig * self.mass_surf.diag[i] * surface.mixed_d1(phi[i], phi_old[i]);
        }
        Ok(r)
    }

    /// Directional derivative of `residual_interior` with respect to phi.
    pub fn residual_interior_jac(
        &self,
        phi: &[f64],
        dir: &[f64],
        params: &ModelParams,
        bulk: &PotentialSplit,
    ) -> Vec<f64> {
        let nb = self.maps.n_boundary;
        let ds = params.delta * params.sigma;
        let dis = params.sigma / params.delta;
        let mut r = self.stiff_bulk.apply_rows_from(dir, nb);
        for (k, rk) in r.iter_mut().enumerate() {
            let i = nb + k;
            *rk = ds * *rk + dis * self.mass_bulk.diag[i] * bulk.mixed_d2_new(phi[i]) * dir[i];
        }
        r
    }

    /// Directional derivative of `residual_boundary` with respect to phi.
    pub fn residual_boundary_jac(
        &self,
        phi: &[f64],
        dir: &[f64],
        params: &ModelParams,
        bulk: &PotentialSplit,
        surface: &PotentialSplit,
    ) -> Vec<f64> {
        let nb = self.maps.n_boundary;
        let ds = params.delta * params.sigma;
        let dis = params.sigma / params.delta;
        let dig = 1.0 / params.delta_gamma;
        let kd = params.kappa * params.delta_gamma;
        let mut r = self.stiff_bulk.apply_rows(dir, nb);
        let surf_stiff_dir = self.stiff_surf.apply(&dir[..nb]);
        for (i, ri) in r.iter_mut().enumerate() {
            *ri = ds * *ri
                + dis * self.mass_bulk.diag[i] * bulk.mixed_d2_new(phi[i]) * dir[i]
                + kd * surf_stiff_dir[i]
                + dig * self.mass_surf.diag[i] * surface.mixed_d2_new(phi[i]) * dir[i];
        }
        r
    }

    /// Dump a matrix in MatrixMarket coordinate format (debug aid).
    pub fn write_matrix_market(m: &SparseSymMatrix, path: &std::path::Path) -> Result<()> {
        use std::fmt::Write as _;
        let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(out, "{} {} {}", m.dim, m.dim, m.nnz());
        for i in 0..m.dim {
            let (cols, vals) = m.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let _ = writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v);
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}
