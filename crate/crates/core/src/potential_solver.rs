//! Recovery of the chemical potentials from a phase-field candidate.
//!
//! The interior potential follows from a diagonal elimination, the
//! boundary trace from a boundary-sized symmetric positive definite
//! solve, and the surface potential from back-substitution. The Schur
//! matrix depends only on the mesh and the mobilities, so its
//! factorization is built once and reused across all time steps.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::assembly::Assembled;
use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, SparseSymMatrix};
use crate::params::{BcMode, ModelParams};
use crate::potentials::PotentialSplit;

/// How to solve the boundary Schur system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchurSolverKind {
    Cholesky,
    Cg,
    #[default]
    Auto,
}

/// Boundary unknowns below this count use a Cholesky factorization.
pub const CHOLESKY_THRESHOLD: usize = 2000;

/// Nodal chemical potentials.
#[derive(Debug, Clone)]
pub struct Potentials {
    /// Bulk potential, length n_total (boundary trace first).
    pub p: Vec<f64>,
    /// Surface potential, length n_boundary.
    pub p_gamma: Vec<f64>,
}

pub struct SchurOperator {
    pub mode: BcMode,
    /// The assembled Schur matrix S.
    pub matrix: SparseSymMatrix,
    factor: Option<Cholesky<f64, Dyn>>,
    pub cg_tol: f64,
    pub cg_maxit: usize,
    /// Effective relative accuracy of the boundary solve; the
    /// compatibility diagnostic is measured against this.
    pub solver_tol: f64,
    m: f64,
    m_gamma: f64,
}

impl std::fmt::Debug for SchurOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SchurOperator")
            .field("mode", &self.mode)
            .field("dim", &self.matrix.dim)
            .field("factored", &self.factor.is_some())
            .finish()
    }
}

/// Assemble S = m L|GG + m_G D L_G D (Cahn-Hilliard boundary) or
/// S = m L|GG + m_G D M_G D (Allen-Cahn boundary), with the diagonal
/// scaling D = M|GG M_G^{-1}. Both keep a boundary-sized sparse pattern.
pub fn build_schur(
    asm: &Assembled,
    params: &ModelParams,
    kind: SchurSolverKind,
    cg_tol: f64,
    cg_maxit: usize,
) -> Result<SchurOperator> {
    assert!(params.m > 0.0 && params.m_gamma > 0.0);
    let nb = asm.maps.n_boundary;
    let d: Vec<f64> = (0..nb)
        .map(|i| asm.mass_bulk.diag[i] / asm.mass_surf.diag[i])
        .collect();

    let mut triplets = Vec::new();
    for i in 0..nb {
        let (cols, vals) = asm.stiff_bulk.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j < nb {
                triplets.push((i, j, params.m * v));
            }
        }
    }
    match params.bc_mode {
        BcMode::CahnHilliard => {
            for i in 0..nb {
                let (cols, vals) = asm.stiff_surf.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    triplets.push((i, j, params.m_gamma * d[i] * v * d[j]));
                }
            }
        }
        BcMode::AllenCahn => {
            for (i, &di) in d.iter().enumerate() {
                triplets.push((i, i, params.m_gamma * di * asm.mass_surf.diag[i] * di));
            }
        }
    }
    let matrix = SparseSymMatrix::from_triplets(nb, triplets);

    let use_cholesky = match kind {
        SchurSolverKind::Cholesky => true,
        SchurSolverKind::Cg => false,
        SchurSolverKind::Auto => nb <= CHOLESKY_THRESHOLD,
    };
    let factor = if use_cholesky && nb > 0 {
        let dense = matrix.to_dense();
        Some(Cholesky::new(dense).ok_or_else(|| {
            Error::LinearSolve(
                "Cholesky factorization of the Schur matrix failed; the matrix should be \
                 symmetric positive definite, so this signals a mesh or assembly bug"
                    .to_string(),
            )
        })?)
    } else {
        None
    };
    let solver_tol = if factor.is_some() { 1e-12 } else { cg_tol };

    Ok(SchurOperator {
        mode: params.bc_mode,
        matrix,
        factor,
        cg_tol,
        cg_maxit,
        solver_tol,
        m: params.m,
        m_gamma: params.m_gamma,
    })
}

impl SchurOperator {
    /// Solve S x = rhs.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if let Some(chol) = &self.factor {
            let b = DVector::from_column_slice(rhs);
            let x = chol.solve(&b);
            Ok(x.as_slice().to_vec())
        } else {
            let mut x = vec![0.0; rhs.len()];
            conjugate_gradient(|v| self.matrix.apply(v), rhs, &mut x, self.cg_tol, self.cg_maxit)?;
            Ok(x)
        }
    }

    pub fn dense(&self) -> DMatrix<f64> {
        self.matrix.to_dense()
    }
}

/// L|GOmega_int applied to an interior-length vector: boundary rows,
/// interior columns of the bulk stiffness.
fn stiff_gamma_interior_apply(asm: &Assembled, p_int: &[f64]) -> Vec<f64> {
    let nb = asm.maps.n_boundary;
    let mut out = vec![0.0; nb];
    for (i, oi) in out.iter_mut().enumerate() {
        let (cols, vals) = asm.stiff_bulk.row(i);
        *oi = cols
            .iter()
            .zip(vals)
            .filter(|(&j, _)| j >= nb)
            .map(|(&j, &v)| v * p_int[j - nb])
            .sum();
    }
    out
}

/// Assemble the right-hand side of the boundary Schur system from the
/// eliminated interior potential and the boundary residual, then solve
/// and back-substitute. `r_int` and `r_bnd` may be the nonlinear
/// residuals or their directional derivatives; the composition is linear.
fn recover_from_residuals(
    asm: &Assembled,
    schur: &SchurOperator,
    r_int: &[f64],
    r_bnd: &[f64],
) -> Result<Potentials> {
    let nb = asm.maps.n_boundary;
    let p_int: Vec<f64> = r_int
        .iter()
        .enumerate()
        .map(|(k, r)| r / asm.mass_bulk.diag[nb + k])
        .collect();

    let coupled = stiff_gamma_interior_apply(asm, &p_int);
    let rhs: Vec<f64> = match schur.mode {
        BcMode::CahnHilliard => {
            let scaled: Vec<f64> = r_bnd
                .iter()
                .zip(&asm.mass_surf.diag)
                .map(|(r, mg)| r / mg)
                .collect();
            let lg = asm.stiff_surf.apply(&scaled);
            (0..nb)
                .map(|i| {
                    -schur.m * coupled[i]
                        + schur.m_gamma * asm.mass_bulk.diag[i] / asm.mass_surf.diag[i] * lg[i]
                })
                .collect()
        }
        BcMode::AllenCahn => (0..nb)
            .map(|i| {
                -schur.m * coupled[i]
                    + schur.m_gamma * asm.mass_bulk.diag[i] / asm.mass_surf.diag[i] * r_bnd[i]
            })
            .collect(),
    };

    let p_bnd = schur.solve(&rhs)?;

    let p_gamma: Vec<f64> = (0..nb)
        .map(|i| (r_bnd[i] - asm.mass_bulk.diag[i] * p_bnd[i]) / asm.mass_surf.diag[i])
        .collect();

    let mut p = p_bnd;
    p.extend_from_slice(&p_int);
    Ok(Potentials { p, p_gamma })
}

/// Recover the chemical potentials for a phase-field candidate.
pub fn recover_potentials(
    asm: &Assembled,
    schur: &SchurOperator,
    phi: &[f64],
    phi_old: &[f64],
    params: &ModelParams,
    bulk: &PotentialSplit,
    surface: &PotentialSplit,
) -> Result<Potentials> {
    let r_int = asm.residual_interior(phi, phi_old, params, bulk)?;
    let r_bnd = asm.residual_boundary(phi, phi_old, params, bulk, surface)?;
    recover_from_residuals(asm, schur, &r_int, &r_bnd)
}

/// Directional derivative of `recover_potentials` with respect to phi.
pub fn recover_potentials_jac(
    asm: &Assembled,
    schur: &SchurOperator,
    phi: &[f64],
    dir: &[f64],
    params: &ModelParams,
    bulk: &PotentialSplit,
    surface: &PotentialSplit,
) -> Result<Potentials> {
    let r_int = asm.residual_interior_jac(phi, dir, params, bulk);
    let r_bnd = asm.residual_boundary_jac(phi, dir, params, bulk, surface);
    recover_from_residuals(asm, schur, &r_int, &r_bnd)
}

/// The flow-map compatibility residual: the difference between the bulk
/// and surface predictions of the boundary-trace update rate. Vanishes
/// algebraically up to the boundary-solve tolerance.
pub fn compatibility_residual(
    asm: &Assembled,
    pots: &Potentials,
    params: &ModelParams,
) -> Vec<f64> {
    let nb = asm.maps.n_boundary;
    let bulk_rate = asm.stiff_bulk.apply_rows(&pots.p, nb);
    match params.bc_mode {
        BcMode::CahnHilliard => {
            let lg = asm.stiff_surf.apply(&pots.p_gamma);
            (0..nb)
                .map(|i| {
                    params.m * bulk_rate[i] / asm.mass_bulk.diag[i]
                        - params.m_gamma * lg[i] / asm.mass_surf.diag[i]
                })
                .collect()
        }
        BcMode::AllenCahn => (0..nb)
            .map(|i| {
                params.m * bulk_rate[i] / asm.mass_bulk.diag[i]
                    - params.m_gamma * pots.p_gamma[i]
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::linalg::norm_inf;
    use crate::mesh::structured_unit_square;
    use crate::potentials::double_well_penalized;

    fn setup(n: usize, mode: BcMode) -> (Assembled, ModelParams, SchurOperator) {
        let mesh = structured_unit_square(n);
        let asm = assemble(&mesh);
        let params = ModelParams {
            bc_mode: mode,
            ..Default::default()
        };
        let schur = build_schur(&asm, &params, SchurSolverKind::Auto, 1e-12, 10_000).unwrap();
        (asm, params, schur)
    }

    #[test]
    fn schur_is_spd_on_tiny_mesh() {
        let (_, _, schur) = setup(1, BcMode::CahnHilliard);
        assert_eq!(schur.matrix.dim, 4);
        let eig = schur.dense().symmetric_eigen();
        for v in eig.eigenvalues.iter() {
            assert!(*v > 0.0, "eigenvalue {v}");
        }
    }

    #[test]
    fn constants_not_in_schur_kernel() {
        let (_, _, schur) = setup(2, BcMode::CahnHilliard);
        let ones = vec![1.0; schur.matrix.dim];
        let s_one = schur.matrix.apply(&ones);
        let quad: f64 = ones.iter().zip(&s_one).map(|(a, b)| a * b).sum();
        assert!(quad > 0.0);
    }

    #[test]
    fn ac_schur_differs_by_positive_diagonal() {
        let mesh = structured_unit_square(2);
        let asm = assemble(&mesh);
        let mut params = ModelParams::default();
        params.bc_mode = BcMode::AllenCahn;
        let s_ac = build_schur(&asm, &params, SchurSolverKind::Cg, 1e-12, 1000).unwrap();
        let nb = asm.maps.n_boundary;
        for i in 0..nb {
            for j in 0..nb {
                let l_term = params.m * asm.stiff_bulk.get(i, j);
                let diff = s_ac.matrix.get(i, j) - l_term;
                if i == j {
                    let expect = params.m_gamma * asm.mass_bulk.diag[i].powi(2)
                        / asm.mass_surf.diag[i];
                    assert!((diff - expect).abs() < 1e-14);
                    assert!(diff > 0.0);
                } else {
                    assert!(diff.abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn equilibrium_gives_zero_potentials() {
        for mode in [BcMode::CahnHilliard, BcMode::AllenCahn] {
            let (asm, params, schur) = setup(2, mode);
            let dw = double_well_penalized(0.0);
            let phi = vec![1.0; asm.maps.n_total];
            let pots =
                recover_potentials(&asm, &schur, &phi, &phi, &params, &dw, &dw).unwrap();
            assert!(norm_inf(&pots.p) < 1e-12);
            assert!(norm_inf(&pots.p_gamma) < 1e-12);
        }
    }

    #[test]
    fn compatibility_identity_holds() {
        for mode in [BcMode::CahnHilliard, BcMode::AllenCahn] {
            let (asm, params, schur) = setup(4, mode);
            let dw = double_well_penalized(0.0);
            let n = asm.maps.n_total;
            let phi: Vec<f64> = (0..n).map(|i| (0.31 * i as f64).sin() * 0.4).collect();
            let phi_old: Vec<f64> = (0..n).map(|i| (0.17 * i as f64).cos() * 0.4).collect();
            let pots =
                recover_potentials(&asm, &schur, &phi, &phi_old, &params, &dw, &dw).unwrap();
            let compat = compatibility_residual(&asm, &pots, &params);
            let scale = 1.0 + norm_inf(&pots.p) + norm_inf(&pots.p_gamma);
            assert!(
                norm_inf(&compat) <= 1e-8 * scale,
                "{mode:?}: compat {:.3e}",
                norm_inf(&compat)
            );
        }
    }

    #[test]
    fn recovery_is_linear_in_residual() {
        let (asm, _params, schur) = setup(2, BcMode::CahnHilliard);
        let ni = asm.maps.n_interior();
        let nb = asm.maps.n_boundary;
        let r_int: Vec<f64> = (0..ni).map(|i| (i as f64 + 1.0) * 0.1).collect();
        let r_bnd: Vec<f64> = (0..nb).map(|i| (i as f64 * 0.43).sin()).collect();
        let one = recover_from_residuals(&asm, &schur, &r_int, &r_bnd).unwrap();
        let r_int2: Vec<f64> = r_int.iter().map(|v| 3.0 * v).collect();
        let r_bnd2: Vec<f64> = r_bnd.iter().map(|v| 3.0 * v).collect();
        let three = recover_from_residuals(&asm, &schur, &r_int2, &r_bnd2).unwrap();
        for (a, b) in one.p.iter().zip(&three.p) {
            assert!((3.0 * a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
        for (a, b) in one.p_gamma.iter().zip(&three.p_gamma) {
            assert!((3.0 * a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
    }
}
