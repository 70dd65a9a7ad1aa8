//! Discrete energy, mass functionals, dissipation terms, and the
//! per-step energy-law check.

use crate::assembly::Assembled;
use crate::linalg::{dot, norm_inf};
use crate::params::{BcMode, ModelParams};
use crate::potential_solver::{compatibility_residual, Potentials};
use crate::potentials::PotentialSplit;

/// All per-step scalar diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnergyReport {
    pub bulk_dirichlet: f64,
    pub bulk_potential: f64,
    pub surf_dirichlet: f64,
    pub surf_potential: f64,
    pub total: f64,
    pub bulk_mass: f64,
    pub surf_mass: f64,
    pub dissipation_bulk: f64,
    pub dissipation_surf: f64,
    pub compat_residual: f64,
}

/// Discrete energy and mass functionals of a nodal field. Potential terms
/// are evaluated nodally against the lumped masses.
pub fn energy(
    asm: &Assembled,
    phi: &[f64],
    params: &ModelParams,
    bulk: &PotentialSplit,
    surface: &PotentialSplit,
) -> EnergyReport {
    let nb = asm.maps.n_boundary;
    let l_phi = asm.stiff_bulk.apply(phi);
    let bulk_dirichlet = 0.5 * params.sigma * params.delta * dot(phi, &l_phi);
    let bulk_potential = params.sigma / params.delta
        * asm
            .mass_bulk
            .diag
            .iter()
            .zip(phi)
            .map(|(m, &v)| m * bulk.value(v))
            .sum::<f64>();
    let phi_b = &phi[..nb];
    let lg_phi = asm.stiff_surf.apply(phi_b);
    let surf_dirichlet = 0.5 * params.kappa * params.delta_gamma * dot(phi_b, &lg_phi);
    let surf_potential = 1.0 / params.delta_gamma
        * asm
            .mass_surf
            .diag
            .iter()
            .zip(phi_b)
            .map(|(m, &v)| m * surface.value(v))
            .sum::<f64>();
    let bulk_mass = dot(&asm.mass_bulk.diag, phi);
    let surf_mass = dot(&asm.mass_surf.diag, phi_b);

    EnergyReport {
        bulk_dirichlet,
        bulk_potential,
        surf_dirichlet,
        surf_potential,
        total: bulk_dirichlet + bulk_potential + surf_dirichlet + surf_potential,
        bulk_mass,
        surf_mass,
        ..Default::default()
    }
}

/// Full report including the dissipation terms of the recovered potentials
/// and the flow-map compatibility residual.
pub fn full_report(
    asm: &Assembled,
    phi: &[f64],
    pots: &Potentials,
    params: &ModelParams,
    bulk: &PotentialSplit,
    surface: &PotentialSplit,
) -> EnergyReport {
    let mut report = energy(asm, phi, params, bulk, surface);
    let l_p = asm.stiff_bulk.apply(&pots.p);
    report.dissipation_bulk = params.tau * params.m * dot(&pots.p, &l_p);
    report.dissipation_surf = match params.bc_mode {
        BcMode::CahnHilliard => {
            let lg = asm.stiff_surf.apply(&pots.p_gamma);
            params.tau * params.m_gamma * dot(&pots.p_gamma, &lg)
        }
        BcMode::AllenCahn => {
            let mg = asm.mass_surf.apply(&pots.p_gamma);
            params.tau * params.m_gamma * dot(&pots.p_gamma, &mg)
        }
    };
    report.compat_residual = norm_inf(&compatibility_residual(asm, pots, params));
    report
}

/// The nonnegative gap terms the discrete energy law keeps on its left
/// side: the Dirichlet energies of the step increment and the
/// quadratic gain of the surface potential's concave part.
pub fn difference_terms(
    asm: &Assembled,
    phi_prev: &[f64],
    phi_curr: &[f64],
    params: &ModelParams,
    surface_beta: f64,
) -> f64 {
    let nb = asm.maps.n_boundary;
    let d: Vec<f64> = phi_curr.iter().zip(phi_prev).map(|(a, b)| a - b).collect();
    let l_d = asm.stiff_bulk.apply(&d);
    let mut terms = 0.5 * params.sigma * params.delta * dot(&d, &l_d);
    let d_b = &d[..nb];
    let lg_d = asm.stiff_surf.apply(d_b);
    terms += 0.5 * params.kappa * params.delta_gamma * dot(d_b, &lg_d);
    let mg_d = asm.mass_surf.apply(d_b);
    terms += surface_beta / params.delta_gamma * dot(d_b, &mg_d);
    terms
}

/// Per-step energy-law check: curr total + dissipation + gap terms must
/// not exceed prev total beyond a relative slack. Returns pass/fail and
/// the signed margin (positive = satisfied with room).
pub fn energy_inequality_check(
    prev: &EnergyReport,
    curr: &EnergyReport,
    diff_terms: f64,
) -> (bool, f64) {
    let slack = 1e-12 * prev.total.abs().max(1.0);
    let lhs = curr.total + curr.dissipation_bulk + curr.dissipation_surf + diff_terms;
    let margin = prev.total + slack - lhs;
    (margin >= 0.0, margin)
}

/// Mesh/time-step coupling ratio: h^4/tau when the surface Dirichlet term
/// is active, h^2/tau otherwise. Advisory, never an error.
pub fn assumption_c_ratio(h: f64, tau: f64, kappa: f64) -> f64 {
    if kappa > 0.0 {
        h.powi(4) / tau
    } else {
        h * h / tau
    }
}

/// Fixed CSV column order for the per-step diagnostics file.
pub const CSV_HEADER: &str = "step,time,newton_iters,bulk_dirichlet,bulk_potential,\
surf_dirichlet,surf_potential,total,bulk_mass,surf_mass,dissipation_bulk,\
dissipation_surf,compat_residual";

pub fn csv_row(step: usize, time: f64, newton_iters: usize, r: &EnergyReport) -> String {
    format!(
        "{step},{time:.12e},{newton_iters},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
        r.bulk_dirichlet,
        r.bulk_potential,
        r.surf_dirichlet,
        r.surf_potential,
        r.total,
        r.bulk_mass,
        r.surf_mass,
        r.dissipation_bulk,
        r.dissipation_surf,
        r.compat_residual
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::mesh::structured_unit_square;
    use crate::potentials::{double_well_penalized, wetting_energy};

    #[test]
    fn pure_phase_energy_is_zero_for_double_well() {
        let mesh = structured_unit_square(3);
        let asm = assemble(&mesh);
        let dw = double_well_penalized(0.0);
        let phi = vec![1.0; asm.maps.n_total];
        let r = energy(&asm, &phi, &ModelParams::default(), &dw, &dw);
        assert!(r.total.abs() < 1e-13);
    }

    #[test]
    fn pure_phase_with_wetting_offset() {
        let mesh = structured_unit_square(3);
        let asm = assemble(&mesh);
        let dw = double_well_penalized(0.0);
        let wet = wetting_energy();
        let phi = vec![1.0; asm.maps.n_total];
        let r = energy(&asm, &phi, &ModelParams::default(), &dw, &wet);
        // gamma_fs(1) = 1 on each boundary node, lumped to |Gamma| = 4
        assert!((r.surf_potential - 4.0).abs() < 1e-12);
        assert!((r.total - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_field_energy_is_quarter_area() {
        let mesh = structured_unit_square(4);
        let asm = assemble(&mesh);
        let dw = double_well_penalized(0.0);
        let phi = vec![0.0; asm.maps.n_total];
        let r = energy(&asm, &phi, &ModelParams::default(), &dw, &dw);
        assert!((r.bulk_potential - 0.25).abs() < 1e-13);
        assert!(r.bulk_dirichlet.abs() < 1e-13);
        assert!(r.surf_dirichlet.abs() < 1e-13);
        // sum rule
        let sum = r.bulk_dirichlet + r.bulk_potential + r.surf_dirichlet + r.surf_potential;
        assert_eq!(sum, r.total);
    }

    #[test]
    fn inequality_detector_fires_on_corruption() {
        let mesh = structured_unit_square(3);
        let asm = assemble(&mesh);
        let dw = double_well_penalized(0.0);
        let params = ModelParams::default();
        let phi_lo = vec![1.0; asm.maps.n_total];
        let mut phi_hi = phi_lo.clone();
        phi_hi[0] = 3.0; // raises the energy
        let prev = energy(&asm, &phi_lo, &params, &dw, &dw);
        let curr = energy(&asm, &phi_hi, &params, &dw, &dw);
        let gap = difference_terms(&asm, &phi_lo, &phi_hi, &params, dw.beta);
        let (pass, margin) = energy_inequality_check(&prev, &curr, gap);
        assert!(!pass);
        assert!(margin < 0.0);
        // equilibrium passes with zero margin up to slack
        let (pass, _) = energy_inequality_check(&prev, &prev, 0.0);
        assert!(pass);
    }

    #[test]
    fn coupling_ratio_arithmetic() {
        assert!((assumption_c_ratio(0.1, 1e-3, 1.0) - 0.1).abs() < 1e-15);
        assert!((assumption_c_ratio(0.1, 1e-3, 0.0) - 10.0).abs() < 1e-12);
        let base = assumption_c_ratio(0.1, 1e-3, 1.0);
        let refined = assumption_c_ratio(0.05, 2.5e-4, 1.0);
        assert!((refined / base - 0.25).abs() < 1e-12);
    }
}
