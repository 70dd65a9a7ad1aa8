//! Time stepping: advance the phase field by solving the reduced
//! nonlinear equation with a damped matrix-free Newton-Krylov method.
//!
//! The Jacobian is never assembled; each action costs one boundary-sized
//! SPD solve through the cached Schur factorization, which is what keeps
//! the per-step cost proportional to the boundary size.

use crate::assembly::Assembled;
use crate::diagnostics::{
    difference_terms, energy, energy_inequality_check, full_report, EnergyReport,
};
use crate::error::{Error, Result};
use crate::linalg::{axpy, gmres, norm2};
use crate::params::ModelParams;
use crate::potential_solver::{
    recover_potentials, recover_potentials_jac, Potentials, SchurOperator,
};
use crate::potentials::PotentialSplit;

/// Newton and inner Krylov controls.
#[derive(Debug, Clone, Copy)]
pub struct NewtonConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iters: usize,
    /// Backtracking factor in (0, 1).
    pub damping: f64,
    pub max_backtracks: usize,
    pub krylov_tol: f64,
    pub krylov_restart: usize,
    pub krylov_maxit: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_iters: 50,
            damping: 0.5,
            max_backtracks: 30,
            krylov_tol: 1e-8,
            krylov_restart: 600,
            krylov_maxit: 10_000,
        }
    }
}

/// One accepted time step.
#[derive(Debug, Clone)]
pub struct StepState {
    pub time: f64,
    pub phi: Vec<f64>,
    pub potentials: Potentials,
    pub newton_iters: usize,
    pub diagnostics: EnergyReport,
}

/// Everything fixed across a run: matrices, Schur factorization,
/// coefficients, and potentials.
pub struct System {
    pub asm: Assembled,
    pub schur: SchurOperator,
    pub params: ModelParams,
    pub bulk: PotentialSplit,
    pub surface: PotentialSplit,
}

impl System {
    /// Residual of the reduced nonlinear step equation:
    /// H(phi) = phi - phi_old + tau m M^{-1} L P(phi).
    pub fn residual(&self, phi: &[f64], phi_old: &[f64]) -> Result<(Vec<f64>, Potentials)> {
        let pots = recover_potentials(
            &self.asm,
            &self.schur,
            phi,
            phi_old,
            &self.params,
            &self.bulk,
            &self.surface,
        )?;
        let l_p = self.asm.stiff_bulk.apply(&pots.p);
        let c = self.params.tau * self.params.m;
        let h: Vec<f64> = (0..phi.len())
            .map(|i| phi[i] - phi_old[i] + c * l_p[i] / self.asm.mass_bulk.diag[i])
            .collect();
        Ok((h, pots))
    }

    /// Directional derivative of the residual. The concave potential parts
    /// are explicit in the scheme, so only the convex second derivatives
    /// enter.
    pub fn jacobian_apply(&self, phi: &[f64], dir: &[f64]) -> Result<Vec<f64>> {
        let dpots = recover_potentials_jac(
            &self.asm,
            &self.schur,
            phi,
            dir,
            &self.params,
            &self.bulk,
            &self.surface,
        )?;
        let l_dp = self.asm.stiff_bulk.apply(&dpots.p);
        let c = self.params.tau * self.params.m;
        Ok((0..dir.len())
            .map(|i| dir[i] + c * l_dp[i] / self.asm.mass_bulk.diag[i])
            .collect())
    }

    /// Advance one time step from `phi_old` starting the Newton iteration
    /// at the previous solution.
    pub fn solve_step(
        &self,
        phi_old: &[f64],
        time_old: f64,
        cfg: &NewtonConfig,
    ) -> Result<StepState> {
        let prev_energy = energy(&self.asm, phi_old, &self.params, &self.bulk, &self.surface);

        let mut phi = phi_old.to_vec();
        let (mut h, mut pots) = self.residual(&phi, phi_old)?;
        let mut h_norm = norm2(&h);
        let tol = cfg.abs_tol + cfg.rel_tol * h_norm;
        let mut history = vec![h_norm];
        let mut iters = 0usize;

        while h_norm > tol {
            if iters >= cfg.max_iters {
                return Err(Error::MaxItersExceeded {
                    iters,
                    best_residual: h_norm,
                    history,
                });
            }
            let rhs: Vec<f64> = h.iter().map(|v| -v).collect();
            let direction = gmres(
                |v| self.jacobian_apply(&phi, v).expect("inner solve failed"),
                &rhs,
                cfg.krylov_tol,
                cfg.krylov_restart,
                cfg.krylov_maxit,
            )?;

            // backtracking on the residual norm
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..=cfg.max_backtracks {
                let mut trial = phi.clone();
                axpy(alpha, &direction, &mut trial);
                let (h_trial, pots_trial) = self.residual(&trial, phi_old)?;
                let n_trial = norm2(&h_trial);
                if n_trial < h_norm {
                    phi = trial;
                    h = h_trial;
                    pots = pots_trial;
                    h_norm = n_trial;
                    accepted = true;
                    break;
                }
                alpha *= cfg.damping;
            }
            iters += 1;
            history.push(h_norm);
            if !accepted {
                return Err(Error::MaxItersExceeded {
                    iters,
                    best_residual: h_norm,
                    history,
                });
            }
        }

        let diagnostics = full_report(&self.asm, &phi, &pots, &self.params, &self.bulk, &self.surface);
        let gap = difference_terms(&self.asm, phi_old, &phi, &self.params, self.surface.beta);
        let (pass, margin) = energy_inequality_check(&prev_energy, &diagnostics, gap);
        if !pass {
            return Err(Error::EnergyViolation { violation: -margin });
        }

        Ok(StepState {
            time: time_old + self.params.tau,
            phi,
            potentials: pots,
            newton_iters: iters,
            diagnostics,
        })
    }

    /// Run `n_steps` steps, invoking the callback after each accepted step.
    /// Halts on the first error.
    pub fn run(
        &self,
        initial: &[f64],
        n_steps: usize,
        cfg: &NewtonConfig,
        mut callback: impl FnMut(usize, &StepState),
    ) -> Result<Vec<StepState>> {
        assert!(n_steps >= 1);
        let mut states = Vec::with_capacity(n_steps);
        let mut phi = initial.to_vec();
        let mut time = 0.0;
        for step in 1..=n_steps {
            let state = self.solve_step(&phi, time, cfg)?;
            phi = state.phi.clone();
            time = state.time;
            callback(step, &state);
            states.push(state);
        }
        Ok(states)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::linalg::{dot, norm_inf};
    use crate::mesh::structured_unit_square;
    use crate::params::BcMode;
    use crate::potential_solver::{build_schur, SchurSolverKind};
    use crate::potentials::double_well_penalized;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn system(n: usize, mode: BcMode, tau: f64) -> System {
        let mesh = structured_unit_square(n);
        let asm = assemble(&mesh);
        let params = ModelParams {
            tau,
            bc_mode: mode,
            ..Default::default()
        };
        let schur = build_schur(&asm, &params, SchurSolverKind::Auto, 1e-12, 100_000).unwrap();
        System {
            asm,
            schur,
            params,
            bulk: double_well_penalized(0.0),
            surface: double_well_penalized(0.0),
        }
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let sys = system(2, BcMode::CahnHilliard, 1e-3);
        for value in [1.0, 0.0] {
            let phi = vec![value; sys.asm.maps.n_total];
            let (h, _) = sys.residual(&phi, &phi).unwrap();
            assert!(norm_inf(&h) < 1e-12);
            let state = sys.solve_step(&phi, 0.0, &NewtonConfig::default()).unwrap();
            assert_eq!(state.newton_iters, 0);
            assert!(norm_inf(&state.phi.iter().zip(&phi).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-13);
        }
    }

    #[test]
    fn jacobian_of_zero_direction_is_zero() {
        let sys = system(2, BcMode::CahnHilliard, 1e-3);
        let phi: Vec<f64> = (0..sys.asm.maps.n_total).map(|i| (0.3 * i as f64).sin()).collect();
        let zero = vec![0.0; phi.len()];
        let jv = sys.jacobian_apply(&phi, &zero).unwrap();
        assert!(norm_inf(&jv) == 0.0);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let sys = system(2, BcMode::CahnHilliard, 1e-3);
        let n = sys.asm.maps.n_total;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let phi: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let phi_old = vec![0.0; n];
            let jv = sys.jacobian_apply(&phi, &dir).unwrap();
            let eps = 1e-6 * norm2(&phi).max(1.0) / norm2(&dir);
            let mut phi_p = phi.clone();
            axpy(eps, &dir, &mut phi_p);
            let (h_p, _) = sys.residual(&phi_p, &phi_old).unwrap();
            let (h_0, _) = sys.residual(&phi, &phi_old).unwrap();
            let fd: Vec<f64> = h_p.iter().zip(&h_0).map(|(a, b)| (a - b) / eps).collect();
            let scale = norm2(&jv).max(1e-12);
            let err: Vec<f64> = jv.iter().zip(&fd).map(|(a, b)| a - b).collect();
            assert!(norm2(&err) / scale <= 1e-5, "rel err {}", norm2(&err) / scale);
        }
    }

    #[test]
    fn jacobian_is_linear_in_direction() {
        let sys = system(2, BcMode::AllenCahn, 1e-2);
        let n = sys.asm.maps.n_total;
        let phi: Vec<f64> = (0..n).map(|i| 0.2 * (1.3 * i as f64).cos()).collect();
        let v: Vec<f64> = (0..n).map(|i| (0.7 * i as f64).sin()).collect();
        let w: Vec<f64> = (0..n).map(|i| (0.2 * i as f64 + 1.0).cos()).collect();
        let alpha = 2.75;
        let combo: Vec<f64> = v.iter().zip(&w).map(|(a, b)| alpha * a + b).collect();
        let j_combo = sys.jacobian_apply(&phi, &combo).unwrap();
        let j_v = sys.jacobian_apply(&phi, &v).unwrap();
        let j_w = sys.jacobian_apply(&phi, &w).unwrap();
        let scale = norm2(&j_combo).max(1.0);
        for i in 0..n {
            assert!((j_combo[i] - alpha * j_v[i] - j_w[i]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn spinodal_run_dissipates_energy_and_conserves_mass() {
        let sys = system(8, BcMode::CahnHilliard, 1e-3);
        let n = sys.asm.maps.n_total;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let phi0: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let cfg = NewtonConfig::default();
        let states = sys.run(&phi0, 20, &cfg, |_, _| {}).unwrap();

        let e0 = energy(&sys.asm, &phi0, &sys.params, &sys.bulk, &sys.surface);
        let mut prev_total = e0.total;
        for s in &states {
            assert!(s.diagnostics.total <= prev_total + 1e-12 * prev_total.abs().max(1.0));
            prev_total = s.diagnostics.total;
        }
        let mass0 = dot(&sys.asm.mass_bulk.diag, &phi0);
        let mass_end = states.last().unwrap().diagnostics.bulk_mass;
        assert!((mass_end - mass0).abs() <= 1e-10 * sys.asm.mass_bulk.sum().abs().max(1.0));
    }

    #[test]
    fn huge_time_step_still_converges() {
        let sys = system(4, BcMode::CahnHilliard, 1.0);
        let n = sys.asm.maps.n_total;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi0: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let state = sys.solve_step(&phi0, 0.0, &NewtonConfig::default()).unwrap();
        let e0 = energy(&sys.asm, &phi0, &sys.params, &sys.bulk, &sys.surface);
        assert!(state.diagnostics.total <= e0.total + 1e-12 * e0.total.abs().max(1.0));
    }
}
