//! Scalar potentials with a convex-concave decomposition.
//!
//! The convex derivative is treated implicitly and the concave derivative
//! explicitly by the time stepper, which is what makes the scheme
//! unconditionally energy stable.

use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A potential split into a convex part and a concave part, each with
/// first and second derivatives.
#[derive(Clone)]
pub struct PotentialSplit {
    pub convex_value: ScalarFn,
    pub convex_d1: ScalarFn,
    pub convex_d2: ScalarFn,
    pub concave_value: ScalarFn,
    pub concave_d1: ScalarFn,
    pub concave_d2: ScalarFn,
    /// Quadratic gain of the concave part; must be positive for surface
    /// potentials when the surface Dirichlet coefficient vanishes.
    pub beta: f64,
    /// Lower bound of the full potential.
    pub lower_bound: f64,
    pub name: String,
}

impl std::fmt::Debug for PotentialSplit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PotentialSplit")
            .field("name", &self.name)
            .field("beta", &self.beta)
            .field("lower_bound", &self.lower_bound)
            .finish()
    }
}

impl PotentialSplit {
    pub fn value(&self, s: f64) -> f64 {
        (self.convex_value)(s) + (self.concave_value)(s)
    }

    pub fn d1(&self, s: f64) -> f64 {
        (self.convex_d1)(s) + (self.concave_d1)(s)
    }

    /// The scheme's mixed derivative: implicit convex part at the new
    /// value, explicit concave part at the old value.
    pub fn mixed_d1(&self, phi_new: f64, phi_old: f64) -> f64 {
        (self.convex_d1)(phi_new) + (self.concave_d1)(phi_old)
    }

    /// Implicit part of the mixed derivative's derivative (the concave
    /// part is frozen at the old value and contributes nothing).
    pub fn mixed_d2_new(&self, phi_new: f64) -> f64 {
        (self.convex_d2)(phi_new)
    }
}

/// Penalized polynomial double-well potential
/// W(s) = (1 - s^2)^2 / 4 + c_pen * max(|s| - 1, 0)^2,
/// split into convex (s^4 + 1)/4 + penalty and concave -s^2/2.
pub fn double_well_penalized(c_pen: f64) -> PotentialSplit {
    assert!(c_pen >= 0.0);
    let pen = move |s: f64| {
        let e = s.abs() - 1.0;
        if e > 0.0 {
            c_pen * e * e
        } else {
            0.0
        }
    };
    let pen_d1 = move |s: f64| {
        let e = s.abs() - 1.0;
        if e > 0.0 {
            2.0 * c_pen * e * s.signum()
        } else {
            0.0
        }
    };
    // one-sided value at the kink |s| = 1, semismooth Newton convention
    let pen_d2 = move |s: f64| if s.abs() >= 1.0 { 2.0 * c_pen } else { 0.0 };

    PotentialSplit {
        convex_value: Arc::new(move |s| 0.25 * (s.powi(4) + 1.0) + pen(s)),
        convex_d1: Arc::new(move |s| s.powi(3) + pen_d1(s)),
        convex_d2: Arc::new(move |s| 3.0 * s * s + pen_d2(s)),
        concave_value: Arc::new(|s| -0.5 * s * s),
        concave_d1: Arc::new(|s| -s),
        concave_d2: Arc::new(|_| -1.0),
        beta: 0.5,
        lower_bound: 0.0,
        name: if c_pen == 0.0 {
            "doublewell".to_string()
        } else {
            format!("doublewell({c_pen})")
        },
    }
}

/// Fluid-solid interfacial (wetting) energy:
/// convex part sin(pi/2 * clamp(s, -1, 1)) + pi^2 s^2 / 8,
/// concave part -pi^2 s^2 / 8.
pub fn wetting_energy() -> PotentialSplit {
    use std::f64::consts::PI;
    let q = PI * PI / 8.0;
    PotentialSplit {
        convex_value: Arc::new(move |s| (0.5 * PI * s.clamp(-1.0, 1.0)).sin() + q * s * s),
        convex_d1: Arc::new(move |s| {
            let trig = if s.abs() <= 1.0 {
                0.5 * PI * (0.5 * PI * s).cos()
            } else {
                0.0
            };
            trig + 2.0 * q * s
        }),
        convex_d2: Arc::new(move |s| {
            let trig = if s.abs() <= 1.0 {
                -0.25 * PI * PI * (0.5 * PI * s).sin()
            } else {
                0.0
            };
            trig + 2.0 * q
        }),
        concave_value: Arc::new(move |s| -q * s * s),
        concave_d1: Arc::new(move |s| -2.0 * q * s),
        concave_d2: Arc::new(move |_| -2.0 * q),
        beta: q,
        lower_bound: -1.0,
        name: "wetting".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fd(f: impl Fn(f64) -> f64, s: f64, h: f64) -> f64 {
        (f(s + h) - f(s - h)) / (2.0 * h)
    }

    #[test]
    fn double_well_values_at_minimum() {
        let w = double_well_penalized(0.0);
        assert!(w.value(1.0).abs() < 1e-15);
        assert!(w.d1(1.0).abs() < 1e-15);
        assert!(((w.convex_d1)(1.0) - 1.0).abs() < 1e-15);
        assert!(((w.concave_d1)(1.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn double_well_at_zero() {
        let w = double_well_penalized(0.0);
        assert!((w.value(0.0) - 0.25).abs() < 1e-15);
        assert!((w.convex_d2)(0.0).abs() < 1e-15);
        assert!(((w.concave_d2)(0.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn penalty_term_value() {
        let w = double_well_penalized(10.0);
        // (1 - 2.25)^2 / 4 + 10 * 0.25
        assert!((w.value(1.5) - 2.890625).abs() < 1e-12);
    }

    #[test]
    fn mixed_d1_rule() {
        let w = double_well_penalized(0.0);
        assert_eq!(w.mixed_d1(1.0, 1.0), 0.0);
        assert_eq!(w.mixed_d1(1.0, 0.0), 1.0);
        assert_eq!(w.mixed_d1(0.0, 1.0), -1.0);
    }

    #[test]
    fn wetting_values() {
        let g = wetting_energy();
        assert!(g.value(0.0).abs() < 1e-15);
        assert!(((g.convex_value)(1.0) - (1.0 + PI * PI / 8.0)).abs() < 1e-15);
        assert!(((g.concave_value)(1.0) + PI * PI / 8.0).abs() < 1e-15);
        assert!((g.value(1.0) - 1.0).abs() < 1e-15);
        // clamp saturates the sine argument
        assert!((g.value(3.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for split in [double_well_penalized(2.0), wetting_energy()] {
            for k in 0..100 {
                let s = -3.0 + 6.0 * (k as f64 + 0.5) / 100.0;
                // skip kink neighborhoods of the penalty / clamp
                if (s.abs() - 1.0).abs() < 1e-3 {
                    continue;
                }
                let d1 = fd(|t| split.value(t), s, 1e-5);
                let scale = split.d1(s).abs().max(1.0);
                assert!(
                    (split.d1(s) - d1).abs() <= 1e-6 * scale,
                    "{}: d1 mismatch at {s}",
                    split.name
                );
                let cd2 = fd(|t| (split.convex_d1)(t), s, 1e-5);
                let scale2 = (split.convex_d2)(s).abs().max(1.0);
                assert!(
                    ((split.convex_d2)(s) - cd2).abs() <= 1e-5 * scale2,
                    "{}: convex d2 mismatch at {s}",
                    split.name
                );
            }
        }
    }

    #[test]
    fn convexity_concavity_and_lower_bound_sampled() {
        for split in [double_well_penalized(0.0), double_well_penalized(5.0), wetting_energy()] {
            for k in 0..1000 {
                let s = -3.0 + 6.0 * k as f64 / 999.0;
                assert!((split.convex_d2)(s) >= -1e-12, "{} at {s}", split.name);
                assert!((split.concave_d2)(s) <= 1e-12, "{} at {s}", split.name);
                assert!(split.value(s) >= split.lower_bound - 1e-12, "{} at {s}", split.name);
            }
        }
    }

    #[test]
    fn scalar_convex_splitting_inequalities() {
        // the two scalar facts the discrete energy law combines:
        // convex_d1(s1)(s1-s2) >= convex(s1)-convex(s2)
        // concave_d1(s2)(s1-s2) >= concave(s1)-concave(s2) + beta (s1-s2)^2
        for split in [double_well_penalized(1.0), wetting_energy()] {
            for a in 0..40 {
                for b in 0..40 {
                    let s1 = -3.0 + 6.0 * a as f64 / 39.0;
                    let s2 = -3.0 + 6.0 * b as f64 / 39.0;
                    let gap = (split.convex_d1)(s1) * (s1 - s2)
                        - ((split.convex_value)(s1) - (split.convex_value)(s2));
                    assert!(gap >= -1e-10, "{}: convexity at ({s1},{s2})", split.name);
                    let gap_c = (split.concave_d1)(s2) * (s1 - s2)
                        - ((split.concave_value)(s1) - (split.concave_value)(s2))
                        - split.beta * (s1 - s2) * (s1 - s2);
                    assert!(gap_c >= -1e-10, "{}: concavity at ({s1},{s2})", split.name);
                }
            }
        }
    }

    #[test]
    fn cubic_growth_of_d1() {
        for split in [double_well_penalized(3.0), wetting_energy()] {
            // fit C on [-10, 10], then check the bound holds with margin
            let mut c_fit = 0.0f64;
            for k in 0..400 {
                let s = -10.0 + 20.0 * k as f64 / 399.0;
                c_fit = c_fit.max(split.d1(s).abs() / (1.0 + s.abs().powi(3)));
            }
            for k in 0..400 {
                let s = -10.0 + 20.0 * k as f64 / 399.0;
                assert!(split.d1(s).abs() <= 1.0001 * c_fit * (1.0 + s.abs().powi(3)));
            }
        }
    }
}
