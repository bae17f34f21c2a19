//! The three standard transport benchmarks on the sphere: solid-body
//! rotation of a cosine bell, vortex roll-up, and the reversing
//! deformational flow, plus the equal-weight quadrature norm used to
//! report errors.
//!
//! Velocity components are the (v1, v2) pair entering the advection
//! operator as (v1 / cos theta) du/dlambda + v2 du/dtheta.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::geometry::SpherePoint;

/// Bell radius shared by the solid-body and deformational cases.
pub const DEFAULT_BELL_RADIUS: f64 = 0.5;

#[derive(Debug, Clone)]
enum Flow {
    /// Rigid rotation; for tilt angle alpha = pi/2 the bell is carried
    /// straight over both poles.
    SolidBody { alpha: f64, bell_radius: f64 },
    /// Steady zonal shear with vortex centers at the poles.
    Vortex { rho0: f64, zeta: f64 },
    /// Non-divergent flow with a cos(pi t / T) factor that reverses the
    /// deformation, returning the tracer to its initial position at t = T.
    Deformational { bell_radius: f64 },
}

/// A benchmark flow: velocity field, initial condition, optional exact
/// solution and final time.
#[derive(Debug, Clone)]
pub struct TestCase {
    pub name: &'static str,
    pub t_final: f64,
    pub time_dependent_velocity: bool,
    flow: Flow,
}

/// Solid-body rotation of a cosine bell (tilt alpha = pi/2, bell radius
/// 1/2 centered on the equator, one full revolution at T = 2 pi).
pub fn solid_body_case() -> TestCase {
    TestCase {
        name: "solid_body",
        t_final: 2.0 * PI,
        time_dependent_velocity: false,
        flow: Flow::SolidBody {
            alpha: FRAC_PI_2,
            bell_radius: DEFAULT_BELL_RADIUS,
        },
    }
}

/// Vortex roll-up (idealized cyclogenesis), rho0 = 3, zeta = 5, T = 3.
pub fn vortex_case() -> TestCase {
    TestCase {
        name: "vortex",
        t_final: 3.0,
        time_dependent_velocity: false,
        flow: Flow::Vortex { rho0: 3.0, zeta: 5.0 },
    }
}

/// Reversing deformational flow with two cosine bells, T = 5.
pub fn deformational_case() -> TestCase {
    deformational_case_with_radius(DEFAULT_BELL_RADIUS)
}

pub fn deformational_case_with_radius(bell_radius: f64) -> TestCase {
    TestCase {
        name: "deformational",
        t_final: 5.0,
        time_dependent_velocity: true,
        flow: Flow::Deformational { bell_radius },
    }
}

/// Cosine bell profile of height 1: (1 + cos(pi r / radius)) / 2 inside
/// the radius, 0 outside.
fn cosine_bell(r: f64, radius: f64) -> f64 {
    if r < radius {
        0.5 * (1.0 + (PI * r / radius).cos())
    } else {
        0.0
    }
}

/// Angular velocity profile of the vortex test:
/// omega(rho) = (3 sqrt(3) / 2) sech^2(rho) tanh(rho), continuous with
/// omega(0) = 0 at the vortex centers and peak value 1 where
/// tanh^2(rho) = 1/3.
fn vortex_omega(rho: f64) -> f64 {
    let scale = 1.5 * 3.0f64.sqrt();
    let sech = 1.0 / rho.cosh();
    scale * sech * sech * rho.tanh()
}

/// Great-circle angle between (lambda, theta) and a bell center.
fn central_angle(lambda: f64, theta: f64, center_lambda: f64, center_theta: f64) -> f64 {
    let c = center_theta.sin() * theta.sin()
        + center_theta.cos() * theta.cos() * (lambda - center_lambda).cos();
    c.clamp(-1.0, 1.0).acos()
}

impl TestCase {
    /// Velocity components (v1, v2) at longitude/latitude and time t.
    pub fn velocity(&self, lambda: f64, theta: f64, t: f64) -> (f64, f64) {
        match &self.flow {
            Flow::SolidBody { alpha, .. } => {
                let v1 = theta.sin() * lambda.sin() * alpha.sin()
                    - theta.cos() * alpha.cos();
                let v2 = lambda.cos() * alpha.sin();
                (v1, v2)
            }
            Flow::Vortex { rho0, .. } => {
                let rho = rho0 * theta.cos();
                (vortex_omega(rho) * theta.cos(), 0.0)
            }
            Flow::Deformational { .. } => {
                let factor = (PI * t / self.t_final).cos();
                let v1 = 2.0 * lambda.sin().powi(2) * (2.0 * theta).sin() * factor;
                let v2 = 2.0 * (2.0 * lambda).sin() * theta.cos() * factor;
                (v1, v2)
            }
        }
    }

    /// Initial condition u(lambda, theta, 0).
    pub fn initial(&self, lambda: f64, theta: f64) -> f64 {
        match &self.flow {
            Flow::SolidBody { bell_radius, .. } => {
                let r = (theta.cos() * lambda.cos()).clamp(-1.0, 1.0).acos();
                cosine_bell(r, *bell_radius)
            }
            Flow::Vortex { .. } => self.exact(lambda, theta, 0.0).unwrap(),
            Flow::Deformational { bell_radius } => {
                let r1 = central_angle(lambda, theta, 5.0 * PI / 6.0, 0.0);
                let r2 = central_angle(lambda, theta, 7.0 * PI / 6.0, 0.0);
                if r1 < *bell_radius {
                    0.1 + 0.9 * cosine_bell(r1, *bell_radius)
                } else if r2 < *bell_radius {
                    0.1 + 0.9 * cosine_bell(r2, *bell_radius)
                } else {
                    0.1
                }
            }
        }
    }

    /// Exact solution where available: every t for the vortex; pullback
    /// along the rigid rotation for the solid body (alpha = pi/2); only
    /// t = 0 and t = T for the deformational flow (the reversal brings
    /// the tracer back to its initial position).
    pub fn exact(&self, lambda: f64, theta: f64, t: f64) -> Option<f64> {
        match &self.flow {
            Flow::SolidBody { alpha, .. } => {
                if (*alpha - FRAC_PI_2).abs() > 1e-14 {
                    return (t == 0.0).then(|| self.initial(lambda, theta));
                }
                // the alpha = pi/2 field is rotation about the -y axis at
                // unit speed; the pullback rotates by +t about +y
                let p = SpherePoint::from_angles(lambda, theta).ok()?.xyz();
                let (sin_t, cos_t) = t.sin_cos();
                let q = [
                    cos_t * p[0] + sin_t * p[2],
                    p[1],
                    -sin_t * p[0] + cos_t * p[2],
                ];
                let (l0, t0) = crate::geometry::cartesian_to_spherical(q).ok()?;
                Some(self.initial(l0, t0))
            }
            Flow::Vortex { rho0, zeta } => {
                let rho = rho0 * theta.cos();
                let omega = vortex_omega(rho);
                Some(1.0 - (rho / zeta * (lambda - omega * t).sin()).tanh())
            }
            Flow::Deformational { .. } => {
                if t == 0.0 || (t - self.t_final).abs() < 1e-12 * self.t_final.max(1.0) {
                    Some(self.initial(lambda, theta))
                } else {
                    None
                }
            }
        }
    }

    /// Sample the initial condition at the nodes of a point set.
    pub fn initial_at(&self, ps: &crate::geometry::PointSet) -> Vec<f64> {
        ps.points()
            .iter()
            .map(|p| self.initial(p.lambda(), p.theta()))
            .collect()
    }

    /// Sample the exact solution at the nodes, if defined at time t.
    pub fn exact_at(&self, ps: &crate::geometry::PointSet, t: f64) -> Option<Vec<f64>> {
        ps.points()
            .iter()
            .map(|p| self.exact(p.lambda(), p.theta(), t))
            .collect()
    }

    /// Velocity components sampled at all nodes.
    pub fn velocity_at(&self, ps: &crate::geometry::PointSet, t: f64) -> (Vec<f64>, Vec<f64>) {
        let mut v1 = Vec::with_capacity(ps.len());
        let mut v2 = Vec::with_capacity(ps.len());
        for p in ps.points() {
            let (a, b) = self.velocity(p.lambda(), p.theta(), t);
            v1.push(a);
            v2.push(b);
        }
        (v1, v2)
    }
}

/// Equal-weight quadrature norm sqrt((4 pi / N) sum f^2) over an
/// evaluation set; the set enters only through its cardinality.
pub fn l2_norm(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    (4.0 * PI / n * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// l2 norm of the pointwise difference of two fields.
pub fn l2_error(numerical: &[f64], exact: &[f64]) -> f64 {
    debug_assert_eq!(numerical.len(), exact.len());
    let diff: Vec<f64> = numerical
        .iter()
        .zip(exact)
        .map(|(a, b)| a - b)
        .collect();
    l2_norm(&diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generate_phyllotaxis;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_angles(rng: &mut impl Rng) -> (f64, f64) {
        (
            rng.random_range(-PI..PI),
            rng.random_range(-FRAC_PI_2..FRAC_PI_2),
        )
    }

    #[test]
    fn solid_body_basics() {
        let case = solid_body_case();
        assert!(!case.time_dependent_velocity);
        assert_abs_diff_eq!(case.initial(0.0, 0.0), 1.0, epsilon = 1e-15);
        // outside the bell
        assert_eq!(case.initial(1.0, 0.8), 0.0);
        let (v1, v2) = case.velocity(0.0, 0.0, 0.0);
        assert_abs_diff_eq!(v1, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v2, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn solid_body_full_revolution_returns() {
        let case = solid_body_case();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let (l, t) = random_angles(&mut rng);
            let u0 = case.initial(l, t);
            let ut = case.exact(l, t, case.t_final).unwrap();
            assert_abs_diff_eq!(u0, ut, epsilon = 1e-12);
        }
    }

    #[test]
    fn solid_body_exact_moves_bell_over_pole() {
        let case = solid_body_case();
        // after a quarter revolution the bell peak sits at the north pole
        let u = case.exact(0.3, FRAC_PI_2, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(u, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn vortex_basics() {
        let case = vortex_case();
        // v1 = omega cos(theta) vanishes at the poles
        let (v1, _) = case.velocity(0.3, FRAC_PI_2, 0.0);
        assert_abs_diff_eq!(v1, 0.0, epsilon = 1e-15);
        // at rho = 0 (the poles) the exact solution is 1
        assert_abs_diff_eq!(case.exact(1.0, FRAC_PI_2, 2.0).unwrap(), 1.0, epsilon = 1e-12);
        // spot value at (pi/2, 0), t = 0: 1 - tanh(3/5)
        assert_abs_diff_eq!(
            case.exact(FRAC_PI_2, 0.0, 0.0).unwrap(),
            1.0 - 0.6f64.tanh(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(1.0 - 0.6f64.tanh(), 0.46295, epsilon = 1e-5);
    }

    #[test]
    fn exact_at_zero_matches_initial() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for case in [solid_body_case(), vortex_case(), deformational_case()] {
            for _ in 0..1000 {
                let (l, t) = random_angles(&mut rng);
                let init = case.initial(l, t);
                let exact = case.exact(l, t, 0.0).unwrap();
                assert_abs_diff_eq!(init, exact, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn vortex_satisfies_the_pde() {
        // finite-difference residual of du/dt + (v1/cos) du/dl + v2 du/dt
        let case = vortex_case();
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let h = 1e-5;
        let mut checked = 0;
        while checked < 100 {
            let (l, th) = random_angles(&mut rng);
            if th.abs() > 1.4 {
                continue;
            }
            checked += 1;
            let t = rng.random_range(0.0..3.0);
            let u = |ll: f64, tt: f64, time: f64| case.exact(ll, tt, time).unwrap();
            let du_dt = (u(l, th, t + h) - u(l, th, t - h)) / (2.0 * h);
            let du_dl = (u(l + h, th, t) - u(l - h, th, t)) / (2.0 * h);
            let du_dth = (u(l, th + h, t) - u(l, th - h, t)) / (2.0 * h);
            let (v1, v2) = case.velocity(l, th, t);
            let residual = du_dt + v1 / th.cos() * du_dl + v2 * du_dth;
            assert!(residual.abs() < 1e-5, "residual {residual} at ({l}, {th}, {t})");
        }
    }

    #[test]
    fn deformational_basics() {
        let case = deformational_case();
        assert!(case.time_dependent_velocity);
        // velocity vanishes identically at t = T/2
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (l, t) = random_angles(&mut rng);
            let (v1, v2) = case.velocity(l, t, case.t_final / 2.0);
            assert_abs_diff_eq!(v1, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(v2, 0.0, epsilon = 1e-12);
        }
        // bell center 1 has value exactly 1.0, far field 0.1
        assert_abs_diff_eq!(case.initial(5.0 * PI / 6.0, 0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(case.initial(0.0, -1.2), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn deformational_velocity_reverses() {
        let case = deformational_case();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let (l, th) = random_angles(&mut rng);
            let t = rng.random_range(0.0..case.t_final);
            let (a1, a2) = case.velocity(l, th, t);
            let (b1, b2) = case.velocity(l, th, case.t_final - t);
            assert_abs_diff_eq!(a1, -b1, epsilon = 1e-12);
            assert_abs_diff_eq!(a2, -b2, epsilon = 1e-12);
        }
    }

    #[test]
    fn l2_norm_values() {
        assert_abs_diff_eq!(
            l2_norm(&vec![1.0; 123]),
            (4.0 * PI).sqrt(),
            epsilon = 1e-12
        );
        assert_eq!(l2_norm(&vec![0.0; 5]), 0.0);
        // orthonormal harmonics have unit norm; equal-weight quadrature on
        // a quasi-uniform 1000-point set recovers it to a couple percent
        let ps = generate_phyllotaxis(1000).unwrap();
        let basis = crate::harmonics::HarmonicBasis::new(2).unwrap();
        for idx in [0usize, 4, 8] {
            let samples: Vec<f64> = ps.points().iter().map(|p| basis.eval(p)[idx]).collect();
            let norm = l2_norm(&samples);
            assert!((norm - 1.0).abs() < 0.02, "harmonic {idx}: norm {norm}");
        }
    }
}
