//! Restricted three-body problem with homogeneous attraction `|·|^{-α}`.
//!
//! Primaries sit at `ξ_M(t) = m e^{it}` and `ξ_m(t) = −(1−m) e^{it}`. The change of frame
//! `x = c (q − m e^{it})` with `c = (1−m)^{−1/(α+2)}` turns the equation for `q` into
//! `ẍ = −x/|x|^{α+2} + m∇U(t, x, m)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::continuation::{survey, ContinuationConfig, PerturbationKind, PerturbationModel, PeriodicOrbit};
use crate::dynamics::{integrate, CartesianState, ForceField, IntegratorConfig, Perturbation};
use crate::error::{OrbitaError, Result};
use crate::potentials::RadialPotential;
use crate::tori::{find_torus, TorusConfig, TorusSolution};

/// Exclusion radius around the small primary in the perturbed frame.
pub const COLLISION_GUARD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct R3BConfig {
    pub alpha: f64,
    pub m: f64,
}

impl R3BConfig {
    pub fn new(alpha: f64, m: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) || alpha == 1.0 {
            return Err(OrbitaError::Parameter(format!("alpha = {alpha} must lie in (0,1) ∪ (1,2)")));
        }
        if !(0.0..1.0).contains(&m) {
            return Err(OrbitaError::Parameter(format!("m = {m} must lie in [0,1)")));
        }
        Ok(Self { alpha, m })
    }

    pub fn scale(&self) -> f64 {
        (1.0 - self.m).powf(-1.0 / (self.alpha + 2.0))
    }

    /// Positions of the heavy and light primaries.
    pub fn primaries(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let (s, c) = t.sin_cos();
        ([self.m * c, self.m * s], [-(1.0 - self.m) * c, -(1.0 - self.m) * s])
    }

    /// Acceleration of the massless body in the inertial frame.
    pub fn acceleration_q(&self, t: f64, q: [f64; 2]) -> [f64; 2] {
        let (big, small) = self.primaries(t);
        let pull = |p: [f64; 2], w: f64| {
            let d = [p[0] - q[0], p[1] - q[1]];
            let r = d[0].hypot(d[1]);
            let f = w * r.powf(-self.alpha - 2.0);
            [f * d[0], f * d[1]]
        };
        let a = pull(big, 1.0 - self.m);
        let b = pull(small, self.m);
        [a[0] + b[0], a[1] + b[1]]
    }

    pub fn to_perturbed_frame(&self, q: &CartesianState) -> CartesianState {
        let c = self.scale();
        let (s, co) = q.t.sin_cos();
        CartesianState::new(
            [c * (q.x[0] - self.m * co), c * (q.x[1] - self.m * s)],
            [c * (q.v[0] + self.m * s), c * (q.v[1] - self.m * co)],
            q.t,
        )
    }

    pub fn from_perturbed_frame(&self, x: &CartesianState) -> CartesianState {
        let c = self.scale();
        let (s, co) = x.t.sin_cos();
        CartesianState::new(
            [x.x[0] / c + self.m * co, x.x[1] / c + self.m * s],
            [x.v[0] / c - self.m * s, x.v[1] / c + self.m * co],
            x.t,
        )
    }

    pub fn unperturbed_potential(&self) -> Result<RadialPotential> {
        RadialPotential::homogeneous(1.0, self.alpha)
    }

    pub fn model(&self) -> PerturbationModel {
        PerturbationModel {
            tau: 2.0 * PI,
            kind: PerturbationKind::RotatingPointMass {
                alpha: self.alpha,
                m: self.m,
            },
            epsilon: self.m,
        }
    }
}

/// `U(t,x,m) = (1−m)^{−1} |c e^{it} + x|^{−α}/α + c⟨e^{it}, x⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMassPerturbation {
    pub alpha: f64,
    pub m: f64,
}

impl PointMassPerturbation {
    fn offset(&self, t: f64, x: [f64; 2]) -> (f64, [f64; 2], [f64; 2]) {
        let c = (1.0 - self.m).powf(-1.0 / (self.alpha + 2.0));
        let e = [t.cos(), t.sin()];
        (c, e, [c * e[0] + x[0], c * e[1] + x[1]])
    }

    pub fn value(&self, t: f64, x: [f64; 2]) -> f64 {
        let (c, e, y) = self.offset(t, x);
        let r = y[0].hypot(y[1]);
        r.powf(-self.alpha) / (self.alpha * (1.0 - self.m)) + c * (e[0] * x[0] + e[1] * x[1])
    }
}

impl Perturbation for PointMassPerturbation {
    fn gradient(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        let (c, e, y) = self.offset(t, x);
        let r = y[0].hypot(y[1]);
        let f = r.powf(-self.alpha - 2.0) / (1.0 - self.m);
        [c * e[0] - f * y[0], c * e[1] - f * y[1]]
    }

    fn hessian(&self, t: f64, x: [f64; 2]) -> [[f64; 2]; 2] {
        let (_, _, y) = self.offset(t, x);
        let r2 = y[0] * y[0] + y[1] * y[1];
        let f = r2.powf(-0.5 * self.alpha - 1.0) / (1.0 - self.m);
        let g = (self.alpha + 2.0) * f / r2;
        [
            [g * y[0] * y[0] - f, g * y[0] * y[1]],
            [g * y[1] * y[0], g * y[1] * y[1] - f],
        ]
    }

    fn period(&self) -> f64 {
        2.0 * PI
    }

    fn clearance(&self, t: f64, x: [f64; 2]) -> f64 {
        let (_, _, y) = self.offset(t, x);
        y[0].hypot(y[1]) - COLLISION_GUARD
    }
}

/// The inertial-frame equation, for cross-checking the perturbed formulation.
pub struct InertialField(pub R3BConfig);

impl ForceField for InertialField {
    fn acceleration(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        self.0.acceleration_q(t, x)
    }

    fn jacobian(&self, t: f64, x: [f64; 2]) -> [[f64; 2]; 2] {
        let (big, small) = self.0.primaries(t);
        let mut j = [[0.0; 2]; 2];
        for (p, w) in [(big, 1.0 - self.0.m), (small, self.0.m)] {
            let y = [x[0] - p[0], x[1] - p[1]];
            let r2 = y[0] * y[0] + y[1] * y[1];
            let f = w * r2.powf(-0.5 * self.0.alpha - 1.0);
            let g = (self.0.alpha + 2.0) * f / r2;
            for r in 0..2 {
                for c in 0..2 {
                    j[r][c] += g * y[r] * y[c] - if r == c { f } else { 0.0 };
                }
            }
        }
        j
    }

    fn clearance(&self, t: f64, x: [f64; 2]) -> f64 {
        let (big, small) = self.0.primaries(t);
        let d = |p: [f64; 2]| (x[0] - p[0]).hypot(x[1] - p[1]);
        d(big).min(d(small))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub ell: u32,
    pub r_plus: f64,
    pub torus: TorusSolution,
}

/// The first `count` subharmonic levels `ℓ` whose `(n,k)` torus of the unperturbed problem
/// (period `2π/ℓ`) stays inside `|x| < 1/2`.
pub fn candidate_tori(alpha: f64, n: u32, k: u32, count: usize) -> Result<Vec<Candidate>> {
    let p = RadialPotential::homogeneous(1.0, alpha)?;
    let mut out = Vec::new();
    for ell in 1..=10_000u32 {
        if out.len() >= count {
            break;
        }
        let cfg = TorusConfig {
            ell,
            ..TorusConfig::default()
        };
        let torus = find_torus(&p, 2.0 * PI, n, k, &cfg)?;
        let (_, r_plus) = torus.turning_points()?;
        if r_plus < 0.5 {
            out.push(Candidate { ell, r_plus, torus });
        }
    }
    if out.len() < count {
        return Err(OrbitaError::Parameter(format!("fewer than {count} candidate tori below r+ = 1/2")));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R3BOrbit {
    pub config: R3BConfig,
    pub ell: u32,
    pub orbit: PeriodicOrbit,
    /// Initial condition in the inertial frame.
    pub q0: CartesianState,
    /// `|q(2π) − q(0)|` from integrating the inertial equation.
    pub q_residual: f64,
    /// Largest mismatch between the two formulations along the orbit.
    pub dual_frame_error: f64,
    pub sup_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct R3BSearch {
    pub n_lambda: usize,
    pub n_phi: usize,
    pub continuation: ContinuationConfig,
}

impl Default for R3BSearch {
    fn default() -> Self {
        Self {
            n_lambda: 6,
            n_phi: 6,
            continuation: ContinuationConfig::default(),
        }
    }
}

/// Searches for `2π`-periodic solutions near a candidate torus and checks them in the inertial frame.
pub fn find_r3b_periodic(config: &R3BConfig, candidate: &Candidate, search: &R3BSearch) -> Result<Vec<R3BOrbit>> {
    let potential = config.unperturbed_potential()?;
    let model = config.model();
    let report = survey(
        &model,
        &potential,
        &candidate.torus,
        search.n_lambda,
        search.n_phi,
        &search.continuation,
    )?;
    report
        .orbits
        .into_iter()
        .map(|orbit| cross_check(config, candidate.ell, orbit, &search.continuation.integrator))
        .collect()
}

/// Integrates the orbit in both frames and compares them.
pub fn cross_check(config: &R3BConfig, ell: u32, orbit: PeriodicOrbit, cfg: &IntegratorConfig) -> Result<R3BOrbit> {
    let potential = config.unperturbed_potential()?;
    let model = config.model();
    let x_traj = integrate(&model.field(&potential), &orbit.z0, model.tau, cfg)?;
    let q0 = config.from_perturbed_frame(&orbit.z0);
    let q_traj = integrate(&InertialField(*config), &q0, model.tau, cfg)?;
    let q_end = q_traj.final_state();
    let q_residual = q_end.distance(&CartesianState { t: q_end.t, ..q0 });
    let samples = 400;
    let mut dual = 0.0f64;
    let mut sup = 0.0f64;
    for i in 0..=samples {
        let t = model.tau * i as f64 / samples as f64;
        let xs = x_traj.state_at(t);
        let qs = config.from_perturbed_frame(&xs);
        dual = dual.max(qs.distance(&q_traj.state_at(t)));
        sup = sup.max(xs.radius());
    }
    Ok(R3BOrbit {
        config: *config,
        ell,
        orbit,
        q0,
        q_residual,
        dual_frame_error: dual,
        sup_norm: sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_round_trip() {
        let cfg = R3BConfig::new(0.5, 0.01).unwrap();
        let q = CartesianState::new([0.3, -0.2], [0.7, 1.1], 0.9);
        let back = cfg.from_perturbed_frame(&cfg.to_perturbed_frame(&q));
        assert!(back.distance(&q) < 1e-15);
    }

    #[test]
    fn transformed_field_matches_inertial_field() {
        let cfg = R3BConfig::new(1.5, 0.02).unwrap();
        let pert = PointMassPerturbation { alpha: 1.5, m: 0.02 };
        let c = cfg.scale();
        for &(t, q) in &[(0.3, [0.4, 0.1]), (2.0, [-0.2, 0.35]), (5.0, [0.05, -0.3])] {
            let qs = CartesianState::new(q, [0.0, 0.0], t);
            let x = cfg.to_perturbed_frame(&qs).x;
            let r = x[0].hypot(x[1]);
            let g = pert.gradient(t, x);
            let ax = [
                -x[0] * r.powf(-3.5) + cfg.m * g[0],
                -x[1] * r.powf(-3.5) + cfg.m * g[1],
            ];
            let aq = cfg.acceleration_q(t, q);
            let (s, co) = t.sin_cos();
            let expected = [c * (aq[0] + cfg.m * co), c * (aq[1] + cfg.m * s)];
            for i in 0..2 {
                assert!((ax[i] - expected[i]).abs() < 1e-12 * expected[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn perturbation_derivatives_match_finite_differences() {
        let p = PointMassPerturbation { alpha: 0.5, m: 0.1 };
        let (t, x) = (0.7, [0.2, -0.15]);
        let h = 1e-6;
        let g = p.gradient(t, x);
        let hs = p.hessian(t, x);
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (p.value(t, xp) - p.value(t, xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-7);
            let (gp, gm) = (p.gradient(t, xp), p.gradient(t, xm));
            for j in 0..2 {
                assert!(((gp[j] - gm[j]) / (2.0 * h) - hs[j][i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn candidate_radii_decrease_with_ell() {
        let c = candidate_tori(0.5, 4, 3, 2).unwrap();
        assert!(c[0].r_plus < 0.5 && c[1].r_plus < c[0].r_plus);
        assert!(c[1].ell == c[0].ell + 1);
    }
}
