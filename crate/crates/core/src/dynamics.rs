//! Planar equations of motion `ẍ = V′(|x|)x/|x| + ε∇U(t,x)`, their variational flow, and
//! orbit diagnostics measured from pericenter passages.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{OrbitaError, Result};
use crate::ode::{integrate_with, DenseSolution, StepperConfig};
use crate::potentials::RadialPotential;
use crate::tori::TorusSolution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianState {
    pub x: [f64; 2],
    pub v: [f64; 2],
    pub t: f64,
}

impl CartesianState {
    pub fn new(x: [f64; 2], v: [f64; 2], t: f64) -> Self {
        Self { x, v, t }
    }

    /// State with polar data `(r, ṙ, ϑ)` and angular momentum `l`.
    pub fn from_polar(r: f64, rdot: f64, theta: f64, l: f64, t: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let vt = l / r;
        Self {
            x: [r * c, r * s],
            v: [rdot * c - vt * s, rdot * s + vt * c],
            t,
        }
    }

    pub fn from_array(a: [f64; 4], t: f64) -> Self {
        Self {
            x: [a[0], a[1]],
            v: [a[2], a[3]],
            t,
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x[0], self.x[1], self.v[0], self.v[1]]
    }

    pub fn radius(&self) -> f64 {
        self.x[0].hypot(self.x[1])
    }

    pub fn radial_velocity(&self) -> f64 {
        (self.x[0] * self.v[0] + self.x[1] * self.v[1]) / self.radius()
    }

    pub fn angle(&self) -> f64 {
        self.x[1].atan2(self.x[0])
    }

    /// `L = x₁v₂ − x₂v₁`, positive for counter-clockwise motion.
    pub fn angular_momentum(&self) -> f64 {
        self.x[0] * self.v[1] - self.x[1] * self.v[0]
    }

    /// `H = ½|v|² − V(|x|)`.
    pub fn energy(&self, potential: &RadialPotential) -> f64 {
        0.5 * (self.v[0] * self.v[0] + self.v[1] * self.v[1]) - potential.value(self.radius())
    }

    /// Positions and velocities rotated by `phi`.
    pub fn rotated(&self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        let rot = |p: [f64; 2]| [c * p[0] - s * p[1], s * p[0] + c * p[1]];
        Self {
            x: rot(self.x),
            v: rot(self.v),
            t: self.t,
        }
    }

    /// Euclidean distance in `(x, v)`.
    pub fn distance(&self, other: &Self) -> f64 {
        let a = self.to_array();
        let b = other.to_array();
        (0..4).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
    }
}

/// Time-dependent planar force field with its position Jacobian.
pub trait ForceField: Send + Sync {
    fn acceleration(&self, t: f64, x: [f64; 2]) -> [f64; 2];

    /// `∂a_i/∂x_j`.
    fn jacobian(&self, t: f64, x: [f64; 2]) -> [[f64; 2]; 2];

    /// Distance to the nearest singularity of the field.
    fn clearance(&self, _t: f64, x: [f64; 2]) -> f64 {
        x[0].hypot(x[1])
    }
}

/// `a = V′(r) x / r`.
#[derive(Debug, Clone)]
pub struct CentralField {
    potential: RadialPotential,
}

impl CentralField {
    pub fn new(potential: &RadialPotential) -> Self {
        Self {
            potential: potential.clone(),
        }
    }

    pub fn potential(&self) -> &RadialPotential {
        &self.potential
    }
}

impl ForceField for CentralField {
    fn acceleration(&self, _t: f64, x: [f64; 2]) -> [f64; 2] {
        let r = x[0].hypot(x[1]);
        let f = self.potential.derivative(r, 1) / r;
        [f * x[0], f * x[1]]
    }

    fn jacobian(&self, _t: f64, x: [f64; 2]) -> [[f64; 2]; 2] {
        let r = x[0].hypot(x[1]);
        let d1 = self.potential.derivative(r, 1);
        let d2 = self.potential.derivative(r, 2);
        let a = d1 / r;
        let b = (d2 - a) / (r * r);
        [
            [a + b * x[0] * x[0], b * x[0] * x[1]],
            [b * x[1] * x[0], a + b * x[1] * x[1]],
        ]
    }
}

/// A time-periodic perturbation `U(t, x)` entering as `ε∇U`.
pub trait Perturbation: Send + Sync {
    fn gradient(&self, t: f64, x: [f64; 2]) -> [f64; 2];
    fn hessian(&self, t: f64, x: [f64; 2]) -> [[f64; 2]; 2];
    fn period(&self) -> f64;

    fn clearance(&self, _t: f64, _x: [f64; 2]) -> f64 {
        f64::INFINITY
    }
}

/// Central field plus `ε∇U`.
pub struct PerturbedField<'a> {
    pub central: CentralField,
    pub epsilon: f64,
    pub perturbation: &'a dyn Perturbation,
}

impl ForceField for PerturbedField<'_> {
    fn acceleration(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        let a = self.central.acceleration(t, x);
        if self.epsilon == 0.0 {
            return a;
        }
        let g = self.perturbation.gradient(t, x);
        [a[0] + self.epsilon * g[0], a[1] + self.epsilon * g[1]]
    }

    fn jacobian(&self, t: f64, x: [f64; 2]) -> [[f64; 2]; 2] {
        let mut j = self.central.jacobian(t, x);
        if self.epsilon != 0.0 {
            let h = self.perturbation.hessian(t, x);
            for r in 0..2 {
                for c in 0..2 {
                    j[r][c] += self.epsilon * h[r][c];
                }
            }
        }
        j
    }

    fn clearance(&self, t: f64, x: [f64; 2]) -> f64 {
        let c = x[0].hypot(x[1]);
        if self.epsilon == 0.0 {
            c
        } else {
            c.min(self.perturbation.clearance(t, x))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub stepper: StepperConfig,
    /// Collision floor on [`ForceField::clearance`].
    pub r_min: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            stepper: StepperConfig::default(),
            r_min: 1e-6,
        }
    }
}

/// Dense trajectory in `(x₁, x₂, v₁, v₂)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub solution: DenseSolution<4>,
}

impl Trajectory {
    pub fn t_start(&self) -> f64 {
        self.solution.t_start()
    }

    pub fn t_end(&self) -> f64 {
        self.solution.t_end()
    }

    pub fn state_at(&self, t: f64) -> CartesianState {
        CartesianState::from_array(self.solution.eval(t), t)
    }

    pub fn final_state(&self) -> CartesianState {
        CartesianState::from_array(self.solution.final_state(), self.t_end())
    }

    /// States at every accepted step boundary.
    pub fn step_states(&self) -> impl Iterator<Item = CartesianState> + '_ {
        let first = self.solution.steps.first().map(|s| CartesianState::from_array(s.start(), s.t0));
        first
            .into_iter()
            .chain(self.solution.steps.iter().map(|s| CartesianState::from_array(s.end(), s.t1())))
    }

    /// `samples` equally spaced states over the whole interval, end points included.
    pub fn sample(&self, samples: usize) -> Vec<CartesianState> {
        let n = samples.max(2);
        let (a, b) = (self.t_start(), self.t_end());
        (0..n)
            .map(|i| self.state_at(a + (b - a) * i as f64 / (n - 1) as f64))
            .collect()
    }

    /// Rows `t, x1, x2, v1, v2, H, L` with `H` measured with `potential`.
    pub fn rows(&self, potential: &RadialPotential, samples: usize) -> Vec<[f64; 7]> {
        self.sample(samples)
            .into_iter()
            .map(|s| [s.t, s.x[0], s.x[1], s.v[0], s.v[1], s.energy(potential), s.angular_momentum()])
            .collect()
    }

    /// Angle swept by the position vector between `ta` and `tb`, counted continuously.
    pub fn swept_angle(&self, ta: f64, tb: f64) -> f64 {
        let (lo, hi, sign) = if tb >= ta { (ta, tb, 1.0) } else { (tb, ta, -1.0) };
        let mut total = 0.0;
        let mut prev = self.state_at(lo).angle();
        for step in &self.solution.steps {
            let (s0, s1) = (step.t0.min(step.t1()), step.t0.max(step.t1()));
            if s1 <= lo || s0 >= hi {
                continue;
            }
            let (a, b) = (s0.max(lo), s1.min(hi));
            for j in 1..=8 {
                let t = a + (b - a) * j as f64 / 8.0;
                let x = step.eval(t);
                let ang = x[1].atan2(x[0]);
                total += (ang - prev + PI).rem_euclid(2.0 * PI) - PI;
                prev = ang;
            }
        }
        sign * total
    }

    /// Times where `x·v` changes sign, going up (`rising`) or down.
    fn radial_turns(&self, rising: bool) -> Vec<f64> {
        let g = |y: [f64; 4]| y[0] * y[2] + y[1] * y[3];
        let mut out = Vec::new();
        for step in &self.solution.steps {
            let mut ta = step.t0;
            let mut ga = g(step.start());
            for j in 1..=4 {
                let tb = step.t0 + step.h * j as f64 / 4.0;
                let gb = g(step.eval(tb));
                let crosses = if rising { ga < 0.0 && gb >= 0.0 } else { ga > 0.0 && gb <= 0.0 };
                if crosses {
                    let (mut lo, mut hi) = (ta, tb);
                    for _ in 0..100 {
                        let mid = 0.5 * (lo + hi);
                        if mid == lo || mid == hi {
                            break;
                        }
                        let gm = g(step.eval(mid));
                        if (gm < 0.0) == rising {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let t = 0.5 * (lo + hi);
                    if out.last().map_or(true, |&p: &f64| (t - p).abs() > 1e-9 * t.abs().max(1.0)) {
                        out.push(t);
                    }
                }
                ta = tb;
                ga = gb;
            }
        }
        out
    }

    /// Pericenter passages (local minima of `|x|`).
    pub fn pericenters(&self) -> Vec<f64> {
        self.radial_turns(true)
    }

    /// Apocenter passages (local maxima of `|x|`).
    pub fn apocenters(&self) -> Vec<f64> {
        self.radial_turns(false)
    }
}

fn check_clearance<F: ForceField + ?Sized>(field: &F, t: f64, x: [f64; 2], floor: f64) -> Result<()> {
    let c = field.clearance(t, x);
    if !(c >= floor) {
        return Err(OrbitaError::Collision { r: c, floor, t });
    }
    Ok(())
}

/// Integrates the equations of motion from `s0` to `t_end`.
pub fn integrate<F: ForceField + ?Sized>(field: &F, s0: &CartesianState, t_end: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    check_clearance(field, s0.t, s0.x, cfg.r_min)?;
    let solution = integrate_with(
        |t, y: &[f64; 4]| {
            let x = [y[0], y[1]];
            check_clearance(field, t, x, cfg.r_min)?;
            let a = field.acceleration(t, x);
            Ok([y[2], y[3], a[0], a[1]])
        },
        s0.t,
        s0.to_array(),
        t_end,
        &cfg.stepper,
        |_| Ok(()),
    )?;
    Ok(Trajectory { solution })
}

/// Final state and the `4×4` variational matrix `∂z(t_end)/∂z(t₀)`.
pub fn integrate_variational<F: ForceField + ?Sized>(
    field: &F,
    s0: &CartesianState,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<(CartesianState, Matrix4<f64>)> {
    let mut y0 = [0.0; 20];
    y0[..4].copy_from_slice(&s0.to_array());
    for i in 0..4 {
        y0[4 + 5 * i] = 1.0;
    }
    check_clearance(field, s0.t, s0.x, cfg.r_min)?;
    let sol = integrate_with(
        |t, y: &[f64; 20]| {
            let x = [y[0], y[1]];
            check_clearance(field, t, x, cfg.r_min)?;
            let a = field.acceleration(t, x);
            let j = field.jacobian(t, x);
            let mut d = [0.0; 20];
            d[0] = y[2];
            d[1] = y[3];
            d[2] = a[0];
            d[3] = a[1];
            for c in 0..4 {
                let p = |r: usize| y[4 + 4 * r + c];
                d[4 + c] = p(2);
                d[4 + 4 + c] = p(3);
                d[4 + 8 + c] = j[0][0] * p(0) + j[0][1] * p(1);
                d[4 + 12 + c] = j[1][0] * p(0) + j[1][1] * p(1);
            }
            Ok(d)
        },
        s0.t,
        y0,
        t_end,
        &cfg.stepper,
        |_| Ok(()),
    )?;
    let y = sol.final_state();
    let state = CartesianState::from_array([y[0], y[1], y[2], y[3]], t_end);
    let m = Matrix4::from_row_slice(&y[4..]);
    Ok((state, m))
}

/// Integrates the unperturbed problem in polar form `(r, ṙ, ϑ)` at fixed `L`.
pub fn integrate_polar(
    potential: &RadialPotential,
    r: f64,
    rdot: f64,
    theta: f64,
    l: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<DenseSolution<3>> {
    integrate_with(
        |t, y: &[f64; 3]| {
            if y[0] < cfg.r_min {
                return Err(OrbitaError::Collision { r: y[0], floor: cfg.r_min, t });
            }
            let r = y[0];
            Ok([y[1], l * l / (r * r * r) + potential.derivative(r, 1), l / (r * r)])
        },
        0.0,
        [r, rdot, theta],
        t_end,
        &cfg.stepper,
        |_| Ok(()),
    )
}

/// Radial period and apsidal angle from consecutive upward zero crossings of `ṙ` of a polar run.
pub fn measure_polar(sol: &DenseSolution<3>) -> Result<(f64, f64)> {
    let mut events = Vec::new();
    for step in &sol.steps {
        let (a, b) = (step.start()[1], step.end()[1]);
        if a < 0.0 && b >= 0.0 {
            let (mut lo, mut hi) = (step.t0, step.t1());
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if step.eval(mid)[1] < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            events.push(0.5 * (lo + hi));
        }
    }
    if events.len() < 2 {
        return Err(OrbitaError::InsufficientEvents(events.len()));
    }
    Ok((events[1] - events[0], sol.eval(events[1])[2] - sol.eval(events[0])[2]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct OrbitDiagnostics {
    pub measured_T: f64,
    pub measured_Theta: f64,
    pub winding_n: u32,
    pub winding_k: i64,
    pub H_drift: f64,
    pub L_drift: f64,
}

/// Largest relative drift of energy and angular momentum along the trajectory.
pub fn drifts(traj: &Trajectory, potential: &RadialPotential) -> (f64, f64) {
    let mut states = traj.step_states();
    let Some(first) = states.next() else {
        return (0.0, 0.0);
    };
    let (h0, l0) = (first.energy(potential), first.angular_momentum());
    let (mut dh, mut dl) = (0.0f64, 0.0f64);
    for s in states {
        dh = dh.max((s.energy(potential) - h0).abs());
        dl = dl.max((s.angular_momentum() - l0).abs());
    }
    let rel = |d: f64, x: f64| if x != 0.0 { d / x.abs() } else { d };
    (rel(dh, h0), rel(dl, l0))
}

/// Radial period, apsidal angle, winding counts and drifts from the pericenter passages.
pub fn measure(traj: &Trajectory, potential: &RadialPotential) -> Result<OrbitDiagnostics> {
    let peri = traj.pericenters();
    if peri.len() < 2 {
        return Err(OrbitaError::InsufficientEvents(peri.len()));
    }
    let (h_drift, l_drift) = drifts(traj, potential);
    let total = traj.swept_angle(peri[0], *peri.last().unwrap());
    Ok(OrbitDiagnostics {
        measured_T: peri[1] - peri[0],
        measured_Theta: traj.swept_angle(peri[0], peri[1]),
        winding_n: (peri.len() - 1) as u32,
        winding_k: (total / (2.0 * PI)).round() as i64,
        H_drift: h_drift,
        L_drift: l_drift,
    })
}

/// Thresholds used by [`verify_torus`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub integrator: IntegratorConfig,
    pub max_residual: f64,
    pub closure_tol: f64,
    pub angle_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            max_residual: 1e-8,
            closure_tol: 1e-7,
            angle_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct TorusVerification {
    pub closure: f64,
    pub winding_n: u32,
    pub winding_k: i64,
    pub angle_error: f64,
    /// Smallest phase-space distance to the initial state at the times `τ·j/(ℓn)`, `0 < j < n`.
    pub earliest_return: f64,
    pub H_drift: f64,
    pub L_drift: f64,
}

/// Pericenter state `(r₋, 0)` with `ϑ = 0` on the torus.
pub fn torus_pericenter_state(torus: &TorusSolution) -> Result<CartesianState> {
    let (rm, _) = torus.turning_points()?;
    Ok(CartesianState::from_polar(rm, 0.0, 0.0, torus.L, 0.0))
}

/// Integrates one orbit of the torus and checks closure, winding numbers and minimality.
pub fn verify_torus(torus: &TorusSolution, cfg: &VerifyConfig) -> Result<TorusVerification> {
    if !(torus.residual() <= cfg.max_residual) {
        return Err(OrbitaError::VerificationFailed(format!(
            "torus residual {} exceeds {}",
            torus.residual(),
            cfg.max_residual
        )));
    }
    let potential = torus.potential()?;
    let z0 = torus_pericenter_state(torus)?;
    let period = torus.orbit_period();
    let traj = integrate(&CentralField::new(&potential), &z0, period, &cfg.integrator)?;
    let end = traj.final_state();
    let closure = end.distance(&z0);
    let apo = traj.apocenters();
    let total = traj.swept_angle(0.0, period);
    let winding_k = (total / (2.0 * PI)).round() as i64;
    let angle_error = (total - 2.0 * PI * torus.k as f64).abs();
    let earliest_return = (1..torus.n)
        .map(|j| traj.state_at(period * j as f64 / torus.n as f64).distance(&z0))
        .fold(f64::INFINITY, f64::min);
    let (h_drift, l_drift) = drifts(&traj, &potential);
    let report = TorusVerification {
        closure,
        winding_n: apo.len() as u32,
        winding_k,
        angle_error,
        earliest_return,
        H_drift: h_drift,
        L_drift: l_drift,
    };
    if closure > cfg.closure_tol {
        return Err(OrbitaError::VerificationFailed(format!("closure {closure:e} exceeds {:e}", cfg.closure_tol)));
    }
    if report.winding_n != torus.n || winding_k != torus.k as i64 || angle_error > cfg.angle_tol {
        return Err(OrbitaError::VerificationFailed(format!(
            "winding ({}, {}) with angle error {angle_error:e}, expected ({}, {})",
            report.winding_n, winding_k, torus.n, torus.k
        )));
    }
    if earliest_return <= cfg.closure_tol.max(1e3 * closure) {
        return Err(OrbitaError::VerificationFailed(format!(
            "orbit closes early (distance {earliest_return:e})"
        )));
    }
    Ok(report)
}
