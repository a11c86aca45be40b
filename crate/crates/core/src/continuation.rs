//! τ-periodic solutions of the perturbed problem as fixed points of the time-τ map,
//! seeded on an invariant torus of the unperturbed problem.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    integrate, integrate_variational, torus_pericenter_state, CartesianState, CentralField, IntegratorConfig, Perturbation,
    PerturbedField, Trajectory,
};
use crate::error::{OrbitaError, Result};
use crate::potentials::RadialPotential;
use crate::restricted3body::PointMassPerturbation;
use crate::tori::TorusSolution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationKind {
    None,
    /// `U(t,x) = cos(2πt/τ)⟨e, x⟩`.
    UniformDrive { direction: [f64; 2] },
    /// The companion mass of the restricted three-body problem in the frame of the heavy primary.
    RotatingPointMass { alpha: f64, m: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationModel {
    pub tau: f64,
    pub kind: PerturbationKind,
    pub epsilon: f64,
}

impl PerturbationModel {
    pub fn uniform_drive(tau: f64, direction: [f64; 2], epsilon: f64) -> Self {
        Self {
            tau,
            kind: PerturbationKind::UniformDrive { direction },
            epsilon,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// The full force field for a base potential.
    pub fn field<'a>(&'a self, potential: &RadialPotential) -> PerturbedField<'a> {
        PerturbedField {
            central: CentralField::new(potential),
            epsilon: self.epsilon,
            perturbation: self,
        }
    }
}

impl Perturbation for PerturbationModel {
    fn gradient(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        match self.kind {
            PerturbationKind::None => [0.0, 0.0],
            PerturbationKind::UniformDrive { direction } => {
                let a = (2.0 * PI * t / self.tau).cos();
                [a * direction[0], a * direction[1]]
            }
            PerturbationKind::RotatingPointMass { alpha, m } => PointMassPerturbation { alpha, m }.gradient(t, x),
        }
    }

    fn hessian(&self, t: f64, x: [f64; 2]) -> [[f64; 2]; 2] {
        match self.kind {
            PerturbationKind::None | PerturbationKind::UniformDrive { .. } => [[0.0; 2]; 2],
            PerturbationKind::RotatingPointMass { alpha, m } => PointMassPerturbation { alpha, m }.hessian(t, x),
        }
    }

    fn period(&self) -> f64 {
        self.tau
    }

    fn clearance(&self, t: f64, x: [f64; 2]) -> f64 {
        match self.kind {
            PerturbationKind::RotatingPointMass { alpha, m } => PointMassPerturbation { alpha, m }.clearance(t, x),
            _ => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    pub integrator: IntegratorConfig,
    pub tol: f64,
    pub max_iter: usize,
    /// Tikhonov parameter `μ = max(mu_floor, mu_factor·|ε|)`.
    pub mu_floor: f64,
    pub mu_factor: f64,
    /// Orbits closer than `dedup_rel · scale` after optimal shift and rotation are merged.
    pub dedup_rel: f64,
    /// Largest admissible `|ε|`.
    pub max_epsilon: f64,
    /// Also seed from the mirror image of the torus (negative angular momentum).
    pub reflect: bool,
    pub monodromy: MonodromyMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MonodromyMethod {
    Variational,
    /// Central differences with step `relative_step · max(1, |z|)`.
    FiniteDifference { relative_step: f64 },
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            tol: 1e-9,
            max_iter: 50,
            mu_floor: 1e-12,
            mu_factor: 1e-3,
            dedup_rel: 1e-5,
            max_epsilon: 1.0,
            reflect: false,
            monodromy: MonodromyMethod::Variational,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub epsilon: f64,
    pub z0: CartesianState,
    pub residual: f64,
    pub iterations: usize,
    pub winding_k: i64,
    pub distance_to_torus: f64,
    pub torus_link: TorusSolution,
    /// Monodromy matrix of the time-τ map, row major.
    pub floquet: [[f64; 4]; 4],
}

impl PeriodicOrbit {
    pub fn monodromy(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|r, c| self.floquet[r][c])
    }
}

/// The time-τ map and its derivative.
pub fn time_tau_map(
    model: &PerturbationModel,
    potential: &RadialPotential,
    z0: &CartesianState,
    cfg: &IntegratorConfig,
) -> Result<(CartesianState, Matrix4<f64>)> {
    let start = CartesianState { t: 0.0, ..*z0 };
    integrate_variational(&model.field(potential), &start, model.tau, cfg)
}

/// The time-τ map with its derivative from finite differences of the flow.
pub fn time_tau_map_fd(
    model: &PerturbationModel,
    potential: &RadialPotential,
    z0: &CartesianState,
    cfg: &IntegratorConfig,
    relative_step: f64,
) -> Result<(CartesianState, Matrix4<f64>)> {
    let field = model.field(potential);
    let flow = |z: [f64; 4]| -> Result<[f64; 4]> {
        Ok(integrate(&field, &CartesianState::from_array(z, 0.0), model.tau, cfg)?
            .final_state()
            .to_array())
    };
    let base = z0.to_array();
    let h = relative_step * Vector4::from(base).norm().max(1.0);
    let mut m = Matrix4::zeros();
    for c in 0..4 {
        let (mut up, mut down) = (base, base);
        up[c] += h;
        down[c] -= h;
        let (fu, fd) = (flow(up)?, flow(down)?);
        for r in 0..4 {
            m[(r, c)] = (fu[r] - fd[r]) / (2.0 * h);
        }
    }
    let end = CartesianState::from_array(flow(base)?, model.tau);
    Ok((end, m))
}

fn tau_map(
    model: &PerturbationModel,
    potential: &RadialPotential,
    z0: &CartesianState,
    cfg: &ContinuationConfig,
) -> Result<(CartesianState, Matrix4<f64>)> {
    match cfg.monodromy {
        MonodromyMethod::Variational => time_tau_map(model, potential, z0, &cfg.integrator),
        MonodromyMethod::FiniteDifference { relative_step } => {
            time_tau_map_fd(model, potential, z0, &cfg.integrator, relative_step)
        }
    }
}

/// Unperturbed orbit of a torus over one radial period, used to measure distances to the torus.
#[derive(Debug, Clone)]
pub struct TorusReference {
    pub torus: TorusSolution,
    pub trajectory: Trajectory,
    pub scale: f64,
}

impl TorusReference {
    pub fn new(torus: &TorusSolution, cfg: &IntegratorConfig) -> Result<Self> {
        let potential = torus.potential()?;
        let z0 = torus_pericenter_state(torus)?;
        let trajectory = integrate(&CentralField::new(&potential), &z0, torus.T, cfg)?;
        let (_, rp) = torus.turning_points()?;
        Ok(Self {
            torus: torus.clone(),
            trajectory,
            scale: rp,
        })
    }

    /// `min_{λ,φ} |e^{iφ} z_torus(λ) − z|`.
    pub fn distance(&self, z: &CartesianState) -> f64 {
        closest_on_curve(&self.trajectory, 0.0, self.torus.T, z, 1024)
    }
}

/// Distance from `b` to `a` minimized over rotations of `b`.
pub fn rotation_distance(a: &CartesianState, b: &CartesianState) -> f64 {
    let re = a.x[0] * b.x[0] + a.x[1] * b.x[1] + a.v[0] * b.v[0] + a.v[1] * b.v[1];
    let im = a.x[1] * b.x[0] - a.x[0] * b.x[1] + a.v[1] * b.v[0] - a.v[0] * b.v[1];
    a.distance(&b.rotated(im.atan2(re)))
}

fn closest_on_curve(traj: &Trajectory, t0: f64, t1: f64, z: &CartesianState, samples: usize) -> f64 {
    let dt = (t1 - t0) / samples as f64;
    let f = |t: f64| rotation_distance(z, &traj.state_at(t));
    let (mut best_t, mut best) = (t0, f64::INFINITY);
    for i in 0..samples {
        let t = t0 + dt * i as f64;
        let d = f(t);
        if d < best {
            best = d;
            best_t = t;
        }
    }
    let (mut a, mut b) = ((best_t - dt).max(t0), (best_t + dt).min(t1));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    best.min(fc).min(fd)
}

/// States on the torus: the pericenter orbit advanced by `λ_j = jT/N_λ` and rotated by `φ_i = 2πi/N_φ`.
///
/// Together these cover the whole torus; rotating by `2π/n` maps the orbit onto itself.
pub fn seed_grid(torus: &TorusSolution, n_lambda: usize, n_phi: usize, cfg: &IntegratorConfig) -> Result<Vec<CartesianState>> {
    let potential = torus.potential()?;
    let z0 = torus_pericenter_state(torus)?;
    let traj = integrate(&CentralField::new(&potential), &z0, torus.T, cfg)?;
    let mut out = Vec::with_capacity(n_lambda * n_phi);
    for j in 0..n_lambda.max(1) {
        let lambda = torus.T * j as f64 / n_lambda.max(1) as f64;
        let base = CartesianState {
            t: 0.0,
            ..traj.state_at(lambda)
        };
        for i in 0..n_phi.max(1) {
            out.push(base.rotated(2.0 * PI * i as f64 / n_phi.max(1) as f64));
        }
    }
    Ok(out)
}

/// Mirror image `(x₁, −x₂, v₁, −v₂)`.
pub fn reflect(z: &CartesianState) -> CartesianState {
    CartesianState::new([z.x[0], -z.x[1]], [z.v[0], -z.v[1]], z.t)
}

fn winding(traj: &Trajectory, tau: f64) -> i64 {
    (traj.swept_angle(0.0, tau) / (2.0 * PI)).round() as i64
}

/// Levenberg–Marquardt iteration on `P_ε(z) − z = 0` with Tikhonov floor `μ`.
pub fn newton_fixed_point(
    model: &PerturbationModel,
    potential: &RadialPotential,
    seed: &CartesianState,
    reference: &TorusReference,
    cfg: &ContinuationConfig,
) -> Result<PeriodicOrbit> {
    if model.epsilon.abs() > cfg.max_epsilon {
        return Err(OrbitaError::Parameter(format!(
            "|epsilon| = {} exceeds the configured bound {}",
            model.epsilon.abs(),
            cfg.max_epsilon
        )));
    }
    let mu = cfg.mu_floor.max(cfg.mu_factor * model.epsilon.abs());
    let eval = |z: &CartesianState| -> Result<(Vector4<f64>, Matrix4<f64>)> {
        let (end, m) = tau_map(model, potential, z, cfg)?;
        let f = Vector4::from(end.to_array()) - Vector4::from(z.to_array());
        Ok((f, m))
    };
    let mut z = CartesianState { t: 0.0, ..*seed };
    let (mut f, mut m) = eval(&z)?;
    let mut iterations = 0;
    let mut damping = mu;
    while f.norm() >= cfg.tol {
        if iterations >= cfg.max_iter {
            return Err(OrbitaError::Divergence(format!(
                "residual {:e} after {} iterations",
                f.norm(),
                iterations
            )));
        }
        iterations += 1;
        let j = m - Matrix4::identity();
        let jt = j.transpose();
        let rhs = -(jt * f);
        loop {
            let normal = jt * j + Matrix4::identity() * (damping * damping);
            let delta = normal
                .lu()
                .solve(&rhs)
                .ok_or_else(|| OrbitaError::Divergence("singular Newton system".into()))?;
            let trial = CartesianState::from_array((Vector4::from(z.to_array()) + delta).into(), 0.0);
            match eval(&trial) {
                Ok((ft, mt)) if ft.norm() < f.norm() => {
                    z = trial;
                    f = ft;
                    m = mt;
                    damping = (damping * 0.1).max(mu);
                    break;
                }
                _ => damping *= 10.0,
            }
            if damping > 1e6 {
                return Err(OrbitaError::Divergence(format!("damping exhausted at residual {:e}", f.norm())));
            }
        }
    }
    let traj = integrate(&model.field(potential), &z, model.tau, &cfg.integrator)?;
    Ok(PeriodicOrbit {
        epsilon: model.epsilon,
        z0: z,
        residual: f.norm(),
        iterations,
        winding_k: winding(&traj, model.tau),
        distance_to_torus: reference.distance(&z),
        torus_link: reference.torus.clone(),
        floquet: std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)])),
    })
}

/// Distinct orbits found from a seed grid, with the number of seeds that failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyReport {
    pub epsilon: f64,
    pub seeds: usize,
    pub converged: usize,
    pub failures: usize,
    pub orbits: Vec<PeriodicOrbit>,
}

/// `min` over time shifts and rotations of the distance from `b`'s orbit to `a.z0`.
pub fn orbit_distance(model: &PerturbationModel, a: &PeriodicOrbit, b_traj: &Trajectory) -> f64 {
    closest_on_curve(b_traj, 0.0, model.tau, &a.z0, 2048)
}

/// Runs the Newton iteration from every seed and merges coinciding orbits.
pub fn survey(
    model: &PerturbationModel,
    potential: &RadialPotential,
    torus: &TorusSolution,
    n_lambda: usize,
    n_phi: usize,
    cfg: &ContinuationConfig,
) -> Result<SurveyReport> {
    let reference = TorusReference::new(torus, &cfg.integrator)?;
    let mut seeds = seed_grid(torus, n_lambda, n_phi, &cfg.integrator)?;
    if cfg.reflect {
        let mirrored: Vec<_> = seeds.iter().map(reflect).collect();
        seeds.extend(mirrored);
    }
    let results: Vec<Result<PeriodicOrbit>> = seeds
        .par_iter()
        .map(|s| newton_fixed_point(model, potential, s, &reference, cfg))
        .collect();
    let converged: Vec<PeriodicOrbit> = results.iter().filter_map(|r| r.as_ref().ok().cloned()).collect();
    let failures = results.len() - converged.len();
    let orbits = dedup(model, potential, converged.clone(), cfg.dedup_rel * reference.scale, &cfg.integrator)?;
    Ok(SurveyReport {
        epsilon: model.epsilon,
        seeds: seeds.len(),
        converged: converged.len(),
        failures,
        orbits,
    })
}

/// Keeps one representative (the smallest residual) per group of coinciding orbits.
pub fn dedup(
    model: &PerturbationModel,
    potential: &RadialPotential,
    mut orbits: Vec<PeriodicOrbit>,
    threshold: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<PeriodicOrbit>> {
    orbits.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    let field = model.field(potential);
    let mut kept: Vec<(PeriodicOrbit, Trajectory)> = Vec::new();
    for o in orbits {
        let duplicate = kept
            .iter()
            .any(|(_, traj)| orbit_distance(model, &o, traj) < threshold);
        if !duplicate {
            let traj = integrate(&field, &o.z0, model.tau, cfg)?;
            kept.push((o, traj));
        }
    }
    Ok(kept.into_iter().map(|(o, _)| o).collect())
}
