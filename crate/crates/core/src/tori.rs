//! Action-angle coordinates and invariant tori filled by periodic orbits of type `(n, k)`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{OrbitaError, Result};
use crate::potentials::{PotentialSpec, RadialPotential};
use crate::roots::try_newton_in_bracket;
use crate::timemap::{TimeMapValues, TimeMaps};

/// Actions and angles of one phase-space point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ActionAngleChart {
    pub H: f64,
    pub L: f64,
    pub I1: f64,
    pub I2: f64,
    pub area: f64,
    pub mu: f64,
    pub psi: f64,
    pub phi1: f64,
    pub phi2: f64,
}

/// An invariant torus whose orbits close after `n` radial periods and `k` turns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct TorusSolution {
    pub potential: PotentialSpec,
    pub n: u32,
    pub k: u32,
    pub tau: f64,
    pub ell: u32,
    pub H: f64,
    pub L: f64,
    pub I1: f64,
    pub I2: f64,
    pub T: f64,
    pub Theta: f64,
    pub D: f64,
    pub residual_T: f64,
    pub residual_Theta: f64,
}

impl TorusSolution {
    pub fn potential(&self) -> Result<RadialPotential> {
        RadialPotential::from_spec(&self.potential)
    }

    /// Minimal period `τ/ℓ` of the orbits on the torus.
    pub fn orbit_period(&self) -> f64 {
        self.tau / self.ell as f64
    }

    /// Largest of the two relative residuals.
    pub fn residual(&self) -> f64 {
        self.residual_T.max(self.residual_Theta)
    }

    /// Re-evaluates the time maps at the stored `(H, L)`, refreshing every derived field.
    pub fn recompute(&self) -> Result<TorusSolution> {
        finish(&self.potential()?, self.n, self.k, self.tau, self.ell, self.H, self.L)
    }

    /// Pericenter and apocenter radii.
    pub fn turning_points(&self) -> Result<(f64, f64)> {
        TimeMaps::new(&self.potential()?, self.L)?.radial().turning_points(self.H)
    }
}

/// Options for the torus search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusConfig {
    pub ell: u32,
    /// Starting `(H, L)` for potentials without the homogeneous reduction.
    pub seed: Option<(f64, f64)>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TorusConfig {
    fn default() -> Self {
        Self {
            ell: 1,
            seed: None,
            tol: 1e-12,
            max_iter: 60,
        }
    }
}

/// `det DΦ` of the map `(H, L) ↦ (τ-advance of both angles)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KamDeterminant {
    pub det_dphi: f64,
    pub nonzero: bool,
}

/// Radial phase-space area `𝒜 = 2∫ √(2(H − W)) dr` enclosed by the orbit.
pub fn area(potential: &RadialPotential, h: f64, l: f64) -> Result<f64> {
    let maps = TimeMaps::new(potential, l)?;
    area_on(&maps, h)
}

fn area_on(maps: &TimeMaps, h: f64) -> Result<f64> {
    let m = maps.radial();
    let e = m.energy_above_center(h)?;
    let [v] = m.theta_integral(h, -PI / 2.0, PI / 2.0, |theta, _, hv, _| {
        let c = theta.cos();
        let f = c * c / hv.h1;
        ([f], [f.abs()])
    })?;
    Ok(2.0 * SQRT_2 * e * v)
}

/// Time from the pericenter to the point `s` on the ascending half of the radial orbit.
fn ascending_time(maps: &TimeMaps, h: f64, r: f64) -> Result<f64> {
    let m = maps.radial();
    let e = m.energy_above_center(h)?;
    let theta_r = (m.h_values(r).h / e.sqrt()).clamp(-1.0, 1.0).asin();
    let [v] = m.theta_integral(h, -PI / 2.0, theta_r, |_, _, hv, _| ([1.0 / hv.h1], [1.0 / hv.h1]))?;
    Ok(v / SQRT_2)
}

/// Angle swept from the pericenter to the radius `r` on the outgoing half of the orbit.
fn outgoing_angle(maps: &TimeMaps, h: f64, r: f64) -> Result<f64> {
    let m = maps.clairaut();
    let e = m.energy_above_center(h)?;
    let theta_u = (m.h_values(1.0 / r).h / e.sqrt()).clamp(-1.0, 1.0).asin();
    let [v] = m.theta_integral(h, theta_u, PI / 2.0, |_, _, hv, _| ([1.0 / hv.h1], [1.0 / hv.h1]))?;
    Ok(maps.radial().oscillator().angular_momentum() * v / SQRT_2)
}

/// Actions and angles of the state `(r, ṙ, ϑ)` with angular momentum `l`.
///
/// The pericenter angle `ψ` jumps exactly when the orbit passes the pericenter, so a state
/// at the pericenter has `μ = 0` and `ψ = ϑ`.
pub fn action_angle(potential: &RadialPotential, r: f64, rdot: f64, theta: f64, l: f64) -> Result<ActionAngleChart> {
    let h = 0.5 * (rdot * rdot + l * l / (r * r)) - potential.value(r);
    let maps = TimeMaps::new(potential, l)?;
    let t = maps.period(h)?;
    let big_theta = maps.apsidal_angle(h)?;
    let r0 = maps.radial().circular().s0;
    let outgoing = rdot > 0.0 || (rdot == 0.0 && r <= r0);
    let up_time = ascending_time(&maps, h, r)?;
    let up_angle = outgoing_angle(&maps, h, r)?;
    let (mu, swept) = if outgoing {
        (up_time, up_angle)
    } else {
        (t - up_time, big_theta - up_angle)
    };
    let psi = (theta - swept).rem_euclid(2.0 * PI);
    let a = area_on(&maps, h)?;
    Ok(ActionAngleChart {
        H: h,
        L: l,
        I1: a / (2.0 * PI) + l,
        I2: l,
        area: a,
        mu,
        psi,
        phi1: (2.0 * PI * mu / t).rem_euclid(2.0 * PI),
        phi2: ((big_theta - 2.0 * PI) * mu / t + psi).rem_euclid(2.0 * PI),
    })
}

/// The angle pair `(φ₁, φ₂)` of a state.
pub fn angles(potential: &RadialPotential, r: f64, rdot: f64, theta: f64, l: f64) -> Result<(f64, f64)> {
    let c = action_angle(potential, r, rdot, theta, l)?;
    Ok((c.phi1, c.phi2))
}

/// `det DΦ = −2πτ² D / T³`.
pub fn kam_determinant(potential: &RadialPotential, h: f64, l: f64, tau: f64) -> Result<KamDeterminant> {
    let v = TimeMaps::new(potential, l)?.values(h)?;
    Ok(kam_from_values(&v, tau))
}

pub fn kam_from_values(v: &TimeMapValues, tau: f64) -> KamDeterminant {
    let det_dphi = -2.0 * PI * tau * tau / v.T.powi(3) * v.D;
    KamDeterminant {
        det_dphi,
        nonzero: det_dphi != 0.0,
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Open interval of ratios `k/n` realized by the homogeneous potential with exponent `alpha`.
pub fn admissible_ratio_interval(alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 2.0) || alpha == 1.0 {
        return Err(OrbitaError::Parameter(format!("alpha must lie in (0,2) without 1, got {alpha}")));
    }
    let a = 1.0 / (2.0 - alpha);
    let b = 1.0 / (2.0 - alpha).sqrt();
    Ok((a.min(b), a.max(b)))
}

fn homogeneous_alpha(potential: &RadialPotential) -> Option<f64> {
    match *potential.spec() {
        PotentialSpec::Homogeneous { alpha, .. } if alpha > 0.0 && alpha < 2.0 && alpha != 1.0 => Some(alpha),
        _ => None,
    }
}

/// Reduced energy `h₁` at `L = 1` with `Θ(h₁, 1) = target`.
fn reduced_energy_for_angle(unit: &TimeMaps, target: f64) -> Result<f64> {
    let (lo, hi) = unit.energy_window();
    let start = unit.circular_limits().1.t;
    let lo_sign = (start - target).signum();
    try_newton_in_bracket(
        |h| {
            let p = unit.clairaut().period_derivatives(h)?;
            Ok((p.t - target, p.dt_dh))
        },
        lo,
        hi,
        lo_sign,
        None,
        1e-14,
        300,
    )
}

/// Reduced energy `h₁` at `L = 1` with `T(h₁, 1) = target`.
fn reduced_energy_for_period(unit: &TimeMaps, target: f64) -> Result<f64> {
    let (lo, hi) = unit.energy_window();
    let start = unit.circular_limits().0.t;
    if !(target > start) {
        return Err(OrbitaError::Inadmissible { h: target, lo: start, hi: f64::INFINITY });
    }
    try_newton_in_bracket(
        |h| {
            let p = unit.radial().period_derivatives(h)?;
            Ok((p.t - target, p.dt_dh))
        },
        lo,
        hi,
        -1.0,
        None,
        1e-14,
        300,
    )
}

/// The apsidal angle along the level set `T(H, L) = period` of a homogeneous potential.
pub fn level_angle(potential: &RadialPotential, period: f64, l: f64) -> Result<f64> {
    let alpha = homogeneous_alpha(potential)
        .ok_or_else(|| OrbitaError::Parameter("level_angle needs a homogeneous potential with alpha in (0,2)".into()))?;
    let unit = TimeMaps::new(potential, 1.0)?;
    let h1 = reduced_energy_for_period(&unit, period * l.powf(-(2.0 + alpha) / (2.0 - alpha)))?;
    unit.apsidal_angle(h1)
}

fn finish(
    potential: &RadialPotential,
    n: u32,
    k: u32,
    tau: f64,
    ell: u32,
    h: f64,
    l: f64,
) -> Result<TorusSolution> {
    let maps = TimeMaps::new(potential, l)?;
    let v = maps.values(h)?;
    let a = area_on(&maps, h)?;
    let t_target = tau / (ell as f64 * n as f64);
    let th_target = 2.0 * PI * k as f64 / n as f64;
    Ok(TorusSolution {
        potential: potential.spec().clone(),
        n,
        k,
        tau,
        ell,
        H: h,
        L: l,
        I1: a / (2.0 * PI) + l,
        I2: l,
        T: v.T,
        Theta: v.Theta,
        D: v.D,
        residual_T: (v.T - t_target).abs() / t_target,
        residual_Theta: (v.Theta - th_target).abs() / th_target,
    })
}

/// Locates `(H*, L*)` with `T = τ/(ℓn)` and `Θ = 2πk/n`.
///
/// Homogeneous potentials with `α ∈ (0,2)`, `α ≠ 1` are solved by the scaling reduction and
/// need no seed; other potentials run a damped Newton iteration from `cfg.seed`.
pub fn find_torus(potential: &RadialPotential, tau: f64, n: u32, k: u32, cfg: &TorusConfig) -> Result<TorusSolution> {
    if n == 0 || k == 0 || gcd(n, k) != 1 {
        return Err(OrbitaError::Parameter(format!("n and k must be coprime positive integers, got ({n}, {k})")));
    }
    if cfg.ell == 0 || !(tau > 0.0) {
        return Err(OrbitaError::Parameter("tau and ell must be positive".into()));
    }
    let ratio = k as f64 / n as f64;
    let t_target = tau / (cfg.ell as f64 * n as f64);
    let th_target = 2.0 * PI * ratio;
    let (h, l) = match (homogeneous_alpha(potential), cfg.seed) {
        (Some(alpha), None) => {
            let (lo, hi) = admissible_ratio_interval(alpha)?;
            if !(ratio > lo && ratio < hi) {
                return Err(OrbitaError::InadmissibleRatio { ratio, lo, hi });
            }
            let unit = TimeMaps::new(potential, 1.0)?;
            let h1 = reduced_energy_for_angle(&unit, th_target)?;
            let t1 = unit.period(h1)?;
            let l = (t_target / t1).powf((2.0 - alpha) / (2.0 + alpha));
            (h1 * l.powf(-2.0 * alpha / (2.0 - alpha)), l)
        }
        (_, Some(seed)) => newton_2d(potential, seed, t_target, th_target, cfg)?,
        (None, None) => {
            return Err(OrbitaError::Parameter(
                "a seed (H, L) is required for this potential".into(),
            ))
        }
    };
    let mut sol = finish(potential, n, k, tau, cfg.ell, h, l)?;
    if sol.residual() > cfg.tol {
        let (h, l) = newton_2d(potential, (sol.H, sol.L), t_target, th_target, cfg)?;
        sol = finish(potential, n, k, tau, cfg.ell, h, l)?;
    }
    Ok(sol)
}

fn scaled_residual(v: &TimeMapValues, t_target: f64, th_target: f64) -> (f64, f64) {
    ((v.T - t_target) / t_target, (v.Theta - th_target) / th_target)
}

fn newton_2d(
    potential: &RadialPotential,
    seed: (f64, f64),
    t_target: f64,
    th_target: f64,
    cfg: &TorusConfig,
) -> Result<(f64, f64)> {
    let eval = |h: f64, l: f64| -> Option<TimeMapValues> {
        if !(l > 0.0) {
            return None;
        }
        TimeMaps::new(potential, l).ok()?.values(h).ok()
    };
    let (mut h, mut l) = seed;
    let mut v = eval(h, l).ok_or_else(|| OrbitaError::Divergence(format!("seed ({h}, {l}) is not admissible")))?;
    for _ in 0..cfg.max_iter {
        let (ft, fth) = scaled_residual(&v, t_target, th_target);
        let norm = ft.hypot(fth);
        if norm <= cfg.tol {
            return Ok((h, l));
        }
        let (a, b) = (v.dT_dH / t_target, v.dT_dL / t_target);
        let (c, d) = (v.dTheta_dH / th_target, v.dTheta_dL / th_target);
        let jac = Matrix2::new(a, b, c, d);
        if !jac.iter().all(|x| x.is_finite()) {
            return Err(OrbitaError::Divergence(format!("non-finite Jacobian at ({h}, {l})")));
        }
        let svd = jac.svd(true, true);
        let cutoff = 1e-8 * svd.singular_values.max();
        let step_vec = svd
            .solve(&Vector2::new(-ft, -fth), cutoff)
            .map_err(|e| OrbitaError::Divergence(e.to_string()))?;
        let (dh, dl) = (step_vec[0], step_vec[1]);
        if dh == 0.0 && dl == 0.0 {
            return Err(OrbitaError::Divergence("singular Jacobian (D = 0)".into()));
        }
        let mut step = 1.0;
        loop {
            let (hn, ln) = (h + step * dh, l + step * dl);
            if let Some(vn) = eval(hn, ln) {
                let (a, b) = scaled_residual(&vn, t_target, th_target);
                if a.hypot(b) < norm || step < 1e-3 {
                    h = hn;
                    l = ln;
                    v = vn;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-6 {
                return Err(OrbitaError::Divergence(format!("line search failed at ({h}, {l})")));
            }
        }
    }
    Err(OrbitaError::Divergence(format!("no convergence after {} iterations", cfg.max_iter)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kepler_area_matches_action() {
        let p = RadialPotential::homogeneous(1.0, 1.0).unwrap();
        let a = area(&p, -0.4, 1.0).unwrap();
        let exact = 2.0 * PI * (1.0 / 0.8f64.sqrt() - 1.0);
        assert!((a - exact).abs() < 1e-12, "{a} {exact}");
    }

    #[test]
    fn harmonic_area_is_linear() {
        let p = RadialPotential::homogeneous(1.0, -2.0).unwrap();
        let a = area(&p, 2.0, 1.0).unwrap();
        assert!((a - PI).abs() < 1e-11, "{a}");
    }

    #[test]
    fn pericenter_and_apocenter_angles() {
        let p = RadialPotential::homogeneous(1.0, 0.5).unwrap();
        let maps = TimeMaps::new(&p, 1.0).unwrap();
        let (rm, rp) = maps.radial().turning_points(-0.4).unwrap();
        let peri = action_angle(&p, rm, 0.0, 0.7, 1.0).unwrap();
        assert!(peri.phi1.abs() < 1e-12 && (peri.psi - 0.7).abs() < 1e-12);
        assert!((peri.phi2 - 0.7).abs() < 1e-12);
        let apo = action_angle(&p, rp, 0.0, 0.0, 1.0).unwrap();
        assert!((apo.phi1 - PI).abs() < 1e-10, "{}", apo.phi1);
    }

    #[test]
    fn ratio_window() {
        let (a, b) = admissible_ratio_interval(0.5).unwrap();
        assert!((a - 2.0 / 3.0).abs() < 1e-15 && (b - 1.0 / 1.5f64.sqrt()).abs() < 1e-15);
        let (a, b) = admissible_ratio_interval(1.5).unwrap();
        assert!((a - 2f64.sqrt()).abs() < 1e-14 && (b - 2.0).abs() < 1e-14);
    }

    #[test]
    fn homogeneous_torus_and_rejection() {
        let p = RadialPotential::homogeneous(1.0, 0.5).unwrap();
        let s = find_torus(&p, 2.0 * PI, 4, 3, &TorusConfig::default()).unwrap();
        assert!(s.residual() < 1e-10, "{s:?}");
        let e = find_torus(&p, 2.0 * PI, 2, 1, &TorusConfig::default()).unwrap_err();
        assert!(matches!(e, OrbitaError::InadmissibleRatio { .. }));
        assert!(find_torus(&p, 2.0 * PI, 4, 2, &TorusConfig::default()).is_err());
    }

    #[test]
    fn kam_determinant_levi_civita() {
        let p = RadialPotential::levi_civita(1.0, 0.1).unwrap();
        let k = kam_determinant(&p, -0.5, 1.0, 2.0 * PI).unwrap();
        let d = crate::timemap::levi_civita_closed(1.0, 0.1, -0.5, 1.0).unwrap().D;
        assert!((k.det_dphi + d).abs() < 1e-8 * d.abs(), "{} {}", k.det_dphi, d);
        let k2 = kam_determinant(&p, -0.5, 1.0, 4.0 * PI).unwrap();
        assert!((k2.det_dphi / k.det_dphi - 4.0).abs() < 1e-12);
    }
}
