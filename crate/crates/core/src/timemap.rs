//! Radial period `T`, apsidal angle `Θ = L·P`, their derivatives and `D(H,L)`.
//!
//! Both maps are periods of the unified oscillator. The substitution
//! `h(s) = sgn(s−s₀)√Ω(s)` with `h(s) = √E sin θ` turns each period into a regular
//! integral over `θ ∈ (−π/2, π/2)`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::effective::{series_g, CircularData, EffectiveOscillator, SERIES_RADIUS};
use crate::error::{OrbitaError, Result};
use crate::potentials::{PotentialSpec, RadialPotential};
use crate::quadrature::{integrate_scaled, QuadConfig, Sample};
use crate::roots::newton_in_bracket;

/// `h` and its derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HValues {
    pub h: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub dl_h: f64,
    pub dl_h1: f64,
}

/// The oscillator together with its center and the regularizing change of variable.
#[derive(Debug, Clone)]
pub struct RegularizedMap {
    osc: EffectiveOscillator,
    circ: CircularData,
    quad: QuadConfig,
}

/// Period of one oscillator and its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodData {
    pub t: f64,
    pub dt_dh: f64,
    pub dt_dl: f64,
}

/// Values of the time maps at one `(H, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct TimeMapValues {
    pub H: f64,
    pub L: f64,
    pub T: f64,
    pub Theta: f64,
    pub P: f64,
    pub dT_dH: f64,
    pub dT_dL: f64,
    pub dTheta_dH: f64,
    pub dTheta_dL: f64,
    pub D: f64,
}

impl TimeMapValues {
    #[allow(clippy::too_many_arguments)]
    fn assemble(h: f64, l: f64, t: f64, p: f64, dt_dh: f64, dt_dl: f64, dth_dh: f64, dth_dl: f64) -> Self {
        Self {
            H: h,
            L: l,
            T: t,
            Theta: l * p,
            P: p,
            dT_dH: dt_dh,
            dT_dL: dt_dl,
            dTheta_dH: dth_dh,
            dTheta_dL: dth_dl,
            D: dt_dh * dth_dl - dt_dl * dth_dh,
        }
    }
}

impl RegularizedMap {
    pub fn new(osc: EffectiveOscillator) -> Result<Self> {
        let circ = osc.find_center()?;
        Ok(Self {
            osc,
            circ,
            quad: QuadConfig::default(),
        })
    }

    pub fn with_quadrature(mut self, quad: QuadConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn oscillator(&self) -> &EffectiveOscillator {
        &self.osc
    }

    pub fn circular(&self) -> &CircularData {
        &self.circ
    }

    pub fn admissible(&self, h: f64) -> bool {
        self.osc.admissible(&self.circ, h)
    }

    /// `E = H + ω₀`, checking admissibility.
    pub fn energy_above_center(&self, h: f64) -> Result<f64> {
        if !self.admissible(h) {
            return Err(OrbitaError::Inadmissible {
                h,
                lo: -self.circ.omega0,
                hi: self.circ.h0,
            });
        }
        Ok(h + self.circ.omega0)
    }

    /// `m(t) = ((1+t)^{2k} − 1)/t` and `m'(t)`.
    fn m_ratio(&self, t: f64) -> (f64, f64) {
        if self.osc.k() == 1 {
            (2.0 + t, 1.0)
        } else {
            let u = 1.0 + t;
            (-(2.0 + t) / (u * u), (3.0 + t) / (u * u * u))
        }
    }

    pub fn h_values(&self, s: f64) -> HValues {
        let c = &self.circ;
        let l = self.osc.angular_momentum();
        let k = self.osc.k();
        let t = (s - c.s0) / c.s0;
        if t.abs() <= SERIES_RADIUS {
            let g = series_g(&c.series, t);
            let q = g[0].sqrt();
            let q1 = g[1] / (2.0 * q);
            let q2 = (2.0 * g[0] * g[2] - g[1] * g[1]) / (4.0 * g[0] * q);
            let q3 = (4.0 * g[0] * g[0] * g[3] - 6.0 * g[0] * g[1] * g[2] + 3.0 * g[1].powi(3))
                / (8.0 * g[0] * g[0] * q);
            let inv = 1.0 / c.s0;
            let (m, m1) = self.m_ratio(t);
            let s2k = c.s0.powi(2 * k);
            HValues {
                h: t * q,
                h1: (q + t * q1) * inv,
                h2: (2.0 * q1 + t * q2) * inv * inv,
                h3: (3.0 * q2 + t * q3) * inv * inv * inv,
                dl_h: l * s2k * m / (2.0 * q),
                dl_h1: 0.5 * l * s2k * inv * (m1 * q - m * q1) / (q * q),
            }
        } else {
            let o = self.osc.omega_derivatives(c, s);
            let sg = t.signum();
            let rt = o[0].sqrt();
            let dl_om = l * (s.powi(2 * k) - c.s0.powi(2 * k));
            let dl_om1 = 2.0 * k as f64 * l * s.powi(2 * k - 1);
            HValues {
                h: sg * rt,
                h1: sg * o[1] / (2.0 * rt),
                h2: sg * (2.0 * o[0] * o[2] - o[1] * o[1]) / (4.0 * o[0] * rt),
                h3: sg * (4.0 * o[0] * o[0] * o[3] - 6.0 * o[0] * o[1] * o[2] + 3.0 * o[1].powi(3))
                    / (8.0 * o[0] * o[0] * rt),
                dl_h: sg * dl_om / (2.0 * rt),
                dl_h1: sg * (2.0 * o[0] * dl_om1 - o[1] * dl_om) / (4.0 * o[0] * rt),
            }
        }
    }

    /// Bracket `[a, b]` with `h(a) < −√E` and `h(b) > √E`.
    pub(crate) fn bracket(&self, h: f64) -> (f64, f64) {
        (
            self.osc.outer_bracket(&self.circ, h, false),
            self.osc.outer_bracket(&self.circ, h, true),
        )
    }

    /// Solves `h(s) = y` on a bracket, where `y² = E sin²θ`.
    ///
    /// Away from the center the equation is solved in the equivalent form
    /// `W(s) = H sin²θ − ω₀ cos²θ`, which keeps full relative accuracy when both
    /// `E` and `Ω(s)` are close to `ω₀`.
    pub fn solve_h(&self, h: f64, sin_theta: f64, bracket: (f64, f64), guess: Option<f64>) -> Result<f64> {
        let e = h + self.circ.omega0;
        let y = e.sqrt() * sin_theta;
        if y == 0.0 {
            return Ok(self.circ.s0);
        }
        let s2 = sin_theta * sin_theta;
        let w_target = h * s2 - self.circ.omega0 * (1.0 - s2);
        let (lo, hi) = if y > 0.0 {
            (self.circ.s0, bracket.1)
        } else {
            (bracket.0, self.circ.s0)
        };
        let guess = guess.filter(|g| *g > lo && *g < hi).or_else(|| {
            let lin = self.circ.s0 + y / (0.5 * self.circ.omega2).sqrt();
            (lin > lo && lin < hi).then_some(lin)
        });
        let s0 = self.circ.s0;
        newton_in_bracket(
            |s| {
                let v = self.h_values(s);
                if ((s - s0) / s0).abs() <= SERIES_RADIUS {
                    (v.h - y, v.h1)
                } else {
                    ((self.osc.w(s) - w_target) / (v.h + y), v.h1)
                }
            },
            lo,
            hi,
            -1.0,
            guess,
            200,
        )
    }

    /// Turning points `s±` from `h(s) = ±√E`.
    pub fn turning_points(&self, h: f64) -> Result<(f64, f64)> {
        self.energy_above_center(h)?;
        let b = self.bracket(h);
        Ok((self.solve_h(h, -1.0, b, None)?, self.solve_h(h, 1.0, b, None)?))
    }

    /// `∫_{θa}^{θb} f(θ, s(θ), h-values, √E) dθ`.
    pub(crate) fn theta_integral<const N: usize, F>(&self, h: f64, theta_a: f64, theta_b: f64, f: F) -> Result<[f64; N]>
    where
        F: Fn(f64, f64, &HValues, f64) -> Sample<N>,
    {
        let e = self.energy_above_center(h)?;
        let rt = e.sqrt();
        let b = self.bracket(h);
        let mut last: Option<f64> = None;
        integrate_scaled(
            |theta| {
                let s = self.solve_h(h, theta.sin(), b, last)?;
                last = Some(s);
                Ok(f(theta, s, &self.h_values(s), rt))
            },
            theta_a,
            theta_b,
            &self.quad,
        )
    }

    /// `T_Ω = √2 ∫ dθ / h'(s(θ))`.
    pub fn period(&self, h: f64) -> Result<f64> {
        let [v] = self.theta_integral(h, -PI / 2.0, PI / 2.0, |_, _, hv, _| ([1.0 / hv.h1], [1.0 / hv.h1]))?;
        Ok(SQRT_2 * v)
    }

    /// Period and its two partial derivatives.
    pub fn period_derivatives(&self, h: f64) -> Result<PeriodData> {
        let unit_l = self.circ.domega0_dl.abs();
        let v = self.theta_integral(h, -PI / 2.0, PI / 2.0, |theta, _, hv, rt| {
            let c = theta.cos();
            let h1 = hv.h1;
            let (a, b) = (3.0 * hv.h2 * hv.h2, h1 * hv.h3);
            let (u, v) = (hv.h2 * hv.dl_h, h1 * hv.dl_h1);
            let w5 = c * c / h1.powi(5);
            let w3 = 1.0 / h1.powi(3);
            (
                [1.0 / h1, (a - b) * w5, (u - v) * w3],
                [
                    1.0 / h1,
                    (a.abs() + b.abs()) * w5 + 1e-4 * c * c / (h1 * rt * rt),
                    (u.abs() + v.abs()) * w3 + 1e-4 * unit_l / (h1 * rt * rt),
                ],
            )
        })?;
        let dt_dh = v[1] / SQRT_2;
        Ok(PeriodData {
            t: SQRT_2 * v[0],
            dt_dh,
            dt_dl: self.circ.domega0_dl * dt_dh + SQRT_2 * v[2],
        })
    }

    /// Limits of `T`, `∂_H T`, `∂_L T` as `H → −ω₀⁺`.
    pub fn circular_limits(&self) -> PeriodData {
        let c = &self.circ;
        let k = self.osc.k() as f64;
        let l = self.osc.angular_momentum();
        let o2 = c.omega2;
        let o2_72 = o2.powf(3.5);
        PeriodData {
            t: 2.0 * PI / o2.sqrt(),
            dt_dh: PI * c.sigma0 / (12.0 * o2_72),
            dt_dl: -PI * l * c.s0.powf(2.0 * k - 2.0) / (12.0 * o2_72)
                * (c.s0 * c.s0 * c.sigma0 - 24.0 * k * o2 * c.omega3 * c.s0
                    + 24.0 * k * (2.0 * k - 1.0) * o2 * o2),
        }
    }
}

/// Both oscillators at a fixed angular momentum.
#[derive(Debug, Clone)]
pub struct TimeMaps {
    l: f64,
    radial: RegularizedMap,
    clairaut: RegularizedMap,
}

impl TimeMaps {
    pub fn new(potential: &RadialPotential, l: f64) -> Result<Self> {
        Ok(Self {
            l,
            radial: RegularizedMap::new(EffectiveOscillator::radial(potential, l)?)?,
            clairaut: RegularizedMap::new(EffectiveOscillator::clairaut(potential, l)?)?,
        })
    }

    pub fn with_quadrature(mut self, quad: QuadConfig) -> Self {
        self.radial = self.radial.with_quadrature(quad);
        self.clairaut = self.clairaut.with_quadrature(quad);
        self
    }

    pub fn radial(&self) -> &RegularizedMap {
        &self.radial
    }

    pub fn clairaut(&self) -> &RegularizedMap {
        &self.clairaut
    }

    pub fn admissible(&self, h: f64) -> bool {
        self.radial.admissible(h)
    }

    /// `(−ω₀(L), H₀(L))`.
    pub fn energy_window(&self) -> (f64, f64) {
        let c = self.radial.circular();
        (-c.omega0, c.h0)
    }

    pub fn period(&self, h: f64) -> Result<f64> {
        self.radial.period(h)
    }

    pub fn apsidal_angle(&self, h: f64) -> Result<f64> {
        Ok(self.l * self.clairaut.period(h)?)
    }

    pub fn values(&self, h: f64) -> Result<TimeMapValues> {
        let r = self.radial.period_derivatives(h)?;
        let p = self.clairaut.period_derivatives(h)?;
        let l = self.l;
        Ok(TimeMapValues::assemble(
            h,
            l,
            r.t,
            p.t,
            r.dt_dh,
            r.dt_dl,
            l * p.dt_dh,
            p.t + l * p.dt_dl,
        ))
    }

    /// Circular limits of `(T, ∂_H T, ∂_L T)` and of `(Θ, ∂_H Θ, ∂_L Θ)`.
    pub fn circular_limits(&self) -> (PeriodData, PeriodData) {
        let r = self.radial.circular_limits();
        let p = self.clairaut.circular_limits();
        let l = self.l;
        (
            r,
            PeriodData {
                t: l * p.t,
                dt_dh: l * p.dt_dh,
                dt_dl: p.t + l * p.dt_dl,
            },
        )
    }
}

pub fn period(potential: &RadialPotential, h: f64, l: f64) -> Result<f64> {
    RegularizedMap::new(EffectiveOscillator::radial(potential, l)?)?.period(h)
}

pub fn apsidal_angle(potential: &RadialPotential, h: f64, l: f64) -> Result<f64> {
    Ok(l * RegularizedMap::new(EffectiveOscillator::clairaut(potential, l)?)?.period(h)?)
}

/// All time-map values and `D(H,L)` at one point.
pub fn nondegeneracy(potential: &RadialPotential, h: f64, l: f64) -> Result<TimeMapValues> {
    TimeMaps::new(potential, l)?.values(h)
}

/// `(H, L) ∈ Λ`.
pub fn admissible(potential: &RadialPotential, h: f64, l: f64) -> bool {
    EffectiveOscillator::radial(potential, l)
        .and_then(|o| o.find_center().map(|c| o.admissible(&c, h)))
        .unwrap_or(false)
}

/// Exact time maps of `V = κ/r + λ/r²`.
pub fn levi_civita_closed(kappa: f64, lambda: f64, h: f64, l: f64) -> Result<TimeMapValues> {
    let a = l * l - 2.0 * lambda;
    let w0 = kappa * kappa / (2.0 * a);
    if !(a > 0.0 && h > -w0 && h < 0.0) {
        return Err(OrbitaError::Inadmissible { h, lo: -w0, hi: 0.0 });
    }
    let mh = -h;
    let t = PI * kappa / (SQRT_2 * mh.powf(1.5));
    let theta = 2.0 * PI * l / a.sqrt();
    Ok(TimeMapValues::assemble(
        h,
        l,
        t,
        theta / l,
        3.0 * PI * kappa / (2.0 * SQRT_2 * mh.powf(2.5)),
        0.0,
        0.0,
        -4.0 * PI * lambda / a.powf(1.5),
    ))
}

/// Closed-form relativistic Kepler maps; `h` is the total energy including the rest term `c²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativisticKepler {
    pub t_rel: f64,
    pub theta_rel: f64,
    pub dt_dh: f64,
    pub dtheta_dl: f64,
    pub d_rel: f64,
    pub nondegenerate: bool,
}

pub fn relativistic_kepler(kappa: f64, c: f64, h: f64, l: f64) -> Result<RelativisticKepler> {
    if !(kappa > 0.0 && c > 0.0 && l > 0.0) {
        return Err(OrbitaError::Parameter("kappa, c and L must be positive".into()));
    }
    let c2 = c * c;
    if !(c2 * l * l > kappa * kappa) {
        return Err(OrbitaError::Parameter("need c²L² > κ²".into()));
    }
    if !(h.abs() < c2) {
        return Err(OrbitaError::Parameter("need |H| < c²".into()));
    }
    let gap = (c2 - h) * (c2 + h);
    let t_rel = 2.0 * PI * kappa * c.powi(3) / gap.powf(1.5);
    let dt_dh = 6.0 * PI * kappa * c.powi(3) * h / gap.powf(2.5);
    let q = 1.0 - kappa * kappa / (c2 * l * l);
    let theta_rel = 2.0 * PI / q.sqrt();
    let dtheta_dl = -2.0 * PI * kappa * kappa / (c2 * l.powi(3) * q.powf(1.5));
    let d_rel = dt_dh * dtheta_dl;
    Ok(RelativisticKepler {
        t_rel,
        theta_rel,
        dt_dh,
        dtheta_dl,
        d_rel,
        nondegenerate: d_rel != 0.0,
    })
}

/// Both sides of the homogeneous (or logarithmic) scaling identities at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub h_reduced: f64,
    pub t: (f64, f64),
    pub p: (f64, f64),
    pub dt_dl: (f64, f64),
    pub dtheta_dl: (f64, f64),
    pub d: (f64, f64),
}

impl ScalingCheck {
    /// Largest relative mismatch among the five identities.
    pub fn worst_relative_error(&self) -> f64 {
        [self.t, self.p, self.dt_dl, self.dtheta_dl, self.d]
            .iter()
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Reduced energy at `L = 1`: `H·L^{2α/(2−α)}` (homogeneous) or `H − κ log L` (logarithmic).
pub fn scaling_reduce(potential: &RadialPotential, h: f64, l: f64) -> Result<f64> {
    match *potential.spec() {
        PotentialSpec::Homogeneous { alpha, .. } => Ok(h * l.powf(2.0 * alpha / (2.0 - alpha))),
        PotentialSpec::Logarithmic { kappa } => Ok(h - kappa * l.ln()),
        _ => Err(OrbitaError::Parameter("scaling applies to homogeneous or logarithmic potentials".into())),
    }
}

/// Evaluates both sides of the scaling identities and the derivative relations.
pub fn scaling_identities(potential: &RadialPotential, h: f64, l: f64) -> Result<ScalingCheck> {
    let hr = scaling_reduce(potential, h, l)?;
    let here = nondegeneracy(potential, h, l)?;
    let unit = TimeMaps::new(potential, 1.0)?;
    let t1 = unit.period(hr)?;
    let p1 = unit.apsidal_angle(hr)?;
    let v = here;
    match *potential.spec() {
        PotentialSpec::Homogeneous { alpha, .. } => {
            let a = alpha;
            Ok(ScalingCheck {
                h_reduced: hr,
                t: (v.T, l.powf((2.0 + a) / (2.0 - a)) * t1),
                p: (v.P, p1 / l),
                dt_dl: (v.dT_dL, ((2.0 + a) * v.T + 2.0 * a * h * v.dT_dH) / (l * (2.0 - a))),
                dtheta_dl: (v.dTheta_dL, 2.0 * a / (2.0 - a) * h / l * v.dTheta_dH),
                d: (v.D, -(2.0 + a) / (2.0 - a) / l * v.T * v.dTheta_dH),
            })
        }
        PotentialSpec::Logarithmic { kappa } => {
            Ok(ScalingCheck {
                h_reduced: hr,
                t: (v.T, l * t1),
                p: (v.P, p1 / l),
                dt_dl: (v.dT_dL, (v.T - kappa * v.dT_dH) / l),
                dtheta_dl: (v.dTheta_dL, -kappa * v.dTheta_dH / l),
                d: (v.D, -v.T * v.dTheta_dH / l),
            })
        }
        _ => unreachable!("checked by scaling_reduce"),
    }
}

/// Expected sign of a quantity: −1, 0 or +1.
pub type Sign = i8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignTriple {
    pub dtheta_dh: Sign,
    pub dtheta_dl: Sign,
    pub d: Sign,
}

/// Signs of `(∂_H Θ, ∂_L Θ, D)` for `V = κ/(α r^α)`.
///
/// The sign of `∂_L Θ` follows from `∂_L Θ = (2α/(2−α))(H/L) ∂_H Θ` using the actual
/// sign of the admissible energies, which are negative for `α > 0` and positive for `α < 0`.
pub fn sign_table(alpha: f64) -> Result<SignTriple> {
    if !(alpha < 2.0) || [-2.0, 0.0, 1.0].contains(&alpha) {
        return Err(OrbitaError::Parameter(format!("no strict sign table for alpha = {alpha}")));
    }
    let dtheta_dh: Sign = if alpha < -2.0 || alpha > 1.0 { 1 } else { -1 };
    let energy_sign: Sign = if alpha > 0.0 { -1 } else { 1 };
    let alpha_sign: Sign = if alpha > 0.0 { 1 } else { -1 };
    let d: Sign = if alpha < 1.0 { 1 } else { -1 };
    Ok(SignTriple {
        dtheta_dh,
        dtheta_dl: alpha_sign * energy_sign * dtheta_dh,
        d,
    })
}

pub fn sign_of(x: f64) -> Sign {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Outcome of one sampled sign condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub passed: bool,
    /// Smallest normalized value over the samples; positive means the condition holds.
    pub worst_margin: f64,
    pub samples: usize,
}

impl ConditionCheck {
    fn from_margins(margins: impl IntoIterator<Item = f64>) -> Self {
        let mut worst = f64::INFINITY;
        let mut samples = 0;
        for m in margins {
            worst = worst.min(m);
            samples += 1;
        }
        Self {
            passed: worst > 0.0,
            worst_margin: worst,
            samples,
        }
    }
}

/// Sufficient conditions for `∂_H T > 0` sampled on the radial well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub l: f64,
    /// `5W‴² − 3W″W⁗ > 0` on `(s₀, s*)`.
    pub schaaf_curvature: ConditionCheck,
    /// `W′W‴ < 0` at the inflection points of `W` beyond the center (vacuous when there are none).
    pub schaaf_inflection: ConditionCheck,
    /// `6ΩΩ″² − 3Ω′²Ω″ − 2ΩΩ′Ω‴ > 0` on both sides of the center.
    pub chicone: ConditionCheck,
}

impl MonotonicityReport {
    pub fn schaaf_passed(&self) -> bool {
        self.schaaf_curvature.passed && self.schaaf_inflection.passed
    }
}

fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (1..=n).map(|i| (la + (lb - la) * i as f64 / (n + 1) as f64).exp()).collect()
}

/// Samples the Schaaf and Chicone conditions for the radial oscillator at angular momentum `l`.
pub fn monotonicity_certificate(potential: &RadialPotential, l: f64) -> Result<MonotonicityReport> {
    const N: usize = 200;
    let osc = EffectiveOscillator::radial(potential, l)?;
    let c = osc.find_center()?;
    let upper = if c.branch_hi.is_finite() { c.branch_hi } else { c.s0 * 1e6 };
    let lower = if c.branch_lo > 0.0 { c.branch_lo } else { c.s0 * 1e-6 };
    let right = log_grid(c.s0, upper, N);
    let w = |s: f64, n: usize| osc.w_derivative(s, n);

    let schaaf_curvature = ConditionCheck::from_margins(right.iter().map(|&s| {
        let (w2, w3, w4) = (w(s, 2), w(s, 3), w(s, 4));
        let a = 5.0 * w3 * w3;
        let b = 3.0 * w2 * w4;
        (a - b) / (a + b.abs()).max(f64::MIN_POSITIVE)
    }));

    let mut inflections = Vec::new();
    for pair in right.windows(2) {
        if w(pair[0], 2).signum() != w(pair[1], 2).signum() {
            inflections.push(crate::roots::bisect(|s| w(s, 2), pair[0], pair[1], 200));
        }
    }
    let schaaf_inflection = if inflections.is_empty() {
        ConditionCheck {
            passed: true,
            worst_margin: f64::INFINITY,
            samples: 0,
        }
    } else {
        ConditionCheck::from_margins(inflections.iter().map(|&s| -(w(s, 1) * w(s, 3)).signum()))
    };

    let left = log_grid(lower, c.s0, N);
    let chicone = ConditionCheck::from_margins(left.iter().chain(right.iter()).map(|&s| {
        let o = osc.omega_derivatives(&c, s);
        let terms = [
            6.0 * o[0] * o[2] * o[2],
            -3.0 * o[1] * o[1] * o[2],
            -2.0 * o[0] * o[1] * o[3],
        ];
        let size: f64 = terms.iter().map(|x| x.abs()).sum();
        terms.iter().sum::<f64>() / size.max(f64::MIN_POSITIVE)
    }));

    Ok(MonotonicityReport {
        l,
        schaaf_curvature,
        schaaf_inflection,
        chicone,
    })
}

/// Circular limits of the Lennard-Jones time maps and their signs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LennardJonesLimits {
    pub l: f64,
    pub r0: f64,
    pub radial: PeriodData,
    pub angle: PeriodData,
    pub d: f64,
    /// Signs of `(∂_H T, ∂_L T, ∂_H Θ, ∂_L Θ, D)` in the circular limit.
    pub signs: [Sign; 5],
    /// `Σ₀` of the radial oscillator from the center derivatives.
    pub sigma0: f64,
    /// The same quantity from its closed polynomial form in `r₀`.
    pub sigma0_closed: f64,
    /// `x = σ⁶u₀⁶` and the cubic `3850x³ − 1905x² + 192x − 20` governing the sign of `lim ∂_L Θ`.
    pub x: f64,
    pub cubic: f64,
    /// Angular momentum at which the cubic vanishes.
    pub l_threshold: f64,
}

/// Largest admissible angular momentum of the Lennard-Jones well, `L² < (1/5)^{2/3}·(72/5)·ςσ²`.
pub fn lennard_jones_max_l(varsigma: f64, sigma: f64) -> f64 {
    (0.2f64.powf(2.0 / 3.0) * 72.0 / 5.0 * varsigma * sigma * sigma).sqrt()
}

fn lj_cubic(x: f64) -> f64 {
    ((3850.0 * x - 1905.0) * x + 192.0) * x - 20.0
}

/// Circular-limit signs for `V = 4ς(σ⁶/r⁶ − σ¹²/r¹²)` at angular momentum `l`.
pub fn lj_circular_sign(varsigma: f64, sigma: f64, l: f64) -> Result<LennardJonesLimits> {
    let potential = RadialPotential::lennard_jones(varsigma, sigma)?;
    let maps = TimeMaps::new(&potential, l)?;
    let (radial, angle) = maps.circular_limits();
    let d = radial.dt_dh * angle.dt_dl - radial.dt_dl * angle.dt_dh;
    let c = maps.radial().circular();
    let r0 = c.s0;
    let s6 = sigma.powi(6);
    let r6 = r0.powi(6);
    let sigma0_closed = 4096.0 * 9.0 * varsigma * varsigma * s6 * s6 / r0.powi(30)
        * (68.0 * r6 * r6 - 920.0 * s6 * r6 + 4025.0 * s6 * s6);
    let x = s6 / r6;
    let k0 = crate::roots::bisect(lj_cubic, 0.2, 0.5, 200);
    let u0 = k0.powf(1.0 / 6.0) / sigma;
    let l_threshold = (24.0 * varsigma * s6 * u0.powi(4) * (1.0 - 2.0 * k0)).sqrt();
    Ok(LennardJonesLimits {
        l,
        r0,
        radial,
        angle,
        d,
        signs: [
            sign_of(radial.dt_dh),
            sign_of(radial.dt_dl),
            sign_of(angle.dt_dh),
            sign_of(angle.dt_dl),
            sign_of(d),
        ],
        sigma0: c.sigma0,
        sigma0_closed,
        x,
        cubic: lj_cubic(x),
        l_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn levi_civita_period_and_angle() {
        let p = RadialPotential::levi_civita(1.0, 0.1).unwrap();
        let v = nondegeneracy(&p, -0.5, 1.0).unwrap();
        let c = levi_civita_closed(1.0, 0.1, -0.5, 1.0).unwrap();
        assert!(rel(v.T, 2.0 * PI) < 1e-12, "{}", v.T);
        assert!(rel(v.Theta, 2.0 * PI / 0.8f64.sqrt()) < 1e-12);
        assert!(rel(v.dT_dH, c.dT_dH) < 1e-10, "{} {}", v.dT_dH, c.dT_dH);
        assert!(v.dT_dL.abs() < 1e-9, "{}", v.dT_dL);
        assert!(rel(v.dTheta_dL, c.dTheta_dL) < 1e-10);
        assert!(v.dTheta_dH.abs() < 1e-9);
        assert!(rel(v.D, c.D) < 1e-9);
        assert!((c.D + 33.10).abs() < 0.01, "{}", c.D);
    }

    #[test]
    fn kepler_period() {
        let p = RadialPotential::homogeneous(1.0, 1.0).unwrap();
        let t = period(&p, -0.4, 1.0).unwrap();
        assert!(rel(t, PI / (SQRT_2 * 0.4f64.powf(1.5))) < 1e-12);
        assert!((apsidal_angle(&p, -0.4, 1.0).unwrap() - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn harmonic_maps() {
        let p = RadialPotential::homogeneous(1.0, -2.0).unwrap();
        assert!(rel(period(&p, 1.5, 1.0).unwrap(), PI) < 1e-12);
        let m = RegularizedMap::new(EffectiveOscillator::radial(&p, 1.0).unwrap()).unwrap();
        assert!(rel(m.circular_limits().t, PI) < 1e-14);
        assert!((apsidal_angle(&p, 3.0, 1.0).unwrap() - PI).abs() < 1e-10);
    }

    #[test]
    fn center_values_of_h() {
        let p = RadialPotential::lennard_jones(1.0, 1.0).unwrap();
        for k in [-1, 1] {
            let m = RegularizedMap::new(EffectiveOscillator::new(&p, 0.5, k).unwrap()).unwrap();
            let c = m.circular().clone();
            let hv = m.h_values(c.s0);
            let o2 = c.omega2;
            assert!(rel(hv.h1, (o2 / 2.0).sqrt()) < 1e-12);
            assert!(rel(hv.h2, c.omega3 / (3.0 * SQRT_2 * o2.sqrt())) < 1e-10);
            let h3 = (3.0 * o2 * c.omega4 - c.omega3 * c.omega3) / (12.0 * SQRT_2 * o2.powf(1.5));
            assert!(rel(hv.h3, h3) < 1e-9);
            let kf = k as f64;
            let dlh = SQRT_2 * kf * 0.5 * c.s0.powf(2.0 * kf - 1.0) / o2.sqrt();
            assert!(rel(hv.dl_h, dlh) < 1e-12);
        }
    }

    #[test]
    fn series_and_direct_h_agree_at_switch() {
        let p = RadialPotential::homogeneous(1.0, 0.5).unwrap();
        let m = RegularizedMap::new(EffectiveOscillator::radial(&p, 1.0).unwrap()).unwrap();
        let s0 = m.circular().s0;
        for side in [-1.0, 1.0] {
            let a = m.h_values(s0 * (1.0 + side * SERIES_RADIUS * (1.0 - 1e-12)));
            let b = m.h_values(s0 * (1.0 + side * SERIES_RADIUS * (1.0 + 1e-12)));
            for (x, y) in [(a.h, b.h), (a.h1, b.h1), (a.h2, b.h2), (a.h3, b.h3), (a.dl_h, b.dl_h), (a.dl_h1, b.dl_h1)] {
                assert!((x - y).abs() < 1e-10 * x.abs().max(1.0), "{x} {y}");
            }
        }
    }

    #[test]
    fn relativistic_formulas() {
        let r = relativistic_kepler(1.0, 10.0, -0.5, 1.0).unwrap();
        assert!(rel(r.t_rel, 2000.0 * PI / (1e4f64 - 0.25).powf(1.5)) < 1e-14);
        assert!(rel(r.theta_rel, 2.0 * PI / 0.99f64.sqrt()) < 1e-15);
        assert!(r.nondegenerate);
    }

    #[test]
    fn sign_table_examples() {
        assert_eq!(sign_table(0.5).unwrap(), SignTriple { dtheta_dh: -1, dtheta_dl: 1, d: 1 });
        assert_eq!(sign_table(1.5).unwrap(), SignTriple { dtheta_dh: 1, dtheta_dl: -1, d: -1 });
        assert!(sign_table(1.0).is_err());
    }

    #[test]
    fn schaaf_holds_for_homogeneous() {
        for alpha in [0.5, 1.9] {
            let p = RadialPotential::homogeneous(1.0, alpha).unwrap();
            let r = monotonicity_certificate(&p, 1.0).unwrap();
            assert!(r.schaaf_passed(), "{alpha}: {r:?}");
            assert!(r.chicone.passed, "{alpha}: {r:?}");
        }
        let harmonic = RadialPotential::homogeneous(1.0, -2.0).unwrap();
        let r = monotonicity_certificate(&harmonic, 1.0).unwrap();
        assert_eq!(r.schaaf_curvature.samples, 200);
    }

    #[test]
    fn lennard_jones_limits_at_small_l() {
        let r = lj_circular_sign(1.0, 1.0, 0.5).unwrap();
        assert_eq!(&r.signs[..3], &[1, -1, 1]);
        assert!(r.signs[3] >= 0 && r.d > 0.0, "{r:?}");
        assert!(rel(r.sigma0, r.sigma0_closed) < 1e-8, "{} {}", r.sigma0, r.sigma0_closed);
        assert!(r.cubic > 0.0 && r.l_threshold > 0.5);
        assert!(r.l_threshold < lennard_jones_max_l(1.0, 1.0));
    }
}
