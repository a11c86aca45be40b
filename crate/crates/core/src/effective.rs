//! The unified effective oscillator `W(s;L) = ½L²s^{2k} − 𝒱(s)`.
//!
//! With `k = −1` the variable is the radius and `𝒱 = V`; with `k = +1` the variable
//! is the inverse radius `u = 1/r` and `𝒱(u) = V(1/u)`.

use serde::{Deserialize, Serialize};

use crate::error::{OrbitaError, Result};
use crate::potentials::{PowerSum, PowerTerm, RadialPotential};
use crate::roots::{bisect, safe_newton};

/// Relative distance `|s − s0|/s0` below which `Ω` is evaluated from its Taylor series.
pub(crate) const SERIES_RADIUS: f64 = 0.25;
const SERIES_TERMS: usize = 120;

/// Options for locating the center of the well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterConfig {
    pub grid_points: usize,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub max_iter: usize,
}

impl Default for CenterConfig {
    fn default() -> Self {
        Self {
            grid_points: 256,
            grid_lo: 1e-6,
            grid_hi: 1e6,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveOscillator {
    k: i32,
    l: f64,
    base: RadialPotential,
    w: PowerSum,
    domain: (f64, f64),
}

/// Center data of the well together with its energy window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircularData {
    pub s0: f64,
    pub omega0: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub omega4: f64,
    pub sigma0: f64,
    pub d_omega2_dl: f64,
    pub ds0_dl: f64,
    pub domega0_dl: f64,
    /// Left end of the monotone branch: a local maximum of `W` or the domain end.
    pub branch_lo: f64,
    /// Right end of the monotone branch.
    pub branch_hi: f64,
    /// Upper end `H₀` of the admissible energy window.
    pub h0: f64,
    #[serde(skip)]
    pub(crate) series: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPoints {
    pub s_minus: f64,
    pub s_plus: f64,
}

impl EffectiveOscillator {
    pub fn new(base: &RadialPotential, l: f64, k: i32) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(OrbitaError::Parameter(format!("L must be positive, got {l}")));
        }
        if k != 1 && k != -1 {
            return Err(OrbitaError::Parameter(format!("k must be -1 or +1, got {k}")));
        }
        let kf = k as f64;
        let sum = base.power_sum();
        let mut terms = vec![PowerTerm {
            coefficient: 0.5 * l * l,
            exponent: 2.0 * kf,
        }];
        terms.extend(sum.terms.iter().map(|t| PowerTerm {
            coefficient: -t.coefficient,
            exponent: -kf * t.exponent,
        }));
        let log = kf * sum.log_coefficient;
        let (lo, hi) = base.domain();
        let domain = if k == -1 {
            (lo, hi)
        } else {
            (if hi.is_infinite() { 0.0 } else { 1.0 / hi }, if lo == 0.0 { f64::INFINITY } else { 1.0 / lo })
        };
        Ok(Self {
            k,
            l,
            base: base.clone(),
            w: PowerSum::new(terms, log),
            domain,
        })
    }

    /// Radial oscillator (`k = −1`).
    pub fn radial(base: &RadialPotential, l: f64) -> Result<Self> {
        Self::new(base, l, -1)
    }

    /// Clairaut oscillator in `u = 1/r` (`k = +1`).
    pub fn clairaut(base: &RadialPotential, l: f64) -> Result<Self> {
        Self::new(base, l, 1)
    }

    pub fn k(&self) -> i32 {
        self.k
    }

    pub fn angular_momentum(&self) -> f64 {
        self.l
    }

    pub fn base(&self) -> &RadialPotential {
        &self.base
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn w(&self, s: f64) -> f64 {
        self.w.value(s)
    }

    pub fn w_derivative(&self, s: f64, n: usize) -> f64 {
        self.w.derivative(s, n)
    }

    /// `∂_L W(s;L) = L s^{2k}`.
    pub fn dw_dl(&self, s: f64) -> f64 {
        self.l * s.powi(2 * self.k)
    }

    fn scan_grid(&self, cfg: &CenterConfig) -> Vec<f64> {
        let lo = cfg.grid_lo.max(self.domain.0 * (1.0 + 1e-9));
        let hi = cfg.grid_hi.min(if self.domain.1.is_finite() {
            self.domain.1 * (1.0 - 1e-9)
        } else {
            f64::INFINITY
        });
        let n = cfg.grid_points.max(3);
        let (a, b) = (lo.ln(), hi.ln());
        (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }

    fn refine_critical(&self, lo: f64, hi: f64, max_iter: usize) -> Result<f64> {
        let coarse = bisect(|s| self.w.derivative(s, 1), lo, hi, 60);
        let a = coarse * (1.0 - 1e-6);
        let b = coarse * (1.0 + 1e-6);
        let (a, b) = (a.max(lo), b.min(hi));
        safe_newton(
            |s| (self.w.derivative(s, 1), self.w.derivative(s, 2)),
            a,
            b,
            Some(coarse),
            max_iter,
        )
        .or(Ok(coarse))
    }

    pub fn find_center(&self) -> Result<CircularData> {
        self.find_center_with(&CenterConfig::default())
    }

    /// Locates the strict local minimum of `W(·;L)` and the adjacent branch ends.
    pub fn find_center_with(&self, cfg: &CenterConfig) -> Result<CircularData> {
        let grid = self.scan_grid(cfg);
        let d: Vec<f64> = grid.iter().map(|&s| self.w.derivative(s, 1)).collect();
        let mut minima = Vec::new();
        let mut maxima = Vec::new();
        for i in 0..grid.len() - 1 {
            if d[i] < 0.0 && d[i + 1] >= 0.0 {
                minima.push(i);
            } else if d[i] > 0.0 && d[i + 1] <= 0.0 {
                maxima.push(i);
            }
        }
        let Some(&imin) = minima.first() else {
            return Err(OrbitaError::NoMinimum(self.l));
        };
        let s0 = self.refine_critical(grid[imin], grid[imin + 1], cfg.max_iter)?;
        let branch_lo = match maxima.iter().rev().find(|&&i| i < imin) {
            Some(&i) => self.refine_critical(grid[i], grid[i + 1], cfg.max_iter)?,
            None => self.domain.0,
        };
        let branch_hi = match maxima.iter().find(|&&i| i > imin) {
            Some(&i) => self.refine_critical(grid[i], grid[i + 1], cfg.max_iter)?,
            None => self.domain.1,
        };
        let h0 = self.w.limit_at(branch_lo).min(self.w.limit_at(branch_hi));

        let w0 = self.w.value(s0);
        let omega2 = self.w.derivative(s0, 2);
        if !(omega2 > 0.0) {
            return Err(OrbitaError::DegenerateCenter(omega2));
        }
        let omega3 = self.w.derivative(s0, 3);
        let omega4 = self.w.derivative(s0, 4);
        let k = self.k as f64;
        let l = self.l;
        let ds0_dl = -2.0 * k * l * s0.powf(2.0 * k - 1.0) / omega2;
        let d_omega2_dl = omega3 * ds0_dl + 2.0 * k * (2.0 * k - 1.0) * l * s0.powf(2.0 * k - 2.0);
        let mut series = self.w.taylor_in_relative(s0, SERIES_TERMS);
        series[0] = 0.0;
        series[1] = 0.0;
        Ok(CircularData {
            s0,
            omega0: -w0,
            omega2,
            omega3,
            omega4,
            sigma0: 5.0 * omega3 * omega3 - 3.0 * omega2 * omega4,
            d_omega2_dl,
            ds0_dl,
            domega0_dl: -l * s0.powi(2 * self.k),
            branch_lo,
            branch_hi,
            h0,
            series,
        })
    }

    /// `−ω₀ < H < H₀`.
    pub fn admissible(&self, circ: &CircularData, h: f64) -> bool {
        h > -circ.omega0 && h < circ.h0
    }

    /// `Ω(s) = W(s) + ω₀` and its first three derivatives.
    pub fn omega_derivatives(&self, circ: &CircularData, s: f64) -> [f64; 4] {
        let t = (s - circ.s0) / circ.s0;
        if t.abs() <= SERIES_RADIUS {
            let g = series_g(&circ.series, t);
            // Ω = t² g(t); derivatives with respect to s carry 1/s0 per order.
            let om = t * t * g[0];
            let d1 = 2.0 * t * g[0] + t * t * g[1];
            let d2 = 2.0 * g[0] + 4.0 * t * g[1] + t * t * g[2];
            let d3 = 6.0 * g[1] + 6.0 * t * g[2] + t * t * g[3];
            let inv = 1.0 / circ.s0;
            [om, d1 * inv, d2 * inv * inv, d3 * inv * inv * inv]
        } else {
            [
                self.w.value(s) + circ.omega0,
                self.w.derivative(s, 1),
                self.w.derivative(s, 2),
                self.w.derivative(s, 3),
            ]
        }
    }

    /// Solutions of `W(s;L) = H` on either side of the center.
    pub fn turning_points(&self, circ: &CircularData, h: f64) -> Result<TurningPoints> {
        if !self.admissible(circ, h) {
            return Err(OrbitaError::Inadmissible {
                h,
                lo: -circ.omega0,
                hi: circ.h0,
            });
        }
        let e = h + circ.omega0;
        let f = |s: f64| {
            let o = self.omega_derivatives(circ, s);
            if ((s - circ.s0) / circ.s0).abs() <= SERIES_RADIUS {
                (o[0] - e, o[1])
            } else {
                (self.w.value(s) - h, o[1])
            }
        };
        let hi_edge = self.outer_bracket(circ, h, true);
        let lo_edge = self.outer_bracket(circ, h, false);
        let s_plus = safe_newton(f, circ.s0, hi_edge, None, 400)?;
        let s_minus = safe_newton(f, lo_edge, circ.s0, None, 400)?;
        Ok(TurningPoints { s_minus, s_plus })
    }

    /// A finite point beyond the turning point where `W > H`.
    pub(crate) fn outer_bracket(&self, circ: &CircularData, h: f64, upper: bool) -> f64 {
        let e = h + circ.omega0;
        let above = |s: f64| {
            if ((s - circ.s0) / circ.s0).abs() <= SERIES_RADIUS {
                self.omega_derivatives(circ, s)[0] > e
            } else {
                self.w.value(s) > h
            }
        };
        let edge = if upper { circ.branch_hi } else { circ.branch_lo };
        if edge > 0.0 && edge.is_finite() && above(edge) {
            return edge;
        }
        let factor: f64 = if upper { 2.0 } else { 0.5 };
        let mut s = circ.s0;
        for _ in 0..2000 {
            let next = s * factor;
            let beyond = if upper { next >= edge } else { next <= edge };
            s = if beyond && edge > 0.0 && edge.is_finite() {
                (s * edge).sqrt()
            } else {
                next
            };
            if above(s) {
                return s;
            }
        }
        s
    }
}

/// `g(t) = Σ A_{j+2} t^j` and its first three derivatives in `t`.
pub(crate) fn series_g(a: &[f64], t: f64) -> [f64; 4] {
    let mut g = [0.0; 4];
    let n = a.len();
    let scale = a[2].abs();
    let at = t.abs();
    let mut m = n - 2;
    let mut tp = 1.0;
    for j in 0..n - 2 {
        let next = a.get(j + 3).map_or(0.0, |x| x.abs());
        if j > 8 && tp * a[j + 2].abs().max(next) < 1e-18 * scale {
            m = j;
            break;
        }
        tp *= at;
    }
    for j in (0..m).rev() {
        let c = a[j + 2];
        let jf = j as f64;
        g[0] = g[0] * t + c;
        if j >= 1 {
            g[1] = g[1] * t + jf * c;
        }
        if j >= 2 {
            g[2] = g[2] * t + jf * (jf - 1.0) * c;
        }
        if j >= 3 {
            g[3] = g[3] * t + jf * (jf - 1.0) * (jf - 2.0) * c;
        }
    }
    g
}
