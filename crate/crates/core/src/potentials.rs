//! Radial potentials in power-sum form.
//!
//! A potential is `V(r) = Σ c_i r^{p_i} + c_log·log r` on an open radial domain.
//! Every built-in family fits this shape, so all derivatives are exact.

use serde::{Deserialize, Serialize};

use crate::error::{OrbitaError, Result};

/// One `c·r^p` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coefficient: f64,
    pub exponent: f64,
}

/// Falling factorial `p (p-1) ... (p-n+1)`.
fn falling(p: f64, n: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..n {
        acc *= p - i as f64;
    }
    acc
}

/// A sum of real powers plus a logarithm, with like exponents merged.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PowerSum {
    pub terms: Vec<PowerTerm>,
    pub log_coefficient: f64,
}

impl PowerSum {
    pub fn new(raw: impl IntoIterator<Item = PowerTerm>, log_coefficient: f64) -> Self {
        let mut terms: Vec<PowerTerm> = Vec::new();
        for t in raw {
            if let Some(existing) = terms.iter_mut().find(|e| e.exponent == t.exponent) {
                existing.coefficient += t.coefficient;
            } else {
                terms.push(t);
            }
        }
        terms.retain(|t| t.coefficient != 0.0);
        terms.sort_by(|a, b| a.exponent.total_cmp(&b.exponent));
        Self {
            terms,
            log_coefficient,
        }
    }

    /// n-th derivative at `s > 0`, any order.
    pub fn derivative(&self, s: f64, n: usize) -> f64 {
        let mut acc = 0.0;
        for t in &self.terms {
            if t.exponent == 0.0 && n > 0 {
                continue;
            }
            acc += t.coefficient * falling(t.exponent, n) * s.powf(t.exponent - n as f64);
        }
        if self.log_coefficient != 0.0 {
            acc += if n == 0 {
                self.log_coefficient * s.ln()
            } else {
                let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                let fact: f64 = (1..n).map(|i| i as f64).product();
                self.log_coefficient * sign * fact * s.powi(-(n as i32))
            };
        }
        acc
    }

    pub fn value(&self, s: f64) -> f64 {
        self.derivative(s, 0)
    }

    /// Limit as `s → 0⁺`.
    pub fn limit_at_zero(&self) -> f64 {
        if let Some(t) = self.terms.first().filter(|t| t.exponent < 0.0) {
            return t.coefficient.signum() * f64::INFINITY;
        }
        if self.log_coefficient != 0.0 {
            return -self.log_coefficient.signum() * f64::INFINITY;
        }
        self.terms
            .iter()
            .filter(|t| t.exponent == 0.0)
            .map(|t| t.coefficient)
            .sum()
    }

    /// Limit as `s → ∞`.
    pub fn limit_at_infinity(&self) -> f64 {
        if let Some(t) = self.terms.last().filter(|t| t.exponent > 0.0) {
            return t.coefficient.signum() * f64::INFINITY;
        }
        if self.log_coefficient != 0.0 {
            return self.log_coefficient.signum() * f64::INFINITY;
        }
        self.terms
            .iter()
            .filter(|t| t.exponent == 0.0)
            .map(|t| t.coefficient)
            .sum()
    }

    /// Limit at a domain endpoint (0, ∞ or an interior point).
    pub fn limit_at(&self, s: f64) -> f64 {
        if s <= 0.0 {
            self.limit_at_zero()
        } else if s.is_infinite() {
            self.limit_at_infinity()
        } else {
            self.value(s)
        }
    }

    /// Coefficients `A_n` of the expansion `Σ A_n t^n` with `s = s0 (1 + t)`.
    pub fn taylor_in_relative(&self, s0: f64, count: usize) -> Vec<f64> {
        let mut out = vec![0.0; count];
        for t in &self.terms {
            let scale = t.coefficient * s0.powf(t.exponent);
            let mut b = 1.0;
            for (n, slot) in out.iter_mut().enumerate() {
                if n > 0 {
                    b *= (t.exponent - (n - 1) as f64) / n as f64;
                }
                *slot += scale * b;
                if b == 0.0 {
                    break;
                }
            }
        }
        if self.log_coefficient != 0.0 {
            out[0] += self.log_coefficient * s0.ln();
            for (n, slot) in out.iter_mut().enumerate().skip(1) {
                let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                *slot += self.log_coefficient * sign / n as f64;
            }
        }
        out
    }
}

/// Serializable description of a potential, as read from TOML or JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialSpec {
    Homogeneous {
        kappa: f64,
        alpha: f64,
    },
    Logarithmic {
        kappa: f64,
    },
    LeviCivita {
        kappa: f64,
        lambda: f64,
    },
    LennardJones {
        #[serde(alias = "epsilon")]
        varsigma: f64,
        sigma: f64,
    },
    Custom {
        terms: Vec<[f64; 2]>,
        #[serde(default)]
        log_coefficient: f64,
        #[serde(default)]
        domain: Option<[f64; 2]>,
    },
}

/// A radial potential `V` on `(r_lo, r_hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPotential {
    sum: PowerSum,
    domain: (f64, f64),
    label: String,
    spec: PotentialSpec,
}

fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(OrbitaError::Parameter(msg.into()))
    }
}

fn term(coefficient: f64, exponent: f64) -> PowerTerm {
    PowerTerm {
        coefficient,
        exponent,
    }
}

impl RadialPotential {
    /// Builds a potential from its serializable description.
    pub fn from_spec(spec: &PotentialSpec) -> Result<Self> {
        let full = (0.0, f64::INFINITY);
        let (terms, log, domain, label) = match *spec {
            PotentialSpec::Homogeneous { kappa, alpha } => {
                require(kappa > 0.0 && kappa.is_finite(), "kappa must be > 0")?;
                require(alpha.is_finite() && alpha < 2.0, "alpha must be < 2")?;
                require(alpha != 0.0, "alpha must be nonzero (use the logarithmic family)")?;
                (
                    vec![term(kappa / alpha, -alpha)],
                    0.0,
                    full,
                    format!("homogeneous(kappa={kappa}, alpha={alpha})"),
                )
            }
            PotentialSpec::Logarithmic { kappa } => {
                require(kappa > 0.0 && kappa.is_finite(), "kappa must be > 0")?;
                (vec![], -kappa, full, format!("logarithmic(kappa={kappa})"))
            }
            PotentialSpec::LeviCivita { kappa, lambda } => {
                require(kappa > 0.0 && kappa.is_finite(), "kappa must be > 0")?;
                require(lambda.is_finite(), "lambda must be finite")?;
                (
                    vec![term(kappa, -1.0), term(lambda, -2.0)],
                    0.0,
                    full,
                    format!("levi_civita(kappa={kappa}, lambda={lambda})"),
                )
            }
            PotentialSpec::LennardJones { varsigma, sigma } => {
                require(varsigma > 0.0 && varsigma.is_finite(), "varsigma must be > 0")?;
                require(sigma > 0.0 && sigma.is_finite(), "sigma must be > 0")?;
                (
                    vec![
                        term(4.0 * varsigma * sigma.powi(6), -6.0),
                        term(-4.0 * varsigma * sigma.powi(12), -12.0),
                    ],
                    0.0,
                    full,
                    format!("lennard_jones(varsigma={varsigma}, sigma={sigma})"),
                )
            }
            PotentialSpec::Custom {
                ref terms,
                log_coefficient,
                domain,
            } => {
                require(
                    terms.iter().all(|t| t[0].is_finite() && t[1].is_finite()),
                    "custom terms must be finite",
                )?;
                require(log_coefficient.is_finite(), "log_coefficient must be finite")?;
                require(
                    !terms.is_empty() || log_coefficient != 0.0,
                    "custom potential needs at least one term",
                )?;
                let d = match domain {
                    Some([lo, hi]) => (lo, hi),
                    None => full,
                };
                require(
                    d.0 >= 0.0 && d.0 < d.1 && !d.0.is_nan() && !d.1.is_nan(),
                    "domain must satisfy 0 <= r_lo < r_hi",
                )?;
                (
                    terms.iter().map(|t| term(t[0], t[1])).collect(),
                    log_coefficient,
                    d,
                    "custom".to_string(),
                )
            }
        };
        Ok(Self {
            sum: PowerSum::new(terms, log),
            domain,
            label,
            spec: spec.clone(),
        })
    }

    pub fn homogeneous(kappa: f64, alpha: f64) -> Result<Self> {
        Self::from_spec(&PotentialSpec::Homogeneous { kappa, alpha })
    }

    pub fn logarithmic(kappa: f64) -> Result<Self> {
        Self::from_spec(&PotentialSpec::Logarithmic { kappa })
    }

    pub fn levi_civita(kappa: f64, lambda: f64) -> Result<Self> {
        Self::from_spec(&PotentialSpec::LeviCivita { kappa, lambda })
    }

    pub fn lennard_jones(varsigma: f64, sigma: f64) -> Result<Self> {
        Self::from_spec(&PotentialSpec::LennardJones { varsigma, sigma })
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.sum.terms
    }

    pub fn log_coefficient(&self) -> f64 {
        self.sum.log_coefficient
    }

    /// Homogeneity degree `α` when the potential is `κ/(α r^α)`.
    pub fn homogeneous_alpha(&self) -> Option<f64> {
        match self.spec {
            PotentialSpec::Homogeneous { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    pub fn contains(&self, r: f64) -> bool {
        r > self.domain.0 && r < self.domain.1
    }

    pub fn value(&self, r: f64) -> f64 {
        self.sum.value(r)
    }

    /// n-th derivative without domain or order checks.
    pub fn derivative(&self, r: f64, n: usize) -> f64 {
        self.sum.derivative(r, n)
    }

    /// `[V(r), V'(r), …, V^{(max_order)}(r)]`.
    pub fn eval_derivatives(&self, r: f64, max_order: usize) -> Result<Vec<f64>> {
        if max_order > 4 {
            return Err(OrbitaError::Order(max_order));
        }
        if !self.contains(r) {
            return Err(OrbitaError::Domain {
                r,
                lo: self.domain.0,
                hi: self.domain.1,
            });
        }
        Ok((0..=max_order).map(|n| self.sum.derivative(r, n)).collect())
    }

    pub(crate) fn power_sum(&self) -> &PowerSum {
        &self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levi_civita_value_at_one() {
        let p = RadialPotential::levi_civita(1.0, 0.1).unwrap();
        assert!((p.value(1.0) - 1.1).abs() < 1e-15);
        assert!((p.derivative(1.0, 2) - 2.6).abs() < 1e-14);
    }

    #[test]
    fn harmonic_is_homogeneous_minus_two() {
        let p = RadialPotential::homogeneous(1.0, -2.0).unwrap();
        for r in [0.3, 1.0, 2.5] {
            assert!((p.value(r) + r * r / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn lennard_jones_value() {
        let p = RadialPotential::lennard_jones(1.0, 1.0).unwrap();
        assert_eq!(p.value(2.0), 0.0615234375);
    }

    #[test]
    fn kepler_first_derivative() {
        let p = RadialPotential::homogeneous(1.0, 1.0).unwrap();
        assert!((p.eval_derivatives(2.0, 1).unwrap()[1] + 0.25).abs() < 1e-16);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(RadialPotential::homogeneous(1.0, 2.0).is_err());
        assert!(RadialPotential::homogeneous(1.0, 0.0).is_err());
        assert!(RadialPotential::homogeneous(-1.0, 0.5).is_err());
        assert!(RadialPotential::lennard_jones(1.0, 0.0).is_err());
        let p = RadialPotential::logarithmic(1.0).unwrap();
        assert!(matches!(p.eval_derivatives(1.0, 5), Err(OrbitaError::Order(5))));
        assert!(matches!(p.eval_derivatives(-1.0, 2), Err(OrbitaError::Domain { .. })));
    }

    #[test]
    fn merges_like_exponents() {
        let s = PowerSum::new([term(1.0, -2.0), term(-1.0, -2.0), term(2.0, 1.0)], 0.0);
        assert_eq!(s.terms.len(), 1);
    }

    #[test]
    fn log_derivatives() {
        let s = PowerSum::new([], 2.0);
        assert!((s.derivative(2.0, 1) - 1.0).abs() < 1e-15);
        assert!((s.derivative(2.0, 2) + 0.5).abs() < 1e-15);
        assert!((s.derivative(2.0, 3) - 0.5).abs() < 1e-15);
        assert!((s.derivative(2.0, 4) + 0.75).abs() < 1e-15);
    }

    #[test]
    fn limits() {
        let kepler_w = PowerSum::new([term(0.5, -2.0), term(-1.0, -1.0)], 0.0);
        assert_eq!(kepler_w.limit_at_zero(), f64::INFINITY);
        assert_eq!(kepler_w.limit_at_infinity(), 0.0);
        let log_w = PowerSum::new([term(0.5, -2.0)], 1.0);
        assert_eq!(log_w.limit_at_infinity(), f64::INFINITY);
    }

    #[test]
    fn relative_taylor_reproduces_value() {
        let s = PowerSum::new([term(0.7, -1.5), term(-0.2, 2.0)], 0.3);
        let s0 = 1.7;
        let a = s.taylor_in_relative(s0, 80);
        let t: f64 = 0.15;
        let series: f64 = a.iter().enumerate().map(|(n, c)| c * t.powi(n as i32)).sum();
        assert!((series - s.value(s0 * (1.0 + t))).abs() < 1e-13);
    }

    #[test]
    fn spec_parses_from_toml_shape() {
        let spec: PotentialSpec =
            serde_json::from_str(r#"{"family":"levi_civita","kappa":1.0,"lambda":0.1}"#).unwrap();
        assert_eq!(
            spec,
            PotentialSpec::LeviCivita {
                kappa: 1.0,
                lambda: 0.1
            }
        );
    }
}
