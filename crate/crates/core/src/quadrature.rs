//! Adaptive Gauss–Legendre quadrature for small vector-valued integrands.

use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{OrbitaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    /// Number of Gauss–Legendre nodes per panel.
    pub order: usize,
    /// Panel acceptance threshold relative to `∫|f|`.
    pub rel_tol: f64,
    /// Largest unresolved relative error tolerated before reporting failure.
    pub fail_tol: f64,
    pub max_depth: usize,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            order: 64,
            rel_tol: 1e-12,
            fail_tol: 1e-8,
            max_depth: 48,
            max_panels: 20_000,
        }
    }
}

fn rule(order: usize) -> Vec<(f64, f64)> {
    static R64: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    let build = |n: usize| {
        let n = std::num::NonZeroUsize::new(n.max(2)).expect("nonzero order");
        GaussLegendre::new(n).as_node_weight_pairs().to_vec()
    };
    if order == 64 {
        R64.get_or_init(|| build(64)).clone()
    } else {
        build(order)
    }
}

type Panel<const N: usize> = ([f64; N], [f64; N]);

/// Integrand values together with a magnitude per component that sets the error scale.
/// The magnitude matters for integrands that cancel to zero analytically.
pub type Sample<const N: usize> = ([f64; N], [f64; N]);

fn panel<const N: usize, F>(rule: &[(f64, f64)], f: &mut F, a: f64, b: f64) -> Result<Panel<N>>
where
    F: FnMut(f64) -> Result<Sample<N>>,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = [0.0; N];
    let mut abs = [0.0; N];
    for &(x, w) in rule {
        let (v, m) = f(mid + half * x)?;
        for i in 0..N {
            sum[i] += w * v[i];
            abs[i] += w * m[i].abs().max(v[i].abs());
        }
    }
    for i in 0..N {
        sum[i] *= half;
        abs[i] *= half.abs();
    }
    Ok((sum, abs))
}

/// `∫_a^b f` componentwise for an integrand without cancellation.
pub fn integrate<const N: usize, F>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<[f64; N]>
where
    F: FnMut(f64) -> Result<[f64; N]>,
{
    integrate_scaled(
        |x| {
            let v = f(x)?;
            Ok((v, v))
        },
        a,
        b,
        cfg,
    )
}

/// `∫_a^b f` componentwise, bisecting panels until a panel and its two halves agree
/// relative to `∫ magnitude`.
pub fn integrate_scaled<const N: usize, F>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<[f64; N]>
where
    F: FnMut(f64) -> Result<Sample<N>>,
{
    let rule = rule(cfg.order);
    let (whole, scale) = panel(&rule, &mut f, a, b)?;
    let first = adaptive(&rule, &mut f, a, b, whole, scale, cfg)?;
    let grown = (0..N).any(|i| first.magnitude[i] > 10.0 * scale[i]);
    let pass = if grown {
        adaptive(&rule, &mut f, a, b, whole, first.magnitude, cfg)?
    } else {
        first
    };
    let worst = (0..N)
        .map(|i| {
            if pass.magnitude[i] > 0.0 {
                pass.unresolved[i] / pass.magnitude[i]
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    if worst > cfg.fail_tol {
        return Err(OrbitaError::Quadrature(worst));
    }
    Ok(pass.total)
}

struct Pass<const N: usize> {
    total: [f64; N],
    magnitude: [f64; N],
    unresolved: [f64; N],
}

fn adaptive<const N: usize, F>(
    rule: &[(f64, f64)],
    f: &mut F,
    a: f64,
    b: f64,
    whole: [f64; N],
    scale: [f64; N],
    cfg: &QuadConfig,
) -> Result<Pass<N>>
where
    F: FnMut(f64) -> Result<Sample<N>>,
{
    let mut out = Pass {
        total: [0.0; N],
        magnitude: [0.0; N],
        unresolved: [0.0; N],
    };
    let mut stack = vec![(a, b, whole, 0usize)];
    let mut panels = 0usize;
    while let Some((lo, hi, coarse, depth)) = stack.pop() {
        panels += 1;
        let mid = 0.5 * (lo + hi);
        let (left, left_mag) = panel(rule, f, lo, mid)?;
        let (right, right_mag) = panel(rule, f, mid, hi)?;
        let mut fine = [0.0; N];
        let mut err = [0.0; N];
        let mut ok = true;
        for i in 0..N {
            fine[i] = left[i] + right[i];
            err[i] = (fine[i] - coarse[i]).abs();
            if err[i] > cfg.rel_tol * scale[i] + f64::MIN_POSITIVE {
                ok = false;
            }
        }
        if ok || depth >= cfg.max_depth || panels + stack.len() >= cfg.max_panels {
            for i in 0..N {
                out.total[i] += fine[i];
                out.magnitude[i] += left_mag[i] + right_mag[i];
                if !ok {
                    out.unresolved[i] += err[i];
                }
            }
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| Ok([x.powi(7), 1.0]), -1.0, 2.0, &QuadConfig::default()).unwrap();
        assert!((v[0] - (256.0 - 1.0) / 8.0).abs() < 1e-12);
        assert!((v[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn weak_singularity_resolved_by_bisection() {
        let v = integrate(|x: f64| Ok([x.abs().powf(-1.0 / 3.0)]), -1.0, 1.0, &QuadConfig::default());
        // Node never hits 0; the endpoint-free singularity is resolved adaptively.
        let v = v.unwrap();
        assert!((v[0] - 3.0).abs() < 1e-7, "{}", v[0]);
    }

    #[test]
    fn smooth_peak() {
        let b: f64 = 1e-6;
        let v = integrate(|x: f64| Ok([1.0 / (x * x + b * b)]), -1.0, 1.0, &QuadConfig::default()).unwrap();
        let exact = 2.0 * (1.0 / b).atan() / b;
        assert!((v[0] / exact - 1.0).abs() < 1e-12);
    }
}
