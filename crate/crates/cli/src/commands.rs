use std::f64::consts::PI;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use orbita::continuation::{survey, ContinuationConfig, PerturbationModel};
use orbita::dynamics::{integrate, torus_pericenter_state, verify_torus, CentralField, IntegratorConfig, VerifyConfig};
use orbita::restricted3body::{candidate_tori, find_r3b_periodic, InertialField, R3BConfig, R3BSearch};
use orbita::timemap::{lj_circular_sign, monotonicity_certificate, sign_of, Sign};
use orbita::tori::find_torus;
use orbita::{PotentialSpec, RadialPotential, TimeMaps, TorusConfig, TorusSolution};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{check_range, linspace, load_run_config, read_structured, PotentialArgs, RunConfig};
use crate::output::{fmt, sink, write_json, write_trajectory};
use crate::Failure;

fn integrator(cfg: &RunConfig) -> IntegratorConfig {
    let mut ic = IntegratorConfig::default();
    if let Some(r) = cfg.tolerances.rtol {
        ic.stepper.rtol = r;
    }
    if let Some(a) = cfg.tolerances.atol {
        ic.stepper.atol = a;
    }
    ic
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    /// Run configuration (TOML or JSON)
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub l_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub l_max: Option<f64>,
    #[arg(long)]
    pub l_count: Option<usize>,
    /// Energy range; defaults to the interior of each admissible window
    #[arg(long, allow_negative_numbers = true)]
    pub h_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub h_max: Option<f64>,
    #[arg(long)]
    pub h_count: Option<usize>,
    /// CSV destination (stdout when omitted)
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

struct ScanRow {
    l_index: usize,
    h_index: usize,
    h: f64,
    l: f64,
    status: &'static str,
    values: [f64; 8],
}

pub fn scan(args: &ScanArgs) -> Result<()> {
    let cfg = load_run_config(args.config.as_deref(), "scan")?;
    let potential = args.potential.build(cfg.potential.as_ref())?;
    let grid = cfg.grid.clone().unwrap_or_default();
    let l_range = match (args.l_min, args.l_max, grid.l) {
        (Some(a), Some(b), _) => [a, b],
        (None, None, Some(r)) => r,
        _ => bail!("an L range is required: --l-min and --l-max, or grid.l"),
    };
    let l_count = args.l_count.or(grid.l_count).unwrap_or(10);
    let h_count = args.h_count.or(grid.h_count).unwrap_or(10);
    check_range("L", l_range, l_count)?;
    let h_range = match (args.h_min, args.h_max, grid.h) {
        (Some(a), Some(b), _) => Some([a, b]),
        (None, None, r) => r,
        _ => bail!("give both --h-min and --h-max"),
    };
    match h_range {
        Some(r) => check_range("H", r, h_count)?,
        None if h_count == 0 => bail!("H count must be at least 1"),
        None => {}
    }
    let ls = linspace(l_range[0], l_range[1], l_count);
    let blocks: Vec<Result<Vec<ScanRow>>> = ls
        .par_iter()
        .enumerate()
        .map(|(li, &l)| scan_column(&potential, li, l, h_range, h_count))
        .collect();
    let mut rows = Vec::with_capacity(l_count * h_count);
    for b in blocks {
        rows.extend(b?);
    }
    let out = args.output.as_deref().or(cfg.output.as_deref());
    let mut w = csv::Writer::from_writer(sink(out)?);
    w.write_record([
        "l_index", "h_index", "H", "L", "status", "T", "Theta", "P", "dT_dH", "dT_dL", "dTheta_dH", "dTheta_dL", "D",
    ])?;
    let mut admissible = 0;
    for r in &rows {
        if r.status == "ok" {
            admissible += 1;
        }
        let mut rec = vec![r.l_index.to_string(), r.h_index.to_string(), fmt(r.h), fmt(r.l), r.status.to_string()];
        rec.extend(r.values.iter().map(|&v| fmt(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    if admissible == 0 {
        return Err(Failure::new(3, "no admissible (H, L) in the grid").into());
    }
    Ok(())
}

fn scan_column(
    potential: &RadialPotential,
    li: usize,
    l: f64,
    h_range: Option<[f64; 2]>,
    h_count: usize,
) -> Result<Vec<ScanRow>> {
    let blank = [f64::NAN; 8];
    let maps = TimeMaps::new(potential, l).ok();
    let hs: Vec<f64> = match (h_range, &maps) {
        (Some(r), _) => linspace(r[0], r[1], h_count),
        (None, Some(m)) => {
            let (lo, hi) = m.energy_window();
            if !hi.is_finite() {
                bail!("energy window at L = {l} is unbounded; give --h-min and --h-max");
            }
            (1..=h_count).map(|i| lo + (hi - lo) * i as f64 / (h_count + 1) as f64).collect()
        }
        (None, None) => vec![f64::NAN; h_count],
    };
    Ok(hs
        .into_iter()
        .enumerate()
        .map(|(hi, h)| {
            let (status, values) = match &maps {
                Some(m) if m.admissible(h) => match m.values(h) {
                    Ok(v) => ("ok", [v.T, v.Theta, v.P, v.dT_dH, v.dT_dL, v.dTheta_dH, v.dTheta_dL, v.D]),
                    Err(_) => ("failed", blank),
                },
                _ => ("inadmissible", blank),
            };
            ScanRow {
                l_index: li,
                h_index: hi,
                h,
                l,
                status,
                values,
            }
        })
        .collect())
}

#[derive(Debug, Args)]
pub struct TorusArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Period of the sought orbits' family
    #[arg(long, default_value_t = 2.0 * PI)]
    pub tau: f64,
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub k: u32,
    #[arg(long, default_value_t = 1)]
    pub ell: u32,
    /// Starting energy (needed for non-homogeneous potentials)
    #[arg(long, allow_negative_numbers = true)]
    pub seed_h: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub seed_l: Option<f64>,
}

impl TorusArgs {
    fn solve(&self, cfg: &RunConfig) -> Result<TorusSolution> {
        let potential = self.potential.build(cfg.potential.as_ref())?;
        let seed = match (self.seed_h, self.seed_l, cfg.seed) {
            (Some(h), Some(l), _) => Some((h, l)),
            (None, None, s) => s.map(|s| (s[0], s[1])),
            _ => bail!("give both --seed-h and --seed-l"),
        };
        let mut tc = TorusConfig {
            ell: self.ell,
            seed,
            ..TorusConfig::default()
        };
        if let Some(t) = cfg.tolerances.newton {
            tc.tol = t;
        }
        Ok(find_torus(&potential, self.tau, self.n, self.k, &tc)?)
    }
}

#[derive(Debug, Args)]
pub struct FindTorusArgs {
    #[command(flatten)]
    pub torus: TorusArgs,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn find_torus_cmd(args: &FindTorusArgs) -> Result<()> {
    let cfg = load_run_config(args.torus.config.as_deref(), "find-torus")?;
    let torus = args.torus.solve(&cfg)?;
    write_json(args.output.as_deref().or(cfg.output.as_deref()), &torus)
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Torus JSON as written by `find-torus`
    #[arg(long)]
    pub torus: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write the orbit as CSV
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn verify(args: &VerifyArgs) -> Result<()> {
    let cfg = load_run_config(args.config.as_deref(), "verify")?;
    let stored: TorusSolution = read_structured(&args.torus)?;
    let mut vc = VerifyConfig {
        integrator: integrator(&cfg),
        ..VerifyConfig::default()
    };
    if let Some(c) = cfg.tolerances.closure {
        vc.closure_tol = c;
    }
    let fresh = stored.recompute()?;
    if !(fresh.residual() <= vc.max_residual) {
        return Err(Failure::new(
            4,
            format!(
                "stored (H, L) do not satisfy the torus conditions: residuals T {:e}, Theta {:e}",
                fresh.residual_T, fresh.residual_Theta
            ),
        )
        .into());
    }
    let report = verify_torus(&fresh, &vc)?;
    if let Some(path) = &args.trajectory {
        let p = fresh.potential()?;
        let z0 = torus_pericenter_state(&fresh)?;
        let traj = integrate(&CentralField::new(&p), &z0, fresh.orbit_period(), &vc.integrator)?;
        write_trajectory(path, &traj.rows(&p, args.samples))?;
    }
    write_json(
        args.output.as_deref().or(cfg.output.as_deref()),
        &json!({
            "residual_T": fresh.residual_T,
            "residual_Theta": fresh.residual_Theta,
            "verification": report,
        }),
    )
}

#[derive(Debug, Args)]
pub struct ContinueArgs {
    /// Torus JSON; otherwise the torus is solved from the remaining options
    #[arg(long)]
    pub torus_file: Option<PathBuf>,
    #[command(flatten)]
    pub torus: TorusArgs,
    /// Perturbation strengths, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub epsilon: Vec<f64>,
    /// Direction of the uniform drive
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [1.0, 0.0], allow_negative_numbers = true)]
    pub direction: Vec<f64>,
    #[arg(long, default_value_t = 8)]
    pub n_lambda: usize,
    #[arg(long, default_value_t = 8)]
    pub n_phi: usize,
    /// Also seed from the mirror-image torus
    #[arg(long)]
    pub reflect: bool,
    #[arg(long, default_value_t = 1.0)]
    pub max_epsilon: f64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct OrbitRecord {
    epsilon: f64,
    z0: [f64; 4],
    residual: f64,
    winding_k: i64,
    distance_to_torus: f64,
}

pub fn continue_cmd(args: &ContinueArgs) -> Result<()> {
    let cfg = load_run_config(args.torus.config.as_deref(), "continue")?;
    let torus = match &args.torus_file {
        Some(p) => read_structured::<TorusSolution>(p)?,
        None => args.torus.solve(&cfg)?,
    };
    let potential = torus.potential()?;
    let mut cc = ContinuationConfig {
        integrator: integrator(&cfg),
        reflect: args.reflect,
        max_epsilon: args.max_epsilon,
        ..ContinuationConfig::default()
    };
    if let Some(t) = cfg.tolerances.newton {
        cc.tol = t;
    }
    let mut records = Vec::new();
    let mut empty = Vec::new();
    for &eps in &args.epsilon {
        let model = PerturbationModel::uniform_drive(torus.tau, [args.direction[0], args.direction[1]], eps);
        let report = survey(&model, &potential, &torus, args.n_lambda, args.n_phi, &cc)?;
        eprintln!(
            "epsilon {eps:e}: {} seeds, {} converged, {} distinct",
            report.seeds,
            report.converged,
            report.orbits.len()
        );
        if report.orbits.is_empty() {
            empty.push(eps);
        }
        records.extend(report.orbits.iter().map(|o| OrbitRecord {
            epsilon: o.epsilon,
            z0: o.z0.to_array(),
            residual: o.residual,
            winding_k: o.winding_k,
            distance_to_torus: o.distance_to_torus,
        }));
    }
    write_json(args.output.as_deref().or(cfg.output.as_deref()), &records)?;
    if !empty.is_empty() {
        return Err(Failure::new(4, format!("no periodic orbit converged for epsilon {empty:?}")).into());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct R3bArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub m: f64,
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub k: u32,
    /// Number of subharmonic candidates
    #[arg(long, default_value_t = 2)]
    pub count: usize,
    #[arg(long, default_value_t = 4)]
    pub n_lambda: usize,
    #[arg(long, default_value_t = 4)]
    pub n_phi: usize,
    /// Directory for `orbits.json` and trajectory CSVs
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
}

pub fn r3b(args: &R3bArgs) -> Result<()> {
    let config = R3BConfig::new(args.alpha, args.m)?;
    let candidates = candidate_tori(args.alpha, args.n, args.k, args.count)?;
    let search = R3BSearch {
        n_lambda: args.n_lambda,
        n_phi: args.n_phi,
        ..R3BSearch::default()
    };
    let found: Vec<_> = candidates
        .par_iter()
        .map(|c| find_r3b_periodic(&config, c, &search))
        .collect::<std::result::Result<_, _>>()?;
    let orbits: Vec<_> = found.into_iter().flatten().collect();
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let p = config.unperturbed_potential()?;
        let model = config.model();
        for (i, o) in orbits.iter().enumerate() {
            let xt = integrate(&model.field(&p), &o.orbit.z0, model.tau, &search.continuation.integrator)?;
            write_trajectory(&dir.join(format!("orbit_{i}_x.csv")), &xt.rows(&p, args.samples))?;
            let qt = integrate(&InertialField(config), &o.q0, model.tau, &search.continuation.integrator)?;
            write_trajectory(&dir.join(format!("orbit_{i}_q.csv")), &qt.rows(&p, args.samples))?;
        }
        write_json(Some(&dir.join("orbits.json")), &orbits)?;
    }
    write_json(None, &orbits)?;
    let missing: Vec<u32> = candidates
        .iter()
        .filter(|c| !orbits.iter().any(|o| o.ell == c.ell))
        .map(|c| c.ell)
        .collect();
    if !missing.is_empty() {
        return Err(Failure::new(4, format!("no periodic orbit found near the tori with ell = {missing:?}")).into());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct LimitsArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[arg(long = "L", alias = "l")]
    pub l: f64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn limits(args: &LimitsArgs) -> Result<()> {
    let spec = args.potential.spec(None)?;
    let potential = RadialPotential::from_spec(&spec)?;
    let maps = TimeMaps::new(&potential, args.l)?;
    let (radial, angle) = maps.circular_limits();
    let d = radial.dt_dh * angle.dt_dl - radial.dt_dl * angle.dt_dh;
    let signs: [Sign; 4] = [
        sign_of(radial.dt_dh),
        sign_of(radial.dt_dl),
        sign_of(angle.dt_dh),
        sign_of(angle.dt_dl),
    ];
    let mut report = json!({
        "L": args.l,
        "H_limit": maps.energy_window().0,
        "r0": maps.radial().circular().s0,
        "T": radial.t,
        "dT_dH": radial.dt_dh,
        "dT_dL": radial.dt_dl,
        "Theta": angle.t,
        "dTheta_dH": angle.dt_dh,
        "dTheta_dL": angle.dt_dl,
        "D": d,
        "signs": signs,
        "sign_D": sign_of(d),
    });
    if let PotentialSpec::LennardJones { varsigma, sigma } = spec {
        let lj = lj_circular_sign(varsigma, sigma, args.l)?;
        report["lennard_jones"] = json!({
            "sigma0": lj.sigma0,
            "sigma0_closed": lj.sigma0_closed,
            "x": lj.x,
            "cubic": lj.cubic,
            "L_threshold": lj.l_threshold,
        });
    }
    write_json(args.output.as_deref(), &report)
}

#[derive(Debug, Args)]
pub struct PotentialInfoArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    /// Angular momentum at which to describe the circular orbit and energy window
    #[arg(long = "L", alias = "l")]
    pub l: Option<f64>,
    /// Radii at which to tabulate V and its derivatives, comma separated
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<f64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn potential_info(args: &PotentialInfoArgs) -> Result<()> {
    let spec = args.potential.spec(None)?;
    let potential = RadialPotential::from_spec(&spec)?;
    let (lo, hi) = potential.domain();
    let samples: Vec<_> = args
        .r
        .iter()
        .map(|&r| {
            potential
                .eval_derivatives(r, 3)
                .map(|d| json!({"r": r, "V": d[0], "dV": d[1], "d2V": d[2], "d3V": d[3]}))
        })
        .collect::<std::result::Result<_, _>>()?;
    let mut report = json!({
        "spec": spec,
        "label": potential.label(),
        "domain": [lo, if hi.is_finite() { json!(hi) } else { json!("inf") }],
        "terms": potential.terms().iter().map(|t| [t.coefficient, t.exponent]).collect::<Vec<_>>(),
        "log_coefficient": potential.log_coefficient(),
        "homogeneous_alpha": potential.homogeneous_alpha(),
        "samples": samples,
    });
    if let Some(l) = args.l {
        let maps = TimeMaps::new(&potential, l)?;
        let (wlo, whi) = maps.energy_window();
        let c = maps.radial().circular();
        let cert = monotonicity_certificate(&potential, l)?;
        report["circular"] = json!({
            "L": l,
            "r0": c.s0,
            "energy_window": [wlo, if whi.is_finite() { json!(whi) } else { json!("inf") }],
            "omega2": c.omega2,
            "schaaf": cert.schaaf_passed(),
            "chicone": cert.chicone.passed,
        });
    }
    write_json(args.output.as_deref(), &report)
}
