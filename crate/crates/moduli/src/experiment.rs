//! Experiment driver: scenario presets, sweep grids over the noise level and
//! the coarsening factor, CSV emission and run reports.
//!
//! Three preset scenarios mirror the numerical studies:
//!
//! - `static`: a single centered inclusion in both moduli, zero frequency,
//!   the two linear boundary data with complementary strain structure;
//! - `frequency`: several inclusions, `omega = (1, 0)`;
//! - `random`: a cloud of 1000 seeded random inclusions per modulus, static.
//!
//! Every run is deterministic for a fixed configuration and seed; wall-clock
//! times are recorded only when explicitly enabled so that emitted artifacts
//! are byte-reproducible.

use crate::differentiate::{
    choose_mesh_sizes, hessian_of_projection, project_displacement, strain_of_projection,
    ProjectionPlan,
};
use crate::error::{Error, Result};
use crate::fem::mesh::MeshSpec;
use crate::fem::space::{FeSpace, ScalarField, VectorField};
use crate::forward::{
    solve_forward, synthesize_moduli, Bump, DirichletBc, MaterialField, ModuliSpec, RandomBumps,
    ResolvedModuli,
};
use crate::measure::{add_noise, read_vector_field, write_vector_field, NoiseReport};
use crate::pointwise::{
    build_gradient_system, DegeneracyPolicy, GradientSystemData, PointEvaluator, SystemParams,
};
use crate::reconstruct::{
    assemble_normal_system, build_lifting, h1_relative_error, h1_relative_error_single,
    solve_least_squares,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Static,
    Frequency,
    Random,
    Custom,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Scenario::Static => "static",
            Scenario::Frequency => "frequency",
            Scenario::Random => "random",
            Scenario::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(Scenario::Static),
            "frequency" => Ok(Scenario::Frequency),
            "random" => Ok(Scenario::Random),
            "custom" => Ok(Scenario::Custom),
            other => Err(Error::InvalidConfig(format!("unknown scenario {other:?}"))),
        }
    }
}

/// Full experiment configuration; serializes to JSON for provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Elements per axis of the fine grid (desk scale 40, paper scale 120).
    pub nx: usize,
    /// Polynomial order of all spaces.
    pub r: usize,
    /// Closed-form moduli; `None` takes the scenario preset.
    pub moduli: Option<ModuliSpec>,
    pub omega1: Option<f64>,
    pub omega2: Option<f64>,
    pub rho: f64,
    /// Noise levels of the sweep (0 allowed).
    pub deltas: Vec<f64>,
    /// Coarsening factors (`h = k h0`); each must divide `nx`.
    pub ks: Vec<usize>,
    /// Derive the coarsening from each delta by the mesh-size rule instead
    /// of the `ks` list.
    pub auto_h: bool,
    /// Smoothness index for the mesh-size rule.
    pub ell: usize,
    /// Invertibility margin on `|det E|`.
    pub c0: f64,
    pub noise_modes: usize,
    pub forward_tol: f64,
    pub normal_tol: f64,
    pub max_iter: usize,
    pub jacobi: bool,
    pub seed: u64,
    /// Record wall-clock times (breaks byte-reproducibility of the CSV).
    pub timing: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: Scenario::Static,
            nx: 40,
            r: 5,
            moduli: None,
            omega1: None,
            omega2: None,
            rho: 1.0,
            deltas: vec![0.0],
            ks: vec![1],
            auto_h: false,
            ell: 3,
            c0: 1e-8,
            noise_modes: crate::measure::DEFAULT_NOISE_MODES,
            forward_tol: 1e-10,
            normal_tol: 1e-10,
            max_iter: 100_000,
            jacobi: false,
            seed: 42,
            timing: false,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn for_scenario(scenario: Scenario) -> Self {
        ExperimentConfig { scenario, ..Default::default() }
    }

    /// Scenario moduli presets.
    pub fn preset_moduli(&self) -> Result<ModuliSpec> {
        if let Some(m) = &self.moduli {
            return Ok(m.clone());
        }
        let mut spec = ModuliSpec::constant(22.0, 2.0);
        spec.seed = self.seed;
        match self.scenario {
            Scenario::Static => {
                let bump = Bump { amplitude: 18.0, center: (0.5, 0.5), r_minus: 0.1, r_plus: 0.2 };
                spec.alpha_bumps.push(bump);
                spec.beta_bumps.push(bump);
            }
            Scenario::Frequency => {
                spec.alpha_bumps = vec![
                    Bump { amplitude: 18.0, center: (0.3, 0.35), r_minus: 0.08, r_plus: 0.16 },
                    Bump { amplitude: 12.0, center: (0.72, 0.6), r_minus: 0.06, r_plus: 0.12 },
                ];
                spec.beta_bumps = vec![
                    Bump { amplitude: 1.5, center: (0.6, 0.25), r_minus: 0.07, r_plus: 0.14 },
                    Bump { amplitude: 3.0, center: (0.35, 0.72), r_minus: 0.09, r_plus: 0.18 },
                ];
            }
            Scenario::Random => {
                spec.random_alpha = Some(RandomBumps {
                    count: 1000,
                    amplitude: (-2.0, 2.0),
                    r_minus: (0.01, 0.025),
                    width: (0.01, 0.025),
                });
                spec.random_beta = Some(RandomBumps {
                    count: 1000,
                    amplitude: (-0.2, 0.6),
                    r_minus: (0.01, 0.025),
                    width: (0.01, 0.025),
                });
            }
            Scenario::Custom => {
                return Err(Error::InvalidConfig(
                    "custom scenario needs an explicit moduli spec".into(),
                ));
            }
        }
        Ok(spec)
    }

    /// Boundary data pair of the scenario.
    pub fn boundary_conditions(&self) -> (DirichletBc, DirichletBc) {
        match self.scenario {
            Scenario::Static => (DirichletBc::ShearLinear, DirichletBc::DilationLinear),
            // low-frequency pair; the random case reuses it at omega = 0
            Scenario::Frequency | Scenario::Random | Scenario::Custom => {
                (DirichletBc::DilationLinear, DirichletBc::SkewLinear)
            }
        }
    }

    pub fn omegas(&self) -> (f64, f64) {
        let default = match self.scenario {
            Scenario::Frequency => (1.0, 0.0),
            _ => (0.0, 0.0),
        };
        (self.omega1.unwrap_or(default.0), self.omega2.unwrap_or(default.1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 {
            return Err(Error::InvalidConfig("nx must be positive".into()));
        }
        if self.r < 2 {
            return Err(Error::InvalidConfig("order r must be >= 2 for hessian data".into()));
        }
        for &d in &self.deltas {
            if d < 0.0 {
                return Err(Error::InvalidConfig(format!("delta must be >= 0, got {d}")));
            }
        }
        if !self.auto_h {
            for &k in &self.ks {
                if k == 0 || self.nx % k != 0 {
                    return Err(Error::InvalidConfig(format!(
                        "coarsening factor {k} must divide nx = {}",
                        self.nx
                    )));
                }
            }
        }
        if self.auto_h && self.ell < 3 {
            return Err(Error::InvalidConfig("auto-h rule needs ell >= 3".into()));
        }
        Ok(())
    }

    /// Default sweep factors: divisors of `nx` up to 10.
    pub fn default_ks(nx: usize) -> Vec<usize> {
        (1..=10).filter(|k| nx % k == 0).collect()
    }
}

/// One sweep cell result; the CSV schema is exactly these ten columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub scenario: String,
    pub delta: f64,
    pub k: usize,
    pub h: f64,
    pub err_rel_h1: f64,
    pub err_alpha_h1: f64,
    pub err_beta_h1: f64,
    pub min_det_e: f64,
    pub cg_iters: usize,
    pub wall_time: f64,
    /// Failure description; rows with errors carry NaN metrics. Not part of
    /// the CSV schema, recorded in the run report.
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Prepared scenario: resolved moduli, material, synthetic measurements.
pub struct ScenarioRun {
    pub config: ExperimentConfig,
    pub space: FeSpace,
    pub moduli: ResolvedModuli,
    pub material: MaterialField,
    pub exact_alpha: ScalarField,
    pub exact_beta: ScalarField,
    pub u1: VectorField,
    pub u2: VectorField,
    pub forward_iters: (usize, usize),
    pub forward_cached: bool,
}

/// Stable 64-bit FNV-1a over the canonical forward-problem description, used
/// to key cached forward fields on disk.
fn forward_cache_key(config: &ExperimentConfig, moduli: &ModuliSpec) -> String {
    let (om1, om2) = config.omegas();
    let (bc1, bc2) = config.boundary_conditions();
    let desc = format!(
        "{}|{}|{}|{:?}|{:?}|{}|{}|{}|{}",
        config.scenario,
        config.nx,
        config.r,
        bc1,
        bc2,
        om1,
        om2,
        config.rho,
        serde_json::to_string(moduli).unwrap_or_default(),
    );
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in desc.bytes() {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

impl ScenarioRun {
    /// Resolve the configuration and compute (or load) the forward fields.
    pub fn prepare(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let mesh = MeshSpec::unit_square(config.nx)?;
        let space = FeSpace::conforming(mesh, config.r)?;
        let spec = config.preset_moduli()?;
        let moduli = spec.resolve()?;
        let material = synthesize_moduli(&moduli, &space, config.rho)?;
        let exact_alpha = material.alpha.clone();
        let exact_beta = material.beta.clone();

        let (om1, om2) = config.omegas();
        let (bc1, bc2) = config.boundary_conditions();

        let key = forward_cache_key(&config, &spec);
        let cache_paths = config.output_dir.as_ref().map(|dir| {
            (dir.join(format!("u1-{key}.field")), dir.join(format!("u2-{key}.field")))
        });
        let mut forward_cached = false;
        let (u1, u2, iters) = if let Some((p1, p2)) = &cache_paths {
            if p1.exists() && p2.exists() {
                let u1 = read_vector_field(p1)?;
                let u2 = read_vector_field(p2)?;
                if u1.space.dof_count() != space.dof_count() {
                    return Err(Error::DimensionMismatch {
                        expected: space.dof_count(),
                        got: u1.space.dof_count(),
                    });
                }
                forward_cached = true;
                (u1, u2, (0, 0))
            } else {
                let (u1, r1) = solve_forward(&material, om1, bc1, &space, config.forward_tol)?;
                let (u2, r2) = solve_forward(&material, om2, bc2, &space, config.forward_tol)?;
                if let Some(dir) = &config.output_dir {
                    std::fs::create_dir_all(dir)?;
                }
                write_vector_field(&u1, p1)?;
                write_vector_field(&u2, p2)?;
                (u1, u2, (r1.cg.iterations, r2.cg.iterations))
            }
        } else {
            let (u1, r1) = solve_forward(&material, om1, bc1, &space, config.forward_tol)?;
            let (u2, r2) = solve_forward(&material, om2, bc2, &space, config.forward_tol)?;
            (u1, u2, (r1.cg.iterations, r2.cg.iterations))
        };

        Ok(ScenarioRun {
            config,
            space,
            moduli,
            material,
            exact_alpha,
            exact_beta,
            u1,
            u2,
            forward_iters: iters,
            forward_cached,
        })
    }

    fn params(&self) -> SystemParams {
        let (om1, om2) = self.config.omegas();
        SystemParams { omega1: om1, omega2: om2, rho: self.config.rho, c0: self.config.c0 }
    }

    /// Noisy measurements for a given level.
    pub fn noisy_pair(&self, delta: f64) -> Result<(VectorField, VectorField, NoiseReport)> {
        let (u1d, rep) = add_noise(&self.u1, delta, self.config.noise_modes)?;
        let (u2d, _) = add_noise(&self.u2, delta, self.config.noise_modes)?;
        Ok((u1d, u2d, rep))
    }

    /// Gradient-system data for one `(delta, k1, k2)` cell.
    pub fn gradient_data(&self, delta: f64, k1: usize, k2: usize) -> Result<GradientSystemData> {
        let (u1d, u2d, _) = self.noisy_pair(delta)?;
        let plan1 = ProjectionPlan::new(&self.space, k1, self.config.r)?;
        let plan2 = if k2 == k1 {
            plan1.clone()
        } else {
            ProjectionPlan::new(&self.space, k2, self.config.r)?
        };
        let p1s = project_displacement(&u1d, &plan1);
        let p2s = project_displacement(&u2d, &plan1);
        let e1 = strain_of_projection(&p1s);
        let e2 = strain_of_projection(&p2s);
        let (p1h, p2h) = if k2 == k1 {
            (p1s, p2s)
        } else {
            (project_displacement(&u1d, &plan2), project_displacement(&u2d, &plan2))
        };
        let h1 = hessian_of_projection(&p1h)?;
        let h2 = hessian_of_projection(&p2h)?;
        build_gradient_system(
            &e1,
            &e2,
            &h1,
            &h2,
            &u1d,
            &u2d,
            &self.params(),
            DegeneracyPolicy::Abort,
        )
    }

    /// Point evaluator over projected data, for curve integration.
    pub fn point_evaluator(&self, delta: f64, k1: usize, k2: usize) -> Result<PointEvaluator> {
        let (u1d, u2d, _) = self.noisy_pair(delta)?;
        let plan1 = ProjectionPlan::new(&self.space, k1, self.config.r)?;
        let plan2 = ProjectionPlan::new(&self.space, k2, self.config.r)?;
        Ok(PointEvaluator {
            strain_proj: [project_displacement(&u1d, &plan1), project_displacement(&u2d, &plan1)],
            hessian_proj: [project_displacement(&u1d, &plan2), project_displacement(&u2d, &plan2)],
            u: [u1d, u2d],
            params: self.params(),
        })
    }

    /// Run one cell: noise, differentiate, assemble, solve, score.
    pub fn cell(&self, delta: f64, k1: usize, k2: usize) -> SweepRow {
        let start = std::time::Instant::now();
        let h = k1 as f64 * self.space.mesh.h();
        let mut row = SweepRow {
            scenario: self.config.scenario.to_string(),
            delta,
            k: k1,
            h,
            err_rel_h1: f64::NAN,
            err_alpha_h1: f64::NAN,
            err_beta_h1: f64::NAN,
            min_det_e: f64::NAN,
            cg_iters: 0,
            wall_time: 0.0,
            error: None,
        };
        let outcome = (|| -> Result<()> {
            let data = self.gradient_data(delta, k1, k2)?;
            row.min_det_e = data.report.min_abs_det_e;
            let moduli = self.moduli.clone();
            let lifting = build_lifting(
                |x, y| moduli.alpha(x, y),
                |x, y| moduli.beta(x, y),
                &self.space,
            );
            let system = assemble_normal_system(&data, lifting);
            let rec = solve_least_squares(
                &system,
                self.config.normal_tol,
                self.config.max_iter,
                self.config.jacobi,
            )?;
            row.cg_iters = rec.cg.iterations;
            row.err_rel_h1 =
                h1_relative_error(&rec.alpha, &rec.beta, &self.exact_alpha, &self.exact_beta)?;
            row.err_alpha_h1 = h1_relative_error_single(&rec.alpha, &self.exact_alpha)?;
            row.err_beta_h1 = h1_relative_error_single(&rec.beta, &self.exact_beta)?;
            if let Some(dir) = &self.config.output_dir {
                let tag = format!("d{delta:.3e}-k{k1}");
                crate::measure::write_scalar_field(&rec.alpha, &dir.join(format!("alpha-{tag}.field")))?;
                crate::measure::write_scalar_field(&rec.beta, &dir.join(format!("beta-{tag}.field")))?;
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            row.error = Some(e.to_string());
        }
        if self.config.timing {
            row.wall_time = start.elapsed().as_secs_f64();
        }
        row
    }

    /// The `(delta, k)` grid of the configuration, auto-h aware.
    pub fn grid(&self) -> Result<Vec<(f64, usize)>> {
        let mut cells = Vec::new();
        for &delta in &self.config.deltas {
            if self.config.auto_h {
                if delta == 0.0 {
                    cells.push((delta, 1));
                } else {
                    let choice = choose_mesh_sizes(delta, self.config.ell, 2, &self.space)?;
                    cells.push((delta, choice.k2));
                }
            } else {
                for &k in &self.config.ks {
                    cells.push((delta, k));
                }
            }
        }
        Ok(cells)
    }
}

/// Run the full sweep grid of a configuration. Rows are ordered delta-major,
/// k-minor; failed cells are kept with their error recorded.
pub fn run_scenario(config: ExperimentConfig) -> Result<(SweepResult, ScenarioRun)> {
    let run = ScenarioRun::prepare(config)?;
    let mut rows = Vec::new();
    for (delta, k) in run.grid()? {
        rows.push(run.cell(delta, k, k));
    }
    let result = SweepResult { rows };
    if let Some(dir) = run.config.output_dir.clone() {
        std::fs::create_dir_all(&dir)?;
        emit_csv(&result, &dir.join("sweep.csv"))?;
        write_report(&run, &result, &dir.join("report.json"))?;
    }
    Ok((result, run))
}

/// Mesh-size sweep: fixed noise level(s), varying coarsening.
pub fn sweep_h(config: ExperimentConfig) -> Result<(SweepResult, ScenarioRun)> {
    if config.ks.is_empty() {
        return Err(Error::InvalidConfig("sweep-h needs a non-empty k list".into()));
    }
    run_scenario(config)
}

/// Noise sweep: fixed coarsening (or the auto rule), varying delta.
pub fn sweep_delta(config: ExperimentConfig) -> Result<(SweepResult, ScenarioRun)> {
    if config.deltas.is_empty() {
        return Err(Error::InvalidConfig("sweep-delta needs a non-empty delta list".into()));
    }
    run_scenario(config)
}

const CSV_HEADER: &str =
    "scenario,delta,k,h,err_rel_h1,err_alpha_h1,err_beta_h1,min_detE,cg_iters,wall_time";

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Emit the sweep as CSV: fixed 10-column schema, floats with 17 significant
/// digits, deterministic row order (delta-major, k-minor).
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut rows = result.rows.clone();
    rows.sort_by(|a, b| {
        a.delta
            .partial_cmp(&b.delta)
            .unwrap()
            .then(a.k.cmp(&b.k))
    });
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.scenario,
            fmt_f64(r.delta),
            r.k,
            fmt_f64(r.h),
            fmt_f64(r.err_rel_h1),
            fmt_f64(r.err_alpha_h1),
            fmt_f64(r.err_beta_h1),
            fmt_f64(r.min_det_e),
            r.cg_iters,
            fmt_f64(r.wall_time),
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Parse a CSV produced by [`emit_csv`]; error strings are not round-tripped.
pub fn parse_csv(path: &Path) -> Result<SweepResult> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::FieldFormat("empty CSV".into()))?;
    if header != CSV_HEADER {
        return Err(Error::FieldFormat(format!("unexpected CSV header {header:?}")));
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 10 {
            return Err(Error::FieldFormat(format!(
                "expected 10 columns, got {}",
                parts.len()
            )));
        }
        let f = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::FieldFormat(format!("bad float {s:?}")))
        };
        rows.push(SweepRow {
            scenario: parts[0].to_string(),
            delta: f(parts[1])?,
            k: parts[2]
                .parse()
                .map_err(|_| Error::FieldFormat(format!("bad k {:?}", parts[2])))?,
            h: f(parts[3])?,
            err_rel_h1: f(parts[4])?,
            err_alpha_h1: f(parts[5])?,
            err_beta_h1: f(parts[6])?,
            min_det_e: f(parts[7])?,
            cg_iters: parts[8]
                .parse()
                .map_err(|_| Error::FieldFormat(format!("bad cg_iters {:?}", parts[8])))?,
            wall_time: f(parts[9])?,
            error: None,
        });
    }
    Ok(SweepResult { rows })
}

#[derive(Serialize)]
struct Report<'a> {
    config: &'a ExperimentConfig,
    forward_iterations: (usize, usize),
    forward_cached: bool,
    rows: Vec<ReportRow>,
}

#[derive(Serialize)]
struct ReportRow {
    delta: f64,
    k: usize,
    err_rel_h1: f64,
    err_alpha_h1: f64,
    err_beta_h1: f64,
    min_abs_det_e: f64,
    cg_iters: usize,
    wall_time: f64,
    error: Option<String>,
}

/// Structured run report with the resolved configuration (all defaults made
/// explicit) and per-cell outcomes, including failures.
pub fn write_report(run: &ScenarioRun, result: &SweepResult, path: &Path) -> Result<()> {
    let report = Report {
        config: &run.config,
        forward_iterations: run.forward_iters,
        forward_cached: run.forward_cached,
        rows: result
            .rows
            .iter()
            .map(|r| ReportRow {
                delta: r.delta,
                k: r.k,
                err_rel_h1: r.err_rel_h1,
                err_alpha_h1: r.err_alpha_h1,
                err_beta_h1: r.err_beta_h1,
                min_abs_det_e: r.min_det_e,
                cg_iters: r.cg_iters,
                wall_time: r.wall_time,
                error: r.error.clone(),
            })
            .collect(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
    Ok(())
}

/// Fit the slope of `log(err)` against `log(x)` by least squares; used for
/// the convergence-rate checks.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let lx = x.ln();
        let ly = y.ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_default_round_trips_json() {
        let c = ExperimentConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        let d: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(d.nx, c.nx);
        assert_eq!(d.scenario, c.scenario);
    }

    #[test]
    fn validation_rejects_bad_k() {
        let mut c = ExperimentConfig::default();
        c.ks = vec![3];
        c.nx = 40;
        assert!(c.validate().is_err());
        c.ks = vec![4];
        assert!(c.validate().is_ok());
    }

    #[test]
    fn default_ks_are_divisors() {
        assert_eq!(ExperimentConfig::default_ks(40), vec![1, 2, 4, 5, 8, 10]);
        assert_eq!(ExperimentConfig::default_ks(120), vec![1, 2, 3, 4, 5, 6, 8, 10]);
    }

    #[test]
    fn csv_round_trip_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let result = SweepResult {
            rows: vec![
                SweepRow {
                    scenario: "static".into(),
                    delta: 1e-7,
                    k: 2,
                    h: 0.05,
                    err_rel_h1: 0.123456789012345678,
                    err_alpha_h1: 0.1,
                    err_beta_h1: 0.2,
                    min_det_e: 3.9999,
                    cg_iters: 811,
                    wall_time: 0.0,
                    error: None,
                },
                SweepRow {
                    scenario: "static".into(),
                    delta: 0.0,
                    k: 1,
                    h: 0.025,
                    err_rel_h1: f64::NAN,
                    err_alpha_h1: f64::NAN,
                    err_beta_h1: f64::NAN,
                    min_det_e: f64::NAN,
                    cg_iters: 0,
                    wall_time: 0.0,
                    error: Some("boom".into()),
                },
            ],
        };
        emit_csv(&result, &path).unwrap();
        let parsed = parse_csv(&path).unwrap();
        assert_eq!(parsed.rows.len(), 2);
        // sorted delta-major: the delta = 0 row comes first
        assert_eq!(parsed.rows[0].delta, 0.0);
        assert!(parsed.rows[0].err_rel_h1.is_nan());
        let r = &parsed.rows[1];
        assert_eq!(r.delta, 1e-7);
        assert_eq!(r.k, 2);
        assert_eq!(r.err_rel_h1, 0.123456789012345678);
        assert_eq!(r.cg_iters, 811);
    }

    #[test]
    fn empty_sweep_emits_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_csv(&SweepResult::default(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{CSV_HEADER}\n"));
        assert_eq!(text.lines().next().unwrap().split(',').count(), 10);
        let parsed = parse_csv(&path).unwrap();
        assert!(parsed.rows.is_empty());
    }

    #[test]
    fn slope_fit_recovers_power_law() {
        let pts: Vec<(f64, f64)> = [1e-6, 1e-5, 1e-4, 1e-3]
            .iter()
            .map(|&x: &f64| (x, 3.0 * x.powf(1.0 / 3.0)))
            .collect();
        let slope = fit_loglog_slope(&pts);
        assert!((slope - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn preset_moduli_match_scenarios() {
        let c = ExperimentConfig::for_scenario(Scenario::Static);
        let m = c.preset_moduli().unwrap();
        assert_eq!(m.alpha0, 22.0);
        assert_eq!(m.beta0, 2.0);
        assert_eq!(m.alpha_bumps.len(), 1);
        assert_eq!(m.alpha_bumps[0].amplitude, 18.0);

        let c = ExperimentConfig::for_scenario(Scenario::Custom);
        assert!(c.preset_moduli().is_err());
    }

    #[test]
    fn random_preset_is_positive_and_deterministic() {
        let c = ExperimentConfig::for_scenario(Scenario::Random);
        let m = c.preset_moduli().unwrap().resolve().unwrap();
        let mesh = MeshSpec::unit_square(20).unwrap();
        let space = FeSpace::conforming(mesh, 5).unwrap();
        let mat = synthesize_moduli(&m, &space, 1.0).unwrap();
        let amin = mat.alpha.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let bmin = mat.beta.values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(amin > 0.0 && bmin > 0.0, "amin={amin} bmin={bmin}");
        let m2 = c.preset_moduli().unwrap().resolve().unwrap();
        assert_eq!(m.alpha_bumps.len(), m2.alpha_bumps.len());
        for (a, b) in m.alpha_bumps.iter().zip(&m2.alpha_bumps) {
            assert_eq!(a.center, b.center);
        }
    }
}
