//! Executes a validated configuration and writes its artifacts.

use crate::config::{ConfigError, Experiment, ExperimentConfig, SoftKind, StiffKind};
use crate::svg::{map_tiles, mesh_tiles, reference_tiles, render_svg, Style};
use checkerboard::effective::{decompose_in_k, poisson_ratio};
use checkerboard::energy::{eval_w_hom, solve_cell_formula, EnergyDensity, SoftModel};
use checkerboard::geometry::{CellPartition, Domain, Rect};
use checkerboard::kinematics::{check_ciarlet_necas, microcrack_map, rotating_squares_map, PiecewiseAffineMap};
use checkerboard::rigidity::{measure_rigidity_scaling, poincare_quotient, zero_mean_part, SampledField, ScalingConfig};
use checkerboard::solver::{build_mesh, homogenization_experiment, SolverOptions};
use checkerboard::{Error as CoreError, Mat2, Rotation, Vec2};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("experiment failed: {0}")]
    Experiment(#[from] CoreError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Tables and figures.
    Run,
    /// Figures only.
    Render,
}

/// Artifacts are written under a `.partial` suffix and renamed only once the
/// whole experiment has succeeded.
struct Sink {
    dir: PathBuf,
    stem: String,
    mode: Mode,
    pending: Vec<(PathBuf, PathBuf)>,
}

impl Sink {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
        move |source| RunError::Io { path: path.to_path_buf(), source }
    }

    fn open(&mut self, ext: &str) -> Result<PathBuf, RunError> {
        fs::create_dir_all(&self.dir).map_err(Self::io(&self.dir))?;
        let done = self.dir.join(format!("{}.{ext}", self.stem));
        let partial = self.dir.join(format!("{}.{ext}.partial", self.stem));
        fs::write(&partial, "").map_err(Self::io(&partial))?;
        self.pending.push((partial.clone(), done));
        Ok(partial)
    }

    fn append(path: &Path, text: &str) -> Result<(), RunError> {
        let mut f = fs::OpenOptions::new().append(true).open(path).map_err(Self::io(path))?;
        f.write_all(text.as_bytes()).map_err(Self::io(path))
    }

    /// A table that grows row by row.
    fn table(&mut self, header: &str) -> Result<Option<PathBuf>, RunError> {
        if self.mode == Mode::Render {
            return Ok(None);
        }
        let p = self.open("csv")?;
        Self::append(&p, &format!("{header}\n"))?;
        Ok(Some(p))
    }

    fn row(table: &Option<PathBuf>, line: &str) -> Result<(), RunError> {
        match table {
            Some(p) => Self::append(p, &format!("{line}\n")),
            None => Ok(()),
        }
    }

    fn csv(&mut self, content: &str) -> Result<(), RunError> {
        if self.mode == Mode::Run {
            let p = self.open("csv")?;
            Self::append(&p, content)?;
        }
        Ok(())
    }

    fn svg(&mut self, content: &str) -> Result<(), RunError> {
        let p = self.open("svg")?;
        Self::append(&p, content)
    }

    fn finish(self) -> Result<Vec<PathBuf>, RunError> {
        let mut out = Vec::new();
        for (partial, done) in self.pending {
            fs::rename(&partial, &done).map_err(Self::io(&done))?;
            out.push(done);
        }
        Ok(out)
    }
}

pub fn density_of(cfg: &ExperimentConfig) -> EnergyDensity {
    let m = &cfg.material;
    let d = match m.stiff {
        StiffKind::Elastic => EnergyDensity::elastic(m.p, m.beta),
        StiffKind::Rigid => EnergyDensity::rigid(),
    };
    match m.soft {
        SoftKind::Default => d,
        SoftKind::StressFree => d.with_soft(SoftModel::stress_free()),
    }
}

fn gradient_of(cfg: &ExperimentConfig) -> Mat2 {
    cfg.deformation.gradient.map(Mat2::from_rows).unwrap_or(Mat2::IDENTITY)
}

fn domain_of(cfg: &ExperimentConfig) -> Rect {
    let [x0, y0, x1, y1] = cfg.geometry.domain.unwrap_or([0.0, 0.0, 1.0, 1.0]);
    Rect::new(x0, y0, x1, y1)
}

fn solver_of(cfg: &ExperimentConfig) -> SolverOptions {
    SolverOptions { tol: cfg.solver.tol, max_iterations: cfg.solver.max_iterations, ..Default::default() }
}

fn rotation_pair(cfg: &ExperimentConfig) -> Result<(Rotation, Rotation), RunError> {
    let d = &cfg.deformation;
    if let (Some(s), Some(r)) = (d.s_deg, d.r_deg) {
        return Ok((Rotation::from_degrees(s), Rotation::from_degrees(r)));
    }
    let pairs = decompose_in_k(gradient_of(cfg), cfg.geometry.lambda)?;
    Ok((pairs[0].s, pairs[0].r))
}

fn figure(map: &PiecewiseAffineMap, domain: &Rect) -> String {
    render_svg(&map_tiles(map, domain), &reference_tiles(map.partition, map.epsilon, domain), &Style::default())
}

/// Runs the experiment named in `cfg` and returns the written artifacts.
pub fn run(cfg: &ExperimentConfig, mode: Mode) -> Result<Vec<PathBuf>, RunError> {
    cfg.validate()?;
    if mode == Mode::Render && !cfg.experiment.has_figure() {
        return Err(ConfigError::Invalid {
            field: "experiment".into(),
            message: format!("`{}` produces no figure", cfg.experiment.name()),
        }
        .into());
    }
    let mut sink = Sink { dir: cfg.output.dir.clone(), stem: cfg.stem(), mode, pending: Vec::new() };
    let lambda = cfg.geometry.lambda;
    let partition = CellPartition::new(lambda)?;
    match cfg.experiment {
        Experiment::Deform => {
            let eps = cfg.geometry.epsilon.unwrap_or(1.0);
            let (s, r) = rotation_pair(cfg)?;
            let map = rotating_squares_map(s, r, partition, eps, Vec2::ZERO);
            let domain = domain_of(cfg);
            if mode == Mode::Run {
                let rep = check_ciarlet_necas(&map, &Domain::rect(domain), 200.0)?;
                let mean = map.mean_gradient();
                let poisson = poisson_ratio(mean).map(|v| v.to_string()).unwrap_or_else(|_| "undefined".into());
                let table = sink.table(
                    "lambda,epsilon,S_deg,R_deg,Se1_Re1,mean11,mean12,mean21,mean22,poisson,det_integral,image_area,deficit,injective",
                )?;
                Sink::row(
                    &table,
                    &format!(
                        "{lambda},{eps},{},{},{},{},{},{},{},{poisson},{},{},{},{}",
                        s.angle().to_degrees(),
                        r.angle().to_degrees(),
                        s.e1().dot(r.e1()),
                        mean.a11,
                        mean.a12,
                        mean.a21,
                        mean.a22,
                        rep.det_integral,
                        rep.image_area,
                        rep.deficit,
                        rep.pass
                    ),
                )?;
            }
            sink.svg(&figure(&map, &domain))?;
        }
        Experiment::Microcrack => {
            let eps = cfg.geometry.epsilon.unwrap_or(1.0);
            let f = gradient_of(cfg);
            let m = microcrack_map(f, partition);
            let map = m.map.rescaled(eps);
            let domain = domain_of(cfg);
            if mode == Mode::Run {
                let rep = check_ciarlet_necas(&map, &Domain::rect(domain), 200.0)?;
                let g = m.mean_gradient;
                let table = sink.table("F11,F12,F21,F22,mean11,mean12,mean21,mean22,mean_error,det_integral,image_area")?;
                Sink::row(
                    &table,
                    &format!(
                        "{},{},{},{},{},{},{},{},{},{},{}",
                        f.a11,
                        f.a12,
                        f.a21,
                        f.a22,
                        g.a11,
                        g.a12,
                        g.a21,
                        g.a22,
                        (g - f).max_abs(),
                        rep.det_integral,
                        rep.image_area
                    ),
                )?;
            }
            sink.svg(&figure(&map, &domain))?;
        }
        Experiment::CellFormula => {
            let f = gradient_of(cfg);
            let density = density_of(cfg);
            let eps = cfg.geometry.epsilon.unwrap_or(1.0);
            let n = 2 * cfg.solver.resolution;
            let w_hom = match eval_w_hom(f, lambda, &|m| density.soft_value(m)) {
                Ok(v) => v,
                Err(CoreError::NotInK { .. }) => f64::INFINITY,
                Err(e) => return Err(e.into()),
            };
            let table = sink.table("F11,F12,F21,F22,lambda,mesh_n,epsilon,cell,w_hom,residual,iters,converged")?;
            let c = solve_cell_formula(f, lambda, &density, n, eps, &solver_of(cfg))?;
            Sink::row(
                &table,
                &format!(
                    "{},{},{},{},{lambda},{n},{eps},{},{w_hom},{},{},{}",
                    f.a11, f.a12, f.a21, f.a22, c.value, c.residual, c.iterations, c.converged
                ),
            )?;
        }
        Experiment::Homogenize => {
            let f = gradient_of(cfg);
            let eps = cfg.geometry.epsilons.clone().unwrap_or_default();
            let rep = homogenization_experiment(
                f,
                &eps,
                lambda,
                &density_of(cfg),
                cfg.solver.resolution,
                cfg.solver.boundary,
                &solver_of(cfg),
            )?;
            sink.csv(&rep.to_csv())?;
            if let Some(Some((mesh, def))) = rep.deformations.last() {
                let reference = reference_tiles(mesh.partition, mesh.epsilon, &mesh.domain);
                sink.svg(&render_svg(&mesh_tiles(mesh, &def.positions), &reference, &Style::default()))?;
            }
        }
        Experiment::Poincare => {
            let domain = domain_of(cfg);
            let inner = match cfg.geometry.inner {
                Some([x0, y0, x1, y1]) => Rect::new(x0, y0, x1, y1),
                None => {
                    let (w, h) = (domain.width(), domain.height());
                    Rect::new(domain.x0 + w / 4.0, domain.y0 + h / 4.0, domain.x1 - w / 4.0, domain.y1 - h / 4.0)
                }
            };
            let table = sink.table("epsilon,quotient,u_norm,grad_norm,control_ratio,preconditions_verified")?;
            let eps = cfg.geometry.epsilons.clone().unwrap_or_default();
            let rows: Vec<Result<String, CoreError>> = eps
                .par_iter()
                .map(|&e| {
                    let mesh = build_mesh(domain, e, cfg.solver.resolution, lambda)?;
                    let pos = mesh.nodes().into_iter().map(smooth_field).collect();
                    let field = zero_mean_part(&SampledField::from_positions(mesh, pos, cfg.material.p)?, &inner)?;
                    let r = poincare_quotient(&field, &inner, &domain, e)?;
                    Ok(format!(
                        "{e},{},{},{},{},{}",
                        r.quotient, r.u_norm, r.grad_norm, r.control_ratio, r.preconditions_verified
                    ))
                })
                .collect();
            for r in rows {
                Sink::row(&table, &r?)?;
            }
        }
        Experiment::RigidityScaling => {
            let base = rotation_pair(cfg)?;
            let r = cfg.rigidity.as_ref().expect("validated");
            let sc = ScalingConfig {
                lambda,
                epsilon: cfg.geometry.epsilon.unwrap_or(1.0),
                resolution: cfg.solver.resolution,
                p: cfg.material.p,
                ..Default::default()
            };
            let rep = measure_rigidity_scaling(base, r.family.with_seed(cfg.seed), &r.levels, &sc)?;
            sink.csv(&rep.to_csv())?;
        }
    }
    sink.finish()
}

/// Fixed smooth test field for the Poincaré experiment.
pub fn smooth_field(x: Vec2) -> Vec2 {
    Vec2::new((3.0 * x.x).sin() * x.y, (2.0 * x.y).cos() + x.x * x.x)
}

/// One-line summary of a successful run.
pub fn summary(cfg: &ExperimentConfig, files: &[PathBuf]) -> String {
    let mut s = format!("{}: wrote", cfg.experiment.name());
    for f in files {
        let _ = write!(s, " {}", f.display());
    }
    s
}
