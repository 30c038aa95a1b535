use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mal_core::geodesic::{
    hcma_residual, solve_epsilon_geodesic_from, weak_geodesic, ContinuationSettings, EpsGeodesicProblem,
};
use mal_core::{GridField, PotentialPath};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

#[derive(Serialize)]
struct StepRecord {
    epsilon: f64,
    iterations: usize,
    residual_norm: f64,
    /// Sup distance to the previous solution; absent for the first.
    change: Option<f64>,
    /// Newton residual history (explicit schedules only).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    history: Vec<f64>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    experiment: &'a str,
    config_hash: String,
    #[serde(rename = "N")]
    n: usize,
    scheme: String,
    #[serde(rename = "T")]
    horizon: f64,
    time_steps: usize,
    mode: &'static str,
    epsilon: f64,
    steps: Vec<StepRecord>,
    hcma_target: f64,
    hcma_deviation: f64,
    files: Vec<String>,
}

pub(crate) fn continuation_settings(cfg: &ExperimentConfig) -> ContinuationSettings {
    ContinuationSettings {
        time_steps: cfg.geodesic.time_steps as usize,
        solver_tol: cfg.geodesic.solver_tol,
        max_iter: cfg.geodesic.max_iter as usize,
        min_epsilon: cfg.geodesic.min_epsilon,
    }
}

fn write_table<F>(path: &Path, header: &str, path_times: &[f64], fields: &[&GridField], n: usize, mut row: F) -> Result<(), CliError>
where
    F: FnMut(&mut BufWriter<File>, f64, usize, usize, f64) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "{header}")?;
        for (&t, f) in path_times.iter().zip(fields) {
            for i in 0..n {
                for j in 0..n {
                    row(&mut w, t, i, j, f.get(i, j))?;
                }
            }
        }
        w.flush()
    };
    body().map_err(|e| CliError::io(path, e))
}

fn write_row(w: &mut BufWriter<File>, t: f64, i: usize, j: usize, v: f64) -> std::io::Result<()> {
    writeln!(w, "{t:.16e},{i},{j},{v:.16e}")
}

/// Writes `<id>.path.csv`, `<id>.hcma.csv` and `<id>.json` as configured.
/// Returns `Ok(true)` on convergence.
pub fn run(config_path: &Path) -> Result<bool, CliError> {
    let cfg = ExperimentConfig::load(config_path)?;
    let grid = cfg.grid()?;
    let (start, end) = cfg.fixture.endpoints(&grid, "fixture")?;
    let geo = &cfg.geodesic;
    let interval = (0.0, geo.horizon);
    let settings = continuation_settings(&cfg);

    let (path, epsilon, steps, mode): (PotentialPath, f64, Vec<StepRecord>, _) = if geo.epsilon_schedule.is_empty() {
        let w = weak_geodesic(&start, &end, interval, geo.limit_tol, &settings)?;
        let steps = w
            .history
            .iter()
            .map(|s| StepRecord {
                epsilon: s.epsilon,
                iterations: s.iterations,
                residual_norm: s.residual,
                change: s.change.is_finite().then_some(s.change),
                history: Vec::new(),
            })
            .collect();
        (w.path, 0.0, steps, "limit")
    } else {
        let mut problem = EpsGeodesicProblem::new(start, end, interval, geo.epsilon_schedule[0], settings.time_steps)?
            .with_tolerance(settings.solver_tol)
            .with_max_iter(settings.max_iter);
        let mut current: Option<PotentialPath> = None;
        let mut steps = Vec::new();
        for &eps in &geo.epsilon_schedule {
            problem = problem.with_epsilon(eps);
            let sol = solve_epsilon_geodesic_from(&problem, current.as_ref())?;
            steps.push(StepRecord {
                epsilon: eps,
                iterations: sol.iterations,
                residual_norm: sol.residual_norm,
                change: current.as_ref().map(|p| mal_core::geodesic::path_distance(p, &sol.path)),
                history: sol.history,
            });
            current = Some(sol.path);
        }
        let eps = *geo.epsilon_schedule.last().unwrap();
        (current.unwrap(), eps, steps, "schedule")
    };

    let residual = hcma_residual(&path)?;
    let dir = &cfg.output.directory;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let id = &cfg.experiment.id;
    let n = grid.n();
    let mut files: Vec<PathBuf> = Vec::new();
    if cfg.has_format("csv") {
        let knots: Vec<&GridField> = path.knots().iter().map(|k| k.field()).collect();
        let p = dir.join(format!("{id}.path.csv"));
        write_table(&p, "t,i,j,u", path.times(), &knots, n, write_row)?;
        files.push(p);
        let fields: Vec<&GridField> = residual.fields.iter().collect();
        let p = dir.join(format!("{id}.hcma.csv"));
        write_table(&p, "t,i,j,c", &residual.times, &fields, n, write_row)?;
        files.push(p);
    }
    if cfg.has_format("json") {
        let sidecar = Sidecar {
            experiment: id,
            config_hash: cfg.hash(),
            n,
            scheme: grid.scheme().to_string(),
            horizon: geo.horizon,
            time_steps: path.intervals(),
            mode,
            epsilon: if mode == "limit" { steps.last().map_or(0.0, |s| s.epsilon) } else { epsilon },
            hcma_target: epsilon,
            hcma_deviation: residual.deviation_from(epsilon),
            files: files
                .iter()
                .map(|f| f.file_name().unwrap().to_string_lossy().into_owned())
                .collect(),
            steps,
        };
        let p = dir.join(format!("{id}.json"));
        let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        text.push('\n');
        std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
        files.push(p);
    }
    for f in &files {
        eprintln!("wrote {}", f.display());
    }
    Ok(true)
}
