use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pdsplit::experiment::{diagonal_params, scalar_params, Restoration};
use pdsplit::imaging::{
    read_pdf64, read_pgm, snr_db, write_pdf64, write_pgm, DegradationSpec, Image, Kernel,
};
use pdsplit::pdsolve::{
    run, validate as check, Diagnostics, ErrorSchedule, ErrorTargets, PdParams, RunOutput,
};
use pdsplit::{CompositeProblem, SolverState};

use crate::config::{ExperimentConfig, Manifest, MetricMode};
use crate::error::CliError;

const MANIFEST: &str = "manifest.txt";
const ERROR_DECAY: f64 = 2.0;

fn io_context(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn read_image(path: &Path) -> Result<Image, CliError> {
    let is_dump = path.extension().is_some_and(|e| e == "pdf64");
    let img = if is_dump {
        read_pdf64(path)
    } else {
        read_pgm(path)
    };
    img.map_err(|e| io_context(path, e))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| io_context(path, e))
}

fn write_pair(dir: &Path, stem: &str, img: &Image) -> Result<(), CliError> {
    let pgm = dir.join(format!("{stem}.pgm"));
    write_pgm(img, &pgm).map_err(|e| io_context(&pgm, e))?;
    let dump = dir.join(format!("{stem}.pdf64"));
    write_pdf64(img, &dump).map_err(|e| io_context(&dump, e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_context(dir, e))
}

pub fn degrade(c: &ExperimentConfig) -> Result<(), CliError> {
    let input = c
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("`degrade` needs `input`".into()))?;
    let clean = read_image(input)?;
    let spec = DegradationSpec {
        kernel: Kernel::uniform(c.kernel_size)?,
        noise_variances: (c.noise_var_1, c.noise_var_2),
        seed: c.seed,
    };
    let (w1, w2) = spec.apply(&clean)?;
    create_dir(&c.output)?;
    write_pair(&c.output, "w1", &w1)?;
    write_pair(&c.output, "w2", &w2)?;
    write_file(
        &c.output.join(MANIFEST),
        c.manifest(clean.width(), clean.height()),
    )?;
    println!("snr_w1 = {}", snr_db(&clean, &w1)?);
    println!("snr_w2 = {}", snr_db(&clean, &w2)?);
    Ok(())
}

/// Observations, clean image if still readable, and the assembled problem.
struct Setup {
    restoration: Restoration,
    problem: CompositeProblem,
    clean: Option<Image>,
}

fn load_setup(c: &ExperimentConfig) -> Result<Setup, CliError> {
    let manifest_path = c.output.join(MANIFEST);
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| io_context(&manifest_path, format!("{e} (run `degrade` first)")))?;
    let m = Manifest::parse(&text)?;
    if m.kernel_size != c.kernel_size
        || m.noise_var_1 != c.noise_var_1
        || m.noise_var_2 != c.noise_var_2
    {
        return Err(CliError::Config(format!(
            "degradation parameters differ from {}: kernel {} vs {}, variances ({}, {}) vs ({}, {})",
            manifest_path.display(),
            m.kernel_size,
            c.kernel_size,
            m.noise_var_1,
            m.noise_var_2,
            c.noise_var_1,
            c.noise_var_2
        )));
    }
    let w1 = read_image(&c.output.join("w1.pdf64"))?;
    let w2 = read_image(&c.output.join("w2.pdf64"))?;
    if (w1.width(), w1.height()) != (m.width, m.height)
        || (w2.width(), w2.height()) != (m.width, m.height)
    {
        return Err(CliError::Io(
            "observations do not match the manifest dimensions".into(),
        ));
    }
    let clean = m.input.as_deref().and_then(|p| read_image(p).ok());
    let restoration = Restoration {
        w1,
        w2,
        kernel: Kernel::uniform(c.kernel_size)?,
        noise_variances: (c.noise_var_1, c.noise_var_2),
        kappa: c.kappa,
        primal_constraint: c.primal_constraint,
    };
    let problem = restoration.problem()?;
    Ok(Setup {
        restoration,
        problem,
        clean,
    })
}

fn read_weights(path: &Path, r: &Restoration) -> Result<Vec<f64>, CliError> {
    let img = read_image(path)?;
    if (img.width(), img.height()) != (r.width(), r.height()) {
        return Err(CliError::Config(format!(
            "{}: weight image is {}x{}, expected {}x{}",
            path.display(),
            img.width(),
            img.height(),
            r.width(),
            r.height()
        )));
    }
    Ok(img.into_pixels())
}

fn build_params(
    c: &ExperimentConfig,
    s: &Setup,
    max_iter: usize,
    stop_tol: f64,
) -> Result<PdParams, CliError> {
    let params = match &c.metric {
        MetricMode::Scalar {
            tau,
            sigma1,
            sigma2,
        } => scalar_params(&s.problem, *tau, *sigma1, *sigma2)?,
        MetricMode::Diagonal {
            primal,
            box_dual,
            tv_dual,
        } => {
            let r = &s.restoration;
            diagonal_params(
                &read_weights(primal, r)?,
                &read_weights(box_dual, r)?,
                &read_weights(tv_dual, r)?,
            )?
        }
    };
    let mut params = params
        .with_lambda(c.lambda)
        .with_max_iter(max_iter)
        .with_stop_tol(stop_tol);
    if c.error_rho > 0.0 {
        params = params.with_errors(ErrorSchedule::new(
            c.error_rho,
            ERROR_DECAY,
            c.seed,
            ErrorTargets::ALL,
        )?);
    }
    Ok(params)
}

/// Validate, write and print the report, then fail if inadmissible.
fn gate(
    c: &ExperimentConfig,
    s: &Setup,
    params: &PdParams,
    report_path: Option<&Path>,
) -> Result<(), CliError> {
    let report = check(c.algorithm, &s.problem, params)?;
    let text = report.to_string();
    print!("{text}");
    if let Some(p) = report_path {
        write_file(p, &text)?;
    }
    if report.admissible {
        Ok(())
    } else {
        Err(CliError::Inadmissible(Box::new(report)))
    }
}

/// Companion dump holding the primal iterate followed by every dual block.
fn state_path(reference: &Path) -> PathBuf {
    reference.with_extension("state.pdf64")
}

fn write_state(path: &Path, s: &Setup, state: &SolverState) -> Result<(), CliError> {
    let w = s.restoration.width();
    let mut data = state.x.clone();
    state.v.iter().for_each(|v| data.extend_from_slice(v));
    let img = Image::new(w, data.len() / w, data)?;
    write_pdf64(&img, path).map_err(|e| io_context(path, e))
}

fn read_state(path: &Path, s: &Setup) -> Result<SolverState, CliError> {
    let img = read_image(path)?;
    let n = s.problem.dim();
    let dual_dims = s.problem.dual_dims();
    if img.width() != s.restoration.width() || img.len() != n + dual_dims.iter().sum::<usize>() {
        return Err(CliError::Config(format!(
            "{}: state does not match the problem",
            path.display()
        )));
    }
    let data = img.into_pixels();
    let (x, mut rest) = data.split_at(n);
    let mut v = Vec::with_capacity(dual_dims.len());
    for d in dual_dims {
        let (block, tail) = rest.split_at(d);
        v.push(block.to_vec());
        rest = tail;
    }
    Ok(SolverState::with_duals(&s.problem, x.to_vec(), v)?)
}

fn solve(
    c: &ExperimentConfig,
    s: &Setup,
    params: &PdParams,
    diag: &Diagnostics,
) -> Result<RunOutput, CliError> {
    let start = match &c.warm_start {
        Some(p) => read_state(p, s)?,
        None => s.restoration.initial_state(&s.problem)?,
    };
    Ok(run(c.algorithm, &s.problem, params, diag, start)?)
}

pub fn restore(c: &ExperimentConfig) -> Result<(), CliError> {
    let s = load_setup(c)?;
    let params = build_params(c, &s, c.max_iter, c.stop_tol)?;
    gate(c, &s, &params, Some(&c.output.join("report.txt")))?;
    let reference = match &c.reference {
        Some(p) => {
            let img = read_image(p)?;
            if (img.width(), img.height()) != (s.restoration.width(), s.restoration.height()) {
                return Err(CliError::Config(format!(
                    "{}: reference has the wrong dimensions",
                    p.display()
                )));
            }
            Some(img.into_pixels())
        }
        None => None,
    };
    let diag = Diagnostics {
        objective: false,
        reference,
        snr_reference: s.clean.as_ref().map(|img| img.pixels().to_vec()),
        record_time: c.record_time,
    };
    let out = solve(c, &s, &params, &diag)?;
    let restored = s.restoration.w1.with_pixels(out.state.x)?;
    write_pair(&c.output, "restored", &restored)?;
    write_file(&c.output.join("trace.csv"), out.trace.to_csv())?;

    let mut summary = String::new();
    let _ = writeln!(summary, "algorithm = {}", c.algorithm);
    let _ = writeln!(summary, "iterations = {}", out.state.n);
    let _ = writeln!(summary, "stop = {:?}", out.stop);
    if let Some(clean) = &s.clean {
        let _ = writeln!(summary, "snr_w1 = {}", snr_db(clean, &s.restoration.w1)?);
        let _ = writeln!(summary, "snr_w2 = {}", snr_db(clean, &s.restoration.w2)?);
        let _ = writeln!(summary, "snr_restored = {}", snr_db(clean, &restored)?);
    }
    if let Some(last) = out.trace.last().and_then(|r| r.dist_to_ref) {
        let _ = writeln!(summary, "dist_to_ref = {last}");
    }
    write_file(&c.output.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

pub fn reference(c: &ExperimentConfig) -> Result<(), CliError> {
    let s = load_setup(c)?;
    let params = build_params(c, &s, c.reference_iters, 0.0)?;
    gate(c, &s, &params, Some(&c.output.join("reference_report.txt")))?;
    let out = solve(c, &s, &params, &Diagnostics::default())?;
    let path: PathBuf = c
        .reference
        .clone()
        .unwrap_or_else(|| c.output.join("reference.pdf64"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let img = s.restoration.w1.with_pixels(out.state.x.clone())?;
    write_pdf64(&img, &path).map_err(|e| io_context(&path, e))?;
    write_state(&state_path(&path), &s, &out.state)?;
    println!("iterations = {}", out.state.n);
    println!("reference = {}", path.display());
    Ok(())
}

pub fn validate(c: &ExperimentConfig) -> Result<(), CliError> {
    let s = match load_setup(c) {
        Ok(s) => s,
        // Admissibility does not depend on the data, so the clean input
        // stands in for both observations when none exist yet.
        Err(CliError::Io(_)) if c.input.is_some() => {
            let img = read_image(c.input.as_deref().expect("checked"))?;
            let restoration = Restoration {
                w1: img.clone(),
                w2: img,
                kernel: Kernel::uniform(c.kernel_size)?,
                noise_variances: (c.noise_var_1, c.noise_var_2),
                kappa: c.kappa,
                primal_constraint: c.primal_constraint,
            };
            let problem = restoration.problem()?;
            Setup {
                restoration,
                problem,
                clean: None,
            }
        }
        Err(e) => return Err(e),
    };
    let params = build_params(c, &s, c.max_iter, c.stop_tol)?;
    gate(c, &s, &params, None)
}
