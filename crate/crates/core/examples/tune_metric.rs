//! Empirical tuning of the diagonal metric on the shipped fixture.
//!
//! Degrades the fixture as the shipped configs do, computes a long PD2
//! reference, then grid-searches the knobs of `MetricHeuristic` for the
//! fewest iterations to reach a relative distance of 1e-3. The best weight
//! images are written as PDF64 files next to the fixture.
//!
//! Usage: `cargo run -p pdsplit --release --example tune_metric -- fixtures [kappa] [seed]`

use std::path::PathBuf;

use pdsplit::experiment::{
    diagonal_params, heuristic_weights, scalar_params, MetricHeuristic, Restoration,
};
use pdsplit::imaging::{read_pgm, write_pdf64, DegradationSpec, Image, Kernel};
use pdsplit::pdsolve::{run, validate, Algorithm, Diagnostics, PdParams};

const TARGET: f64 = 1e-3;

fn iterations_to_target(
    r: &Restoration,
    params: PdParams,
    reference: &[f64],
) -> Result<Option<usize>, pdsplit::Error> {
    let problem = r.problem()?;
    let report = validate(Algorithm::Pd2, &problem, &params)?;
    if !report.admissible {
        return Ok(None);
    }
    let diag = Diagnostics {
        reference: Some(reference.to_vec()),
        ..Default::default()
    };
    let out = run(
        Algorithm::Pd2,
        &problem,
        &params.with_max_iter(2000),
        &diag,
        r.initial_state(&problem)?,
    )?;
    Ok(out.trace.first_iter_within(TARGET))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "fixtures".into()));
    let kappa: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let clean = read_pgm(dir.join("phantom64.pgm"))?;
    let kernel = Kernel::uniform(7)?;
    let spec = DegradationSpec {
        kernel: kernel.clone(),
        noise_variances: (576.0, 25.0),
        seed,
    };
    let (w1, w2) = spec.apply(&clean)?;
    let r = Restoration {
        w1,
        w2,
        kernel,
        noise_variances: spec.noise_variances,
        kappa,
        primal_constraint: false,
    };
    let problem = r.problem()?;

    // Standard scalar choice: unit-normalized primal step, equal dual steps.
    let (tau, sigma) = (12.0, 0.0088);
    let scalar = scalar_params(&problem, tau, sigma, sigma)?;
    let reference = run(
        Algorithm::Pd2,
        &problem,
        &scalar.clone().with_max_iter(20_000),
        &Diagnostics::default(),
        r.initial_state(&problem)?,
    )?
    .state
    .x;
    println!(
        "scalar tau = {tau} sigma = {sigma}: {:?} iterations",
        iterations_to_target(&r, scalar, &reference)?
    );

    let mut best: Option<(usize, MetricHeuristic)> = None;
    for boundary_shift in [0.0, 4.0] {
        for box_ratio in [0.03, 0.1, 0.3] {
            for target_mu in [1.0, 1.2, 1.4] {
                for target_zeta in [0.02, 0.05] {
                    let heur = MetricHeuristic {
                        boundary_shift,
                        box_ratio,
                        target_mu,
                        target_zeta,
                    };
                    let (u, s1, s2) = heuristic_weights(&r, &problem, heur)?;
                    let it = iterations_to_target(&r, diagonal_params(&u, &s1, &s2)?, &reference)?;
                    println!("{heur:?}: {it:?}");
                    if let Some(it) = it {
                        if best.is_none_or(|(b, _)| it < b) {
                            best = Some((it, heur));
                        }
                    }
                }
            }
        }
    }
    let (it, heur) = best.ok_or("no admissible candidate reached the target")?;
    println!("best: {heur:?} with {it} iterations");
    let (u, s1, s2) = heuristic_weights(&r, &problem, heur)?;
    let (w, h) = (r.width(), r.height());
    for (name, data) in [
        ("weights_primal.pdf64", u),
        ("weights_box.pdf64", s1),
        ("weights_tv.pdf64", s2),
    ] {
        write_pdf64(&Image::new(w, h, data)?, dir.join(name))?;
    }
    Ok(())
}
