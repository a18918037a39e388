//! Grid search for the total-variation weight on the shipped fixture.
//!
//! Degrades the image with the default blur, noise variances and seed, runs
//! PD2 with scalar metrics for each candidate and prints the restored SNR.
//!
//! Usage: `cargo run -p pdsplit --release --example kappa_search -- fixtures/phantom64.pgm [seed] [iters]`

use pdsplit::experiment::{scalar_params, Restoration};
use pdsplit::imaging::{read_pgm, snr_db, DegradationSpec, Kernel};
use pdsplit::pdsolve::{run, Algorithm, Diagnostics};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| "fixtures/phantom64.pgm".into());
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let iters: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3000);

    let clean = read_pgm(&path)?;
    let kernel = Kernel::uniform(7)?;
    let spec = DegradationSpec {
        kernel: kernel.clone(),
        noise_variances: (576.0, 25.0),
        seed,
    };
    let (w1, w2) = spec.apply(&clean)?;
    println!(
        "snr(w1) = {:.3} dB, snr(w2) = {:.3} dB",
        snr_db(&clean, &w1)?,
        snr_db(&clean, &w2)?
    );

    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for kappa in [
        0.005, 0.01, 0.02, 0.03, 0.05, 0.07, 0.1, 0.15, 0.2, 0.3, 0.5,
    ] {
        let r = Restoration {
            w1: w1.clone(),
            w2: w2.clone(),
            kernel: kernel.clone(),
            noise_variances: spec.noise_variances,
            kappa,
            primal_constraint: false,
        };
        let problem = r.problem()?;
        let params = scalar_params(&problem, 10.0, 0.01, 0.01)?.with_max_iter(iters);
        let out = run(
            Algorithm::Pd2,
            &problem,
            &params,
            &Diagnostics::default(),
            r.initial_state(&problem)?,
        )?;
        let snr = snr_db(&clean, &clean.with_pixels(out.state.x)?)?;
        println!("kappa = {kappa:<6} snr = {snr:.3} dB");
        if snr > best.1 {
            best = (kappa, snr);
        }
    }
    println!("best kappa = {} ({:.3} dB)", best.0, best.1);
    Ok(())
}
