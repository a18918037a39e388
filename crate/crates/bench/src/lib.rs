//! Benchmark fixtures.

use pdsplit::experiment::{scalar_params, Restoration};
use pdsplit::imaging::{DegradationSpec, Image, Kernel};
use pdsplit::{CompositeProblem, PdParams, SolverState};

/// Two-tone square phantom with both observations, square of side `side`.
pub fn restoration(side: usize) -> Restoration {
    let px = (0..side * side)
        .map(|i| {
            let (r, c) = (i / side, i % side);
            let inside =
                (side / 4..3 * side / 4).contains(&r) && (side / 4..3 * side / 4).contains(&c);
            if inside {
                200.0
            } else {
                30.0
            }
        })
        .collect();
    let clean = Image::new(side, side, px).expect("positive side");
    let spec = DegradationSpec {
        kernel: Kernel::uniform(7).expect("odd size"),
        noise_variances: (576.0, 25.0),
        seed: 1,
    };
    let (w1, w2) = spec.apply(&clean).expect("valid variances");
    Restoration {
        w1,
        w2,
        kernel: spec.kernel,
        noise_variances: spec.noise_variances,
        kappa: 0.1,
        primal_constraint: false,
    }
}

pub struct Fixture {
    pub restoration: Restoration,
    pub problem: CompositeProblem,
    pub params: PdParams,
    pub state: SolverState,
}

pub fn fixture(side: usize) -> Fixture {
    let restoration = restoration(side);
    let problem = restoration.problem().expect("consistent problem");
    let params = scalar_params(&problem, 12.0, 0.0088, 0.0088).expect("positive steps");
    let state = restoration
        .initial_state(&problem)
        .expect("matching dimensions");
    Fixture {
        restoration,
        problem,
        params,
        state,
    }
}
