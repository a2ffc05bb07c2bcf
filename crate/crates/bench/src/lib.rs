//! Shared fixtures for the criterion benchmarks.

use addm_core::assembly::{ProblemScope, Reservoir};
use addm_core::fluid::FluidState;
use addm_core::io::{generate_case1_mini, CaseScale, Deck};
use addm_core::linalg::BlockCsrMatrix;
use addm_core::newton::{LinearPreconditioner, NonlinearProblem, ReservoirProblem};

/// A built-in case with its reservoir and initial state.
pub struct Fixture {
    pub deck: Deck,
    pub res: Reservoir,
    pub state: FluidState,
    pub scope: ProblemScope,
}

impl Fixture {
    pub fn case1(scale: CaseScale) -> Self {
        let deck = generate_case1_mini(scale);
        let mut res = deck.build_reservoir().expect("built-in deck");
        let state = deck.initial_state(&res).expect("initial state");
        res.prepare_wells(&state).expect("wells");
        let scope = ProblemScope::global(&res).expect("global scope");
        Self { deck, res, state, scope }
    }

    pub fn problem(&self, dt: f64) -> ReservoirProblem<'_> {
        ReservoirProblem::new(
            &self.res,
            &self.scope,
            self.scope.gather_moles(&self.state),
            dt,
            LinearPreconditioner::Ilu0,
        )
    }

    /// Scaled residual and Jacobian of the first Newton iteration.
    pub fn system(&self, dt: f64) -> (Vec<f64>, BlockCsrMatrix) {
        let p = self.problem(dt);
        p.linearize(&self.scope.gather(&self.state)).expect("assembly")
    }
}
