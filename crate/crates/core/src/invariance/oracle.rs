use super::{EnvSample, InvarianceError, InvarianceQuery, InvarianceTest, ShiftTester, TestResult};
use crate::mss::InterventionScenario;

/// Ground-truth verdicts: `p = 0` when the target is d-connected to the
/// environment node given Z in the pairwise augmented true DAG, else `p = 1`.
#[derive(Debug, Clone)]
pub struct OracleInvariance {
    scenario: InterventionScenario,
}

impl OracleInvariance {
    pub fn new(scenario: InterventionScenario) -> Self {
        OracleInvariance { scenario }
    }

    pub fn scenario(&self) -> &InterventionScenario {
        &self.scenario
    }
}

impl ShiftTester for OracleInvariance {
    fn num_vars(&self) -> usize {
        self.scenario.num_vars()
    }

    fn num_envs(&self) -> usize {
        self.scenario.num_envs()
    }

    fn test_query(&self, q: &InvarianceQuery) -> Result<TestResult, InvarianceError> {
        q.check_dims(self.num_vars())?;
        let aug = self
            .scenario
            .pairwise_augmented(q.env_a, q.env_b)
            .map_err(|e| InvarianceError::InvalidQuery(e.to_string()))?;
        let sep = aug
            .d_separated(q.target, aug.env(), &q.cond)
            .map_err(|e| InvarianceError::InvalidQuery(e.to_string()))?;
        let p = if sep { 1.0 } else { 0.0 };
        Ok(TestResult::new(p, 1.0 - p, "oracle"))
    }
}

/// Ignores the samples and answers from the query's environment indices, so
/// the oracle can stand in wherever a data-driven test is expected.
impl InvarianceTest for OracleInvariance {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn test(&self, _a: &EnvSample, _b: &EnvSample, q: &InvarianceQuery) -> Result<TestResult, InvarianceError> {
        self.test_query(q)
    }
}
