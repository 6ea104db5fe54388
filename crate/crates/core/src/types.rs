//! Domain types: steps, trajectories and two-arm datasets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Experiment arm a user was allocated to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    A,
    B,
}

impl Arm {
    pub fn label(self) -> &'static str {
        match self {
            Arm::A => "A",
            Arm::B => "B",
        }
    }
}

/// One logged interaction: state, taken action, observed reward and the
/// probability the logging policy assigned to that action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub logged_propensity: f64,
}

impl Step {
    pub fn new(state: Vec<f64>, action: usize, reward: f64, logged_propensity: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::Argument(format!("reward {reward} outside [0, 1]")));
        }
        if !(logged_propensity > 0.0 && logged_propensity <= 1.0) {
            return Err(Error::Argument(format!(
                "logged_propensity {logged_propensity} outside (0, 1]"
            )));
        }
        Ok(Step { state, action, reward, logged_propensity })
    }
}

/// One user's ordered interaction record, tagged with its experiment arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub user_id: String,
    pub arm: Arm,
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn new(user_id: String, arm: Arm, steps: Vec<Step>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Argument(format!("trajectory {user_id} has no steps")));
        }
        let d = steps[0].state.len();
        if steps.iter().any(|s| s.state.len() != d) {
            return Err(Error::Integrity(format!(
                "trajectory {user_id} mixes state dimensions"
            )));
        }
        Ok(Trajectory { user_id, arm, steps })
    }

    /// Number of steps T.
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// State dimension d.
    pub fn state_dim(&self) -> usize {
        self.steps[0].state.len()
    }
}

/// A two-arm collection of trajectories with unique user ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    trajectories: Vec<Trajectory>,
    n_a: usize,
    n_b: usize,
}

impl Dataset {
    pub fn new(trajectories: Vec<Trajectory>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for t in &trajectories {
            if !seen.insert(t.user_id.as_str()) {
                return Err(Error::Integrity(format!("duplicate user_id {}", t.user_id)));
            }
        }
        if let Some(first) = trajectories.first() {
            let d = first.state_dim();
            if trajectories.iter().any(|t| t.state_dim() != d) {
                return Err(Error::Integrity("mixed state dimensions across trajectories".into()));
            }
        }
        let n_a = trajectories.iter().filter(|t| t.arm == Arm::A).count();
        let n_b = trajectories.len() - n_a;
        Ok(Dataset { trajectories, n_a, n_b })
    }

    pub fn empty() -> Self {
        Dataset { trajectories: Vec::new(), n_a: 0, n_b: 0 }
    }

    /// Concatenate two datasets, keeping user ids unique.
    pub fn merge(self, other: Dataset) -> Result<Self> {
        let mut t = self.trajectories;
        t.extend(other.trajectories);
        Dataset::new(t)
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn iter_arm(&self, arm: Arm) -> impl Iterator<Item = &Trajectory> {
        self.trajectories.iter().filter(move |t| t.arm == arm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(p: f64) -> Step {
        Step::new(vec![0.0], 0, 0.5, p).unwrap()
    }

    #[test]
    fn step_validation() {
        assert!(Step::new(vec![], 0, 1.5, 0.5).is_err());
        assert!(Step::new(vec![], 0, 0.5, 0.0).is_err());
        assert!(Step::new(vec![], 0, 0.5, 1.0).is_ok());
    }

    #[test]
    fn trajectory_rejects_empty_and_mixed_dims() {
        assert!(Trajectory::new("u".into(), Arm::A, vec![]).is_err());
        let bad = vec![step(0.5), Step::new(vec![0.0, 1.0], 0, 0.5, 0.5).unwrap()];
        assert!(Trajectory::new("u".into(), Arm::A, bad).is_err());
    }

    #[test]
    fn dataset_counts_and_unique_ids() {
        let t1 = Trajectory::new("u1".into(), Arm::A, vec![step(0.5)]).unwrap();
        let t2 = Trajectory::new("u2".into(), Arm::B, vec![step(0.5)]).unwrap();
        let ds = Dataset::new(vec![t1.clone(), t2]).unwrap();
        assert_eq!((ds.n_a(), ds.n_b()), (1, 1));
        let dup = Dataset::new(vec![t1.clone(), t1]);
        assert!(dup.is_err());
    }
}
