use nalgebra::{DVector, DVectorView};

use crate::dynamics::{Input, State, Trajectory};

use super::ConsensusError;

/// Shape of a stacked copy vector: `agents` blocks, each holding `horizon + 1`
/// states of length `2 * dim` followed by `horizon` inputs of length `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CopyLayout {
    pub agents: usize,
    pub dim: usize,
    pub horizon: usize,
}

impl CopyLayout {
    pub fn new(agents: usize, dim: usize, horizon: usize) -> Self {
        Self {
            agents,
            dim,
            horizon,
        }
    }

    pub fn state_len(&self) -> usize {
        2 * self.dim
    }

    pub fn block_len(&self) -> usize {
        self.state_len() * (self.horizon + 1) + self.dim * self.horizon
    }

    pub fn len(&self) -> usize {
        self.agents * self.block_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block_offset(&self, agent: usize) -> usize {
        agent * self.block_len()
    }

    pub fn state_offset(&self, agent: usize, k: usize) -> usize {
        self.block_offset(agent) + k * self.state_len()
    }

    pub fn input_offset(&self, agent: usize, k: usize) -> usize {
        self.block_offset(agent) + self.state_len() * (self.horizon + 1) + k * self.dim
    }
}

/// One agent's local copies `v^i = ([s_j^i, u_j^i])_j` of every agent's
/// horizon trajectory, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct CopyVector {
    layout: CopyLayout,
    data: DVector<f64>,
}

/// Per-block mean of all agents' copy vectors.
pub type NetworkAverage = CopyVector;
/// Consensus multiplier `γ^i`, shaped like a copy vector.
pub type Multiplier = CopyVector;

impl CopyVector {
    pub fn zeros(layout: CopyLayout) -> Self {
        Self {
            layout,
            data: DVector::zeros(layout.len()),
        }
    }

    pub fn from_data(layout: CopyLayout, data: DVector<f64>) -> Result<Self, ConsensusError> {
        if data.len() != layout.len() {
            return Err(ConsensusError::ShapeMismatch {
                expected: layout,
                got_len: data.len(),
            });
        }
        Ok(Self { layout, data })
    }

    pub fn layout(&self) -> CopyLayout {
        self.layout
    }

    pub fn data(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut DVector<f64> {
        &mut self.data
    }

    pub fn into_data(self) -> DVector<f64> {
        self.data
    }

    pub fn state(&self, agent: usize, k: usize) -> DVectorView<'_, f64> {
        let off = self.layout.state_offset(agent, k);
        self.data.rows(off, self.layout.state_len())
    }

    pub fn position(&self, agent: usize, k: usize) -> DVectorView<'_, f64> {
        let off = self.layout.state_offset(agent, k);
        self.data.rows(off, self.layout.dim)
    }

    pub fn input(&self, agent: usize, k: usize) -> DVectorView<'_, f64> {
        let off = self.layout.input_offset(agent, k);
        self.data.rows(off, self.layout.dim)
    }

    pub fn set_state(&mut self, agent: usize, k: usize, s: &State) {
        let off = self.layout.state_offset(agent, k);
        self.data.rows_mut(off, self.layout.state_len()).copy_from(s);
    }

    pub fn set_input(&mut self, agent: usize, k: usize, u: &Input) {
        let off = self.layout.input_offset(agent, k);
        self.data.rows_mut(off, self.layout.dim).copy_from(u);
    }

    /// Contiguous slice of agent `j`'s block.
    pub fn block(&self, agent: usize) -> DVectorView<'_, f64> {
        self.data
            .rows(self.layout.block_offset(agent), self.layout.block_len())
    }

    pub fn trajectory(&self, agent: usize) -> Trajectory {
        let n = self.layout.horizon;
        Trajectory {
            states: (0..=n).map(|k| self.state(agent, k).into_owned()).collect(),
            inputs: (0..n).map(|k| self.input(agent, k).into_owned()).collect(),
        }
    }

    pub fn set_trajectory(&mut self, agent: usize, traj: &Trajectory) -> Result<(), ConsensusError> {
        let n = self.layout.horizon;
        let ok = traj.states.len() == n + 1
            && traj.inputs.len() == n
            && traj.states.iter().all(|s| s.len() == self.layout.state_len())
            && traj.inputs.iter().all(|u| u.len() == self.layout.dim);
        if !ok {
            return Err(ConsensusError::TrajectoryShape { agent });
        }
        for (k, s) in traj.states.iter().enumerate() {
            self.set_state(agent, k, s);
        }
        for (k, u) in traj.inputs.iter().enumerate() {
            self.set_input(agent, k, u);
        }
        Ok(())
    }

    pub fn check_same_shape(&self, other: &CopyVector) -> Result<(), ConsensusError> {
        if self.layout == other.layout {
            Ok(())
        } else {
            Err(ConsensusError::ShapeMismatch {
                expected: self.layout,
                got_len: other.data.len(),
            })
        }
    }

    /// Receding-horizon shift: entry `k` takes entry `k + 1`, last entry repeated.
    pub fn shifted(&self) -> CopyVector {
        let mut out = self.clone();
        let n = self.layout.horizon;
        for j in 0..self.layout.agents {
            for k in 0..n {
                out.set_state(j, k, &self.state(j, k + 1).into_owned());
            }
            for k in 0..n.saturating_sub(1) {
                out.set_input(j, k, &self.input(j, k + 1).into_owned());
            }
        }
        out
    }
}
