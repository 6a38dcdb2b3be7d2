use thiserror::Error;

use crate::profile::ActionProfile;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("agent {agent} does not exist (instance has {n} agents)")]
    InvalidAgent { agent: usize, n: usize },

    #[error("profile {profile} references action {action}, but the instance has {m} actions")]
    InvalidProfile {
        profile: ActionProfile,
        action: usize,
        m: usize,
    },

    #[error("{what} needs {size} but the cap is {cap}")]
    Capacity {
        what: &'static str,
        size: u64,
        cap: u64,
    },

    #[error("invalid contract: {0}")]
    InvalidContract(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid reward function: {0}")]
    InvalidReward(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("instance is not binary-action")]
    NotBinary,

    #[error("best-response floor violated for agent {agent}: no best response contains {floor}")]
    FloorViolation { agent: usize, floor: ActionProfile },

    #[error("linear program: {0}")]
    Lp(String),

    #[error("internal invariant failed: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn capacity(what: &'static str, size: u64, cap: u64) -> Self {
        Error::Capacity { what, size, cap }
    }

    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity { .. })
    }
}
