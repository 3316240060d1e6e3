use thiserror::Error;

use crate::ids::{EsId, RouterId, TaskId, Time};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, msg: String },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("task graph contains a cycle")]
    Cycle,

    #[error("unknown task {0}")]
    UnknownTask(TaskId),

    #[error("unknown end system {0}")]
    UnknownEs(EsId),

    #[error("unknown router {0}")]
    UnknownRouter(RouterId),

    #[error("no route from {from} to {to}")]
    NoRoute { from: EsId, to: EsId },

    #[error("end system {0} has failed")]
    DeadEndpoint(EsId),

    #[error("end system {0} already failed")]
    AlreadyFailed(EsId),

    #[error("task {task}: actual execution {actual} exceeds wcet {wcet}")]
    Overrun { task: TaskId, actual: Time, wcet: Time },

    #[error("unknown mode `{0}`")]
    UnknownMode(String),

    #[error("no live end system available")]
    EmptyPlatform,

    #[error("no ready task can be dispatched ({remaining} tasks left)")]
    Deadlock { remaining: usize },

    #[error("no snapshot at or before t={0}")]
    NoSnapshot(i64),

    #[error("priorities do not cover task {0}")]
    MissingTask(TaskId),

    #[error("task {0} listed more than once")]
    DuplicateTask(TaskId),

    #[error("invalid task count {0}")]
    InvalidCount(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("schedule failed the safety check ({count} violations), first: {first}")]
    Unsafe { count: usize, first: String },

    #[error("corrupt recovery log: {0}")]
    CorruptLog(String),
}

impl Error {
    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse { line: None, msg: msg.into() }
    }

    pub(crate) fn at_line(self, line: usize) -> Self {
        match self {
            Error::Parse { line: None, msg } => Error::Parse { line: Some(line), msg },
            other => other,
        }
    }
}
