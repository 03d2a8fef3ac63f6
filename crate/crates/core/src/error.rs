use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    /// Masses do not add up to one.
    NotAProbability {
        total: f64,
    },
    NegativeMass {
        degree: Option<u32>,
        mass: f64,
    },
    InvalidOccupancy(String),
    InvalidGraph(String),
    InvalidLaw(String),
    InvalidSchedule(String),
    EmptyLog,
    MalformedLog(String),
    ConfigInvalid(String),
    DomainError {
        x: f64,
    },
    /// The projection after an integration step moved the state by more
    /// than the allowed amount; the step size is too coarse.
    StepTooLarge {
        time: f64,
        correction: f64,
    },
    LoadOutOfRange {
        lambda: f64,
    },
    NoFiniteSupport,
    IndexOutOfRange {
        index: usize,
        min: usize,
    },
    CapTooSmall {
        mass_at_cap: f64,
    },
    StateSpaceTooLarge {
        states: usize,
        limit: usize,
    },
    SingularSystem,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotAProbability { total } => {
                write!(f, "masses sum to {total}, expected 1 within 1e-12")
            }
            Error::NegativeMass {
                degree: Some(d),
                mass,
            } => {
                write!(f, "mass {mass} at degree {d} is not in [0, 1]")
            }
            Error::NegativeMass { degree: None, mass } => {
                write!(f, "mass at infinity {mass} is not in [0, 1]")
            }
            Error::InvalidOccupancy(msg) => write!(f, "invalid occupancy state: {msg}"),
            Error::InvalidGraph(msg) => write!(f, "invalid graph: {msg}"),
            Error::InvalidLaw(msg) => write!(f, "invalid graph law: {msg}"),
            Error::InvalidSchedule(msg) => write!(f, "invalid resampling schedule: {msg}"),
            Error::EmptyLog => f.write_str("event log has no intervals"),
            Error::MalformedLog(msg) => write!(f, "malformed event log: {msg}"),
            Error::ConfigInvalid(msg) => write!(f, "invalid configuration: {msg}"),
            Error::DomainError { x } => write!(f, "argument {x} outside [0, 1]"),
            Error::StepTooLarge { time, correction } => write!(
                f,
                "projection correction {correction:e} at t = {time} exceeds 1e-6; reduce the step"
            ),
            Error::LoadOutOfRange { lambda } => write!(f, "load {lambda} outside (0, 1)"),
            Error::NoFiniteSupport => f.write_str("degree distribution has no finite support"),
            Error::IndexOutOfRange { index, min } => {
                write!(f, "index {index} below minimum {min}")
            }
            Error::CapTooSmall { mass_at_cap } => write!(
                f,
                "stationary mass {mass_at_cap:e} at the queue cap exceeds 1e-8; raise the cap"
            ),
            Error::StateSpaceTooLarge { states, limit } => {
                write!(f, "{states} states exceeds the dense-solve limit {limit}")
            }
            Error::SingularSystem => f.write_str("linear system is singular"),
        }
    }
}

impl core::error::Error for Error {}
