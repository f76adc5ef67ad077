//! Digitization operators and path simulation.

mod digitize;
mod simulate;

pub use digitize::{
    accumulated_duration, digitize_path, digitize_scalar, random_timed_path, validate_digital_path, DigitalPath,
    TimedMove, TimedPath, TimedState,
};
pub use simulate::{
    estimate, simulate, write_trace, Ending, Estimate, Interval, Joint, MemorylessPolicy, Policy, Run,
    ScriptedPolicy, UniformPolicy, Z99,
};
