//! Instance generators and exact baselines used to validate strategies.

pub mod adversary;
pub mod oracle;
pub mod random;

pub use adversary::{gen_nrt_adversary, gen_rrnf_adversary, AdversaryError, NrtParams, RrnfAdversary, RrnfParams};
pub use oracle::{brute_force_opt, schedule_usage, OptSolution, OracleError};
pub use random::{random_instance, RandomTrace};
