//! Refereed verification games for outsourced computation, with the deposit
//! ledger and the competition, contract and incentive protocols built on top.

pub mod agents;
pub mod audit;
pub mod codec;
pub mod games;
pub mod ledger;
pub mod play;
pub mod protocols;
pub mod referee;
pub mod scenario;
pub mod simnet;
pub mod transcript;
pub mod types;

pub use games::{Instance, InstanceError, Task, VerificationGame};
pub use play::{play_game, Strategy};
pub use referee::{budget_report, verify_step, BudgetReport, CostMeter};
pub use transcript::{Status, Transcript, TranscriptError};
pub use types::*;
