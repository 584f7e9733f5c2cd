//! Role-based access control on a simulated delegated-proof-of-stake chain.
//!
//! Policy state (roles, assignments, permissions, delegations, constraints)
//! changes only through signed transactions sealed into hash-linked blocks.

pub mod access;
pub mod audit;
pub mod bench;
pub mod bundle;
pub mod constraints;
pub mod context;
pub mod delegation;
pub mod digest;
pub mod engine;
pub mod error;
pub mod hierarchy;
pub mod ids;
pub mod ledger;
pub mod metrics;
pub mod policy;
pub mod tx;

pub use access::{AccessRequest, Decision, DecisionReason};
pub use context::{Comparator, ContextCondition, RequestContext, Value};
pub use delegation::{Delegation, DelegationMode, RightTransferRequest};
pub use digest::Hash32;
pub use engine::{AdminOp, Engine, ExecutionTiming, Genesis, JournalEntry};
pub use error::{Error, Result};
pub use ids::{AccountId, DelegationId};
pub use ledger::{AccountSpec, Block, ChainConfig, Ledger, ResourceTariff};
pub use policy::{Mode, Permission, PermissionPatch, PolicyState, RevocationStrength};
pub use tx::{Transaction, TxKind, TxPayload};
