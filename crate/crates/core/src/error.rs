use thiserror::Error;

use crate::constraints::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every engine failure. The `Display` form always starts with the
/// machine-readable code returned by [`Error::code`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // ledger
    #[error("UnknownAccount: account `{0}` is not registered")]
    UnknownAccount(String),
    #[error("DuplicateAccount: account `{0}` already exists")]
    DuplicateAccount(String),
    #[error("InvalidAccountName: `{0}` (1-12 chars from a-z, 1-5, '.')")]
    InvalidAccountName(String),
    #[error("BadSignature: signature does not bind sender `{0}` to the payload")]
    BadSignature(String),
    #[error("InsufficientResources: account `{account}` needs {needed_cpu_us} us CPU / {needed_net_bytes} B NET, has {cpu_left_us} us / {net_left_bytes} B")]
    InsufficientResources {
        account: String,
        needed_cpu_us: u64,
        needed_net_bytes: u64,
        cpu_left_us: u64,
        net_left_bytes: u64,
    },
    #[error("InsufficientRam: account `{account}` needs {needed} B RAM, has {available} B")]
    InsufficientRam { account: String, needed: u64, available: u64 },
    #[error("RamDelegationForbidden: RAM cannot be delegated")]
    RamDelegationForbidden,
    #[error("ClockRegression: now {now_ms} ms is before chain tip {tip_ms} ms")]
    ClockRegression { now_ms: u64, tip_ms: u64 },
    #[error("SlotNotDue: next block is scheduled at {due_ms} ms, now is {now_ms} ms")]
    SlotNotDue { now_ms: u64, due_ms: u64 },
    #[error("UnknownProducer: `{0}` is not in the producer schedule")]
    UnknownProducer(String),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),

    // policy
    #[error("NotIssuer: sender `{0}` is not the policy issuer")]
    NotIssuer(String),
    #[error("SoDViolation: {0}")]
    SoDViolation(Violation),
    #[error("CardinalityExceeded: {0}")]
    CardinalityExceeded(Violation),
    #[error("UnknownRole: `{0}`")]
    UnknownRole(String),
    #[error("DuplicateRole: `{0}`")]
    DuplicateRole(String),
    #[error("DuplicateAssignment: `{subject}` already holds `{role}`")]
    DuplicateAssignment { subject: String, role: String },
    #[error("NoExistingAssignment: `{subject}` does not hold `{role}`")]
    NoExistingAssignment { subject: String, role: String },
    #[error("AmbiguousAssignment: `{0}` holds several roles, name the one to replace")]
    AmbiguousAssignment(String),
    #[error("DuplicateIdentifier: permission `{0}` already exists")]
    DuplicateIdentifier(String),
    #[error("UnknownIdentifier: permission `{0}`")]
    UnknownIdentifier(String),
    #[error("NoPermissionsForRole: `{0}`")]
    NoPermissionsForRole(String),
    #[error("CycleDetected: edge `{senior}` -> `{junior}` closes a cycle")]
    CycleDetected { senior: String, junior: String },
    #[error("SelfExclusion: role `{0}` cannot be mutually exclusive with itself")]
    SelfExclusion(String),
    #[error("ConstraintConflict: current state already violates {0}")]
    ConstraintConflict(Violation),
    #[error("InvalidRule: {0}")]
    InvalidRule(String),

    // delegation
    #[error("NotRoleHolder: `{subject}` does not hold `{role}`")]
    NotRoleHolder { subject: String, role: String },
    #[error("ObligationNotDelegable: role `{0}` carries no authorization-mode permission")]
    ObligationNotDelegable(String),
    #[error("SingleStepExhausted: delegation #{0} cannot be re-delegated")]
    SingleStepExhausted(u64),
    #[error("ExpiredParent: delegation #{0} is not live")]
    ExpiredParent(u64),
    #[error("NotAuthorizedRevoker: `{requester}` may not remove delegation #{delegation}")]
    NotAuthorizedRevoker { requester: String, delegation: u64 },
    #[error("UnknownDelegation: #{0}")]
    UnknownDelegation(u64),
    #[error("InvalidDelegation: {0}")]
    InvalidDelegation(String),

    // metrics
    #[error("EmptyWindow: no transactions in the metrics window")]
    EmptyWindow,
    #[error("DegenerateWindow: t_j ({t_j_ms} ms) must be after t_i ({t_i_ms} ms)")]
    DegenerateWindow { t_i_ms: f64, t_j_ms: f64 },
    #[error("InvalidScenario: {0}")]
    InvalidScenario(String),

    // io
    #[error("ParseError: line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("ReplayMismatch: block {height}: {message}")]
    ReplayMismatch { height: u64, message: String },
    #[error("Io: {0}")]
    Io(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnknownAccount(_) => "UnknownAccount",
            Error::DuplicateAccount(_) => "DuplicateAccount",
            Error::InvalidAccountName(_) => "InvalidAccountName",
            Error::BadSignature(_) => "BadSignature",
            Error::InsufficientResources { .. } => "InsufficientResources",
            Error::InsufficientRam { .. } => "InsufficientRam",
            Error::RamDelegationForbidden => "RamDelegationForbidden",
            Error::ClockRegression { .. } => "ClockRegression",
            Error::SlotNotDue { .. } => "SlotNotDue",
            Error::UnknownProducer(_) => "UnknownProducer",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::NotIssuer(_) => "NotIssuer",
            Error::SoDViolation(_) => "SoDViolation",
            Error::CardinalityExceeded(_) => "CardinalityExceeded",
            Error::UnknownRole(_) => "UnknownRole",
            Error::DuplicateRole(_) => "DuplicateRole",
            Error::DuplicateAssignment { .. } => "DuplicateAssignment",
            Error::NoExistingAssignment { .. } => "NoExistingAssignment",
            Error::AmbiguousAssignment(_) => "AmbiguousAssignment",
            Error::DuplicateIdentifier(_) => "DuplicateIdentifier",
            Error::UnknownIdentifier(_) => "UnknownIdentifier",
            Error::NoPermissionsForRole(_) => "NoPermissionsForRole",
            Error::CycleDetected { .. } => "CycleDetected",
            Error::SelfExclusion(_) => "SelfExclusion",
            Error::ConstraintConflict(_) => "ConstraintConflict",
            Error::InvalidRule(_) => "InvalidRule",
            Error::NotRoleHolder { .. } => "NotRoleHolder",
            Error::ObligationNotDelegable(_) => "ObligationNotDelegable",
            Error::SingleStepExhausted(_) => "SingleStepExhausted",
            Error::ExpiredParent(_) => "ExpiredParent",
            Error::NotAuthorizedRevoker { .. } => "NotAuthorizedRevoker",
            Error::UnknownDelegation(_) => "UnknownDelegation",
            Error::InvalidDelegation(_) => "InvalidDelegation",
            Error::EmptyWindow => "EmptyWindow",
            Error::DegenerateWindow { .. } => "DegenerateWindow",
            Error::InvalidScenario(_) => "InvalidScenario",
            Error::Parse { .. } => "ParseError",
            Error::ReplayMismatch { .. } => "ReplayMismatch",
            Error::Io(_) => "Io",
        }
    }

    pub(crate) fn parse(line: usize, message: impl ToString) -> Self {
        Error::Parse { line, message: message.to_string() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
