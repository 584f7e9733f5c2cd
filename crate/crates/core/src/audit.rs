//! Chain-ordered record of every policy mutation, decision and admin operation.

use serde::{Deserialize, Serialize};

use crate::access::Decision;
use crate::delegation::Delegation;
use crate::engine::AdminOp;
use crate::error::{Error, Result};
use crate::ids::{AccountId, DelegationId, PermissionId};
use crate::policy::{Permission, RevokeOutcome, RoleAssignment};
use crate::tx::Transaction;

/// What an applied transaction did to the policy state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxEffect {
    RoleAssigned(RoleAssignment),
    RoleUpdated(RevokeOutcome),
    RoleRevoked(RevokeOutcome),
    Decision(Decision),
    Delegated(Delegation),
    DelegationsRemoved(Vec<DelegationId>),
    PermissionAssigned(PermissionId),
    PermissionUpdated(Permission),
    PermissionsRevoked(Vec<PermissionId>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TxOutcome {
    Applied {
        effect: TxEffect,
    },
    /// The transaction stays in its block; only its effect is void.
    Failed {
        code: String,
        message: String,
    },
}

impl TxOutcome {
    pub fn failed(err: &Error) -> Self {
        TxOutcome::Failed { code: err.code().to_string(), message: err.to_string() }
    }

    pub fn is_applied(&self) -> bool {
        matches!(self, TxOutcome::Applied { .. })
    }

    pub fn decision(&self) -> Option<&Decision> {
        match self {
            TxOutcome::Applied { effect: TxEffect::Decision(d) } => Some(d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)] // events are built once and kept in a Vec
pub enum AuditPayload {
    Tx {
        tx: Transaction,
        outcome: TxOutcome,
    },
    Admin {
        sender: AccountId,
        op: AdminOp,
    },
    /// Delegations swept at the start of a block because they expired.
    Expired {
        delegations: Vec<DelegationId>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEvent {
    /// Position in the log; a decision's `audit_ref` points here.
    pub index: u64,
    pub block_height: u64,
    pub tx_index: Option<u32>,
    pub timestamp_ms: u64,
    pub event_kind: String,
    pub subject: Option<String>,
    pub payload: AuditPayload,
}

impl AuditEvent {
    pub fn decision(&self) -> Option<&Decision> {
        match &self.payload {
            AuditPayload::Tx { outcome, .. } => outcome.decision(),
            _ => None,
        }
    }
}

/// Filter for [`AuditLog::query`]; unset fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditQuery {
    pub subject: Option<String>,
    pub from_ms: Option<u64>,
    /// Inclusive upper bound.
    pub to_ms: Option<u64>,
    /// Keep only access decisions with this outcome.
    pub allowed: Option<bool>,
}

impl AuditQuery {
    pub fn matches(&self, e: &AuditEvent) -> bool {
        self.subject.as_ref().is_none_or(|s| e.subject.as_ref() == Some(s))
            && self.from_ms.is_none_or(|t| e.timestamp_ms >= t)
            && self.to_ms.is_none_or(|t| e.timestamp_ms <= t)
            && self.allowed.is_none_or(|a| e.decision().is_some_and(|d| d.allowed == a))
    }
}

/// Append-only; events are never edited once recorded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditLog {
    events: Vec<AuditEvent>,
}

impl AuditLog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[AuditEvent] {
        &self.events
    }

    pub fn next_index(&self) -> u64 {
        self.events.len() as u64
    }

    pub(crate) fn push(&mut self, mut event: AuditEvent) -> u64 {
        event.index = self.next_index();
        self.events.push(event);
        self.events.len() as u64 - 1
    }

    pub fn query(&self, q: &AuditQuery) -> Vec<&AuditEvent> {
        self.events.iter().filter(|e| q.matches(e)).collect()
    }

    pub fn to_jsonl(&self) -> String {
        events_to_jsonl(&self.events)
    }
}

pub fn events_to_jsonl<'a>(events: impl IntoIterator<Item = &'a AuditEvent>) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("audit serialization is infallible"));
        out.push('\n');
    }
    out
}

pub fn parse_audit_jsonl(text: &str) -> Result<Vec<AuditEvent>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(i + 1, e)))
        .collect()
}
