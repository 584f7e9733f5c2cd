use std::fmt;

use serde::{Deserialize, Serialize};

use crate::access::AccessRequest;
use crate::delegation::RightTransferRequest;
use crate::digest::{Canonical, Hash32};
use crate::ids::{AccountId, DelegationId, RoleName, SubjectId};
use crate::policy::{Permission, PermissionPatch, RevocationStrength};

/// The nine transaction kinds, one per tariff row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxKind {
    RoleAssign,
    RoleUpdate,
    RoleRevoke,
    CheckAccess,
    RightTransfer,
    RemoveRightTransfer,
    PermissionAssign,
    PermissionUpdate,
    PermissionRevoke,
}

impl TxKind {
    pub const ALL: [TxKind; 9] = [
        TxKind::RoleAssign,
        TxKind::RoleUpdate,
        TxKind::RoleRevoke,
        TxKind::CheckAccess,
        TxKind::RightTransfer,
        TxKind::RemoveRightTransfer,
        TxKind::PermissionAssign,
        TxKind::PermissionUpdate,
        TxKind::PermissionRevoke,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TxKind::RoleAssign => "role_assign",
            TxKind::RoleUpdate => "role_update",
            TxKind::RoleRevoke => "role_revoke",
            TxKind::CheckAccess => "check_access",
            TxKind::RightTransfer => "right_transfer",
            TxKind::RemoveRightTransfer => "remove_right_transfer",
            TxKind::PermissionAssign => "permission_assign",
            TxKind::PermissionUpdate => "permission_update",
            TxKind::PermissionRevoke => "permission_revoke",
        }
    }

    pub fn parse(s: &str) -> Option<TxKind> {
        TxKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for TxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum TxPayload {
    RoleAssign {
        subject: SubjectId,
        role: RoleName,
    },
    RoleUpdate {
        subject: SubjectId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        old_role: Option<RoleName>,
        new_role: RoleName,
    },
    RoleRevoke {
        subject: SubjectId,
        role: RoleName,
        #[serde(default)]
        strength: RevocationStrength,
    },
    CheckAccess(AccessRequest),
    RightTransfer(RightTransferRequest),
    RemoveRightTransfer {
        delegation: DelegationId,
    },
    PermissionAssign {
        permission: Permission,
    },
    PermissionUpdate {
        identifier: String,
        patch: PermissionPatch,
    },
    PermissionRevoke {
        role: RoleName,
    },
}

impl TxPayload {
    pub fn kind(&self) -> TxKind {
        match self {
            TxPayload::RoleAssign { .. } => TxKind::RoleAssign,
            TxPayload::RoleUpdate { .. } => TxKind::RoleUpdate,
            TxPayload::RoleRevoke { .. } => TxKind::RoleRevoke,
            TxPayload::CheckAccess(_) => TxKind::CheckAccess,
            TxPayload::RightTransfer(_) => TxKind::RightTransfer,
            TxPayload::RemoveRightTransfer { .. } => TxKind::RemoveRightTransfer,
            TxPayload::PermissionAssign { .. } => TxKind::PermissionAssign,
            TxPayload::PermissionUpdate { .. } => TxKind::PermissionUpdate,
            TxPayload::PermissionRevoke { .. } => TxKind::PermissionRevoke,
        }
    }

    /// Canonical payload bytes: compact JSON with fixed field order.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("payload serialization is infallible")
    }

    /// The subject an audit event about this payload concerns.
    pub fn subject(&self) -> Option<&str> {
        match self {
            TxPayload::RoleAssign { subject, .. }
            | TxPayload::RoleUpdate { subject, .. }
            | TxPayload::RoleRevoke { subject, .. } => Some(subject),
            TxPayload::CheckAccess(req) => Some(&req.subject_id),
            TxPayload::RightTransfer(req) => Some(&req.delegate),
            _ => None,
        }
    }
}

/// A signed state transition. The only way policy state changes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub sender: AccountId,
    pub submitted_at: u64,
    #[serde(flatten)]
    pub payload: TxPayload,
    pub signature: Hash32,
}

impl Transaction {
    /// Builds a transaction signed with the sender's key.
    pub fn signed(sender: AccountId, public_key: &str, submitted_at: u64, payload: TxPayload) -> Self {
        let signature = signature_for(&sender, public_key, submitted_at, &payload);
        Transaction { sender, submitted_at, payload, signature }
    }

    pub fn kind(&self) -> TxKind {
        self.payload.kind()
    }

    pub fn verify(&self, public_key: &str) -> bool {
        signature_for(&self.sender, public_key, self.submitted_at, &self.payload) == self.signature
    }

    pub fn write_canonical(&self, out: &mut Canonical) {
        out.str(self.sender.as_str())
            .u64(self.submitted_at)
            .str(self.kind().as_str())
            .bytes(&self.payload.canonical_bytes())
            .hash(&self.signature);
    }

    pub fn id(&self) -> Hash32 {
        let mut c = Canonical::new("rbac-tx-v1");
        self.write_canonical(&mut c);
        c.finish()
    }
}

/// Simulated signature: a digest binding sender, key, time and payload.
pub fn signature_for(sender: &AccountId, public_key: &str, submitted_at: u64, payload: &TxPayload) -> Hash32 {
    let mut c = Canonical::new("rbac-sig-v1");
    c.str(sender.as_str()).str(public_key).u64(submitted_at).bytes(&payload.canonical_bytes());
    c.finish()
}
