//! Check Access: the (subject, operation, object) decision function.

use serde::{Deserialize, Serialize};

use crate::context::{evaluate_context, RequestContext};
use crate::ids::{PermissionId, SubjectId};
use crate::policy::{Mode, PolicyState};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessRequest {
    pub subject_id: SubjectId,
    pub operation: String,
    pub object: String,
    pub at_ms: u64,
    #[serde(default)]
    pub context: RequestContext,
}

impl AccessRequest {
    pub fn new(subject: &str, operation: &str, object: &str, at_ms: u64) -> Self {
        AccessRequest {
            subject_id: subject.into(),
            operation: operation.into(),
            object: object.into(),
            at_ms,
            context: RequestContext::default(),
        }
    }

    pub fn with_context(mut self, context: RequestContext) -> Self {
        self.context = context;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionReason {
    /// An A+ row matched.
    Permitted,
    /// Only A- rows matched, and one of them had its exception active.
    ExceptionPermitted,
    /// An A- row matched without an active exception (deny overrides).
    ExplicitDeny,
    /// No authorization row matched. Also returned for subjects the policy
    /// has never heard of.
    NoMatchingPermission,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub allowed: bool,
    pub matched_permission: Option<PermissionId>,
    /// Applicable O+/O- rows for the caller to enforce.
    pub obligations: Vec<PermissionId>,
    pub reason: DecisionReason,
    pub audit_ref: Option<u64>,
}

impl PolicyState {
    /// Pure decision over the current state; `audit_ref` is left unset.
    pub fn check_access(&self, req: &AccessRequest) -> Decision {
        let roles = self.effective_roles(&req.subject_id, req.at_ms);
        let bound = self.obligated_roles(&req.subject_id, req.at_ms);
        let matching = |p: &&crate::policy::Permission| {
            p.action == req.operation && p.target == req.object && evaluate_context(&p.constraints, &req.context)
        };
        let applicable: Vec<_> = self
            .permissions()
            .filter(|p| p.mode.is_authorization() && roles.contains(&p.role))
            .filter(matching)
            .collect();
        let obligations = self
            .permissions()
            .filter(|p| p.mode.is_obligation() && bound.contains(&p.role))
            .filter(matching)
            .map(|p| p.identifier.clone())
            .collect();

        let exception_active =
            |p: &&crate::policy::Permission| p.exception.as_ref().is_some_and(|e| req.context.exceptions.contains(e));

        let negatives: Vec<_> = applicable.iter().filter(|p| p.mode == Mode::AuthNegative).collect();

        let (allowed, matched, reason) = if let Some(deny) = negatives.iter().find(|p| !exception_active(p)) {
            (false, Some(deny.identifier.clone()), DecisionReason::ExplicitDeny)
        } else if let Some(grant) = applicable.iter().find(|p| p.mode == Mode::AuthPositive) {
            (true, Some(grant.identifier.clone()), DecisionReason::Permitted)
        } else if let Some(exc) = negatives.first() {
            (true, Some(exc.identifier.clone()), DecisionReason::ExceptionPermitted)
        } else {
            (false, None, DecisionReason::NoMatchingPermission)
        };
        Decision { allowed, matched_permission: matched, obligations, reason, audit_ref: None }
    }
}
