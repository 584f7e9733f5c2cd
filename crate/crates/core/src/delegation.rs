//! Right transfers between subjects: creation, removal, expiry and cascade.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{DelegationId, RoleName, SubjectId};
use crate::policy::PolicyState;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelegationMode {
    /// Both delegator and delegate may use the role.
    #[default]
    Grant,
    /// The delegator's use of the role is suspended while the delegation lives.
    Transfer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delegation {
    pub id: DelegationId,
    pub delegator: SubjectId,
    pub delegate: SubjectId,
    pub role: RoleName,
    /// Inactive before this time, when set.
    pub start_ms: Option<u64>,
    /// Absent for a permanent delegation.
    pub expiry_ms: Option<u64>,
    pub mode: DelegationMode,
    #[serde(rename = "multiStepDelegatable")]
    pub multi_step_delegatable: bool,
    #[serde(rename = "levelsofDelegation")]
    pub levels_of_delegation: u32,
    #[serde(rename = "remainingLevels")]
    pub remaining_levels: u32,
    pub parent: Option<DelegationId>,
    pub created_at: u64,
}

impl Delegation {
    fn within_window(&self, at_ms: u64) -> bool {
        self.start_ms.is_none_or(|s| s <= at_ms) && self.expiry_ms.is_none_or(|e| at_ms < e)
    }
}

/// Payload of a right transfer transaction. Exactly one of `expiry_ms` and
/// `duration_ms` may be given; `duration_ms` is relative to the time the
/// transaction is applied.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RightTransferRequest {
    pub delegate: SubjectId,
    pub role: RoleName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expiry_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<u64>,
    #[serde(default)]
    pub mode: DelegationMode,
    #[serde(default)]
    pub multi_step: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<u32>,
}

impl RightTransferRequest {
    pub fn new(delegate: &str, role: &str) -> Self {
        RightTransferRequest { delegate: delegate.into(), role: role.into(), ..Default::default() }
    }

    pub fn expiring(mut self, expiry_ms: u64) -> Self {
        self.expiry_ms = Some(expiry_ms);
        self
    }

    pub fn transfer(mut self) -> Self {
        self.mode = DelegationMode::Transfer;
        self
    }

    pub fn multi_step(mut self, levels: u32) -> Self {
        self.multi_step = true;
        self.levels = Some(levels);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DelegationStore {
    records: BTreeMap<DelegationId, Delegation>,
    next_id: u64,
}

impl DelegationStore {
    pub fn iter(&self) -> impl Iterator<Item = &Delegation> {
        self.records.values()
    }

    pub fn get(&self, id: DelegationId) -> Option<&Delegation> {
        self.records.get(&id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// A delegation is live inside its own window while its whole parent
    /// chain is live too.
    pub fn is_live(&self, id: DelegationId, at_ms: u64) -> bool {
        let mut cursor = self.records.get(&id);
        while let Some(d) = cursor {
            if !d.within_window(at_ms) {
                return false;
            }
            match d.parent {
                None => return true,
                Some(p) => cursor = self.records.get(&p),
            }
        }
        false
    }

    fn insert(&mut self, mut d: Delegation) -> Delegation {
        d.id = DelegationId(self.next_id);
        self.next_id += 1;
        self.records.insert(d.id, d.clone());
        d
    }

    /// Removes `roots` and every transitive re-delegation. Returned ids are sorted.
    fn remove_trees(&mut self, roots: impl IntoIterator<Item = DelegationId>) -> Vec<DelegationId> {
        let mut doomed: BTreeSet<DelegationId> = roots.into_iter().filter(|id| self.records.contains_key(id)).collect();
        loop {
            let more: Vec<DelegationId> = self
                .records
                .values()
                .filter(|d| !doomed.contains(&d.id) && d.parent.is_some_and(|p| doomed.contains(&p)))
                .map(|d| d.id)
                .collect();
            if more.is_empty() {
                break;
            }
            doomed.extend(more);
        }
        for id in &doomed {
            self.records.remove(id);
        }
        doomed.into_iter().collect()
    }
}

impl PolicyState {
    /// RTT: `delegator` confers `req.role` on `req.delegate`.
    ///
    /// A delegator holding the role through its own (unsuspended) assignments
    /// creates a fresh delegation. Otherwise the role must come from a live
    /// incoming delegation that is multi-step with levels remaining, and the
    /// new record is a re-delegation of it.
    pub fn apply_right_transfer(
        &mut self,
        delegator: &str,
        req: &RightTransferRequest,
        now_ms: u64,
    ) -> Result<Delegation> {
        if req.delegate == delegator {
            return Err(Error::InvalidDelegation("delegator and delegate are the same subject".into()));
        }
        if !self.roles.contains(&req.role) {
            return Err(Error::UnknownRole(req.role.clone()));
        }
        let expiry_ms = match (req.expiry_ms, req.duration_ms) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidDelegation("give either expiry_ms or duration_ms, not both".into()))
            }
            (Some(e), None) => Some(e),
            (None, Some(t)) => Some(now_ms.saturating_add(t)),
            (None, None) => None,
        };
        if let Some(e) = expiry_ms {
            if e <= now_ms || req.start_ms.is_some_and(|s| s >= e) {
                return Err(Error::InvalidDelegation(format!("expiry {e} ms leaves an empty delegation window")));
            }
        }
        if req.levels == Some(0) {
            return Err(Error::InvalidDelegation("levelsofDelegation must be at least 1".into()));
        }

        let scope = self.hierarchy.juniors_of(&req.role);
        if !self.permissions.values().any(|p| scope.contains(&p.role) && p.mode.is_authorization()) {
            return Err(Error::ObligationNotDelegable(req.role.clone()));
        }

        let parent = if self.holds_by_assignment(delegator, &req.role, now_ms) {
            None
        } else {
            Some(self.parent_for(delegator, &req.role, now_ms)?)
        };

        let (levels, remaining, multi) = match parent {
            None => {
                let levels = req.levels.unwrap_or(1);
                (levels, levels, req.multi_step)
            }
            Some(p) => {
                let p = &self.delegations.records[&p];
                (p.levels_of_delegation, p.remaining_levels - 1, p.multi_step_delegatable)
            }
        };
        let record = Delegation {
            id: DelegationId(0),
            delegator: delegator.into(),
            delegate: req.delegate.clone(),
            role: req.role.clone(),
            start_ms: req.start_ms,
            expiry_ms,
            mode: req.mode,
            multi_step_delegatable: multi,
            levels_of_delegation: levels,
            remaining_levels: remaining,
            parent,
            created_at: now_ms,
        };
        self.check_mutation(Some((&req.delegate, &req.role)), |s| {
            s.delegations.insert(record.clone());
        })?;
        Ok(self.delegations.insert(record))
    }

    /// Role held through the subject's own assignments and not transferred away.
    fn holds_by_assignment(&self, subject: &str, role: &str, at_ms: u64) -> bool {
        let held = self.hierarchy.closure(&self.explicit_roles(subject));
        if !held.contains(role) {
            return false;
        }
        !self.delegations.iter().any(|d| {
            d.delegator == subject
                && d.mode == DelegationMode::Transfer
                && self.delegations.is_live(d.id, at_ms)
                && self.hierarchy.juniors_of(&d.role).contains(role)
        })
    }

    fn parent_for(&self, subject: &str, role: &str, at_ms: u64) -> Result<DelegationId> {
        let candidates: Vec<&Delegation> = self
            .delegations
            .iter()
            .filter(|d| d.delegate == subject && self.hierarchy.juniors_of(&d.role).contains(role))
            .collect();
        let Some(first) = candidates.first() else {
            return Err(Error::NotRoleHolder { subject: subject.into(), role: role.into() });
        };
        let live: Vec<&&Delegation> = candidates.iter().filter(|d| self.delegations.is_live(d.id, at_ms)).collect();
        let Some(first_live) = live.first() else {
            return Err(Error::ExpiredParent(first.id.0));
        };
        live.iter()
            .find(|d| d.multi_step_delegatable && d.remaining_levels > 0)
            .map(|d| d.id)
            .ok_or(Error::SingleStepExhausted(first_live.id.0))
    }

    /// Remove Right Transfer: only the delegator or the issuer may remove a
    /// delegation. Descendant re-delegations go with it.
    pub fn apply_remove_right_transfer(
        &mut self,
        requester: &str,
        requester_is_issuer: bool,
        id: DelegationId,
    ) -> Result<Vec<DelegationId>> {
        let d = self.delegations.get(id).ok_or(Error::UnknownDelegation(id.0))?;
        if !requester_is_issuer && d.delegator != requester {
            return Err(Error::NotAuthorizedRevoker { requester: requester.into(), delegation: id.0 });
        }
        Ok(self.delegations.remove_trees([id]))
    }

    /// Drops every delegation whose expiry is at or before `now_ms`, with descendants.
    pub fn expire_delegations(&mut self, now_ms: u64) -> Vec<DelegationId> {
        let due: Vec<DelegationId> =
            self.delegations.iter().filter(|d| d.expiry_ms.is_some_and(|e| e <= now_ms)).map(|d| d.id).collect();
        self.delegations.remove_trees(due)
    }

    /// Drops the delegations `subject` made on the strength of its assignment
    /// to `role` (the role itself or any junior of it), with descendants.
    pub fn cascade_on_role_revoke(&mut self, subject: &str, role: &str) -> Vec<DelegationId> {
        let scope = self.hierarchy.juniors_of(role);
        let roots: Vec<DelegationId> = self
            .delegations
            .iter()
            .filter(|d| d.delegator == subject && d.parent.is_none() && scope.contains(&d.role))
            .map(|d| d.id)
            .collect();
        self.delegations.remove_trees(roots)
    }

    pub fn delegations(&self) -> &DelegationStore {
        &self.delegations
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::AccountId;
    use crate::policy::{Mode, Permission, RevocationStrength};

    fn setup() -> (PolicyState, AccountId) {
        let issuer = AccountId::new("issuer").unwrap();
        let mut p = PolicyState::new(issuer.clone());
        for r in ["r", "r2", "duty"] {
            p.define_role(&issuer, r).unwrap();
        }
        p.add_hierarchy_edge(&issuer, "r", "r2").unwrap();
        p.apply_permission_assign(&issuer, Permission::new("p1", Mode::AuthPositive, "r", "read", "f")).unwrap();
        p.apply_permission_assign(&issuer, Permission::new("p2", Mode::AuthPositive, "r2", "read", "g")).unwrap();
        p.apply_permission_assign(&issuer, Permission::new("dc1", Mode::ObligPositive, "duty", "read", "file3"))
            .unwrap();
        p.apply_role_assign(&issuer, "alice", "r", 0).unwrap();
        p.apply_role_assign(&issuer, "alice", "duty", 0).unwrap();
        (p, issuer)
    }

    #[test]
    fn default_delegation_is_single_level_grant() {
        let (mut p, _) = setup();
        let d = p.apply_right_transfer("alice", &RightTransferRequest::new("bob", "r"), 10).unwrap();
        assert_eq!((d.levels_of_delegation, d.remaining_levels), (1, 1));
        assert_eq!(d.mode, DelegationMode::Grant);
        assert!(!d.multi_step_delegatable);
        assert_eq!(d.expiry_ms, None);
        assert!(p.effective_roles("bob", 10).contains("r"));
        assert!(p.effective_roles("alice", 10).contains("r"));
        let err = p.apply_right_transfer("bob", &RightTransferRequest::new("carol", "r"), 11).unwrap_err();
        assert_eq!(err.code(), "SingleStepExhausted");
    }

    #[test]
    fn five_levels_allow_exactly_five_redelegations() {
        let (mut p, _) = setup();
        let subjects = ["s0", "s1", "s2", "s3", "s4", "s5", "s6"];
        p.apply_right_transfer("alice", &RightTransferRequest::new(subjects[0], "r").multi_step(5), 0).unwrap();
        let mut remaining = vec![5];
        for i in 0..5 {
            let d = p.apply_right_transfer(subjects[i], &RightTransferRequest::new(subjects[i + 1], "r"), 0).unwrap();
            assert_eq!(d.levels_of_delegation, 5);
            remaining.push(d.remaining_levels);
        }
        assert_eq!(remaining, vec![5, 4, 3, 2, 1, 0]);
        let err = p.apply_right_transfer(subjects[5], &RightTransferRequest::new(subjects[6], "r"), 0).unwrap_err();
        assert!(matches!(err, Error::SingleStepExhausted(_)));
    }

    #[test]
    fn obligation_only_role_not_delegable() {
        let (mut p, _) = setup();
        let err = p.apply_right_transfer("alice", &RightTransferRequest::new("bob", "duty"), 0).unwrap_err();
        assert_eq!(err.code(), "ObligationNotDelegable");
    }

    #[test]
    fn non_holder_rejected() {
        let (mut p, _) = setup();
        let err = p.apply_right_transfer("mallory", &RightTransferRequest::new("bob", "r"), 0).unwrap_err();
        assert_eq!(err.code(), "NotRoleHolder");
    }

    #[test]
    fn transfer_suspends_delegator() {
        let (mut p, _) = setup();
        let d = p.apply_right_transfer("alice", &RightTransferRequest::new("bob", "r2").transfer(), 0).unwrap();
        assert!(!p.effective_roles("alice", 0).contains("r2"));
        assert!(p.effective_roles("alice", 0).contains("r"));
        assert!(p.effective_roles("bob", 0).contains("r2"));
        p.apply_remove_right_transfer("alice", false, d.id).unwrap();
        assert!(p.effective_roles("alice", 0).contains("r2"));
        assert!(!p.effective_roles("bob", 0).contains("r2"));
    }

    #[test]
    fn removal_authorization_and_descendants() {
        let (mut p, _) = setup();
        let root = p.apply_right_transfer("alice", &RightTransferRequest::new("bob", "r").multi_step(3), 0).unwrap();
        p.apply_right_transfer("bob", &RightTransferRequest::new("carol", "r"), 0).unwrap();
        p.apply_right_transfer("carol", &RightTransferRequest::new("dave", "r"), 0).unwrap();
        assert_eq!(p.delegations().len(), 3);
        let err = p.apply_remove_right_transfer("eve", false, root.id).unwrap_err();
        assert_eq!(err.code(), "NotAuthorizedRevoker");
        let removed = p.apply_remove_right_transfer("issuer", true, root.id).unwrap();
        assert_eq!(removed.len(), 3);
        assert!(p.delegations().is_empty());
        assert_eq!(p.apply_remove_right_transfer("alice", false, root.id).unwrap_err().code(), "UnknownDelegation");
    }

    #[test]
    fn expiry_is_exclusive_and_cascades() {
        let (mut p, _) = setup();
        let d = p
            .apply_right_transfer("alice", &RightTransferRequest::new("bob", "r").multi_step(2).expiring(10_000), 0)
            .unwrap();
        p.apply_right_transfer("bob", &RightTransferRequest::new("carol", "r").expiring(50_000), 100).unwrap();
        assert!(p.effective_roles("bob", 9_999).contains("r"));
        assert!(!p.effective_roles("bob", 10_000).contains("r"));
        // child outlives nothing: parent expiry bounds it
        assert!(!p.effective_roles("carol", 20_000).contains("r"));
        assert!(p.expire_delegations(9_500).is_empty());
        let removed = p.expire_delegations(10_000);
        assert_eq!(removed.len(), 2);
        assert!(p.delegations().get(d.id).is_none());
        assert!(p.expire_delegations(60_000).is_empty());
    }

    #[test]
    fn role_revocation_cascades_to_junior_delegations() {
        let (mut p, issuer) = setup();
        p.apply_right_transfer("alice", &RightTransferRequest::new("bob", "r"), 0).unwrap();
        p.apply_right_transfer("alice", &RightTransferRequest::new("carol", "r2"), 0).unwrap();
        p.apply_right_transfer("alice", &RightTransferRequest::new("dave", "r2"), 0).unwrap();
        assert_eq!(p.cascade_on_role_revoke("alice", "duty"), vec![]);
        let out = p.apply_role_revoke(&issuer, "alice", "r", RevocationStrength::Weak).unwrap();
        assert_eq!(out.removed_delegations.len(), 3);
        assert!(!p.effective_roles("bob", 0).contains("r"));
        assert!(!p.effective_roles("carol", 0).contains("r2"));
    }

    #[test]
    fn invalid_windows_rejected() {
        let (mut p, _) = setup();
        let mut req = RightTransferRequest::new("bob", "r").expiring(5);
        assert_eq!(p.apply_right_transfer("alice", &req, 5).unwrap_err().code(), "InvalidDelegation");
        req.duration_ms = Some(10);
        assert_eq!(p.apply_right_transfer("alice", &req, 0).unwrap_err().code(), "InvalidDelegation");
        req.expiry_ms = None;
        let d = p.apply_right_transfer("alice", &req, 100).unwrap();
        assert_eq!(d.expiry_ms, Some(110));
        let future = RightTransferRequest { start_ms: Some(1_000), ..RightTransferRequest::new("carol", "r") };
        p.apply_right_transfer("alice", &future, 0).unwrap();
        assert!(!p.effective_roles("carol", 999).contains("r"));
        assert!(p.effective_roles("carol", 1_000).contains("r"));
    }
}
