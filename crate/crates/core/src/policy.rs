//! RBAC state: subject-role and role-permission relations, the role
//! hierarchy, and the issuer transactions that mutate them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};

use crate::constraints::{
    CardinalityRule, ConstraintSet, Facts, MutualExclusionPair, SodRule, Violation, ViolationKind,
};
use crate::context::ContextCondition;
use crate::delegation::{Delegation, DelegationStore};
use crate::error::{Error, Result};
use crate::hierarchy::RoleHierarchy;
use crate::ids::{AccountId, DelegationId, PermissionId, RoleName, SubjectId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "A+")]
    AuthPositive,
    #[serde(rename = "A-")]
    AuthNegative,
    #[serde(rename = "O+")]
    ObligPositive,
    #[serde(rename = "O-")]
    ObligNegative,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::AuthPositive, Mode::AuthNegative, Mode::ObligPositive, Mode::ObligNegative];

    pub fn is_authorization(self) -> bool {
        matches!(self, Mode::AuthPositive | Mode::AuthNegative)
    }

    pub fn is_obligation(self) -> bool {
        !self.is_authorization()
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Mode::AuthPositive => "A+",
            Mode::AuthNegative => "A-",
            Mode::ObligPositive => "O+",
            Mode::ObligNegative => "O-",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.symbol().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// One role-permission row: (identifier, mode, role, action, target,
/// constraints, exception).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permission {
    pub identifier: PermissionId,
    pub mode: Mode,
    pub role: RoleName,
    pub action: String,
    pub target: String,
    #[serde(default)]
    pub constraints: Vec<ContextCondition>,
    #[serde(default)]
    pub exception: Option<String>,
}

impl Permission {
    pub fn new(identifier: &str, mode: Mode, role: &str, action: &str, target: &str) -> Self {
        Permission {
            identifier: identifier.into(),
            mode,
            role: role.into(),
            action: action.into(),
            target: target.into(),
            constraints: Vec::new(),
            exception: None,
        }
    }

    pub fn with_constraints(mut self, constraints: Vec<ContextCondition>) -> Self {
        self.constraints = constraints;
        self
    }

    pub fn with_exception(mut self, exception: &str) -> Self {
        self.exception = Some(exception.into());
        self
    }
}

/// Fields of a permission row to replace. Absent fields are kept.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<RoleName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<Vec<ContextCondition>>,
    /// `Some(None)` clears the exception.
    #[serde(default, deserialize_with = "double_option", skip_serializing_if = "Option::is_none")]
    pub exception: Option<Option<String>>,
}

fn double_option<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Option<String>>, D::Error> {
    Option::<String>::deserialize(d).map(Some)
}

impl PermissionPatch {
    fn apply_to(&self, p: &mut Permission) {
        if let Some(m) = self.mode {
            p.mode = m;
        }
        if let Some(r) = &self.role {
            p.role = r.clone();
        }
        if let Some(a) = &self.action {
            p.action = a.clone();
        }
        if let Some(t) = &self.target {
            p.target = t.clone();
        }
        if let Some(c) = &self.constraints {
            p.constraints = c.clone();
        }
        if let Some(e) = &self.exception {
            p.exception = e.clone();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleAssignment {
    pub subject_id: SubjectId,
    pub role_name: RoleName,
    pub assigned_by: AccountId,
    pub assigned_at: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevocationStrength {
    #[default]
    Weak,
    Strong,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevokeOutcome {
    pub removed_roles: Vec<RoleName>,
    pub removed_delegations: Vec<DelegationId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentChildRedundancy {
    pub subject: SubjectId,
    pub parent_role: RoleName,
    pub child_role: RoleName,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicatePermission {
    pub subject: SubjectId,
    pub action: String,
    pub target: String,
    /// Explicitly assigned roles that each reach the (action, target) pair.
    pub roles: Vec<RoleName>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedundancyReport {
    pub parent_child: Vec<ParentChildRedundancy>,
    pub duplicate_permissions: Vec<DuplicatePermission>,
}

impl RedundancyReport {
    pub fn is_empty(&self) -> bool {
        self.parent_child.is_empty() && self.duplicate_permissions.is_empty()
    }
}

/// Deterministically ordered export of the whole policy state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicySnapshot {
    pub issuer: AccountId,
    pub roles: Vec<RoleName>,
    pub assignments: Vec<RoleAssignment>,
    pub permissions: Vec<Permission>,
    pub hierarchy_edges: Vec<(RoleName, RoleName)>,
    pub delegations: Vec<Delegation>,
    pub constraints: ConstraintSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    pub(crate) issuer: AccountId,
    pub(crate) roles: BTreeSet<RoleName>,
    pub(crate) assignments: BTreeMap<(SubjectId, RoleName), RoleAssignment>,
    pub(crate) permissions: BTreeMap<PermissionId, Permission>,
    pub(crate) hierarchy: RoleHierarchy,
    pub(crate) delegations: DelegationStore,
    pub(crate) constraints: ConstraintSet,
}

impl PolicyState {
    pub fn new(issuer: AccountId) -> Self {
        PolicyState {
            issuer,
            roles: BTreeSet::new(),
            assignments: BTreeMap::new(),
            permissions: BTreeMap::new(),
            hierarchy: RoleHierarchy::default(),
            delegations: DelegationStore::default(),
            constraints: ConstraintSet::default(),
        }
    }

    pub fn issuer(&self) -> &AccountId {
        &self.issuer
    }

    pub fn roles(&self) -> &BTreeSet<RoleName> {
        &self.roles
    }

    pub fn hierarchy(&self) -> &RoleHierarchy {
        &self.hierarchy
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    pub fn permission(&self, id: &str) -> Option<&Permission> {
        self.permissions.get(id)
    }

    pub fn permissions(&self) -> impl Iterator<Item = &Permission> {
        self.permissions.values()
    }

    pub fn assignments(&self) -> impl Iterator<Item = &RoleAssignment> {
        self.assignments.values()
    }

    pub fn has_assignment(&self, subject: &str, role: &str) -> bool {
        self.assignments.contains_key(&(subject.to_string(), role.to_string()))
    }

    /// Roles explicitly assigned to `subject`.
    pub fn explicit_roles(&self, subject: &str) -> BTreeSet<RoleName> {
        self.assignments.keys().filter(|(s, _)| s == subject).map(|(_, r)| r.clone()).collect()
    }

    /// Every subject that appears in an assignment or a delegation.
    pub fn subjects(&self) -> BTreeSet<SubjectId> {
        let mut out: BTreeSet<SubjectId> = self.assignments.keys().map(|(s, _)| s.clone()).collect();
        for d in self.delegations.iter() {
            out.insert(d.delegator.clone());
            out.insert(d.delegate.clone());
        }
        out
    }

    fn require_issuer(&self, sender: &AccountId) -> Result<()> {
        if sender == &self.issuer {
            Ok(())
        } else {
            Err(Error::NotIssuer(sender.to_string()))
        }
    }

    fn require_role(&self, role: &str) -> Result<()> {
        if self.roles.contains(role) {
            Ok(())
        } else {
            Err(Error::UnknownRole(role.to_string()))
        }
    }

    pub fn define_role(&mut self, sender: &AccountId, role: &str) -> Result<()> {
        self.require_issuer(sender)?;
        if role.is_empty() {
            return Err(Error::UnknownRole(String::new()));
        }
        if !self.roles.insert(role.to_string()) {
            return Err(Error::DuplicateRole(role.to_string()));
        }
        Ok(())
    }

    /// Evaluates every static constraint against the state produced by
    /// `mutate`, without committing it.
    pub(crate) fn check_mutation(
        &self,
        candidate: Option<(&str, &str)>,
        mutate: impl FnOnce(&mut PolicyState),
    ) -> Result<()> {
        if self.constraints.is_empty() {
            return Ok(());
        }
        let mut next = self.clone();
        mutate(&mut next);
        match next.constraints.find_violation(&next.facts()) {
            None => Ok(()),
            Some(mut v) => {
                v.candidate = candidate.map(|(s, r)| (s.to_string(), r.to_string()));
                Err(match v.kind {
                    ViolationKind::Cardinality => Error::CardinalityExceeded(v),
                    ViolationKind::SeparationOfDuty => Error::SoDViolation(v),
                })
            }
        }
    }

    /// Checks the insertion of `(subject, role)` against every registered
    /// rule, reporting the first violation with its instantiation.
    pub fn check_assignment(&self, subject: &str, role: &str) -> std::result::Result<(), Violation> {
        let mut next = self.clone();
        next.insert_assignment_unchecked(subject, role, self.issuer.clone(), 0);
        match next.constraints.find_violation(&next.facts()) {
            None => Ok(()),
            Some(mut v) => {
                v.candidate = Some((subject.to_string(), role.to_string()));
                Err(v)
            }
        }
    }

    fn insert_assignment_unchecked(&mut self, subject: &str, role: &str, by: AccountId, at_ms: u64) {
        self.assignments.insert(
            (subject.to_string(), role.to_string()),
            RoleAssignment { subject_id: subject.into(), role_name: role.into(), assigned_by: by, assigned_at: at_ms },
        );
    }

    /// RAT: grant `role` to a single subject.
    pub fn apply_role_assign(
        &mut self,
        sender: &AccountId,
        subject: &str,
        role: &str,
        at_ms: u64,
    ) -> Result<RoleAssignment> {
        self.require_issuer(sender)?;
        self.require_role(role)?;
        if self.has_assignment(subject, role) {
            return Err(Error::DuplicateAssignment { subject: subject.into(), role: role.into() });
        }
        self.check_mutation(Some((subject, role)), |s| {
            s.insert_assignment_unchecked(subject, role, sender.clone(), at_ms)
        })?;
        self.insert_assignment_unchecked(subject, role, sender.clone(), at_ms);
        Ok(self.assignments[&(subject.to_string(), role.to_string())].clone())
    }

    /// RUT: replace one of the subject's assignments with `new_role`.
    /// `old_role` may be omitted when the subject holds exactly one role.
    pub fn apply_role_update(
        &mut self,
        sender: &AccountId,
        subject: &str,
        old_role: Option<&str>,
        new_role: &str,
        at_ms: u64,
    ) -> Result<RevokeOutcome> {
        self.require_issuer(sender)?;
        self.require_role(new_role)?;
        let held = self.explicit_roles(subject);
        let old = match old_role {
            Some(r) if held.contains(r) => r.to_string(),
            Some(r) => return Err(Error::NoExistingAssignment { subject: subject.into(), role: r.into() }),
            None => match held.len() {
                0 => return Err(Error::NoExistingAssignment { subject: subject.into(), role: "*".into() }),
                1 => held.iter().next().cloned().unwrap_or_default(),
                _ => return Err(Error::AmbiguousAssignment(subject.into())),
            },
        };
        if old == new_role {
            return Ok(RevokeOutcome::default());
        }
        if held.contains(new_role) {
            return Err(Error::DuplicateAssignment { subject: subject.into(), role: new_role.into() });
        }
        let key = (subject.to_string(), old.clone());
        self.check_mutation(Some((subject, new_role)), |s| {
            s.assignments.remove(&key);
            s.insert_assignment_unchecked(subject, new_role, sender.clone(), at_ms);
        })?;
        self.assignments.remove(&key);
        self.insert_assignment_unchecked(subject, new_role, sender.clone(), at_ms);
        let removed_delegations = self.cascade_on_role_revoke(subject, &old);
        Ok(RevokeOutcome { removed_roles: vec![old], removed_delegations })
    }

    /// RRT. Weak removes only `(subject, role)`; strong also removes every
    /// explicit assignment of the subject to a role senior to `role`.
    /// Delegations the subject made from the lost roles are cascaded away.
    pub fn apply_role_revoke(
        &mut self,
        sender: &AccountId,
        subject: &str,
        role: &str,
        strength: RevocationStrength,
    ) -> Result<RevokeOutcome> {
        self.require_issuer(sender)?;
        if !self.has_assignment(subject, role) {
            return Err(Error::NoExistingAssignment { subject: subject.into(), role: role.into() });
        }
        let mut removed_roles = vec![role.to_string()];
        if strength == RevocationStrength::Strong {
            let seniors = self.hierarchy.seniors_of(role);
            removed_roles.extend(self.explicit_roles(subject).into_iter().filter(|r| r != role && seniors.contains(r)));
        }
        let mut removed_delegations = Vec::new();
        for r in &removed_roles {
            self.assignments.remove(&(subject.to_string(), r.clone()));
        }
        for r in &removed_roles {
            removed_delegations.extend(self.cascade_on_role_revoke(subject, r));
        }
        Ok(RevokeOutcome { removed_roles, removed_delegations })
    }

    /// PAT: store a new role-permission row.
    pub fn apply_permission_assign(&mut self, sender: &AccountId, permission: Permission) -> Result<()> {
        self.require_issuer(sender)?;
        if self.permissions.contains_key(&permission.identifier) {
            return Err(Error::DuplicateIdentifier(permission.identifier));
        }
        self.require_role(&permission.role)?;
        self.check_mutation(None, |s| {
            s.permissions.insert(permission.identifier.clone(), permission.clone());
        })?;
        self.permissions.insert(permission.identifier.clone(), permission);
        Ok(())
    }

    /// PUT: replace the named fields of an existing row atomically.
    pub fn apply_permission_update(
        &mut self,
        sender: &AccountId,
        identifier: &str,
        patch: &PermissionPatch,
    ) -> Result<Permission> {
        self.require_issuer(sender)?;
        let mut updated =
            self.permissions.get(identifier).cloned().ok_or_else(|| Error::UnknownIdentifier(identifier.into()))?;
        patch.apply_to(&mut updated);
        self.require_role(&updated.role)?;
        self.check_mutation(None, |s| {
            s.permissions.insert(identifier.to_string(), updated.clone());
        })?;
        self.permissions.insert(identifier.to_string(), updated.clone());
        Ok(updated)
    }

    /// PRT: remove every permission row of `role`. Returns the removed ids.
    pub fn apply_permission_revoke(&mut self, sender: &AccountId, role: &str) -> Result<Vec<PermissionId>> {
        self.require_issuer(sender)?;
        self.require_role(role)?;
        let ids: Vec<PermissionId> =
            self.permissions.values().filter(|p| p.role == role).map(|p| p.identifier.clone()).collect();
        if ids.is_empty() {
            return Err(Error::NoPermissionsForRole(role.into()));
        }
        for id in &ids {
            self.permissions.remove(id);
        }
        Ok(ids)
    }

    pub fn add_hierarchy_edge(&mut self, sender: &AccountId, senior: &str, junior: &str) -> Result<()> {
        self.require_issuer(sender)?;
        self.require_role(senior)?;
        self.require_role(junior)?;
        let mut probe = self.hierarchy.clone();
        probe.add_edge(senior, junior)?;
        self.check_mutation(None, |s| s.hierarchy = probe.clone())?;
        self.hierarchy = probe;
        Ok(())
    }

    /// Explicit roles, plus roles of live incoming delegations, closed under
    /// the junior relation, minus the closure of roles the subject has
    /// transferred away through live transfer-mode delegations.
    pub fn effective_roles(&self, subject: &str, at_ms: u64) -> BTreeSet<RoleName> {
        let (held, blocked) = self.held_and_suspended(subject, at_ms);
        if blocked.is_empty() {
            return held;
        }
        held.difference(&blocked).cloned().collect()
    }

    /// Roles whose obligations bind the subject. A transfer suspends the use
    /// of a role but not the duties attached to it.
    pub fn obligated_roles(&self, subject: &str, at_ms: u64) -> BTreeSet<RoleName> {
        self.held_and_suspended(subject, at_ms).0
    }

    fn held_and_suspended(&self, subject: &str, at_ms: u64) -> (BTreeSet<RoleName>, BTreeSet<RoleName>) {
        let mut base = self.explicit_roles(subject);
        let mut suspended = BTreeSet::new();
        for d in self.delegations.iter() {
            if !self.delegations.is_live(d.id, at_ms) {
                continue;
            }
            if d.delegate == subject {
                base.insert(d.role.clone());
            }
            if d.delegator == subject && d.mode == crate::delegation::DelegationMode::Transfer {
                suspended.insert(d.role.clone());
            }
        }
        (self.hierarchy.closure(&base), self.hierarchy.closure(&suspended))
    }

    /// Ground facts for constraint evaluation. Every stored delegation counts
    /// as held and transfer suspension is ignored, so the facts cover every
    /// state reachable by the passage of time alone.
    pub fn facts(&self) -> Facts {
        let mut facts = Facts::default();
        for (s, r) in self.assignments.keys() {
            facts.play.insert((s.clone(), r.clone()));
            *facts.explicit_counts.entry(s.clone()).or_default() += 1;
        }
        for d in self.delegations.iter() {
            facts.play.insert((d.delegate.clone(), d.role.clone()));
        }

        let grants: Vec<&Permission> = self.permissions.values().filter(|p| p.mode == Mode::AuthPositive).collect();
        for role in &self.roles {
            let juniors = self.hierarchy.juniors_of(role);
            for p in grants.iter().filter(|p| juniors.contains(&p.role)) {
                facts.hold.insert((role.clone(), p.identifier.clone()));
            }
        }

        let mut direct: BTreeMap<&str, BTreeSet<RoleName>> = BTreeMap::new();
        for (s, r) in &facts.play {
            direct.entry(s.as_str()).or_default().insert(r.clone());
        }
        for (s, roles) in &direct {
            let held = self.hierarchy.closure(roles);
            for p in grants.iter().filter(|p| held.contains(&p.role)) {
                facts.right.insert((s.to_string(), p.identifier.clone()));
            }
        }
        for (x, xr) in &direct {
            for (y, yr) in &direct {
                if x != y && yr.iter().any(|ry| xr.iter().any(|rx| self.hierarchy.is_strictly_senior(ry, rx))) {
                    facts.junior.insert((x.to_string(), y.to_string()));
                }
            }
        }
        facts.imply = self.constraints.implications.clone();
        facts
    }

    fn register_constraint(&mut self, sender: &AccountId, edit: impl FnOnce(&mut ConstraintSet)) -> Result<()> {
        self.require_issuer(sender)?;
        let mut next = self.constraints.clone();
        edit(&mut next);
        if let Some(v) = next.find_violation(&self.facts()) {
            return Err(Error::ConstraintConflict(v));
        }
        self.constraints = next;
        Ok(())
    }

    pub fn add_mutual_exclusion(&mut self, sender: &AccountId, role_a: &str, role_b: &str) -> Result<()> {
        self.require_issuer(sender)?;
        crate::constraints::compile_mutual_exclusion(role_a, role_b, &self.roles)?;
        let pair = MutualExclusionPair { role_a: role_a.into(), role_b: role_b.into(), limit: 2 };
        if self.constraints.pairs.iter().any(|p| {
            (p.role_a == pair.role_a && p.role_b == pair.role_b) || (p.role_a == pair.role_b && p.role_b == pair.role_a)
        }) {
            return Ok(());
        }
        self.register_constraint(sender, |c| c.pairs.push(pair))
    }

    pub fn add_sod_rule(&mut self, sender: &AccountId, rule: SodRule) -> Result<()> {
        self.require_issuer(sender)?;
        rule.validate()?;
        if self.constraints.has_rule_id(&rule.rule_id) {
            return Err(Error::InvalidRule(format!("rule id `{}` already registered", rule.rule_id)));
        }
        self.register_constraint(sender, |c| c.rules.push(rule))
    }

    pub fn set_cardinality(&mut self, sender: &AccountId, max_roles_per_subject: u32) -> Result<()> {
        if max_roles_per_subject == 0 {
            return Err(Error::InvalidRule("max_roles_per_subject must be positive".into()));
        }
        self.register_constraint(sender, |c| c.cardinality = Some(CardinalityRule { max_roles_per_subject }))
    }

    /// Registers `imply(stronger, weaker)` between permission identifiers.
    pub fn add_implication(&mut self, sender: &AccountId, stronger: &str, weaker: &str) -> Result<()> {
        self.register_constraint(sender, |c| {
            c.implications.insert((stronger.to_string(), weaker.to_string()));
        })
    }

    /// Subjects explicitly assigned both a role and one of its juniors, and
    /// subjects reaching the same (action, target) through several explicit
    /// roles.
    pub fn detect_redundancy(&self) -> RedundancyReport {
        let mut report = RedundancyReport::default();
        let mut by_subject: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (s, r) in self.assignments.keys() {
            by_subject.entry(s).or_default().push(r);
        }
        for (subject, roles) in by_subject {
            for &parent in &roles {
                for &child in &roles {
                    if self.hierarchy.is_strictly_senior(parent, child) {
                        report.parent_child.push(ParentChildRedundancy {
                            subject: subject.into(),
                            parent_role: parent.into(),
                            child_role: child.into(),
                        });
                    }
                }
            }
            let mut reach: BTreeMap<(&str, &str), BTreeSet<&str>> = BTreeMap::new();
            for &role in &roles {
                let juniors = self.hierarchy.juniors_of(role);
                for p in self.permissions.values().filter(|p| juniors.contains(&p.role)) {
                    reach.entry((&p.action, &p.target)).or_default().insert(role);
                }
            }
            for ((action, target), via) in reach {
                if via.len() >= 2 {
                    report.duplicate_permissions.push(DuplicatePermission {
                        subject: subject.into(),
                        action: action.into(),
                        target: target.into(),
                        roles: via.into_iter().map(String::from).collect(),
                    });
                }
            }
        }
        report
    }

    pub fn snapshot(&self) -> PolicySnapshot {
        PolicySnapshot {
            issuer: self.issuer.clone(),
            roles: self.roles.iter().cloned().collect(),
            assignments: self.assignments.values().cloned().collect(),
            permissions: self.permissions.values().cloned().collect(),
            hierarchy_edges: self.hierarchy.edges().cloned().collect(),
            delegations: self.delegations.iter().cloned().collect(),
            constraints: self.constraints.clone(),
        }
    }
}
