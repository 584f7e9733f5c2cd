//! Static separation-of-duty and cardinality constraints.
//!
//! A rule is a headless clause `⊥ ← a1, ..., an`: the state is in violation
//! whenever some instantiation of the rule's variables makes every atom true.
//! Evaluation is a backtracking join over the fact tables, which is plenty
//! for policy-sized states.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{PermissionId, RoleName, SubjectId};

/// A variable (`Var`) or a constant (`Const`) in an atom slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }

    pub fn val(value: &str) -> Self {
        Term::Const(value.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    /// `right(subject, permission)`: the subject can exercise an A+ permission.
    Right,
    /// `play(subject, role)`: the subject holds the role directly, by
    /// assignment or live delegation.
    Play,
    /// `hold(role, permission)`: the role carries the A+ permission, itself or
    /// through a junior role.
    Hold,
    /// `junior(x, y)`: some role of `x` is strictly junior to some role of `y`.
    Junior,
    /// `imply(p, q)`: registered "p is at least as strong as q".
    Imply,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: Predicate,
    pub args: [Term; 2],
}

impl Atom {
    pub fn new(predicate: Predicate, a: Term, b: Term) -> Self {
        Atom { predicate, args: [a, b] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SodRule {
    pub rule_id: String,
    pub atoms: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MutualExclusionPair {
    pub role_a: RoleName,
    pub role_b: RoleName,
    pub limit: u8,
}

impl MutualExclusionPair {
    pub fn rule_id(&self) -> String {
        format!("sod:{}|{}", self.role_a, self.role_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardinalityRule {
    pub max_roles_per_subject: u32,
}

pub type Binding = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    SeparationOfDuty,
    Cardinality,
}

/// A satisfied rule body, with the instantiation that satisfied it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule_id: String,
    pub kind: ViolationKind,
    pub binding: Binding,
    /// The (subject, role) tuple whose insertion was being checked, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<(SubjectId, RoleName)>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule `{}` satisfied by {{", self.rule_id)?;
        for (i, (k, v)) in self.binding.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")?;
        if let Some((s, r)) = &self.candidate {
            write!(f, " when assigning `{r}` to `{s}`")?;
        }
        Ok(())
    }
}

/// Ground fact tables the rules are evaluated against.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Facts {
    pub right: BTreeSet<(SubjectId, PermissionId)>,
    pub play: BTreeSet<(SubjectId, RoleName)>,
    pub hold: BTreeSet<(RoleName, PermissionId)>,
    pub junior: BTreeSet<(SubjectId, SubjectId)>,
    pub imply: BTreeSet<(PermissionId, PermissionId)>,
    /// Explicit assignment count per subject, for cardinality.
    pub explicit_counts: BTreeMap<SubjectId, usize>,
}

impl Facts {
    pub fn table(&self, p: Predicate) -> &BTreeSet<(String, String)> {
        match p {
            Predicate::Right => &self.right,
            Predicate::Play => &self.play,
            Predicate::Hold => &self.hold,
            Predicate::Junior => &self.junior,
            Predicate::Imply => &self.imply,
        }
    }
}

/// `⊥ ← play(S, role_a), play(S, role_b)` with `S` free.
pub fn compile_mutual_exclusion(role_a: &str, role_b: &str, known_roles: &BTreeSet<RoleName>) -> Result<SodRule> {
    for r in [role_a, role_b] {
        if !known_roles.contains(r) {
            return Err(Error::UnknownRole(r.to_string()));
        }
    }
    if role_a == role_b {
        return Err(Error::SelfExclusion(role_a.to_string()));
    }
    let pair = MutualExclusionPair { role_a: role_a.into(), role_b: role_b.into(), limit: 2 };
    Ok(SodRule {
        rule_id: pair.rule_id(),
        atoms: vec![
            Atom::new(Predicate::Play, Term::var("S"), Term::val(role_a)),
            Atom::new(Predicate::Play, Term::var("S"), Term::val(role_b)),
        ],
    })
}

impl SodRule {
    pub fn validate(&self) -> Result<()> {
        if self.rule_id.is_empty() {
            return Err(Error::InvalidRule("empty rule id".into()));
        }
        if self.atoms.is_empty() {
            return Err(Error::InvalidRule(format!("rule `{}` has no atoms", self.rule_id)));
        }
        for atom in &self.atoms {
            for t in &atom.args {
                let (Term::Var(v) | Term::Const(v)) = t;
                if v.is_empty() {
                    return Err(Error::InvalidRule(format!("rule `{}` has an empty term", self.rule_id)));
                }
            }
        }
        Ok(())
    }

    /// First instantiation (in fact-table order) satisfying every atom.
    pub fn first_violation(&self, facts: &Facts) -> Option<Binding> {
        let mut found = None;
        solve(&self.atoms, facts, &mut Binding::new(), &mut |b| {
            found = Some(b.clone());
            false
        });
        found
    }

    /// Every satisfying instantiation.
    pub fn violations(&self, facts: &Facts) -> Vec<Binding> {
        let mut all = Vec::new();
        solve(&self.atoms, facts, &mut Binding::new(), &mut |b| {
            all.push(b.clone());
            true
        });
        all
    }
}

/// Depth-first join. `emit` returns whether to keep searching.
fn solve(atoms: &[Atom], facts: &Facts, binding: &mut Binding, emit: &mut dyn FnMut(&Binding) -> bool) -> bool {
    let Some((atom, rest)) = atoms.split_first() else {
        return emit(binding);
    };
    for (x, y) in facts.table(atom.predicate) {
        let mut bound = Vec::with_capacity(2);
        let mut ok = true;
        for (term, value) in atom.args.iter().zip([x, y]) {
            match term {
                Term::Const(c) => ok &= c == value,
                Term::Var(v) => match binding.get(v) {
                    Some(existing) => ok &= existing == value,
                    None => {
                        binding.insert(v.clone(), value.clone());
                        bound.push(v.clone());
                    }
                },
            }
            if !ok {
                break;
            }
        }
        let keep_going = !ok || solve(rest, facts, binding, emit);
        for v in bound {
            binding.remove(&v);
        }
        if !keep_going {
            return false;
        }
    }
    true
}

/// Registered static constraints of one policy instance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub pairs: Vec<MutualExclusionPair>,
    pub rules: Vec<SodRule>,
    pub cardinality: Option<CardinalityRule>,
    pub implications: BTreeSet<(PermissionId, PermissionId)>,
}

impl ConstraintSet {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty() && self.rules.is_empty() && self.cardinality.is_none()
    }

    /// Mutual-exclusion pairs compiled to rule form, followed by the
    /// registered rules.
    pub fn compiled_rules(&self) -> impl Iterator<Item = SodRule> + '_ {
        self.pairs
            .iter()
            .map(|p| SodRule {
                rule_id: p.rule_id(),
                atoms: vec![
                    Atom::new(Predicate::Play, Term::var("S"), Term::val(&p.role_a)),
                    Atom::new(Predicate::Play, Term::var("S"), Term::val(&p.role_b)),
                ],
            })
            .chain(self.rules.iter().cloned())
    }

    pub fn has_rule_id(&self, id: &str) -> bool {
        self.compiled_rules().any(|r| r.rule_id == id)
    }

    /// First violation found: SoD rules in registration order, then cardinality.
    pub fn find_violation(&self, facts: &Facts) -> Option<Violation> {
        for rule in self.compiled_rules() {
            if let Some(binding) = rule.first_violation(facts) {
                return Some(Violation {
                    rule_id: rule.rule_id,
                    kind: ViolationKind::SeparationOfDuty,
                    binding,
                    candidate: None,
                });
            }
        }
        let limit = self.cardinality?.max_roles_per_subject as usize;
        facts.explicit_counts.iter().find(|(_, &n)| n > limit).map(|(s, n)| Violation {
            rule_id: "cardinality".into(),
            kind: ViolationKind::Cardinality,
            binding: Binding::from([("S".to_string(), s.clone()), ("count".to_string(), n.to_string())]),
            candidate: None,
        })
    }
}
