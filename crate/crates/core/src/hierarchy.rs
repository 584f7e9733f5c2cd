use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::RoleName;

/// Role DAG. An edge `(senior, junior)` means the senior role inherits every
/// permission of the junior role.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleHierarchy {
    edges: BTreeSet<(RoleName, RoleName)>,
}

impl RoleHierarchy {
    pub fn edges(&self) -> impl Iterator<Item = &(RoleName, RoleName)> {
        self.edges.iter()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Inserts the edge unless it would close a directed cycle.
    pub fn add_edge(&mut self, senior: &str, junior: &str) -> Result<bool> {
        if senior == junior || self.juniors_of(junior).contains(senior) {
            return Err(Error::CycleDetected { senior: senior.into(), junior: junior.into() });
        }
        Ok(self.edges.insert((senior.to_string(), junior.to_string())))
    }

    /// `role` together with every transitively junior role.
    pub fn juniors_of(&self, role: &str) -> BTreeSet<RoleName> {
        self.reach(role, |(s, j)| (s.as_str(), j.as_str()))
    }

    /// `role` together with every transitively senior role.
    pub fn seniors_of(&self, role: &str) -> BTreeSet<RoleName> {
        self.reach(role, |(s, j)| (j.as_str(), s.as_str()))
    }

    /// Junior closure of a set of roles.
    pub fn closure<'a>(&self, roles: impl IntoIterator<Item = &'a RoleName>) -> BTreeSet<RoleName> {
        let mut out = BTreeSet::new();
        for r in roles {
            if !out.contains(r) {
                out.extend(self.juniors_of(r));
            }
        }
        out
    }

    /// True when `senior` strictly dominates `junior`.
    pub fn is_strictly_senior(&self, senior: &str, junior: &str) -> bool {
        senior != junior && self.juniors_of(senior).contains(junior)
    }

    fn reach(&self, start: &str, dir: impl Fn(&(RoleName, RoleName)) -> (&str, &str)) -> BTreeSet<RoleName> {
        let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for e in &self.edges {
            let (from, to) = dir(e);
            adjacency.entry(from).or_default().push(to);
        }
        let mut seen = BTreeSet::from([start.to_string()]);
        let mut stack = vec![start];
        while let Some(r) = stack.pop() {
            for &next in adjacency.get(r).into_iter().flatten() {
                if seen.insert(next.to_string()) {
                    stack.push(next);
                }
            }
        }
        seen
    }
}
