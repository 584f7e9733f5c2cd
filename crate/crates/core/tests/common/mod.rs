//! Independent reference evaluators and random universe builders shared by
//! the integration tests and the acceptance suite. Nothing here calls the
//! library's decision, closure or metric code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbac_chain::delegation::DelegationMode;
use rbac_chain::metrics::TxTimeline;
use rbac_chain::policy::PolicySnapshot;
use rbac_chain::{
    AccessRequest, AccountId, Comparator, ContextCondition, Mode, Permission, PolicyState, RequestContext,
    RightTransferRequest, Value,
};

pub fn acct(s: &str) -> AccountId {
    AccountId::new(s).unwrap()
}

// ---------------------------------------------------------------- access

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleDecision {
    pub allowed: bool,
    pub reason: &'static str,
    pub obligations: BTreeSet<String>,
    /// Identifiers any of which may justify the outcome.
    pub justifying: BTreeSet<String>,
}

fn close(snap: &PolicySnapshot, seed: BTreeSet<String>) -> BTreeSet<String> {
    let mut out = seed;
    loop {
        let before = out.len();
        for (senior, junior) in &snap.hierarchy_edges {
            if out.contains(senior) {
                out.insert(junior.clone());
            }
        }
        if out.len() == before {
            return out;
        }
    }
}

fn live(snap: &PolicySnapshot, id: u64, t: u64) -> bool {
    let Some(d) = snap.delegations.iter().find(|d| d.id.0 == id) else {
        return false;
    };
    let started = d.start_ms.is_none_or(|s| s <= t);
    let unexpired = d.expiry_ms.is_none_or(|e| t < e);
    started && unexpired && d.parent.is_none_or(|p| live(snap, p.0, t))
}

/// Roles a subject may use at `t`, and the larger set whose duties bind it
/// (a transfer suspends use, not duties).
pub fn oracle_roles(snap: &PolicySnapshot, subject: &str, t: u64) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut base: BTreeSet<String> =
        snap.assignments.iter().filter(|a| a.subject_id == subject).map(|a| a.role_name.clone()).collect();
    let mut given_away = BTreeSet::new();
    for d in &snap.delegations {
        if !live(snap, d.id.0, t) {
            continue;
        }
        if d.delegate == subject {
            base.insert(d.role.clone());
        }
        if d.delegator == subject && d.mode == DelegationMode::Transfer {
            given_away.insert(d.role.clone());
        }
    }
    let suspended = close(snap, given_away);
    let held = close(snap, base);
    (held.difference(&suspended).cloned().collect(), held)
}

fn scalar_cmp(a: &Value, b: &Value) -> Option<std::cmp::Ordering> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        (Value::Str(x), Value::Str(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

fn oracle_condition(c: &ContextCondition, ctx: &RequestContext) -> bool {
    use std::cmp::Ordering::*;
    let Some(v) = ctx.attributes.get(&c.attribute) else {
        return false;
    };
    let o = scalar_cmp(v, &c.expected);
    match c.comparator {
        Comparator::Eq => o == Some(Equal),
        Comparator::Ne => o.is_some() && o != Some(Equal),
        Comparator::Lt => o == Some(Less),
        Comparator::Le => o == Some(Less) || o == Some(Equal),
        Comparator::Gt => o == Some(Greater),
        Comparator::Ge => o == Some(Greater) || o == Some(Equal),
        Comparator::InRange => match &c.expected {
            Value::Set(b) if b.len() == 2 => {
                matches!(scalar_cmp(v, &b[0]), Some(Greater | Equal))
                    && matches!(scalar_cmp(v, &b[1]), Some(Less | Equal))
            }
            _ => false,
        },
        Comparator::InSet => match &c.expected {
            Value::Set(items) => items.iter().any(|i| scalar_cmp(v, i) == Some(Equal)),
            _ => false,
        },
    }
}

/// Enumerates every (reachable role, permission row) pair and combines the
/// surviving rows with deny-overrides and default deny.
pub fn oracle_decide(snap: &PolicySnapshot, req: &AccessRequest) -> OracleDecision {
    let (usable, bound) = oracle_roles(snap, &req.subject_id, req.at_ms);
    let mut deny = BTreeSet::new();
    let mut grant = BTreeSet::new();
    let mut excepted = BTreeSet::new();
    let mut obligations = BTreeSet::new();
    for role in &bound {
        for p in &snap.permissions {
            if &p.role != role || p.action != req.operation || p.target != req.object {
                continue;
            }
            if p.mode.is_authorization() && !usable.contains(role) {
                continue;
            }
            if !p.constraints.iter().all(|c| oracle_condition(c, &req.context)) {
                continue;
            }
            match p.mode {
                Mode::AuthPositive => {
                    grant.insert(p.identifier.clone());
                }
                Mode::AuthNegative => {
                    let active = p.exception.as_ref().is_some_and(|e| req.context.exceptions.contains(e));
                    if active {
                        excepted.insert(p.identifier.clone());
                    } else {
                        deny.insert(p.identifier.clone());
                    }
                }
                Mode::ObligPositive | Mode::ObligNegative => {
                    obligations.insert(p.identifier.clone());
                }
            }
        }
    }
    let (allowed, reason, justifying) = if !deny.is_empty() {
        (false, "explicit_deny", deny)
    } else if !grant.is_empty() {
        (true, "permitted", grant)
    } else if !excepted.is_empty() {
        (true, "exception_permitted", excepted)
    } else {
        (false, "no_matching_permission", BTreeSet::new())
    };
    OracleDecision { allowed, reason, obligations, justifying }
}

// ---------------------------------------------------------------- universes

pub const OPS: [&str; 2] = ["read", "write"];
pub const OBJECTS: [&str; 2] = ["o1", "o2"];

pub struct Universe {
    pub policy: PolicyState,
    pub subjects: Vec<String>,
    pub at_ms: Vec<u64>,
}

fn random_condition(rng: &mut ChaCha8Rng) -> ContextCondition {
    match rng.random_range(0..4) {
        0 => ContextCondition::new("hour", Comparator::Lt, Value::Int(rng.random_range(0..24))),
        1 => ContextCondition::new(
            "hour",
            Comparator::InRange,
            Value::Set(vec![Value::Int(rng.random_range(0..12)), Value::Int(rng.random_range(12..24))]),
        ),
        2 => ContextCondition::new("loc", Comparator::Eq, Value::Str(["lab", "home"][rng.random_range(0..2)].into())),
        _ => ContextCondition::new(
            "loc",
            Comparator::InSet,
            Value::Set(vec![Value::Str("lab".into()), Value::Str("ward".into())]),
        ),
    }
}

/// A random policy within the given bounds, built through the public API so
/// that every state is one the engine can actually reach.
pub fn random_universe(seed: u64) -> Universe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let issuer = acct("issuer");
    let mut p = PolicyState::new(issuer.clone());
    let n_roles = rng.random_range(1..=5);
    let roles: Vec<String> = (0..n_roles).map(|i| format!("r{i}")).collect();
    for r in &roles {
        p.define_role(&issuer, r).unwrap();
    }
    let n_subjects = rng.random_range(1..=6);
    let subjects: Vec<String> = (0..n_subjects).map(|i| format!("s{i}")).collect();

    for _ in 0..rng.random_range(0..=3) {
        let a = &roles[rng.random_range(0..n_roles)];
        let b = &roles[rng.random_range(0..n_roles)];
        let _ = p.add_hierarchy_edge(&issuer, a, b);
    }
    for _ in 0..rng.random_range(0..=2) {
        let a = &roles[rng.random_range(0..n_roles)];
        let b = &roles[rng.random_range(0..n_roles)];
        let _ = p.add_mutual_exclusion(&issuer, a, b);
    }
    for i in 0..rng.random_range(0..=8) {
        let mode = Mode::ALL[rng.random_range(0..4)];
        let role = &roles[rng.random_range(0..n_roles)];
        let mut perm =
            Permission::new(&format!("p{i}"), mode, role, OPS[rng.random_range(0..2)], OBJECTS[rng.random_range(0..2)]);
        if rng.random_bool(0.3) {
            perm = perm.with_constraints(vec![random_condition(&mut rng)]);
        }
        if mode == Mode::AuthNegative && rng.random_bool(0.5) {
            perm = perm.with_exception("emergency");
        }
        p.apply_permission_assign(&issuer, perm).unwrap();
    }
    for _ in 0..rng.random_range(0..=8) {
        let s = &subjects[rng.random_range(0..n_subjects)];
        let r = &roles[rng.random_range(0..n_roles)];
        let _ = p.apply_role_assign(&issuer, s, r, 0);
    }
    let mut made = 0;
    for _ in 0..12 {
        if made == 4 {
            break;
        }
        let from = &subjects[rng.random_range(0..n_subjects)];
        let to = &subjects[rng.random_range(0..n_subjects)];
        let mut req = RightTransferRequest::new(to, &roles[rng.random_range(0..n_roles)]);
        if rng.random_bool(0.5) {
            req.expiry_ms = Some(rng.random_range(100..2_000));
        }
        if rng.random_bool(0.3) {
            req.start_ms = Some(rng.random_range(0..100));
        }
        if rng.random_bool(0.3) {
            req = req.transfer();
        }
        if rng.random_bool(0.5) {
            req = req.multi_step(rng.random_range(1..4));
        }
        if p.apply_right_transfer(from, &req, 0).is_ok() {
            made += 1;
        }
    }
    let at_ms = vec![rng.random_range(0..150), rng.random_range(0..2_500), rng.random_range(0..2_500)];
    Universe { policy: p, subjects, at_ms }
}

/// The three context variants every triplet is checked under.
pub fn context_variants() -> [RequestContext; 3] {
    [
        RequestContext::default(),
        RequestContext::default().with("hour", Value::Int(10)).with("loc", Value::Str("lab".into())),
        RequestContext::default()
            .with("hour", Value::Int(22))
            .with("loc", Value::Str("home".into()))
            .with_exception("emergency"),
    ]
}

/// Compares the engine with the oracle on every triplet of a universe;
/// returns a description of the first disagreement.
pub fn compare_universe(u: &Universe) -> Result<usize, String> {
    let snap = u.policy.snapshot();
    let mut checked = 0;
    let mut subjects = u.subjects.clone();
    subjects.push("stranger".into());
    for s in &subjects {
        for op in OPS {
            for obj in OBJECTS {
                for (i, ctx) in context_variants().into_iter().enumerate() {
                    let req = AccessRequest::new(s, op, obj, u.at_ms[i]).with_context(ctx);
                    let got = u.policy.check_access(&req);
                    let want = oracle_decide(&snap, &req);
                    let reason = serde_json::to_value(got.reason).unwrap();
                    let obligations: BTreeSet<String> = got.obligations.iter().cloned().collect();
                    let matched_ok = match &got.matched_permission {
                        Some(m) => want.justifying.contains(m),
                        None => want.justifying.is_empty(),
                    };
                    if got.allowed != want.allowed
                        || reason != want.reason
                        || obligations != want.obligations
                        || !matched_ok
                    {
                        return Err(format!("{req:?}: engine {got:?} vs oracle {want:?}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(checked)
}

// ---------------------------------------------------------------- constraints

/// Every (subject, pair) instantiation of the mutual-exclusion bodies that
/// is satisfied, where `play` is explicit assignment or any stored delegation.
pub fn satisfied_exclusions(snap: &PolicySnapshot) -> Vec<(String, String, String)> {
    let mut play: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for a in &snap.assignments {
        play.entry(&a.subject_id).or_default().insert(&a.role_name);
    }
    for d in &snap.delegations {
        play.entry(&d.delegate).or_default().insert(&d.role);
    }
    let mut out = Vec::new();
    for (s, roles) in &play {
        for pair in &snap.constraints.pairs {
            if roles.contains(pair.role_a.as_str()) && roles.contains(pair.role_b.as_str()) {
                out.push((s.to_string(), pair.role_a.clone(), pair.role_b.clone()));
            }
        }
    }
    out
}

// ---------------------------------------------------------------- metrics

/// Metrics evaluated from raw CSV text with plain string handling, following
/// the formulas literally: per-peer sums divided by per-peer counts, then
/// averaged over peers.
pub struct CsvOracle {
    pub bttt_s: Option<f64>,
    pub cet_s: Option<f64>,
    pub throughput_tps: f64,
}

struct Row {
    start: f64,
    done: f64,
    confirmed: f64,
    block: u64,
}

fn rows_from_csv(text: &str) -> Vec<Row> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (s, d, c, b) = (col("exe_start_ms"), col("exe_done_ms"), col("confirmed_ms"), col("block_height"));
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            Row {
                start: f[s].parse().unwrap(),
                done: f[d].parse().unwrap(),
                confirmed: f[c].parse().unwrap(),
                block: f[b].parse().unwrap(),
            }
        })
        .collect()
}

pub fn csv_oracle(peer_csvs: &[String], t_i: f64, t_j: f64) -> CsvOracle {
    let n = peer_csvs.len() as f64;
    let (mut bttt, mut cet, mut tput) = (0.0, 0.0, 0.0);
    let mut empty = false;
    for text in peer_csvs {
        let rows: Vec<Row> =
            rows_from_csv(text).into_iter().filter(|r| t_i < r.confirmed && r.confirmed <= t_j).collect();
        tput += rows.len() as f64 / ((t_j - t_i) / 1000.0);
        if rows.is_empty() {
            empty = true;
            continue;
        }
        let mut lag = 0.0;
        let mut busy = 0.0;
        for r in &rows {
            let block_max = rows.iter().filter(|o| o.block == r.block).map(|o| o.done).fold(f64::MIN, f64::max);
            lag += r.confirmed - block_max;
            busy += r.done - r.start;
        }
        bttt += lag / 1000.0 / rows.len() as f64;
        cet += busy / 1000.0 / rows.len() as f64;
    }
    CsvOracle { bttt_s: (!empty).then_some(bttt / n), cet_s: (!empty).then_some(cet / n), throughput_tps: tput / n }
}

/// A random well-formed timeline: blocks every 500 ms, sequential
/// executions inside each slot, confirmation at or after the block's last
/// execution.
pub fn random_timeline(rng: &mut ChaCha8Rng) -> Vec<TxTimeline> {
    let mut out = Vec::new();
    let mut n = 0;
    for h in 1..=rng.random_range(1..20u64) {
        let mut clock = (h - 1) as f64 * 500.0 + rng.random_range(0.0..50.0);
        let count = rng.random_range(0..8);
        let mut rows = Vec::new();
        for _ in 0..count {
            let start = clock;
            let done = start + rng.random_range(0.0..60.0);
            clock = done + rng.random_range(0.0..3.0);
            rows.push((start, done));
        }
        let last = rows.iter().map(|r| r.1).fold(h as f64 * 500.0, f64::max);
        let confirmed = last + if rng.random_bool(0.3) { rng.random_range(0.0..400.0) } else { 0.0 };
        for (start, done) in rows {
            n += 1;
            out.push(TxTimeline {
                tx_id: format!("t{n}"),
                kind: rbac_chain::TxKind::ALL[rng.random_range(0..9)],
                exe_start_ms: start,
                exe_done_ms: done,
                confirmed_ms: confirmed,
                block_height: h,
                cpu_us: 1,
                net_bytes: 1,
            });
        }
    }
    out
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

// ---------------------------------------------------------------- chains

/// A single-producer chain where the issuer and every listed subject have a
/// funded account whose key equals its name.
pub fn chain_with(subjects: &[&str], roles: &[&str]) -> rbac_chain::Engine {
    let mut config = rbac_chain::ChainConfig::new(vec![acct("bpa")]);
    config.cpu_capacity_us = 1_000_000_000_000;
    config.net_capacity_bytes = 1_000_000_000_000;
    let mut accounts = vec![rbac_chain::AccountSpec::new(acct("issuer"), "issuer", 1, 1 << 30)];
    for s in subjects {
        accounts.push(rbac_chain::AccountSpec::new(acct(s), *s, 1, 0));
    }
    rbac_chain::Engine::new(rbac_chain::Genesis {
        config,
        issuer: acct("issuer"),
        accounts,
        roles: roles.iter().map(|r| r.to_string()).collect(),
    })
    .unwrap()
}

/// Submits one transaction in its own block and returns its outcome.
pub fn run_tx(
    e: &mut rbac_chain::Engine,
    sender: &str,
    payload: rbac_chain::TxPayload,
) -> rbac_chain::audit::TxOutcome {
    let at = e.next_slot().timestamp_ms;
    let tx = e.sign(&acct(sender), at, payload).unwrap();
    e.execute(tx).unwrap().outcome
}

pub fn failure_code(o: &rbac_chain::audit::TxOutcome) -> Option<&str> {
    match o {
        rbac_chain::audit::TxOutcome::Failed { code, .. } => Some(code),
        _ => None,
    }
}

pub fn allowed_at(e: &mut rbac_chain::Engine, sender: &str, subject: &str, op: &str, obj: &str, at_ms: u64) -> bool {
    let req = AccessRequest::new(subject, op, obj, at_ms);
    run_tx(e, sender, rbac_chain::TxPayload::CheckAccess(req)).decision().expect("check access applies").allowed
}
