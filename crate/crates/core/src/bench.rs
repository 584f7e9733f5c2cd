//! Reproducible benchmark scenarios over the simulated chain.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::access::AccessRequest;
use crate::delegation::RightTransferRequest;
use crate::engine::{Engine, ExecutionTiming, Genesis};
use crate::error::{Error, Result};
use crate::ids::{AccountId, DelegationId};
use crate::ledger::{AccountSpec, ChainConfig};
use crate::metrics::{compute_bttt, compute_cet, compute_throughput, MetricsWindow, TxTimeline};
use crate::policy::{Mode, Permission, PermissionPatch, RevocationStrength};
use crate::tx::{TxKind, TxPayload};

const ROLES: usize = 5;

fn one() -> u32 {
    1
}
fn one_u64() -> u64 {
    1
}
fn four() -> usize {
    4
}
fn sixteen() -> usize {
    16
}
fn yes() -> bool {
    true
}
fn ten_seconds() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Number of transactions per repetition.
    pub volume: usize,
    #[serde(default = "four")]
    pub producers: usize,
    /// Relative weights per kind; empty means CheckAccess only.
    #[serde(default)]
    pub mix: BTreeMap<TxKind, u32>,
    /// Simulated run length; the load is spread evenly over its blocks.
    #[serde(default = "ten_seconds")]
    pub duration_ms: u64,
    #[serde(default = "one")]
    pub repetitions: u32,
    #[serde(default)]
    pub seed: u64,
    /// Peers that each re-execute the chain and report their own timings.
    #[serde(default = "one")]
    pub peers: u32,
    #[serde(default = "sixteen")]
    pub subjects: usize,
    /// Draw a fresh random subject for every CheckAccess.
    #[serde(default = "yes")]
    pub randomize_subjects: bool,
    #[serde(default)]
    pub timing: ExecutionTiming,
    #[serde(default = "one_u64")]
    pub confirmation_depth: u64,
}

impl Scenario {
    pub fn new(volume: usize) -> Self {
        serde_json::from_value(serde_json::json!({ "volume": volume })).expect("defaults are valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScenario(m.into()));
        if self.volume == 0 {
            return bad("volume must be at least 1");
        }
        if !(1..=21).contains(&self.producers) {
            return bad("producers must be between 1 and 21");
        }
        if self.duration_ms < 500 {
            return bad("duration_ms must cover at least one block");
        }
        if self.repetitions == 0 || self.peers == 0 || self.subjects == 0 || self.confirmation_depth == 0 {
            return bad("repetitions, peers, subjects and confirmation_depth must be positive");
        }
        if !self.mix.is_empty() && self.mix.values().all(|&w| w == 0) {
            return bad("mix weights sum to zero");
        }
        Ok(())
    }

    pub fn block_count(&self) -> u64 {
        self.duration_ms.div_ceil(500)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindTotals {
    pub count: u64,
    pub cpu_us: u64,
    pub net_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionReport {
    pub repetition: u32,
    pub seed: u64,
    /// Blocks produced for the measured load (setup block excluded).
    pub block_count: u64,
    pub tx_count: u64,
    pub applied: u64,
    pub failed: u64,
    pub bttt_s: f64,
    pub cet_s: f64,
    pub throughput_tps: f64,
    pub min_block_interval_ms: u64,
    pub max_block_interval_ms: u64,
    pub chain_valid: bool,
    pub resources: BTreeMap<TxKind, KindTotals>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub scenario: Scenario,
    pub repetitions: Vec<RepetitionReport>,
    pub mean_bttt_s: f64,
    pub mean_cet_s: f64,
    pub mean_throughput_tps: f64,
}

fn letters(mut i: usize) -> String {
    let mut s = String::new();
    loop {
        s.insert(0, (b'a' + (i % 26) as u8) as char);
        i /= 26;
        if i == 0 {
            return s;
        }
    }
}

fn account(prefix: &str, i: usize) -> AccountId {
    AccountId::new(format!("{prefix}{}", letters(i))).expect("generated names are valid")
}

/// The genesis used by every benchmark repetition.
pub fn bench_genesis(scenario: &Scenario) -> Genesis {
    let producers = (0..scenario.producers).map(|i| account("prod", i)).collect();
    let mut config = ChainConfig::new(producers);
    config.cpu_capacity_us = 1_000_000_000_000;
    config.net_capacity_bytes = 1_000_000_000_000;
    config.confirmation_depth = scenario.confirmation_depth;
    let mut accounts = vec![AccountSpec::new(AccountId::new("issuer").expect("valid"), "issuer", 1, 1 << 30)];
    for i in 0..scenario.subjects {
        let id = account("user", i);
        accounts.push(AccountSpec::new(id.clone(), id.as_str(), 1, 0));
    }
    Genesis {
        config,
        issuer: AccountId::new("issuer").expect("valid"),
        accounts,
        roles: (0..ROLES).map(|r| format!("role{r}")).collect(),
    }
}

struct LoadGen<'a> {
    rng: ChaCha8Rng,
    scenario: &'a Scenario,
    kinds: Vec<(TxKind, u32)>,
    issued_permissions: usize,
    issued_delegations: u64,
}

impl LoadGen<'_> {
    fn pick_kind(&mut self) -> TxKind {
        if self.kinds.is_empty() {
            return TxKind::CheckAccess;
        }
        let total: u32 = self.kinds.iter().map(|(_, w)| w).sum();
        let mut roll = self.rng.random_range(0..total);
        for &(k, w) in &self.kinds {
            if roll < w {
                return k;
            }
            roll -= w;
        }
        unreachable!("roll is below the weight total")
    }

    fn subject(&mut self) -> AccountId {
        account("user", self.rng.random_range(0..self.scenario.subjects))
    }

    fn role(&mut self) -> String {
        format!("role{}", self.rng.random_range(0..ROLES))
    }

    fn next(&mut self, issuer: &AccountId) -> (AccountId, TxPayload) {
        let kind = self.pick_kind();
        match kind {
            TxKind::CheckAccess => {
                let subject = if self.scenario.randomize_subjects { self.subject() } else { account("user", 0) };
                let object = format!("obj{}", self.rng.random_range(0..ROLES));
                let req = AccessRequest::new(subject.as_str(), "read", &object, 0);
                (subject, TxPayload::CheckAccess(req))
            }
            TxKind::RoleAssign => {
                let (s, r) = (self.subject(), self.role());
                (issuer.clone(), TxPayload::RoleAssign { subject: s.to_string(), role: r })
            }
            TxKind::RoleUpdate => {
                let (s, r) = (self.subject(), self.role());
                (issuer.clone(), TxPayload::RoleUpdate { subject: s.to_string(), old_role: None, new_role: r })
            }
            TxKind::RoleRevoke => {
                let (s, r) = (self.subject(), self.role());
                let strength = RevocationStrength::Weak;
                (issuer.clone(), TxPayload::RoleRevoke { subject: s.to_string(), role: r, strength })
            }
            TxKind::RightTransfer => {
                let (from, to, role) = (self.subject(), self.subject(), self.role());
                self.issued_delegations += 1;
                (from, TxPayload::RightTransfer(RightTransferRequest::new(to.as_str(), &role)))
            }
            TxKind::RemoveRightTransfer => {
                let from = self.subject();
                let id = self.rng.random_range(0..self.issued_delegations.max(1));
                (from, TxPayload::RemoveRightTransfer { delegation: DelegationId(id) })
            }
            TxKind::PermissionAssign => {
                self.issued_permissions += 1;
                let id = format!("load{}", self.issued_permissions);
                let role = self.role();
                let object = format!("obj{}", self.rng.random_range(0..ROLES));
                (
                    issuer.clone(),
                    TxPayload::PermissionAssign {
                        permission: Permission::new(&id, Mode::AuthPositive, &role, "read", &object),
                    },
                )
            }
            TxKind::PermissionUpdate => {
                let id = format!("base{}", self.rng.random_range(0..ROLES));
                let patch = PermissionPatch {
                    target: Some(format!("obj{}", self.rng.random_range(0..ROLES))),
                    ..Default::default()
                };
                (issuer.clone(), TxPayload::PermissionUpdate { identifier: id, patch })
            }
            TxKind::PermissionRevoke => {
                let role = self.role();
                (issuer.clone(), TxPayload::PermissionRevoke { role })
            }
        }
    }
}

/// Runs one repetition and returns the engine that produced it together with
/// the measured timelines of every peer.
pub fn run_repetition(scenario: &Scenario, seed: u64) -> Result<(Engine, Vec<Vec<TxTimeline>>)> {
    scenario.validate()?;
    let genesis = bench_genesis(scenario);
    let issuer = genesis.issuer.clone();
    let mut engine = Engine::new(genesis.clone())?.with_timing(scenario.timing);

    // setup block: one permission per role and one role per subject
    for r in 0..ROLES {
        let p =
            Permission::new(&format!("base{r}"), Mode::AuthPositive, &format!("role{r}"), "read", &format!("obj{r}"));
        let tx = engine.sign(&issuer, 0, TxPayload::PermissionAssign { permission: p })?;
        engine.submit(tx)?;
    }
    for i in 0..scenario.subjects {
        let payload =
            TxPayload::RoleAssign { subject: account("user", i).to_string(), role: format!("role{}", i % ROLES) };
        let tx = engine.sign(&issuer, 0, payload)?;
        engine.submit(tx)?;
    }
    engine.produce_next()?;
    let setup_height = engine.ledger().tip().height;

    let mut gen = LoadGen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        scenario,
        kinds: scenario.mix.iter().filter(|(_, &w)| w > 0).map(|(&k, &w)| (k, w)).collect(),
        issued_permissions: 0,
        issued_delegations: 0,
    };
    let blocks = scenario.block_count();
    let mut next_tx = 0usize;
    for b in 0..blocks {
        let until = ((b + 1) as u128 * scenario.volume as u128 / blocks as u128) as usize;
        let at = engine.next_slot().timestamp_ms;
        while next_tx < until {
            let (sender, payload) = gen.next(&issuer);
            let tx = engine.sign(&sender, at, payload)?;
            engine.submit(tx)?;
            next_tx += 1;
        }
        engine.produce_next()?;
    }

    let measured = |t: &Vec<TxTimeline>| t.iter().filter(|x| x.block_height > setup_height).cloned().collect();
    let mut peers: Vec<Vec<TxTimeline>> = vec![measured(&engine.timelines())];
    for _ in 1..scenario.peers {
        let peer = Engine::replay_with(genesis.clone(), engine.journal(), engine.blocks(), scenario.timing)?;
        peers.push(measured(&peer.timelines()));
    }
    Ok((engine, peers))
}

pub fn run_benchmark(scenario: &Scenario) -> Result<BenchReport> {
    scenario.validate()?;
    let mut reps = Vec::new();
    for rep in 0..scenario.repetitions {
        let seed = scenario.seed.wrapping_add(rep as u64);
        let (engine, peers) = run_repetition(scenario, seed)?;
        let setup = &engine.blocks()[1];
        let window = MetricsWindow::covering(peers, setup.timestamp_ms as f64);

        let mut resources: BTreeMap<TxKind, KindTotals> = BTreeMap::new();
        for t in &window.peers[0] {
            let e = resources.entry(t.kind).or_default();
            e.count += 1;
            e.cpu_us += t.cpu_us;
            e.net_bytes += t.net_bytes;
        }
        let measured_blocks = &engine.blocks()[1..];
        let deltas: Vec<u64> = measured_blocks.windows(2).map(|w| w[1].timestamp_ms - w[0].timestamp_ms).collect();
        let (mut applied, mut failed) = (0, 0);
        for e in engine.audit().events() {
            if let crate::audit::AuditPayload::Tx { outcome, .. } = &e.payload {
                if e.block_height > setup.height {
                    if outcome.is_applied() {
                        applied += 1;
                    } else {
                        failed += 1;
                    }
                }
            }
        }
        reps.push(RepetitionReport {
            repetition: rep,
            seed,
            block_count: engine.ledger().tip().height - setup.height,
            tx_count: window.peers[0].len() as u64,
            applied,
            failed,
            bttt_s: compute_bttt(&window)?,
            cet_s: compute_cet(&window)?,
            throughput_tps: compute_throughput(&window)?,
            min_block_interval_ms: deltas.iter().copied().min().unwrap_or(0),
            max_block_interval_ms: deltas.iter().copied().max().unwrap_or(0),
            chain_valid: engine.ledger().verify_chain(),
            resources,
        });
    }
    let mean = |f: fn(&RepetitionReport) -> f64| reps.iter().map(f).sum::<f64>() / reps.len() as f64;
    Ok(BenchReport {
        scenario: scenario.clone(),
        mean_bttt_s: mean(|r| r.bttt_s),
        mean_cet_s: mean(|r| r.cet_s),
        mean_throughput_tps: mean(|r| r.throughput_tps),
        repetitions: reps,
    })
}
