//! Ties the ledger to the policy state: transactions are admitted into the
//! pool, applied in block order, and every effect lands in the audit log.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::audit::{AuditEvent, AuditLog, AuditPayload, TxEffect, TxOutcome};
use crate::constraints::SodRule;
use crate::digest::Hash32;
use crate::error::{Error, Result};
use crate::ids::{AccountId, RoleName};
use crate::ledger::{AccountSpec, Block, ChainConfig, Ledger, Receipt, Slot};
use crate::metrics::TxTimeline;
use crate::policy::{PolicySnapshot, PolicyState};
use crate::tx::{Transaction, TxKind, TxPayload};

/// Everything needed to rebuild an engine from scratch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Genesis {
    pub config: ChainConfig,
    pub issuer: AccountId,
    #[serde(default)]
    pub accounts: Vec<AccountSpec>,
    #[serde(default)]
    pub roles: Vec<RoleName>,
}

/// Operator actions that are not among the nine ledger transaction kinds.
/// They are journaled so that a chain export can be replayed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AdminOp {
    CreateAccount { spec: AccountSpec },
    Stake { account: AccountId, tokens: u64 },
    DelegateBandwidth { from: AccountId, to: AccountId, cpu_us: u64, net_bytes: u64 },
    SetMissing { producer: AccountId, missing: bool },
    DefineRole { role: RoleName },
    AddHierarchyEdge { senior: RoleName, junior: RoleName },
    AddSodRule { rule: SodRule },
    AddMutualExclusion { role_a: RoleName, role_b: RoleName },
    SetCardinality { max_roles_per_subject: u32 },
    AddImplication { stronger: String, weaker: String },
}

impl AdminOp {
    pub fn name(&self) -> &'static str {
        match self {
            AdminOp::CreateAccount { .. } => "create_account",
            AdminOp::Stake { .. } => "stake",
            AdminOp::DelegateBandwidth { .. } => "delegate_bandwidth",
            AdminOp::SetMissing { .. } => "set_missing",
            AdminOp::DefineRole { .. } => "define_role",
            AdminOp::AddHierarchyEdge { .. } => "add_hierarchy_edge",
            AdminOp::AddSodRule { .. } => "add_sod_rule",
            AdminOp::AddMutualExclusion { .. } => "add_mutual_exclusion",
            AdminOp::SetCardinality { .. } => "set_cardinality",
            AdminOp::AddImplication { .. } => "add_implication",
        }
    }
}

/// An admin op applied just before the block at `at_height` was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub at_height: u64,
    pub sender: AccountId,
    pub op: AdminOp,
}

/// Source of per-transaction execution times.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionTiming {
    /// Wall-clock time spent applying the transaction.
    Measured,
    /// The tariff's CPU cost, which keeps runs reproducible.
    #[default]
    Tariff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ExecRecord {
    height: u64,
    tx_id: Hash32,
    kind: TxKind,
    start_ms: f64,
    done_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxResult {
    pub tx_id: Hash32,
    pub kind: TxKind,
    pub outcome: TxOutcome,
    pub audit_ref: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub height: u64,
    pub producer: AccountId,
    pub timestamp_ms: u64,
    pub block_hash: Hash32,
    pub producer_missing: bool,
    pub results: Vec<TxResult>,
}

#[derive(Debug, Clone)]
pub struct Engine {
    genesis: Genesis,
    ledger: Ledger,
    policy: PolicyState,
    audit: AuditLog,
    journal: Vec<JournalEntry>,
    timing: ExecutionTiming,
    exec: Vec<ExecRecord>,
}

impl Engine {
    pub fn new(genesis: Genesis) -> Result<Self> {
        let mut ledger = Ledger::new(genesis.config.clone())?;
        for spec in &genesis.accounts {
            ledger.create_account(spec)?;
        }
        let mut policy = PolicyState::new(genesis.issuer.clone());
        for role in &genesis.roles {
            policy.define_role(&genesis.issuer, role)?;
        }
        Ok(Engine {
            genesis,
            ledger,
            policy,
            audit: AuditLog::default(),
            journal: Vec::new(),
            timing: ExecutionTiming::default(),
            exec: Vec::new(),
        })
    }

    pub fn with_timing(mut self, timing: ExecutionTiming) -> Self {
        self.timing = timing;
        self
    }

    pub fn genesis(&self) -> &Genesis {
        &self.genesis
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn policy(&self) -> &PolicyState {
        &self.policy
    }

    pub fn audit(&self) -> &AuditLog {
        &self.audit
    }

    pub fn journal(&self) -> &[JournalEntry] {
        &self.journal
    }

    pub fn blocks(&self) -> &[Block] {
        self.ledger.blocks()
    }

    pub fn snapshot(&self) -> PolicySnapshot {
        self.policy.snapshot()
    }

    pub fn issuer(&self) -> &AccountId {
        self.policy.issuer()
    }

    /// Signs `payload` with the sender's registered key.
    pub fn sign(&self, sender: &AccountId, submitted_at: u64, payload: TxPayload) -> Result<Transaction> {
        let key = &self.ledger.account(sender)?.public_key;
        Ok(Transaction::signed(sender.clone(), key, submitted_at, payload))
    }

    /// Applies an admin op immediately and journals it against the next block.
    pub fn admin(&mut self, sender: &AccountId, op: AdminOp) -> Result<()> {
        match &op {
            AdminOp::CreateAccount { spec } => self.ledger.create_account(spec).map(drop)?,
            AdminOp::Stake { account, tokens } => self.ledger.stake(account, *tokens).map(drop)?,
            AdminOp::DelegateBandwidth { from, to, cpu_us, net_bytes } => {
                self.ledger.delegate_bandwidth(from, to, *cpu_us, *net_bytes)?
            }
            AdminOp::SetMissing { producer, missing } => self.ledger.set_missing(producer, *missing)?,
            AdminOp::DefineRole { role } => self.policy.define_role(sender, role)?,
            AdminOp::AddHierarchyEdge { senior, junior } => self.policy.add_hierarchy_edge(sender, senior, junior)?,
            AdminOp::AddSodRule { rule } => self.policy.add_sod_rule(sender, rule.clone())?,
            AdminOp::AddMutualExclusion { role_a, role_b } => {
                self.policy.add_mutual_exclusion(sender, role_a, role_b)?
            }
            AdminOp::SetCardinality { max_roles_per_subject } => {
                self.policy.set_cardinality(sender, *max_roles_per_subject)?
            }
            AdminOp::AddImplication { stronger, weaker } => self.policy.add_implication(sender, stronger, weaker)?,
        }
        let slot = self.ledger.next_slot();
        self.audit.push(AuditEvent {
            index: 0,
            block_height: slot.height,
            tx_index: None,
            timestamp_ms: slot.timestamp_ms,
            event_kind: op.name().to_string(),
            subject: None,
            payload: AuditPayload::Admin { sender: sender.clone(), op: op.clone() },
        });
        self.journal.push(JournalEntry { at_height: slot.height, sender: sender.clone(), op });
        Ok(())
    }

    pub fn submit(&mut self, tx: Transaction) -> Result<Receipt> {
        self.ledger.submit(tx)
    }

    pub fn next_slot(&self) -> Slot {
        self.ledger.next_slot()
    }

    /// Produces the next block at its scheduled time.
    pub fn produce_next(&mut self) -> Result<BlockReport> {
        let due = self.ledger.next_slot().timestamp_ms;
        self.produce_block(due)
    }

    /// Seals the next block: expired delegations are swept, then each pooled
    /// transaction is applied in FIFO order. A transaction that fails policy
    /// checks stays in the block with a failed outcome.
    pub fn produce_block(&mut self, now_ms: u64) -> Result<BlockReport> {
        let slot = self.ledger.begin_block(now_ms)?;
        let txs = self.ledger.take_pool(&slot);
        let block_ms = slot.timestamp_ms;

        let expired = self.policy.expire_delegations(block_ms);
        if !expired.is_empty() {
            self.audit.push(AuditEvent {
                index: 0,
                block_height: slot.height,
                tx_index: None,
                timestamp_ms: block_ms,
                event_kind: "delegation_expired".into(),
                subject: None,
                payload: AuditPayload::Expired { delegations: expired },
            });
        }

        // execution runs through the slot that ends at the block timestamp
        let mut clock_ms = block_ms.saturating_sub(self.ledger.config().schedule.block_interval_ms) as f64;
        let mut results = Vec::with_capacity(txs.len());
        for (i, tx) in txs.iter().enumerate() {
            let started = Instant::now();
            let mut outcome = match self.apply(tx, block_ms) {
                Ok(effect) => TxOutcome::Applied { effect },
                Err(e) => TxOutcome::failed(&e),
            };
            let elapsed_ms = started.elapsed().as_secs_f64() * 1000.0;
            let duration_ms = match self.timing {
                ExecutionTiming::Measured => elapsed_ms,
                ExecutionTiming::Tariff => self.ledger.config().tariff.cost(tx.kind()).cpu_us as f64 / 1000.0,
            };
            let audit_ref = self.audit.next_index();
            if let TxOutcome::Applied { effect: TxEffect::Decision(d) } = &mut outcome {
                d.audit_ref = Some(audit_ref);
            }
            let tx_id = tx.id();
            self.exec.push(ExecRecord {
                height: slot.height,
                tx_id,
                kind: tx.kind(),
                start_ms: clock_ms,
                done_ms: clock_ms + duration_ms,
            });
            clock_ms += duration_ms;
            self.audit.push(AuditEvent {
                index: 0,
                block_height: slot.height,
                tx_index: Some(i as u32),
                timestamp_ms: block_ms,
                event_kind: tx.kind().as_str().to_string(),
                subject: tx.payload.subject().map(String::from),
                payload: AuditPayload::Tx { tx: tx.clone(), outcome: outcome.clone() },
            });
            results.push(TxResult { tx_id, kind: tx.kind(), outcome, audit_ref });
        }

        let producer_missing = slot.producer_missing;
        let block = self.ledger.seal(slot, txs);
        Ok(BlockReport {
            height: block.height,
            producer: block.producer.clone(),
            timestamp_ms: block.timestamp_ms,
            block_hash: block.block_hash,
            producer_missing,
            results,
        })
    }

    /// Submits one transaction and produces the block that includes it.
    pub fn execute(&mut self, tx: Transaction) -> Result<TxResult> {
        self.submit(tx)?;
        let mut report = self.produce_next()?;
        while report.producer_missing {
            report = self.produce_next()?;
        }
        Ok(report.results.pop().expect("the pooled transaction is in this block"))
    }

    fn apply(&mut self, tx: &Transaction, now_ms: u64) -> Result<TxEffect> {
        let sender = &tx.sender;
        let subject_of_sender = || self.ledger.account(sender).map(|a| a.public_key.clone());
        Ok(match &tx.payload {
            TxPayload::RoleAssign { subject, role } => {
                TxEffect::RoleAssigned(self.policy.apply_role_assign(sender, subject, role, now_ms)?)
            }
            TxPayload::RoleUpdate { subject, old_role, new_role } => TxEffect::RoleUpdated(
                self.policy.apply_role_update(sender, subject, old_role.as_deref(), new_role, now_ms)?,
            ),
            TxPayload::RoleRevoke { subject, role, strength } => {
                TxEffect::RoleRevoked(self.policy.apply_role_revoke(sender, subject, role, *strength)?)
            }
            TxPayload::CheckAccess(req) => TxEffect::Decision(self.policy.check_access(req)),
            TxPayload::RightTransfer(req) => {
                let delegator = subject_of_sender()?;
                TxEffect::Delegated(self.policy.apply_right_transfer(&delegator, req, now_ms)?)
            }
            TxPayload::RemoveRightTransfer { delegation } => {
                let requester = subject_of_sender()?;
                let is_issuer = sender == self.policy.issuer();
                TxEffect::DelegationsRemoved(self.policy.apply_remove_right_transfer(
                    &requester,
                    is_issuer,
                    *delegation,
                )?)
            }
            TxPayload::PermissionAssign { permission } => {
                let row = self.ledger.config().tariff.ram_per_row_bytes;
                if sender == self.policy.issuer() {
                    let available = self.ledger.account(sender)?.ram_left_bytes();
                    if available < row {
                        return Err(Error::InsufficientRam { account: sender.to_string(), needed: row, available });
                    }
                }
                self.policy.apply_permission_assign(sender, permission.clone())?;
                self.ledger.charge_ram(sender, row)?;
                TxEffect::PermissionAssigned(permission.identifier.clone())
            }
            TxPayload::PermissionUpdate { identifier, patch } => {
                TxEffect::PermissionUpdated(self.policy.apply_permission_update(sender, identifier, patch)?)
            }
            TxPayload::PermissionRevoke { role } => {
                let ids = self.policy.apply_permission_revoke(sender, role)?;
                let row = self.ledger.config().tariff.ram_per_row_bytes;
                self.ledger.refund_ram(sender, row * ids.len() as u64);
                TxEffect::PermissionsRevoked(ids)
            }
        })
    }

    /// Timelines of every transaction whose confirmation block exists.
    /// Confirmation is the timestamp of the block `confirmation_depth - 1`
    /// after inclusion, or the end of the block's last execution if later.
    pub fn timelines(&self) -> Vec<TxTimeline> {
        let config = self.ledger.config();
        let tip = self.ledger.tip().height;
        let mut out = Vec::with_capacity(self.exec.len());
        let mut i = 0;
        while i < self.exec.len() {
            let height = self.exec[i].height;
            let end = i + self.exec[i..].iter().take_while(|r| r.height == height).count();
            let block = &self.exec[i..end];
            let confirm_height = height + config.confirmation_depth - 1;
            if confirm_height <= tip {
                let last_done = block.iter().map(|r| r.done_ms).fold(f64::NEG_INFINITY, f64::max);
                let confirmed_ms = (config.slot_time(confirm_height) as f64).max(last_done);
                for r in block {
                    let cost = config.tariff.cost(r.kind);
                    out.push(TxTimeline {
                        tx_id: r.tx_id.to_hex(),
                        kind: r.kind,
                        exe_start_ms: r.start_ms,
                        exe_done_ms: r.done_ms,
                        confirmed_ms,
                        block_height: height,
                        cpu_us: cost.cpu_us,
                        net_bytes: cost.net_bytes,
                    });
                }
            }
            i = end;
        }
        out
    }

    /// Rebuilds an engine from its genesis, admin journal and block list,
    /// failing on the first block whose recomputed hash differs.
    pub fn replay(genesis: Genesis, journal: &[JournalEntry], blocks: &[Block]) -> Result<Engine> {
        Engine::replay_with(genesis, journal, blocks, ExecutionTiming::default())
    }

    pub fn replay_with(
        genesis: Genesis,
        journal: &[JournalEntry],
        blocks: &[Block],
        timing: ExecutionTiming,
    ) -> Result<Engine> {
        let mut engine = Engine::new(genesis)?.with_timing(timing);
        let Some((first, rest)) = blocks.split_first() else {
            return Err(Error::ReplayMismatch { height: 0, message: "chain is empty".into() });
        };
        if first.block_hash != engine.ledger.tip().block_hash {
            return Err(Error::ReplayMismatch { height: 0, message: "genesis block differs".into() });
        }
        let mut pending = journal.iter().peekable();
        for block in rest {
            while let Some(entry) = pending.next_if(|e| e.at_height <= block.height) {
                engine.admin(&entry.sender, entry.op.clone())?;
            }
            for tx in &block.tx_list {
                engine.ledger.admit_replayed(tx.clone())?;
            }
            let report = engine.produce_block(block.timestamp_ms)?;
            if report.height != block.height || report.block_hash != block.block_hash {
                return Err(Error::ReplayMismatch {
                    height: block.height,
                    message: format!("expected {}, rebuilt {}", block.block_hash, report.block_hash),
                });
            }
        }
        for entry in pending {
            engine.admin(&entry.sender, entry.op.clone())?;
        }
        Ok(engine)
    }

    /// Rebuilds an engine from its audit events alone. Blocks carrying no
    /// events are reproduced empty; trailing empty blocks are not.
    pub fn replay_audit(genesis: Genesis, events: &[AuditEvent]) -> Result<Engine> {
        let mut engine = Engine::new(genesis)?;
        for event in events {
            while engine.ledger.next_slot().height < event.block_height {
                engine.produce_next()?;
            }
            match &event.payload {
                AuditPayload::Admin { sender, op } => engine.admin(sender, op.clone())?,
                AuditPayload::Tx { tx, .. } => engine.ledger.admit_replayed(tx.clone())?,
                AuditPayload::Expired { .. } => {}
            }
        }
        if engine.ledger.pool_len() > 0 {
            engine.produce_next()?;
        }
        Ok(engine)
    }
}
