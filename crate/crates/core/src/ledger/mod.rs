//! Hash-linked chain, producer schedule and per-account resource metering.

mod account;
mod block;
mod tariff;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

pub use account::{Account, AccountSpec, BandwidthDelegation};
pub use block::{chain_to_jsonl, parse_chain_jsonl, verify_blocks, verify_chain_jsonl, Block, ProducerSchedule};
pub use tariff::{Cost, ResourceTariff, DEFAULT_COSTS, DEFAULT_RAM_PER_ROW_BYTES};

use crate::digest::Hash32;
use crate::error::{Error, Result};
use crate::ids::AccountId;
use crate::tx::Transaction;

fn default_depth() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub genesis_time_ms: u64,
    pub schedule: ProducerSchedule,
    /// Blocks (including the inclusion block) before a transaction counts as confirmed.
    #[serde(default = "default_depth")]
    pub confirmation_depth: u64,
    /// System-wide CPU time shared among stakers per accounting window.
    pub cpu_capacity_us: u64,
    /// System-wide NET bandwidth shared among stakers per accounting window.
    pub net_capacity_bytes: u64,
    #[serde(default)]
    pub tariff: ResourceTariff,
}

impl ChainConfig {
    pub fn new(producers: Vec<AccountId>) -> Self {
        ChainConfig {
            genesis_time_ms: 0,
            schedule: ProducerSchedule::new(producers),
            confirmation_depth: 1,
            cpu_capacity_us: 100_000_000,
            net_capacity_bytes: 100_000_000,
            tariff: ResourceTariff::default(),
        }
    }

    /// Length of one accounting window: a full producer turn.
    pub fn window_ms(&self) -> u64 {
        self.schedule.blocks_per_turn * self.schedule.block_interval_ms
    }

    pub fn slot_time(&self, height: u64) -> u64 {
        self.genesis_time_ms + height * self.schedule.block_interval_ms
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub accepted: bool,
    pub tx_id: Hash32,
    pub cpu_charged_us: u64,
    pub net_charged_bytes: u64,
}

/// The next scheduled block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub height: u64,
    pub timestamp_ms: u64,
    pub producer: AccountId,
    pub producer_missing: bool,
}

#[derive(Debug, Clone)]
pub struct Ledger {
    config: ChainConfig,
    accounts: BTreeMap<AccountId, Account>,
    blocks: Vec<Block>,
    pool: VecDeque<Transaction>,
    missing: BTreeSet<AccountId>,
    window: u64,
}

impl Ledger {
    /// Creates the chain with an empty genesis block at `genesis_time_ms`.
    pub fn new(config: ChainConfig) -> Result<Self> {
        config.schedule.validate()?;
        if config.confirmation_depth == 0 {
            return Err(Error::InvalidConfig("confirmation_depth must be at least 1".into()));
        }
        let producer = config.schedule.producer_at(0).clone();
        let genesis = Block::new(0, producer, config.genesis_time_ms, Hash32::ZERO, Vec::new());
        Ok(Ledger {
            config,
            accounts: BTreeMap::new(),
            blocks: vec![genesis],
            pool: VecDeque::new(),
            missing: BTreeSet::new(),
            window: 0,
        })
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain always has a genesis block")
    }

    pub fn pool_len(&self) -> usize {
        self.pool.len()
    }

    pub fn accounts(&self) -> impl Iterator<Item = &Account> {
        self.accounts.values()
    }

    pub fn account(&self, id: &AccountId) -> Result<&Account> {
        self.accounts.get(id).ok_or_else(|| Error::UnknownAccount(id.to_string()))
    }

    fn account_mut(&mut self, id: &AccountId) -> Result<&mut Account> {
        self.accounts.get_mut(id).ok_or_else(|| Error::UnknownAccount(id.to_string()))
    }

    pub fn create_account(&mut self, spec: &AccountSpec) -> Result<&Account> {
        if self.accounts.contains_key(&spec.id) {
            return Err(Error::DuplicateAccount(spec.id.to_string()));
        }
        self.accounts.insert(spec.id.clone(), Account::from_spec(spec));
        self.recompute_budgets();
        Ok(&self.accounts[&spec.id])
    }

    /// Adds `tokens` to the account's stake; every account's share is
    /// recomputed since the total changed.
    pub fn stake(&mut self, id: &AccountId, tokens: u64) -> Result<&Account> {
        let acct = self.account_mut(id)?;
        acct.staked_tokens = acct.staked_tokens.saturating_add(tokens);
        self.recompute_budgets();
        Ok(&self.accounts[id])
    }

    pub fn delegate_bandwidth(&mut self, from: &AccountId, to: &AccountId, cpu_us: u64, net_bytes: u64) -> Result<()> {
        self.delegate_resources(from, to, cpu_us, net_bytes, 0)
    }

    /// Moves CPU/NET budget from one account to another. RAM is never delegable.
    pub fn delegate_resources(
        &mut self,
        from: &AccountId,
        to: &AccountId,
        cpu_us: u64,
        net_bytes: u64,
        ram_bytes: u64,
    ) -> Result<()> {
        if ram_bytes > 0 {
            return Err(Error::RamDelegationForbidden);
        }
        self.account(to)?;
        let giver = self.account(from)?;
        if cpu_us == 0 && net_bytes == 0 || from == to {
            return Ok(());
        }
        if giver.cpu_budget_us < cpu_us || giver.net_budget_bytes < net_bytes {
            return Err(Error::InsufficientResources {
                account: from.to_string(),
                needed_cpu_us: cpu_us,
                needed_net_bytes: net_bytes,
                cpu_left_us: giver.cpu_budget_us,
                net_left_bytes: giver.net_budget_bytes,
            });
        }
        let giver = self.account_mut(from)?;
        match giver.delegated_out.iter_mut().find(|d| &d.to == to) {
            Some(d) => {
                d.cpu_us += cpu_us;
                d.net_bytes += net_bytes;
            }
            None => giver.delegated_out.push(BandwidthDelegation { to: to.clone(), cpu_us, net_bytes }),
        }
        let taker = self.account_mut(to)?;
        taker.received_cpu_us += cpu_us;
        taker.received_net_bytes += net_bytes;
        self.recompute_budgets();
        Ok(())
    }

    fn recompute_budgets(&mut self) {
        let total: u128 = self.accounts.values().map(|a| a.staked_tokens as u128).sum();
        let (cpu_cap, net_cap) = (self.config.cpu_capacity_us as u128, self.config.net_capacity_bytes as u128);
        for a in self.accounts.values_mut() {
            let share = |cap: u128| (a.staked_tokens as u128 * cap).checked_div(total).unwrap_or(0) as u64;
            let (cpu_share, net_share) = (share(cpu_cap), share(net_cap));
            a.cpu_budget_us = (cpu_share + a.received_cpu_us).saturating_sub(a.delegated_cpu_us());
            a.net_budget_bytes = (net_share + a.received_net_bytes).saturating_sub(a.delegated_net_bytes());
        }
    }

    /// Admits a transaction into the pending pool, debiting the sender's
    /// CPU/NET for the current window. Nothing changes on error.
    pub fn submit(&mut self, tx: Transaction) -> Result<Receipt> {
        let acct = self.account(&tx.sender)?;
        if !tx.verify(&acct.public_key) {
            return Err(Error::BadSignature(tx.sender.to_string()));
        }
        let cost = self.config.tariff.cost(tx.kind());
        if acct.cpu_left_us() < cost.cpu_us || acct.net_left_bytes() < cost.net_bytes {
            return Err(Error::InsufficientResources {
                account: tx.sender.to_string(),
                needed_cpu_us: cost.cpu_us,
                needed_net_bytes: cost.net_bytes,
                cpu_left_us: acct.cpu_left_us(),
                net_left_bytes: acct.net_left_bytes(),
            });
        }
        let acct = self.account_mut(&tx.sender)?;
        acct.cpu_used_us += cost.cpu_us;
        acct.net_used_bytes += cost.net_bytes;
        let receipt =
            Receipt { accepted: true, tx_id: tx.id(), cpu_charged_us: cost.cpu_us, net_charged_bytes: cost.net_bytes };
        self.pool.push_back(tx);
        Ok(receipt)
    }

    /// Re-admits a transaction taken from an existing block. The signature is
    /// checked but the budget is not: the block's producer already admitted it.
    pub fn admit_replayed(&mut self, tx: Transaction) -> Result<()> {
        let acct = self.account(&tx.sender)?;
        if !tx.verify(&acct.public_key) {
            return Err(Error::BadSignature(tx.sender.to_string()));
        }
        let cost = self.config.tariff.cost(tx.kind());
        let acct = self.account_mut(&tx.sender)?;
        acct.cpu_used_us += cost.cpu_us;
        acct.net_used_bytes += cost.net_bytes;
        self.pool.push_back(tx);
        Ok(())
    }

    pub fn charge_ram(&mut self, id: &AccountId, bytes: u64) -> Result<()> {
        let acct = self.account_mut(id)?;
        if acct.ram_left_bytes() < bytes {
            return Err(Error::InsufficientRam {
                account: id.to_string(),
                needed: bytes,
                available: acct.ram_left_bytes(),
            });
        }
        acct.ram_used_bytes += bytes;
        Ok(())
    }

    pub fn refund_ram(&mut self, id: &AccountId, bytes: u64) {
        if let Some(a) = self.accounts.get_mut(id) {
            a.ram_used_bytes = a.ram_used_bytes.saturating_sub(bytes);
        }
    }

    pub fn set_missing(&mut self, producer: &AccountId, missing: bool) -> Result<()> {
        if !self.config.schedule.producers.contains(producer) {
            return Err(Error::UnknownProducer(producer.to_string()));
        }
        if missing {
            self.missing.insert(producer.clone());
        } else {
            self.missing.remove(producer);
        }
        Ok(())
    }

    pub fn next_slot(&self) -> Slot {
        let height = self.tip().height + 1;
        let producer = self.config.schedule.producer_at(height).clone();
        Slot {
            height,
            timestamp_ms: self.config.slot_time(height),
            producer_missing: self.missing.contains(&producer),
            producer,
        }
    }

    /// Validates the clock and returns the slot to fill.
    pub fn begin_block(&self, now_ms: u64) -> Result<Slot> {
        let tip_ms = self.tip().timestamp_ms;
        if now_ms < tip_ms {
            return Err(Error::ClockRegression { now_ms, tip_ms });
        }
        let slot = self.next_slot();
        if now_ms < slot.timestamp_ms {
            return Err(Error::SlotNotDue { now_ms, due_ms: slot.timestamp_ms });
        }
        Ok(slot)
    }

    /// Pending transactions in FIFO order, or nothing if the slot's producer is missing.
    pub fn take_pool(&mut self, slot: &Slot) -> Vec<Transaction> {
        if slot.producer_missing {
            Vec::new()
        } else {
            self.pool.drain(..).collect()
        }
    }

    /// Appends the block for `slot`; budgets replenish when a producer turn ends.
    pub fn seal(&mut self, slot: Slot, txs: Vec<Transaction>) -> &Block {
        let prev = self.tip().block_hash;
        self.blocks.push(Block::new(slot.height, slot.producer, slot.timestamp_ms, prev, txs));
        let window = (slot.height + 1) / self.config.schedule.blocks_per_turn;
        if window != self.window {
            self.window = window;
            for a in self.accounts.values_mut() {
                a.cpu_used_us = 0;
                a.net_used_bytes = 0;
            }
        }
        self.tip()
    }

    pub fn verify_chain(&self) -> bool {
        verify_blocks(&self.blocks)
    }
}
