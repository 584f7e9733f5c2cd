use serde::{Deserialize, Serialize};

use crate::ids::AccountId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandwidthDelegation {
    pub to: AccountId,
    pub cpu_us: u64,
    pub net_bytes: u64,
}

/// Registration parameters for a new account.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountSpec {
    pub id: AccountId,
    pub public_key: String,
    #[serde(default)]
    pub staked_tokens: u64,
    #[serde(default)]
    pub ram_bytes: u64,
}

impl AccountSpec {
    pub fn new(id: AccountId, public_key: impl Into<String>, staked_tokens: u64, ram_bytes: u64) -> Self {
        AccountSpec { id, public_key: public_key.into(), staked_tokens, ram_bytes }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub id: AccountId,
    pub public_key: String,
    pub staked_tokens: u64,
    /// Stake share plus received minus delegated bandwidth, per window.
    pub cpu_budget_us: u64,
    pub net_budget_bytes: u64,
    /// RAM quota; never delegable.
    pub ram_bytes: u64,
    pub ram_used_bytes: u64,
    pub delegated_out: Vec<BandwidthDelegation>,
    pub received_cpu_us: u64,
    pub received_net_bytes: u64,
    pub cpu_used_us: u64,
    pub net_used_bytes: u64,
}

impl Account {
    pub fn from_spec(spec: &AccountSpec) -> Self {
        Account {
            id: spec.id.clone(),
            public_key: spec.public_key.clone(),
            staked_tokens: spec.staked_tokens,
            cpu_budget_us: 0,
            net_budget_bytes: 0,
            ram_bytes: spec.ram_bytes,
            ram_used_bytes: 0,
            delegated_out: Vec::new(),
            received_cpu_us: 0,
            received_net_bytes: 0,
            cpu_used_us: 0,
            net_used_bytes: 0,
        }
    }

    pub fn cpu_left_us(&self) -> u64 {
        self.cpu_budget_us.saturating_sub(self.cpu_used_us)
    }

    pub fn net_left_bytes(&self) -> u64 {
        self.net_budget_bytes.saturating_sub(self.net_used_bytes)
    }

    pub fn ram_left_bytes(&self) -> u64 {
        self.ram_bytes.saturating_sub(self.ram_used_bytes)
    }

    pub(crate) fn delegated_cpu_us(&self) -> u64 {
        self.delegated_out.iter().map(|d| d.cpu_us).sum()
    }

    pub(crate) fn delegated_net_bytes(&self) -> u64 {
        self.delegated_out.iter().map(|d| d.net_bytes).sum()
    }
}
