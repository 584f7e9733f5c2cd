use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tx::TxKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cost {
    pub cpu_us: u64,
    pub net_bytes: u64,
}

/// Per-kind CPU/NET charges and the RAM cost of one stored permission row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceTariff {
    pub costs: BTreeMap<TxKind, Cost>,
    pub ram_per_row_bytes: u64,
}

/// Measured per-action costs of the reference RBAC contract.
pub const DEFAULT_COSTS: [(TxKind, Cost); 9] = [
    (TxKind::RoleAssign, Cost { cpu_us: 606, net_bytes: 168 }),
    (TxKind::RoleUpdate, Cost { cpu_us: 347, net_bytes: 168 }),
    (TxKind::RoleRevoke, Cost { cpu_us: 209, net_bytes: 104 }),
    (TxKind::CheckAccess, Cost { cpu_us: 305, net_bytes: 104 }),
    (TxKind::RightTransfer, Cost { cpu_us: 511, net_bytes: 176 }),
    (TxKind::RemoveRightTransfer, Cost { cpu_us: 254, net_bytes: 104 }),
    (TxKind::PermissionAssign, Cost { cpu_us: 856, net_bytes: 160 }),
    (TxKind::PermissionUpdate, Cost { cpu_us: 570, net_bytes: 160 }),
    (TxKind::PermissionRevoke, Cost { cpu_us: 230, net_bytes: 104 }),
];

pub const DEFAULT_RAM_PER_ROW_BYTES: u64 = 256;

impl Default for ResourceTariff {
    fn default() -> Self {
        ResourceTariff { costs: DEFAULT_COSTS.into_iter().collect(), ram_per_row_bytes: DEFAULT_RAM_PER_ROW_BYTES }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CostOverride {
    cpu_us: Option<u64>,
    net_bytes: Option<u64>,
}

#[derive(Deserialize)]
struct TariffFile {
    ram_per_row_bytes: Option<u64>,
    #[serde(flatten)]
    kinds: BTreeMap<TxKind, CostOverride>,
}

impl ResourceTariff {
    pub fn cost(&self, kind: TxKind) -> Cost {
        self.costs.get(&kind).copied().unwrap_or(Cost { cpu_us: 0, net_bytes: 0 })
    }

    /// Reads a TOML key-value file. Keys left out keep their default value:
    ///
    /// ```toml
    /// ram_per_row_bytes = 256
    /// [check_access]
    /// cpu_us = 305
    /// net_bytes = 104
    /// ```
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: TariffFile = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].lines().count().max(1)).unwrap_or(0);
            Error::parse(line, e.message())
        })?;
        let mut tariff = ResourceTariff::default();
        if let Some(ram) = file.ram_per_row_bytes {
            tariff.ram_per_row_bytes = ram;
        }
        for (kind, o) in file.kinds {
            let c = tariff.costs.entry(kind).or_insert(Cost { cpu_us: 0, net_bytes: 0 });
            if let Some(v) = o.cpu_us {
                c.cpu_us = v;
            }
            if let Some(v) = o.net_bytes {
                c.net_bytes = v;
            }
        }
        Ok(tariff)
    }

    pub fn to_toml(&self) -> String {
        let mut out = format!("ram_per_row_bytes = {}\n", self.ram_per_row_bytes);
        for (k, c) in &self.costs {
            out.push_str(&format!("\n[{k}]\ncpu_us = {}\nnet_bytes = {}\n", c.cpu_us, c.net_bytes));
        }
        out
    }
}
