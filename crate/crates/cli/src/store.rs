//! On-disk chain state: the block export plus a sidecar holding the genesis
//! and the admin journal. Every invocation rebuilds the engine by replay.

use std::fs;
use std::path::{Path, PathBuf};

use rbac_chain::ledger::{chain_to_jsonl, parse_chain_jsonl};
use rbac_chain::{Engine, Genesis, JournalEntry};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    genesis: Genesis,
    journal: Vec<JournalEntry>,
}

pub struct Store {
    chain: PathBuf,
    meta: PathBuf,
}

impl Store {
    pub fn new(chain: PathBuf) -> Self {
        let mut meta = chain.clone().into_os_string();
        meta.push(".meta.json");
        Store { chain, meta: meta.into() }
    }

    pub fn chain_path(&self) -> &Path {
        &self.chain
    }

    pub fn exists(&self) -> bool {
        self.chain.exists() || self.meta.exists()
    }

    pub fn load(&self) -> Result<Engine, CliError> {
        if !self.exists() {
            return Err(CliError::usage(format!(
                "no chain at {}; run `rbac init` first or set RBAC_CHAIN",
                self.chain.display()
            )));
        }
        let meta_text = read(&self.meta)?;
        let meta: Meta = serde_json::from_str(&meta_text)
            .map_err(|e| CliError::domain("ParseError", format!("{}: {e}", self.meta.display())))?;
        let blocks = parse_chain_jsonl(&read(&self.chain)?)?;
        Ok(Engine::replay(meta.genesis, &meta.journal, &blocks)?)
    }

    pub fn save(&self, engine: &Engine) -> Result<(), CliError> {
        let meta = Meta { genesis: engine.genesis().clone(), journal: engine.journal().to_vec() };
        let meta_text = serde_json::to_string_pretty(&meta).expect("meta serializes");
        write(&self.meta, &meta_text)?;
        write(&self.chain, &chain_to_jsonl(engine.blocks()))
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::domain("Io", format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::domain("Io", format!("{}: {e}", path.display())))
}
