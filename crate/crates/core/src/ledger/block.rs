use serde::{Deserialize, Serialize};

use crate::digest::{Canonical, Hash32};
use crate::error::{Error, Result};
use crate::ids::AccountId;
use crate::tx::Transaction;

/// Fields are declared in the order they are hashed and serialized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub height: u64,
    pub producer: AccountId,
    pub timestamp_ms: u64,
    pub prev_hash: Hash32,
    pub tx_list: Vec<Transaction>,
    pub block_hash: Hash32,
}

impl Block {
    pub fn new(
        height: u64,
        producer: AccountId,
        timestamp_ms: u64,
        prev_hash: Hash32,
        tx_list: Vec<Transaction>,
    ) -> Self {
        let mut b = Block { height, producer, timestamp_ms, prev_hash, tx_list, block_hash: Hash32::ZERO };
        b.block_hash = b.compute_hash();
        b
    }

    pub fn compute_hash(&self) -> Hash32 {
        let mut c = Canonical::new("rbac-block-v1");
        c.u64(self.height)
            .str(self.producer.as_str())
            .u64(self.timestamp_ms)
            .hash(&self.prev_hash)
            .u64(self.tx_list.len() as u64);
        for tx in &self.tx_list {
            tx.write_canonical(&mut c);
        }
        c.finish()
    }

    pub fn hash_is_valid(&self) -> bool {
        self.compute_hash() == self.block_hash
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("block serialization is infallible")
    }
}

/// True iff every block hash recomputes, every `prev_hash` names its parent,
/// heights are consecutive from zero and the genesis parent is all zeros.
pub fn verify_blocks(blocks: &[Block]) -> bool {
    let Some(genesis) = blocks.first() else {
        return false;
    };
    if genesis.height != 0 || genesis.prev_hash != Hash32::ZERO {
        return false;
    }
    blocks.iter().all(Block::hash_is_valid)
        && blocks.windows(2).all(|w| w[1].prev_hash == w[0].block_hash && w[1].height == w[0].height + 1)
}

/// Parses a JSON-lines chain export. Each line must be exactly the canonical
/// serialization of the block it decodes to.
pub fn parse_chain_jsonl(text: &str) -> Result<Vec<Block>> {
    let mut blocks = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let block: Block = serde_json::from_str(line).map_err(|e| Error::parse(i + 1, e))?;
        if block.to_json_line() != line {
            return Err(Error::parse(i + 1, "line is not in canonical form"));
        }
        blocks.push(block);
    }
    Ok(blocks)
}

pub fn chain_to_jsonl(blocks: &[Block]) -> String {
    let mut out = String::new();
    for b in blocks {
        out.push_str(&b.to_json_line());
        out.push('\n');
    }
    out
}

/// Verifies a serialized chain; unparseable or non-canonical input is invalid.
pub fn verify_chain_jsonl(text: &str) -> bool {
    parse_chain_jsonl(text).map(|b| verify_blocks(&b)).unwrap_or(false)
}

/// Round-robin producer turns of `blocks_per_turn` consecutive blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProducerSchedule {
    pub producers: Vec<AccountId>,
    pub blocks_per_turn: u64,
    pub block_interval_ms: u64,
}

impl ProducerSchedule {
    pub fn new(producers: Vec<AccountId>) -> Self {
        ProducerSchedule { producers, blocks_per_turn: 6, block_interval_ms: 500 }
    }

    pub fn producer_at(&self, height: u64) -> &AccountId {
        let turn = height / self.blocks_per_turn;
        &self.producers[(turn % self.producers.len() as u64) as usize]
    }

    pub fn validate(&self) -> Result<()> {
        if self.producers.is_empty() {
            return Err(Error::InvalidConfig("producer schedule is empty".into()));
        }
        if self.blocks_per_turn == 0 || self.block_interval_ms == 0 {
            return Err(Error::InvalidConfig("blocks_per_turn and block_interval_ms must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tx::TxPayload;

    fn acct(s: &str) -> AccountId {
        AccountId::new(s).unwrap()
    }

    fn chain(n: u64) -> Vec<Block> {
        let mut blocks = vec![Block::new(0, acct("bp"), 0, Hash32::ZERO, vec![])];
        for h in 1..n {
            let tx = Transaction::signed(
                acct("issuer"),
                "k",
                h,
                TxPayload::RoleAssign { subject: format!("s{h}"), role: "r".into() },
            );
            let prev = blocks.last().unwrap().block_hash;
            blocks.push(Block::new(h, acct("bp"), h * 500, prev, vec![tx]));
        }
        blocks
    }

    #[test]
    fn schedule_turns() {
        let s = ProducerSchedule::new(vec![acct("a"), acct("b")]);
        let who: Vec<&str> = (0..12).map(|h| s.producer_at(h).as_str()).collect();
        assert_eq!(who, ["a", "a", "a", "a", "a", "a", "b", "b", "b", "b", "b", "b"]);
        assert_eq!(s.producer_at(12).as_str(), "a");
    }

    #[test]
    fn verify_detects_tampering() {
        let blocks = chain(10);
        assert!(verify_blocks(&blocks));
        assert!(verify_blocks(&blocks[..1]));
        assert!(!verify_blocks(&[]));

        let mut t = blocks.clone();
        t[3].tx_list[0].payload = TxPayload::RoleAssign { subject: "x".into(), role: "r".into() };
        assert!(!verify_blocks(&t));

        let mut t = blocks.clone();
        t[5].timestamp_ms += 1;
        assert!(!verify_blocks(&t));

        // recomputing the tampered block's own hash still breaks the link
        let mut t = blocks.clone();
        t[4].producer = acct("evil");
        t[4].block_hash = t[4].compute_hash();
        assert!(!verify_blocks(&t));
    }

    #[test]
    fn jsonl_is_canonical() {
        let blocks = chain(4);
        let text = chain_to_jsonl(&blocks);
        assert_eq!(parse_chain_jsonl(&text).unwrap(), blocks);
        assert!(verify_chain_jsonl(&text));
        let spaced = text.replacen("{\"height\":", "{ \"height\":", 1);
        assert!(parse_chain_jsonl(&spaced).is_err());
        let upper = text.replacen(&blocks[1].block_hash.to_hex(), &blocks[1].block_hash.to_hex().to_uppercase(), 1);
        assert!(!verify_chain_jsonl(&upper));
    }
}
