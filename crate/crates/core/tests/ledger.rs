mod common;

use common::acct;
use proptest::prelude::*;
use rbac_chain::ledger::{chain_to_jsonl, verify_chain_jsonl, Cost, ProducerSchedule, ResourceTariff};
use rbac_chain::{AccessRequest, AccountSpec, ChainConfig, Engine, Genesis, Ledger, Transaction, TxKind, TxPayload};

fn funded(producers: &[&str]) -> Genesis {
    let mut config = ChainConfig::new(producers.iter().map(|p| acct(p)).collect());
    config.cpu_capacity_us = 10_000_000;
    config.net_capacity_bytes = 10_000_000;
    Genesis {
        config,
        issuer: acct("issuer"),
        accounts: vec![AccountSpec::new(acct("issuer"), "issuer", 1, 1 << 20)],
        roles: vec!["doctor".into()],
    }
}

#[test]
fn role_assign_receipt_matches_tariff() {
    let mut e = Engine::new(funded(&["bpa"])).unwrap();
    let tx =
        e.sign(&acct("issuer"), 0, TxPayload::RoleAssign { subject: "alice".into(), role: "doctor".into() }).unwrap();
    let r = e.submit(tx).unwrap();
    assert!(r.accepted);
    assert_eq!((r.cpu_charged_us, r.net_charged_bytes), (606, 168));
}

#[test]
fn two_producers_alternate_every_six_blocks() {
    let schedule = ProducerSchedule::new(vec![acct("bpa"), acct("bpb")]);
    let expected: Vec<&str> = (0..12).map(|h| if h < 6 { "bpa" } else { "bpb" }).collect();
    let got: Vec<&str> = (0..12).map(|h| schedule.producer_at(h).as_str()).collect();
    assert_eq!(got, expected);

    let mut e = Engine::new(funded(&["bpa", "bpb"])).unwrap();
    for _ in 0..11 {
        e.produce_next().unwrap();
    }
    let producers: Vec<&str> = e.blocks().iter().map(|b| b.producer.as_str()).collect();
    assert_eq!(producers, expected);
}

#[test]
fn pool_drains_fifo_into_next_block() {
    let mut e = Engine::new(funded(&["bpa"])).unwrap();
    let issuer = acct("issuer");
    let rat = e.sign(&issuer, 0, TxPayload::RoleAssign { subject: "alice".into(), role: "doctor".into() }).unwrap();
    let pat = e
        .sign(
            &issuer,
            1,
            TxPayload::PermissionAssign {
                permission: rbac_chain::Permission::new(
                    "d1",
                    rbac_chain::Mode::AuthPositive,
                    "doctor",
                    "read",
                    "chart",
                ),
            },
        )
        .unwrap();
    e.submit(rat.clone()).unwrap();
    e.submit(pat.clone()).unwrap();
    let report = e.produce_next().unwrap();
    assert_eq!(report.height, 1);
    assert_eq!(e.blocks()[1].tx_list, vec![rat, pat]);
}

#[test]
fn same_inputs_give_byte_identical_chains() {
    let run = || {
        let mut e = Engine::new(funded(&["bpa", "bpb", "bpc"])).unwrap();
        for i in 0..20u64 {
            let req = AccessRequest::new("alice", "read", "chart", i);
            let tx = e.sign(&acct("issuer"), i, TxPayload::CheckAccess(req)).unwrap();
            e.submit(tx).unwrap();
            if i % 3 == 0 {
                e.produce_next().unwrap();
            }
        }
        chain_to_jsonl(e.blocks())
    };
    assert_eq!(run(), run());
}

#[test]
fn tampering_breaks_verification() {
    let mut e = Engine::new(funded(&["bpa"])).unwrap();
    for i in 0..10u64 {
        let tx = e.sign(&acct("issuer"), i, TxPayload::CheckAccess(AccessRequest::new("bob", "read", "x", i))).unwrap();
        e.submit(tx).unwrap();
        e.produce_next().unwrap();
    }
    let text = chain_to_jsonl(e.blocks());
    assert!(verify_chain_jsonl(&text));
    let tampered = text.replacen(
        "\"operation\":\"read\",\"object\":\"x\",\"at_ms\":3",
        "\"operation\":\"read\",\"object\":\"y\",\"at_ms\":3",
        1,
    );
    assert_ne!(tampered, text);
    assert!(!verify_chain_jsonl(&tampered));

    let genesis_only = Engine::new(funded(&["bpa"])).unwrap();
    assert!(genesis_only.ledger().verify_chain());
}

#[test]
fn custom_tariff_from_toml() {
    let tariff = ResourceTariff::from_toml("[check_access]\ncpu_us = 10\nnet_bytes = 5\n").unwrap();
    assert_eq!(tariff.cost(TxKind::CheckAccess), Cost { cpu_us: 10, net_bytes: 5 });
    assert_eq!(tariff.cost(TxKind::RoleAssign), Cost { cpu_us: 606, net_bytes: 168 });
    let mut config = ChainConfig::new(vec![acct("bpa")]);
    config.tariff = tariff;
    config.cpu_capacity_us = 10;
    config.net_capacity_bytes = 5;
    let mut ledger = Ledger::new(config).unwrap();
    ledger.create_account(&AccountSpec::new(acct("svc"), "svc", 1, 0)).unwrap();
    let tx = Transaction::signed(acct("svc"), "svc", 0, TxPayload::CheckAccess(AccessRequest::new("a", "b", "c", 0)));
    assert!(ledger.submit(tx.clone()).is_ok());
    assert_eq!(ledger.submit(tx).unwrap_err().code(), "InsufficientResources");
}

proptest! {
    #[test]
    fn bandwidth_delegation_conserves_capacity(
        stakes in proptest::collection::vec(0u64..1_000, 2..6),
        moves in proptest::collection::vec((0usize..6, 0usize..6, 0u64..5_000, 0u64..5_000), 0..20),
    ) {
        let mut config = ChainConfig::new(vec![acct("bpa")]);
        config.cpu_capacity_us = 1_000_000;
        config.net_capacity_bytes = 500_000;
        let mut ledger = Ledger::new(config).unwrap();
        let names: Vec<_> = (0..stakes.len()).map(|i| acct(&format!("acct{}", i + 1))).collect();
        for (n, s) in names.iter().zip(&stakes) {
            ledger.create_account(&AccountSpec::new(n.clone(), n.as_str(), *s, 0)).unwrap();
        }
        let total = |l: &Ledger| l.accounts().fold((0u64, 0u64), |t, a| (t.0 + a.cpu_budget_us, t.1 + a.net_budget_bytes));
        let start = total(&ledger);
        for (a, b, cpu, net) in moves {
            let (a, b) = (&names[a % names.len()], &names[b % names.len()]);
            let _ = ledger.delegate_bandwidth(a, b, cpu, net);
            prop_assert_eq!(total(&ledger), start);
            prop_assert!(ledger.accounts().all(|acc| acc.delegated_out.iter().all(|d| d.to != acc.id)));
        }
    }

    #[test]
    fn block_timestamps_follow_the_schedule(n_producers in 1usize..8, blocks in 1usize..40) {
        let names = ["bpa", "bpb", "bpc", "bpd", "bpe", "bpf", "bpg", "bph"];
        let mut e = Engine::new(funded(&names[..n_producers])).unwrap();
        for _ in 0..blocks {
            e.produce_next().unwrap();
        }
        for (h, b) in e.blocks().iter().enumerate() {
            prop_assert_eq!(b.timestamp_ms, h as u64 * 500);
            prop_assert_eq!(b.producer.as_str(), names[(h / 6) % n_producers]);
        }
    }
}
