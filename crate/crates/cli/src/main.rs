//! `rbac`: operator surface for the on-chain RBAC engine.
//!
//! Chain state lives in the file named by `RBAC_CHAIN` (default
//! `chain.jsonl`) plus a `.meta.json` sidecar. Results go to stdout as JSON
//! and a one-line summary goes to stderr. Exit codes: 0 success, 1 domain
//! violation (including a denied access check), 2 usage error.

mod store;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rbac_chain::audit::{events_to_jsonl, AuditQuery, TxOutcome};
use rbac_chain::bench::{run_benchmark, run_repetition, Scenario};
use rbac_chain::bundle::load_bundle;
use rbac_chain::constraints::SodRule;
use rbac_chain::ledger::{parse_chain_jsonl, verify_blocks};
use rbac_chain::metrics::timelines_to_csv;
use rbac_chain::policy::PermissionPatch;
use rbac_chain::{
    AccessRequest, AccountId, AccountSpec, AdminOp, ChainConfig, ContextCondition, DelegationId, Engine, Genesis, Mode,
    Permission, RequestContext, ResourceTariff, RevocationStrength, RightTransferRequest, TxPayload,
};
use serde_json::{json, Value};

use store::Store;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain { code: String, message: String },
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn domain(code: &str, message: impl Into<String>) -> Self {
        CliError::Domain { code: code.into(), message: message.into() }
    }
}

impl From<rbac_chain::Error> for CliError {
    fn from(e: rbac_chain::Error) -> Self {
        CliError::Domain { code: e.code().into(), message: e.to_string() }
    }
}

/// A successful command's stdout document and stderr summary. `ok = false`
/// still prints the document but exits 1 (a denied check, a broken chain).
struct Output {
    doc: Value,
    summary: String,
    ok: bool,
}

impl Output {
    fn ok(doc: Value, summary: impl Into<String>) -> Self {
        Output { doc, summary: summary.into(), ok: true }
    }
}

#[derive(Parser)]
#[command(name = "rbac", version, about = "Role-based access control on a simulated DPoS ledger")]
struct Cli {
    /// Chain export path; the sidecar is `<path>.meta.json`.
    #[arg(long, global = true, env = "RBAC_CHAIN", default_value = "chain.jsonl")]
    chain: PathBuf,
    /// Account that signs the transaction (defaults to the issuer).
    #[arg(long = "as", global = true, value_name = "ACCOUNT")]
    signer: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a new chain with its genesis block.
    Init(InitArgs),
    #[command(subcommand)]
    Account(AccountCmd),
    #[command(subcommand)]
    Role(RoleCmd),
    #[command(subcommand)]
    Perm(PermCmd),
    #[command(subcommand)]
    Delegate(DelegateCmd),
    #[command(subcommand)]
    Hierarchy(HierarchyCmd),
    #[command(subcommand)]
    Constraint(ConstraintCmd),
    /// Submit an access check and print the decision.
    Check(CheckArgs),
    /// Query the audit log.
    Audit(AuditArgs),
    /// Report redundant permission rows.
    Redundancy,
    #[command(subcommand)]
    Chain(ChainCmd),
    #[command(subcommand)]
    Bench(BenchCmd),
    #[command(subcommand)]
    Bundle(BundleCmd),
    /// Print the current policy snapshot.
    Snapshot,
}

#[derive(Args)]
struct InitArgs {
    /// Comma-separated producer accounts, in schedule order.
    #[arg(long, value_delimiter = ',', default_value = "bpa")]
    producers: Vec<String>,
    #[arg(long, default_value = "issuer")]
    issuer: String,
    #[arg(long, default_value_t = 1)]
    issuer_stake: u64,
    #[arg(long, default_value_t = 1 << 20)]
    issuer_ram: u64,
    /// Roles defined at genesis.
    #[arg(long, value_delimiter = ',')]
    roles: Vec<String>,
    #[arg(long)]
    cpu_capacity: Option<u64>,
    #[arg(long)]
    net_capacity: Option<u64>,
    #[arg(long, default_value_t = 1)]
    confirmation_depth: u64,
    #[arg(long, default_value_t = 0)]
    genesis_time: u64,
    /// TOML file overriding per-kind costs.
    #[arg(long)]
    tariff: Option<PathBuf>,
    /// Overwrite an existing chain.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum AccountCmd {
    Create {
        name: String,
        /// Public key; defaults to the account name.
        #[arg(long)]
        key: Option<String>,
        #[arg(long, default_value_t = 0)]
        stake: u64,
        #[arg(long, default_value_t = 0)]
        ram: u64,
    },
    Stake {
        name: String,
        tokens: u64,
    },
    DelegateBw {
        from: String,
        to: String,
        #[arg(long, default_value_t = 0)]
        cpu: u64,
        #[arg(long, default_value_t = 0)]
        net: u64,
    },
}

#[derive(Subcommand)]
enum RoleCmd {
    Define {
        role: String,
    },
    /// Assign a role to one or more subjects, one transaction each.
    Assign {
        role: String,
        #[arg(required = true)]
        subjects: Vec<String>,
    },
    Update {
        subject: String,
        new_role: String,
        /// Role being replaced; may be left out when the subject holds one role.
        #[arg(long)]
        from: Option<String>,
    },
    Revoke {
        subject: String,
        role: String,
        /// Also drop explicit assignments of senior roles.
        #[arg(long)]
        strong: bool,
    },
}

#[derive(Subcommand)]
enum PermCmd {
    Assign {
        #[arg(long)]
        id: String,
        /// A+, A-, O+ or O-.
        #[arg(long)]
        mode: String,
        #[arg(long)]
        role: String,
        #[arg(long)]
        action: String,
        #[arg(long)]
        target: String,
        /// Context condition such as `time in-range t:09:00..t:17:00`.
        #[arg(long = "constraint")]
        constraints: Vec<String>,
        #[arg(long)]
        exception: Option<String>,
    },
    Update {
        id: String,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        role: Option<String>,
        #[arg(long)]
        action: Option<String>,
        #[arg(long)]
        target: Option<String>,
        /// Replaces all conditions; repeat for several.
        #[arg(long = "constraint")]
        constraints: Vec<String>,
        /// Remove every condition.
        #[arg(long, conflicts_with = "constraints")]
        clear_constraints: bool,
        #[arg(long)]
        exception: Option<String>,
        #[arg(long, conflicts_with = "exception")]
        clear_exception: bool,
    },
    /// Remove every permission row of a role.
    Revoke { role: String },
}

#[derive(Subcommand)]
enum DelegateCmd {
    Create {
        #[arg(long)]
        to: String,
        #[arg(long)]
        role: String,
        #[arg(long)]
        start: Option<u64>,
        #[arg(long, conflicts_with = "duration")]
        expires: Option<u64>,
        #[arg(long)]
        duration: Option<u64>,
        /// Suspend the delegator's own use while the delegation lives.
        #[arg(long)]
        transfer: bool,
        /// Allow this many further re-delegations.
        #[arg(long)]
        levels: Option<u32>,
    },
    Remove {
        id: u64,
    },
}

#[derive(Subcommand)]
enum HierarchyCmd {
    AddEdge { senior: String, junior: String },
}

#[derive(Subcommand)]
#[allow(clippy::enum_variant_names)] // variant names are the CLI verbs
enum ConstraintCmd {
    /// Add a rule from a JSON file (`{"rule_id":..,"atoms":[..]}`).
    AddSod {
        rule: PathBuf,
    },
    /// Forbid one subject from playing both roles.
    AddPair {
        role_a: String,
        role_b: String,
    },
    AddCardinality {
        max_roles_per_subject: u32,
    },
    AddImplication {
        stronger: String,
        weaker: String,
    },
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    subject: String,
    #[arg(long)]
    op: String,
    #[arg(long)]
    object: String,
    /// Typed attribute, e.g. `time=t:10:30` or `ward=s:icu`.
    #[arg(long = "ctx")]
    ctx: Vec<String>,
    /// Exception condition in force, e.g. `emergency`.
    #[arg(long = "exception")]
    exceptions: Vec<String>,
    /// Decision time in ms; defaults to the next block time.
    #[arg(long)]
    at: Option<u64>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    subject: Option<String>,
    #[arg(long)]
    from: Option<u64>,
    #[arg(long)]
    to: Option<u64>,
    #[arg(long)]
    allowed: Option<bool>,
    /// Print JSON lines instead of one array.
    #[arg(long)]
    jsonl: bool,
}

#[derive(Subcommand)]
enum ChainCmd {
    /// Check every hash link of a chain export.
    Verify {
        /// File to check; defaults to the chain file.
        file: Option<PathBuf>,
    },
    /// Write the chain as JSON lines.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mark a producer as missing (or present again with `--clear`).
    MarkMissing {
        producer: String,
        #[arg(long)]
        clear: bool,
    },
    /// Produce empty blocks to advance simulated time.
    Advance {
        #[arg(long, default_value_t = 1)]
        blocks: u32,
    },
}

#[derive(Subcommand)]
enum BenchCmd {
    Run {
        scenario: PathBuf,
        /// Also write the first repetition's timelines as CSV.
        #[arg(long)]
        timelines_csv: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BundleCmd {
    /// Apply a JSON-lines file, one transaction per line, stopping at the first failure.
    Load { path: PathBuf },
}

fn account(name: &str) -> Result<AccountId, CliError> {
    Ok(AccountId::new(name)?)
}

fn mode(s: &str) -> Result<Mode, CliError> {
    Mode::parse(s).ok_or_else(|| CliError::usage(format!("mode `{s}` is not one of A+, A-, O+, O-")))
}

fn conditions(raw: &[String]) -> Result<Vec<ContextCondition>, CliError> {
    raw.iter().map(|c| ContextCondition::parse(c).map_err(CliError::from)).collect()
}

fn signer(cli_signer: &Option<String>, engine: &Engine) -> Result<AccountId, CliError> {
    match cli_signer {
        Some(s) => account(s),
        None => Ok(engine.issuer().clone()),
    }
}

/// Signs and runs one transaction in its own block.
fn transact(engine: &mut Engine, sender: &AccountId, payload: TxPayload) -> Result<Value, CliError> {
    let at = engine.next_slot().timestamp_ms;
    let tx = engine.sign(sender, at, payload)?;
    let result = engine.execute(tx)?;
    let height = engine.ledger().tip().height;
    match result.outcome {
        TxOutcome::Applied { effect } => Ok(json!({
            "tx_id": result.tx_id,
            "kind": result.kind,
            "block_height": height,
            "audit_ref": result.audit_ref,
            "effect": effect,
        })),
        TxOutcome::Failed { code, message } => Err(CliError::Domain { code, message }),
    }
}

fn admin(engine: &mut Engine, sender: &AccountId, op: AdminOp) -> Result<Output, CliError> {
    let name = op.name();
    engine.admin(sender, op)?;
    Ok(Output::ok(json!({ "op": name, "applied": true }), format!("{name} applied")))
}

fn init(store: &Store, a: InitArgs) -> Result<Output, CliError> {
    if store.exists() && !a.force {
        return Err(CliError::usage(format!(
            "{} already exists; pass --force to overwrite",
            store.chain_path().display()
        )));
    }
    let producers = a.producers.iter().map(|p| account(p)).collect::<Result<Vec<_>, _>>()?;
    let mut config = ChainConfig::new(producers);
    config.genesis_time_ms = a.genesis_time;
    config.confirmation_depth = a.confirmation_depth;
    if let Some(c) = a.cpu_capacity {
        config.cpu_capacity_us = c;
    }
    if let Some(n) = a.net_capacity {
        config.net_capacity_bytes = n;
    }
    if let Some(path) = &a.tariff {
        config.tariff = ResourceTariff::from_toml(&store::read(path)?)?;
    }
    let issuer = account(&a.issuer)?;
    let genesis = Genesis {
        config,
        issuer: issuer.clone(),
        accounts: vec![AccountSpec::new(issuer.clone(), issuer.as_str(), a.issuer_stake, a.issuer_ram)],
        roles: a.roles,
    };
    let engine = Engine::new(genesis)?;
    store.save(&engine)?;
    let tip = engine.ledger().tip();
    Ok(Output::ok(
        json!({ "chain": store.chain_path(), "genesis_hash": tip.block_hash, "issuer": issuer }),
        format!("initialized {}", store.chain_path().display()),
    ))
}

fn run_check(engine: &mut Engine, sender: &AccountId, a: CheckArgs) -> Result<Output, CliError> {
    let mut context = RequestContext::default();
    for pair in &a.ctx {
        let (k, v) = RequestContext::parse_pair(pair)?;
        context = context.with(k, v);
    }
    for e in a.exceptions {
        context = context.with_exception(e);
    }
    let at = a.at.unwrap_or_else(|| engine.next_slot().timestamp_ms);
    let req = AccessRequest::new(&a.subject, &a.op, &a.object, at).with_context(context);
    let result = transact(engine, sender, TxPayload::CheckAccess(req))?;
    let decision = result["effect"]["decision"].clone();
    let allowed = decision["allowed"].as_bool().unwrap_or(false);
    let verdict = if allowed { "allowed" } else { "denied" };
    Ok(Output { doc: decision, summary: format!("{} {} {}: {verdict}", a.subject, a.op, a.object), ok: allowed })
}

fn tx_output(doc: Value) -> Output {
    let summary = format!("{} applied in block {}", doc["kind"].as_str().unwrap_or("tx"), doc["block_height"]);
    Output::ok(doc, summary)
}

fn run(cli: Cli) -> Result<Output, CliError> {
    let store = Store::new(cli.chain.clone());
    let command = match cli.command {
        Command::Init(a) => return init(&store, a),
        Command::Bench(BenchCmd::Run { scenario, timelines_csv }) => {
            let scenario = Scenario::from_json(&store::read(&scenario)?)?;
            let report = run_benchmark(&scenario)?;
            if let Some(path) = timelines_csv {
                let (_, peers) = run_repetition(&scenario, scenario.seed)?;
                store::write(&path, &timelines_to_csv(&peers[0]))?;
            }
            let summary = format!(
                "{} repetition(s): throughput {:.2} tx/s, BttT {:.4} s, CET {:.6} s",
                report.repetitions.len(),
                report.mean_throughput_tps,
                report.mean_bttt_s,
                report.mean_cet_s
            );
            return Ok(Output::ok(serde_json::to_value(&report).expect("report serializes"), summary));
        }
        Command::Chain(ChainCmd::Verify { file }) => {
            let path = file.unwrap_or_else(|| store.chain_path().to_path_buf());
            let text = store::read(&path)?;
            let (valid, blocks) = match parse_chain_jsonl(&text) {
                Ok(blocks) => (verify_blocks(&blocks), blocks.len()),
                Err(_) => (false, 0),
            };
            let summary = if valid { format!("{blocks} blocks verified") } else { "chain is invalid".into() };
            return Ok(Output { doc: json!({ "valid": valid, "blocks": blocks }), summary, ok: valid });
        }
        other => other,
    };

    let mut engine = store.load()?;
    let sender = signer(&cli.signer, &engine)?;
    let (result, mutated) = match command {
        Command::Account(c) => (account_cmd(&mut engine, &sender, c), true),
        Command::Role(c) => (role_cmd(&mut engine, &sender, c), true),
        Command::Perm(c) => (perm_cmd(&mut engine, &sender, c), true),
        Command::Delegate(c) => (delegate_cmd(&mut engine, &sender, c), true),
        Command::Hierarchy(HierarchyCmd::AddEdge { senior, junior }) => {
            (admin(&mut engine, &sender, AdminOp::AddHierarchyEdge { senior, junior }), true)
        }
        Command::Constraint(c) => (constraint_cmd(&mut engine, &sender, c), true),
        Command::Check(a) => (run_check(&mut engine, &sender, a), true),
        Command::Audit(a) => (Ok(audit(&engine, a)), false),
        Command::Redundancy => {
            let report = engine.policy().detect_redundancy();
            let summary =
                if report.is_empty() { "no redundancy".to_string() } else { "redundant rows found".to_string() };
            (Ok(Output::ok(serde_json::to_value(&report).expect("report serializes"), summary)), false)
        }
        Command::Snapshot => {
            let snap = serde_json::to_value(engine.snapshot()).expect("snapshot serializes");
            (Ok(Output::ok(snap, "policy snapshot")), false)
        }
        Command::Chain(c) => chain_cmd(&mut engine, &sender, c),
        Command::Bundle(BundleCmd::Load { path }) => {
            let text = store::read(&path)?;
            let r = match load_bundle(&mut engine, &text) {
                Ok(applied) => {
                    Ok(Output::ok(json!({ "applied": applied }), format!("{applied} transaction(s) applied")))
                }
                Err(f) => Err(CliError::Domain { code: f.code.clone(), message: f.to_string() }),
            };
            (r, true)
        }
        Command::Init(_) | Command::Bench(_) => unreachable!("handled before loading"),
    };
    // failed transactions are still recorded on chain, so save either way
    if mutated {
        store.save(&engine)?;
    }
    result
}

fn account_cmd(engine: &mut Engine, sender: &AccountId, c: AccountCmd) -> Result<Output, CliError> {
    let op = match c {
        AccountCmd::Create { name, key, stake, ram } => {
            let id = account(&name)?;
            let key = key.unwrap_or_else(|| name.clone());
            AdminOp::CreateAccount { spec: AccountSpec::new(id, key, stake, ram) }
        }
        AccountCmd::Stake { name, tokens } => AdminOp::Stake { account: account(&name)?, tokens },
        AccountCmd::DelegateBw { from, to, cpu, net } => {
            AdminOp::DelegateBandwidth { from: account(&from)?, to: account(&to)?, cpu_us: cpu, net_bytes: net }
        }
    };
    admin(engine, sender, op)
}

fn role_cmd(engine: &mut Engine, sender: &AccountId, c: RoleCmd) -> Result<Output, CliError> {
    match c {
        RoleCmd::Define { role } => admin(engine, sender, AdminOp::DefineRole { role }),
        RoleCmd::Assign { role, subjects } => {
            let mut docs = Vec::new();
            for subject in subjects {
                docs.push(transact(engine, sender, TxPayload::RoleAssign { subject, role: role.clone() })?);
            }
            let summary = format!("{role} assigned to {} subject(s)", docs.len());
            let doc = if docs.len() == 1 { docs.remove(0) } else { Value::Array(docs) };
            Ok(Output::ok(doc, summary))
        }
        RoleCmd::Update { subject, new_role, from } => {
            transact(engine, sender, TxPayload::RoleUpdate { subject, old_role: from, new_role }).map(tx_output)
        }
        RoleCmd::Revoke { subject, role, strong } => {
            let strength = if strong { RevocationStrength::Strong } else { RevocationStrength::Weak };
            transact(engine, sender, TxPayload::RoleRevoke { subject, role, strength }).map(tx_output)
        }
    }
}

fn perm_cmd(engine: &mut Engine, sender: &AccountId, c: PermCmd) -> Result<Output, CliError> {
    let payload = match c {
        PermCmd::Assign { id, mode: m, role, action, target, constraints, exception } => {
            let mut p =
                Permission::new(&id, mode(&m)?, &role, &action, &target).with_constraints(conditions(&constraints)?);
            if let Some(e) = exception {
                p = p.with_exception(&e);
            }
            TxPayload::PermissionAssign { permission: p }
        }
        PermCmd::Update {
            id,
            mode: m,
            role,
            action,
            target,
            constraints,
            clear_constraints,
            exception,
            clear_exception,
        } => {
            let patch = PermissionPatch {
                mode: m.as_deref().map(mode).transpose()?,
                role,
                action,
                target,
                constraints: if clear_constraints {
                    Some(Vec::new())
                } else if constraints.is_empty() {
                    None
                } else {
                    Some(conditions(&constraints)?)
                },
                exception: if clear_exception { Some(None) } else { exception.map(Some) },
            };
            TxPayload::PermissionUpdate { identifier: id, patch }
        }
        PermCmd::Revoke { role } => TxPayload::PermissionRevoke { role },
    };
    transact(engine, sender, payload).map(tx_output)
}

fn delegate_cmd(engine: &mut Engine, sender: &AccountId, c: DelegateCmd) -> Result<Output, CliError> {
    let payload = match c {
        DelegateCmd::Create { to, role, start, expires, duration, transfer, levels } => {
            let mut req = RightTransferRequest::new(&to, &role);
            req.start_ms = start;
            req.expiry_ms = expires;
            req.duration_ms = duration;
            if transfer {
                req = req.transfer();
            }
            if let Some(n) = levels {
                req = req.multi_step(n);
            }
            TxPayload::RightTransfer(req)
        }
        DelegateCmd::Remove { id } => TxPayload::RemoveRightTransfer { delegation: DelegationId(id) },
    };
    transact(engine, sender, payload).map(tx_output)
}

fn constraint_cmd(engine: &mut Engine, sender: &AccountId, c: ConstraintCmd) -> Result<Output, CliError> {
    let op = match c {
        ConstraintCmd::AddSod { rule } => {
            let rule: SodRule = serde_json::from_str(&store::read(&rule)?)
                .map_err(|e| CliError::domain("ParseError", format!("ParseError: {e}")))?;
            AdminOp::AddSodRule { rule }
        }
        ConstraintCmd::AddPair { role_a, role_b } => AdminOp::AddMutualExclusion { role_a, role_b },
        ConstraintCmd::AddCardinality { max_roles_per_subject } => AdminOp::SetCardinality { max_roles_per_subject },
        ConstraintCmd::AddImplication { stronger, weaker } => AdminOp::AddImplication { stronger, weaker },
    };
    admin(engine, sender, op)
}

fn chain_cmd(engine: &mut Engine, sender: &AccountId, c: ChainCmd) -> (Result<Output, CliError>, bool) {
    match c {
        ChainCmd::Export { out } => {
            let text = rbac_chain::ledger::chain_to_jsonl(engine.blocks());
            let n = engine.blocks().len();
            let r = match out {
                Some(path) => store::write(&path, &text)
                    .map(|_| Output::ok(json!({ "blocks": n, "path": path }), format!("{n} blocks exported"))),
                None => {
                    // the export itself is the document: one JSON object per line
                    emit(&text);
                    Ok(Output { doc: Value::Null, summary: format!("{n} blocks exported"), ok: true })
                }
            };
            (r, false)
        }
        ChainCmd::MarkMissing { producer, clear } => {
            let r = account(&producer)
                .and_then(|p| admin(engine, sender, AdminOp::SetMissing { producer: p, missing: !clear }));
            (r, true)
        }
        ChainCmd::Advance { blocks } => {
            let mut last = None;
            for _ in 0..blocks {
                match engine.produce_next() {
                    Ok(r) => last = Some(r),
                    Err(e) => return (Err(e.into()), true),
                }
            }
            let tip = engine.ledger().tip();
            let doc = json!({ "height": tip.height, "timestamp_ms": tip.timestamp_ms, "last": last });
            (Ok(Output::ok(doc, format!("advanced to height {}", tip.height))), true)
        }
        ChainCmd::Verify { .. } => unreachable!("handled before loading"),
    }
}

fn audit(engine: &Engine, a: AuditArgs) -> Output {
    let q = AuditQuery { subject: a.subject, from_ms: a.from, to_ms: a.to, allowed: a.allowed };
    let events = engine.audit().query(&q);
    let summary = format!("{} event(s)", events.len());
    if a.jsonl {
        emit(&events_to_jsonl(events.iter().copied()));
        return Output { doc: Value::Null, summary, ok: true };
    }
    Output::ok(serde_json::to_value(&events).expect("events serialize"), summary)
}

/// Writes to stdout, ignoring a closed pipe (`rbac audit | head`).
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            if !out.doc.is_null() {
                emit(&format!("{}\n", serde_json::to_string_pretty(&out.doc).expect("documents serialize")));
            }
            eprintln!("{}", out.summary);
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CliError::Usage(message)) => {
            emit(&format!("{}\n", json!({ "error": { "code": "UsageError", "message": message } })));
            eprintln!("error: UsageError: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Domain { code, message }) => {
            let message = if message.contains(&code) { message } else { format!("{code}: {message}") };
            emit(&format!("{}\n", json!({ "error": { "code": code, "message": message } })));
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
