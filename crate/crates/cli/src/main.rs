//! `tma`: batch driver for documents, proofs, computations, archives and
//! languages, and the launcher for the HTTP service.

mod prefs;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use tma_core::document::{load_document, normalize_path, save_document, CellId, CellKind};
use tma_core::formula::parse_formula;
use tma_core::i18n::Catalogs;
use tma_core::messages;
use tma_core::presenter::{render_proof, summarize, write_back, ProofResultRecord};
use tma_core::prover::{
    compute, prove, resolve_builtins, ComputeError, NodeType, ProofTree, ProverError,
    SettingsSnapshot, Status, StrategyId, TraceStep, DEFAULT_MAX_STEPS,
};
use tma_core::session::{FormulaEntry, FormulaKey, Session, SessionError, ARCHIVE_EXTENSION};

#[derive(Parser)]
#[command(name = "tma", version, about)]
struct Cli {
    /// Language of all output (overrides TMA_LANG and the preferences file).
    #[arg(long, global = true)]
    lang: Option<String>,
    /// Directory with `<tag>.lang` catalogs and `templates/<tag>/`.
    #[arg(long, global = true, env = "TMA_LANG_DIR")]
    lang_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Html,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Elaborate every formula of a document and print it.
    Submit { doc: PathBuf },
    /// Prove a formula cell of a document.
    Prove(ProveArgs),
    /// Evaluate an expression by rewriting and built-in computation.
    Compute {
        expr: String,
        /// Knowledge: a document, `path#serial`, or an archive.
        #[arg(long = "kb")]
        kb: Vec<String>,
        /// Built-in groups or members, comma separated.
        #[arg(long, value_delimiter = ',')]
        builtins: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        /// Print every step before the result.
        #[arg(long)]
        trace: bool,
    },
    /// Save or load knowledge archives.
    #[command(subcommand)]
    Archive(ArchiveCommand),
    /// List, choose and check languages.
    #[command(subcommand)]
    Lang(LangCommand),
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "TMA_ADDR", default_value = tma_service::DEFAULT_ADDR)]
        addr: std::net::SocketAddr,
    },
}

#[derive(Args)]
struct ProveArgs {
    doc: PathBuf,
    /// `path#serial`, or just the serial of a cell in DOC.
    goal: String,
    /// Knowledge: a document, `path#serial`, or an archive. Defaults to
    /// every other formula of DOC.
    #[arg(long = "kb")]
    kb: Vec<String>,
    /// `apply-first` or `branch-alternatives`
    #[arg(long)]
    strategy: Option<String>,
    /// Deactivate a rule; repeatable
    #[arg(long = "disable-rule")]
    disable_rule: Vec<String>,
    /// `rule=n` with n in 1..100.
    #[arg(long)]
    priority: Vec<String>,
    /// Fuse a rule's steps into the surrounding text; repeatable
    #[arg(long = "no-explain")]
    no_explain: Vec<String>,
    /// Built-in groups or members, comma separated.
    #[arg(long, value_delimiter = ',')]
    builtins: Vec<String>,
    /// Seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    max_nodes: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Store the result record after the goal cell in DOC.
    #[arg(long)]
    write_back: bool,
}

#[derive(Subcommand)]
enum ArchiveCommand {
    /// Save every formula of the documents into an archive.
    Save { out: PathBuf, docs: Vec<PathBuf> },
    /// Load an archive and print its formulas.
    Load { archive: PathBuf },
}

#[derive(Subcommand)]
enum LangCommand {
    /// Languages with a catalog.
    List,
    /// Make a language the default.
    Set { tag: String },
    /// Keys a catalog does not translate.
    Missing { tag: String },
}

/// Exit status 2 with a message already localized.
struct Failure(String);

struct Ctx {
    catalogs: Catalogs,
    lang: String,
    format: Format,
}

impl Ctx {
    fn tr(&self, key: &str, args: &[(&str, &str)]) -> String {
        self.catalogs.tr(key, &self.lang, args)
    }

    fn warn(&self, message: &str) {
        eprintln!("{}", self.tr("cli.warning", &[("message", message)]));
    }

    fn session_err(&self, e: SessionError) -> Failure {
        Failure(messages::session_error(&self.catalogs, &self.lang, &e))
    }

    fn prover_err(&self, e: ProverError) -> Failure {
        Failure(messages::prover_error(&self.catalogs, &self.lang, &e))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let catalogs = Catalogs::load(cli.lang_dir.as_deref());
    let (lang, lang_problem) = prefs::resolve_language(cli.lang.as_deref(), &catalogs);
    let ctx = Ctx {
        catalogs,
        lang,
        format: cli.format,
    };
    for w in ctx.catalogs.warnings() {
        ctx.warn(&messages::catalog_warning(&ctx.catalogs, &ctx.lang, w));
    }
    if let Some(tag) = lang_problem {
        let message = ctx.tr("error.unknown_language", &[("lang", &tag)]);
        if cli.lang.is_some() {
            eprintln!("{}", ctx.tr("cli.error", &[("message", &message)]));
            return ExitCode::from(2);
        }
        ctx.warn(&message);
    }
    let result = match cli.command {
        Command::Submit { doc } => cmd_submit(&ctx, &doc),
        Command::Prove(args) => cmd_prove(&ctx, args),
        Command::Compute {
            expr,
            kb,
            builtins,
            max_steps,
            trace,
        } => cmd_compute(&ctx, &expr, &kb, &builtins, max_steps, trace),
        Command::Archive(a) => cmd_archive(&ctx, a),
        Command::Lang(l) => cmd_lang(&ctx, l),
        Command::Serve { addr } => cmd_serve(&ctx, addr, cli.lang_dir),
    };
    match result {
        Ok(code) => code,
        Err(Failure(message)) => {
            eprintln!("{}", ctx.tr("cli.error", &[("message", &message)]));
            ExitCode::from(2)
        }
    }
}

/// Opens a document if needed and submits its formula cells. Only
/// `required` failing is an error; other broken cells are reported and
/// skipped.
fn submit_all(
    ctx: &Ctx,
    session: &mut Session,
    doc: &Path,
    required: Option<CellId>,
) -> Result<Vec<FormulaEntry>, Failure> {
    if session.document(doc).is_err() {
        let d = load_document(doc)
            .map_err(|e| Failure(messages::document_error(&ctx.catalogs, &ctx.lang, &e)))?;
        session.open_document(d);
    }
    let ids: Vec<CellId> = session
        .document(doc)
        .map_err(|e| ctx.session_err(e))?
        .cells()
        .into_iter()
        .filter(|c| matches!(c.kind, CellKind::Formula { .. }))
        .map(|c| c.id)
        .collect();
    let mut out = Vec::new();
    for id in ids {
        match session.submit_cell(doc, id) {
            Ok((entry, warnings)) => {
                for w in &warnings {
                    ctx.warn(&messages::warning(&ctx.catalogs, &ctx.lang, w));
                }
                out.push(entry);
            }
            Err(e) if Some(id) == required => return Err(ctx.session_err(e)),
            Err(e) => ctx.warn(&messages::session_error(&ctx.catalogs, &ctx.lang, &e)),
        }
    }
    Ok(out)
}

/// Resolves `--kb` arguments into session keys.
fn knowledge_refs(
    ctx: &Ctx,
    session: &mut Session,
    refs: &[String],
) -> Result<BTreeSet<FormulaKey>, Failure> {
    let mut keys = BTreeSet::new();
    for r in refs {
        let path = Path::new(r);
        if path.extension().is_some_and(|e| e == ARCHIVE_EXTENSION) {
            let loaded = session.load_archive(path).map_err(|e| ctx.session_err(e))?;
            keys.extend(loaded.into_iter().map(|e| e.key));
        } else if r.contains('#') {
            let key: FormulaKey = r
                .parse()
                .map_err(|_| Failure(ctx.tr("error.bad_goal_ref", &[("value", r)])))?;
            submit_all(ctx, session, &key.doc_path, Some(key.cell_id))?;
            session
                .entries_for([&key])
                .map_err(|e| ctx.session_err(e))?;
            keys.insert(key);
        } else {
            let entries = submit_all(ctx, session, path, None)?;
            keys.extend(entries.into_iter().map(|e| e.key));
        }
    }
    Ok(keys)
}

fn goal_key(ctx: &Ctx, doc: &Path, goal: &str) -> Result<FormulaKey, Failure> {
    let bad = || Failure(ctx.tr("error.bad_goal_ref", &[("value", goal)]));
    if goal.contains('#') && !goal.starts_with('#') {
        return goal.parse().map_err(|_| bad());
    }
    let serial: u64 = goal.trim_start_matches('#').parse().map_err(|_| bad())?;
    Ok(FormulaKey::new(doc, CellId(serial)))
}

fn print_entries(ctx: &Ctx, entries: &[FormulaEntry]) {
    if ctx.format == Format::Json {
        let list: Vec<_> = entries
            .iter()
            .map(|e| json!({ "entry": e, "formula": e.formula.to_string() }))
            .collect();
        println!(
            "{}",
            serde_json::to_string_pretty(&list).expect("serializable")
        );
        return;
    }
    if entries.is_empty() {
        println!("{}", ctx.tr("cli.submit.empty", &[]));
    }
    for e in entries {
        let key = e.key.to_string();
        let formula = e.formula.to_string();
        println!(
            "{}",
            ctx.tr(
                "cli.submit.entry",
                &[("label", &e.label), ("key", &key), ("formula", &formula)]
            )
        );
    }
}

fn cmd_submit(ctx: &Ctx, doc: &Path) -> Result<ExitCode, Failure> {
    let mut session = Session::new();
    let d = load_document(doc)
        .map_err(|e| Failure(messages::document_error(&ctx.catalogs, &ctx.lang, &e)))?;
    session.open_document(d);
    let results = session
        .submit_document(doc)
        .map_err(|e| ctx.session_err(e))?;
    for (_, warnings) in &results {
        for w in warnings {
            ctx.warn(&messages::warning(&ctx.catalogs, &ctx.lang, w));
        }
    }
    let entries: Vec<FormulaEntry> = results.into_iter().map(|(e, _)| e).collect();
    print_entries(ctx, &entries);
    Ok(ExitCode::SUCCESS)
}

fn snapshot_for(
    ctx: &Ctx,
    args: &ProveArgs,
    goal: FormulaKey,
    knowledge: BTreeSet<FormulaKey>,
) -> Result<SettingsSnapshot, Failure> {
    let mut snap = SettingsSnapshot::new(goal);
    snap.knowledge = knowledge;
    snap.language = ctx.lang.clone();
    snap.builtins = args.builtins.iter().cloned().collect();
    if let Some(s) = &args.strategy {
        snap.strategy = s.parse::<StrategyId>().map_err(|e| ctx.prover_err(e))?;
    }
    let rule = |id: &str, snap: &mut SettingsSnapshot| {
        snap.rule_states
            .get_mut(id)
            .map(|_| ())
            .ok_or_else(|| ctx.prover_err(ProverError::UnknownRule(id.into())))
    };
    for id in &args.disable_rule {
        rule(id, &mut snap)?;
        snap.rule_states.get_mut(id).unwrap().active = false;
    }
    for id in &args.no_explain {
        rule(id, &mut snap)?;
        snap.rule_states.get_mut(id).unwrap().explain = false;
    }
    for p in &args.priority {
        let bad = || Failure(ctx.tr("error.bad_priority", &[("value", p)]));
        let (id, n) = p.split_once('=').ok_or_else(bad)?;
        let n: u32 = n.trim().parse().map_err(|_| bad())?;
        rule(id.trim(), &mut snap)?;
        snap.rule_states.get_mut(id.trim()).unwrap().priority = n;
    }
    if let Some(t) = args.timeout {
        snap.limits.timeout = t;
    }
    if let Some(n) = args.max_nodes {
        snap.limits.max_nodes = n;
    }
    if let Some(d) = args.max_depth {
        snap.limits.max_depth = d;
    }
    snap.validate().map_err(|e| ctx.prover_err(e))?;
    Ok(snap)
}

fn tree_dump(ctx: &Ctx, tree: &ProofTree) -> String {
    let mut out = ctx.tr("cli.tree.heading", &[]);
    out.push('\n');
    let mut stack = vec![(0usize, 0usize)];
    while let Some((id, depth)) = stack.pop() {
        let Some(node) = tree.node(id) else { continue };
        let ty = match node.node_type {
            NodeType::Initial => "node.initial",
            NodeType::Situation => "node.situation",
            NodeType::And => "node.and",
            NodeType::Or => "node.or",
            NodeType::Terminal => "node.terminal",
        };
        let status = match node.status {
            Status::Pending => "status.pending",
            Status::Proved => "status.proved",
            Status::Failed => "status.failed",
            Status::Pruned => "status.pruned",
        };
        let line = ctx.tr(
            "cli.tree.node",
            &[
                ("indent", &"  ".repeat(depth)),
                ("id", &id.to_string()),
                ("type", &ctx.tr(ty, &[])),
                (
                    "rule",
                    &node
                        .rule_id
                        .as_ref()
                        .map(|r| format!(" {r}"))
                        .unwrap_or_default(),
                ),
                ("status", &ctx.tr(status, &[])),
            ],
        );
        let _ = writeln!(out, "{line}");
        for &c in node.children.iter().rev() {
            stack.push((c, depth + 1));
        }
    }
    out
}

fn cmd_prove(ctx: &Ctx, args: ProveArgs) -> Result<ExitCode, Failure> {
    let mut session = Session::new();
    let goal = goal_key(ctx, &args.doc, &args.goal)?;
    let same_doc = normalize_path(&args.doc) == goal.doc_path;
    submit_all(
        ctx,
        &mut session,
        &args.doc,
        same_doc.then_some(goal.cell_id),
    )?;
    if !same_doc {
        submit_all(ctx, &mut session, &goal.doc_path, Some(goal.cell_id))?;
    }
    let knowledge = if args.kb.is_empty() {
        session
            .all_formulae()
            .into_iter()
            .filter(|e| e.key.doc_path == goal.doc_path && e.key != goal)
            .map(|e| e.key.clone())
            .collect()
    } else {
        knowledge_refs(ctx, &mut session, &args.kb)?
    };
    let snap = snapshot_for(ctx, &args, goal.clone(), knowledge)?;
    let goal_entry = session
        .entries_for([&goal])
        .map_err(|e| ctx.session_err(e))?
        .remove(0);
    let kb = session
        .entries_for(&snap.knowledge)
        .map_err(|e| ctx.session_err(e))?;
    let tree = prove(&goal_entry, &kb, &snap, &mut |_| {}, None).map_err(|e| ctx.prover_err(e))?;
    let rendered = render_proof(&tree, &ctx.catalogs, &ctx.lang);
    let proved = tree.proved();

    if args.write_back {
        let record = ProofResultRecord {
            proof_id: format!("cli-{}", now()),
            success: proved,
            snapshot: snap.clone(),
            timestamp: now(),
            summary: summarize(&tree, &snap, &ctx.catalogs),
        };
        let doc = session
            .document_mut(&goal.doc_path)
            .map_err(|e| ctx.session_err(e))?;
        write_back(doc, goal.cell_id, record)
            .map_err(|e| Failure(messages::document_error(&ctx.catalogs, &ctx.lang, &e)))?;
        save_document(doc, &goal.doc_path)
            .map_err(|e| Failure(messages::document_error(&ctx.catalogs, &ctx.lang, &e)))?;
        let path = goal.doc_path.display().to_string();
        eprintln!("{}", ctx.tr("cli.written_back", &[("path", &path)]));
    }

    match ctx.format {
        Format::Json => {
            let out = json!({
                "success": proved,
                "snapshot": snap,
                "tree": tree,
                "document": rendered.document,
                "navigation": rendered.navigation,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&out).expect("serializable")
            );
        }
        Format::Html => print!("{}", rendered.document.to_html()),
        Format::Text => {
            print!("{}", rendered.document.to_text());
            println!();
            print!("{}", tree_dump(ctx, &tree));
            println!();
            let key = if proved {
                "cli.result.proved"
            } else {
                "cli.result.failed"
            };
            println!("{}", ctx.tr(key, &[]));
        }
    }
    Ok(if proved {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn cmd_compute(
    ctx: &Ctx,
    expr: &str,
    kb: &[String],
    builtins: &[String],
    max_steps: usize,
    trace: bool,
) -> Result<ExitCode, Failure> {
    let f = parse_formula(expr)
        .map_err(|e| Failure(messages::parse_error(&ctx.catalogs, &ctx.lang, &e)))?;
    let mut session = Session::new();
    let keys = knowledge_refs(ctx, &mut session, kb)?;
    let knowledge = session.entries_for(&keys).map_err(|e| ctx.session_err(e))?;
    let active = resolve_builtins(builtins).map_err(|e| ctx.prover_err(e))?;
    let out = match compute(&f, &knowledge, &active, max_steps) {
        Ok(r) => r,
        Err(e) => {
            let ComputeError::StepLimitExceeded { partial, .. } = &e;
            if trace {
                print_trace(ctx, &partial.trace);
            }
            return Err(Failure(messages::compute_error(
                &ctx.catalogs,
                &ctx.lang,
                &e,
            )));
        }
    };
    match ctx.format {
        Format::Json => {
            let v =
                json!({ "result": out.result.to_string(), "ast": out.result, "trace": out.trace });
            println!(
                "{}",
                serde_json::to_string_pretty(&v).expect("serializable")
            );
        }
        _ => {
            if trace {
                print_trace(ctx, &out.trace);
            }
            println!("{}", out.result);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_trace(ctx: &Ctx, trace: &[TraceStep]) {
    for (i, step) in trace.iter().enumerate() {
        let text = match step {
            TraceStep::Rewrite { label, result, .. } => format!("{result} ({label})"),
            TraceStep::Builtin { result, notes } => {
                for n in notes {
                    ctx.warn(&messages::simplify_note(&ctx.catalogs, &ctx.lang, n));
                }
                format!("{result} ({})", ctx.tr("cli.compute.builtin", &[]))
            }
        };
        println!(
            "{}",
            ctx.tr(
                "cli.compute.trace",
                &[("n", &(i + 1).to_string()), ("step", &text)]
            )
        );
    }
}

fn cmd_archive(ctx: &Ctx, cmd: ArchiveCommand) -> Result<ExitCode, Failure> {
    let mut session = Session::new();
    match cmd {
        ArchiveCommand::Save { out, docs } => {
            let mut keys = BTreeSet::new();
            for d in &docs {
                keys.extend(
                    submit_all(ctx, &mut session, d, None)?
                        .into_iter()
                        .map(|e| e.key),
                );
            }
            session
                .save_archive(&keys, &out)
                .map_err(|e| ctx.session_err(e))?;
            let (count, path) = (keys.len().to_string(), out.display().to_string());
            println!(
                "{}",
                ctx.tr("cli.archive.saved", &[("count", &count), ("path", &path)])
            );
        }
        ArchiveCommand::Load { archive } => {
            let entries = session
                .load_archive(&archive)
                .map_err(|e| ctx.session_err(e))?;
            print_entries(ctx, &entries);
            if ctx.format != Format::Json {
                let (count, path) = (entries.len().to_string(), archive.display().to_string());
                println!(
                    "{}",
                    ctx.tr("cli.archive.loaded", &[("count", &count), ("path", &path)])
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_lang(ctx: &Ctx, cmd: LangCommand) -> Result<ExitCode, Failure> {
    match cmd {
        LangCommand::List => {
            let langs = ctx.catalogs.available_languages();
            if ctx.format == Format::Json {
                println!("{}", json!({ "languages": langs, "current": ctx.lang }));
            } else {
                for l in langs {
                    println!("{l}");
                }
            }
        }
        LangCommand::Set { tag } => {
            if !ctx.catalogs.has_language(&tag) {
                return Err(Failure(ctx.tr("error.unknown_language", &[("lang", &tag)])));
            }
            let path = prefs::preferences_path();
            prefs::store_language(&path, &tag).map_err(|e| {
                Failure(ctx.tr(
                    "error.io",
                    &[
                        ("path", &path.display().to_string()),
                        ("reason", &e.to_string()),
                    ],
                ))
            })?;
            println!(
                "{}",
                ctx.catalogs.tr("cli.lang.set", &tag, &[("lang", &tag)])
            );
        }
        LangCommand::Missing { tag } => {
            let missing = ctx
                .catalogs
                .missing_keys(&tag)
                .map_err(|_| Failure(ctx.tr("error.unknown_language", &[("lang", &tag)])))?;
            for k in missing {
                println!("{k}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_serve(
    ctx: &Ctx,
    addr: std::net::SocketAddr,
    lang_dir: Option<PathBuf>,
) -> Result<ExitCode, Failure> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let config = tma_service::ServiceConfig {
        addr,
        lang_dir,
        language: ctx.lang.clone(),
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| {
        Failure(ctx.tr(
            "error.io",
            &[("path", &addr.to_string()), ("reason", &e.to_string())],
        ))
    })?;
    runtime
        .block_on(tma_service::serve(config, |bound| {
            eprintln!(
                "{}",
                ctx.tr("cli.serve.listening", &[("addr", &bound.to_string())])
            );
        }))
        .map_err(|e| {
            Failure(ctx.tr(
                "error.io",
                &[("path", &addr.to_string()), ("reason", &e.to_string())],
            ))
        })?;
    Ok(ExitCode::SUCCESS)
}
