//! Command line surface.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use autobir_core::engine::ConnectionDescriptor;
use autobir_core::index::EntityKind;
use autobir_core::pipeline::{ExplanationStyle, GenerationStatus};
use autobir_core::reporting::{Page, ReplayOutcome};
use clap::{Parser, Subcommand, ValueEnum};

use crate::config::Config;
use crate::workbench::{SetupRequest, Workbench};

/// Exit status when generation ran out of attempts.
pub const EXIT_EXHAUSTED: u8 = 3;
/// Exit status when a replayed test case no longer matches.
pub const EXIT_REPLAY_FAILED: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "autobir", version, about = "Ask business questions of relational data sources")]
pub struct Cli {
    /// TOML configuration file; AUTOBIR_* variables override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Class,
    DataProperty,
    ObjectProperty,
}

impl From<KindArg> for EntityKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Class => EntityKind::Class,
            KindArg::DataProperty => EntityKind::DataProperty,
            KindArg::ObjectProperty => EntityKind::ObjectProperty,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Register a data source from a DDL file or a database file and publish it.
    Setup {
        /// DDL script or database file.
        input: PathBuf,
        #[arg(long)]
        name: String,
        #[arg(long)]
        tenant: Option<String>,
        #[arg(long)]
        collection: Option<String>,
        /// Refinement policy file.
        #[arg(long)]
        policies: Option<PathBuf>,
        /// Annotation file (`@Annotation@` lines).
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Database to query when the input is DDL.
        #[arg(long)]
        database: Option<PathBuf>,
        /// Publish another version of an existing source.
        #[arg(long)]
        new_version: bool,
    },
    /// Generate SQL for a question, optionally running and archiving it.
    Ask {
        source: String,
        question: String,
        #[arg(long)]
        tenant: Option<String>,
        #[arg(long)]
        version: Option<u32>,
        #[arg(long)]
        execute: bool,
        #[arg(long, default_value_t = 0)]
        offset: usize,
        #[arg(long, default_value_t = 20)]
        limit: usize,
        /// compact, verbose, formal, simple or precise.
        #[arg(long, value_parser = parse_style)]
        explain: Option<ExplanationStyle>,
        #[arg(long)]
        visualize: bool,
        #[arg(long)]
        archive: bool,
    },
    /// Rank ontology entities by similarity to a text.
    Search {
        source: String,
        query: String,
        #[arg(short, long, default_value_t = 5)]
        k: usize,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long)]
        tenant: Option<String>,
        #[arg(long)]
        version: Option<u32>,
    },
    /// Re-run an archived test case and compare with its snapshot.
    Replay {
        id: String,
        #[arg(long)]
        database: Option<PathBuf>,
        #[arg(long)]
        tenant: Option<String>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        listen: Option<String>,
    },
}

fn parse_style(s: &str) -> Result<ExplanationStyle, String> {
    s.parse()
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn is_database(path: &Path) -> bool {
    use std::io::Read;
    let mut head = [0u8; 16];
    std::fs::File::open(path).and_then(|mut f| f.read_exact(&mut head)).is_ok() && &head == b"SQLite format 3\0"
}

/// Runs one command, writing user-facing output to `out`. Returns the exit
/// status for outcomes that are not errors (exhaustion, failed replay).
pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<u8> {
    let config = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Serve { listen } => {
            let addr = listen.unwrap_or_else(|| config.listen_addr.clone());
            let wb = Arc::new(Workbench::open(config)?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::http::serve(wb, &addr, async {
                let _ = tokio::signal::ctrl_c().await;
            }))
            .with_context(|| format!("cannot serve on {addr}"))?;
            Ok(0)
        }
        Command::Setup { input, name, tenant, collection, policies, annotations, database, new_version } => {
            let wb = Workbench::open(config)?;
            let mut req = SetupRequest { name, tenant, collection, new_version, ..Default::default() };
            if is_database(&input) {
                req.connection = Some(ConnectionDescriptor::from_path(std::path::absolute(&input)?));
            } else {
                req.ddl = Some(read(&input)?);
                req.connection = database.map(|d| std::path::absolute(d).map(ConnectionDescriptor::from_path)).transpose()?;
            }
            req.policies = policies.as_deref().map(read).transpose()?;
            req.annotations = annotations.as_deref().map(read).transpose()?;
            let done = wb.setup(&req)?;
            for w in &done.warnings {
                tracing::warn!("{w}");
            }
            writeln!(out, "id: {}", done.id)?;
            writeln!(out, "version: {}", done.version)?;
            writeln!(out, "classes: {}, object properties: {}", done.classes, done.object_properties)?;
            Ok(0)
        }
        Command::Ask { source, question, tenant, version, execute, offset, limit, explain, visualize, archive } => {
            let wb = Workbench::open(config)?;
            let cid = wb.create_conversation(tenant.as_deref(), &source, version)?;
            let result = wb.ask(&cid, &question)?;
            writeln!(out, "Sub-ontology: {}", result.sub_ontology.classes.join(", "))?;
            if result.status == GenerationStatus::Exhausted {
                writeln!(out, "No valid query after {} attempts.", result.attempts.len())?;
                for (i, a) in result.attempts.iter().enumerate() {
                    writeln!(out, "\nAttempt {}:\n{}", i + 1, a.query)?;
                    for r in &a.reports {
                        writeln!(out, "{r}")?;
                    }
                }
                return Ok(EXIT_EXHAUSTED);
            }
            writeln!(out, "Query:\n{}", result.query.as_deref().unwrap_or_default())?;
            if let Some(style) = explain {
                writeln!(out, "\nExplanation ({style}):\n{}", wb.explain(&cid, style)?)?;
            }
            if execute {
                let rs = wb.execute(&cid, Page::new(offset, limit))?;
                writeln!(out, "\nResult:\n{}", rs.to_text())?;
                let total = rs.page.total_rows.map_or("?".to_string(), |t| t.to_string());
                writeln!(out, "({} rows from offset {} of {total})", rs.rows.len(), rs.page.offset)?;
            }
            if visualize {
                let chart = wb.visualize(&cid)?;
                writeln!(out, "\nChart:\n{}", serde_json::to_string_pretty(&chart.spec)?)?;
            }
            if archive {
                writeln!(out, "\nTest case: {}", wb.archive(&cid)?.id)?;
            }
            Ok(0)
        }
        Command::Search { source, query, k, kind, tenant, version } => {
            let wb = Workbench::open(config)?;
            for hit in wb.search(tenant.as_deref(), &source, version, &query, k, kind.map(Into::into))? {
                let kind = serde_json::to_value(hit.kind)?;
                writeln!(out, "{:.4}\t{}\t{}", hit.similarity, hit.entity_id, kind.as_str().unwrap_or_default())?;
            }
            Ok(0)
        }
        Command::Replay { id, database, tenant } => {
            let wb = Workbench::open(config)?;
            match wb.replay(tenant.as_deref(), &id, database.as_deref())? {
                ReplayOutcome::Pass => {
                    writeln!(out, "PASS {id}")?;
                    Ok(0)
                }
                ReplayOutcome::Fail { diff } => {
                    writeln!(out, "FAIL {id}")?;
                    for d in diff {
                        writeln!(out, "  {}", serde_json::to_string(&d)?)?;
                    }
                    Ok(EXIT_REPLAY_FAILED)
                }
            }
        }
    }
}

/// Exit status for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain().find_map(|e| e.downcast_ref::<crate::error::AppError>()).map_or(1, |e| e.exit_code())
}
