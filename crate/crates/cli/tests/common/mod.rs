#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use autobir::Config;
use autobir_core::engine::ConnectionDescriptor;
use autobir_core::fixtures;

pub const CHART_JSON: &str = r#"{"kind": "bar", "x": "ProductNumber", "y": "TotalEarnings", "title": "Earnings per product (EUR)"}"#;

/// A scratch directory holding the fixture database, its DDL, the
/// annotation file and a catalog root.
pub struct Sandbox {
    pub dir: tempfile::TempDir,
    pub db: ConnectionDescriptor,
}

impl Sandbox {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let db = fixtures::adventure_database(dir.path()).unwrap();
        std::fs::write(dir.path().join("schema.sql"), fixtures::ADVENTURE_MINI_DDL).unwrap();
        std::fs::write(dir.path().join("schema.annotations"), fixtures::ADVENTURE_MINI_ANNOTATIONS).unwrap();
        Self { dir, db }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn catalog_root(&self) -> PathBuf {
        self.path("catalog")
    }

    pub fn config(&self) -> Config {
        Config { catalog_root: self.catalog_root(), ..Config::default() }
    }

    /// Writes a scripted-provider file and a config file pointing at it.
    pub fn write_config(&self, responses: &[&str]) -> PathBuf {
        let script = self.path("script.json");
        std::fs::write(&script, serde_json::to_string(responses).unwrap()).unwrap();
        let cfg = self.path("autobir.toml");
        let text = format!(
            "catalog_root = {:?}\n\n[provider]\nscripted_path = {:?}\n",
            self.catalog_root().display().to_string(),
            script.display().to_string()
        );
        std::fs::write(&cfg, text).unwrap();
        cfg
    }

    /// Runs the binary with a clean `AUTOBIR_*` environment.
    pub fn cli(&self, config: &Path, args: &[&str]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_autobir"));
        for (k, _) in std::env::vars() {
            if k.starts_with("AUTOBIR_") {
                cmd.env_remove(k);
            }
        }
        cmd.arg("--config").arg(config).args(args).current_dir(self.dir.path()).output().unwrap()
    }

    /// `setup` of the fixture DDL bound to the fixture database.
    pub fn cli_setup(&self, config: &Path, extra: &[&str]) -> Output {
        let ddl = self.path("schema.sql");
        let ann = self.path("schema.annotations");
        let db = self.db.path().display().to_string();
        let mut args = vec![
            "setup",
            ddl.to_str().unwrap(),
            "--name",
            "sales",
            "--annotations",
            ann.to_str().unwrap(),
            "--database",
            &db,
        ];
        args.extend_from_slice(extra);
        self.cli(config, &args)
    }
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Parses the `a | b` table printed by `ask --execute` into rows of cells.
pub fn printed_table(out: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let body = out.split("Result:\n").nth(1).expect("result section");
    let mut lines = body.lines().take_while(|l| !l.is_empty() && !l.starts_with('('));
    let split = |l: &str| l.split(" | ").map(|c| c.trim().to_string()).collect::<Vec<_>>();
    let header = split(lines.next().expect("header"));
    (header, lines.map(split).collect())
}
