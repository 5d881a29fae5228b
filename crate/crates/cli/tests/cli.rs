mod common;

use autobir_core::fixtures;
use common::*;

#[test]
fn setup_publishes_then_versions() {
    let sb = Sandbox::new();
    let cfg = sb.write_config(&[]);
    let first = sb.cli_setup(&cfg, &[]);
    assert!(first.status.success(), "{}", stderr(&first));
    let out = stdout(&first);
    assert!(out.contains("version: 1"), "{out}");
    assert!(out.contains("classes: 8, object properties: 7"), "{out}");

    let dup = sb.cli_setup(&cfg, &[]);
    assert_eq!(dup.status.code(), Some(1));
    assert!(stderr(&dup).contains("sales"), "{}", stderr(&dup));

    let second = sb.cli_setup(&cfg, &["--new-version"]);
    assert!(second.status.success(), "{}", stderr(&second));
    assert!(stdout(&second).contains("version: 2"));
    let id = |o: &str| o.lines().find_map(|l| l.strip_prefix("id: ")).unwrap().to_string();
    assert_eq!(id(&out), id(&stdout(&second)));
}

#[test]
fn setup_from_database_file_introspects() {
    let sb = Sandbox::new();
    let cfg = sb.write_config(&[]);
    let db = sb.db.path().display().to_string();
    let o = sb.cli(&cfg, &["setup", &db, "--name", "introspected"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("classes: 8, object properties: 7"), "{}", stdout(&o));
}

#[test]
fn malformed_ddl_exits_2_with_line() {
    let sb = Sandbox::new();
    let cfg = sb.write_config(&[]);
    let bad = sb.path("bad.sql");
    std::fs::write(&bad, "CREATE TABLE A (\n  id INT,\n  PRIMARY KEY (id)\n);\nCREATE TABLE B (\n  id INT\n  x VARCHAR(10)\n);\n").unwrap();
    let o = sb.cli(&cfg, &["setup", bad.to_str().unwrap(), "--name", "bad"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("line 7"), "{err}");
}

#[test]
fn ask_prints_query_and_executes() {
    let sb = Sandbox::new();
    let cfg = sb.write_config(&[fixtures::EURO_EARNINGS_QUERY]);
    assert!(sb.cli_setup(&cfg, &[]).status.success());
    let o = sb.cli(&cfg, &["ask", "sales", fixtures::EURO_EARNINGS_QUESTION, "--execute"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains(fixtures::EURO_EARNINGS_QUERY), "{out}");
    let (header, rows) = printed_table(&out);
    assert_eq!(header, ["ProductNumber", "TotalEarnings"]);
    assert!(!rows.is_empty());
}

#[test]
fn ask_with_every_flag() {
    let sb = Sandbox::new();
    let cfg = sb.write_config(&[fixtures::EURO_EARNINGS_QUERY, "Sums line totals converted to Euro per product.", CHART_JSON]);
    assert!(sb.cli_setup(&cfg, &[]).status.success());
    let o = sb.cli(
        &cfg,
        &["ask", "sales", fixtures::EURO_EARNINGS_QUESTION, "--execute", "--explain", "compact", "--visualize", "--archive"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("Sums line totals converted to Euro per product."), "{out}");
    assert!(out.contains("\"x\": \"ProductNumber\""), "{out}");
    let id = out.lines().find_map(|l| l.strip_prefix("Test case: ")).expect("archived id").to_string();

    let replay = sb.cli(&cfg, &["replay", &id]);
    assert!(replay.status.success(), "{}", stderr(&replay));
    assert!(stdout(&replay).starts_with("PASS"));
}

#[test]
fn exhaustion_exits_3_with_trail() {
    let sb = Sandbox::new();
    let bad = "SELECT * FROM BadTableName";
    let cfg = sb.write_config(&[bad, bad, bad, bad]);
    assert!(sb.cli_setup(&cfg, &[]).status.success());
    let o = sb.cli(&cfg, &["ask", "sales", fixtures::EURO_EARNINGS_QUESTION]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("No valid query after 3 attempts."), "{out}");
    assert_eq!(out.matches("Table BadTableName does not exist").count(), 3, "{out}");
    assert!(out.contains("Attempt 3:") && !out.contains("Attempt 4:"));
}

#[test]
fn search_ranks_classes() {
    let sb = Sandbox::new();
    let cfg = sb.write_config(&[]);
    assert!(sb.cli_setup(&cfg, &[]).status.success());
    let o = sb.cli(&cfg, &["search", "sales", "currency rate", "-k", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<_> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines.iter().all(|l| l.ends_with("\tclass")), "{lines:?}");
}

#[test]
fn unknown_source_and_missing_provider_fail() {
    let sb = Sandbox::new();
    let cfg = sb.write_config(&[]);
    let o = sb.cli(&cfg, &["ask", "nope", "anything"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope"), "{}", stderr(&o));

    let bare = sb.path("bare.toml");
    std::fs::write(&bare, format!("catalog_root = {:?}\n", sb.catalog_root().display().to_string())).unwrap();
    assert!(sb.cli_setup(&bare, &[]).status.success());
    let o = sb.cli(&bare, &["ask", "sales", fixtures::EURO_EARNINGS_QUESTION]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no provider configured"), "{}", stderr(&o));
}

#[test]
fn config_rejects_unknown_keys_and_missing_parent() {
    let sb = Sandbox::new();
    let cfg = sb.path("weird.toml");
    std::fs::write(&cfg, "catalog_rot = \"x\"\n").unwrap();
    let o = sb.cli(&cfg, &["search", "s", "q"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("catalog_rot"), "{}", stderr(&o));

    std::fs::write(&cfg, "catalog_root = \"/definitely/not/here/catalog\"\n").unwrap();
    let o = sb.cli(&cfg, &["search", "s", "q"]);
    assert!(stderr(&o).contains("configuration error"), "{}", stderr(&o));
}

#[test]
fn serve_on_occupied_port_fails() {
    let sb = Sandbox::new();
    let cfg = sb.write_config(&[]);
    let held = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = held.local_addr().unwrap().to_string();
    let o = sb.cli(&cfg, &["serve", "--listen", &addr]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(&addr), "{}", stderr(&o));
}
