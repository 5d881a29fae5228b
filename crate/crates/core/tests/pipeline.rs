use autobir_core::engine::ConnectionDescriptor;
use autobir_core::fixtures::{self, adventure_source, FixtureSource};
use autobir_core::index::{build_index, DeterministicHashEmbedder, IndexConfig, SemanticIndex};
use autobir_core::ontology::{ground, refs_for_classes, GroundedSchema};
use autobir_core::pipeline::*;

const BAD_TABLE_QUERY: &str = "SELECT FirstName, LastName, Shift
FROM BadTableName
WHERE Department = 'Quality Assurance'";

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn full_grounding(src: &FixtureSource) -> GroundedSchema {
    let ids: Vec<&str> = src.ontology.classes.keys().map(String::as_str).collect();
    ground(&refs_for_classes(&src.ontology, ids), &src.ontology, &src.bindings, &src.physical).unwrap()
}

struct Env {
    src: FixtureSource,
    index: SemanticIndex,
    embedder: DeterministicHashEmbedder,
    conn: ConnectionDescriptor,
    _dir: tempfile::TempDir,
}

fn env() -> Env {
    let src = adventure_source();
    let embedder = DeterministicHashEmbedder::default();
    let index = build_index(&src.ontology, &embedder, &IndexConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let conn = fixtures::adventure_database(dir.path()).unwrap();
    Env { src, index, embedder, conn, _dir: dir }
}

fn conversation(k: usize) -> Conversation {
    Conversation::new(SourceRef { source_id: "fixture".into(), version: 1 }, k)
}

fn ask(
    env: &Env,
    conv: &mut Conversation,
    provider: &ScriptedProvider,
    question: &str,
) -> Result<GenerationResult, GenerateError> {
    let checkers = Checkers::new(Some(env.conn.clone()));
    let config = GenerationConfig::default();
    let deps = GenerationDeps {
        source: SourceView { ontology: &env.src.ontology, bindings: &env.src.bindings, physical: &env.src.physical },
        index: &env.index,
        embedder: &env.embedder,
        provider,
        checkers: &checkers,
        config: &config,
    };
    generate_query(conv, question, deps)
}

#[test]
fn bad_table_report_matches_the_expected_text() {
    let r = check_semantics(BAD_TABLE_QUERY, &full_grounding(&adventure_source()));
    assert_eq!(
        r.to_string(),
        "Status: 'Invalid'\nChecker Type: 'Semantic'\nError message: 'Table BadTableName does not exist'"
    );
    let notes = repair_instruction(&[r]);
    assert_eq!(
        squash(&notes),
        squash(
            "Generated query may be invalid because:
- Table BadTableName does not exist.
Only generate queries with the provided tables."
        )
    );
}

#[test]
fn earnings_query_passes_all_checkers() {
    let e = env();
    let reports = Checkers::new(Some(e.conn.clone())).run(fixtures::EURO_EARNINGS_QUERY, &full_grounding(&e.src)).unwrap();
    assert_eq!(reports.len(), 3);
    assert!(reports.iter().all(CheckerReport::is_valid), "{reports:?}");
    assert!(check_syntax("SELECT Name FROM Product WHERE Name LIKE '%Helmet%'", Dialect::Sqlite).is_valid());
}

#[test]
fn syntax_errors_name_a_position() {
    let r = check_syntax("SELECT FROM WHERE", Dialect::Sqlite);
    assert_eq!(r.checker_type, CheckerType::Syntax);
    assert!(!r.is_valid());
    assert!(r.messages[0].contains("line 1, column 8"), "{}", r.messages[0]);
}

#[test]
fn semantic_violations() {
    let g = full_grounding(&adventure_source());
    let msgs = |q: &str| check_semantics(q, &g).messages;
    assert_eq!(msgs("SELECT Product.Weight FROM Product"), ["Column Weight does not exist in table Product"]);
    assert_eq!(msgs("SELECT Weight FROM Product"), ["Column Weight does not exist"]);
    assert_eq!(msgs("SELECT Product.Name FROM SalesOrderDetail"), ["Table Product is referenced but not joined"]);
    assert_eq!(
        msgs("SELECT SUM(rowguid) FROM SpecialOfferProduct"),
        ["SUM over non-numeric column rowguid of type VARCHAR"]
    );
    assert_eq!(
        msgs("SELECT p.Name FROM Product p JOIN Currency c ON c.CurrencyCode = p.ProductID"),
        ["Join condition Currency.CurrencyCode = Product.ProductID compares incompatible types VARCHAR and INT"]
    );
    // aliases, output names and quoted literals resolve
    assert!(msgs("SELECT p.Name AS n FROM Product p WHERE p.Color = \"Red\" ORDER BY n").is_empty());
    let sub: GroundedSchema = GroundedSchema { tables: vec![g.table("Product").unwrap().clone()] };
    assert_eq!(
        check_semantics("SELECT Quantity FROM ProductInventory", &sub).messages,
        ["Table ProductInventory does not exist"]
    );
}

#[test]
fn execution_checker_reports_engine_and_guard_errors() {
    let e = env();
    let r = check_execution("SELECT ProductID FROM Product JOIN ProductInventory ON 1 = 1", &e.conn, 10).unwrap();
    assert_eq!(r.checker_type, CheckerType::Execution);
    assert!(r.messages[0].contains("ambiguous column"), "{r:?}");
    let r = check_execution("DROP TABLE Product", &e.conn, 10).unwrap();
    assert_eq!(r.messages, ["statement is not read-only"]);
    let missing = ConnectionDescriptor::from_path(e._dir.path().join("none.db"));
    assert!(check_execution("SELECT 1", &missing, 10).is_err());
}

#[test]
fn short_circuit_stops_at_first_failure() {
    let e = env();
    let g = full_grounding(&e.src);
    let ch = Checkers::new(Some(e.conn.clone()));
    let types = |q: &str| ch.run(q, &g).unwrap().iter().map(|r| r.checker_type).collect::<Vec<_>>();
    assert_eq!(types("SELECT FROM WHERE"), [CheckerType::Syntax]);
    assert_eq!(types(BAD_TABLE_QUERY), [CheckerType::Syntax, CheckerType::Semantic]);
    assert_eq!(types("DROP TABLE Product"), [CheckerType::Syntax, CheckerType::Semantic, CheckerType::Execution]);
}

#[test]
fn repair_notes_bullets_and_guidelines() {
    let a = CheckerReport::invalid(CheckerType::Semantic, vec!["one".into(), "two.".into()]);
    assert_eq!(
        repair_instruction(&[a]),
        "Generated query may be invalid because:\n- one.\n- two.\nOnly generate queries with the provided tables."
    );
    let s = CheckerReport::invalid(CheckerType::Syntax, vec!["bad".into()]);
    assert!(repair_instruction(&[s]).ends_with("- bad.\nGenerate syntactically valid SQL only."));
}

#[test]
fn first_good_answer_is_accepted() {
    let e = env();
    let p = ScriptedProvider::new([format!("Query:\n{}", fixtures::EURO_EARNINGS_QUERY)]);
    let mut conv = conversation(10);
    let r = ask(&e, &mut conv, &p, fixtures::EURO_EARNINGS_QUESTION).unwrap();
    assert_eq!(r.status, GenerationStatus::Accepted);
    assert_eq!(r.attempts.len(), 1);
    assert!(r.query.unwrap().contains("SUM(SalesOrderDetail.LineTotal*CurrencyRate.AverageRate)"));
    assert_eq!(conv.len(), 2);
}

#[test]
fn repair_loop_feeds_back_the_report() {
    let e = env();
    let p = ScriptedProvider::new([BAD_TABLE_QUERY.to_string(), fixtures::EURO_EARNINGS_QUERY.to_string()]);
    let mut conv = conversation(10);
    let r = ask(&e, &mut conv, &p, fixtures::EURO_EARNINGS_QUESTION).unwrap();
    assert_eq!(r.status, GenerationStatus::Accepted);
    assert_eq!(r.attempts.len(), 2);
    let last = r.attempts[0].reports.last().unwrap();
    assert_eq!(
        (last.status, last.checker_type, last.messages.clone()),
        (Status::Invalid, CheckerType::Semantic, vec!["Table BadTableName does not exist".to_string()])
    );
    let prompts = p.prompts();
    assert!(!prompts[0].contains("Generated query may be invalid"));
    assert!(squash(&prompts[1]).ends_with(&squash(
        "Generated query may be invalid because:\n- Table BadTableName does not exist.\nOnly generate queries with the provided tables."
    )));
}

#[test]
fn garbage_exhausts_the_budget() {
    let e = env();
    let p = ScriptedProvider::new(["no idea", "SELECT FROM", "DROP TABLE Product", "unused"]);
    let mut conv = conversation(10);
    let r = ask(&e, &mut conv, &p, fixtures::EURO_EARNINGS_QUESTION).unwrap();
    assert_eq!(r.status, GenerationStatus::Exhausted);
    assert_eq!(r.attempts.len(), 3);
    assert!(r.query.is_none());
    let replies: Vec<_> = conv.history().map(|m| m.text.clone()).collect();
    assert_eq!(replies, [fixtures::EURO_EARNINGS_QUESTION, EXHAUSTED_REPLY]);
    assert_eq!(p.remaining(), 1);
}

#[test]
fn provider_failure_leaves_history_alone() {
    let e = env();
    let p = ScriptedProvider::new(Vec::<String>::new());
    let mut conv = conversation(10);
    assert!(matches!(ask(&e, &mut conv, &p, fixtures::EURO_EARNINGS_QUESTION), Err(GenerateError::Provider(_))));
    assert!(conv.is_empty());
}

#[test]
fn unmatched_question_has_no_seed() {
    let e = env();
    let p = ScriptedProvider::new(["SELECT 1"]);
    let r = ask(&e, &mut conversation(10), &p, "the of and");
    assert!(matches!(r, Err(GenerateError::Search(_))), "{r:?}");
}

#[test]
fn history_window_holds_the_last_k_messages() {
    let e = env();
    let p = ScriptedProvider::new(std::iter::repeat_n("SELECT Name FROM Product".to_string(), 9));
    let mut conv = conversation(10);
    for i in 0..8 {
        ask(&e, &mut conv, &p, &format!("list product names {i}")).unwrap();
    }
    ask(&e, &mut conv, &p, "list product names again").unwrap();
    let last = p.prompts().pop().unwrap();
    let history = last.split(HISTORY_HEADER).nth(1).unwrap().split("\n\nQuestion:").next().unwrap();
    let lines: Vec<_> = history.trim().lines().collect();
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[0], "User: list product names 3");
}

#[test]
fn prompts_are_reproducible() {
    let run = || {
        let e = env();
        let p = ScriptedProvider::new([BAD_TABLE_QUERY, "SELECT Name FROM Product", "SELECT Name FROM Product"]);
        let mut conv = conversation(10);
        ask(&e, &mut conv, &p, fixtures::EURO_EARNINGS_QUESTION).unwrap();
        ask(&e, &mut conv, &p, "what kind of helmets are in stock?").unwrap();
        p.prompts()
    };
    assert_eq!(run(), run());
}

#[test]
fn explanation_prompt_carries_style_and_context() {
    let src = adventure_source();
    let e = env();
    let p = ScriptedProvider::new(["SELECT Name FROM Product"]);
    let r = ask(&e, &mut conversation(10), &p, fixtures::EURO_EARNINGS_QUESTION).unwrap();
    for style in ExplanationStyle::ALL {
        let text = explanation_prompt(fixtures::EURO_EARNINGS_QUERY, &r.sub_ontology, &src.ontology, "q?", style);
        assert!(text.contains(&format!("Style: {}", style.as_str())));
        assert!(text.contains("Question: q?"));
        assert!(text.contains("@Class@ product {"));
        assert!(text.contains("SUM(SalesOrderDetail.LineTotal*CurrencyRate.AverageRate)"));
    }
    let table_i = "The results display the total earnings of each product, calculated by multiplying the sales line total by average currency exchange rate.";
    let p = ScriptedProvider::new([table_i]);
    let out = explain_query(fixtures::EURO_EARNINGS_QUERY, &r.sub_ontology, &src.ontology, "q", ExplanationStyle::Compact, &p)
        .unwrap();
    assert!(out.starts_with("The results display the total earnings of each product"));
    let empty = ScriptedProvider::new(Vec::<String>::new());
    assert!(explain_query("SELECT 1", &r.sub_ontology, &src.ontology, "q", ExplanationStyle::Simple, &empty).is_err());
}
