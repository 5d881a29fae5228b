use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::execute::ResultSet;
use crate::diagnostics::{Diagnostic, Diagnostics};
use crate::pipeline::{LlmProvider, ProviderError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChartKind {
    Bar,
    Line,
    Scatter,
    Pie,
    Table,
    /// Anything outside the closed set; kept so it can be reported.
    Unknown(String),
}

impl ChartKind {
    pub const SUPPORTED: [&'static str; 5] = ["bar", "line", "scatter", "pie", "table"];

    pub fn parse(s: &str) -> Self {
        match s.trim().to_ascii_lowercase().as_str() {
            "bar" => ChartKind::Bar,
            "line" => ChartKind::Line,
            "scatter" => ChartKind::Scatter,
            "pie" => ChartKind::Pie,
            "table" => ChartKind::Table,
            _ => ChartKind::Unknown(s.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            ChartKind::Bar => "bar",
            ChartKind::Line => "line",
            ChartKind::Scatter => "scatter",
            ChartKind::Pie => "pie",
            ChartKind::Table => "table",
            ChartKind::Unknown(s) => s,
        }
    }
}

impl fmt::Display for ChartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for ChartKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ChartKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(ChartKind::parse(&String::deserialize(d)?))
    }
}

/// Declarative chart: which result columns go on which axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub kind: ChartKind,
    pub x: String,
    /// A column name, or `AGG(column)` with AGG one of SUM, AVG, MIN, MAX, COUNT.
    pub y: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
    #[serde(default)]
    pub title: String,
}

const CHART_AGGREGATES: [&str; 5] = ["SUM", "AVG", "MIN", "MAX", "COUNT"];

/// Column named by a `y` value, unwrapping an aggregate call.
fn y_column(y: &str) -> &str {
    let t = y.trim();
    if let (Some(open), true) = (t.find('('), t.ends_with(')')) {
        if CHART_AGGREGATES.iter().any(|a| a.eq_ignore_ascii_case(t[..open].trim())) {
            return t[open + 1..t.len() - 1].trim();
        }
    }
    t
}

pub fn validate_chart(spec: &ChartSpec, result: &ResultSet) -> Diagnostics {
    let mut out = Vec::new();
    if let ChartKind::Unknown(k) = &spec.kind {
        out.push(Diagnostic::new(
            "kind",
            format!("unsupported chart kind {k:?}; expected one of {}", ChartKind::SUPPORTED.join(", ")),
        ));
    }
    let mut col = |field: &str, name: &str| {
        if result.column_index(name).is_none() {
            out.push(Diagnostic::new(field, format!("column {name:?} does not exist in the result")));
        }
    };
    col("x", &spec.x);
    col("y", y_column(&spec.y));
    if let Some(s) = &spec.series {
        col("series", s);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartAttempt {
    pub response: String,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartOutcome {
    pub spec: ChartSpec,
    pub attempts: Vec<ChartAttempt>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChartError {
    #[error("no valid chart specification after {} attempts", .attempts.len())]
    Exhausted { attempts: Vec<ChartAttempt> },
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

pub const SAMPLE_ROWS: usize = 10;
pub const SAMPLE_COLUMNS: usize = 10;

pub fn chart_prompt(question: &str, query: &str, sample: &ResultSet, feedback: Option<&Diagnostics>) -> String {
    let mut p = format!(
        "Task: Propose one chart that visualizes the query result below.\n\
- Guideline: Supported kinds are {}.\n\
- Guideline: x, y and series must name result columns; y may also be SUM(column), AVG(column), MIN(column), MAX(column) or COUNT(column).\n\
- Guideline: Answer with a single JSON object with the fields kind, x, y, series (optional) and title.\n\
- Example: {{\"kind\": \"bar\", \"x\": \"Category\", \"y\": \"Total\", \"title\": \"Total per category\"}}\n\
- Example: {{\"kind\": \"line\", \"x\": \"OrderDate\", \"y\": \"SUM(Amount)\", \"series\": \"Region\", \"title\": \"Amount over time\"}}\n\n\
Question: {question}\n\nQuery:\n{}\n\nResult sample:\n{}\n",
        ChartKind::SUPPORTED.join(", "),
        query.trim(),
        sample.to_text(),
    );
    if let Some(diags) = feedback {
        p.push_str("\nThe previous chart specification was invalid because:");
        for d in diags {
            p.push_str(&format!("\n- {}: {}", d.location, d.message));
        }
        p.push('\n');
    }
    p
}

/// Reads the first JSON object in a model response.
pub fn parse_chart_response(text: &str) -> Result<ChartSpec, Diagnostic> {
    let bad = |m: String| Diagnostic::new("response", m);
    let start = text.find('{').ok_or_else(|| bad("no JSON object found".into()))?;
    let end = text.rfind('}').filter(|e| *e > start).ok_or_else(|| bad("unterminated JSON object".into()))?;
    serde_json::from_str(&text[start..=end]).map_err(|e| bad(format!("not a chart specification: {e}")))
}

/// Prompts for a chart over a sample of at most 10 rows and 10 columns,
/// re-prompting with the violations until a spec validates.
pub fn generate_chart(
    question: &str,
    query: &str,
    result: &ResultSet,
    provider: &dyn LlmProvider,
    max_iterations: usize,
) -> Result<ChartOutcome, ChartError> {
    let sample = result.sample(SAMPLE_ROWS, SAMPLE_COLUMNS);
    let mut attempts: Vec<ChartAttempt> = Vec::new();
    for _ in 0..max_iterations.max(1) {
        let feedback = attempts.last().map(|a| &a.diagnostics);
        let response = provider.complete(&chart_prompt(question, query, &sample, feedback))?;
        let (spec, diagnostics) = match parse_chart_response(&response) {
            Ok(spec) => {
                let d = validate_chart(&spec, &sample);
                (Some(spec), d)
            }
            Err(d) => (None, vec![d]),
        };
        let ok = diagnostics.is_empty();
        attempts.push(ChartAttempt { response, diagnostics });
        if let (true, Some(spec)) = (ok, spec) {
            return Ok(ChartOutcome { spec, attempts });
        }
    }
    Err(ChartError::Exhausted { attempts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reporting::{ColumnType, PageInfo, ResultColumn};

    fn result() -> ResultSet {
        let col = |n: &str, t| ResultColumn { name: n.into(), column_type: t };
        ResultSet {
            columns: vec![col("ProductNumber", ColumnType::Text), col("TotalEarnings", ColumnType::Real)],
            rows: Vec::new(),
            page: PageInfo { offset: 0, limit: 10, total_rows: Some(0) },
        }
    }

    fn spec(kind: &str, x: &str, y: &str) -> ChartSpec {
        ChartSpec { kind: ChartKind::parse(kind), x: x.into(), y: y.into(), series: None, title: String::new() }
    }

    #[test]
    fn validation() {
        assert!(validate_chart(&spec("bar", "ProductNumber", "TotalEarnings"), &result()).is_empty());
        assert!(validate_chart(&spec("Pie", "ProductNumber", "sum(TotalEarnings)"), &result()).is_empty());
        let d = validate_chart(&spec("bar", "ProductNumber", "Total"), &result());
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("\"Total\""));
        let d = validate_chart(&spec("radar", "ProductNumber", "TotalEarnings"), &result());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].location, "kind");
    }

    #[test]
    fn serialized_field_order_is_fixed() {
        let s = ChartSpec { series: Some("s".into()), title: "t".into(), ..spec("bar", "a", "b") };
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"kind":"bar","x":"a","y":"b","series":"s","title":"t"}"#
        );
    }

    #[test]
    fn response_parsing() {
        let s = parse_chart_response("Sure:\n{\"kind\": \"bar\", \"x\": \"a\", \"y\": \"b\"}\nDone").unwrap();
        assert_eq!(s.kind, ChartKind::Bar);
        assert!(parse_chart_response("no chart").is_err());
        assert!(parse_chart_response("{\"kind\": 1}").is_err());
    }
}
