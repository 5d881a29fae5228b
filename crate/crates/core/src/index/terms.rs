/// English function words plus the request verbs that open most questions.
const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be",
    "been", "before", "being", "below", "between", "both", "but", "by", "can", "could", "did", "do", "does",
    "doing", "down", "during", "each", "few", "for", "from", "further", "get", "had", "has", "have", "having",
    "he", "her", "here", "hers", "him", "his", "how", "i", "if", "in", "into", "is", "it", "its", "just", "me",
    "more", "most", "my", "no", "nor", "not", "of", "off", "on", "once", "only", "or", "other", "our", "out",
    "over", "own", "per", "same", "she", "should", "so", "some", "such", "than", "that", "the", "their", "them",
    "then", "there", "these", "they", "this", "those", "through", "to", "too", "under", "until", "up", "us",
    "very", "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with",
    "would", "you", "your",
    // request words
    "please", "provide", "show", "give", "list", "find", "tell", "display", "return", "want", "need", "like",
    "let", "know", "see", "many", "much",
];

pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.contains(&word)
}

/// Lowercase unigrams, then bigrams of adjacent non-stopword tokens, each in
/// order of first appearance without duplicates.
pub fn extract_terms(question: &str) -> Vec<String> {
    let tokens: Vec<String> = question
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect();
    let keep = |t: &str| t.chars().count() >= 2 && !is_stopword(t);
    let mut out: Vec<String> = Vec::new();
    let mut push = |t: String| {
        if !out.contains(&t) {
            out.push(t);
        }
    };
    for t in tokens.iter().filter(|t| keep(t)) {
        push(t.clone());
    }
    for pair in tokens.windows(2) {
        if keep(&pair[0]) && keep(&pair[1]) {
            push(format!("{} {}", pair[0], pair[1]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helmets_question() {
        assert_eq!(extract_terms("what kind of helmets are in stock?"), ["kind", "helmets", "stock"]);
    }

    #[test]
    fn earnings_question() {
        let got = extract_terms("Please provide the total amount of earnings per product sold in Euro");
        assert_eq!(got, ["total", "amount", "earnings", "product", "sold", "euro", "total amount", "product sold"]);
    }

    #[test]
    fn empty_and_duplicates() {
        assert!(extract_terms("").is_empty());
        assert!(extract_terms("?!").is_empty());
        assert_eq!(extract_terms("Euro euro EURO"), ["euro", "euro euro"]);
    }
}
