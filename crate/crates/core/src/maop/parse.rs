//! Parsers for the strategist's numbered-list answers.

use crate::text::fenced_block;

/// Case-folded, whitespace-collapsed aspect title used for deduplication.
pub fn normalize_title(title: &str) -> String {
    title
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// `N. Title: guidance` (or `N)`), with optional markdown emphasis around the title.
fn numbered_pair(line: &str) -> Option<(String, String)> {
    let line = line.trim();
    let digits = line.len() - line.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 {
        return None;
    }
    let rest = line[digits..].strip_prefix(['.', ')'])?;
    let (title, guidance) = rest.split_once(':')?;
    let title = title.trim().trim_matches('*').trim();
    let guidance = guidance.trim().trim_start_matches('*').trim();
    (!title.is_empty() && !guidance.is_empty()).then(|| (title.to_string(), guidance.to_string()))
}

fn body<'a>(text: &'a str, lang: &str) -> &'a str {
    fenced_block(text, lang)
        .map(|(_, body)| body)
        .unwrap_or(text)
}

/// Aspect/guidance pairs from a strategist decomposition answer.
pub fn parse_aspects(text: &str) -> Vec<(String, String)> {
    body(text, "aspects")
        .lines()
        .filter_map(numbered_pair)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutedAspect {
    pub aspect: String,
    pub guidance: String,
    /// 1-based numbers of the candidate aspects cited.
    pub sources: Vec<usize>,
}

/// Blueprint lines, each optionally ending in `[from: 1, 3]`.
pub fn parse_blueprint(text: &str) -> Vec<RoutedAspect> {
    body(text, "blueprint")
        .lines()
        .filter_map(|line| {
            let (aspect, guidance) = numbered_pair(line)?;
            let lower = guidance.to_lowercase();
            let (guidance, sources) = match lower.rfind("[from:") {
                Some(at) => {
                    let cited = &guidance[at + "[from:".len()..];
                    let cited = cited.split(']').next().unwrap_or("");
                    let sources = cited
                        .split(',')
                        .filter_map(|n| n.trim().parse().ok())
                        .collect();
                    (guidance[..at].trim().to_string(), sources)
                }
                None => (guidance, Vec::new()),
            };
            (!guidance.is_empty()).then_some(RoutedAspect {
                aspect,
                guidance,
                sources,
            })
        })
        .collect()
}
