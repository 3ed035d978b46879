use super::{Failure, FailureKind};
use crate::formula::Verdict;

/// TRUE or FALSE after trimming whitespace, quotes and trailing periods,
/// ignoring case. Anything else is UNKNOWN.
pub fn classify_direct(response: &str) -> Verdict {
    let core = response.trim_matches(|c: char| c.is_whitespace() || matches!(c, '"' | '\'' | '`' | '.'));
    if core.eq_ignore_ascii_case("true") {
        Verdict::True
    } else if core.eq_ignore_ascii_case("false") {
        Verdict::False
    } else {
        Verdict::Unknown
    }
}

/// Extracts the formulation from a model response: the body of the first
/// fenced code block if there is one, else the whole response.
pub fn classify_sfg(response: &str) -> Result<String, Failure> {
    let body = fenced_block(response).unwrap_or(response);
    if body.trim().is_empty() {
        return Err(Failure::new(FailureKind::EmptyResponse, "empty response"));
    }
    Ok(body.trim().to_string())
}

fn fenced_block(text: &str) -> Option<&str> {
    let start = text.find("```")?;
    let after = &text[start + 3..];
    // skip the info string, e.g. ```smcdel
    let body = match after.find('\n') {
        Some(nl) => &after[nl + 1..],
        None => return Some(""),
    };
    Some(match body.find("```") {
        Some(end) => &body[..end],
        None => body,
    })
}
