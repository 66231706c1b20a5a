//! Article-level segmentation of the GDPR plain text.
//!
//! Recognised heading lines (whole line, surrounding whitespace ignored):
//! `CHAPTER <roman>`, `Section <n>`, `Article <n>`. Before the first chapter,
//! numbered recitals `(<n>) ...` are split one per segment, in sequence.

use super::{Hierarchy, Law, LawSegment, SegmentKind};
use crate::error::{Error, Result};

enum Heading<'a> {
    Chapter(&'a str),
    Section(&'a str),
    Article(&'a str),
}

fn heading(line: &str) -> Option<Heading<'_>> {
    let line = line.trim();
    let (word, rest) = line.split_once(char::is_whitespace)?;
    let rest = rest.trim();
    match word {
        "CHAPTER" if !rest.is_empty() && rest.chars().all(|c| "IVXLCDM".contains(c)) => {
            Some(Heading::Chapter(rest))
        }
        "Section" if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) => Some(Heading::Section(rest)),
        "Article" if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) => Some(Heading::Article(rest)),
        _ => None,
    }
}

/// `(n) text` at the start of a line; returns `n` and the byte offset of `text`.
fn recital_number(line: &str) -> Option<(usize, usize)> {
    let lead = line.len() - line.trim_start().len();
    let rest = &line[lead..];
    let inner = rest.strip_prefix('(')?;
    let close = inner.find(')')?;
    let n: usize = inner[..close].parse().ok()?;
    let after = &inner[close + 1..];
    let skip = after.len() - after.trim_start().len();
    Some((n, lead + 1 + close + 1 + skip))
}

struct Open {
    kind: SegmentKind,
    id: String,
    hierarchy: Hierarchy,
    start: usize,
}

pub fn parse_gdpr(text: &str) -> Result<Vec<LawSegment>> {
    let mut out: Vec<LawSegment> = Vec::new();
    let mut chapter: Option<String> = None;
    let mut section: Option<String> = None;
    let mut open: Option<Open> = None;
    let mut next_recital = 1usize;
    let mut in_preamble = true;
    let mut seen_articles = std::collections::BTreeSet::new();

    let close = |open: &mut Option<Open>, end: usize, out: &mut Vec<LawSegment>| {
        if let Some(o) = open.take() {
            let raw = &text[o.start..end];
            let body = raw.trim();
            if !body.is_empty() {
                let s = o.start + (raw.len() - raw.trim_start().len());
                out.push(LawSegment {
                    law: Law::Gdpr,
                    article_id: o.id,
                    kind: o.kind,
                    text: body.to_string(),
                    hierarchy: o.hierarchy,
                    char_span: (s, s + body.len()),
                });
            }
        }
    };

    let mut offset = 0usize;
    for (lineno, line) in text.split_inclusive('\n').enumerate() {
        let start = offset;
        offset += line.len();
        match heading(line) {
            Some(Heading::Chapter(c)) => {
                close(&mut open, start, &mut out);
                in_preamble = false;
                chapter = Some(c.to_string());
                section = None;
            }
            Some(Heading::Section(s)) => {
                close(&mut open, start, &mut out);
                section = Some(s.to_string());
            }
            Some(Heading::Article(a)) => {
                close(&mut open, start, &mut out);
                in_preamble = false;
                if !seen_articles.insert(a.to_string()) {
                    return Err(Error::LawText {
                        line: lineno + 1,
                        message: format!("duplicate heading `Article {a}`"),
                    });
                }
                open = Some(Open {
                    kind: SegmentKind::Article,
                    id: format!("Art.{a}"),
                    hierarchy: Hierarchy {
                        chapter: chapter.clone(),
                        section: section.clone(),
                        article: Some(a.to_string()),
                    },
                    start: offset,
                });
            }
            None if in_preamble => {
                if line.trim_start().starts_with("HAVE ADOPTED") {
                    close(&mut open, start, &mut out);
                    continue;
                }
                if let Some((n, body_at)) = recital_number(line) {
                    if n == next_recital {
                        close(&mut open, start, &mut out);
                        next_recital += 1;
                        open = Some(Open {
                            kind: SegmentKind::Recital,
                            id: format!("Recital.{n}"),
                            hierarchy: Hierarchy::default(),
                            start: start + body_at,
                        });
                    }
                }
            }
            None => {}
        }
    }
    close(&mut open, text.len(), &mut out);

    if seen_articles.is_empty() {
        return Err(Error::NoArticles);
    }
    Ok(out)
}
