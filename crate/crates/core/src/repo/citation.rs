//! Canonical one-line citation, in the style EPrints prints on abstract pages.
//!
//! Journal article: `First, Given et al.(2009). Title. Journal, 65(7): 1450-1454.`
//! Book chapter:    `First, Given (2009). Title. In: Book, chapter 3: 10-20.`

use super::model::{EprintMetadata, VenueKind};

pub fn render(metadata: &EprintMetadata) -> String {
    let mut out = String::new();

    match metadata.creators.as_slice() {
        [] => {}
        [only] => out.push_str(&format!("{} ({}). ", only.trim(), metadata.year)),
        [first, ..] => out.push_str(&format!("{} et al.({}). ", first.trim(), metadata.year)),
    }

    let title = metadata.title.trim();
    out.push_str(title);
    if !title.ends_with(['.', '?', '!']) {
        out.push('.');
    }
    out.push(' ');

    let venue = &metadata.venue;
    let container = venue.container_title.trim();
    match venue.kind {
        VenueKind::JournalArticle => {
            out.push_str(container);
            match (nonblank(&venue.volume), nonblank(&venue.issue)) {
                (Some(v), Some(i)) => out.push_str(&format!(", {v}({i})")),
                (Some(v), None) => out.push_str(&format!(", {v}")),
                (None, Some(i)) => out.push_str(&format!(", ({i})")),
                (None, None) => {}
            }
        }
        VenueKind::BookChapter => {
            out.push_str("In: ");
            out.push_str(container);
            if let Some(chapter) = nonblank(&venue.chapter) {
                out.push_str(&format!(", chapter {chapter}"));
            }
        }
    }
    if let Some(pages) = nonblank(&venue.pages) {
        out.push_str(&format!(": {pages}"));
    }
    out.push('.');
    out
}

fn nonblank(value: &Option<String>) -> Option<&str> {
    value.as_deref().map(str::trim).filter(|s| !s.is_empty())
}
