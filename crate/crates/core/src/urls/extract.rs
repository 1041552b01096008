use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::ingest::MessageRecord;

/// A URL as found in a message, with its origin.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RawUrl {
    pub value: String,
    pub message_id: String,
    pub channel_id: String,
}

static URL_PATTERN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)https?://[^\s<>]+").expect("valid pattern"));

const TRAILING: &[char] = &['.', ',', ';', ':', ')', ']', '}', '"', '\''];

/// Returns every scheme-anchored URL in `text`, in order of appearance.
///
/// Only `http` and `https` are recognised. Trailing sentence punctuation and
/// closing brackets or quotes are stripped; a match left without a host is
/// discarded.
pub fn extract_urls(text: &str) -> Vec<&str> {
    URL_PATTERN
        .find_iter(text)
        .filter_map(|m| {
            let url = m.as_str().trim_end_matches(TRAILING);
            let (_, rest) = url.split_once("://")?;
            match rest.chars().next() {
                None | Some('/' | '?' | '#') => None,
                Some(_) => Some(url),
            }
        })
        .collect()
}

pub fn extract_from_message(message: &MessageRecord) -> Vec<RawUrl> {
    extract_urls(&message.text)
        .into_iter()
        .map(|value| RawUrl {
            value: value.to_owned(),
            message_id: message.message_id.clone(),
            channel_id: message.channel_id.clone(),
        })
        .collect()
}
