//! Streaming readers for newline-delimited message and channel dumps.
//!
//! Each line is one JSON object. Field names are taken from a [`FieldMapping`]
//! and may address nested objects with dotted paths (`to_id.channel_id`).
//! Lines that fail to parse, or that lack a channel id, are skipped and
//! counted; only I/O failures end a stream.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub message_id: String,
    pub channel_id: String,
    pub timestamp: Option<i64>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub channel_id: String,
    pub title: String,
    pub description: Option<String>,
    pub is_broadcast: bool,
}

/// Names of the JSON fields holding each record attribute.
///
/// The defaults follow the Pushshift Telegram export layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldMapping {
    pub message_text_field: String,
    pub message_channel_field: String,
    pub message_id_field: String,
    pub message_timestamp_field: Option<String>,
    pub channel_id_field: String,
    pub channel_title_field: String,
    pub channel_description_field: Option<String>,
    pub channel_broadcast_field: Option<String>,
}

impl Default for FieldMapping {
    fn default() -> Self {
        Self {
            message_text_field: "message".into(),
            message_channel_field: "to_id.channel_id".into(),
            message_id_field: "id".into(),
            message_timestamp_field: Some("date".into()),
            channel_id_field: "id".into(),
            channel_title_field: "title".into(),
            channel_description_field: Some("about".into()),
            channel_broadcast_field: Some("broadcast".into()),
        }
    }
}

impl FieldMapping {
    /// Returns the names of mandatory fields that are empty.
    pub fn empty_fields(&self) -> Vec<&'static str> {
        let mut bad = Vec::new();
        for (name, value) in [
            ("message_text_field", &self.message_text_field),
            ("message_channel_field", &self.message_channel_field),
            ("message_id_field", &self.message_id_field),
            ("channel_id_field", &self.channel_id_field),
            ("channel_title_field", &self.channel_title_field),
        ] {
            if value.trim().is_empty() {
                bad.push(name);
            }
        }
        bad
    }

    pub fn validate(&self) -> Result<()> {
        let bad = self.empty_fields();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::FieldMapping(format!("empty field names: {}", bad.join(", "))))
        }
    }
}

fn lookup<'v>(value: &'v Value, path: &str) -> Option<&'v Value> {
    path.split('.')
        .try_fold(value, |v, key| v.get(key))
        .filter(|v| !v.is_null())
}

/// Opaque identifiers may be stored as strings or numbers.
fn as_id(value: &Value) -> Option<String> {
    match value {
        Value::String(s) if !s.is_empty() => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn as_text(value: Option<&Value>) -> String {
    match value {
        Some(Value::String(s)) => s.clone(),
        _ => String::new(),
    }
}

fn as_timestamp(value: &Value) -> Option<i64> {
    match value {
        Value::Number(n) => n.as_i64().or_else(|| n.as_f64().map(|f| f as i64)),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn as_bool(value: &Value) -> Option<bool> {
    match value {
        Value::Bool(b) => Some(*b),
        Value::Number(n) => n.as_i64().map(|i| i != 0),
        Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
            "true" | "1" | "yes" => Some(true),
            "false" | "0" | "no" => Some(false),
            _ => None,
        },
        _ => None,
    }
}

/// Line counters for one pass over a dump.
///
/// Whitespace-only lines are not records and are not counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineCounts {
    pub lines_read: u64,
    pub records_emitted: u64,
    pub records_skipped: u64,
}

/// Reads non-blank lines from a buffered reader, reusing one buffer.
struct LineReader<R> {
    reader: R,
    buf: Vec<u8>,
    line_no: u64,
}

impl<R: BufRead> LineReader<R> {
    fn new(reader: R) -> Self {
        Self {
            reader,
            buf: Vec::with_capacity(4096),
            line_no: 0,
        }
    }

    /// `Ok(None)` at end of input. Invalid UTF-8 is reported as `Some(None)`.
    fn next_line(&mut self) -> std::io::Result<Option<Option<&str>>> {
        loop {
            self.buf.clear();
            if self.reader.read_until(b'\n', &mut self.buf)? == 0 {
                return Ok(None);
            }
            self.line_no += 1;
            if self.buf.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            return Ok(Some(std::str::from_utf8(&self.buf).ok()));
        }
    }
}

/// Streaming iterator over the message records of a dump.
pub struct MessageStream<R> {
    lines: LineReader<R>,
    mapping: FieldMapping,
    counts: LineCounts,
    failed: bool,
}

impl<R: BufRead> MessageStream<R> {
    pub fn from_reader(reader: R, mapping: FieldMapping) -> Result<Self> {
        mapping.validate()?;
        Ok(Self {
            lines: LineReader::new(reader),
            mapping,
            counts: LineCounts::default(),
            failed: false,
        })
    }

    pub fn counts(&self) -> LineCounts {
        self.counts
    }

    fn parse(&self, line: &str, line_no: u64) -> Option<MessageRecord> {
        let value: Value = serde_json::from_str(line).ok()?;
        if !value.is_object() {
            return None;
        }
        let m = &self.mapping;
        let channel_id = lookup(&value, &m.message_channel_field).and_then(as_id)?;
        let message_id = lookup(&value, &m.message_id_field)
            .and_then(as_id)
            .unwrap_or_else(|| format!("line:{line_no}"));
        let timestamp = m
            .message_timestamp_field
            .as_deref()
            .and_then(|f| lookup(&value, f))
            .and_then(as_timestamp);
        let text = as_text(lookup(&value, &m.message_text_field));
        Some(MessageRecord {
            message_id,
            channel_id,
            timestamp,
            text,
        })
    }
}

impl<R: BufRead> Iterator for MessageStream<R> {
    type Item = Result<MessageRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let line = match self.lines.next_line() {
                Ok(None) => return None,
                Ok(Some(line)) => line.map(str::to_owned),
                Err(e) => {
                    self.failed = true;
                    return Some(Err(Error::io("reading message dump", e)));
                }
            };
            self.counts.lines_read += 1;
            let line_no = self.lines.line_no;
            match line.and_then(|l| self.parse(&l, line_no)) {
                Some(record) => {
                    self.counts.records_emitted += 1;
                    return Some(Ok(record));
                }
                None => {
                    self.counts.records_skipped += 1;
                    log::debug!("skipping malformed message line {line_no}");
                }
            }
        }
    }
}

/// Opens a message dump for streaming.
pub fn stream_messages(path: impl AsRef<Path>, mapping: &FieldMapping) -> Result<MessageStream<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    MessageStream::from_reader(BufReader::with_capacity(1 << 16, file), mapping.clone())
}

/// Channel metadata keyed by channel id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChannelTable {
    pub channels: BTreeMap<String, ChannelRecord>,
    pub duplicates: u64,
    pub counts: LineCounts,
}

impl ChannelTable {
    pub fn get(&self, channel_id: &str) -> Option<&ChannelRecord> {
        self.channels.get(channel_id)
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn broadcast_count(&self) -> usize {
        self.channels.values().filter(|c| c.is_broadcast).count()
    }

    pub fn title(&self, channel_id: &str) -> Option<&str> {
        self.get(channel_id).map(|c| c.title.as_str())
    }
}

fn parse_channel(line: &str, mapping: &FieldMapping, assume_broadcast: bool) -> Option<ChannelRecord> {
    let value: Value = serde_json::from_str(line).ok()?;
    let channel_id = lookup(&value, &mapping.channel_id_field).and_then(as_id)?;
    let title = as_text(lookup(&value, &mapping.channel_title_field));
    let description = mapping
        .channel_description_field
        .as_deref()
        .and_then(|f| lookup(&value, f))
        .and_then(Value::as_str)
        .map(str::to_owned);
    let is_broadcast = mapping
        .channel_broadcast_field
        .as_deref()
        .and_then(|f| lookup(&value, f))
        .and_then(as_bool)
        .unwrap_or(assume_broadcast);
    Some(ChannelRecord {
        channel_id,
        title,
        description,
        is_broadcast,
    })
}

/// Reads channel metadata. The first occurrence of a channel id wins.
///
/// `assume_broadcast` is used for records without an explicit broadcast flag.
pub fn read_channels<R: BufRead>(reader: R, mapping: &FieldMapping, assume_broadcast: bool) -> Result<ChannelTable> {
    mapping.validate()?;
    let mut lines = LineReader::new(reader);
    let mut table = ChannelTable::default();
    while let Some(line) = lines.next_line().map_err(|e| Error::io("reading channel dump", e))? {
        table.counts.lines_read += 1;
        match line.and_then(|l| parse_channel(l, mapping, assume_broadcast)) {
            Some(record) => {
                table.counts.records_emitted += 1;
                if table.channels.contains_key(&record.channel_id) {
                    table.duplicates += 1;
                } else {
                    table.channels.insert(record.channel_id.clone(), record);
                }
            }
            None => table.counts.records_skipped += 1,
        }
    }
    Ok(table)
}

pub fn load_channels(path: impl AsRef<Path>, mapping: &FieldMapping, assume_broadcast: bool) -> Result<ChannelTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    read_channels(BufReader::new(file), mapping, assume_broadcast)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub kept: u64,
    pub non_broadcast: u64,
    pub unknown_channel: u64,
}

/// Keeps only messages posted in known broadcast channels.
pub struct BroadcastFilter<'a, I> {
    inner: I,
    channels: &'a ChannelTable,
    counts: FilterCounts,
}

impl<I> BroadcastFilter<'_, I> {
    pub fn counts(&self) -> FilterCounts {
        self.counts
    }

    /// Classifies one message, updating the counters.
    fn admit(&mut self, message: &MessageRecord) -> bool {
        match self.channels.get(&message.channel_id) {
            Some(c) if c.is_broadcast => {
                self.counts.kept += 1;
                true
            }
            Some(_) => {
                self.counts.non_broadcast += 1;
                false
            }
            None => {
                self.counts.unknown_channel += 1;
                false
            }
        }
    }
}

impl<I: Iterator<Item = MessageRecord>> Iterator for BroadcastFilter<'_, I> {
    type Item = MessageRecord;

    fn next(&mut self) -> Option<MessageRecord> {
        while let Some(message) = self.inner.next() {
            if self.admit(&message) {
                return Some(message);
            }
        }
        None
    }
}

pub fn filter_broadcast<I>(messages: I, channels: &ChannelTable) -> BroadcastFilter<'_, I::IntoIter>
where
    I: IntoIterator<Item = MessageRecord>,
{
    BroadcastFilter {
        inner: messages.into_iter(),
        channels,
        counts: FilterCounts::default(),
    }
}
