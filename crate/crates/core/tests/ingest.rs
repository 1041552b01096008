use std::io::Cursor;

use coalitions_core::ingest::{filter_broadcast, read_channels, FieldMapping, MessageStream};
use coalitions_core::urls::{extract_from_message, extract_urls};
use proptest::prelude::*;
use serde_json::json;

#[derive(Debug, Clone)]
enum Line {
    Good { id: u32, channel: u32, text: String },
    NoChannel(u32),
    Junk(String),
    Blank,
}

impl Line {
    fn render(&self) -> String {
        match self {
            Line::Good { id, channel, text } => {
                json!({"id": id, "to_id": {"channel_id": channel}, "date": 1_600_000_000, "message": text}).to_string()
            }
            Line::NoChannel(id) => json!({"id": id, "message": "x"}).to_string(),
            Line::Junk(s) => format!("{{{s}"),
            Line::Blank => "   ".into(),
        }
    }
}

fn arb_line() -> impl Strategy<Value = Line> {
    prop_oneof![
        6 => (any::<u32>(), 0u32..5, "[ -~]{0,40}").prop_map(|(id, channel, text)| Line::Good { id, channel, text }),
        1 => any::<u32>().prop_map(Line::NoChannel),
        1 => "[a-z\":,]{0,12}".prop_map(Line::Junk),
        1 => Just(Line::Blank),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn every_line_is_emitted_or_skipped(lines in proptest::collection::vec(arb_line(), 0..60)) {
        let text: String = lines.iter().map(|l| l.render() + "\n").collect();
        let mut stream = MessageStream::from_reader(Cursor::new(text.clone()), FieldMapping::default()).unwrap();
        let records: Vec<_> = stream.by_ref().map(Result::unwrap).collect();
        let counts = stream.counts();
        let non_blank = lines.iter().filter(|l| !matches!(l, Line::Blank)).count() as u64;
        let good: Vec<_> = lines.iter().filter_map(|l| match l {
            Line::Good { id, channel, text } => Some((id.to_string(), channel.to_string(), text.clone())),
            _ => None,
        }).collect();
        prop_assert_eq!(counts.lines_read, non_blank);
        prop_assert_eq!(counts.records_emitted + counts.records_skipped, counts.lines_read);
        prop_assert_eq!(counts.records_emitted, good.len() as u64);
        let got: Vec<_> = records.iter().map(|r| (r.message_id.clone(), r.channel_id.clone(), r.text.clone())).collect();
        prop_assert_eq!(&got, &good);

        // Same bytes, same records.
        let again: Vec<_> = MessageStream::from_reader(Cursor::new(text), FieldMapping::default())
            .unwrap()
            .map(Result::unwrap)
            .collect();
        prop_assert_eq!(again, records);
    }

    #[test]
    fn extracted_urls_are_scheme_anchored(text in "[ -~]{0,80}") {
        for u in extract_urls(&text) {
            let lower = u.to_ascii_lowercase();
            prop_assert!(lower.starts_with("http://") || lower.starts_with("https://"), "{}", u);
            prop_assert!(text.contains(u));
            let rest = &u[u.find("://").unwrap() + 3..];
            prop_assert!(!rest.is_empty() && !rest.starts_with(['/', '?', '#']));
        }
    }
}

#[test]
fn invalid_utf8_lines_are_skipped() {
    let mut bytes = b"{\"id\":1,\"to_id\":{\"channel_id\":7},\"message\":\"a\"}\n".to_vec();
    bytes.extend_from_slice(b"\xff\xfe{\"id\":2}\n");
    bytes.extend_from_slice(b"{\"id\":3,\"to_id\":{\"channel_id\":7},\"message\":\"b\"}");
    let mut s = MessageStream::from_reader(Cursor::new(bytes), FieldMapping::default()).unwrap();
    let ids: Vec<_> = s.by_ref().map(|r| r.unwrap().message_id).collect();
    assert_eq!(ids, ["1", "3"]);
    assert_eq!(s.counts().records_skipped, 1);
}

#[test]
fn broadcast_filter_and_url_extraction_compose() {
    let channels = "{\"id\": 1, \"title\": \"A\", \"broadcast\": true}\n\
                    {\"id\": 2, \"title\": \"B\", \"broadcast\": false}\n\
                    {\"id\": 3, \"title\": \"C\"}\n";
    let table = read_channels(Cursor::new(channels), &FieldMapping::default(), false).unwrap();
    assert_eq!(table.broadcast_count(), 1);
    let assumed = read_channels(Cursor::new(channels), &FieldMapping::default(), true).unwrap();
    assert_eq!(assumed.broadcast_count(), 2);

    let messages: String = [
        (1, "see https://nature.com/x and http://arxiv.org."),
        (2, "https://a.org"),
        (3, "https://b.org"),
        (9, "https://c.org"),
    ]
    .iter()
    .map(|(c, t)| json!({"id": 1, "to_id": {"channel_id": c}, "message": t}).to_string() + "\n")
    .collect();
    let stream = MessageStream::from_reader(Cursor::new(messages), FieldMapping::default()).unwrap();
    let mut filter = filter_broadcast(stream.map(Result::unwrap), &table);
    let urls: Vec<_> = filter
        .by_ref()
        .flat_map(|m| extract_from_message(&m))
        .map(|u| u.value)
        .collect();
    assert_eq!(urls, ["https://nature.com/x", "http://arxiv.org"]);
    let c = filter.counts();
    assert_eq!((c.kept, c.non_broadcast, c.unknown_channel), (1, 2, 1));
}

#[test]
fn custom_field_mapping() {
    let mapping = FieldMapping {
        message_text_field: "body.text".into(),
        message_channel_field: "peer".into(),
        message_id_field: "mid".into(),
        message_timestamp_field: None,
        ..FieldMapping::default()
    };
    let line = json!({"mid": "x9", "peer": "chan", "body": {"text": "hi https://x.org"}}).to_string();
    let recs: Vec<_> = MessageStream::from_reader(Cursor::new(line), mapping)
        .unwrap()
        .map(Result::unwrap)
        .collect();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].channel_id, "chan");
    assert_eq!(recs[0].text, "hi https://x.org");
    let empty = FieldMapping {
        message_channel_field: String::new(),
        ..FieldMapping::default()
    };
    assert!(MessageStream::from_reader(Cursor::new(""), empty).is_err());
}
