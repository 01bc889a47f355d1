//! Tab-separated interaction events: `user_id \t item_id \t timestamp \t count`.
//!
//! The count column is optional and defaults to 1. A first line whose
//! timestamp field is not an integer is treated as a header.

use std::io::{BufRead, Write};

use dpf_core::ingest::RawEvent;

use crate::error::{Error, Result};

pub const HEADER: &str = "user_id\titem_id\ttimestamp\tcount";

pub fn read_events<R: BufRead>(reader: R) -> Result<Vec<RawEvent>> {
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(Error::parse(lineno, format!("expected 3 or 4 tab-separated fields, got {}", fields.len())));
        }
        let timestamp = match fields[2].trim().parse::<i64>() {
            Ok(ts) => ts,
            Err(_) if lineno == 1 => continue,
            Err(_) => return Err(Error::parse(lineno, format!("invalid timestamp {:?}", fields[2]))),
        };
        if timestamp < 0 {
            return Err(Error::parse(lineno, format!("negative timestamp {timestamp}")));
        }
        let count = match fields.get(3) {
            Some(c) => c.trim().parse::<u32>().map_err(|_| Error::parse(lineno, format!("invalid count {c:?}")))?,
            None => 1,
        };
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::parse(lineno, "empty user or item id"));
        }
        events.push(RawEvent { user_id: fields[0].to_string(), item_id: fields[1].to_string(), timestamp, count });
    }
    Ok(events)
}

pub fn write_events<W: Write>(mut w: W, events: &[RawEvent]) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    for e in events {
        writeln!(w, "{}\t{}\t{}\t{}", e.user_id, e.item_id, e.timestamp, e.count)?;
    }
    Ok(())
}
