//! Plain-text event format.
//!
//! One event per line as `t d n` in quantized units, `R` in the note column
//! for a REST, a leading `C ` for anticipated controls. A blank line separates
//! sequences and `#` starts a comment line.

use std::fmt::Write as _;

use crate::anticipation::{InterleavedSequence, Item, Tag};
use crate::error::{Error, Result};
use crate::event::{Event, EventSequence, NoteCode, OrderMode, QuantizedDuration};

pub fn parse_event_text(text: &str) -> Result<Vec<InterleavedSequence>> {
    let mut sequences = Vec::new();
    let mut current = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !current.is_empty() {
                sequences.push(InterleavedSequence::from_items(std::mem::take(&mut current)));
            }
            continue;
        }
        current.push(parse_line(line).map_err(|message| Error::TextFormat {
            line: i + 1,
            message,
        })?);
    }
    if !current.is_empty() {
        sequences.push(InterleavedSequence::from_items(current));
    }
    Ok(sequences)
}

fn parse_line(line: &str) -> std::result::Result<Item, String> {
    let mut fields: Vec<&str> = line.split_whitespace().collect();
    let tag = if fields.first() == Some(&"C") {
        fields.remove(0);
        Tag::Control
    } else {
        Tag::Event
    };
    let [t, d, n] = fields[..] else {
        return Err(format!("expected `t d n`, got {line:?}"));
    };
    let number = |s: &str| s.parse::<u32>().map_err(|_| format!("bad integer {s:?}"));
    let time = number(t)?;
    let duration = number(d)?;
    let event = if n == "R" {
        if duration != 0 {
            return Err(format!("REST with non-zero duration {duration}"));
        }
        if tag == Tag::Control {
            return Err("REST cannot be a control".into());
        }
        Event::rest(time)
    } else {
        Event::new(
            time,
            QuantizedDuration::new(duration).map_err(|e| e.to_string())?,
            NoteCode::new(number(n)?).map_err(|e| e.to_string())?,
        )
    };
    Ok(Item { event, tag })
}

pub fn write_event_text<'a, I>(sequences: I) -> String
where
    I: IntoIterator<Item = &'a InterleavedSequence>,
{
    let mut out = String::new();
    for (i, seq) in sequences.into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for item in seq.items() {
            if item.is_control() {
                out.push_str("C ");
            }
            let _ = writeln!(out, "{}", item.event);
        }
    }
    out
}

/// Writes plain event sequences.
pub fn write_event_sequences<'a, I>(sequences: I) -> String
where
    I: IntoIterator<Item = &'a EventSequence>,
{
    let wrapped: Vec<InterleavedSequence> =
        sequences.into_iter().map(InterleavedSequence::from_events).collect();
    write_event_text(&wrapped)
}

/// Parses a file of plain sequences, rejecting control lines and unsorted input.
pub fn parse_event_sequences(text: &str) -> Result<Vec<EventSequence>> {
    parse_event_text(text)?
        .into_iter()
        .map(|seq| {
            if seq.has_controls() {
                return Err(Error::invalid("expected plain events, found control lines"));
            }
            EventSequence::new(
                seq.items().iter().map(|i| i.event).collect(),
                OrderMode::Reject,
            )
        })
        .collect()
}
