//! Reference fixtures: the first four bars of "Twinkle, Twinkle, Little Star"
//! on piano at quarter = 120, small interleaving cases, and published loss
//! figures. [`run_golden`] checks the library against all of them.

use crate::anticipation::{
    densify, interleave, sort_order_interleave, InterleavedSequence, Item,
};
use crate::error::Result;
use crate::event::{ControlSequence, Event, EventSequence, OrderMode};
use crate::metrics::{bits_per_second, event_perplexity, CorpusStats};
use crate::text::{parse_event_sequences, write_event_sequences};
use crate::tokenize::{
    arrival, decode_arrival, decode_interarrival, encode_arrival, encode_interarrival,
    interarrival, Codec, Token,
};

const TWINKLE_TIMES: [u32; 14] = [0, 50, 100, 150, 200, 250, 300, 400, 450, 500, 550, 600, 650, 700];
const TWINKLE_PITCHES: [u32; 14] = [60, 60, 67, 67, 69, 69, 67, 65, 65, 64, 64, 62, 62, 60];
/// Indices of the two half notes.
const HALF_NOTES: [usize; 2] = [6, 13];

/// Arrival tokens: AR code, SEP triple, then the melody with 480 ms notes.
pub const TWINKLE_ARRIVAL: [Token; 46] = [
    55026, 55025, 55025, 55025, 0, 10048, 11060, 50, 10048, 11060, 100, 10048, 11067, 150, 10048,
    11067, 200, 10048, 11069, 250, 10048, 11069, 300, 10095, 11067, 400, 10048, 11065, 450, 10048,
    11065, 500, 10048, 11064, 550, 10048, 11064, 600, 10048, 11062, 650, 10048, 11062, 700, 10095,
    11060,
];

/// Interarrival tokens with 480 ms notes.
pub const TWINKLE_INTERARRIVAL: [Token; 56] = [
    34024, 1060, 48, 17572, 2, 1060, 48, 17572, 2, 1067, 48, 17579, 2, 1067, 48, 17579, 2, 1069,
    48, 17581, 2, 1069, 48, 17581, 2, 1067, 95, 17579, 5, 1065, 48, 17577, 2, 1065, 48, 17577, 2,
    1064, 48, 17576, 2, 1064, 48, 17576, 2, 1062, 48, 17574, 2, 1062, 48, 17574, 2, 1060, 95,
    17572,
];

/// Interarrival tokens with full-beat notes; zero gaps vanish.
pub const TWINKLE_INTERARRIVAL_LEGATO: [Token; 43] = [
    34024, 1060, 50, 17572, 1060, 50, 17572, 1067, 50, 17579, 1067, 50, 17579, 1069, 50, 17581,
    1069, 50, 17581, 1067, 100, 17579, 1065, 50, 17577, 1065, 50, 17577, 1064, 50, 17576, 1064,
    50, 17576, 1062, 50, 17574, 1062, 50, 17574, 1060, 100, 17572,
];

fn twinkle_with(short: u32, long: u32) -> EventSequence {
    let events = TWINKLE_TIMES
        .iter()
        .zip(TWINKLE_PITCHES)
        .enumerate()
        .map(|(i, (&t, p))| {
            let d = if HALF_NOTES.contains(&i) { long } else { short };
            Event::from_raw(t, d, p).expect("fixture is in range")
        })
        .collect();
    EventSequence::new(events, OrderMode::Reject).expect("fixture is sorted")
}

/// The melody with 480 ms quarter notes and 950 ms half notes.
pub fn twinkle() -> EventSequence {
    twinkle_with(48, 95)
}

/// The melody with notes held for the full beat.
pub fn twinkle_legato() -> EventSequence {
    twinkle_with(50, 100)
}

/// Event text of [`twinkle`].
pub fn twinkle_event_text() -> String {
    write_event_sequences([&twinkle()])
}

fn ev(t: u32, n: u32) -> Event {
    Event::from_raw(t, 25, n).expect("fixture is in range")
}

/// One interleaving case: plain event times (ticks), control times, delta
/// (ticks), optional densification target, and the expected item order as
/// `e`/`u` with indices into events and controls.
struct InterleaveCase {
    name: &'static str,
    events: &'static [u32],
    controls: &'static [u32],
    delta: u32,
    density: Option<u32>,
    expected: &'static [(char, usize)],
}

const INTERLEAVE_CASES: [InterleaveCase; 3] = [
    InterleaveCase {
        name: "interleave-stopping-time",
        events: &[100, 300, 500],
        controls: &[700],
        delta: 500,
        density: None,
        expected: &[('e', 0), ('e', 1), ('u', 0), ('e', 2)],
    },
    InterleaveCase {
        name: "interleave-sparse-late-control",
        events: &[100, 200, 500],
        controls: &[450],
        delta: 200,
        density: None,
        expected: &[('e', 0), ('e', 1), ('e', 2), ('u', 0)],
    },
    InterleaveCase {
        name: "interleave-densified",
        events: &[100, 200, 500],
        controls: &[450],
        delta: 200,
        density: Some(100),
        expected: &[('e', 0), ('e', 1), ('e', 2), ('u', 0), ('e', 3), ('e', 4)],
    },
];

fn case_inputs(case: &InterleaveCase) -> (EventSequence, ControlSequence) {
    let events = case
        .events
        .iter()
        .enumerate()
        .map(|(i, &t)| ev(t, 60 + i as u32))
        .collect();
    let events = EventSequence::new(events, OrderMode::Reject).expect("fixture is sorted");
    let events = match case.density {
        Some(d) => densify(&events, d),
        None => events,
    };
    let controls = case.controls.iter().map(|&t| ev(t, 72)).collect();
    let controls = ControlSequence::new(controls, OrderMode::Reject).expect("fixture is sorted");
    (events, controls)
}

fn expected_items(case: &InterleaveCase, events: &EventSequence, controls: &ControlSequence) -> InterleavedSequence {
    InterleavedSequence::from_items(
        case.expected
            .iter()
            .map(|&(kind, i)| match kind {
                'e' => Item::event(events.events()[i]),
                _ => Item::control(controls.controls()[i]),
            })
            .collect(),
    )
}

/// Outcome of one golden check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: impl Into<String>) -> GoldenCheck {
    GoldenCheck {
        name,
        passed,
        detail: detail.into(),
    }
}

fn arrival_tokens(seq: &EventSequence) -> Result<Vec<Token>> {
    let mut tokens = vec![arrival::AR, arrival::SEP, arrival::SEP, arrival::SEP];
    tokens.extend(encode_arrival(&InterleavedSequence::from_events(seq))?.tokens());
    Ok(tokens)
}

fn interarrival_tokens(seq: &EventSequence) -> Result<Vec<Token>> {
    let mut tokens = vec![interarrival::SEP];
    tokens.extend(encode_interarrival(seq)?.tokens());
    Ok(tokens)
}

fn compare(name: &'static str, got: Result<Vec<Token>>, want: &[Token]) -> GoldenCheck {
    match got {
        Ok(got) if got == want => check(name, true, format!("{} tokens", want.len())),
        Ok(got) => {
            let at = got.iter().zip(want).position(|(a, b)| a != b).unwrap_or(got.len().min(want.len()));
            check(name, false, format!("{} tokens, first mismatch at {at}", got.len()))
        }
        Err(e) => check(name, false, e.to_string()),
    }
}

/// Tokenization checks against the melody fixtures.
pub fn codec_checks() -> Vec<GoldenCheck> {
    let melody = twinkle();
    let legato = twinkle_legato();
    let mut out = vec![
        compare("twinkle-arrival-encode", arrival_tokens(&melody), &TWINKLE_ARRIVAL),
        compare("twinkle-interarrival-encode", interarrival_tokens(&melody), &TWINKLE_INTERARRIVAL),
        compare(
            "twinkle-interarrival-legato-encode",
            interarrival_tokens(&legato),
            &TWINKLE_INTERARRIVAL_LEGATO,
        ),
    ];
    let decoded = decode_arrival(&TWINKLE_ARRIVAL);
    out.push(check(
        "twinkle-arrival-decode",
        matches!(&decoded, Ok(s) if s.len() == 1 && s[0] == InterleavedSequence::from_events(&melody)),
        match &decoded {
            Ok(s) => format!("{} sequence(s)", s.len()),
            Err(e) => e.to_string(),
        },
    ));
    for (name, tokens, want) in [
        ("twinkle-interarrival-decode", &TWINKLE_INTERARRIVAL[..], &melody),
        ("twinkle-interarrival-legato-decode", &TWINKLE_INTERARRIVAL_LEGATO[..], &legato),
    ] {
        let got = decode_interarrival(tokens);
        out.push(check(
            name,
            matches!(&got, Ok(s) if s.len() == 1 && &s[0] == want),
            match &got {
                Ok(s) => format!("{} sequence(s)", s.len()),
                Err(e) => e.to_string(),
            },
        ));
    }
    let text = parse_event_sequences(&twinkle_event_text());
    out.push(check(
        "twinkle-event-text",
        matches!(&text, Ok(s) if s.len() == 1 && s[0] == melody),
        "event text round trip",
    ));
    out
}

/// Interleaving orderings and the sort-order counterexample.
pub fn interleave_checks() -> Vec<GoldenCheck> {
    let mut out = Vec::new();
    for case in &INTERLEAVE_CASES {
        let (events, controls) = case_inputs(case);
        let got = interleave(&events, &controls, case.delta);
        let want = expected_items(case, &events, &controls);
        out.push(check(case.name, got == want, shape(&got)));
        if case.density.is_none() && case.name == "interleave-stopping-time" {
            let naive = sort_order_interleave(&events, &controls, case.delta);
            out.push(check(
                "interleave-sort-order-differs",
                naive != got,
                format!("sort order gives {}", shape(&naive)),
            ));
        }
    }
    out
}

fn shape(seq: &InterleavedSequence) -> String {
    seq.items()
        .iter()
        .map(|i| if i.is_control() { 'u' } else { 'e' })
        .collect()
}

/// Published arrival-time loss figures: 80.4 bits per second from a 14.9
/// per-event perplexity, and 1.59 x 3.90 x 2.40 = 14.9.
pub fn metric_checks() -> Vec<GoldenCheck> {
    let stats = CorpusStats::from_hours(Codec::Arrival, 125_050_497, 560.98);
    let bps = bits_per_second(14.9f64.ln() / 3.0, &stats);
    let ppl = event_perplexity(1.59f64.ln(), 3.90f64.ln(), 2.40f64.ln());
    vec![
        check(
            "bits-per-second",
            matches!(bps, Ok(b) if (b - 80.4).abs() <= 0.1),
            format!("{bps:?}"),
        ),
        check("event-perplexity-product", (ppl - 14.9).abs() <= 0.1, format!("{ppl:.4}")),
    ]
}

/// Every golden check.
pub fn run_golden() -> Vec<GoldenCheck> {
    let mut all = codec_checks();
    all.extend(interleave_checks());
    all.extend(metric_checks());
    all
}
