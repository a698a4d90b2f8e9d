//! Converts per-token loss into bits per second and splits event perplexity
//! into its time, duration and note factors.
//!
//!     cargo run --example bits_per_second -- 125050497 560.98 0.9003

use anticipation::metrics::{bits_per_second, event_perplexity, CorpusStats};
use anticipation::Codec;

fn main() -> anticipation::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<f64>().ok());
    let tokens = args.next().flatten().unwrap_or(125_050_497.0) as u64;
    let hours = args.next().flatten().unwrap_or(560.98);
    let nats = args.next().flatten().unwrap_or(14.9f64.ln() / 3.0);

    let stats = CorpusStats::from_hours(Codec::Arrival, tokens, hours);
    println!("{tokens} tokens over {hours} h = {:.2} tokens/s", tokens as f64 / (hours * 3600.0));
    println!("{nats:.4} nats/token = {:.2} bits/s", bits_per_second(nats, &stats)?);

    let (t, d, n): (f64, f64, f64) = (1.59, 3.90, 2.40);
    let ppl = event_perplexity(t.ln(), d.ln(), n.ln());
    println!("event perplexity {t} x {d} x {n} = {ppl:.2}");
    Ok(())
}
