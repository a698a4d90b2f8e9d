//! Encodes the opening of Twinkle Twinkle Little Star with both codecs and
//! decodes it back.

use anticipation::golden::{twinkle, twinkle_legato};
use anticipation::tokenize::{decode_interarrival, encode_interarrival};
use anticipation::{decode_arrival, encode_arrival, InterleavedSequence};

fn main() -> anticipation::Result<()> {
    let melody = twinkle();
    for e in melody.iter() {
        println!("{e}");
    }

    let arrival = encode_arrival(&InterleavedSequence::from_events(&melody))?;
    println!("\narrival ({} tokens): {:?}", arrival.len(), arrival.tokens());
    let back = decode_arrival(arrival.tokens())?;
    assert_eq!(back[0].plain_events(), melody);

    // gaps and offsets instead of absolute times
    for (name, seq) in [("staccato", melody), ("legato", twinkle_legato())] {
        let tokens = encode_interarrival(&seq)?;
        println!("\ninterarrival {name} ({} tokens): {:?}", tokens.len(), tokens.tokens());
        assert_eq!(decode_interarrival(tokens.tokens())?, vec![seq]);
    }
    Ok(())
}
