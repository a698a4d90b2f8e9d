//! Drives a predictor running in another process over the CTX/DIST line
//! protocol. The example re-runs itself with `serve` as the child.

use std::io;
use std::process::Command;
use std::time::Duration;

use anticipation::predictor::{serve_predictor, train_ngram, ExternalPredictor, Predictor};
use anticipation::tokenize::arrival;

fn model() -> anticipation::Result<anticipation::predictor::NGramModel> {
    let corpus: Vec<u32> = [55026, 55025, 55025, 55025, 0, 10050, 11060, 50, 10050, 11062].to_vec();
    train_ngram([corpus.as_slice()], 3, 0.01, arrival::VOCAB_SIZE)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    if std::env::args().nth(1).as_deref() == Some("serve") {
        let answered = serve_predictor(&mut model()?, io::stdin().lock(), io::stdout().lock())?;
        eprintln!("served {answered} requests");
        return Ok(());
    }
    let mut child = Command::new(std::env::current_exe()?);
    child.arg("serve");
    let mut remote = ExternalPredictor::spawn(child, arrival::VOCAB_SIZE, Duration::from_secs(10))?;
    let mut local = model()?;

    let context = [55026, 55025, 55025, 55025, 0, 10050];
    let a = remote.next_distribution(&context)?;
    let b = local.next_distribution(&context)?;
    let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!("P(11060 | context) remote {:.6} local {:.6}, max gap {gap:.2e}", a[11060], b[11060]);
    Ok(())
}
