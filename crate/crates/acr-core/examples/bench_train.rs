//! Quick wall-clock probe for one reference-benchmark training run.

use acr_core::model::{train, ModelDims, TrainConfig};
use acr_core::numerics::RandomStream;
use acr_core::synth::{make_dataset, SynthConfig};
use std::time::Instant;

fn main() {
    let synth = SynthConfig::reference(0);
    let data = make_dataset::<f64>(&synth).unwrap();
    let dims = ModelDims { modalities: 2, d_in: 16, d_e: 256, classes: 6 };
    let epochs: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(5);
    let cfg = TrainConfig { epochs, ..TrainConfig::default() };
    let start = Instant::now();
    let result = train(dims, &data, &cfg, &RandomStream::new(0)).unwrap();
    let elapsed = start.elapsed();
    let last = result.history.last().unwrap();
    println!(
        "epochs={epochs} elapsed={elapsed:?} per_epoch={:?} last: l_total={:.4} val_auroc={:?} val_acc={:.4}",
        elapsed / epochs as u32,
        last.l_total,
        last.val_auroc,
        last.val_acc
    );
}
