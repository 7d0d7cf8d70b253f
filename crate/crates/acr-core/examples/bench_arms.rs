//! Probe: trains the four method arms on the reference benchmark across
//! seeds and prints the test-set metrics each arm reaches.

use acr_core::eval::evaluate_model;
use acr_core::model::{train, LossConfig, ModelDims, TrainConfig};
use acr_core::numerics::RandomStream;
use acr_core::scores::ScorerSpec;
use acr_core::synth::{make_dataset, SynthConfig};
use std::time::Instant;

fn main() {
    let seeds: Vec<u64> = std::env::args()
        .nth(1)
        .map(|s| s.parse::<u64>().unwrap())
        .map(|n| (0..n).collect())
        .unwrap_or_else(|| vec![0]);
    let epochs: usize = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(50);
    let d_e: usize = std::env::args()
        .nth(3)
        .and_then(|s| s.parse().ok())
        .unwrap_or(256);
    let w_uni: f64 = std::env::args()
        .nth(4)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1.0);
    let dims = ModelDims { modalities: 2, d_in: 16, d_e, classes: 6 };
    let scorer = ScorerSpec::from_name("msp").unwrap();
    let start = Instant::now();
    for seed in seeds {
        let data = make_dataset::<f64>(&SynthConfig::reference(seed)).unwrap();
        let arm = |lambda_acl: f64, mfs: bool| TrainConfig {
            epochs,
            synthesizer: mfs.then_some(acr_core::mfs::SynthesizerKind::Mfs),
            loss: LossConfig { lambda_acl, w_uni, ..LossConfig::default() },
            ..TrainConfig::default()
        };
        let arms: Vec<(&str, TrainConfig<f64>)> = vec![
            ("baseline", arm(0.0, false)),
            ("acl_only", arm(2.0, false)),
            ("mfs_only", arm(0.0, true)),
            ("acr", arm(2.0, true)),
        ];
        for (name, cfg) in arms {
            let result = train(dims, &data, &cfg, &RandomStream::new(seed)).unwrap();
            let eval = evaluate_model(&result.params, &data.test, &scorer, false).unwrap();
            println!(
                "seed={seed} arm={name:9} best_ep={:2} acc={:.4} auroc={:?} fpr95={:?} aurc={:.2} deg_c={:?} deg_i={:?}",
                result.best_epoch,
                eval.report.acc,
                eval.report.auroc.map(|v| (v * 1e4).round() / 1e4),
                eval.report.fpr95.map(|v| (v * 1e4).round() / 1e4),
                eval.report.aurc_x1000,
                eval.report.degradation_rate_correct.map(|v| (v * 1e3).round() / 1e3),
                eval.report.degradation_rate_incorrect.map(|v| (v * 1e3).round() / 1e3),
            );
        }
    }
    println!("total {:?}", start.elapsed());
}
