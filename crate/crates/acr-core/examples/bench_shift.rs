//! Probe: test-time distribution shift on modality 1. Trains baseline and
//! full arms per seed, then evaluates the same checkpoints on the clean and
//! the shifted test split.

use acr_core::eval::evaluate_model;
use acr_core::model::{train, LossConfig, ModelDims, TrainConfig};
use acr_core::numerics::RandomStream;
use acr_core::scores::ScorerSpec;
use acr_core::synth::{apply_shift, make_dataset, SynthConfig};

fn main() {
    let shift_sigma: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(12.0);
    let dims = ModelDims { modalities: 2, d_in: 16, d_e: 256, classes: 6 };
    let scorer = ScorerSpec::from_name("msp").unwrap();
    let mut acc_drops = 0;
    let mut aurc_wins = 0;
    for seed in 0..10u64 {
        let data = make_dataset::<f64>(&SynthConfig::reference(seed)).unwrap();
        let mut shift_rng = RandomStream::new(seed).fork("shift");
        let shift_modality: usize = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(0);
        let shifted = apply_shift(&data.test, shift_modality, shift_sigma, &mut shift_rng).unwrap();
        let arm = |lambda_acl: f64, mfs: bool| TrainConfig {
            synthesizer: mfs.then_some(acr_core::mfs::SynthesizerKind::Mfs),
            loss: LossConfig { lambda_acl, ..LossConfig::default() },
            ..TrainConfig::default()
        };
        let base = train(dims, &data, &arm(0.0, false), &RandomStream::new(seed)).unwrap();
        let acl = train(dims, &data, &arm(2.0, false), &RandomStream::new(seed)).unwrap();
        let mfs = train(dims, &data, &arm(0.0, true), &RandomStream::new(seed)).unwrap();
        let acr = train(dims, &data, &arm(2.0, true), &RandomStream::new(seed)).unwrap();
        let renorm = std::env::args().nth(2).as_deref() == Some("renorm");
        let base_clean = evaluate_model(&base.params, &data.test, &scorer, renorm).unwrap();
        let base_shift = evaluate_model(&base.params, &shifted, &scorer, renorm).unwrap();
        let acl_shift = evaluate_model(&acl.params, &shifted, &scorer, renorm).unwrap();
        let mfs_shift = evaluate_model(&mfs.params, &shifted, &scorer, renorm).unwrap();
        let acr_shift = evaluate_model(&acr.params, &shifted, &scorer, renorm).unwrap();
        println!(
            "   components shifted acc: base {:.4} acl {:.4} mfs {:.4} acr {:.4} | aurc base {:.1} acl {:.1} mfs {:.1} acr {:.1}",
            base_shift.report.acc, acl_shift.report.acc, mfs_shift.report.acc, acr_shift.report.acc,
            base_shift.report.aurc_x1000, acl_shift.report.aurc_x1000, mfs_shift.report.aurc_x1000, acr_shift.report.aurc_x1000,
        );
        let acc_drop = base_shift.report.acc < base_clean.report.acc;
        let aurc_win = acr_shift.report.aurc_x1000 <= base_shift.report.aurc_x1000;
        acc_drops += usize::from(acc_drop);
        aurc_wins += usize::from(aurc_win);
        println!(
            "seed={seed} base_acc {:.4}->{:.4} ({}) acr_shift_acc={:.4} base_aurc={:.2} acr_aurc={:.2} ({}) base_auroc={:?} acr_auroc={:?}",
            base_clean.report.acc,
            base_shift.report.acc,
            if acc_drop { "drop" } else { "NO DROP" },
            acr_shift.report.acc,
            base_shift.report.aurc_x1000,
            acr_shift.report.aurc_x1000,
            if aurc_win { "win" } else { "loss" },
            base_shift.report.auroc.map(|v| (v * 1e3).round() / 1e3),
            acr_shift.report.auroc.map(|v| (v * 1e3).round() / 1e3),
        );
    }
    println!("acc drops {acc_drops}/10, acr aurc wins {aurc_wins}/10");
}
