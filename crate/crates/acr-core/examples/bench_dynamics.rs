//! Probe: training dynamics of the adaptive confidence loss — hinge
//! activity, loss trajectories, and test-time confidence separation.

use acr_core::eval::evaluate_model;
use acr_core::model::{forward, train, LossConfig, ModelDims, TrainConfig};
use acr_core::numerics::RandomStream;
use acr_core::scores::ScorerSpec;
use acr_core::synth::{make_dataset, SynthConfig};

fn main() {
    let renorm_conf = std::env::args().nth(1).as_deref() == Some("renorm");
    let w_uni: f64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let d_e: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(256);
    let dims = ModelDims { modalities: 2, d_in: 16, d_e, classes: 6 };
    let scorer = ScorerSpec::from_name("msp").unwrap();
    let mut means = std::collections::BTreeMap::<&str, Vec<f64>>::new();
    for seed in 0..10u64 {
        let data = make_dataset::<f64>(&SynthConfig::reference(seed)).unwrap();
        for (name, lambda) in [("baseline", 0.0), ("acl_only", 2.0)] {
            let cfg = TrainConfig {
                synthesizer: None,
                loss: LossConfig {
                    lambda_acl: lambda,
                    renormalize_conf: renorm_conf,
                    w_uni,
                    ..LossConfig::default()
                },
                ..TrainConfig::default()
            };
            let result = train(dims, &data, &cfg, &RandomStream::new(seed)).unwrap();
            let eval = evaluate_model(&result.params, &data.test, &scorer, false).unwrap();
            if seed < 2 && name == "acl_only" {
                let h = &result.history;
                println!(
                    "seed={seed} l_acl by epoch: 1:{:.4} 5:{:.4} 10:{:.4} 25:{:.4} 50:{:.4}  l_cls 50:{:.4}",
                    h[0].l_acl, h[4].l_acl, h[9].l_acl, h[24].l_acl, h[49].l_acl, h[49].l_cls,
                );
            }
            // Mean test confidence on correct vs incorrect predictions.
            let record = forward(&data.test.x, &result.params).unwrap();
            let (mut conf_c, mut conf_i, mut nc, mut ni) = (0.0, 0.0, 0usize, 0usize);
            for i in 0..data.test.len() {
                let correct = record.conf_idx[i] == data.test.labels[i];
                if correct {
                    conf_c += record.conf[i];
                    nc += 1;
                } else {
                    conf_i += record.conf[i];
                    ni += 1;
                }
            }
            means.entry(name).or_default().push(eval.report.auroc.unwrap());
            println!(
                "seed={seed} arm={name:9} auroc={:.4} acc={:.4} conf_correct={:.4} conf_incorrect={:.4} best_ep={}",
                eval.report.auroc.unwrap(),
                eval.report.acc,
                conf_c / nc as f64,
                conf_i / ni as f64,
                result.best_epoch,
            );
        }
    }
    for (name, aurocs) in means {
        println!("{name}: mean auroc {:.4}", aurocs.iter().sum::<f64>() / aurocs.len() as f64);
    }
}
