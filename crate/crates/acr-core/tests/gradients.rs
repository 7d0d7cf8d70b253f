//! Finite-difference oracles for every hand-derived gradient: the adaptive
//! confidence loss with respect to logits, and the full objective with
//! respect to every parameter, including the outlier path through the
//! encoders.
//!
//! Test points are resampled until they sit at least 1e-3 away from every
//! non-smooth boundary (hinge activation, softmax argmax ties, relu kinks),
//! so central differences with h = 1e-6 stay on one smooth piece.

use acr_core::mfs::{mfs_cyclic, SwapConfig};
use acr_core::model::{
    acl_grad, forward, total_loss, ForwardRecord, LossConfig, ModelDims, ModelParams,
    OutlierBatch,
};
use acr_core::numerics::{softmax, Matrix, RandomStream};

const FD_STEP: f64 = 1e-6;
const REL_TOL: f64 = 1e-4;
const MARGIN: f64 = 1e-3;

struct TestPoint {
    params: ModelParams<f64>,
    x: Vec<Matrix<f64>>,
    labels: Vec<usize>,
    outliers: OutlierBatch<f64>,
}

fn swap_cfg() -> SwapConfig {
    SwapConfig { n_min: 1, n_max: 4 }
}

/// Margins away from every non-smooth boundary of the objective.
fn margins_ok(point: &TestPoint, dims: &ModelDims) -> bool {
    let record = match forward(&point.x, &point.params) {
        Ok(r) => r,
        Err(_) => return false,
    };
    let n = record.batch_len();
    // relu kinks on the main batch.
    for k in 0..dims.modalities {
        let pre = point.x[k]
            .matmul_add_bias(&point.params.enc_w[k], &point.params.enc_b[k])
            .unwrap();
        if pre.data().iter().any(|v| v.abs() < MARGIN) {
            return false;
        }
    }
    for i in 0..n {
        // Fused argmax margin over the real classes, and over the full row
        // (the max could migrate under perturbation otherwise).
        let row = record.fused_probs.row(i);
        let mut sorted: Vec<f64> = row[..dims.classes].to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if sorted[0] - sorted[1] < MARGIN {
            return false;
        }
        for k in 0..dims.modalities {
            let urow = record.uni_probs[k].row(i);
            let mut usorted: Vec<f64> = urow.to_vec();
            usorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            if usorted[0] - usorted[1] < MARGIN {
                return false;
            }
            // Hinge margin.
            if (record.conf_uni[k][i] - record.conf[i]).abs() < MARGIN {
                return false;
            }
        }
    }
    true
}

fn sample_point(m: usize, seed: u64) -> Option<TestPoint> {
    let dims = ModelDims { modalities: m, d_in: 3, d_e: 4, classes: 3 };
    let n = 2usize;
    let rng = RandomStream::new(seed);
    let mut params = ModelParams::init(dims, &rng).unwrap();
    let mut draw = rng.fork("point");
    for tensor in params.flatten_mut() {
        for v in tensor.data_mut() {
            *v = draw.normal();
        }
    }
    let x: Vec<Matrix<f64>> = (0..m)
        .map(|_| {
            let data: Vec<f64> = (0..n * dims.d_in).map(|_| draw.normal::<f64>()).collect();
            Matrix::from_vec(n, dims.d_in, data).unwrap()
        })
        .collect();
    let labels: Vec<usize> = (0..n)
        .map(|_| draw.uniform_usize(0, dims.classes - 1).unwrap())
        .collect();
    let record = forward(&x, &params).ok()?;
    let mut outliers = OutlierBatch::empty();
    let mut swap_rng = rng.fork("swaps");
    for i in 0..n {
        let rows: Vec<&[f64]> = record.emb.iter().map(|e| e.row(i)).collect();
        let outlier =
            mfs_cyclic(&rows, labels[i], dims.classes, &swap_cfg(), &mut swap_rng, None).ok()?;
        outliers.push(i, outlier);
    }
    let point = TestPoint { params, x, labels, outliers };
    margins_ok(&point, &dims).then_some(point)
}

fn collect_points(m: usize, count: usize) -> Vec<TestPoint> {
    let mut points = Vec::new();
    let mut seed = 1000 * m as u64;
    while points.len() < count {
        seed += 1;
        assert!(seed < 1000 * m as u64 + 100_000, "margin sampling stalled");
        if let Some(p) = sample_point(m, seed) {
            points.push(p);
        }
    }
    points
}

/// Relative error with an absolute floor. A central difference of an O(1)
/// loss at h = 1e-6 carries ~1e-9 of rounding noise, so entries below 1e-4
/// are compared absolutely at the 1e-4 × 1e-4 = 1e-8 threshold instead of
/// relatively.
fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(1e-4);
    (a - b).abs() / scale
}

/// Batch-mean adaptive confidence loss directly from logits, the oracle for
/// `acl_grad`.
fn acl_from_logits(fused: &Matrix<f64>, uni: &[Matrix<f64>], classes: usize) -> f64 {
    let n = fused.rows();
    let m = uni.len();
    let mut total = 0.0;
    for i in 0..n {
        let fp = softmax(fused.row(i)).unwrap();
        let conf = fp[..classes].iter().copied().fold(f64::MIN, f64::max);
        let mut sample = 0.0;
        for u in uni {
            let up = softmax(u.row(i)).unwrap();
            let conf_k = up.iter().copied().fold(f64::MIN, f64::max);
            sample += (conf_k - conf).max(0.0);
        }
        total += sample / m as f64;
    }
    total / n as f64
}

#[test]
fn acl_grad_matches_central_differences() {
    for m in [2usize, 3] {
        let points = collect_points(m, 20);
        for point in &points {
            let record = forward(&point.x, &point.params).unwrap();
            let (d_fused, d_uni) = acl_grad(&record, false);
            let classes = 3;

            let mut fused = record.fused_logits.clone();
            for r in 0..fused.rows() {
                for c in 0..fused.cols() {
                    let orig = fused.get(r, c);
                    fused.set(r, c, orig + FD_STEP);
                    let up = acl_from_logits(&fused, &record.uni_logits, classes);
                    fused.set(r, c, orig - FD_STEP);
                    let down = acl_from_logits(&fused, &record.uni_logits, classes);
                    fused.set(r, c, orig);
                    let fd = (up - down) / (2.0 * FD_STEP);
                    let err = rel_err(d_fused.get(r, c), fd);
                    assert!(
                        err <= REL_TOL,
                        "fused logit ({r},{c}): analytic {} vs fd {fd}, rel {err}",
                        d_fused.get(r, c)
                    );
                }
            }
            for k in 0..m {
                let mut uni = record.uni_logits.clone();
                for r in 0..uni[k].rows() {
                    for c in 0..uni[k].cols() {
                        let orig = uni[k].get(r, c);
                        uni[k].set(r, c, orig + FD_STEP);
                        let up = acl_from_logits(&record.fused_logits, &uni, classes);
                        uni[k].set(r, c, orig - FD_STEP);
                        let down = acl_from_logits(&record.fused_logits, &uni, classes);
                        uni[k].set(r, c, orig);
                        let fd = (up - down) / (2.0 * FD_STEP);
                        let err = rel_err(d_uni[k].get(r, c), fd);
                        assert!(
                            err <= REL_TOL,
                            "uni {k} logit ({r},{c}): analytic {} vs fd {fd}, rel {err}",
                            d_uni[k].get(r, c)
                        );
                    }
                }
            }
        }
    }
}

fn check_total_loss_gradients(point: &mut TestPoint, cfg: &LossConfig<f64>) {
    let (_, grads) =
        total_loss(&point.x, &point.labels, &point.outliers, &point.params, cfg).unwrap();
    let tensor_count = grads.tensors.len();
    for t in 0..tensor_count {
        for idx in 0..grads.tensors[t].data().len() {
            let orig = point.params.flatten()[t].data()[idx];
            point.params.flatten_mut()[t].data_mut()[idx] = orig + FD_STEP;
            let (up, _) =
                total_loss(&point.x, &point.labels, &point.outliers, &point.params, cfg)
                    .unwrap();
            point.params.flatten_mut()[t].data_mut()[idx] = orig - FD_STEP;
            let (down, _) =
                total_loss(&point.x, &point.labels, &point.outliers, &point.params, cfg)
                    .unwrap();
            point.params.flatten_mut()[t].data_mut()[idx] = orig;
            let fd = (up.total - down.total) / (2.0 * FD_STEP);
            let analytic = grads.tensors[t].data()[idx];
            let err = rel_err(analytic, fd);
            assert!(
                err <= REL_TOL,
                "tensor {t} entry {idx}: analytic {analytic} vs fd {fd}, rel {err}"
            );
        }
    }
}

#[test]
fn total_loss_gradients_match_central_differences() {
    let cfg = LossConfig { lambda_acl: 2.0, ..LossConfig::default() };
    for m in [2usize, 3] {
        for mut point in collect_points(m, 3) {
            check_total_loss_gradients(&mut point, &cfg);
        }
    }
}

#[test]
fn total_loss_gradients_with_renormalized_confidence() {
    let cfg = LossConfig {
        lambda_acl: 2.0,
        renormalize_conf: true,
        ..LossConfig::default()
    };
    for mut point in collect_points(2, 2) {
        check_total_loss_gradients(&mut point, &cfg);
    }
}

#[test]
fn hinge_boundary_takes_inactive_subgradient() {
    // Hand-built record with the unimodal confidence exactly equal to the
    // fused confidence: the hinge is treated inactive, gradient zero.
    let fused_probs = Matrix::from_vec(1, 3, vec![0.5, 0.3, 0.2]).unwrap();
    let uni_probs = Matrix::from_vec(1, 2, vec![0.5, 0.5]).unwrap();
    let record = ForwardRecord {
        emb: vec![Matrix::zeros(1, 1)],
        relu: vec![Matrix::zeros(1, 1)],
        norms: vec![vec![0.0]],
        uni_logits: vec![Matrix::zeros(1, 2)],
        uni_probs: vec![uni_probs],
        fused_logits: Matrix::zeros(1, 3),
        fused_probs,
        conf: vec![0.5],
        conf_idx: vec![0],
        conf_mass: vec![0.8],
        conf_uni: vec![vec![0.5]],
        conf_uni_idx: vec![vec![0]],
    };
    let (d_fused, d_uni) = acl_grad(&record, false);
    assert!(d_fused.data().iter().all(|&g| g == 0.0));
    assert!(d_uni[0].data().iter().all(|&g| g == 0.0));
}

#[test]
fn detached_outliers_stop_encoder_gradients() {
    let mut point = collect_points(2, 1).into_iter().next().unwrap();
    let full_cfg = LossConfig::default();
    let detach_cfg = LossConfig { detach_outliers: true, ..full_cfg };
    let no_outliers = OutlierBatch::empty();

    let (l_full, g_full) =
        total_loss(&point.x, &point.labels, &point.outliers, &point.params, &full_cfg).unwrap();
    let (l_detach, g_detach) =
        total_loss(&point.x, &point.labels, &point.outliers, &point.params, &detach_cfg)
            .unwrap();
    let (_, g_none) =
        total_loss(&point.x, &point.labels, &no_outliers, &point.params, &full_cfg).unwrap();

    // Loss values do not depend on the detach flag.
    assert_eq!(l_full.total, l_detach.total);
    // Encoder gradients under detach equal the no-outlier encoder gradients.
    let m = point.params.dims.modalities;
    for t in 0..2 * m {
        assert_eq!(g_detach.tensors[t], g_none.tensors[t], "encoder tensor {t}");
        assert_ne!(g_full.tensors[t], g_detach.tensors[t], "encoder tensor {t}");
    }
    // The fusion head still learns from outliers when detached.
    assert_eq!(g_detach.tensors[4 * m], g_full.tensors[4 * m]);
    assert_ne!(g_detach.tensors[4 * m], g_none.tensors[4 * m]);

    // And the detached run must stay numerically identical when the batch is
    // re-evaluated (pure function).
    let (l_again, _) =
        total_loss(&point.x, &point.labels, &point.outliers, &point.params, &detach_cfg)
            .unwrap();
    assert_eq!(l_detach, l_again);
    let _ = &mut point;
}
