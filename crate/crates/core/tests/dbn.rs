use lfcodec::dbn::rbm::{partition_function_bruteforce, train_rbm, RbmParams, RbmTraining, Side};
use lfcodec::dbn::{finetune, pretrain_stack, unroll, Autoencoder, DbnConfig, Dense, FinetuneConfig};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bits(x: usize, len: usize) -> Vec<f64> {
    (0..len).map(|i| ((x >> i) & 1) as f64).collect()
}

// Energy written out term by term, independent of the library.
fn energy(p: &RbmParams, v: &[f64], h: &[f64]) -> f64 {
    let mut e = 0.0;
    for i in 0..h.len() {
        for j in 0..v.len() {
            e -= p.w[[i, j]] * h[i] * v[j];
        }
        e -= p.c[i] * h[i];
    }
    for j in 0..v.len() {
        e -= p.b[j] * v[j];
    }
    e
}

fn random_rbm(rng: &mut ChaCha8Rng, n: usize, m: usize) -> RbmParams {
    let w = Array2::from_shape_fn((m, n), |_| rng.random_range(-1.5..1.5));
    let b = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
    let c = Array1::from_shape_fn(m, |_| rng.random_range(-1.0..1.0));
    RbmParams::new(w, b, c).unwrap()
}

#[test]
fn joint_distribution_sums_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let n = rng.random_range(1..8);
        let m = rng.random_range(1..=12 - n);
        let p = random_rbm(&mut rng, n, m);
        let z = partition_function_bruteforce(&p).unwrap();
        let mut total = 0.0;
        for vi in 0..1 << n {
            for hi in 0..1 << m {
                total += (-energy(&p, &bits(vi, n), &bits(hi, m))).exp() / z;
            }
        }
        assert!((total - 1.0).abs() < 1e-9, "sum {total}");
    }
}

#[test]
fn example_energy_matches_oracle_and_normalizes() {
    let p = RbmParams::new(ndarray::array![[0.5, -0.25]], ndarray::array![0.1, 0.2], ndarray::array![-0.3]).unwrap();
    let z = partition_function_bruteforce(&p).unwrap();
    let mut total = 0.0;
    for vi in 0..4 {
        for hi in 0..2 {
            let (v, h) = (bits(vi, 2), bits(hi, 1));
            assert!((p.energy(&v, &h).unwrap() - energy(&p, &v, &h)).abs() < 1e-15);
            total += (-p.energy(&v, &h).unwrap()).exp();
        }
    }
    assert!((total / z - 1.0).abs() < 1e-12);
}

#[test]
fn constant_energy_shift_scales_partition_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = random_rbm(&mut rng, 3, 2);
    let z = partition_function_bruteforce(&p).unwrap();
    let delta = 0.7;
    let mut shifted = 0.0;
    for vi in 0..8 {
        for hi in 0..4 {
            shifted += (-(energy(&p, &bits(vi, 3), &bits(hi, 2)) + delta)).exp();
        }
    }
    assert!((shifted - z * (-delta).exp()).abs() < 1e-12 * shifted);
}

#[test]
fn conditionals_match_joint_ratios() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let (n, m) = (rng.random_range(1..7), rng.random_range(1..6));
        let p = random_rbm(&mut rng, n, m);
        for vi in 0..1 << n {
            let v = bits(vi, n);
            let probs = p.conditional(Side::Hidden, &v).unwrap();
            for i in 0..m {
                let (mut on, mut all) = (0.0, 0.0);
                for hi in 0..1 << m {
                    let h = bits(hi, m);
                    let weight = (-energy(&p, &v, &h)).exp();
                    all += weight;
                    if h[i] == 1.0 {
                        on += weight;
                    }
                }
                assert!((probs[i] - on / all).abs() < 1e-10);
            }
        }
        for hi in 0..1 << m {
            let h = bits(hi, m);
            let probs = p.conditional(Side::Visible, &h).unwrap();
            for j in 0..n {
                let (mut on, mut all) = (0.0, 0.0);
                for vi in 0..1 << n {
                    let v = bits(vi, n);
                    let weight = (-energy(&p, &v, &h)).exp();
                    all += weight;
                    if v[j] == 1.0 {
                        on += weight;
                    }
                }
                assert!((probs[j] - on / all).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn positive_phase_matches_free_energy_derivative() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let p = random_rbm(&mut rng, 4, 3);
    let v = [1.0, 0.0, 1.0, 1.0];
    let h = p.conditional(Side::Hidden, &v).unwrap();
    let step = 1e-5;
    for i in 0..3 {
        for j in 0..4 {
            let mut plus = p.clone();
            plus.w[[i, j]] += step;
            let mut minus = p.clone();
            minus.w[[i, j]] -= step;
            let fd = -(plus.free_energy(&v).unwrap() - minus.free_energy(&v).unwrap()) / (2.0 * step);
            assert!((fd - h[i] * v[j]).abs() < 1e-6, "{fd} vs {}", h[i] * v[j]);
        }
    }
}

#[test]
fn two_pattern_cd_halves_cross_entropy() {
    let data = ndarray::array![[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]];
    let mut p = RbmParams::random(4, 2, 3);
    let cfg = RbmTraining {
        epochs: 200,
        batch_size: 2,
        learning_rate: 0.1,
        momentum: 0.5,
        cd_steps: 1,
        seed: 17,
    };
    let history = train_rbm(&mut p, data.view(), &cfg).unwrap();
    let last = *history.last().unwrap();
    assert!(last <= 0.5 * history[0], "{} -> {last}", history[0]);
}

#[test]
fn constant_data_beats_untrained_reconstruction() {
    let data = Array2::from_elem((32, 16), 0.8);
    let cfg = DbnConfig {
        sizes: vec![8, 12, 6, 3],
        patch: 4,
        pretrain_epochs: 20,
        batch_size: 8,
        ..DbnConfig::default()
    };
    let trained = pretrain_stack(data.view(), &cfg).unwrap();
    let untrained = RbmParams::random(16, 8, cfg.seed);
    assert!(trained[0].reconstruction_mse(data.view()) < untrained.reconstruction_mse(data.view()));
}

fn toy_net(seed: u64) -> Autoencoder {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = [4, 8, 2, 8, 4];
    let layers = sizes
        .windows(2)
        .map(|p| Dense {
            weights: Array2::from_shape_fn((p[1], p[0]), |_| rng.random_range(-1.0..1.0)),
            bias: Array1::from_shape_fn(p[1], |_| rng.random_range(-0.5..0.5)),
        })
        .collect();
    Autoencoder::new(layers).unwrap()
}

fn loss_of(ae: &Autoencoder, data: &Array2<f64>) -> f64 {
    ae.loss_and_gradients(data.view()).0
}

#[test]
fn backprop_matches_central_differences() {
    let ae = toy_net(5);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let data = Array2::from_shape_fn((5, 4), |_| rng.random::<f64>());
    let (_, grads) = ae.loss_and_gradients(data.view());
    let step = 1e-4;
    let mut worst: f64 = 0.0;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-7);
    for li in 0..ae.layers().len() {
        let (rows, cols) = ae.layers()[li].weights.dim();
        for r in 0..rows {
            for c in 0..cols {
                let mut layers = ae.layers().to_vec();
                layers[li].weights[[r, c]] += step;
                let plus = loss_of(&Autoencoder::new(layers.clone()).unwrap(), &data);
                layers[li].weights[[r, c]] -= 2.0 * step;
                let minus = loss_of(&Autoencoder::new(layers).unwrap(), &data);
                worst = worst.max(rel(grads.weights[li][[r, c]], (plus - minus) / (2.0 * step)));
            }
            let mut layers = ae.layers().to_vec();
            layers[li].bias[r] += step;
            let plus = loss_of(&Autoencoder::new(layers.clone()).unwrap(), &data);
            layers[li].bias[r] -= 2.0 * step;
            let minus = loss_of(&Autoencoder::new(layers).unwrap(), &data);
            worst = worst.max(rel(grads.bias[li][r], (plus - minus) / (2.0 * step)));
        }
    }
    assert!(worst <= 1e-4, "max relative error {worst}");
}

fn synthetic_patches(count: usize, side: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Array2::zeros((count, side * side));
    for mut row in out.rows_mut() {
        let (fx, fy, phase) = (rng.random_range(0.2..1.2), rng.random_range(0.2..1.2), rng.random_range(0.0..6.3));
        for (i, x) in row.iter_mut().enumerate() {
            let (u, v) = ((i % side) as f64, (i / side) as f64);
            *x = 0.5 + 0.45 * (fx * u + fy * v + phase).sin();
        }
    }
    out
}

#[test]
fn finetuning_improves_on_pretrained_network() {
    let data = synthetic_patches(64, 4, 31);
    let cfg = DbnConfig {
        sizes: vec![12, 16, 8, 4],
        patch: 4,
        pretrain_epochs: 10,
        finetune_epochs: 20,
        batch_size: 8,
        ..DbnConfig::default()
    };
    let stack = pretrain_stack(data.view(), &cfg).unwrap();
    let pretrained = unroll(&stack).unwrap();
    let (tuned, history) = finetune(&pretrained, data.view(), &cfg.finetune_config()).unwrap();
    assert_eq!(history.len(), 21);
    assert!(tuned.mse(data.view()) < pretrained.mse(data.view()));

    let patch = data.row(0).to_vec();
    let err = |ae: &Autoencoder| {
        let y = ae.decode_one(&ae.encode_one(&patch).unwrap()).unwrap();
        y.iter().zip(&patch).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
    };
    let untrained = unroll(
        &[16, 12, 16, 8, 4]
            .windows(2)
            .enumerate()
            .map(|(i, p)| RbmParams::random(p[0], p[1], 99 + i as u64))
            .collect::<Vec<_>>(),
    )
    .unwrap();
    assert!(err(&tuned) < err(&untrained));
}

#[test]
fn finetune_never_returns_worse_network() {
    let data = synthetic_patches(16, 2, 3);
    let ae = unroll(&[RbmParams::random(4, 3, 1), RbmParams::random(3, 2, 2)]).unwrap();
    let cfg = FinetuneConfig {
        epochs: 5,
        batch_size: 4,
        learning_rate: 1e3,
        momentum: 0.9,
        seed: 0,
    };
    let (tuned, _) = finetune(&ae, data.view(), &cfg).unwrap();
    assert!(tuned.mse(data.view()) <= ae.mse(data.view()));
}
