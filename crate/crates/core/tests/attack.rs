use pixelcrypt::attack::{
    self, backward, construct_inversion_network, forward, init_network, loss_mse, reconstruct, sgd_step, ArchConfig,
    Gradients, LrScaling, TrainConfig,
};
use pixelcrypt::cipher::{encrypt, EncryptionConfig};
use pixelcrypt::keygen::{derive_keystream, MasterKey, SplitMix64};
use pixelcrypt::synth::synthetic_images;
use pixelcrypt::Image;

mod common;
use common::{central_differences, max_relative_error, random_image, random_network};

#[test]
fn gradient_matches_finite_differences_on_2x2() {
    let arch = ArchConfig::new(4, 5, 3).unwrap();
    let mut rng = SplitMix64::new(99);
    let net = random_network(&mut rng, 2, 2, arch);
    let input = random_image(&mut rng, 2, 2);
    let target = random_image(&mut rng, 2, 2);
    let cache = forward(&net, &input).unwrap();
    let grads = backward(&net, &cache, &target).unwrap();
    let numeric = central_differences(&net, &input, &target, 1e-4);
    let err = max_relative_error(grads.values(), &numeric);
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn gradient_matches_finite_differences_at_init() {
    // fresh init has zero biases; only check pixels whose units all sit off the kink
    let arch = ArchConfig::new(4, 5, 3).unwrap();
    let mut rng = SplitMix64::new(123);
    let net = init_network(3, 3, arch, 8).unwrap();
    let input = Image::from_fn(3, 3, |_, _| {
        [1 + rng.next_below(255) as u8, 1 + rng.next_below(255) as u8, 1 + rng.next_below(255) as u8]
    })
    .unwrap();
    let target = random_image(&mut rng, 3, 3);
    let grads = backward(&net, &forward(&net, &input).unwrap(), &target).unwrap();
    let numeric = central_differences(&net, &input, &target, 1e-4);
    let per = arch.params_per_pixel();
    let mut checked = 0;
    for j in 0..9 {
        let w1 = &net.pixel_params(j)[..12];
        let x = input.pixel(j).map(|v| v as f64 / 255.0);
        let active = (0..4).any(|k| (0..3).map(|c| w1[3 * k + c] * x[c]).sum::<f64>() > 1e-3);
        if active {
            let range = j * per..(j + 1) * per;
            assert!(max_relative_error(&grads.values()[range.clone()], &numeric[range]) < 1e-4);
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn gradient_vanishes_at_perfect_prediction() {
    let img = synthetic_images(4, 0, 1, 12).unwrap().remove(0);
    let ks = derive_keystream(MasterKey::new(8), 0, 12, 12).unwrap();
    let cfg = EncryptionConfig::with_shuffle();
    let enc = encrypt(&img, &ks, cfg).unwrap();
    let net = construct_inversion_network(12, 12, ArchConfig::reference(), &ks, cfg).unwrap();
    let cache = forward(&net, &enc).unwrap();
    assert!(loss_mse(cache.output(), &img).unwrap() < 1e-24);
    let grads = backward(&net, &cache, &img).unwrap();
    assert!(grads.values().iter().all(|g| g.abs() < 1e-12));
}

#[test]
fn pixel_gradient_depends_only_on_its_own_pixel() {
    let arch = ArchConfig::new(4, 5, 3).unwrap();
    let mut rng = SplitMix64::new(5);
    let net = init_network(3, 2, arch, 1).unwrap();
    let input = random_image(&mut rng, 3, 2);
    let target = random_image(&mut rng, 3, 2);
    let base = backward(&net, &forward(&net, &input).unwrap(), &target).unwrap();
    let mut input2 = input.clone();
    let mut target2 = target.clone();
    input2.set_pixel(4, [1, 2, 3]);
    target2.set_pixel(4, [200, 100, 0]);
    let changed = backward(&net, &forward(&net, &input2).unwrap(), &target2).unwrap();
    for j in 0..6 {
        if j == 4 {
            assert_ne!(base.pixel(j), changed.pixel(j));
        } else {
            assert_eq!(base.pixel(j), changed.pixel(j));
        }
    }
}

#[test]
fn training_matches_manual_forward_backward_steps() {
    // train() uses fused per-pixel kernels; replay it with the public API.
    let arch = ArchConfig::new(4, 5, 3).unwrap();
    let imgs = synthetic_images(2, 0, 7, 4).unwrap();
    let ks = derive_keystream(MasterKey::new(1), 0, 4, 4).unwrap();
    let pairs: Vec<(Image, Image)> =
        imgs.iter().map(|p| (encrypt(p, &ks, EncryptionConfig::negpos_only()).unwrap(), p.clone())).collect();
    let cfg = TrainConfig { epochs: 2, batch_size: 3, lr_drop_epochs: vec![1], ..TrainConfig::reference() };

    let net = init_network(4, 4, arch, 9).unwrap();
    let mut manual = net.clone();
    let (trained, history) = attack::train(net, &pairs, &cfg).unwrap();

    let mut manual_history = Vec::new();
    for epoch in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        for batch in attack::epoch_order(&cfg, epoch, pairs.len()).chunks(cfg.batch_size) {
            let mut batch = batch.to_vec();
            batch.sort_unstable();
            let grads: Vec<Gradients> = batch
                .iter()
                .map(|&i| {
                    let cache = forward(&manual, &pairs[i].0).unwrap();
                    loss_sum += loss_mse(cache.output(), &pairs[i].1).unwrap();
                    backward(&manual, &cache, &pairs[i].1).unwrap()
                })
                .collect();
            let mean = Gradients::mean(&grads).unwrap();
            sgd_step(&mut manual, &mean, attack::lr_at_epoch(epoch, &cfg), &cfg).unwrap();
        }
        manual_history.push(loss_sum / pairs.len() as f64);
    }
    for (a, b) in trained.params().iter().zip(manual.params()) {
        assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0), "{a} vs {b}");
    }
    for (a, b) in history.iter().zip(&manual_history) {
        assert!((a - b).abs() <= 1e-12 * a.abs(), "{a} vs {b}");
    }
}

fn convergence_config(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        base_lr: 0.01,
        lr_drop_epochs: vec![],
        lr_drop_factor: 0.1,
        momentum: 0.9,
        weight_decay: 0.0005,
        batch_size: 1,
        seed: 3,
        lr_scaling: LrScaling::PerPixel,
    }
}

#[test]
fn same_key_training_converges_on_8x8() {
    let plain = synthetic_images(11, 0, 50, 8).unwrap();
    let ks = derive_keystream(MasterKey::new(21), 0, 8, 8).unwrap();
    let pairs: Vec<(Image, Image)> =
        plain.iter().map(|p| (encrypt(p, &ks, EncryptionConfig::negpos_only()).unwrap(), p.clone())).collect();
    let cfg = convergence_config(20);
    let arch = ArchConfig::new(32, 32, 3).unwrap();
    let net = init_network(8, 8, arch, 5).unwrap();
    let (trained, history) = attack::train(net, &pairs, &cfg).unwrap();
    assert_eq!(history.len(), 20);
    let last = *history.last().unwrap();
    assert!(last < 1e-3, "final loss {last}");
    assert!(last < 0.1 * history[0], "history {history:?}");

    let again = attack::train(init_network(8, 8, arch, 5).unwrap(), &pairs, &cfg).unwrap();
    assert_eq!(again.0.params(), trained.params());
    assert_eq!(again.1, history);
}

#[test]
fn training_is_independent_of_thread_count() {
    let plain = synthetic_images(12, 0, 20, 6).unwrap();
    let ks = derive_keystream(MasterKey::new(2), 0, 6, 6).unwrap();
    let pairs: Vec<(Image, Image)> =
        plain.iter().map(|p| (encrypt(p, &ks, EncryptionConfig::with_shuffle()).unwrap(), p.clone())).collect();
    let cfg = TrainConfig { epochs: 3, batch_size: 4, lr_drop_epochs: vec![2], ..convergence_config(3) };
    let run =
        |threads: usize| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                attack::train(init_network(6, 6, ArchConfig::reference(), 1).unwrap(), &pairs, &cfg).unwrap()
            })
        };
    let (a, ha) = run(1);
    let (b, hb) = run(3);
    assert_eq!(a.params(), b.params());
    assert_eq!(ha, hb);
}

#[test]
fn inversion_network_reconstructs_exactly() {
    let plain = synthetic_images(13, 0, 5, 10).unwrap();
    for (cfg, seed) in [(EncryptionConfig::negpos_only(), 1u64), (EncryptionConfig::with_shuffle(), 2)] {
        let ks = derive_keystream(MasterKey::new(seed), 0, 10, 10).unwrap();
        let net = construct_inversion_network(10, 10, ArchConfig::reference(), &ks, cfg).unwrap();
        for p in &plain {
            let enc = encrypt(p, &ks, cfg).unwrap();
            assert_eq!(&reconstruct(&net, &enc).unwrap(), p);
        }
    }
    let ks = derive_keystream(MasterKey::new(1), 0, 10, 10).unwrap();
    assert!(construct_inversion_network(
        10,
        10,
        ArchConfig::new(5, 32, 3).unwrap(),
        &ks,
        EncryptionConfig::negpos_only()
    )
    .is_err());
}

#[test]
fn network_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.bin");
    let net = init_network(5, 4, ArchConfig::reference(), 77).unwrap();
    attack::save_network(&net, &path).unwrap();
    let loaded = attack::load_network(&path).unwrap();
    assert_eq!(loaded.params(), net.params());
    assert_eq!((loaded.width(), loaded.height(), loaded.arch()), (5, 4, ArchConfig::reference()));
}
