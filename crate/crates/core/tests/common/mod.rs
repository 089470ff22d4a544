//! A miniature on-disk dataset in every supported format, for end-to-end
//! runs that finish in seconds.
#![allow(dead_code)]

use std::path::Path;

use gradmeta::data::cifar::{encode_cifar10, RgbImage32};
use gradmeta::data::idx::{encode_idx_images, encode_idx_labels};
use gradmeta::data::PIXELS;
use gradmeta::experiment::{DataPaths, ExperimentConfig, Scale};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Digit-like rasters: a bright bar whose row encodes the label.
fn digit(label: u8, rng: &mut ChaCha8Rng) -> [u8; PIXELS] {
    let mut px = [0u8; PIXELS];
    let row = 3 + 2 * usize::from(label);
    for c in 4..24 {
        px[row * 28 + c] = 255;
        px[(row + 1) * 28 + c] = 180;
    }
    for p in px.iter_mut() {
        *p = p.saturating_add(rng.random_range(0..40));
    }
    px
}

pub fn write_toy_data(root: &Path) -> DataPaths {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let paths = DataPaths::under(root);
    for dir in [&paths.digits, &paths.letters, &paths.cifar, &paths.omniglot, &paths.notmnist] {
        std::fs::create_dir_all(dir).unwrap();
    }
    for (prefix, n) in [("train", 700), ("t10k", 200)] {
        let labels: Vec<u8> = (0..n).map(|i| (i % 10) as u8).collect();
        let imgs: Vec<[u8; PIXELS]> = labels.iter().map(|&l| digit(l, &mut rng)).collect();
        std::fs::write(paths.digits.join(format!("{prefix}-images-idx3-ubyte")), encode_idx_images(&imgs)).unwrap();
        std::fs::write(paths.digits.join(format!("{prefix}-labels-idx1-ubyte")), encode_idx_labels(&labels)).unwrap();
    }
    // letters: vertical bars (stored transposed, like the real files)
    let letters: Vec<[u8; PIXELS]> = (0..120)
        .map(|i| {
            let mut px = [0u8; PIXELS];
            for r in 4..24 {
                px[r * 28 + 4 + (i % 20)] = 220;
            }
            px
        })
        .collect();
    let llabels: Vec<u8> = (0..120).map(|i| 1 + (i % 26) as u8).collect();
    std::fs::write(paths.letters.join("letters-images-idx3-ubyte"), encode_idx_images(&letters)).unwrap();
    std::fs::write(paths.letters.join("letters-labels-idx1-ubyte"), encode_idx_labels(&llabels)).unwrap();
    let cifar: Vec<RgbImage32> = (0..120)
        .map(|i| RgbImage32 {
            label: (i % 10) as u8,
            planes: (0..3072).map(|_| rng.random()).collect(),
        })
        .collect();
    std::fs::write(paths.cifar.join("data_batch_1.bin"), encode_cifar10(&cifar)).unwrap();
    for (dir, n, dark_on_light) in [(&paths.omniglot, 80, true), (&paths.notmnist, 80, false)] {
        for i in 0..n {
            let img = image::GrayImage::from_fn(35, 35, |x, y| {
                let ink = (x + y + i) % 7 == 0 || x == 10 + i % 10;
                let v = if ink { 255u8 } else { 0 };
                image::Luma([if dark_on_light { 255 - v } else { v }])
            });
            img.save(dir.join(format!("g_{i:03}.png"))).unwrap();
        }
    }
    paths
}

/// One small member, a few epochs: the whole pipeline runs in seconds.
pub fn toy_config(data: DataPaths, out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(Scale::Desk, data, out.to_path_buf());
    c.n_cnns = 2;
    c.n_meta_seeds = 1;
    c.train_size = 500;
    c.val_size = 200;
    c.test_size = 200;
    c.ood_eval_size = 60;
    c.augment_size = 10;
    c.jobs = 1;
    c.train.max_epochs = 3;
    c
}
