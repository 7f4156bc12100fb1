use blmlab_bench::{seed_records, sentence_fixture};
use blmlab_core::generator::blm::{generate_blm_dataset, BlmOptions};
use blmlab_core::generator::generate_sentence_dataset;
use blmlab_core::nn::{Conv2d, ConvSpec};
use blmlab_core::probe::{train_sentence_vae, TrainConfig};
use blmlab_core::{Language, LanguageConfig, LexicalType};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn conv(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (h, w) = (32, 24);
    let mut layer = Conv2d::new(ConvSpec::with_channels(8), &mut rng);
    let x: Vec<f64> = (0..h * w).map(|_| rng.random_range(-1.0..1.0)).collect();
    let out = layer.forward(&x, h, w).unwrap();
    let grad: Vec<f64> = out.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    c.bench_function("conv2d forward, 8 channels", |b| {
        b.iter(|| layer.forward(black_box(&x), h, w).unwrap())
    });
    c.bench_function("conv2d backward, 8 channels", |b| {
        b.iter(|| {
            layer
                .backward(black_box(&x), h, w, black_box(&grad), true)
                .unwrap()
        })
    });
}

fn generation(c: &mut Criterion) {
    let records = seed_records(Language::En);
    let config = LanguageConfig::for_language(Language::En);
    c.bench_function("sentence triples, target 4000", |b| {
        b.iter(|| generate_sentence_dataset(black_box(&records), &config, 4000, 0).unwrap())
    });
    c.bench_function("type III instances, 2230", |b| {
        b.iter(|| {
            generate_blm_dataset(
                black_box(&records),
                LexicalType::Iii,
                2230,
                &BlmOptions::default(),
                0,
            )
            .unwrap()
        })
    });
}

fn training(c: &mut Criterion) {
    let items = sentence_fixture(200, 0.1);
    let (train, dev) = items.split_at(160);
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 32,
        channels: 8,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("training");
    group.sample_size(10);
    group.bench_function("sentence VAE epoch, 160 triples", |b| {
        b.iter(|| train_sentence_vae(black_box(train), dev, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, conv, generation, training);
criterion_main!(benches);
