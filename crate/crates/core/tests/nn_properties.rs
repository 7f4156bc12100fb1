use blmlab_core::nn::{
    cosine_similarity, maxmargin_loss, maxmargin_with_grad, Conv2d, ConvSpec, ConvTranspose2d,
    GaussianLatent, Linear,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scalar_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    ab / (aa.sqrt() * bb.sqrt())
}

fn scalar_margin(out: &[f64], pos: &[f64], negs: &[Vec<f64>], margin: f64) -> f64 {
    let p = scalar_cosine(out, pos);
    let mut total = 0.0;
    for n in negs {
        let term = margin - p + scalar_cosine(out, n);
        if term > 0.0 {
            total += term;
        }
    }
    total / negs.len() as f64
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
        .prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

fn margin_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>, f64)> {
    (2usize..12, 1usize..8).prop_flat_map(|(d, k)| {
        (
            vector(d),
            vector(d),
            prop::collection::vec(vector(d), k),
            0.0f64..2.0,
        )
    })
}

proptest! {
    #[test]
    fn margin_loss_matches_scalar_loops((out, pos, negs, margin) in margin_case()) {
        let refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let got = maxmargin_loss(&out, &pos, &refs, margin).unwrap();
        let want = scalar_margin(&out, &pos, &negs, margin);
        prop_assert!((got - want).abs() < 1e-12, "{} vs {}", got, want);
        prop_assert!(got >= 0.0);
        let with_grad = maxmargin_with_grad(&out, &pos, &refs, margin).unwrap();
        prop_assert!((with_grad.loss - got).abs() < 1e-15);
    }

    #[test]
    fn margin_loss_is_zero_iff_every_hinge_closes((out, pos, negs, margin) in margin_case()) {
        let refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let loss = maxmargin_loss(&out, &pos, &refs, margin).unwrap();
        let p = scalar_cosine(&out, &pos);
        let closed = negs.iter().all(|n| margin - p + scalar_cosine(&out, n) <= 0.0);
        prop_assert_eq!(loss == 0.0, closed);
    }

    #[test]
    fn cosine_is_bounded_and_scale_free(a in vector(9), b in vector(9), s in 0.01f64..100.0) {
        let c = cosine_similarity(&a, &b).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&c));
        let scaled: Vec<f64> = b.iter().map(|x| x * s).collect();
        prop_assert!((cosine_similarity(&a, &scaled).unwrap() - c).abs() < 1e-12);
        prop_assert!((c - scalar_cosine(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn kl_is_non_negative(mu in prop::collection::vec(-5.0f64..5.0, 1..8), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lv: Vec<f64> = mu.iter().map(|_| rand::Rng::random_range(&mut rng, -8.0..8.0)).collect();
        let (latent, _) = GaussianLatent::from_raw(mu.clone(), &lv).unwrap();
        let kl = latent.kl();
        let closed: f64 = mu.iter().zip(&lv).map(|(m, l)| -0.5 * (1.0 + l - m * m - l.exp())).sum();
        prop_assert!(kl >= 0.0);
        prop_assert!((kl - closed).abs() <= 1e-9 * closed.abs().max(1.0));
    }

    #[test]
    fn kl_vanishes_only_at_the_prior(dim in 1usize..8, k in 0usize..8, bump in prop_oneof![-1.0f64..-1e-3, 1e-3f64..1.0], on_mu in any::<bool>()) {
        let zero = vec![0.0; dim];
        let (prior, _) = GaussianLatent::from_raw(zero.clone(), &zero).unwrap();
        prop_assert_eq!(prior.kl(), 0.0);
        let mut mu = zero.clone();
        let mut lv = zero;
        if on_mu { mu[k % dim] = bump } else { lv[k % dim] = bump }
        let (moved, _) = GaussianLatent::from_raw(mu, &lv).unwrap();
        prop_assert!(moved.kl() > 0.0);
    }
}

fn naive_conv(
    x: &[f64],
    h: usize,
    w: usize,
    c: usize,
    kh: usize,
    kw: usize,
    k: &[f64],
    b: &[f64],
) -> Vec<f64> {
    let (oh, ow) = (h - kh + 1, w - kw + 1);
    let mut out = vec![0.0; c * oh * ow];
    for ch in 0..c {
        for i in 0..oh {
            for j in 0..ow {
                let mut s = b[ch];
                for a in 0..kh {
                    for bb in 0..kw {
                        s += x[(i + a) * w + j + bb] * k[(ch * kh + a) * kw + bb];
                    }
                }
                out[(ch * oh + i) * ow + j] = s;
            }
        }
    }
    out
}

fn naive_deconv(
    x: &[f64],
    h: usize,
    w: usize,
    c: usize,
    kh: usize,
    kw: usize,
    k: &[f64],
    b: f64,
) -> Vec<f64> {
    let (oh, ow) = (h - kh + 1, w - kw + 1);
    let mut out = vec![b; h * w];
    for ch in 0..c {
        for i in 0..oh {
            for j in 0..ow {
                for a in 0..kh {
                    for bb in 0..kw {
                        out[(i + a) * w + j + bb] +=
                            x[(ch * oh + i) * ow + j] * k[(ch * kh + a) * kw + bb];
                    }
                }
            }
        }
    }
    out
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn layers_match_nested_loops_on_five_seeds() {
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = ConvSpec::with_channels(3);
        let (h, w) = (32, 24);
        let conv = Conv2d::new(spec, &mut rng);
        let x: Vec<f64> = (0..h * w)
            .map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0))
            .collect();
        let got = conv.forward(&x, h, w).unwrap();
        let want = naive_conv(
            &x,
            h,
            w,
            3,
            15,
            15,
            conv.weight.value.data(),
            conv.bias.value.data(),
        );
        assert!(close(&got, &want, 1e-10), "conv seed {seed}");

        let deconv = ConvTranspose2d::new(spec, &mut rng);
        let got = deconv.forward(&want, h, w).unwrap();
        let expect = naive_deconv(
            &want,
            h,
            w,
            3,
            15,
            15,
            deconv.weight.value.data(),
            deconv.bias.value.data()[0],
        );
        assert!(close(&got, &expect, 1e-10), "deconv seed {seed}");

        let lin = Linear::new(17, 5, &mut rng);
        let v: Vec<f64> = (0..17)
            .map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0))
            .collect();
        let wd = lin.weight.value.data();
        let want: Vec<f64> = (0..5)
            .map(|o| lin.bias.value.data()[o] + (0..17).map(|i| v[i] * wd[i * 5 + o]).sum::<f64>())
            .collect();
        assert!(
            close(&lin.forward(&v).unwrap(), &want, 1e-10),
            "linear seed {seed}"
        );
    }
}
