use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qsuggest_core::embeddings::{
    cbow_gradient, cosine, train_cbow, train_cbow_with_report, CbowConfig, EmbeddingModel,
};

/// Independent loss: mean context vector, then -ln σ(h·o_t) - Σ ln σ(-h·o_n).
fn reference_loss(input: &[f64], output: &[f64], dim: usize, ctx: &[u32], target: u32, negs: &[u32]) -> f64 {
    let mut h = vec![0.0; dim];
    for &c in ctx {
        for k in 0..dim {
            h[k] += input[c as usize * dim + k];
        }
    }
    for v in &mut h {
        *v /= ctx.len() as f64;
    }
    let dot = |w: u32| (0..dim).map(|k| h[k] * output[w as usize * dim + k]).sum::<f64>();
    let log_sigmoid = |x: f64| -(1.0 + (-x).exp()).ln();
    -log_sigmoid(dot(target)) - negs.iter().map(|&n| log_sigmoid(-dot(n))).sum::<f64>()
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let (vocab, dim) = (7, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (ctx, target, negs) in [
        (vec![0u32, 1, 2], 3u32, vec![4u32, 5]),
        (vec![0, 1, 0], 6, vec![2, 3, 4]),
        (vec![5], 0, vec![]),
    ] {
        let input: Vec<f64> = (0..vocab * dim).map(|_| rng.random_range(-0.8..0.8)).collect();
        let output: Vec<f64> = (0..vocab * dim).map(|_| rng.random_range(-0.8..0.8)).collect();
        let grad = cbow_gradient(&input, &output, dim, &ctx, target, &negs);
        let base = reference_loss(&input, &output, dim, &ctx, target, &negs);
        assert!((grad.loss - base).abs() < 1e-12);

        let eps = 1e-6;
        let check = |analytic: f64, numeric: f64, what: &str| {
            let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8);
            assert!(
                rel < 1e-4 || (analytic - numeric).abs() < 1e-10,
                "{what}: analytic {analytic} numeric {numeric} rel {rel}"
            );
        };
        for i in 0..input.len() {
            let mut p = input.clone();
            p[i] += eps;
            let up = reference_loss(&p, &output, dim, &ctx, target, &negs);
            p[i] -= 2.0 * eps;
            let down = reference_loss(&p, &output, dim, &ctx, target, &negs);
            check(grad.input[i], (up - down) / (2.0 * eps), &format!("input[{i}]"));
        }
        for i in 0..output.len() {
            let mut p = output.clone();
            p[i] += eps;
            let up = reference_loss(&input, &p, dim, &ctx, target, &negs);
            p[i] -= 2.0 * eps;
            let down = reference_loss(&input, &p, dim, &ctx, target, &negs);
            check(grad.output[i], (up - down) / (2.0 * eps), &format!("output[{i}]"));
        }
    }
}

fn tokens(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

#[test]
fn epoch_loss_trends_down() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let corpus: Vec<Vec<String>> = (0..300)
        .map(|_| {
            let base = if rng.random_bool(0.5) { 0 } else { 10 };
            (0..6).map(|_| format!("w{}", base + rng.random_range(0..10))).collect()
        })
        .collect();
    let cfg = CbowConfig { dim: 20, epochs: 8, min_count: 1, ..Default::default() };
    let (_, report) = train_cbow_with_report(&corpus, &cfg).unwrap();
    assert_eq!(report.epoch_losses.len(), 8);
    assert!(report.epoch_losses.last().unwrap() < report.epoch_losses.first().unwrap());
}

fn vec64(model: &EmbeddingModel, token: &str) -> Vec<f64> {
    model.word_vector(token).unwrap().iter().map(|&v| f64::from(v)).collect()
}

// Input vectors of CBOW capture shared contexts rather than direct
// co-occurrence; "a" and "b" never share a context here, so this ordering
// does not emerge. Kept runnable with `--ignored`.
#[test]
#[ignore = "direct co-occurrence ordering does not hold for CBOW input vectors"]
fn co_occurring_pair_is_closer_than_disjoint_token() {
    let mut corpus = Vec::new();
    for _ in 0..200 {
        corpus.push(tokens(&["a", "b"]));
        corpus.push(tokens(&["c", "d"]));
    }
    let cfg = CbowConfig { dim: 8, window: 1, epochs: 50, min_count: 1, ..Default::default() };
    let model = train_cbow(&corpus, &cfg).unwrap();
    let ab = cosine(&vec64(&model, "a"), &vec64(&model, "b")).unwrap();
    let ac = cosine(&vec64(&model, "a"), &vec64(&model, "c")).unwrap();
    assert!(ab > ac, "cos(a,b)={ab} cos(a,c)={ac}");
}
