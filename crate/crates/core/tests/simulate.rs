use trafficscope::simulate::{simulate, HeavyTailSpec, LightTail, Model, SimConfig};

fn small(model: Model, seed: u64) -> SimConfig {
    let mut cfg = SimConfig {
        model,
        users: 12,
        bins_log2: 12,
        seed,
        ..SimConfig::default()
    };
    if model.uses_levels() {
        cfg.apply_preset("9/5").unwrap();
    }
    cfg
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[test]
fn every_model_is_deterministic_and_nonnegative() {
    for model in Model::ALL {
        let cfg = small(model, 21);
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a, b, "{model}");
        assert_eq!(a.len(), 1 << 12);
        assert!(a.values().iter().all(|v| *v >= 0.0 && v.is_finite()), "{model}");
        let other = simulate(&small(model, 22)).unwrap();
        assert_ne!(a, other, "{model}: seed has no effect");
    }
}

#[test]
fn onoff_and_level_models_are_bounded_by_user_count() {
    for model in [Model::ModelA, Model::ModelD] {
        for seed in 0..4 {
            let mut cfg = small(model, seed);
            cfg.level_rtt = false;
            let t = simulate(&cfg).unwrap();
            let max = t.values().iter().copied().fold(0.0, f64::max);
            assert!(max <= cfg.users as f64 * cfg.packet_size + 1e-9, "{model}: {max}");
        }
    }
}

#[test]
fn model_a_halves_agree() {
    let mut diffs = Vec::new();
    for seed in 0..16 {
        let cfg = SimConfig {
            model: Model::ModelA,
            users: 100,
            bins_log2: 16,
            seed,
            ..SimConfig::default()
        };
        let v = simulate(&cfg).unwrap().into_values();
        let (a, b) = v.split_at(v.len() / 2);
        diffs.push(mean(a) - mean(b));
    }
    let se = sd(&diffs) / (diffs.len() as f64).sqrt();
    assert!(mean(&diffs).abs() <= 3.0 * se, "{} vs {se}", mean(&diffs));
}

/// `E⌈Y⌉ = Σ_{k≥0} P(Y > k)` for a unit-scale Pareto tail.
fn ceil_pareto_mean(p: f64) -> f64 {
    let terms = 200_000u64;
    let head: f64 = (1..=terms).map(|k| (k as f64).powf(-p)).sum();
    let tail = (terms as f64 + 0.5).powf(1.0 - p) / (p - 1.0);
    1.0 + head + tail
}

#[test]
fn model_b_mean_rate_matches_renewal_oracle() {
    let p = 1.9;
    let (off, rtt, users) = (100.0, 4.0, 50);
    let load_mean = ceil_pareto_mean(p);
    let expected = users as f64 * load_mean / (off + load_mean * rtt);
    let means: Vec<f64> = (0..16)
        .map(|seed| {
            let cfg = SimConfig {
                model: Model::ModelB,
                users,
                bins_log2: 16,
                seed: 300 + seed,
                load: HeavyTailSpec::new(p, 1.0, true).unwrap(),
                off: LightTail::Exponential { mean: off },
                rtt: LightTail::Exponential { mean: rtt },
                ..SimConfig::default()
            };
            mean(simulate(&cfg).unwrap().values())
        })
        .collect();
    let se = sd(&means) / (means.len() as f64).sqrt();
    let got = mean(&means);
    assert!((got - expected).abs() <= 3.0 * se, "{got} vs {expected} (se {se})");
}

#[test]
fn model_d_fill_fraction() {
    // two independent exponential levels with on = off: each bin is on with
    // probability 1/4
    let mut fractions = Vec::new();
    for seed in 0..8 {
        let mut cfg = small(Model::ModelD, seed);
        cfg.users = 1;
        cfg.bins_log2 = 16;
        cfg.level_rtt = false;
        let v = simulate(&cfg).unwrap().into_values();
        fractions.push(mean(&v));
    }
    let se = sd(&fractions) / (fractions.len() as f64).sqrt();
    assert!((mean(&fractions) - 0.25).abs() <= 3.0 * se + 0.01, "{}", mean(&fractions));
}
