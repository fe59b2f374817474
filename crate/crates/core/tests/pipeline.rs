use skewfield::io::{decode_field, encode_field};
use skewfield::model::turbulence_preset;
use skewfield::stats::{ensemble_average, mean_and_se, moment_table};
use skewfield::synth::{discrete_increment_variance, discrete_variance, Synthesizer};
use skewfield::{ModelParams, Variant};

fn small(variant: Variant) -> ModelParams {
    turbulence_preset().with_variant(variant).with_grid(1 << 12).with_seed(5)
}

fn sample_variances(params: &ModelParams, replicates: u64) -> Vec<f64> {
    let synth = Synthesizer::new(params).unwrap();
    (0..replicates)
        .map(|r| {
            let u = synth.realize(r).unwrap().samples;
            u.iter().map(|v| v * v).sum::<f64>() / u.len() as f64
        })
        .collect()
}

#[test]
fn sample_variance_matches_the_exact_discrete_value() {
    for variant in [Variant::GaussianBaseline, Variant::Skewed] {
        let p = small(variant);
        let (mean, se) = mean_and_se(&sample_variances(&p, 48));
        let exact = discrete_variance(&p).unwrap();
        assert!((mean - exact).abs() < 4.0 * se, "{variant:?}: {mean} ± {se} vs {exact}");
    }
}

#[test]
fn ensemble_structure_function_matches_the_exact_discrete_value() {
    let p = small(Variant::Skewed);
    let synth = Synthesizer::new(&p).unwrap();
    let lags = [2usize, 16, 128];
    let tables: Vec<_> = (0..48)
        .map(|r| moment_table(&synth.realize(r).unwrap(), &lags, &[2.0]).unwrap())
        .collect();
    let e = ensemble_average(&tables).unwrap();
    for (row, err) in e.mean.rows.iter().zip(&e.errors) {
        let exact = discrete_increment_variance(&p, row.lag).unwrap();
        assert!((row.m2 - exact).abs() < 4.0 * err.m2, "lag {}: {} ± {} vs {exact}", row.lag, row.m2, err.m2);
    }
}

#[test]
fn realizations_survive_the_file_format() {
    let p = small(Variant::Skewed);
    let field = Synthesizer::new(&p).unwrap().realize(3).unwrap();
    let back = decode_field(&encode_field(&field)).unwrap();
    assert_eq!(back, field);
}

#[test]
fn skewed_increments_lean_negative_at_small_lags() {
    let p = small(Variant::Skewed).with_grid(1 << 14);
    let synth = Synthesizer::new(&p).unwrap();
    let tables: Vec<_> = (0..8)
        .map(|r| moment_table(&synth.realize(r).unwrap(), &[4, 16], &[2.0]).unwrap())
        .collect();
    let e = ensemble_average(&tables).unwrap();
    assert!(e.mean.rows.iter().all(|r| r.m3 < 0.0), "{:?}", e.mean.rows);
}
