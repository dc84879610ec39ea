// scratch: decompose R2 loss for the weakest city
use nexuscast::ingest::StudyPeriod;
use nexuscast::mvtb::Hyperparams;
use nexuscast::pipeline::prepare::*;
use nexuscast::pipeline::*;
use nexuscast::preprocess::{PreprocessOptions, TrainingTable};
use nexuscast::rng::SplitMix64;
use nexuscast::synth::{generate, SynthConfig};

fn main() {
    let config = SynthConfig::default();
    let (bundle, truth) = generate(&config);
    let period = StudyPeriod { start_year: config.start_year, end_year: config.end_year };
    let opts = PrepareOptions {
        period,
        summer_months: config.summer_months.clone(),
        preprocess: PreprocessOptions::default(),
        min_training_rows: 24,
    };
    let hyper = Hyperparams::default();

    for city in ["syn03", "syn05", "syn00"] {
        let region = &truth.city_region[city];
        let (water_resp, elec_resp) = &truth.responses[region];
        let table = city_training_table(&bundle, city, &opts).unwrap();
        // truth features for the same keys
        let days = bundle.climate_for(city);
        let feats = nexuscast::preprocess::monthly_feature_table(&days, city, &opts.preprocess);
        let by_key: std::collections::BTreeMap<(i32, u32), _> =
            feats.iter().map(|r| ((r.year, r.month), r)).collect();
        let g_w: Vec<f64> = table.keys.iter().map(|k| water_resp.eval(by_key[k])).collect();
        let g_e: Vec<f64> = table.keys.iter().map(|k| elec_resp.eval(by_key[k])).collect();

        // (1) current pipeline CV
        let m = cross_validate_city(&table, &hyper, 5, 42).unwrap();
        // (2) noiseless truth-target CV
        let mut t2 = table.clone();
        for (i, o) in t2.outcomes.iter_mut().enumerate() {
            o[0] = g_w[i];
            o[1] = g_e[i];
        }
        let m2 = cross_validate_city(&t2, &hyper, 5, 42).unwrap();
        // (3) noisy truth-target CV (no detrend path)
        let mut rng = SplitMix64::new(9);
        let mut t3 = table.clone();
        for (i, o) in t3.outcomes.iter_mut().enumerate() {
            o[0] = g_w[i] * (1.0 + 0.05 * rng.next_gaussian());
            o[1] = g_e[i] * (1.0 + 0.05 * rng.next_gaussian());
        }
        let m3 = cross_validate_city(&t3, &hyper, 5, 42).unwrap();
        // (4) how far are pipeline targets from scaled truth?
        let mean_t: f64 = table.outcomes.iter().map(|o| o[0]).sum::<f64>() / 48.0;
        let mean_g: f64 = g_w.iter().sum::<f64>() / 48.0;
        let resid: Vec<f64> = table
            .outcomes
            .iter()
            .zip(&g_w)
            .map(|(o, g)| o[0] / mean_t - g / mean_g)
            .collect();
        let rms = (resid.iter().map(|r| r * r).sum::<f64>() / 48.0).sqrt();
        println!(
            "{city} ({region}): pipelineR2 w={:.3} e={:.3} | truth-clean w={:.3} e={:.3} | truth-noisy w={:.3} e={:.3} | target-vs-g rel rms {:.4}",
            m.outcomes[0].pooled_r2, m.outcomes[1].pooled_r2,
            m2.outcomes[0].pooled_r2, m2.outcomes[1].pooled_r2,
            m3.outcomes[0].pooled_r2, m3.outcomes[1].pooled_r2,
            rms
        );
        let _ = &table as &TrainingTable;
    }
}
