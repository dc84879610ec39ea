// scratch: tune generator so CV R2, influence leak, and pct-change error land
use nexuscast::ingest::{validate_bundle, CoverageThresholds, Scenario, StudyPeriod};
use nexuscast::mvtb::{fit, Hyperparams};
use nexuscast::pipeline::prepare::*;
use nexuscast::pipeline::*;
use nexuscast::preprocess::PreprocessOptions;
use nexuscast::synth::{generate, SynthConfig};

fn main() {
    let t0 = std::time::Instant::now();
    let config = SynthConfig::default();
    let (bundle, truth) = generate(&config);
    println!("generate: {:?}", t0.elapsed());

    let period = StudyPeriod { start_year: config.start_year, end_year: config.end_year };
    let report = validate_bundle(&bundle, period, &config.summer_months, CoverageThresholds::default());
    println!("excluded: {:?}", report.excluded_cities());

    let opts = PrepareOptions {
        period,
        summer_months: config.summer_months.clone(),
        preprocess: PreprocessOptions::default(),
        min_training_rows: 24,
    };
    let hyper = Hyperparams::default();
    let selection = SelectionConfig::default();

    // regional selection
    let usable: Vec<String> = report.usable_cities().iter().map(|s| s.to_string()).collect();
    let regions = cities_by_region(&bundle, &usable);
    let mut tables = std::collections::BTreeMap::new();
    for city in &usable {
        tables.insert(city.clone(), city_training_table(&bundle, city, &opts).unwrap());
    }
    for (region, cities) in &regions {
        let refs: Vec<&nexuscast::preprocess::TrainingTable> = cities.iter().map(|c| &tables[c]).collect();
        let sel = select_regional_variables(region, &refs, &hyper, &selection).unwrap();
        println!("region {region}: selected {:?} (truth {:?})", sel.features, truth.region_features[region]);
        // influence leak at the regional level (full 17 features)
        let mut rows = Vec::new();
        let mut ys: Vec<Vec<f64>> = vec![Vec::new(); 2];
        for c in cities {
            let t = &tables[c];
            rows.extend(t.rows.iter().cloned());
            for k in 0..2 { ys[k].extend(t.outcomes.iter().map(|o| o[k])); }
        }
        let names = tables[&cities[0]].feature_names.clone();
        let onames: Vec<String> = OUTCOME_NAMES.iter().map(|s| s.to_string()).collect();
        let model = fit(&names, &rows, &ys, &onames, &hyper).unwrap();
        let infl = model.relative_influence();
        let mut worst: (String, String, f64) = (String::new(), String::new(), 0.0);
        for (k, out) in infl.outcomes.iter().enumerate() {
            for (f, feat) in infl.features.iter().enumerate() {
                if !truth.region_features[region].contains(feat) && infl.pct[k][f] > worst.2 {
                    worst = (feat.clone(), out.clone(), infl.pct[k][f]);
                }
            }
        }
        println!("  worst absent-feature influence: {} {} {:.2}%", worst.0, worst.1, worst.2);
    }

    // CV per city with regional feature sets
    let t1 = std::time::Instant::now();
    for (region, cities) in &regions {
        let refs: Vec<&nexuscast::preprocess::TrainingTable> = cities.iter().map(|c| &tables[c]).collect();
        let sel = select_regional_variables(region, &refs, &hyper, &selection).unwrap();
        for city in cities {
            let restricted = tables[city].restrict_features(&sel.features).unwrap();
            let metrics = cross_validate_city(&restricted, &hyper, 5, 42).unwrap();
            let r2s: Vec<f64> = metrics.outcomes.iter().map(|o| o.pooled_r2).collect();
            println!("  {city}: pooled R2 water {:.3} elec {:.3}", r2s[0], r2s[1]);
        }
    }
    println!("cv: {:?}", t1.elapsed());

    // projection vs ground truth
    for (region, cities) in &regions {
        let refs: Vec<&nexuscast::preprocess::TrainingTable> = cities.iter().map(|c| &tables[c]).collect();
        let sel = select_regional_variables(region, &refs, &hyper, &selection).unwrap();
        for city in cities {
            let restricted = tables[city].restrict_features(&sel.features).unwrap();
            let ys: Vec<Vec<f64>> = (0..2).map(|k| restricted.outcome_column(k)).collect();
            let onames: Vec<String> = OUTCOME_NAMES.iter().map(|s| s.to_string()).collect();
            let model = fit(&restricted.feature_names, &restricted.rows, &ys, &onames, &hyper).unwrap();
            let observed = location_feature_block(&bundle, city, &opts).restrict(&sel.features).unwrap();
            for scenario in [Scenario::Rcp85] {
                let (analog_id, _) = analog_for(&bundle, city, scenario).unwrap();
                let analog = location_feature_block(&bundle, &analog_id, &opts).restrict(&sel.features).unwrap();
                let proj = project_with_analog(&model, city, scenario, &analog_id, &observed, &analog).unwrap();
                let tr = &truth.pct_change[city][&scenario.to_string()];
                println!(
                    "  {city} {scenario} ({region}): water {:.2}% (truth {:.2}%), elec {:.2}% (truth {:.2}%)",
                    proj.outcomes[0].pct_change, tr[0], proj.outcomes[1].pct_change, tr[1]
                );
            }
        }
    }
    println!("total: {:?}", t0.elapsed());
}
