//! MAP shrinkage behavior on data from a known model.

mod support;

use plda::nalgebra::DVector;
use plda::shrink::{map_epsilon, EpsilonEstimate};
use plda::synth::{heavy_tailed_epsilon, synth_dataset, SynthSpec};
use plda::train::{train_ml, TrainConfig};

fn sorted(v: &DVector<f64>) -> Vec<f64> {
    let mut out: Vec<f64> = v.iter().copied().collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

fn l2_to(est: &DVector<f64>, truth: &DVector<f64>) -> f64 {
    sorted(est)
        .iter()
        .zip(sorted(truth))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Few classes, many dimensions: the ML spectrum over-disperses and pulling
/// it toward the flat prior recovers accuracy. Axis order is not identifiable
/// so the comparison sorts both spectra; shrinkage is monotone per entry, so
/// sorting commutes with it.
#[test]
fn shrunk_spectrum_is_closer_to_truth() {
    let p = 30;
    let eps_true = heavy_tailed_epsilon(p, 71, 0.05);
    let data = synth_dataset(&SynthSpec {
        dim: p,
        classes: 40,
        per_class: 8,
        tail: "gaussian".into(),
        epsilon: eps_true.clone(),
        seed: 73,
        prefix: "c".into(),
    })
    .unwrap();
    let model = train_ml(&data.to_labeled().unwrap(), &TrainConfig::default()).unwrap().model;
    let ml = EpsilonEstimate::from_model(&model);
    let eps0 = DVector::from_element(p, 1.0);
    let map = map_epsilon(&ml, 50.0, &eps0).unwrap();

    let err_ml = l2_to(ml.epsilon(), &eps_true);
    let err_map = l2_to(map.epsilon(), &eps_true);
    assert!(
        err_map < err_ml,
        "shrinkage did not help: map {err_map} vs ml {err_ml}"
    );
}

#[test]
fn map_interpolates_and_is_monotone_in_alpha() {
    let p = 12;
    let data = synth_dataset(&SynthSpec {
        dim: p,
        classes: 30,
        per_class: 5,
        tail: "gaussian".into(),
        epsilon: heavy_tailed_epsilon(p, 79, 0.05),
        seed: 83,
        prefix: "c".into(),
    })
    .unwrap();
    let model = train_ml(&data.to_labeled().unwrap(), &TrainConfig::default()).unwrap().model;
    let ml = EpsilonEstimate::from_model(&model);
    let eps0 = DVector::from_fn(p, |j, _| 0.5 + 0.1 * j as f64);

    let weak = map_epsilon(&ml, 10.0, &eps0).unwrap();
    let strong = map_epsilon(&ml, 1000.0, &eps0).unwrap();
    for j in 0..p {
        let (e, e0) = (ml.epsilon()[j], eps0[j]);
        let (lo, hi) = (e.min(e0), e.max(e0));
        for m in [&weak, &strong] {
            let v = m.epsilon()[j];
            assert!((lo..=hi).contains(&v), "map estimate {v} outside [{lo}, {hi}]");
        }
        assert!(
            (strong.epsilon()[j] - e0).abs() <= (weak.epsilon()[j] - e0).abs(),
            "larger alpha moved away from the prior at dim {j}"
        );
    }
}
