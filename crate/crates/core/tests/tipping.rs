use daisyworld::equilibria::{coexistence_analytic, enumerate_equilibria};
use daisyworld::geometry::basin_grid;
use daisyworld::solver::converge_to_attractor;
use daisyworld::tipping::{critical_rate, lin_space, run_experiment};
use daisyworld::{BasinClass, Classification, ExperimentOptions, ForcingSpec, IntegratorOptions, Label, Params, RunConfig};
use proptest::prelude::*;

/// At a very fast rate the ramp is a step: the outcome is whatever the
/// frozen system at `L_max` does from `e5(L_min)`.
#[test]
fn fast_ramp_matches_an_instantaneous_switch() {
    let p = Params::default();
    let opts = ExperimentOptions::default();
    let e5 = coexistence_analytic(0.8, &p).unwrap().unwrap();
    for dl in lin_space(0.30, 0.55, 11) {
        let l_max = 0.8 + dl;
        let known = enumerate_equilibria(l_max, &p).unwrap();
        let switch = converge_to_attractor(e5.state, l_max, &known, &opts.integrator, &p).unwrap();
        let ramp = run_experiment(&ForcingSpec::new(0.8, dl, 1e3), &opts, &p).unwrap();
        assert_eq!(ramp.final_attractor, switch.label(), "delta_L = {dl}");
    }
}

#[test]
fn critical_rate_falls_as_amplitude_grows() {
    let p = Params::default();
    let opts = ExperimentOptions::default();
    let mut last = f64::INFINITY;
    for dl in [0.40, 0.41, 0.45] {
        let c = critical_rate(0.8, dl, (1e-2, 1e2), 1e-3, &opts, &p).unwrap();
        assert!(c.r_c < last, "delta_L = {dl}: r_c = {} after {last}", c.r_c);
        last = c.r_c;
    }
}

#[test]
fn basin_areas_are_stable_under_refinement() {
    let p = Params::default();
    let opts = IntegratorOptions::default();
    let coarse = basin_grid(1.2, 41, &opts, None, &p).unwrap();
    let fine = basin_grid(1.2, 123, &opts, None, &p).unwrap();
    for label in [Label::E0, Label::E5] {
        let (a, b) = (coarse.area_fraction(label), fine.area_fraction(label));
        assert!((a - b).abs() < 0.02, "{label}: {a} vs {b}");
    }
    // every coarse cell centre is also a fine cell centre (factor 3)
    let mut disagree = 0;
    for i in 0..41 {
        for j in 0..41 {
            let c = coarse.class_at(i, j);
            if c != BasinClass::Invalid && c != fine.class_at(3 * i + 1, 3 * j + 1) {
                disagree += 1;
            }
        }
    }
    assert_eq!(disagree, 0);
    assert_eq!(fine.unresolved, 0);
}

#[test]
fn config_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    let mut cfg = RunConfig::default();
    cfg.tip.r = 0.75;
    cfg.diagram.r_points = 7;
    cfg.workers = Some(2);
    std::fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), cfg);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Small rises never leave the coexistence basin, whatever the rate.
    #[test]
    fn small_amplitude_always_tracks(dl in 0.0f64..0.3, log_r in -2.0f64..2.0) {
        let p = Params::default();
        let opts = ExperimentOptions::default();
        let o = run_experiment(&ForcingSpec::new(0.8, dl, 10f64.powf(log_r)), &opts, &p).unwrap();
        prop_assert_eq!(o.classification, Classification::Track);
    }
}
