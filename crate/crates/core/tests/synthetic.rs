use passrate::evaluation::cohens_kappa;
use passrate::labels::{LabelSet, Rating};
use passrate::match_data::{load_match_dir, write_match};
use passrate::synthetic::{generate_labels, generate_match, planted_rating, SynthConfig};

fn codes(set: &LabelSet) -> Vec<usize> {
    set.values().iter().map(|r| r.code()).collect()
}

#[test]
fn default_match_round_trips_through_validation() {
    let cfg = SynthConfig::default();
    assert_eq!(cfg.seed, 42);
    let ds = generate_match(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_match(&ds, dir.path()).unwrap();
    let back = load_match_dir(dir.path()).unwrap();
    assert!(back.extract_passes().len() >= 600);
}

#[test]
fn same_seed_gives_identical_files() {
    let cfg = SynthConfig {
        duration_steps: 3000,
        ..SynthConfig::default()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_match(&generate_match(&cfg).unwrap(), a.path()).unwrap();
    write_match(&generate_match(&cfg).unwrap(), b.path()).unwrap();
    for f in ["trajectories.csv", "events.csv", "teams.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn small_config_pass_count_in_band() {
    let cfg = SynthConfig {
        duration_steps: 6000,
        pass_rate: 0.005,
        ..SynthConfig::default()
    };
    let n = generate_match(&cfg).unwrap().extract_passes().len();
    assert!((25..=35).contains(&n), "{n} passes");
}

#[test]
fn observer_agreement_tracks_noise() {
    let ds = generate_match(&SynthConfig::default()).unwrap();
    let passes = ds.extract_passes();
    assert!(passes.len() >= 500);

    let (a, b) = generate_labels(&ds, &passes, 0.0, 1).unwrap();
    assert_eq!(a.ratings, b.ratings);
    assert_eq!(cohens_kappa(&codes(&a), &codes(&b)).unwrap().kappa, 1.0);

    let (a, b) = generate_labels(&ds, &passes, 0.3, 1).unwrap();
    let kappa = cohens_kappa(&codes(&a), &codes(&b)).unwrap().kappa;
    assert!(kappa > 0.2 && kappa < 0.8, "kappa {kappa}");
}

#[test]
fn unpressured_pass_rates_on_the_good_side() {
    let r = planted_rating(15.0, 12.0, true);
    assert!(r.code() <= Rating::SlightlyGood.code(), "{r:?}");
    assert!(planted_rating(1.0, 12.0, false).code() > Rating::SlightlyBad.code());
}
