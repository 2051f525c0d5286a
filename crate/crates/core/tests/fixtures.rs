//! End-to-end checks on the bundled data files.

use erule::backtest::{case_study_report, Check, MatchStatus, RecessionCalendar, SignalRule};
use erule::ingest::{bundled_data_dir, load_bundle, load_calendar, SourceConfig};
use erule::ml::build_dataset;
use erule::signal::{classify_series, Band, Phase, PhaseThresholds};
use erule::{Composition, MonthDate};

fn cfg() -> SourceConfig {
    SourceConfig::default().offline(true)
}

#[test]
fn calendar_file_matches_bundled_constant() {
    let cal = load_calendar(&bundled_data_dir().join("nber_recessions.csv")).unwrap();
    assert_eq!(cal, RecessionCalendar::bundled());
    assert_eq!(cal.len(), 6);
    assert_eq!(cal.intervals()[0].start, MonthDate::ym(1980, 1));
    assert_eq!(cal.intervals()[5].end, MonthDate::ym(2020, 4));
}

#[test]
fn february_2001_components() {
    let b: erule::Bundle = load_bundle(&cfg(), Composition::Difference).unwrap();
    let d = MonthDate::ym(2001, 2);
    assert!((b.spread.get(d).unwrap() - 0.44).abs() < 1e-9);
    assert!((b.sahm.get(d).unwrap() - 0.20).abs() < 0.005);
    assert!((b.e_rule.get(d).unwrap() - 0.24).abs() < 0.005);
    let sum: erule::Bundle = load_bundle(&cfg(), Composition::Sum).unwrap();
    assert!((sum.e_rule.get(d).unwrap() - 0.64).abs() < 0.005);
}

#[test]
fn single_precision_tracks_double() {
    let b64: erule::Bundle = load_bundle(&cfg(), Composition::Difference).unwrap();
    let b32 = load_bundle::<f32>(&cfg(), Composition::Difference).unwrap();
    assert_eq!(b64.len(), b32.len());
    for ((_, a), (_, b)) in b64.e_rule.points().iter().zip(b32.e_rule.points()) {
        assert!((a - *b as f64).abs() < 1e-4);
    }
}

#[test]
fn recession_share_of_dataset() {
    let b: erule::Bundle = load_bundle(&cfg(), Composition::Difference).unwrap();
    let ds = build_dataset(&b.e_rule, &RecessionCalendar::bundled(), 3, 0).unwrap();
    let share = ds.positive_fraction().unwrap();
    assert!((0.08..=0.14).contains(&share), "{share}");
}

#[test]
fn default_backtest_shape() {
    let b: erule::Bundle = load_bundle(&cfg(), Composition::Difference).unwrap();
    let cal = RecessionCalendar::bundled();
    let r = case_study_report(
        &b,
        &cal,
        &Band::symmetric(0.3).unwrap(),
        SignalRule::default(),
        24,
    )
    .unwrap();
    assert_eq!(r.entries.len(), 6);
    let e2001 = &r.entries[3];
    assert_eq!(
        e2001.matched.matched_signal.unwrap().date,
        MonthDate::ym(2001, 2)
    );
    assert_eq!(e2001.value_check, Check::Pass);
    assert!(r.entries[1].note.is_some());
    assert_eq!(r.entries[1].lead_check, Check::NotAsserted);
}

#[test]
fn short_window_misses_1981() {
    let b: erule::Bundle = load_bundle(&cfg(), Composition::Difference).unwrap();
    let cal = RecessionCalendar::bundled();
    for rule in [SignalRule::LastInBand, SignalRule::BandEntry] {
        let r = case_study_report(&b, &cal, &Band::symmetric(0.3).unwrap(), rule, 3).unwrap();
        assert_eq!(r.entries[1].matched.status, MatchStatus::Missed, "{rule}");
    }
}

#[test]
fn covid_is_recession_confirmed_by_sahm() {
    let b: erule::Bundle = load_bundle(&cfg(), Composition::Difference).unwrap();
    let phases = classify_series(&b.spread, &b.sahm, &PhaseThresholds::default());
    let april = phases
        .iter()
        .find(|(d, _)| *d == MonthDate::ym(2020, 4))
        .unwrap()
        .1;
    // spread stayed positive, so the inverted-curve phases do not apply
    assert_eq!(april, Phase::Neutral);
    let late_2000 = phases
        .iter()
        .find(|(d, _)| *d == MonthDate::ym(2000, 8))
        .unwrap()
        .1;
    assert_eq!(late_2000, Phase::EarlyWarning);
}
