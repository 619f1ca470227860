use std::f64::consts::PI;

use proptest::prelude::*;
use resolve_limit::harness::csv::{preamble, SWEEP_COLUMNS, TRIAL_COLUMNS};
use resolve_limit::harness::scaling::{worst_amplitude_error, worst_case_pair};
use resolve_limit::harness::{
    run_experiment, run_limit_sweep, run_random_2d, run_worst_case_1d, DScale, Execution,
    ExperimentConfig, ExperimentKind, Output, ScalingVariant,
};
use resolve_limit::model::uniform_grid;

fn small(kind: ExperimentKind, trials: usize, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(kind);
    c.trials = trials;
    c.seed = seed;
    c.points = 4;
    c.spectra = 2;
    c
}

fn csv_bytes(config: &ExperimentConfig) -> Vec<u8> {
    let mut buf = Vec::new();
    run_experiment(config)
        .unwrap()
        .write_csv(&mut buf, config)
        .unwrap();
    buf
}

#[test]
fn same_seed_gives_identical_files() {
    for kind in [
        ExperimentKind::Random1d,
        ExperimentKind::Worst1d,
        ExperimentKind::Random2d,
        ExperimentKind::MusicCompare,
    ] {
        let c = small(kind, 40, 9);
        assert_eq!(csv_bytes(&c), csv_bytes(&c), "{kind}");
    }
}

#[test]
fn sequential_and_parallel_runs_agree_byte_for_byte() {
    for kind in [
        ExperimentKind::Random1d,
        ExperimentKind::Worst1d,
        ExperimentKind::Random2d,
        ExperimentKind::AmplitudeScaling,
    ] {
        let mut seq = small(kind, 60, 21);
        seq.execution = Execution::Sequential;
        let mut par = seq.clone();
        par.execution = Execution::Parallel;
        assert_eq!(csv_bytes(&seq), csv_bytes(&par), "{kind}");
    }
}

#[test]
fn different_seeds_give_different_trials() {
    let a = csv_bytes(&small(ExperimentKind::Random1d, 20, 1));
    let b = csv_bytes(&small(ExperimentKind::Random1d, 20, 2));
    assert_ne!(a, b);
}

#[test]
fn trial_files_parse_back() {
    let c = small(ExperimentKind::Random1d, 25, 3);
    let bytes = csv_bytes(&c);
    let text = String::from_utf8(bytes).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), preamble(&c));
    assert!(preamble(&c).starts_with(&format!(
        "# resolve-limit v{} kind=random-1d seed=3",
        resolve_limit::VERSION
    )));
    let body: String = lines.map(|l| format!("{l}\n")).collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, TRIAL_COLUMNS);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 25);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0].parse::<usize>().unwrap(), i);
        assert_eq!(&r[1], "random-1d");
        assert!(matches!(&r[12], "0" | "1"));
        // random-1d records neither admissibility nor a direction
        assert_eq!((&r[13], &r[14]), ("", ""));
    }
}

#[test]
fn noiseless_campaigns_always_resolve() {
    let mut c = small(ExperimentKind::Random1d, 200, 4);
    c.ratio_range = (0.0, 1e-9);
    c.d_range = (0.1, PI);
    let Output::Trials(records) = run_experiment(&c).unwrap() else {
        panic!()
    };
    assert!(records.iter().all(|r| r.success));
}

/// Less noise and more separation can only help: a success at
/// `(ratio, d)` forces success at every dominated point.
#[test]
fn worst_case_success_region_is_monotone() {
    let c = small(ExperimentKind::Worst1d, 600, 8);
    let records = run_worst_case_1d(&c).unwrap();
    let mut violations = 0;
    for easy in &records {
        for hard in &records {
            let dominated = easy.ratio <= hard.ratio && easy.d_min >= hard.d_min * (1.0 + 1e-3);
            if dominated && hard.success && !easy.success {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
    assert!(records.iter().any(|r| r.success) && records.iter().any(|r| !r.success));
}

#[test]
fn impossible_regime_never_resolves() {
    let c = small(ExperimentKind::ImpossibleRegime, 150, 10);
    let records = run_worst_case_1d(&c).unwrap();
    assert!(records.iter().all(|r| r.ratio > 0.5 && r.limit.is_none()));
    assert_eq!(records.iter().filter(|r| r.success).count(), 0);
}

#[test]
fn planar_random_noise_often_beats_the_worst_case() {
    let mut c = small(ExperimentKind::Random2d, 400, 12);
    c.d_scale = DScale::Limit;
    c.d_range = (0.3, 1.0);
    c.ratio_range = (0.0, 0.2);
    let records = run_random_2d(&c).unwrap();
    let below = records
        .iter()
        .filter(|r| r.limit.is_some_and(|l| r.d_min < l))
        .count();
    let lucky = records
        .iter()
        .filter(|r| r.limit.is_some_and(|l| r.d_min < l) && r.success)
        .count();
    assert!(below > 0 && lucky > 0, "{lucky} of {below}");
}

#[test]
fn sweep_rows_increase_with_the_ratio() {
    let mut c = ExperimentConfig::new(ExperimentKind::LimitSweep);
    c.points = 6;
    let rows = run_limit_sweep(&c).unwrap();
    assert!(rows
        .windows(2)
        .all(|w| w[0].ratio < w[1].ratio && w[0].empirical < w[1].empirical));
    let last = rows.last().unwrap();
    assert_eq!(last.ratio, 0.5);
    assert!((last.empirical - PI).abs() < 0.02 * PI);
    let mut buf = Vec::new();
    Output::Sweep(rows).write_csv(&mut buf, &c).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), SWEEP_COLUMNS.join(","));
}

#[test]
fn scaling_without_noise_has_no_error() {
    let mut c = small(ExperimentKind::AmplitudeScaling, 1, 0);
    c.sigma = 0.0;
    let Output::Scaling(r) = run_experiment(&c).unwrap() else {
        panic!()
    };
    assert!(r.rows.iter().all(|row| row.errors == [0.0; 3]));
    assert!(r.slopes.iter().all(Option::is_none));
    assert_eq!(Output::Scaling(r).summary(&c).violations, 0);
}

/// The linearised worst case is realised by an actual pair whose data stay
/// within `2 sigma` of the truth.
#[test]
fn worst_case_pairs_realise_the_scaling_errors() {
    let sigma = 1e-8;
    let margin = 0.01;
    let fine = uniform_grid(1.0, 2049).unwrap();
    for srf in [2.0, 4.0, 8.0] {
        let d = PI / srf;
        for variant in ScalingVariant::ALL {
            let (truth, perturbed, t) = worst_case_pair(d, 1.0, sigma, margin, variant).unwrap();
            let misfit = fine
                .iter()
                .map(|&w| (perturbed.fourier(&[w]) - truth.fourier(&[w])).norm())
                .fold(0.0, f64::max);
            assert!(
                misfit < 2.0 * sigma,
                "{} at srf {srf}: {misfit:e}",
                variant.name()
            );
            assert!(misfit > 2.0 * sigma * (1.0 - margin) * 0.99);
            let da = (perturbed.amplitudes()[0] - truth.amplitudes()[0]).norm();
            // 1 + t rounds at the 1e-16 / t level
            assert!((da - t).abs() <= 1e-6 * t);
            let linear = worst_amplitude_error(d, 1.0, sigma, variant).unwrap();
            assert!((t - linear * (1.0 - margin)).abs() <= 1e-9 * t);
        }
    }
}

#[test]
fn more_freedom_means_larger_errors() {
    for srf in [2.0, 6.0, 12.0] {
        let d = PI / srf;
        let e: Vec<f64> = ScalingVariant::ALL
            .iter()
            .map(|&v| worst_amplitude_error(d, 1.0, 1e-6, v).unwrap())
            .collect();
        assert!(
            e[0] <= e[1] * (1.0 + 1e-3) && e[1] <= e[2] * (1.0 + 1e-3),
            "srf {srf}: {e:?}"
        );
    }
}

#[test]
fn music_control_is_resolved() {
    let c = small(ExperimentKind::MusicCompare, 30, 6);
    let Output::Music(r) = run_experiment(&c).unwrap() else {
        panic!()
    };
    assert_eq!(r.control.detected_n, 2);
    assert_eq!(r.control.peaks, Some(2));
    assert_eq!(r.cases.len(), 30);
    assert!(r.spectra.iter().any(|(id, _)| *id == usize::MAX));
}

#[test]
fn config_files_drive_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(
        &path,
        "# small run\nkind = worst-1d\ntrials = 12\nseed = 77\nratio = 0.1 0.4\n",
    )
    .unwrap();
    let c = ExperimentConfig::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(
        (c.kind, c.trials, c.seed),
        (ExperimentKind::Worst1d, 12, 77)
    );
    let Output::Trials(r) = run_experiment(&c).unwrap() else {
        panic!()
    };
    assert!(r
        .iter()
        .all(|t| t.ratio > 0.1 && t.ratio <= 0.4 && t.admissible.is_some()));
    assert!(ExperimentConfig::parse("kind = random-1d\nbogus = 1\n").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn trials_depend_only_on_seed_and_index(seed in any::<u64>(), n in 2usize..30) {
        let mut c = small(ExperimentKind::Random1d, n, seed);
        let Output::Trials(full) = run_experiment(&c).unwrap() else { unreachable!() };
        c.trials = n / 2;
        let Output::Trials(prefix) = run_experiment(&c).unwrap() else { unreachable!() };
        prop_assert_eq!(&full[..n / 2], &prefix[..]);
    }

    #[test]
    fn scenes_respect_the_configured_ranges(seed in any::<u64>(), lo in 0.0f64..0.3, width in 0.01f64..0.2) {
        let mut c = small(ExperimentKind::Random1d, 20, seed);
        c.ratio_range = (lo, lo + width);
        c.d_range = (0.5, 2.0);
        let Output::Trials(r) = run_experiment(&c).unwrap() else { unreachable!() };
        for t in &r {
            prop_assert!(t.ratio > lo && t.ratio <= lo + width);
            prop_assert!(t.d_min > 0.5 * (1.0 - 1e-12) && t.d_min <= 2.0 * (1.0 + 1e-12));
            prop_assert_eq!(t.true_n, 2);
        }
    }
}

#[test]
fn failures_count_only_inside_the_guarantee_window() {
    use resolve_limit::harness::{guarantee_violations, TrialRecord};
    let c = ExperimentConfig::new(ExperimentKind::Random1d);
    let limit = resolve_limit::bounds::diffraction_limit(1.0, 0.3)
        .unwrap()
        .length()
        .unwrap();
    let failed = |trial: usize, d_min: f64| TrialRecord {
        trial,
        kind: ExperimentKind::Random1d,
        ratio: 0.3,
        sigma: 0.3,
        d_min,
        limit: Some(limit),
        a_max: 1.0,
        true_n: 2,
        detected_n: 1,
        sigma1: 1.0,
        sigma2: 0.0,
        threshold: 0.6,
        success: false,
        admissible: None,
        direction: Some(0),
    };
    let records = [
        failed(0, 0.99 * limit),
        failed(1, 1.01 * limit),
        failed(2, 2.0 * PI - 1.01 * limit),
        // the nodes alias back together past 2π/Ω - limit
        failed(3, 2.0 * PI - 0.99 * limit),
    ];
    assert_eq!(guarantee_violations(&c, &records), vec![1, 2]);
}
