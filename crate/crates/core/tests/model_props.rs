use std::f64::consts::PI;
use std::io::Cursor;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use resolve_limit::io::{
    read_measure, read_measurement, write_measure, write_measurement, MeasureFile, MeasurementFile,
};
use resolve_limit::model::{
    draw_noise, synthesize, uniform_grid, DiscreteMeasure, NoiseDraw, NoiseField,
};
use resolve_limit::{Complex64, Error};

fn amplitude() -> impl Strategy<Value = Complex64> {
    (0.1f64..5.0, 0.0..2.0 * PI).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn measure_1d(max: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((-20.0f64..20.0, amplitude()), 1..=max).prop_filter_map(
        "distinct points",
        |v| {
            let (ys, a): (Vec<f64>, Vec<Complex64>) = v.into_iter().unzip();
            DiscreteMeasure::from_1d(&ys, &a).ok()
        },
    )
}

fn mass(m: &DiscreteMeasure) -> f64 {
    m.amplitudes().iter().map(|a| a.norm()).sum()
}

/// Direct sum, written out independently of the library.
fn naive_fourier(m: &DiscreteMeasure, w: &[f64]) -> Complex64 {
    (0..m.len())
        .map(|j| {
            let phase: f64 = m.point(j).iter().zip(w).map(|(y, x)| y * x).sum();
            m.amplitudes()[j] * Complex64::new(phase.cos(), phase.sin())
        })
        .sum()
}

proptest! {
    #[test]
    fn fourier_matches_direct_sum(m in measure_1d(6), w in -5.0f64..5.0) {
        let got = m.fourier(&[w]);
        prop_assert!((got - naive_fourier(&m, &[w])).norm() <= 1e-12 * mass(&m));
    }

    #[test]
    fn fourier_is_linear(a in measure_1d(4), b in measure_1d(4), w in -5.0f64..5.0) {
        prop_assume!(a.points().iter().all(|y| !b.points().contains(y)));
        let sum = a.combined(&b).unwrap();
        let err = (sum.fourier(&[w]) - a.fourier(&[w]) - b.fourier(&[w])).norm();
        prop_assert!(err <= 1e-12 * (mass(&a) + mass(&b)));
    }

    #[test]
    fn shift_multiplies_by_a_phase(m in measure_1d(5), t in -10.0f64..10.0, w in -3.0f64..3.0) {
        let moved = m.shifted(&[t]).fourier(&[w]);
        let expected = Complex64::cis(t * w) * m.fourier(&[w]);
        prop_assert!((moved - expected).norm() <= 1e-11 * mass(&m));
    }

    #[test]
    fn real_amplitudes_give_conjugate_symmetry(
        pts in prop::collection::vec((-10.0f64..10.0, 0.1f64..3.0), 1..5),
        w in 0.0f64..4.0,
    ) {
        let (ys, a): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let a: Vec<Complex64> = a.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        prop_assume!(DiscreteMeasure::from_1d(&ys, &a).is_ok());
        let m = DiscreteMeasure::from_1d(&ys, &a).unwrap();
        prop_assert!((m.fourier(&[-w]) - m.fourier(&[w]).conj()).norm() <= 1e-12 * mass(&m));
    }

    #[test]
    fn planar_transform_matches_direct_sum(
        pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, amplitude()), 1..5),
        wx in -2.0f64..2.0,
        wy in -2.0f64..2.0,
    ) {
        let coords: Vec<f64> = pts.iter().flat_map(|p| [p.0, p.1]).collect();
        let a: Vec<Complex64> = pts.iter().map(|p| p.2).collect();
        let m = DiscreteMeasure::new(2, coords, a);
        prop_assume!(m.is_ok());
        let m = m.unwrap();
        prop_assert!((m.fourier(&[wx, wy]) - naive_fourier(&m, &[wx, wy])).norm() <= 1e-12 * mass(&m));
    }

    #[test]
    fn synthesized_data_stays_within_the_noise_level(
        m in measure_1d(4),
        sigma in 1e-6f64..1.0,
        seed in any::<u64>(),
    ) {
        let grid = uniform_grid(1.0, 33).unwrap();
        let w = draw_noise(grid.len(), sigma, seed).unwrap();
        let y = synthesize(&m, &grid, 1.0, Some(&w), None).unwrap();
        for (i, &x) in grid.iter().enumerate() {
            prop_assert!((y.values()[i] - m.fourier(&[x])).norm() < sigma);
        }
    }

    #[test]
    fn masked_samples_are_zero(m in measure_1d(3), mut mask in prop::collection::vec(any::<bool>(), 17)) {
        // the detector's samples must stay observed
        mask[0] = true;
        mask[8] = true;
        mask[16] = true;
        let grid = uniform_grid(2.0, 17).unwrap();
        let y = synthesize(&m, &grid, 2.0, None, Some(&mask)).unwrap();
        for (i, &x) in grid.iter().enumerate() {
            let expected = if mask[i] { m.fourier(&[x]) } else { Complex64::new(0.0, 0.0) };
            prop_assert_eq!(y.values()[i], expected);
        }
    }

    #[test]
    fn measure_files_round_trip_bit_exactly(
        m in measure_1d(6),
        cutoff in 0.01f64..100.0,
        sigma in 0.0f64..1.0,
    ) {
        let file = MeasureFile { measure: m, cutoff, noise_level: sigma };
        let mut buf = Vec::new();
        write_measure(&mut buf, &file).unwrap();
        let back = read_measure(Cursor::new(&buf)).unwrap();
        prop_assert_eq!(back, file);
    }

    #[test]
    fn measurement_files_round_trip_bit_exactly(
        m in measure_1d(4),
        cutoff in 0.1f64..10.0,
        sigma in 1e-9f64..1.0,
        seed in any::<u64>(),
    ) {
        let grid = uniform_grid(cutoff, 9).unwrap();
        let w = draw_noise(grid.len(), sigma, seed).unwrap();
        let measurement = synthesize(&m, &grid, cutoff, Some(&w), None).unwrap();
        let file = MeasurementFile { measure: m, measurement };
        let mut buf = Vec::new();
        write_measurement(&mut buf, &file).unwrap();
        let back = read_measurement(Cursor::new(&buf)).unwrap();
        prop_assert_eq!(back, file);
    }
}

#[test]
fn hundred_thousand_noise_draws_stay_strictly_inside() {
    let sigma = 0.37;
    let w = draw_noise(100_000, sigma, 2024).unwrap();
    let worst = w.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!(worst < sigma, "max |w| = {worst}");
    // the law fills the disk, not just its interior
    assert!(worst > 0.999 * sigma);
}

#[test]
fn noise_field_is_bounded_and_reproducible() {
    let field = NoiseField::new(11, 0.2);
    let again = NoiseField::new(11, 0.2);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..10_000 {
        let w = [
            rand::Rng::random_range(&mut rng, -3.0..3.0),
            rand::Rng::random_range(&mut rng, -3.0..3.0),
        ];
        let v = field.at(&w);
        assert!(v.norm() < 0.2);
        assert_eq!(v, again.at(&w));
    }
    assert_eq!(field.at(&[0.0, 1.0]), field.at(&[-0.0, 1.0]));
}

#[test]
fn noise_on_the_boundary_is_rejected() {
    let v = vec![Complex64::new(0.5, 0.0)];
    assert!(matches!(
        NoiseDraw::new(v, 0.5),
        Err(Error::NoiseBound { index: 0, .. })
    ));
}

#[test]
fn zero_sigma_draw_is_zero() {
    let w = draw_noise(50, 0.0, 3).unwrap();
    assert!(w.values().iter().all(|v| *v == Complex64::new(0.0, 0.0)));
}

#[test]
fn coincident_points_are_rejected() {
    let one = Complex64::new(1.0, 0.0);
    assert!(DiscreteMeasure::from_1d(&[0.5, 0.5], &[one, one]).is_err());
}
