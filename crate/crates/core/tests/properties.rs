use std::f64::consts::PI;

use fqsvt::bands::{detect_bands, BandStructure};
use fqsvt::bosehubbard::AffineMap;
use fqsvt::polyapprox::{ChebyshevSeries, Parity};
use fqsvt::qsp::{extract_pq, pad_symmetric, qsp_unitary, PhaseFactorSet};
use proptest::prelude::*;

fn symmetric(half: &[f64], odd: bool) -> PhaseFactorSet {
    let d = 2 * (half.len() - 1) + odd as usize;
    PhaseFactorSet::su2((0..=d).map(|j| half[j.min(d - j)]).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qsp_pair_is_normalized(half in prop::collection::vec(-PI..PI, 1..12), odd: bool, x in -1.0f64..1.0) {
        let pair = extract_pq(&symmetric(&half, odd)).unwrap();
        let p = pair.p_at(x);
        let q = pair.q_at(x);
        prop_assert!((p.norm_sqr() + (1.0 - x * x) * q.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn padding_preserves_unitary(half in prop::collection::vec(-PI..PI, 1..10), extra in 1usize..4, x in -1.0f64..1.0) {
        let psi = symmetric(&half, false);
        let padded = pad_symmetric(&psi, psi.degree() + 2 * extra).unwrap();
        prop_assert!(padded.is_su2_symmetric());
        let diff = qsp_unitary(x, &psi).unwrap().max_abs_diff(&qsp_unitary(x, &padded).unwrap());
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn detected_bands_partition_spectrum(mut values in prop::collection::vec(0.0f64..1.0, 1..40), gap in 0.01f64..0.3) {
        values.sort_by(f64::total_cmp);
        let bands = detect_bands(&values, gap).unwrap();
        prop_assert_eq!(bands.dim(), values.len());
        prop_assert_eq!(bands.bands.len(), bands.l);
        let mut seen: Vec<usize> = bands.bands.iter().flatten().copied().collect();
        seen.sort();
        prop_assert_eq!(seen, (0..values.len()).collect::<Vec<_>>());
        for w in bands.bands.windows(2) {
            let top = w[0].iter().map(|&i| values[i]).fold(f64::MIN, f64::max);
            let bottom = w[1].iter().map(|&i| values[i]).fold(f64::MAX, f64::min);
            prop_assert!(bottom - top >= gap);
        }
    }

    #[test]
    fn centers_assign_by_threshold(values in prop::collection::vec(0.0f64..1.0, 1..30), c in 0.05f64..0.95) {
        let bands = BandStructure::from_centers(&values, vec![c], 0.01).unwrap();
        prop_assert!(bands.bands[0].iter().all(|&i| values[i] < c));
        prop_assert!(bands.bands[1].iter().all(|&i| values[i] >= c));
    }

    #[test]
    fn affine_map_round_trips(shift in -1e3f64..1e3, scale in 1e-3f64..1e3, x in -1e3f64..1e3) {
        let map = AffineMap { shift, scale };
        prop_assert!((map.inverse(map.forward(x)) - x).abs() <= 1e-9 * (1.0 + x.abs()));
    }

    #[test]
    fn series_squared_matches_pointwise(coeffs in prop::collection::vec(-1.0f64..1.0, 1..8), x in -1.0f64..1.0) {
        let even: Vec<f64> = coeffs.iter().enumerate().map(|(k, &c)| if k % 2 == 0 { c } else { 0.0 }).collect();
        let f = ChebyshevSeries::new(even, Parity::Even).unwrap();
        prop_assert!((f.squared().eval(x) - f.eval(x).powi(2)).abs() < 1e-12);
    }
}
