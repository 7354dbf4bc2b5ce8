use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use sign_retrieval::blcore::fft::{fft_nd, ifft_to_real};
use sign_retrieval::blcore::{
    convolve, interpolate_from_lattice, l2, sample_on_lattice, BandLimitedSignal, FrequencySupport, Grid,
    SamplingLattice,
};
use sign_retrieval::experiments::{counterexample_grid, counterexample_pair, random_signal};
use sign_retrieval::frames::{analyze, curvelet_windows, frame_bounds, meyer_beta, meyer_frame, overlap_graph};
use sign_retrieval::recovery::{recover_band, recover_band_oracle, MeasurementSet, RecoveryConfig};
use sign_retrieval::sampling::{
    fit_bounding_box, make_sign_blind_lattice, meyer_lattices, rotation, sumset_mask, SignBlindSpec,
};
use sign_retrieval::stitching::{full_pipeline, match_pair, PipelineConfig};
use sign_retrieval::Error;

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    l2(&d) / l2(b).max(f64::MIN_POSITIVE)
}

fn grid_strategy() -> impl Strategy<Value = Grid> {
    prop_oneof![
        (4u32..8, 1.0f64..64.0).prop_map(|(p, l)| Grid::line(1 << p, l).unwrap()),
        (3u32..6, 1.0f64..16.0).prop_map(|(p, l)| Grid::square(1 << p, l).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lattice_round_trip(grid in grid_strategy(), step_pow in 0u32..3, frac in 0.3f64..0.95, seed in any::<u64>()) {
        // A stride-2^p lattice is stable for bins strictly inside the alias cell.
        let stride = 1usize << step_pow;
        let d = grid.dim();
        let spacing: Vec<f64> = (0..d).map(|a| stride as f64 * grid.spacing(a)).collect();
        let lat = SamplingLattice::rectangular(&grid, &spacing).unwrap();
        let radius = frac * (0..d).map(|a| 0.5 / spacing[a] - grid.bin_width(a)).fold(f64::INFINITY, f64::min);
        prop_assume!(radius > 0.0);
        let g = random_signal(&grid, radius, 1.0, seed).unwrap();
        let s = sample_on_lattice(&g, &lat).unwrap();
        let back = interpolate_from_lattice(&s, &lat, g.support(), &grid).unwrap();
        prop_assert!(rel(back.values(), g.values()) <= 1e-8);
    }

    #[test]
    fn convolution_theorem(n in prop::sample::select(vec![4usize, 8, 16]), x in prop::collection::vec(-1.0f64..1.0, 16), h in prop::collection::vec(-1.0f64..1.0, 16)) {
        let grid = Grid::line(n, n as f64).unwrap();
        let f = BandLimitedSignal::new(grid.clone(), x[..n].to_vec(), FrequencySupport::full(&grid)).unwrap();
        let mut spec: Vec<Complex64> = h[..n].iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut spec, grid.shape());
        let out = convolve(&f, &spec).unwrap();
        let direct: Vec<f64> = (0..n).map(|i| (0..n).map(|j| x[j] * h[(i + n - j) % n]).sum()).collect();
        let scale = l2(&direct).max(1e-300);
        let err = l2(&out.values().iter().zip(&direct).map(|(a, b)| a - b).collect::<Vec<_>>());
        prop_assert!(err <= 1e-10 * scale.max(l2(&x[..n]) * l2(&h[..n])));
    }

    #[test]
    fn real_symmetric_filters_keep_signals_real(grid in grid_strategy(), seed in any::<u64>(), width in 0.05f64..1.0) {
        let f = random_signal(&grid, grid.nyquist(), 1.0, seed).unwrap();
        let filt: Vec<Complex64> = (0..grid.len()).map(|i| Complex64::new((-grid.freq_norm(i) / (width * grid.nyquist())).exp(), 0.0)).collect();
        let mut spec: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut spec, grid.shape());
        spec.iter_mut().zip(&filt).for_each(|(c, h)| *c *= h);
        let (_, imag) = ifft_to_real(&spec, grid.shape());
        prop_assert!(imag <= 1e-12);
        prop_assert!(convolve(&f, &filt).is_ok());
    }

    #[test]
    fn beta_symmetry(x in 0.0f64..=1.0) {
        prop_assert!((meyer_beta(x) + meyer_beta(1.0 - x) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn undersampling_rejected(s in 0.05f64..0.9999, axis in 0usize..2) {
        let grid = Grid::square(32, 32.0).unwrap();
        let sup = FrequencySupport::ball(&grid, 0.2).unwrap();
        let mut dil = vec![1.0, 1.0];
        dil[axis] = s;
        let err = SignBlindSpec::new(&grid, sup, DMatrix::identity(2, 2), dil).unwrap_err();
        let hit = matches!(err, Error::SubCritical { axis: a, .. } if a == axis);
        prop_assert!(hit);
    }

    #[test]
    fn bounding_box_is_tight(radius in 2.0f64..10.0, theta in 0.0f64..std::f64::consts::PI) {
        let grid = Grid::square(64, 64.0).unwrap();
        let r = radius / 64.0;
        let sup = FrequencySupport::ball(&grid, r).unwrap();
        let orient = rotation(theta);
        let m = fit_bounding_box(&grid, &sup, &orient).unwrap();
        prop_assert!(SignBlindSpec::new(&grid, sup.clone(), m.clone(), vec![1.0, 1.0]).is_ok());
        let bw = grid.bin_width(0);
        for axis in 0..2 {
            let mut small = m.clone();
            let c = small.column(axis).norm();
            let shrink = (c - 2.0 * bw) / c;
            let col = small.column(axis) * shrink;
            small.set_column(axis, &col);
            let res = SignBlindSpec::new(&grid, sup.clone(), small, vec![1.0, 1.0]);
            prop_assert!(matches!(res, Err(Error::NotContained { .. })), "axis {}", axis);
        }
    }

    #[test]
    fn sign_blind_lattices_interpolate(radius in 2.0f64..8.0, s in 1.0f64..2.0, seed in any::<u64>()) {
        let grid = Grid::line(256, 64.0).unwrap();
        let sup = FrequencySupport::ball(&grid, radius / 64.0).unwrap();
        let m = fit_bounding_box(&grid, &sup, &DMatrix::identity(1, 1)).unwrap();
        let c = sign_retrieval::sampling::commensurate_constant(m[(0, 0)] * s, &grid, 0).unwrap().0;
        let spec = SignBlindSpec::new(&grid, sup.clone(), DMatrix::from_element(1, 1, c), vec![1.0]).unwrap();
        match make_sign_blind_lattice(&spec, &grid) {
            Ok(lat) => {
                let g = random_signal(&grid, radius / 64.0, 0.2, seed).unwrap();
                let y = sample_on_lattice(&g, &lat).unwrap();
                let back = interpolate_from_lattice(&y, &lat, g.support(), &grid).unwrap();
                prop_assert!(rel(back.values(), g.values()) <= 1e-8);
            }
            Err(e) => prop_assert!(matches!(e, Error::NotSignBlind(_)), "{}", e),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn frame_energy_within_bounds(seed in any::<u64>(), curvelet in any::<bool>()) {
        let (frame, radius) = if curvelet {
            let g = Grid::square(64, 2.0).unwrap();
            (curvelet_windows(1, &g).unwrap(), 16.0 / 3.0)
        } else {
            let g = Grid::line(512, 24.0).unwrap();
            (meyer_frame(4, &g).unwrap(), 16.0 / 3.0)
        };
        let (a, b) = frame_bounds(&frame).unwrap();
        let f = random_signal(frame.grid(), radius, 0.2, seed).unwrap();
        let energy: f64 = analyze(&f, &frame).unwrap().iter().map(|p| p.norm().powi(2)).sum();
        let n2 = f.norm().powi(2);
        prop_assert!(a * n2 * (1.0 - 1e-12) <= energy && energy <= b * n2 * (1.0 + 1e-12));
    }

    #[test]
    fn product_trick(s in 0.5f64..0.99) {
        let grid = counterexample_grid(s, 8, 4).unwrap();
        let c = counterexample_pair(s, &grid).unwrap();
        let mags: Vec<f64> = sample_on_lattice(&c.h1, &c.lattice).unwrap().iter().map(|v| v.abs()).collect();
        let o = recover_band_oracle(&mags, &c.lattice, c.h1.support()).unwrap();
        prop_assert!(o.candidates.len() >= 2);
        let sum = FrequencySupport::from_mask(&grid, sumset_mask(&grid, c.h1.support().mask())).unwrap();
        for i in 0..o.candidates.len() {
            for j in i + 1..o.candidates.len() {
                let (u, v) = (o.candidates[i].values(), o.candidates[j].values());
                let w: Vec<f64> = u.iter().zip(v).map(|(a, b)| (a - b) * (a + b)).collect();
                let w = BandLimitedSignal::new(grid.clone(), w, sum.clone()).unwrap();
                let scale = u.iter().chain(v).fold(0.0f64, |m, x| m.max(x.abs())).powi(2);
                let on_x = sample_on_lattice(&w, &c.lattice).unwrap();
                prop_assert!(on_x.iter().all(|x| x.abs() <= 1e-8 * scale));
            }
        }
    }

    #[test]
    fn recovery_ignores_input_sign(seed in any::<u64>()) {
        let grid = Grid::line(64, 64.0).unwrap();
        let g = random_signal(&grid, 3.0 / 64.0, 10.0, seed).unwrap();
        let lat = SamplingLattice::rectangular(&grid, &[4.0]).unwrap();
        let mags = |h: &BandLimitedSignal| -> Vec<f64> { sample_on_lattice(h, &lat).unwrap().iter().map(|v| v.abs()).collect() };
        let cfg = RecoveryConfig::default();
        let (a, da) = recover_band(&mags(&g), &lat, g.support(), &cfg).unwrap();
        let (b, db) = recover_band(&mags(&g.scaled(-1.0)), &lat, g.support(), &cfg).unwrap();
        prop_assert_eq!(a.values(), b.values());
        prop_assert_eq!(da, db);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn edge_antisymmetry_and_flip_equivariance(seed in any::<u64>()) {
        let grid = Grid::line(1024, 24.0).unwrap();
        let frame = meyer_frame(4, &grid).unwrap();
        let lats = meyer_lattices(&frame, 3.0 / 16.0).unwrap();
        let f = random_signal(&grid, 5.0, 0.125, seed).unwrap();
        let parts = analyze(&f, &frame).unwrap();
        for e in &overlap_graph(&frame).unwrap().edges {
            let m = match_pair(&parts[e.a], &parts[e.b], &frame, e, 1e-4).unwrap();
            let n = match_pair(&parts[e.a], &parts[e.b].scaled(-1.0), &frame, e, 1e-4).unwrap();
            prop_assert_eq!(m.relative_sign, -n.relative_sign);
        }
        let cfg = PipelineConfig::verified();
        let (a, _) = full_pipeline(&MeasurementSet::measure(&f, &frame, &lats).unwrap(), &frame, &cfg).unwrap();
        let (b, _) = full_pipeline(&MeasurementSet::measure(&f.scaled(-1.0), &frame, &lats).unwrap(), &frame, &cfg).unwrap();
        prop_assert_eq!(a.values(), b.values());
    }
}
