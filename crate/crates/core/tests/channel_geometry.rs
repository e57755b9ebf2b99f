//! The ZF-SIC chain against an independent Gram-determinant computation.

mod common;

use mimomate::channel::{
    inter_channel_angle, projected_snr, subspace_angle, zf_sic_snr_chain, ChannelVector, ZERO_POWER_DB,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Determinant of a Hermitian positive semidefinite matrix by Gaussian
/// elimination with partial pivoting.
fn det(mut a: Vec<Vec<Complex64>>) -> f64 {
    let n = a.len();
    let mut d = Complex64::new(1.0, 0.0);
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].norm().total_cmp(&a[j][c].norm())).unwrap();
        if a[p][c].norm() == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                let v = a[c][k];
                a[r][k] -= f * v;
            }
        }
    }
    d.re
}

fn gram(vs: &[&ChannelVector]) -> Vec<Vec<Complex64>> {
    vs.iter()
        .map(|a| vs.iter().map(|b| a.gains().iter().zip(b.gains()).map(|(x, y)| x.conj() * y).sum()).collect())
        .collect()
}

/// `‖h‖² sin²θ` is the ratio of Gram determinants with and without `h`.
fn residual_power(h: &ChannelVector, ongoing: &[&ChannelVector]) -> f64 {
    let mut all = ongoing.to_vec();
    all.push(h);
    det(gram(&all)) / det(gram(ongoing))
}

#[test]
fn chain_matches_gram_determinants() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 2..=4 {
        for _ in 0..200 {
            let (channels, snrs) = common::random_cell(&mut rng, n, n);
            let chain: Vec<(&ChannelVector, f64)> = channels.iter().zip(snrs.iter().copied()).collect();
            let out = zf_sic_snr_chain(&chain, n).unwrap();
            assert_eq!(out[0], snrs[0]);
            for k in 1..n {
                let refs: Vec<&ChannelVector> = channels[..k].iter().collect();
                let expect = 10.0 * residual_power(&channels[k], &refs).log10();
                assert!((out[k] - expect).abs() < 1e-6, "n={n} k={k}: {} vs {expect}", out[k]);
            }
        }
    }
}

#[test]
fn pair_angle_is_the_one_dimensional_subspace_angle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let (c, _) = common::random_cell(&mut rng, 2, 3);
        let a = inter_channel_angle(&c[0], &c[1]).unwrap();
        let b = subspace_angle(&c[1], &[&c[0]]).unwrap();
        assert!((a - b).abs() < 1e-9);
        assert!((inter_channel_angle(&c[1], &c[0]).unwrap() - a).abs() < 1e-12);
    }
}

#[test]
fn parallel_channels_leave_no_power() {
    let h = ChannelVector::from_parts(0, &[(1.0, 0.5), (-0.3, 2.0)]).unwrap();
    let g = h.scaled(Complex64::new(0.0, -2.5)).unwrap();
    assert_eq!(subspace_angle(&g, &[&h]).unwrap(), 0.0);
    assert_eq!(projected_snr(20.0, 0.0).unwrap(), ZERO_POWER_DB);
}

#[test]
fn a_full_span_leaves_nothing_for_an_extra_client() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (c, _) = common::random_cell(&mut rng, 3, 2);
    assert_eq!(subspace_angle(&c[2], &[&c[0], &c[1]]).unwrap(), 0.0);
}

proptest! {
    #[test]
    fn appending_never_changes_earlier_positions(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (channels, snrs) = common::random_cell(&mut rng, n, n);
        let chain: Vec<(&ChannelVector, f64)> = channels.iter().zip(snrs.iter().copied()).collect();
        let full = zf_sic_snr_chain(&chain, n).unwrap();
        for k in 1..n {
            let part = zf_sic_snr_chain(&chain[..k], n).unwrap();
            prop_assert_eq!(&part[..], &full[..k]);
        }
    }

    #[test]
    fn projection_never_adds_power(snr in -10.0f64..40.0, theta in 0.0f64..=std::f64::consts::FRAC_PI_2) {
        prop_assert!(projected_snr(snr, theta).unwrap() <= snr + 1e-12);
    }

    #[test]
    fn angles_stay_in_range(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (c, _) = common::random_cell(&mut rng, 3, 3);
        let t = subspace_angle(&c[2], &[&c[0], &c[1]]).unwrap();
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&t));
        prop_assert!(t <= inter_channel_angle(&c[0], &c[2]).unwrap() + 1e-9);
    }
}
