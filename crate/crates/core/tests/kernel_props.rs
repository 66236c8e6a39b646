mod common;

use common::*;
use num_traits::{One, Zero};
use proptest::prelude::*;
use stepfi::rational::{q, qi, to_f64};
use stepfi::{StepKernel, Q};

fn sum(xs: impl IntoIterator<Item = Q>) -> Q {
    xs.into_iter().fold(Q::zero(), |a, b| a + b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn degree_bounds_and_norm(seed in any::<u64>(), n in 1usize..6) {
        let k = random_akernel(&mut rng(seed), n);
        let degrees = k.degrees();
        for d in &degrees {
            prop_assert!(k.min_degree() <= *d && *d <= k.max_degree());
        }
        let weighted = sum(degrees.iter().zip(k.mu()).map(|(d, m)| d * m));
        prop_assert_eq!(k.l1_norm(), weighted);
    }

    #[test]
    fn markov_columns_have_unit_mass(seed in any::<u64>(), n in 1usize..6) {
        let k = random_kernel(&mut rng(seed), n);
        let dagger = k.markov_renormalize();
        for j in 0..n {
            let column = sum((0..n).map(|i| &dagger.w()[i][j] * &k.mu()[i]));
            if k.degree(j).unwrap().is_zero() {
                prop_assert!(column.is_zero());
            } else {
                prop_assert!(column.is_one());
            }
        }
    }

    #[test]
    fn markov_bounds(seed in any::<u64>(), n in 1usize..6) {
        let k = random_connected_kernel(&mut rng(seed), n);
        let dagger = k.markov_renormalize();
        let (min, max) = (k.min_degree(), k.max_entry());
        prop_assert!(dagger.max_entry() <= &max / &min);
        prop_assert!(dagger.min_degree() >= &min / &max);
    }

    #[test]
    fn component_invariants(seed in any::<u64>(), types in 1usize..7) {
        let mut r = rng(seed);
        let k = random_disconnected_kernel(&mut r, types);
        let c = k.components();
        let mut seen = vec![0; k.n()];
        for &i in &c.isolated {
            seen[i] += 1;
            prop_assert!(k.degree(i).unwrap().is_zero());
        }
        for (members, mass) in c.components.iter().zip(&c.masses) {
            prop_assert!(!members.is_empty());
            prop_assert_eq!(mass, &sum(members.iter().map(|&i| k.mu()[i].clone())));
            for &i in members {
                seen[i] += 1;
                prop_assert!(!k.degree(i).unwrap().is_zero());
            }
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
        let part_of = |i: usize| c.components.iter().position(|m| m.contains(&i));
        for i in 0..k.n() {
            for j in 0..k.n() {
                if !k.w()[i][j].is_zero() {
                    prop_assert_eq!(part_of(i), part_of(j));
                }
            }
        }
        let smallest: Vec<usize> = c.components.iter().map(|m| m[0]).collect();
        prop_assert!(smallest.windows(2).all(|w| w[0] < w[1]));

        // Relabelling types relabels the decomposition.
        let shuffled = split_and_shuffle(&mut r, &k, 0);
        let d = shuffled.components();
        prop_assert_eq!(d.components.len(), c.components.len());
        prop_assert_eq!(d.isolated.len(), c.isolated.len());
        let mut a = c.masses.clone();
        let mut b = d.masses.clone();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);

        // Restricting to a component keeps its degrees after rescaling.
        for members in &c.components {
            let piece = k.rescale_restrict(members).unwrap();
            for (pos, &i) in members.iter().enumerate() {
                prop_assert_eq!(piece.degree(pos).unwrap(), k.degree(i).unwrap());
            }
        }
    }

    #[test]
    fn heart_keeps_components(seed in any::<u64>(), types in 1usize..7) {
        let k = random_disconnected_kernel(&mut rng(seed), types);
        let h = k.heart().unwrap();
        prop_assert_eq!(h.components(), k.components());
    }

    #[test]
    fn cw_is_scale_invariant_and_at_least_one(seed in any::<u64>(), n in 1usize..6, t in 1i64..20, s in 1i64..20) {
        let k = random_connected_kernel(&mut rng(seed), n);
        let c = k.cw_constant().unwrap();
        prop_assert!(c >= 1.0 - 1e-12);
        let scaled = k.scale(&q(t, s)).unwrap().cw_constant().unwrap();
        prop_assert!((c - scaled).abs() <= 1e-12);
    }
}

#[test]
fn heart_normalizes_constant_components() {
    let k = kernel(&[(1, 5), (4, 5)], &[&[(13, 1), (0, 1)], &[(0, 1), (7, 1)]]);
    let h = k.heart().unwrap();
    assert_eq!(h.degrees(), vec![qi(1), qi(1)]);
    assert_eq!(h.w(), k.markov_renormalize().w());
    let unit = uniform(&[&[0, 2], &[2, 0]]);
    assert_eq!(unit.heart().unwrap(), unit);
}

#[test]
fn cw_examples() {
    let k = uniform(&[&[2, 1], &[1, 0]]);
    assert!((k.cw_constant().unwrap() - 5f64.sqrt() / 2.0).abs() < 1e-15);
    assert!((constant(3).cw_constant().unwrap() - 1.0).abs() < 1e-15);
    assert!(constant(0).cw_constant().is_err());
    assert_eq!(to_f64(&k.l1_norm()), 1.0);
    let _: StepKernel = k;
}
