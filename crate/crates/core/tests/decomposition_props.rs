//! Direct-sum properties of the space decomposition on a layout with conductors.

use std::sync::OnceLock;

use edgerom::decomposition::{SpaceDecomposition, SpaceId, DEFAULT_EXTENSION_FREQUENCY};
use edgerom::mesh::GeometrySpec;
use edgerom::model::Model;
use edgerom::sparse::norm_inf;
use edgerom::c64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model() -> &'static Model {
    static MODEL: OnceLock<Model> = OnceLock::new();
    MODEL.get_or_init(|| Model::with_defaults(&GeometrySpec::preset_geometry1(), 12, 3).unwrap())
}

fn decomposition() -> SpaceDecomposition<'static> {
    let m = model();
    SpaceDecomposition::new(&m.system, &m.grid, &m.dofs, 2.0 * std::f64::consts::PI * DEFAULT_EXTENSION_FREQUENCY).unwrap()
}

fn random_vector(n: usize, seed: u64) -> Vec<c64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn sub(a: &[c64], b: &[c64]) -> Vec<c64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn components_sum_to_the_input(seed in any::<u64>()) {
        let dec = decomposition();
        let phi = random_vector(dec.n_dofs(), seed);
        let mut sum = vec![c64::new(0.0, 0.0); phi.len()];
        for (_, part) in dec.project(&phi).unwrap() {
            sum.iter_mut().zip(&part).for_each(|(s, p)| *s += p);
        }
        prop_assert!(norm_inf(&sub(&sum, &phi)) < 1e-11 * norm_inf(&phi));
    }

    #[test]
    fn projections_are_idempotent_and_mutually_annihilating(seed in any::<u64>(), pick in 0usize..1000) {
        let dec = decomposition();
        let spaces = dec.spaces();
        let phi = random_vector(dec.n_dofs(), seed);
        let parts = dec.project(&phi).unwrap();
        let (space, part) = &parts[pick % parts.len()];
        let again = dec.project(part).unwrap();
        let scale = norm_inf(part).max(1e-300);
        for ((other, q), s) in again.iter().zip(&spaces) {
            prop_assert_eq!(other, s);
            if other == space {
                prop_assert!(norm_inf(&sub(q, part)) < 1e-11 * scale);
            } else {
                prop_assert!(norm_inf(q) < 1e-11 * scale, "{} leaks into {}", space, other);
            }
        }
    }

    #[test]
    fn components_live_on_their_supports(seed in any::<u64>()) {
        let dec = decomposition();
        let phi = random_vector(dec.n_dofs(), seed);
        for (space, part) in dec.project(&phi).unwrap() {
            let support = dec.support(space).unwrap();
            for (d, v) in part.iter().enumerate() {
                if support.binary_search(&d).is_err() {
                    prop_assert!(*v == c64::new(0.0, 0.0));
                }
            }
        }
    }
}

#[test]
fn extensions_are_discrete_harmonic_at_the_extension_frequency() {
    let dec = decomposition();
    let a = dec.sys.matrix_at(dec.omega_ext);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (k, &(i, j)) in dec.sets.interfaces.iter().enumerate() {
        let seeds = dec.sets.seeds[k].len();
        if seeds == 0 {
            continue;
        }
        let s: Vec<c64> = (0..seeds).map(|_| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let ext = dec.extend(SpaceId::Interface(i, j), &s).unwrap();
        let r = a.mul_vec(&ext);
        let block = dec.extension_block(k).unwrap();
        let res: Vec<c64> = block.interior.iter().map(|&d| r[d]).collect();
        let scale = norm_inf(&a.mul_vec(&ext.iter().enumerate().map(|(d, v)| if block.interior.binary_search(&d).is_err() { *v } else { c64::new(0.0, 0.0) }).collect::<Vec<_>>()));
        assert!(norm_inf(&res) <= 1e-9 * scale, "interface {i}-{j}: {:e} vs {scale:e}", norm_inf(&res));
    }
}
