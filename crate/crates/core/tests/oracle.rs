use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qsf_core::benchmarks::{linear_profile, two_sided_square};
use qsf_core::domain::assign_boundary_by;
use qsf_core::oracle::{brute_force_min, candidate_estimate, eligible_edges};
use qsf_core::{BoundaryKind, CrackSet, Mesh};

/// The mesh with its nodes relabelled by `perm` and triangles shuffled.
fn relabel(m: &Mesh, perm: &[usize], rng: &mut ChaCha8Rng) -> Mesh {
    let mut nodes = vec![[0.0; 2]; m.node_count()];
    for (old, &new) in perm.iter().enumerate() {
        nodes[new] = m.node(old);
    }
    let mut tris: Vec<[usize; 3]> = m.triangles().iter().map(|t| [perm[t[0]], perm[t[1]], perm[t[2]]]).collect();
    tris.shuffle(rng);
    Mesh::new(nodes, tris).unwrap()
}

fn side_kind(p: [f64; 2]) -> BoundaryKind {
    if p[0] < 1e-9 || p[0] > 1.0 - 1e-9 { BoundaryKind::Dirichlet } else { BoundaryKind::Neumann }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn minimum_does_not_depend_on_labels(seed in 0u64..10_000, lambda in 0.0..2.5f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, bp) = two_sided_square(0.5).unwrap();
        let mut perm: Vec<usize> = (0..m.node_count()).collect();
        perm.shuffle(&mut rng);
        let p = relabel(&m, &perm, &mut rng);
        let pbp = assign_boundary_by(&p, side_kind).unwrap();
        let a = brute_force_min(&m, &bp, &linear_profile(&m, lambda), &CrackSet::empty(), 2, false).unwrap();
        let b = brute_force_min(&p, &pbp, &linear_profile(&p, lambda), &CrackSet::empty(), 2, false).unwrap();
        prop_assert!((a.energies.total - b.energies.total).abs() <= 1e-10);
        prop_assert_eq!(a.candidates, b.candidates);
        // Ties may pick different representatives, but only of equal length.
        prop_assert!((a.energies.surface - b.energies.surface).abs() <= 1e-10);
        prop_assert_eq!(a.crack.edge_count(), b.crack.edge_count());
    }
}

#[test]
fn table_minimum_is_the_reported_minimum() {
    let (m, bp) = two_sided_square(0.5).unwrap();
    let g = linear_profile(&m, 1.3);
    let r = brute_force_min(&m, &bp, &g, &CrackSet::empty(), 2, true).unwrap();
    let table = r.table.as_ref().unwrap();
    assert_eq!(table.len(), r.candidates);
    assert!(table.iter().all(|row| row.energies.total >= r.energies.total - 1e-12));
    let ranked = r.ranked().unwrap();
    assert_eq!(ranked[0].crack, r.crack);
}

#[test]
fn candidate_estimate_bounds_the_enumeration() {
    let (m, bp) = two_sided_square(0.5).unwrap();
    let g = linear_profile(&m, 0.5);
    for budget in 1..=3 {
        let eligible = eligible_edges(&m, &CrackSet::empty(), budget).len();
        let r = brute_force_min(&m, &bp, &g, &CrackSet::empty(), budget, false).unwrap();
        assert!(r.candidates as u128 <= candidate_estimate(eligible, budget) + m.node_count() as u128);
    }
}
