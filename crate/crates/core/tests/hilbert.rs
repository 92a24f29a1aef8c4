use proptest::prelude::*;
use rydquench::hilbert::*;
use rydquench::lattice::{build_ring, build_square, Adjacency};
use rydquench::{QuenchParams, RydbergModel, C64};

/// Independent sets by scanning all configurations.
fn brute_independent(n: usize, bonds: &[(usize, usize)]) -> Vec<u64> {
    (0..1u64 << n)
        .filter(|x| bonds.iter().all(|&(j, k)| (x >> j) & (x >> k) & 1 == 0))
        .collect()
}

fn pair_bonds(nb: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (j, v) in nb.iter().enumerate() {
        for &k in v {
            if j < k {
                out.push((j, k));
            }
        }
    }
    out
}

#[test]
fn ring_blockade_dimension_is_lucas() {
    let expect = [(3usize, 4usize), (4, 7), (5, 11), (10, 123), (12, 322), (16, 2207), (20, 15127)];
    for (n, l) in expect {
        let b = enumerate_basis(&build_ring(n, 1.0).unwrap(), &BasisKind::BlockadeNn).unwrap();
        assert_eq!(b.dim(), l, "N={n}");
    }
}

#[test]
fn blockade_bases_match_brute_force() {
    for n in 3..=12 {
        let lat = build_ring(n, 1.0).unwrap();
        let got = enumerate_basis(&lat, &BasisKind::BlockadeNn).unwrap();
        assert_eq!(got.states(), brute_independent(n, &lat.nn_bonds()).as_slice());
    }
    for (nx, ny) in [(2, 2), (3, 3), (3, 4)] {
        let lat = build_square(nx, ny, 1.0).unwrap();
        let xy = enumerate_basis(&lat, &BasisKind::BlockadeNn).unwrap();
        assert_eq!(xy.states(), brute_independent(nx * ny, &lat.nn_bonds()).as_slice());
        let xyd = enumerate_basis(&lat, &BasisKind::BlockadeXyd).unwrap();
        let bonds = pair_bonds(&lat.neighbors(Adjacency::Xyd).unwrap());
        assert_eq!(xyd.states(), brute_independent(nx * ny, &bonds).as_slice());
    }
}

#[test]
fn island_shells_nest() {
    let lat = build_ring(10, 1.0).unwrap();
    let blockade = enumerate_basis(&lat, &BasisKind::BlockadeNn).unwrap();
    let s1 = enumerate_basis(&lat, &BasisKind::IslandShell(1)).unwrap();
    assert_eq!(s1.states(), blockade.states());
    let mut prev = s1;
    for k in 2..=10 {
        let s = enumerate_basis(&lat, &BasisKind::IslandShell(k)).unwrap();
        assert!(prev.states().iter().all(|&x| s.contains(x)));
        assert!(s.dim() > prev.dim() || k == 10);
        prev = s;
    }
    // k = N still excludes nothing but the fully excited loop's runs are N long
    assert_eq!(prev.dim(), 1 << 10);
    let pair = enumerate_basis(&lat, &BasisKind::IslandPairShell).unwrap();
    let shell2 = enumerate_basis(&lat, &BasisKind::IslandShell(2)).unwrap();
    assert!(blockade.states().iter().all(|&x| pair.contains(x)));
    let order = lat.order();
    let oracle: Vec<u64> = (0..1u64 << 10)
        .filter(|&x| {
            let runs = cyclic_runs(x, &order);
            let count = |k| runs.iter().filter(|&&r| r == k).count();
            runs.iter().all(|&r| r == 1) || (count(1) == count(2) && count(1) > 0)
        })
        .collect();
    assert_eq!(pair.states(), oracle.as_slice());
    assert!(pair.contains(0b0111011010));
    assert!(!shell2.contains(0b0111011010));
    assert!(pair.contains(0b0000100110));
    assert!(!pair.contains(0b0000000110));
}

#[test]
fn resonance_manifold_at_two_island_point() {
    // nearest-neighbor model at 2Δ = V1: every 2-island costs nothing
    let p = QuenchParams { omega: 1.0, delta: 10.0, c6: 20.0 };
    let lat = build_ring(8, 1.0).unwrap();
    let model = RydbergModel::with_range(lat.clone(), p, rydquench::CouplingRange::NearestNeighbor).unwrap();
    let m = resonance_manifold(&model, 0.0, None).unwrap();
    let order = lat.order();
    for &x in m.states() {
        let runs = cyclic_runs(x, &order);
        // E = Σ_runs (V1 (r−1) − Δ r) = Δ Σ (r − 2)
        assert_eq!(runs.iter().map(|&r| r as i64 - 2).sum::<i64>(), 0, "{x:b}");
    }
    assert!(m.contains(0));
    assert!(m.contains(0b0000_0110));
    assert!(m.contains(0b0110_0110));
    assert!(m.contains(0b0100_1110));
    assert!(!m.contains(0b0000_0010));
    // brute-force count of configurations with Σ(r − 2) = 0
    let count = (0..1u64 << 8)
        .filter(|&x| cyclic_runs(x, &order).iter().map(|&r| r as i64 - 2).sum::<i64>() == 0 && x != 0xff)
        .count();
    assert_eq!(m.dim(), count);
}

#[test]
fn hex_dump_round_trip_and_errors() {
    let lat = build_ring(9, 1.0).unwrap();
    let b = enumerate_basis(&lat, &BasisKind::BlockadeNn).unwrap();
    let text = b.to_hex_dump();
    let back = BasisIndex::from_hex_dump(&text, 9).unwrap();
    assert_eq!(back.states(), b.states());
    assert!(BasisIndex::from_hex_dump("0x0\n0x1\n\n0x3\n", 2).is_ok());
    for (bad, line) in [("0\n2\n1\n", 3), ("0\nzz\n", 2), ("0\n200\n", 2), ("1\n1\n", 2)] {
        match BasisIndex::from_hex_dump(bad, 9) {
            Err(rydquench::Error::Parse { line: l, .. }) => assert_eq!(l, line, "{bad:?}"),
            other => panic!("{bad:?}: {other:?}"),
        }
    }
}

#[test]
fn projection_drops_missing_amplitudes() {
    let lat = build_ring(6, 1.0).unwrap();
    let full = enumerate_basis(&lat, &BasisKind::Full).unwrap();
    let blockade = enumerate_basis(&lat, &BasisKind::BlockadeNn).unwrap();
    let v: Vec<C64> = (0..64).map(|i| C64::new(i as f64, -(i as f64) / 2.0)).collect();
    let p = project_state(&v, &full, &blockade).unwrap();
    assert_eq!(p.len(), blockade.dim());
    for (i, &x) in blockade.states().iter().enumerate() {
        assert_eq!(p[i], v[x as usize]);
    }
    let up = project_state(&p, &blockade, &full).unwrap();
    assert_eq!(up[0b11], C64::new(0.0, 0.0));
    assert_eq!(up[0b101], v[0b101]);
}

#[test]
fn too_many_sites_for_full_space() {
    let lat = build_ring(22, 1.0).unwrap();
    assert!(matches!(
        enumerate_basis(&lat, &BasisKind::Full),
        Err(rydquench::Error::DimensionTooLarge { .. })
    ));
}

proptest! {
    #[test]
    fn index_of_inverts_state(n in 4usize..14, pick in 0usize..10_000) {
        let lat = build_ring(n, 1.0).unwrap();
        let b = enumerate_basis(&lat, &BasisKind::BlockadeNn).unwrap();
        let i = pick % b.dim();
        prop_assert_eq!(b.index_of(b.state(i)), Some(i));
    }

    #[test]
    fn bitstring_text_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..130)) {
        let s: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        let parsed = Bitstring::parse(&s).unwrap();
        prop_assert_eq!(parsed.to_string(), s);
        prop_assert_eq!(parsed.hamming(), bits.iter().filter(|&&b| b).count());
    }
}
