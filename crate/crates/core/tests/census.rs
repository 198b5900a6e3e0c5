use jacaranda_core::aperiodicity::{parity_obstruction, replay, sweep, Outcome, SweepReport};
use jacaranda_core::complexity::{check_inequalities, closure_patch_sets, enumerate_patches, Census, CensusConfig};
use jacaranda_core::{Address, Letter, RootImage, Substreetution};
use proptest::prelude::*;

/// Substitutions with a fixed root color, as `(substitution, root)`.
fn fixed_substitution() -> impl Strategy<Value = (Substreetution, u8)> {
    let image = (0u8..2, 0u8..2, 0u8..2).prop_map(|(root, a, b)| RootImage { root, a, b });
    let letter = any::<bool>().prop_map(|b| Letter::from_bit(b as u64));
    (image.clone(), image, [letter.clone(), letter.clone(), letter.clone(), letter], 0u8..2)
        .prop_filter_map("no fixed root", |(i0, i1, g, root)| {
            let s = Substreetution::new([i0, i1], g).ok()?;
            s.fixes(root).then_some((s, root))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn census_matches_closure_and_packed_scan((s, root) in fixed_substitution()) {
        let n_max = 6;
        let shared = Census::new(s.clone(), root, CensusConfig::default()).unwrap();
        let closure = closure_patch_sets(&s, root, n_max).unwrap();
        let mut all_stable = true;
        for n in 1..=n_max {
            let c = shared.patches(n).unwrap();
            let exact = &closure[n as usize - 1];
            // scanning never invents patches; the flag is only set on the exact set
            prop_assert!(c.patches.to_set().is_subset(exact));
            if c.stabilized {
                prop_assert_eq!(&c.patches.to_set(), exact);
            } else if all_stable {
                // a run of equal colors can first occur beyond the cap
                prop_assert!(&c.patches.to_set() != exact);
            }
            all_stable &= c.stabilized;
            if !all_stable {
                continue;
            }
            // some patches first occur far down, so only compare where a flat prefix fits
            let depth = c.generation_depth();
            if depth > 24 {
                continue;
            }
            let tree = s.fixed_point(root, depth).unwrap();
            let scanned = enumerate_patches(&tree, n, 2).unwrap();
            prop_assert_eq!(&scanned, &c.patches);
            // cylinder guard: each minimal witness really carries its patch
            for (p, w) in c.patches.iter() {
                for addr in [&w.odd, &w.even].into_iter().flatten() {
                    prop_assert_eq!(&tree.window(addr, n).unwrap(), p);
                }
            }
        }
        if !all_stable {
            return Ok(());
        }
        for n in 1..=n_max / 2 {
            let images = shared.kappa_even_via_bijection(n).unwrap();
            prop_assert_eq!(images.images, shared.kappa_split(2 * n).unwrap().even);
        }
        let report = check_inequalities(&shared.table(n_max).unwrap());
        prop_assert!(report.rule("strictly_increasing").count() + report.rule("stationary").count() > 0);
        prop_assert!(report.rule("stationary").all(|c| c.passed));
        prop_assert!(report.rule("parity_cover").all(|c| c.passed));
    }
}

#[test]
fn late_runs_stay_unstabilized() {
    // a window with an all-ones line of length 16 first occurs beyond the default cap
    let s: Substreetution = "001,100;AABA".parse().unwrap();
    let c = Census::new(s.clone(), 1, CensusConfig::default()).unwrap();
    let p = c.patches(5).unwrap();
    assert!(!p.stabilized);
    assert_eq!(p.kappa() + 1, closure_patch_sets(&s, 1, 5).unwrap()[4].len());
    assert!(c.stable_patches(5).is_err());
}

#[test]
fn table_is_independent_of_workers_and_backend() {
    let reference = Census::jacaranda(CensusConfig::packed(24)).unwrap().table(8).unwrap();
    for workers in [1, 3, 8] {
        let packed = Census::jacaranda(CensusConfig {
            workers,
            ..CensusConfig::packed(24)
        })
        .unwrap();
        assert_eq!(packed.table(8).unwrap(), reference);
        let shared = Census::jacaranda(CensusConfig {
            workers,
            ..Default::default()
        })
        .unwrap();
        let t = shared.table(8).unwrap();
        let kappas: Vec<_> = t.rows.iter().map(|r| (r.kappa, r.kappa_odd, r.kappa_even)).collect();
        let expected: Vec<_> = reference.rows.iter().map(|r| (r.kappa, r.kappa_odd, r.kappa_even)).collect();
        assert_eq!(kappas, expected);
    }
}

#[test]
fn kappa_csv_round_trip() {
    let t = Census::jacaranda(CensusConfig::default()).unwrap().table(12).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    assert_eq!(jacaranda_core::complexity::KappaTable::read_csv(&buf[..]).unwrap(), t);
}

#[test]
fn odd_words_short_circuit() {
    for w in Address::all_up_to(7).filter(|w| w.len() % 2 == 1) {
        assert_eq!(parity_obstruction(&w).unwrap(), Some(Outcome::ParityObstruction));
    }
    let census = Census::jacaranda(CensusConfig::default()).unwrap();
    let r = sweep(&census, 3, 10, 2).unwrap();
    for c in &r.certificates {
        if c.omega.len() % 2 == 1 {
            assert_eq!(c.outcome, Outcome::ParityObstruction);
            assert!(c.depth.is_none() && c.candidates.is_none());
        }
    }
}

#[test]
fn sweep_replays_and_round_trips() {
    let census = Census::jacaranda(CensusConfig::default()).unwrap();
    let r = sweep(&census, 4, 14, 4).unwrap();
    assert!(r.passed());
    assert!(replay(&r, &census).unwrap().is_empty());
    let back = SweepReport::from_json(&r.to_json().unwrap()).unwrap();
    assert_eq!(back, r);

    // replaying against a fresh census gives the same verdicts
    let fresh = Census::jacaranda(CensusConfig::default()).unwrap();
    assert!(replay(&back, &fresh).unwrap().is_empty());

    // a reduction whose target is dropped no longer replays
    let mut broken = r.clone();
    let reduced = broken
        .certificates
        .iter()
        .find(|c| c.outcome == Outcome::Reduced)
        .cloned()
        .expect("some word is reduced");
    let target = reduced.reduction_chain.as_ref().unwrap()[0].clone();
    broken.certificates.retain(|c| c.omega != target);
    let bad = replay(&broken, &census).unwrap();
    assert!(bad.contains(&reduced.omega), "{bad:?}");
}

#[test]
fn shallow_sweep_falls_back_on_reduction() {
    // at D = 6 every length-2 word keeps candidates, but both halves have length 1
    let census = Census::jacaranda(CensusConfig::default()).unwrap();
    let r = sweep(&census, 2, 6, 1).unwrap();
    assert!(r.passed());
    assert_eq!(r.count(Outcome::Reduced), 4);
    assert_eq!(r.count(Outcome::Refuted), 0);
    let deeper = sweep(&census, 2, 8, 1).unwrap();
    assert_eq!(deeper.count(Outcome::Refuted), 4);
}
