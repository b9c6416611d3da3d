//! Property tests against brute-force oracles.

mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{oracle, random_pair, SynthPair};
use tood::advisory::{is_affected, load_osv};
use tood::metrics::{compute_package_metrics, TimeWindow};
use tood::model::Declaration;
use tood::stats::{kendall_tau_b, spearman};
use tood::timeline::{PairTimeline, TimelineEngine};
use tood::{parse_requirement, parse_version, Ecosystem, SemVersion};

fn version() -> impl Strategy<Value = SemVersion> {
    (0u64..4, 0u64..4, 0u64..4, prop::option::of(0u64..3)).prop_map(|(a, b, c, pre)| {
        let text = match pre {
            Some(n) => format!("{a}.{b}.{c}-rc.{n}"),
            None => format!("{a}.{b}.{c}"),
        };
        parse_version(Ecosystem::Npm, &text).unwrap()
    })
}

fn grid() -> Vec<SemVersion> {
    let mut out = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                out.push(SemVersion::new(a, b, c));
            }
        }
    }
    out
}

fn timeline(p: &SynthPair) -> Option<PairTimeline> {
    let idx = p.release_index();
    let deps = p.dependency_index();
    let store = p.advisory_store();
    TimelineEngine::new(&idx, &deps, &store, p.cutoff).pair(&p.from, &p.to).ok()
}

fn seeded_pair(seed: u64) -> SynthPair {
    random_pair(&mut ChaCha8Rng::seed_from_u64(seed), 0)
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 256,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn version_text_round_trips(v in version()) {
        prop_assert_eq!(parse_version(Ecosystem::Npm, &v.text()).unwrap(), v);
    }

    #[test]
    fn prerelease_sorts_below_its_release(v in version()) {
        let (a, b, c) = v.triple();
        let release = SemVersion::new(a, b, c);
        if v.is_prerelease() {
            prop_assert!(v < release);
        } else {
            prop_assert_eq!(v, release);
        }
    }

    #[test]
    fn version_order_matches_tuple_order(a in version(), b in version()) {
        if !a.is_prerelease() && !b.is_prerelease() {
            prop_assert_eq!(a.cmp(&b), a.triple().cmp(&b.triple()));
        }
    }

    #[test]
    fn caret_matches_grid_oracle(a in 0u64..4, b in 0u64..4, c in 0u64..4) {
        let req = parse_requirement(Ecosystem::Npm, &format!("^{a}.{b}.{c}")).unwrap();
        for v in grid() {
            let (x, y, z) = v.triple();
            let at_least = (x, y, z) >= (a, b, c);
            let below = if a > 0 {
                x == a
            } else if b > 0 {
                x == 0 && y == b
            } else {
                (x, y, z) == (0, 0, c)
            };
            prop_assert_eq!(req.matches(&v), at_least && below, "^{}.{}.{} vs {}", a, b, c, v);
        }
    }

    #[test]
    fn requirement_display_round_trips(seed in any::<u64>()) {
        let p = seeded_pair(seed);
        for (_, d) in &p.declarations {
            if let Some(Declaration::Requirement(req)) = d {
                let again = parse_requirement(Ecosystem::Npm, &req.to_string()).unwrap();
                for v in grid() {
                    prop_assert_eq!(req.matches(&v), again.matches(&v), "{} vs {}", req, again);
                }
            }
        }
    }

    #[test]
    fn resolution_matches_linear_scan(seed in any::<u64>()) {
        let p = seeded_pair(seed);
        if p.unknown_dependency || p.dependency.is_empty() {
            return Ok(());
        }
        let idx = p.release_index();
        let mut instants: Vec<_> = p.dependency.iter().map(|(_, t)| *t).collect();
        instants.extend(instants.clone().into_iter().map(|t| t.plus_seconds(-1)));
        instants.push(p.cutoff);
        for (_, d) in &p.declarations {
            let Some(Declaration::Requirement(req)) = d else { continue };
            for &t in &instants {
                let got = idx.resolve_at(req, &p.to, t).unwrap().cloned();
                prop_assert_eq!(got, oracle::resolve_at(&p, req, t));
                let hi = idx.highest_available_at(&p.to, t).unwrap().cloned();
                prop_assert_eq!(hi, oracle::highest_at(&p, t));
            }
        }
    }

    #[test]
    fn highest_never_decreases(seed in any::<u64>()) {
        let p = seeded_pair(seed);
        if p.unknown_dependency || p.dependency.is_empty() {
            return Ok(());
        }
        let idx = p.release_index();
        let mut instants: Vec<_> = p.dependency.iter().map(|(_, t)| *t).collect();
        instants.sort();
        let mut last: Option<SemVersion> = None;
        for t in instants {
            let hi = idx.highest_available_at(&p.to, t).unwrap().cloned();
            prop_assert!(hi >= last);
            last = hi;
        }
    }

    #[test]
    fn range_and_version_list_encodings_agree(lo in 0usize..63, len in 1usize..20) {
        let g = grid();
        let hi = (lo + len).min(g.len() - 1);
        let (intro, fixed) = (&g[lo], &g[hi]);
        let ranged = serde_json::json!({
            "id": "R", "published": "2020-01-01T00:00:00Z",
            "affected": [{"package": {"ecosystem": "npm", "name": "x"},
                "ranges": [{"type": "SEMVER", "events": [{"introduced": intro.text()}, {"fixed": fixed.text()}]}]}]
        });
        let listed = serde_json::json!({
            "id": "L", "published": "2020-01-01T00:00:00Z",
            "affected": [{"package": {"ecosystem": "npm", "name": "x"},
                "versions": g[lo..hi].iter().map(|v| v.text()).collect::<Vec<_>>()}]
        });
        let load = load_osv([&ranged, &listed], None);
        let pkg = common::pkg("x");
        let adv = load.store.get(&pkg);
        prop_assert_eq!(adv.len(), 2);
        for v in &g {
            prop_assert_eq!(is_affected(&adv[0], v), is_affected(&adv[1], v), "{}", v);
        }
        prop_assert!(!is_affected(&adv[0], fixed));
    }

    #[test]
    fn ranks_survive_monotone_transforms(xs in prop::collection::vec(-50i32..50, 3..60), ys in prop::collection::vec(-50i32..50, 3..60)) {
        let n = xs.len().min(ys.len());
        let a: Vec<f64> = xs[..n].iter().map(|&x| x as f64).collect();
        let b: Vec<f64> = ys[..n].iter().map(|&y| y as f64).collect();
        let cube = |v: &[f64]| v.iter().map(|x| x * x * x).collect::<Vec<_>>();
        if let (Ok(k), Ok(s)) = (kendall_tau_b(&a, &b), spearman(&a, &b)) {
            prop_assert_eq!(k, kendall_tau_b(&cube(&a), &cube(&b)).unwrap());
            prop_assert_eq!(s, spearman(&cube(&a), &cube(&b)).unwrap());
        }
    }

    #[test]
    fn aggregate_ratios_stay_in_unit_interval(seeds in prop::collection::vec(any::<u64>(), 1..6)) {
        // Several dependencies of one importer.
        let timelines: Vec<PairTimeline> = seeds
            .iter()
            .enumerate()
            .filter_map(|(k, s)| {
                let mut p = random_pair(&mut ChaCha8Rng::seed_from_u64(*s), 0);
                p.to = common::pkg(&format!("lib-{k}"));
                for a in &mut p.advisories {
                    a.pkg = p.to.clone();
                }
                timeline(&p)
            })
            .collect();
        for m in compute_package_metrics(&timelines, TimeWindow::default()) {
            prop_assert!((0.0..=1.0).contains(&m.tood.ratio));
            prop_assert!(m.tood.days >= 0.0);
            if let Some(pf) = m.pfet {
                prop_assert!((0.0..=1.0).contains(&pf.ratio));
                prop_assert!(pf.days <= m.tood.days);
                prop_assert!(pf.ratio <= m.tood.ratio);
            }
        }
    }

    #[test]
    fn input_order_does_not_matter(seed in any::<u64>()) {
        let p = seeded_pair(seed);
        let mut q = p.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        q.importer.shuffle(&mut rng);
        q.dependency.shuffle(&mut rng);
        q.declarations.shuffle(&mut rng);
        q.advisories.shuffle(&mut rng);
        prop_assert_eq!(timeline(&p), timeline(&q));
    }
}

fn kendall_naive(a: &[f64], b: &[f64]) -> f64 {
    let (mut conc, mut disc, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let da = a[i].partial_cmp(&a[j]).unwrap() as i64;
            let db = b[i].partial_cmp(&b[j]).unwrap() as i64;
            match (da, db) {
                (0, 0) => {}
                (0, _) => ties_a += 1,
                (_, 0) => ties_b += 1,
                _ if da == db => conc += 1,
                _ => disc += 1,
            }
        }
    }
    let n0 = (conc + disc) as f64;
    (conc - disc) as f64 / ((n0 + ties_a as f64) * (n0 + ties_b as f64)).sqrt()
}

#[test]
fn kendall_matches_quadratic_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [2usize, 3, 10, 57, 200] {
        let a: Vec<f64> = (0..n).map(|_| rand::Rng::gen_range(&mut rng, 0..20) as f64).collect();
        let b: Vec<f64> = (0..n).map(|_| rand::Rng::gen_range(&mut rng, 0..20) as f64).collect();
        if let Ok(t) = kendall_tau_b(&a, &b) {
            assert!((t - kendall_naive(&a, &b)).abs() < 1e-12, "n={n}");
        }
    }
}

#[test]
fn generated_requirements_cover_every_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut seen = HashSet::new();
    for k in 0..300 {
        for (_, d) in random_pair(&mut rng, k).declarations {
            match d {
                Some(Declaration::Requirement(r)) => {
                    let t = r.source_text();
                    let form = t.chars().next().map(|c| if c.is_ascii_digit() { '0' } else { c });
                    seen.insert(form.unwrap());
                }
                Some(Declaration::Unparseable(_)) => {
                    seen.insert('?');
                }
                None => {
                    seen.insert('-');
                }
            }
        }
    }
    for c in ['^', '~', '>', '=', '*', '<', '0', '?', '-'] {
        assert!(seen.contains(&c), "{c}");
    }
}
