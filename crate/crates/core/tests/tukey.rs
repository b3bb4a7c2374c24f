use dpmean::dp::{indistinguishability_delta, CompositionLedger, PrivacyBudget};
use dpmean::experiment::{declared_budget, run_trial, Mechanism, TrialSpec};
use dpmean::linalg::PsdMatrix;
use dpmean::rng::{open_unit, standard_normal, trial_rng};
use dpmean::stats::{clopper_pearson, normal_cdf, normal_quantile};
use dpmean::synth::{synthesize, Family, SynthSpec};
use dpmean::tukey::depth::depth_count_2d;
use dpmean::tukey::exact::tiny_distribution;
use dpmean::tukey::pipeline::{discrete_tukey_pipeline, snap_dataset, tukey_stage_one};
use dpmean::tukey::ptr::{ptr_fail_probability, tukey_ptr_report};
use dpmean::tukey::{
    certified_distance, default_gap, depth_count, exact_unsafe_distance, expected_tukey_depth,
    restricted_exp_distribution, restricted_exp_mechanism, safety_certificate, tukey_depth,
    tukey_ptr, DepthProfile, DistanceMode, ExactSafety, GridSpec, TukeyPipelineConfig,
};
use dpmean::Dataset;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn budget(e: f64, d: f64) -> PrivacyBudget {
    PrivacyBudget::new(e, d).unwrap()
}

fn gaussian(d: usize, n: usize, seed: u64) -> Dataset {
    let spec = SynthSpec::new(Family::Gaussian, vec![0.0; d], PsdMatrix::identity(d), n).unwrap();
    synthesize(&spec, &mut trial_rng(seed, 0))
}

/// Closed-halfplane count through `y` in direction `v`.
fn halfplane(x: &Dataset, y: [f64; 2], v: [f64; 2]) -> usize {
    x.rows()
        .filter(|r| (r[0] - y[0]) * v[0] + (r[1] - y[1]) * v[1] >= 0.0)
        .count()
}

/// Depth from directions normal to every `x_i − y`, each also rotated a
/// hair to either side.
fn brute_force_depth(x: &Dataset, y: [f64; 2]) -> usize {
    let mut best = x.len();
    for r in x.rows() {
        let base = (r[1] - y[1]).atan2(r[0] - y[0]);
        for turn in [std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2] {
            for wiggle in [-1e-7, 0.0, 1e-7] {
                let a = base + turn + wiggle;
                best = best.min(halfplane(x, y, [a.cos(), a.sin()]));
            }
        }
    }
    best
}

#[test]
fn one_dimensional_depth_examples() {
    let x = Dataset::from_scalars(&[1.0, 2.0, 3.0, 4.0, 5.0]);
    assert_eq!(tukey_depth(&x, &[3.0]).unwrap(), 3.0 / 5.0);
    assert_eq!(tukey_depth(&x, &[5.5]).unwrap(), 0.0);
    let square = Dataset::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
    assert_eq!(tukey_depth(&square, &[2.0, 0.5]).unwrap(), 0.0);
}

#[test]
fn planar_depth_matches_direction_enumeration() {
    for seed in 0..20 {
        let x = gaussian(2, 15, seed);
        let mut rng = trial_rng(seed, 1);
        for _ in 0..10 {
            let y = [
                standard_normal(&mut rng) * 0.7,
                standard_normal(&mut rng) * 0.7,
            ];
            let ours = depth_count(&x, &y).unwrap();
            assert_eq!(ours, brute_force_depth(&x, y), "seed {seed} y {y:?}");
            let sweep = (0..10_000)
                .map(|k| {
                    let a = std::f64::consts::TAU * k as f64 / 10_000.0;
                    halfplane(&x, y, [a.cos(), a.sin()])
                })
                .min()
                .unwrap();
            assert!(ours <= sweep);
        }
    }
}

#[test]
fn expected_depth_values() {
    let s = PsdMatrix::from_row_slice(2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
    assert_eq!(
        expected_tukey_depth(&[1.0, 2.0], &[1.0, 2.0], &s).unwrap(),
        0.5
    );
    let i = PsdMatrix::identity(2);
    let v = expected_tukey_depth(&[0.6, 0.8], &[0.0, 0.0], &i).unwrap();
    assert!((v - 0.158_655_253_931_457_05).abs() < 1e-12);
}

#[test]
fn planar_depth_tracks_population_depth() {
    let sigma = PsdMatrix::from_row_slice(2, &[2.0, 0.6, 0.6, 1.0]).unwrap();
    let mu = vec![1.0, -1.0];
    let spec = SynthSpec::new(Family::Gaussian, mu.clone(), sigma.clone(), 100_000).unwrap();
    let mut rng = trial_rng(40, 0);
    let x = synthesize(&spec, &mut rng);
    let pts: Vec<[f64; 2]> = x.rows().map(|r| [r[0], r[1]]).collect();
    for _ in 0..3 {
        let y = [
            mu[0] + standard_normal(&mut rng),
            mu[1] + standard_normal(&mut rng),
        ];
        let emp = depth_count_2d(pts.iter().copied(), y) as f64 / x.len() as f64;
        let pop = expected_tukey_depth(&y, &mu, &sigma).unwrap();
        assert!((emp - pop).abs() <= 0.01, "{emp} vs {pop}");
    }
}

#[test]
fn profile_agrees_with_pointwise_depth() {
    let x = Dataset::from_scalars(&[-1.0, 0.0, 0.0, 1.5]);
    let g = GridSpec::with_cells(9, 0.5, 1).unwrap();
    let p = DepthProfile::compute(&x, &g).unwrap();
    for i in 0..g.per_axis() {
        let c = g.axis_center(i);
        assert_eq!(
            p.depth_at(&[c]) as usize,
            depth_count(&x, &[c]).unwrap(),
            "cell {c}"
        );
    }
}

/// Largest gap between empirical and population depth over grid centers.
fn typicality(profile: &DepthProfile, n: usize, d: usize) -> f64 {
    let i = PsdMatrix::identity(d);
    (0..profile.stored_cells())
        .map(|c| {
            let y = profile.stored_center(c);
            let emp = profile.stored_depths()[c] as f64 / n as f64;
            (emp - expected_tukey_depth(&y, &vec![0.0; d], &i).unwrap()).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn depth_converges_uniformly() {
    for (d, alpha) in [(1, 0.01), (2, 0.25)] {
        let good = (0..10)
            .filter(|&t| {
                let x = gaussian(d, 5000, 100 + t);
                let g = GridSpec::new(4.0, alpha, d).unwrap();
                typicality(&DepthProfile::compute(&x, &g).unwrap(), 5000, d) <= 0.05
            })
            .count();
        assert!(good >= 9, "d = {d}: {good} of 10 typical");
    }
}

#[test]
fn volume_ratio_bound_on_typical_data() {
    let n = 5000;
    for (d, alpha) in [(1, 0.005), (2, 0.05)] {
        let x = gaussian(d, n, 7);
        let g = GridSpec::new(2.5, alpha, d).unwrap();
        let p = DepthProfile::compute(&x, &g).unwrap();
        let a1 = typicality(&p, n, d);
        let (pp, qq) = (0.25, 0.375);
        let ratio = p.volume(n as f64 * pp) / p.volume(n as f64 * qq);
        let bound =
            (normal_quantile(1.0 - pp + a1) / normal_quantile(1.0 - qq - a1)).powi(d as i32);
        assert!(
            ratio <= bound,
            "d = {d}: ratio {ratio} above {bound} (typicality {a1})"
        );
    }
}

#[test]
fn certificate_clamps_and_degenerate_data() {
    let x = gaussian(1, 400, 3);
    let g = GridSpec::new(4.0, 0.1, 1).unwrap();
    let p = DepthProfile::compute(&x, &g).unwrap();
    let b = budget(1.0, 1e-6);
    let gap = default_gap(400);
    // t − k − 1 < 0 makes the numerator the whole grid.
    let c = safety_certificate(&p, b, 10.0, 12, gap);
    let den = p.count_at_least(10.0 + 12.0 + gap + 1.0);
    assert!(den > 0.0);
    assert_eq!(c.volume_ratio, g.total_cells() / den);
    // Nothing is deeper than n/2, so the upper level set is empty.
    assert!(!safety_certificate(&p, b, 190.0, 0, gap).passed);
    let same = Dataset::from_scalars(&[0.25; 400]);
    let p = DepthProfile::compute(&same, &g).unwrap();
    // One occupied cell: both level sets stay that cell until the lower
    // level drops to zero, and the upper one empties past depth n.
    let cd = certified_distance(&p, b, 100.0, default_gap(400));
    assert!((99..=250).contains(&cd), "certified distance {cd}");
}

#[test]
fn typical_data_is_certified_far_from_unsafe() {
    let (eps, delta, beta): (f64, f64, f64) = (1.0, 1e-6, 0.05);
    let k = ((1.0 / (2.0 * delta * beta)).ln() / eps).floor() as usize;
    let g = GridSpec::new(6.0, 0.05, 1).unwrap();
    let passed = (0..100)
        .filter(|&t| {
            let x = gaussian(1, 2000, 200 + t);
            let p = DepthProfile::compute(&x, &g).unwrap();
            safety_certificate(&p, budget(eps, delta), 500.0, k, default_gap(2000)).passed
        })
        .count();
    assert!(passed >= 95, "{passed} of 100");
}

#[test]
fn exact_distance_conventions() {
    let g = GridSpec::with_cells(5, 1.0, 1).unwrap();
    let x = Dataset::from_scalars(&[-2.0, -1.0, 1.0, 2.0]);
    // A δ this close to one makes every grid dataset safe.
    assert_eq!(
        exact_unsafe_distance(&x, &g, budget(0.5, 0.999), 1.0).unwrap(),
        5
    );
    let safety = ExactSafety::build(&g, 4, budget(0.5, 0.05), 1.0).unwrap();
    let unsafe_counts = safety
        .multisets()
        .iter()
        .find(|m| !safety.is_safe_counts(m))
        .expect("some unsafe multiset")
        .clone();
    assert_eq!(safety.distance_counts(&unsafe_counts), 0);
    let big = GridSpec::with_cells(13, 1.0, 1).unwrap();
    assert!(ExactSafety::build(&big, 4, budget(0.5, 0.05), 1.0).is_err());
    assert!(ExactSafety::build(&g, 7, budget(0.5, 0.05), 1.0).is_err());
}

/// Random tiny instances: grid size, n, budget, t and a dataset drawn on the grid.
fn tiny_suite(count: u64, seed: u64) -> Vec<(GridSpec, PrivacyBudget, f64, Dataset)> {
    (0..count)
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let cells = 4 + (open_unit(&mut rng) * 9.0) as u64;
            let n = 2 + (open_unit(&mut rng) * 5.0) as usize;
            let eps = [0.25, 0.5, 1.0, 2.0, 4.0][(open_unit(&mut rng) * 5.0) as usize];
            let delta = [1e-3, 0.01, 0.05, 0.2][(open_unit(&mut rng) * 4.0) as usize];
            let t = [0.5, 1.0, n as f64 / 4.0][(open_unit(&mut rng) * 3.0) as usize];
            let g = GridSpec::with_cells(cells, 1.0, 1).unwrap();
            let vals: Vec<f64> = (0..n)
                .map(|_| g.axis_center((open_unit(&mut rng) * cells as f64) as u64))
                .collect();
            (g, budget(eps, delta), t, Dataset::from_scalars(&vals))
        })
        .collect()
}

#[test]
fn certificate_never_exceeds_exact_distance() {
    let g = GridSpec::with_cells(5, 1.0, 1).unwrap();
    let b = budget(0.5, 0.05);
    let safety = ExactSafety::build(&g, 4, b, 1.0).unwrap();
    for i in 0..50 {
        let mut rng = trial_rng(60, i);
        let vals: Vec<f64> = (0..4)
            .map(|_| g.axis_center((open_unit(&mut rng) * 5.0) as u64))
            .collect();
        let x = Dataset::from_scalars(&vals);
        let p = DepthProfile::compute(&x, &g).unwrap();
        let cert = certified_distance(&p, b, 1.0, default_gap(4));
        assert!(cert <= safety.distance(&x).unwrap());
    }
    for (g, b, t, x) in tiny_suite(50, 61) {
        let p = DepthProfile::compute(&x, &g).unwrap();
        let exact = exact_unsafe_distance(&x, &g, b, t).unwrap();
        for k in 0..=x.len() {
            if safety_certificate(&p, b, t, k, default_gap(x.len())).passed {
                assert!(exact > k, "certificate passed at {k}, exact {exact}");
            }
        }
    }
}

/// Cell depths of a one-dimensional multiset, computed directly.
fn cell_depths(counts: &[u8]) -> Vec<usize> {
    let n: usize = counts.iter().map(|&c| c as usize).sum();
    (0..counts.len())
        .map(|i| {
            let le: usize = counts[..=i].iter().map(|&c| c as usize).sum();
            let ge: usize = counts[i..].iter().map(|&c| c as usize).sum();
            le.min(ge).min(n)
        })
        .collect()
}

#[test]
fn weight_condition_implies_neighbor_indistinguishability() {
    let mut premises = 0;
    for &(eps, delta) in &[(1.0, 0.2), (2.0, 0.05), (3.0, 0.01), (4.0, 0.01)] {
        for &(n, cells) in &[(4usize, 5u64), (6, 7)] {
            for &t in &[1.0, 1.5, 2.0] {
                let g = GridSpec::with_cells(cells, 1.0, 1).unwrap();
                let safety = ExactSafety::build(&g, n, budget(eps, delta), t).unwrap();
                for m in safety.multisets() {
                    let q = cell_depths(m);
                    let w = |level: f64| -> f64 {
                        q.iter()
                            .filter(|&&s| s as f64 >= level)
                            .map(|&s| (eps * s as f64 / 2.0).exp())
                            .sum()
                    };
                    if w(t + 1.0) < (1.0 - delta) * w(t - 1.0) {
                        continue;
                    }
                    premises += 1;
                    let p = tiny_distribution(m, eps, t);
                    for from in (0..m.len()).filter(|&c| m[c] > 0) {
                        for to in (0..m.len()).filter(|&c| c != from) {
                            let mut nb = m.clone();
                            nb[from] -= 1;
                            nb[to] += 1;
                            let dq = tiny_distribution(&nb, eps, t);
                            let bound = 4.0 * eps.exp() * delta;
                            assert!(indistinguishability_delta(&p, &dq, eps) <= bound + 1e-12);
                        }
                    }
                }
            }
        }
    }
    assert!(premises > 0, "no instance met the weight condition");
}

#[test]
fn equal_depths_sample_uniformly() {
    let g = GridSpec::with_cells(10, 1.0, 1).unwrap();
    let p = DepthProfile::from_depths(g, 6, vec![0, 1, 3, 3, 3, 3, 3, 1, 0, 0]).unwrap();
    let mut counts = [0u64; 10];
    let mut rng = trial_rng(70, 0);
    let draws = 100_000;
    for _ in 0..draws {
        let y = restricted_exp_mechanism(&p, 1.0, 2.0, &mut rng).unwrap();
        counts[g.axis_index(y[0]) as usize] += 1;
    }
    assert_eq!(
        counts
            .iter()
            .enumerate()
            .filter(|&(i, _)| !(2..7).contains(&i))
            .map(|(_, c)| c)
            .sum::<u64>(),
        0
    );
    let e = draws as f64 / 5.0;
    let chi2: f64 = counts[2..7]
        .iter()
        .map(|&c| (c as f64 - e).powi(2) / e)
        .sum();
    let p_value = 1.0 - ChiSquared::new(4.0).unwrap().cdf(chi2);
    assert!(p_value > 0.01, "chi-square {chi2}, p = {p_value}");
}

#[test]
fn two_cells_have_exponential_ratio() {
    let g = GridSpec::with_cells(4, 1.0, 1).unwrap();
    let p = DepthProfile::from_depths(g, 8, vec![0, 2, 4, 0]).unwrap();
    let mut rng = trial_rng(71, 0);
    let draws = 100_000u64;
    let high = (0..draws)
        .filter(|_| g.axis_index(restricted_exp_mechanism(&p, 1.0, 1.0, &mut rng).unwrap()[0]) == 2)
        .count() as f64;
    let expected = std::f64::consts::E / (1.0 + std::f64::consts::E);
    let se = (expected * (1.0 - expected) / draws as f64).sqrt();
    assert!((high / draws as f64 - expected).abs() < 4.0 * se);
    let dist = restricted_exp_distribution(&p, 1.0, 1.0).unwrap().unwrap();
    assert!((dist[2] / dist[1] - std::f64::consts::E).abs() < 1e-12);
}

#[test]
fn sampler_returns_deep_points() {
    let n = 2000;
    let (eps, a2) = (1.0, 0.15);
    let x = gaussian(1, n, 80);
    let g = GridSpec::new(6.0, 0.01, 1).unwrap();
    let p = DepthProfile::compute(&x, &g).unwrap();
    let a1 = typicality(&p, n, 1);
    assert!(2.0 * a1 <= a2, "typicality {a1}");
    let mut rng = trial_rng(80, 1);
    let bad = (0..500)
        .filter(|_| {
            let y = restricted_exp_mechanism(&p, eps, n as f64 / 4.0, &mut rng).unwrap();
            tukey_depth(&x, &y).unwrap() < 0.5 - a2
        })
        .count() as u64;
    let volume_bound = normal_quantile(0.75 + a1) / normal_quantile(0.5 + a2 / 2.0 - a1);
    let bound = volume_bound * (-a2 * n as f64 * eps / 4.0).exp();
    let (lo, _) = clopper_pearson(bad, 500, 0.99);
    assert!(lo <= bound, "{bad} bad draws against bound {bound}");
}

#[test]
fn zero_distance_fails_almost_surely() {
    let b = budget(1.0, 1e-6);
    assert!(ptr_fail_probability(0, b) >= 1.0 - 1e-6);
    let x = Dataset::from_scalars(&[0.0; 64]);
    let g = GridSpec::with_cells(21, 0.1, 1).unwrap();
    for t in 0..1000 {
        let r = tukey_ptr_report(
            &x,
            &g,
            b,
            16.0,
            &mut trial_rng(90, t),
            DistanceMode::Certificate,
            1_000_000,
        )
        .unwrap();
        assert_eq!(r.distance, 0);
        assert!(r.outcome.is_fail());
    }
    let draws = tukey_ptr(
        &x,
        &g,
        b,
        16.0,
        &mut trial_rng(91, 0),
        DistanceMode::Certificate,
    )
    .unwrap();
    assert_eq!(
        draws,
        tukey_ptr(
            &x,
            &g,
            b,
            16.0,
            &mut trial_rng(91, 0),
            DistanceMode::Certificate
        )
        .unwrap()
    );
}

fn tukey_spec(d: usize, sigma_diag: Vec<f64>, mean: f64) -> TrialSpec {
    TrialSpec {
        mechanism: Mechanism::Tukey,
        family: Family::Gaussian,
        n: 4000,
        d,
        eps: 1.0,
        delta: 1e-6,
        alpha: 0.25,
        beta: 0.05,
        mean,
        sigma_diag,
        mode: DistanceMode::Certificate,
        c_g: 1.0,
        c_lambda: 2.0,
        finite: true,
    }
}

#[test]
fn pipeline_is_accurate_on_gaussian_data() {
    let spec = tukey_spec(1, vec![2.0], 3.0);
    let records: Vec<_> = (0..200)
        .map(|t| run_trial(&spec, 5, t, false).unwrap())
        .collect();
    let fails = records.iter().filter(|r| r.outcome.is_fail()).count();
    let good = records
        .iter()
        .filter(|r| r.mahalanobis_error.is_some_and(|e| e <= 0.25))
        .count();
    assert!(fails as f64 <= 2.0 * 0.05 * 200.0, "{fails} fails");
    assert!(good as f64 >= (1.0 - 6.0 * 0.05) * 200.0, "{good} accurate");
}

#[test]
fn pipeline_ledger_matches_declared_budget() {
    let spec = tukey_spec(1, vec![1.0], 0.0);
    let x = synthesize(
        &SynthSpec::new(Family::Gaussian, vec![0.0], PsdMatrix::identity(1), 8000).unwrap(),
        &mut trial_rng(3, 0),
    );
    let mut ledger = CompositionLedger::new();
    let b = budget(spec.eps, spec.delta);
    let out = discrete_tukey_pipeline(
        &x,
        b,
        0.25,
        0.05,
        &TukeyPipelineConfig::default(),
        &mut trial_rng(3, 1),
        &mut ledger,
    )
    .unwrap();
    assert!(!out.is_fail());
    let (e, d) = ledger.total();
    let (de, dd) = declared_budget(&spec);
    assert!(
        (e - de).abs() < 1e-12 && (d - dd).abs() < 1e-18,
        "{e} {d} vs {de} {dd}"
    );
}

#[test]
fn snapping_is_a_fixed_point() {
    let x = gaussian(2, 8000, 9);
    let stage = tukey_stage_one(
        &x,
        budget(1.0, 1e-6),
        0.25,
        0.05,
        1.0,
        &mut trial_rng(9, 1),
        &mut CompositionLedger::new(),
    )
    .unwrap();
    let snapped = snap_dataset(&x, &stage.grid);
    assert_eq!(snap_dataset(&snapped, &stage.grid), snapped);
}

#[test]
fn error_is_stable_under_conditioning() {
    let trials = 6;
    let errs = |diag: Vec<f64>| -> Vec<f64> {
        let spec = tukey_spec(2, diag, 0.0);
        (0..trials)
            .filter_map(|t| run_trial(&spec, 12, t, false).unwrap().mahalanobis_error)
            .collect()
    };
    let a = errs(vec![1.0, 1.0]);
    let b = errs(vec![1.0, 100.0]);
    assert_eq!(a.len(), trials as usize);
    assert_eq!(b.len(), trials as usize);
    let (ma, mb) = (dpmean::stats::median(&a), dpmean::stats::median(&b));
    assert!(ma <= 2.0 * mb && mb <= 2.0 * ma, "medians {ma} and {mb}");
}

fn grid_points() -> impl Strategy<Value = Vec<[i32; 2]>> {
    prop::collection::vec([-6i32..6, -6i32..6], 1..14)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn one_replacement_moves_depth_by_at_most_one(
        pts in grid_points(),
        replacement in [-8i32..8, -8i32..8],
        idx in any::<prop::sample::Index>(),
    ) {
        let rows: Vec<[f64; 2]> = pts.iter().map(|p| [p[0] as f64 * 0.5, p[1] as f64 * 0.5]).collect();
        let x = Dataset::from_rows(&rows).unwrap();
        let mut y = x.clone();
        y.set_row(idx.index(rows.len()), &[replacement[0] as f64 * 0.5, replacement[1] as f64 * 0.5]);
        let g = GridSpec::with_cells(16, 0.5, 2).unwrap();
        let full = |d: &Dataset| {
            (0..16u64).flat_map(|i| (0..16u64).map(move |j| (i, j)))
                .map(|(i, j)| depth_count(d, &g.center_of(&[i, j])).unwrap() as i64)
                .collect::<Vec<_>>()
        };
        for (a, b) in full(&x).iter().zip(full(&y)) {
            prop_assert!((a - b).abs() <= 1);
        }
        let xs = Dataset::from_scalars(&rows.iter().map(|r| r[0]).collect::<Vec<_>>());
        let mut ys = xs.clone();
        ys.set_row(idx.index(rows.len()), &[replacement[0] as f64 * 0.5]);
        for i in 0..16 {
            let c = [g.axis_center(i)];
            let diff = depth_count(&xs, &c).unwrap() as i64 - depth_count(&ys, &c).unwrap() as i64;
            prop_assert!(diff.abs() <= 1);
        }
    }

    #[test]
    fn depth_is_affine_equivariant(
        pts in grid_points(),
        y in [-6i32..6, -6i32..6],
        a in [-3i32..4, -3i32..4, -3i32..4, -3i32..4],
        b in [-5i32..5, -5i32..5],
    ) {
        prop_assume!(a[0] * a[3] - a[1] * a[2] != 0);
        // Integer data keep every transformed coordinate exact.
        let map = |p: [i32; 2]| [
            (a[0] * p[0] + a[1] * p[1] + b[0]) as f64,
            (a[2] * p[0] + a[3] * p[1] + b[1]) as f64,
        ];
        let x = Dataset::from_rows(&pts.iter().map(|p| [p[0] as f64, p[1] as f64]).collect::<Vec<_>>()).unwrap();
        let ax = Dataset::from_rows(&pts.iter().map(|&p| map(p)).collect::<Vec<_>>()).unwrap();
        let before = tukey_depth(&x, &[y[0] as f64, y[1] as f64]).unwrap();
        let after = tukey_depth(&ax, &map(y)).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn level_sets_are_nested(seed in any::<u64>(), n in 5usize..60, d in 1usize..3) {
        let x = gaussian(d, n, seed);
        let g = GridSpec::new(3.0, 0.25, d).unwrap();
        let p = DepthProfile::compute(&x, &g).unwrap();
        let mut prev = f64::INFINITY;
        for s in 0..=n + 1 {
            let c = p.count_at_least(s as f64);
            prop_assert!(c <= prev);
            prev = c;
        }
        for (i, &q) in p.stored_depths().iter().enumerate() {
            for s in 1..=q as usize {
                // Cell i lies in every level set up to its own depth.
                prop_assert!(p.depth_at(&p.stored_center(i)) as usize >= s);
            }
        }
    }
}

#[test]
fn population_depth_matches_normal_cdf() {
    let s = PsdMatrix::diagonal(&[4.0, 1.0]).unwrap();
    let v = expected_tukey_depth(&[2.0, 3.0], &[0.0, 0.0], &s).unwrap();
    assert_eq!(v, normal_cdf(-(10f64).sqrt()));
}
