use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pfsprior::model::Model;
use pfsprior::pfs::{self, invert_size_prior, stopping_schedule};
use pfsprior::PriorFamily;

fn families() -> Vec<PriorFamily> {
    [
        "php:alpha=0.25",
        "php:alpha=0.5",
        "php:alpha=0.75",
        "shp:phi=1,theta=1",
        "shp:phi=0.5,theta=0.5",
        "shp:phi=2,theta=3",
        "md:omega=0.5",
        "md:omega=1",
        "md:omega=2",
        "bb:a=1,b=1",
        "bb:a=1,b=2",
        "sbb:a=1,lambda=1",
        "sbb:a=1,lambda=2",
        "pow:s=1",
        "pow:s=2",
        "cmg:mu=0.5,var=0.25",
    ]
    .iter()
    .map(|d| d.parse().unwrap())
    .collect()
}

/// Size prior built from a stopping sequence by the plain product
/// Π_{ℓ<k}(1 − Q_ℓ) · Q_k.
fn product_form(q: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(q.len());
    let mut survive = 1.0;
    for &qk in q {
        out.push(survive * qk);
        survive *= 1.0 - qk;
    }
    out
}

fn choose(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn php_and_shp_match_their_product_forms() {
    for p in 1..=30 {
        for alpha in [0.25, 0.5, 0.75] {
            let mut q = vec![1.0 - alpha; p];
            q.push(1.0);
            let expected = product_form(&q);
            let got = PriorFamily::php(alpha).unwrap().log_size_table(p).unwrap();
            for k in 0..=p {
                assert!((got[k].exp() - expected[k]).abs() < 1e-13, "php {alpha} p={p} k={k}");
            }
        }
        for (phi, theta) in [(1.0, 1.0), (0.5, 0.5), (2.0, 3.0)] {
            let mut q: Vec<f64> = (0..p).map(|k| (k as f64 + phi) / (k as f64 + phi + theta)).collect();
            q.push(1.0);
            let expected = product_form(&q);
            let got = PriorFamily::shp(phi, theta).unwrap().log_size_table(p).unwrap();
            for k in 0..=p {
                let rel = (got[k].exp() - expected[k]).abs() / expected[k];
                assert!(rel < 1e-11, "shp ({phi},{theta}) p={p} k={k} rel={rel}");
            }
        }
    }
}

#[test]
fn md_and_bb_match_direct_pmfs() {
    for p in [1, 5, 17, 30] {
        let w: f64 = 2.0;
        let raw: Vec<f64> = (0..=p)
            .map(|k| (1.0 / w).powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>())
            .collect();
        let z: f64 = raw.iter().sum();
        let md = PriorFamily::md(w).unwrap().log_size_table(p).unwrap();
        for k in 0..=p {
            assert!((md[k].exp() - raw[k] / z).abs() < 1e-14);
        }
        // BB(1,1) is uniform on sizes; BB(1,2) is 2(p+1-k)/((p+1)(p+2)).
        let bb11 = PriorFamily::beta_binomial(1.0, 1.0).unwrap().log_size_table(p).unwrap();
        let bb12 = PriorFamily::beta_binomial(1.0, 2.0).unwrap().log_size_table(p).unwrap();
        let pf = p as f64;
        for k in 0..=p {
            assert!((bb11[k].exp() - 1.0 / (pf + 1.0)).abs() < 1e-14);
            let e = 2.0 * (pf + 1.0 - k as f64) / ((pf + 1.0) * (pf + 2.0));
            assert!((bb12[k].exp() - e).abs() < 1e-14);
        }
    }
}

#[test]
fn model_mass_sums_to_one_by_enumeration() {
    for fam in families() {
        for p in [1, 4, 8, 12] {
            let total: f64 = (0u64..1 << p)
                .map(|m| fam.log_model_prior(&Model::from_mask(m, p)).unwrap().exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-10, "{fam} p={p}: {total}");
        }
    }
}

#[test]
fn closed_ratios() {
    let p = 30;
    for k in 0..p - 1 {
        let kf = k as f64;
        for alpha in [0.25, 0.5, 0.75] {
            let r = PriorFamily::php(alpha).unwrap().children_ratio(k, p).unwrap();
            assert!((r - (kf + 1.0) * alpha).abs() < 1e-10);
        }
        for (phi, theta) in [(1.0, 1.0), (0.5, 0.5), (2.0, 3.0)] {
            let r = PriorFamily::shp(phi, theta).unwrap().children_ratio(k, p).unwrap();
            let e = (kf + 1.0 + phi) * (kf + 1.0) / ((kf + 1.0 + phi + theta) * (kf + phi)) * theta;
            assert!((r - e).abs() < 1e-10, "shp k={k}: {r} vs {e}");
            // Strictly below the bound and approaching theta.
            assert!(r < theta * (kf + 1.0 + phi) / (kf + phi));
        }
        let r = PriorFamily::md(0.5).unwrap().children_ratio(k, p).unwrap();
        assert!((r - 2.0).abs() < 1e-10);
    }
    let far = PriorFamily::shp(2.0, 3.0).unwrap().children_ratio(998, 1000).unwrap();
    assert!((far - 3.0).abs() < 2e-2 && far < 3.0);
}

#[test]
fn shp_ratio_monotone_for_phi_at_least_one() {
    for (phi, theta) in [(1.0, 1.0), (2.0, 3.0), (1.0, 0.3)] {
        let fam = PriorFamily::shp(phi, theta).unwrap();
        let r: Vec<f64> = (0..48).map(|k| fam.children_ratio(k, 50).unwrap()).collect();
        assert!(r.windows(2).all(|w| w[1] >= w[0] - 1e-14), "({phi},{theta}) {r:?}");
    }
}

#[test]
fn cmg_ratio_sandwich() {
    let fam = PriorFamily::cmg(0.5, 0.25).unwrap();
    for p in [20, 60] {
        for k in 1..=18 {
            let r = fam.children_ratio(k, p).unwrap();
            let kf = k as f64;
            assert!(r > (kf + 1.0) / 2.0 && r < kf + 1.0, "p={p} k={k}: {r}");
        }
    }
}

#[test]
fn php_and_scaled_bb_share_the_same_limit() {
    // SBB(a=1, lambda) has ratio → (k+1)/(1+lambda) as p grows, which equals
    // PHP(alpha)'s (k+1)alpha when lambda = 1/alpha - 1.
    for alpha in [0.25f64, 0.5] {
        let lambda = 1.0 / alpha - 1.0;
        let php = PriorFamily::php(alpha).unwrap();
        let sbb = PriorFamily::scaled_beta_binomial(1.0, lambda).unwrap();
        for p in [50, 200, 2000] {
            for k in 0..5 {
                let a = php.children_ratio(k, p).unwrap();
                let b = sbb.children_ratio(k, p).unwrap();
                assert!((a - b).abs() / a < 10.0 * (k + 1) as f64 / p as f64, "p={p} k={k}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn direct_and_inverted_schedules_agree() {
    for fam in families() {
        for p in 1..=30 {
            let table = fam.log_size_table(p).unwrap();
            let direct = stopping_schedule(&fam, p).unwrap();
            let inverted = invert_size_prior(&table).unwrap();
            for k in 0..=p {
                assert!((direct.q_stop()[k] - inverted.q_stop()[k]).abs() < 1e-10, "{fam} p={p} k={k}");
            }
            let back = direct.induced_log_size_prior();
            for k in 0..=p {
                assert!((back[k] - table[k]).abs() < 1e-10, "{fam} p={p} k={k}");
            }
        }
    }
}

#[test]
fn bruteforce_equals_closed_form() {
    for fam in families() {
        for p in 1..=7 {
            let sched = stopping_schedule(&fam, p).unwrap();
            let mut total = 0.0;
            for m in 0u64..1 << p {
                let model = Model::from_mask(m, p);
                let brute = pfs::model_log_prob_bruteforce(&sched, &model).unwrap();
                let closed = pfs::model_log_prob_closed(&sched, model.size(), p).unwrap();
                assert!((brute - closed).abs() < 1e-10, "{fam} {model}");
                let prior = fam.log_model_prior(&model).unwrap();
                assert!((closed - prior).abs() < 1e-10, "{fam} {model}");
                total += closed.exp();
            }
            assert!((total - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn bruteforce_guard() {
    let sched = stopping_schedule(&PriorFamily::md(1.0).unwrap(), 12).unwrap();
    let big = Model::new((1..=10).collect(), 12).unwrap();
    assert!(matches!(
        pfs::model_log_prob_bruteforce(&sched, &big),
        Err(pfsprior::Error::Guard(_))
    ));
}

/// Upper-tail chi-square probability via the regularized incomplete gamma
/// series; adequate for the degrees of freedom used here.
fn chi_square_sf(x: f64, dof: usize) -> f64 {
    let a = dof as f64 / 2.0;
    let z = x / 2.0;
    let mut term = 1.0 / a;
    let mut sum = term;
    for i in 1..500 {
        term *= z / (a + i as f64);
        sum += term;
    }
    let lower = (a * z.ln() - z - libm::lgamma(a)).exp() * sum;
    1.0 - lower
}

#[test]
fn sampled_sizes_follow_the_size_prior() {
    let p = 10;
    let fam = PriorFamily::php(0.5).unwrap();
    let sched = stopping_schedule(&fam, p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 1_000_000;
    let mut counts = vec![0u64; p + 1];
    for _ in 0..draws {
        counts[pfs::sample_model(&sched, &mut rng).size()] += 1;
    }
    let table = fam.log_size_table(p).unwrap();
    let stat: f64 = (0..=p)
        .map(|k| {
            let e = table[k].exp() * draws as f64;
            (counts[k] as f64 - e).powi(2) / e
        })
        .sum();
    let pval = chi_square_sf(stat, p);
    assert!(pval > 1e-3, "chi2={stat} p-value={pval}");
}

#[test]
fn sampled_models_uniform_within_size() {
    let p = 5;
    let sched = stopping_schedule(&PriorFamily::php(0.5).unwrap(), p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut counts = std::collections::BTreeMap::new();
    let mut n2 = 0u64;
    for _ in 0..400_000 {
        let m = pfs::sample_model(&sched, &mut rng);
        if m.size() == 2 {
            *counts.entry(m).or_insert(0u64) += 1;
            n2 += 1;
        }
    }
    assert_eq!(counts.len(), 10);
    let e = n2 as f64 / choose(p, 2);
    let stat: f64 = counts.values().map(|&c| (c as f64 - e).powi(2) / e).sum();
    assert!(chi_square_sf(stat, 9) > 1e-3, "chi2={stat}");
}

#[test]
fn chi_square_helper_is_sane() {
    // Mean of chi-square(d) is d; survival at d is near 0.4-0.5 for these d.
    for d in [4, 9, 10] {
        let s = chi_square_sf(d as f64, d);
        assert!(s > 0.35 && s < 0.5, "{d}: {s}");
    }
    assert!((chi_square_sf(2.0, 2) - (-1.0f64).exp()).abs() < 1e-12);
}

fn family_strategy() -> impl Strategy<Value = PriorFamily> {
    prop_oneof![
        (0.01f64..0.99).prop_map(|a| PriorFamily::php(a).unwrap()),
        (0.05f64..5.0, 0.05f64..5.0).prop_map(|(f, t)| PriorFamily::shp(f, t).unwrap()),
        (0.05f64..5.0).prop_map(|w| PriorFamily::md(w).unwrap()),
        (0.1f64..5.0, 0.1f64..5.0).prop_map(|(a, b)| PriorFamily::beta_binomial(a, b).unwrap()),
        (0.1f64..5.0, 0.1f64..5.0).prop_map(|(a, l)| PriorFamily::scaled_beta_binomial(a, l).unwrap()),
        (1.0f64..4.0).prop_map(|s| PriorFamily::power_series(s).unwrap()),
        (-1.0f64..1.0, 0.05f64..2.0).prop_map(|(m, v)| PriorFamily::cmg(m, v).unwrap()),
    ]
}

proptest! {
    #[test]
    fn size_prior_normalizes(fam in family_strategy(), p in 1usize..=60) {
        let table = fam.log_size_table(p).unwrap();
        let total: f64 = table.iter().map(|v| v.exp()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "{} p={} total={}", fam, p, total);
    }

    #[test]
    fn schedule_round_trips(fam in family_strategy(), p in 1usize..=30) {
        let table = fam.log_size_table(p).unwrap();
        let sched = stopping_schedule(&fam, p).unwrap();
        prop_assert_eq!(sched.q_stop()[p], 1.0);
        prop_assert!(sched.q_stop().iter().all(|q| (0.0..=1.0).contains(q)));
        for (a, b) in sched.induced_log_size_prior().iter().zip(&table) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn paths_of_a_model_share_probability(fam in family_strategy(), p in 2usize..=9, seed: u64) {
        let sched = stopping_schedule(&fam, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = pfs::sample_model(&sched, &mut rng);
        let mut idx = model.indices().to_vec();
        let a = pfs::path_log_prob(&sched, &pfsprior::Path::new(idx.clone(), p).unwrap()).unwrap();
        idx.reverse();
        let b = pfs::path_log_prob(&sched, &pfsprior::Path::new(idx, p).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn descriptor_round_trips(fam in family_strategy()) {
        let text = fam.to_string();
        let back: PriorFamily = text.parse().unwrap();
        for k in 0..=10 {
            let a = fam.log_size_prior(k, 10).unwrap();
            let b = back.log_size_prior(k, 10).unwrap();
            prop_assert!((a - b).abs() < 1e-10, "{}", text);
        }
    }
}
