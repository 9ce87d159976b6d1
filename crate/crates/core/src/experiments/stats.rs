//! Rank statistics for comparing rMS samples across assertion pools.
//!
//! Both tests are two-sample, unpaired, and tie-aware. Inputs must be
//! finite; sample scores here are always ratios in [0, 1].

/// Mann-Whitney U test, two-sided.
///
/// Returns `(u, p)` where `u` is the U statistic of `xs` computed from
/// midranks (ties contribute 1/2 per tied pair). The p-value is exact by
/// enumeration of all C(n1+n2, n1) label assignments when the combined
/// sample has at most 12 observations, and a normal approximation with
/// tie and continuity correction otherwise. p is always in (0, 1].
///
/// Panics if either sample is empty or contains a non-finite value.
pub fn mann_whitney_u(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    check_samples(xs, ys);
    let u = u_from_midranks(xs, ys);
    let n = xs.len() + ys.len();
    let p = if n <= 12 {
        exact_p(xs, ys, u)
    } else {
        approx_p(xs, ys, u)
    };
    (u, p)
}

/// Vargha-Delaney effect size: P(X > Y) + P(X = Y)/2 over all pairs.
///
/// 0.5 means no effect, 1.0 means every x exceeds every y. The numerator
/// is an exact half-integer, so `a12(xs, ys) + a12(ys, xs) == 1.0` holds
/// exactly, ties or not, for any sample sizes used here.
///
/// Panics if either sample is empty or contains a non-finite value.
pub fn vargha_delaney_a12(xs: &[f64], ys: &[f64]) -> f64 {
    check_samples(xs, ys);
    let mut twice_num = 0u64;
    for &x in xs {
        for &y in ys {
            if x > y {
                twice_num += 2;
            } else if x == y {
                twice_num += 1;
            }
        }
    }
    twice_num as f64 / (2 * xs.len() as u64 * ys.len() as u64) as f64
}

fn check_samples(xs: &[f64], ys: &[f64]) {
    assert!(!xs.is_empty() && !ys.is_empty(), "empty sample");
    assert!(
        xs.iter().chain(ys).all(|v| v.is_finite()),
        "non-finite sample value"
    );
}

/// U_x = R_x - n1(n1+1)/2 with midranks over the pooled sample.
fn u_from_midranks(xs: &[f64], ys: &[f64]) -> f64 {
    let mut pooled: Vec<(f64, bool)> = xs
        .iter()
        .map(|&v| (v, true))
        .chain(ys.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut rank_sum_x = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        // positions i..j (0-based) share the midrank of 1-based ranks i+1..=j
        let midrank = (i + 1 + j) as f64 / 2.0;
        for entry in &pooled[i..j] {
            if entry.1 {
                rank_sum_x += midrank;
            }
        }
        i = j;
    }
    let n1 = xs.len() as f64;
    rank_sum_x - n1 * (n1 + 1.0) / 2.0
}

/// Twice the pairwise U, always an integer: 2 per x > y pair, 1 per tie.
fn twice_u(xs: &[f64], ys: &[f64]) -> u64 {
    let mut t = 0u64;
    for &x in xs {
        for &y in ys {
            if x > y {
                t += 2;
            } else if x == y {
                t += 1;
            }
        }
    }
    t
}

/// Exact two-sided p: the fraction of all C(n, n1) relabelings of the
/// pooled observations whose U is at least as far from the null mean
/// n1*n2/2 as the observed one. Comparisons run on doubled-U integers,
/// so there is no float tolerance in the tail count.
fn exact_p(xs: &[f64], ys: &[f64], u_obs: f64) -> f64 {
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let n = pooled.len();
    let n1 = xs.len();
    let twice_mean = (xs.len() * ys.len()) as i64;
    let obs_dev = ((2.0 * u_obs) as i64 - twice_mean).abs();

    let mut total = 0u64;
    let mut extreme = 0u64;
    let mut side_x = Vec::with_capacity(n1);
    let mut side_y = Vec::with_capacity(n - n1);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        side_x.clear();
        side_y.clear();
        for (i, &v) in pooled.iter().enumerate() {
            if mask & (1 << i) != 0 {
                side_x.push(v);
            } else {
                side_y.push(v);
            }
        }
        total += 1;
        let dev = (twice_u(&side_x, &side_y) as i64 - twice_mean).abs();
        if dev >= obs_dev {
            extreme += 1;
        }
    }
    extreme as f64 / total as f64
}

/// Normal approximation with the tie-corrected variance
/// n1*n2/12 * (n+1 - sum(t^3 - t)/(n(n-1))) and a 0.5 continuity
/// correction. Degenerate pools (all values equal) give p = 1.
fn approx_p(xs: &[f64], ys: &[f64], u: f64) -> f64 {
    let n1 = xs.len() as f64;
    let n2 = ys.len() as f64;
    let n = n1 + n2;

    let mut pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j < pooled.len() && pooled[j] == pooled[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }

    let mean = n1 * n2 / 2.0;
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let p = libm::erfc(z / std::f64::consts::SQRT_2);
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_samples_give_zero_u_and_exact_tail() {
        // 2 of the 20 rank splits are as extreme as total separation
        let (u, p) = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]);
        assert_eq!(u, 0.0);
        assert_eq!(p, 0.1);
    }

    #[test]
    fn single_tied_pair_is_no_evidence() {
        let (u, p) = mann_whitney_u(&[1.0], &[1.0]);
        assert_eq!(u, 0.5);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn full_dominance_hits_the_maximum_u() {
        let (u, p) = mann_whitney_u(&[10.0, 20.0, 30.0], &[1.0, 2.0]);
        assert_eq!(u, 6.0);
        // splits {1,2,10} and {10,20,30} of the 10 are as extreme
        assert_eq!(p, 0.2);
    }

    #[test]
    fn cross_sample_ties_use_midranks() {
        // pooled 1, 2, 2, 3: the tied pair contributes half a win
        let (u, p) = mann_whitney_u(&[1.0, 2.0], &[2.0, 3.0]);
        assert_eq!(u, 0.5);
        assert_eq!(p, 4.0 / 6.0);
    }

    #[test]
    fn degenerate_large_sample_gives_p_one() {
        let xs = [5.0; 7];
        let ys = [5.0; 7];
        let (u, p) = mann_whitney_u(&xs, &ys);
        assert_eq!(u, 24.5);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn separated_large_sample_is_significant() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        let ys: Vec<f64> = (11..=20).map(f64::from).collect();
        let (u, p) = mann_whitney_u(&xs, &ys);
        assert_eq!(u, 0.0);
        assert!(p > 0.0 && p < 1e-3, "p = {p}");
    }

    #[test]
    fn midrank_u_equals_pairwise_count() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let nx = rng.gen_range(1..=8);
            let ny = rng.gen_range(1..=8);
            let xs: Vec<f64> = (0..nx).map(|_| rng.gen_range(0..4) as f64).collect();
            let ys: Vec<f64> = (0..ny).map(|_| rng.gen_range(0..4) as f64).collect();
            let (u, _) = mann_whitney_u(&xs, &ys);
            assert_eq!(2.0 * u, twice_u(&xs, &ys) as f64);
        }
    }

    #[test]
    fn a12_frozen_points() {
        assert_eq!(vargha_delaney_a12(&[1.0, 2.0], &[1.0, 2.0]), 0.5);
        assert_eq!(vargha_delaney_a12(&[3.0, 4.0], &[1.0, 2.0]), 1.0);
        // wins (3,2) twice, losses (1,2) twice, no ties
        assert_eq!(vargha_delaney_a12(&[1.0, 3.0], &[2.0, 2.0]), 0.5);
    }

    #[test]
    fn a12_complements_sum_to_one_exactly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pool = [0.0, 0.25, 1.0 / 3.0, 0.5, 0.75, 1.0];
        for _ in 0..500 {
            let nx = rng.gen_range(1..=12);
            let ny = rng.gen_range(1..=12);
            let xs: Vec<f64> = (0..nx).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
            let ys: Vec<f64> = (0..ny).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
            let fwd = vargha_delaney_a12(&xs, &ys);
            let rev = vargha_delaney_a12(&ys, &xs);
            assert_eq!(fwd + rev, 1.0, "xs={xs:?} ys={ys:?}");
        }
    }

    /// Independent brute force: recursive split enumeration with its own
    /// U and tail count, checked against the library's exact path.
    fn brute_force_p(xs: &[f64], ys: &[f64]) -> f64 {
        fn splits(vals: &[f64], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..vals.len() {
                cur.push(i);
                splits(vals, k, i + 1, cur, out);
                cur.pop();
            }
        }
        let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
        let mut all = Vec::new();
        splits(&pooled, xs.len(), 0, &mut Vec::new(), &mut all);
        let dev = |sx: &[f64], sy: &[f64]| {
            let mut num = 0i64;
            for &x in sx {
                for &y in sy {
                    if x > y {
                        num += 2;
                    } else if x == y {
                        num += 1;
                    }
                }
            }
            (num - (sx.len() * sy.len()) as i64).abs()
        };
        let obs = dev(xs, ys);
        let mut extreme = 0usize;
        for chosen in &all {
            let sx: Vec<f64> = chosen.iter().map(|&i| pooled[i]).collect();
            let sy: Vec<f64> = (0..pooled.len())
                .filter(|i| !chosen.contains(i))
                .map(|i| pooled[i])
                .collect();
            if dev(&sx, &sy) >= obs {
                extreme += 1;
            }
        }
        extreme as f64 / all.len() as f64
    }

    #[test]
    fn exact_p_matches_independent_enumeration() {
        let cases: [(&[f64], &[f64]); 6] = [
            (&[0.0, 1.0, 2.0], &[1.0, 1.0]),
            (&[0.0, 0.0], &[0.0, 0.0, 1.0]),
            (&[2.0, 2.0, 1.0, 0.0], &[1.0, 0.0]),
            (&[1.0], &[0.0, 2.0, 2.0]),
            (&[0.5, 0.5, 0.5], &[0.5, 0.5, 0.5]),
            (&[0.0, 2.0], &[1.0]),
        ];
        for (xs, ys) in cases {
            let (_, p) = mann_whitney_u(xs, ys);
            assert_eq!(p, brute_force_p(xs, ys), "xs={xs:?} ys={ys:?}");
        }
    }
}
