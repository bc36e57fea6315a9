//! Goodness-of-fit statistics used to check samplers against their laws.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// One-sample Kolmogorov–Smirnov distance `sup |F_n - F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance between empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Upper-tail p-value of a chi-square statistic.
pub fn chi_square_sf(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    1.0 - dist.cdf(stat)
}

/// Chi-square goodness of fit of integer draws supported on `k >= k_min`
/// against `pmf`. Cells are merged left to right until each expects at least
/// five observations; the last cell absorbs the whole remaining tail.
pub fn chi_square_pvalue_discrete<F: Fn(u64) -> f64>(draws: &[u64], k_min: u64, pmf: F) -> f64 {
    let n = draws.len() as f64;
    let k_max = draws.iter().copied().max().unwrap_or(k_min);
    let mut observed = vec![0usize; (k_max - k_min + 1) as usize];
    for &k in draws {
        observed[(k - k_min) as usize] += 1;
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs_acc, mut exp_acc, mut mass) = (0.0, 0.0, 0.0);
    for (offset, &o) in observed.iter().enumerate() {
        let p = pmf(k_min + offset as u64);
        mass += p;
        obs_acc += o as f64;
        exp_acc += p * n;
        if exp_acc >= 5.0 {
            cells.push((obs_acc, exp_acc));
            obs_acc = 0.0;
            exp_acc = 0.0;
        }
    }
    // remaining tail mass beyond the largest draw
    exp_acc += (1.0 - mass).max(0.0) * n;
    match cells.last_mut() {
        Some(last) if exp_acc < 5.0 => {
            last.0 += obs_acc;
            last.1 += exp_acc;
        }
        _ => cells.push((obs_acc, exp_acc)),
    }
    let stat: f64 = cells.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
    chi_square_sf(stat, cells.len().saturating_sub(1))
}

/// Chi-square homogeneity test between two samples of integer draws.
pub fn chi_square_two_sample_discrete(a: &[u64], b: &[u64]) -> f64 {
    let k_max = a.iter().chain(b).copied().max().unwrap_or(0) as usize;
    let mut ca = vec![0.0; k_max + 1];
    let mut cb = vec![0.0; k_max + 1];
    for &k in a {
        ca[k as usize] += 1.0;
    }
    for &k in b {
        cb[k as usize] += 1.0;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let total = na + nb;
    // pool cells until the smaller expected count reaches 5
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut oa, mut ob) = (0.0, 0.0);
    for k in 0..=k_max {
        oa += ca[k];
        ob += cb[k];
        let col = oa + ob;
        if col * na.min(nb) / total >= 5.0 {
            pooled.push((oa, ob));
            oa = 0.0;
            ob = 0.0;
        }
    }
    if oa + ob > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += oa;
                last.1 += ob;
            }
            None => pooled.push((oa, ob)),
        }
    }
    let stat: f64 = pooled
        .iter()
        .map(|&(oa, ob)| {
            let col = oa + ob;
            let ea = col * na / total;
            let eb = col * nb / total;
            (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb
        })
        .sum();
    chi_square_sf(stat, pooled.len().saturating_sub(1))
}
