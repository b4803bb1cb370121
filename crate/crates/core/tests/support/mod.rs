//! Shared helpers for the integration tests: fixture paths, a deterministic
//! PRNG, reference implementations of the correlation estimators written
//! independently of the library (different formulas, different data
//! structures), a quadrature-based Student-t tail, and a permutation
//! generator.

#![allow(dead_code)]

use std::path::PathBuf;

/// Absolute path of a bundled data fixture.
pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

/// Reads a bundled data fixture to bytes.
pub fn fixture_bytes(name: &str) -> Vec<u8> {
    std::fs::read(fixture(name)).expect("fixture file exists")
}

/// Small deterministic PRNG (splitmix64) so tests need no external crate
/// and reruns see identical streams.
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Pearson correlation via the raw-moment (single-pass textbook) formula,
/// deliberately different from the library's centered two-pass sums.
pub fn pearson_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Kendall tau-b by brute-force O(n^2) pair classification. The pair
/// counts are integers, and the final expression is the canonical tau-b
/// formula, so agreement with the library is bit-exact whenever the two
/// countings agree.
pub fn kendall_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut tied_x = 0i64;
    let mut tied_y = 0i64;
    let mut tied_both = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = xs[i].partial_cmp(&xs[j]).unwrap();
            let dy = ys[i].partial_cmp(&ys[j]).unwrap();
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Equal, Equal) => tied_both += 1,
                (Equal, _) => tied_x += 1,
                (_, Equal) => tied_y += 1,
                (a, b) if a == b => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let total = (n * (n - 1) / 2) as i64;
    let denom_x = total - tied_x - tied_both;
    let denom_y = total - tied_y - tied_both;
    (concordant - discordant) as f64 / ((denom_x as f64) * (denom_y as f64)).sqrt()
}

/// Average ranks (1-based, ties averaged) built by a different route than
/// the library: argsort with an explicit tie-group walk.
pub fn ranks_oracle(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0f64; n];
    let mut i = 0usize;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j share the average of ranks i+1..=j+1
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn has_ties(values: &[f64]) -> bool {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Spearman rho. Without ties the ranks are integers, so the rank-difference
/// sum is accumulated in u64 and only converted to float in the final
/// closed-form expression; with ties it is the Pearson oracle on average
/// ranks.
pub fn spearman_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let rx = ranks_oracle(xs);
    let ry = ranks_oracle(ys);
    if !has_ties(xs) && !has_ties(ys) {
        let d_squared: u64 = rx
            .iter()
            .zip(&ry)
            .map(|(a, b)| {
                let d = (a - b).abs() as i64;
                (d * d) as u64
            })
            .sum();
        let nf = xs.len() as f64;
        1.0 - 6.0 * d_squared as f64 / (nf * (nf * nf - 1.0))
    } else {
        pearson_oracle(&rx, &ry)
    }
}

/// Student-t density with `df` degrees of freedom.
fn t_density(u: f64, df: f64) -> f64 {
    let c = gamma_half((df as usize) + 1)
        / ((df * std::f64::consts::PI).sqrt() * gamma_half(df as usize));
    c * (1.0 + u * u / df).powf(-(df + 1.0) / 2.0)
}

/// Gamma(n/2) for small positive integer n, by the recurrence
/// Gamma(x + 1) = x Gamma(x) down to Gamma(1/2) = sqrt(pi) or Gamma(1) = 1.
fn gamma_half(n: usize) -> f64 {
    match n {
        0 => panic!("gamma_half needs n >= 1"),
        1 => std::f64::consts::PI.sqrt(),
        2 => 1.0,
        _ => ((n - 2) as f64 / 2.0) * gamma_half(n - 2),
    }
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f((a + b) / 2.0) + f(b))
}

fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = (a + b) / 2.0;
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_simpson(f, a, m, left, tol / 2.0, depth - 1)
            + adaptive_simpson(f, m, b, right, tol / 2.0, depth - 1)
    }
}

/// Two-sided Student-t tail probability `P(|T| >= |t|)` by adaptive Simpson
/// quadrature of the density over a compactified half-line; accurate to
/// well below 1e-8 for the small degrees of freedom used in tests.
pub fn t_two_sided_tail_oracle(t: f64, df: usize) -> f64 {
    let a = t.abs();
    let dff = df as f64;
    // Map u in [a, inf) to s in [0, 1) via u = a + s/(1-s); du = ds/(1-s)^2.
    let integrand = move |s: f64| {
        let one_minus = 1.0 - s;
        let u = a + s / one_minus;
        t_density(u, dff) / (one_minus * one_minus)
    };
    let whole = simpson(&integrand, 0.0, 1.0 - 1e-12);
    let tail = adaptive_simpson(&integrand, 0.0, 1.0 - 1e-12, whole, 1e-12, 40);
    (2.0 * tail).min(1.0)
}

/// All permutations of `items` via Heap's algorithm (n! of them).
pub fn permutations(items: &[f64]) -> Vec<Vec<f64>> {
    let mut scratch = items.to_vec();
    let n = scratch.len();
    let mut out = Vec::new();
    let mut c = vec![0usize; n];
    out.push(scratch.clone());
    let mut i = 0usize;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                scratch.swap(0, i);
            } else {
                scratch.swap(c[i], i);
            }
            out.push(scratch.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}
