//! Independent reference implementations used only by test suites.
//!
//! Nothing here shares code with the main crates: probability formulas are
//! evaluated in 250-digit fixed-point arithmetic with hand-rolled exp/ln/sqrt,
//! linear systems go through Gaussian elimination instead of Cholesky,
//! eigenvalues through power iteration instead of Jacobi, and the 1-D
//! transport cost through brute-force enumeration of couplings. Agreement
//! between the fast implementations and these slow ones is the point.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

/// Decimal digits carried by the fixed-point representation.
pub const DIGITS: u32 = 250;

fn scale() -> BigInt {
    let mut s = BigInt::from(1);
    let ten = BigInt::from(10);
    for _ in 0..DIGITS {
        s *= &ten;
    }
    s
}

/// Exact conversion of a finite f64 (sign * mantissa * 2^e) into fixed point.
/// The only rounding is the final truncation to 250 digits.
pub fn fx_from_f64(x: f64) -> BigInt {
    assert!(x.is_finite(), "fixed point requires finite input");
    let bits = x.to_bits();
    let negative = bits >> 63 == 1;
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, e) = if exp_bits == 0 {
        (frac, -1074i64)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    let mut v = BigInt::from(mantissa) * scale();
    if e >= 0 {
        v <<= e as usize;
    } else {
        v >>= (-e) as usize;
    }
    if negative {
        v = -v;
    }
    v
}

pub fn fx_from_int(i: i64) -> BigInt {
    BigInt::from(i) * scale()
}

pub fn fx_to_f64(x: &BigInt) -> f64 {
    let s = scale();
    let q = x / &s;
    let r = x % &s;
    q.to_f64().expect("within f64 range") + r.to_f64().expect("remainder fits") / 1e250
}

pub fn fx_mul(a: &BigInt, b: &BigInt) -> BigInt {
    a * b / scale()
}

pub fn fx_div(a: &BigInt, b: &BigInt) -> BigInt {
    a * scale() / b
}

/// Taylor series of e^r for |r| <= 1, summed until terms truncate to zero.
fn exp_taylor(r: &BigInt) -> BigInt {
    let s = scale();
    let mut term = s.clone();
    let mut sum = s.clone();
    for k in 1..2000u32 {
        term = fx_mul(&term, r) / BigInt::from(k);
        if term.is_zero() {
            break;
        }
        sum += &term;
    }
    sum
}

fn fx_powi(base: &BigInt, mut k: u64) -> BigInt {
    let mut result = scale();
    let mut b = base.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = fx_mul(&result, &b);
        }
        b = fx_mul(&b, &b);
        k >>= 1;
    }
    result
}

/// e^x in fixed point: integer/fraction split, Taylor on the fraction,
/// binary powering of e on the integer part. Arguments below the point where
/// the result truncates to zero short-circuit to zero.
pub fn fx_exp(x: &BigInt) -> BigInt {
    let s = scale();
    // exp(-586) < 10^-254 < one fixed-point unit.
    if *x < BigInt::from(-586) * &s {
        return BigInt::zero();
    }
    let k = x / &s; // truncates toward zero, so |r| < 1
    let r = x - &k * &s;
    let er = exp_taylor(&r);
    let k_i64 = k.to_i64().expect("exponent integer part fits i64");
    if k_i64 == 0 {
        return er;
    }
    let e1 = exp_taylor(&s);
    let ek = fx_powi(&e1, k_i64.unsigned_abs());
    if k_i64 > 0 {
        fx_mul(&er, &ek)
    } else {
        fx_div(&er, &ek)
    }
}

/// ln(x) for x > 0: an f64 seed gets the answer to ~15 digits, then the
/// residual ratio r = x/e^seed (within one f64 ulp of 1) is finished with the
/// fast-converging series ln(r) = 2*atanh((r-1)/(r+1)).
pub fn fx_ln(x: &BigInt) -> BigInt {
    assert!(x.is_positive(), "ln requires a positive argument");
    let s = scale();
    let seed = fx_from_f64(fx_to_f64(x).ln());
    let r = fx_div(x, &fx_exp(&seed));
    let t = fx_div(&(&r - &s), &(&r + &s));
    let t2 = fx_mul(&t, &t);
    let mut term = t.clone();
    let mut sum = t;
    for k in 1..200u32 {
        term = fx_mul(&term, &t2);
        let contribution = &term / BigInt::from(2 * k + 1);
        if contribution.is_zero() {
            break;
        }
        sum += contribution;
    }
    seed + BigInt::from(2) * sum
}

/// Integer Newton square root of x >= 0 in fixed point.
pub fn fx_sqrt(x: &BigInt) -> BigInt {
    assert!(!x.is_negative(), "sqrt requires a nonnegative argument");
    if x.is_zero() {
        return BigInt::zero();
    }
    let n = x * scale();
    let mut guess = fx_from_f64(fx_to_f64(x).sqrt());
    if guess.is_zero() {
        guess = BigInt::from(1);
    }
    loop {
        let next: BigInt = (&guess + &n / &guess) / 2;
        let diff = (&next - &guess).abs();
        guess = next;
        if diff <= BigInt::from(1) {
            return guess;
        }
    }
}

/// |value - reference| <= tol * max(1, |reference|). The unit floor keeps the
/// comparison meaningful when cancellation drives the reference toward zero.
pub fn close_rel_unit(value: f64, reference: f64, tol: f64) -> bool {
    (value - reference).abs() <= tol * reference.abs().max(1.0)
}

/// (p-q) * exp(1/3 - n*p_c/3), evaluated directly (no log-space rewrite).
pub fn bip_fdp(n: u64, p: u64, q: u64, p_c: f64) -> f64 {
    assert!(q <= p);
    if p == q {
        return 0.0;
    }
    let third = fx_div(&fx_from_int(1), &fx_from_int(3));
    let exponent = &third - fx_mul(&fx_mul(&fx_from_int(n as i64), &fx_from_f64(p_c)), &third);
    fx_to_f64(&fx_mul(&fx_from_int((p - q) as i64), &fx_exp(&exponent)))
}

/// 1 - q * exp(-n*(1-2*p_c)^2/6).
pub fn bip_tdp_large(n: u64, q: u64, p_c: f64) -> f64 {
    if q == 0 {
        return 1.0;
    }
    let s = fx_from_int(1) - BigInt::from(2) * fx_from_f64(p_c);
    let num = fx_mul(&fx_from_int(n as i64), &fx_mul(&s, &s));
    let exponent = -fx_div(&num, &fx_from_int(6));
    fx_to_f64(&(fx_from_int(1) - fx_mul(&fx_from_int(q as i64), &fx_exp(&exponent))))
}

/// 1 - q * exp(-n*p_c^2/(3p) + 2n*p_c/3 - n*p/3) with an arbitrary real p.
pub fn bip_tdp_small(n: u64, p: f64, q: u64, p_c: f64) -> f64 {
    if q == 0 {
        return 1.0;
    }
    let nf = fx_from_int(n as i64);
    let pc = fx_from_f64(p_c);
    let pf = fx_from_f64(p);
    let three = fx_from_int(3);
    let t1 = fx_div(&fx_mul(&nf, &fx_mul(&pc, &pc)), &fx_mul(&three, &pf));
    let t2 = fx_div(&(BigInt::from(2) * fx_mul(&nf, &pc)), &three);
    let t3 = fx_div(&fx_mul(&nf, &pf), &three);
    let exponent = -t1 + t2 - t3;
    fx_to_f64(&(fx_from_int(1) - fx_mul(&fx_from_int(q as i64), &fx_exp(&exponent))))
}

/// 1 - p * exp(-n*(1/4 - eps/2 - 1/(2n))^2/2).
pub fn gap_probability(n: u64, p: u64, eps: f64) -> f64 {
    if p == 0 {
        return 1.0;
    }
    let nf = fx_from_int(n as i64);
    let quarter = fx_div(&fx_from_int(1), &fx_from_int(4));
    let half_eps = fx_div(&fx_from_f64(eps), &fx_from_int(2));
    let inv_2n = fx_div(&fx_from_int(1), &(BigInt::from(2) * &nf));
    let t = quarter - half_eps - inv_2n;
    let exponent = -fx_div(&fx_mul(&nf, &fx_mul(&t, &t)), &fx_from_int(2));
    fx_to_f64(&(fx_from_int(1) - fx_mul(&fx_from_int(p as i64), &fx_exp(&exponent))))
}

/// 1 - 2*exp(-(sqrt(n)*sqrt(rho1)*beta_min/sigma - sqrt(2 ln n) - sqrt(2 ln(p-q)))^2 / 2).
/// Requires p > q so the final logarithm exists.
pub fn stls_tdp(n: u64, p: u64, q: u64, rho1: f64, beta_min: f64, sigma: f64) -> f64 {
    assert!(p > q, "the formula needs at least one null index");
    let nf = fx_from_int(n as i64);
    let signal = fx_div(
        &fx_mul(&fx_sqrt(&nf), &fx_mul(&fx_sqrt(&fx_from_f64(rho1)), &fx_from_f64(beta_min))),
        &fx_from_f64(sigma),
    );
    let two = fx_from_int(2);
    let tail_n = fx_sqrt(&fx_mul(&two, &fx_ln(&nf)));
    let tail_pq = fx_sqrt(&fx_mul(&two, &fx_ln(&fx_from_int((p - q) as i64))));
    let inner = signal - tail_n - tail_pq;
    let exponent = -fx_div(&fx_mul(&inner, &inner), &two);
    fx_to_f64(&(fx_from_int(1) - fx_mul(&two, &fx_exp(&exponent))))
}

/// Gaussian elimination with partial pivoting; panics on a singular system.
pub fn solve_gauss(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            assert_eq!(row.len(), n);
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        assert!(m[pivot][col].abs() > 1e-300, "singular system");
        m.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = m[row][n];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    x
}

fn power_iterate(a: &[Vec<f64>], shift: f64, iters: usize) -> f64 {
    let n = a.len();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 / (i + 1) as f64).collect();
    for _ in 0..iters {
        let mut w = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let aij = if i == j { shift - a[i][j] } else { -a[i][j] };
                w[i] += aij * v[j];
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm > 0.0, "power iteration collapsed");
        for x in &mut w {
            *x /= norm;
        }
        v = w;
    }
    // Rayleigh quotient of the original matrix at the converged direction.
    let mut av = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            av[i] += a[i][j] * v[j];
        }
    }
    let num: f64 = v.iter().zip(&av).map(|(x, y)| x * y).sum();
    let den: f64 = v.iter().map(|x| x * x).sum();
    num / den
}

/// Extreme eigenvalues (min, max) of a symmetric positive semidefinite
/// matrix via shifted power iteration. A slow but independent check.
pub fn extreme_symmetric_eigenvalues(a: &[Vec<f64>], iters: usize) -> (f64, f64) {
    let n = a.len();
    // Gershgorin upper bound makes both shifted problems dominant-eigenvalue.
    let upper = (0..n)
        .map(|i| a[i].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let max = power_iterate(a, -upper, iters);
    let min = power_iterate(a, upper + 1.0, iters);
    (min, max)
}

fn permutation_costs(b_order: &mut Vec<f64>, k: usize, a: &[f64], best: &mut f64) {
    let n = b_order.len();
    if k == n {
        let cost: f64 = a.iter().zip(b_order.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
        if cost < *best {
            *best = cost;
        }
        return;
    }
    for i in k..n {
        b_order.swap(k, i);
        permutation_costs(b_order, k + 1, a, best);
        b_order.swap(k, i);
    }
}

/// Exact 1-D transport cost by enumerating every coupling. Factorial time;
/// callers keep the size at 8 or below.
pub fn wasserstein2_bruteforce(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    assert!(a.len() <= 8, "factorial enumeration; keep sizes tiny");
    assert!(!a.is_empty());
    let mut b_order = b.to_vec();
    let mut best = f64::INFINITY;
    permutation_costs(&mut b_order, 0, a, &mut best);
    (best / a.len() as f64).sqrt()
}

/// Every exponent vector over k variables with total degree <= max_degree,
/// as a sorted set (no ordering convention; callers compare multisets).
pub fn monomial_multisets(k: usize, max_degree: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, budget: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=budget {
            prefix.push(e);
            rec(k, budget - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, max_degree, &mut Vec::new(), &mut out);
    out.sort();
    out
}
