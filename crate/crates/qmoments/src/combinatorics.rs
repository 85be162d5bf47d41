//! Exact factorial and binomial tables.
//!
//! 34! still fits in a `u128`; everything above that is out of range for the
//! hierarchy anyway.

pub const MAX_FACT: usize = 34;

const fn build_factorials() -> [u128; MAX_FACT + 1] {
    let mut t = [1u128; MAX_FACT + 1];
    let mut i = 1;
    while i <= MAX_FACT {
        t[i] = t[i - 1] * i as u128;
        i += 1;
    }
    t
}

static FACT: [u128; MAX_FACT + 1] = build_factorials();

pub fn factorial(n: usize) -> u128 {
    assert!(n <= MAX_FACT, "factorial table ends at {MAX_FACT}");
    FACT[n]
}

pub fn factorial_f64(n: usize) -> f64 {
    factorial(n) as f64
}

/// Exact binomial coefficient; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        // Stays exact: r * (n - i) is divisible by (i + 1).
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// n (n-1) ... (n-k+1); zero when `k > n`.
pub fn falling(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (n - k + 1..=n).map(|x| x as u128).product()
}

pub fn binomial_f64(n: usize, k: usize) -> f64 {
    binomial(n, k) as f64
}

/// (2n-1)!! with the convention (-1)!! = 1.
pub fn double_factorial_odd(n: usize) -> u128 {
    (0..n).map(|i| (2 * i + 1) as u128).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_edges() {
        assert_eq!(factorial(0), 1);
        assert_eq!(factorial(10), 3_628_800);
        assert_eq!(factorial(34), 295_232_799_039_604_140_847_618_609_643_520_000_000);
    }

    #[test]
    fn binomials_match_pascal() {
        for n in 1..40 {
            for k in 1..n {
                assert_eq!(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k));
            }
        }
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn falling_factorial() {
        assert_eq!(falling(5, 2), 20);
        assert_eq!(falling(5, 0), 1);
        assert_eq!(falling(2, 3), 0);
        assert_eq!(double_factorial_odd(3), 15);
    }
}
