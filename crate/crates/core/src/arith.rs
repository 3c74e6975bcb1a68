//! Small-integer number theory shared by every module: sieving, modular
//! arithmetic, the Kronecker symbol and fundamental discriminants.

use num_integer::Integer;

/// Primes `<= limit` by the sieve of Eratosthenes.
pub fn sieve_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        primes.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    primes
}

pub fn is_prime(n: u64) -> bool {
    num_prime::nt_funcs::is_prime64(n)
}

/// Smallest prime `>= n`.
pub fn next_prime_at_least(n: u64) -> u64 {
    let mut k = n.max(2);
    while !is_prime(k) {
        k += 1;
    }
    k
}

#[inline]
pub fn mod_mul(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn mod_pow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mod_mul(acc, base, m);
        }
        base = mod_mul(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo a prime `p`; `None` when `p | a`.
pub fn mod_inv(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        None
    } else {
        Some(mod_pow(a, p - 2, p))
    }
}

/// Reduce a signed integer into `[0, m)`.
#[inline]
pub fn reduce_i64(a: i64, m: u64) -> u64 {
    a.rem_euclid(m as i64) as u64
}

/// Legendre symbol `(a / p)` for an odd prime `p` by Euler's criterion.
pub fn legendre(a: u64, p: u64) -> i32 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if mod_pow(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Quadratic character of `F_p` as a lookup table: entry `v` is
/// `0` for `v = 0`, `1` for nonzero squares and `-1` otherwise.
pub fn quadratic_character_table(p: u64) -> Vec<i8> {
    let mut chi = vec![-1i8; p as usize];
    chi[0] = 0;
    for y in 1..=p / 2 {
        chi[mod_mul(y, y, p) as usize] = 1;
    }
    if p == 2 {
        chi[1] = 1;
    }
    chi
}

/// Smallest quadratic nonresidue modulo an odd prime.
pub fn least_nonresidue(p: u64) -> u64 {
    (2..p).find(|&a| legendre(a, p) == -1).expect("odd prime has a nonresidue")
}

/// Smallest primitive root modulo a prime.
pub fn primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let order = p - 1;
    let factors: Vec<u64> = num_prime::nt_funcs::factorize64(order).into_keys().collect();
    (2..p)
        .find(|&g| factors.iter().all(|&q| mod_pow(g, order / q, p) != 1))
        .expect("prime has a primitive root")
}

/// Kronecker symbol `(a / n)` for arbitrary integers.
pub fn kronecker(a: i64, n: i64) -> i32 {
    let mut a = a as i128;
    let mut n = n as i128;
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut result = 1i32;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let twos = n.trailing_zeros();
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        n >>= twos;
        if twos % 2 == 1 {
            let r = a.rem_euclid(8);
            if r == 3 || r == 5 {
                result = -result;
            }
        }
    }
    // Jacobi symbol for odd positive n.
    a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

pub fn is_squarefree(n: u64) -> bool {
    if n == 0 {
        return false;
    }
    num_prime::nt_funcs::factorize64(n).values().all(|&e| e == 1)
}

/// True iff `d` is the discriminant of a quadratic field (or `d = 1`).
pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 1 {
        return true;
    }
    if d == 0 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => is_squarefree(d.unsigned_abs()),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && is_squarefree(m.unsigned_abs())
        }
        _ => false,
    }
}

/// Discriminant of `Q(sqrt(n))` for nonzero `n`; `1` when `n` is a square.
pub fn fundamental_discriminant_of(n: i64) -> i64 {
    assert!(n != 0, "zero has no quadratic field");
    let sign = n.signum();
    let mut core = 1i64;
    for (q, e) in num_prime::nt_funcs::factorize64(n.unsigned_abs()) {
        if e % 2 == 1 {
            core *= q as i64;
        }
    }
    let m = sign * core;
    if m.rem_euclid(4) == 1 {
        m
    } else {
        4 * m
    }
}

/// The prime discriminant attached to a prime: `p* = (-1)^((p-1)/2) p` for
/// odd `p`; for `p = 2` the two generators `-4` and `8`.
pub fn prime_discriminants(p: u64) -> Vec<i64> {
    if p == 2 {
        vec![-4, 8]
    } else if p % 4 == 1 {
        vec![p as i64]
    } else {
        vec![-(p as i64)]
    }
}

/// Primes dividing `|n|`.
pub fn prime_support(n: i64) -> Vec<u64> {
    num_prime::nt_funcs::factorize64(n.unsigned_abs())
        .into_keys()
        .collect()
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Euler's totient.
pub fn totient(m: u64) -> u64 {
    num_prime::nt_funcs::factorize64(m)
        .into_iter()
        .fold(m, |acc, (q, _)| acc / q * (q - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sieve_small() {
        assert_eq!(sieve_primes(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert!(sieve_primes(1).is_empty());
        assert_eq!(sieve_primes(2), vec![2]);
    }

    #[test]
    fn kronecker_known_values() {
        assert_eq!(kronecker(-4, 3), -1);
        assert_eq!(kronecker(-4, 5), 1);
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(8, 3), -1);
        assert_eq!(kronecker(8, 5), -1);
        assert_eq!(kronecker(8, 7), 1);
        assert_eq!(kronecker(-4, 2), 0);
        assert_eq!(kronecker(3, 0), 0);
        assert_eq!(kronecker(-1, 0), 1);
        assert_eq!(kronecker(-3, -1), -1);
    }

    #[test]
    fn kronecker_matches_euler_for_odd_primes() {
        for p in sieve_primes(200).into_iter().skip(1) {
            for a in -50i64..50 {
                assert_eq!(kronecker(a, p as i64), legendre(reduce_i64(a, p), p), "a={a} p={p}");
            }
        }
    }

    #[test]
    fn fundamental_discriminants() {
        let expected = [-3, -4, -7, -8, -11, -15, -19, -20, -23, -24];
        let found: Vec<i64> = (-24..0).rev().filter(|&d| is_fundamental_discriminant(d)).collect();
        assert_eq!(found, expected);
        assert!(is_fundamental_discriminant(5));
        assert!(is_fundamental_discriminant(8));
        assert!(is_fundamental_discriminant(12));
        assert!(!is_fundamental_discriminant(-16));
        assert!(!is_fundamental_discriminant(9));
        assert_eq!(fundamental_discriminant_of(-32), -8);
        assert_eq!(fundamental_discriminant_of(-4 * 8), -8);
        assert_eq!(fundamental_discriminant_of(16), 1);
        assert_eq!(fundamental_discriminant_of(3), 12);
    }

    #[test]
    fn roots_and_residues() {
        assert_eq!(primitive_root(53), 2);
        assert_eq!(primitive_root(7), 3);
        assert_eq!(least_nonresidue(5), 2);
        assert_eq!(least_nonresidue(7), 3);
        assert_eq!(totient(12), 4);
        let chi = quadratic_character_table(7);
        assert_eq!(chi, vec![0, 1, 1, -1, 1, -1, -1]);
    }
}
