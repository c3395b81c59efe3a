//! Counting and enumerating solutions of affine congruence systems whose
//! moduli are powers of a single prime.

/// `x^{-1} mod m` for `gcd(x, m) = 1`.
pub fn mod_inv(x: i128, m: i128) -> i128 {
    let (mut a, mut b) = (x.rem_euclid(m), m);
    let (mut x0, mut x1) = (1i128, 0i128);
    while b != 0 {
        let q = a / b;
        (a, b) = (b, a - q * b);
        (x0, x1) = (x1, x0 - q * x1);
    }
    debug_assert_eq!(a, 1, "not invertible");
    x0.rem_euclid(m)
}

pub fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Valuation of `x` at `p`, capped at `cap` (and equal to `cap` for zero).
pub fn val(mut x: i128, p: i128, cap: u32) -> u32 {
    if x == 0 {
        return cap;
    }
    let mut v = 0;
    while v < cap && x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// Number of `x ∈ (Z/p^e)^nvars` with `rows[i]·x ≡ rhs[i] (mod p^e)`,
/// returned as an exponent of `p` (`None` when there is no solution).
///
/// Elimination picks a pivot of minimal valuation, so every other entry of
/// its column is a multiple of it and row operations stay integral. The pivot
/// row then fixes its variable up to `p^d` choices whatever the rest is.
pub fn count_solutions(rows: &mut [Vec<i128>], rhs: &mut [i128], nvars: usize, p: i128, e: u32) -> Option<u32> {
    let m = p.pow(e);
    for (r, b) in rows.iter_mut().zip(rhs.iter_mut()) {
        for x in r.iter_mut() {
            *x = x.rem_euclid(m);
        }
        *b = b.rem_euclid(m);
    }
    let mut row_alive = vec![true; rows.len()];
    let mut col_alive = vec![true; nvars];
    let mut exp = 0u32;
    loop {
        let mut best: Option<(usize, usize, u32)> = None;
        for (r, row) in rows.iter().enumerate() {
            if !row_alive[r] {
                continue;
            }
            for (c, &x) in row.iter().enumerate() {
                if col_alive[c] && x != 0 {
                    let d = val(x, p, e);
                    if best.map_or(true, |(_, _, bd)| d < bd) {
                        best = Some((r, c, d));
                    }
                }
            }
            if matches!(best, Some((_, _, 0))) {
                break;
            }
        }
        let Some((pr, pc, d)) = best else { break };
        let pd = p.pow(d);
        let unit_inv = mod_inv(rows[pr][pc] / pd, m);
        for r in 0..rows.len() {
            if r == pr || !row_alive[r] || rows[r][pc] == 0 {
                continue;
            }
            let f = (rows[r][pc] / pd % m) * unit_inv % m;
            for c in 0..nvars {
                if col_alive[c] {
                    rows[r][c] = (rows[r][c] - f * rows[pr][c] % m).rem_euclid(m);
                }
            }
            rhs[r] = (rhs[r] - f * rhs[pr] % m).rem_euclid(m);
        }
        if rhs[pr] % pd != 0 {
            return None;
        }
        exp += d;
        row_alive[pr] = false;
        col_alive[pc] = false;
    }
    for r in 0..rows.len() {
        if row_alive[r] && rhs[r] != 0 {
            return None;
        }
    }
    Some(exp + e * col_alive.iter().filter(|&&c| c).count() as u32)
}

/// An affine congruence `coeffs·x + constant ≡ 0 (mod modulus)`.
#[derive(Clone, Debug)]
pub struct Congruence {
    pub coeffs: Vec<i128>,
    pub constant: i128,
    pub modulus: i128,
}

/// Calls `f` on every `x` with `0 ≤ x[i] < ranges[i]` satisfying all
/// congruences. Each variable is solved for, not scanned, at the level where
/// it is the last one a congruence mentions.
pub fn enumerate_solutions(ranges: &[i128], congs: &[Congruence], f: &mut impl FnMut(&[i128])) {
    let n = ranges.len();
    let mut by_level: Vec<Vec<Congruence>> = vec![Vec::new(); n];
    for c in congs {
        let m = c.modulus;
        if m == 1 {
            continue;
        }
        let coeffs: Vec<i128> = c.coeffs.iter().map(|x| x.rem_euclid(m)).collect();
        match (0..n).rev().find(|&i| coeffs[i] != 0) {
            Some(l) => by_level[l].push(Congruence { coeffs, constant: c.constant.rem_euclid(m), modulus: m }),
            None => {
                if c.constant.rem_euclid(m) != 0 {
                    return;
                }
            }
        }
    }
    let mut x = vec![0i128; n];
    descend(0, ranges, &by_level, &mut x, f);
}

fn partial(c: &Congruence, x: &[i128], upto: usize) -> i128 {
    let mut s = c.constant;
    for i in 0..upto {
        s = (s + c.coeffs[i] * x[i]) % c.modulus;
    }
    s
}

fn descend(l: usize, ranges: &[i128], by_level: &[Vec<Congruence>], x: &mut Vec<i128>, f: &mut impl FnMut(&[i128])) {
    if l == ranges.len() {
        f(x);
        return;
    }
    let congs = &by_level[l];
    let (start, step) = match congs.first() {
        None => (0, 1),
        Some(c) => {
            let m = c.modulus;
            let target = (-partial(c, x, l)).rem_euclid(m);
            let g = gcd(c.coeffs[l], m);
            if target % g != 0 {
                return;
            }
            let mg = m / g;
            let x0 = if mg == 1 { 0 } else { (target / g) % mg * mod_inv(c.coeffs[l] / g, mg) % mg };
            (x0, mg)
        }
    };
    let mut v = start;
    while v < ranges[l] {
        x[l] = v;
        let ok = congs.iter().skip(1).all(|c| (partial(c, x, l) + c.coeffs[l] * v).rem_euclid(c.modulus) == 0);
        if ok {
            descend(l + 1, ranges, by_level, x, f);
        }
        v += step;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(rows: &[Vec<i128>], rhs: &[i128], nvars: usize, m: i128) -> usize {
        let total = m.pow(nvars as u32);
        (0..total)
            .filter(|&idx| {
                let mut x = vec![0; nvars];
                let mut r = idx;
                for xi in x.iter_mut() {
                    *xi = r % m;
                    r /= m;
                }
                rows.iter().zip(rhs).all(|(row, b)| {
                    (row.iter().zip(&x).map(|(a, b)| a * b).sum::<i128>() - b).rem_euclid(m) == 0
                })
            })
            .count()
    }

    #[test]
    fn solver_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..400 {
            let p = [2i128, 3][rng.gen_range(0..2)];
            let e = rng.gen_range(1..=3u32);
            let nvars = rng.gen_range(1..=3usize);
            let nrows = rng.gen_range(0..=3usize);
            let m = p.pow(e);
            let rows: Vec<Vec<i128>> = (0..nrows)
                .map(|_| (0..nvars).map(|_| rng.gen_range(0..m) * if rng.gen_bool(0.3) { p } else { 1 }).collect())
                .collect();
            let rhs: Vec<i128> = (0..nrows).map(|_| rng.gen_range(0..m)).collect();
            let expect = brute(&rows, &rhs, nvars, m);
            let got = count_solutions(&mut rows.clone(), &mut rhs.clone(), nvars, p, e).map_or(0, |x| p.pow(x) as usize);
            assert_eq!(got, expect, "{rows:?} {rhs:?} mod {m}");
        }
    }

    #[test]
    fn enumerator_matches_filter() {
        let congs = vec![
            Congruence { coeffs: vec![2, 0, 1], constant: 1, modulus: 9 },
            Congruence { coeffs: vec![0, 3, 0], constant: 0, modulus: 9 },
            Congruence { coeffs: vec![1, 1, 0], constant: 0, modulus: 3 },
        ];
        let ranges = [9, 9, 27];
        let mut got = vec![];
        enumerate_solutions(&ranges, &congs, &mut |x| got.push(x.to_vec()));
        let mut expect = vec![];
        for a in 0..9 {
            for b in 0..9 {
                for c in 0..27 {
                    let x = [a, b, c];
                    if congs.iter().all(|k| (k.coeffs.iter().zip(&x).map(|(p, q)| p * q).sum::<i128>() + k.constant) % k.modulus == 0) {
                        expect.push(x.to_vec());
                    }
                }
            }
        }
        assert_eq!(got, expect);
    }
}
