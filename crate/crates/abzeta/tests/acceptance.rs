//! The eight acceptance criteria. Each prints one PASS/FAIL line; the test
//! fails if any criterion fails.

use std::io::Write;
use std::time::Instant;

use abzeta::catalog::{self, ErratumScope, FamilySpec, FunctionalEquationRule};
use abzeta::oracle::{invariance_audit, measure_coefficients, oracle_count, Mode, OracleConfig, Shift};
use abzeta::series::{self, compare_counts, growth_exponent, primes_up_to, Comparison, GlobalCoeffs};
use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn grid() -> Vec<FamilySpec> {
    catalog::default_grid()
}

/// Every (family, p, m, mode) cell must agree with the closed form; returns the failures.
fn oracle_cells(fams: &[FamilySpec], cells: &[(u64, usize, Mode)]) -> (usize, Vec<String>) {
    // Q=p2 at p=7, m=5 needs about 1.1e9 checks in fast mode, just over the default.
    let cfg = OracleConfig { work_limit: 10_000_000_000 };
    let jobs: Vec<(&FamilySpec, &(u64, usize, Mode))> = fams.iter().flat_map(|f| cells.iter().map(move |c| (f, c))).collect();
    let failures: Vec<String> = jobs
        .par_iter()
        .filter_map(|&(f, &(p, m, mode))| {
            let closed = catalog::closed_form_table(f, p, m).map_err(|e| e.to_string());
            let counted = oracle_count(f, p, m, mode, &cfg).map_err(|e| e.to_string());
            match (counted, closed) {
                (Ok(o), Ok(c)) => match series::table_compare(&o, &c) {
                    Comparison::Equal { .. } => None,
                    other => Some(format!("{} p={p} m={m} {mode}: {other:?}", f.label())),
                },
                (Err(e), _) | (_, Err(e)) => Some(format!("{} p={p} m={m} {mode}: {e}", f.label())),
            }
        })
        .collect();
    (jobs.len(), failures)
}

/// Does the printed local factor of `f` disagree with the oracle at some
/// prime of the grid?
fn printed_local_refuted(f: &FamilySpec) -> bool {
    let cfg = OracleConfig::default();
    [2u64, 3, 5, 7, 11, 13].iter().any(|&p| {
        let printed = catalog::printed_local_factor(f, p).and_then(|r| r.series_integers(p, 3));
        let counted = oracle_count(f, p, 3, Mode::Fast, &cfg).map(|t| t.counts);
        match (printed, counted) {
            (Ok(a), Ok(b)) => a != b,
            _ => true,
        }
    })
}

fn criterion_1() -> Outcome {
    let fams = grid();
    let mut cells = vec![];
    for m in 0..=7 {
        cells.push((2, m, Mode::Fast));
        cells.push((2, m, Mode::Full));
        cells.push((3, m, Mode::Fast));
    }
    for m in 0..=5 {
        cells.push((3, m, Mode::Full));
        cells.push((5, m, Mode::Fast));
        cells.push((7, m, Mode::Fast));
    }
    for m in 0..=3 {
        cells.push((5, m, Mode::Full));
        cells.push((7, m, Mode::Full));
    }
    for m in 0..=2 {
        cells.push((11, m, Mode::Full));
        cells.push((13, m, Mode::Full));
    }
    let (n, failures) = oracle_cells(&fams, &cells);
    if !failures.is_empty() {
        return Err(format!("{} of {n} cells disagree, first: {}", failures.len(), failures[0]));
    }
    // Every local-factor erratum must be backed by an actual disagreement
    // between the printed form and the counts.
    let mut unbacked = vec![];
    let mut backed = 0;
    for f in &fams {
        if f.errata_of(ErratumScope::LocalFactor).next().is_some() {
            // Some flags only bite for particular parameters; require one witness per family kind.
            if printed_local_refuted(f) {
                backed += 1;
            } else if !fams.iter().any(|g| g.name == f.name && printed_local_refuted(g)) {
                unbacked.push(f.label());
            }
        }
    }
    if !unbacked.is_empty() {
        return Err(format!("local errata without a disagreeing count: {unbacked:?}"));
    }
    Ok(format!("{} families, {n} cells bit-exact; {backed} printed local factors refuted by the counts, all flagged", fams.len()))
}

fn fe_failures(f: &FamilySpec, rule: FunctionalEquationRule, printed: bool) -> Vec<u64> {
    primes_up_to(50)
        .into_iter()
        .filter(|&p| f.fe_guard(p))
        .filter(|&p| {
            let lf = if printed { catalog::printed_local_factor(f, p) } else { catalog::local_factor(f, p) };
            !lf.is_ok_and(|lf| catalog::fe_holds(&lf, rule, p))
        })
        .collect()
}

fn criterion_2() -> Outcome {
    let mut checked = 0;
    let mut printed_fails = vec![];
    for f in grid() {
        let bad = fe_failures(&f, f.fe, false);
        if !bad.is_empty() {
            return Err(format!("{}: {} fails at {bad:?}", f.label(), f.fe));
        }
        checked += primes_up_to(50).into_iter().filter(|&p| f.fe_guard(p)).count();
        // The printed equation must hold too unless the entry carries a flag, and a flag must be earned.
        let flagged = f.errata_of(ErratumScope::FunctionalEquation).next().is_some();
        let pbad = fe_failures(&f, f.printed_fe_rule(), true);
        match (pbad.is_empty(), flagged) {
            (true, true) => return Err(format!("{}: flagged functional equation holds as printed", f.label())),
            (false, false) => return Err(format!("{}: printed {} fails at {pbad:?} without a flag", f.label(), f.printed_fe_rule())),
            (false, true) => printed_fails.push(f.name.clone()),
            _ => {}
        }
    }
    // Negative control: the G2 equation with the wrong power of u.
    let g2 = catalog::family("G2", None).unwrap();
    if fe_failures(&g2, FunctionalEquationRule::new(2, catalog::Chi::Trivial), false).is_empty() {
        return Err("negative control accepted".into());
    }
    printed_fails.dedup();
    Ok(format!("{checked} (family, prime) checks hold; printed character wrong (flagged) for {printed_fails:?}"))
}

fn criterion_3() -> Outcome {
    let mut report = vec![];
    for (k, p, m_full) in [(4i64, 2u64, 7usize), (6, 3, 5)] {
        let f = catalog::family("N", Some(k)).unwrap();
        let cells: Vec<(u64, usize, Mode)> = vec![(p, m_full, Mode::Full), (p, 7, Mode::Fast)];
        let (_, failures) = oracle_cells(std::slice::from_ref(&f), &cells);
        if !failures.is_empty() {
            return Err(failures.join("; "));
        }
        // The valuation term matters: the same formula with v_p(k) = 0 is wrong here.
        let naive = catalog::family("N", Some(1)).unwrap();
        let a = catalog::closed_form_table(&f, p, m_full).unwrap().counts;
        let b = catalog::closed_form_table(&naive, p, m_full).unwrap().counts;
        let first = match compare_counts(&a, &b) {
            Comparison::Differ { index, .. } => index,
            _ => return Err(format!("k={k}, p={p}: valuation term has no effect up to p^{m_full}")),
        };
        report.push(format!("k={k} p={p} (v={}, departs from v=0 at p^{first})", abzeta::membership::vp(k as u128, p)));
    }
    Ok(report.join(", "))
}

fn criterion_4() -> Outcome {
    let cfg = OracleConfig::default();
    let fams = grid();
    let jobs: Vec<(&FamilySpec, u64, usize)> = fams.iter().flat_map(|f| [(f, 2u64, 2usize), (f, 3, 1)]).collect();
    let failures: Vec<String> = jobs
        .par_iter()
        .filter_map(|&(f, p, m)| {
            let measured = match measure_coefficients(&f.presentation, p, m, &cfg) {
                Ok(x) => x,
                Err(e) => return Some(format!("{} p={p}: {e}", f.label())),
            };
            let counted: Vec<BigRational> = catalog::closed_form_table(f, p, m).unwrap().counts.into_iter().map(BigRational::from_integer).collect();
            (measured != counted).then(|| format!("{} p={p}: measure {measured:?} vs counts {counted:?}", f.label()))
        })
        .collect();
    if failures.is_empty() {
        Ok(format!("{} families at p=2 (m≤2) and p=3 (m≤1)", fams.len()))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_5() -> Outcome {
    let fams = grid();
    let jobs: Vec<(&FamilySpec, u64)> = fams.iter().flat_map(|f| [(f, 3u64), (f, 7)]).collect();
    let results: Vec<(String, usize, usize)> = jobs
        .par_iter()
        .map(|&(f, p)| {
            let honest = invariance_audit(&f.presentation, p, 1000, 7, Shift::Honest).unwrap();
            let broken = invariance_audit(&f.presentation, p, 200, 7, Shift::Broken).unwrap();
            (format!("{} p={p}", f.label()), honest.violations.len(), broken.violations.len())
        })
        .collect();
    if let Some((l, v, _)) = results.iter().find(|r| r.1 > 0) {
        return Err(format!("{l}: {v} violations"));
    }
    // A shift outside B_t only changes an outcome when the admissible v do not
    // already absorb it, so the control fires for some families and not others.
    let detected = results.iter().filter(|r| r.2 > 0).count();
    if detected == 0 {
        return Err("broken-shift control never detected".into());
    }
    Ok(format!("{} (family, p) audits of 10^3 trials, zero violations; broken control detected in {detected}", results.len()))
}

fn criterion_6() -> Outcome {
    let n = 1000;
    let fams = grid();
    let rows: Vec<Result<Option<String>, String>> = fams
        .par_iter()
        .map(|f| {
            let label = f.label();
            let euler = catalog::global_coeffs(f, n).map_err(|e| format!("{label}: {e}"))?.a;
            let printed = f.printed_global.expand(f.k, f.q, n).map_err(|e| format!("{label}: {e}"))?;
            let fixed = f.global.expand(f.k, f.q, n).map_err(|e| format!("{label}: {e}"))?;
            if !compare_counts(&fixed, &euler).is_equal() {
                return Err(format!("{label}: confirmed global differs from the Euler product"));
            }
            let flag = f.errata_of(ErratumScope::Global).next();
            match (compare_counts(&printed, &euler), flag) {
                (Comparison::Equal { .. }, None) => Ok(None),
                (Comparison::Equal { .. }, Some(_)) => Err(format!("{label}: flagged global matches as printed")),
                (d, None) => Err(format!("{label}: printed global differs without a flag: {d:?}")),
                (Comparison::Differ { index, .. }, Some(e)) if !e.printed.is_empty() => Ok(Some(format!("{}@{}", f.name, index + 1))),
                (d, Some(_)) => Err(format!("{label}: {d:?}")),
            }
        })
        .collect();
    let mut flagged = vec![];
    for r in rows {
        if let Some(s) = r? {
            flagged.push(s);
        }
    }
    flagged.dedup_by(|a, b| a.split('@').next() == b.split('@').next());
    Ok(format!(
        "{} families to n={n}; printed formula differs (flagged, confirmed form exact) for {} entries, first kinds: {}",
        fams.len(),
        flagged.len(),
        flagged.join(" ")
    ))
}

fn criterion_7() -> Outcome {
    let n = 100_000;
    let mut lines = vec![];
    let mut bad = vec![];
    let fams = grid();
    let est: Vec<(String, u32, f64)> = fams
        .par_iter()
        .map(|f| {
            let g = catalog::global_coeffs(f, n).unwrap();
            (f.label(), f.abscissa, growth_exponent(&g).slope)
        })
        .collect();
    for (l, a, s) in est {
        if (s - a as f64).abs() > 0.3 {
            bad.push(format!("{l}: {s:.3} vs {a}"));
        }
        if ["N[k=0]", "G2", "G3", "p2[q=1]"].contains(&l.as_str()) {
            lines.push(format!("{l} {s:.2}"));
        }
    }
    if bad.is_empty() {
        Ok(format!("{} families within ±0.3 at N=10^5 ({})", fams.len(), lines.join(", ")))
    } else {
        Err(bad.join("; "))
    }
}

/// Number of index-`n` subgroups of `D∞ = ⟨a, b | a², b²⟩`: transitive pairs of
/// involutions (or identities) in `S_n`, divided by `(n-1)!`.
fn dihedral_brute(n: usize) -> u64 {
    fn perms(n: usize) -> Vec<Vec<usize>> {
        let mut out = vec![];
        let mut p: Vec<usize> = (0..n).collect();
        fn rec(i: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if i == p.len() {
                out.push(p.clone());
                return;
            }
            for j in i..p.len() {
                p.swap(i, j);
                rec(i + 1, p, out);
                p.swap(i, j);
            }
        }
        rec(0, &mut p, &mut out);
        out
    }
    let invol: Vec<Vec<usize>> = perms(n).into_iter().filter(|s| (0..n).all(|i| s[s[i]] == i)).collect();
    let transitive = |a: &[usize], b: &[usize]| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for y in [a[x], b[x]] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.iter().all(|&s| s)
    };
    let mut count = 0u64;
    for a in &invol {
        for b in &invol {
            if transitive(a, b) {
                count += 1;
            }
        }
    }
    let fact: u64 = (1..n as u64).product();
    count / fact
}

fn criterion_8() -> Outcome {
    let n = 100;
    let assembled = catalog::infinite_dihedral().coeffs(n).map_err(|e| e.to_string())?;
    let brute: Vec<BigInt> = (1..=7).map(|k| BigInt::from(dihedral_brute(k))).collect();
    if assembled.a[..7] != brute[..] {
        return Err(format!("assembly {:?} vs enumeration {:?}", &assembled.a[..7], brute));
    }
    // ζ(s-1) + 2^{-s}ζ(s): a_n = n + [2 | n].
    let closed: Vec<BigInt> = (1..=n).map(|k| BigInt::from(k + usize::from(k % 2 == 0))).collect();
    if assembled.a != closed {
        return Err("assembly differs from ζ(s-1)+2^{-s}ζ(s)".into());
    }
    // The formula with the shifts the other way round, a_n = 1 + [2|n]·n/2, is not the count.
    let swapped: Vec<BigInt> = (1..=n).map(|k| BigInt::from(1 + if k % 2 == 0 { k / 2 } else { 0 })).collect();
    let first = match compare_counts(&swapped, &assembled.a) {
        Comparison::Differ { index, .. } => index + 1,
        _ => return Err("swapped formula unexpectedly agrees".into()),
    };
    let six: Vec<String> = assembled.a[..6].iter().map(|x| x.to_string()).collect();
    Ok(format!(
        "rank-1 assembly = brute force for n≤7 and = ζ(s-1)+2^{{-s}}ζ(s) for n≤{n}: {}; ζ(s)+2^{{-s}}ζ(s-1) fails at n={first} (erratum)",
        six.join(",")
    ))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle = closed form on the default grid", criterion_1),
        ("local functional equations", criterion_2),
        ("N_k valuation term", criterion_3),
        ("measure mode = counting", criterion_4),
        ("representative invariance", criterion_5),
        ("global formulas", criterion_6),
        ("abscissa smoke test", criterion_7),
        ("infinite dihedral sanity", criterion_8),
    ];
    let mut failed = vec![];
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = run();
        let secs = t.elapsed().as_secs_f64();
        let line = match &r {
            Ok(msg) => format!("criterion {}: PASS  {name} [{secs:.1}s] {msg}\n", i + 1),
            Err(msg) => {
                failed.push(i + 1);
                format!("criterion {}: FAIL  {name} [{secs:.1}s] {msg}\n", i + 1)
            }
        };
        // Straight to the stderr handle so the line survives output capture.
        let _ = std::io::stderr().write_all(line.as_bytes());
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn dihedral_enumerator_small_cases() {
    // D∞ has 3 subgroups of index 2: ⟨a, bab⟩, ⟨b, aba⟩ and ⟨ab⟩.
    assert_eq!((1..=4).map(dihedral_brute).collect::<Vec<_>>(), [1, 3, 3, 5]);
}

#[test]
fn growth_reference_series() {
    let ones = GlobalCoeffs::new(vec![BigInt::from(1); 100_000], "zeta");
    assert!((growth_exponent(&ones).slope - 1.0).abs() < 0.05);
}
