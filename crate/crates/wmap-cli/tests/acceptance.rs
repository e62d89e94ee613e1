//! Acceptance criterion 8: the figure-reproduction command emits both
//! normalized eigenfunctions with exact zero integral and unit absolute
//! mass, and its summary passes the value checks.

use wmap_cli::reproduce_figure;

#[test]
fn criterion_8_figure_reproduction() {
    // Known red via the lambda(m=7) reference digits: the summary checks
    // values at the stated tolerances, and the frozen m=7 eigenvalue
    // digits carry ~1.1e-8 of error against the computed root (see the
    // companion criterion-2 note in the core acceptance suite), so
    // `all_pass` is false on that single flag. Kept as stated.
    let dir = tempfile::tempdir().unwrap();
    let summary = reproduce_figure(dir.path()).expect("reproduction runs");

    let mut failures: Vec<String> = Vec::new();
    let mut checks = 0;

    for m in [5usize, 7] {
        let path = dir.path().join(format!("eigenfunction_m{m}.csv"));
        checks += 1;
        if !path.exists() {
            failures.push(format!("missing {path:?}"));
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let rows: Vec<(f64, f64, f64)> = text
            .lines()
            .skip(1)
            .map(|l| {
                let mut it = l.split(',');
                (
                    it.next().unwrap().parse().unwrap(),
                    it.next().unwrap().parse().unwrap(),
                    it.next().unwrap().parse().unwrap(),
                )
            })
            .collect();
        let integral: f64 = rows.iter().map(|r| (r.1 - r.0) * r.2).sum();
        let abs_integral: f64 = rows.iter().map(|r| (r.1 - r.0) * r.2.abs()).sum();
        checks += 2;
        if integral.abs() > 1e-10 {
            failures.push(format!("m={m}: integral of h/K = {integral:e} (tol 1e-10)"));
        }
        if (abs_integral - 1.0).abs() > 1e-12 {
            failures.push(format!("m={m}: integral of |h|/K = {abs_integral} (tol 1e-12)"));
        }
    }

    checks += 1;
    if !summary.all_pass {
        let detail: Vec<String> = summary
            .cases
            .iter()
            .flat_map(|c| {
                let mut v = Vec::new();
                if !c.a_pass {
                    v.push(format!("m={}: a = {:.15} vs {:.15}", c.m, c.a, c.a_ref));
                }
                if !c.lambda_pass {
                    v.push(format!(
                        "m={}: lambda = {:.12} vs {:.12} (diff {:.3e}, tol {:.0e})",
                        c.m,
                        c.lambda,
                        c.lambda_ref,
                        (c.lambda - c.lambda_ref).abs(),
                        c.lambda_tol
                    ));
                }
                if !c.k_pass {
                    v.push(format!("m={}: K = {:.10} vs {:.10}", c.m, c.k, c.k_ref));
                }
                v
            })
            .collect();
        failures.push(format!("summary value checks: {}", detail.join("; ")));
    }

    if failures.is_empty() {
        println!("PASS  criterion 8: figure reproduction ({checks} checks)");
    } else {
        println!(
            "FAIL  criterion 8: figure reproduction ({} of {checks} checks failed)",
            failures.len()
        );
        for f in &failures {
            println!("      - {f}");
        }
        panic!("criterion failed: criterion 8");
    }
}
