//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use spoa_core::bounds::{restricted_design_value, spoa_bound, spoa_curve, WelfareCurve};
use spoa_core::combinatorics::{coalition_coefficient, falling_factorial, index_set};
use spoa_core::games::{BruteForceCaps, DynamicsMode, JointAction, Resource, ResourceGame};
use spoa_core::rational::{int, parse_rational, ratio, to_f64, Rational};

fn spoa(args: &[&str]) -> Value {
    let out = Command::new(env!("CARGO_BIN_EXE_spoa"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "spoa {args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn exact(v: &Value) -> Rational {
    parse_rational(v["exact"].as_str().expect("exact field")).expect("rational")
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let elapsed = start.elapsed();
    if elapsed > limit {
        Err(format!("took {elapsed:.1?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn factorial(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(falling_factorial(n, n)))
}

/// `1 - 1/(1/((n-1)(n-1)!) + Σ_{j<n} 1/j!)`.
fn design_closed_form(n: u64) -> Rational {
    let mut sum = Rational::one() / (int(n as i64 - 1) * factorial(n - 1));
    for j in 0..n {
        sum += Rational::one() / factorial(j);
    }
    Rational::one() - Rational::one() / sum
}

fn criterion_1() -> Result<String, String> {
    let start = Instant::now();
    let report = spoa(&["bound", "--n", "20", "--welfare", "indicator", "--k", "1"]);
    within(start, Duration::from_secs(10))?;
    let value = exact(&report["spoa"]);
    if value != ratio(1, 2) {
        return Err(format!("spoa = {value}"));
    }
    Ok(format!("spoa = 1/2 in {:.2?}", start.elapsed()))
}

fn criterion_2() -> Result<String, String> {
    for n in 2..=8 {
        let p = spoa_bound(n, &WelfareCurve::indicator(n), n)
            .map_err(|e| e.to_string())?
            .primal_value;
        if p != Rational::one() {
            return Err(format!("P*({n}, indicator, {n}) = {p}"));
        }
    }
    let start = Instant::now();
    let p = spoa_bound(20, &WelfareCurve::indicator(20), 20)
        .map_err(|e| e.to_string())?
        .primal_value;
    within(start, Duration::from_secs(600))?;
    if p != Rational::one() {
        return Err(format!("P*(20, indicator, 20) = {p}"));
    }
    Ok(format!(
        "P* = 1 for n = 2..8 and n = 20 ({:.2?} at n = 20)",
        start.elapsed()
    ))
}

fn criterion_3() -> Result<String, String> {
    let report = spoa(&["design", "--n", "20", "--welfare", "indicator", "--k", "1"]);
    let got = exact(&report["spoa"]);
    let want = design_closed_form(20);
    let relative = to_f64(&((&got - &want) / &want)).abs();
    if relative > 1e-9 {
        return Err(format!(
            "design {} vs closed form {}",
            to_f64(&got),
            to_f64(&want)
        ));
    }
    Ok(format!(
        "design {:.12} vs closed form {:.12}, relative error {relative:.1e}",
        to_f64(&got),
        to_f64(&want)
    ))
}

fn criterion_4() -> Result<String, String> {
    let start = Instant::now();
    let ks: Vec<usize> = (1..=20).collect();
    let table =
        spoa_curve(20, &WelfareCurve::indicator(20), &ks, true).map_err(|e| e.to_string())?;
    within(start, Duration::from_secs(15 * 60))?;
    let design: Vec<Rational> = table
        .rows
        .iter()
        .map(|r| r.design_spoa.clone().expect("design column"))
        .collect();
    for (pair, d) in table.rows.windows(2).zip(design.windows(2)) {
        if pair[1].spoa < pair[0].spoa || d[1] < d[0] {
            return Err(format!("curve decreases at k = {}", pair[1].k));
        }
    }
    for (row, d) in table.rows.iter().zip(&design) {
        if *d < row.spoa {
            return Err(format!("design below welfare sharing at k = {}", row.k));
        }
    }
    let last = table.rows.last().expect("twenty rows");
    if last.spoa != Rational::one() || design[19] != Rational::one() {
        return Err("curves do not reach 1 at k = 20".into());
    }
    Ok(format!(
        "20 rows, monotone, design >= sharing, both 1 at k = 20 in {:.1?}",
        start.elapsed()
    ))
}

fn criterion_5() -> Result<String, String> {
    let start = Instant::now();
    for (n, k) in [(2, 1), (3, 1), (3, 2)] {
        let (n_s, k_s) = (n.to_string(), k.to_string());
        let cert = spoa(&[
            "construct",
            "--n",
            &n_s,
            "--welfare",
            "indicator",
            "--k",
            &k_s,
        ]);
        let bound = spoa_bound(n, &WelfareCurve::indicator(n), k).map_err(|e| e.to_string())?;
        let ratio = exact(&cert["constructed_ratio"]);
        if ratio != bound.spoa {
            return Err(format!("({n},{k}): ratio {ratio} vs 1/P* {}", bound.spoa));
        }
        if cert["equilibrium_verified"] != true {
            return Err(format!("({n},{k}): equilibrium not verified"));
        }
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "ratios exact and equilibria verified in {:.2?}",
        start.elapsed()
    ))
}

fn random_game(rng: &mut ChaCha8Rng) -> ResourceGame {
    let n = rng.random_range(1..=3);
    let m = rng.random_range(1..=4);
    let resources = (0..m)
        .map(|r| Resource {
            id: format!("r{r}"),
            value: ratio(rng.random_range(0..=6), rng.random_range(1..=3)),
        })
        .collect();
    let actions = (0..n)
        .map(|_| {
            (0..rng.random_range(1..=2))
                .map(|_| (0..m).filter(|_| rng.random_bool(0.5)).collect())
                .collect()
        })
        .collect();
    let welfare = if rng.random_bool(0.5) {
        WelfareCurve::indicator(n)
    } else {
        let mut values = vec![Rational::zero()];
        values.extend((0..n).map(|_| ratio(rng.random_range(1..=9), rng.random_range(1..=4))));
        WelfareCurve::new(values).expect("positive curve")
    };
    ResourceGame::new(resources, actions, welfare, None).expect("valid random game")
}

fn joint_actions(game: &ResourceGame) -> Vec<JointAction> {
    let mut all = vec![Vec::new()];
    for i in 0..game.players() {
        all = all
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                (0..game.actions(i).len()).map(move |a| {
                    let mut next = prefix.clone();
                    next.push(a);
                    next
                })
            })
            .collect();
    }
    all.into_iter().map(JointAction).collect()
}

fn criterion_6() -> Result<String, String> {
    let start = Instant::now();
    let caps = BruteForceCaps::default();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut checks = 0usize;
    for g in 0..500 {
        let game = random_game(&mut rng);
        let n = game.players();
        let fail = |what: String| Err(format!("game {g}: {what}"));
        let actions = joint_actions(&game);
        for ne in &actions {
            for opt in &actions {
                let theta = game.label_resources(ne, opt).map_err(|e| e.to_string())?;
                for zeta in 1..=n {
                    let direct = game
                        .deviation_sum_oracle(ne, opt, zeta, &caps)
                        .map_err(|e| e.to_string())?;
                    if direct != theta.deviation_welfare(game.welfare_curve(), zeta) {
                        return fail(format!("oracle mismatch at zeta = {zeta}"));
                    }
                    checks += 1;
                }
            }
        }
        let mut weaker: Option<Vec<JointAction>> = None;
        for k in 1..=n {
            let bound = spoa_bound(n, game.welfare_curve(), k).map_err(|e| e.to_string())?;
            let brute = game.brute_force_spoa(k, &caps).map_err(|e| e.to_string())?;
            if brute < bound.spoa {
                return fail(format!(
                    "brute force {brute} below 1/P* {} at k = {k}",
                    bound.spoa
                ));
            }
            for mode in [DynamicsMode::Deterministic, DynamicsMode::Asynchronous] {
                for start in &actions {
                    let trace = game
                        .run_dynamics(start, k, mode, Some(g as u64))
                        .map_err(|e| e.to_string())?;
                    if !game
                        .is_k_strong_ne(&trace.final_action, k)
                        .map_err(|e| e.to_string())?
                        .is_stable()
                    {
                        return fail(format!("dynamics ended outside the {k}-SNE set"));
                    }
                    if trace
                        .steps
                        .iter()
                        .any(|s| s.new_objective <= s.old_objective)
                    {
                        return fail("non-improving dynamics step".into());
                    }
                }
            }
            let ksne = game.enumerate_ksne(k, &caps).map_err(|e| e.to_string())?;
            if let Some(weaker) = &weaker {
                if ksne.iter().any(|a| !weaker.contains(a)) {
                    return fail(format!("{k}-SNE not contained in {}-SNE", k - 1));
                }
            }
            weaker = Some(ksne);
        }
    }
    within(start, Duration::from_secs(300))?;
    Ok(format!(
        "500 games, {checks} oracle identities, in {:.1?}",
        start.elapsed()
    ))
}

fn criterion_7() -> Result<String, String> {
    let start = Instant::now();
    for n in 1..=8usize {
        for label in index_set(n).map_err(|e| e.to_string())?.iter() {
            for zeta in 1..=n {
                let mut total = num_bigint::BigUint::zero();
                for alpha in 0..=zeta {
                    for beta in 0..=(zeta - alpha) {
                        total += coalition_coefficient(*label, zeta, n, alpha, beta)
                            .map_err(|e| e.to_string())?;
                    }
                }
                if total != falling_factorial(n as u64, zeta as u64) {
                    return Err(format!("sum of B for {label}, zeta = {zeta}, n = {n}"));
                }
            }
        }
    }
    for n in 1..=6 {
        let w = WelfareCurve::indicator(n);
        for k in 1..=n {
            let restricted = restricted_design_value(n, &w, k).map_err(|e| e.to_string())?;
            let p = spoa_bound(n, &w, k)
                .map_err(|e| e.to_string())?
                .primal_value;
            if restricted != p {
                return Err(format!(
                    "restricted design {restricted} vs P* {p} at n = {n}, k = {k}"
                ));
            }
        }
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!(
        "identities hold for n <= 8, restricted design = P* for n <= 6, in {:.1?}",
        start.elapsed()
    ))
}

fn criterion_8() -> Result<String, String> {
    let start = Instant::now();
    for n in 1..=20 {
        let w = WelfareCurve::identity(n);
        for k in 1..=n {
            let s = spoa_bound(n, &w, k).map_err(|e| e.to_string())?.spoa;
            if s != Rational::one() {
                return Err(format!("identity welfare gives {s} at n = {n}, k = {k}"));
            }
        }
    }
    let caps = BruteForceCaps::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let game = random_game(&mut rng);
        let n = game.players();
        let mut json = game.to_json();
        json["welfare"] = serde_json::json!((0..=n).map(|j| j.to_string()).collect::<Vec<_>>());
        let game = ResourceGame::from_json_str(&json.to_string()).map_err(|e| e.to_string())?;
        for k in 1..=n {
            let brute = game.brute_force_spoa(k, &caps).map_err(|e| e.to_string())?;
            if brute != Rational::one() {
                return Err(format!("brute force {brute} on an identity-welfare game"));
            }
        }
    }
    Ok(format!(
        "SPoA = 1 for all k, n <= 20; brute force agrees at n <= 3; {:.1?}",
        start.elapsed()
    ))
}

type Criterion = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, Criterion); 8] = [
        ("covering endpoint k=1", criterion_1),
        ("full-coalition endpoint", criterion_2),
        ("design endpoint", criterion_3),
        ("curve shape at n=20", criterion_4),
        ("tightness certification", criterion_5),
        ("oracle equivalence suite", criterion_6),
        ("combinatorial identities", criterion_7),
        ("separable welfare", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(message)
        });
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL {} {name}: {reason}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
