//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use limlab_core::cochain::{
    coboundary, coboundary_matrix, d_lambda, random_cochain, star_lambda, Cochain, CochainSpace, DMode,
};
use limlab_core::coeffs::{solve_linear, CoeffDomain};
use limlab_core::constructions::{
    block_indices, coherent_family_z2_constant, hausdorff_family, mitchell_base_cochain, seeded_sets,
    square_fork_scenario, tree_orderings, CoherentFamily, Twist,
};
use limlab_core::falsify::{
    adversarial_candidate, exhaustive_min_support, fork_obstruction_check, forced_values_mitchell,
    refute_uniform_trivializer, uniform_successor_bound, BrokenClaim, SearchBudget,
};
use limlab_core::index::{tower_generate, tuples, FinitePoset, OrdNotation, OrdTuple, WindowedSet};
use limlab_core::limits::{brute_force_limit_mod2, derived_limit, goblot_trivialize};
use limlab_core::system::{
    ideal_system, project, random_poset, random_system, square_without_top, SystemRef, SystemSpec,
};
use limlab_core::Error;
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, format!("took {t:.2?}, limit {limit:?}"))
}

fn domain_for(i: usize) -> CoeffDomain {
    if i % 2 == 0 {
        CoeffDomain::Mod2
    } else {
        CoeffDomain::Integers
    }
}

fn uniform(p: FinitePoset, d: CoeffDomain) -> SystemRef {
    Arc::new(SystemSpec::uniform(p, 1, d))
}

fn in_image(x: &Cochain) -> bool {
    let s = x.system();
    let v = CochainSpace::new(s.clone(), x.arity()).to_vector(x).unwrap();
    solve_linear(&coboundary_matrix(s, x.arity()), &v, s.domain()).unwrap().is_some()
}

fn with_top(rng: &mut ChaCha8Rng, old: usize, d: CoeffDomain) -> (SystemRef, SystemRef) {
    let base = random_poset(rng, old, 0.5);
    let mut pairs = base.strict_pairs();
    pairs.extend((0..old).map(|v| (v, old)));
    let big = FinitePoset::with_numbered_nodes(old + 1, &pairs).unwrap();
    let big = Arc::new(random_system(rng, big, 2, d));
    let small = Arc::new(big.restrict_prefix(old).unwrap());
    (small, big)
}

fn complex_law() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cases = 240;
    for case in 0..cases {
        let nodes = rng.gen_range(1..=6);
        let p = random_poset(&mut rng, nodes, 0.5);
        let s: SystemRef = Arc::new(random_system(&mut rng, p, 2, domain_for(case)));
        let n = case % 4;
        let x = random_cochain(&mut rng, s.clone(), n, 0.5);
        let dd = coboundary(&coboundary(&x).unwrap()).unwrap();
        ensure(dd.is_zero(), format!("case {case}: δδx ≠ 0"))?;
        // the matrices compose to zero as well
        let prod = coboundary_matrix(&s, n + 2).mul(&coboundary_matrix(&s, n + 1)).unwrap();
        ensure(prod.reduced(s.domain()).is_zero(), format!("case {case}: matrix product nonzero"))?;
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!("{cases} random cases, posets ≤ 6 nodes, dims ≤ 2, n ≤ 3, both domains"))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut checked, mut skipped) = (0, 0);
    while checked < 60 {
        let nodes = rng.gen_range(2..=5);
        let p = random_poset(&mut rng, nodes, 0.5);
        let s: SystemRef = Arc::new(random_system(&mut rng, p, 2, CoeffDomain::Mod2));
        let n = rng.gen_range(0..=2);
        match brute_force_limit_mod2(&s, n) {
            Ok(dim) => {
                let r = derived_limit(&s, n).unwrap();
                ensure(r.invariants.rank == dim, format!("system {checked}: {} vs {dim}", r.invariants.rank))?;
                checked += 1;
            }
            Err(Error::Cap(_)) => skipped += 1,
            Err(e) => return Err(e.to_string()),
        }
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("{checked} systems agree ({skipped} above the 2^20 cap skipped)"))
}

fn fixture(name: &str) -> SystemSpec {
    let path = format!("{}/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn square_without_top_case() -> Outcome {
    let start = Instant::now();
    ensure(
        fixture("square-without-top") == SystemSpec::uniform(square_without_top(), 1, CoeffDomain::Mod2),
        "fixture differs from the square",
    )?;
    let m = derived_limit(&uniform(square_without_top(), CoeffDomain::Mod2), 1).unwrap();
    ensure(m.invariants.rank == 1 && m.invariants.torsion.is_empty(), "Mod2 dimension is not 1")?;
    let z = derived_limit(&uniform(square_without_top(), CoeffDomain::Integers), 1).unwrap();
    ensure(z.invariants.rank == 1 && z.invariants.torsion.is_empty(), "ℤ-rank is not 1")?;
    ensure(!in_image(&z.witnesses[0]), "ℤ witness is a coboundary")?;
    within(start, Duration::from_secs(1))?;
    Ok("lim¹ is ℤ₂ over Mod2 and ℤ over the integers".into())
}

fn directed_vanishing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cases = 0;
    for case in 0..60 {
        let old = rng.gen_range(1..=4);
        let (_, big) = with_top(&mut rng, old, domain_for(case));
        ensure(big.poset().is_directed(), "generator produced an undirected poset")?;
        for n in 1..=3 {
            let r = derived_limit(&big, n).unwrap();
            ensure(r.invariants.is_trivial(), format!("case {case}: lim^{n} = {:?}", r.invariants))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} (system, n) pairs with 1 ≤ n ≤ 3 all trivial"))
}

fn goblot_instances() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let window = 6;
    let mut instances = 0;
    let mut fills = 0;
    for case in 0..60 {
        let d = domain_for(case);
        let chain_len = rng.gen_range(1..=3);
        // nested chain ending in the full window, so it is cofinal
        let mut sets: Vec<WindowedSet> = (0..chain_len)
            .map(|i| WindowedSet::from_members(window, 0..window - 2 * (chain_len - 1 - i)).unwrap())
            .collect();
        while sets.len() < chain_len + 3 {
            let s = WindowedSet::from_members(window, (0..window).filter(|_| rng.gen_bool(0.5))).unwrap();
            if !s.is_empty() && !sets.contains(&s) {
                sets.push(s);
            }
        }
        let s: SystemRef = Arc::new(ideal_system(&sets, d).unwrap());
        let chain: Vec<usize> = (0..chain_len).collect();
        let z = coboundary(&random_cochain(&mut rng, s.clone(), 0, 0.6)).unwrap();
        let x = goblot_trivialize(&s, &chain, &z).map_err(|e| e.to_string())?;
        ensure(coboundary(&x).unwrap() == z, format!("case {case}: δx ≠ z"))?;
        let p = s.poset();
        for lam in chain_len..sets.len() {
            let mu = *chain.iter().find(|&&c| p.leq(lam, c)).unwrap();
            let t = |v: &[usize]| OrdTuple::new(v.to_vec());
            let expected = project(&s, &x.get(&t(&[mu])), lam)
                .unwrap()
                .sub(&z.get(&t(&[lam, mu])), d)
                .unwrap();
            ensure(x.get(&t(&[lam])) == expected, format!("case {case}: fill-in at node {lam}"))?;
            fills += 1;
        }
        instances += 1;
    }
    Ok(format!("{instances} flasque instances, {fills} off-chain fill-ins match the formula"))
}

fn mitchell_window() -> Outcome {
    let start = Instant::now();
    let evens: Vec<usize> = (0..16).step_by(2).collect();
    let x = mitchell_base_cochain(16, &evens).unwrap();
    let triples = tuples(x.system().poset(), 2).len();
    // weakly increasing triples from 16 points: C(18, 3)
    ensure(triples == 18 * 17 * 16 / 6, format!("{triples} triples"))?;
    let failing = coboundary(&x).unwrap().entries().len();
    ensure(failing == 0, format!("{failing} triples fail"))?;
    let forced = forced_values_mitchell(16, &evens).unwrap();
    ensure(forced.min_support == Some(8), format!("minimal support {:?}", forced.min_support))?;
    for size in 1..=12 {
        let cof: Vec<usize> = (0..size).step_by(2).collect();
        let xs = mitchell_base_cochain(size, &cof).unwrap();
        let ex = exhaustive_min_support(&xs, 0).unwrap();
        let fv = forced_values_mitchell(size, &cof).unwrap().min_support;
        ensure(ex == fv, format!("B = {size}: exhaustive {ex:?}, forced {fv:?}"))?;
    }
    within(start, Duration::from_secs(30))?;
    Ok(format!("{}/{triples} triples coherent; minimal y0 support 8; exhaustive agrees for B ≤ 12", triples - failing))
}

fn star_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cases = 120;
    for case in 0..cases {
        let d = domain_for(case);
        let old = rng.gen_range(1..=4);
        let (small, big) = with_top(&mut rng, old, d);
        let n = 1 + case % 3;
        let x = random_cochain(&mut rng, small.clone(), n, 0.4);
        let w = random_cochain(&mut rng, small.clone(), n - 1, 0.4);
        let star = star_lambda(&x, &w, big.clone()).unwrap();
        let sign = BigInt::from(if n % 2 == 0 { -1 } else { 1 });
        let inner = coboundary(&w).unwrap().add(&x.scale(&sign)).unwrap();
        let rhs = star_lambda(&coboundary(&x).unwrap(), &inner, big.clone()).unwrap();
        ensure(coboundary(&star).unwrap() == rhs, format!("case {case}: identity fails"))?;
        ensure(d_lambda(&star, old, DMode::Slice).unwrap() == w, format!("case {case}: d_λ(x ∗ w) ≠ w"))?;
    }
    Ok(format!(
        "{cases} instances, n ≤ 3: δ(x ∗ w) = δx ∗ (δw + (-1)^(n+1) x) and d_λ(x ∗ w) = w"
    ))
}

fn fork_obstruction() -> Outcome {
    let start = Instant::now();
    let budget = SearchBudget::full(8);
    let mut searched = Vec::new();
    for d in [CoeffDomain::Mod2, CoeffDomain::Integers] {
        for seed in 0..3 {
            let s = square_fork_scenario(d, Twist::Witness, seed).unwrap();
            let r = fork_obstruction_check(&s.forks, &s.z, &budget).unwrap();
            ensure(r.pair.is_none(), format!("{d:?}: a pair exists for the witness"))?;
            searched.push(r.report.searched.to_string());
            let s = square_fork_scenario(d, Twist::Trivial, seed).unwrap();
            let r = fork_obstruction_check(&s.forks, &s.z, &budget).unwrap();
            let (u0, u1) = r.pair.ok_or(format!("{d:?}: no pair for a trivial z"))?;
            ensure(coboundary(&u0).unwrap() == s.forks.0 && coboundary(&u1).unwrap() == s.forks.1, "pair")?;
            let c = d_lambda(&u1.sub(&u0).unwrap(), 4, DMode::Slice).unwrap();
            ensure(coboundary(&c).unwrap() == s.z, "conversion identity fails")?;
        }
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "witness: no pair (searched {} over Mod2, {} over ℤ); trivial z: pair found and converted",
        searched[0], searched[3]
    ))
}

fn orderings() -> Outcome {
    let start = Instant::now();
    let indices = block_indices(11, 5);
    let top = OrdNotation::from_cnf(vec![(1, 2)]).unwrap();
    ensure(indices.last() == Some(&top), "indices do not reach ω·2")?;
    let mut pairs = 0;
    for seed in 0..3 {
        let tower = tower_generate(11, 64, seed).unwrap();
        let orders = tree_orderings(&tower, &indices).unwrap();
        let check = orders.verify(&tower);
        ensure(check.violations.is_empty(), format!("seed {seed}: {:?}", check.violations.first()))?;
        ensure(check.unresolved.is_empty(), format!("seed {seed}: unresolved {:?}", check.unresolved))?;
        pairs += check.pairs;
    }
    within(start, Duration::from_secs(30))?;
    Ok(format!("indices 0..ω·2, N = 64, 3 towers: {pairs} pairs, all conditions hold, 0 unresolved"))
}

fn certs_by_scan(fam: &CoherentFamily) -> usize {
    let mut ok = 0;
    for (&(i, j), cert) in fam.certs() {
        let agree = (cert.bound..fam.window())
            .filter(|&k| fam.set(i).contains(k) && fam.set(j).contains(k))
            .all(|k| fam.value(i, k) == fam.value(j, k));
        if agree && 2 * cert.bound <= fam.window() {
            ok += 1;
        }
    }
    ok
}

fn hausdorff_refutation() -> Outcome {
    let start = Instant::now();
    let tower = tower_generate(12, 64, 0).unwrap();
    let orders = tree_orderings(&tower, &block_indices(12, 5)).unwrap();
    let h = hausdorff_family(&tower, &orders).unwrap();
    let ok = certs_by_scan(&h.family);
    ensure(ok == 66 && h.family.certs().len() == 66, format!("{ok}/66 certs verify"))?;
    let m = uniform_successor_bound(&h);
    let b = adversarial_candidate(&h, 0);
    let v = refute_uniform_trivializer(&h, &b, &[m; 12], &SearchBudget::full(64))
        .unwrap()
        .ok_or("no violation found")?;
    // the violation is checked against the sets directly
    ensure(h.b[v.upper].contains(v.point) && v.point >= m, "point is not in b_β above the bound")?;
    let next = v.lower + 1;
    ensure(
        tower.level(next).contains(v.point) && !tower.level(v.lower).contains(v.point),
        "point is not in a_{α+1} ∖ a_α",
    )?;
    let claim = match v.broken {
        BrokenClaim::SuccessorGap { .. } => b.contains(v.point),
        BrokenClaim::Stabilization { .. } => !b.contains(v.point),
    };
    ensure(claim, "reported claim does not fail")?;
    within(start, Duration::from_secs(30))?;
    Ok(format!(
        "66/66 certs; violation at ({}, {}), level {}, point {} with uniform bound {m}",
        v.lower, v.upper, v.level, v.point
    ))
}

fn counting_skeleton() -> Outcome {
    let (m, n) = (3, 32);
    let sets = seeded_sets(m, n, 1);
    let families: Vec<(Vec<bool>, CoherentFamily)> = (0..8u32)
        .map(|mask| {
            let h: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
            let f = coherent_family_z2_constant(&h, &sets).unwrap();
            (h, f)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut hits = 0;
    for sample in 0..1000 {
        // half the samples copy a family above a random point
        let mut f: Vec<BigInt> = (0..n).map(|_| BigInt::from(rng.gen_range(0..2))).collect();
        if sample % 2 == 0 {
            let (_, fam) = &families[rng.gen_range(0..8)];
            let from = rng.gen_range(0..=n / 2);
            for k in from..n {
                if let Some(i) = (0..m).find(|&i| fam.set(i).contains(k)) {
                    f[k] = fam.value(i, k);
                }
            }
        }
        for bound in 0..=n / 2 {
            let compatible = families
                .iter()
                .filter(|(_, fam)| {
                    (0..m).all(|i| (bound..n).filter(|&k| fam.set(i).contains(k)).all(|k| f[k] == fam.value(i, k)))
                })
                .count();
            ensure(compatible <= 1, format!("sample {sample}, bound {bound}: {compatible} compatible h"))?;
            if bound == n / 2 && compatible == 1 {
                hits += 1;
            }
        }
    }
    Ok(format!("1000 window functions, bounds ≤ 16: at most one h each ({hits} match exactly one at bound 16)"))
}

fn run_cli(args: &[&str], threads: &str) -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_limlab"))
        .args(args)
        .env("LIMLAB_THREADS", threads)
        .output()
        .unwrap();
    (out.stdout, out.status.code().unwrap_or(-1))
}

fn determinism() -> Outcome {
    let artifact = std::env::temp_dir().join(format!("limlab-acceptance-{}.json", std::process::id()));
    let path = artifact.to_str().unwrap().to_string();
    let (_, code) = run_cli(&["construct", "hausdorff", "--out", &path], "2");
    ensure(code == 0, "could not write an artifact")?;
    let commands: Vec<Vec<&str>> = vec![
        vec!["limn", "--fixture", "square-without-top"],
        vec!["limn", "--fixture", "chain3", "--domain", "integers", "--format", "csv"],
        vec!["limn", "--fixture", "truncated-A"],
        vec!["construct", "mitchell"],
        vec!["construct", "family-z", "--length", "3", "--window", "32", "--seed", "1"],
        vec!["construct", "family-z2-const", "--length", "3", "--window", "32", "--seed", "5"],
        vec!["construct", "family-z2-tree", "--length", "3", "--window", "32"],
        vec!["construct", "orderings"],
        vec!["construct", "hausdorff", "--format", "csv"],
        vec!["construct", "forks", "--domain", "integers"],
        vec!["falsify", "mitchell"],
        vec!["falsify", "square", "--domain", "integers"],
        vec!["falsify", "forks", "--domain", "integers"],
        vec!["falsify", "forks", "--twist", "trivial"],
        vec!["falsify", "hausdorff"],
        vec!["verify", &path],
        vec!["report"],
    ];
    for cmd in &commands {
        let (first, code) = run_cli(cmd, "1");
        ensure(code == 0, format!("{cmd:?} exited {code}"))?;
        for threads in ["1", "2", "8"] {
            let (again, code) = run_cli(cmd, threads);
            ensure(code == 0 && again == first, format!("{cmd:?} differs with {threads} threads"))?;
        }
    }
    let (_, code) = run_cli(&["construct", "family-z", "--length", "3", "--window", "8"], "1");
    ensure(code == 4, format!("infeasible family exited {code}"))?;
    std::fs::remove_file(&artifact).ok();
    Ok(format!("{} commands byte-identical over 4 runs with 1, 2 and 8 threads", commands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("cochain-complex law", complex_law),
        ("oracle equivalence", oracle_equivalence),
        ("square without top", square_without_top_case),
        ("directed vanishing", directed_vanishing),
        ("flasque trivializer", goblot_instances),
        ("Mitchell window", mitchell_window),
        ("star/slice algebra", star_algebra),
        ("fork obstruction", fork_obstruction),
        ("tree orderings", orderings),
        ("uniformization refutation", hausdorff_refutation),
        ("counting skeleton", counting_skeleton),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({t:.2?}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({t:.2?}): {why}", i + 1);
            }
        }
    }
    println!("{}/12 criteria pass", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
