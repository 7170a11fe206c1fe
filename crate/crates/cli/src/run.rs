use std::sync::Arc;

use limlab_core::cochain::{coboundary, d_lambda, is_coherent, Cochain, DMode};
use limlab_core::coeffs::CoeffDomain;
use limlab_core::constructions::{
    block_indices, coherent_family_z, coherent_family_z2_constant, coherent_family_z2_tree, hausdorff_family,
    mitchell_base_cochain, seeded_sets, square_fork_scenario, tree_orderings, BinaryTree, CoherentFamily,
    FamilyCheck, ForkScenario, HausdorffFamily, TreeOrders, Twist,
};
use limlab_core::falsify::{
    adversarial_candidate, exhaustive_min_support, fork_obstruction_check, forced_values_mitchell,
    literal_candidate, refute_uniform_trivializer, search_trivializer, uniform_successor_bound, SearchBudget,
};
use limlab_core::index::{tower_generate, tuples, Tower};
use limlab_core::limits::{brute_force_limit_mod2, derived_limit, vanishing_expectation};
use limlab_core::system::{mitchell_system, SystemRef, SystemSpec};
use limlab_core::{Error, Result, VERSION};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const FIXTURES: [(&str, &str); 3] = [
    ("square-without-top", include_str!("../fixtures/square-without-top.json")),
    ("chain3", include_str!("../fixtures/chain3.json")),
    ("truncated-A", include_str!("../fixtures/truncated-A.json")),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetConfig {
    pub support: usize,
    pub coeff: u64,
    pub stabilization: usize,
}

/// Everything a run depends on. Unused fields stay absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cofseq: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub twist: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    /// Inline system or artifact the run reads.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<Value>,
}

/// Result plus the checks run on it.
pub struct Outcome {
    pub result: Value,
    pub passed: bool,
    pub summary: String,
    pub checks: Value,
}

impl Outcome {
    fn new(result: Value, passed: bool, summary: String, checks: Value) -> Self {
        Outcome {
            result,
            passed,
            summary,
            checks,
        }
    }

    pub fn artifact(&self, config: &RunConfig) -> Value {
        json!({
            "config": config,
            "version": VERSION,
            "verification": {
                "passed": self.passed,
                "summary": self.summary,
                "checks": self.checks,
            },
            "result": self.result,
        })
    }
}

fn missing(what: &str) -> Error {
    Error::Malformed(format!("missing {what}"))
}

fn domain_of(c: &RunConfig) -> Result<CoeffDomain> {
    CoeffDomain::parse(c.domain.as_deref().unwrap_or("mod2"))
}

pub fn fixture_system(name: &str) -> Result<SystemSpec> {
    let text = FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Malformed(format!("unknown fixture {name:?}")))?;
    serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))
}

fn budget_of(c: &RunConfig, window: usize) -> Result<SearchBudget> {
    let b = c.budget.as_ref().ok_or_else(|| missing("budget"))?;
    let budget = SearchBudget {
        support: b.support,
        coeff: b.coeff,
        stabilization: b.stabilization,
        nodes: None,
    };
    budget.validate(Some(window))?;
    Ok(budget)
}

pub fn execute(c: &RunConfig) -> Result<Outcome> {
    let target = c.target.as_deref().unwrap_or("");
    match (c.command.as_str(), target) {
        ("limn", _) => limn(c),
        ("construct", "mitchell") => construct_mitchell(c),
        ("construct", "family-z" | "family-z2-const" | "family-z2-tree") => construct_family(c),
        ("construct", "orderings") => construct_orderings(c),
        ("construct", "hausdorff") => construct_hausdorff(c),
        ("construct", "forks") => construct_forks(c),
        ("falsify", "mitchell") => falsify_mitchell(c),
        ("falsify", "square") => falsify_square(c),
        ("falsify", "forks") => falsify_forks(c),
        ("falsify", "hausdorff") => falsify_hausdorff(c),
        ("falsify", "search") => falsify_search(c),
        ("report", _) => report(),
        (cmd, t) => Err(Error::Malformed(format!("unknown command {cmd} {t}"))),
    }
}

fn limn(c: &RunConfig) -> Result<Outcome> {
    let raw: SystemSpec = serde_json::from_value(c.input.clone().ok_or_else(|| missing("system"))?)
        .map_err(|e| Error::Malformed(e.to_string()))?;
    let s: SystemRef = Arc::new(match &c.domain {
        Some(d) => raw.with_domain(CoeffDomain::parse(d)?)?,
        None => raw,
    });
    let n = c.level.ok_or_else(|| missing("level"))?;
    let r = derived_limit(&s, n)?;
    let witnesses_ok = r.witnesses.iter().all(|w| is_coherent(w).is_ok_and(|h| h.holds()));
    let mut checks = json!({ "witnessesCoherent": witnesses_ok });
    let mut passed = witnesses_ok;
    if vanishing_expectation(&s, n) {
        checks["directedVanishing"] = json!(r.invariants.is_trivial());
        passed &= r.invariants.is_trivial();
    }
    if s.domain() == CoeffDomain::Mod2 {
        match brute_force_limit_mod2(&s, n) {
            Ok(dim) => {
                checks["bruteForceDim"] = json!(dim);
                passed &= dim == r.invariants.rank;
            }
            Err(Error::Cap(_)) => checks["bruteForceDim"] = json!("skipped: above cap"),
            Err(e) => return Err(e),
        }
    }
    let torsion: Vec<String> = r.invariants.torsion.iter().map(|d| d.to_string()).collect();
    let summary = format!("lim^{n}: rank {} torsion [{}]", r.invariants.rank, torsion.join(","));
    let mut result = r.to_json("system");
    result["system"] = serde_json::to_value(&*s).map_err(|e| Error::Malformed(e.to_string()))?;
    Ok(Outcome::new(result, passed, summary, checks))
}

fn default_cofseq(size: usize) -> Vec<usize> {
    (0..size).step_by(2).collect()
}

fn construct_mitchell(c: &RunConfig) -> Result<Outcome> {
    let size = c.window.ok_or_else(|| missing("window"))?;
    let cofseq = c.cofseq.clone().unwrap_or_else(|| default_cofseq(size));
    let x = mitchell_base_cochain(size, &cofseq)?;
    let total = tuples(x.system().poset(), 2).len();
    let failing = coboundary(&x)?.entries().len();
    let summary = format!("{}/{total} triples pass", total - failing);
    let result = json!({
        "size": size,
        "cofseq": cofseq,
        "cochain": x.to_json("mitchell"),
    });
    Ok(Outcome::new(
        result,
        failing == 0,
        summary,
        json!({ "triples": total, "failing": failing }),
    ))
}

fn family_outcome(fam: &CoherentFamily, extra: Value) -> Outcome {
    let check: FamilyCheck = fam.verify();
    let summary = format!("{}/{} pair certs pass", check.passed, check.checked);
    let mut result = json!({ "family": fam.to_json() });
    if let (Value::Object(r), Value::Object(e)) = (&mut result, extra) {
        r.extend(e);
    }
    Outcome::new(
        result,
        check.ok(),
        summary,
        json!({ "checked": check.checked, "passed": check.passed, "failures": check.failures }),
    )
}

fn seed_bits(seed: u64, count: usize) -> Vec<bool> {
    (0..count).map(|i| seed.checked_shr(i as u32).unwrap_or(0) & 1 == 1).collect()
}

fn construct_family(c: &RunConfig) -> Result<Outcome> {
    let m = c.length.ok_or_else(|| missing("length"))?;
    let n = c.window.ok_or_else(|| missing("window"))?;
    let seed = c.seed.unwrap_or(0);
    match c.target.as_deref() {
        Some("family-z") => Ok(family_outcome(&coherent_family_z(&seeded_sets(m, n, seed))?, json!({}))),
        Some("family-z2-const") => {
            let h = seed_bits(seed, m);
            let fam = coherent_family_z2_constant(&h, &seeded_sets(m, n, seed))?;
            Ok(family_outcome(&fam, json!({ "h": h })))
        }
        _ => {
            let tree = BinaryTree::heap(n);
            let depth = (0..).find(|&d| tree.branch(&vec![false; d]).len() <= d).unwrap_or(0);
            if m > 1usize.checked_shl(depth as u32).unwrap_or(usize::MAX) {
                return Err(Error::Infeasible {
                    stage: "branch selection".into(),
                    reason: format!("a tree of depth {depth} has fewer than {m} branches"),
                });
            }
            let mask = seed_bits(seed, depth);
            let branches: Vec<Vec<usize>> = (0..m)
                .map(|i| {
                    let bits: Vec<bool> = (0..depth).map(|d| (i >> d & 1 == 1) ^ mask[d]).collect();
                    tree.branch(&bits)
                })
                .collect();
            let fam = coherent_family_z2_tree(&tree, &branches)?;
            Ok(family_outcome(&fam, json!({ "branches": branches })))
        }
    }
}

fn hausdorff_inputs(c: &RunConfig) -> Result<(Tower, TreeOrders)> {
    let m = c.length.ok_or_else(|| missing("length"))?;
    let n = c.window.ok_or_else(|| missing("window"))?;
    let tower = tower_generate(m, n, c.seed.unwrap_or(0))?;
    let orders = tree_orderings(&tower, &block_indices(m, 5))?;
    Ok((tower, orders))
}

fn order_checks(tower: &Tower, orders: &TreeOrders) -> (bool, Value) {
    let check = orders.verify(tower);
    (
        check.ok(),
        json!({
            "pairs": check.pairs,
            "violations": check.violations.len(),
            "unresolved": check.unresolved,
            "maxLevelUsed": check.max_level_used,
            "levels": orders.levels(),
        }),
    )
}

fn construct_orderings(c: &RunConfig) -> Result<Outcome> {
    let (tower, orders) = hausdorff_inputs(c)?;
    let (ok, checks) = order_checks(&tower, &orders);
    let summary = format!(
        "{} pairs, {} violations, {} unresolved",
        checks["pairs"],
        checks["violations"],
        checks["unresolved"].as_array().map_or(0, Vec::len)
    );
    let result = json!({
        "tower": tower.levels().iter().map(|l| l.to_bitstring()).collect::<Vec<_>>(),
        "orders": orders.to_json(),
    });
    Ok(Outcome::new(result, ok, summary, checks))
}

fn construct_hausdorff(c: &RunConfig) -> Result<Outcome> {
    let (tower, orders) = hausdorff_inputs(c)?;
    let (orders_ok, order_json) = order_checks(&tower, &orders);
    let h = hausdorff_family(&tower, &orders)?;
    let mut out = family_outcome(&h.family, json!({ "hausdorff": h.to_json() }));
    out.passed &= orders_ok;
    out.checks["orders"] = order_json;
    Ok(out)
}

fn fork_scenario(c: &RunConfig) -> Result<ForkScenario> {
    let twist = Twist::parse(c.twist.as_deref().ok_or_else(|| missing("twist"))?)?;
    square_fork_scenario(domain_of(c)?, twist, c.seed.unwrap_or(0))
}

fn construct_forks(c: &RunConfig) -> Result<Outcome> {
    let s = fork_scenario(c)?;
    let (f0, f1) = &s.forks;
    let coherent = [f0, f1].iter().all(|f| is_coherent(f).is_ok_and(|h| h.holds()));
    let small = s.z.system().clone();
    let agree = f0.transport(small.clone(), true)? == f1.transport(small.clone(), true)?;
    let lambda = f0.system().poset().len() - 1;
    let slice = d_lambda(&f1.sub(f0)?, lambda, DMode::Slice)? == s.z;
    let passed = coherent && agree && slice;
    let summary = format!(
        "forks coherent: {coherent}, agree on old window: {agree}, slice difference equals z: {slice}"
    );
    let result = json!({
        "x": s.x.to_json("square"),
        "w": s.w.to_json("square"),
        "z": s.z.to_json("square"),
        "fork0": f0.to_json("square-with-top"),
        "fork1": f1.to_json("square-with-top"),
    });
    Ok(Outcome::new(
        result,
        passed,
        summary,
        json!({ "coherent": coherent, "agree": agree, "slice": slice }),
    ))
}

fn falsify_mitchell(c: &RunConfig) -> Result<Outcome> {
    let size = c.window.ok_or_else(|| missing("window"))?;
    let cofseq = c.cofseq.clone().unwrap_or_else(|| default_cofseq(size));
    let r = forced_values_mitchell(size, &cofseq)?;
    let min = r.min_support.unwrap_or(0);
    let mut checks = json!({ "minSupport": min });
    let mut passed = true;
    if size <= 12 {
        let x = mitchell_base_cochain(size, &cofseq)?;
        let exhaustive = exhaustive_min_support(&x, 0)?;
        checks["exhaustiveMinSupport"] = json!(exhaustive);
        passed = exhaustive == Some(min);
    } else {
        checks["exhaustiveMinSupport"] = json!("skipped: window above 12");
    }
    let summary = format!("minimal y0 support {min}");
    let mut result = r.to_json("mitchell");
    result["size"] = json!(size);
    result["cofseq"] = json!(cofseq);
    Ok(Outcome::new(result, passed, summary, checks))
}

fn search_outcome(x: &Cochain, budget: &SearchBudget, system_ref: &str) -> Result<Outcome> {
    let r = search_trivializer(x, budget)?;
    let verified = match &r.found {
        Some(y) => coboundary(y)? == *x,
        None => true,
    };
    let summary = match &r.found {
        Some(y) => format!("found a trivializer of weight {} among {} candidates", y.weight(), r.searched),
        None => format!("none found among {} candidates", r.searched),
    };
    Ok(Outcome::new(
        r.to_json(system_ref),
        verified,
        summary,
        json!({ "found": r.found.is_some(), "reverified": verified }),
    ))
}

fn falsify_square(c: &RunConfig) -> Result<Outcome> {
    let s: SystemRef = Arc::new(fixture_system("square-without-top")?.with_domain(domain_of(c)?)?);
    let witness = derived_limit(&s, 1)?
        .witnesses
        .into_iter()
        .next()
        .ok_or_else(|| Error::Precondition("no lim¹ witness".into()))?;
    search_outcome(&witness, &budget_of(c, usize::MAX)?, "square-without-top")
}

fn falsify_search(c: &RunConfig) -> Result<Outcome> {
    let art = c.input.as_ref().ok_or_else(|| missing("input artifact"))?;
    let budget = budget_of(c, usize::MAX)?;
    let cfg: RunConfig =
        serde_json::from_value(art["config"].clone()).map_err(|e| Error::Malformed(format!("config: {e}")))?;
    match (cfg.command.as_str(), cfg.target.as_deref()) {
        ("limn", _) => {
            let s: SystemRef = Arc::new(
                serde_json::from_value(art["result"]["system"].clone()).map_err(|e| Error::Malformed(e.to_string()))?,
            );
            let w = art["result"]["witnesses"]
                .get(0)
                .ok_or_else(|| Error::Precondition("the artifact has no witness".into()))?;
            search_outcome(&Cochain::from_json(w, s)?, &budget, "system")
        }
        ("construct", Some("mitchell")) => {
            let size = art["result"]["size"].as_u64().ok_or_else(|| missing("size"))? as usize;
            let s: SystemRef = Arc::new(mitchell_system(0, size));
            search_outcome(&Cochain::from_json(&art["result"]["cochain"], s)?, &budget, "mitchell")
        }
        (cmd, t) => Err(Error::Malformed(format!("cannot search an artifact of {cmd} {t:?}"))),
    }
}

fn falsify_forks(c: &RunConfig) -> Result<Outcome> {
    let s = fork_scenario(c)?;
    let r = fork_obstruction_check(&s.forks, &s.z, &budget_of(c, usize::MAX)?)?;
    let converted_ok = match &r.converted {
        Some(t) => coboundary(t)? == s.z,
        None => true,
    };
    let summary = match &r.converted {
        Some(_) => "pair found; its slice difference trivializes z".to_string(),
        None => format!("no equal-restriction pair among {} candidates", r.report.searched),
    };
    let mut result = r.report.to_json("square");
    if let Some((u0, u1)) = &r.pair {
        result["pair"] = json!([u0.to_json("square-with-top"), u1.to_json("square-with-top")]);
    }
    Ok(Outcome::new(
        result,
        converted_ok,
        summary,
        json!({ "pairFound": r.pair.is_some(), "conversionVerified": converted_ok }),
    ))
}

fn falsify_hausdorff(c: &RunConfig) -> Result<Outcome> {
    let (tower, orders) = hausdorff_inputs(c)?;
    let budget = budget_of(c, tower.window())?;
    let h: HausdorffFamily = hausdorff_family(&tower, &orders)?;
    let m = uniform_successor_bound(&h);
    let b = adversarial_candidate(&h, c.seed.unwrap_or(0));
    let v = refute_uniform_trivializer(&h, &b, &vec![m; h.family.len()], &budget)?;
    let literal = match literal_candidate(&h) {
        Ok(_) => "accepted".to_string(),
        Err(e) => format!("rejected: {e}"),
    };
    let certs = h.family.verify();
    let summary = match &v {
        Some(v) => format!("violation at pair ({}, {}), level {}, point {}", v.lower, v.upper, v.level, v.point),
        None => "no violation within the window".to_string(),
    };
    let result = json!({
        "bound": m,
        "candidate": b.to_bitstring(),
        "violation": v.as_ref().map(|v| v.to_json()),
        "literalCandidate": literal,
    });
    Ok(Outcome::new(
        result,
        certs.ok(),
        summary,
        json!({ "pairCerts": format!("{}/{}", certs.passed, certs.checked), "refuted": v.is_some() }),
    ))
}

/// Re-runs the artifact's config and checks its stored data directly.
pub fn verify(artifact: &Value) -> Result<Outcome> {
    let cfg: RunConfig = serde_json::from_value(artifact.get("config").cloned().ok_or_else(|| missing("config"))?)
        .map_err(|e| Error::Malformed(format!("config: {e}")))?;
    let fresh = execute(&cfg)?.artifact(&cfg);
    let mut checks = serde_json::Map::new();
    let same_version = artifact["version"] == json!(VERSION);
    let reproduced = fresh["result"] == artifact["result"] && fresh["verification"] == artifact["verification"];
    checks.insert("version".into(), json!(same_version));
    checks.insert("reproduced".into(), json!(reproduced));
    let stored = &artifact["result"];
    let direct = match (cfg.command.as_str(), cfg.target.as_deref()) {
        ("construct", Some("family-z" | "family-z2-const" | "family-z2-tree")) => {
            Some(CoherentFamily::from_json(&stored["family"])?.verify().ok())
        }
        ("construct", Some("hausdorff")) => Some(CoherentFamily::from_json(&stored["family"])?.verify().ok()),
        ("construct", Some("mitchell")) => {
            let size = stored["size"].as_u64().ok_or_else(|| missing("size"))? as usize;
            let x = Cochain::from_json(&stored["cochain"], Arc::new(mitchell_system(0, size)))?;
            Some(is_coherent(&x)?.holds())
        }
        ("limn", _) => {
            let s: SystemRef =
                Arc::new(serde_json::from_value(stored["system"].clone()).map_err(|e| Error::Malformed(e.to_string()))?);
            let n = stored["n"].as_u64().ok_or_else(|| missing("n"))? as usize;
            let r = derived_limit(&s, n)?;
            Some(json!(r.invariants.rank) == stored["rank"])
        }
        _ => None,
    };
    if let Some(ok) = direct {
        checks.insert("directScan".into(), json!(ok));
    }
    let passed = same_version && reproduced && direct.unwrap_or(true) && artifact["verification"]["passed"] == json!(true);
    let summary = if passed { "artifact verifies" } else { "artifact does not verify" };
    Ok(Outcome::new(
        json!({ "command": cfg.command, "target": cfg.target }),
        passed,
        summary.to_string(),
        Value::Object(checks),
    ))
}

/// The standard experiments as one table.
fn report() -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut passed = true;
    let mut push = |experiment: String, out: Result<Outcome>| {
        let (ok, summary) = match out {
            Ok(o) => (o.passed, o.summary),
            Err(e) => (false, e.to_string()),
        };
        passed &= ok;
        rows.push(json!({ "experiment": experiment, "passed": ok, "outcome": summary }));
    };
    for (name, _) in FIXTURES {
        for domain in ["mod2", "integers"] {
            for n in 0..3 {
                let cfg = RunConfig {
                    command: "limn".into(),
                    level: Some(n),
                    domain: Some(domain.into()),
                    fixture: Some(name.into()),
                    input: Some(serde_json::to_value(fixture_system(name)?).expect("systems serialize")),
                    ..RunConfig::default()
                };
                push(format!("limn {name} {domain} n={n}"), execute(&cfg));
            }
        }
    }
    let base = |command: &str, target: &str| RunConfig {
        command: command.into(),
        target: Some(target.into()),
        ..RunConfig::default()
    };
    let full = |window: usize| BudgetConfig {
        support: 1,
        coeff: 1,
        stabilization: window / 2,
    };
    let mitchell = RunConfig { window: Some(16), ..base("construct", "mitchell") };
    push("construct mitchell B=16".into(), execute(&mitchell));
    for target in ["family-z", "family-z2-const", "family-z2-tree"] {
        let cfg = RunConfig { length: Some(3), window: Some(32), seed: Some(1), ..base("construct", target) };
        push(format!("construct {target} M=3 N=32"), execute(&cfg));
    }
    for target in ["orderings", "hausdorff"] {
        let cfg = RunConfig { length: Some(12), window: Some(64), seed: Some(0), ..base("construct", target) };
        push(format!("construct {target} M=12 N=64"), execute(&cfg));
    }
    let forced = RunConfig { window: Some(16), ..base("falsify", "mitchell") };
    push("falsify mitchell B=16".into(), execute(&forced));
    for domain in ["mod2", "integers"] {
        let cfg = RunConfig { domain: Some(domain.into()), budget: Some(full(8)), ..base("falsify", "square") };
        push(format!("falsify square {domain}"), execute(&cfg));
        for twist in ["witness", "trivial", "zero"] {
            let cfg = RunConfig {
                domain: Some(domain.into()),
                twist: Some(twist.into()),
                seed: Some(0),
                budget: Some(full(8)),
                ..base("falsify", "forks")
            };
            push(format!("falsify forks {domain} z={twist}"), execute(&cfg));
        }
    }
    let refute = RunConfig {
        length: Some(12),
        window: Some(64),
        seed: Some(0),
        budget: Some(full(64)),
        ..base("falsify", "hausdorff")
    };
    push("falsify hausdorff M=12 N=64".into(), execute(&refute));
    let total = rows.len();
    let good = rows.iter().filter(|r| r["passed"] == json!(true)).count();
    Ok(Outcome::new(
        json!({ "rows": rows }),
        passed,
        format!("{good}/{total} experiments pass"),
        json!({ "experiments": total, "passed": good }),
    ))
}
