//! Seeded sweeps over every check producer, aggregated into a report.
//!
//! Config schema (JSON, every field optional):
//!
//! ```json
//! {
//!   "ks": [2, 3],            // levels
//!   "dims": [1],             // lattice dimensions
//!   "sizes": [4, 8, 16],     // N, points per axis, spacing w = 1/N
//!   "reps": 100,             // instances per (check, k, d, N)
//!   "seed": 0,               // base seed
//!   "families": [],          // empty = all families
//!   "checks": [],            // empty = all checks
//!   "reps_per_check": {"eq4.2-decompose": 10},
//!   "heavy_max_size": 8,     // N cap for optimizer-backed checks
//!   "failure_dir": null      // where failing instances are written as GHK1
//! }
//! ```
//!
//! An empty config has no levels and yields an empty report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::antiuniform::{corollary5, decompose, floor_gap, pairing_gap, witness_gap, AscentOptions};
use crate::check::{CheckParams, CheckRecord};
use crate::cube::FunctionTuple;
use crate::dual::{
    continuity_modulus, duality_identity_gap, fourier_bound_gap, homogeneity_gap, lemma1_gap, product_bound_gap,
    product_identity_gap,
};
use crate::error::{GhkError, Result};
use crate::exponents::exponent_triple;
use crate::families::{random_function, random_normalized, Family};
use crate::gowers::{csg_gap, lp_bound_gap, oracle_gap, spectral_gap};
use crate::grid::GridFunction;
use crate::io::write_grid;

/// Instances per parameter point for optimizer-backed checks unless overridden.
pub const HEAVY_REPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub ks: Vec<u32>,
    pub dims: Vec<usize>,
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub families: Vec<Family>,
    pub checks: Vec<String>,
    pub reps_per_check: BTreeMap<String, usize>,
    pub heavy_max_size: usize,
    pub failure_dir: Option<PathBuf>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            ks: Vec::new(),
            dims: Vec::new(),
            sizes: Vec::new(),
            reps: 0,
            seed: 0,
            families: Vec::new(),
            checks: Vec::new(),
            reps_per_check: BTreeMap::new(),
            heavy_max_size: 8,
            failure_dir: None,
        }
    }
}

impl SuiteConfig {
    /// `k ∈ {2,3}`, `d = 1`, `N ∈ {4, 8, 16}`, 100 instances per point.
    pub fn desk() -> Self {
        SuiteConfig { ks: vec![2, 3], dims: vec![1], sizes: vec![4, 8, 16], reps: 100, ..Default::default() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Every check the suite knows, in run order.
pub const CHECKS: [&str; 18] = [
    "eq1.1-spectral",
    "eq1.2-lp-bound",
    "eq1.3-oracle",
    "eq1.5-csg",
    "eq1.5-csg-equality",
    "eq1.6-homogeneity",
    "dual-pairing",
    "eq2.1-lemma1",
    "eq2.3-floor",
    "eq3.1-pairing",
    "eq3.2-witness",
    "eq4.2-decompose",
    "eq4.9-corollary",
    "eq5.2-continuity",
    "eq5.4-product-identity",
    "eq5.6-product-bound",
    "eq5.7-fourier",
    "eq3.1-lemma2-hull",
];

fn is_heavy(check: &str) -> bool {
    matches!(check, "eq2.3-floor" | "eq3.2-witness" | "eq4.2-decompose" | "eq4.9-corollary")
}

fn needs_nonnegative(check: &str) -> bool {
    matches!(check, "eq4.2-decompose" | "eq4.9-corollary")
}

fn applies(check: &str, k: u32, n: usize, heavy_max: usize) -> bool {
    match check {
        "eq1.1-spectral" => k == 2,
        "eq5.7-fourier" => k >= 3,
        "eq5.4-product-identity" => n <= 4,
        c if is_heavy(c) => n <= heavy_max,
        _ => true,
    }
}

/// One reproducible instance: everything needed to regenerate its inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub check: String,
    pub k: u32,
    pub d: usize,
    pub n: usize,
    pub family: Family,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn replay_command(&self) -> String {
        format!(
            "ghk verify --replay {} --k {} --dim {} --n {} --family {} --seed {}",
            self.check, self.k, self.d, self.n, self.family, self.seed
        )
    }

    fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    fn sub_seed(&self, j: u64) -> u64 {
        mix(self.seed ^ j.wrapping_mul(0xA24B_AED4_963E_E407))
    }

    fn function(&self, j: u64) -> Result<GridFunction> {
        random_function(self.family, self.d, self.n, self.spacing(), self.sub_seed(j))
    }

    fn functions(&self, count: usize, offset: u64) -> Result<Vec<GridFunction>> {
        (0..count as u64).map(|j| self.function(offset + j)).collect()
    }

    /// The grids an evaluation of this instance consumes.
    pub fn inputs(&self) -> Result<Vec<GridFunction>> {
        let cube = 1usize << self.k;
        match self.check.as_str() {
            "eq1.5-csg" => self.functions(cube, 0),
            "eq2.1-lemma1" | "eq5.2-continuity" | "eq5.7-fourier" => self.functions(cube - 1, 0),
            "eq5.4-product-identity" | "eq5.6-product-bound" => self.functions(2 * (cube - 1), 0),
            "eq3.1-pairing" | "eq3.1-lemma2-hull" => self.functions(2, 0),
            "eq4.9-corollary" => Ok(vec![random_normalized(self.family, self.d, self.n, self.spacing(), self.sub_seed(0), self.k)?]),
            _ => self.functions(1, 0),
        }
    }

    /// Evaluates the instance from its regenerated inputs.
    pub fn evaluate(&self) -> Result<Vec<CheckRecord>> {
        let inputs = self.inputs()?;
        let k = self.k;
        let opts = AscentOptions { seed: self.seed, ..Default::default() };
        let punctured = |fs: &[GridFunction]| FunctionTuple::punctured(k, fs.to_vec());
        let f = &inputs[0];
        let mut rng = ChaCha8Rng::seed_from_u64(self.sub_seed(u64::MAX));
        let records = match self.check.as_str() {
            "eq1.1-spectral" => vec![spectral_gap(f)?],
            "eq1.2-lp-bound" => vec![lp_bound_gap(f, k)?],
            "eq1.3-oracle" => vec![oracle_gap(f, k)?],
            "eq1.5-csg" => vec![csg_gap(&FunctionTuple::full(k, inputs.clone())?)?],
            "eq1.5-csg-equality" => {
                let rec = csg_gap(&FunctionTuple::all_equal(k, f, false)?)?;
                let equal = rec.ratio.is_some_and(|r| (r - 1.0).abs() <= 1e-9);
                let pass = rec.pass.unwrap_or(true) && equal;
                let mut rec = rec.gate(true, pass);
                rec.name = "eq1.5-csg-equality".into();
                vec![rec]
            }
            "eq1.6-homogeneity" => {
                let t = [-2.0, 0.5, 3.0][rng.gen_range(0..3)];
                vec![homogeneity_gap(f, k, t)?]
            }
            "dual-pairing" => vec![duality_identity_gap(f, k)?],
            "eq2.1-lemma1" => vec![lemma1_gap(&punctured(&inputs)?)?],
            "eq2.3-floor" => vec![floor_gap(f, k, &opts)?],
            "eq3.1-pairing" => vec![pairing_gap(&inputs[0], &inputs[1], k)?],
            "eq3.1-lemma2-hull" => vec![unit_ball_gap(&inputs[0], &inputs[1], k)?],
            "eq3.2-witness" => vec![witness_gap(f, k, &opts)?],
            "eq4.2-decompose" => {
                let delta = [0.5, 0.25][(self.seed % 2) as usize];
                decomposition_records(f, k, delta, &opts)?
            }
            "eq4.9-corollary" => corollary_records(f, k, &opts)?,
            "eq5.2-continuity" => {
                let v: Vec<i64> = loop {
                    let v: Vec<i64> = (0..self.d).map(|_| rng.gen_range(-2..=2)).collect();
                    if v.iter().any(|&c| c != 0) {
                        break v;
                    }
                };
                vec![continuity_modulus(&punctured(&inputs)?, &v)?]
            }
            "eq5.4-product-identity" | "eq5.6-product-bound" => {
                let (a, b) = inputs.split_at(inputs.len() / 2);
                let (t1, t2) = (punctured(a)?, punctured(b)?);
                if self.check == "eq5.4-product-identity" {
                    vec![product_identity_gap(&t1, &t2)?]
                } else {
                    vec![product_bound_gap(&t1, &t2)?]
                }
            }
            "eq5.7-fourier" => vec![fourier_bound_gap(&punctured(&inputs)?)?],
            other => return Err(GhkError::InvalidArgument(format!("unknown check '{other}'"))),
        };
        let family = self.family.to_string();
        Ok(records
            .into_iter()
            .map(|mut r| {
                r.seed = self.seed;
                r.params = CheckParams { k, d: self.d, n: self.n, w: self.spacing(), family: family.clone() };
                r
            })
            .collect())
    }
}

/// Pairings `⟨D_k F, h⟩` with `‖F‖_{U(k)} = ‖h‖_{U(k)} = 1` stay below 1.
fn unit_ball_gap(f: &GridFunction, h: &GridFunction, k: u32) -> Result<CheckRecord> {
    let two_k = (1u64 << k) as f64;
    let unit = |g: &GridFunction| -> Result<GridFunction> {
        let u = crate::gowers::gowers_power(g, k)?.max(0.0).powf(1.0 / two_k);
        if u == 0.0 {
            return Err(GhkError::ZeroFunction("unit-ball sample"));
        }
        Ok(g.scale(1.0 / u))
    };
    let lhs = crate::dual::dual_rec(&unit(f)?, k)?.inner(&unit(h)?)?;
    let mut rec = CheckRecord::new("eq3.1-lemma2-hull", CheckParams::of_grid(k, f), lhs, 1.0);
    rec = rec.gate(true, lhs <= 1.0 + 1e-9);
    Ok(rec)
}

fn decomposition_records(g: &GridFunction, k: u32, delta: f64, opts: &AscentOptions) -> Result<Vec<CheckRecord>> {
    let res = decompose(g, k, delta, opts)?;
    let mut out = res.bound_records();
    let params = CheckParams::of_grid(k, g);
    // mismatches are tolerated only where no float residual can reproduce g
    let mismatches = res.reconstruction_mismatches();
    let exact = mismatches <= res.unreachable_cells;
    out.push(
        CheckRecord::new("eq4.1-exact", params.clone(), mismatches as f64, res.unreachable_cells as f64).gate(true, exact),
    );
    let tail = &res.residual_history[res.residual_history.len().saturating_sub(11)..];
    let monotone = tail.windows(2).all(|w| w[1] <= w[0]);
    out.push(
        CheckRecord::new("eq4.2-residual-monotone", params, res.stationarity_residual, tail[0]).gate(true, monotone),
    );
    Ok(out)
}

fn corollary_records(phi: &GridFunction, k: u32, opts: &AscentOptions) -> Result<Vec<CheckRecord>> {
    let res = corollary5(phi, k, opts)?;
    let params = CheckParams::of_grid(k, phi);
    let floor = (res.theta / 2.0).powi(1 << k) * (1.0 - 0.05);
    Ok(vec![
        CheckRecord::new("eq4.9-f-p", params.clone(), res.f_p, 1.0).gate(true, res.f_p <= 1.0 + 1e-6),
        CheckRecord::new("eq4.9-pairing", params, floor, res.pairing).gate(true, res.pairing > floor),
    ])
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// All instances a config expands to, in deterministic order.
pub fn instances(config: &SuiteConfig) -> Result<Vec<InstanceSpec>> {
    let checks: Vec<String> = if config.checks.is_empty() {
        CHECKS.iter().map(|c| c.to_string()).collect()
    } else {
        for c in &config.checks {
            if !CHECKS.contains(&c.as_str()) {
                return Err(GhkError::InvalidArgument(format!("unknown check '{c}'")));
            }
        }
        config.checks.clone()
    };
    for &k in &config.ks {
        exponent_triple(k)?;
    }
    let families: Vec<Family> = if config.families.is_empty() { Family::ALL.to_vec() } else { config.families.clone() };
    let mut out = Vec::new();
    for check in &checks {
        let fams: Vec<Family> = if needs_nonnegative(check) {
            families.iter().copied().filter(|f| f.is_nonnegative()).collect()
        } else {
            families.clone()
        };
        if fams.is_empty() {
            continue;
        }
        let reps = config
            .reps_per_check
            .get(check)
            .copied()
            .unwrap_or(if is_heavy(check) { config.reps.min(HEAVY_REPS) } else { config.reps });
        for &k in &config.ks {
            for &d in &config.dims {
                for &n in &config.sizes {
                    if !applies(check, k, n, config.heavy_max_size) {
                        continue;
                    }
                    for rep in 0..reps {
                        let key = name_hash(check) ^ (u64::from(k) << 56) ^ ((d as u64) << 48) ^ ((n as u64) << 32) ^ rep as u64;
                        out.push(InstanceSpec {
                            check: check.clone(),
                            k,
                            d,
                            n,
                            family: fams[rep % fams.len()],
                            seed: mix(config.seed ^ mix(key)),
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NameCounts {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub ungated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub version: String,
    pub config_hash: String,
    pub records: Vec<CheckRecord>,
    pub counts: BTreeMap<String, NameCounts>,
    pub worst_ratio: BTreeMap<String, f64>,
    /// Replay command lines for failing records.
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn assemble(config_hash: String, mut records: Vec<(CheckRecord, String)>) -> Self {
        records.sort_by(|(a, _), (b, _)| {
            (a.name.as_str(), a.seed, a.params.k, a.params.d, a.params.n)
                .cmp(&(b.name.as_str(), b.seed, b.params.k, b.params.d, b.params.n))
        });
        let mut counts: BTreeMap<String, NameCounts> = BTreeMap::new();
        let mut worst: BTreeMap<String, f64> = BTreeMap::new();
        let mut failures = Vec::new();
        for (r, replay) in &records {
            let c = counts.entry(r.name.clone()).or_default();
            c.total += 1;
            match r.pass {
                Some(true) => c.passed += 1,
                Some(false) => {
                    c.failed += 1;
                    failures.push(replay.clone());
                }
                None => c.ungated += 1,
            }
            if let Some(ratio) = r.ratio.filter(|x| x.is_finite()) {
                let e = worst.entry(r.name.clone()).or_insert(ratio);
                *e = e.max(ratio);
            }
        }
        SuiteReport {
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash,
            records: records.into_iter().map(|(r, _)| r).collect(),
            counts,
            worst_ratio: worst,
            failures,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.counts.values().all(|c| c.failed == 0)
    }

    /// Pretty JSON; timings zeroed unless `timing` is set, so runs compare byte for byte.
    pub fn to_json(&self, timing: bool) -> String {
        let mut copy = self.clone();
        if !timing {
            for r in &mut copy.records {
                r.runtime_ms = 0.0;
            }
        }
        serde_json::to_string_pretty(&copy).expect("report serializes")
    }
}

fn write_artifacts(dir: &Path, spec: &InstanceSpec) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| GhkError::Io { path: dir.to_path_buf(), source: e })?;
    let stem = format!("{}-k{}-d{}-n{}-{}", spec.check, spec.k, spec.d, spec.n, spec.seed);
    for (j, g) in spec.inputs()?.iter().enumerate() {
        write_grid(&dir.join(format!("{stem}-{j}.ghk")), g)?;
    }
    let path = dir.join(format!("{stem}.replay"));
    fs::write(&path, spec.replay_command() + "\n").map_err(|e| GhkError::Io { path: path.clone(), source: e })
}

/// Runs every instance of `config`. Any evaluation error aborts the run after
/// the offending instance is written out (when a failure directory is set).
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let specs = instances(config)?;
    let results: Vec<Result<Vec<CheckRecord>>> = specs
        .par_iter()
        .map(|spec| {
            let start = Instant::now();
            let mut recs = spec.evaluate()?;
            let ms = start.elapsed().as_secs_f64() * 1e3 / recs.len().max(1) as f64;
            for r in &mut recs {
                r.runtime_ms = ms;
            }
            Ok(recs)
        })
        .collect();
    let mut records = Vec::new();
    for (spec, res) in specs.iter().zip(results) {
        match res {
            Ok(recs) => {
                if let Some(dir) = &config.failure_dir {
                    if recs.iter().any(CheckRecord::failed) {
                        write_artifacts(dir, spec)?;
                    }
                }
                records.extend(recs.into_iter().map(|r| (r, spec.replay_command())));
            }
            Err(e) => {
                if let Some(dir) = &config.failure_dir {
                    write_artifacts(dir, spec)?;
                }
                return Err(GhkError::InvalidArgument(format!("{} aborted the suite: {e}", spec.replay_command())));
            }
        }
    }
    Ok(SuiteReport::assemble(config.hash(), records))
}

/// Re-evaluates one instance; bit-identical to its suite run.
pub fn replay(spec: &InstanceSpec) -> Result<Vec<CheckRecord>> {
    spec.evaluate()
}
