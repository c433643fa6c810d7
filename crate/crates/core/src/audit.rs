//! Empirical checks of the scheme's claims: counting structure, exact
//! retrieval, and T-privacy of the query transcripts.

use std::collections::HashMap;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Fq, PrimeField};
use crate::matrix::MatrixFq;
use crate::mds::MdsCode;
use crate::par::Exec;
use crate::params::{binomial, capacity, Rate, SchemeParams};
use crate::locator::LocatorMatrix;
use crate::plan::{build_plan, build_plan_with_locators, make_locators, AnswerPlan, TypeSet};
use crate::protocol::{
    client_query_faulty, client_query_with_secrets_faulty, reconstruct, server_answer, Query, RecordSet,
};
use crate::testing::Fault;
use crate::wire::encode_query;

/// Largest number of secret tuples the exact privacy audit enumerates.
pub const EXACT_TUPLE_LIMIT: u128 = 1_000_000;
/// Largest number of rounds the exhaustive correctness audit runs.
pub const EXHAUSTIVE_ROUND_LIMIT: u128 = 10_000_000;
/// Histogram size of the sampled privacy audit.
pub const DEFAULT_BUCKETS: usize = 1 << 16;
/// Smallest sample count the sampled privacy audit accepts.
pub const MIN_SAMPLES: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Metric {
    /// Every compared quantity matched exactly (or not).
    Exact { matched: bool },
    /// Largest exact total-variation distance between two distributions.
    ExactDistance { distance: Rate },
    /// Largest estimated total-variation distance over hashed buckets.
    Estimated {
        distance: f64,
        threshold: f64,
        samples: usize,
        buckets: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub check: String,
    pub params: String,
    pub pass: bool,
    pub metric: Metric,
    /// Seed reproducing the run; `None` for deterministic checks.
    pub seed: Option<u64>,
    pub details: Vec<String>,
}

fn describe(p: &SchemeParams) -> String {
    format!(
        "M={} N={} T={} q={}",
        p.records(),
        p.servers(),
        p.collusion(),
        p.field().modulus()
    )
}

impl AuditReport {
    fn new(check: &str, p: &SchemeParams, pass: bool, metric: Metric, seed: Option<u64>, details: Vec<String>) -> Self {
        Self {
            check: check.into(),
            params: describe(p),
            pass,
            metric,
            seed,
            details,
        }
    }

    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "pass"
        } else {
            "fail"
        }
    }

    /// One `key=value` line per field.
    pub fn to_lines(&self) -> String {
        let mut lines = vec![
            format!("check={}", self.check),
            format!("params={}", self.params),
            format!("verdict={}", self.verdict()),
        ];
        match &self.metric {
            Metric::Exact { matched } => lines.push(format!("exact_match={matched}")),
            Metric::ExactDistance { distance } => lines.push(format!("distance={distance}")),
            Metric::Estimated {
                distance,
                threshold,
                samples,
                buckets,
            } => {
                lines.push(format!("distance={distance:.6}"));
                lines.push(format!("threshold={threshold:.6}"));
                lines.push(format!("samples={samples}"));
                lines.push(format!("buckets={buckets}"));
                lines.push("threshold_kind=heuristic noise floor 3*sqrt(buckets/samples)".into());
            }
        }
        lines.push(match self.seed {
            Some(s) => format!("seed={s}"),
            None => "seed=deterministic".into(),
        });
        for d in &self.details {
            lines.push(format!("detail={d}"));
        }
        lines.join("\n") + "\n"
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.check, self.params, self.verdict().to_uppercase())?;
        match &self.metric {
            Metric::Exact { .. } => {}
            Metric::ExactDistance { distance } => write!(f, " (distance {distance})")?,
            Metric::Estimated {
                distance, threshold, ..
            } => write!(f, " (distance {distance:.4}, threshold {threshold:.4})")?,
        }
        for d in &self.details {
            write!(f, "\n  {d}")?;
        }
        Ok(())
    }
}

/// Plan, locator and counting checks for every `θ`.
pub fn audit_structure(p: &SchemeParams) -> AuditReport {
    audit_structure_faulty(p, None)
}

#[doc(hidden)]
pub fn audit_structure_faulty(p: &SchemeParams, fault: Option<Fault>) -> AuditReport {
    let mut problems = p.violations();
    let mut locators = match make_locators(p) {
        Ok(l) => l,
        Err(e) => {
            problems.push(format!("locators: {e}"));
            Vec::new()
        }
    };
    if let Some(Fault::LocatorBitFlip { size, row, col }) = fault {
        if let Some(l) = locators.get_mut(size.wrapping_sub(1)) {
            let mut bits = l.bits().clone();
            if row < bits.rows() && col < bits.cols() {
                bits.set(row, col, !bits.get(row, col));
            }
            *l = LocatorMatrix::from_bits(size, bits);
        }
    }
    for l in &locators {
        problems.extend(l.violations(p));
    }
    let mut reference: Option<Vec<Vec<TypeSet>>> = None;
    if problems.is_empty() {
        for theta in 0..p.records() {
            let plan = match build_plan_with_locators(p, theta, locators.clone()) {
                Ok(plan) => plan,
                Err(e) => {
                    problems.push(format!("theta={}: {e}", theta + 1));
                    continue;
                }
            };
            problems.extend(plan.violations().into_iter().map(|v| format!("theta={}: {v}", theta + 1)));
            let types: Vec<Vec<TypeSet>> = (0..p.servers())
                .map(|j| plan.server_slots(j).iter().map(|s| s.full_type).collect())
                .collect();
            match &reference {
                None => reference = Some(types),
                Some(r) if *r != types => {
                    problems.push(format!("theta={}: slot type sequence differs from theta=1", theta + 1))
                }
                Some(_) => {}
            }
            let total = plan.total_slots();
            if total != p.download() {
                problems.push(format!("theta={}: plan downloads {total} symbols, expected D = {}", theta + 1, p.download()));
            } else if capacity(p.records(), p.servers(), p.collusion()).ok()
                != Some(Rate::new(p.sub_packetization() as u128, total as u128))
            {
                problems.push(format!("rate L/D = {}/{total} differs from capacity", p.sub_packetization()));
            }
        }
    }
    let pass = problems.is_empty();
    let mut details = problems;
    if pass {
        let counts: Vec<String> = (0..p.servers()).map(|j| p.answers_for_server(j).to_string()).collect();
        details.push(format!(
            "D={} per-server={} L={} rate={}",
            p.download(),
            counts.join(","),
            p.sub_packetization(),
            p.rate()
        ));
    }
    AuditReport::new("structure", p, pass, Metric::Exact { matched: pass }, None, details)
}

fn code_for(p: &SchemeParams) -> Result<MdsCode> {
    MdsCode::new(p.servers(), p.collusion(), p.field())
}

fn plans(p: &SchemeParams) -> Result<Vec<Arc<AnswerPlan>>> {
    (0..p.records()).map(|theta| build_plan(p, theta).map(Arc::new)).collect()
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Outcome of a single retrieval with fixed inputs.
fn retrieve_once(
    plan: &Arc<AnswerPlan>,
    code: &MdsCode,
    db: &RecordSet,
    query: (crate::protocol::ClientState, Vec<Query>),
    fault: Option<Fault>,
) -> Result<bool> {
    let (state, queries) = query;
    let mut answers = queries
        .iter()
        .map(|q| server_answer(q, db))
        .collect::<Result<Vec<_>>>()?;
    if fault == Some(Fault::TamperAnswer) {
        let field = db.field();
        let mut values = answers[0].values().to_vec();
        if let Some(v) = values.first_mut() {
            *v = field.add(*v, Fq::ONE);
        }
        answers[0] = crate::protocol::Answer::new(values);
    }
    let recovered = reconstruct(&state, &answers, code)?;
    Ok(recovered == db.record(plan.theta()))
}

/// `trials` rounds with random records and a random `θ` each; trial `i`
/// draws from stream `i` of the ChaCha generator seeded with `seed`.
pub fn audit_correctness(p: &SchemeParams, trials: usize, seed: u64, exec: Exec) -> Result<AuditReport> {
    audit_correctness_faulty(p, trials, seed, exec, None)
}

#[doc(hidden)]
pub fn audit_correctness_faulty(
    p: &SchemeParams,
    trials: usize,
    seed: u64,
    exec: Exec,
    fault: Option<Fault>,
) -> Result<AuditReport> {
    if trials == 0 {
        return Err(Error::Params("at least one trial is required".into()));
    }
    let code = code_for(p)?;
    let plans = plans(p)?;
    let outcomes = exec.map(trials, |i| -> Result<bool> {
        let mut rng = trial_rng(seed, i as u64);
        let theta = rng.random_range(0..p.records());
        let db = RecordSet::random(p.field(), p.records(), p.sub_packetization(), &mut rng);
        let plan = &plans[theta];
        let query = client_query_faulty(plan, &code, &mut rng, None)?;
        retrieve_once(plan, &code, &db, query, fault)
    });
    let mut failures = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        if !o? {
            failures.push(i);
        }
    }
    let pass = failures.is_empty();
    let mut details = vec![format!("trials={trials} failures={}", failures.len())];
    if let Some(first) = failures.first() {
        details.push(format!("first failing trial={first} (stream {first} of seed {seed})"));
    }
    Ok(AuditReport::new("correctness", p, pass, Metric::Exact { matched: pass }, Some(seed), details))
}

/// Order of `GL(l, q)`.
pub fn general_linear_order(l: usize, q: u64) -> Option<u128> {
    let ql = (q as u128).checked_pow(l as u32)?;
    (0..l as u32).try_fold(1u128, |acc, i| acc.checked_mul(ql - (q as u128).checked_pow(i)?))
}

/// Every invertible `l x l` matrix over `field`, in lexicographic order of
/// the row-major entries.
pub fn general_linear(field: PrimeField, l: usize) -> Result<Vec<MatrixFq>> {
    let q = field.modulus() as u128;
    let all = q
        .checked_pow((l * l) as u32)
        .filter(|&n| n <= EXHAUSTIVE_ROUND_LIMIT)
        .ok_or_else(|| Error::Infeasible(format!("{l}x{l} matrices over F_{q} are too many to list")))?;
    let mut out = Vec::new();
    for mut idx in 0..all {
        let mut data = vec![Fq::ZERO; l * l];
        for v in data.iter_mut().rev() {
            *v = field.elem((idx % q) as u64);
            idx /= q;
        }
        let m = MatrixFq::from_row_major(field, l, l, data)?;
        if m.is_invertible() {
            out.push(m);
        }
    }
    Ok(out)
}

/// Decodes `index` as a tuple of `m` entries of `group` (mixed radix).
fn tuple(group: &[MatrixFq], m: usize, mut index: usize) -> Vec<MatrixFq> {
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        out.push(group[index % group.len()].clone());
        index /= group.len();
    }
    out
}

/// Every database, every `θ` and every secret tuple.
pub fn audit_correctness_exhaustive(p: &SchemeParams, exec: Exec) -> Result<AuditReport> {
    let (m, l, q) = (p.records(), p.sub_packetization(), p.field().modulus() as u128);
    let order = general_linear_order(l, q as u64).unwrap_or(u128::MAX);
    let tuples = order.checked_pow(m as u32);
    let dbs = q.checked_pow((m * l) as u32);
    let rounds = tuples
        .zip(dbs)
        .and_then(|(t, d)| t.checked_mul(d)?.checked_mul(m as u128))
        .filter(|&r| r <= EXHAUSTIVE_ROUND_LIMIT)
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "more than {EXHAUSTIVE_ROUND_LIMIT} rounds for {}; use sampled trials",
                describe(p)
            ))
        })?;
    let (tuples, dbs) = (tuples.unwrap() as usize, dbs.unwrap() as usize);
    let code = code_for(p)?;
    let plans = plans(p)?;
    let group = general_linear(p.field(), l)?;
    let field = p.field();
    let per_theta = dbs * tuples;
    let failures = exec.fold(
        m * per_theta,
        || Ok(Vec::new()),
        |acc: Result<Vec<usize>>, i| {
            let mut acc = acc?;
            let (theta, rest) = (i / per_theta, i % per_theta);
            let (mut db_index, t) = (rest / tuples, rest % tuples);
            let mut data = vec![Fq::ZERO; m * l];
            for v in data.iter_mut() {
                *v = field.elem((db_index % q as usize) as u64);
                db_index /= q as usize;
            }
            let db = RecordSet::from_flat(field, m, l, data)?;
            let secrets = tuple(&group, m, t);
            let query = client_query_with_secrets_faulty(&plans[theta], &code, &secrets, None)?;
            if !retrieve_once(&plans[theta], &code, &db, query, None)? {
                acc.push(i);
            }
            Ok(acc)
        },
        |a, b| {
            let mut a = a?;
            a.extend(b?);
            Ok(a)
        },
    )?;
    let pass = failures.is_empty();
    let details = vec![format!(
        "databases={dbs} thetas={m} secret_tuples={tuples} rounds={rounds} failures={}",
        failures.len()
    )];
    Ok(AuditReport::new("correctness-exhaustive", p, pass, Metric::Exact { matched: pass }, None, details))
}

/// Nonempty server subsets of size at most `max`, ascending by size.
fn coalitions(servers: usize, min: usize, max: usize) -> Vec<Vec<usize>> {
    (min..=max).flat_map(|s| (0..servers).combinations(s)).collect()
}

type Histogram = HashMap<Vec<u8>, u64>;

fn exact_distance(a: &Histogram, b: &Histogram) -> Rate {
    let (na, nb): (u64, u64) = (a.values().sum(), b.values().sum());
    // |x/na - y/nb| summed, as an exact fraction over na * nb
    let mut num: u128 = 0;
    for key in a.keys().chain(b.keys().filter(|k| !a.contains_key(*k))) {
        let x = *a.get(key).unwrap_or(&0) as i128 * nb as i128;
        let y = *b.get(key).unwrap_or(&0) as i128 * na as i128;
        num += (x - y).unsigned_abs();
    }
    Rate::new(num, 2 * na as u128 * nb as u128)
}

/// Exact comparison of the joint query distribution seen by every coalition
/// of at most `T` servers, over all secret tuples in `GL(L, q)^M`.
pub fn audit_privacy_exact(p: &SchemeParams, exec: Exec) -> Result<AuditReport> {
    audit_privacy_exact_faulty(p, exec, None)
}

#[doc(hidden)]
pub fn audit_privacy_exact_faulty(p: &SchemeParams, exec: Exec, fault: Option<Fault>) -> Result<AuditReport> {
    let (m, l) = (p.records(), p.sub_packetization());
    let tuples = general_linear_order(l, p.field().modulus() as u64)
        .and_then(|o| o.checked_pow(m as u32))
        .filter(|&n| n <= EXACT_TUPLE_LIMIT)
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "|GL({l}, {})|^{m} secret tuples exceed {EXACT_TUPLE_LIMIT}; use privacy-sampled instead",
                p.field().modulus()
            ))
        })? as usize;
    let code = code_for(p)?;
    let plans = plans(p)?;
    let group = general_linear(p.field(), l)?;
    let coalitions = coalitions(p.servers(), 1, p.collusion());
    let mut per_theta: Vec<Vec<Histogram>> = Vec::with_capacity(m);
    for plan in &plans {
        let hist = exec.fold(
            tuples,
            || Ok(vec![Histogram::new(); coalitions.len()]),
            |acc: Result<Vec<Histogram>>, t| {
                let mut acc = acc?;
                let secrets = tuple(&group, m, t);
                let (_, queries) = client_query_with_secrets_faulty(plan, &code, &secrets, fault)?;
                let bytes: Vec<Vec<u8>> = queries.iter().map(encode_query).collect();
                for (h, gamma) in acc.iter_mut().zip(&coalitions) {
                    let key: Vec<u8> = gamma.iter().flat_map(|&j| bytes[j].iter().copied()).collect();
                    *h.entry(key).or_default() += 1;
                }
                Ok(acc)
            },
            |a, b| {
                let (mut a, b) = (a?, b?);
                for (x, y) in a.iter_mut().zip(b) {
                    for (k, v) in y {
                        *x.entry(k).or_default() += v;
                    }
                }
                Ok(a)
            },
        )?;
        per_theta.push(hist);
    }
    let mut worst = Rate::new(0, 1);
    let mut details = Vec::new();
    for (a, b) in (0..m).tuple_combinations() {
        for (g, gamma) in coalitions.iter().enumerate() {
            let d = exact_distance(&per_theta[a][g], &per_theta[b][g]);
            if d > Rate::new(0, 1) {
                details.push(format!(
                    "servers {:?}: theta={} vs theta={} differ, distance {d}",
                    gamma.iter().map(|j| j + 1).collect::<Vec<_>>(),
                    a + 1,
                    b + 1
                ));
            }
            worst = worst.max(d);
        }
    }
    let pass = worst == Rate::new(0, 1);
    details.insert(
        0,
        format!("secret_tuples={tuples} coalitions={} max_distance={worst}", coalitions.len()),
    );
    Ok(AuditReport::new(
        "privacy-exact",
        p,
        pass,
        Metric::ExactDistance { distance: worst },
        None,
        details,
    ))
}

/// Settings of the sampled privacy audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sampling {
    /// Transcripts drawn per `θ`.
    pub samples: usize,
    pub buckets: usize,
    pub seed: u64,
}

impl Sampling {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            buckets: DEFAULT_BUCKETS,
            seed,
        }
    }

    /// `3 sqrt(buckets / samples)`.
    pub fn threshold(&self) -> f64 {
        3.0 * (self.buckets as f64 / self.samples as f64).sqrt()
    }
}

/// Canonical form of the transcript seen by `gamma`.
///
/// For each record the coefficient blocks of every slot in `gamma` are
/// stacked as the columns of an `L x R` matrix and reduced to row echelon
/// form. The secrets act on these columns by left multiplication with an
/// invertible matrix, which leaves the echelon form unchanged, so two
/// transcripts share a canonical form exactly when one maps to the other.
pub fn canonical_transcript(queries: &[Query], gamma: &[usize]) -> Vec<u8> {
    let first = &queries[gamma[0]];
    let (field, m, l) = (first.field(), first.records(), first.record_len());
    let cols: usize = gamma.iter().map(|&j| queries[j].slot_count()).sum();
    let mut out = Vec::with_capacity(m * l * cols * 4 + 8);
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    let mut data = vec![Fq::ZERO; l * cols];
    for k in 0..m {
        let mut c = 0;
        for &j in gamma {
            let q = &queries[j];
            for s in 0..q.slot_count() {
                for (r, v) in q.block(s, k).iter().enumerate() {
                    data[r * cols + c] = *v;
                }
                c += 1;
            }
        }
        let v = MatrixFq::from_row_major(field, l, cols, data.clone()).expect("reduced entries");
        let (rref, _) = v.rref();
        for x in rref.as_slice() {
            out.extend_from_slice(&x.value().to_le_bytes());
        }
    }
    out
}

fn bucket_of(bytes: &[u8], buckets: usize) -> usize {
    let mut h = DefaultHasher::new();
    bytes.hash(&mut h);
    (h.finish() % buckets as u64) as usize
}

/// Bucket counts for every coalition, drawing from stream `tag`.
#[allow(clippy::too_many_arguments)]
fn sampled_histograms(
    p: &SchemeParams,
    plan: &Arc<AnswerPlan>,
    code: &MdsCode,
    coalitions: &[Vec<usize>],
    settings: &Sampling,
    tag: u64,
    exec: Exec,
    fault: Option<Fault>,
) -> Result<Vec<Vec<u32>>> {
    let _ = p;
    let chunks = settings.samples.div_ceil(1024);
    exec.fold(
        chunks,
        || Ok(vec![vec![0u32; settings.buckets]; coalitions.len()]),
        |acc: Result<Vec<Vec<u32>>>, chunk| {
            let mut acc = acc?;
            let mut rng = trial_rng(settings.seed, tag << 32 | chunk as u64);
            let end = ((chunk + 1) * 1024).min(settings.samples);
            for _ in chunk * 1024..end {
                let (_, queries) = client_query_faulty(plan, code, &mut rng, fault)?;
                for (h, gamma) in acc.iter_mut().zip(coalitions) {
                    h[bucket_of(&canonical_transcript(&queries, gamma), settings.buckets)] += 1;
                }
            }
            Ok(acc)
        },
        |a, b| {
            let (mut a, b) = (a?, b?);
            for (x, y) in a.iter_mut().zip(b) {
                for (u, v) in x.iter_mut().zip(y) {
                    *u += v;
                }
            }
            Ok(a)
        },
    )
}

fn tv(a: &[u32], b: &[u32], samples: usize) -> f64 {
    let diff: u64 = a.iter().zip(b).map(|(&x, &y)| (x as i64 - y as i64).unsigned_abs()).sum();
    diff as f64 / (2.0 * samples as f64)
}

/// Estimated distance between the transcripts of `theta_a` and `theta_b`
/// for the worst coalition of `T` servers. The two sides always use
/// independent randomness, so `theta_a == theta_b` measures the noise floor.
pub fn sampled_distance(
    p: &SchemeParams,
    theta_a: usize,
    theta_b: usize,
    settings: &Sampling,
    exec: Exec,
) -> Result<f64> {
    let code = code_for(p)?;
    let coalitions = coalitions(p.servers(), p.collusion(), p.collusion());
    let a = Arc::new(build_plan(p, theta_a)?);
    let b = Arc::new(build_plan(p, theta_b)?);
    let ha = sampled_histograms(p, &a, &code, &coalitions, settings, 2 * theta_a as u64, exec, None)?;
    let hb = sampled_histograms(p, &b, &code, &coalitions, settings, 2 * theta_b as u64 + 1, exec, None)?;
    Ok(ha
        .iter()
        .zip(&hb)
        .map(|(x, y)| tv(x, y, settings.samples))
        .fold(0.0, f64::max))
}

/// Sampled comparison of the transcripts of every `T`-coalition for every
/// pair of records.
pub fn audit_privacy_sampled(p: &SchemeParams, settings: &Sampling, exec: Exec) -> Result<AuditReport> {
    audit_privacy_sampled_faulty(p, settings, exec, None)
}

#[doc(hidden)]
pub fn audit_privacy_sampled_faulty(
    p: &SchemeParams,
    settings: &Sampling,
    exec: Exec,
    fault: Option<Fault>,
) -> Result<AuditReport> {
    if settings.samples < MIN_SAMPLES {
        return Err(Error::Params(format!(
            "at least {MIN_SAMPLES} samples are required (got {})",
            settings.samples
        )));
    }
    if settings.buckets == 0 {
        return Err(Error::Params("bucket count must be positive".into()));
    }
    let code = code_for(p)?;
    let plans = plans(p)?;
    let coalitions = coalitions(p.servers(), p.collusion(), p.collusion());
    let hists = plans
        .iter()
        .enumerate()
        .map(|(theta, plan)| sampled_histograms(p, plan, &code, &coalitions, settings, theta as u64, exec, fault))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    let mut at = String::new();
    for (a, b) in (0..p.records()).tuple_combinations() {
        for (g, gamma) in coalitions.iter().enumerate() {
            let d = tv(&hists[a][g], &hists[b][g], settings.samples);
            if d > worst || at.is_empty() {
                worst = worst.max(d);
                at = format!(
                    "worst: servers {:?}, theta={} vs theta={}",
                    gamma.iter().map(|j| j + 1).collect::<Vec<_>>(),
                    a + 1,
                    b + 1
                );
            }
        }
    }
    let threshold = settings.threshold();
    let pass = worst <= threshold;
    let details = vec![
        format!(
            "samples_per_theta={} coalitions={} buckets={}",
            settings.samples,
            coalitions.len(),
            settings.buckets
        ),
        at,
    ];
    Ok(AuditReport::new(
        "privacy-sampled",
        p,
        pass,
        Metric::Estimated {
            distance: worst,
            threshold,
            samples: settings.samples,
            buckets: settings.buckets,
        },
        Some(settings.seed),
        details,
    ))
}

/// Solution of the counting system found by exhaustive search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemSolution {
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    pub rows_per_type: Vec<usize>,
}

/// Brute-force search over nonnegative integer sequences `alpha`, `beta`
/// with `T alpha_i + (N-T) beta_i = d_i T` and
/// `alpha_i + alpha_{i+1} = d_i = beta_i + beta_{i+1}` for `i < M`.
///
/// Among all solutions the one with the smallest
/// `sum_i C(M-1, i-1) alpha_i` is returned; remaining ties go to the
/// largest `alpha_1`.
pub fn oracle_solve_system(m: usize, servers: usize, collusion: usize) -> Result<SystemSolution> {
    if m < 2 || collusion < 1 || collusion >= servers {
        return Err(Error::Params(format!("no system for M={m} N={servers} T={collusion}")));
    }
    let g = num_integer::gcd(servers, collusion);
    let (n, t) = (servers / g, collusion / g);
    let di: Vec<usize> = (1..m)
        .map(|i| (n - t).pow(i as u32 - 1) * t.pow((m - 1 - i) as u32))
        .collect();
    let bound = *di.iter().max().unwrap();
    // every entry is at most max d_i because consecutive pairs sum to d_i
    let mut solutions = Vec::new();
    let mut alpha = vec![0usize; m];
    let mut beta = vec![0usize; m];
    search(0, &di, bound, servers, collusion, &mut alpha, &mut beta, &mut solutions);
    let weight = |a: &[usize]| -> u128 {
        a.iter().enumerate().map(|(i, &x)| binomial(m - 1, i) * x as u128).sum()
    };
    let best = solutions.iter().map(|(a, _)| weight(a)).min().ok_or_else(|| {
        Error::Infeasible(format!("the system for M={m} N={servers} T={collusion} has no solution"))
    })?;
    let mut minimal: Vec<&(Vec<usize>, Vec<usize>)> =
        solutions.iter().filter(|(a, _)| weight(a) == best).collect();
    let top = minimal.iter().map(|(a, _)| a[0]).max().unwrap();
    minimal.retain(|(a, _)| a[0] == top);
    if minimal.len() != 1 {
        return Err(Error::Internal(format!("{} tied minimal solutions", minimal.len())));
    }
    let (alpha, beta) = minimal[0].clone();
    Ok(SystemSolution {
        alpha,
        beta,
        rows_per_type: di,
    })
}

/// Number of solutions of the system, for diagnostics.
pub fn oracle_solution_count(m: usize, servers: usize, collusion: usize) -> usize {
    let g = num_integer::gcd(servers, collusion);
    let (n, t) = (servers / g, collusion / g);
    let di: Vec<usize> = (1..m)
        .map(|i| (n - t).pow(i as u32 - 1) * t.pow((m - 1 - i) as u32))
        .collect();
    let bound = *di.iter().max().unwrap();
    let mut solutions = Vec::new();
    search(0, &di, bound, servers, collusion, &mut vec![0; m], &mut vec![0; m], &mut solutions);
    solutions.len()
}

#[allow(clippy::too_many_arguments)]
fn search(
    i: usize,
    di: &[usize],
    bound: usize,
    servers: usize,
    collusion: usize,
    alpha: &mut Vec<usize>,
    beta: &mut Vec<usize>,
    out: &mut Vec<(Vec<usize>, Vec<usize>)>,
) {
    let m = alpha.len();
    if i == m {
        out.push((alpha.clone(), beta.clone()));
        return;
    }
    for a in 0..=bound {
        for b in 0..=bound {
            if i > 0 {
                let d = di[i - 1];
                if alpha[i - 1] + a != d || beta[i - 1] + b != d {
                    continue;
                }
            }
            if i < m - 1 && collusion * a + (servers - collusion) * b != di[i] * collusion {
                continue;
            }
            alpha[i] = a;
            beta[i] = b;
            search(i + 1, di, bound, servers, collusion, alpha, beta, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: usize, n: usize, t: usize, q: u64) -> SchemeParams {
        SchemeParams::new(m, n, t, q).unwrap()
    }

    #[test]
    fn general_linear_group_sizes() {
        assert_eq!(general_linear_order(2, 2), Some(6));
        assert_eq!(general_linear_order(2, 3), Some(48));
        assert_eq!(general_linear_order(1, 5), Some(4));
        let f2 = PrimeField::new(2).unwrap();
        assert_eq!(general_linear(f2, 2).unwrap().len(), 6);
        let f3 = PrimeField::new(3).unwrap();
        assert_eq!(general_linear(f3, 2).unwrap().len(), 48);
    }

    #[test]
    fn structure_passes_and_detects_flipped_bit() {
        let p = params(3, 3, 2, 3);
        let r = audit_structure(&p);
        assert!(r.pass, "{r}");
        assert!(r.details[0].contains("D=19 per-server=6,6,7"));
        let bad = audit_structure_faulty(&p, Some(Fault::LocatorBitFlip { size: 1, row: 0, col: 0 }));
        assert!(!bad.pass);
        assert!(bad.details.iter().any(|d| d.contains("expected alpha_1 = 1")), "{bad}");
    }

    #[test]
    fn correctness_detects_tampering() {
        let p = params(3, 3, 2, 3);
        assert!(audit_correctness(&p, 10, 1, Exec::Sequential).unwrap().pass);
        let bad = audit_correctness_faulty(&p, 1, 1, Exec::Sequential, Some(Fault::TamperAnswer)).unwrap();
        assert!(!bad.pass);
        assert!(bad.to_lines().contains("seed=1"));
    }

    #[test]
    fn exact_privacy_on_the_smallest_instance() {
        let p = params(2, 2, 1, 2);
        let r = audit_privacy_exact(&p, Exec::Sequential).unwrap();
        assert!(r.pass, "{r}");
        assert_eq!(r.metric, Metric::ExactDistance { distance: Rate::new(0, 1) });
        let bad = audit_privacy_exact_faulty(&p, Exec::Sequential, Some(Fault::IdentityDesiredMixing)).unwrap();
        assert!(!bad.pass, "{bad}");
        assert!(matches!(
            audit_privacy_exact(&params(3, 3, 2, 3), Exec::Sequential),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn sampled_privacy_has_power_with_few_buckets() {
        // one server of (2,2,1) sees a single desired symbol, so reusing a
        // column is only visible with more symbols per server
        let p = params(3, 3, 2, 3);
        let settings = Sampling {
            samples: MIN_SAMPLES,
            buckets: 64,
            seed: 3,
        };
        assert!(settings.threshold() < 1.0);
        let ok = audit_privacy_sampled(&p, &settings, Exec::Parallel).unwrap();
        assert!(ok.pass, "{ok}");
        let bad = audit_privacy_sampled_faulty(&p, &settings, Exec::Parallel, Some(Fault::DesiredColumnReuse)).unwrap();
        assert!(!bad.pass, "{bad}");
        assert!(audit_privacy_sampled(&p, &Sampling::new(10, 0), Exec::Parallel).is_err());
    }

    #[test]
    fn oracle_small_cases() {
        let s = oracle_solve_system(3, 3, 2).unwrap();
        assert_eq!((s.alpha, s.beta), (vec![1, 1, 0], vec![2, 0, 1]));
        let s = oracle_solve_system(2, 2, 1).unwrap();
        assert_eq!((s.alpha, s.beta), (vec![1, 0], vec![0, 1]));
        let s = oracle_solve_system(3, 4, 2).unwrap();
        assert_eq!((s.alpha, s.beta), (vec![1, 0, 1], vec![0, 1, 0]));
        // the mirrored sequences also satisfy the system here
        assert_eq!(oracle_solution_count(2, 2, 1), 2);
    }

    #[test]
    fn report_lines() {
        let r = audit_structure(&params(2, 2, 1, 2));
        let text = r.to_lines();
        assert!(text.starts_with("check=structure\nparams=M=2 N=2 T=1 q=2\nverdict=pass\n"));
        assert!(text.contains("seed=deterministic"));
    }
}
