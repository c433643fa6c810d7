//! One retrieval round: query generation, server answers, reconstruction.
//!
//! A query row is an explicit coefficient vector over the concatenated
//! records `W_1 || ... || W_M`, so a server only computes inner products.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Fq, PrimeField};
use crate::matrix::{LowerUpper, MatrixFq};
use crate::mds::{MdsCode, Recoverer};
use crate::par::Exec;
use crate::params::SchemeParams;
use crate::plan::{build_plan, AnswerPlan, Group, SlotKind};
use crate::testing::Fault;

/// The `M` records, replicated at every server.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordSet {
    field: PrimeField,
    records: usize,
    len: usize,
    data: Vec<Fq>,
}

impl RecordSet {
    pub fn new(field: PrimeField, records: &[Vec<Fq>]) -> Result<Self> {
        let len = records.first().map_or(0, Vec::len);
        if records.iter().any(|r| r.len() != len) {
            return Err(Error::Dimension("records have different lengths".into()));
        }
        Self::from_flat(field, records.len(), len, records.concat())
    }

    /// Records laid out one after another.
    pub fn from_flat(field: PrimeField, records: usize, len: usize, data: Vec<Fq>) -> Result<Self> {
        if data.len() != records * len {
            return Err(Error::Dimension(format!(
                "{} values for {records} records of length {len}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| v.0 >= field.modulus()) {
            return Err(Error::ValueOutOfRange {
                value: v.0 as u64,
                modulus: field.modulus() as u64,
            });
        }
        Ok(Self {
            field,
            records,
            len,
            data,
        })
    }

    pub fn random<R: Rng + ?Sized>(field: PrimeField, records: usize, len: usize, rng: &mut R) -> Self {
        let data = (0..records * len).map(|_| field.random(rng)).collect();
        Self {
            field,
            records,
            len,
            data,
        }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn count(&self) -> usize {
        self.records
    }

    pub fn record_len(&self) -> usize {
        self.len
    }

    pub fn record(&self, k: usize) -> &[Fq] {
        &self.data[k * self.len..(k + 1) * self.len]
    }

    pub fn flat(&self) -> &[Fq] {
        &self.data
    }
}

/// Coefficient rows sent to one server, one per answer slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    field: PrimeField,
    records: usize,
    record_len: usize,
    slots: usize,
    data: Vec<Fq>,
}

impl Query {
    pub fn from_parts(
        field: PrimeField,
        records: usize,
        record_len: usize,
        slots: usize,
        data: Vec<Fq>,
    ) -> Result<Self> {
        if data.len() != slots * records * record_len {
            return Err(Error::Dimension(format!(
                "{} coefficients for {slots} rows of width {}",
                data.len(),
                records * record_len
            )));
        }
        if let Some(v) = data.iter().find(|v| v.0 >= field.modulus()) {
            return Err(Error::ValueOutOfRange {
                value: v.0 as u64,
                modulus: field.modulus() as u64,
            });
        }
        Ok(Self {
            field,
            records,
            record_len,
            slots,
            data,
        })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn records(&self) -> usize {
        self.records
    }

    pub fn record_len(&self) -> usize {
        self.record_len
    }

    pub fn slot_count(&self) -> usize {
        self.slots
    }

    pub fn width(&self) -> usize {
        self.records * self.record_len
    }

    pub fn row(&self, s: usize) -> &[Fq] {
        let w = self.width();
        &self.data[s * w..(s + 1) * w]
    }

    /// The coefficients of slot `s` that multiply record `k`.
    pub fn block(&self, s: usize, k: usize) -> &[Fq] {
        &self.row(s)[k * self.record_len..(k + 1) * self.record_len]
    }

    /// Records with a nonzero coefficient in slot `s`.
    pub fn support(&self, s: usize) -> Vec<usize> {
        (0..self.records)
            .filter(|&k| self.block(s, k).iter().any(|v| !v.is_zero()))
            .collect()
    }

    pub fn as_slice(&self) -> &[Fq] {
        &self.data
    }
}

/// One value per query row.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Answer {
    values: Vec<Fq>,
}

impl Answer {
    pub fn new(values: Vec<Fq>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[Fq] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// What the client keeps between sending queries and reconstructing:
/// the plan and `S_θ^{-1}`. Never serialized.
#[derive(Clone, Debug)]
pub struct ClientState {
    plan: Arc<AnswerPlan>,
    s_theta_inv: ThetaInverse,
}

/// `S_θ^{-1}`, either explicit or as the factors of `S_θ^T`.
#[derive(Clone, Debug)]
enum ThetaInverse {
    Dense(MatrixFq),
    /// `S_θ = (L U)^T`, so `u S_θ^{-1}` is the solution of `L U x = u`.
    Factored(LowerUpper),
}

impl ThetaInverse {
    /// `u S_θ^{-1}`.
    fn apply(&self, u: &[Fq]) -> Result<Vec<Fq>> {
        match self {
            ThetaInverse::Dense(inv) => inv.left_mul_vec(u),
            ThetaInverse::Factored(lu) => lu.solve(u),
        }
    }

    fn dim(&self) -> usize {
        match self {
            ThetaInverse::Dense(inv) => inv.rows(),
            ThetaInverse::Factored(lu) => lu.rows(),
        }
    }
}

impl ClientState {
    pub fn theta(&self) -> usize {
        self.plan.theta()
    }

    pub fn params(&self) -> &SchemeParams {
        self.plan.params()
    }

    pub fn plan(&self) -> &AnswerPlan {
        &self.plan
    }
}

/// The mixing columns a query needs: every column of `S_θ` and the first
/// `T * L~` columns of each other `S_k`, stored as rows.
struct Mixing {
    columns: Vec<MatrixFq>,
}

fn check_code(p: &SchemeParams, code: &MdsCode) -> Result<()> {
    if code.length() != p.servers() || code.dimension() != p.collusion() || code.field() != p.field() {
        return Err(Error::Params(format!(
            "[{}, {}] code over F_{} does not match N = {}, T = {}, q = {}",
            code.length(),
            code.dimension(),
            code.field().modulus(),
            p.servers(),
            p.collusion(),
            p.field().modulus()
        )));
    }
    Ok(())
}

/// Builds the queries for record `theta` (0-based) with fresh secrets
/// drawn from `rng`.
pub fn client_query<R: Rng + ?Sized>(
    p: &SchemeParams,
    theta: usize,
    code: &MdsCode,
    rng: &mut R,
) -> Result<(ClientState, Vec<Query>)> {
    let plan = Arc::new(build_plan(p, theta)?);
    client_query_planned(&plan, code, rng)
}

/// [`client_query`] with a prebuilt plan, for repeated rounds.
pub fn client_query_planned<R: Rng + ?Sized>(
    plan: &Arc<AnswerPlan>,
    code: &MdsCode,
    rng: &mut R,
) -> Result<(ClientState, Vec<Query>)> {
    client_query_faulty(plan, code, rng, None)
}

#[doc(hidden)]
pub fn client_query_faulty<R: Rng + ?Sized>(
    plan: &Arc<AnswerPlan>,
    code: &MdsCode,
    rng: &mut R,
    fault: Option<Fault>,
) -> Result<(ClientState, Vec<Query>)> {
    let p = plan.params();
    check_code(p, code)?;
    let (field, l, theta) = (p.field(), p.sub_packetization(), plan.theta());
    let used = p.collusion() * p.ltilde();
    let mut columns = Vec::with_capacity(p.records());
    let mut inverse = None;
    for k in 0..p.records() {
        if k == theta {
            if fault == Some(Fault::IdentityDesiredMixing) {
                columns.push(MatrixFq::identity(field, l));
                inverse = Some(ThetaInverse::Dense(MatrixFq::identity(field, l)));
            } else {
                // S_θ^T is as uniform as S_θ, and its rows are what the
                // queries read
                let lu = LowerUpper::random(l, l, field, rng);
                columns.push(lu.product());
                inverse = Some(ThetaInverse::Factored(lu));
            }
        } else {
            // any T*L~ columns of a uniform invertible matrix are a uniform
            // independent tuple, and the rest of S_k is never used
            columns.push(MatrixFq::random_independent_rows(used, l, field, rng));
        }
    }
    let inverse = inverse.expect("theta is a valid record");
    finish_query(plan, code, Mixing { columns }, inverse, fault)
}

/// Builds the queries from explicit secrets `S_1 .. S_M` (each `L x L`
/// and invertible).
pub fn client_query_with_secrets(
    plan: &Arc<AnswerPlan>,
    code: &MdsCode,
    secrets: &[MatrixFq],
) -> Result<(ClientState, Vec<Query>)> {
    client_query_with_secrets_faulty(plan, code, secrets, None)
}

#[doc(hidden)]
pub fn client_query_with_secrets_faulty(
    plan: &Arc<AnswerPlan>,
    code: &MdsCode,
    secrets: &[MatrixFq],
    fault: Option<Fault>,
) -> Result<(ClientState, Vec<Query>)> {
    let p = plan.params();
    check_code(p, code)?;
    let l = p.sub_packetization();
    if secrets.len() != p.records() {
        return Err(Error::Dimension(format!(
            "{} secrets for M = {} records",
            secrets.len(),
            p.records()
        )));
    }
    for s in secrets {
        if s.rows() != l || s.cols() != l || s.field() != p.field() {
            return Err(Error::Dimension(format!(
                "secret of shape {}x{}, expected {l}x{l} over F_{}",
                s.rows(),
                s.cols(),
                p.field().modulus()
            )));
        }
    }
    let mut columns: Vec<MatrixFq> = secrets.iter().map(MatrixFq::transpose).collect();
    let theta = plan.theta();
    let inverse = ThetaInverse::Dense(if fault == Some(Fault::IdentityDesiredMixing) {
        columns[theta] = MatrixFq::identity(p.field(), l);
        MatrixFq::identity(p.field(), l)
    } else {
        secrets[theta].inverse()?
    });
    finish_query(plan, code, Mixing { columns }, inverse, fault)
}

/// Checks `S_θ^{-1}` against `S_θ` on fixed pseudo-random vectors instead
/// of forming the full product.
fn check_inverse(s_theta_rows: &MatrixFq, inverse: &ThetaInverse) -> Result<()> {
    let field = s_theta_rows.field();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..2 {
        let x: Vec<Fq> = (0..inverse.dim()).map(|_| field.random(&mut rng)).collect();
        // rows of `s_theta_rows` are the columns of S_θ
        let xs: Vec<Fq> = (0..s_theta_rows.rows()).map(|c| field.dot(&x, s_theta_rows.row(c))).collect();
        if inverse.apply(&xs)? != x {
            return Err(Error::Internal("S_theta^-1 * S_theta is not the identity".into()));
        }
    }
    Ok(())
}

fn finish_query(
    plan: &Arc<AnswerPlan>,
    code: &MdsCode,
    mixing: Mixing,
    inverse: ThetaInverse,
    fault: Option<Fault>,
) -> Result<(ClientState, Vec<Query>)> {
    let p = plan.params();
    let (field, m, l, n, t) = (p.field(), p.records(), p.sub_packetization(), p.servers(), p.collusion());
    let theta = plan.theta();
    check_inverse(&mixing.columns[theta], &inverse)?;
    let g = code.generator();
    let width = m * l;
    // a sum of T unreduced products fits in u64 unless q and T are both large
    let lazy = field.lazy_terms() >= t;
    let mut acc = vec![0u64; l];
    let mut queries = Vec::with_capacity(n);
    for j in 0..n {
        let slots = plan.server_slots(j);
        let mut data = vec![Fq::ZERO; slots.len() * width];
        for (s, slot) in slots.iter().enumerate() {
            let row = &mut data[s * width..(s + 1) * width];
            if let Some(i) = slot.desired_row {
                let c = if fault == Some(Fault::DesiredColumnReuse) { 0 } else { i * n + j };
                row[theta * l..(theta + 1) * l].copy_from_slice(mixing.columns[theta].row(c));
            }
            for &(k, i) in &slot.contributions {
                // (S_k columns i*T .. i*T + T) times column j of G
                acc.iter_mut().for_each(|a| *a = 0);
                for r in 0..t {
                    let gj = g.get(r, j).value() as u64;
                    if gj == 0 {
                        continue;
                    }
                    let col = mixing.columns[k].row(i * t + r);
                    if lazy {
                        for (a, v) in acc.iter_mut().zip(col) {
                            *a = a.wrapping_add(gj * v.value() as u64);
                        }
                    } else {
                        for (a, v) in acc.iter_mut().zip(col) {
                            *a += field.reduce(gj * v.value() as u64) as u64;
                        }
                    }
                }
                for (dst, a) in row[k * l..(k + 1) * l].iter_mut().zip(&acc) {
                    *dst = field.elem(*a);
                }
            }
        }
        queries.push(Query {
            field,
            records: m,
            record_len: l,
            slots: slots.len(),
            data,
        });
    }
    Ok((
        ClientState {
            plan: Arc::clone(plan),
            s_theta_inv: inverse,
        },
        queries,
    ))
}

/// Inner product of every query row with the concatenated records.
pub fn server_answer(query: &Query, records: &RecordSet) -> Result<Answer> {
    if query.field != records.field {
        return Err(Error::Dimension(format!(
            "query over F_{} against records over F_{}",
            query.field.modulus(),
            records.field.modulus()
        )));
    }
    if query.records != records.records || query.record_len != records.len {
        return Err(Error::Dimension(format!(
            "query for {} records of length {} against {} records of length {}",
            query.records, query.record_len, records.records, records.len
        )));
    }
    let values = (0..query.slots)
        .map(|s| records.field.dot(query.row(s), &records.data))
        .collect();
    Ok(Answer { values })
}

/// Recovers `W_θ` from the answers of all `N` servers.
pub fn reconstruct(state: &ClientState, answers: &[Answer], code: &MdsCode) -> Result<Vec<Fq>> {
    let plan = &state.plan;
    let p = plan.params();
    check_code(p, code)?;
    let (field, l, n) = (p.field(), p.sub_packetization(), p.servers());
    if answers.len() != n {
        return Err(Error::MissingSlot(format!("{} answers for N = {n} servers", answers.len())));
    }
    let mut mixed: Vec<(Group, usize, usize, Fq)> = Vec::new();
    let mut pure: HashMap<Group, Vec<(usize, Fq)>> = HashMap::new();
    let mut u: Vec<Option<Fq>> = vec![None; l];
    for (j, answer) in answers.iter().enumerate() {
        let slots = plan.server_slots(j);
        if answer.len() != slots.len() {
            return Err(Error::MissingSlot(format!(
                "server {} returned {} values for {} slots",
                j + 1,
                answer.len(),
                slots.len()
            )));
        }
        for (slot, &value) in slots.iter().zip(&answer.values) {
            match slot.kind() {
                SlotKind::Singleton => u[slot.desired_row.unwrap() * n + j] = Some(value),
                SlotKind::Interference => pure.entry(slot.group.unwrap()).or_default().push((j, value)),
                SlotKind::Mixed => mixed.push((slot.group.unwrap(), j, slot.desired_row.unwrap(), value)),
            }
        }
    }
    let mut recoverers: HashMap<Vec<usize>, Recoverer> = HashMap::new();
    let mut codewords: HashMap<Group, Vec<Fq>> = HashMap::new();
    for (group, known) in &pure {
        let positions: Vec<usize> = known.iter().map(|k| k.0).collect();
        let values: Vec<Fq> = known.iter().map(|k| k.1).collect();
        if !recoverers.contains_key(&positions) {
            recoverers.insert(positions.clone(), code.recoverer(&positions)?);
        }
        codewords.insert(*group, recoverers[&positions].recover(&values)?);
    }
    for (group, j, row, value) in mixed {
        let codeword = codewords.get(&group).ok_or_else(|| {
            Error::MissingSlot(format!(
                "no interference sums for type {} row {}",
                group.interference,
                group.row + 1
            ))
        })?;
        u[row * n + j] = Some(field.sub(value, codeword[j]));
    }
    let u: Vec<Fq> = u
        .into_iter()
        .enumerate()
        .map(|(c, v)| v.ok_or_else(|| Error::MissingSlot(format!("desired symbol {} was never answered", c + 1))))
        .collect::<Result<_>>()?;
    state.s_theta_inv.apply(&u)
}

/// Transcript and result of one in-process round.
#[derive(Clone, Debug)]
pub struct Round {
    pub queries: Vec<Query>,
    pub answers: Vec<Answer>,
    pub recovered: Vec<Fq>,
}

impl Round {
    pub fn downloaded(&self) -> usize {
        self.answers.iter().map(Answer::len).sum()
    }
}

/// Runs one complete round against `records`, answering the servers with
/// `exec`.
pub fn run_round<R: Rng + ?Sized>(
    plan: &Arc<AnswerPlan>,
    code: &MdsCode,
    records: &RecordSet,
    rng: &mut R,
    exec: Exec,
) -> Result<Round> {
    let (state, queries) = client_query_planned(plan, code, rng)?;
    let answers = exec
        .map(queries.len(), |j| server_answer(&queries[j], records))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let recovered = reconstruct(&state, &answers, code)?;
    Ok(Round {
        queries,
        answers,
        recovered,
    })
}
