//! The retrieval blueprint for a fixed `θ`: which sums every server returns
//! and which symbol rows feed each of them.
//!
//! Everything here is a pure function of `(M, N, T, θ)`. Records, servers
//! and rows are 0-based; [`TypeSet`] displays its members 1-based.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::locator::{make_locator, LocatorMatrix};
use crate::params::{SchemeParams, MAX_RECORDS};

/// A nonempty set of record indices, stored as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct TypeSet(u32);

impl TypeSet {
    pub const EMPTY: TypeSet = TypeSet(0);

    pub fn from_bits(bits: u32) -> Self {
        Self(bits)
    }

    pub fn singleton(k: usize) -> Self {
        Self(1 << k)
    }

    pub fn from_members<I: IntoIterator<Item = usize>>(members: I) -> Self {
        members.into_iter().fold(Self::EMPTY, |s, k| s.with(k))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, k: usize) -> bool {
        k < MAX_RECORDS && self.0 & (1 << k) != 0
    }

    pub fn with(self, k: usize) -> Self {
        Self(self.0 | 1 << k)
    }

    pub fn without(self, k: usize) -> Self {
        Self(self.0 & !(1 << k))
    }

    /// Members in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..MAX_RECORDS).filter(move |&k| self.contains(k))
    }

    pub fn members(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Applies a relabeling of records.
    pub fn map(self, f: impl Fn(usize) -> usize) -> Self {
        Self::from_members(self.iter().map(f))
    }
}

/// Cardinality first, then lexicographic on the sorted members.
impl Ord for TypeSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.iter().cmp(other.iter()))
    }
}

impl PartialOrd for TypeSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TypeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.iter().map(|k| (k + 1).to_string()).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

fn check_record(m: usize, k: usize, what: &str) -> Result<()> {
    if k >= m {
        return Err(Error::Params(format!("{what} {} outside 1..={m}", k + 1)));
    }
    Ok(())
}

/// All nonempty subsets of `[M] \ {θ}`, in canonical order.
pub fn interference_types(m: usize, theta: usize) -> Vec<TypeSet> {
    let mut out: Vec<TypeSet> = (1u32..1 << m)
        .map(TypeSet)
        .filter(|s| !s.contains(theta))
        .collect();
    out.sort();
    out
}

/// `InType_{k,θ}`: the interference types containing `k`, in canonical
/// order.
pub fn enumerate_types(m: usize, theta: usize, k: usize) -> Result<Vec<TypeSet>> {
    check_record(m, theta, "theta")?;
    check_record(m, k, "record")?;
    if k == theta {
        return Err(Error::Params(format!("record {} is the desired one", k + 1)));
    }
    Ok(interference_types(m, theta).into_iter().filter(|s| s.contains(k)).collect())
}

/// First row of each `(k, Λ)` block in the `L~ x N` symbol matrix of record
/// `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockAssignment {
    theta: usize,
    starts: HashMap<(usize, TypeSet), usize>,
}

impl BlockAssignment {
    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn start(&self, k: usize, ty: TypeSet) -> Option<usize> {
        self.starts.get(&(k, ty)).copied()
    }
}

pub fn assign_blocks(p: &SchemeParams, theta: usize) -> Result<BlockAssignment> {
    let m = p.records();
    check_record(m, theta, "theta")?;
    let mut starts = HashMap::new();
    for k in (0..m).filter(|&k| k != theta) {
        let mut next = 0;
        for ty in enumerate_types(m, theta, k)? {
            starts.insert((k, ty), next);
            next += p.rows_per_type(ty.len());
        }
        if next != p.ltilde() {
            return Err(Error::Internal(format!(
                "blocks of record {} cover {next} rows instead of L~ = {}",
                k + 1,
                p.ltilde()
            )));
        }
    }
    Ok(BlockAssignment { theta, starts })
}

/// Links mixed and pure interference sums built from the same local row of
/// an interference type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Group {
    pub interference: TypeSet,
    pub row: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotKind {
    /// A desired symbol on its own.
    Singleton,
    /// A sum of interference symbols only.
    Interference,
    /// Interference plus one fresh desired symbol.
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnswerSlot {
    pub server: usize,
    pub full_type: TypeSet,
    /// `(record, row)` for every record of the type other than `θ`,
    /// ascending by record.
    pub contributions: Vec<(usize, usize)>,
    /// Row of the desired symbol matrix used at this server, when `θ` is in
    /// the type.
    pub desired_row: Option<usize>,
    pub group: Option<Group>,
}

impl AnswerSlot {
    pub fn kind(&self) -> SlotKind {
        match (self.desired_row, self.contributions.is_empty()) {
            (Some(_), true) => SlotKind::Singleton,
            (Some(_), false) => SlotKind::Mixed,
            (None, _) => SlotKind::Interference,
        }
    }

    fn order_key(&self) -> (TypeSet, Option<Group>, Option<usize>) {
        (self.full_type, self.group, self.desired_row)
    }
}

#[derive(Clone, Debug)]
pub struct AnswerPlan {
    params: SchemeParams,
    theta: usize,
    locators: Vec<LocatorMatrix>,
    blocks: BlockAssignment,
    slots: Vec<Vec<AnswerSlot>>,
    desired_usage: Vec<usize>,
}

/// Locators `M_1 .. M_{M-1}` for `p`.
pub fn make_locators(p: &SchemeParams) -> Result<Vec<LocatorMatrix>> {
    (1..p.records()).map(|i| make_locator(i, p)).collect()
}

pub fn build_plan(p: &SchemeParams, theta: usize) -> Result<AnswerPlan> {
    build_plan_with_locators(p, theta, make_locators(p)?)
}

/// Builds the plan from explicitly supplied locators (`locators[i - 1]` for
/// size class `i`). The locators are not validated here; see
/// [`AnswerPlan::violations`].
pub fn build_plan_with_locators(
    p: &SchemeParams,
    theta: usize,
    locators: Vec<LocatorMatrix>,
) -> Result<AnswerPlan> {
    let m = p.records();
    check_record(m, theta, "theta")?;
    if locators.len() + 1 != m {
        return Err(Error::Dimension(format!(
            "{} locators for M = {m} records",
            locators.len()
        )));
    }
    let servers = p.servers();
    let ltilde = p.ltilde();
    let blocks = assign_blocks(p, theta)?;
    let mut slots: Vec<Vec<AnswerSlot>> = vec![Vec::new(); servers];
    let mut next_desired = vec![0usize; servers];
    let mut take = |j: usize| -> Result<usize> {
        let row = next_desired[j];
        if row >= ltilde {
            return Err(Error::Internal(format!(
                "server {} needs more than L~ = {ltilde} desired symbols",
                j + 1
            )));
        }
        next_desired[j] += 1;
        Ok(row)
    };

    let desired = TypeSet::singleton(theta);
    for (j, list) in slots.iter_mut().enumerate() {
        for _ in 0..p.per_type_count(j, 1) {
            list.push(AnswerSlot {
                server: j,
                full_type: desired,
                contributions: Vec::new(),
                desired_row: Some(take(j)?),
                group: None,
            });
        }
    }

    for ty in interference_types(m, theta) {
        let locator = &locators[ty.len() - 1];
        if locator.bits().cols() != servers {
            return Err(Error::Dimension(format!("locator M_{} has the wrong width", ty.len())));
        }
        for r in 0..locator.rows() {
            let contributions: Vec<(usize, usize)> = ty
                .iter()
                .map(|k| (k, blocks.start(k, ty).expect("block assigned") + r))
                .collect();
            if let Some(&(k, row)) = contributions.iter().find(|c| c.1 >= ltilde) {
                return Err(Error::Internal(format!(
                    "row {} of record {} is beyond L~ = {ltilde}",
                    row + 1,
                    k + 1
                )));
            }
            let group = Some(Group { interference: ty, row: r });
            for (j, list) in slots.iter_mut().enumerate() {
                let pure = locator.bits().get(r, j);
                list.push(AnswerSlot {
                    server: j,
                    full_type: if pure { ty } else { ty.with(theta) },
                    contributions: contributions.clone(),
                    desired_row: if pure { None } else { Some(take(j)?) },
                    group,
                });
            }
        }
    }

    for list in &mut slots {
        list.sort_by_key(|s| s.order_key());
    }
    Ok(AnswerPlan {
        params: p.clone(),
        theta,
        locators,
        blocks,
        slots,
        desired_usage: next_desired,
    })
}

impl AnswerPlan {
    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn locators(&self) -> &[LocatorMatrix] {
        &self.locators
    }

    pub fn blocks(&self) -> &BlockAssignment {
        &self.blocks
    }

    /// Slots of server `j`, in the order its answers are returned.
    pub fn server_slots(&self, j: usize) -> &[AnswerSlot] {
        &self.slots[j]
    }

    pub fn all_slots(&self) -> impl Iterator<Item = &AnswerSlot> {
        self.slots.iter().flatten()
    }

    /// Desired symbols consumed at each server.
    pub fn desired_usage(&self) -> &[usize] {
        &self.desired_usage
    }

    pub fn total_slots(&self) -> usize {
        self.slots.iter().map(Vec::len).sum()
    }

    /// Every plan invariant that fails; empty for a consistent plan.
    pub fn violations(&self) -> Vec<String> {
        let p = &self.params;
        let (m, servers, ltilde, theta) = (p.records(), p.servers(), p.ltilde(), self.theta);
        let mut out = Vec::new();
        for (i, l) in self.locators.iter().enumerate() {
            if l.size() != i + 1 {
                out.push(format!("locator {} has size class {}", i + 1, l.size()));
            } else {
                out.extend(l.violations(p));
            }
        }

        let mut cover: HashMap<(usize, usize, usize), usize> = HashMap::new();
        let mut groups: BTreeMap<Group, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for j in 0..servers {
            let slots = &self.slots[j];
            if slots.len() != p.answers_for_server(j) {
                out.push(format!(
                    "server {} returns {} sums, expected {}",
                    j + 1,
                    slots.len(),
                    p.answers_for_server(j)
                ));
            }
            let mut per_type: HashMap<TypeSet, usize> = HashMap::new();
            let mut desired = vec![0usize; ltilde];
            for s in slots {
                *per_type.entry(s.full_type).or_default() += 1;
                if s.server != j {
                    out.push(format!("slot of server {} listed under server {}", s.server + 1, j + 1));
                }
                let others: Vec<usize> = s.contributions.iter().map(|c| c.0).collect();
                if others != s.full_type.without(theta).members() {
                    out.push(format!("slot {} at server {} has contributions {others:?}", s.full_type, j + 1));
                }
                if s.desired_row.is_some() != s.full_type.contains(theta) {
                    out.push(format!("slot {} at server {} mismatches its desired symbol", s.full_type, j + 1));
                }
                match s.desired_row {
                    Some(r) if r < ltilde => desired[r] += 1,
                    Some(r) => out.push(format!("desired row {} beyond L~ at server {}", r + 1, j + 1)),
                    None => {}
                }
                for &(k, row) in &s.contributions {
                    *cover.entry((k, row, j)).or_default() += 1;
                }
                if let Some(g) = s.group {
                    let e = groups.entry(g).or_default();
                    if s.desired_row.is_some() { &mut e.1 } else { &mut e.0 }.push(j);
                }
            }
            for bits in 1u32..1 << m {
                let ty = TypeSet(bits);
                let want = p.per_type_count(j, ty.len());
                let got = per_type.get(&ty).copied().unwrap_or(0);
                if got != want {
                    out.push(format!("server {} returns {got} sums of type {ty}, expected {want}", j + 1));
                }
            }
            if let Some(r) = desired.iter().position(|&c| c != 1) {
                out.push(format!(
                    "server {} uses desired row {} {} times",
                    j + 1,
                    r + 1,
                    desired[r]
                ));
            }
            if self.desired_usage[j] != ltilde {
                out.push(format!("server {} consumed {} desired symbols", j + 1, self.desired_usage[j]));
            }
        }
        for k in (0..m).filter(|&k| k != theta) {
            for row in 0..ltilde {
                for j in 0..servers {
                    let c = cover.get(&(k, row, j)).copied().unwrap_or(0);
                    if c != 1 {
                        out.push(format!(
                            "symbol ({}, row {}, server {}) appears {c} times",
                            k + 1,
                            row + 1,
                            j + 1
                        ));
                    }
                }
            }
        }
        for (g, (pure, mixed)) in &groups {
            if pure.len() != p.collusion() || pure.len() + mixed.len() != servers {
                out.push(format!(
                    "group {} row {} has {} interference and {} mixed sums",
                    g.interference,
                    g.row + 1,
                    pure.len(),
                    mixed.len()
                ));
            }
        }
        if out.len() > 32 {
            let extra = out.len() - 32;
            out.truncate(32);
            out.push(format!("... and {extra} more"));
        }
        out
    }

    /// Human-readable answer table, one column per server, with records
    /// named `a, b, c, ...` and symbols `a_{ij}` for row `i`, server `j`.
    pub fn render_table(&self) -> String {
        let servers = self.params.servers();
        let cells: Vec<Vec<String>> = self
            .slots
            .iter()
            .map(|list| list.iter().map(|s| self.render_slot(s)).collect())
            .collect();
        let width = cells.iter().flatten().map(String::len).max().unwrap_or(0).max(8);
        let height = cells.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = String::new();
        for j in 0..servers {
            let _ = write!(out, "{:<width$}  ", format!("Serv({})", j + 1));
        }
        out = out.trim_end().to_string();
        out.push('\n');
        for r in 0..height {
            let mut line = String::new();
            for column in &cells {
                let _ = write!(line, "{:<width$}  ", column.get(r).map_or("", String::as_str));
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    fn render_slot(&self, s: &AnswerSlot) -> String {
        let mut terms: Vec<(usize, usize)> = s.contributions.clone();
        if let Some(r) = s.desired_row {
            terms.push((self.theta, r));
        }
        terms.sort();
        terms
            .iter()
            .map(|&(k, row)| symbol_name(k, row, s.server))
            .collect::<Vec<_>>()
            .join("+")
    }
}

fn symbol_name(k: usize, row: usize, server: usize) -> String {
    let letter = if k < 26 {
        ((b'a' + k as u8) as char).to_string()
    } else {
        format!("w{}", k + 1)
    };
    if row < 9 && server < 9 {
        format!("{letter}{}{}", row + 1, server + 1)
    } else {
        format!("{letter}_{{{},{}}}", row + 1, server + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(members: &[usize]) -> TypeSet {
        TypeSet::from_members(members.iter().map(|k| k - 1))
    }

    #[test]
    fn type_order_and_display() {
        assert!(ts(&[3]) < ts(&[1, 2]));
        assert!(ts(&[1, 3]) < ts(&[2, 3]));
        assert_eq!(ts(&[2, 3]).to_string(), "{2,3}");
        assert_eq!(ts(&[1, 3]).len(), 2);
    }

    #[test]
    fn enumerates_in_types_for_three_records() {
        assert_eq!(enumerate_types(3, 0, 1).unwrap(), vec![ts(&[2]), ts(&[2, 3])]);
        assert_eq!(enumerate_types(3, 0, 2).unwrap(), vec![ts(&[3]), ts(&[2, 3])]);
        assert_eq!(enumerate_types(2, 0, 1).unwrap(), vec![ts(&[2])]);
        assert!(enumerate_types(3, 1, 1).is_err());
        assert!(enumerate_types(3, 3, 1).is_err());
    }

    #[test]
    fn blocks_for_three_records() {
        let p = SchemeParams::new(3, 3, 2, 3).unwrap();
        let b = assign_blocks(&p, 0).unwrap();
        assert_eq!(b.start(1, ts(&[2])), Some(0));
        assert_eq!(b.start(1, ts(&[2, 3])), Some(2));
        assert_eq!(b.start(2, ts(&[3])), Some(0));
        assert_eq!(b.start(2, ts(&[2, 3])), Some(2));
    }

    #[test]
    fn three_servers_two_colluding_table() {
        let p = SchemeParams::new(3, 3, 2, 3).unwrap();
        let plan = build_plan(&p, 0).unwrap();
        assert!(plan.violations().is_empty(), "{:?}", plan.violations());
        let types = |j: usize| -> Vec<TypeSet> { plan.server_slots(j).iter().map(|s| s.full_type).collect() };
        assert_eq!(
            types(0),
            vec![ts(&[1]), ts(&[2]), ts(&[3]), ts(&[1, 2]), ts(&[1, 3]), ts(&[2, 3])]
        );
        assert_eq!(plan.server_slots(2).len(), 7);
        let full = plan
            .server_slots(2)
            .iter()
            .find(|s| s.full_type == ts(&[1, 2, 3]))
            .unwrap();
        assert_eq!(full.contributions, vec![(1, 2), (2, 2)]);
        assert_eq!(full.desired_row, Some(2));
        assert!(plan.render_table().contains("a33+b33+c33"));
    }

    #[test]
    fn reproduces_the_three_server_answer_table() {
        let p = SchemeParams::new(3, 3, 2, 3).unwrap();
        let plan = build_plan(&p, 0).unwrap();
        let column = |j: usize| -> Vec<String> {
            let mut v: Vec<String> = plan.server_slots(j).iter().map(|s| plan.render_slot(s)).collect();
            v.sort();
            v
        };
        assert_eq!(column(0), ["a11", "a21+b21", "a31+c21", "b11", "b31+c31", "c11"]);
        // the usual hand-worked table pairs a12 with b12 and answers a22 alone;
        // fresh desired rows go out in increasing order here, swapping the two
        assert_eq!(column(1), ["a12", "a22+b12", "a32+c12", "b22", "b32+c32", "c22"]);
        assert_eq!(
            column(2),
            ["a13", "a23", "a33+b33+c33", "b13", "b23", "c13", "c23"]
        );
    }

    #[test]
    fn two_servers_one_colluding() {
        let p = SchemeParams::new(2, 2, 1, 2).unwrap();
        let plan = build_plan(&p, 0).unwrap();
        assert!(plan.violations().is_empty());
        let kinds: Vec<(TypeSet, SlotKind)> =
            plan.all_slots().map(|s| (s.full_type, s.kind())).collect();
        assert_eq!(
            kinds,
            vec![
                (ts(&[1]), SlotKind::Singleton),
                (ts(&[2]), SlotKind::Interference),
                (ts(&[1, 2]), SlotKind::Mixed),
            ]
        );
    }

    #[test]
    fn theta_out_of_range() {
        let p = SchemeParams::new(2, 2, 1, 2).unwrap();
        assert!(matches!(build_plan(&p, 2), Err(Error::Params(_))));
    }
}
