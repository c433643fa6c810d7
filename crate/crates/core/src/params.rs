//! Scheme integers for an `(M, N, T, q)` instance.
//!
//! Size classes are 1-based in the accessors below: `alpha(i)` is the number
//! of sums of each type of cardinality `i` that every one of the first `T`
//! servers returns, `beta(i)` the same for the remaining `N - T` servers, and
//! `rows_per_type(i)` the number of interference rows assigned to each type
//! of cardinality `i`.

use std::fmt;

use num_integer::gcd;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::field::PrimeField;

/// Exact rate or capacity.
pub type Rate = Ratio<u128>;

/// Types are stored as bitmasks, which bounds the record count.
pub const MAX_RECORDS: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemeParams {
    records: usize,
    servers: usize,
    collusion: usize,
    field: PrimeField,
    d: usize,
    n: usize,
    t: usize,
    ltilde: usize,
    sub_packetization: usize,
    alpha: Vec<usize>,
    beta: Vec<usize>,
    rows_per_type: Vec<usize>,
    download: usize,
    rate: Rate,
}

fn pow(base: i128, exp: usize) -> Result<i128> {
    let mut acc: i128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base).ok_or_else(overflow)?;
    }
    Ok(acc)
}

fn overflow() -> Error {
    Error::Params("parameters too large: scheme integers overflow".into())
}

/// `C(n, k)` as a checked integer.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn check_servers(servers: usize, collusion: usize) -> Result<()> {
    if collusion < 1 {
        return Err(Error::Params(format!("T must be at least 1 (got {collusion})")));
    }
    if collusion >= servers {
        return Err(Error::Params(format!(
            "T must be smaller than N (got T = {collusion}, N = {servers})"
        )));
    }
    Ok(())
}

/// `(1 - T/N) / (1 - (T/N)^M)` in lowest terms.
pub fn capacity(records: usize, servers: usize, collusion: usize) -> Result<Rate> {
    if records < 1 {
        return Err(Error::Params("M must be at least 1".into()));
    }
    check_servers(servers, collusion)?;
    let (n, t) = (servers as i128, collusion as i128);
    let num = pow(n, records - 1)?.checked_mul(n - t).ok_or_else(overflow)?;
    let den = pow(n, records)? - pow(t, records)?;
    Ok(Rate::new(num as u128, den as u128))
}

impl SchemeParams {
    /// Derives every scheme integer and checks all counting identities.
    pub fn new(records: usize, servers: usize, collusion: usize, modulus: u64) -> Result<Self> {
        if records < 2 {
            return Err(Error::Params(format!("M must be at least 2 (got {records})")));
        }
        if records > MAX_RECORDS {
            return Err(Error::Params(format!(
                "M must be at most {MAX_RECORDS} (got {records})"
            )));
        }
        check_servers(servers, collusion)?;
        let field = PrimeField::new(modulus)?;
        if (field.modulus() as usize) < servers {
            return Err(Error::Params(format!(
                "field size q = {modulus} is smaller than N = {servers}; no [N,T] MDS code exists"
            )));
        }
        Self::derive(records, servers, collusion, field)
    }

    /// Same as [`new`](Self::new) with `q` the smallest prime `>= N`.
    pub fn with_default_field(records: usize, servers: usize, collusion: usize) -> Result<Self> {
        let q = PrimeField::smallest_at_least(servers as u64)?;
        Self::new(records, servers, collusion, q.modulus() as u64)
    }

    fn derive(m: usize, servers: usize, collusion: usize, field: PrimeField) -> Result<Self> {
        let d = gcd(servers, collusion);
        let (n, t) = ((servers / d) as i128, (collusion / d) as i128);
        let (nn, tt) = (servers as i128, collusion as i128);

        let mut rows_per_type = Vec::with_capacity(m - 1);
        for i in 1..m {
            rows_per_type.push(pow(n - t, i - 1)?.checked_mul(pow(t, m - 1 - i)?).ok_or_else(overflow)?);
        }

        let (alpha1, beta1) = if servers >= 2 * collusion {
            (pow(t, m - 2)?, 0)
        } else {
            let a = pow(t, m - 1)? - pow(t - n, m - 1)?;
            let b = t * (pow(t, m - 2)? - pow(t - n, m - 2)?);
            if a % n != 0 || b % n != 0 {
                return Err(Error::Internal(format!(
                    "closed-form seeds {a}/{n}, {b}/{n} are not integers"
                )));
            }
            (a / n, b / n)
        };
        let mut alpha = vec![alpha1];
        let mut beta = vec![beta1];
        for di in &rows_per_type {
            alpha.push(di - alpha.last().unwrap());
            beta.push(di - beta.last().unwrap());
        }

        let ltilde = pow(n, m - 2)?;
        let sub_packetization = ltilde.checked_mul(nn).ok_or_else(overflow)?;
        let mut download: i128 = 0;
        for i in 1..=m {
            let per_type = tt * alpha[i - 1] + (nn - tt) * beta[i - 1];
            download = download
                .checked_add((binomial(m, i) as i128).checked_mul(per_type).ok_or_else(overflow)?)
                .ok_or_else(overflow)?;
        }
        let to_usize = |v: i128| -> Result<usize> {
            usize::try_from(v).map_err(|_| Error::Internal(format!("negative or oversized count {v}")))
        };
        let params = Self {
            records: m,
            servers,
            collusion,
            field,
            d,
            n: n as usize,
            t: t as usize,
            ltilde: to_usize(ltilde)?,
            sub_packetization: to_usize(sub_packetization)?,
            alpha: alpha.into_iter().map(to_usize).collect::<Result<_>>()?,
            beta: beta.into_iter().map(to_usize).collect::<Result<_>>()?,
            rows_per_type: rows_per_type.into_iter().map(to_usize).collect::<Result<_>>()?,
            download: to_usize(download)?,
            rate: Rate::new(sub_packetization as u128, download as u128),
        };
        let violations = params.violations();
        if !violations.is_empty() {
            return Err(Error::Internal(violations.join("; ")));
        }
        Ok(params)
    }

    /// Every counting identity the scheme relies on that fails for these
    /// values; empty for a consistent instance.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let m = self.records;
        let (nn, tt) = (self.servers as i128, self.collusion as i128);
        let (d, n, t) = (self.d as i128, self.n as i128, self.t as i128);
        let a = |i: usize| self.alpha[i - 1] as i128;
        let b = |i: usize| self.beta[i - 1] as i128;
        let di = |i: usize| self.rows_per_type[i - 1] as i128;

        for i in 1..m {
            if tt * a(i) + (nn - tt) * b(i) != di(i) * tt {
                out.push(format!("T*alpha_{i} + (N-T)*beta_{i} != d_{i}*T"));
            }
            if a(i) + a(i + 1) != di(i) || b(i) + b(i + 1) != di(i) {
                out.push(format!("alpha_{i} + alpha_{} or beta_{i} + beta_{} != d_{i}", i + 1, i + 1));
            }
        }
        for i in 1..=m {
            let rhs = pow(n - t, i - 1).and_then(|x| Ok(x * pow(t, m - i)? * d));
            match rhs {
                Ok(rhs) if tt * a(i) + (nn - tt) * b(i) == rhs => {}
                _ => out.push(format!("T*alpha_{i} + (N-T)*beta_{i} != d(n-t)^{}t^{}", i - 1, m - i)),
            }
        }
        let ltilde = self.ltilde as i128;
        let weighted = |f: &dyn Fn(usize) -> i128| -> i128 {
            (1..=m).map(|i| binomial(m - 1, i - 1) as i128 * f(i)).sum()
        };
        if weighted(&a) != ltilde {
            out.push("sum_i C(M-1,i-1) alpha_i != L~".into());
        }
        if weighted(&b) != ltilde {
            out.push("sum_i C(M-1,i-1) beta_i != L~".into());
        }
        let rows: i128 = (1..m).map(|i| binomial(m - 2, i - 1) as i128 * di(i)).sum();
        if rows != ltilde {
            out.push("sum_i C(M-2,i-1) d_i != L~".into());
        }
        if self.sub_packetization as i128 != nn * ltilde
            || pow(n, m - 1).map(|x| x * d).ok() != Some(self.sub_packetization as i128)
        {
            out.push("L != N*L~ = d*n^(M-1)".into());
        }
        let closed = (pow(n, m).unwrap_or(0) - pow(t, m).unwrap_or(0)) * d / (n - t);
        if closed != self.download as i128 {
            out.push(format!("D = {} != d(n^M - t^M)/(n-t) = {closed}", self.download));
        }
        let (first, rest) = self.per_server_counts();
        if tt * first as i128 + (nn - tt) * rest as i128 != self.download as i128 {
            out.push("per-server counts do not add up to D".into());
        }
        match capacity(m, self.servers, self.collusion) {
            Ok(c) if c == self.rate => {}
            _ => out.push(format!("rate {} differs from capacity", self.rate)),
        }
        out
    }

    pub fn records(&self) -> usize {
        self.records
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn collusion(&self) -> usize {
        self.collusion
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// `gcd(N, T)`.
    pub fn d(&self) -> usize {
        self.d
    }

    /// `N / d`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `T / d`.
    pub fn t(&self) -> usize {
        self.t
    }

    /// Rows of each `L~ x N` symbol matrix, `n^(M-2)`.
    pub fn ltilde(&self) -> usize {
        self.ltilde
    }

    /// Symbols per record, `L = d n^(M-1)`.
    pub fn sub_packetization(&self) -> usize {
        self.sub_packetization
    }

    pub fn alpha(&self, size: usize) -> usize {
        self.alpha[size - 1]
    }

    pub fn beta(&self, size: usize) -> usize {
        self.beta[size - 1]
    }

    /// `d_i` for `1 <= size <= M - 1`.
    pub fn rows_per_type(&self, size: usize) -> usize {
        self.rows_per_type[size - 1]
    }

    pub fn alphas(&self) -> &[usize] {
        &self.alpha
    }

    pub fn betas(&self) -> &[usize] {
        &self.beta
    }

    pub fn rows_per_type_all(&self) -> &[usize] {
        &self.rows_per_type
    }

    /// Sums of each full type `Θ` with `|Θ| = size` that server `j`
    /// (0-based) returns.
    pub fn per_type_count(&self, server: usize, size: usize) -> usize {
        if server < self.collusion {
            self.alpha(size)
        } else {
            self.beta(size)
        }
    }

    /// Total symbols downloaded from all servers, `D`.
    pub fn download(&self) -> usize {
        self.download
    }

    /// `L / D` in lowest terms.
    pub fn rate(&self) -> Rate {
        self.rate
    }

    /// Answers returned by each of the first `T` servers and by each of the
    /// remaining ones.
    pub fn per_server_counts(&self) -> (usize, usize) {
        let m = self.records;
        let count = |v: &[usize]| -> usize {
            (1..=m).map(|i| binomial(m, i) as usize * v[i - 1]).sum()
        };
        (count(&self.alpha), count(&self.beta))
    }

    pub fn answers_for_server(&self, server: usize) -> usize {
        let (first, rest) = self.per_server_counts();
        if server < self.collusion {
            first
        } else {
            rest
        }
    }
}

impl fmt::Display for SchemeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let (first, rest) = self.per_server_counts();
        writeln!(f, "M {}  N {}  T {}  q {}", self.records, self.servers, self.collusion, self.field.modulus())?;
        writeln!(f, "d {}  n {}  t {}", self.d, self.n, self.t)?;
        writeln!(f, "L {}  L~ {}", self.sub_packetization, self.ltilde)?;
        writeln!(f, "alpha {}", list(&self.alpha))?;
        writeln!(f, "beta  {}", list(&self.beta))?;
        writeln!(f, "d_i   {}", list(&self.rows_per_type))?;
        writeln!(f, "answers per server: {first} (servers 1..{}), {rest} (servers {}..{})", self.collusion, self.collusion + 1, self.servers)?;
        writeln!(f, "D {}", self.download)?;
        write!(f, "rate {}", self.rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_servers_two_colluding() {
        let p = SchemeParams::new(3, 3, 2, 3).unwrap();
        assert_eq!((p.d(), p.n(), p.t()), (1, 3, 2));
        assert_eq!((p.sub_packetization(), p.ltilde()), (9, 3));
        assert_eq!(p.alphas(), &[1, 1, 0]);
        assert_eq!(p.betas(), &[2, 0, 1]);
        assert_eq!(p.rows_per_type_all(), &[2, 1]);
        assert_eq!(p.download(), 19);
        assert_eq!(p.rate(), Rate::new(9, 19));
        assert_eq!(p.per_server_counts(), (6, 7));
    }

    #[test]
    fn two_servers_one_colluding() {
        let p = SchemeParams::new(2, 2, 1, 2).unwrap();
        assert_eq!((p.d(), p.n(), p.t(), p.sub_packetization()), (1, 2, 1, 2));
        assert_eq!(p.alphas(), &[1, 0]);
        assert_eq!(p.betas(), &[0, 1]);
        assert_eq!(p.rows_per_type_all(), &[1]);
        assert_eq!(p.download(), 3);
        assert_eq!(p.rate(), Rate::new(2, 3));
        assert_eq!(p.per_server_counts(), (2, 1));
    }

    #[test]
    fn four_servers_two_colluding() {
        let p = SchemeParams::new(3, 4, 2, 5).unwrap();
        assert_eq!((p.d(), p.n(), p.t(), p.sub_packetization()), (2, 2, 1, 8));
        assert_eq!(p.alphas(), &[1, 0, 1]);
        assert_eq!(p.betas(), &[0, 1, 0]);
        assert_eq!(p.rows_per_type_all(), &[1, 1]);
        assert_eq!(p.download(), 14);
        assert_eq!(p.rate(), Rate::new(4, 7));
    }

    #[test]
    fn capacity_values() {
        assert_eq!(capacity(3, 3, 2).unwrap(), Rate::new(9, 19));
        assert_eq!(capacity(2, 2, 1).unwrap(), Rate::new(2, 3));
        // a single record needs no privacy overhead at all
        assert_eq!(capacity(1, 4, 2).unwrap(), Rate::new(1, 1));
        assert_eq!(capacity(2, 4, 2).unwrap(), Rate::new(2, 3));
        assert!(capacity(0, 4, 2).is_err());
        assert!(capacity(2, 4, 4).is_err());
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(SchemeParams::new(1, 3, 2, 3), Err(Error::Params(_))));
        assert!(matches!(SchemeParams::new(3, 3, 3, 3), Err(Error::Params(_))));
        assert!(matches!(SchemeParams::new(3, 3, 0, 3), Err(Error::Params(_))));
        assert!(matches!(SchemeParams::new(3, 5, 2, 3), Err(Error::Params(_))));
        assert!(matches!(SchemeParams::new(3, 3, 2, 4), Err(Error::Params(_))));
        assert!(matches!(SchemeParams::new(40, 3, 2, 3), Err(Error::Params(_))));
    }

    #[test]
    fn default_field_is_smallest_prime_at_least_n() {
        assert_eq!(SchemeParams::with_default_field(3, 4, 2).unwrap().field().modulus(), 5);
        assert_eq!(SchemeParams::with_default_field(2, 6, 1).unwrap().field().modulus(), 7);
    }

    #[test]
    fn grid_identities_hold() {
        for m in 2..=5 {
            for n in 2..=6 {
                for t in 1..n {
                    let p = SchemeParams::with_default_field(m, n, t).unwrap();
                    assert!(p.violations().is_empty());
                    assert_eq!(p.rate(), capacity(m, n, t).unwrap());
                    assert_eq!(p.sub_packetization(), p.d() * p.n().pow(m as u32 - 1));
                    let (first, rest) = p.per_server_counts();
                    assert_eq!(t * first + (n - t) * rest, p.download());
                    for i in 1..m {
                        // rearranged row-count identity
                        assert_eq!(p.alpha(i) * t + (n - t) * p.beta(i), p.rows_per_type(i) * t);
                    }
                }
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(4, 0), 1);
        assert_eq!(binomial(3, 4), 0);
    }
}
