//! Fault injection for exercising the audits. Not part of the supported
//! API and not reachable from the command line.

/// A deliberate defect injected into a round or an audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Uses `S_θ = I`, so desired coefficients are unit vectors.
    IdentityDesiredMixing,
    /// Every desired symbol reuses column 0 of `S_θ`.
    DesiredColumnReuse,
    /// Adds one to the first answer of server 1.
    TamperAnswer,
    /// Flips bit `(row, col)` of the locator for size class `size`.
    LocatorBitFlip { size: usize, row: usize, col: usize },
}
