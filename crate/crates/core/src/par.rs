//! Data-parallel execution with a sequential fallback.
//!
//! Without the `parallel` feature every [`Exec`] runs sequentially, so
//! callers never need their own `cfg` switches.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Uses the rayon thread pool when the `parallel` feature is enabled.
    #[default]
    Parallel,
}

impl Exec {
    /// Whether work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `f(i)` for `i` in `0..n`, in index order.
    pub fn map<U, F>(self, n: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Folds `step` over `0..n` starting from `init()` and combines partial
    /// results with the associative `merge`.
    pub fn fold<A, I, S, M>(self, n: usize, init: I, step: S, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        S: Fn(A, usize) -> A + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().fold(&init, &step).reduce(&init, &merge);
        }
        let _ = &merge;
        (0..n).fold(init(), step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        for exec in [Exec::Sequential, Exec::Parallel] {
            assert_eq!(exec.map(5, |i| i * i), vec![0, 1, 4, 9, 16]);
            assert_eq!(exec.fold(101, || 0u64, |a, i| a + i as u64, |a, b| a + b), 5050);
        }
        assert!(!Exec::Sequential.is_parallel());
    }
}
