//! Run-level data parallelism with a sequential fallback.

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// How Monte Carlo runs are scheduled. Results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    /// Rayon work pool when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Parallel,
    Sequential,
}

/// Maps `f` over run indices `0..n`, keeping results in run order. The first
/// failing run (by index) determines the error.
pub fn map_runs<T, F>(n: usize, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            let results: Vec<Result<T>> = (0..n).into_par_iter().map(&f).collect();
            results.into_iter().collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn order_and_error_are_schedule_independent() {
        let par = map_runs(100, Execution::Parallel, |i| Ok(i * i)).unwrap();
        let seq = map_runs(100, Execution::Sequential, |i| Ok(i * i)).unwrap();
        assert_eq!(par, seq);
        let fail = |i: usize| {
            if i % 7 == 3 {
                Err(Error::InvalidParameter(format!("run {i}")))
            } else {
                Ok(i)
            }
        };
        for exec in [Execution::Parallel, Execution::Sequential] {
            match map_runs(50, exec, fail) {
                Err(Error::InvalidParameter(m)) => assert_eq!(m, "run 3"),
                other => panic!("unexpected {other:?}"),
            }
        }
    }
}
