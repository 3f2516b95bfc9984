//! Execution policy for the data-parallel kernels.
//!
//! With the `parallel` feature (default) the [`Execution::Parallel`] policy
//! fans work out over rayon's pool. Without it every policy runs on the
//! calling thread, so results never depend on the feature set.

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread over several threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps `f` over `0..n`, preserving order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Calls `f(chunk_index, chunk)` on consecutive `chunk`-sized pieces of `data`.
    pub fn for_each_chunk<T, F>(self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }

    /// Sum of `f(i)` over `0..n`. Parallel reduction order is not fixed, so
    /// the last bits may differ from the sequential sum.
    pub fn sum<F>(self, n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).sum();
        }
        (0..n).map(f).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let a = Execution::Sequential.map(100, |i| i * i);
        let b = Execution::Parallel.map(100, |i| i * i);
        assert_eq!(a, b);

        let mut x = vec![0usize; 12];
        Execution::Parallel.for_each_chunk(&mut x, 4, |k, c| c.iter_mut().for_each(|v| *v = k));
        assert_eq!(x, vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
    }
}
