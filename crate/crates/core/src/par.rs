//! Data-parallel helpers. With the `parallel` feature these run on rayon's
//! global pool; without it they fall back to plain iterators.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

pub fn filter_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Option<U> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().filter_map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().filter_map(f).collect()
    }
}

/// Sums per-item count vectors of width `N`.
pub fn tally<T, const N: usize, F>(items: &[T], f: F) -> [u64; N]
where
    T: Sync,
    F: Fn(&T) -> [u64; N] + Sync + Send,
{
    let add = |mut a: [u64; N], b: [u64; N]| {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
        a
    };
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).reduce(|| [0; N], add)
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).fold([0; N], add)
    }
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
