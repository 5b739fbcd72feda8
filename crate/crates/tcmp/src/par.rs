//! Internal data-parallel map with a sequential fallback.
//!
//! The sweeps in `analysis` and `solver` are independent per element,
//! so they dispatch through here: rayon when the `parallel` feature is
//! enabled, a plain loop otherwise. Results preserve input order.

#[cfg(feature = "parallel")]
pub(crate) fn map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Sequential map kept unconditionally so benchmarks can compare the
/// two paths within a single build.
pub(crate) fn map_seq<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}
