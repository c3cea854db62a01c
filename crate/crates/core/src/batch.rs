//! Deterministic batch execution, parallel when the `parallel` feature is on.
//!
//! Results are always returned in index order, so parallel and sequential
//! runs of the same closure produce identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Runs `f` over `0..n` and collects results in index order.
pub fn run_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential twin of [`run_indexed`], kept for benchmark comparisons.
pub fn run_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Fallible variant; stops at the first error (parallel runs may execute
/// further items before observing it, but the returned error is valid).
pub fn try_run_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_matches_sequential() {
        let f = |i: usize| (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
        assert_eq!(run_indexed(1000, f), run_indexed_seq(1000, f));
    }

    #[test]
    fn fallible_propagates_error() {
        let r: Result<Vec<u32>, &str> =
            try_run_indexed(10, |i| if i == 7 { Err("boom") } else { Ok(i as u32) });
        assert_eq!(r, Err("boom"));
    }
}
