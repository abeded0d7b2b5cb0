//! Data-parallel mapping helper with a sequential fallback.
//!
//! With the `parallel` feature (default) the map runs on the rayon thread
//! pool; without it the same call compiles to a plain sequential iterator.
//! Trait bounds are identical in both builds so downstream code does not
//! change shape with the feature.

#[cfg(feature = "parallel")]
pub fn maybe_par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn maybe_par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_sequential_map() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 * 0.01).collect();
        let mapped = maybe_par_map(&xs, |x| x.sin());
        let expected: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        assert_eq!(mapped, expected);
    }
}
