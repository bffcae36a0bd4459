//! Data-parallel helpers. With the `parallel` feature (default) these
//! dispatch to rayon; without it they run sequentially with identical
//! results, since every helper writes disjoint outputs.

/// Vertex counts below this are filled sequentially even when rayon is on.
pub const MIN_PARALLEL_LEN: usize = 4096;

#[cfg(feature = "parallel")]
pub fn fill_indexed<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    use rayon::prelude::*;
    if out.len() < MIN_PARALLEL_LEN {
        out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
    } else {
        out.par_iter_mut()
            .with_min_len(1024)
            .enumerate()
            .for_each(|(i, o)| *o = f(i));
    }
}

#[cfg(not(feature = "parallel"))]
pub fn fill_indexed<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
}

/// Runs two closures, concurrently when rayon is available.
#[cfg(feature = "parallel")]
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    rayon::join(a, b)
}

#[cfg(not(feature = "parallel"))]
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    (a(), b())
}

/// Maps `f` over `items`, in parallel when rayon is available. Output order
/// matches input order.
#[cfg(feature = "parallel")]
pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// `max_{i < n} f(i)`, or `-inf` when `n == 0`.
#[cfg(feature = "parallel")]
pub fn max_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    use rayon::prelude::*;
    if n < MIN_PARALLEL_LEN {
        (0..n).map(f).fold(f64::NEG_INFINITY, f64::max)
    } else {
        (0..n)
            .into_par_iter()
            .with_min_len(1024)
            .map(f)
            .reduce(|| f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(not(feature = "parallel"))]
pub fn max_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    (0..n).map(f).fold(f64::NEG_INFINITY, f64::max)
}

/// Caps the global worker pool. A no-op without the `parallel` feature.
pub fn init_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

/// Runs `f` inside a dedicated pool of `n` workers. Without the `parallel`
/// feature this just calls `f`.
pub fn with_threads<R, F>(n: usize, f: F) -> R
where
    F: FnOnce() -> R + Send,
    R: Send,
{
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        f()
    }
}
