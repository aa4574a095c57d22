//! Execution-mode facade over the optional `parallel` feature.
//!
//! Hot loops (per-sentence gradients, fold scoring, embedding training) are
//! expressed as maps over independent items. With the `parallel` feature the
//! maps run on the rayon pool; without it they degrade to plain iteration.
//! [`ordered_map`] preserves input order, so reductions over its output are
//! bit-identical in both modes.

/// How data-parallel sections should run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    /// Plain iteration on the calling thread.
    Sequential,
    /// Rayon data parallelism. Falls back to sequential when the crate is
    /// built without the `parallel` feature.
    Parallel,
}

impl ExecMode {
    /// `threads <= 1` selects the sequential mode.
    pub fn from_threads(threads: usize) -> Self {
        if threads <= 1 {
            ExecMode::Sequential
        } else {
            ExecMode::Parallel
        }
    }
}

/// Size the global rayon pool. Only the first call takes effect; later calls
/// are ignored, matching rayon's one-time global initialization.
pub fn configure_thread_pool(threads: usize) {
    #[cfg(feature = "parallel")]
    if threads > 1 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

/// Derive a per-task RNG seed from a base seed and two indices
/// (splitmix64 finalizer), so parallel schedules reuse the exact draws of
/// the sequential ones.
pub(crate) fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Map `f` over `items`, returning results in input order.
pub fn ordered_map<T, R, F>(mode: ExecMode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel {
        use rayon::prelude::*;
        return items.par_iter().map(&f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}

/// Run `f` for every index in `0..n`, with no ordering guarantee.
///
/// Used for lock-free shared-parameter updates where racing writes are an
/// accepted part of the algorithm; not for anything that must reproduce.
pub fn for_each_index<F>(mode: ExecMode, n: usize, f: F)
where
    F: Fn(usize) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel {
        use rayon::prelude::*;
        (0..n).into_par_iter().for_each(f);
        return;
    }
    let _ = mode;
    (0..n).for_each(f);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_map_preserves_order() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = ordered_map(ExecMode::Sequential, &items, |x| x * 3);
        let par = ordered_map(ExecMode::Parallel, &items, |x| x * 3);
        assert_eq!(seq, par);
        assert_eq!(seq[999], 2997);
    }

    #[test]
    fn ordered_map_is_bit_identical_for_floats() {
        let items: Vec<f64> = (0..512).map(|i| (i as f64).sin()).collect();
        let f = |x: &f64| x.exp().ln_1p();
        let seq = ordered_map(ExecMode::Sequential, &items, f);
        let par = ordered_map(ExecMode::Parallel, &items, f);
        let sum_seq: f64 = seq.iter().sum();
        let sum_par: f64 = par.iter().sum();
        assert_eq!(sum_seq.to_bits(), sum_par.to_bits());
    }
}
