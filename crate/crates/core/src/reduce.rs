//! Fixed-order parallel reductions.
//!
//! Work is split into chunks of a constant size that does not depend on the
//! number of threads, each chunk is reduced sequentially, and chunk partials
//! are combined in a fixed pairwise tree. Results are therefore bit-identical
//! for any thread count.

use rayon::prelude::*;

/// Records per chunk.
pub const CHUNK: usize = 1024;

/// Maps every chunk `[start, end)` of `0..len` in parallel and combines the
/// partials pairwise in index order.
pub fn chunked_tree_reduce<T, M, C>(len: usize, map: M, combine: C) -> Option<T>
where
    T: Send,
    M: Fn(usize, usize) -> T + Sync + Send,
    C: Fn(T, T) -> T,
{
    let n_chunks = len.div_ceil(CHUNK);
    let partials: Vec<T> = (0..n_chunks)
        .into_par_iter()
        .map(|c| map(c * CHUNK, ((c + 1) * CHUNK).min(len)))
        .collect();
    tree_reduce(partials, combine)
}

/// Pairwise reduction: ((a+b)+(c+d))+... in a layout fixed by the input length.
pub fn tree_reduce<T, C>(mut items: Vec<T>, combine: C) -> Option<T>
where
    C: Fn(T, T) -> T,
{
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

/// Pairwise sum of a slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}
