//! Execution policy for the data-parallel loops.
//!
//! With the `parallel` feature (default) the parallel policy dispatches to
//! rayon. Without it, [`Exec::Parallel`] silently degrades to the sequential
//! loop so callers never need their own `cfg` gates. Both policies produce
//! bit-identical results: work is split into independent items and results
//! are always gathered in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether this policy actually runs on more than one thread.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Calls `f(chunk_index, chunk)` for every `chunk_len`-sized chunk of `data`.
    pub fn for_each_chunk_mut<T, F>(self, data: &mut [T], chunk_len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        assert!(chunk_len > 0);
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            data.par_chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        data.chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }

    /// Maps `f` over `chunk_len`-sized chunks of `data`, returning results in chunk order.
    pub fn map_chunks<T, R, F>(self, data: &[T], chunk_len: usize, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &[T]) -> R + Sync + Send,
    {
        assert!(chunk_len > 0);
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return data
                .par_chunks(chunk_len)
                .enumerate()
                .map(|(i, c)| f(i, c))
                .collect();
        }
        data.chunks(chunk_len)
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect()
    }

    /// Maps `f` over `items`, returning results in input order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let data: Vec<u64> = (0..1000).collect();
        let seq = Exec::Sequential.map_chunks(&data, 7, |i, c| (i, c.iter().sum::<u64>()));
        let par = Exec::Parallel.map_chunks(&data, 7, |i, c| (i, c.iter().sum::<u64>()));
        assert_eq!(seq, par);

        let mut a = data.clone();
        let mut b = data.clone();
        Exec::Sequential.for_each_chunk_mut(&mut a, 10, |i, c| c.iter_mut().for_each(|x| *x *= i as u64));
        Exec::Parallel.for_each_chunk_mut(&mut b, 10, |i, c| c.iter_mut().for_each(|x| *x *= i as u64));
        assert_eq!(a, b);
    }
}
