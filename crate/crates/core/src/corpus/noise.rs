use rand::Rng;

/// Number of swaps applied to a sentence of `len` tokens during denoising.
pub fn swap_count(len: usize) -> usize {
    ((0.05 * len as f64).floor() as usize).max(1)
}

/// Exchanges `n_swaps` uniformly drawn pairs of distinct positions. The count
/// is clipped to `len / 2`.
pub fn corrupt_swap<T: Clone, R: Rng>(tokens: &[T], n_swaps: usize, rng: &mut R) -> Vec<T> {
    let mut out = tokens.to_vec();
    let len = out.len();
    for _ in 0..n_swaps.min(len / 2) {
        let i = rng.gen_range(0..len);
        let mut j = rng.gen_range(0..len - 1);
        if j >= i {
            j += 1;
        }
        out.swap(i, j);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basic_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(corrupt_swap(&["a", "b", "c"], 0, &mut rng), ["a", "b", "c"]);
        assert_eq!(corrupt_swap(&["a", "b"], 1, &mut rng), ["b", "a"]);
        assert_eq!(corrupt_swap(&["a"], 3, &mut rng), ["a"]);
        assert_eq!(corrupt_swap::<&str, _>(&[], 3, &mut rng), Vec::<&str>::new());
    }

    #[test]
    fn counts() {
        assert_eq!(swap_count(1), 1);
        assert_eq!(swap_count(19), 1);
        assert_eq!(swap_count(40), 2);
        assert_eq!(swap_count(73), 3);
    }
}
