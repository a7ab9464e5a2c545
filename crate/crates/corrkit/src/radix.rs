//! Mixed-radix tuple indexing with the first position most significant.

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Radix {
    dims: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl Radix {
    /// Panics if the product overflows `usize`.
    pub fn new(dims: &[usize]) -> Radix {
        let mut strides = vec![0; dims.len()];
        let mut acc: usize = 1;
        for k in (0..dims.len()).rev() {
            strides[k] = acc;
            acc = acc.checked_mul(dims[k]).expect("tuple space overflows usize");
        }
        Radix { dims: dims.to_vec(), strides, size: acc }
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, k: usize) -> usize {
        self.dims[k]
    }

    pub fn stride(&self, k: usize) -> usize {
        self.strides[k]
    }

    #[inline]
    pub fn digit(&self, idx: usize, k: usize) -> usize {
        (idx / self.strides[k]) % self.dims[k]
    }

    pub fn tuple(&self, idx: usize) -> Vec<usize> {
        (0..self.dims.len()).map(|k| self.digit(idx, k)).collect()
    }

    pub fn index(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.dims.len());
        tuple.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    /// Index with digit `k` replaced by `v`.
    #[inline]
    pub fn replace(&self, idx: usize, k: usize, v: usize) -> usize {
        idx - self.digit(idx, k) * self.strides[k] + v * self.strides[k]
    }

    /// Radix over all positions except `k`.
    pub fn without(&self, k: usize) -> Radix {
        let dims: Vec<usize> = self.dims.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, d)| *d).collect();
        Radix::new(&dims)
    }

    /// Index in [`Radix::without`]`(k)` of the tuple `idx` with position `k` dropped.
    pub fn drop_digit(&self, idx: usize, k: usize) -> usize {
        let high = idx / (self.strides[k] * self.dims[k]);
        let low = idx % self.strides[k];
        high * self.strides[k] + low
    }

    /// Inverse of [`Radix::drop_digit`]: insert value `v` at position `k`.
    pub fn insert_digit(&self, rest: usize, k: usize, v: usize) -> usize {
        let high = rest / self.strides[k];
        let low = rest % self.strides[k];
        (high * self.dims[k] + v) * self.strides[k] + low
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_order() {
        let r = Radix::new(&[2, 3]);
        assert_eq!(r.size(), 6);
        assert_eq!(r.tuple(0), vec![0, 0]);
        assert_eq!(r.tuple(1), vec![0, 1]);
        assert_eq!(r.tuple(3), vec![1, 0]);
        assert_eq!(r.index(&[1, 2]), 5);
    }

    #[test]
    fn drop_and_insert_round_trip() {
        let r = Radix::new(&[2, 3, 4]);
        for k in 0..3 {
            let w = r.without(k);
            for idx in 0..r.size() {
                let t = r.tuple(idx);
                let mut rest = t.clone();
                rest.remove(k);
                let d = r.drop_digit(idx, k);
                assert_eq!(d, w.index(&rest));
                assert_eq!(r.insert_digit(d, k, t[k]), idx);
            }
        }
    }
}
