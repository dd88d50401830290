use crate::symkernel::{ChartRef, ScalarFn};

/// Dense multi-index array of polynomials, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CompArray {
    shape: Vec<usize>,
    data: Vec<ScalarFn>,
}

impl CompArray {
    pub fn zeros(chart: &ChartRef, shape: &[usize]) -> CompArray {
        let n = shape.iter().product();
        CompArray {
            shape: shape.to_vec(),
            data: vec![ScalarFn::zero(chart); n],
        }
    }

    pub fn from_fn<F: FnMut(&[usize]) -> ScalarFn>(shape: &[usize], mut f: F) -> CompArray {
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0; shape.len()];
        for _ in 0..n {
            data.push(f(&idx));
            for k in (0..shape.len()).rev() {
                idx[k] += 1;
                if idx[k] < shape[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        CompArray {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<ScalarFn>) -> CompArray {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "array shape mismatch"
        );
        CompArray {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[ScalarFn] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [ScalarFn] {
        &mut self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut o = 0;
        for (i, n) in idx.iter().zip(&self.shape) {
            debug_assert!(i < n);
            o = o * n + i;
        }
        o
    }

    pub fn get(&self, idx: &[usize]) -> &ScalarFn {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: ScalarFn) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|f| f.is_zero())
    }

    pub fn unravel(&self, mut o: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        for k in (0..self.shape.len()).rev() {
            idx[k] = o % self.shape[k];
            o /= self.shape[k];
        }
        idx
    }

    /// Nonzero entries with their multi-indices.
    pub fn nonzero(&self) -> Vec<(Vec<usize>, &ScalarFn)> {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.is_zero())
            .map(|(o, f)| (self.unravel(o), f))
            .collect()
    }

    pub fn sub(&self, o: &CompArray) -> CompArray {
        assert_eq!(self.shape, o.shape);
        CompArray {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, o: &CompArray) -> CompArray {
        assert_eq!(self.shape, o.shape);
        CompArray {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        }
    }
}
