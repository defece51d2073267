use crate::scalar::Scalar;

/// Dense tensor with an explicit shape; data is row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// Element-wise precision cast.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::of_f64(v.as_f64())).collect(),
        }
    }
}

/// Frames × channels activation matrix, row-major by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix<T> {
    pub frames: usize,
    pub channels: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> FrameMatrix<T> {
    pub fn zeros(frames: usize, channels: usize) -> Self {
        FrameMatrix {
            frames,
            channels,
            data: vec![T::zero(); frames * channels],
        }
    }

    pub fn from_rows(frames: usize, channels: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), frames * channels);
        FrameMatrix {
            frames,
            channels,
            data,
        }
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[T] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    #[inline]
    pub fn row_mut(&mut self, t: usize) -> &mut [T] {
        &mut self.data[t * self.channels..(t + 1) * self.channels]
    }
}
