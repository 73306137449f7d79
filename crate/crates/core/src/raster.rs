//! Dense row-major rasters on the pixel grid.
//!
//! Rows are indexed by `u` (pointing downwards) and columns by `v` (pointing
//! to the right).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Clone> Raster<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {height}x{width} raster",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for u in 0..height {
            for v in 0..width {
                data.push(f(u, v));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn map<S: Clone>(&self, f: impl Fn(&T) -> S) -> Raster<S> {
        Raster {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T> Raster<T> {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, u: usize, v: usize) -> &T {
        &self.data[u * self.width + v]
    }

    pub fn get_mut(&mut self, u: usize, v: usize) -> &mut T {
        &mut self.data[u * self.width + v]
    }

    pub fn set(&mut self, u: usize, v: usize, value: T) {
        self.data[u * self.width + v] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn same_shape<S>(&self, other: &Raster<S>) -> bool {
        self.shape() == other.shape()
    }
}

impl<T: Copy> Raster<T> {
    pub fn at(&self, u: usize, v: usize) -> T {
        self.data[u * self.width + v]
    }
}

pub(crate) fn ensure_same_shape<A, B>(a: &Raster<A>, b: &Raster<B>, what: &str) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what}: {}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )))
    }
}
