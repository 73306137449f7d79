//! Masked reconstruction domain, its linear indexing and the directional
//! sub-domains on which forward/backward differences exist.

use crate::error::{Error, Result};
use crate::raster::Raster;

/// Boolean raster: `true` marks a pixel belonging to the reconstruction domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMask {
    inside: Raster<bool>,
}

impl DomainMask {
    pub fn new(inside: Raster<bool>) -> Result<Self> {
        if !inside.as_slice().iter().any(|&b| b) {
            return Err(Error::EmptyDomain);
        }
        Ok(Self { inside })
    }

    /// Every pixel of a `height` x `width` grid is inside.
    pub fn full(height: usize, width: usize) -> Result<Self> {
        Self::new(Raster::filled(height, width, true))
    }

    pub fn from_fn(height: usize, width: usize, f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        Self::new(Raster::from_fn(height, width, f))
    }

    pub fn height(&self) -> usize {
        self.inside.height()
    }

    pub fn width(&self) -> usize {
        self.inside.width()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.inside.shape()
    }

    /// Bounds-checked membership test on signed coordinates.
    pub fn contains(&self, u: isize, v: isize) -> bool {
        u >= 0
            && v >= 0
            && (u as usize) < self.height()
            && (v as usize) < self.width()
            && self.inside.at(u as usize, v as usize)
    }

    pub fn is_inside(&self, u: usize, v: usize) -> bool {
        self.inside.at(u, v)
    }

    pub fn count(&self) -> usize {
        self.inside.as_slice().iter().filter(|&&b| b).count()
    }

    pub fn raster(&self) -> &Raster<bool> {
        &self.inside
    }
}

/// Bijection between inside pixels and linear indices `0..|Ω|`.
///
/// Inside pixels are enumerated column by column (all rows of column 0 first),
/// so the 3x3 example with the corner (3,3) removed yields
/// `z11, z21, z31, z12, z22, z32, z13, z23`.
#[derive(Debug, Clone)]
pub struct IndexMap {
    forward: Raster<Option<usize>>,
    backward: Vec<(usize, usize)>,
}

impl IndexMap {
    pub fn index_of(&self, u: usize, v: usize) -> Option<usize> {
        *self.forward.get(u, v)
    }

    pub fn pixel(&self, i: usize) -> (usize, usize) {
        self.backward[i]
    }

    pub fn len(&self) -> usize {
        self.backward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.backward.is_empty()
    }

    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.backward
    }
}

pub fn build_index_map(mask: &DomainMask) -> Result<IndexMap> {
    let (h, w) = mask.shape();
    let mut forward = Raster::filled(h, w, None);
    let mut backward = Vec::with_capacity(mask.count());
    for v in 0..w {
        for u in 0..h {
            if mask.is_inside(u, v) {
                forward.set(u, v, Some(backward.len()));
                backward.push((u, v));
            }
        }
    }
    if backward.is_empty() {
        return Err(Error::EmptyDomain);
    }
    Ok(IndexMap { forward, backward })
}

/// One of the four first-order finite-difference directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    UPlus,
    UMinus,
    VPlus,
    VMinus,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::UPlus,
        Direction::UMinus,
        Direction::VPlus,
        Direction::VMinus,
    ];

    pub fn slot(self) -> usize {
        match self {
            Direction::UPlus => 0,
            Direction::UMinus => 1,
            Direction::VPlus => 2,
            Direction::VMinus => 3,
        }
    }

    /// Grid offset `(du, dv)` of the neighbour used by this difference.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Direction::UPlus => (1, 0),
            Direction::UMinus => (-1, 0),
            Direction::VPlus => (0, 1),
            Direction::VMinus => (0, -1),
        }
    }

    pub fn is_u(self) -> bool {
        matches!(self, Direction::UPlus | Direction::UMinus)
    }

    pub fn is_forward(self) -> bool {
        matches!(self, Direction::UPlus | Direction::VPlus)
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::UPlus => Direction::UMinus,
            Direction::UMinus => Direction::UPlus,
            Direction::VPlus => Direction::VMinus,
            Direction::VMinus => Direction::VPlus,
        }
    }
}

/// The four `(U, V)` sign combinations; `Ω^{UV} = Ω_u^U ∩ Ω_v^V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DirectionPair {
    pub u: Direction,
    pub v: Direction,
}

impl DirectionPair {
    pub const ALL: [DirectionPair; 4] = [
        DirectionPair {
            u: Direction::UPlus,
            v: Direction::VPlus,
        },
        DirectionPair {
            u: Direction::UPlus,
            v: Direction::VMinus,
        },
        DirectionPair {
            u: Direction::UMinus,
            v: Direction::VPlus,
        },
        DirectionPair {
            u: Direction::UMinus,
            v: Direction::VMinus,
        },
    ];

    pub fn slot(self) -> usize {
        (self.u.slot()) * 2 + (self.v.slot() - 2)
    }
}

/// Membership of every inside pixel in `Ω_u^±`, `Ω_v^±` and the four
/// intersections `Ω^{UV}`, stored per linear index.
#[derive(Debug, Clone)]
pub struct DirectionalSubdomains {
    neighbor: [Vec<Option<usize>>; 4],
    pairs: [Vec<bool>; 4],
}

impl DirectionalSubdomains {
    /// Linear index of the neighbour used by `dir` at pixel `i`, if it is inside.
    pub fn neighbor(&self, dir: Direction, i: usize) -> Option<usize> {
        self.neighbor[dir.slot()][i]
    }

    pub fn contains(&self, dir: Direction, i: usize) -> bool {
        self.neighbor[dir.slot()][i].is_some()
    }

    pub fn pair_contains(&self, pair: DirectionPair, i: usize) -> bool {
        self.pairs[pair.slot()][i]
    }

    pub fn count(&self, dir: Direction) -> usize {
        self.neighbor[dir.slot()].iter().filter(|n| n.is_some()).count()
    }

    pub fn pair_count(&self, pair: DirectionPair) -> usize {
        self.pairs[pair.slot()].iter().filter(|&&b| b).count()
    }

    /// Pixels of `Ω_dir`, in linear-index order.
    pub fn pixels(&self, dir: Direction, index: &IndexMap) -> Vec<(usize, usize)> {
        (0..index.len())
            .filter(|&i| self.contains(dir, i))
            .map(|i| index.pixel(i))
            .collect()
    }

    pub fn pair_pixels(&self, pair: DirectionPair, index: &IndexMap) -> Vec<(usize, usize)> {
        (0..index.len())
            .filter(|&i| self.pair_contains(pair, i))
            .map(|i| index.pixel(i))
            .collect()
    }

    /// Number of inside 4-neighbours of pixel `i`.
    pub fn degree(&self, i: usize) -> usize {
        Direction::ALL.iter().filter(|&&d| self.contains(d, i)).count()
    }
}

pub fn neighbor_subdomains(mask: &DomainMask, index: &IndexMap) -> DirectionalSubdomains {
    let n = index.len();
    let neighbor = Direction::ALL.map(|dir| {
        let (du, dv) = dir.offset();
        (0..n)
            .map(|i| {
                let (u, v) = index.pixel(i);
                let (nu, nv) = (u as isize + du, v as isize + dv);
                if mask.contains(nu, nv) {
                    index.index_of(nu as usize, nv as usize)
                } else {
                    None
                }
            })
            .collect::<Vec<_>>()
    });
    let pairs = DirectionPair::ALL.map(|pair| {
        (0..n)
            .map(|i| neighbor[pair.u.slot()][i].is_some() && neighbor[pair.v.slot()][i].is_some())
            .collect::<Vec<_>>()
    });
    DirectionalSubdomains { neighbor, pairs }
}

/// Mask, index map and sub-domains bundled together; immutable once built.
#[derive(Debug, Clone)]
pub struct Domain {
    mask: DomainMask,
    index: IndexMap,
    sub: DirectionalSubdomains,
}

impl Domain {
    pub fn new(mask: DomainMask) -> Result<Self> {
        let index = build_index_map(&mask)?;
        let sub = neighbor_subdomains(&mask, &index);
        Ok(Self { mask, index, sub })
    }

    pub fn mask(&self) -> &DomainMask {
        &self.mask
    }

    pub fn index(&self) -> &IndexMap {
        &self.index
    }

    pub fn subdomains(&self) -> &DirectionalSubdomains {
        &self.sub
    }

    /// `|Ω|`.
    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.mask.shape()
    }

    /// Values of `raster` at inside pixels, in linear-index order.
    pub fn gather<T: Copy>(&self, raster: &Raster<T>) -> Result<Vec<T>> {
        if raster.shape() != self.shape() {
            return Err(Error::DimensionMismatch(format!(
                "raster {}x{} on a {}x{} domain",
                raster.height(),
                raster.width(),
                self.shape().0,
                self.shape().1
            )));
        }
        Ok(self.index.pixels().iter().map(|&(u, v)| raster.at(u, v)).collect())
    }

    /// Inverse of [`Domain::gather`]; pixels outside the domain get `fill`.
    pub fn scatter<T: Copy>(&self, values: &[T], fill: T) -> Raster<T> {
        let (h, w) = self.shape();
        let mut out = Raster::filled(h, w, fill);
        for (i, &(u, v)) in self.index.pixels().iter().enumerate() {
            out.set(u, v, values[i]);
        }
        out
    }

    /// Connected-component label of every pixel (4-connectivity) and the
    /// number of components.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.len();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for seed in 0..n {
            if label[seed] != usize::MAX {
                continue;
            }
            label[seed] = count;
            stack.push(seed);
            while let Some(i) = stack.pop() {
                for dir in Direction::ALL {
                    if let Some(j) = self.sub.neighbor(dir, i) {
                        if label[j] == usize::MAX {
                            label[j] = count;
                            stack.push(j);
                        }
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    /// Linear indices of pixels with no inside neighbour at all.
    pub fn isolated_pixels(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.sub.degree(i) == 0).collect()
    }
}
