//! Uniform 1D/2D grids with zero Dirichlet boundaries and the centred
//! Laplacian stencil.
//!
//! Storage is row-major with `x` (index `j`) varying fastest: the value at
//! `(j, l)` lives at `l * nx + j`. A 1D grid has `ny == 1` and no boundary
//! in the `l` direction.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridShape {
    pub nx: usize,
    pub ny: usize,
}

impl GridShape {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 3 {
            return Err(Error::Invalid(format!("nx = {nx}: need at least 3 points")));
        }
        if ny == 0 || ny == 2 {
            return Err(Error::Invalid(format!(
                "ny = {ny}: use 1 for a line or at least 3 for a plane"
            )));
        }
        Ok(Self { nx, ny })
    }

    pub fn dims(&self) -> usize {
        if self.ny == 1 {
            1
        } else {
            2
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, j: usize, l: usize) -> usize {
        l * self.nx + j
    }

    pub fn is_interior(&self, j: usize, l: usize) -> bool {
        let x_ok = j >= 1 && j + 1 < self.nx;
        if self.ny == 1 {
            x_ok && l == 0
        } else {
            x_ok && l >= 1 && l + 1 < self.ny
        }
    }
}

/// A point value used to build initial conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSource {
    pub j: usize,
    pub l: usize,
    pub value: f64,
}

impl PointSource {
    pub fn new(j: usize, l: usize, value: f64) -> Self {
        Self { j, l, value }
    }
}

/// Scalar field `u` on a uniform grid with spacing `dx` in every direction.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    shape: GridShape,
    dx: f64,
    data: Vec<f64>,
}

impl FieldGrid {
    pub fn zeros(shape: GridShape, dx: f64) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::Domain {
                name: "dx",
                value: dx,
                reason: "must be positive and finite",
            });
        }
        Ok(Self {
            shape,
            dx,
            data: vec![0.0; shape.len()],
        })
    }

    /// Zero grid with the listed interior points set. Points on or beyond
    /// the boundary are rejected.
    pub fn with_sources(shape: GridShape, dx: f64, sources: &[PointSource]) -> Result<Self> {
        let mut grid = Self::zeros(shape, dx)?;
        for s in sources {
            if !shape.is_interior(s.j, s.l) {
                return Err(Error::Invalid(format!(
                    "initial point ({}, {}) is not strictly inside a {}x{} grid",
                    s.j, s.l, shape.nx, shape.ny
                )));
            }
            if !s.value.is_finite() {
                return Err(Error::Invalid(format!(
                    "initial value at ({}, {}) is not finite",
                    s.j, s.l
                )));
            }
            grid.data[shape.index(s.j, s.l)] = s.value;
        }
        Ok(grid)
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, j: usize, l: usize) -> f64 {
        self.data[self.shape.index(j, l)]
    }

    /// Resets every boundary value to zero.
    pub fn apply_dirichlet(&mut self) {
        let GridShape { nx, ny } = self.shape;
        if ny == 1 {
            self.data[0] = 0.0;
            self.data[nx - 1] = 0.0;
            return;
        }
        self.data[..nx].fill(0.0);
        self.data[(ny - 1) * nx..].fill(0.0);
        for l in 1..ny - 1 {
            self.data[l * nx] = 0.0;
            self.data[l * nx + nx - 1] = 0.0;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Multiplies every value by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Grid rows as CSV lines, values with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let nx = self.shape.nx;
        let mut out = String::with_capacity(self.data.len() * 24);
        for row in self.data.chunks(nx) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{}", fmt_real(*v)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`FieldGrid::to_csv`].
    pub fn from_csv(text: &str, dx: f64) -> Result<Self> {
        let mut data = Vec::new();
        let mut nx = None;
        let mut ny = 0;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Invalid(format!("grid csv line {}: {e}", lineno + 1)))?;
            match nx {
                None => nx = Some(row.len()),
                Some(n) if n != row.len() => {
                    return Err(Error::Invalid(format!(
                        "grid csv line {}: expected {n} columns, found {}",
                        lineno + 1,
                        row.len()
                    )))
                }
                _ => {}
            }
            data.extend(row);
            ny += 1;
        }
        let shape = GridShape::new(nx.unwrap_or(0), ny)?;
        let mut grid = Self::zeros(shape, dx)?;
        grid.data = data;
        Ok(grid)
    }

    /// Little-endian bytes of the shape followed by every value; the
    /// canonical serialization used for checksums.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.data.len());
        out.extend_from_slice(&(self.shape.nx as u64).to_le_bytes());
        out.extend_from_slice(&(self.shape.ny as u64).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }
}

/// Real formatted with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Centred-difference Laplacian numerator `δ`, zero on the boundary ring.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelField {
    shape: GridShape,
    data: Vec<f64>,
}

impl KernelField {
    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, j: usize, l: usize) -> f64 {
        self.data[self.shape.index(j, l)]
    }
}

/// `δ_j = u_{j+1} - 2u_j + u_{j-1}` in 1D and the five-point sum
/// `u_{j+1,l} + u_{j-1,l} - 4u_{j,l} + u_{j,l+1} + u_{j,l-1}` in 2D.
pub fn laplacian_kernel(u: &FieldGrid) -> KernelField {
    let shape = u.shape;
    let GridShape { nx, ny } = shape;
    let src = &u.data;
    let mut data = vec![0.0; src.len()];
    if ny == 1 {
        for j in 1..nx - 1 {
            data[j] = src[j + 1] - 2.0 * src[j] + src[j - 1];
        }
    } else {
        for l in 1..ny - 1 {
            let row = l * nx;
            for j in 1..nx - 1 {
                let c = row + j;
                data[c] = src[c + 1] + src[c - 1] - 4.0 * src[c] + src[c + nx] + src[c - nx];
            }
        }
    }
    KernelField { shape, data }
}
