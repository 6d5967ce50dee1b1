//! Dense row-major matrix of delays, indexed `[instance][path]`.

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    nc: usize,
    np: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(nc: usize, np: usize) -> Self {
        Self {
            nc,
            np,
            data: vec![0.0; nc * np],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let nc = rows.len();
        let np = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == np), "ragged rows");
        let mut data = Vec::with_capacity(nc * np);
        for row in rows {
            data.extend_from_slice(&row);
        }
        Self { nc, np, data }
    }

    /// Instance count (rows).
    pub fn nc(&self) -> usize {
        self.nc
    }

    /// Path count (columns).
    pub fn np(&self) -> usize {
        self.np
    }

    pub fn get(&self, instance: usize, path: usize) -> f64 {
        self.data[instance * self.np + path]
    }

    pub fn set(&mut self, instance: usize, path: usize, value: f64) {
        self.data[instance * self.np + path] = value;
    }

    pub fn row(&self, instance: usize) -> &[f64] {
        &self.data[instance * self.np..(instance + 1) * self.np]
    }

    pub fn row_mut(&mut self, instance: usize) -> &mut [f64] {
        &mut self.data[instance * self.np..(instance + 1) * self.np]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.np)
    }

    /// A single path's values across all instances (strided copy).
    pub fn column(&self, path: usize) -> Vec<f64> {
        (0..self.nc).map(|i| self.get(i, path)).collect()
    }

    /// Transposed copy, `[path][instance]`. Pair differencing walks paths, so
    /// the transposed layout keeps both operands contiguous.
    pub fn transposed(&self) -> Matrix {
        let mut out = Matrix::zeros(self.np, self.nc);
        for i in 0..self.nc {
            for j in 0..self.np {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            nc: self.nc,
            np: self.np,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}
