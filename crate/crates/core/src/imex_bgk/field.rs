use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kinetic::{moments, primitive_from_conserved, ConservedState, VelocityGrid};
use crate::space_fv::{Boundary, Legendre3, RowBc, SpatialMesh, StateBc};

/// Cell averages `f_{j,k}` stored velocity-major: `values[k * n_x + j]`,
/// so each velocity row is contiguous for transport.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticField {
    values: Vec<f64>,
    mesh: SpatialMesh,
    grid: VelocityGrid,
    pub time: f64,
    ghosts: Option<Ghosts>,
}

/// Frozen boundary data: the outermost initial cell of each row repeated.
#[derive(Debug, Clone, PartialEq)]
struct Ghosts {
    left: Vec<f64>,
    right: Vec<f64>,
}

impl KineticField {
    pub fn new(values: Vec<f64>, mesh: SpatialMesh, grid: VelocityGrid) -> Result<Self> {
        if values.len() != mesh.n_x() * grid.n_v() {
            return Err(Error::InvalidMesh(format!(
                "expected {} values, got {}",
                mesh.n_x() * grid.n_v(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite initial value at index {i}")));
        }
        let n_x = mesh.n_x();
        let ghosts = (mesh.boundary() == Boundary::DirichletGhost).then(|| Ghosts {
            left: (0..grid.n_v()).map(|k| values[k * n_x]).collect(),
            right: (0..grid.n_v()).map(|k| values[k * n_x + n_x - 1]).collect(),
        });
        Ok(KineticField {
            values,
            mesh,
            grid,
            time: 0.0,
            ghosts,
        })
    }

    /// Cell averages in `x` of `f(x, .)`, by the 3-point Gauss rule per cell.
    /// `f` fills the nodal values for one `x`.
    pub fn from_fn(
        mesh: SpatialMesh,
        grid: VelocityGrid,
        mut f: impl FnMut(f64, &mut [f64]) -> Result<()>,
    ) -> Result<Self> {
        let (n_x, n_v) = (mesh.n_x(), grid.n_v());
        let mut values = vec![0.0; n_x * n_v];
        let mut buf = vec![0.0; n_v];
        for j in 0..n_x {
            for (x, w) in mesh.gauss_nodes(j).into_iter().zip(Legendre3::WEIGHTS) {
                f(x, &mut buf)?;
                for k in 0..n_v {
                    values[k * n_x + j] += w * buf[k];
                }
            }
        }
        Self::new(values, mesh, grid)
    }

    pub fn mesh(&self) -> &SpatialMesh {
        &self.mesh
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn n_x(&self) -> usize {
        self.mesh.n_x()
    }

    pub fn n_v(&self) -> usize {
        self.grid.n_v()
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[k * self.mesh.n_x() + j]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.mesh.n_x();
        &self.values[k * n..(k + 1) * n]
    }

    /// Velocity profile of cell `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        let n = self.mesh.n_x();
        (0..self.grid.n_v()).map(|k| self.values[k * n + j]).collect()
    }

    pub fn row_bc(&self, k: usize) -> RowBc {
        row_bc(self.ghosts.as_ref(), k)
    }

    pub fn state_bc(&self) -> StateBc {
        match &self.ghosts {
            None => StateBc::Periodic,
            Some(g) => StateBc::Frozen {
                left: [moments(&g.left, &self.grid); 3],
                right: [moments(&g.right, &self.grid); 3],
            },
        }
    }

    pub(crate) fn row_bcs(&self) -> Vec<RowBc> {
        (0..self.grid.n_v()).map(|k| self.row_bc(k)).collect()
    }

    /// Same mesh, grid and boundary data with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        KineticField {
            values,
            mesh: self.mesh,
            grid: self.grid.clone(),
            time: self.time,
            ghosts: self.ghosts.clone(),
        }
    }

    pub fn cell_moments(&self) -> Vec<ConservedState> {
        cell_moments(&self.values, self.mesh.n_x(), &self.grid)
    }

    /// `dx * sum_j U_j`, summed in ascending `j`.
    pub fn totals(&self) -> ConservedState {
        let dx = self.mesh.dx();
        self.cell_moments()
            .iter()
            .fold(ConservedState::ZERO, |acc, u| acc.add(*u))
            .scaled(dx)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn negative_count(&self) -> usize {
        self.values.iter().filter(|&&x| x < 0.0).count()
    }

    /// CSV with columns `x,rho,u,T`; `u` and `T` are NaN where the moments
    /// are not admissible.
    pub fn snapshot_csv(&self) -> String {
        let mut s = String::from("x,rho,u,T\n");
        for (j, u) in self.cell_moments().iter().enumerate() {
            let (vel, t) = primitive_from_conserved(*u)
                .map(|p| (p.u, p.temperature))
                .unwrap_or((f64::NAN, f64::NAN));
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.mesh.center(j),
                u.rho,
                vel,
                t
            ));
        }
        s
    }

    /// Raw dump: `n_x * n_v` little-endian `f64`, cell-major (`j` outer,
    /// `k` inner).
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for j in 0..self.n_x() {
            for k in 0..self.n_v() {
                out.write_all(&self.get(j, k).to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_binary(path: impl AsRef<Path>, mesh: SpatialMesh, grid: VelocityGrid) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let (n_x, n_v) = (mesh.n_x(), grid.n_v());
        if bytes.len() != 8 * n_x * n_v {
            return Err(Error::InvalidMesh(format!(
                "dump has {} bytes, expected {}",
                bytes.len(),
                8 * n_x * n_v
            )));
        }
        let mut values = vec![0.0; n_x * n_v];
        for (i, chunk) in bytes.chunks_exact(8).enumerate() {
            let (j, k) = (i / n_v, i % n_v);
            values[k * n_x + j] = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
        Self::new(values, mesh, grid)
    }
}

fn row_bc(ghosts: Option<&Ghosts>, k: usize) -> RowBc {
    match ghosts {
        None => RowBc::Periodic,
        Some(g) => RowBc::Frozen {
            left: [g.left[k]; 3],
            right: [g.right[k]; 3],
        },
    }
}

/// Per-cell moments of a velocity-major array, each summed in ascending `k`.
pub(crate) fn cell_moments(values: &[f64], n_x: usize, grid: &VelocityGrid) -> Vec<ConservedState> {
    let mut acc = vec![[0.0f64; 3]; n_x];
    for (k, &v) in grid.nodes().iter().enumerate() {
        let row = &values[k * n_x..(k + 1) * n_x];
        let v2 = v * v;
        for (a, &f) in acc.iter_mut().zip(row) {
            a[0] += f;
            a[1] += f * v;
            a[2] += f * v2;
        }
    }
    let dv = grid.dv();
    acc.into_iter()
        .map(|a| ConservedState::new(a[0] * dv, a[1] * dv, 0.5 * a[2] * dv))
        .collect()
}
