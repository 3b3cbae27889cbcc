//! Densities tabulated on a uniform grid of cells, with optional point masses.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::numeric::compensated_sum;
use crate::stats::Law;

/// A point mass of the law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

/// Cell-averaged density on uniform cells plus point masses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityGrid {
    /// Cell centers, ascending and uniformly spaced.
    pub centers: Vec<f64>,
    /// Density per unit length in each cell.
    pub values: Vec<f64>,
    pub atoms: Vec<Atom>,
    pub time: f64,
}

impl DensityGrid {
    /// Grid of `n_cells` uniform cells spanning `[x_min, x_max]`, all zero.
    pub fn zeros(x_min: f64, x_max: f64, n_cells: usize, time: f64) -> Result<Self> {
        if n_cells < 2 || !(x_max > x_min) {
            return domain("a density grid needs at least two cells on a nonempty interval");
        }
        let dx = (x_max - x_min) / n_cells as f64;
        Ok(Self {
            centers: (0..n_cells).map(|i| x_min + (i as f64 + 0.5) * dx).collect(),
            values: vec![0.0; n_cells],
            atoms: Vec::new(),
            time,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dx(&self) -> f64 {
        match self.centers.len() {
            0 | 1 => 0.0,
            n => (self.centers[n - 1] - self.centers[0]) / (n - 1) as f64,
        }
    }

    pub fn x_min(&self) -> f64 {
        self.centers[0] - 0.5 * self.dx()
    }

    pub fn x_max(&self) -> f64 {
        self.centers[self.centers.len() - 1] + 0.5 * self.dx()
    }

    /// Index of the cell containing `x`, clamped to the grid.
    pub fn cell_of(&self, x: f64) -> usize {
        let i = ((x - self.x_min()) / self.dx()).floor();
        (i.max(0.0) as usize).min(self.len() - 1)
    }

    /// Mass carried by the cells.
    pub fn cell_mass(&self) -> f64 {
        compensated_sum(&self.values) * self.dx()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.cell_mass() + self.atom_mass()
    }

    /// `Σ (x-c)^2 p Δx + Σ m (x-c)^2` about `origin`.
    pub fn second_moment(&self, origin: f64) -> f64 {
        let dx = self.dx();
        let cells: Vec<f64> = self
            .centers
            .iter()
            .zip(&self.values)
            .map(|(x, p)| (x - origin).powi(2) * p * dx)
            .collect();
        compensated_sum(&cells)
            + self
                .atoms
                .iter()
                .map(|a| a.mass * (a.position - origin).powi(2))
                .sum::<f64>()
    }

    /// Copy with every atom spread uniformly over the cell containing it.
    pub fn with_atoms_in_cells(&self) -> Self {
        let mut out = self.clone();
        let dx = self.dx();
        for atom in &self.atoms {
            let i = self.cell_of(atom.position);
            out.values[i] += atom.mass / dx;
        }
        out.atoms.clear();
        out
    }

    /// Distribution function of the tabulated law, piecewise linear inside
    /// cells with jumps at the atoms.
    pub fn law(&self) -> GridLaw {
        let dx = self.dx();
        let mut prefix = Vec::with_capacity(self.len() + 1);
        let mut acc = crate::numeric::NeumaierSum::default();
        prefix.push(0.0);
        for p in &self.values {
            acc.add(p * dx);
            prefix.push(acc.value());
        }
        let mut atoms = self.atoms.clone();
        atoms.sort_by(|a, b| a.position.total_cmp(&b.position));
        GridLaw {
            x_min: self.x_min(),
            dx,
            prefix,
            atoms,
        }
    }
}

/// Precomputed distribution function of a [`DensityGrid`].
#[derive(Debug, Clone)]
pub struct GridLaw {
    x_min: f64,
    dx: f64,
    prefix: Vec<f64>,
    atoms: Vec<Atom>,
}

impl GridLaw {
    fn cells_below(&self, x: f64) -> f64 {
        let n = self.prefix.len() - 1;
        let s = (x - self.x_min) / self.dx;
        if s <= 0.0 {
            return 0.0;
        }
        if s >= n as f64 {
            return self.prefix[n];
        }
        let i = s.floor() as usize;
        let frac = s - i as f64;
        self.prefix[i] + frac * (self.prefix[i + 1] - self.prefix[i])
    }
}

impl Law for GridLaw {
    fn cdf(&self, x: f64) -> f64 {
        self.cells_below(x)
            + self
                .atoms
                .iter()
                .filter(|a| a.position <= x)
                .map(|a| a.mass)
                .sum::<f64>()
    }

    fn cdf_left(&self, x: f64) -> f64 {
        self.cells_below(x)
            + self
                .atoms
                .iter()
                .filter(|a| a.position < x)
                .map(|a| a.mass)
                .sum::<f64>()
    }
}
