use crate::design::Design;
use crate::error::{Error, Result};

/// Observations grouped by cell, stored pooled in cell-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    design: Design,
    values: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset whose design is `design` and whose cell `i` holds `cells[i]`.
    /// The cell sizes in `design` must match.
    pub fn new(design: Design, cells: Vec<Vec<f64>>) -> Result<Self> {
        if cells.len() != design.n_cells() {
            return Err(Error::domain(format!(
                "design has {} cells, data has {}",
                design.n_cells(),
                cells.len()
            )));
        }
        for (i, (cell, &n)) in cells.iter().zip(design.cell_sizes()).enumerate() {
            if cell.len() != n {
                return Err(Error::domain(format!(
                    "cell {} has {} values, design expects {n}",
                    i + 1,
                    cell.len()
                )));
            }
        }
        Self::from_pooled(design, cells.concat())
    }

    /// One-way dataset with the cell sizes taken from `cells`.
    pub fn one_way(cells: Vec<Vec<f64>>) -> Result<Self> {
        let design = Design::one_way(cells.iter().map(Vec::len).collect())?;
        Self::new(design, cells)
    }

    /// Builds a dataset from pooled values in cell-major order.
    pub fn from_pooled(design: Design, values: Vec<f64>) -> Result<Self> {
        if values.len() != design.total() {
            return Err(Error::domain(format!(
                "design holds {} observations, got {}",
                design.total(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite observation {v}")));
        }
        if values.len() < design.n_cells() + 1 {
            return Err(Error::domain(format!(
                "need at least {} observations for {} cells",
                design.n_cells() + 1,
                design.n_cells()
            )));
        }
        Ok(Self { design, values })
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn n_cells(&self) -> usize {
        self.design.n_cells()
    }

    pub fn total(&self) -> usize {
        self.values.len()
    }

    pub fn cell(&self, i: usize) -> &[f64] {
        &self.values[self.design.cell_range(i)]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n_cells()).map(move |i| self.cell(i))
    }

    /// All observations, cell-major.
    pub fn pooled(&self) -> &[f64] {
        &self.values
    }

    /// Applies `f` to every observation.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_pooled(self.design.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Overwrites the pooled values in place. Used by the permutation engine
    /// to reuse a scratch dataset; the caller supplies a rearrangement of
    /// already validated values.
    pub(crate) fn pooled_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn require_min_cell_size(&self, min: usize, what: &str) -> Result<()> {
        match self.design.cell_sizes().iter().position(|&n| n < min) {
            Some(i) => Err(Error::domain(format!(
                "{what} needs at least {min} observations per cell, cell {} has {}",
                i + 1,
                self.design.cell_sizes()[i]
            ))),
            None => Ok(()),
        }
    }

    pub(crate) fn require_one_way(&self, what: &str) -> Result<()> {
        if self.design.is_one_way() {
            Ok(())
        } else {
            Err(Error::Config(format!("{what} is defined for one-way layouts only")))
        }
    }
}
