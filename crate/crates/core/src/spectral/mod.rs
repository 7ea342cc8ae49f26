//! Periodic grid, transforms, Littlewood-Paley projectors and the paraproduct.

mod field;
mod grid;
pub mod lp;

pub use field::{SpaceTimeField, SpectralField, TimeGrid};
pub use grid::Grid;
pub use lp::{below_symbol, lp_symbol, phi0, smooth_step, wide_symbol};

use crate::error::{Result, SolverError};

/// Offset between a band and the coefficient frequencies frozen against it.
pub const PARA_GAP: i64 = 4;

fn check_band(grid: &Grid, j: u32) -> Result<()> {
    let j_max = grid.j_max();
    if j > j_max {
        Err(SolverError::UnresolvedBand { j, j_max })
    } else {
        Ok(())
    }
}

/// `S_j u`.
pub fn project_band(u: &SpectralField, j: u32) -> Result<SpectralField> {
    check_band(u.grid(), j)?;
    Ok(u.apply_symbol(u.grid().symbols().band(j)))
}

/// `S_{<j} u`; the zero field for `j <= 0`.
pub fn project_below(u: &SpectralField, j: i64) -> SpectralField {
    if j <= 0 {
        return SpectralField::zeros(u.grid());
    }
    let table = &u.grid().symbols().below;
    if let Some(sym) = table.get(j as usize) {
        u.apply_symbol(sym)
    } else {
        u.apply_multiplier(|xi| below_symbol(j, xi).into())
    }
}

/// `S_{≥j} u = u − S_{<j} u`.
pub fn project_above(u: &SpectralField, j: i64) -> SpectralField {
    u - &project_below(u, j)
}

/// `S̃_j u`.
pub fn project_wide(u: &SpectralField, j: u32) -> Result<SpectralField> {
    check_band(u.grid(), j)?;
    Ok(u.apply_symbol(u.grid().symbols().wide(j)))
}

/// Twice-widened projector (equal to 1 on the support of `S̃_j`).
pub fn project_wide2(u: &SpectralField, j: u32) -> Result<SpectralField> {
    check_band(u.grid(), j)?;
    Ok(u.apply_symbol(u.grid().symbols().wide2(j)))
}

/// Projection onto all resolved bands, `Σ_{j ≤ j_max} S_j`.
pub fn project_resolved(u: &SpectralField) -> SpectralField {
    u.apply_symbol(&u.grid().symbols().resolved)
}

/// Frequency content outside the resolved bands, `u − Σ_{j ≤ j_max} S_j u`.
pub fn unresolved_tail(u: &SpectralField) -> SpectralField {
    u - &project_resolved(u)
}

impl SpaceTimeField {
    pub fn project_band(&self, j: u32) -> Result<SpaceTimeField> {
        check_band(self.grid(), j)?;
        Ok(self.apply_symbol(self.grid().symbols().band(j)))
    }

    pub fn project_below(&self, j: i64) -> SpaceTimeField {
        self.map(|s| project_below(s, j))
    }

    pub fn project_above(&self, j: i64) -> SpaceTimeField {
        self.map(|s| project_above(s, j))
    }

    pub fn project_wide(&self, j: u32) -> Result<SpaceTimeField> {
        check_band(self.grid(), j)?;
        Ok(self.apply_symbol(self.grid().symbols().wide(j)))
    }

    pub fn project_wide2(&self, j: u32) -> Result<SpaceTimeField> {
        check_band(self.grid(), j)?;
        Ok(self.apply_symbol(self.grid().symbols().wide2(j)))
    }

    pub fn project_resolved(&self) -> SpaceTimeField {
        self.apply_symbol(&self.grid().symbols().resolved)
    }
}

/// Paraproduct `T_a u = Σ_j S_{<j−4} a · S_j u` over the resolved bands,
/// evaluated slice by slice. Bands `j ≤ 4` contribute nothing.
pub fn paraproduct(a: &SpaceTimeField, u: &SpaceTimeField) -> Result<SpaceTimeField> {
    a.compatible(u)?;
    let grid = u.grid().clone();
    let j_max = grid.j_max() as i64;
    Ok(a.zip_map(u, |a_n, u_n| {
        let mut acc = SpectralField::zeros(&grid);
        for j in (PARA_GAP + 1)..=j_max {
            let low = project_below(a_n, j - PARA_GAP);
            let band = u_n.apply_symbol(grid.symbols().band(j as u32));
            acc += &low.mul_pointwise(&band);
        }
        acc
    }))
}
