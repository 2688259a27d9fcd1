use crate::class::{ClassId, NUM_CLASSES};
use crate::crf::params::ClassTable;
use crate::crf::probmap::Annotation;
use crate::error::Result;
use crate::radar::{to_bev, PolarGrid};
use crate::scalar::Scalar;

/// Per-class confidence grid, indexed `[class, range_bin, azimuth_bin]`,
/// values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfMap<T> {
    pub range_bins: usize,
    pub azimuth_bins: usize,
    pub frame_index: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> ConfMap<T> {
    pub fn zeros(grid: &PolarGrid, frame_index: usize) -> Self {
        ConfMap {
            range_bins: grid.range_bins,
            azimuth_bins: grid.azimuth_bins,
            frame_index,
            data: vec![T::zero(); NUM_CLASSES * grid.cells()],
        }
    }

    pub fn plane(&self) -> usize {
        self.range_bins * self.azimuth_bins
    }

    #[inline]
    pub fn at(&self, class: ClassId, range_bin: usize, azimuth_bin: usize) -> T {
        self.data[class.index() * self.plane() + range_bin * self.azimuth_bins + azimuth_bin]
    }

    pub fn channel(&self, class: ClassId) -> &[T] {
        let p = self.plane();
        &self.data[class.index() * p..(class.index() + 1) * p]
    }

    pub fn channel_mut(&mut self, class: ClassId) -> &mut [T] {
        let p = self.plane();
        &mut self.data[class.index() * p..(class.index() + 1) * p]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.range_bins == other.range_bins && self.azimuth_bins == other.azimuth_bins && self.data.len() == other.data.len()
    }
}

/// Renders annotations into ConfMaps. Caches the BEV position of every grid
/// cell.
pub struct ConfMapRenderer {
    grid: PolarGrid,
    bev: Vec<(f64, f64)>,
}

/// Minimum ConfMap Gaussian width, in range cells.
const MIN_SIGMA_CELLS: f64 = 2.0;

impl ConfMapRenderer {
    pub fn new(grid: &PolarGrid) -> Self {
        let azimuths = grid.azimuths();
        let bev = (0..grid.range_bins)
            .flat_map(|r| {
                let range = grid.range_of_bin(r);
                azimuths.iter().map(move |&a| to_bev(range, a))
            })
            .collect();
        ConfMapRenderer { grid: *grid, bev }
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    /// Gaussian width (meters, isotropic in BEV) of an annotation of `class`
    /// at `range_m`: `max(2 cells, range * confmap_scale)`.
    pub fn sigma(&self, params: &ClassTable, class: ClassId, range_m: f64) -> Result<f64> {
        let scale = params.get(class)?.confmap_scale();
        Ok((MIN_SIGMA_CELLS * self.grid.range_resolution_m).max(range_m * scale))
    }

    /// Writes one Gaussian per annotation into its class channel, centered on
    /// the annotation's nearest cell (so that cell holds exactly 1). Same-class
    /// objects combine by element-wise max. Returns the map and the number of
    /// annotations skipped for lying outside the grid.
    pub fn render<T: Scalar>(&self, annos: &[Annotation], params: &ClassTable, frame_index: usize) -> Result<(ConfMap<T>, usize)> {
        let mut map = ConfMap::zeros(&self.grid, frame_index);
        let mut skipped = 0;
        for a in annos {
            let Some((r0, k0)) = self.grid.cell_of(a.range_m, a.azimuth_rad) else {
                skipped += 1;
                continue;
            };
            let (cr, ca) = self.grid.center_of(r0, k0);
            let sigma = self.sigma(params, a.class, cr)?;
            let (cx, cy) = to_bev(cr, ca);
            let inv = 1.0 / (2.0 * sigma * sigma);
            let channel = map.channel_mut(a.class);
            for (cell, &(x, y)) in channel.iter_mut().zip(&self.bev) {
                let v = T::lit((-((x - cx).powi(2) + (y - cy).powi(2)) * inv).exp());
                if v > *cell {
                    *cell = v;
                }
            }
            channel[r0 * self.grid.azimuth_bins + k0] = T::one();
        }
        Ok((map, skipped))
    }
}

pub fn gen_confmap<T: Scalar>(annos: &[Annotation], params: &ClassTable, grid: &PolarGrid, frame_index: usize) -> Result<(ConfMap<T>, usize)> {
    ConfMapRenderer::new(grid).render(annos, params, frame_index)
}
