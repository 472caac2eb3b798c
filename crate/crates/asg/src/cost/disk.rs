//! Integer disk geometry shared by cost computation, growth, and synthesis.

/// A digital disk: all integer offsets with squared distance <= r^2.
#[derive(Debug, Clone)]
pub struct DiskGeometry {
    pub radius: u32,
    /// Per row `dy in -r..=r`, the half-width of the covered span.
    pub spans: Vec<(i32, i32)>,
    pub area: usize,
}

impl DiskGeometry {
    pub fn new(radius: u32) -> Self {
        let r = radius as i64;
        let mut spans = Vec::with_capacity(2 * radius as usize + 1);
        let mut area = 0usize;
        for dy in -r..=r {
            let limit = r * r - dy * dy;
            let mut w = 0i64;
            while (w + 1) * (w + 1) <= limit {
                w += 1;
            }
            spans.push((dy as i32, w as i32));
            area += (2 * w + 1) as usize;
        }
        DiskGeometry { radius, spans, area }
    }

    /// All offsets of the disk, row-major.
    pub fn offsets(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        self.spans
            .iter()
            .flat_map(|&(dy, w)| (-w..=w).map(move |dx| (dx, dy)))
    }
}

/// Precomputed disks for radii `0..=r_max` (radius 0 is the single pixel).
pub struct DiskTable {
    disks: Vec<DiskGeometry>,
}

impl DiskTable {
    pub fn new(r_max: u32) -> Self {
        DiskTable {
            disks: (0..=r_max).map(DiskGeometry::new).collect(),
        }
    }

    #[inline]
    pub fn get(&self, r: u32) -> &DiskGeometry {
        &self.disks[r as usize]
    }
}
