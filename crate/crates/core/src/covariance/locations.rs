//! 2D location sets: ingestion checks, unit-square normalization and Morton
//! (Z-order) sorting.

use crate::error::{Error, Result};

pub const MORTON_BITS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocationOrdering {
    AsLoaded,
    Morton,
}

/// Distinct 2D locations.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationSet {
    coords: Vec<[f64; 2]>,
    normalized: bool,
    ordering: LocationOrdering,
}

impl LocationSet {
    /// Rejects non-finite coordinates and exact duplicates.
    pub fn new(coords: Vec<[f64; 2]>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|c| !(c[0].is_finite() && c[1].is_finite())) {
            return Err(Error::Parse(format!("non-finite coordinate at row {i}")));
        }
        check_duplicates(&coords)?;
        Ok(LocationSet { coords, normalized: false, ordering: LocationOrdering::AsLoaded })
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn ordering(&self) -> LocationOrdering {
        self.ordering
    }

    /// Locations picked by `idx`, keeping the flags.
    pub fn select(&self, idx: &[usize]) -> LocationSet {
        LocationSet {
            coords: idx.iter().map(|&i| self.coords[i]).collect(),
            normalized: self.normalized,
            ordering: self.ordering,
        }
    }
}

fn check_duplicates(coords: &[[f64; 2]]) -> Result<()> {
    let mut idx: Vec<usize> = (0..coords.len()).collect();
    // -0.0 and 0.0 are the same location; compare through +0.0.
    let key = |i: usize| [coords[i][0] + 0.0, coords[i][1] + 0.0];
    idx.sort_by(|&a, &b| {
        let (ka, kb) = (key(a), key(b));
        ka[0].total_cmp(&kb[0]).then(ka[1].total_cmp(&kb[1])).then(a.cmp(&b))
    });
    for w in idx.windows(2) {
        if key(w[0]) == key(w[1]) {
            return Err(Error::DuplicateLocation { first: w[0].min(w[1]), second: w[0].max(w[1]) });
        }
    }
    Ok(())
}

/// Map into the unit square with one scale factor `ℓ = max(extent_x,
/// extent_y)`, preserving the aspect ratio.
pub fn normalize_locations(raw: &LocationSet) -> Result<LocationSet> {
    if raw.is_empty() {
        return Err(Error::Degenerate("no locations".into()));
    }
    let (mut min, mut max) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in &raw.coords {
        for k in 0..2 {
            min[k] = min[k].min(c[k]);
            max[k] = max[k].max(c[k]);
        }
    }
    let scale = (max[0] - min[0]).max(max[1] - min[1]);
    if scale == 0.0 {
        if raw.len() == 1 {
            return Ok(LocationSet {
                coords: vec![[0.0, 0.0]],
                normalized: true,
                ordering: raw.ordering,
            });
        }
        return Err(Error::Degenerate("all locations coincide".into()));
    }
    let coords = raw
        .coords
        .iter()
        .map(|c| [((c[0] - min[0]) / scale).min(1.0), ((c[1] - min[1]) / scale).min(1.0)])
        .collect::<Vec<_>>();
    // Scaling can merge points that differ only below the resolution.
    check_duplicates(&coords)?;
    Ok(LocationSet { coords, normalized: true, ordering: raw.ordering })
}

/// Spread the low 16 bits of `v` to the even bit positions.
fn spread_bits(v: u32) -> u64 {
    let mut v = v as u64 & 0xffff_ffff;
    v = (v | (v << 16)) & 0x0000_ffff_0000_ffff;
    v = (v | (v << 8)) & 0x00ff_00ff_00ff_00ff;
    v = (v | (v << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
    v = (v | (v << 2)) & 0x3333_3333_3333_3333;
    v = (v | (v << 1)) & 0x5555_5555_5555_5555;
    v
}

/// Z-order key with `x` on the even bits and `y` on the odd bits.
pub fn morton_key(c: [f64; 2], bits: u32) -> u64 {
    let levels = ((1u64 << bits) - 1) as f64;
    let q = |v: f64| (v * levels).floor() as u32;
    spread_bits(q(c[0])) | (spread_bits(q(c[1])) << 1)
}

/// Stable sort along the Z-order curve. Returns the sorted set and the
/// permutation `perm` with `sorted[i] = input[perm[i]]`.
pub fn morton_order(s: &LocationSet, bits: u32) -> Result<(LocationSet, Vec<usize>)> {
    if !s.normalized {
        return Err(Error::domain("Morton ordering needs normalized locations"));
    }
    if !(1..=32).contains(&bits) {
        return Err(Error::domain(format!("bits per axis must be in 1..=32, got {bits}")));
    }
    let mut perm: Vec<usize> = (0..s.len()).collect();
    let keys: Vec<u64> = s.coords.iter().map(|&c| morton_key(c, bits)).collect();
    perm.sort_by_key(|&i| keys[i]);
    let mut out = s.select(&perm);
    out.ordering = LocationOrdering::Morton;
    Ok((out, perm))
}

/// Apply a permutation from [`morton_order`] to a per-location vector.
pub fn permute<T: Copy>(values: &[T], perm: &[usize]) -> Vec<T> {
    perm.iter().map(|&i| values[i]).collect()
}
