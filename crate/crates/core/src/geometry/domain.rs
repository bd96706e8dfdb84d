use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Disk count of the reference experiments.
pub const DEFAULT_DISK_COUNT: usize = 50;
/// Radius range of generated disks.
pub const DEFAULT_RADIUS_RANGE: (f64, f64) = (0.015, 0.04);
/// Clearance between generated disks and from the outer square.
///
/// Larger than the cell diagonal at n = 64, so the staircase mesh of a
/// generated domain does not pinch off triangles between close features.
pub const DEFAULT_MIN_GAP: f64 = 0.02;

/// A circular hole in the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskPerforation {
    #[serde(rename = "cx")]
    pub center_x: f64,
    #[serde(rename = "cy")]
    pub center_y: f64,
    #[serde(rename = "r")]
    pub radius: f64,
}

impl DiskPerforation {
    pub fn new(center_x: f64, center_y: f64, radius: f64) -> Self {
        DiskPerforation {
            center_x,
            center_y,
            radius,
        }
    }

    /// Strict interior test.
    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let dx = x - self.center_x;
        let dy = y - self.center_y;
        dx * dx + dy * dy < self.radius * self.radius
    }

    pub fn distance_to_center(&self, x: f64, y: f64) -> f64 {
        (x - self.center_x).hypot(y - self.center_y)
    }

    /// Distance from the center to each side of the unit square exceeds the radius.
    pub fn strictly_inside_unit_square(&self) -> bool {
        let (x, y, r) = (self.center_x, self.center_y, self.radius);
        x - r > 0.0 && 1.0 - x > r && y - r > 0.0 && 1.0 - y > r
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }
}

/// The unit square minus a union of disks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerforatedDomainSpec {
    pub disks: Vec<DiskPerforation>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub allow_boundary_clip: bool,
}

impl PerforatedDomainSpec {
    pub fn unperforated() -> Self {
        PerforatedDomainSpec {
            disks: Vec::new(),
            seed: 0,
            allow_boundary_clip: false,
        }
    }

    pub fn with_disks(disks: Vec<DiskPerforation>) -> Self {
        PerforatedDomainSpec {
            disks,
            seed: 0,
            allow_boundary_clip: false,
        }
    }

    /// True when the point lies strictly inside some perforation.
    pub fn in_perforation(&self, x: f64, y: f64) -> bool {
        self.disks.iter().any(|d| d.contains(x, y))
    }

    /// Checks radii and, unless clipping is allowed, containment in the square.
    pub fn validate(&self) -> Result<()> {
        for (index, d) in self.disks.iter().enumerate() {
            if !(d.radius > 0.0) || !d.center_x.is_finite() || !d.center_y.is_finite() {
                return Err(Error::InvalidPerforation {
                    index,
                    reason: format!("radius {} must be positive and center finite", d.radius),
                });
            }
            if !self.allow_boundary_clip && !d.strictly_inside_unit_square() {
                return Err(Error::InvalidPerforation {
                    index,
                    reason: "disk touches the outer boundary (set allow_boundary_clip)".into(),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Rejection-sampled, non-overlapping disks strictly inside the unit square.
///
/// Two disks are accepted only if their center distance exceeds the sum of
/// radii plus `min_gap`; the same clearance is kept from the outer square.
/// The attempt budget is `200·count + 1000` draws.
pub fn generate_perforations(
    count: usize,
    radius_range: (f64, f64),
    min_gap: f64,
    seed: u64,
) -> Result<PerforatedDomainSpec> {
    let (r_min, r_max) = radius_range;
    if !(r_min > 0.0 && r_min <= r_max && r_max < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "radius range [{r_min}, {r_max}] must satisfy 0 < min <= max < 0.5"
        )));
    }
    if !(min_gap >= 0.0) {
        return Err(Error::InvalidArgument(format!("min_gap {min_gap} must be >= 0")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = 200 * count + 1000;
    let mut disks: Vec<DiskPerforation> = Vec::with_capacity(count);
    let mut attempts = 0;
    while disks.len() < count {
        if attempts == budget {
            return Err(Error::PlacementFailure {
                requested: count,
                placed: disks.len(),
                attempts,
            });
        }
        attempts += 1;
        let r = if r_min == r_max { r_min } else { rng.gen_range(r_min..=r_max) };
        let reach = r + min_gap;
        if reach >= 0.5 {
            continue;
        }
        let cx = rng.gen_range(reach..1.0 - reach);
        let cy = rng.gen_range(reach..1.0 - reach);
        let cand = DiskPerforation::new(cx, cy, r);
        if !cand.strictly_inside_unit_square() {
            continue;
        }
        let clear = disks
            .iter()
            .all(|d| d.distance_to_center(cx, cy) > d.radius + r + min_gap);
        if clear {
            disks.push(cand);
        }
    }
    Ok(PerforatedDomainSpec {
        disks,
        seed,
        allow_boundary_clip: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_count_is_empty() {
        let s = generate_perforations(0, (0.01, 0.04), 0.01, 7).unwrap();
        assert!(s.disks.is_empty());
        assert_eq!(s.seed, 7);
    }

    #[test]
    fn deterministic_by_seed() {
        let a = generate_perforations(50, (0.01, 0.04), 0.005, 42).unwrap();
        let b = generate_perforations(50, (0.01, 0.04), 0.005, 42).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = generate_perforations(50, (0.01, 0.04), 0.005, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generated_disks_are_disjoint_and_inside() {
        let s = generate_perforations(50, (0.01, 0.04), 0.005, 42).unwrap();
        assert_eq!(s.disks.len(), 50);
        for (i, a) in s.disks.iter().enumerate() {
            assert!(a.strictly_inside_unit_square());
            let wall = a.center_x.min(a.center_y).min(1.0 - a.center_x).min(1.0 - a.center_y);
            assert!(wall >= a.radius + 0.005);
            assert!(a.radius >= 0.01 && a.radius <= 0.04);
            for b in &s.disks[i + 1..] {
                assert!(a.distance_to_center(b.center_x, b.center_y) > a.radius + b.radius + 0.005);
            }
        }
        s.validate().unwrap();
    }

    #[test]
    fn over_dense_request_fails() {
        // 2000 disks of radius 0.04 cover 2000·π·0.0016 ≈ 10 times the unit square.
        let total: f64 = 2000.0 * DiskPerforation::new(0.5, 0.5, 0.04).area();
        assert!(total > 1.0);
        assert!(matches!(
            generate_perforations(2000, (0.04, 0.04), 0.02, 1),
            Err(Error::PlacementFailure { requested: 2000, .. })
        ));
    }

    #[test]
    fn bad_ranges_are_rejected() {
        assert!(generate_perforations(1, (0.0, 0.1), 0.0, 1).is_err());
        assert!(generate_perforations(1, (0.2, 0.1), 0.0, 1).is_err());
        assert!(generate_perforations(1, (0.1, 0.5), 0.0, 1).is_err());
        assert!(generate_perforations(1, (0.1, 0.2), -1.0, 1).is_err());
    }

    #[test]
    fn json_schema_uses_short_keys() {
        let s = PerforatedDomainSpec::with_disks(vec![DiskPerforation::new(0.5, 0.25, 0.1)]);
        let v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        assert_eq!(v["disks"][0]["cx"], 0.5);
        assert_eq!(v["disks"][0]["cy"], 0.25);
        assert_eq!(v["disks"][0]["r"], 0.1);
        assert_eq!(v["allow_boundary_clip"], false);
        let back = PerforatedDomainSpec::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn boundary_touching_disk_needs_clip_flag() {
        let mut s = PerforatedDomainSpec::with_disks(vec![DiskPerforation::new(0.0, 0.5, 0.2)]);
        assert!(matches!(s.validate(), Err(Error::InvalidPerforation { index: 0, .. })));
        s.allow_boundary_clip = true;
        s.validate().unwrap();
    }
}
