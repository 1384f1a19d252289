//! Targets as scattering-center layouts, sensor poses and bistatic
//! collection geometry.
//!
//! Coordinates are right-handed and scene-centered with z up. Azimuth is
//! measured from +x towards +y, elevation from the ground plane.

use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polarimetry::SinclairMatrix;

pub type Vec3 = Vector3<f64>;

/// Default sensor distance from scene center. Far field for ~10 m targets.
pub const DEFAULT_RANGE_M: f64 = 1_000.0;

/// Bistatic angles at or beyond `180° - FORWARD_SCATTER_GUARD_DEG` have no bisector.
pub const FORWARD_SCATTER_GUARD_DEG: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Scatterer {
    pub position: Vec3,
    pub amplitude: f64,
    pub sinclair: SinclairMatrix,
}

impl Scatterer {
    pub fn new(position: Vec3, amplitude: f64, sinclair: SinclairMatrix) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::Validation(format!(
                "scatterer amplitude must be finite and >= 0, got {amplitude}"
            )));
        }
        if !position.iter().all(|v| v.is_finite()) {
            return Err(Error::Validation("scatterer position is not finite".into()));
        }
        if !sinclair.is_finite() {
            return Err(Error::Validation("sinclair matrix has non-finite entries".into()));
        }
        Ok(Self {
            position,
            amplitude,
            sinclair,
        })
    }
}

/// A named target: an ordered list of point scatterers.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetModel {
    pub name: String,
    pub scatterers: Vec<Scatterer>,
    /// Bounding radius about the origin, meters.
    pub extent: f64,
}

impl TargetModel {
    pub fn new(name: impl Into<String>, scatterers: Vec<Scatterer>) -> Result<Self> {
        let name = name.into();
        if scatterers.is_empty() {
            return Err(Error::Validation(format!("target `{name}` has no scatterers")));
        }
        let extent = scatterers
            .iter()
            .map(|s| s.position.norm())
            .fold(0.0_f64, f64::max);
        Ok(Self {
            name,
            scatterers,
            extent,
        })
    }

    /// Replaces every Sinclair matrix with its symmetric part `(S + Sᵀ)/2`.
    pub fn symmetrized(&self) -> Self {
        let scatterers = self
            .scatterers
            .iter()
            .map(|s| Scatterer {
                sinclair: s.sinclair.symmetric_part(),
                ..s.clone()
            })
            .collect();
        Self {
            scatterers,
            ..self.clone()
        }
    }

    pub fn is_reciprocal(&self) -> bool {
        self.scatterers.iter().all(|s| s.sinclair.hv == s.sinclair.vh)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorPose {
    elevation: f64,
    azimuth: f64,
    range: f64,
}

impl SensorPose {
    /// Azimuth is wrapped into [0, 360).
    pub fn new(elevation_deg: f64, azimuth_deg: f64, range_m: f64) -> Result<Self> {
        if !(0.0..90.0).contains(&elevation_deg) {
            return Err(Error::Validation(format!(
                "elevation must lie in [0, 90) degrees, got {elevation_deg}"
            )));
        }
        if !azimuth_deg.is_finite() {
            return Err(Error::Validation("azimuth is not finite".into()));
        }
        if !(range_m > 0.0) || !range_m.is_finite() {
            return Err(Error::Validation(format!("range must be > 0, got {range_m}")));
        }
        let mut azimuth = azimuth_deg.rem_euclid(360.0);
        if azimuth >= 360.0 {
            azimuth = 0.0;
        }
        Ok(Self {
            elevation: elevation_deg,
            azimuth,
            range: range_m,
        })
    }

    pub fn at_default_range(elevation_deg: f64, azimuth_deg: f64) -> Result<Self> {
        Self::new(elevation_deg, azimuth_deg, DEFAULT_RANGE_M)
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    /// Unit vector from scene center towards the sensor.
    pub fn line_of_sight(&self) -> Vec3 {
        let (se, ce) = self.elevation.to_radians().sin_cos();
        let (sa, ca) = self.azimuth.to_radians().sin_cos();
        Vec3::new(ce * ca, ce * sa, se)
    }

    pub fn position(&self) -> Vec3 {
        self.line_of_sight() * self.range
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectionGeometry {
    pub tx: SensorPose,
    pub rx: SensorPose,
}

impl CollectionGeometry {
    pub fn new(tx: SensorPose, rx: SensorPose) -> Self {
        Self { tx, rx }
    }

    pub fn monostatic(pose: SensorPose) -> Self {
        Self { tx: pose, rx: pose }
    }
}

/// Angle at the scene center between the transmitter and receiver lines of
/// sight, in degrees.
pub fn bistatic_angle(g: &CollectionGeometry) -> f64 {
    let ut = g.tx.line_of_sight();
    let ur = g.rx.line_of_sight();
    // atan2 form stays exact at 0 where acos(dot) loses half the digits.
    (2.0 * (ut - ur).norm().atan2((ut + ur).norm())).to_degrees()
}

/// Unit bisector of the two lines of sight.
pub fn bisector_direction(g: &CollectionGeometry) -> Result<Vec3> {
    let beta = bistatic_angle(g);
    if beta >= 180.0 - FORWARD_SCATTER_GUARD_DEG {
        return Err(Error::DegenerateGeometry(format!(
            "bistatic angle {beta:.6}° has no bisector (forward scatter)"
        )));
    }
    let sum = g.tx.line_of_sight() + g.rx.line_of_sight();
    Ok(sum / sum.norm())
}

// ---------------------------------------------------------------------------
// Built-in targets
// ---------------------------------------------------------------------------

fn sc(x: f64, y: f64, z: f64, amp: f64, s: SinclairMatrix) -> Scatterer {
    Scatterer::new(Vec3::new(x, y, z), amp, s).expect("builtin scatterer is valid")
}

/// The four built-in target classes.
///
/// | name | scatterers | footprint | Sinclair mix |
/// |------|-----------:|-----------|--------------|
/// | MBT  | 12 | 7.4 × 3.6 m hull, centerline gun | trihedral corners, dihedral skirts, dipole barrel, two non-reciprocal turret returns |
/// | APC  | 11 | 6.4 × 3.2 m box | trihedral corners, dihedral sides and nose |
/// | STR  | 8  | 4.6 × 2.2 m chassis, twin tubes | trihedral cab, dipoles at 30° tilt |
/// | MSL  | 10 | 8.3 × 2.6 m, launcher rail along x | trihedral cab, dihedral outriggers, dipole rail |
///
/// Every scatterer lies on the ground plane so that the image of a target
/// does not shift with receiver elevation. Only MBT carries scatterers with
/// `S_hv != S_vh`.
pub fn builtin_targets() -> Vec<TargetModel> {
    vec![mbt(), apc(), str_launcher(), msl()]
}

pub const BUILTIN_NAMES: [&str; 4] = ["MBT", "APC", "STR", "MSL"];

pub fn builtin_target(name: &str) -> Option<TargetModel> {
    builtin_targets().into_iter().find(|t| t.name == name)
}

fn mbt() -> TargetModel {
    let t = SinclairMatrix::trihedral();
    let d = SinclairMatrix::dihedral();
    let barrel = SinclairMatrix::dipole(0.0);
    let odd = SinclairMatrix::new(
        Complex64::new(0.6, 0.0),
        Complex64::new(0.5, 0.2),
        Complex64::new(-0.3, 0.1),
        Complex64::new(0.4, 0.0),
    );
    let s = vec![
        // hull corners
        sc(-3.5, -1.8, 0.0, 1.0, t),
        sc(-3.5, 1.8, 0.0, 1.0, t),
        sc(3.3, -1.8, 0.0, 0.9, t),
        sc(3.3, 1.8, 0.0, 0.9, t),
        // track skirts
        sc(-1.2, -1.8, 0.0, 0.7, d),
        sc(1.2, -1.8, 0.0, 0.7, d),
        sc(-1.2, 1.8, 0.0, 0.7, d),
        sc(1.2, 1.8, 0.0, 0.7, d),
        // turret and gun
        sc(-1.2, 0.0, 0.0, 0.9, odd),
        sc(0.4, 0.0, 0.0, 0.7, odd.transpose()),
        sc(2.0, 0.0, 0.0, 0.6, barrel),
        sc(3.9, 0.0, 0.0, 0.6, barrel),
    ];
    TargetModel::new("MBT", s).expect("builtin")
}

fn apc() -> TargetModel {
    let t = SinclairMatrix::trihedral();
    let d = SinclairMatrix::dihedral();
    let s = vec![
        sc(-3.3, -1.6, 0.0, 1.0, t),
        sc(-3.3, 1.6, 0.0, 1.0, t),
        sc(3.1, -1.6, 0.0, 0.9, t),
        sc(3.1, 1.6, 0.0, 0.9, t),
        sc(-1.0, -1.6, 0.0, 0.7, d),
        sc(1.0, -1.6, 0.0, 0.7, d),
        sc(-1.0, 1.6, 0.0, 0.7, d),
        sc(1.0, 1.6, 0.0, 0.7, d),
        sc(-1.0, 0.0, 0.0, 0.8, t),
        sc(0.9, 0.0, 0.0, 0.7, d),
        sc(3.3, 0.0, 0.0, 0.8, d),
    ];
    TargetModel::new("APC", s).expect("builtin")
}

fn str_launcher() -> TargetModel {
    let t = SinclairMatrix::trihedral();
    let tube = SinclairMatrix::dipole(30.0);
    let s = vec![
        sc(-2.2, -1.1, 0.0, 0.9, t),
        sc(-2.2, 1.1, 0.0, 0.9, t),
        sc(1.6, -1.1, 0.0, 0.8, t),
        sc(1.6, 1.1, 0.0, 0.8, t),
        sc(2.4, 0.0, 0.0, 1.0, t),
        sc(-1.4, -0.5, 0.0, 0.8, tube),
        sc(-1.4, 0.5, 0.0, 0.8, tube),
        sc(0.2, 0.0, 0.0, 0.6, SinclairMatrix::dihedral()),
    ];
    TargetModel::new("STR", s).expect("builtin")
}

fn msl() -> TargetModel {
    let t = SinclairMatrix::trihedral();
    let d = SinclairMatrix::dihedral();
    let rail = SinclairMatrix::dipole(0.0);
    let s = vec![
        sc(3.4, -1.3, 0.0, 1.0, t),
        sc(3.4, 1.3, 0.0, 1.0, t),
        sc(4.3, 0.0, 0.0, 0.9, t),
        sc(-3.8, -1.3, 0.0, 0.7, d),
        sc(-3.8, 1.3, 0.0, 0.7, d),
        sc(-0.8, -1.3, 0.0, 0.7, d),
        sc(-0.8, 1.3, 0.0, 0.7, d),
        sc(-4.0, 0.0, 0.0, 0.6, rail),
        sc(-2.0, 0.0, 0.0, 0.7, rail),
        sc(0.2, 0.0, 0.0, 0.7, rail),
    ];
    TargetModel::new("MSL", s).expect("builtin")
}

// ---------------------------------------------------------------------------
// Target definition files
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetFile {
    name: String,
    scatterers: Vec<ScattererFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScattererFile {
    pos: [f64; 3],
    amp: f64,
    /// Row-major hh, hv, vh, vv as `[re, im]` pairs.
    sinclair: [[f64; 2]; 4],
}

pub fn target_from_json(text: &str) -> Result<TargetModel> {
    let file: TargetFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("target file: {e}")))?;
    let mut scatterers = Vec::with_capacity(file.scatterers.len());
    for (i, s) in file.scatterers.into_iter().enumerate() {
        let c = |k: usize| Complex64::new(s.sinclair[k][0], s.sinclair[k][1]);
        let sinclair = SinclairMatrix::new(c(0), c(1), c(2), c(3));
        let scatterer = Scatterer::new(Vec3::from(s.pos), s.amp, sinclair)
            .map_err(|e| Error::Validation(format!("scatterer {i}: {e}")))?;
        scatterers.push(scatterer);
    }
    TargetModel::new(file.name, scatterers)
}

pub fn target_to_json(t: &TargetModel) -> String {
    let file = TargetFile {
        name: t.name.clone(),
        scatterers: t
            .scatterers
            .iter()
            .map(|s| {
                let e = s.sinclair.entries();
                ScattererFile {
                    pos: [s.position.x, s.position.y, s.position.z],
                    amp: s.amplitude,
                    sinclair: e.map(|z| [z.re, z.im]),
                }
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("target serializes")
}

pub fn load_target(path: impl AsRef<Path>) -> Result<TargetModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    target_from_json(&text)
}

pub fn save_target(t: &TargetModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, target_to_json(t)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pose(el: f64, az: f64) -> SensorPose {
        SensorPose::at_default_range(el, az).unwrap()
    }

    #[test]
    fn bistatic_angle_examples() {
        let p = pose(12.0, 77.0);
        assert_eq!(bistatic_angle(&CollectionGeometry::monostatic(p)), 0.0);
        let g = CollectionGeometry::new(pose(0.0, 0.0), pose(0.0, 60.0));
        assert!((bistatic_angle(&g) - 60.0).abs() < 1e-12);
        // u_t . u_r = -cos^2(10) + sin^2(10) = -cos(20)
        let g = CollectionGeometry::new(pose(10.0, 0.0), pose(10.0, 180.0));
        assert!((bistatic_angle(&g) - 160.0).abs() < 0.1);
    }

    #[test]
    fn bisector_examples() {
        let p = pose(10.0, 40.0);
        let b = bisector_direction(&CollectionGeometry::monostatic(p)).unwrap();
        assert!((b - p.line_of_sight()).norm() < 1e-15);

        let g = CollectionGeometry::new(pose(0.0, 0.0), pose(0.0, 60.0));
        let b = bisector_direction(&g).unwrap();
        assert!((b - pose(0.0, 30.0).line_of_sight()).norm() < 1e-12);

        let g = CollectionGeometry::new(pose(0.0, 0.0), pose(0.0, 180.0));
        assert!(matches!(bisector_direction(&g), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn pose_validation_and_wrapping() {
        assert!(SensorPose::new(90.0, 0.0, 1.0).is_err());
        assert!(SensorPose::new(-1.0, 0.0, 1.0).is_err());
        assert!(SensorPose::new(10.0, 0.0, 0.0).is_err());
        assert_eq!(pose(10.0, -60.0).azimuth(), 300.0);
        assert_eq!(pose(10.0, 360.0).azimuth(), 0.0);
    }

    #[test]
    fn builtins_are_distinct_and_deterministic() {
        let a = builtin_targets();
        let b = builtin_targets();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        let names: std::collections::BTreeSet<_> = a.iter().map(|t| t.name.clone()).collect();
        assert_eq!(names.len(), 4);
        for (i, t) in a.iter().enumerate() {
            assert!((8..=20).contains(&t.scatterers.len()), "{}", t.name);
            for u in &a[i + 1..] {
                assert!((t.extent - u.extent).abs() > 1e-3, "{} vs {}", t.name, u.name);
                assert_ne!(t.scatterers.len(), u.scatterers.len());
            }
        }
        assert!(!builtin_target("MBT").unwrap().is_reciprocal());
        for name in ["APC", "STR", "MSL"] {
            assert!(builtin_target(name).unwrap().is_reciprocal());
        }
    }

    #[test]
    fn load_minimal_target() {
        let text = r#"{"name":"dot","scatterers":[{"pos":[0,0,0],"amp":1,
            "sinclair":[[1,0],[0,0],[0,0],[1,0]]}]}"#;
        let t = target_from_json(text).unwrap();
        assert_eq!(t.scatterers.len(), 1);
        assert_eq!(t.scatterers[0].sinclair, SinclairMatrix::identity());
        assert_eq!(t.extent, 0.0);
    }

    #[test]
    fn load_rejects_bad_files() {
        let neg = r#"{"name":"x","scatterers":[{"pos":[0,0,0],"amp":-1,
            "sinclair":[[1,0],[0,0],[0,0],[1,0]]}]}"#;
        assert!(matches!(target_from_json(neg), Err(Error::Validation(_))));
        let extra = r#"{"name":"x","color":"red","scatterers":[]}"#;
        assert!(matches!(target_from_json(extra), Err(Error::Parse(_))));
        assert!(matches!(target_from_json("{"), Err(Error::Parse(_))));
        let empty = r#"{"name":"x","scatterers":[]}"#;
        assert!(matches!(target_from_json(empty), Err(Error::Validation(_))));
    }

    #[test]
    fn builtin_roundtrip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        for t in builtin_targets() {
            let path = dir.path().join(format!("{}.json", t.name));
            save_target(&t, &path).unwrap();
            assert_eq!(load_target(&path).unwrap(), t);
        }
    }

    proptest! {
        #[test]
        fn bistatic_angle_symmetric(e1 in 0.0..89.0f64, a1 in 0.0..360.0f64,
                                    e2 in 0.0..89.0f64, a2 in 0.0..360.0f64) {
            let g = CollectionGeometry::new(pose(e1, a1), pose(e2, a2));
            let h = CollectionGeometry::new(pose(e2, a2), pose(e1, a1));
            let beta = bistatic_angle(&g);
            prop_assert!((beta - bistatic_angle(&h)).abs() < 1e-12);
            prop_assert!((0.0..180.0).contains(&beta));
            if let Ok(b) = bisector_direction(&g) {
                prop_assert!((b.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn zero_angle_iff_same_direction(e in 0.0..89.0f64, a in 0.0..360.0f64, d in 1e-6..10.0f64) {
            prop_assert_eq!(bistatic_angle(&CollectionGeometry::monostatic(pose(e, a))), 0.0);
            let g = CollectionGeometry::new(pose(e, a), pose(e, a + d));
            prop_assert!(bistatic_angle(&g) > 1e-9);
        }

        #[test]
        fn line_of_sight_is_unit(e in 0.0..89.999f64, a in -720.0..720.0f64) {
            prop_assert!((pose(e, a).line_of_sight().norm() - 1.0).abs() < 1e-12);
        }
    }
}
