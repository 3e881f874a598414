use super::ModelError;
use nalgebra::Vector3;

/// Axis-aligned box obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleBox {
    pub center: Vector3<f64>,
    half_extents: Vector3<f64>,
}

impl ObstacleBox {
    pub fn new(center: Vector3<f64>, half_extents: Vector3<f64>) -> Result<Self, ModelError> {
        if half_extents.iter().any(|h| !(h.is_finite() && *h >= 0.0))
            || center.iter().any(|c| !c.is_finite())
        {
            return Err(ModelError::HalfExtents);
        }
        Ok(Self {
            center,
            half_extents,
        })
    }

    pub fn half_extents(&self) -> &Vector3<f64> {
        &self.half_extents
    }

    pub fn contains(&self, r: &Vector3<f64>) -> bool {
        (r - self.center)
            .iter()
            .zip(self.half_extents.iter())
            .all(|(d, h)| d.abs() <= *h)
    }
}

/// Axis-aligned bounds of the environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Workspace {
    pub lower: Vector3<f64>,
    pub upper: Vector3<f64>,
}

impl Workspace {
    pub fn centered(extent: Vector3<f64>) -> Self {
        Self {
            lower: -0.5 * extent,
            upper: 0.5 * extent,
        }
    }

    pub fn contains(&self, r: &Vector3<f64>) -> bool {
        (0..3).all(|k| r[k] >= self.lower[k] - 1e-12 && r[k] <= self.upper[k] + 1e-12)
    }
}

/// Per-axis signed offsets `|r − c| − h`; positive components are outside.
fn axis_gaps(r: &Vector3<f64>, obs: &ObstacleBox) -> Vector3<f64> {
    (r - obs.center).abs() - obs.half_extents
}

/// Signed distance between a sphere of `radius` at `r` and the box.
/// Negative values mean penetration.
pub fn signed_distance(r: &Vector3<f64>, radius: f64, obs: &ObstacleBox) -> f64 {
    let g = axis_gaps(r, obs);
    let outside = g.map(|v| v.max(0.0)).norm();
    let inside = g.max().min(0.0);
    outside + inside - radius
}

/// Gradient of [`signed_distance`] with respect to `r`.
///
/// Outside the box this is the unit vector from the closest box point. Inside
/// (and on the boundary) the subgradient along the axis of minimum
/// penetration is returned, lowest axis index on ties, with a positive sign
/// when `r` sits exactly on the mid-plane.
pub fn signed_distance_gradient(r: &Vector3<f64>, _radius: f64, obs: &ObstacleBox) -> Vector3<f64> {
    let d = r - obs.center;
    let g = axis_gaps(r, obs);
    let sign = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
    let pos = g.map(|v| v.max(0.0));
    let n = pos.norm();
    if n > 0.0 {
        return Vector3::new(
            sign(d.x) * pos.x / n,
            sign(d.y) * pos.y / n,
            sign(d.z) * pos.z / n,
        );
    }
    let mut k = 0;
    for i in 1..3 {
        if g[i] > g[k] {
            k = i;
        }
    }
    let mut out = Vector3::zeros();
    out[k] = sign(d[k]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> ObstacleBox {
        ObstacleBox::new(Vector3::zeros(), Vector3::repeat(0.5)).unwrap()
    }

    #[test]
    fn exterior_face_distance() {
        let sd = signed_distance(&Vector3::new(2.0, 0.0, 0.0), 0.26, &unit_box());
        assert!((sd - 1.24).abs() < 1e-15);
        assert_eq!(
            signed_distance_gradient(&Vector3::new(2.0, 0.0, 0.0), 0.26, &unit_box()),
            Vector3::x()
        );
    }

    #[test]
    fn interior_center_distance() {
        let sd = signed_distance(&Vector3::zeros(), 0.26, &unit_box());
        assert!((sd + 0.76).abs() < 1e-15);
        assert_eq!(
            signed_distance_gradient(&Vector3::zeros(), 0.26, &unit_box()),
            Vector3::x()
        );
    }

    #[test]
    fn surface_point_is_zero() {
        let sd = signed_distance(&Vector3::new(0.5, 0.1, -0.2), 0.0, &unit_box());
        assert_eq!(sd, 0.0);
    }

    #[test]
    fn corner_region_uses_euclidean_distance() {
        let sd = signed_distance(&Vector3::new(0.8, 0.9, 0.0), 0.0, &unit_box());
        assert!((sd - 0.5).abs() < 1e-15);
    }

    #[test]
    fn negative_half_extent_rejected() {
        assert!(ObstacleBox::new(Vector3::zeros(), Vector3::new(0.1, -0.1, 0.1)).is_err());
    }
}
