//! Convex sets that constraint rows are projected onto.

/// One segment of the constraint vector `z = A x`.
///
/// Second-order cone segments use the convention `(t, v)` with `‖v‖₂ ≤ t`,
/// optionally translated by `shift`: the set is `{ z : z - shift ∈ SOC }`.
#[derive(Debug, Clone, PartialEq)]
pub enum Cone {
    /// `z = value`
    Zero { value: Vec<f64> },
    /// `lower ≤ z ≤ upper` componentwise; infinite bounds allowed.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `‖z − center‖₂ ≤ radius`
    Ball { center: Vec<f64>, radius: f64 },
    /// `z − shift ∈ {(t, v) : ‖v‖₂ ≤ t}`
    SecondOrder { shift: Vec<f64> },
}

impl Cone {
    pub fn zero(dim: usize) -> Self {
        Cone::Zero {
            value: vec![0.0; dim],
        }
    }

    pub fn equal_to(value: Vec<f64>) -> Self {
        Cone::Zero { value }
    }

    pub fn nonnegative(dim: usize) -> Self {
        Cone::Box {
            lower: vec![0.0; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn nonpositive(dim: usize) -> Self {
        Cone::Box {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![0.0; dim],
        }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Cone::Ball { center, radius }
    }

    pub fn second_order(dim: usize) -> Self {
        Cone::SecondOrder {
            shift: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Cone::Zero { value } => value.len(),
            Cone::Box { lower, .. } => lower.len(),
            Cone::Ball { center, .. } => center.len(),
            Cone::SecondOrder { shift } => shift.len(),
        }
    }

    /// Whether each row of this segment is an equality.
    pub fn is_equality_row(&self, k: usize) -> bool {
        match self {
            Cone::Zero { .. } => true,
            Cone::Box { lower, upper } => lower[k] == upper[k],
            _ => false,
        }
    }

    /// Segments whose geometry is only preserved by a common row scale.
    pub fn needs_uniform_scaling(&self) -> bool {
        matches!(self, Cone::Ball { .. } | Cone::SecondOrder { .. })
    }

    pub fn is_well_formed(&self) -> bool {
        match self {
            Cone::Zero { value } => value.iter().all(|v| v.is_finite()),
            Cone::Box { lower, upper } => {
                lower.len() == upper.len()
                    && lower
                        .iter()
                        .zip(upper)
                        .all(|(l, u)| l <= u && !l.is_nan() && !u.is_nan())
            }
            Cone::Ball { center, radius } => {
                !center.is_empty()
                    && center.iter().all(|c| c.is_finite())
                    && radius.is_finite()
                    && *radius >= 0.0
            }
            Cone::SecondOrder { shift } => !shift.is_empty() && shift.iter().all(|s| s.is_finite()),
        }
    }

    /// Scales the set by positive per-row factors: the new set is
    /// `{ diag(e) z : z ∈ self }`. Ball and second-order segments require all
    /// factors equal.
    pub fn scaled(&self, e: &[f64]) -> Cone {
        match self {
            Cone::Zero { value } => Cone::Zero {
                value: value.iter().zip(e).map(|(v, s)| v * s).collect(),
            },
            Cone::Box { lower, upper } => Cone::Box {
                lower: lower.iter().zip(e).map(|(v, s)| v * s).collect(),
                upper: upper.iter().zip(e).map(|(v, s)| v * s).collect(),
            },
            Cone::Ball { center, radius } => Cone::Ball {
                center: center.iter().zip(e).map(|(v, s)| v * s).collect(),
                radius: radius * e[0],
            },
            Cone::SecondOrder { shift } => Cone::SecondOrder {
                shift: shift.iter().zip(e).map(|(v, s)| v * s).collect(),
            },
        }
    }

    /// Euclidean projection of `z` onto the set, in place.
    pub fn project(&self, z: &mut [f64]) {
        debug_assert_eq!(z.len(), self.dim());
        match self {
            Cone::Zero { value } => z.copy_from_slice(value),
            Cone::Box { lower, upper } => {
                for ((zi, l), u) in z.iter_mut().zip(lower).zip(upper) {
                    *zi = zi.max(*l).min(*u);
                }
            }
            Cone::Ball { center, radius } => {
                let dist = z
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt();
                if dist > *radius {
                    let s = radius / dist;
                    for (zi, c) in z.iter_mut().zip(center) {
                        *zi = c + (*zi - c) * s;
                    }
                }
            }
            Cone::SecondOrder { shift } => {
                for (zi, s) in z.iter_mut().zip(shift) {
                    *zi -= s;
                }
                project_soc(z);
                for (zi, s) in z.iter_mut().zip(shift) {
                    *zi += s;
                }
            }
        }
    }
}

/// Projection onto `{(t, v) : ‖v‖ ≤ t}`.
pub fn project_soc(z: &mut [f64]) {
    let t = z[0];
    let vnorm = z[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
    if vnorm <= t {
        return;
    }
    if vnorm <= -t {
        z.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let a = 0.5 * (t + vnorm);
    z[0] = a;
    let s = a / vnorm;
    z[1..].iter_mut().for_each(|v| *v *= s);
}

/// Projects a full constraint vector segment by segment.
pub fn project_all(cones: &[Cone], z: &mut [f64]) {
    let mut off = 0;
    for c in cones {
        let d = c.dim();
        c.project(&mut z[off..off + d]);
        off += d;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_clamps() {
        let c = Cone::Box {
            lower: vec![-1.0],
            upper: vec![1.0],
        };
        let mut z = [3.0];
        c.project(&mut z);
        assert_eq!(z, [1.0]);
    }

    #[test]
    fn soc_polar_goes_to_origin() {
        let mut z = [-5.0, 0.0, 0.0];
        Cone::second_order(3).project(&mut z);
        assert_eq!(z, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn soc_boundary_scaling() {
        // t = 0, ‖v‖ = 2 -> ((0 + 2) / 2) * (1, v / 2)
        let mut z = [0.0, 2.0, 0.0];
        Cone::second_order(3).project(&mut z);
        assert!((z[0] - 1.0).abs() < 1e-15);
        assert!((z[1] - 1.0).abs() < 1e-15);
        assert_eq!(z[2], 0.0);
    }

    #[test]
    fn soc_interior_is_identity() {
        let mut z = [3.0, 1.0, -2.0];
        Cone::second_order(3).project(&mut z);
        assert_eq!(z, [3.0, 1.0, -2.0]);
    }

    #[test]
    fn ball_projects_onto_sphere() {
        let c = Cone::ball(vec![1.0, 1.0], 1.0);
        let mut z = [4.0, 5.0];
        c.project(&mut z);
        assert!((z[0] - 1.6).abs() < 1e-12 && (z[1] - 1.8).abs() < 1e-12);
    }

    #[test]
    fn zero_sets_value() {
        let mut z = [9.0, 9.0];
        Cone::equal_to(vec![1.0, 2.0]).project(&mut z);
        assert_eq!(z, [1.0, 2.0]);
    }
}
