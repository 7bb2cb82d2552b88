//! The domain family used for position space `Ω` and the Fermi sea `Γ`:
//! axis-aligned boxes, balls and axis-aligned ellipsoids in one to five
//! dimensions.

use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::numerics::{gauss_legendre, McEstimate, RandomSource, RegionSampler};

pub const MAX_DIM: usize = 5;

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Area of the unit sphere `S^{d-1}` (for `d = 1` the two points `±1`).
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Product of intervals `[lower_i, upper_i]`.
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// Axis-aligned ellipsoid with the given semi-axes.
    Ellipsoid {
        center: Vec<f64>,
        semi_axes: Vec<f64>,
    },
}

/// A validated compact domain. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Domain {
    shape: Shape,
}

/// A boundary quadrature node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub position: Vec<f64>,
    /// Outward unit normal.
    pub normal: Vec<f64>,
    /// Surface-measure weight.
    pub weight: f64,
    /// Gauss–Kronecker curvature; `None` on piecewise-flat boundaries.
    pub curvature: Option<f64>,
    /// Positive minus negative principal curvatures, measured against the
    /// inward normal (so `d - 1` on any convex smooth body).
    pub signature: Option<i32>,
}

/// Boundary points whose outward normal is `±direction`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalSet {
    pub direction: Vec<f64>,
    pub points: Vec<BoundaryPoint>,
}

impl CriticalSet {
    /// Hessian signature of `∂Γ` written as a graph over the hyperplane
    /// orthogonal to `direction` (height measured along `direction`). This is
    /// the signature entering the stationary-phase phase factor.
    pub fn signature_along_direction(&self, point: &BoundaryPoint) -> i32 {
        let along = dot(&self.direction, &point.normal);
        let intrinsic = point.signature.unwrap_or(0);
        if along > 0.0 {
            -intrinsic
        } else {
            intrinsic
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(invalid(format!("dimension {d} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

/// Quadrature on the unit sphere `S^{d-1}`: points and weights.
pub fn sphere_quadrature(d: usize, resolution: usize) -> Vec<(Vec<f64>, f64)> {
    match d {
        1 => vec![(vec![-1.0], 1.0), (vec![1.0], 1.0)],
        2 => {
            let m = resolution.max(1);
            let h = 2.0 * PI / m as f64;
            (0..m)
                .map(|k| {
                    let t = k as f64 * h;
                    (vec![t.cos(), t.sin()], h)
                })
                .collect()
        }
        _ => {
            let rule = gauss_legendre(resolution.max(1)).expect("resolution >= 1");
            let sub = sphere_quadrature(d - 1, resolution);
            let mut out = Vec::with_capacity(rule.order() * sub.len());
            for (phi, w) in rule.mapped(0.0, PI) {
                let (s, c) = phi.sin_cos();
                let jac = w * s.powi(d as i32 - 2);
                for (q, wq) in &sub {
                    let mut p = Vec::with_capacity(d);
                    p.push(c);
                    p.extend(q.iter().map(|x| s * x));
                    out.push((p, jac * wq));
                }
            }
            out
        }
    }
}

impl Domain {
    pub fn interval_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len())?;
        if lower.len() != upper.len() {
            return Err(invalid("box bounds differ in dimension"));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(a, b)| !(b > a) || !a.is_finite() || !b.is_finite())
        {
            return Err(invalid("box needs finite lower < upper on every axis"));
        }
        Ok(Domain {
            shape: Shape::Box { lower, upper },
        })
    }

    /// `[-h_1, h_1] × … × [-h_d, h_d]`.
    pub fn centered_box(half_widths: &[f64]) -> Result<Self> {
        Self::interval_box(
            half_widths.iter().map(|h| -h).collect(),
            half_widths.to_vec(),
        )
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_dim(center.len())?;
        if !(radius > 0.0) || !radius.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(invalid("ball needs a finite centre and positive radius"));
        }
        Ok(Domain {
            shape: Shape::Ball { center, radius },
        })
    }

    pub fn unit_ball(d: usize) -> Result<Self> {
        Self::ball(vec![0.0; d], 1.0)
    }

    pub fn ellipsoid(center: Vec<f64>, semi_axes: Vec<f64>) -> Result<Self> {
        check_dim(center.len())?;
        if center.len() != semi_axes.len() {
            return Err(invalid(
                "ellipsoid centre and semi-axes differ in dimension",
            ));
        }
        if semi_axes.iter().any(|a| !(*a > 0.0) || !a.is_finite())
            || center.iter().any(|c| !c.is_finite())
        {
            return Err(invalid("ellipsoid needs positive finite semi-axes"));
        }
        Ok(Domain {
            shape: Shape::Ellipsoid { center, semi_axes },
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Box { lower, .. } => lower.len(),
            Shape::Ball { center, .. } | Shape::Ellipsoid { center, .. } => center.len(),
        }
    }

    pub fn is_box(&self) -> bool {
        matches!(self.shape, Shape::Box { .. })
    }

    pub fn is_ball(&self) -> bool {
        matches!(self.shape, Shape::Ball { .. })
    }

    /// Smooth boundary with nowhere-vanishing curvature (balls, ellipsoids;
    /// in one dimension every interval).
    pub fn is_smooth(&self) -> bool {
        !self.is_box()
    }

    pub fn center(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
            Shape::Ball { center, .. } | Shape::Ellipsoid { center, .. } => center.clone(),
        }
    }

    /// Symmetric under `p ↦ -p` (then the Fourier transform of the
    /// indicator is real).
    pub fn is_origin_symmetric(&self) -> bool {
        self.center().iter().all(|c| c.abs() < 1e-15)
    }

    pub fn volume(&self) -> f64 {
        match &self.shape {
            Shape::Box { lower, upper } => lower.iter().zip(upper).map(|(a, b)| b - a).product(),
            Shape::Ball { center, radius } => {
                unit_ball_volume(center.len()) * radius.powi(center.len() as i32)
            }
            Shape::Ellipsoid { semi_axes, .. } => {
                unit_ball_volume(semi_axes.len()) * semi_axes.iter().product::<f64>()
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.shape {
            Shape::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(a, b)| (b - a).powi(2))
                .sum::<f64>()
                .sqrt(),
            Shape::Ball { radius, .. } => 2.0 * radius,
            Shape::Ellipsoid { semi_axes, .. } => {
                2.0 * semi_axes.iter().fold(0.0f64, |m, a| m.max(*a))
            }
        }
    }

    /// Extent along the unit vector `e`: the largest `ρ` with
    /// `Ω ∩ (Ω + ρe)` non-empty.
    pub fn width(&self, e: &[f64]) -> f64 {
        match &self.shape {
            Shape::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .zip(e)
                .map(|((a, b), x)| (b - a) * x.abs())
                .sum(),
            Shape::Ball { radius, .. } => 2.0 * radius,
            Shape::Ellipsoid { semi_axes, .. } => {
                2.0 * semi_axes
                    .iter()
                    .zip(e)
                    .map(|(a, x)| (a * x).powi(2))
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }

    pub fn inradius(&self) -> f64 {
        match &self.shape {
            Shape::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(a, b)| 0.5 * (b - a))
                .fold(f64::INFINITY, f64::min),
            Shape::Ball { radius, .. } => *radius,
            Shape::Ellipsoid { semi_axes, .. } => {
                semi_axes.iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Radius of the ball centred at [`Domain::center`] containing the domain.
    pub fn circumradius(&self) -> f64 {
        match &self.shape {
            Shape::Box { .. } => 0.5 * self.diameter(),
            Shape::Ball { radius, .. } => *radius,
            Shape::Ellipsoid { semi_axes, .. } => semi_axes.iter().fold(0.0f64, |m, a| m.max(*a)),
        }
    }

    /// Smallest principal radius of curvature on the boundary.
    pub fn min_curvature_radius(&self) -> Result<f64> {
        match &self.shape {
            Shape::Box { lower, upper } if lower.len() == 1 => Ok(0.5 * (upper[0] - lower[0])),
            Shape::Box { .. } => Err(Error::UnsupportedDomain(
                "boxes have no boundary curvature".into(),
            )),
            Shape::Ball { radius, .. } => Ok(*radius),
            Shape::Ellipsoid { semi_axes, .. } => {
                let lo = semi_axes.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = semi_axes.iter().copied().fold(0.0, f64::max);
                Ok(lo * lo / hi)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.shape {
            Shape::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (a, b))| *v >= *a && *v <= *b),
            Shape::Ball { center, radius } => {
                x.iter()
                    .zip(center)
                    .map(|(v, c)| (v - c).powi(2))
                    .sum::<f64>()
                    <= radius * radius
            }
            Shape::Ellipsoid { center, semi_axes } => {
                x.iter()
                    .zip(center)
                    .zip(semi_axes)
                    .map(|((v, c), a)| ((v - c) / a).powi(2))
                    .sum::<f64>()
                    <= 1.0
            }
        }
    }

    /// Parameter interval `[t0, t1]` with `origin + t·dir` inside the domain,
    /// or `None` if the line misses it.
    pub fn chord(&self, origin: &[f64], dir: &[f64]) -> Option<(f64, f64)> {
        match &self.shape {
            Shape::Box { lower, upper } => {
                let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
                for i in 0..lower.len() {
                    if dir[i] == 0.0 {
                        if origin[i] < lower[i] || origin[i] > upper[i] {
                            return None;
                        }
                        continue;
                    }
                    let a = (lower[i] - origin[i]) / dir[i];
                    let b = (upper[i] - origin[i]) / dir[i];
                    t0 = t0.max(a.min(b));
                    t1 = t1.min(a.max(b));
                }
                (t0 <= t1).then_some((t0, t1))
            }
            Shape::Ball { center, radius } => {
                let axes = vec![*radius; center.len()];
                quadric_chord(center, &axes, origin, dir)
            }
            Shape::Ellipsoid { center, semi_axes } => quadric_chord(center, semi_axes, origin, dir),
        }
    }

    /// Closed-form or quadrature surface area.
    pub fn surface_area(&self) -> f64 {
        match &self.shape {
            Shape::Box { lower, upper } => {
                let lens: Vec<f64> = lower.iter().zip(upper).map(|(a, b)| b - a).collect();
                (0..lens.len())
                    .map(|i| {
                        2.0 * lens
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| *j != i)
                            .map(|(_, l)| l)
                            .product::<f64>()
                    })
                    .sum()
            }
            Shape::Ball { center, radius } => {
                unit_sphere_area(center.len()) * radius.powi(center.len() as i32 - 1)
            }
            Shape::Ellipsoid { .. } => self
                .boundary_quadrature(96)
                .expect("resolution above minimum")
                .iter()
                .map(|p| p.weight)
                .sum(),
        }
    }

    /// Gauss–Kronecker curvature at a boundary point of a smooth domain.
    pub fn gauss_curvature(&self, p: &[f64]) -> Result<f64> {
        match &self.shape {
            Shape::Box { lower, .. } if lower.len() == 1 => Ok(1.0),
            Shape::Box { .. } => Err(Error::UnsupportedDomain(
                "curvature of a box boundary is not defined".into(),
            )),
            Shape::Ball { center, radius } => Ok(radius.powi(-(center.len() as i32 - 1))),
            Shape::Ellipsoid { center, semi_axes } => Ok(ellipsoid_curvature(center, semi_axes, p)),
        }
    }

    /// Boundary quadrature with weights summing to the surface area. In one
    /// dimension the boundary is the two endpoints with unit weight.
    pub fn boundary_quadrature(&self, resolution: usize) -> Result<Vec<BoundaryPoint>> {
        if resolution < 4 {
            return Err(invalid("boundary resolution must be at least 4"));
        }
        let d = self.dim();
        let smooth_sig = Some(d as i32 - 1);
        Ok(match &self.shape {
            Shape::Box { lower, upper } => {
                let rule = gauss_legendre(resolution)?;
                let mut out = Vec::new();
                for axis in 0..d {
                    let others: Vec<usize> = (0..d).filter(|&j| j != axis).collect();
                    let face_nodes = tensor_nodes(
                        &rule,
                        &others
                            .iter()
                            .map(|&j| (lower[j], upper[j]))
                            .collect::<Vec<_>>(),
                    );
                    for (side, value) in [(-1.0, lower[axis]), (1.0, upper[axis])] {
                        let mut normal = vec![0.0; d];
                        normal[axis] = side;
                        for (coords, w) in &face_nodes {
                            let mut position = vec![0.0; d];
                            position[axis] = value;
                            for (k, &j) in others.iter().enumerate() {
                                position[j] = coords[k];
                            }
                            let curvature = (d == 1).then_some(1.0);
                            let signature = (d == 1).then_some(0);
                            out.push(BoundaryPoint {
                                position,
                                normal: normal.clone(),
                                weight: *w,
                                curvature,
                                signature,
                            });
                        }
                    }
                }
                out
            }
            Shape::Ball { center, radius } => {
                let k = radius.powi(-(d as i32 - 1));
                sphere_quadrature(d, resolution)
                    .into_iter()
                    .map(|(u, w)| BoundaryPoint {
                        position: u.iter().zip(center).map(|(x, c)| c + radius * x).collect(),
                        normal: u,
                        weight: w * radius.powi(d as i32 - 1),
                        curvature: Some(k),
                        signature: smooth_sig,
                    })
                    .collect()
            }
            Shape::Ellipsoid { center, semi_axes } => {
                let det: f64 = semi_axes.iter().product();
                sphere_quadrature(d, resolution)
                    .into_iter()
                    .map(|(u, w)| {
                        let grad: Vec<f64> = u.iter().zip(semi_axes).map(|(x, a)| x / a).collect();
                        let g = norm(&grad);
                        let position: Vec<f64> = u
                            .iter()
                            .zip(semi_axes)
                            .zip(center)
                            .map(|((x, a), c)| c + a * x)
                            .collect();
                        let curvature = ellipsoid_curvature(center, semi_axes, &position);
                        let weight = if d == 1 { w } else { w * det * g };
                        BoundaryPoint {
                            normal: grad.iter().map(|x| x / g).collect(),
                            position,
                            weight,
                            curvature: Some(curvature),
                            signature: smooth_sig,
                        }
                    })
                    .collect()
            }
        })
    }

    /// Interior quadrature: nodes and weights summing to the volume.
    pub fn volume_quadrature(&self, resolution: usize) -> Result<Vec<(Vec<f64>, f64)>> {
        if resolution == 0 {
            return Err(invalid("volume resolution must be positive"));
        }
        let d = self.dim();
        let rule = gauss_legendre(resolution)?;
        Ok(match &self.shape {
            Shape::Box { lower, upper } => tensor_nodes(
                &rule,
                &lower
                    .iter()
                    .zip(upper)
                    .map(|(a, b)| (*a, *b))
                    .collect::<Vec<_>>(),
            ),
            Shape::Ball { center, radius } => {
                ball_nodes(&rule, center, &vec![*radius; d], resolution)
            }
            Shape::Ellipsoid { center, semi_axes } => {
                ball_nodes(&rule, center, semi_axes, resolution)
            }
        })
    }

    /// Outward-normal critical points of `p ↦ p·e` on the boundary.
    pub fn critical_points(&self, e: &[f64]) -> Result<CriticalSet> {
        let d = self.dim();
        if e.len() != d {
            return Err(invalid("direction dimension mismatch"));
        }
        if (norm(e) - 1.0).abs() > 1e-10 {
            return Err(invalid("direction must be a unit vector"));
        }
        let axes: Vec<f64> =
            match &self.shape {
                Shape::Box { lower, upper } if d == 1 => vec![0.5 * (upper[0] - lower[0])],
                Shape::Box { .. } => return Err(Error::UnsupportedDomain(
                    "cubes are not covered: the Gauss map of a box has no isolated critical points"
                        .into(),
                )),
                Shape::Ball { radius, .. } => vec![*radius; d],
                Shape::Ellipsoid { semi_axes, .. } => semi_axes.clone(),
            };
        let center = self.center();
        let scaled: Vec<f64> = axes.iter().zip(e).map(|(a, x)| a * x).collect();
        let s = norm(&scaled);
        let mut points = Vec::with_capacity(2);
        for sign in [1.0, -1.0] {
            let position: Vec<f64> = center
                .iter()
                .zip(&axes)
                .zip(e)
                .map(|((c, a), x)| c + sign * a * a * x / s)
                .collect();
            let curvature = if d == 1 {
                1.0
            } else {
                ellipsoid_curvature(&center, &axes, &position)
            };
            points.push(BoundaryPoint {
                position,
                normal: e.iter().map(|x| sign * x).collect(),
                weight: 0.0,
                curvature: Some(curvature),
                signature: Some(d as i32 - 1),
            });
        }
        Ok(CriticalSet {
            direction: e.to_vec(),
            points,
        })
    }

    /// `|Ω ∩ (Ω + v)|`.
    pub fn intersection_volume(&self, v: &[f64]) -> f64 {
        match &self.shape {
            Shape::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .zip(v)
                .map(|((a, b), vi)| (b - a - vi.abs()).max(0.0))
                .product(),
            Shape::Ball { center, radius } => ball_overlap(center.len(), *radius, norm(v)),
            Shape::Ellipsoid { semi_axes, .. } => {
                let det: f64 = semi_axes.iter().product();
                let w: Vec<f64> = v.iter().zip(semi_axes).map(|(x, a)| x / a).collect();
                det * ball_overlap(semi_axes.len(), 1.0, norm(&w))
            }
        }
    }

    /// Seeded hit-or-miss estimate of `|Ω ∩ (Ω + v)|`.
    pub fn intersection_volume_mc(
        &self,
        v: &[f64],
        samples: usize,
        rng: &mut RandomSource,
    ) -> Result<McEstimate> {
        let shifted: Vec<f64> = vec![0.0; v.len()];
        let mut buf = shifted;
        crate::numerics::mc_integrate(
            |x| {
                for ((b, xi), vi) in buf.iter_mut().zip(x).zip(v) {
                    *b = xi - vi;
                }
                if self.contains(&buf) {
                    1.0
                } else {
                    0.0
                }
            },
            self,
            samples,
            rng,
        )
    }
}

impl RegionSampler for Domain {
    fn dim(&self) -> usize {
        Domain::dim(self)
    }

    fn volume(&self) -> f64 {
        Domain::volume(self)
    }

    fn sample_into(&self, rng: &mut RandomSource, out: &mut [f64]) {
        match &self.shape {
            Shape::Box { lower, upper } => {
                for ((o, a), b) in out.iter_mut().zip(lower).zip(upper) {
                    *o = rng.uniform_in(*a, *b);
                }
            }
            Shape::Ball { center, radius } => {
                rng.unit_vector(out);
                let r = radius * rng.uniform().powf(1.0 / center.len() as f64);
                for (o, c) in out.iter_mut().zip(center) {
                    *o = c + r * *o;
                }
            }
            Shape::Ellipsoid { center, semi_axes } => {
                rng.unit_vector(out);
                let r = rng.uniform().powf(1.0 / center.len() as f64);
                for ((o, c), a) in out.iter_mut().zip(center).zip(semi_axes) {
                    *o = c + a * r * *o;
                }
            }
        }
    }
}

/// Boundary pairing weight `w(x, p)` for [`coupling_integral`].
pub type CouplingWeight<'a> = &'a (dyn Fn(&[f64], &[f64]) -> f64 + Sync);

/// `∫_{∂Ω} ∫_{∂Γ} |n_x·n_p| w(x,p) dσ(p) dσ(x)`. Without a weight the inner
/// integral is done in closed form when one side is a ball, and the
/// box–box case reduces to parallel faces. In one dimension this is the
/// four-term endpoint sum.
pub fn coupling_integral(
    omega: &Domain,
    gamma: &Domain,
    weight: Option<CouplingWeight<'_>>,
    resolution: usize,
) -> Result<f64> {
    let d = omega.dim();
    if gamma.dim() != d {
        return Err(invalid(
            "coupling integral needs domains of equal dimension",
        ));
    }
    if weight.is_none() {
        let ball_factor = |r: f64| r.powi(d as i32 - 1) * 2.0 * unit_ball_volume(d - 1);
        match (omega.shape(), gamma.shape()) {
            (_, Shape::Ball { radius, .. }) => {
                return Ok(omega.surface_area() * ball_factor(*radius))
            }
            (Shape::Ball { radius, .. }, _) => {
                return Ok(gamma.surface_area() * ball_factor(*radius))
            }
            (Shape::Box { .. }, Shape::Box { .. }) => {
                let faces = |dom: &Domain| -> Vec<f64> {
                    let Shape::Box { lower, upper } = dom.shape() else {
                        unreachable!()
                    };
                    let lens: Vec<f64> = lower.iter().zip(upper).map(|(a, b)| b - a).collect();
                    (0..d)
                        .map(|i| {
                            2.0 * lens
                                .iter()
                                .enumerate()
                                .filter(|(j, _)| *j != i)
                                .map(|(_, l)| l)
                                .product::<f64>()
                        })
                        .collect()
                };
                return Ok(faces(omega)
                    .iter()
                    .zip(faces(gamma))
                    .map(|(a, b)| a * b)
                    .sum());
            }
            _ => {}
        }
    }
    let xs = omega.boundary_quadrature(resolution)?;
    let ps = gamma.boundary_quadrature(resolution)?;
    let mut total = 0.0;
    for x in &xs {
        let mut inner = 0.0;
        for p in &ps {
            let c = dot(&x.normal, &p.normal).abs();
            if c == 0.0 {
                continue;
            }
            let w = weight.map_or(1.0, |f| f(&x.position, &p.position));
            inner += c * w * p.weight;
        }
        total += inner * x.weight;
    }
    Ok(total)
}

/// `|B_r ∩ (B_r + v)|` with `|v| = delta`.
fn ball_overlap(d: usize, r: f64, delta: f64) -> f64 {
    if delta >= 2.0 * r {
        return 0.0;
    }
    match d {
        1 => 2.0 * r - delta,
        2 => {
            2.0 * r * r * (delta / (2.0 * r)).acos()
                - 0.5 * delta * (4.0 * r * r - delta * delta).sqrt()
        }
        3 => PI * (4.0 * r + delta) * (2.0 * r - delta).powi(2) / 12.0,
        _ => {
            // two caps of height r - delta/2; cap = r^d V_{d-1} ∫_0^{ψ0} sin^d ψ dψ
            let psi0 = (delta / (2.0 * r)).acos();
            let rule = gauss_legendre(48).expect("fixed order");
            let integral = rule.integrate(0.0, psi0, |psi| psi.sin().powi(d as i32));
            2.0 * r.powi(d as i32) * unit_ball_volume(d - 1) * integral
        }
    }
}

fn quadric_chord(center: &[f64], axes: &[f64], origin: &[f64], dir: &[f64]) -> Option<(f64, f64)> {
    let (mut a, mut b, mut c) = (0.0, 0.0, -1.0);
    for i in 0..center.len() {
        let o = (origin[i] - center[i]) / axes[i];
        let u = dir[i] / axes[i];
        a += u * u;
        b += 2.0 * o * u;
        c += o * o;
    }
    if a == 0.0 {
        return (c <= 0.0).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // stable roots
    let q = -0.5 * (b + sq.copysign(b));
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    Some((r1.min(r2), r1.max(r2)))
}

/// `K = 1 / (Π a_i² · (Σ y_i²/a_i⁴)^{(d+1)/2})` for the level set
/// `Σ y_i²/a_i² = 1`, `y = p - center`.
fn ellipsoid_curvature(center: &[f64], axes: &[f64], p: &[f64]) -> f64 {
    let d = axes.len();
    if d == 1 {
        return 1.0;
    }
    let prod: f64 = axes.iter().map(|a| a * a).product();
    let s: f64 = p
        .iter()
        .zip(center)
        .zip(axes)
        .map(|((x, c), a)| (x - c).powi(2) / a.powi(4))
        .sum();
    1.0 / (prod * s.powf(0.5 * (d as f64 + 1.0)))
}

fn tensor_nodes(
    rule: &crate::numerics::QuadratureRule,
    bounds: &[(f64, f64)],
) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for &(a, b) in bounds {
        let axis: Vec<(f64, f64)> = rule.mapped(a, b).collect();
        out = out
            .into_iter()
            .flat_map(|(p, w)| {
                axis.iter().map(move |&(x, wx)| {
                    let mut q = p.clone();
                    q.push(x);
                    (q, w * wx)
                })
            })
            .collect();
    }
    out
}

fn ball_nodes(
    rule: &crate::numerics::QuadratureRule,
    center: &[f64],
    axes: &[f64],
    resolution: usize,
) -> Vec<(Vec<f64>, f64)> {
    let d = center.len();
    let det: f64 = axes.iter().product();
    if d == 1 {
        return rule
            .mapped(center[0] - axes[0], center[0] + axes[0])
            .map(|(x, w)| (vec![x], w))
            .collect();
    }
    let sphere = sphere_quadrature(d, resolution);
    let mut out = Vec::with_capacity(rule.order() * sphere.len());
    for (rho, wr) in rule.mapped(0.0, 1.0) {
        let radial = wr * rho.powi(d as i32 - 1) * det;
        for (u, wu) in &sphere {
            let p = u
                .iter()
                .zip(axes)
                .zip(center)
                .map(|((x, a), c)| c + a * rho * x)
                .collect();
            out.push((p, radial * wu));
        }
    }
    out
}
