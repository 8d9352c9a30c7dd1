//! Line-of-sight optical MIMO channel built from room geometry.
//!
//! Each LED is a Lambertian emitter and each photodiode sits behind a
//! concentrator with a hard field of view. The DC gain between LED `p` and
//! PD `q` is
//!
//! ```text
//! h_pq = A_q / d_pq^2 * R(phi_p) * cos(psi_pq)   if psi_pq <= phi_c
//!        0                                       otherwise
//! ```
//!
//! where `phi_p` is the emission angle at the LED and `psi_pq` the incidence
//! angle at the PD. Row `q` of the [`ChannelMatrix`] is PD `q`, column `p`
//! is LED `p`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use nalgebra::{DMatrix, Vector3};

use crate::{Error, Result};

pub type Point3 = Vector3<f64>;

const UNIT_NORM_TOL: f64 = 1e-12;

/// Emitter and receiver optics shared by every LED/PD pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalParams {
    /// Lambertian emission order.
    pub lambda_order: f64,
    /// Receiver field-of-view half-angle in radians.
    pub phi_c: f64,
    /// Concentrator refractive index.
    pub gamma: f64,
    /// Physical photodiode area in m².
    pub a_pd: f64,
}

impl OpticalParams {
    /// Order 1, 62° FOV, refractive index 1.5, 1 cm² photodiodes.
    pub fn reference() -> Self {
        Self {
            lambda_order: 1.0,
            phi_c: 62f64.to_radians(),
            gamma: 1.5,
            a_pd: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_order > 0.0 && self.lambda_order.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambertian order must be positive, got {}",
                self.lambda_order
            )));
        }
        if !(self.phi_c > 0.0 && self.phi_c <= FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!(
                "field of view must lie in (0, pi/2], got {}",
                self.phi_c
            )));
        }
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "refractive index must be >= 1, got {}",
                self.gamma
            )));
        }
        if !(self.a_pd > 0.0 && self.a_pd.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "photodiode area must be positive, got {}",
                self.a_pd
            )));
        }
        Ok(())
    }
}

impl Default for OpticalParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Lambertian radiant intensity `(λ+1)/(2π) cos^λ(φ)` in W/sr per W emitted.
pub fn lambertian_radiant_intensity(phi: f64, lambda_order: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_2).contains(&phi) {
        return Err(Error::Domain(format!(
            "emission angle {phi} outside [0, pi/2]"
        )));
    }
    if !(lambda_order > 0.0) {
        return Err(Error::Domain(format!(
            "lambertian order must be positive, got {lambda_order}"
        )));
    }
    // cos(pi/2) is 6e-17 in floating point; the closed form says 0.
    let c = if phi == FRAC_PI_2 { 0.0 } else { phi.cos() };
    Ok((lambda_order + 1.0) / (2.0 * PI) * c.powf(lambda_order))
}

/// Concentrator-enhanced collection area `γ² A_PD / sin²(φ_c)`.
pub fn effective_collection_area(params: &OpticalParams) -> Result<f64> {
    if params.phi_c == 0.0 {
        return Err(Error::Singular("field of view of zero".into()));
    }
    params.validate()?;
    let s = params.phi_c.sin();
    Ok(params.gamma * params.gamma * params.a_pd / (s * s))
}

/// Fixture placement and optics for one link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGeometry {
    led_positions: Vec<Point3>,
    led_orientations: Vec<Point3>,
    pd_positions: Vec<Point3>,
    pd_orientations: Vec<Point3>,
    params: OpticalParams,
}

impl ChannelGeometry {
    /// LEDs pointing straight down, PDs straight up.
    pub fn new(
        led_positions: Vec<Point3>,
        pd_positions: Vec<Point3>,
        params: OpticalParams,
    ) -> Result<Self> {
        let down = vec![-Point3::z(); led_positions.len()];
        let up = vec![Point3::z(); pd_positions.len()];
        Self::with_orientations(led_positions, down, pd_positions, up, params)
    }

    pub fn with_orientations(
        led_positions: Vec<Point3>,
        led_orientations: Vec<Point3>,
        pd_positions: Vec<Point3>,
        pd_orientations: Vec<Point3>,
        params: OpticalParams,
    ) -> Result<Self> {
        params.validate()?;
        if led_positions.is_empty() || pd_positions.is_empty() {
            return Err(Error::InvalidParameter(
                "need at least one LED and one PD".into(),
            ));
        }
        if led_orientations.len() != led_positions.len()
            || pd_orientations.len() != pd_positions.len()
        {
            return Err(Error::Dimension(
                "one orientation per fixture is required".into(),
            ));
        }
        for o in led_orientations.iter().chain(&pd_orientations) {
            if (o.norm() - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvalidParameter(format!(
                    "orientation {o:?} is not a unit vector"
                )));
            }
        }
        let all_finite = led_positions
            .iter()
            .chain(&pd_positions)
            .all(|p| p.iter().all(|c| c.is_finite()));
        if !all_finite {
            return Err(Error::InvalidParameter("non-finite position".into()));
        }
        let top_pd = pd_positions
            .iter()
            .map(|p| p.z)
            .fold(f64::NEG_INFINITY, f64::max);
        if let Some(led) = led_positions.iter().find(|l| l.z <= top_pd) {
            return Err(Error::InvalidParameter(format!(
                "LED at {led:?} is not above the receiving plane (z = {top_pd})"
            )));
        }
        Ok(Self {
            led_positions,
            led_orientations,
            pd_positions,
            pd_orientations,
            params,
        })
    }

    /// 10 m × 10 m × 3 m room, 3×3 LEDs at 1 m pitch on the ceiling, 8×8 PDs
    /// at 0.5 m pitch on a plane 2.15 m below, both arrays centred on the room.
    pub fn reference() -> Self {
        let room = Room {
            length: 10.0,
            width: 10.0,
            height: 3.0,
        };
        let leds = room.centered_grid(3, 3, 1.0, room.height);
        let pds = room.centered_grid(8, 8, 0.5, room.height - 2.15);
        Self::new(leds, pds, OpticalParams::reference()).expect("reference scene is valid")
    }

    pub fn num_leds(&self) -> usize {
        self.led_positions.len()
    }

    pub fn num_pds(&self) -> usize {
        self.pd_positions.len()
    }

    pub fn params(&self) -> &OpticalParams {
        &self.params
    }

    pub fn led_positions(&self) -> &[Point3] {
        &self.led_positions
    }

    pub fn pd_positions(&self) -> &[Point3] {
        &self.pd_positions
    }

    /// Returns `(distance, emission angle, incidence angle)` for LED `p`, PD `q`.
    pub fn link_angles(&self, led_index: usize, pd_index: usize) -> Result<(f64, f64, f64)> {
        let led = self
            .led_positions
            .get(led_index)
            .ok_or_else(|| Error::Dimension(format!("LED index {led_index} out of range")))?;
        let pd = self
            .pd_positions
            .get(pd_index)
            .ok_or_else(|| Error::Dimension(format!("PD index {pd_index} out of range")))?;
        let ray = pd - led;
        let d = ray.norm();
        if d == 0.0 {
            return Err(Error::Singular(format!(
                "LED {led_index} and PD {pd_index} are coincident"
            )));
        }
        let dir = ray / d;
        let emission = angle_between(&self.led_orientations[led_index], &dir);
        let incidence = angle_between(&self.pd_orientations[pd_index], &(-dir));
        Ok((d, emission, incidence))
    }
}

fn angle_between(a: &Point3, b: &Point3) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos()
}

/// Axis-aligned room with the origin at one floor corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Room {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl Room {
    /// `nx × ny` grid with the given pitch at height `z`, centred on the room.
    /// Points are ordered with x varying fastest.
    pub fn centered_grid(&self, nx: usize, ny: usize, spacing: f64, z: f64) -> Vec<Point3> {
        let cx = self.length / 2.0;
        let cy = self.width / 2.0;
        let x0 = cx - spacing * (nx as f64 - 1.0) / 2.0;
        let y0 = cy - spacing * (ny as f64 - 1.0) / 2.0;
        (0..ny)
            .flat_map(|iy| {
                (0..nx).map(move |ix| {
                    Point3::new(x0 + spacing * ix as f64, y0 + spacing * iy as f64, z)
                })
            })
            .collect()
    }
}

/// LOS DC gain between LED `led_index` and PD `pd_index`.
pub fn los_dc_gain(led_index: usize, pd_index: usize, geometry: &ChannelGeometry) -> Result<f64> {
    let (d, emission, incidence) = geometry.link_angles(led_index, pd_index)?;
    let params = geometry.params();
    if incidence > params.phi_c || emission > FRAC_PI_2 {
        return Ok(0.0);
    }
    let area = effective_collection_area(params)?;
    let intensity = lambertian_radiant_intensity(emission, params.lambda_order)?;
    Ok(area / (d * d) * intensity * incidence.cos())
}

/// `N_r × N_t` matrix of DC gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    gains: DMatrix<f64>,
}

impl ChannelMatrix {
    pub fn from_gains(gains: DMatrix<f64>) -> Result<Self> {
        if gains.nrows() == 0 || gains.ncols() == 0 {
            return Err(Error::Dimension("empty channel matrix".into()));
        }
        if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InvalidParameter(
                "channel gains must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { gains })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            gains: DMatrix::identity(n, n),
        }
    }

    pub fn gains(&self) -> &DMatrix<f64> {
        &self.gains
    }

    pub fn num_pds(&self) -> usize {
        self.gains.nrows()
    }

    pub fn num_leds(&self) -> usize {
        self.gains.ncols()
    }

    /// Row-major CSV with a `pd_index,led_0,...` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# format=1\npd_index");
        for p in 0..self.num_leds() {
            write!(out, ",led_{p}").unwrap();
        }
        out.push('\n');
        for q in 0..self.num_pds() {
            write!(out, "{q}").unwrap();
            for p in 0..self.num_leds() {
                write!(out, ",{:e}", self.gains[(q, p)]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses the output of [`ChannelMatrix::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let nt = reader.headers()?.len().saturating_sub(1);
        let mut values = Vec::new();
        let mut rows = 0;
        for record in reader.records() {
            let record = record?;
            let index: usize = record[0]
                .parse()
                .map_err(|e| Error::Parse(format!("pd_index {:?}: {e}", &record[0])))?;
            if index != rows {
                return Err(Error::Parse(format!("row {rows} has pd_index {index}")));
            }
            for field in record.iter().skip(1) {
                values.push(
                    field
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("gain {field:?}: {e}")))?,
                );
            }
            rows += 1;
        }
        if nt == 0 || values.len() != rows * nt {
            return Err(Error::Parse("ragged or empty channel CSV".into()));
        }
        Self::from_gains(DMatrix::from_row_slice(rows, nt, &values))
    }
}

pub fn build_channel_matrix(geometry: &ChannelGeometry) -> Result<ChannelMatrix> {
    let mut gains = DMatrix::zeros(geometry.num_pds(), geometry.num_leds());
    for q in 0..geometry.num_pds() {
        for p in 0..geometry.num_leds() {
            gains[(q, p)] = los_dc_gain(p, q, geometry)?;
        }
    }
    Ok(ChannelMatrix { gains })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single(led: Point3, pd: Point3) -> ChannelGeometry {
        ChannelGeometry::new(vec![led], vec![pd], OpticalParams::reference()).unwrap()
    }

    #[test]
    fn radiant_intensity_values() {
        assert_relative_eq!(
            lambertian_radiant_intensity(0.0, 1.0).unwrap(),
            1.0 / PI,
            max_relative = 1e-15
        );
        assert_eq!(lambertian_radiant_intensity(FRAC_PI_2, 1.0).unwrap(), 0.0);
        // 2/(2π) * 0.5
        assert_relative_eq!(
            lambertian_radiant_intensity(60f64.to_radians(), 1.0).unwrap(),
            0.159_154_943_091_895_35,
            max_relative = 1e-12
        );
        assert!(matches!(
            lambertian_radiant_intensity(-0.1, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(lambertian_radiant_intensity(1.6, 1.0).is_err());
    }

    #[test]
    fn collection_area_values() {
        let mut p = OpticalParams {
            lambda_order: 1.0,
            phi_c: FRAC_PI_2,
            gamma: 1.0,
            a_pd: 1e-4,
        };
        assert_relative_eq!(
            effective_collection_area(&p).unwrap(),
            1e-4,
            max_relative = 1e-15
        );
        p.gamma = 1.5;
        assert_relative_eq!(
            effective_collection_area(&p).unwrap(),
            2.25e-4,
            max_relative = 1e-15
        );
        p.phi_c = 62f64.to_radians();
        // 2.25e-4 / sin²(62°), high-precision reference
        assert_relative_eq!(
            effective_collection_area(&p).unwrap(),
            2.886_108_569_364_989e-4,
            max_relative = 1e-10
        );
        p.phi_c = 0.0;
        assert!(matches!(
            effective_collection_area(&p),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn on_axis_gain() {
        let g = single(Point3::new(0.0, 0.0, 2.15), Point3::zeros());
        let h = los_dc_gain(0, 0, &g).unwrap();
        let expected = 2.886_108_569_364_989e-4 / (2.15 * 2.15) / PI;
        assert_relative_eq!(h, expected, max_relative = 1e-10);
        assert_relative_eq!(h, 1.9874e-5, max_relative = 1e-4);

        let far = single(Point3::new(0.0, 0.0, 4.30), Point3::zeros());
        assert_relative_eq!(
            los_dc_gain(0, 0, &far).unwrap(),
            h / 4.0,
            max_relative = 1e-14
        );

        let m = build_channel_matrix(&g).unwrap();
        assert_eq!(m.gains().shape(), (1, 1));
        assert_eq!(m.gains()[(0, 0)], h);
    }

    #[test]
    fn outside_fov_is_zero() {
        // 70° incidence: horizontal offset 2.15 tan(70°)
        let x = 2.15 * 70f64.to_radians().tan();
        let g = single(Point3::new(x, 0.0, 2.15), Point3::zeros());
        assert_eq!(los_dc_gain(0, 0, &g).unwrap(), 0.0);
        let x = 2.15 * 61.9f64.to_radians().tan();
        let g = single(Point3::new(x, 0.0, 2.15), Point3::zeros());
        assert!(los_dc_gain(0, 0, &g).unwrap() > 0.0);
    }

    #[test]
    fn geometry_validation() {
        let p = OpticalParams::reference();
        assert!(ChannelGeometry::new(vec![], vec![Point3::zeros()], p).is_err());
        assert!(ChannelGeometry::new(vec![Point3::zeros()], vec![Point3::zeros()], p).is_err());
        let tilted = Point3::new(0.0, 0.1, -1.0);
        assert!(ChannelGeometry::with_orientations(
            vec![Point3::z()],
            vec![tilted],
            vec![Point3::zeros()],
            vec![Point3::z()],
            p
        )
        .is_err());
        assert!(ChannelGeometry::with_orientations(
            vec![Point3::z()],
            vec![tilted.normalize()],
            vec![Point3::zeros()],
            vec![Point3::z()],
            p
        )
        .is_ok());
    }

    #[test]
    fn reference_matrix_shape_and_peak() {
        let g = ChannelGeometry::reference();
        let h = build_channel_matrix(&g).unwrap();
        assert_eq!(h.gains().shape(), (64, 9));
        assert!(h.gains().iter().all(|v| *v >= 0.0));
        let (mut best, mut best_off) = (0.0, f64::INFINITY);
        let (mut argmax, mut argmin_off) = ((0, 0), (0, 0));
        for q in 0..64 {
            for p in 0..9 {
                if h.gains()[(q, p)] > best {
                    best = h.gains()[(q, p)];
                    argmax = (q, p);
                }
                let off = (g.pd_positions()[q] - g.led_positions()[p]).xy().norm();
                if off < best_off {
                    best_off = off;
                    argmin_off = (q, p);
                }
            }
        }
        let off_at_max = (g.pd_positions()[argmax.0] - g.led_positions()[argmax.1])
            .xy()
            .norm();
        assert_relative_eq!(off_at_max, best_off, epsilon = 1e-12);
        let _ = argmin_off;
        let csv = h.to_csv();
        let rows: Vec<_> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 65);
        assert!(rows[0].starts_with("pd_index,led_0"));
        assert_eq!(rows[1].split(',').count(), 10);
        assert_eq!(ChannelMatrix::from_csv(&csv).unwrap(), h);
    }

    #[test]
    fn channel_csv_rejects_malformed_input() {
        assert!(ChannelMatrix::from_csv("pd_index,led_0\n1,0.5\n").is_err());
        assert!(ChannelMatrix::from_csv("pd_index,led_0,led_1\n0,0.5\n").is_err());
        assert!(ChannelMatrix::from_csv("pd_index,led_0\n0,-1\n").is_err());
        let id = ChannelMatrix::from_csv(&ChannelMatrix::identity(3).to_csv()).unwrap();
        assert_eq!(id, ChannelMatrix::identity(3));
    }

    #[test]
    fn mirror_symmetry_is_exact() {
        let p = OpticalParams::reference();
        let leds = vec![Point3::new(0.3, 0.7, 2.0), Point3::new(-0.4, -0.7, 2.0)];
        let pds = vec![
            Point3::new(0.1, 0.2, 0.0),
            Point3::new(0.5, -0.9, 0.0),
            Point3::new(-1.0, 0.4, 0.0),
        ];
        let flip = |v: &Point3| Point3::new(v.x, -v.y, v.z);
        let g = ChannelGeometry::new(leds.clone(), pds.clone(), p).unwrap();
        let gm = ChannelGeometry::new(
            leds.iter().map(flip).collect(),
            pds.iter().map(flip).collect(),
            p,
        )
        .unwrap();
        let h = build_channel_matrix(&g).unwrap();
        let hm = build_channel_matrix(&gm).unwrap();
        assert_eq!(h, hm);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn point() -> impl Strategy<Value = Point3> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| Point3::new(x, y, 0.0))
    }

    proptest! {
        #[test]
        fn gains_nonnegative_and_zero_only_outside_fov(
            led in (-3.0..3.0f64, -3.0..3.0f64, 0.5..3.0f64),
            pd in point(),
        ) {
            let g = ChannelGeometry::new(
                vec![Point3::new(led.0, led.1, led.2)], vec![pd], OpticalParams::reference()
            ).unwrap();
            let h = los_dc_gain(0, 0, &g).unwrap();
            let (_, _, inc) = g.link_angles(0, 0).unwrap();
            prop_assert!(h >= 0.0);
            prop_assert_eq!(h == 0.0, inc > g.params().phi_c);
        }

        #[test]
        fn on_axis_gain_decreases_with_distance(z1 in 0.2..5.0f64, dz in 1e-3..5.0f64) {
            let p = OpticalParams::reference();
            let near = ChannelGeometry::new(vec![Point3::new(0.0, 0.0, z1)], vec![Point3::zeros()], p).unwrap();
            let far = ChannelGeometry::new(vec![Point3::new(0.0, 0.0, z1 + dz)], vec![Point3::zeros()], p).unwrap();
            prop_assert!(los_dc_gain(0, 0, &near).unwrap() > los_dc_gain(0, 0, &far).unwrap());
        }

        #[test]
        fn permutation_equivariance(rot_led in 0usize..9, rot_pd in 0usize..64) {
            let g = ChannelGeometry::reference();
            let mut leds = g.led_positions().to_vec();
            let mut pds = g.pd_positions().to_vec();
            leds.rotate_left(rot_led);
            pds.rotate_left(rot_pd);
            let gp = ChannelGeometry::new(leds, pds, *g.params()).unwrap();
            let h = build_channel_matrix(&g).unwrap();
            let hp = build_channel_matrix(&gp).unwrap();
            for q in 0..64 {
                for p in 0..9 {
                    prop_assert_eq!(
                        hp.gains()[(q, p)],
                        h.gains()[((q + rot_pd) % 64, (p + rot_led) % 9)]
                    );
                }
            }
        }

        #[test]
        fn gain_scales_with_pd_area(c in 0.1..10.0f64) {
            let g = ChannelGeometry::reference();
            let mut params = *g.params();
            params.a_pd *= c;
            let gc = ChannelGeometry::new(g.led_positions().to_vec(), g.pd_positions().to_vec(), params).unwrap();
            let h = build_channel_matrix(&g).unwrap();
            let hc = build_channel_matrix(&gc).unwrap();
            for (a, b) in h.gains().iter().zip(hc.gains().iter()) {
                prop_assert!((b - c * a).abs() <= 1e-12 * (c * a).abs());
            }
        }
    }
}
