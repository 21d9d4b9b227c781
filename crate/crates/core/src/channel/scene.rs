use num_complex::Complex64;

use super::UlaGeometry;
use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// One ray reaching the array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationPath {
    /// Degrees from broadside, positive towards the array's +angle side.
    pub azimuth_deg: f64,
    /// Seconds.
    pub delay: f64,
    pub gain: Complex64,
}

/// Vertical reflecting wall standing on the ground between two horizontal
/// endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub start: [f64; 2],
    pub end: [f64; 2],
    /// Height above the ground plane, metres.
    pub height: f64,
}

/// Flat ground, an optional wall, one transmitter and the receive array.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneGeometry {
    pub tx_position: [f64; 3],
    /// Position of array element 0.
    pub rx_position: [f64; 3],
    pub ground_height: f64,
    pub wall: Option<Wall>,
    pub ground_reflection: Complex64,
    pub wall_reflection: Complex64,
    /// Horizontal direction of the array broadside, degrees from +x
    /// counter-clockwise. Positive azimuths lie counter-clockwise of it.
    pub broadside_heading_deg: f64,
}

/// Parking-lot style layout used by the campaigns: array at the origin
/// facing +x, transmitter on a ray at `angle_deg` at horizontal `distance`,
/// and a wall parallel to the broadside at `standoff` metres whose extent
/// places its specular point on the line of sight only for distances in
/// `[reflect_min, reflect_max]` (broadside transmitter).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    pub tx_height: f64,
    pub rx_height: f64,
    pub wall_standoff: f64,
    pub reflect_min: f64,
    pub reflect_max: f64,
    pub wall_height: f64,
    pub ground_reflection: Complex64,
    pub wall_reflection: Complex64,
    pub with_wall: bool,
    pub with_ground: bool,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            tx_height: 1.5,
            rx_height: 1.5,
            wall_standoff: 20.0,
            reflect_min: 20.0,
            reflect_max: 45.0,
            wall_height: 8.0,
            ground_reflection: Complex64::new(-0.7, 0.0),
            wall_reflection: Complex64::new(0.5, 0.0),
            with_wall: true,
            with_ground: true,
        }
    }
}

impl SceneParams {
    pub fn scene(&self, distance: f64, angle_deg: f64) -> SceneGeometry {
        let a = angle_deg.to_radians();
        SceneGeometry {
            tx_position: [distance * a.cos(), distance * a.sin(), self.tx_height],
            rx_position: [0.0, 0.0, self.rx_height],
            ground_height: 0.0,
            wall: self.with_wall.then_some(Wall {
                start: [self.reflect_min / 2.0, self.wall_standoff],
                end: [self.reflect_max / 2.0, self.wall_standoff],
                height: self.wall_height,
            }),
            ground_reflection: if self.with_ground {
                self.ground_reflection
            } else {
                Complex64::new(0.0, 0.0)
            },
            wall_reflection: self.wall_reflection,
            broadside_heading_deg: 0.0,
        }
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

impl SceneGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.tx_position[2] <= self.ground_height || self.rx_position[2] <= self.ground_height {
            return Err(Error::Config("transmitter and receiver must be above ground".into()));
        }
        if norm(sub(self.tx_position, self.rx_position)) == 0.0 {
            return Err(Error::Config("transmitter and receiver coincide".into()));
        }
        if let Some(w) = self.wall {
            if w.start == w.end || w.height <= 0.0 {
                return Err(Error::Config("degenerate wall".into()));
            }
        }
        Ok(())
    }

    /// Distance between transmitter and receiver.
    pub fn los_distance(&self) -> f64 {
        norm(sub(self.tx_position, self.rx_position))
    }

    /// Angle from broadside, in the plane containing the array axis, of a
    /// wave arriving from `source` (true or image position).
    fn arrival_angle(&self, source: [f64; 3]) -> f64 {
        let d = sub(source, self.rx_position);
        let h = self.broadside_heading_deg.to_radians();
        // unit vector along increasing azimuth; element m sits at -m·d along it
        let axis = [-h.sin(), h.cos(), 0.0];
        let s = (d[0] * axis[0] + d[1] * axis[1] + d[2] * axis[2]) / norm(d);
        s.clamp(-1.0, 1.0).asin().to_degrees()
    }

    fn path_from(&self, source: [f64; 3], coeff: Complex64) -> Option<PropagationPath> {
        let length = norm(sub(source, self.rx_position));
        let azimuth_deg = self.arrival_angle(source);
        (azimuth_deg.abs() < 90.0).then(|| PropagationPath {
            azimuth_deg,
            delay: length / SPEED_OF_LIGHT,
            gain: coeff / length,
        })
    }

    /// Specular wall image of the transmitter, when the reflection point
    /// lies on the wall segment.
    fn wall_image(&self, wall: &Wall) -> Option<[f64; 3]> {
        let dir = [wall.end[0] - wall.start[0], wall.end[1] - wall.start[1]];
        let len = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
        let normal = [-dir[1] / len, dir[0] / len];
        let side = |p: [f64; 3]| (p[0] - wall.start[0]) * normal[0] + (p[1] - wall.start[1]) * normal[1];
        let s_tx = side(self.tx_position);
        let s_rx = side(self.rx_position);
        if s_tx * s_rx <= 0.0 {
            return None;
        }
        let image = [
            self.tx_position[0] - 2.0 * s_tx * normal[0],
            self.tx_position[1] - 2.0 * s_tx * normal[1],
            self.tx_position[2],
        ];
        // rx at signed distance s_rx, image at -s_tx: crossing fraction along rx→image
        let t = s_rx / (s_rx + s_tx);
        let hit = [
            self.rx_position[0] + t * (image[0] - self.rx_position[0]),
            self.rx_position[1] + t * (image[1] - self.rx_position[1]),
            self.rx_position[2] + t * (image[2] - self.rx_position[2]),
        ];
        let along = ((hit[0] - wall.start[0]) * dir[0] + (hit[1] - wall.start[1]) * dir[1]) / (len * len);
        let z = hit[2] - self.ground_height;
        ((0.0..=1.0).contains(&along) && (0.0..=wall.height).contains(&z)).then_some(image)
    }
}

/// Line of sight, ground bounce (image across the ground plane) and, when
/// its specular point falls on the wall, one wall bounce. Gains follow
/// free-space `1/distance` times the reflection coefficient; delays are
/// absolute path lengths over `c`.
pub fn compute_scene_paths(scene: &SceneGeometry, geom: &UlaGeometry) -> Result<Vec<PropagationPath>> {
    scene.validate()?;
    geom.validate()?;
    let mut paths = Vec::with_capacity(3);
    paths.extend(scene.path_from(scene.tx_position, Complex64::new(1.0, 0.0)));
    if scene.ground_reflection != Complex64::new(0.0, 0.0) {
        let t = scene.tx_position;
        let ground_image = [t[0], t[1], 2.0 * scene.ground_height - t[2]];
        paths.extend(scene.path_from(ground_image, scene.ground_reflection));
    }
    if let Some(wall) = scene.wall {
        if let Some(image) = scene.wall_image(&wall) {
            paths.extend(scene.path_from(image, scene.wall_reflection));
        }
    }
    if paths.is_empty() {
        return Err(Error::NoPaths);
    }
    Ok(paths)
}

/// Shifts delays so the earliest arrival has zero delay; the carrier phase
/// of each path is re-referenced to that arrival.
pub fn relative_to_first_arrival(paths: &[PropagationPath]) -> Vec<PropagationPath> {
    let first = paths.iter().map(|p| p.delay).fold(f64::INFINITY, f64::min);
    paths
        .iter()
        .map(|p| PropagationPath {
            delay: p.delay - first,
            ..*p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> UlaGeometry {
        UlaGeometry::half_wavelength(3, 2.4e9).unwrap()
    }

    fn flat(distance: f64, h: f64) -> SceneGeometry {
        SceneParams {
            tx_height: h,
            rx_height: h,
            with_wall: false,
            ..SceneParams::default()
        }
        .scene(distance, 0.0)
    }

    #[test]
    fn ground_bounce_excess_delay() {
        let (d, h) = (30.0, 1.5);
        let paths = compute_scene_paths(&flat(d, h), &geom()).unwrap();
        assert_eq!(paths.len(), 2);
        let excess = paths[1].delay - paths[0].delay;
        let want = ((d * d + 4.0 * h * h).sqrt() - d) / SPEED_OF_LIGHT;
        assert!((excess - want).abs() < 1e-18);
        assert!(paths[0].azimuth_deg.abs() < 1e-9);
        assert!((paths[0].gain.re - 1.0 / d).abs() < 1e-15);
        assert!(paths[1].gain.re < 0.0);
    }

    #[test]
    fn wall_between_ends_is_ignored() {
        let mut scene = flat(30.0, 1.5);
        // off the line of sight, transmitter and receiver on opposite faces
        scene.wall = Some(Wall {
            start: [15.0, 5.0],
            end: [15.0, 10.0],
            height: 10.0,
        });
        assert_eq!(compute_scene_paths(&scene, &geom()).unwrap().len(), 2);
        // behind the transmitter: bounces straight back along broadside
        scene.wall = Some(Wall {
            start: [60.0, -10.0],
            end: [60.0, 10.0],
            height: 10.0,
        });
        let paths = compute_scene_paths(&scene, &geom()).unwrap();
        assert_eq!(paths.len(), 3);
        assert!((paths[2].delay * SPEED_OF_LIGHT - 90.0).abs() < 1e-9);
        assert!(paths[2].azimuth_deg.abs() < 1e-9);
    }

    #[test]
    fn los_angle_follows_transmitter() {
        let p = SceneParams { with_wall: false, ..SceneParams::default() };
        for angle in [-40.0, 0.0, 17.5] {
            let paths = compute_scene_paths(&p.scene(25.0, angle), &geom()).unwrap();
            assert!((paths[0].azimuth_deg - angle).abs() < 1e-9, "{angle}");
            // ground bounce shares the azimuth plane but arrives from below
            assert!(paths[1].azimuth_deg.abs() <= angle.abs() + 1e-9);
        }
    }

    #[test]
    fn wall_bounce_only_inside_window() {
        let p = SceneParams::default();
        for d in [10.0, 15.0, 19.0, 46.0, 50.0] {
            let paths = compute_scene_paths(&p.scene(d, 0.0), &geom()).unwrap();
            assert_eq!(paths.len(), 2, "distance {d}");
        }
        for d in [20.0, 30.0, 45.0] {
            let paths = compute_scene_paths(&p.scene(d, 0.0), &geom()).unwrap();
            assert_eq!(paths.len(), 3, "distance {d}");
            assert!(paths[2].azimuth_deg > 0.0);
            assert!(paths[2].delay > paths[0].delay);
        }
    }

    #[test]
    fn rejects_underground_nodes() {
        let mut s = flat(10.0, 1.5);
        s.tx_position[2] = -1.0;
        assert!(compute_scene_paths(&s, &geom()).is_err());
    }
}
