use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};

use super::{ScenarioError, ScenarioKind};
use crate::classical::TransportScheme;
use crate::gauge::HolonomyClass;
use crate::phase::DEFAULT_CLOSURE_TOL;
use crate::Constants;

type Res<T> = Result<T, ScenarioError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpherePreset {
    /// North pole, then down to the x and y axes: encloses one octant.
    Octant,
    /// North pole and half of the equator: encloses solid angle π.
    HalfEquator,
}

impl SpherePreset {
    pub fn vertices(&self) -> Vec<[f64; 3]> {
        match self {
            Self::Octant => vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            Self::HalfEquator => vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassifySubject {
    Mobius,
    Sphere,
    Solenoid { flux: f64, radius: f64 },
    Cone { deficit: f64 },
    Uniform { b: f64 },
}

/// Validated, kind-specific parameters with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    /// Spin-1/2 ground state dragged by a field on a cone of half-angle `theta`.
    BerryAdiabatic {
        theta: f64,
        field: f64,
        period: f64,
        points: usize,
        steps: usize,
        level: usize,
        closure_tol: f64,
    },
    /// Spin at angle `theta` to a static field, over one precession period.
    AharonovAnandan {
        theta: f64,
        field: f64,
        points: usize,
        steps: usize,
    },
    /// Closed chain of spin coherent states on a cone.
    Bargmann {
        theta: f64,
        points: usize,
        random_phases: bool,
    },
    ConnectionIntegral {
        theta: f64,
        field: f64,
        points: usize,
        level: usize,
        chern_grid: usize,
    },
    SphereTransport {
        vertices: Vec<[f64; 3]>,
        points: usize,
        scheme: TransportScheme,
    },
    Mobius {
        circuits: u32,
        patch_size: f64,
    },
    Foucault {
        latitude: f64,
        days: f64,
    },
    Thomas {
        speed: f64,
        points: usize,
    },
    AbPhase {
        flux: f64,
        radius: f64,
        center: [f64; 2],
        q: f64,
        loop_radius: f64,
        loop_points: usize,
        windings: usize,
        random_loops: usize,
    },
    Classify {
        subject: ClassifySubject,
        expect: Option<HolonomyClass>,
    },
}

struct Reader<'a> {
    table: &'a toml::Table,
    used: BTreeSet<&'static str>,
}

impl<'a> Reader<'a> {
    fn new(table: &'a toml::Table) -> Self {
        Self {
            table,
            used: BTreeSet::new(),
        }
    }

    fn get(&mut self, key: &'static str) -> Option<&'a toml::Value> {
        self.used.insert(key);
        self.table.get(key)
    }

    fn number(&mut self, key: &'static str) -> Res<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) if x.is_finite() => Ok(Some(*x)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(ScenarioError::validation(key, "must be a finite number")),
        }
    }

    fn positive(&mut self, key: &'static str, default: Option<f64>) -> Res<f64> {
        let x = self.number(key)?.or(default).ok_or_else(|| missing(key))?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(ScenarioError::validation(key, format!("must be positive, got {x}")))
        }
    }

    fn angle(&mut self, key: &'static str) -> Res<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => parse_angle(s).map(Some).ok_or_else(|| {
                ScenarioError::validation(
                    key,
                    format!("cannot read angle `{s}`; use a number (radians) or `<x> deg` / `<x> rad`"),
                )
            }),
            Some(_) => self.number(key),
        }
    }

    fn angle_in(&mut self, key: &'static str, lo: f64, hi: f64, default: Option<f64>) -> Res<f64> {
        let x = self.angle(key)?.or(default).ok_or_else(|| missing(key))?;
        if x >= lo - 1e-12 && x <= hi + 1e-12 {
            Ok(x.clamp(lo, hi))
        } else {
            Err(ScenarioError::validation(
                key,
                format!("angle {x} rad outside [{lo}, {hi}]"),
            ))
        }
    }

    fn integer(&mut self, key: &'static str, default: i64, min: i64, max: i64) -> Res<i64> {
        let v = match self.get(key) {
            None => default,
            Some(toml::Value::Integer(i)) => *i,
            Some(_) => return Err(ScenarioError::validation(key, "must be an integer")),
        };
        if v < min || v > max {
            return Err(ScenarioError::validation(key, format!("{v} outside [{min}, {max}]")));
        }
        Ok(v)
    }

    fn boolean(&mut self, key: &'static str, default: bool) -> Res<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(toml::Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(ScenarioError::validation(key, "must be true or false")),
        }
    }

    fn string(&mut self, key: &'static str) -> Res<Option<&'a str>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(ScenarioError::validation(key, "must be a string")),
        }
    }

    fn vector<const N: usize>(&mut self, key: &'static str, v: &toml::Value) -> Res<[f64; N]> {
        let arr = v
            .as_array()
            .filter(|a| a.len() == N)
            .ok_or_else(|| ScenarioError::validation(key, format!("expected an array of {N} numbers")))?;
        let mut out = [0.0; N];
        for (o, x) in out.iter_mut().zip(arr) {
            *o = match x {
                toml::Value::Float(f) if f.is_finite() => *f,
                toml::Value::Integer(i) => *i as f64,
                _ => return Err(ScenarioError::validation(key, "vector entries must be finite numbers")),
            };
        }
        Ok(out)
    }

    fn finish(self) -> Res<()> {
        match self.table.keys().find(|k| !self.used.contains(k.as_str())) {
            Some(k) => Err(ScenarioError::validation(k.as_str(), "unknown key")),
            None => Ok(()),
        }
    }
}

fn missing(key: &str) -> ScenarioError {
    ScenarioError::validation(key, "missing required key")
}

/// `"60 deg"`, `"60deg"`, `"1.2 rad"`.
fn parse_angle(s: &str) -> Option<f64> {
    let s = s.trim();
    let (num, factor) = match s.strip_suffix("deg") {
        Some(n) => (n, PI / 180.0),
        None => (s.strip_suffix("rad")?, 1.0),
    };
    let x: f64 = num.trim().parse().ok()?;
    x.is_finite().then_some(x * factor)
}

fn as_usize(x: i64) -> usize {
    x as usize
}

impl Params {
    pub(crate) fn from_table(kind: ScenarioKind, table: &toml::Table, constants: &Constants) -> Res<Self> {
        let mut r = Reader::new(table);
        let params = match kind {
            ScenarioKind::BerryAdiabatic => {
                let theta = r.angle_in("theta", 0.0, PI, None)?;
                let field = r.positive("field", Some(1.0))?;
                let period = r.positive("period", Some(1.0e4 / field))?;
                let points = as_usize(r.integer("points", 2000, 8, 1_000_000)?);
                let steps = as_usize(r.integer("steps", 16, 1, 10_000)?);
                let level = as_usize(r.integer("level", 0, 0, 1)?);
                let closure_tol = r.number("closure_tol")?.unwrap_or(DEFAULT_CLOSURE_TOL);
                if !(0.0..=1.0).contains(&closure_tol) {
                    return Err(ScenarioError::validation("closure_tol", "must lie in [0, 1]"));
                }
                if theta == 0.0 || theta == PI {
                    return Err(ScenarioError::validation(
                        "theta",
                        "the cone must not collapse onto the axis",
                    ));
                }
                Params::BerryAdiabatic {
                    theta,
                    field,
                    period,
                    points,
                    steps,
                    level,
                    closure_tol,
                }
            }
            ScenarioKind::AharonovAnandan => Params::AharonovAnandan {
                theta: r.angle_in("theta", 0.0, PI, None)?,
                field: r.positive("field", Some(1.0))?,
                points: as_usize(r.integer("points", 2000, 8, 1_000_000)?),
                steps: as_usize(r.integer("steps", 4, 1, 10_000)?),
            },
            ScenarioKind::Bargmann => {
                let theta = r.angle_in("theta", 0.0, PI, None)?;
                if theta == PI {
                    return Err(ScenarioError::validation(
                        "theta",
                        "the cone must not collapse onto the south pole",
                    ));
                }
                Params::Bargmann {
                    theta,
                    points: as_usize(r.integer("points", 2000, 8, 10_000_000)?),
                    random_phases: r.boolean("random_phases", false)?,
                }
            }
            ScenarioKind::ConnectionIntegral => {
                let theta = r.angle_in("theta", 0.0, PI, None)?;
                if theta == 0.0 || theta == PI {
                    return Err(ScenarioError::validation(
                        "theta",
                        "the cone must not collapse onto the axis",
                    ));
                }
                Params::ConnectionIntegral {
                    theta,
                    field: r.positive("field", Some(1.0))?,
                    points: as_usize(r.integer("points", 2000, 8, 1_000_000)?),
                    level: as_usize(r.integer("level", 0, 0, 1)?),
                    chern_grid: as_usize(r.integer("chern_grid", 24, 4, 1000)?),
                }
            }
            ScenarioKind::SphereTransport => {
                let preset = r.string("preset")?;
                let verts = r.get("vertices");
                let vertices = match (preset, verts) {
                    (Some(_), Some(_)) => {
                        return Err(ScenarioError::validation(
                            "vertices",
                            "give either `preset` or `vertices`, not both",
                        ))
                    }
                    (Some("octant"), None) => SpherePreset::Octant.vertices(),
                    (Some("half_equator"), None) => SpherePreset::HalfEquator.vertices(),
                    (Some(other), None) => {
                        return Err(ScenarioError::validation(
                            "preset",
                            format!("unknown preset `{other}`; expected octant or half_equator"),
                        ))
                    }
                    (None, Some(v)) => {
                        let arr = v
                            .as_array()
                            .filter(|a| a.len() >= 3)
                            .ok_or_else(|| ScenarioError::validation("vertices", "expected at least 3 vertices"))?;
                        arr.iter()
                            .map(|x| r.vector::<3>("vertices", x))
                            .collect::<Res<Vec<_>>>()?
                    }
                    (None, None) => return Err(missing("vertices")),
                };
                let scheme = match r.string("scheme")? {
                    None | Some("geodesic_rotation") => TransportScheme::GeodesicRotation,
                    Some("projection") => TransportScheme::Projection,
                    Some(other) => {
                        return Err(ScenarioError::validation(
                            "scheme",
                            format!("unknown scheme `{other}`; expected geodesic_rotation or projection"),
                        ))
                    }
                };
                Params::SphereTransport {
                    vertices,
                    points: as_usize(r.integer("points", 10_000, 3, 10_000_000)?),
                    scheme,
                }
            }
            ScenarioKind::Mobius => Params::Mobius {
                circuits: r.integer("circuits", 1, 0, 1000)? as u32,
                patch_size: {
                    let p = r.positive("patch_size", Some(0.05))?;
                    if p >= 0.6 {
                        return Err(ScenarioError::validation(
                            "patch_size",
                            "must be below the strip width 0.6",
                        ));
                    }
                    p
                },
            },
            ScenarioKind::Foucault => Params::Foucault {
                latitude: r.angle_in("latitude", -FRAC_PI_2, FRAC_PI_2, None)?,
                days: r.positive("days", Some(1.0))?,
            },
            ScenarioKind::Thomas => {
                let speed = r.positive("speed", None)?;
                if speed >= constants.c {
                    return Err(ScenarioError::validation(
                        "speed",
                        format!("{speed} is not below c = {}", constants.c),
                    ));
                }
                Params::Thomas {
                    speed,
                    points: as_usize(r.integer("points", 4000, 3, 10_000_000)?),
                }
            }
            ScenarioKind::AbPhase => {
                let flux = r.number("flux")?.ok_or_else(|| missing("flux"))?;
                let radius = r.positive("radius", Some(1.0))?;
                let center = match r.get("center") {
                    Some(v) => r.vector::<2>("center", v)?,
                    None => [0.0, 0.0],
                };
                let q = r.number("q")?.unwrap_or(1.0);
                let loop_radius = r.positive("loop_radius", Some(2.0 * radius))?;
                if (loop_radius - radius).abs() <= 1e-9 {
                    return Err(ScenarioError::validation(
                        "loop_radius",
                        "loop runs along the solenoid wall",
                    ));
                }
                let random_loops = as_usize(r.integer("random_loops", 0, 0, 100_000)?);
                if random_loops > 0 && loop_radius < 2.0 * radius {
                    return Err(ScenarioError::validation(
                        "loop_radius",
                        "random loops need loop_radius of at least twice the solenoid radius",
                    ));
                }
                Params::AbPhase {
                    flux,
                    radius,
                    center,
                    q,
                    loop_radius,
                    loop_points: as_usize(r.integer("loop_points", 256, 3, 10_000_000)?),
                    windings: as_usize(r.integer("windings", 1, 1, 1000)?),
                    random_loops,
                }
            }
            ScenarioKind::Classify => {
                let name = r.string("subject")?.ok_or_else(|| missing("subject"))?;
                let subject = match name {
                    "mobius" => ClassifySubject::Mobius,
                    "sphere" => ClassifySubject::Sphere,
                    "solenoid" => ClassifySubject::Solenoid {
                        flux: r.number("flux")?.unwrap_or(PI),
                        radius: r.positive("radius", Some(1.0))?,
                    },
                    "cone" => ClassifySubject::Cone {
                        deficit: r.angle_in("deficit", 0.0, 2.0 * PI, Some(PI / 3.0))?,
                    },
                    "uniform" => ClassifySubject::Uniform {
                        b: r.number("b")?.unwrap_or(1.0),
                    },
                    other => {
                        return Err(ScenarioError::validation(
                            "subject",
                            format!("unknown subject `{other}`; expected mobius, sphere, solenoid, cone or uniform"),
                        ))
                    }
                };
                let expect = match r.string("expect")? {
                    None => None,
                    Some("flat_topological") => Some(HolonomyClass::FlatTopological),
                    Some("curved_geometric") => Some(HolonomyClass::CurvedGeometric),
                    Some("ab_type") => Some(HolonomyClass::AbType),
                    Some(other) => return Err(ScenarioError::validation("expect", format!("unknown class `{other}`"))),
                };
                Params::Classify { subject, expect }
            }
        };
        r.finish()?;
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert!((parse_angle("90 deg").unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((parse_angle("45deg").unwrap() - PI / 4.0).abs() < 1e-15);
        assert_eq!(parse_angle("1.5 rad"), Some(1.5));
        assert_eq!(parse_angle("1.5"), None);
        assert_eq!(parse_angle("abc deg"), None);
    }

    fn table(text: &str) -> toml::Table {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn sphere_needs_a_loop() {
        let c = Constants::default();
        let err = Params::from_table(ScenarioKind::SphereTransport, &table(""), &c).unwrap_err();
        assert!(matches!(err, ScenarioError::Validation { ref key, .. } if key == "vertices"));
        let both = table("preset = \"octant\"\nvertices = [[0,0,1],[1,0,0],[0,1,0]]");
        assert!(Params::from_table(ScenarioKind::SphereTransport, &both, &c).is_err());
        let ok = Params::from_table(ScenarioKind::SphereTransport, &table("preset = \"half_equator\""), &c).unwrap();
        assert!(matches!(ok, Params::SphereTransport { ref vertices, .. } if vertices.len() == 4));
    }

    #[test]
    fn thomas_speed_below_c() {
        let c = Constants { hbar: 1.0, c: 2.0 };
        assert!(Params::from_table(ScenarioKind::Thomas, &table("speed = 1.5"), &c).is_ok());
        assert!(Params::from_table(ScenarioKind::Thomas, &table("speed = 2.5"), &c).is_err());
    }

    #[test]
    fn integers_must_be_integers() {
        let c = Constants::default();
        let err = Params::from_table(ScenarioKind::Mobius, &table("circuits = 1.5"), &c).unwrap_err();
        assert!(matches!(err, ScenarioError::Validation { ref key, .. } if key == "circuits"));
    }
}
