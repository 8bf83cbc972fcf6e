use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A `(birth, death)` pair. Essential classes have `death == f64::INFINITY`,
/// which is written as `null` in JSON.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagramPoint {
    pub birth: f64,
    #[serde(serialize_with = "ser_death", deserialize_with = "de_death")]
    pub death: f64,
}

fn ser_death<S: Serializer>(death: &f64, s: S) -> Result<S::Ok, S::Error> {
    if death.is_infinite() {
        s.serialize_none()
    } else {
        s.serialize_some(death)
    }
}

fn de_death<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

impl DiagramPoint {
    pub fn new(birth: f64, death: f64) -> Self {
        debug_assert!(birth <= death, "birth {birth} > death {death}");
        Self { birth, death }
    }

    pub fn essential(birth: f64) -> Self {
        Self { birth, death: f64::INFINITY }
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// Multiset of persistence pairs in one homology degree.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub degree: usize,
    pub points: Vec<DiagramPoint>,
}

impl PersistenceDiagram {
    pub fn new(degree: usize, mut points: Vec<DiagramPoint>) -> Self {
        sort_points(&mut points);
        Self { degree, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn finite(&self) -> impl Iterator<Item = &DiagramPoint> {
        self.points.iter().filter(|p| !p.is_essential())
    }

    pub fn essential(&self) -> impl Iterator<Item = &DiagramPoint> {
        self.points.iter().filter(|p| p.is_essential())
    }

    /// Multiset equality up to `tol` on every coordinate.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let mut a = self.points.clone();
        let mut b = other.points.clone();
        sort_points(&mut a);
        sort_points(&mut b);
        a.len() == b.len()
            && a.iter().zip(&b).all(|(p, q)| {
                (p.birth - q.birth).abs() <= tol && (p.death == q.death || (p.death - q.death).abs() <= tol)
            })
    }
}

fn sort_points(points: &mut [DiagramPoint]) {
    points.sort_by(|p, q| p.birth.total_cmp(&q.birth).then(p.death.total_cmp(&q.death)));
}
