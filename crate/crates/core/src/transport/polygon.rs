//! Planar polygons with labelled edges, clipped by half-planes.

/// Label of an edge that lies on the domain boundary.
pub(crate) const BOUNDARY: i32 = -1;

/// Polygon with counter-clockwise vertices; `labels[i]` tags the edge from
/// vertex `i` to vertex `i + 1`.
#[derive(Debug, Clone, Default)]
pub(crate) struct Polygon {
    pub vertices: Vec<[f64; 2]>,
    pub labels: Vec<i32>,
}

fn cross(p: [f64; 2], q: [f64; 2]) -> f64 {
    p[0] * q[1] - p[1] * q[0]
}

impl Polygon {
    pub fn new(vertices: Vec<[f64; 2]>) -> Self {
        let labels = vec![BOUNDARY; vertices.len()];
        Self { vertices, labels }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2], i32)> + '_ {
        let n = self.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n], self.labels[i]))
    }

    pub fn area(&self) -> f64 {
        0.5 * self.edges().map(|(p, q, _)| cross(p, q)).sum::<f64>()
    }

    pub fn centroid(&self) -> [f64; 2] {
        let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
        for (p, q, _) in self.edges() {
            let c = cross(p, q);
            a += c;
            cx += (p[0] + q[0]) * c;
            cy += (p[1] + q[1]) * c;
        }
        if a == 0.0 {
            return self.vertices.first().copied().unwrap_or([0.0, 0.0]);
        }
        [cx / (3.0 * a), cy / (3.0 * a)]
    }

    /// `∫ |x − y|² dx` over the polygon.
    pub fn second_moment(&self, y: [f64; 2]) -> f64 {
        self.edges()
            .map(|(p, q, _)| {
                let (p, q) = ([p[0] - y[0], p[1] - y[1]], [q[0] - y[0], q[1] - y[1]]);
                let c = cross(p, q);
                c * (p[0] * p[0] + p[0] * q[0] + q[0] * q[0] + p[1] * p[1] + p[1] * q[1] + q[1] * q[1])
            })
            .sum::<f64>()
            / 12.0
    }

    /// Largest distance from `y` to a vertex.
    pub fn radius_about(&self, y: [f64; 2]) -> f64 {
        self.vertices.iter().map(|v| (v[0] - y[0]).hypot(v[1] - y[1])).fold(0.0, f64::max)
    }

    /// Keeps `{x : a·x <= b}`; edges created on the clip line get `label`.
    pub fn clip(&self, a: [f64; 2], b: f64, label: i32) -> Polygon {
        let n = self.len();
        let mut out = Polygon { vertices: Vec::with_capacity(n + 2), labels: Vec::with_capacity(n + 2) };
        let side = |v: [f64; 2]| a[0] * v[0] + a[1] * v[1] - b;
        for i in 0..n {
            let (p, q, l) = (self.vertices[i], self.vertices[(i + 1) % n], self.labels[i]);
            let (sp, sq) = (side(p), side(q));
            let meet = || {
                let t = sp / (sp - sq);
                [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
            };
            match (sp <= 0.0, sq <= 0.0) {
                (true, true) => {
                    out.vertices.push(p);
                    out.labels.push(l);
                }
                (true, false) => {
                    out.vertices.push(p);
                    out.labels.push(l);
                    out.vertices.push(meet());
                    out.labels.push(label);
                }
                (false, true) => {
                    out.vertices.push(meet());
                    out.labels.push(l);
                }
                (false, false) => {}
            }
        }
        out
    }

    /// Total length of edges carrying each non-boundary label.
    pub fn labelled_lengths(&self) -> Vec<(i32, f64)> {
        let mut acc: Vec<(i32, f64)> = Vec::new();
        for (p, q, l) in self.edges() {
            if l == BOUNDARY {
                continue;
            }
            let len = (q[0] - p[0]).hypot(q[1] - p[1]);
            match acc.iter_mut().find(|(k, _)| *k == l) {
                Some(entry) => entry.1 += len,
                None => acc.push((l, len)),
            }
        }
        acc
    }
}
