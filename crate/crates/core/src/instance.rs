//! Signed, weighted transverse-field Ising instances.
//!
//! An instance is a simple graph on `n` dense vertex indices. Every edge
//! carries a nonnegative weight `w` and a sign `J`; every vertex carries a
//! nonnegative transverse field `h`. The minimization Hamiltonian is
//!
//! ```text
//! H = sum_{ij} w_ij J_ij Z_i Z_j - sum_i h_i X_i
//! ```
//!
//! and the equivalent maximization form used everywhere else in the crate is
//! the weighted sum of projectors `w_ij (I - J_ij Z_i Z_j)/2 + h_i (I + X_i)/2`.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("malformed instance document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
}

impl InstanceError {
    fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        InstanceError::Invalid {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

/// Coupling sign. `Plus` (J = +1) rewards anti-aligned z spins, `Minus`
/// (J = -1) rewards aligned ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn from_value(v: f64) -> Option<Sign> {
        if v == 1.0 {
            Some(Sign::Plus)
        } else if v == -1.0 {
            Some(Sign::Minus)
        } else {
            None
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_i8(self.value() as i8)
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Plus => f.write_str("+1"),
            Sign::Minus => f.write_str("-1"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
    #[serde(rename = "J")]
    pub j: Sign,
}

impl Edge {
    pub fn new(u: usize, v: usize, w: f64, j: Sign) -> Self {
        Edge { u, v, w, j }
    }

    /// The endpoint opposite `vertex`.
    pub fn other(&self, vertex: usize) -> usize {
        if self.u == vertex {
            self.v
        } else {
            self.u
        }
    }
}

/// A validated instance. Edges are stored with `u < v`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    n: usize,
    edges: Vec<Edge>,
    fields: Vec<f64>,
}

impl Instance {
    pub fn new(n: usize, edges: Vec<Edge>, fields: Vec<f64>) -> Result<Self, InstanceError> {
        if fields.len() != n {
            return Err(InstanceError::invalid(
                "fields",
                format!("expected {n} entries, found {}", fields.len()),
            ));
        }
        for (i, &h) in fields.iter().enumerate() {
            if !h.is_finite() {
                return Err(InstanceError::invalid(format!("fields[{i}]"), "field is not finite"));
            }
            if h < 0.0 {
                return Err(InstanceError::invalid(format!("fields[{i}]"), format!("negative field {h}")));
            }
        }

        let mut seen: HashMap<(usize, usize), usize> = HashMap::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for (k, e) in edges.into_iter().enumerate() {
            for (name, idx) in [("u", e.u), ("v", e.v)] {
                if idx >= n {
                    return Err(InstanceError::invalid(
                        format!("edges[{k}].{name}"),
                        format!("vertex index {idx} out of range for n = {n}"),
                    ));
                }
            }
            if e.u == e.v {
                return Err(InstanceError::invalid(
                    format!("edges[{k}]"),
                    format!("self-loop on vertex {}", e.u),
                ));
            }
            if !e.w.is_finite() {
                return Err(InstanceError::invalid(format!("edges[{k}].w"), "weight is not finite"));
            }
            if e.w < 0.0 {
                return Err(InstanceError::invalid(
                    format!("edges[{k}].w"),
                    format!("negative weight {}", e.w),
                ));
            }
            let (u, v) = if e.u < e.v { (e.u, e.v) } else { (e.v, e.u) };
            if let Some(prev) = seen.insert((u, v), k) {
                return Err(InstanceError::invalid(
                    format!("edges[{k}]"),
                    format!("duplicate of edges[{prev}] ({{{u}, {v}}})"),
                ));
            }
            normalized.push(Edge { u, v, w: e.w, j: e.j });
        }

        let inst = Instance {
            n,
            edges: normalized,
            fields,
        };
        if !(inst.total_weight().is_finite() && inst.total_field().is_finite()) {
            return Err(InstanceError::invalid("", "total weight or field overflows"));
        }
        Ok(inst)
    }

    pub fn with_uniform_field(n: usize, edges: Vec<Edge>, h: f64) -> Result<Self, InstanceError> {
        Instance::new(n, edges, vec![h; n])
    }

    /// Three vertices, three unit edges with J = +1, uniform field `g`.
    pub fn triangle(g: f64) -> Instance {
        let edges = vec![
            Edge::new(0, 1, 1.0, Sign::Plus),
            Edge::new(1, 2, 1.0, Sign::Plus),
            Edge::new(0, 2, 1.0, Sign::Plus),
        ];
        Instance::with_uniform_field(3, edges, g).expect("triangle instance is valid for g >= 0")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn total_field(&self) -> f64 {
        self.fields.iter().sum()
    }

    /// Same graph and couplings with every field set to zero.
    pub fn without_fields(&self) -> Instance {
        Instance {
            n: self.n,
            edges: self.edges.clone(),
            fields: vec![0.0; self.n],
        }
    }

    pub fn with_fields(&self, fields: Vec<f64>) -> Result<Instance, InstanceError> {
        Instance::new(self.n, self.edges.clone(), fields)
    }

    /// For each vertex, the indices of its incident edges.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n];
        for (k, e) in self.edges.iter().enumerate() {
            inc[e.u].push(k);
            inc[e.v].push(k);
        }
        inc
    }

    /// Relabel `z -> -z` on one vertex, flipping every incident sign.
    pub fn gauge_flip(&self, vertex: usize) -> Instance {
        let edges = self
            .edges
            .iter()
            .map(|e| {
                if e.u == vertex || e.v == vertex {
                    Edge { j: e.j.flipped(), ..*e }
                } else {
                    *e
                }
            })
            .collect();
        Instance {
            n: self.n,
            edges,
            fields: self.fields.clone(),
        }
    }

    /// Vertices of `other` are appended after those of `self`.
    pub fn disjoint_union(&self, other: &Instance) -> Instance {
        let shift = self.n;
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|e| Edge {
            u: e.u + shift,
            v: e.v + shift,
            ..*e
        }));
        let mut fields = self.fields.clone();
        fields.extend_from_slice(&other.fields);
        Instance {
            n: self.n + other.n,
            edges,
            fields,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serialization cannot fail")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    n: usize,
    #[serde(default)]
    edges: Vec<RawEdge>,
    fields: RawFields,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    u: usize,
    v: usize,
    w: f64,
    #[serde(rename = "J")]
    j: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawFields {
    Uniform(f64),
    PerVertex(Vec<f64>),
}

pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let raw: RawInstance = serde_json::from_str(text)?;
    let mut edges = Vec::with_capacity(raw.edges.len());
    for (k, e) in raw.edges.into_iter().enumerate() {
        let j = Sign::from_value(e.j).ok_or_else(|| {
            InstanceError::invalid(format!("edges[{k}].J"), format!("sign must be +1 or -1, got {}", e.j))
        })?;
        edges.push(Edge::new(e.u, e.v, e.w, j));
    }
    let fields = match raw.fields {
        RawFields::Uniform(h) => vec![h; raw.n],
        RawFields::PerVertex(v) => v,
    };
    Instance::new(raw.n, edges, fields)
}

impl<'de> Deserialize<'de> for Instance {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        parse_instance(&value.to_string()).map_err(serde::de::Error::custom)
    }
}

/// `(W, H)`: total edge weight and total field. The minimization ground
/// energy is `W + H - 2 lambda_max` of the projector form.
pub fn shift_constants(inst: &Instance) -> (f64, f64) {
    (inst.total_weight(), inst.total_field())
}

/// True when some cycle cannot satisfy all of its edge preferences at once.
///
/// Propagates a z-spin labelling through each connected component, with
/// J = +1 asking for opposite spins and J = -1 for equal spins; a conflict
/// means the instance is frustrated.
pub fn is_frustrated(inst: &Instance) -> bool {
    let inc = inst.incidence();
    let mut spin: Vec<i8> = vec![0; inst.n()];
    let mut queue = VecDeque::new();
    for root in 0..inst.n() {
        if spin[root] != 0 {
            continue;
        }
        spin[root] = 1;
        queue.push_back(root);
        while let Some(a) = queue.pop_front() {
            for &k in &inc[a] {
                let e = &inst.edges()[k];
                let b = e.other(a);
                let want = match e.j {
                    Sign::Plus => -spin[a],
                    Sign::Minus => spin[a],
                };
                if spin[b] == 0 {
                    spin[b] = want;
                    queue.push_back(b);
                } else if spin[b] != want {
                    return true;
                }
            }
        }
    }
    false
}

/// Erdős–Rényi ensemble with random signs, `w ~ U[0,1]`, `h ~ U[0, h_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomInstanceParams {
    pub n: usize,
    pub edge_prob: f64,
    pub h_max: f64,
}

pub fn random_instance<R: Rng + ?Sized>(params: &RandomInstanceParams, rng: &mut R) -> Instance {
    let mut edges = Vec::new();
    for u in 0..params.n {
        for v in (u + 1)..params.n {
            if rng.random::<f64>() < params.edge_prob {
                let j = if rng.random::<bool>() { Sign::Plus } else { Sign::Minus };
                edges.push(Edge::new(u, v, rng.random::<f64>(), j));
            }
        }
    }
    let fields = (0..params.n).map(|_| params.h_max * rng.random::<f64>()).collect();
    Instance::new(params.n, edges, fields).expect("random instances are valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TRIANGLE_DOC: &str = r#"{"n": 3,
        "edges": [{"u": 0, "v": 1, "w": 1, "J": 1},
                  {"u": 1, "v": 2, "w": 1, "J": 1},
                  {"u": 0, "v": 2, "w": 1, "J": 1}],
        "fields": [0.6, 0.6, 0.6]}"#;

    fn path_of(err: InstanceError) -> String {
        match err {
            InstanceError::Invalid { path, .. } => path,
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn parses_triangle() {
        let inst = parse_instance(TRIANGLE_DOC).unwrap();
        assert_eq!(inst.n(), 3);
        assert_eq!(inst.edges().len(), 3);
        let (w, h) = shift_constants(&inst);
        assert!((w - 3.0).abs() < 1e-9);
        assert!((h - 9.0 / 5.0).abs() < 1e-9);
        assert_eq!(inst, Instance::triangle(0.6));
    }

    #[test]
    fn uniform_field_shorthand() {
        let inst = parse_instance(r#"{"n": 1, "edges": [], "fields": 2.5}"#).unwrap();
        assert_eq!(shift_constants(&inst), (0.0, 2.5));
        let inst = parse_instance(r#"{"n": 4, "fields": 0.5}"#).unwrap();
        assert_eq!(inst.fields(), &[0.5; 4]);
    }

    #[test]
    fn rejects_bad_documents() {
        let self_loop = r#"{"n": 2, "edges": [{"u": 0, "v": 0, "w": 1, "J": 1}], "fields": [0, 0]}"#;
        let err = parse_instance(self_loop).unwrap_err();
        assert!(err.to_string().contains("self-loop"));
        assert_eq!(path_of(err), "edges[0]");

        let neg_w = r#"{"n": 2, "edges": [{"u": 0, "v": 1, "w": -1, "J": 1}], "fields": [0, 0]}"#;
        assert_eq!(path_of(parse_instance(neg_w).unwrap_err()), "edges[0].w");

        let bad_j = r#"{"n": 2, "edges": [{"u": 0, "v": 1, "w": 1, "J": 2}], "fields": [0, 0]}"#;
        assert_eq!(path_of(parse_instance(bad_j).unwrap_err()), "edges[0].J");

        let dup = r#"{"n": 2, "edges": [{"u": 0, "v": 1, "w": 1, "J": 1},
                                         {"u": 1, "v": 0, "w": 2, "J": -1}], "fields": [0, 0]}"#;
        let err = parse_instance(dup).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
        assert_eq!(path_of(err), "edges[1]");

        let neg_h = r#"{"n": 2, "fields": [0, -0.5]}"#;
        assert_eq!(path_of(parse_instance(neg_h).unwrap_err()), "fields[1]");

        let short = r#"{"n": 3, "fields": [0, 1]}"#;
        assert_eq!(path_of(parse_instance(short).unwrap_err()), "fields");

        let range = r#"{"n": 2, "edges": [{"u": 0, "v": 5, "w": 1, "J": 1}], "fields": 0}"#;
        assert_eq!(path_of(parse_instance(range).unwrap_err()), "edges[0].v");

        assert!(matches!(parse_instance("{not json"), Err(InstanceError::Malformed(_))));
        assert!(matches!(parse_instance(r#"{"n": 2}"#), Err(InstanceError::Malformed(_))));
    }

    #[test]
    fn shift_constant_examples() {
        let empty = Instance::new(2, vec![], vec![0.0, 0.0]).unwrap();
        assert_eq!(shift_constants(&empty), (0.0, 0.0));
        let one = Instance::new(2, vec![Edge::new(0, 1, 2.0, Sign::Plus)], vec![0.5, 0.5]).unwrap();
        assert_eq!(shift_constants(&one), (2.0, 1.0));
    }

    #[test]
    fn frustration_examples() {
        assert!(is_frustrated(&Instance::triangle(0.6)));

        let path = Instance::new(
            4,
            vec![
                Edge::new(0, 1, 1.0, Sign::Plus),
                Edge::new(1, 2, 1.0, Sign::Minus),
                Edge::new(2, 3, 0.3, Sign::Plus),
            ],
            vec![0.0; 4],
        )
        .unwrap();
        assert!(!is_frustrated(&path));

        // Sign product around the 4-cycle is -1.
        let square = Instance::new(
            4,
            vec![
                Edge::new(0, 1, 1.0, Sign::Plus),
                Edge::new(1, 2, 1.0, Sign::Plus),
                Edge::new(2, 3, 1.0, Sign::Plus),
                Edge::new(0, 3, 1.0, Sign::Minus),
            ],
            vec![0.0; 4],
        )
        .unwrap();
        assert!(is_frustrated(&square));

        let even = square.gauge_flip(0).gauge_flip(1);
        assert!(is_frustrated(&even));
        let unfrustrated = Instance::new(
            4,
            vec![
                Edge::new(0, 1, 1.0, Sign::Plus),
                Edge::new(1, 2, 1.0, Sign::Plus),
                Edge::new(2, 3, 1.0, Sign::Plus),
                Edge::new(0, 3, 1.0, Sign::Plus),
            ],
            vec![0.0; 4],
        )
        .unwrap();
        assert!(!is_frustrated(&unfrustrated));
    }

    fn arb_instance() -> impl Strategy<Value = Instance> {
        (1usize..9, 0.0f64..1.0, 0.0f64..2.0, any::<u64>()).prop_map(|(n, p, h_max, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_instance(&RandomInstanceParams { n, edge_prob: p, h_max }, &mut rng)
        })
    }

    proptest! {
        #[test]
        fn json_round_trip(inst in arb_instance()) {
            let back = parse_instance(&inst.to_json()).unwrap();
            prop_assert_eq!(back, inst);
        }

        #[test]
        fn shift_constants_additive(a in arb_instance(), b in arb_instance()) {
            let (wa, ha) = shift_constants(&a);
            let (wb, hb) = shift_constants(&b);
            let (w, h) = shift_constants(&a.disjoint_union(&b));
            prop_assert!((w - (wa + wb)).abs() < 1e-12);
            prop_assert!((h - (ha + hb)).abs() < 1e-12);
        }

        #[test]
        fn frustration_gauge_invariant(inst in arb_instance(), flips in proptest::collection::vec(any::<usize>(), 0..6)) {
            let mut gauged = inst.clone();
            for f in flips {
                gauged = gauged.gauge_flip(f % inst.n());
            }
            prop_assert_eq!(is_frustrated(&gauged), is_frustrated(&inst));
        }
    }

    #[test]
    fn frustration_matches_cycle_enumeration() {
        // Brute force: frustrated iff no spin assignment satisfies every edge.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(1..8);
            let inst = random_instance(&RandomInstanceParams { n, edge_prob: 0.5, h_max: 0.0 }, &mut rng);
            let satisfiable = (0u32..(1 << n)).any(|mask| {
                inst.edges().iter().all(|e| {
                    let su = if mask >> e.u & 1 == 1 { -1.0 } else { 1.0 };
                    let sv = if mask >> e.v & 1 == 1 { -1.0 } else { 1.0 };
                    e.j.value() * su * sv < 0.0
                })
            });
            assert_eq!(is_frustrated(&inst), !satisfiable);
        }
    }
}
