//! Metric-axiom validation.
//!
//! Instances promise a metric over points and facilities; nothing enforces
//! that for hand-written matrices, so loaders run these checks by default.
//! Small element counts are checked exhaustively, larger ones by seeded
//! sampling so reports stay reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cost::pow_z;
use crate::instance::{Instance, MetricData};

/// Tolerance for matrix symmetry, |d(a,b) - d(b,a)|.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Additive slack for triangle-inequality checks, scaled by magnitude.
pub const TRIANGLE_TOL: f64 = 1e-9;
/// Element count up to which triples are checked exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 200;
/// Above the exhaustive limit, sample `SAMPLE_FACTOR * n^2` triples.
const SAMPLE_FACTOR: usize = 10;
/// Fixed sampling seed; reports must not change between runs.
const SAMPLE_SEED: u64 = 0x6d65_7472_6963_3161;

#[derive(Clone, Debug, Serialize)]
pub struct PairViolation {
    pub a: String,
    pub b: String,
    pub forward: f64,
    pub backward: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValueViolation {
    pub a: String,
    pub b: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TriangleViolation {
    pub a: String,
    pub b: String,
    pub c: String,
    /// d(a,c)
    pub direct: f64,
    /// d(a,b) + d(b,c)
    pub detour: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerChainViolation {
    pub q: String,
    pub r: String,
    pub s: String,
    pub t: String,
    /// d(q,t)^z
    pub direct: f64,
    /// 3^(z-1) * (d(q,r)^z + d(r,s)^z + d(s,t)^z)
    pub bound: f64,
}

/// Outcome of metric validation. `is_clean` gates instance loading.
#[derive(Clone, Debug, Serialize)]
pub struct MetricReport {
    pub elements: usize,
    /// Whether triples were enumerated exhaustively (vs sampled).
    pub exhaustive: bool,
    pub triples_checked: u64,
    pub quadruples_checked: u64,
    pub symmetry: Vec<PairViolation>,
    pub negative: Vec<ValueViolation>,
    pub nonzero_diagonal: Vec<ValueViolation>,
    pub triangle: Vec<TriangleViolation>,
    /// Spot checks of the powered relaxed triangle inequality used by the
    /// solver's analysis; failures indicate numeric trouble even when the
    /// plain axioms hold.
    pub power_chain: Vec<PowerChainViolation>,
}

impl MetricReport {
    pub fn is_clean(&self) -> bool {
        self.symmetry.is_empty()
            && self.negative.is_empty()
            && self.nonzero_diagonal.is_empty()
            && self.triangle.is_empty()
            && self.power_chain.is_empty()
    }

    pub fn summary(&self) -> String {
        format!(
            "{} symmetry, {} negative, {} nonzero-diagonal, {} triangle, {} power-chain violations over {} elements",
            self.symmetry.len(),
            self.negative.len(),
            self.nonzero_diagonal.len(),
            self.triangle.len(),
            self.power_chain.len(),
            self.elements
        )
    }
}

fn element_id(inst: &Instance, e: usize) -> String {
    if e < inst.n_points() {
        inst.point_id(e).to_owned()
    } else {
        inst.facility_id(e - inst.n_points()).to_owned()
    }
}

pub fn validate_metric(inst: &Instance) -> MetricReport {
    let n = inst.n_elements();
    let is_matrix = matches!(inst.metric(), MetricData::Matrix(_));

    let mut symmetry = Vec::new();
    let mut negative = Vec::new();
    let mut nonzero_diagonal = Vec::new();
    for a in 0..n {
        let daa = inst.dist_elements(a, a);
        if daa.abs() > 1e-12 {
            nonzero_diagonal.push(ValueViolation {
                a: element_id(inst, a),
                b: element_id(inst, a),
                value: daa,
            });
        }
        for b in 0..n {
            let d = inst.dist_elements(a, b);
            if d < -1e-12 {
                negative.push(ValueViolation {
                    a: element_id(inst, a),
                    b: element_id(inst, b),
                    value: d,
                });
            }
            // The coordinate backend is symmetric by construction; only
            // matrix inputs can disagree.
            if is_matrix && b > a {
                let back = inst.dist_elements(b, a);
                if (d - back).abs() > SYMMETRY_TOL {
                    symmetry.push(PairViolation {
                        a: element_id(inst, a),
                        b: element_id(inst, b),
                        forward: d,
                        backward: back,
                    });
                }
            }
        }
    }

    let mut triangle = Vec::new();
    let exhaustive = n <= EXHAUSTIVE_LIMIT;
    let mut triples_checked = 0u64;
    let check_triple = |a: usize, b: usize, c: usize, out: &mut Vec<TriangleViolation>| {
        let direct = inst.dist_elements(a, c);
        let detour = inst.dist_elements(a, b) + inst.dist_elements(b, c);
        if direct > detour + TRIANGLE_TOL * detour.abs().max(1.0) {
            out.push(TriangleViolation {
                a: element_id(inst, a),
                b: element_id(inst, b),
                c: element_id(inst, c),
                direct,
                detour,
            });
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    if exhaustive {
        for a in 0..n {
            for b in 0..n {
                if b == a {
                    continue;
                }
                for c in 0..n {
                    if c == a || c == b {
                        continue;
                    }
                    check_triple(a, b, c, &mut triangle);
                    triples_checked += 1;
                }
            }
        }
    } else {
        let target = (SAMPLE_FACTOR * n * n) as u64;
        while triples_checked < target {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            let c = rng.gen_range(0..n);
            if a == b || b == c || a == c {
                continue;
            }
            check_triple(a, b, c, &mut triangle);
            triples_checked += 1;
        }
    }

    // Powered chain bound: d(q,t)^z <= 3^(z-1) (d(q,r)^z + d(r,s)^z + d(s,t)^z).
    // Always sampled; the quadruple space is too large to enumerate.
    let z = inst.z();
    let scale = pow_z(3.0, z - 1.0);
    let mut power_chain = Vec::new();
    let mut quadruples_checked = 0u64;
    let target = (SAMPLE_FACTOR * n * n) as u64;
    while quadruples_checked < target {
        let q = rng.gen_range(0..n);
        let r = rng.gen_range(0..n);
        let s = rng.gen_range(0..n);
        let t = rng.gen_range(0..n);
        let direct = pow_z(inst.dist_elements(q, t), z);
        let bound = scale
            * (pow_z(inst.dist_elements(q, r), z)
                + pow_z(inst.dist_elements(r, s), z)
                + pow_z(inst.dist_elements(s, t), z));
        if direct > bound + TRIANGLE_TOL * bound.abs().max(1.0) {
            power_chain.push(PowerChainViolation {
                q: element_id(inst, q),
                r: element_id(inst, r),
                s: element_id(inst, s),
                t: element_id(inst, t),
                direct,
                bound,
            });
        }
        quadruples_checked += 1;
    }

    MetricReport {
        elements: n,
        exhaustive,
        triples_checked,
        quadruples_checked,
        symmetry,
        negative,
        nonzero_diagonal,
        triangle,
        power_chain,
    }
}
