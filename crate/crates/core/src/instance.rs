//! Problem instances: points, candidate facilities, demographic groups, and
//! the metric connecting them.
//!
//! An instance carries string identifiers for interchange, but all solver code
//! works with dense indices: points are `0..n_points`, facilities are
//! `0..n_facilities`, and the metric is cached as a full matrix over the
//! `n_points + n_facilities` elements (points first). Identifier lookups only
//! happen at the JSON boundary.
//!
//! Tie rules throughout the crate compare facilities by identifier, not by
//! declared position; `facility_rank` gives that ordering in O(1).

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One demographic group: member point indices with aligned positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    pub name: String,
    pub members: Vec<usize>,
    pub weights: Vec<f64>,
}

/// Metric backend as it appeared in the interchange form.
///
/// `Matrix` is the canonical backend: a full symmetric matrix over
/// points ++ facilities in declared order. `Coords` derives distances from
/// Euclidean coordinates keyed by element id.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricData {
    Matrix(Vec<Vec<f64>>),
    Coords(BTreeMap<String, Vec<f64>>),
}

/// Whether to run metric-axiom validation when constructing an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricCheck {
    Validate,
    Skip,
}

#[derive(Clone, Debug)]
pub struct Instance {
    points: Vec<String>,
    facilities: Vec<String>,
    metric: MetricData,
    groups: Vec<Group>,
    k: usize,
    z: f64,
    /// Dense distance cache over all elements, row-major.
    dist: Vec<f64>,
    /// `facility_rank[f]` is the position of facility `f` when all facility
    /// ids are sorted; the crate-wide tie-break order.
    facility_rank: Vec<usize>,
    /// Facility indices sorted by id, i.e. the inverse of `facility_rank`.
    facility_order: Vec<usize>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        // Derived caches are a function of the semantic fields.
        self.points == other.points
            && self.facilities == other.facilities
            && self.metric == other.metric
            && self.groups == other.groups
            && self.k == other.k
            && self.z == other.z
    }
}

// ---------------------------------------------------------------------------
// interchange schema

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    points: Vec<String>,
    facilities: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<BTreeMap<String, Vec<f64>>>,
    groups: Vec<GroupFile>,
    k: usize,
    z: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupFile {
    name: String,
    members: Vec<String>,
    weights: Vec<f64>,
}

impl Instance {
    /// Build and structurally validate an instance.
    ///
    /// Group members are point ids here; they are resolved to indices.
    /// Metric-axiom validation (symmetry, triangle inequality, ...) is a
    /// separate concern, controlled by `check`.
    pub fn new(
        points: Vec<String>,
        facilities: Vec<String>,
        metric: MetricData,
        groups: Vec<(String, Vec<String>, Vec<f64>)>,
        k: usize,
        z: f64,
        check: MetricCheck,
    ) -> Result<Instance, Error> {
        let inval = |msg: String| Err(Error::InvalidInstance(msg));

        if points.is_empty() {
            return inval("no points".into());
        }
        if facilities.is_empty() {
            return inval("no facilities".into());
        }
        let mut seen = HashSet::new();
        for id in points.iter().chain(facilities.iter()) {
            if !seen.insert(id.as_str()) {
                return inval(format!("duplicate element id '{id}'"));
            }
        }
        if k < 1 || k > facilities.len() {
            return inval(format!(
                "k = {k} must satisfy 1 <= k <= {} (number of facilities)",
                facilities.len()
            ));
        }
        if !z.is_finite() || z < 1.0 {
            return inval(format!("z = {z} must be finite and >= 1"));
        }
        if groups.is_empty() {
            return inval("no groups".into());
        }

        let point_index: HashMap<&str, usize> = points
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut resolved = Vec::with_capacity(groups.len());
        let mut group_names = HashSet::new();
        for (name, members, weights) in groups {
            if !group_names.insert(name.clone()) {
                return inval(format!("duplicate group name '{name}'"));
            }
            if members.is_empty() {
                return inval(format!("group '{name}' has no members"));
            }
            if members.len() != weights.len() {
                return inval(format!(
                    "group '{name}': {} members but {} weights",
                    members.len(),
                    weights.len()
                ));
            }
            let mut idx = Vec::with_capacity(members.len());
            let mut member_seen = HashSet::new();
            for (m, &w) in members.iter().zip(&weights) {
                let Some(&p) = point_index.get(m.as_str()) else {
                    return inval(format!("group '{name}': unknown member '{m}'"));
                };
                if !member_seen.insert(p) {
                    return inval(format!("group '{name}': member '{m}' listed twice"));
                }
                if !w.is_finite() || w <= 0.0 {
                    return inval(format!(
                        "group '{name}': weight {w} for '{m}' must be positive and finite"
                    ));
                }
                idx.push(p);
            }
            resolved.push(Group {
                name,
                members: idx,
                weights,
            });
        }

        let n = points.len() + facilities.len();
        let dist = match &metric {
            MetricData::Matrix(rows) => {
                if rows.len() != n {
                    return inval(format!("matrix has {} rows, expected {n}", rows.len()));
                }
                let mut dist = Vec::with_capacity(n * n);
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        return inval(format!(
                            "matrix row {i} has {} entries, expected {n}",
                            row.len()
                        ));
                    }
                    // Only non-finite entries are structural errors; negative
                    // or asymmetric entries are the metric validator's job so
                    // they can be reported rather than merely rejected.
                    for &d in row {
                        if !d.is_finite() {
                            return inval(format!(
                                "matrix entry in row {i} must be finite, got {d}"
                            ));
                        }
                        dist.push(d);
                    }
                }
                dist
            }
            MetricData::Coords(map) => {
                if map.len() != n {
                    return inval(format!(
                        "coords has {} entries, expected one per element ({n})",
                        map.len()
                    ));
                }
                let mut dim = None;
                let mut xs: Vec<&[f64]> = Vec::with_capacity(n);
                for id in points.iter().chain(facilities.iter()) {
                    let Some(v) = map.get(id) else {
                        return inval(format!("coords missing element '{id}'"));
                    };
                    match dim {
                        None => {
                            if v.is_empty() {
                                return inval(format!("coords for '{id}' are empty"));
                            }
                            dim = Some(v.len());
                        }
                        Some(d) if d != v.len() => {
                            return inval(format!(
                                "coords for '{id}' have dimension {}, expected {d}",
                                v.len()
                            ));
                        }
                        _ => {}
                    }
                    if v.iter().any(|c| !c.is_finite()) {
                        return inval(format!("coords for '{id}' contain a non-finite value"));
                    }
                    xs.push(v);
                }
                let mut dist = vec![0.0; n * n];
                for a in 0..n {
                    for b in (a + 1)..n {
                        let d = euclidean(xs[a], xs[b]);
                        dist[a * n + b] = d;
                        dist[b * n + a] = d;
                    }
                }
                dist
            }
        };

        let mut facility_order: Vec<usize> = (0..facilities.len()).collect();
        facility_order.sort_by(|&a, &b| facilities[a].cmp(&facilities[b]));
        let mut facility_rank = vec![0; facilities.len()];
        for (rank, &f) in facility_order.iter().enumerate() {
            facility_rank[f] = rank;
        }

        let inst = Instance {
            points,
            facilities,
            metric,
            groups: resolved,
            k,
            z,
            dist,
            facility_rank,
            facility_order,
        };
        if check == MetricCheck::Validate {
            let report = crate::metric::validate_metric(&inst);
            if !report.is_clean() {
                return Err(Error::MetricInvalid(report.summary()));
            }
        }
        Ok(inst)
    }

    pub fn from_json_str(s: &str, check: MetricCheck) -> Result<Instance, Error> {
        let file: InstanceFile = serde_json::from_str(s).map_err(|source| Error::Json {
            path: "<input>".into(),
            source,
        })?;
        let metric = match (file.matrix, file.coords) {
            (Some(m), None) => MetricData::Matrix(m),
            (None, Some(c)) => MetricData::Coords(c),
            (Some(_), Some(_)) => {
                return Err(Error::InvalidInstance(
                    "instance has both 'matrix' and 'coords'; exactly one is required".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidInstance(
                    "instance has neither 'matrix' nor 'coords'; exactly one is required".into(),
                ))
            }
        };
        let groups = file
            .groups
            .into_iter()
            .map(|g| (g.name, g.members, g.weights))
            .collect();
        Instance::new(
            file.points,
            file.facilities,
            metric,
            groups,
            file.k,
            file.z,
            check,
        )
    }

    pub fn to_json_string(&self) -> String {
        let (matrix, coords) = match &self.metric {
            MetricData::Matrix(m) => (Some(m.clone()), None),
            MetricData::Coords(c) => (None, Some(c.clone())),
        };
        let file = InstanceFile {
            points: self.points.clone(),
            facilities: self.facilities.clone(),
            matrix,
            coords,
            groups: self
                .groups
                .iter()
                .map(|g| GroupFile {
                    name: g.name.clone(),
                    members: g.members.iter().map(|&p| self.points[p].clone()).collect(),
                    weights: g.weights.clone(),
                })
                .collect(),
            k: self.k,
            z: self.z,
        };
        let mut out = serde_json::to_string_pretty(&file).expect("instance serializes");
        out.push('\n');
        out
    }

    // -- accessors ---------------------------------------------------------

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_facilities(&self) -> usize {
        self.facilities.len()
    }

    /// Total element count: points plus facilities.
    pub fn n_elements(&self) -> usize {
        self.points.len() + self.facilities.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn point_id(&self, p: usize) -> &str {
        &self.points[p]
    }

    pub fn facility_id(&self, f: usize) -> &str {
        &self.facilities[f]
    }

    pub fn point_ids(&self) -> &[String] {
        &self.points
    }

    pub fn facility_ids(&self) -> &[String] {
        &self.facilities
    }

    pub fn metric(&self) -> &MetricData {
        &self.metric
    }

    /// Distance between raw elements (points are `0..n_points`, facilities
    /// follow).
    pub fn dist_elements(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.n_elements() + b]
    }

    pub fn dist_pf(&self, f: usize, p: usize) -> f64 {
        self.dist_elements(p, self.points.len() + f)
    }

    pub fn dist_ff(&self, f: usize, g: usize) -> f64 {
        let base = self.points.len();
        self.dist_elements(base + f, base + g)
    }

    /// Position of facility `f` in the id-sorted tie-break order.
    pub fn facility_rank(&self, f: usize) -> usize {
        self.facility_rank[f]
    }

    /// Facility indices sorted by id.
    pub fn facilities_by_rank(&self) -> &[usize] {
        &self.facility_order
    }

    /// Same instance with the power parameter replaced.
    pub fn with_z(&self, z: f64) -> Result<Instance, Error> {
        if !z.is_finite() || z < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "z = {z} must be finite and >= 1"
            )));
        }
        let mut out = self.clone();
        out.z = z;
        Ok(out)
    }

    /// Same elements and metric with the group structure replaced. Group
    /// validation runs again; the metric is trusted as already checked.
    pub fn with_groups(
        &self,
        groups: Vec<(String, Vec<String>, Vec<f64>)>,
    ) -> Result<Instance, Error> {
        Instance::new(
            self.points.clone(),
            self.facilities.clone(),
            self.metric.clone(),
            groups,
            self.k,
            self.z,
            MetricCheck::Skip,
        )
    }

    /// The first point that belongs to more than one group, if any.
    pub fn first_overlap(&self) -> Option<(usize, usize, usize)> {
        let mut owner: Vec<Option<usize>> = vec![None; self.points.len()];
        for (j, g) in self.groups.iter().enumerate() {
            for &p in &g.members {
                match owner[p] {
                    Some(first) => return Some((p, first, j)),
                    None => owner[p] = Some(j),
                }
            }
        }
        None
    }

    pub fn groups_disjoint(&self) -> bool {
        self.first_overlap().is_none()
    }

    /// Group index of each point, for instances with disjoint groups.
    /// Points outside every group map to `None`.
    pub fn point_group(&self) -> Result<Vec<Option<usize>>, Error> {
        let mut owner: Vec<Option<usize>> = vec![None; self.points.len()];
        for (j, g) in self.groups.iter().enumerate() {
            for &p in &g.members {
                if let Some(first) = owner[p] {
                    return Err(Error::OverlappingGroups {
                        point: self.points[p].clone(),
                        first: self.groups[first].name.clone(),
                        second: g.name.clone(),
                    });
                }
                owner[p] = Some(j);
            }
        }
        Ok(owner)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Rewrite the instance so groups are pairwise disjoint.
///
/// A point shared by `t` groups is kept for its first group and duplicated
/// `t - 1` times at distance zero from itself, one copy per further group,
/// each copy carrying that group's weight. Group-wise costs are unchanged for
/// every center set because the copies sit exactly on the original point.
/// Already-disjoint instances come back as an unmodified clone.
pub fn split_overlapping_groups(inst: &Instance) -> Instance {
    if inst.groups_disjoint() {
        return inst.clone();
    }

    let n_p = inst.n_points();
    // Which groups contain each point, in group order.
    let mut containing: Vec<Vec<usize>> = vec![Vec::new(); n_p];
    for (j, g) in inst.groups.iter().enumerate() {
        for &p in &g.members {
            containing[p].push(j);
        }
    }

    let mut used: HashSet<String> = inst
        .points
        .iter()
        .chain(inst.facilities.iter())
        .cloned()
        .collect();
    let mut points = inst.points.clone();
    let mut groups = inst.groups.clone();
    // Source point for every new point index (identity for originals).
    let mut source: Vec<usize> = (0..n_p).collect();

    for p in 0..n_p {
        for (ordinal, &j) in containing[p].iter().enumerate().skip(1) {
            let mut suffix = ordinal + 1;
            let id = loop {
                let candidate = format!("{}~{}", inst.points[p], suffix);
                if used.insert(candidate.clone()) {
                    break candidate;
                }
                suffix += 1;
            };
            let copy = points.len();
            points.push(id);
            source.push(p);
            let slot = groups[j]
                .members
                .iter()
                .position(|&m| m == p)
                .expect("member listed in containing");
            groups[j].members[slot] = copy;
        }
    }

    let metric = match &inst.metric {
        MetricData::Matrix(_) => {
            let n_new = points.len() + inst.facilities.len();
            let n_copies = points.len() - n_p;
            // Element index in the original instance for each new element:
            // copies borrow their source point's row, facilities shift up.
            let old_element = |e: usize| -> usize {
                if e < n_p {
                    e
                } else if e < points.len() {
                    source[e]
                } else {
                    e - n_copies
                }
            };
            let mut rows = Vec::with_capacity(n_new);
            for a in 0..n_new {
                let oa = old_element(a);
                let row = (0..n_new)
                    .map(|b| inst.dist_elements(oa, old_element(b)))
                    .collect();
                rows.push(row);
            }
            MetricData::Matrix(rows)
        }
        MetricData::Coords(map) => {
            let mut map = map.clone();
            for copy in n_p..points.len() {
                let src = &inst.points[source[copy]];
                let coords = map.get(src).expect("source has coords").clone();
                map.insert(points[copy].clone(), coords);
            }
            MetricData::Coords(map)
        }
    };

    let groups = groups
        .into_iter()
        .map(|g| {
            let members = g.members.iter().map(|&p| points[p].clone()).collect();
            (g.name, members, g.weights)
        })
        .collect();
    Instance::new(
        points,
        inst.facilities.clone(),
        metric,
        groups,
        inst.k,
        inst.z,
        MetricCheck::Skip,
    )
    .expect("splitting a valid instance yields a valid instance")
}

/// A set of centers: deduplicated facility indices in id order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CenterSet {
    indices: Vec<usize>,
}

impl CenterSet {
    pub fn new(
        inst: &Instance,
        centers: impl IntoIterator<Item = usize>,
    ) -> Result<CenterSet, Error> {
        let mut indices: Vec<usize> = centers.into_iter().collect();
        for &f in &indices {
            if f >= inst.n_facilities() {
                return Err(Error::InvalidParameter(format!(
                    "facility index {f} out of range (instance has {})",
                    inst.n_facilities()
                )));
            }
        }
        indices.sort_by_key(|&f| inst.facility_rank(f));
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::EmptyCenterSet);
        }
        Ok(CenterSet { indices })
    }

    pub fn from_ids<S: AsRef<str>>(inst: &Instance, ids: &[S]) -> Result<CenterSet, Error> {
        let mut indices = Vec::with_capacity(ids.len());
        for id in ids {
            let id = id.as_ref();
            match inst.facilities.iter().position(|f| f == id) {
                Some(f) => indices.push(f),
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown facility id '{id}'"
                    )))
                }
            }
        }
        CenterSet::new(inst, indices)
    }

    /// Already deduplicated and rank-sorted; used by enumeration internals.
    pub(crate) fn from_canonical(indices: Vec<usize>) -> CenterSet {
        debug_assert!(!indices.is_empty());
        CenterSet { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, f: usize) -> bool {
        self.indices.contains(&f)
    }

    pub fn ids<'a>(&self, inst: &'a Instance) -> Vec<&'a str> {
        self.indices
            .iter()
            .map(|&f| inst.facility_id(f))
            .collect()
    }

    pub fn union(inst: &Instance, sets: &[CenterSet]) -> Result<CenterSet, Error> {
        CenterSet::new(
            inst,
            sets.iter().flat_map(|s| s.indices.iter().copied()),
        )
    }
}
