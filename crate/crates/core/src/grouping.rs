//! Grouped aggregation structures: attribute schemas, node enumeration,
//! summing matrices, and aggregation of raw records into node series.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Ordered attribute schema: each attribute has a finite, ordered value set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    attributes: Vec<(String, Vec<String>)>,
}

impl AttributeSchema {
    pub fn new(attributes: Vec<(String, Vec<String>)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (name, values) in &attributes {
            if !seen.insert(name.clone()) {
                return Err(Error::UnknownAttribute(format!(
                    "duplicate attribute '{name}'"
                )));
            }
            if values.is_empty() {
                return Err(Error::UnknownAttribute(format!(
                    "attribute '{name}' has an empty value set"
                )));
            }
        }
        Ok(Self { attributes })
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|(n, _)| n.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|(n, _)| n == name)
    }

    pub fn values_of(&self, index: usize) -> &[String] {
        &self.attributes[index].1
    }

    pub fn name_of(&self, index: usize) -> &str {
        &self.attributes[index].0
    }

    fn value_index(&self, attribute: usize, value: &str) -> Option<usize> {
        self.attributes[attribute].1.iter().position(|v| v == value)
    }
}

/// A partially bound series key. Unbound attributes are aggregated over;
/// the empty key is the global series. Bindings are kept in schema
/// attribute order, so two keys with the same binding set compare equal
/// regardless of how they were constructed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeriesKey {
    /// (attribute index, value index) pairs sorted by attribute index.
    bindings: Vec<(usize, usize)>,
}

impl SeriesKey {
    pub fn root() -> Self {
        Self { bindings: vec![] }
    }

    /// Build a key from (attribute name, value) pairs.
    pub fn from_pairs(schema: &AttributeSchema, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut bindings = Vec::with_capacity(pairs.len());
        for (name, value) in pairs {
            let attribute = schema
                .index_of(name)
                .ok_or_else(|| Error::UnknownAttribute((*name).to_string()))?;
            let value = schema
                .value_index(attribute, value)
                .ok_or_else(|| Error::KeyOutsideSchema(format!("{name}={value}")))?;
            if bindings.iter().any(|(a, _)| *a == attribute) {
                return Err(Error::KeyOutsideSchema(format!(
                    "attribute '{name}' bound twice"
                )));
            }
            bindings.push((attribute, value));
        }
        bindings.sort_unstable();
        Ok(Self { bindings })
    }

    pub fn is_root(&self) -> bool {
        self.bindings.is_empty()
    }

    /// True when every schema attribute is bound.
    pub fn is_full(&self, schema: &AttributeSchema) -> bool {
        self.bindings.len() == schema.len()
    }

    /// Keep only the bindings for the given attribute indices.
    fn restrict(&self, attributes: &BTreeSet<usize>) -> SeriesKey {
        SeriesKey {
            bindings: self
                .bindings
                .iter()
                .copied()
                .filter(|(a, _)| attributes.contains(a))
                .collect(),
        }
    }

    /// True when `bottom` agrees with this key on every bound attribute.
    pub fn covers(&self, bottom: &SeriesKey) -> bool {
        self.bindings.iter().all(|&(a, v)| {
            bottom
                .bindings
                .iter()
                .any(|&(ba, bv)| ba == a && bv == v)
        })
    }

    /// Bound value for an attribute index, if any.
    pub fn value_for(&self, attribute: usize) -> Option<usize> {
        self.bindings
            .iter()
            .find(|(a, _)| *a == attribute)
            .map(|&(_, v)| v)
    }

    /// Human-readable label like "brand=b1;gender=F"; "total" for the
    /// root. Semicolon-separated so labels stay single CSV cells.
    pub fn label(&self, schema: &AttributeSchema) -> String {
        if self.is_root() {
            return "total".to_string();
        }
        self.bindings
            .iter()
            .map(|&(a, v)| format!("{}={}", schema.name_of(a), schema.values_of(a)[v]))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn bound_count(&self) -> usize {
        self.bindings.len()
    }
}

impl fmt::Display for SeriesKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bindings.is_empty() {
            write!(f, "total")
        } else {
            let parts: Vec<String> = self
                .bindings
                .iter()
                .map(|(a, v)| format!("{a}:{v}"))
                .collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

/// The node set of a grouped structure: the root, every configured
/// aggregation level, and the observed bottom-level keys last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStructure {
    pub schema: AttributeSchema,
    /// All nodes, root first, bottom level last.
    nodes: Vec<SeriesKey>,
    /// Observed fully bound keys, in canonical order.
    bottom: Vec<SeriesKey>,
}

impl GroupStructure {
    pub fn nodes(&self) -> &[SeriesKey] {
        &self.nodes
    }

    pub fn bottom(&self) -> &[SeriesKey] {
        &self.bottom
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn bottom_count(&self) -> usize {
        self.bottom.len()
    }

    pub fn node_index(&self, key: &SeriesKey) -> Option<usize> {
        self.nodes.iter().position(|k| k == key)
    }

    /// Row range of the bottom block: the last `bottom_count` nodes.
    pub fn bottom_offset(&self) -> usize {
        self.nodes.len() - self.bottom.len()
    }
}

/// Build the node set from configured levels and the observed bottom keys.
///
/// Each level is a subset of schema attributes; a node exists for every
/// distinct restriction of an observed bottom key to a level. Only
/// observed combinations materialize, so no all-zero series enter the
/// structure. The returned node order is: root, levels in configuration
/// order (nodes sorted within each level), bottom keys last.
pub fn build_structure(
    schema: &AttributeSchema,
    levels: &[Vec<String>],
    bottom_keys: &[SeriesKey],
) -> Result<GroupStructure> {
    if bottom_keys.is_empty() {
        return Err(Error::EmptyBottom);
    }
    for key in bottom_keys {
        if !key.is_full(schema) {
            return Err(Error::KeyOutsideSchema(format!(
                "bottom key '{}' does not bind every attribute",
                key.label(schema)
            )));
        }
    }
    let mut level_sets = Vec::with_capacity(levels.len());
    for level in levels {
        let mut set = BTreeSet::new();
        for name in level {
            let idx = schema
                .index_of(name)
                .ok_or_else(|| Error::UnknownAttribute(name.clone()))?;
            set.insert(idx);
        }
        level_sets.push(set);
    }

    let mut bottom: Vec<SeriesKey> = bottom_keys.to_vec();
    bottom.sort();
    bottom.dedup();

    let full: BTreeSet<usize> = (0..schema.len()).collect();
    let mut nodes = vec![SeriesKey::root()];
    let mut seen: BTreeSet<SeriesKey> = BTreeSet::new();
    seen.insert(SeriesKey::root());
    for level in &level_sets {
        if level.is_empty() || *level == full {
            // the root and the bottom block are always present
            continue;
        }
        let mut level_nodes: Vec<SeriesKey> =
            bottom.iter().map(|k| k.restrict(level)).collect();
        level_nodes.sort();
        level_nodes.dedup();
        for node in level_nodes {
            if seen.insert(node.clone()) {
                nodes.push(node);
            }
        }
    }
    for key in &bottom {
        // level nodes bind strictly fewer attributes, so no collision
        debug_assert!(!seen.contains(key));
        nodes.push(key.clone());
    }

    Ok(GroupStructure {
        schema: schema.clone(),
        nodes,
        bottom,
    })
}

/// The 0/1 matrix mapping bottom series to every node.
#[derive(Debug, Clone, PartialEq)]
pub struct SummingMatrix {
    matrix: DMatrix<f64>,
}

impl SummingMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Aggregate bottom-level values (columns) to every node.
    pub fn aggregate(&self, bottom: &DMatrix<f64>) -> DMatrix<f64> {
        &self.matrix * bottom
    }

    /// Build directly from a dense matrix (tests and fixtures).
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }
}

/// S[i][j] = 1 iff bottom key j is consistent with node i's bindings.
/// The root row is all ones and the bottom rows form an identity block.
pub fn build_summing_matrix(structure: &GroupStructure) -> SummingMatrix {
    let n = structure.node_count();
    let m = structure.bottom_count();
    let mut matrix = DMatrix::<f64>::zeros(n, m);
    for (i, node) in structure.nodes().iter().enumerate() {
        for (j, bottom) in structure.bottom().iter().enumerate() {
            if node.covers(bottom) {
                matrix[(i, j)] = 1.0;
            }
        }
    }
    SummingMatrix { matrix }
}

/// A raw sales record already mapped onto the job calendar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekRecord {
    pub week: usize,
    pub key: SeriesKey,
    pub quantity: f64,
}

/// Sum records into one series per node over `weeks` calendar slots.
///
/// Bottom series are per-week sums of matching records (weeks with no
/// records stay 0); every other node is S times the bottom block, so
/// historical coherence holds by construction.
pub fn aggregate_records(
    records: &[WeekRecord],
    structure: &GroupStructure,
    weeks: usize,
    period: usize,
) -> Result<BTreeMap<SeriesKey, TimeSeries>> {
    let m = structure.bottom_count();
    let mut bottom = DMatrix::<f64>::zeros(m, weeks);
    let index: BTreeMap<&SeriesKey, usize> = structure
        .bottom()
        .iter()
        .enumerate()
        .map(|(j, k)| (k, j))
        .collect();
    for (i, record) in records.iter().enumerate() {
        if !record.quantity.is_finite() {
            return Err(Error::NonFiniteQuantity { index: i });
        }
        if record.week >= weeks {
            return Err(Error::WeekOutOfRange {
                week: record.week,
                weeks,
            });
        }
        let j = *index.get(&record.key).ok_or_else(|| {
            Error::KeyOutsideSchema(format!(
                "record key '{}' not among observed bottom keys",
                record.key.label(&structure.schema)
            ))
        })?;
        bottom[(j, record.week)] += record.quantity;
    }

    let s = build_summing_matrix(structure);
    let all = s.aggregate(&bottom);
    let mut out = BTreeMap::new();
    for (i, key) in structure.nodes().iter().enumerate() {
        let values: Vec<f64> = (0..weeks).map(|w| all[(i, w)]).collect();
        out.insert(key.clone(), TimeSeries::new(values, period)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two_schema() -> AttributeSchema {
        AttributeSchema::new(vec![
            ("g1".into(), vec!["A".into(), "B".into()]),
            ("g2".into(), vec!["X".into(), "Y".into()]),
        ])
        .unwrap()
    }

    fn all_bottoms(schema: &AttributeSchema) -> Vec<SeriesKey> {
        let mut keys = Vec::new();
        for a in ["A", "B"] {
            for x in ["X", "Y"] {
                keys.push(SeriesKey::from_pairs(schema, &[("g1", a), ("g2", x)]).unwrap());
            }
        }
        keys
    }

    #[test]
    fn two_by_two_grouping_has_nine_nodes() {
        let schema = two_by_two_schema();
        let levels = vec![
            vec!["g1".to_string()],
            vec!["g2".to_string()],
            vec!["g1".to_string(), "g2".to_string()],
        ];
        let structure = build_structure(&schema, &levels, &all_bottoms(&schema)).unwrap();
        assert_eq!(structure.node_count(), 9);
        assert_eq!(structure.bottom_count(), 4);
        assert!(structure.nodes()[0].is_root());
        // root appears exactly once
        let roots = structure.nodes().iter().filter(|k| k.is_root()).count();
        assert_eq!(roots, 1);
    }

    #[test]
    fn key_order_is_insensitive_to_construction_order() {
        let schema = two_by_two_schema();
        let ax = SeriesKey::from_pairs(&schema, &[("g1", "A"), ("g2", "X")]).unwrap();
        let xa = SeriesKey::from_pairs(&schema, &[("g2", "X"), ("g1", "A")]).unwrap();
        assert_eq!(ax, xa);
    }

    #[test]
    fn single_attribute_hierarchy() {
        let schema =
            AttributeSchema::new(vec![("brand".into(), vec!["1".into(), "2".into()])]).unwrap();
        let bottoms = vec![
            SeriesKey::from_pairs(&schema, &[("brand", "1")]).unwrap(),
            SeriesKey::from_pairs(&schema, &[("brand", "2")]).unwrap(),
        ];
        let structure = build_structure(&schema, &[vec!["brand".into()]], &bottoms).unwrap();
        assert_eq!(structure.node_count(), 3);
        let s = build_summing_matrix(&structure);
        let m = s.matrix();
        assert_eq!(m.nrows(), 3);
        assert_eq!(m.ncols(), 2);
        assert_eq!((m[(0, 0)], m[(0, 1)]), (1.0, 1.0));
        assert_eq!((m[(1, 0)], m[(1, 1)]), (1.0, 0.0));
        assert_eq!((m[(2, 0)], m[(2, 1)]), (0.0, 1.0));
    }

    #[test]
    fn unobserved_combination_drops_nodes() {
        let schema = two_by_two_schema();
        let levels = vec![
            vec!["g1".to_string()],
            vec!["g2".to_string()],
        ];
        let mut bottoms = all_bottoms(&schema);
        // remove BY
        bottoms.retain(|k| {
            !(k.value_for(0) == Some(1) && k.value_for(1) == Some(1))
        });
        let structure = build_structure(&schema, &levels, &bottoms).unwrap();
        // root + {A,B} + {X,Y} + 3 bottoms = 8
        assert_eq!(structure.node_count(), 8);
    }

    #[test]
    fn summing_matrix_consistency_oracle() {
        let schema = two_by_two_schema();
        let levels = vec![
            vec!["g1".to_string()],
            vec!["g2".to_string()],
            vec!["g1".to_string(), "g2".to_string()],
        ];
        let structure = build_structure(&schema, &levels, &all_bottoms(&schema)).unwrap();
        let s = build_summing_matrix(&structure);
        let m = s.matrix();
        // brute-force: entry is 1 exactly when the node covers the bottom key
        for (i, node) in structure.nodes().iter().enumerate() {
            for (j, bottom) in structure.bottom().iter().enumerate() {
                let expected = if node.covers(bottom) { 1.0 } else { 0.0 };
                assert_eq!(m[(i, j)], expected, "entry ({i},{j})");
            }
        }
        // row for g1=A covers AX and AY
        let a = SeriesKey::from_pairs(&schema, &[("g1", "A")]).unwrap();
        let i = structure.node_index(&a).unwrap();
        let row: Vec<f64> = (0..4).map(|j| m[(i, j)]).collect();
        assert_eq!(row.iter().sum::<f64>(), 2.0);
        // bottom rows are the identity block
        let offset = structure.bottom_offset();
        for bi in 0..structure.bottom_count() {
            for j in 0..structure.bottom_count() {
                let expected = if bi == j { 1.0 } else { 0.0 };
                assert_eq!(m[(offset + bi, j)], expected);
            }
        }
        // every column serves the root and its own bottom row at least
        for j in 0..structure.bottom_count() {
            let total: f64 = (0..structure.node_count()).map(|i| m[(i, j)]).sum();
            assert!(total >= 2.0);
        }
    }

    #[test]
    fn aggregation_sums_matching_records() {
        let schema = two_by_two_schema();
        let levels = vec![vec!["g1".to_string()], vec!["g2".to_string()]];
        let structure = build_structure(&schema, &levels, &all_bottoms(&schema)).unwrap();
        let ax = SeriesKey::from_pairs(&schema, &[("g1", "A"), ("g2", "X")]).unwrap();
        let records = vec![WeekRecord {
            week: 2,
            key: ax.clone(),
            quantity: 5.0,
        }];
        let series = aggregate_records(&records, &structure, 4, 1).unwrap();
        assert_eq!(series[&ax].values(), &[0.0, 0.0, 5.0, 0.0]);
        let a = SeriesKey::from_pairs(&schema, &[("g1", "A")]).unwrap();
        let x = SeriesKey::from_pairs(&schema, &[("g2", "X")]).unwrap();
        assert_eq!(series[&a].values(), &[0.0, 0.0, 5.0, 0.0]);
        assert_eq!(series[&x].values(), &[0.0, 0.0, 5.0, 0.0]);
        assert_eq!(series[&SeriesKey::root()].values(), &[0.0, 0.0, 5.0, 0.0]);
    }

    #[test]
    fn same_week_same_key_records_sum() {
        let schema = two_by_two_schema();
        let structure =
            build_structure(&schema, &[vec!["g1".to_string()]], &all_bottoms(&schema)).unwrap();
        let ax = SeriesKey::from_pairs(&schema, &[("g1", "A"), ("g2", "X")]).unwrap();
        let records = vec![
            WeekRecord { week: 1, key: ax.clone(), quantity: 2.0 },
            WeekRecord { week: 1, key: ax.clone(), quantity: 3.5 },
        ];
        let series = aggregate_records(&records, &structure, 3, 1).unwrap();
        assert_eq!(series[&ax].values(), &[0.0, 5.5, 0.0]);
    }

    #[test]
    fn aggregation_matches_brute_force_filter_and_sum() {
        use rand::Rng;
        use rand::SeedableRng;
        let schema = two_by_two_schema();
        let levels = vec![
            vec!["g1".to_string()],
            vec!["g2".to_string()],
        ];
        let bottoms = all_bottoms(&schema);
        let structure = build_structure(&schema, &levels, &bottoms).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let weeks = 10;
        let records: Vec<WeekRecord> = (0..200)
            .map(|_| WeekRecord {
                week: rng.random_range(0..weeks),
                key: bottoms[rng.random_range(0..bottoms.len())].clone(),
                quantity: rng.random_range(0..20) as f64,
            })
            .collect();
        let series = aggregate_records(&records, &structure, weeks, 1).unwrap();
        for node in structure.nodes() {
            let mut expected = vec![0.0; weeks];
            for r in &records {
                if node.covers(&r.key) {
                    expected[r.week] += r.quantity;
                }
            }
            assert_eq!(
                series[node].values(),
                expected.as_slice(),
                "node {}",
                node.label(&schema)
            );
        }
    }

    #[test]
    fn node_count_matches_enumeration_on_random_schemas() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4242);
        for _ in 0..20 {
            let n_attr = rng.random_range(2..=3);
            let mut attrs = Vec::new();
            for a in 0..n_attr {
                let n_vals = rng.random_range(2..=3);
                let values: Vec<String> = (0..n_vals).map(|v| format!("v{v}")).collect();
                attrs.push((format!("a{a}"), values));
            }
            let schema = AttributeSchema::new(attrs).unwrap();
            // levels: each single attribute, then the full crossing
            let mut levels: Vec<Vec<String>> =
                schema.names().map(|n| vec![n.to_string()]).collect();
            levels.push(schema.names().map(|n| n.to_string()).collect());
            // all combinations observed
            let mut bottoms = vec![vec![]];
            for a in 0..schema.len() {
                let mut next = Vec::new();
                for b in &bottoms {
                    for v in schema.values_of(a) {
                        let mut nb: Vec<(String, String)> = b.clone();
                        nb.push((schema.name_of(a).to_string(), v.clone()));
                        next.push(nb);
                    }
                }
                bottoms = next;
            }
            let keys: Vec<SeriesKey> = bottoms
                .iter()
                .map(|pairs| {
                    let refs: Vec<(&str, &str)> =
                        pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
                    SeriesKey::from_pairs(&schema, &refs).unwrap()
                })
                .collect();
            let structure = build_structure(&schema, &levels, &keys).unwrap();
            // expected: 1 (root) + sum over single levels + full crossing
            let mut expected = 1;
            for a in 0..schema.len() {
                expected += schema.values_of(a).len();
            }
            expected += keys.len();
            assert_eq!(structure.node_count(), expected);
        }
    }

    #[test]
    fn empty_bottom_rejected() {
        let schema = two_by_two_schema();
        assert!(matches!(
            build_structure(&schema, &[vec!["g1".to_string()]], &[]),
            Err(Error::EmptyBottom)
        ));
    }

    #[test]
    fn unknown_attribute_rejected() {
        let schema = two_by_two_schema();
        assert!(matches!(
            build_structure(&schema, &[vec!["nope".to_string()]], &all_bottoms(&schema)),
            Err(Error::UnknownAttribute(_))
        ));
    }

    #[test]
    fn record_outside_structure_rejected() {
        let schema = two_by_two_schema();
        let mut bottoms = all_bottoms(&schema);
        let stray = bottoms.pop().unwrap();
        let structure =
            build_structure(&schema, &[vec!["g1".to_string()]], &bottoms).unwrap();
        let records = vec![WeekRecord { week: 0, key: stray, quantity: 1.0 }];
        assert!(matches!(
            aggregate_records(&records, &structure, 2, 1),
            Err(Error::KeyOutsideSchema(_))
        ));
    }
}
