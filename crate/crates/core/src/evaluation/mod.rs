//! Evaluation protocol: benchmark label construction by propagation,
//! one-vs-rest triple/edge classification scored by micro/macro F1, and
//! k-means clustering scored by NMI.

mod community;
mod kmeans;
mod logreg;
mod metrics;

pub use community::{community_edge_dataset, detect_communities, modularity};
pub use kmeans::{kmeans, KmeansResult};
pub use logreg::{stratified_split, train_logistic_ovr, OvrLogisticRegression, StratifiedSplit};
pub use metrics::{macro_f1, micro_f1, nmi};

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::graph::{KnowledgeGraph, PredicateId};

/// Set of label ids attached to one entity.
pub type LabelSet = BTreeSet<u32>;

/// Seed labels for entities, with the interned label names.
#[derive(Clone, Debug)]
pub struct EntityLabels {
    /// Per entity, indexed by `EntityId`.
    pub labels: Vec<LabelSet>,
    /// Label names indexed by label id.
    pub names: Vec<String>,
}

/// Parses `nodeToken\tlabel` lines; repeated node tokens accumulate a
/// label set. Tokens must name entities of the graph.
pub fn parse_label_file<R: BufRead>(reader: R, g: &KnowledgeGraph) -> Result<EntityLabels> {
    let mut names: Vec<String> = Vec::new();
    let mut ids: BTreeMap<String, u32> = BTreeMap::new();
    let mut labels = vec![LabelSet::new(); g.entity_count()];
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t');
        let (token, label) = match (fields.next(), fields.next(), fields.next()) {
            (Some(t), Some(l), None) => (t, l),
            _ => return Err(Error::parse(idx + 1, "expected `nodeToken\\tlabel`")),
        };
        let entity = g
            .entity_id(token)
            .ok_or_else(|| Error::parse(idx + 1, format!("unknown entity '{token}'")))?;
        let label_id = *ids.entry(label.to_string()).or_insert_with(|| {
            names.push(label.to_string());
            names.len() as u32 - 1
        });
        labels[entity.index()].insert(label_id);
    }
    Ok(EntityLabels { labels, names })
}

/// Which way labels travel across triples of one predicate.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Direction {
    SubjectToObject,
    ObjectToSubject,
}

/// One propagation step: push label sets across every triple of the given
/// predicate, in the given direction.
#[derive(Copy, Clone, Debug)]
pub struct PropagationRule {
    pub predicate: PredicateId,
    pub direction: Direction,
}

/// Parses `predicate<TAB>direction` lines where direction is `s->o` or
/// `o->s`.
pub fn parse_rules_file<R: BufRead>(reader: R, g: &KnowledgeGraph) -> Result<Vec<PropagationRule>> {
    let mut rules = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (pred, dir) = match (fields.next(), fields.next(), fields.next()) {
            (Some(p), Some(d), None) => (p, d),
            _ => return Err(Error::parse(idx + 1, "expected `predicate direction`")),
        };
        let predicate = g
            .predicate_id(pred)
            .ok_or_else(|| Error::parse(idx + 1, format!("unknown predicate '{pred}'")))?;
        let direction = match dir {
            "s->o" => Direction::SubjectToObject,
            "o->s" => Direction::ObjectToSubject,
            other => {
                return Err(Error::parse(
                    idx + 1,
                    format!("direction must be `s->o` or `o->s`, got '{other}'"),
                ))
            }
        };
        rules.push(PropagationRule {
            predicate,
            direction,
        });
    }
    Ok(rules)
}

/// Applies each rule once, in order. A rule unions the source endpoint's
/// labels into the target endpoint for every triple of its predicate,
/// reading from the state before the rule so the result does not depend on
/// triple order.
pub fn propagate_labels(
    g: &KnowledgeGraph,
    seeds: &[LabelSet],
    rules: &[PropagationRule],
) -> Result<Vec<LabelSet>> {
    if seeds.len() != g.entity_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} seed label sets for {} entities",
            seeds.len(),
            g.entity_count()
        )));
    }
    let mut current = seeds.to_vec();
    for rule in rules {
        if rule.predicate.index() >= g.predicate_count() {
            return Err(Error::InvalidId {
                kind: "predicate",
                id: rule.predicate.index(),
                count: g.predicate_count(),
            });
        }
        let snapshot = current.clone();
        for t in g.triples() {
            if t.predicate != rule.predicate {
                continue;
            }
            let (src, dst) = match rule.direction {
                Direction::SubjectToObject => (t.subject, t.object),
                Direction::ObjectToSubject => (t.object, t.subject),
            };
            let incoming = snapshot[src.index()].clone();
            current[dst.index()].extend(incoming);
        }
    }
    Ok(current)
}

/// Line-graph nodes paired with dense class ids, plus the class signature
/// table.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    /// `(line node id, class id)` pairs; each node appears at most once.
    pub items: Vec<(u32, u32)>,
    /// Class signatures indexed by class id.
    pub classes: Vec<String>,
}

impl LabeledDataset {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

/// Labels each triple with the union of its endpoint label sets; triples
/// whose union is empty are excluded. Each distinct label-set signature
/// becomes one class, with ids assigned in lexicographic signature order.
pub fn label_triples(
    g: &KnowledgeGraph,
    entity_labels: &[LabelSet],
    label_names: &[String],
) -> Result<LabeledDataset> {
    if entity_labels.len() != g.entity_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} label sets for {} entities",
            entity_labels.len(),
            g.entity_count()
        )));
    }
    let mut signatures: Vec<(String, u32)> = Vec::new();
    let mut sig_of_triple = Vec::new();
    for (idx, t) in g.triples().iter().enumerate() {
        let union: LabelSet = entity_labels[t.subject.index()]
            .union(&entity_labels[t.object.index()])
            .copied()
            .collect();
        if union.is_empty() {
            continue;
        }
        let signature = union
            .iter()
            .map(|&l| label_names[l as usize].as_str())
            .collect::<Vec<_>>()
            .join(",");
        sig_of_triple.push((idx as u32, signature));
    }
    let mut distinct: Vec<String> = sig_of_triple.iter().map(|(_, s)| s.clone()).collect();
    distinct.sort();
    distinct.dedup();
    for (rank, s) in distinct.iter().enumerate() {
        signatures.push((s.clone(), rank as u32));
    }
    let class_of = |s: &str| -> u32 {
        signatures[signatures
            .binary_search_by(|(sig, _)| sig.as_str().cmp(s))
            .expect("signature was collected")]
        .1
    };
    let items = sig_of_triple
        .iter()
        .map(|(node, s)| (*node, class_of(s)))
        .collect();
    Ok(LabeledDataset {
        items,
        classes: distinct,
    })
}

/// Mean micro/macro F1 of the one-vs-rest classifier over several seeded
/// stratified runs.
#[derive(Clone, Debug)]
pub struct ClassificationOutcome {
    pub micro_f1: f64,
    pub macro_f1: f64,
    /// Classes dropped in at least one run for missing training rows.
    pub dropped_classes: Vec<u32>,
}

/// Runs the classification protocol: stratified split, one-vs-rest
/// logistic regression, micro/macro F1 on the held-out side; reports the
/// mean over `runs` seeded repetitions.
pub fn classification_experiment(
    embeddings: &[f64],
    dim: usize,
    dataset: &LabeledDataset,
    train_fraction: f64,
    runs: usize,
    seed: u64,
) -> Result<ClassificationOutcome> {
    if runs == 0 {
        return Err(Error::EmptyInput("runs"));
    }
    // Gather the labeled rows into a dense feature matrix.
    let mut features = Vec::with_capacity(dataset.items.len() * dim);
    let mut labels = Vec::with_capacity(dataset.items.len());
    for &(node, class) in &dataset.items {
        let row = &embeddings[node as usize * dim..(node as usize + 1) * dim];
        features.extend_from_slice(row);
        labels.push(class);
    }

    let mut micro_sum = 0.0;
    let mut macro_sum = 0.0;
    let mut dropped = BTreeSet::new();
    for run in 0..runs {
        let split = stratified_split(&labels, train_fraction, seed.wrapping_add(run as u64))?;
        if split.test.is_empty() {
            return Err(Error::EmptyInput("test split"));
        }
        let model = train_logistic_ovr(&features, dim, &labels, &split)?;
        dropped.extend(model.dropped_classes.iter().copied());
        let predicted: Vec<u32> = split
            .test
            .iter()
            .map(|&i| model.predict(&features[i * dim..(i + 1) * dim]))
            .collect();
        let actual: Vec<u32> = split.test.iter().map(|&i| labels[i]).collect();
        micro_sum += micro_f1(&predicted, &actual)?;
        macro_sum += macro_f1(&predicted, &actual)?;
    }
    Ok(ClassificationOutcome {
        micro_f1: micro_sum / runs as f64,
        macro_f1: macro_sum / runs as f64,
        dropped_classes: dropped.into_iter().collect(),
    })
}

/// Runs the clustering protocol: k-means over the labeled rows, NMI
/// against the dataset classes; reports the mean over `runs` seeded
/// repetitions.
pub fn clustering_experiment(
    embeddings: &[f64],
    dim: usize,
    dataset: &LabeledDataset,
    k: usize,
    runs: usize,
    seed: u64,
) -> Result<f64> {
    if runs == 0 {
        return Err(Error::EmptyInput("runs"));
    }
    let mut features = Vec::with_capacity(dataset.items.len() * dim);
    let mut labels = Vec::with_capacity(dataset.items.len());
    for &(node, class) in &dataset.items {
        let row = &embeddings[node as usize * dim..(node as usize + 1) * dim];
        features.extend_from_slice(row);
        labels.push(class);
    }
    let mut sum = 0.0;
    for run in 0..runs {
        let result = kmeans(&features, dim, k, seed.wrapping_add(run as u64))?;
        sum += nmi(&result.assignment, &labels)?;
    }
    Ok(sum / runs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn kg(input: &str) -> KnowledgeGraph {
        KnowledgeGraph::parse_tsv(Cursor::new(input)).unwrap()
    }

    fn seed_labels(g: &KnowledgeGraph, pairs: &[(&str, u32)]) -> Vec<LabelSet> {
        let mut seeds = vec![LabelSet::new(); g.entity_count()];
        for &(token, label) in pairs {
            seeds[g.entity_id(token).unwrap().index()].insert(label);
        }
        seeds
    }

    #[test]
    fn authorship_propagation() {
        let g = kg("alice\tauthorship\tpaper1\n");
        let seeds = seed_labels(&g, &[("alice", 0)]);
        let rules = [PropagationRule {
            predicate: g.predicate_id("authorship").unwrap(),
            direction: Direction::SubjectToObject,
        }];
        let out = propagate_labels(&g, &seeds, &rules).unwrap();
        let paper = g.entity_id("paper1").unwrap();
        assert!(out[paper.index()].contains(&0));
    }

    #[test]
    fn empty_rule_list_is_identity() {
        let g = kg("a\tp\tb\nb\tq\tc\n");
        let seeds = seed_labels(&g, &[("a", 0), ("c", 1)]);
        let out = propagate_labels(&g, &seeds, &[]).unwrap();
        assert_eq!(out, seeds);
    }

    #[test]
    fn diamond_propagation_unions() {
        let g = kg("alice\tauthorship\tpaper\nbob\tauthorship\tpaper\n");
        let seeds = seed_labels(&g, &[("alice", 0), ("bob", 1)]);
        let rules = [PropagationRule {
            predicate: g.predicate_id("authorship").unwrap(),
            direction: Direction::SubjectToObject,
        }];
        let out = propagate_labels(&g, &seeds, &rules).unwrap();
        let paper = g.entity_id("paper").unwrap();
        // Set-union oracle.
        let expected: LabelSet = [0u32, 1].into_iter().collect();
        assert_eq!(out[paper.index()], expected);
    }

    #[test]
    fn propagation_is_monotone() {
        let g = kg("a\tp\tb\nb\tp\tc\nc\tq\ta\n");
        let seeds = seed_labels(&g, &[("a", 0), ("b", 1)]);
        let rules = [
            PropagationRule {
                predicate: g.predicate_id("p").unwrap(),
                direction: Direction::SubjectToObject,
            },
            PropagationRule {
                predicate: g.predicate_id("q").unwrap(),
                direction: Direction::ObjectToSubject,
            },
        ];
        let out = propagate_labels(&g, &seeds, &rules).unwrap();
        for (before, after) in seeds.iter().zip(&out) {
            assert!(before.is_subset(after));
        }
    }

    #[test]
    fn propagation_rejects_unknown_predicate() {
        let g = kg("a\tp\tb\n");
        let seeds = vec![LabelSet::new(); g.entity_count()];
        let rules = [PropagationRule {
            predicate: PredicateId(9),
            direction: Direction::SubjectToObject,
        }];
        assert!(matches!(
            propagate_labels(&g, &seeds, &rules),
            Err(Error::InvalidId { .. })
        ));
    }

    #[test]
    fn triple_labels_union_endpoints() {
        let g = kg("a\tp\tb\n");
        let names = vec!["A".to_string(), "B".to_string()];
        let mut labels = vec![LabelSet::new(); g.entity_count()];
        labels[0].insert(0);
        labels[1].insert(1);
        let dataset = label_triples(&g, &labels, &names).unwrap();
        assert_eq!(dataset.classes, vec!["A,B".to_string()]);
        assert_eq!(dataset.items, vec![(0, 0)]);
    }

    #[test]
    fn unlabeled_triples_are_excluded() {
        let g = kg("a\tp\tb\nc\tq\td\n");
        let names = vec!["A".to_string()];
        let mut labels = vec![LabelSet::new(); g.entity_count()];
        labels[g.entity_id("a").unwrap().index()].insert(0);
        let dataset = label_triples(&g, &labels, &names).unwrap();
        assert_eq!(dataset.items.len(), 1);
        assert_eq!(dataset.items[0].0, 0);
    }

    #[test]
    fn signature_classes_count_correctly() {
        // Signatures {A}, {A}, {A,B}: two classes of sizes 2 and 1.
        let g = kg("a\tp\tb\na\tp\tc\na\tq\td\n");
        let names = vec!["A".to_string(), "B".to_string()];
        let mut labels = vec![LabelSet::new(); g.entity_count()];
        labels[g.entity_id("a").unwrap().index()].insert(0);
        labels[g.entity_id("d").unwrap().index()].insert(1);
        let dataset = label_triples(&g, &labels, &names).unwrap();
        assert_eq!(dataset.classes, vec!["A".to_string(), "A,B".to_string()]);
        let class_a = dataset.items.iter().filter(|&&(_, c)| c == 0).count();
        let class_ab = dataset.items.iter().filter(|&&(_, c)| c == 1).count();
        assert_eq!((class_a, class_ab), (2, 1));
    }

    #[test]
    fn rule_file_round_trip() {
        let g = kg("m\tactedIn\tf\nx\tdirected\tf\n");
        let rules = parse_rules_file(
            Cursor::new("# comment\nactedIn\ts->o\ndirected\to->s\n"),
            &g,
        )
        .unwrap();
        assert_eq!(rules.len(), 2);
        assert_eq!(rules[0].direction, Direction::SubjectToObject);
        assert_eq!(rules[1].direction, Direction::ObjectToSubject);
        assert!(parse_rules_file(Cursor::new("nosuch\ts->o\n"), &g).is_err());
        assert!(parse_rules_file(Cursor::new("actedIn\tsideways\n"), &g).is_err());
    }

    #[test]
    fn label_file_parses_multi_labels() {
        let g = kg("a\tp\tb\n");
        let labels = parse_label_file(Cursor::new("a\tX\na\tY\nb\tX\n"), &g).unwrap();
        assert_eq!(labels.names, vec!["X".to_string(), "Y".to_string()]);
        assert_eq!(labels.labels[0].len(), 2);
        assert!(parse_label_file(Cursor::new("zz\tX\n"), &g).is_err());
    }

    #[test]
    fn classification_experiment_on_separable_embeddings() {
        // Two classes with well-separated synthetic "embeddings".
        let n = 40;
        let dim = 3;
        let mut embeddings = vec![0.0; n * dim];
        let mut items = Vec::new();
        for i in 0..n {
            let class = (i % 2) as u32;
            let base = if class == 0 { 0.0 } else { 5.0 };
            for d in 0..dim {
                embeddings[i * dim + d] = base + (i as f64 * 0.01) + d as f64 * 0.1;
            }
            items.push((i as u32, class));
        }
        let dataset = LabeledDataset {
            items,
            classes: vec!["a".into(), "b".into()],
        };
        let outcome =
            classification_experiment(&embeddings, dim, &dataset, 0.5, 10, 7).unwrap();
        assert!(outcome.micro_f1 > 0.99, "micro {}", outcome.micro_f1);
        assert!(outcome.macro_f1 > 0.99, "macro {}", outcome.macro_f1);
    }

    #[test]
    fn clustering_experiment_on_separable_embeddings() {
        let n = 30;
        let dim = 2;
        let mut embeddings = vec![0.0; n * dim];
        let mut items = Vec::new();
        for i in 0..n {
            let class = (i % 3) as u32;
            embeddings[i * dim] = class as f64 * 10.0 + (i as f64) * 0.001;
            embeddings[i * dim + 1] = class as f64 * -10.0;
            items.push((i as u32, class));
        }
        let dataset = LabeledDataset {
            items,
            classes: vec!["a".into(), "b".into(), "c".into()],
        };
        let score = clustering_experiment(&embeddings, dim, &dataset, 3, 10, 3).unwrap();
        assert!((score - 1.0).abs() < 1e-9, "nmi {score}");
    }
}
