//! TSV readers and writers for nodes, edges and features.
//!
//! * nodes: `node_id<TAB>type_name<TAB>label` (label may be empty)
//! * edges: `src_id<TAB>dst_id[<TAB>weight]`
//! * features: `node_id<TAB>x_1 ... x_D`
//!
//! Lines starting with `#` and blank lines are skipped; CRLF is accepted.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hingraph::{EdgeMode, HinGraph};
use crate::numerics::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphFiles {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    pub features: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Class count `C`; inferred as `max label + 1` when absent.
    pub num_classes: Option<usize>,
    /// Forces an edge mode; by default edges are weighted iff any line has a
    /// weight column.
    pub edge_mode: Option<EdgeMode>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Yields `(1-based line number, tab-split fields)` for content lines.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split('\t').collect()))
        }
    })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

pub fn load_graph(files: &GraphFiles, opts: LoadOptions) -> Result<HinGraph> {
    // nodes
    let nodes_text = read(&files.nodes)?;
    let mut raw_ids: Vec<String> = Vec::new();
    let mut raw_types: Vec<String> = Vec::new();
    let mut raw_labels: Vec<Option<usize>> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (line, fields) in records(&nodes_text) {
        if !(2..=3).contains(&fields.len()) {
            return Err(parse_err(
                &files.nodes,
                line,
                format!("expected 2 or 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let id = fields[0].trim();
        let ty = fields[1].trim();
        if id.is_empty() || ty.is_empty() {
            return Err(parse_err(&files.nodes, line, "empty node id or type"));
        }
        let label = match fields.get(2).map(|s| s.trim()) {
            None | Some("") => None,
            Some(s) => Some(s.parse::<usize>().map_err(|_| {
                parse_err(&files.nodes, line, format!("label `{s}` is not a class id"))
            })?),
        };
        if seen.insert(id.to_string(), raw_ids.len()).is_some() {
            return Err(Error::DuplicateNode {
                path: files.nodes.clone(),
                line,
                id: id.to_string(),
            });
        }
        raw_ids.push(id.to_string());
        raw_types.push(ty.to_string());
        raw_labels.push(label);
    }
    let n = raw_ids.len();

    // Ids that are exactly 0..N keep their value; anything else is remapped
    // in first-seen order.
    let numeric: Option<Vec<usize>> = raw_ids.iter().map(|s| s.parse::<usize>().ok()).collect();
    let (index_of_row, node_names) = match numeric {
        Some(ids) if ids.iter().copied().collect::<BTreeSet<_>>() == (0..n).collect() => {
            (ids, None)
        }
        _ => ((0..n).collect(), Some(raw_ids.clone())),
    };
    let lookup = |id: &str| -> Option<usize> { seen.get(id).map(|&row| index_of_row[row]) };

    let type_names: Vec<String> = raw_types
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let type_id: HashMap<&str, usize> = type_names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut node_types = vec![0; n];
    let mut labels = vec![None; n];
    for row in 0..n {
        let idx = index_of_row[row];
        node_types[idx] = type_id[raw_types[row].as_str()];
        labels[idx] = raw_labels[row];
    }
    let num_classes = match opts.num_classes {
        Some(c) => c,
        None => labels.iter().flatten().max().map_or(0, |&m| m + 1),
    };

    // edges
    let edges_text = read(&files.edges)?;
    let mut edges = Vec::new();
    let mut any_weight = false;
    for (line, fields) in records(&edges_text) {
        if !(2..=3).contains(&fields.len()) {
            return Err(parse_err(
                &files.edges,
                line,
                format!("expected 2 or 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let mut ends = [0usize; 2];
        for (slot, raw) in ends.iter_mut().zip(&fields[..2]) {
            let id = raw.trim();
            *slot = lookup(id).ok_or_else(|| Error::DanglingEndpoint {
                path: files.edges.clone(),
                line,
                id: id.to_string(),
            })?;
        }
        if ends[0] == ends[1] {
            return Err(Error::SelfLoop {
                path: files.edges.clone(),
                line,
                id: fields[0].trim().to_string(),
            });
        }
        let weight = match fields.get(2) {
            None => 1.0,
            Some(w) => {
                any_weight = true;
                let w = w.trim();
                match w.parse::<f64>() {
                    Ok(x) if x.is_finite() && x > 0.0 => x,
                    _ => {
                        return Err(parse_err(
                            &files.edges,
                            line,
                            format!("weight `{w}` is not a positive number"),
                        ))
                    }
                }
            }
        };
        edges.push((ends[0], ends[1], weight));
    }
    let mode = opts.edge_mode.unwrap_or(if any_weight {
        EdgeMode::Weighted
    } else {
        EdgeMode::Unweighted
    });

    // features
    let features = match &files.features {
        None => None,
        Some(path) => load_features(path, n, &lookup)?,
    };

    for &label in labels.iter().flatten() {
        if label >= num_classes {
            return Err(Error::LabelOutOfRange {
                label,
                classes: num_classes,
            });
        }
    }

    Ok(
        HinGraph::new(node_types, type_names, edges, features, labels, num_classes, mode)?
            .with_node_names(node_names),
    )
}

/// `None` when the file holds no feature rows (identity features are used).
fn load_features(
    path: &Path,
    n: usize,
    lookup: &dyn Fn(&str) -> Option<usize>,
) -> Result<Option<DenseMatrix>> {
    let text = read(path)?;
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut dim: Option<usize> = None;
    for (line, fields) in records(&text) {
        let id = fields[0].trim();
        let node = lookup(id)
            .ok_or_else(|| parse_err(path, line, format!("unknown node `{id}`")))?;
        let values = fields[1..]
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(path, line, format!("`{s}` is not a finite real")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(parse_err(
                    path,
                    line,
                    format!("expected {d} feature values, found {}", values.len()),
                ))
            }
            _ => {}
        }
        if rows[node].replace(values).is_some() {
            return Err(parse_err(path, line, format!("duplicate features for `{id}`")));
        }
    }
    let Some(d) = dim else {
        return Ok(None);
    };
    let mut out = DenseMatrix::zeros(n, d);
    for (v, row) in rows.into_iter().enumerate() {
        let row = row.ok_or_else(|| parse_err(path, 0, format!("no features for node index {v}")))?;
        out.row_mut(v).copy_from_slice(&row);
    }
    Ok(Some(out))
}

fn node_id(g: &HinGraph, v: usize) -> String {
    match g.node_names() {
        Some(names) => names[v].clone(),
        None => v.to_string(),
    }
}

/// Writes `nodes.tsv`, `edges.tsv` and `features.tsv` into `dir`.
pub fn write_graph(g: &HinGraph, dir: &Path) -> Result<GraphFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = GraphFiles {
        nodes: dir.join("nodes.tsv"),
        edges: dir.join("edges.tsv"),
        features: Some(dir.join("features.tsv")),
    };

    let mut nodes = String::from("# node_id\ttype\tlabel\n");
    for v in 0..g.num_nodes() {
        let label = g.label(v).map(|l| l.to_string()).unwrap_or_default();
        let _ = writeln!(
            nodes,
            "{}\t{}\t{}",
            node_id(g, v),
            g.type_names()[g.node_type(v)],
            label
        );
    }

    let mut edges = String::from("# src\tdst\n");
    for e in g.edges() {
        if g.is_weighted() {
            let _ = writeln!(edges, "{}\t{}\t{}", node_id(g, e.u), node_id(g, e.v), e.weight);
        } else {
            let _ = writeln!(edges, "{}\t{}", node_id(g, e.u), node_id(g, e.v));
        }
    }

    let mut feats = String::new();
    for v in 0..g.num_nodes() {
        feats.push_str(&node_id(g, v));
        for x in g.features().row(v) {
            let _ = write!(feats, "\t{x}");
        }
        feats.push('\n');
    }

    for (path, body) in [
        (&files.nodes, nodes),
        (&files.edges, edges),
        (files.features.as_ref().expect("set above"), feats),
    ] {
        fs::write(path, body).map_err(|e| Error::io(path, e))?;
    }
    Ok(files)
}

/// Writes `index<TAB>original_id` for graphs whose ids were remapped.
/// Returns `false` (and writes nothing) when no remap happened.
pub fn write_id_map(g: &HinGraph, path: &Path) -> Result<bool> {
    let Some(names) = g.node_names() else {
        return Ok(false);
    };
    let mut out = String::from("# index\tnode_id\n");
    for (i, name) in names.iter().enumerate() {
        let _ = writeln!(out, "{i}\t{name}");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hingraph::{synth_hin, SynthParams};

    fn files(dir: &Path, nodes: &str, edges: &str, features: Option<&str>) -> GraphFiles {
        fs::write(dir.join("n.tsv"), nodes).unwrap();
        fs::write(dir.join("e.tsv"), edges).unwrap();
        let features = features.map(|f| {
            fs::write(dir.join("f.tsv"), f).unwrap();
            dir.join("f.tsv")
        });
        GraphFiles {
            nodes: dir.join("n.tsv"),
            edges: dir.join("e.tsv"),
            features,
        }
    }

    #[test]
    fn three_node_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let f = files(
            dir.path(),
            "# comment\n0\tauthor\t1\n1\tpaper\t0\r\n2\tpaper\t\n",
            "0\t1\n1\t2\n1\t0\n",
            None,
        );
        let g = load_graph(&f, LoadOptions::default()).unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.edges().len(), 2);
        assert_eq!(g.num_classes(), 2);
        assert_eq!(g.labels(), &[Some(1), Some(0), None]);
        assert_eq!(g.type_names(), &["author".to_string(), "paper".to_string()]);
        assert!(g.node_names().is_none());
    }

    #[test]
    fn missing_features_file_gives_identity() {
        let dir = tempfile::tempdir().unwrap();
        let f = files(dir.path(), "0\ta\n1\ta\n2\tb\n3\tb\n", "0\t2\n", None);
        let g = load_graph(&f, LoadOptions::default()).unwrap();
        assert_eq!(g.features(), &DenseMatrix::identity(4));
    }

    #[test]
    fn empty_features_file_gives_identity() {
        let dir = tempfile::tempdir().unwrap();
        let f = files(dir.path(), "0\ta\n1\ta\n2\tb\n", "0\t2\n", Some("# node_id\tx\n\n"));
        let g = load_graph(&f, LoadOptions::default()).unwrap();
        assert_eq!(g.features(), &DenseMatrix::identity(3));
    }

    #[test]
    fn dangling_endpoint() {
        let dir = tempfile::tempdir().unwrap();
        let f = files(dir.path(), "0\ta\n1\ta\n", "0\t1\n0\t7\n", None);
        match load_graph(&f, LoadOptions::default()) {
            Err(Error::DanglingEndpoint { line, id, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(id, "7");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_report_lines() {
        let dir = tempfile::tempdir().unwrap();
        let f = files(dir.path(), "0\ta\n1\n", "", None);
        assert!(matches!(
            load_graph(&f, LoadOptions::default()),
            Err(Error::Parse { line: 2, .. })
        ));
        let f = files(dir.path(), "0\ta\n0\tb\n", "", None);
        assert!(matches!(
            load_graph(&f, LoadOptions::default()),
            Err(Error::DuplicateNode { line: 2, .. })
        ));
        let f = files(dir.path(), "0\ta\t3\n", "", None);
        assert!(matches!(
            load_graph(&f, LoadOptions { num_classes: Some(3), ..Default::default() }),
            Err(Error::LabelOutOfRange { label: 3, classes: 3 })
        ));
        let f = files(dir.path(), "0\ta\n1\ta\n", "0\t1\n", Some("0\t1.0\n1\t1.0\t2.0\n"));
        assert!(matches!(
            load_graph(&f, LoadOptions::default()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn string_ids_are_remapped() {
        let dir = tempfile::tempdir().unwrap();
        let f = files(
            dir.path(),
            "alice\tauthor\t0\np1\tpaper\t1\n",
            "alice\tp1\t2.5\n",
            Some("p1\t0.5\nalice\t1.5\n"),
        );
        let g = load_graph(&f, LoadOptions::default()).unwrap();
        assert_eq!(g.node_names().unwrap(), &["alice".to_string(), "p1".to_string()]);
        assert!(g.is_weighted());
        assert_eq!(g.edges()[0].weight, 2.5);
        assert_eq!(g.features().row(0), &[1.5]);
        let map = dir.path().join("map.tsv");
        assert!(write_id_map(&g, &map).unwrap());
        assert_eq!(fs::read_to_string(map).unwrap(), "# index\tnode_id\n0\talice\n1\tp1\n");
    }

    #[test]
    fn synthetic_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = synth_hin(&SynthParams {
            types: 3,
            classes: 2,
            nodes_per_class: 8,
            p_in: 0.5,
            p_out: 0.1,
            feature_noise: 0.3,
            seed: 9,
        })
        .unwrap();
        let f = write_graph(&g, dir.path()).unwrap();
        let back = load_graph(&f, LoadOptions::default()).unwrap();
        assert_eq!(back, g);
    }
}
