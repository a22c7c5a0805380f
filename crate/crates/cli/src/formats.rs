//! Edge lists, JSON-lines collections and census tables.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use subgraph_space::catalog::Catalog;
use subgraph_space::census::{CensusMode, FrequencyVector};
use subgraph_space::Graph;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {cause}")]
    Io { path: String, cause: std::io::Error },
    #[error("{0}")]
    Invalid(String),
}

impl FormatError {
    fn parse(path: &Path, line: usize, message: impl Into<String>) -> FormatError {
        FormatError::Parse {
            path: path.display().to_string(),
            line,
            message: message.into(),
        }
    }

    fn io(path: &Path, cause: std::io::Error) -> FormatError {
        FormatError::Io {
            path: path.display().to_string(),
            cause,
        }
    }
}

pub type Result<T> = std::result::Result<T, FormatError>;

/// A graph with the identifier it was read under.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedGraph {
    pub id: String,
    pub graph: Graph,
    /// Original label of each node; declared but unlabeled nodes get `None`.
    pub labels: Vec<Option<String>>,
}

/// Parses an edge list. Labels are re-indexed in order of first appearance;
/// an optional first line `n <count>` declares the node count, so nodes
/// beyond the labeled ones are isolated. Repeated pairs in either
/// orientation are read as one edge.
pub fn parse_edge_list(text: &str, path: &Path) -> Result<(Graph, Vec<Option<String>>)> {
    let mut declared = None;
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut labels: Vec<Option<String>> = Vec::new();
    let mut edges = BTreeSet::new();
    let mut seen_content = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !seen_content && tokens.len() == 2 && tokens[0] == "n" {
            if let Ok(count) = tokens[1].parse::<usize>() {
                declared = Some((count, lineno));
                seen_content = true;
                continue;
            }
        }
        seen_content = true;
        if tokens.len() != 2 {
            return Err(FormatError::parse(
                path,
                lineno,
                format!("expected two node labels, found {} fields", tokens.len()),
            ));
        }
        let mut ends = [0; 2];
        for (end, &s) in ends.iter_mut().zip(&tokens) {
            let next = labels.len();
            *end = *index.entry(s).or_insert_with(|| {
                labels.push(Some(s.to_string()));
                next
            });
        }
        let [u, v] = ends;
        if u == v {
            return Err(FormatError::parse(path, lineno, format!("self-loop on '{}'", tokens[0])));
        }
        edges.insert((u.min(v), u.max(v)));
    }
    let n = match declared {
        Some((count, lineno)) => {
            if count < labels.len() {
                return Err(FormatError::parse(
                    path,
                    lineno,
                    format!("declared {count} nodes but {} labels are used", labels.len()),
                ));
            }
            count
        }
        None => labels.len(),
    };
    labels.resize(n, None);
    let graph = Graph::from_edges(n, edges).map_err(|e| FormatError::Invalid(e.to_string()))?;
    Ok((graph, labels))
}

pub fn read_edge_list(path: &Path) -> Result<NamedGraph> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    let (graph, labels) = parse_edge_list(&text, path)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(NamedGraph { id, graph, labels })
}

/// Edge list with an `n <count>` header and nodes labeled `0..n`.
pub fn write_edge_list<W: Write>(mut out: W, g: &Graph) -> std::io::Result<()> {
    writeln!(out, "n {}", g.n())?;
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonGraph {
    id: String,
    n: usize,
    edges: Vec<[usize; 2]>,
}

pub fn read_jsonl(path: &Path) -> Result<Vec<NamedGraph>> {
    let file = fs::File::open(path).map_err(|e| FormatError::io(path, e))?;
    let mut graphs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| FormatError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: JsonGraph = serde_json::from_str(&line)
            .map_err(|e| FormatError::parse(path, i + 1, e.to_string()))?;
        let mut edges = BTreeSet::new();
        for [u, v] in record.edges {
            if u >= record.n || v >= record.n || u == v {
                return Err(FormatError::parse(
                    path,
                    i + 1,
                    format!("invalid edge [{u}, {v}] for n = {}", record.n),
                ));
            }
            edges.insert((u.min(v), u.max(v)));
        }
        let graph = Graph::from_edges(record.n, edges)
            .map_err(|e| FormatError::parse(path, i + 1, e.to_string()))?;
        graphs.push(NamedGraph {
            id: record.id,
            labels: (0..record.n).map(|u| Some(u.to_string())).collect(),
            graph,
        });
    }
    Ok(graphs)
}

pub fn write_jsonl<W: Write>(mut out: W, graphs: &[NamedGraph]) -> std::io::Result<()> {
    for g in graphs {
        let record = JsonGraph {
            id: g.id.clone(),
            n: g.graph.n(),
            edges: g.graph.edges().map(|(u, v)| [u, v]).collect(),
        };
        serde_json::to_writer(&mut out, &record)?;
        writeln!(out)?;
    }
    Ok(())
}

fn is_jsonl(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl") | Some("json") | Some("ndjson")
    )
}

/// Reads a collection: a directory of edge lists (sorted by file name,
/// hidden files and `manifest.json` skipped), a JSON-lines file, or a single
/// edge list.
pub fn read_collection(path: &Path) -> Result<Vec<NamedGraph>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| FormatError::io(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .filter(|p| {
                let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
                !name.starts_with('.') && name != crate::manifest::MANIFEST_FILE
            })
            .collect();
        files.sort();
        let mut graphs = Vec::new();
        for file in files {
            if is_jsonl(&file) {
                graphs.extend(read_jsonl(&file)?);
            } else {
                graphs.push(read_edge_list(&file)?);
            }
        }
        Ok(graphs)
    } else if is_jsonl(path) {
        read_jsonl(path)
    } else if path.exists() {
        Ok(vec![read_edge_list(path)?])
    } else {
        Err(FormatError::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)))
    }
}

/// One census row.
#[derive(Clone, Debug, PartialEq)]
pub struct CensusRow {
    pub id: String,
    pub n: usize,
    pub density: f64,
    pub frequencies: FrequencyVector,
}

/// Column name of a class, `s_` followed by its canonical code bits.
pub fn class_column(catalog: &Catalog, class: usize) -> String {
    format!("s_{}", catalog.classes()[class].code)
}

pub fn census_header(catalog: &Catalog) -> Vec<String> {
    let mut header = vec!["id".to_string(), "n".to_string(), "density".to_string()];
    header.extend((0..catalog.len()).map(|c| class_column(catalog, c)));
    header
}

pub fn write_census<W: Write>(out: W, catalog: &Catalog, rows: &[CensusRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(census_header(catalog))?;
    for row in rows {
        let mut record = vec![row.id.clone(), row.n.to_string(), row.density.to_string()];
        record.extend(row.frequencies.values.iter().map(|x| x.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a census table written for the `k`-node catalog.
pub fn read_census(path: &Path, k: usize) -> Result<Vec<CensusRow>> {
    let catalog = Catalog::shared(k).map_err(|e| FormatError::Invalid(e.to_string()))?;
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => FormatError::io(path, io),
        other => FormatError::parse(path, 1, format!("{other:?}")),
    })?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| FormatError::parse(path, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != census_header(catalog) {
        return Err(FormatError::parse(
            path,
            1,
            format!("header does not match the {k}-node catalog: {}", header.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| FormatError::parse(path, line, e.to_string()))?;
        let num = |j: usize| -> Result<f64> {
            record[j]
                .parse::<f64>()
                .map_err(|_| FormatError::parse(path, line, format!("'{}' is not a number", &record[j])))
        };
        let n = record[1]
            .parse::<usize>()
            .map_err(|_| FormatError::parse(path, line, format!("'{}' is not a node count", &record[1])))?;
        let values = (3..record.len()).map(num).collect::<Result<Vec<f64>>>()?;
        rows.push(CensusRow {
            id: record[0].to_string(),
            n,
            density: num(2)?,
            frequencies: FrequencyVector {
                k,
                values,
                mode: CensusMode::Exact,
                sample_count: 0,
            },
        });
    }
    Ok(rows)
}
