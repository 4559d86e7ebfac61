use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dag::Dag;
use crate::error::{Error, Result};

/// Graph plus node arities as read from a network file.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkFile {
    pub dag: Dag,
    pub arities: Vec<usize>,
}

/// Header line `m`, then `m` arity lines, then one `i -> j` per edge with
/// one-based node numbers. Blank lines and `#` comments are ignored.
pub fn format_network(dag: &Dag, arities: &[usize]) -> String {
    let mut s = format!("{}\n", dag.nodes());
    for r in arities {
        let _ = writeln!(s, "{r}");
    }
    for (i, j) in dag.edges() {
        let _ = writeln!(s, "{} -> {}", i + 1, j + 1);
    }
    s
}

pub fn parse_network(text: &str, origin: &str) -> Result<NetworkFile> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (n0, head) = lines.next().ok_or_else(|| err(1, "empty network file".into()))?;
    let m: usize = head
        .parse()
        .map_err(|_| err(n0, format!("{head:?} is not a node count")))?;
    let mut arities = Vec::with_capacity(m);
    for _ in 0..m {
        let (n, l) = lines
            .next()
            .ok_or_else(|| err(n0, format!("expected {m} arity lines")))?;
        let r: usize = l.parse().map_err(|_| err(n, format!("{l:?} is not an arity")))?;
        if r < 1 {
            return Err(err(n, "arity must be at least 1".into()));
        }
        arities.push(r);
    }
    let mut edges = Vec::new();
    for (n, l) in lines {
        let (a, b) = l
            .split_once("->")
            .ok_or_else(|| err(n, format!("{l:?} is not an edge `i -> j`")))?;
        let node = |s: &str| -> Result<usize> {
            let v: usize = s
                .trim()
                .parse()
                .map_err(|_| err(n, format!("{:?} is not a node number", s.trim())))?;
            if v < 1 || v > m {
                return Err(err(n, format!("node {v} outside 1..={m}")));
            }
            Ok(v - 1)
        };
        edges.push((node(a)?, node(b)?));
    }
    let dag = Dag::from_edges(m, &edges, usize::MAX).map_err(|e| err(0, e.to_string()))?;
    Ok(NetworkFile { dag, arities })
}

pub fn save_network(path: &Path, dag: &Dag, arities: &[usize]) -> Result<()> {
    fs::write(path, format_network(dag, arities))?;
    Ok(())
}

pub fn load_network(path: &Path) -> Result<NetworkFile> {
    parse_network(&fs::read_to_string(path)?, &path.display().to_string())
}

/// Row-major `m x m` matrix as tab-separated lines.
pub fn format_matrix_tsv(values: &[f64], m: usize) -> String {
    let mut s = String::new();
    for row in values.chunks(m) {
        let cells: Vec<String> = row.iter().map(|v| crate::json::format_real(*v)).collect();
        s.push_str(&cells.join("\t"));
        s.push('\n');
    }
    s
}

pub fn parse_matrix_tsv(text: &str, origin: &str) -> Result<(Vec<f64>, usize)> {
    let mut values = Vec::new();
    let mut width = None;
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row: Vec<f64> = line
            .split('\t')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                path: origin.into(),
                line: n + 1,
                msg: e.to_string(),
            })?;
        if *width.get_or_insert(row.len()) != row.len() {
            return Err(Error::Parse {
                path: origin.into(),
                line: n + 1,
                msg: "ragged matrix row".into(),
            });
        }
        values.extend(row);
    }
    let m = width.unwrap_or(0);
    if values.len() != m * m {
        return Err(Error::Data(format!("{origin}: matrix is not square")));
    }
    Ok((values, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::example_network;

    #[test]
    fn network_round_trip() {
        let g = example_network();
        let text = format_network(&g, &[2; 6]);
        assert!(text.starts_with("6\n2\n"));
        assert!(text.contains("1 -> 4\n"));
        let back = parse_network(&text, "mem").unwrap();
        assert_eq!(back.dag, g);
        assert_eq!(back.arities, vec![2; 6]);
    }

    #[test]
    fn comments_and_bad_edges() {
        let ok = parse_network("# two nodes\n2\n2\n3\n\n2 -> 1 # edge\n", "mem").unwrap();
        assert!(ok.dag.has_edge(1, 0));
        assert!(matches!(
            parse_network("2\n2\n2\n1 -> 3\n", "mem"),
            Err(Error::Parse { line: 4, .. })
        ));
        assert!(parse_network("2\n2\n2\n1 -> 2\n2 -> 1\n", "mem").is_err());
    }

    #[test]
    fn matrix_round_trip() {
        let a = vec![0.0, 0.25, 1.0, 1e-17];
        let (b, m) = parse_matrix_tsv(&format_matrix_tsv(&a, 2), "mem").unwrap();
        assert_eq!(m, 2);
        assert_eq!(a, b);
    }
}
