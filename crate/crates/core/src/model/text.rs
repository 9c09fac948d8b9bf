//! Line-oriented text formats for instances and partitions.
//!
//! An instance file is a header `n k K p q seed kind`, a line of cluster
//! sizes, a line of supercluster counts, then `n` lines holding row `u` of
//! the upper triangle (columns `u..n`). Vertex labels are not part of the
//! file; when the sampler permuted vertices, the truth is kept in a separate
//! partition file and attached with [`attach_truth`].
//!
//! A partition file has one line per cluster with its sorted vertex ids.

use std::fmt::Write as _;

use super::{build_partition, Instance, InstanceKind, ModelError};
use crate::spectral::SymMatrix;

pub fn write_instance(inst: &Instance) -> String {
    let n = inst.n();
    let spec = &inst.truth;
    let mut out = String::with_capacity(n * (n + 1));
    let _ = writeln!(
        out,
        "{} {} {} {} {} {} {}",
        n,
        spec.k(),
        spec.supercluster_total(),
        inst.p,
        inst.q,
        inst.seed,
        inst.kind.as_str()
    );
    out.push_str(&join(spec.sizes()));
    out.push('\n');
    out.push_str(&join(spec.supercluster_counts()));
    out.push('\n');
    for u in 0..n {
        for v in u..n {
            if v > u {
                out.push(' ');
            }
            let _ = write!(out, "{}", inst.matrix.get(u, v));
        }
        out.push('\n');
    }
    out
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn parse_err(line: usize, message: impl Into<String>) -> ModelError {
    ModelError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_list<T: std::str::FromStr>(line_no: usize, line: &str) -> Result<Vec<T>, ModelError> {
    line.split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(line_no, format!("bad value {t:?}"))))
        .collect()
}

/// Reads an instance; vertex labels follow the canonical layout.
pub fn read_instance(text: &str) -> Result<Instance, ModelError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| parse_err(0, format!("missing {what}")))
    };
    let (ln, header) = next("header")?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 7 {
        return Err(parse_err(ln, "header must be `n k K p q seed kind`"));
    }
    let num = |i: usize| -> Result<f64, ModelError> {
        fields[i]
            .parse()
            .map_err(|_| parse_err(ln, format!("bad header field {:?}", fields[i])))
    };
    let int = |i: usize| -> Result<u64, ModelError> {
        fields[i]
            .parse()
            .map_err(|_| parse_err(ln, format!("bad header field {:?}", fields[i])))
    };
    let n = int(0)? as usize;
    let k = int(1)? as usize;
    let big_k = int(2)? as usize;
    let (p, q) = (num(3)?, num(4)?);
    let seed = int(5)?;
    let kind = match fields[6] {
        "graph" => InstanceKind::Graph,
        "general" => InstanceKind::General,
        other => return Err(parse_err(ln, format!("unknown kind {other:?}"))),
    };

    let (ln, line) = next("cluster sizes")?;
    let sizes: Vec<usize> = parse_list(ln, line)?;
    if sizes.len() != k {
        return Err(parse_err(ln, format!("expected {k} sizes, found {}", sizes.len())));
    }
    let (ln, line) = next("supercluster counts")?;
    let counts: Vec<usize> = parse_list(ln, line)?;
    if counts.len() != big_k {
        return Err(parse_err(ln, format!("expected {big_k} counts, found {}", counts.len())));
    }
    let truth = build_partition(n, &sizes, &counts)?;

    let mut matrix = SymMatrix::zeros(n);
    for u in 0..n {
        let (ln, line) = next("matrix row")?;
        let row: Vec<f64> = parse_list(ln, line)?;
        if row.len() != n - u {
            return Err(parse_err(ln, format!("row {u} needs {} entries, found {}", n - u, row.len())));
        }
        for (j, x) in row.into_iter().enumerate() {
            matrix.set(u, u + j, x);
        }
    }
    if kind == InstanceKind::Graph {
        let ok = (0..n).all(|u| matrix.get(u, u) == 0.0)
            && matrix.packed().iter().all(|&x| x == 0.0 || x == 1.0);
        if !ok {
            return Err(parse_err(0, "graph instances need 0/1 entries and a zero diagonal"));
        }
    }
    Ok(Instance {
        matrix,
        labels: truth.labels(),
        truth,
        seed,
        kind,
        p,
        q,
    })
}

pub fn write_partition(clusters: &[Vec<usize>]) -> String {
    let mut out = String::new();
    for c in clusters {
        let mut c = c.clone();
        c.sort_unstable();
        out.push_str(&join(&c));
        out.push('\n');
    }
    out
}

/// Reads a partition; blank lines are skipped.
pub fn read_partition(text: &str) -> Result<Vec<Vec<usize>>, ModelError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_list(i + 1, l))
        .collect()
}

/// Replaces an instance's labels with a truth partition whose `i`-th line is
/// cluster `i`.
pub fn attach_truth(inst: &mut Instance, clusters: &[Vec<usize>]) -> Result<(), ModelError> {
    let n = inst.n();
    if clusters.len() != inst.truth.k() {
        return Err(parse_err(0, "truth partition has the wrong number of clusters"));
    }
    let mut labels = vec![usize::MAX; n];
    for (i, c) in clusters.iter().enumerate() {
        if c.len() != inst.truth.sizes()[i] {
            return Err(parse_err(i + 1, "truth cluster size disagrees with the instance header"));
        }
        for &u in c {
            if u >= n || labels[u] != usize::MAX {
                return Err(parse_err(i + 1, format!("vertex {u} out of range or repeated")));
            }
            labels[u] = i;
        }
    }
    inst.labels = labels;
    Ok(())
}
