//! Edge-list text and binary CSR file formats.
//!
//! Binary layout (little endian):
//!
//! ```text
//! "CBCS" | u32 version = 1 | u64 num_vertices | u64 num_edges
//! u64 indptr[num_vertices + 1] | u32 indices[num_edges]
//! u8 flags (bit 0: weights present) | f32 weights[num_edges] if present
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Graph, VertexId};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"CBCS";
const VERSION: u32 = 1;
const FLAG_WEIGHTS: u8 = 1;

/// Parses whitespace-separated `src dst [weight]` lines. Lines starting with
/// `#` and blank lines are skipped. Without an explicit vertex count the graph
/// has `1 + max id` vertices.
pub fn parse_edge_list<R: BufRead>(
    reader: R,
    num_vertices: Option<usize>,
    path: &Path,
) -> Result<Graph> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut edges: Vec<(VertexId, VertexId, f32)> = Vec::new();
    let mut weighted: Option<bool> = None;
    let mut max_id: Option<VertexId> = None;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(parse_err(
                lineno,
                format!("expected `src dst [weight]`, found {} fields", fields.len()),
            ));
        }
        let id = |s: &str| {
            s.parse::<VertexId>()
                .map_err(|_| parse_err(lineno, format!("invalid vertex id `{s}`")))
        };
        let (t, s) = (id(fields[0])?, id(fields[1])?);
        let has_weight = fields.len() == 3;
        if *weighted.get_or_insert(has_weight) != has_weight {
            return Err(parse_err(
                lineno,
                "mixed weighted and unweighted lines".into(),
            ));
        }
        let w = if has_weight {
            fields[2]
                .parse::<f32>()
                .map_err(|_| parse_err(lineno, format!("invalid weight `{}`", fields[2])))?
        } else {
            1.0
        };
        max_id = max_id.max(Some(t.max(s)));
        edges.push((t, s, w));
    }
    let n = num_vertices.unwrap_or_else(|| max_id.map_or(0, |m| m as usize + 1));
    if weighted == Some(true) {
        Graph::from_weighted_edges(n, &edges)
    } else {
        let plain: Vec<_> = edges.iter().map(|&(t, s, _)| (t, s)).collect();
        Graph::from_edges(n, &plain)
    }
}

pub fn load_edge_list(path: impl AsRef<Path>, num_vertices: Option<usize>) -> Result<Graph> {
    let path = path.as_ref();
    let file = BufReader::new(File::open(path)?);
    parse_edge_list(file, num_vertices, path)
}

pub fn save_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for s in 0..g.num_vertices() as VertexId {
        let ws = g.in_weights(s);
        for (i, &t) in g.in_neighbors(s).iter().enumerate() {
            match ws {
                Some(w) => writeln!(out, "{t} {s} {}", w[i])?,
                None => writeln!(out, "{t} {s}")?,
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn save_csr(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_csr(g, &mut out)?;
    out.flush()?;
    Ok(())
}

fn write_csr<W: Write>(g: &Graph, out: &mut W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(g.num_vertices() as u64).to_le_bytes())?;
    out.write_all(&(g.num_edges() as u64).to_le_bytes())?;
    for &p in g.indptr() {
        out.write_all(&(p as u64).to_le_bytes())?;
    }
    for &t in g.indices() {
        out.write_all(&t.to_le_bytes())?;
    }
    match g.weights() {
        Some(ws) => {
            out.write_all(&[FLAG_WEIGHTS])?;
            for &w in ws {
                out.write_all(&w.to_le_bytes())?;
            }
        }
        None => out.write_all(&[0])?,
    }
    Ok(())
}

pub fn load_csr(path: impl AsRef<Path>) -> Result<Graph> {
    let mut input = BufReader::new(File::open(path)?);
    read_csr(&mut input)
}

fn read_exact<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated file".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

fn read_csr<R: Read>(r: &mut R) -> Result<Graph> {
    if &read_exact::<4, _>(r)? != MAGIC {
        return Err(Error::Format("magic header mismatch".into()));
    }
    let version = u32::from_le_bytes(read_exact(r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(read_exact(r)?) as usize;
    let m = u64::from_le_bytes(read_exact(r)?) as usize;
    let indptr = (0..=n)
        .map(|_| read_exact(r).map(|b| u64::from_le_bytes(b) as usize))
        .collect::<Result<Vec<_>>>()?;
    let indices = (0..m)
        .map(|_| read_exact(r).map(u32::from_le_bytes))
        .collect::<Result<Vec<_>>>()?;
    let [flags] = read_exact::<1, _>(r)?;
    let weights = if flags & FLAG_WEIGHTS != 0 {
        Some(
            (0..m)
                .map(|_| read_exact(r).map(f32::from_le_bytes))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Graph::from_csr(indptr, indices, weights)
}

/// Loads a binary CSR file if it starts with the magic header, otherwise
/// parses it as an edge list.
pub fn load_graph(path: impl AsRef<Path>, num_vertices: Option<usize>) -> Result<Graph> {
    let path = path.as_ref();
    let mut head = [0u8; 4];
    let is_binary = File::open(path)?.read(&mut head)? == 4 && &head == MAGIC;
    if is_binary {
        load_csr(path)
    } else {
        load_edge_list(path, num_vertices)
    }
}
