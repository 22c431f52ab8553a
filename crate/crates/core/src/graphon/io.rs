//! Edge-list files with a JSON sidecar for latent positions and sparsity.
//!
//! Edge list: the node count on the first line, then one `i j` line per
//! edge, 0-based with `i < j`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sample::SampledNetwork;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSidecar {
    pub n: usize,
    pub rho: f64,
    pub seed: u64,
    pub xi: Vec<f64>,
}

pub fn write_edge_list<W: Write>(network: &SampledNetwork, mut w: W) -> Result<()> {
    writeln!(w, "{}", network.n)?;
    for (i, j) in network.edges() {
        writeln!(w, "{i} {j}")?;
    }
    Ok(())
}

pub fn read_edge_list<R: BufRead>(r: R) -> Result<(usize, Vec<(usize, usize)>)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty edge list".into()))??;
    let n: usize = header
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad node count {header:?}")))?;
    let mut edges = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let mut next = || -> Result<usize> {
            parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("line {}: expected `i j`", lineno + 2)))
        };
        let (i, j) = (next()?, next()?);
        if i >= j || j >= n {
            return Err(Error::Parse(format!("line {}: need 0 <= i < j < n", lineno + 2)));
        }
        edges.push((i, j));
    }
    Ok((n, edges))
}

/// Writes `<stem>.edges` and `<stem>.json`.
pub fn save_network(network: &SampledNetwork, stem: &Path) -> Result<()> {
    let edges = File::create(stem.with_extension("edges"))?;
    write_edge_list(network, BufWriter::new(edges))?;
    let sidecar = NetworkSidecar {
        n: network.n,
        rho: network.rho,
        seed: network.seed,
        xi: network.xi.clone(),
    };
    let json = File::create(stem.with_extension("json"))?;
    serde_json::to_writer_pretty(BufWriter::new(json), &sidecar)?;
    Ok(())
}

pub fn load_network(stem: &Path) -> Result<SampledNetwork> {
    let (n, edges) = read_edge_list(BufReader::new(File::open(stem.with_extension("edges"))?))?;
    let sidecar: NetworkSidecar = serde_json::from_reader(BufReader::new(File::open(stem.with_extension("json"))?))?;
    if sidecar.n != n {
        return Err(Error::Parse(format!("sidecar says n = {}, edge list says {n}", sidecar.n)));
    }
    SampledNetwork::from_edges(n, &edges, sidecar.xi, sidecar.rho, sidecar.seed)
}
