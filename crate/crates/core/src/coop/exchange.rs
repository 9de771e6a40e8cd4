use ndarray::{Array2, ArrayView1};

use crate::graph::VertexId;
use crate::partition::PartitionMap;
use crate::{Error, Result};

/// Which way an all-to-all moves rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Requester layout (`S̃_p`) to owner receive buffers. Used for vertex ids
    /// during sampling and for gradients during the backward pass.
    ToOwners,
    /// Owner receive buffers back to requester layout. Used for embeddings
    /// during feature loading and the forward pass.
    ToRequesters,
}

/// Cached communication pattern of one layer boundary.
///
/// PE `p` holds a list `S̃_p` of vertices it sampled; each entry belongs to
/// some owner `q`. Owner `q` receives the entries addressed to it, from PE 0
/// first, into a receive buffer, and deduplicates that buffer (keeping first
/// arrivals) into its owned list `S_q`. The receive buffers and the requester
/// lists are related by a permutation, which is what [`all_to_all`] applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExchangeRecord {
    layer: usize,
    send_counts: Vec<Vec<usize>>,
    /// Per owner: receive slot -> (requesting PE, index in its `S̃`).
    recv_from: Vec<Vec<(u32, u32)>>,
    /// Per requester: index in `S̃` -> (owner, receive slot).
    sent_to: Vec<Vec<(u32, u32)>>,
    /// Per owner: receive slot -> row of the owned list.
    slot_to_owned: Vec<Vec<u32>>,
    owned: Vec<Vec<VertexId>>,
}

impl ExchangeRecord {
    pub fn build(layer: usize, pm: &PartitionMap, requested: &[&[VertexId]]) -> Result<Self> {
        let parts = pm.num_parts();
        if requested.len() != parts {
            return Err(Error::contract(format!(
                "{} requester lists for {parts} PEs",
                requested.len()
            )));
        }
        let mut send_counts = vec![vec![0usize; parts]; parts];
        let mut recv_from: Vec<Vec<(u32, u32)>> = vec![Vec::new(); parts];
        let mut sent_to: Vec<Vec<(u32, u32)>> = requested
            .iter()
            .map(|r| Vec::with_capacity(r.len()))
            .collect();
        for (p, list) in requested.iter().enumerate() {
            for (i, &v) in list.iter().enumerate() {
                let q = pm.owner(v);
                send_counts[p][q] += 1;
                sent_to[p].push((q as u32, recv_from[q].len() as u32));
                recv_from[q].push((p as u32, i as u32));
            }
        }
        let mut slot_to_owned = Vec::with_capacity(parts);
        let mut owned = Vec::with_capacity(parts);
        for slots in &recv_from {
            let mut index: rustc_hash::FxHashMap<VertexId, u32> = Default::default();
            let mut list = Vec::new();
            let map = slots
                .iter()
                .map(|&(p, i)| {
                    let v = requested[p as usize][i as usize];
                    *index.entry(v).or_insert_with(|| {
                        list.push(v);
                        (list.len() - 1) as u32
                    })
                })
                .collect();
            slot_to_owned.push(map);
            owned.push(list);
        }
        Ok(ExchangeRecord {
            layer,
            send_counts,
            recv_from,
            sent_to,
            slot_to_owned,
            owned,
        })
    }

    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn num_parts(&self) -> usize {
        self.send_counts.len()
    }

    /// `send_counts()[p][q]`: entries of `S̃_p` owned by `q`. The diagonal
    /// counts local entries that never cross PEs.
    pub fn send_counts(&self) -> &[Vec<usize>] {
        &self.send_counts
    }

    /// Entries PE `p` sends to other PEs.
    pub fn communicated(&self, p: usize) -> usize {
        self.send_counts[p]
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != p)
            .map(|(_, c)| c)
            .sum()
    }

    /// Deduplicated vertices each owner ends up with (`S_q`).
    pub fn owned(&self) -> &[Vec<VertexId>] {
        &self.owned
    }

    pub fn requester_len(&self, p: usize) -> usize {
        self.sent_to[p].len()
    }

    pub fn recv_len(&self, q: usize) -> usize {
        self.recv_from[q].len()
    }

    fn expected_rows(&self, dir: Direction) -> Vec<usize> {
        (0..self.num_parts())
            .map(|p| match dir {
                Direction::ToOwners => self.requester_len(p),
                Direction::ToRequesters => self.recv_len(p),
            })
            .collect()
    }

    /// Generic all-to-all over per-row payloads.
    pub fn route<T: Clone>(&self, payload: &[Vec<T>], dir: Direction) -> Result<Vec<Vec<T>>> {
        check_rows(&self.expected_rows(dir), payload.iter().map(Vec::len))?;
        let table = match dir {
            Direction::ToOwners => &self.recv_from,
            Direction::ToRequesters => &self.sent_to,
        };
        Ok(table
            .iter()
            .map(|slots| {
                slots
                    .iter()
                    .map(|&(pe, i)| payload[pe as usize][i as usize].clone())
                    .collect()
            })
            .collect())
    }

    /// Owner rows (aligned with [`ExchangeRecord::owned`]) delivered to every
    /// requester in its `S̃` layout.
    pub fn gather(&self, owned_rows: &[Array2<f64>]) -> Result<Vec<Array2<f64>>> {
        check_rows(
            &self.owned.iter().map(Vec::len).collect::<Vec<_>>(),
            owned_rows.iter().map(|m| m.nrows()),
        )?;
        let recv: Vec<Array2<f64>> = owned_rows
            .iter()
            .zip(&self.slot_to_owned)
            .map(|(rows, map)| select_rows(rows, map.iter().map(|&r| r as usize)))
            .collect();
        all_to_all(self, &recv, Direction::ToRequesters)
    }

    /// Requester rows summed into owner rows; the adjoint of
    /// [`ExchangeRecord::gather`].
    pub fn scatter_add(&self, requester_rows: &[Array2<f64>]) -> Result<Vec<Array2<f64>>> {
        let recv = all_to_all(self, requester_rows, Direction::ToOwners)?;
        Ok(recv
            .iter()
            .zip(&self.slot_to_owned)
            .zip(&self.owned)
            .map(|((rows, map), owned)| {
                let mut out = Array2::zeros((owned.len(), rows.ncols()));
                for (slot, &r) in map.iter().enumerate() {
                    let mut dst = out.row_mut(r as usize);
                    dst += &rows.row(slot);
                }
                out
            })
            .collect())
    }
}

fn check_rows(expected: &[usize], actual: impl ExactSizeIterator<Item = usize>) -> Result<()> {
    if actual.len() != expected.len() {
        return Err(Error::contract(format!(
            "payload for {} PEs, expected {}",
            actual.len(),
            expected.len()
        )));
    }
    for (p, (want, got)) in expected.iter().zip(actual).enumerate() {
        if *want != got {
            return Err(Error::contract(format!(
                "PE {p}: {got} rows, expected {want}"
            )));
        }
    }
    Ok(())
}

fn select_rows(rows: &Array2<f64>, order: impl ExactSizeIterator<Item = usize>) -> Array2<f64> {
    let mut out = Array2::zeros((order.len(), rows.ncols()));
    for (i, r) in order.enumerate() {
        out.row_mut(i).assign(&rows.row(r));
    }
    out
}

/// Applies the cached permutation of `record` to per-PE matrices.
/// `ToRequesters` after `ToOwners` (or the reverse) returns the input exactly.
pub fn all_to_all(
    record: &ExchangeRecord,
    payload: &[Array2<f64>],
    dir: Direction,
) -> Result<Vec<Array2<f64>>> {
    check_rows(
        &record.expected_rows(dir),
        payload.iter().map(|m| m.nrows()),
    )?;
    let ncols = payload.first().map_or(0, |m| m.ncols());
    if payload.iter().any(|m| m.ncols() != ncols) {
        return Err(Error::contract("payload widths differ across PEs"));
    }
    let table = match dir {
        Direction::ToOwners => &record.recv_from,
        Direction::ToRequesters => &record.sent_to,
    };
    Ok(table
        .iter()
        .map(|slots| {
            let mut out = Array2::zeros((slots.len(), ncols));
            for (row, &(pe, i)) in slots.iter().enumerate() {
                let src: ArrayView1<f64> = payload[pe as usize].row(i as usize);
                out.row_mut(row).assign(&src);
            }
            out
        })
        .collect())
}
