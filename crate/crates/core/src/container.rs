//! Binary containers for exhaustive media and percolation graphs.
//!
//! Layout: 8-byte magic, little-endian `u32` header length, the JSON header,
//! then the payload in canonical edge order (base ascending, then axis
//! ascending). Media pack four 2-bit orientation codes per byte
//! (tie = 0, up = 1, down = 2), lowest bits first; percolation packs eight
//! open flags per byte, lowest bit first.

use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::hypercube::{canonical_edges, edge_count, edge_slot, BitSet};
use crate::medium::{Medium, MediumHeader, FORMAT_VERSION};
use crate::percolation::PercolationGraph;

pub const MEDIUM_MAGIC: &[u8; 8] = b"NWMEDIUM";
pub const PERCOLATION_MAGIC: &[u8; 8] = b"NWPERC\0\0";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercolationHeader {
    pub n: u32,
    pub beta: f64,
    pub format_version: u32,
}

fn write_header<W: Write, H: Serialize>(w: &mut W, magic: &[u8; 8], header: &H) -> Result<()> {
    let json = serde_json::to_vec(header)?;
    w.write_all(magic)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    Ok(())
}

fn read_header<R: Read, H: for<'de> Deserialize<'de>>(r: &mut R, magic: &[u8; 8]) -> Result<H> {
    let mut got = [0u8; 8];
    r.read_exact(&mut got)?;
    if &got != magic {
        return Err(Error::Format(format!("bad magic {:?}", String::from_utf8_lossy(&got))));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json)?;
    Ok(serde_json::from_slice(&json)?)
}

pub fn write_medium<W: Write>(medium: &Medium, w: &mut W) -> Result<()> {
    let codes = medium.codes_in_file_order()?;
    write_header(w, MEDIUM_MAGIC, &medium.header())?;
    let packed: Vec<u8> = codes
        .chunks(4)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &code)| acc | code << (2 * i)))
        .collect();
    w.write_all(&packed)?;
    Ok(())
}

pub fn read_medium<R: Read>(r: &mut R) -> Result<Medium> {
    let header: MediumHeader = read_header(r, MEDIUM_MAGIC)?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {}", header.format_version)));
    }
    if !(2..=crate::medium::EXHAUSTIVE_MAX_PLAYERS).contains(&header.n_players) {
        return Err(Error::Format(format!("table dimension {} unsupported", header.n_players)));
    }
    let count = edge_count(header.n_players) as usize;
    let mut packed = vec![0u8; count.div_ceil(4)];
    r.read_exact(&mut packed)?;
    let codes = (0..count).map(|i| packed[i / 4] >> (2 * (i % 4)) & 0b11);
    Medium::from_codes(&header, codes)
}

pub fn write_percolation<W: Write>(perc: &PercolationGraph, w: &mut W) -> Result<()> {
    let n = perc.n();
    let header = PercolationHeader { n, beta: perc.beta(), format_version: FORMAT_VERSION };
    write_header(w, PERCOLATION_MAGIC, &header)?;
    let mut packed = vec![0u8; (edge_count(n) as usize).div_ceil(8)];
    for (i, e) in canonical_edges(n).enumerate() {
        if perc.is_open(e) {
            packed[i / 8] |= 1 << (i % 8);
        }
    }
    w.write_all(&packed)?;
    Ok(())
}

pub fn read_percolation<R: Read>(r: &mut R) -> Result<PercolationGraph> {
    let header: PercolationHeader = read_header(r, PERCOLATION_MAGIC)?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {}", header.format_version)));
    }
    let n = header.n;
    if !(2..=crate::medium::EXHAUSTIVE_MAX_PLAYERS).contains(&n) {
        return Err(Error::Format(format!("percolation dimension {n} unsupported")));
    }
    let count = edge_count(n) as usize;
    let mut packed = vec![0u8; count.div_ceil(8)];
    r.read_exact(&mut packed)?;
    let mut open = BitSet::new(count);
    for (i, e) in canonical_edges(n).enumerate() {
        if packed[i / 8] >> (i % 8) & 1 == 1 {
            open.set(edge_slot(n, e) as usize, true);
        }
    }
    Ok(PercolationGraph::from_bits(n, header.beta, open))
}

pub fn save_medium(medium: &Medium, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_medium(medium, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_medium(path: &Path) -> Result<Medium> {
    read_medium(&mut BufReader::new(File::open(path)?))
}

pub fn save_percolation(perc: &PercolationGraph, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_percolation(perc, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_percolation(path: &Path) -> Result<PercolationGraph> {
    read_percolation(&mut BufReader::new(File::open(path)?))
}
