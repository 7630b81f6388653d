use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::block::{verify_chain_lines, Block, ChainVerdict};
use crate::{LedgerError, Result};

/// Append-only block file: one canonical JSON block per line.
#[derive(Debug)]
pub struct BlockStore {
    path: PathBuf,
    file: File,
}

fn io(e: std::io::Error) -> LedgerError {
    LedgerError::Store(e.to_string())
}

impl BlockStore {
    /// Open or create `path`, returning the blocks already stored. The
    /// stored chain must verify from genesis.
    pub fn open(path: &Path) -> Result<(BlockStore, Vec<Block>)> {
        let file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(path)
            .map_err(io)?;
        let lines: Vec<Vec<u8>> = BufReader::new(&file)
            .split(b'\n')
            .collect::<std::io::Result<_>>()
            .map_err(io)?;
        if let ChainVerdict::Invalid { height } = verify_chain_lines(&lines) {
            return Err(LedgerError::InvalidBlock { height });
        }
        let blocks = lines
            .iter()
            .map(|l| Block::from_line(l).expect("verified above"))
            .collect();
        Ok((
            BlockStore {
                path: path.to_owned(),
                file,
            },
            blocks,
        ))
    }

    pub fn append(&mut self, block: &Block) -> Result<()> {
        let mut line = block.to_line();
        line.push(b'\n');
        self.file.write_all(&line).map_err(io)?;
        self.file.sync_data().map_err(io)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
