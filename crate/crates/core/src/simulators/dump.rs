use std::io::{self, Read, Write};

/// Per-replicate count vectors, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CountTable {
    pub columns: usize,
    pub data: Vec<u64>,
}

impl CountTable {
    pub fn new(columns: usize) -> Self {
        Self { columns, data: Vec::new() }
    }

    pub fn push_row(&mut self, row: &[u64]) {
        assert_eq!(row.len(), self.columns, "row width");
        self.data.extend_from_slice(row);
    }

    pub fn rows(&self) -> usize {
        if self.columns == 0 {
            0
        } else {
            self.data.len() / self.columns
        }
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.columns..(i + 1) * self.columns]
    }

    pub fn append(&mut self, other: &CountTable) {
        assert_eq!(self.columns, other.columns, "row width");
        self.data.extend_from_slice(&other.data);
    }
}

/// Writes the rows as flat little-endian `u64`s with no header.
pub fn write_count_rows<W: Write>(table: &CountTable, mut w: W) -> io::Result<()> {
    let mut buf = Vec::with_capacity(table.data.len() * 8);
    for v in &table.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()
}

pub fn read_count_rows<R: Read>(mut r: R, columns: usize) -> io::Result<CountTable> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let width = columns * 8;
    if columns == 0 || bytes.len() % width != 0 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("{} bytes is not a whole number of {columns}-column rows", bytes.len()),
        ));
    }
    let data = bytes.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(CountTable { columns, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut t = CountTable::new(3);
        t.push_row(&[1, 2, 3]);
        t.push_row(&[u64::MAX, 0, 7]);
        let mut buf = Vec::new();
        write_count_rows(&t, &mut buf).unwrap();
        assert_eq!(buf.len(), 48);
        assert_eq!(&buf[..8], &1u64.to_le_bytes());
        let back = read_count_rows(&buf[..], 3).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.row(1), &[u64::MAX, 0, 7]);
        assert!(read_count_rows(&buf[..40], 3).is_err());
    }
}
