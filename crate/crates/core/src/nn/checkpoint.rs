//! Parameter checkpoints: a text header naming each array and its shape,
//! followed by the concatenated little-endian f64 payload.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC_LINE: &str = "minn-checkpoint v1";
const END_LINE: &str = "end";

#[derive(Clone, Debug, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NamedArray {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            shape,
            data,
        }
    }
}

pub fn write_checkpoint<W: Write>(mut w: W, arrays: &[NamedArray]) -> Result<()> {
    writeln!(w, "{MAGIC_LINE}")?;
    for a in arrays {
        if a.name.is_empty() || a.name.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("array name {:?} must be a non-empty token", a.name)));
        }
        let expected: usize = a.shape.iter().product();
        if expected != a.data.len() {
            return Err(Error::DimensionMismatch {
                context: "write_checkpoint",
                expected: format!("{expected} values for shape {:?}", a.shape),
                found: a.data.len().to_string(),
            });
        }
        let dims: Vec<String> = a.shape.iter().map(usize::to_string).collect();
        writeln!(w, "{} {}", a.name, dims.join("x"))?;
    }
    writeln!(w, "{END_LINE}")?;
    for a in arrays {
        for v in &a.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(mut r: R) -> Result<Vec<NamedArray>> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != MAGIC_LINE {
        return Err(Error::Format(format!("not a checkpoint header: {:?}", line.trim_end())));
    }
    let mut headers = Vec::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Format("checkpoint header is not terminated".into()));
        }
        let l = line.trim_end();
        if l == END_LINE {
            break;
        }
        let (name, dims) = l
            .split_once(' ')
            .ok_or_else(|| Error::Format(format!("bad header line {l:?}")))?;
        let shape = if dims.is_empty() {
            Vec::new()
        } else {
            dims.split('x')
                .map(|d| d.parse::<usize>().map_err(|_| Error::Format(format!("bad shape {dims:?}"))))
                .collect::<Result<Vec<_>>>()?
        };
        headers.push((name.to_string(), shape));
    }
    let mut out = Vec::with_capacity(headers.len());
    let mut buf = [0u8; 8];
    for (name, shape) in headers {
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut buf).map_err(|_| Error::Format(format!("payload truncated in array {name}")))?;
            data.push(f64::from_le_bytes(buf));
        }
        out.push(NamedArray { name, shape, data });
    }
    Ok(out)
}

pub fn save_checkpoint(path: impl AsRef<Path>, arrays: &[NamedArray]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_checkpoint(&mut w, arrays)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Vec<NamedArray>> {
    let f = std::fs::File::open(path)?;
    read_checkpoint(std::io::BufReader::new(f))
}
