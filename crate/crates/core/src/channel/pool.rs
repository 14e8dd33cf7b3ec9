use std::io::{BufRead, Write};

use num_complex::Complex;

use super::fading::{sample_ricean_state, Arena, RiceanFactors, SvEnvironment};
use super::geometry::{Point3, SystemGeometry};
use super::ChannelState;
use crate::error::{Error, Result};
use crate::numeric::{ComplexMatrix, SeededRng};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolMode {
    /// One realization reused on every draw.
    Static,
    /// A fresh realization per draw.
    Dynamic,
}

/// One channel use: the CSI and the receiver position it was realized at.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelFrame<T> {
    pub state: ChannelState<T>,
    pub rx: Point3,
}

/// How a dynamic pool produces fresh realizations.
#[derive(Clone, Debug, PartialEq)]
pub enum ChannelModel {
    /// Independent Ricean draws on every link around a fixed geometry.
    Ricean {
        geometry: SystemGeometry,
        factors: RiceanFactors,
    },
    /// Frozen scatterers and gains, receiver placed uniformly in `arena`.
    MobileSv { env: SvEnvironment, arena: Arena },
    /// Uniform choice from a recorded list.
    Replay,
}

/// Source of channel realizations for training and evaluation. Owns its
/// random stream so channel sampling never touches the data stream.
#[derive(Clone, Debug)]
pub struct ChannelPool<T> {
    mode: PoolMode,
    model: ChannelModel,
    frames: Vec<ChannelFrame<T>>,
    rng: SeededRng,
}

impl<T: Scalar> ChannelPool<T> {
    pub fn fixed(state: ChannelState<T>, rx: Point3) -> Self {
        Self {
            mode: PoolMode::Static,
            model: ChannelModel::Replay,
            frames: vec![ChannelFrame { state, rx }],
            rng: SeededRng::new(0),
        }
    }

    pub fn dynamic(model: ChannelModel, rng: SeededRng) -> Result<Self> {
        if model == ChannelModel::Replay {
            return Err(Error::InvalidArgument("replay pools are built with ChannelPool::replay".into()));
        }
        Ok(Self {
            mode: PoolMode::Dynamic,
            model,
            frames: Vec::new(),
            rng,
        })
    }

    pub fn replay(frames: Vec<ChannelFrame<T>>, rng: SeededRng) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InvalidArgument("replay pool needs at least one frame".into()));
        }
        Ok(Self {
            mode: if frames.len() == 1 { PoolMode::Static } else { PoolMode::Dynamic },
            model: ChannelModel::Replay,
            frames,
            rng,
        })
    }

    pub fn mode(&self) -> PoolMode {
        self.mode
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    /// Recorded frames: the single static realization or a replay list.
    pub fn frames(&self) -> &[ChannelFrame<T>] {
        &self.frames
    }

    /// Same realizations, independent stream for drawing them.
    pub fn reseeded(&self, rng: SeededRng) -> Self {
        Self {
            rng,
            ..self.clone()
        }
    }

    pub fn draw(&mut self) -> Result<ChannelFrame<T>> {
        match (&self.model, self.mode) {
            (_, PoolMode::Static) => Ok(self.frames[0].clone()),
            (ChannelModel::Replay, PoolMode::Dynamic) => {
                let i = self.rng.index(self.frames.len());
                Ok(self.frames[i].clone())
            }
            (ChannelModel::Ricean { geometry, factors }, PoolMode::Dynamic) => Ok(ChannelFrame {
                state: sample_ricean_state(geometry, *factors, &mut self.rng)?,
                rx: geometry.rx,
            }),
            (ChannelModel::MobileSv { env, arena }, PoolMode::Dynamic) => {
                let rx = arena.sample(&mut self.rng);
                Ok(ChannelFrame {
                    state: env.realize_at(rx)?,
                    rx,
                })
            }
        }
    }

    /// Draws `count` frames into a replay pool.
    pub fn record(&mut self, count: usize, rng: SeededRng) -> Result<Self> {
        let frames = (0..count).map(|_| self.draw()).collect::<Result<Vec<_>>>()?;
        Self::replay(frames, rng)
    }
}

const POOL_MAGIC: &str = "minn-channel-pool v1";

/// Text header (`n_t n_r n_m count`) followed by, per frame, the RX
/// position and the entries of `H_D`, `H_1`, `H_2` as interleaved
/// little-endian `f64` `(re, im)` pairs in row-major order.
pub fn write_pool<T: Scalar, W: Write>(mut w: W, frames: &[ChannelFrame<T>]) -> Result<()> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidArgument("cannot export an empty pool".into()))?;
    let (n_t, n_r, n_m) = (first.state.n_t(), first.state.n_r(), first.state.n_m());
    writeln!(w, "{POOL_MAGIC}")?;
    writeln!(w, "n_t {n_t} n_r {n_r} n_m {n_m} count {}", frames.len())?;
    writeln!(w, "end")?;
    for (i, f) in frames.iter().enumerate() {
        if (f.state.n_t(), f.state.n_r(), f.state.n_m()) != (n_t, n_r, n_m) {
            return Err(Error::Format(format!("frame {i} has different dimensions from frame 0")));
        }
        for v in f.rx {
            w.write_all(&v.to_le_bytes())?;
        }
        for m in [&f.state.direct, &f.state.tx_to_ms, &f.state.ms_to_rx] {
            for z in m.as_slice() {
                w.write_all(&z.re.to_f64_lossy().to_le_bytes())?;
                w.write_all(&z.im.to_f64_lossy().to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_pool<T: Scalar, R: BufRead>(mut r: R) -> Result<Vec<ChannelFrame<T>>> {
    let mut line = String::new();
    let mut next_line = |r: &mut R| -> Result<String> {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Format("channel pool header is truncated".into()));
        }
        Ok(line.trim_end().to_string())
    };
    let magic = next_line(&mut r)?;
    if magic != POOL_MAGIC {
        return Err(Error::Format(format!("not a channel pool file (header {magic:?})")));
    }
    let dims = next_line(&mut r)?;
    let tokens: Vec<&str> = dims.split_whitespace().collect();
    let parse = |key: &str| -> Result<usize> {
        tokens
            .iter()
            .position(|t| *t == key)
            .and_then(|i| tokens.get(i + 1))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Format(format!("channel pool header lacks {key}: {dims:?}")))
    };
    let (n_t, n_r, n_m, count) = (parse("n_t")?, parse("n_r")?, parse("n_m")?, parse("count")?);
    if next_line(&mut r)? != "end" {
        return Err(Error::Format("channel pool header not terminated by `end`".into()));
    }
    let read_f64 = |r: &mut R| -> Result<f64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)
            .map_err(|_| Error::Format("channel pool payload is truncated".into()))?;
        Ok(f64::from_le_bytes(b))
    };
    let mut frames = Vec::with_capacity(count);
    for _ in 0..count {
        let rx = [read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?];
        let mut mats = Vec::with_capacity(3);
        for (rows, cols) in [(n_r, n_t), (n_t, n_m), (n_r, n_m)] {
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                let re = read_f64(&mut r)?;
                let im = read_f64(&mut r)?;
                data.push(Complex::new(T::of(re), T::of(im)));
            }
            mats.push(ComplexMatrix::from_row_major(rows, cols, data)?);
        }
        let h2 = mats.pop().unwrap();
        let h1 = mats.pop().unwrap();
        let hd = mats.pop().unwrap();
        frames.push(ChannelFrame {
            state: ChannelState::new(hd, h1, h2)?,
            rx,
        });
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_saleh_valenzuela;

    fn sv_state(seed: u64) -> ChannelState<f64> {
        sample_saleh_valenzuela(&SystemGeometry::new(2, 3, 4), 4, &mut SeededRng::new(seed)).unwrap()
    }

    #[test]
    fn static_pool_repeats_its_state() {
        let mut pool = ChannelPool::fixed(sv_state(1), [10.0, 0.0, 0.0]);
        assert_eq!(pool.mode(), PoolMode::Static);
        assert_eq!(pool.frames().len(), 1);
        let a = pool.draw().unwrap();
        for _ in 0..5 {
            assert_eq!(pool.draw().unwrap(), a);
        }
    }

    #[test]
    fn dynamic_ricean_pool_varies_and_is_seeded() {
        let model = ChannelModel::Ricean {
            geometry: SystemGeometry::new(2, 2, 4),
            factors: RiceanFactors::default(),
        };
        let mut a = ChannelPool::<f64>::dynamic(model.clone(), SeededRng::new(3)).unwrap();
        let mut b = ChannelPool::<f64>::dynamic(model, SeededRng::new(3)).unwrap();
        let (a1, a2) = (a.draw().unwrap(), a.draw().unwrap());
        assert_ne!(a1, a2);
        assert_eq!(a1, b.draw().unwrap());
        assert_eq!(a2, b.draw().unwrap());
    }

    #[test]
    fn mobile_pool_stays_in_arena() {
        let env = SvEnvironment::draw(&SystemGeometry::new(2, 2, 4), 3, &mut SeededRng::new(0)).unwrap();
        let arena = Arena {
            min: [6.0, -3.0, 0.0],
            max: [12.0, 3.0, 0.0],
        };
        let mut pool = ChannelPool::<f64>::dynamic(ChannelModel::MobileSv { env, arena }, SeededRng::new(1)).unwrap();
        for _ in 0..20 {
            assert!(arena.contains(pool.draw().unwrap().rx));
        }
    }

    #[test]
    fn export_import_round_trip() {
        let frames: Vec<ChannelFrame<f64>> = (0..3)
            .map(|i| ChannelFrame {
                state: sv_state(i),
                rx: [i as f64, 0.5, -0.25],
            })
            .collect();
        let mut buf = Vec::new();
        write_pool(&mut buf, &frames).unwrap();
        let back: Vec<ChannelFrame<f64>> = read_pool(buf.as_slice()).unwrap();
        assert_eq!(back, frames);
        assert!(read_pool::<f64, _>(&buf[..buf.len() - 3]).is_err());
        assert!(read_pool::<f64, _>(&b"garbage\n"[..]).is_err());
    }

    #[test]
    fn replay_pool_draws_from_list() {
        let frames: Vec<ChannelFrame<f64>> = (0..4)
            .map(|i| ChannelFrame {
                state: sv_state(i),
                rx: [0.0; 3],
            })
            .collect();
        let mut pool = ChannelPool::replay(frames.clone(), SeededRng::new(2)).unwrap();
        for _ in 0..10 {
            let f = pool.draw().unwrap();
            assert!(frames.contains(&f));
        }
        assert!(ChannelPool::<f64>::replay(Vec::new(), SeededRng::new(0)).is_err());
    }
}
