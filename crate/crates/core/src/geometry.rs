//! Uniform grids on truncated boxes, space-time fields, and parabolic cylinders.
//!
//! A grid with `N` nodes per axis on `[-L, L]^n` has spacing `h = 2L/(N-1)`.
//! Every node owns the cube of side `h` centred on it, so the computational
//! domain covered by the nodal unknowns is `[-L - h/2, L + h/2]^n`; everything
//! outside is exterior data.

use std::fmt;
use std::io::{BufRead, Read, Write};

use crate::error::{ensure_finite, Error, Result};

/// Uniform tensor grid on `[-L, L]^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    nodes_per_axis: usize,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, nodes_per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidParameter {
                name: "dim_n",
                value: dim as f64,
                expected: "n in {1, 2}",
            });
        }
        ensure_finite("half_width_l", half_width)?;
        if half_width <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "half_width_l",
                value: half_width,
                expected: "L > 0",
            });
        }
        if nodes_per_axis < 3 {
            return Err(Error::InvalidParameter {
                name: "nodes_per_axis_n",
                value: nodes_per_axis as f64,
                expected: "N >= 3",
            });
        }
        Ok(Grid {
            dim,
            half_width,
            nodes_per_axis,
        })
    }

    /// Grid whose node spacing tiles a period `period` exactly: `N h = period`.
    pub fn with_period(dim: usize, nodes_per_axis: usize, period: f64) -> Result<Self> {
        let half = period * (nodes_per_axis as f64 - 1.0) / (2.0 * nodes_per_axis as f64);
        Grid::new(dim, half, nodes_per_axis)
    }

    /// Same box with `2N` nodes per axis.
    pub fn refined(&self) -> Self {
        Grid {
            nodes_per_axis: 2 * self.nodes_per_axis,
            ..*self
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.nodes_per_axis as f64 - 1.0)
    }

    /// `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Half-width of the union of node cells, `L + h/2`.
    pub fn outer_half_width(&self) -> f64 {
        self.half_width + 0.5 * self.spacing()
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis.pow(self.dim as u32)
    }

    /// `x_i = -L + i h`.
    #[inline]
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Multi-index of a flat node index (last axis fastest).
    #[inline]
    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.nodes_per_axis, idx % self.nodes_per_axis]
        }
    }

    #[inline]
    pub fn flat_index(&self, mi: [usize; 2]) -> usize {
        if self.dim == 1 {
            mi[0]
        } else {
            mi[0] * self.nodes_per_axis + mi[1]
        }
    }

    /// Coordinates of node `idx` written into `out[..dim]`.
    #[inline]
    pub fn write_point(&self, idx: usize, out: &mut [f64]) {
        let mi = self.multi_index(idx);
        for (a, o) in out.iter_mut().take(self.dim).enumerate() {
            *o = self.axis_coord(mi[a]);
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        self.write_point(idx, &mut p);
        p
    }

    /// All node coordinates, flattened as `[x_0.., x_1.., ...]` with stride `dim`.
    pub fn coordinates(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.node_count() * self.dim];
        for (idx, chunk) in out.chunks_mut(self.dim).enumerate() {
            self.write_point(idx, chunk);
        }
        out
    }

    /// Samples `f` at every node.
    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        (0..self.node_count())
            .map(|i| {
                self.write_point(i, &mut p);
                f(&p)
            })
            .collect()
    }

    /// Axis neighbours of node `idx`: `(axis, direction, Some(neighbour) | None)`
    /// where `None` means the neighbour lies outside the grid.
    pub fn axis_neighbours(&self, idx: usize) -> impl Iterator<Item = (usize, f64, Option<usize>)> + '_ {
        let mi = self.multi_index(idx);
        let n = self.nodes_per_axis;
        (0..self.dim).flat_map(move |axis| {
            [-1.0f64, 1.0].into_iter().map(move |dir| {
                let i = mi[axis];
                let nb = if dir < 0.0 {
                    i.checked_sub(1)
                } else if i + 1 < n {
                    Some(i + 1)
                } else {
                    None
                };
                let nb = nb.map(|j| {
                    let mut m = mi;
                    m[axis] = j;
                    self.flat_index(m)
                });
                (axis, dir, nb)
            })
        })
    }

    /// `true` when `x` lies in the closed box `[-L, L]^n`.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.abs() <= self.half_width)
    }
}

/// Nodal solution values on a grid at increasing time levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: Grid,
    order: f64,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl SpaceTimeField {
    /// Builds a field from level-major values (`times.len() * grid.node_count()` entries).
    pub fn new(grid: Grid, order: f64, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Precondition("a field needs at least one time level".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("time levels must be strictly increasing".into()));
        }
        if values.len() != times.len() * grid.node_count() {
            return Err(Error::Dimension(format!(
                "{} values for {} levels of {} nodes",
                values.len(),
                times.len(),
                grid.node_count()
            )));
        }
        if values.iter().chain(&times).any(|v| !v.is_finite()) {
            return Err(Error::Precondition("field values and times must be finite".into()));
        }
        Ok(SpaceTimeField {
            grid,
            order,
            times,
            values,
        })
    }

    /// Samples `u(x, t)` at every node and level.
    pub fn from_fn<F: Fn(&[f64], f64) -> f64>(grid: Grid, order: f64, times: Vec<f64>, u: F) -> Result<Self> {
        let mut values = Vec::with_capacity(times.len() * grid.node_count());
        for &t in &times {
            values.extend(grid.sample(|x| u(x, t)));
        }
        SpaceTimeField::new(grid, order, times, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Order `s` of the equation the field belongs to.
    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn level_count(&self) -> usize {
        self.times.len()
    }

    pub fn level(&self, m: usize) -> &[f64] {
        let n = self.grid.node_count();
        &self.values[m * n..(m + 1) * n]
    }

    pub fn t_first(&self) -> f64 {
        self.times[0]
    }

    pub fn t_last(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Applies `f` nodewise.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        SpaceTimeField {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// Nodewise `a * self + b * other` on identical grids and levels.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.grid != other.grid || self.times != other.times {
            return Err(Error::Dimension("fields live on different grids or time levels".into()));
        }
        Ok(SpaceTimeField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            ..self.clone()
        })
    }

    /// Indices of the levels with `lo < t < hi`.
    pub fn levels_in_open(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.times.len())
            .filter(|&m| self.times[m] > lo && self.times[m] < hi)
            .collect()
    }

    /// Index of the stored level closest to `t`.
    pub fn nearest_level(&self, t: f64) -> usize {
        (0..self.times.len())
            .min_by(|&a, &b| (self.times[a] - t).abs().total_cmp(&(self.times[b] - t).abs()))
            .expect("non-empty time axis")
    }
}

/// Orientation of a parabolic cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `B_r(x0) x (t0 - r^{2s}, t0)`.
    Backward,
    /// `B_r(x0) x (t0, t0 + r^{2s})`.
    Forward,
}

/// Open ball crossed with an open time interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeRegion {
    pub center: Vec<f64>,
    pub radius: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl fmt::Display for SpaceTimeRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "B_{}({:?}) x ({}, {})",
            self.radius, self.center, self.t_lo, self.t_hi
        )
    }
}

/// `B_r(x0) x (t0 - r^{2s}, t0)` or `B_r(x0) x (t0, t0 + r^{2s})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicCylinder {
    pub center: Vec<f64>,
    pub radius: f64,
    pub anchor_time: f64,
    pub orientation: Orientation,
    pub order: f64,
}

/// Builds a parabolic cylinder.
pub fn cylinder(x0: &[f64], t0: f64, r: f64, s: f64, orientation: Orientation) -> Result<ParabolicCylinder> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter {
            name: "radius_r",
            value: r,
            expected: "r > 0",
        });
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter {
            name: "order_s",
            value: s,
            expected: "s in (0, 1)",
        });
    }
    Ok(ParabolicCylinder {
        center: x0.to_vec(),
        radius: r,
        anchor_time: t0,
        orientation,
        order: s,
    })
}

impl ParabolicCylinder {
    /// `r^{2s}`.
    pub fn duration(&self) -> f64 {
        self.radius.powf(2.0 * self.order)
    }

    /// The open time interval of the cylinder.
    pub fn time_interval(&self) -> (f64, f64) {
        let d = self.duration();
        match self.orientation {
            Orientation::Backward => (self.anchor_time - d, self.anchor_time),
            Orientation::Forward => (self.anchor_time, self.anchor_time + d),
        }
    }

    pub fn region(&self) -> SpaceTimeRegion {
        let (t_lo, t_hi) = self.time_interval();
        SpaceTimeRegion {
            center: self.center.clone(),
            radius: self.radius,
            t_lo,
            t_hi,
        }
    }
}

impl From<&ParabolicCylinder> for SpaceTimeRegion {
    fn from(c: &ParabolicCylinder) -> Self {
        c.region()
    }
}

/// Discrete sup / inf / mean over a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub sup: f64,
    pub inf: f64,
    pub mean: f64,
    /// Number of space-time samples (nodes times levels).
    pub node_count: usize,
}

/// Nodes with `|x - x0| < r`, strictly.
pub fn nodes_in_ball(grid: &Grid, center: &[f64], radius: f64) -> Vec<usize> {
    let r2 = radius * radius;
    let mut p = [0.0; 2];
    (0..grid.node_count())
        .filter(|&i| {
            grid.write_point(i, &mut p);
            let d2: f64 = p[..grid.dim()]
                .iter()
                .zip(center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d2 < r2
        })
        .collect()
}

/// Extrema of `transform(u)` over the nodes strictly inside the ball and the
/// stored levels strictly inside the time interval.
pub fn region_stats<F: Fn(f64) -> f64>(
    f: &SpaceTimeField,
    region: &SpaceTimeRegion,
    transform: F,
) -> Result<Extrema> {
    if region.center.len() != f.grid().dim() {
        return Err(Error::Dimension(format!(
            "region centre of dimension {} on a {}-dimensional grid",
            region.center.len(),
            f.grid().dim()
        )));
    }
    let nodes = nodes_in_ball(f.grid(), &region.center, region.radius);
    let levels = f.levels_in_open(region.t_lo, region.t_hi);
    if nodes.is_empty() || levels.is_empty() {
        return Err(Error::EmptyRegion {
            region: region.to_string(),
        });
    }
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    let mut sum = 0.0;
    for &m in &levels {
        let lvl = f.level(m);
        for &i in &nodes {
            let v = transform(lvl[i]);
            sup = sup.max(v);
            inf = inf.min(v);
            sum += v;
        }
    }
    let count = nodes.len() * levels.len();
    Ok(Extrema {
        sup,
        inf,
        mean: sum / count as f64,
        node_count: count,
    })
}

/// Sup, inf and mean of the nodal values over the cylinder.
pub fn field_extrema(f: &SpaceTimeField, c: &ParabolicCylinder) -> Result<Extrema> {
    region_stats(f, &c.region(), |v| v)
}

const MAGIC: &[u8; 4] = b"NLPF";
const VERSION: u32 = 1;

/// Writes the binary field layout (little endian):
///
/// ```text
/// magic "NLPF" | u32 version = 1 | u32 n | f64 L | u64 N | u64 M | f64 s
/// | (M+1) x f64 times | (M+1) x N^n x f64 values, level-major
/// ```
pub fn write_field_binary<W: Write>(f: &SpaceTimeField, mut w: W) -> Result<()> {
    let g = f.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    w.write_all(&g.half_width().to_le_bytes())?;
    w.write_all(&(g.nodes_per_axis() as u64).to_le_bytes())?;
    w.write_all(&((f.level_count() - 1) as u64).to_le_bytes())?;
    w.write_all(&f.order().to_le_bytes())?;
    for t in f.times() {
        w.write_all(&t.to_le_bytes())?;
    }
    for v in f.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field_binary<R: Read>(mut r: R) -> Result<SpaceTimeField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, not a field file".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = read_u32(&mut r)? as usize;
    let half = read_f64(&mut r)?;
    let n = read_u64(&mut r)? as usize;
    let m = read_u64(&mut r)? as usize;
    let order = read_f64(&mut r)?;
    let grid = Grid::new(dim, half, n)?;
    let times = (0..=m).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let count = (m + 1) * grid.node_count();
    let values = (0..count).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    SpaceTimeField::new(grid, order, times, values)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Writes the CSV layout: a `n,L,N,M,s` header row, its values, then one row
/// per level holding `t` followed by the `N^n` nodal values.
pub fn write_field_csv<W: Write>(f: &SpaceTimeField, mut w: W) -> Result<()> {
    let g = f.grid();
    writeln!(w, "n,L,N,M,s")?;
    writeln!(
        w,
        "{},{},{},{},{}",
        g.dim(),
        g.half_width(),
        g.nodes_per_axis(),
        f.level_count() - 1,
        f.order()
    )?;
    for m in 0..f.level_count() {
        write!(w, "{}", f.times()[m])?;
        for v in f.level(m) {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_field_csv<R: BufRead>(r: R) -> Result<SpaceTimeField> {
    let mut lines = r.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Format("unexpected end of field csv".into()))?
            .map_err(Error::from)
    };
    if next()?.trim() != "n,L,N,M,s" {
        return Err(Error::Format("missing `n,L,N,M,s` header".into()));
    }
    let header = next()?;
    let h: Vec<&str> = header.trim().split(',').collect();
    if h.len() != 5 {
        return Err(Error::Format("header row needs five fields".into()));
    }
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::Format(format!("bad number `{s}`: {e}")))
    };
    let dim = parse(h[0])? as usize;
    let grid = Grid::new(dim, parse(h[1])?, parse(h[2])? as usize)?;
    let levels = parse(h[3])? as usize + 1;
    let order = parse(h[4])?;
    let mut times = Vec::with_capacity(levels);
    let mut values = Vec::with_capacity(levels * grid.node_count());
    for _ in 0..levels {
        let line = next()?;
        let mut it = line.trim().split(',');
        times.push(parse(it.next().unwrap_or(""))?);
        let before = values.len();
        for v in it {
            values.push(parse(v)?);
        }
        if values.len() - before != grid.node_count() {
            return Err(Error::Format("level row has the wrong number of values".into()));
        }
    }
    SpaceTimeField::new(grid, order, times, values)
}
