//! Cross-sections ω ⊂ ℝ^{d−1}, their Dirichlet ground states and transverse grids.

use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use crate::error::{Result, TubeError};
use crate::quad::GaussLegendre;
use crate::sparse::{lowest_generalized, CsrMatrix, LanczosOptions};

/// A quadrature node of ω carrying the ground state and its gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPoint {
    pub u: [f64; 2],
    pub weight: f64,
    pub value: f64,
    pub grad: [f64; 2],
}

/// A rasterized cross-section, row-major, rows running downward.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<bool>,
}

impl Mask {
    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(TubeError::Precondition("mask rows have different lengths".into()));
        }
        Ok(Self { rows: rows.len(), cols, cells: rows.concat() })
    }

    pub fn filled(rows: usize, cols: usize) -> Self {
        Self { rows, cols, cells: vec![true; rows * cols] }
    }

    pub fn get(&self, r: isize, c: isize) -> bool {
        r >= 0 && c >= 0 && (r as usize) < self.rows && (c as usize) < self.cols && self.cells[r as usize * self.cols + c as usize]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    /// Each cell split into `factor`×`factor` sub-cells.
    pub fn refined(&self, factor: usize) -> Self {
        let (rows, cols) = (self.rows * factor, self.cols * factor);
        let cells = (0..rows * cols).map(|k| self.cells[(k / cols / factor) * self.cols + (k % cols) / factor]).collect();
        Self { rows, cols, cells }
    }

    /// Read a CSV of 0/1 entries.
    pub fn from_csv(text: &str) -> Result<Self> {
        let rows: Vec<Vec<bool>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                l.split(',')
                    .map(|v| match v.trim() {
                        "0" => Ok(false),
                        "1" => Ok(true),
                        other => Err(TubeError::Precondition(format!("mask row {}: expected 0 or 1, found `{other}`", i + 1))),
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Self::from_rows(&rows)
    }

    /// Read a PGM image (P2 or P5); pixels above half the maximum are inside.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| TubeError::Precondition(format!("PGM: {m}"));
        let mut pos = 0usize;
        let token = |bytes: &[u8], pos: &mut usize| -> Option<String> {
            loop {
                while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                    *pos += 1;
                }
                if *pos < bytes.len() && bytes[*pos] == b'#' {
                    while *pos < bytes.len() && bytes[*pos] != b'\n' {
                        *pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = *pos;
            while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            (start < *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
        };
        let magic = token(bytes, &mut pos).ok_or_else(|| bad("empty file"))?;
        let num = |pos: &mut usize| -> Result<usize> {
            token(bytes, pos).and_then(|t| t.parse().ok()).ok_or_else(|| bad("malformed header"))
        };
        let cols = num(&mut pos)?;
        let rows = num(&mut pos)?;
        let maxval = num(&mut pos)?;
        if maxval == 0 || maxval > 65535 {
            return Err(bad("maximum value out of range"));
        }
        let mut pixels = Vec::with_capacity(rows * cols);
        match magic.as_str() {
            "P2" => {
                for _ in 0..rows * cols {
                    pixels.push(num(&mut pos)?);
                }
            }
            "P5" => {
                pos += 1; // single whitespace after maxval
                let wide = maxval > 255;
                for k in 0..rows * cols {
                    let v = if wide {
                        let i = pos + 2 * k;
                        if i + 1 >= bytes.len() {
                            return Err(bad("truncated raster"));
                        }
                        (bytes[i] as usize) << 8 | bytes[i + 1] as usize
                    } else {
                        *bytes.get(pos + k).ok_or_else(|| bad("truncated raster"))? as usize
                    };
                    pixels.push(v);
                }
            }
            other => return Err(bad(&format!("unsupported magic `{other}`"))),
        }
        Ok(Self { rows, cols, cells: pixels.into_iter().map(|p| 2 * p > maxval).collect() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("pgm") => Self::from_pgm(&bytes),
            _ => Self::from_csv(&String::from_utf8_lossy(&bytes)),
        }
    }

    /// Number of 4-connected components of inside cells.
    pub fn components(&self) -> usize {
        let mut seen = vec![false; self.cells.len()];
        let mut count = 0;
        for start in 0..self.cells.len() {
            if !self.cells[start] || seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(k) = stack.pop() {
                let (r, c) = ((k / self.cols) as isize, (k % self.cols) as isize);
                for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                    if self.get(r + dr, c + dc) {
                        let j = (r + dr) as usize * self.cols + (c + dc) as usize;
                        if !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        count
    }

    fn has_interior_cell(&self) -> bool {
        (0..self.rows as isize).any(|r| {
            (0..self.cols as isize).any(|c| {
                self.get(r, c) && self.get(r - 1, c) && self.get(r + 1, c) && self.get(r, c - 1) && self.get(r, c + 1)
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Shape {
    Interval { half_width: f64 },
    Rectangle { b: f64, c: f64 },
    Disk { radius: f64 },
    Mask { rows: usize, cols: usize, spacing: f64, cells: usize },
}

#[derive(Debug, Clone)]
struct MaskData {
    mask: Mask,
    spacing: f64,
    /// coordinates of the cell (0, 0) centre after centring on the centroid
    origin: [f64; 2],
    /// index into `ground` per cell, usize::MAX outside
    index: Vec<usize>,
    ground: Vec<f64>,
}

impl MaskData {
    fn cell_center(&self, r: usize, c: usize) -> [f64; 2] {
        [self.origin[0] + c as f64 * self.spacing, self.origin[1] - r as f64 * self.spacing]
    }

    fn locate(&self, u: &[f64]) -> Option<(usize, usize)> {
        let c = ((u[0] - self.origin[0]) / self.spacing + 0.5).floor();
        let r = ((self.origin[1] - u[1]) / self.spacing + 0.5).floor();
        (r >= 0.0 && c >= 0.0 && (r as usize) < self.mask.rows && (c as usize) < self.mask.cols)
            .then_some((r as usize, c as usize))
            .filter(|&(r, c)| self.mask.cells[r * self.mask.cols + c])
    }

    fn value(&self, r: isize, c: isize) -> Option<f64> {
        self.mask.get(r, c).then(|| self.ground[self.index[r as usize * self.mask.cols + c as usize]])
    }
}

/// The cross-section ω with its radius a = sup|u| and first Dirichlet eigenpair.
#[derive(Debug, Clone)]
pub struct CrossSection {
    shape: Shape,
    radius: f64,
    mu1: f64,
    mu2: f64,
    quadrature: Vec<SectionPoint>,
    mask: Option<MaskData>,
}

/// J₀ and J₁ by their power series (accurate to ~1e−15 for x ≤ 5).
pub fn bessel_j01(x: f64) -> (f64, f64) {
    let q = -x * x / 4.0;
    let (mut t0, mut t1) = (1.0, 1.0);
    let (mut s0, mut s1) = (1.0, 1.0);
    for k in 1..60 {
        let kf = k as f64;
        t0 *= q / (kf * kf);
        t1 *= q / (kf * (kf + 1.0));
        s0 += t0;
        s1 += t1;
        if t0.abs() < 1e-18 && t1.abs() < 1e-18 {
            break;
        }
    }
    (s0, 0.5 * x * s1)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo * fhi > 0.0 {
        return Err(TubeError::Numeric(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || hi - lo < 1e-15 {
            return Ok(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// First positive zero of J₀.
pub fn j0_first_zero() -> Result<f64> {
    bisect(|x| bessel_j01(x).0, 2.0, 3.0)
}

/// First positive zero of J₁.
pub fn j1_first_zero() -> Result<f64> {
    bisect(|x| bessel_j01(x).1, 3.5, 4.2)
}

const SECTION_GAUSS: usize = 24;

impl CrossSection {
    /// ω = (−a, a).
    pub fn interval(a: f64) -> Result<Self> {
        positive("interval half-width", a)?;
        let mu1 = (PI / (2.0 * a)).powi(2);
        let quadrature = GaussLegendre::new(SECTION_GAUSS)
            .on(-a, a)
            .map(|(u, w)| {
                let k = PI / (2.0 * a);
                SectionPoint {
                    u: [u, 0.0],
                    weight: w,
                    value: (k * u).cos() / a.sqrt(),
                    grad: [-k * (k * u).sin() / a.sqrt(), 0.0],
                }
            })
            .collect();
        Ok(Self {
            shape: Shape::Interval { half_width: a },
            radius: a,
            mu1,
            mu2: 4.0 * mu1,
            quadrature,
            mask: None,
        })
    }

    /// ω = (−b/2, b/2) × (−c/2, c/2).
    pub fn rectangle(b: f64, c: f64) -> Result<Self> {
        positive("rectangle side b", b)?;
        positive("rectangle side c", c)?;
        let (kb, kc) = (PI / b, PI / c);
        let norm = 2.0 / (b * c).sqrt();
        let rule = GaussLegendre::new(SECTION_GAUSS);
        let mut quadrature = Vec::with_capacity(SECTION_GAUSS * SECTION_GAUSS);
        for (x, wx) in rule.on(-b / 2.0, b / 2.0) {
            for (y, wy) in rule.on(-c / 2.0, c / 2.0) {
                let (cx, cy) = ((kb * x).cos(), (kc * y).cos());
                quadrature.push(SectionPoint {
                    u: [x, y],
                    weight: wx * wy,
                    value: norm * cx * cy,
                    grad: [-norm * kb * (kb * x).sin() * cy, -norm * kc * cx * (kc * y).sin()],
                });
            }
        }
        let mu1 = kb * kb + kc * kc;
        let mu2 = (4.0 * kb * kb + kc * kc).min(kb * kb + 4.0 * kc * kc);
        Ok(Self {
            shape: Shape::Rectangle { b, c },
            radius: (b * b + c * c).sqrt() / 2.0,
            mu1,
            mu2,
            quadrature,
            mask: None,
        })
    }

    /// ω = disk of radius r about the origin.
    pub fn disk(r: f64) -> Result<Self> {
        positive("disk radius", r)?;
        let j = j0_first_zero()?;
        let j11 = j1_first_zero()?;
        let norm = 1.0 / (PI.sqrt() * r * bessel_j01(j).1.abs());
        let radial = GaussLegendre::new(SECTION_GAUSS);
        let angles = 4 * SECTION_GAUSS;
        let mut quadrature = Vec::with_capacity(SECTION_GAUSS * angles);
        for (rho, w) in radial.on(0.0, r) {
            let (j0, j1) = bessel_j01(j * rho / r);
            for m in 0..angles {
                let phi = 2.0 * PI * (m as f64 + 0.5) / angles as f64;
                let (s, c) = phi.sin_cos();
                let dr = -norm * j / r * j1;
                quadrature.push(SectionPoint {
                    u: [rho * c, rho * s],
                    weight: w * rho * 2.0 * PI / angles as f64,
                    value: norm * j0,
                    grad: [dr * c, dr * s],
                });
            }
        }
        Ok(Self {
            shape: Shape::Disk { radius: r },
            radius: r,
            mu1: (j / r).powi(2),
            mu2: (j11 / r).powi(2),
            quadrature,
            mask: None,
        })
    }

    /// A rasterized cross-section with cell size `spacing`, centred on its centroid.
    pub fn mask(mask: Mask, spacing: f64) -> Result<Self> {
        positive("mask spacing", spacing)?;
        match mask.components() {
            0 => return Err(TubeError::Topology("mask has no inside cells".into())),
            1 => {}
            k => return Err(TubeError::Topology(format!("mask has {k} disconnected components"))),
        }
        if !mask.has_interior_cell() {
            return Err(TubeError::Topology(
                "mask has no cell whose four neighbours are inside; not open at this resolution".into(),
            ));
        }
        let mut sum = [0.0, 0.0];
        let count = mask.count() as f64;
        for r in 0..mask.rows {
            for c in 0..mask.cols {
                if mask.cells[r * mask.cols + c] {
                    sum[0] += c as f64;
                    sum[1] += r as f64;
                }
            }
        }
        let origin = [-sum[0] / count * spacing, sum[1] / count * spacing];
        let mut data = MaskData { mask, spacing, origin, index: Vec::new(), ground: Vec::new() };
        let grid = TransverseGrid::from_mask(&data.mask, spacing, origin);
        let (a, mass) = grid.laplacian();
        let pairs = lowest_generalized(&a, &mass, 2, &LanczosOptions { tol: 1e-12, ..Default::default() })
            .map_err(|e| TubeError::Numeric(format!("mask eigenproblem: {e}")))?;
        let mut ground = pairs.vectors[0].clone();
        let cell = spacing * spacing;
        let norm = ground.iter().map(|v| v * v * cell).sum::<f64>().sqrt();
        let sign = if ground.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        ground.iter_mut().for_each(|v| *v *= sign / norm);
        let mut index = vec![usize::MAX; data.mask.cells.len()];
        let mut k = 0;
        for (i, &inside) in data.mask.cells.iter().enumerate() {
            if inside {
                index[i] = k;
                k += 1;
            }
        }
        data.index = index;
        data.ground = ground;

        let half_diag = spacing / 2f64.sqrt();
        let mut radius: f64 = 0.0;
        let mut quadrature = Vec::with_capacity(k);
        for r in 0..data.mask.rows {
            for c in 0..data.mask.cols {
                let Some(value) = data.value(r as isize, c as isize) else { continue };
                let u = data.cell_center(r, c);
                radius = radius.max((u[0] * u[0] + u[1] * u[1]).sqrt() + half_diag);
                // ghost values −J outside put the wall on the cell face
                let nb = |dr: isize, dc: isize| data.value(r as isize + dr, c as isize + dc).unwrap_or(-value);
                let gx = (nb(0, 1) - nb(0, -1)) / (2.0 * spacing);
                let gy = (nb(-1, 0) - nb(1, 0)) / (2.0 * spacing);
                quadrature.push(SectionPoint { u, weight: cell, value, grad: [gx, gy] });
            }
        }
        let shape = Shape::Mask { rows: data.mask.rows, cols: data.mask.cols, spacing, cells: k };
        Ok(Self {
            shape,
            radius,
            mu1: pairs.values[0],
            mu2: pairs.values[1],
            quadrature,
            mask: Some(data),
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Dimension of ω (d − 1).
    pub fn dim(&self) -> usize {
        match self.shape {
            Shape::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// a = sup_{u∈ω} |u|.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    pub fn quadrature(&self) -> &[SectionPoint] {
        &self.quadrature
    }

    /// Whether the coordinates of `u` lie in ω.
    pub fn contains(&self, u: &[f64]) -> bool {
        match self.shape {
            Shape::Interval { half_width } => u[0].abs() < half_width,
            Shape::Rectangle { b, c } => u[0].abs() < b / 2.0 && u[1].abs() < c / 2.0,
            Shape::Disk { radius } => u[0] * u[0] + u[1] * u[1] < radius * radius,
            Shape::Mask { .. } => self.mask.as_ref().and_then(|m| m.locate(u)).is_some(),
        }
    }

    /// Normalized positive ground state 𝒥₁ (zero outside ω; piecewise constant on mask cells).
    pub fn ground_state(&self, u: &[f64]) -> f64 {
        if !self.contains(u) {
            return 0.0;
        }
        match self.shape {
            Shape::Interval { half_width: a } => (PI * u[0] / (2.0 * a)).cos() / a.sqrt(),
            Shape::Rectangle { b, c } => 2.0 / (b * c).sqrt() * (PI * u[0] / b).cos() * (PI * u[1] / c).cos(),
            Shape::Disk { radius } => {
                let j = j0_first_zero().expect("bracketed");
                let rho = (u[0] * u[0] + u[1] * u[1]).sqrt();
                bessel_j01(j * rho / radius).0 / (PI.sqrt() * radius * bessel_j01(j).1.abs())
            }
            Shape::Mask { .. } => {
                let m = self.mask.as_ref().expect("mask data");
                let (r, c) = m.locate(u).expect("inside");
                m.ground[m.index[r * m.mask.cols + c]]
            }
        }
    }

    /// ∫_ω 𝒥₁² under the stored quadrature.
    pub fn norm_squared(&self) -> f64 {
        self.quadrature.iter().map(|p| p.weight * p.value * p.value).sum()
    }

    /// Finite-difference grid of ω for operator assembly.
    pub fn transverse_grid(&self, target_spacing: f64) -> Result<TransverseGrid> {
        positive("transverse spacing", target_spacing)?;
        let count = |len: f64| ((len / target_spacing).round() as usize).max(2);
        match self.shape {
            Shape::Interval { half_width: a } => {
                let n = count(2.0 * a);
                Ok(TransverseGrid::box_grid([n, 1], [2.0 * a, 0.0], 1))
            }
            Shape::Rectangle { b, c } => Ok(TransverseGrid::box_grid([count(b), count(c)], [b, c], 2)),
            Shape::Disk { radius } => Ok(TransverseGrid::disk(radius, count(radius).max(2))),
            Shape::Mask { spacing, .. } => {
                let m = self.mask.as_ref().expect("mask data");
                let factor = ((spacing / target_spacing).round() as usize).max(1);
                let fine = m.mask.refined(factor);
                let h = spacing / factor as f64;
                let origin = [m.origin[0] - 0.5 * spacing + 0.5 * h, m.origin[1] + 0.5 * spacing - 0.5 * h];
                Ok(TransverseGrid::from_mask(&fine, h, origin))
            }
        }
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(TubeError::Precondition(format!("{what} must be positive and finite, got {v}")))
    }
}

/// One term of the transverse form: a node pair, or a node and the wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseEdge {
    pub from: usize,
    pub to: Option<usize>,
    pub axis: usize,
    /// Distance between the nodes, or from the node to the wall.
    pub length: f64,
    pub midpoint: [f64; 2],
}

/// Nodes strictly inside ω with their coupling edges.
#[derive(Debug, Clone)]
pub struct TransverseGrid {
    pub dim: usize,
    pub spacing: [f64; 2],
    pub points: Vec<[f64; 2]>,
    pub edges: Vec<TransverseEdge>,
}

impl TransverseGrid {
    /// Node-based grid on a centred box with `cells[i]` intervals per axis.
    fn box_grid(cells: [usize; 2], sides: [f64; 2], dim: usize) -> Self {
        let n0 = cells[0] - 1;
        let n1 = if dim == 1 { 1 } else { cells[1] - 1 };
        let h = [sides[0] / cells[0] as f64, if dim == 1 { 1.0 } else { sides[1] / cells[1] as f64 }];
        let coord = |axis: usize, i: usize| -> f64 {
            if dim == 1 && axis == 1 {
                0.0
            } else {
                -sides[axis] / 2.0 + (i + 1) as f64 * h[axis]
            }
        };
        let idx = |i: usize, j: usize| i * n1 + j;
        let mut points = Vec::with_capacity(n0 * n1);
        for i in 0..n0 {
            for j in 0..n1 {
                points.push([coord(0, i), coord(1, j)]);
            }
        }
        let mut edges = Vec::new();
        for i in 0..n0 {
            for j in 0..n1 {
                let p = points[idx(i, j)];
                let mut along = |axis: usize, k: usize, n: usize, next: Option<usize>| {
                    let hh = h[axis];
                    let mut mid = p;
                    if k == 0 {
                        mid[axis] -= 0.5 * hh;
                        edges.push(TransverseEdge { from: idx(i, j), to: None, axis, length: hh, midpoint: mid });
                        mid = p;
                    }
                    mid[axis] += 0.5 * hh;
                    edges.push(TransverseEdge { from: idx(i, j), to: if k + 1 < n { next } else { None }, axis, length: hh, midpoint: mid });
                };
                along(0, i, n0, (i + 1 < n0).then(|| idx(i + 1, j)));
                if dim == 2 {
                    along(1, j, n1, (j + 1 < n1).then(|| idx(i, j + 1)));
                }
            }
        }
        Self { dim, spacing: h, points, edges }
    }

    /// Nodes at (iΔ, jΔ) inside the disk, walls at their true distance along each axis.
    fn disk(radius: f64, m: usize) -> Self {
        let h = radius / m as f64;
        let mi = m as isize;
        let mut index = std::collections::HashMap::new();
        let mut points = Vec::new();
        let min_gap = 1e-3 * h;
        let inside = |i: isize, j: isize| {
            let (x, y) = (i as f64 * h, j as f64 * h);
            let wall = (radius * radius - y * y).max(0.0).sqrt();
            x.abs() < wall - min_gap && {
                let wall_y = (radius * radius - x * x).max(0.0).sqrt();
                y.abs() < wall_y - min_gap
            }
        };
        for i in -mi..=mi {
            for j in -mi..=mi {
                if inside(i, j) {
                    index.insert((i, j), points.len());
                    points.push([i as f64 * h, j as f64 * h]);
                }
            }
        }
        let mut edges = Vec::new();
        for i in -mi..=mi {
            for j in -mi..=mi {
                let Some(&p) = index.get(&(i, j)) else { continue };
                let u = points[p];
                for axis in 0..2 {
                    for dir in [-1.0f64, 1.0] {
                        let (ni, nj) = if axis == 0 { (i + dir as isize, j) } else { (i, j + dir as isize) };
                        let mut mid = u;
                        match index.get(&(ni, nj)) {
                            Some(&q) if dir > 0.0 => {
                                mid[axis] += 0.5 * h;
                                edges.push(TransverseEdge { from: p, to: Some(q), axis, length: h, midpoint: mid });
                            }
                            Some(_) => {}
                            None => {
                                let other = u[1 - axis];
                                let wall = (radius * radius - other * other).sqrt();
                                let dist = wall - dir * u[axis];
                                mid[axis] += dir * 0.5 * dist;
                                edges.push(TransverseEdge { from: p, to: None, axis, length: dist, midpoint: mid });
                            }
                        }
                    }
                }
            }
        }
        Self { dim: 2, spacing: [h, h], points, edges }
    }

    /// Cell-centred grid on a mask; the wall sits on the outer cell faces.
    fn from_mask(mask: &Mask, h: f64, origin: [f64; 2]) -> Self {
        let mut index = vec![usize::MAX; mask.cells.len()];
        let mut points = Vec::new();
        for r in 0..mask.rows {
            for c in 0..mask.cols {
                if mask.cells[r * mask.cols + c] {
                    index[r * mask.cols + c] = points.len();
                    points.push([origin[0] + c as f64 * h, origin[1] - r as f64 * h]);
                }
            }
        }
        let mut edges = Vec::new();
        for r in 0..mask.rows as isize {
            for c in 0..mask.cols as isize {
                if !mask.get(r, c) {
                    continue;
                }
                let p = index[r as usize * mask.cols + c as usize];
                let u = points[p];
                // axis 0 runs along columns, axis 1 upward (decreasing row)
                for (axis, dr, dc, sign) in [(0, 0, -1, -1.0), (0, 0, 1, 1.0), (1, 1, 0, -1.0), (1, -1, 0, 1.0)] {
                    let mut mid = u;
                    if mask.get(r + dr, c + dc) {
                        if sign > 0.0 {
                            let q = index[(r + dr) as usize * mask.cols + (c + dc) as usize];
                            mid[axis] += 0.5 * h;
                            edges.push(TransverseEdge { from: p, to: Some(q), axis, length: h, midpoint: mid });
                        }
                    } else {
                        mid[axis] += sign * 0.25 * h;
                        edges.push(TransverseEdge { from: p, to: None, axis, length: 0.5 * h, midpoint: mid });
                    }
                }
            }
        }
        Self { dim: 2, spacing: [h, h], points, edges }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Area (or length) of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        if self.dim == 1 {
            self.spacing[0]
        } else {
            self.spacing[0] * self.spacing[1]
        }
    }

    /// Coefficient multiplying (ψ_from − ψ_to)² (ψ_to = 0 at a wall) per unit cell volume.
    pub fn edge_coefficient(&self, e: &TransverseEdge) -> f64 {
        1.0 / (self.spacing[e.axis] * e.length)
    }

    /// The transverse Dirichlet Laplacian with unit cell volume: (stiffness, mass).
    pub fn laplacian(&self) -> (CsrMatrix, Vec<f64>) {
        let mut t = Vec::with_capacity(self.edges.len() * 3);
        for e in &self.edges {
            let w = self.edge_coefficient(e);
            t.push((e.from, e.from, w));
            if let Some(q) = e.to {
                t.push((q, q, w));
                t.push((e.from, q, -w));
                t.push((q, e.from, -w));
            }
        }
        (CsrMatrix::from_triplets(self.len(), t), vec![1.0; self.len()])
    }

    /// Lowest eigenvalue of the discrete transverse Laplacian (the grid's threshold μ₁,h).
    pub fn discrete_mu1(&self) -> Result<f64> {
        let (a, m) = self.laplacian();
        Ok(lowest_generalized(&a, &m, 1, &LanczosOptions { tol: 1e-13, ..Default::default() })?.values[0])
    }
}
