//! Metric-driven local remeshing: edge splits, collapses, flips and
//! smoothing until edges have unit length in the target metric.

use crate::error::{Error, Result};
use crate::geom::{orient2d, Sym2, Vec2};
use crate::mesh::{DomainShape, TriMesh};
use crate::metric::{element_metric, steiner_polar, MetricSampler};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptOptions {
    pub shape: DomainShape,
    /// Euclidean edge lengths are kept in `[h_min/2, 2 h_max]`.
    pub h_min: f64,
    pub h_max: f64,
    pub max_sweeps: usize,
    /// Stop when fewer than this fraction of edges is out of band.
    pub target_out_of_band: f64,
    /// Sweeps without improvement before giving up.
    pub patience: usize,
    /// Passes over the worst elements that reduce the element-wise
    /// discrepancy between the metric and the Steiner metric.
    pub polish_passes: usize,
}

impl AdaptOptions {
    pub fn new(shape: DomainShape, h_min: f64, h_max: f64) -> Self {
        AdaptOptions {
            shape,
            h_min,
            h_max,
            max_sweeps: 20,
            target_out_of_band: 0.01,
            patience: 3,
            polish_passes: 6,
        }
    }
}

/// Outcome of [`adapt_mesh`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptReport {
    pub sweeps: usize,
    /// Fraction of edges outside `[1/√2, √2]` after the last sweep.
    pub out_of_band: f64,
    /// True when the loop stopped for lack of progress.
    pub stalled: bool,
    pub splits: usize,
    pub collapses: usize,
    pub flips: usize,
    pub moves: usize,
    /// Local changes made by the final conformity polishing.
    pub polished: usize,
}

/// Adapts `old` to the metric, returning a new conforming mesh of the same
/// domain.
pub fn adapt_mesh<M: MetricSampler + ?Sized>(
    old: &TriMesh,
    metric: &M,
    opts: &AdaptOptions,
) -> Result<(TriMesh, AdaptReport)> {
    if !(opts.h_min > 0.0 && opts.h_min < opts.h_max) {
        return Err(Error::InvalidInput(format!(
            "need 0 < h_min < h_max, got {} and {}",
            opts.h_min, opts.h_max
        )));
    }
    let mut w = Work::new(old, metric, opts);
    let mut report = AdaptReport {
        sweeps: 0,
        out_of_band: w.out_of_band(),
        stalled: false,
        splits: 0,
        collapses: 0,
        flips: 0,
        moves: 0,
        polished: 0,
    };
    let mut best = report.out_of_band;
    let mut idle = 0;
    for sweep in 1..=opts.max_sweeps {
        let s = w.split_pass();
        let c = w.collapse_pass();
        let mut f = 0;
        for _ in 0..4 {
            let n = w.flip_pass();
            f += n;
            if n == 0 {
                break;
            }
        }
        let mut m = 0;
        for _ in 0..2 {
            m += w.smooth_pass();
            f += w.flip_pass();
        }
        report.sweeps = sweep;
        report.splits += s;
        report.collapses += c;
        report.flips += f;
        report.moves += m;
        report.out_of_band = w.out_of_band();
        log::debug!(
            "remesh sweep {sweep}: {s} splits, {c} collapses, {f} flips, {m} moves, {:.1}% out of band, {} triangles",
            100.0 * report.out_of_band,
            w.alive_triangles()
        );
        if report.out_of_band < opts.target_out_of_band {
            break;
        }
        if report.out_of_band < best - 1e-4 {
            best = report.out_of_band;
            idle = 0;
        } else {
            idle += 1;
            if idle >= opts.patience && s + c == 0 {
                report.stalled = true;
                log::warn!("remeshing stalled after {sweep} sweeps");
                break;
            }
        }
    }
    for _ in 0..opts.polish_passes {
        let n = w.polish_pass();
        report.polished += n;
        if n == 0 {
            break;
        }
    }
    report.out_of_band = w.out_of_band();
    Ok((w.finish()?, report))
}

struct Work<'a, M: MetricSampler + ?Sized> {
    metric: &'a M,
    opts: AdaptOptions,
    pts: Vec<Vec2>,
    g: Vec<Sym2>,
    lg: Vec<Sym2>,
    boundary: Vec<bool>,
    corner: Vec<bool>,
    vdead: Vec<bool>,
    tris: Vec<[usize; 3]>,
    tdead: Vec<bool>,
    vt: Vec<Vec<usize>>,
}

const QUALITY_FLOOR: f64 = 0.05;

impl<'a, M: MetricSampler + ?Sized> Work<'a, M> {
    fn new(mesh: &TriMesh, metric: &'a M, opts: &AdaptOptions) -> Self {
        let pts = mesh.vertices().to_vec();
        let g: Vec<Sym2> = pts.iter().map(|&p| metric.at(p)).collect();
        let lg = g.iter().map(Sym2::log).collect();
        let boundary: Vec<bool> = (0..mesh.n_vertices()).map(|v| mesh.is_boundary(v)).collect();
        let corner = pts
            .iter()
            .zip(&boundary)
            .map(|(&p, &b)| b && opts.shape.is_corner(p))
            .collect();
        let vt = (0..mesh.n_vertices())
            .map(|v| mesh.vertex_triangles(v).to_vec())
            .collect();
        Work {
            metric,
            opts: *opts,
            vdead: vec![false; pts.len()],
            pts,
            g,
            lg,
            boundary,
            corner,
            tris: mesh.triangles().to_vec(),
            tdead: vec![false; mesh.n_triangles()],
            vt,
        }
    }

    fn alive_triangles(&self) -> usize {
        self.tdead.iter().filter(|d| !**d).count()
    }

    fn add_vertex(&mut self, p: Vec2, boundary: bool) -> usize {
        let g = self.metric.at(p);
        self.pts.push(p);
        self.lg.push(g.log());
        self.g.push(g);
        self.boundary.push(boundary);
        self.corner.push(false);
        self.vdead.push(false);
        self.vt.push(Vec::new());
        self.pts.len() - 1
    }

    fn set_position(&mut self, v: usize, p: Vec2) {
        let g = self.metric.at(p);
        self.pts[v] = p;
        self.g[v] = g;
        self.lg[v] = g.log();
    }

    fn add_tri(&mut self, t: [usize; 3]) -> usize {
        let id = self.tris.len();
        self.tris.push(t);
        self.tdead.push(false);
        for v in t {
            self.vt[v].push(id);
        }
        id
    }

    fn kill_tri(&mut self, t: usize) {
        self.tdead[t] = true;
        for v in self.tris[t] {
            self.vt[v].retain(|&x| x != t);
        }
    }

    fn edge_tris(&self, a: usize, b: usize) -> Vec<usize> {
        self.vt[a]
            .iter()
            .copied()
            .filter(|&t| self.tris[t].contains(&b))
            .collect()
    }

    fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut n: Vec<usize> = self.vt[v]
            .iter()
            .flat_map(|&t| self.tris[t])
            .filter(|&w| w != v)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .tris
            .iter()
            .zip(&self.tdead)
            .filter(|(_, d)| !**d)
            .flat_map(|(t, _)| {
                (0..3).map(move |k| {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    (a.min(b), a.max(b))
                })
            })
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Metric length by Simpson's rule on the log-Euclidean interpolant of
    /// the endpoint tensors.
    fn mlen_with(&self, pa: Vec2, ga: &Sym2, _lga: &Sym2, pb: Vec2, gb: &Sym2, _lgb: &Sym2) -> f64 {
        // Composite Simpson with interior samples of the background metric, so
        // that thin refined bands between the endpoints are not missed.
        let d = pb - pa;
        let f = |t: f64| self.metric.at(pa + d * t).quad(d).sqrt();
        (ga.quad(d).sqrt() + 4.0 * f(0.25) + 2.0 * f(0.5) + 4.0 * f(0.75) + gb.quad(d).sqrt()) / 12.0
    }

    fn mlen(&self, a: usize, b: usize) -> f64 {
        self.mlen_with(
            self.pts[a], &self.g[a], &self.lg[a], self.pts[b], &self.g[b], &self.lg[b],
        )
    }

    fn quality_of(&self, p: [Vec2; 3], lg: [&Sym2; 3]) -> f64 {
        let g = ((*lg[0] + *lg[1] + *lg[2]) * (1.0 / 3.0)).exp();
        let area = 0.5 * orient2d(p[0], p[1], p[2]) * g.det().max(0.0).sqrt();
        let s = g.quad(p[1] - p[0]) + g.quad(p[2] - p[1]) + g.quad(p[0] - p[2]);
        4.0 * 3f64.sqrt() * area / s
    }

    fn quality(&self, t: [usize; 3]) -> f64 {
        self.quality_of(t.map(|v| self.pts[v]), t.map(|v| &self.lg[v]))
    }

    fn positive(&self, a: Vec2, b: Vec2, c: Vec2) -> bool {
        let scale = (b - a).norm2().max((c - a).norm2());
        orient2d(a, b, c) > 1e-10 * scale
    }

    fn out_of_band(&self) -> f64 {
        let e = self.edges();
        let bad = e
            .iter()
            .filter(|&&(a, b)| {
                let l = self.mlen(a, b);
                !(FRAC_1_SQRT_2..=SQRT_2).contains(&l)
            })
            .count();
        bad as f64 / e.len().max(1) as f64
    }

    // Splits --------------------------------------------------------------

    fn wants_split(&self, a: usize, b: usize) -> bool {
        let le = (self.pts[a] - self.pts[b]).norm();
        if le > 2.0 * self.opts.h_max {
            return true;
        }
        le >= self.opts.h_min && self.mlen(a, b) > SQRT_2
    }

    fn split_pass(&mut self) -> usize {
        let mut cand: Vec<(f64, usize, usize)> = self
            .edges()
            .into_iter()
            .filter(|&(a, b)| self.wants_split(a, b))
            .map(|(a, b)| (self.mlen(a, b), a, b))
            .collect();
        cand.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut count = 0;
        for (_, a, b) in cand {
            if self.wants_split(a, b) && self.split(a, b) {
                count += 1;
            }
        }
        count
    }

    fn split(&mut self, a: usize, b: usize) -> bool {
        let ts = self.edge_tris(a, b);
        if ts.is_empty() {
            return false;
        }
        let on_boundary = ts.len() == 1;
        let mut m = self.pts[a].lerp(self.pts[b], 0.5);
        if on_boundary {
            m = self
                .opts
                .shape
                .project_to_boundary(m, (self.pts[a], self.pts[b]));
        }
        let mut new_tris = Vec::with_capacity(4);
        for &t in &ts {
            let tri = self.tris[t];
            let k = (0..3)
                .find(|&k| {
                    let (x, y) = (tri[k], tri[(k + 1) % 3]);
                    (x == a && y == b) || (x == b && y == a)
                })
                .expect("triangle contains the edge");
            let (x, y, c) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
            if !self.positive(self.pts[x], m, self.pts[c]) || !self.positive(m, self.pts[y], self.pts[c]) {
                return false;
            }
            new_tris.push((t, x, y, c));
        }
        let v = self.add_vertex(m, on_boundary);
        for (t, x, y, c) in new_tris {
            self.kill_tri(t);
            self.add_tri([x, v, c]);
            self.add_tri([v, y, c]);
        }
        true
    }

    // Collapses -----------------------------------------------------------

    fn wants_collapse(&self, a: usize, b: usize) -> bool {
        let le = (self.pts[a] - self.pts[b]).norm();
        le < 0.5 * self.opts.h_min || self.mlen(a, b) < FRAC_1_SQRT_2
    }

    fn collapse_pass(&mut self) -> usize {
        let mut cand: Vec<(f64, usize, usize)> = self
            .edges()
            .into_iter()
            .filter(|&(a, b)| self.wants_collapse(a, b))
            .map(|(a, b)| (self.mlen(a, b), a, b))
            .collect();
        cand.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut count = 0;
        for (_, a, b) in cand {
            if self.vdead[a] || self.vdead[b] || self.edge_tris(a, b).is_empty() {
                continue;
            }
            if !self.wants_collapse(a, b) {
                continue;
            }
            if self.collapse(a, b) || self.collapse(b, a) {
                count += 1;
            }
        }
        count
    }

    /// Removes `a`, merging it into `b`.
    fn collapse(&mut self, a: usize, b: usize) -> bool {
        if self.corner[a] {
            return false;
        }
        let shared = self.edge_tris(a, b);
        if self.boundary[a] {
            if shared.len() != 1 || !self.boundary[b] {
                return false;
            }
        } else if shared.len() != 2 {
            return false;
        }
        // Link condition.
        let na = self.neighbors(a);
        let nb = self.neighbors(b);
        let mut common: Vec<usize> = na.iter().copied().filter(|v| nb.binary_search(v).is_ok()).collect();
        let mut opposite: Vec<usize> = shared
            .iter()
            .map(|&t| *self.tris[t].iter().find(|&&v| v != a && v != b).unwrap())
            .collect();
        common.sort_unstable();
        opposite.sort_unstable();
        if common != opposite {
            return false;
        }
        // Geometric checks on the triangles that survive with `a -> b`.
        let pb = self.pts[b];
        let mut old_q = f64::INFINITY;
        let mut new_q = f64::INFINITY;
        let mut updates = Vec::new();
        for &t in &self.vt[a] {
            if shared.contains(&t) {
                continue;
            }
            let tri = self.tris[t];
            let moved = tri.map(|v| if v == a { b } else { v });
            let p = moved.map(|v| self.pts[v]);
            if !self.positive(p[0], p[1], p[2]) {
                return false;
            }
            old_q = old_q.min(self.quality(tri));
            new_q = new_q.min(self.quality(moved));
            updates.push((t, moved));
        }
        for &t in &shared {
            old_q = old_q.min(self.quality(self.tris[t]));
        }
        if new_q < QUALITY_FLOOR.min(0.5 * old_q) {
            return false;
        }
        for &x in &na {
            if x == b || nb.binary_search(&x).is_ok() {
                continue;
            }
            let le = (self.pts[x] - pb).norm();
            if le > 2.0 * self.opts.h_max || self.mlen(x, b) > SQRT_2 {
                return false;
            }
        }
        for t in shared {
            self.kill_tri(t);
        }
        for (t, moved) in updates {
            self.kill_tri(t);
            self.add_tri(moved);
        }
        self.vdead[a] = true;
        true
    }

    // Flips ---------------------------------------------------------------

    fn flip_pass(&mut self) -> usize {
        let mut count = 0;
        for (a, b) in self.edges() {
            if self.try_flip(a, b) {
                count += 1;
            }
        }
        count
    }

    fn try_flip(&mut self, a: usize, b: usize) -> bool {
        let ts = self.edge_tris(a, b);
        if ts.len() != 2 {
            return false;
        }
        // Orient so that ts[0] = (a, b, c) counterclockwise.
        let (t1, t2) = (ts[0], ts[1]);
        let tri1 = self.tris[t1];
        let k = tri1.iter().position(|&v| v == a).unwrap();
        let (a, b) = if tri1[(k + 1) % 3] == b { (a, b) } else { (b, a) };
        let c = *tri1.iter().find(|&&v| v != a && v != b).unwrap();
        let d = *self.tris[t2].iter().find(|&&v| v != a && v != b).unwrap();
        if self.vt[c].iter().any(|&t| self.tris[t].contains(&d)) {
            return false;
        }
        let n1 = [a, d, c];
        let n2 = [d, b, c];
        let (pa, pb, pc, pd) = (self.pts[a], self.pts[b], self.pts[c], self.pts[d]);
        if !self.positive(pa, pd, pc) || !self.positive(pd, pb, pc) {
            return false;
        }
        let before = self.quality([a, b, c]).min(self.quality([b, a, d]));
        let after = self.quality(n1).min(self.quality(n2));
        if after <= before + 1e-6 {
            return false;
        }
        self.kill_tri(t1);
        self.kill_tri(t2);
        self.add_tri(n1);
        self.add_tri(n2);
        true
    }

    // Smoothing -----------------------------------------------------------

    fn smooth_pass(&mut self) -> usize {
        let mut count = 0;
        for v in 0..self.pts.len() {
            if self.vdead[v] || self.corner[v] || self.vt[v].is_empty() {
                continue;
            }
            if self.smooth(v) {
                count += 1;
            }
        }
        count
    }

    fn smooth(&mut self, v: usize) -> bool {
        let p = self.pts[v];
        let nb = self.neighbors(v);
        let mut target = Vec2::new(0.0, 0.0);
        let mut n = 0.0;
        for &j in &nb {
            let l = self.mlen(v, j);
            if l > 0.0 {
                let xj = self.pts[j];
                target = target + xj + (p - xj) * (1.0 / l);
                n += 1.0;
            }
        }
        if n == 0.0 {
            return false;
        }
        let mut q = p + (target * (1.0 / n) - p) * 0.5;
        if self.boundary[v] {
            q = match self.opts.shape {
                DomainShape::Disc => self.opts.shape.project_to_boundary(q, (p, p)),
                DomainShape::UnitSquare => {
                    let sides = self.opts.shape.boundary_sides(p);
                    match sides {
                        1 | 2 => Vec2::new(p.x, q.y.clamp(0.0, 1.0)),
                        4 | 8 => Vec2::new(q.x.clamp(0.0, 1.0), p.y),
                        _ => return false,
                    }
                }
            };
        }
        if (q - p).norm() < 1e-14 {
            return false;
        }
        let gq = self.metric.at(q);
        let lgq = gq.log();
        let mut old_q = f64::INFINITY;
        let mut new_q = f64::INFINITY;
        for &t in &self.vt[v] {
            let tri = self.tris[t];
            let pts = tri.map(|w| if w == v { q } else { self.pts[w] });
            if !self.positive(pts[0], pts[1], pts[2]) {
                return false;
            }
            let lgs = tri.map(|w| if w == v { &lgq } else { &self.lg[w] });
            old_q = old_q.min(self.quality(tri));
            new_q = new_q.min(self.quality_of(pts, lgs));
        }
        if new_q < old_q {
            return false;
        }
        self.set_position(v, q);
        true
    }

    // Conformity polishing ------------------------------------------------

    /// `‖G(centroid) − P⁻²‖_max` of a candidate triangle.
    fn defect(&self, p: [Vec2; 3]) -> f64 {
        if !self.positive(p[0], p[1], p[2]) {
            return f64::INFINITY;
        }
        match steiner_polar(p[0], p[1], p[2]) {
            Ok(s) => (self.metric.at(s.centroid) - element_metric(&s)).max_abs(),
            Err(_) => f64::INFINITY,
        }
    }

    fn tri_defect(&self, t: usize) -> f64 {
        self.defect(self.tris[t].map(|v| self.pts[v]))
    }

    fn in_band(l: f64) -> bool {
        (FRAC_1_SQRT_2..=SQRT_2).contains(&l)
    }

    fn polish_pass(&mut self) -> usize {
        let mut d: Vec<(f64, usize)> = (0..self.tris.len())
            .filter(|&t| !self.tdead[t])
            .map(|t| (self.tri_defect(t), t))
            .collect();
        d.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let Some(&(worst, _)) = d.first() else {
            return 0;
        };
        let mut count = 0;
        for (_, t) in d.into_iter().take_while(|&(x, _)| x > 0.5 * worst) {
            if self.tdead[t] {
                continue;
            }
            if self.polish_flip(t) || self.polish_move(t) {
                count += 1;
            }
        }
        count
    }

    fn polish_flip(&mut self, t: usize) -> bool {
        let tri = self.tris[t];
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let ts = self.edge_tris(a, b);
            if ts.len() != 2 {
                continue;
            }
            let other = if ts[0] == t { ts[1] } else { ts[0] };
            let c = tri[(k + 2) % 3];
            let d = *self.tris[other].iter().find(|&&v| v != a && v != b).unwrap();
            if self.vt[c].iter().any(|&x| self.tris[x].contains(&d)) {
                continue;
            }
            // tri = (a, b, c) counterclockwise, other = (b, a, d).
            let n1 = [a, d, c];
            let n2 = [d, b, c];
            let old = self.tri_defect(t).max(self.tri_defect(other));
            let new = self
                .defect(n1.map(|v| self.pts[v]))
                .max(self.defect(n2.map(|v| self.pts[v])));
            let lcd = self.mlen(c, d);
            if new < old && Self::in_band(lcd) {
                self.kill_tri(t);
                self.kill_tri(other);
                self.add_tri(n1);
                self.add_tri(n2);
                return true;
            }
        }
        false
    }

    /// Moves one vertex of `t` toward the position that makes `t` equilateral
    /// in the metric, if that lowers the largest defect around the vertex.
    fn polish_move(&mut self, t: usize) -> bool {
        let tri = self.tris[t];
        let p = tri.map(|v| self.pts[v]);
        let centroid = (p[0] + p[1] + p[2]) * (1.0 / 3.0);
        let g = self.metric.at(centroid);
        let half = g.map_eigen(f64::sqrt).as_mat();
        let inv_half = g.map_eigen(|l| 1.0 / l.sqrt()).as_mat();
        let mut best: Option<(f64, usize, Vec2)> = None;
        for k in 0..3 {
            let v = tri[k];
            if self.corner[v] {
                continue;
            }
            let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            // Apex of the metric-equilateral triangle on (a, b), on the left.
            let e = half.mul_vec(b - a);
            let apex = a.lerp(b, 0.5) + inv_half.mul_vec(e.perp() * (0.5 * 3f64.sqrt()));
            let nb = self.neighbors(v);
            let old = self.vt[v]
                .iter()
                .map(|&x| self.tri_defect(x))
                .fold(0.0, f64::max);
            for w in [1.0, 0.5, 0.25] {
                let mut q = p[k].lerp(apex, w);
                if self.boundary[v] {
                    q = match self.opts.shape {
                        DomainShape::Disc => self.opts.shape.project_to_boundary(q, (p[k], p[k])),
                        DomainShape::UnitSquare => match self.opts.shape.boundary_sides(p[k]) {
                            1 | 2 => Vec2::new(p[k].x, q.y.clamp(0.0, 1.0)),
                            4 | 8 => Vec2::new(q.x.clamp(0.0, 1.0), p[k].y),
                            _ => continue,
                        },
                    };
                }
                let new = self.vt[v]
                    .iter()
                    .map(|&x| self.defect(self.tris[x].map(|u| if u == v { q } else { self.pts[u] })))
                    .fold(0.0, f64::max);
                if !(new < old) || best.is_some_and(|(b, _, _)| new >= b) {
                    continue;
                }
                let gq = self.metric.at(q);
                let lgq = gq.log();
                let band_ok = nb.iter().all(|&j| {
                    let before = self.mlen(v, j);
                    let after = self.mlen_with(q, &gq, &lgq, self.pts[j], &self.g[j], &self.lg[j]);
                    Self::in_band(after) || !Self::in_band(before)
                });
                if band_ok {
                    best = Some((new, v, q));
                }
            }
        }
        if let Some((_, v, q)) = best {
            self.set_position(v, q);
            true
        } else {
            false
        }
    }

    fn finish(self) -> Result<TriMesh> {
        let mut map = vec![usize::MAX; self.pts.len()];
        let mut vertices = Vec::new();
        for v in 0..self.pts.len() {
            if !self.vdead[v] && !self.vt[v].is_empty() {
                map[v] = vertices.len();
                vertices.push(self.pts[v]);
            }
        }
        let triangles: Vec<[usize; 3]> = self
            .tris
            .iter()
            .zip(&self.tdead)
            .filter(|(_, d)| !**d)
            .map(|(t, _)| t.map(|v| map[v]))
            .collect();
        TriMesh::new(vertices, triangles)
            .map_err(|e| Error::Topology(format!("remeshing produced an invalid mesh: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_initial_mesh, DomainSpec};
    use crate::metric::{metric_conformity, FnMetric, UniformMetric};

    #[test]
    fn uniform_refinement_of_square() {
        let m = generate_initial_mesh(&DomainSpec {
            shape: DomainShape::UnitSquare,
            h: 0.25,
        })
        .unwrap();
        let h = 0.08;
        let metric = UniformMetric(Sym2::scalar(1.0 / (h * h)));
        let (out, rep) = adapt_mesh(&m, &metric, &AdaptOptions::new(DomainShape::UnitSquare, 0.01, 0.2)).unwrap();
        let med = out.median_edge_length();
        assert!((med - h).abs() < 0.25 * h, "median {med}, report {rep:?}");
        assert!(metric_conformity(&out, &metric) < metric_conformity(&m, &metric));
        assert!((out.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn anisotropic_uniform_metric_stretches_elements() {
        let m = generate_initial_mesh(&DomainSpec {
            shape: DomainShape::Disc,
            h: 0.1,
        })
        .unwrap();
        let (h_min, alpha) = (0.02, 12.0);
        let g = Sym2::new(1.0 / (h_min * h_min), 0.0, 1.0 / (alpha * h_min * h_min));
        let (out, rep) = adapt_mesh(&m, &UniformMetric(g), &AdaptOptions::new(DomainShape::Disc, h_min, 0.2)).unwrap();
        // Steiner ellipse axis ratio and orientation of each element.
        let mut ratios = Vec::new();
        let mut aligned = 0;
        for t in 0..out.n_triangles() {
            let [p0, p1, p2] = out.triangle_points(t);
            let e = steiner_polar(p0, p1, p2).unwrap().p.eigen();
            ratios.push(e.large / e.small);
            if e.major.y.abs() > 0.9 {
                aligned += 1;
            }
        }
        ratios.sort_by(f64::total_cmp);
        let ratio = ratios[ratios.len() / 2];
        assert!(aligned * 10 > out.n_triangles() * 8, "{aligned} aligned of {}", out.n_triangles());
        assert!((ratio - alpha.sqrt()).abs() < 0.4 * alpha.sqrt(), "ratio {ratio}, {rep:?}");
    }

    #[test]
    fn disc_boundary_stays_on_circle() {
        let m = generate_initial_mesh(&DomainSpec {
            shape: DomainShape::Disc,
            h: 0.2,
        })
        .unwrap();
        let metric = FnMetric(|p: Vec2| {
            let s = if p.x.abs() < 0.2 { 1.0 / 0.03f64.powi(2) } else { 1.0 / 0.12f64.powi(2) };
            Sym2::scalar(s)
        });
        let (out, _) = adapt_mesh(&m, &metric, &AdaptOptions::new(DomainShape::Disc, 0.03, 0.12)).unwrap();
        for v in 0..out.n_vertices() {
            if out.is_boundary(v) {
                assert!((out.vertex(v).norm() - 1.0).abs() < 1e-12);
            }
        }
        assert!(out.n_triangles() > m.n_triangles());
        assert!(out.min_quality() > 0.05);
    }

    #[test]
    fn square_corners_survive_coarsening() {
        let m = generate_initial_mesh(&DomainSpec {
            shape: DomainShape::UnitSquare,
            h: 0.05,
        })
        .unwrap();
        let (out, _) = adapt_mesh(&m, &UniformMetric(Sym2::scalar(4.0)), &AdaptOptions::new(DomainShape::UnitSquare, 0.01, 0.5)).unwrap();
        for c in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
            assert!(out.vertices().iter().any(|p| p.x == c.0 && p.y == c.1));
        }
        assert!(out.n_triangles() < m.n_triangles() / 4);
        assert!((out.total_area() - 1.0).abs() < 1e-12);
    }
}
