use super::TriMesh;
use crate::geom::Vec2;

/// Uniform bucket grid over triangle bounding boxes for point location.
#[derive(Debug, Clone)]
pub struct PointLocator {
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    offsets: Vec<usize>,
    items: Vec<u32>,
}

const INSIDE_TOL: f64 = 1e-12;

impl PointLocator {
    pub fn new(mesh: &TriMesh) -> Self {
        let (mut lo, mut hi) = (
            Vec2::new(f64::INFINITY, f64::INFINITY),
            Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in mesh.vertices() {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let (w, h) = ((hi.x - lo.x).max(1e-300), (hi.y - lo.y).max(1e-300));
        let target = (mesh.n_triangles() as f64).sqrt().max(1.0);
        let cell = (w.max(h) / target).max(1e-300);
        let nx = ((w / cell).ceil() as usize).max(1);
        let ny = ((h / cell).ceil() as usize).max(1);

        let boxes: Vec<(usize, usize, usize, usize)> = (0..mesh.n_triangles())
            .map(|t| {
                let pts = mesh.triangle_points(t);
                let (mut a, mut b) = (pts[0], pts[0]);
                for p in &pts[1..] {
                    a = Vec2::new(a.x.min(p.x), a.y.min(p.y));
                    b = Vec2::new(b.x.max(p.x), b.y.max(p.y));
                }
                let ci = |v: f64, o: f64, n: usize| (((v - o) / cell).floor().max(0.0) as usize).min(n - 1);
                (ci(a.x, lo.x, nx), ci(b.x, lo.x, nx), ci(a.y, lo.y, ny), ci(b.y, lo.y, ny))
            })
            .collect();
        let mut offsets = vec![0usize; nx * ny + 1];
        for &(i0, i1, j0, j1) in &boxes {
            for j in j0..=j1 {
                for i in i0..=i1 {
                    offsets[j * nx + i + 1] += 1;
                }
            }
        }
        for k in 0..nx * ny {
            offsets[k + 1] += offsets[k];
        }
        let mut fill = offsets.clone();
        let mut items = vec![0u32; offsets[nx * ny]];
        for (t, &(i0, i1, j0, j1)) in boxes.iter().enumerate() {
            for j in j0..=j1 {
                for i in i0..=i1 {
                    items[fill[j * nx + i]] = t as u32;
                    fill[j * nx + i] += 1;
                }
            }
        }
        PointLocator {
            origin: lo,
            cell,
            nx,
            ny,
            offsets,
            items,
        }
    }

    fn cell_of(&self, p: Vec2) -> (isize, isize) {
        (
            ((p.x - self.origin.x) / self.cell).floor() as isize,
            ((p.y - self.origin.y) / self.cell).floor() as isize,
        )
    }

    fn bucket(&self, i: isize, j: isize) -> &[u32] {
        if i < 0 || j < 0 || i as usize >= self.nx || j as usize >= self.ny {
            return &[];
        }
        let k = j as usize * self.nx + i as usize;
        &self.items[self.offsets[k]..self.offsets[k + 1]]
    }

    /// Returns the triangle containing `p` and its barycentric coordinates,
    /// or `None` when `p` lies outside the mesh.
    pub fn locate(&self, mesh: &TriMesh, p: Vec2) -> Option<(usize, [f64; 3])> {
        let (i, j) = self.cell_of(p);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in self.bucket(i, j) {
            let l = mesh.barycentric(t as usize, p);
            let worst = l[0].min(l[1]).min(l[2]);
            if worst >= -INSIDE_TOL && best.as_ref().is_none_or(|b| worst > b.2) {
                best = Some((t as usize, l, worst));
            }
        }
        best.map(|(t, l, _)| (t, l))
    }

    /// Like [`PointLocator::locate`] but falls back to the closest triangle,
    /// returning barycentric coordinates of the closest point on it.
    pub fn locate_nearest(&self, mesh: &TriMesh, p: Vec2) -> (usize, [f64; 3]) {
        if let Some(hit) = self.locate(mesh, p) {
            return hit;
        }
        let (ci, cj) = self.cell_of(p);
        let mut best: Option<(usize, Vec2, f64)> = None;
        let max_ring = self.nx.max(self.ny) as isize + ci.abs().max(cj.abs()) + 1;
        for r in 0..=max_ring {
            for j in cj - r..=cj + r {
                for i in ci - r..=ci + r {
                    if (i - ci).abs() != r && (j - cj).abs() != r {
                        continue;
                    }
                    for &t in self.bucket(i, j) {
                        let [a, b, c] = mesh.triangle_points(t as usize);
                        let q = closest_on_triangle(p, a, b, c);
                        let d = (q - p).norm();
                        if best.as_ref().is_none_or(|bb| d < bb.2) {
                            best = Some((t as usize, q, d));
                        }
                    }
                }
            }
            if let Some((_, _, d)) = best {
                if (r as f64 - 1.0) * self.cell > d {
                    break;
                }
            }
        }
        let (t, q, _) = best.expect("mesh has at least one triangle");
        let mut l = mesh.barycentric(t, q);
        for x in &mut l {
            *x = x.max(0.0);
        }
        let s = l[0] + l[1] + l[2];
        (t, [l[0] / s, l[1] / s, l[2] / s])
    }
}

fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let d = b - a;
    let t = ((p - a).dot(d) / d.norm2()).clamp(0.0, 1.0);
    a + d * t
}

fn closest_on_triangle(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> Vec2 {
    let o = crate::geom::orient2d;
    if o(a, b, p) >= 0.0 && o(b, c, p) >= 0.0 && o(c, a, p) >= 0.0 {
        return p;
    }
    [
        closest_on_segment(p, a, b),
        closest_on_segment(p, b, c),
        closest_on_segment(p, c, a),
    ]
    .into_iter()
    .min_by(|x, y| (*x - p).norm2().total_cmp(&(*y - p).norm2()))
    .unwrap()
}
