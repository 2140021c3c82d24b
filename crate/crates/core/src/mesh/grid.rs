//! Uniform background grid used to bucket elements, nodes and boundary edges.

use crate::geometry::{BoundingBox, Point};

#[derive(Debug, Clone)]
pub(crate) struct UniformGrid {
    origin: Point,
    cell_w: f64,
    cell_h: f64,
    nx: usize,
    ny: usize,
    /// CSR layout: items of cell c are `items[starts[c]..starts[c + 1]]`, ascending.
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl UniformGrid {
    fn empty(bbox: BoundingBox, target_cells: usize) -> Self {
        let w = bbox.width().max(bbox.diagonal() * 1e-6).max(f64::MIN_POSITIVE);
        let h = bbox.height().max(bbox.diagonal() * 1e-6).max(f64::MIN_POSITIVE);
        let target = target_cells.max(1) as f64;
        let nx = ((target * w / h).sqrt().ceil() as usize).clamp(1, 4096);
        let ny = ((target * h / w).sqrt().ceil() as usize).clamp(1, 4096);
        UniformGrid {
            origin: bbox.min,
            cell_w: w / nx as f64,
            cell_h: h / ny as f64,
            nx,
            ny,
            starts: vec![0; nx * ny + 1],
            items: Vec::new(),
        }
    }

    fn finish(&mut self, buckets: Vec<Vec<usize>>) {
        let mut starts = Vec::with_capacity(buckets.len() + 1);
        let mut items = Vec::new();
        starts.push(0);
        for b in buckets {
            items.extend(b);
            starts.push(items.len());
        }
        self.starts = starts;
        self.items = items;
    }

    /// Buckets `count` items by their bounding boxes.
    pub(crate) fn build(
        bbox: BoundingBox,
        target_cells: usize,
        count: usize,
        item_box: impl Fn(usize) -> BoundingBox,
    ) -> Self {
        let mut grid = Self::empty(bbox, target_cells);
        let mut buckets = vec![Vec::new(); grid.nx * grid.ny];
        for k in 0..count {
            let bb = item_box(k);
            let (i0, j0) = grid.cell_of(bb.min);
            let (i1, j1) = grid.cell_of(bb.max);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * grid.nx + i].push(k);
                }
            }
        }
        grid.finish(buckets);
        grid
    }

    /// Buckets `count` segments into every cell they pass within `margin` of.
    pub(crate) fn build_segments(
        bbox: BoundingBox,
        target_cells: usize,
        count: usize,
        margin: f64,
        segment: impl Fn(usize) -> (Point, Point),
    ) -> Self {
        let mut grid = Self::empty(bbox, target_cells);
        let mut buckets = vec![Vec::new(); grid.nx * grid.ny];
        for k in 0..count {
            let (a, b) = segment(k);
            grid.visit_segment(a, b, margin, |c| {
                buckets[c].push(k);
                false
            });
        }
        grid.finish(buckets);
        grid
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let fi = ((p.x - self.origin.x) / self.cell_w).floor();
        let fj = ((p.y - self.origin.y) / self.cell_h).floor();
        let i = if fi.is_nan() { 0.0 } else { fi.clamp(0.0, (self.nx - 1) as f64) };
        let j = if fj.is_nan() { 0.0 } else { fj.clamp(0.0, (self.ny - 1) as f64) };
        (i as usize, j as usize)
    }

    pub(crate) fn cell(&self, c: usize) -> &[usize] {
        &self.items[self.starts[c]..self.starts[c + 1]]
    }

    pub(crate) fn items_at(&self, p: Point) -> &[usize] {
        let (i, j) = self.cell_of(p);
        self.cell(j * self.nx + i)
    }

    /// Calls `visit` for every cell within `margin` of the segment [a, b].
    /// Stops early when `visit` returns true.
    pub(crate) fn visit_segment(&self, a: Point, b: Point, margin: f64, mut visit: impl FnMut(usize) -> bool) {
        let x0 = a.x.min(b.x) - margin;
        let x1 = a.x.max(b.x) + margin;
        let (i0, _) = self.cell_of(Point::new(x0, a.y));
        let (i1, _) = self.cell_of(Point::new(x1, a.y));
        let dx = b.x - a.x;
        for i in i0..=i1 {
            let cx0 = (self.origin.x + i as f64 * self.cell_w).max(x0) - margin;
            let cx1 = (self.origin.x + (i + 1) as f64 * self.cell_w).min(x1) + margin;
            let (ylo, yhi) = if dx.abs() <= f64::EPSILON * (a.x.abs() + b.x.abs() + 1.0) {
                (a.y.min(b.y), a.y.max(b.y))
            } else {
                let s0 = ((cx0 - a.x) / dx).clamp(0.0, 1.0);
                let s1 = ((cx1 - a.x) / dx).clamp(0.0, 1.0);
                let y0 = a.y + (b.y - a.y) * s0;
                let y1 = a.y + (b.y - a.y) * s1;
                (y0.min(y1), y0.max(y1))
            };
            let (_, j0) = self.cell_of(Point::new(a.x, ylo - margin));
            let (_, j1) = self.cell_of(Point::new(a.x, yhi + margin));
            for j in j0..=j1 {
                if visit(j * self.nx + i) {
                    return;
                }
            }
        }
    }
}
