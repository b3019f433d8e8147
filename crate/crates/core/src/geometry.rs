//! Box and zone geometry primitives.

/// Axis-aligned detection box, top-left corner plus extent, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        debug_assert!(w > 0.0 && h > 0.0, "box extent must be positive");
        Self { x, y, w, h }
    }

    pub fn is_valid(&self) -> bool {
        self.w > 0.0
            && self.h > 0.0
            && self.x.is_finite()
            && self.y.is_finite()
            && self.w.is_finite()
            && self.h.is_finite()
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Center point, used as the zone-membership position of a detection.
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn x_max(&self) -> f64 {
        self.x + self.w
    }

    pub fn y_max(&self) -> f64 {
        self.y + self.h
    }
}

/// Axis-aligned rectangle given by its corner coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        debug_assert!(x_min <= x_max && y_min <= y_max);
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    /// Degenerate rectangle covering a single point.
    pub fn point(x: f64, y: f64) -> Self {
        Self::new(x, y, x, y)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Grow the rectangle to cover the point.
    pub fn expand(&mut self, x: f64, y: f64) {
        self.x_min = self.x_min.min(x);
        self.y_min = self.y_min.min(y);
        self.x_max = self.x_max.max(x);
        self.y_max = self.y_max.max(y);
    }
}

fn interval_overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Intersection-over-union of two boxes. Degenerate overlap yields 0.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = interval_overlap(a.x, a.x_max(), b.x, b.x_max());
    let iy = interval_overlap(a.y, a.y_max(), b.y, b.y_max());
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Fraction of the box area covered by the zone rectangle.
pub fn overlap_ratio(box_: &BoundingBox, zone: &Rect) -> f64 {
    let ix = interval_overlap(box_.x, box_.x_max(), zone.x_min, zone.x_max);
    let iy = interval_overlap(box_.y, box_.y_max(), zone.y_min, zone.y_max);
    let area = box_.area();
    if area <= 0.0 {
        0.0
    } else {
        (ix * iy) / area
    }
}
