//! Flat parameter storage with named segments.
//!
//! All trainable tensors of a model live in one `Vec<f64>`; layers address
//! their weights through [`SegId`] handles. One flat vector means the Adam
//! state, the gradient buffer, finite-difference checks and the on-disk
//! binary format all share the same declared ordering.

use serde::{Deserialize, Serialize};

/// Handle to one named segment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SegId(usize);

/// Shape and placement of one segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub len: usize,
}

/// Declared parameter layout.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub segments: Vec<Segment>,
    pub total: usize,
}

impl ParamLayout {
    pub fn seg(&self, id: SegId) -> &Segment {
        &self.segments[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<SegId> {
        self.segments.iter().position(|s| s.name == name).map(SegId)
    }
}

/// Builder that hands out segment ids in declaration order.
#[derive(Debug, Default)]
pub struct LayoutBuilder {
    layout: ParamLayout,
}

impl LayoutBuilder {
    pub fn new() -> LayoutBuilder {
        LayoutBuilder::default()
    }

    pub fn add(&mut self, name: impl Into<String>, shape: &[usize]) -> SegId {
        let len: usize = shape.iter().product();
        let seg = Segment {
            name: name.into(),
            shape: shape.to_vec(),
            offset: self.layout.total,
            len,
        };
        self.layout.total += len;
        self.layout.segments.push(seg);
        SegId(self.layout.segments.len() - 1)
    }

    pub fn finish(self) -> ParamLayout {
        self.layout
    }
}

/// The flat parameter vector plus its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    pub layout: ParamLayout,
    pub data: Vec<f64>,
}

impl ParamStore {
    pub fn zeros(layout: ParamLayout) -> ParamStore {
        let data = vec![0.0; layout.total];
        ParamStore { layout, data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn seg(&self, id: SegId) -> &[f64] {
        let s = self.layout.seg(id);
        &self.data[s.offset..s.offset + s.len]
    }

    pub fn seg_mut(&mut self, id: SegId) -> &mut [f64] {
        let s = self.layout.seg(id);
        let (offset, len) = (s.offset, s.len);
        &mut self.data[offset..offset + len]
    }

    /// Matrix row within a segment whose shape is `[rows, cols]`.
    pub fn row(&self, id: SegId, r: usize) -> &[f64] {
        let s = self.layout.seg(id);
        let cols = *s.shape.last().expect("matrix segment");
        &self.data[s.offset + r * cols..s.offset + (r + 1) * cols]
    }
}

/// Gradient buffer over the same layout.
#[derive(Debug, Clone)]
pub struct GradBuffer {
    pub data: Vec<f64>,
}

impl GradBuffer {
    pub fn zeros(layout: &ParamLayout) -> GradBuffer {
        GradBuffer { data: vec![0.0; layout.total] }
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn seg_mut(&mut self, layout: &ParamLayout, id: SegId) -> &mut [f64] {
        let s = layout.seg(id);
        &mut self.data[s.offset..s.offset + s.len]
    }

    pub fn row_mut(&mut self, layout: &ParamLayout, id: SegId, r: usize) -> &mut [f64] {
        let s = layout.seg(id);
        let cols = *s.shape.last().expect("matrix segment");
        &mut self.data[s.offset + r * cols..s.offset + (r + 1) * cols]
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|g| *g *= factor);
    }

    pub fn add_from(&mut self, other: &GradBuffer) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_are_contiguous_and_ordered() {
        let mut b = LayoutBuilder::new();
        let w = b.add("w", &[3, 4]);
        let bias = b.add("b", &[4]);
        let layout = b.finish();
        assert_eq!(layout.total, 16);
        assert_eq!(layout.seg(w).offset, 0);
        assert_eq!(layout.seg(bias).offset, 12);
        assert_eq!(layout.by_name("b"), Some(bias));

        let mut store = ParamStore::zeros(layout);
        store.seg_mut(w)[11] = 2.5;
        store.seg_mut(bias)[0] = 1.5;
        assert_eq!(store.data[11], 2.5);
        assert_eq!(store.data[12], 1.5);
        assert_eq!(store.row(w, 2), &[0.0, 0.0, 0.0, 2.5]);
    }
}
