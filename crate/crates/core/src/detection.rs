use std::cmp::Ordering;

use crate::imgcore::Rect;

/// A scored window in frame coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detection {
    pub rect: Rect,
    pub score: f64,
}

impl Detection {
    pub fn new(rect: Rect, score: f64) -> Self {
        Self { rect, score }
    }
}

/// Canonical detection order: score descending, then `y`, then `x`.
pub fn detection_order(a: &Detection, b: &Detection) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.rect.y.cmp(&b.rect.y))
        .then(a.rect.x.cmp(&b.rect.x))
        .then(a.rect.w.cmp(&b.rect.w))
        .then(a.rect.h.cmp(&b.rect.h))
}

/// Greedy non-maximum suppression.
///
/// Keeps the best remaining detection and drops every other one whose IoU
/// with it is strictly greater than `iou_thresh`. Output is in
/// [`detection_order`].
pub fn nms(dets: &[Detection], iou_thresh: f64) -> Vec<Detection> {
    let mut order = dets.to_vec();
    order.sort_by(detection_order);
    let mut suppressed = vec![false; order.len()];
    let mut keep = Vec::new();
    for i in 0..order.len() {
        if suppressed[i] {
            continue;
        }
        keep.push(order[i]);
        for j in i + 1..order.len() {
            if !suppressed[j] && order[i].rect.iou(&order[j].rect) > iou_thresh {
                suppressed[j] = true;
            }
        }
    }
    keep
}
