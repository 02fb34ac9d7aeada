/// Fixed-capacity history of vectors, newest first, zero-padded.
///
/// Entries live in a buffer with one extra capacity of slack so the newest
/// `capacity` entries are always one contiguous slice; pushing is amortised
/// O(dim).
#[derive(Clone, Debug)]
pub struct History {
    dim: usize,
    cap: usize,
    buf: Vec<f64>,
    start: usize,
    len: usize,
}

impl History {
    pub fn new(dim: usize, capacity: usize) -> Self {
        let cap = capacity.max(1);
        History { dim, cap, buf: vec![0.0; 2 * cap * dim], start: cap, len: 0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn capacity(&self) -> usize {
        self.cap
    }

    /// Number of real (non-padding) entries seen, saturating at capacity.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, v: &[f64]) {
        debug_assert_eq!(v.len(), self.dim);
        if self.dim == 0 {
            self.len = (self.len + 1).min(self.cap);
            return;
        }
        if self.start == 0 {
            // relocate the newest cap−1 entries to the back half
            let keep = (self.cap - 1) * self.dim;
            let dst = (self.cap + 1) * self.dim;
            self.buf.copy_within(0..keep, dst);
            self.start = self.cap + 1;
        }
        self.start -= 1;
        let o = self.start * self.dim;
        self.buf[o..o + self.dim].copy_from_slice(v);
        self.len = (self.len + 1).min(self.cap);
    }

    /// The newest `capacity` entries, newest first, flattened; never-written slots are zero.
    pub fn window(&self) -> &[f64] {
        let o = self.start * self.dim;
        &self.buf[o..o + self.cap * self.dim]
    }

    /// Entry `k` steps back (0 = newest); zero vector if never written.
    pub fn get(&self, k: usize) -> &[f64] {
        let o = (self.start + k) * self.dim;
        &self.buf[o..o + self.dim]
    }

    pub fn clear(&mut self) {
        self.buf.iter_mut().for_each(|x| *x = 0.0);
        self.start = self.cap;
        self.len = 0;
    }
}
