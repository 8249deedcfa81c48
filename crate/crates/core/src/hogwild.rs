//! Lock-free shared parameter matrices for asynchronous SGD.
//!
//! Workers read and write rows without mutual exclusion; concurrent updates
//! to the same row race benignly and correctness is statistical. With a
//! single worker no aliasing occurs and results are deterministic.

use std::marker::PhantomData;

/// Row-major matrix handed out as raw rows across worker threads.
pub(crate) struct SharedMatrix<'a> {
    ptr: *mut f32,
    rows: usize,
    dim: usize,
    _owner: PhantomData<&'a mut [f32]>,
}

unsafe impl Send for SharedMatrix<'_> {}
unsafe impl Sync for SharedMatrix<'_> {}

impl<'a> SharedMatrix<'a> {
    pub fn new(data: &'a mut [f32], dim: usize) -> Self {
        assert_eq!(data.len() % dim, 0);
        SharedMatrix {
            ptr: data.as_mut_ptr(),
            rows: data.len() / dim,
            dim,
            _owner: PhantomData,
        }
    }

    /// Mutable view of one row. Callers on different threads may hold the
    /// same row simultaneously; torn or lost updates are accepted.
    #[allow(clippy::mut_from_ref)]
    #[inline]
    pub unsafe fn row(&self, r: usize) -> &mut [f32] {
        debug_assert!(r < self.rows);
        std::slice::from_raw_parts_mut(self.ptr.add(r * self.dim), self.dim)
    }
}
