/// Receives one tick per multiply-accumulate performed by a kernel.
///
/// Kernels are generic over the counter; [`NoCount`] compiles away.
pub trait MacCounter {
    fn tick(&mut self);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NoCount;

impl MacCounter for NoCount {
    #[inline(always)]
    fn tick(&mut self) {}
}

/// Running total of multiply-accumulates.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct MacTally(pub u64);

impl MacCounter for MacTally {
    #[inline]
    fn tick(&mut self) {
        self.0 += 1;
    }
}
