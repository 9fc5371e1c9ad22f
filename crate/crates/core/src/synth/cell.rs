use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use arc_swap::ArcSwap;

/// Single-slot hand-off between the control and audio contexts.
///
/// Writers replace the value; readers always see the most recent one. Reads
/// never block and never wait for a writer.
#[derive(Debug)]
pub struct LatestValue<T> {
    slot: ArcSwap<T>,
    version: AtomicU64,
}

impl<T> LatestValue<T> {
    pub fn new(initial: T) -> Self {
        Self {
            slot: ArcSwap::from_pointee(initial),
            version: AtomicU64::new(0),
        }
    }

    pub fn store(&self, value: T) {
        self.slot.store(Arc::new(value));
        self.version.fetch_add(1, Ordering::Release);
    }

    pub fn load(&self) -> Arc<T> {
        self.slot.load_full()
    }

    /// Number of stores so far; lets a reader skip work when nothing changed.
    pub fn version(&self) -> u64 {
        self.version.load(Ordering::Acquire)
    }
}

impl<T: Copy> LatestValue<T> {
    pub fn get(&self) -> T {
        **self.slot.load()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;

    #[test]
    fn latest_write_wins() {
        let cell = LatestValue::new(1);
        cell.store(2);
        cell.store(3);
        assert_eq!(cell.get(), 3);
        assert_eq!(cell.version(), 2);
    }

    #[test]
    fn concurrent_reader_sees_whole_values() {
        let cell = Arc::new(LatestValue::new([0u64; 16]));
        let writer = {
            let cell = Arc::clone(&cell);
            thread::spawn(move || {
                for i in 1..=2000u64 {
                    cell.store([i; 16]);
                }
            })
        };
        let mut last = 0;
        for _ in 0..2000 {
            let v = cell.get();
            // never torn, never goes backwards
            assert!(v.iter().all(|&x| x == v[0]));
            assert!(v[0] >= last);
            last = v[0];
        }
        writer.join().unwrap();
        assert_eq!(cell.get(), [2000; 16]);
    }
}
