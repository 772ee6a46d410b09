use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimiterConfig {
    /// Requests in flight at once.
    pub concurrency: usize,
    /// Requests started per rolling minute; 0 means unlimited.
    pub requests_per_minute: u32,
}

impl Default for LimiterConfig {
    fn default() -> Self {
        Self {
            concurrency: 4,
            requests_per_minute: 0,
        }
    }
}

#[derive(Debug)]
struct State {
    in_flight: usize,
    started: VecDeque<Instant>,
}

/// Bounds concurrency and request rate for one backend. Callers past the
/// limit block until a slot frees up.
#[derive(Debug)]
pub struct Limiter {
    config: LimiterConfig,
    window: Duration,
    state: Mutex<State>,
    freed: Condvar,
}

/// Releases the slot on drop.
#[derive(Debug)]
pub struct Permit<'a> {
    limiter: &'a Limiter,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut s = self.limiter.state.lock().expect("limiter lock");
        s.in_flight -= 1;
        self.limiter.freed.notify_one();
    }
}

impl Limiter {
    pub fn new(config: LimiterConfig) -> Self {
        Self::with_window(config, Duration::from_secs(60))
    }

    /// A limiter whose rate window is `window` instead of a minute.
    pub fn with_window(config: LimiterConfig, window: Duration) -> Self {
        Self {
            config: LimiterConfig {
                concurrency: config.concurrency.max(1),
                ..config
            },
            window,
            state: Mutex::new(State {
                in_flight: 0,
                started: VecDeque::new(),
            }),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut s = self.state.lock().expect("limiter lock");
        loop {
            let now = Instant::now();
            while s.started.front().is_some_and(|t| now.duration_since(*t) >= self.window) {
                s.started.pop_front();
            }
            let rate_ok =
                self.config.requests_per_minute == 0 || s.started.len() < self.config.requests_per_minute as usize;
            if s.in_flight < self.config.concurrency && rate_ok {
                s.in_flight += 1;
                s.started.push_back(now);
                return Permit { limiter: self };
            }
            let wait = if rate_ok {
                self.window
            } else {
                self.window
                    .saturating_sub(now.duration_since(*s.started.front().expect("window full")))
            };
            s = self.freed.wait_timeout(s, wait).expect("limiter lock").0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn concurrency_bound() {
        let l = Arc::new(Limiter::new(LimiterConfig {
            concurrency: 2,
            requests_per_minute: 0,
        }));
        let live = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        std::thread::scope(|s| {
            for _ in 0..8 {
                let (l, live, peak) = (l.clone(), live.clone(), peak.clone());
                s.spawn(move || {
                    let _p = l.acquire();
                    let n = live.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(n, Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(10));
                    live.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        assert_eq!(peak.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn rate_bound() {
        let l = Limiter::with_window(
            LimiterConfig {
                concurrency: 8,
                requests_per_minute: 3,
            },
            Duration::from_millis(100),
        );
        let start = Instant::now();
        for _ in 0..4 {
            drop(l.acquire());
        }
        assert!(start.elapsed() >= Duration::from_millis(95));
    }
}
