use std::collections::VecDeque;

/// A delay expressed as a whole number of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleDelay {
    pub samples: usize,
    pub dt: f64,
    /// The delay that was asked for before rounding.
    pub requested: f64,
}

impl SampleDelay {
    /// Rounds `seconds` to the nearest multiple of `dt`, at least one sample.
    pub fn from_seconds(seconds: f64, dt: f64) -> Self {
        let samples = ((seconds / dt).round() as usize).max(1);
        Self {
            samples,
            dt,
            requested: seconds,
        }
    }

    pub fn seconds(&self) -> f64 {
        self.samples as f64 * self.dt
    }

    pub fn rounding_error(&self) -> f64 {
        self.seconds() - self.requested
    }
}

/// Uniformly sampled history of the measured output, newest last.
#[derive(Debug, Clone)]
pub struct DelayLine {
    dt: f64,
    capacity: usize,
    buf: VecDeque<f64>,
}

impl DelayLine {
    pub fn new(dt: f64, capacity: usize) -> Self {
        Self {
            dt,
            capacity: capacity.max(1),
            buf: VecDeque::with_capacity(capacity.max(1)),
        }
    }

    /// Sized to serve `y(t - 3*tau)`.
    pub fn for_delay(delay: SampleDelay) -> Self {
        Self::new(delay.dt, 3 * delay.samples + 1)
    }

    pub fn push(&mut self, y: f64) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(y);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `y(t - lag*dt)` where `t` is the newest sample.
    pub fn tap(&self, lag: usize) -> Option<f64> {
        let n = self.buf.len();
        if lag >= n {
            None
        } else {
            Some(self.buf[n - 1 - lag])
        }
    }

    pub fn spans(&self, lag: usize) -> bool {
        lag < self.buf.len()
    }
}
