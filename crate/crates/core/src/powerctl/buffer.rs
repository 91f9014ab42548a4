use std::collections::VecDeque;

/// Delayed, scaled readout of a piecewise-constant command.
///
/// Each command is scheduled at the sample it was issued plus the delay in
/// force at that moment, so a later delay change never moves commands that
/// were already issued.
#[derive(Debug, Clone)]
pub struct CommandBuffer {
    gain: f64,
    delay: usize,
    pending: VecDeque<(u64, f64)>,
    active: f64,
}

impl CommandBuffer {
    pub fn new(gain: f64, delay_samples: usize) -> Self {
        Self {
            gain,
            delay: delay_samples,
            pending: VecDeque::new(),
            active: 0.0,
        }
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn set_delay(&mut self, samples: usize) {
        self.delay = samples;
    }

    /// Schedules `u_prime` issued at sample `n`. Activation order follows
    /// issue order: a command never overtakes one issued before it.
    pub fn issue(&mut self, n: u64, u_prime: f64) {
        let mut at = n + self.delay as u64;
        if let Some(&(last, _)) = self.pending.back() {
            at = at.max(last);
        }
        self.pending.push_back((at, u_prime));
    }

    /// `K * u'(n - T)`.
    pub fn output(&mut self, n: u64) -> f64 {
        while let Some(&(at, v)) = self.pending.front() {
            if at > n {
                break;
            }
            self.active = v;
            self.pending.pop_front();
        }
        self.gain * self.active
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }
}
