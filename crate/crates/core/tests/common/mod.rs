//! Independent reference computations for the integration tests. Nothing
//! here calls into the library's numerics.

#![allow(dead_code)]

#[derive(Debug, Clone, Copy)]
pub struct Rates {
    pub beta: f64,
    pub gamma: f64,
    pub u_max: f64,
    pub icu: f64,
}

impl Rates {
    pub fn italy() -> Self {
        Self { beta: 0.2142, gamma: 0.0714, u_max: 0.135, icu: 0.0031 }
    }

    pub fn delta() -> Self {
        Self { beta: 0.5, gamma: 0.0714, u_max: 0.315, icu: 0.021 }
    }

    pub fn herd(&self) -> f64 {
        self.gamma / self.beta
    }

    pub fn rho(&self) -> f64 {
        self.gamma / (self.beta - self.u_max)
    }
}

fn field(r: &Rates, u: f64, s: f64, i: f64) -> (f64, f64) {
    let flow = (r.beta - u) * s * i;
    (-flow, flow - r.gamma * i)
}

/// Classical RK4 step for a constant control.
pub fn rk4(r: &Rates, u: f64, s: f64, i: f64, h: f64) -> (f64, f64) {
    let k1 = field(r, u, s, i);
    let k2 = field(r, u, s + 0.5 * h * k1.0, i + 0.5 * h * k1.1);
    let k3 = field(r, u, s + 0.5 * h * k2.0, i + 0.5 * h * k2.1);
    let k4 = field(r, u, s + h * k3.0, i + h * k3.1);
    (s + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0), i + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1))
}

/// Running state of a reference integration.
#[derive(Debug, Clone, Copy)]
pub struct Walker {
    pub t: f64,
    pub s: f64,
    pub i: f64,
    /// Integral of `lambda1 u + lambda2 i` so far.
    pub cost: f64,
    pub peak: f64,
}

impl Walker {
    pub fn new(s: f64, i: f64) -> Self {
        Self { t: 0.0, s, i, cost: 0.0, peak: i }
    }

    /// Advances by `duration` under constant `u` in steps of at most `step`;
    /// the running cost uses Simpson's rule on each step.
    pub fn advance(&mut self, r: &Rates, weights: (f64, f64), u: f64, duration: f64, step: f64) {
        if duration <= 0.0 {
            return;
        }
        let n = (duration / step).ceil().max(1.0) as usize;
        let h = duration / n as f64;
        for _ in 0..n {
            let (_, im) = rk4(r, u, self.s, self.i, 0.5 * h);
            let (sn, inn) = rk4(r, u, self.s, self.i, h);
            self.cost += weights.0 * u * h + weights.1 * h / 6.0 * (self.i + 4.0 * im + inn);
            self.s = sn;
            self.i = inn;
            self.peak = self.peak.max(inn);
        }
        self.t += duration;
    }
}

/// Limit of `s` under zero control: the root below `gamma/beta` of
/// `x - h ln x = s + i - h ln s`.
pub fn final_susceptible(r: &Rates, s: f64, i: f64) -> f64 {
    let h = r.herd();
    let g = |x: f64| (x - s) - h * (x / s).ln() - i;
    let (mut lo, mut hi) = (1e-300_f64, h.min(s));
    for _ in 0..400 {
        let mid = if lo > 0.0 && hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Integral of `i` over an uncontrolled future.
pub fn tail_integral(r: &Rates, s: f64, i: f64) -> f64 {
    (s + i - final_susceptible(r, s, i)) / r.gamma
}

/// Largest future `i` under constant control `u` from `(s, i)`.
pub fn peak_under(r: &Rates, u: f64, s: f64, i: f64) -> f64 {
    let level = r.gamma / (r.beta - u);
    if s <= level {
        i
    } else {
        i + s - level - level * (s / level).ln()
    }
}

/// Integral of `i` under zero control from `(s, i)` by RK4 quadrature.
pub fn tail_by_quadrature(r: &Rates, s: f64, i: f64, t_end: f64, step: f64) -> f64 {
    let mut w = Walker::new(s, i);
    w.advance(r, (0.0, 1.0), 0.0, t_end, step);
    w.cost
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKnobs {
    BangBang { start: f64, end: f64 },
    Boundary { onset: f64, on_line: f64, post: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct GridOptimum {
    pub cost: f64,
    pub knobs: GridKnobs,
}

pub struct GridSearch {
    pub rates: Rates,
    pub lambda1: f64,
    pub lambda2: f64,
    pub s0: f64,
    pub i0: f64,
    /// Knob spacing, days.
    pub spacing: f64,
    /// Integration step inside the sweeps, days.
    pub step: f64,
    /// Longest lockdown considered, days.
    pub max_lockdown: f64,
    /// Longest second lockdown after the boundary arc, days.
    pub max_post: f64,
    pub feasibility_tol: f64,
}

impl GridSearch {
    fn weights(&self) -> (f64, f64) {
        (self.lambda1, self.lambda2)
    }

    /// Cost of stopping all control at the walker's position, or `None`
    /// when the remaining epidemic breaks the ICU bound.
    fn close(&self, w: &Walker) -> Option<f64> {
        let r = &self.rates;
        let peak = w.peak.max(peak_under(r, 0.0, w.s, w.i));
        if peak > r.icu + self.feasibility_tol {
            return None;
        }
        let tail = if self.lambda2 == 0.0 { 0.0 } else { self.lambda2 * tail_integral(r, w.s, w.i) };
        Some(w.cost + tail)
    }

    fn offer(best: &mut Option<GridOptimum>, cost: Option<f64>, knobs: GridKnobs) {
        if let Some(cost) = cost {
            if best.is_none_or(|b| cost < b.cost) {
                *best = Some(GridOptimum { cost, knobs });
            }
        }
    }

    /// Every `0 - u_max - 0` control with both switches on the grid.
    pub fn bang_bang(&self) -> Option<GridOptimum> {
        let r = self.rates;
        let g = self.spacing;
        let mut best = None;
        let mut free = Walker::new(self.s0, self.i0);
        Self::offer(&mut best, self.close(&free), GridKnobs::BangBang { start: 0.0, end: 0.0 });
        loop {
            if free.peak > r.icu + self.feasibility_tol {
                break;
            }
            let start = free.t;
            let mut locked = free;
            let mut k = 0;
            while (k as f64) * g < self.max_lockdown {
                locked.advance(&r, self.weights(), r.u_max, g, self.step);
                k += 1;
                if locked.peak > r.icu + self.feasibility_tol {
                    break;
                }
                Self::offer(&mut best, self.close(&locked), GridKnobs::BangBang { start, end: locked.t });
            }
            if start > self.max_lockdown {
                break;
            }
            free.advance(&r, self.weights(), 0.0, g, self.step);
        }
        best
    }

    /// Lockdown start at which a full lockdown just touches the ICU level,
    /// found by bisection on simulated free arcs.
    pub fn saturating_onset(&self) -> f64 {
        let r = self.rates;
        let peak_if_locked_at = |t: f64| {
            let mut w = Walker::new(self.s0, self.i0);
            w.advance(&r, (0.0, 0.0), 0.0, t, 1e-3);
            w.peak.max(peak_under(&r, r.u_max, w.s, w.i))
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while peak_if_locked_at(hi) < r.icu {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if peak_if_locked_at(mid) < r.icu {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Boundary-arc controls: the lockdown starts at the saturating onset,
    /// holds `u_max` until `s = gamma/(beta - u_max)`, rides the ICU line for
    /// a grid number of days (closed form), adds a grid-length second
    /// lockdown, then stops.
    pub fn boundary(&self) -> Option<GridOptimum> {
        let r = self.rates;
        let g = self.spacing;
        let onset = self.saturating_onset();
        let mut w = Walker::new(self.s0, self.i0);
        w.advance(&r, self.weights(), 0.0, onset, 1e-3);
        // Full lockdown until s reaches rho, last step cut by bisection.
        let rho = r.rho();
        let h = 1e-3;
        loop {
            let (sn, _) = rk4(&r, r.u_max, w.s, w.i, h);
            if sn <= rho {
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if rk4(&r, r.u_max, w.s, w.i, mid).0 > rho {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                w.advance(&r, self.weights(), r.u_max, 0.5 * (lo + hi), 1.0);
                break;
            }
            w.advance(&r, self.weights(), r.u_max, h, h);
        }
        let entry = w;
        let budget = (entry.s - r.herd()) / (r.gamma * r.icu);
        let mut best = None;
        let mut k = 0;
        while (k as f64) * g <= budget {
            let on_line = k as f64 * g;
            let s_end = entry.s - r.gamma * r.icu * on_line;
            let control = r.beta * on_line - (entry.s / s_end).ln() / r.icu;
            let mut start = entry;
            start.t += on_line;
            start.s = s_end;
            start.i = r.icu;
            start.peak = entry.peak.max(r.icu);
            start.cost += self.lambda1 * control + self.lambda2 * r.icu * on_line;
            Self::offer(&mut best, self.close(&start), GridKnobs::Boundary { onset, on_line, post: 0.0 });
            let mut post = start;
            let mut j = 0;
            while (j as f64) * g < self.max_post {
                post.advance(&r, self.weights(), r.u_max, g, self.step);
                j += 1;
                let knobs = GridKnobs::Boundary { onset, on_line, post: j as f64 * g };
                Self::offer(&mut best, self.close(&post), knobs);
            }
            k += 1;
        }
        best
    }

    pub fn best(&self) -> Option<GridOptimum> {
        match (self.bang_bang(), self.boundary()) {
            (Some(a), Some(b)) => Some(if a.cost <= b.cost { a } else { b }),
            (a, b) => a.or(b),
        }
    }
}
