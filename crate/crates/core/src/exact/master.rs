//! Driven two-level master equation with work and heat accounting.

use serde::{Deserialize, Serialize};

use crate::dynamics::{heat_bath_rate, metropolis_rate};
use crate::error::{Error, Result};

/// Relative tolerance of the adaptive integrator.
pub const RTOL: f64 = 1e-8;
const ATOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateLaw {
    #[default]
    HeatBath,
    Metropolis,
}

/// Level energies (ε₀, ε₁) at time `t`. Two knots at the same time encode a
/// sudden jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub t: f64,
    pub e0: f64,
    pub e1: f64,
}

impl Knot {
    pub fn new(t: f64, e0: f64, e1: f64) -> Self {
        Self { t, e0, e1 }
    }
}

/// Piecewise-linear control of a two-level system and its bath coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSchedule {
    pub knots: Vec<Knot>,
    /// Closed intervals during which the bath is coupled, sorted and disjoint.
    pub coupled: Vec<(f64, f64)>,
    pub gamma: f64,
    pub beta: f64,
    #[serde(default)]
    pub rate_law: RateLaw,
}

impl ProtocolSchedule {
    /// Fixed energies, coupled throughout.
    pub fn constant(e0: f64, e1: f64, duration: f64, gamma: f64, beta: f64) -> Self {
        Self {
            knots: vec![Knot::new(0.0, e0, e1), Knot::new(duration, e0, e1)],
            coupled: vec![(0.0, duration)],
            gamma,
            beta,
            rate_law: RateLaw::HeatBath,
        }
    }

    /// Upper level driven by a triangle wave 0 → `amplitude` → 0 with the given
    /// period, repeated `cycles` times, coupled throughout.
    pub fn periodic_triangle(
        amplitude: f64,
        period: f64,
        cycles: usize,
        gamma: f64,
        beta: f64,
    ) -> Self {
        let mut knots = vec![Knot::new(0.0, 0.0, 0.0)];
        for c in 0..cycles {
            let t0 = c as f64 * period;
            knots.push(Knot::new(t0 + 0.5 * period, 0.0, amplitude));
            knots.push(Knot::new(t0 + period, 0.0, 0.0));
        }
        let end = cycles as f64 * period;
        Self {
            knots,
            coupled: vec![(0.0, end)],
            gamma,
            beta,
            rate_law: RateLaw::HeatBath,
        }
    }

    pub fn with_rate_law(mut self, law: RateLaw) -> Self {
        self.rate_law = law;
        self
    }

    pub fn start(&self) -> f64 {
        self.knots[0].t
    }

    pub fn end(&self) -> f64 {
        self.knots[self.knots.len() - 1].t
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSchedule(m));
        if self.knots.is_empty() {
            return bad("schedule needs at least one knot".into());
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad(format!("beta must be finite and >= 0, got {}", self.beta));
        }
        for k in &self.knots {
            if !(k.t.is_finite() && k.e0.is_finite() && k.e1.is_finite()) {
                return bad(format!("non-finite knot {k:?}"));
            }
        }
        for w in self.knots.windows(2) {
            if w[1].t < w[0].t {
                return bad(format!("knot times decrease at t = {}", w[1].t));
            }
        }
        let (t0, t1) = (self.start(), self.end());
        for (i, &(a, b)) in self.coupled.iter().enumerate() {
            if !(a <= b) || a < t0 || b > t1 {
                return bad(format!("coupled interval ({a}, {b}) outside [{t0}, {t1}]"));
            }
            if i > 0 && a < self.coupled[i - 1].1 {
                return bad("coupled intervals overlap or are unsorted".into());
            }
        }
        for w in self.knots.windows(2) {
            let jumped = w[0].e0 != w[1].e0 || w[0].e1 != w[1].e1;
            if w[0].t == w[1].t && jumped && self.coupled_interior(w[0].t) {
                return bad(format!(
                    "sudden energy change at t = {} while coupled to the bath",
                    w[0].t
                ));
            }
        }
        Ok(())
    }

    fn coupled_interior(&self, t: f64) -> bool {
        self.coupled.iter().any(|&(a, b)| a < t && t < b)
    }

    /// Energies and their slopes on the linear stretch containing `t`, which
    /// must not be a knot time.
    fn linear_at(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let k = self.knots.partition_point(|k| k.t <= t);
        if k == 0 {
            let a = self.knots[0];
            return ([a.e0, a.e1], [0.0; 2]);
        }
        if k == self.knots.len() {
            let a = self.knots[k - 1];
            return ([a.e0, a.e1], [0.0; 2]);
        }
        let (a, b) = (self.knots[k - 1], self.knots[k]);
        let dt = b.t - a.t;
        let s = [(b.e0 - a.e0) / dt, (b.e1 - a.e1) / dt];
        ([a.e0 + s[0] * (t - a.t), a.e1 + s[1] * (t - a.t)], s)
    }

    /// Energies just after all jumps at or before `t`.
    pub fn energies_at(&self, t: f64) -> [f64; 2] {
        let k = self.knots.partition_point(|k| k.t <= t);
        if k == 0 {
            let a = self.knots[0];
            return [a.e0, a.e1];
        }
        let a = self.knots[k - 1];
        if a.t == t || k == self.knots.len() {
            return [a.e0, a.e1];
        }
        self.linear_at(t).0
    }

    /// Transition rates (0 → 1, 1 → 0) at the given level energies.
    pub fn rates(&self, e: [f64; 2]) -> (f64, f64) {
        let gap = e[1] - e[0];
        let f = match self.rate_law {
            RateLaw::HeatBath => heat_bath_rate,
            RateLaw::Metropolis => metropolis_rate,
        };
        (
            self.gamma * f(self.beta, gap),
            self.gamma * f(self.beta, -gap),
        )
    }

    /// Breakpoints splitting the schedule into stretches that are linear and
    /// uniformly coupled or decoupled.
    pub(crate) fn breakpoints(&self, extra: &[f64]) -> Vec<f64> {
        let mut ts: Vec<f64> = self.knots.iter().map(|k| k.t).collect();
        for &(a, b) in &self.coupled {
            ts.push(a);
            ts.push(b);
        }
        let (t0, t1) = (self.start(), self.end());
        ts.extend(extra.iter().copied().filter(|&t| t >= t0 && t <= t1));
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    /// Whether the bath is coupled on the open stretch around `t_mid`.
    pub(crate) fn coupled_at(&self, t_mid: f64) -> bool {
        self.coupled
            .iter()
            .any(|&(a, b)| a <= t_mid && t_mid <= b && a < b)
    }

    /// Jumps (before, after) scheduled at exactly `t`, in order.
    pub(crate) fn jumps_at(&self, t: f64) -> Vec<([f64; 2], [f64; 2])> {
        self.knots
            .windows(2)
            .filter(|w| w[0].t == t && w[1].t == t)
            .map(|w| ([w[0].e0, w[0].e1], [w[1].e0, w[1].e1]))
            .filter(|(a, b)| a != b)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    Jump,
    Coupled,
    Decoupled,
}

/// Energy bookkeeping of one stretch of the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentLedger {
    pub kind: SegmentKind,
    pub t_start: f64,
    pub t_end: f64,
    pub work_on: f64,
    pub heat_in: f64,
    pub delta_u: f64,
}

/// Time-resolved solution; `work` and `heat` are cumulative from the start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MasterSolution {
    pub times: Vec<f64>,
    pub populations: Vec<[f64; 2]>,
    pub energies: Vec<[f64; 2]>,
    /// dε_i/dt on the stretch ending at each sample (zero at jumps).
    pub energy_slopes: Vec<[f64; 2]>,
    pub work: Vec<f64>,
    pub heat: Vec<f64>,
    pub segments: Vec<SegmentLedger>,
}

impl MasterSolution {
    pub fn final_populations(&self) -> [f64; 2] {
        *self.populations.last().expect("solution has samples")
    }

    pub fn total_work(&self) -> f64 {
        *self.work.last().expect("solution has samples")
    }

    pub fn total_heat(&self) -> f64 {
        *self.heat.last().expect("solution has samples")
    }

    pub fn internal_energy_change(&self) -> f64 {
        let u = |i: usize| {
            self.populations[i][0] * self.energies[i][0]
                + self.populations[i][1] * self.energies[i][1]
        };
        u(self.times.len() - 1) - u(0)
    }

    /// Populations at the last sample recorded at exactly `t`.
    pub fn population_at(&self, t: f64) -> Option<[f64; 2]> {
        self.times
            .iter()
            .rposition(|&s| s == t)
            .map(|i| self.populations[i])
    }
}

/// Integrates the master equation over the whole schedule.
pub fn integrate_master(schedule: &ProtocolSchedule, p0: [f64; 2]) -> Result<MasterSolution> {
    integrate_master_at(schedule, p0, &[])
}

/// As [`integrate_master`], additionally stopping exactly at `sample_times`.
pub fn integrate_master_at(
    schedule: &ProtocolSchedule,
    p0: [f64; 2],
    sample_times: &[f64],
) -> Result<MasterSolution> {
    schedule.validate()?;
    if p0.iter().any(|&p| !(p >= 0.0)) || (p0[0] + p0[1] - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidState(format!(
            "{p0:?} is not a probability vector"
        )));
    }
    let breaks = schedule.breakpoints(sample_times);
    let mut sol = MasterSolution {
        times: Vec::new(),
        populations: Vec::new(),
        energies: Vec::new(),
        energy_slopes: Vec::new(),
        work: Vec::new(),
        heat: Vec::new(),
        segments: Vec::new(),
    };
    let mut p = p0;
    let (mut w, mut q) = (0.0, 0.0);
    let first = schedule.knots[0];
    let mut e = [first.e0, first.e1];
    let record = |sol: &mut MasterSolution,
                  t: f64,
                  p: [f64; 2],
                  e: [f64; 2],
                  s: [f64; 2],
                  w: f64,
                  q: f64| {
        sol.times.push(t);
        sol.populations.push(p);
        sol.energies.push(e);
        sol.energy_slopes.push(s);
        sol.work.push(w);
        sol.heat.push(q);
    };
    record(&mut sol, breaks[0], p, e, [0.0; 2], w, q);

    for (i, &t) in breaks.iter().enumerate() {
        for (before, after) in schedule.jumps_at(t) {
            let dw = p[0] * (after[0] - before[0]) + p[1] * (after[1] - before[1]);
            w += dw;
            sol.segments.push(SegmentLedger {
                kind: SegmentKind::Jump,
                t_start: t,
                t_end: t,
                work_on: dw,
                heat_in: 0.0,
                delta_u: dw,
            });
            e = after;
            record(&mut sol, t, p, e, [0.0; 2], w, q);
        }
        let Some(&t_next) = breaks.get(i + 1) else {
            break;
        };
        let mid = 0.5 * (t + t_next);
        let (e_mid, slopes) = schedule.linear_at(mid);
        let at = |s: f64| {
            [
                e_mid[0] + slopes[0] * (s - mid),
                e_mid[1] + slopes[1] * (s - mid),
            ]
        };
        e = at(t);
        let (w_start, q_start) = (w, q);
        let u_start = p[0] * e[0] + p[1] * e[1];
        let e_end = at(t_next);
        if schedule.coupled_at(mid) {
            let y0 = [p[0], p[1], w, q];
            let rhs = |s: f64, y: &[f64; 4]| -> [f64; 4] {
                let en = at(s);
                let (k01, k10) = schedule.rates(en);
                let dp1 = k01 * y[0] - k10 * y[1];
                let dp = [-dp1, dp1];
                [
                    dp[0],
                    dp[1],
                    y[0] * slopes[0] + y[1] * slopes[1],
                    en[0] * dp[0] + en[1] * dp[1],
                ]
            };
            let mut steps = Vec::new();
            let y = dormand_prince(rhs, t, t_next, y0, schedule.gamma, &mut steps)?;
            for (s, ys) in steps {
                record(&mut sol, s, [ys[0], ys[1]], at(s), slopes, ys[2], ys[3]);
            }
            p = [y[0], y[1]];
            w = y[2];
            q = y[3];
            e = e_end;
            sol.segments.push(SegmentLedger {
                kind: SegmentKind::Coupled,
                t_start: t,
                t_end: t_next,
                work_on: w - w_start,
                heat_in: q - q_start,
                delta_u: p[0] * e[0] + p[1] * e[1] - u_start,
            });
        } else {
            let dw = p[0] * (e_end[0] - e[0]) + p[1] * (e_end[1] - e[1]);
            w += dw;
            e = e_end;
            record(&mut sol, t_next, p, e, slopes, w, q);
            sol.segments.push(SegmentLedger {
                kind: SegmentKind::Decoupled,
                t_start: t,
                t_end: t_next,
                work_on: dw,
                heat_in: 0.0,
                delta_u: dw,
            });
        }
    }
    Ok(sol)
}

/// Adaptive Dormand–Prince 5(4) from `t0` to `t1`; accepted steps are
/// appended to `steps`, the last one landing exactly on `t1`.
fn dormand_prince<F>(
    f: F,
    t0: f64,
    t1: f64,
    y0: [f64; 4],
    rate_scale: f64,
    steps: &mut Vec<(f64, [f64; 4])>,
) -> Result<[f64; 4]>
where
    F: Fn(f64, &[f64; 4]) -> [f64; 4],
{
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(y0);
    }
    let mut t = t0;
    let mut y = y0;
    let mut h = span.min(0.05 / rate_scale);
    let mut n_steps = 0usize;
    while t < t1 {
        if n_steps > 50_000_000 {
            return Err(Error::NonConvergence("master equation step limit".into()));
        }
        let last = t + h >= t1;
        let h_eff = if last { t1 - t } else { h };
        let mut k = [[0.0f64; 4]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for c in 0..4 {
                    ys[c] += h_eff * A[s][j] * kj[c];
                }
            }
            k[s] = f(t + C[s] * h_eff, &ys);
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for c in 0..4 {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][c];
                d4 += B4[s] * k[s][c];
            }
            y5[c] += h_eff * d5;
            let scale = ATOL + RTOL * y[c].abs().max(y5[c].abs());
            err = err.max((h_eff * (d5 - d4)).abs() / scale);
        }
        n_steps += 1;
        if err <= 1.0 {
            t = if last { t1 } else { t + h_eff };
            y = y5;
            steps.push((t, y));
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = h_eff * factor;
        if h < 1e-14 * span.max(1.0) {
            return Err(Error::NonConvergence(
                "master equation step size underflow".into(),
            ));
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gibbs_start_is_stationary() {
        let (e, beta) = (1.7, 0.8);
        let s = ProtocolSchedule::constant(0.0, e, 10.0, 2.0, beta);
        let g1 = (-beta * e).exp() / (1.0 + (-beta * e).exp());
        let sol = integrate_master(&s, [1.0 - g1, g1]).unwrap();
        for p in &sol.populations {
            assert!((p[1] - g1).abs() < 1e-12);
        }
    }

    #[test]
    fn relaxation_matches_closed_form() {
        let (e, beta, gamma) = (2.0, 1.3, 0.7);
        let s = ProtocolSchedule::constant(0.0, e, 12.0, gamma, beta);
        let (k01, k10) = s.rates([0.0, e]);
        let r = k01 + k10;
        let g1 = k01 / r;
        let samples: Vec<f64> = (1..=24).map(|i| i as f64 * 0.5).collect();
        let sol = integrate_master_at(&s, [1.0, 0.0], &samples).unwrap();
        for &t in &samples {
            let p = sol.population_at(t).unwrap();
            let exact = g1 * (1.0 - (-r * t).exp());
            assert!((p[1] - exact).abs() < 1e-6, "t={t}: {} vs {exact}", p[1]);
        }
        for p in &sol.populations {
            assert!((p[0] + p[1] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn decoupled_populations_frozen() {
        let s = ProtocolSchedule {
            knots: vec![Knot::new(0.0, 0.0, 0.0), Knot::new(5.0, 0.0, 3.0)],
            coupled: vec![],
            gamma: 1.0,
            beta: 1.0,
            rate_law: RateLaw::HeatBath,
        };
        let sol = integrate_master(&s, [0.6, 0.4]).unwrap();
        assert_eq!(sol.final_populations(), [0.6, 0.4]);
        assert!((sol.total_work() - 1.2).abs() < 1e-15);
        assert_eq!(sol.total_heat(), 0.0);
    }

    #[test]
    fn jump_while_coupled_rejected() {
        let s = ProtocolSchedule {
            knots: vec![
                Knot::new(0.0, 0.0, 0.0),
                Knot::new(1.0, 0.0, 0.0),
                Knot::new(1.0, 0.0, 2.0),
                Knot::new(2.0, 0.0, 2.0),
            ],
            coupled: vec![(0.0, 2.0)],
            gamma: 1.0,
            beta: 1.0,
            rate_law: RateLaw::HeatBath,
        };
        assert!(matches!(
            integrate_master(&s, [1.0, 0.0]),
            Err(Error::InvalidSchedule(_))
        ));
    }

    #[test]
    fn first_law_per_segment() {
        let s = ProtocolSchedule {
            knots: vec![
                Knot::new(0.0, 0.0, 0.0),
                Knot::new(0.0, 0.0, 4.0),
                Knot::new(3.0, 0.5, 0.0),
                Knot::new(5.0, 0.0, 1.0),
            ],
            coupled: vec![(0.0, 4.0)],
            gamma: 1.5,
            beta: 1.1,
            rate_law: RateLaw::HeatBath,
        };
        let sol = integrate_master(&s, [0.8, 0.2]).unwrap();
        for seg in &sol.segments {
            let scale = seg.work_on.abs().max(seg.heat_in.abs()).max(1.0);
            assert!(
                (seg.delta_u - seg.work_on - seg.heat_in).abs() < 1e-8 * scale,
                "{seg:?}"
            );
        }
        let du = sol.internal_energy_change();
        assert!((du - sol.total_work() - sol.total_heat()).abs() < 1e-8);
    }
}
