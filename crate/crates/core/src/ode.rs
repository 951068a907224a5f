//! Embedded Dormand-Prince 5(4) integrator for small fixed-size systems,
//! with step rejection driven both by the local error estimate and by user
//! supplied conserved quantities.

use crate::error::{Error, Result};

pub type State3 = [f64; 3];

/// Right-hand side of an autonomous 3-component system.
pub trait Rhs3 {
    fn eval(&self, y: &State3) -> State3;
}

impl<F: Fn(&State3) -> State3> Rhs3 for F {
    fn eval(&self, y: &State3) -> State3 {
        self(y)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Per-step tolerance on the drift of each monitored invariant,
    /// relative to its magnitude.
    pub invariant_tol: f64,
    pub max_steps: usize,
    pub h_initial: f64,
    pub h_min: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            invariant_tol: 1e-11,
            max_steps: 50_000_000,
            h_initial: 1e-3,
            h_min: 1e-14,
        }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 5179.0 / 57600.0;
const E3: f64 = 7571.0 / 16695.0;
const E4: f64 = 393.0 / 640.0;
const E5: f64 = -92097.0 / 339200.0;
const E6: f64 = 187.0 / 2100.0;
const E7: f64 = 1.0 / 40.0;

fn lc(y: &State3, terms: &[(f64, &State3)]) -> State3 {
    let mut out = *y;
    for &(c, k) in terms {
        for i in 0..3 {
            out[i] += c * k[i];
        }
    }
    out
}

/// One trial step; returns the 5th-order solution and the error estimate.
fn dp54_step(rhs: &impl Rhs3, y: &State3, h: f64) -> (State3, f64) {
    let k1 = rhs.eval(y);
    let k2 = rhs.eval(&lc(y, &[(h * A21, &k1)]));
    let k3 = rhs.eval(&lc(y, &[(h * A31, &k1), (h * A32, &k2)]));
    let k4 = rhs.eval(&lc(y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]));
    let k5 = rhs.eval(&lc(
        y,
        &[(h * A51, &k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)],
    ));
    let k6 = rhs.eval(&lc(
        y,
        &[
            (h * A61, &k1),
            (h * A62, &k2),
            (h * A63, &k3),
            (h * A64, &k4),
            (h * A65, &k5),
        ],
    ));
    let y5 = lc(
        y,
        &[
            (h * B1, &k1),
            (h * B3, &k3),
            (h * B4, &k4),
            (h * B5, &k5),
            (h * B6, &k6),
        ],
    );
    let k7 = rhs.eval(&y5);
    let y4 = lc(
        y,
        &[
            (h * E1, &k1),
            (h * E3, &k3),
            (h * E4, &k4),
            (h * E5, &k5),
            (h * E6, &k6),
            (h * E7, &k7),
        ],
    );
    let mut err: f64 = 0.0;
    for i in 0..3 {
        err = err.max((y5[i] - y4[i]).abs());
    }
    (y5, err)
}

/// Adaptive integrator: advances `y` from time 0 to `length`, invoking the
/// observer after every accepted step. Invariants are monitored relative to
/// their values at the start of each step.
pub struct Integrator<R: Rhs3> {
    rhs: R,
    pub opts: OdeOptions,
    /// Conserved quantities; a step that moves any of them beyond the
    /// invariant tolerance is rejected and retried with a smaller step.
    invariants: Vec<Box<dyn Fn(&State3) -> f64>>,
}

impl<R: Rhs3> Integrator<R> {
    pub fn new(rhs: R, opts: OdeOptions) -> Self {
        Self {
            rhs,
            opts,
            invariants: Vec::new(),
        }
    }

    pub fn with_invariant(mut self, f: impl Fn(&State3) -> f64 + 'static) -> Self {
        self.invariants.push(Box::new(f));
        self
    }

    /// Integrate for `length` time units, calling `observer(t, y)` after
    /// each accepted step (including the final clamped one).
    pub fn run(
        &self,
        y0: State3,
        length: f64,
        mut observer: impl FnMut(f64, &State3),
    ) -> Result<State3> {
        let mut y = y0;
        let mut t = 0.0f64;
        let mut h = self.opts.h_initial.min(length.max(1e-30));
        let mut steps = 0usize;
        while t < length {
            if steps >= self.opts.max_steps {
                return Err(Error::StepUnderflow { r: t });
            }
            steps += 1;
            let clamped = h.min(length - t);
            let (y_new, err) = dp54_step(&self.rhs, &y, clamped);
            let scale = self.opts.atol
                + self.opts.rtol
                    * y.iter()
                        .chain(y_new.iter())
                        .fold(0.0f64, |m, &v| m.max(v.abs()));
            let ratio = err / scale;
            let invariants_ok = self.invariants.iter().all(|inv| {
                let before = inv(&y);
                let after = inv(&y_new);
                (after - before).abs() <= self.opts.invariant_tol * before.abs().max(1e-30)
            });
            if ratio <= 1.0 && invariants_ok {
                t += clamped;
                y = y_new;
                observer(t, &y);
                let grow = if ratio > 0.0 {
                    0.9 * ratio.powf(-0.2)
                } else {
                    5.0
                };
                h = (clamped * grow.clamp(0.2, 5.0)).max(self.opts.h_min);
            } else {
                let shrink = if ratio > 1.0 {
                    (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.5 // invariant violation at acceptable local error
                };
                h = clamped * shrink;
                if h < self.opts.h_min {
                    return Err(Error::StepUnderflow { r: t });
                }
            }
        }
        Ok(y)
    }

    /// End state only.
    pub fn propagate(&self, y0: State3, length: f64) -> Result<State3> {
        self.run(y0, length, |_, _| {})
    }
}
