//! Dormand–Prince 5(4) embedded pair over a fixed-size autonomous state.

pub(crate) const N: usize = 4;

pub(crate) type State = [f64; N];

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

// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

pub(crate) struct Step {
    pub y: State,
    pub err: State,
    /// Derivative at the new point (first-same-as-last).
    pub f_new: State,
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (w, k) in terms {
            acc += w * k[j];
        }
        *o += h * acc;
    }
    out
}

/// One trial step of size `h` from `y` with `f0 = f(y)`.
pub(crate) fn dp5_step<F, E>(f: &F, y: &State, f0: &State, h: f64) -> Result<Step, E>
where
    F: Fn(&State) -> Result<State, E>,
{
    let k1 = f0;
    let k2 = f(&axpy(y, h, &[(A21, k1)]))?;
    let k3 = f(&axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(&axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(&axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = f(&axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y_new = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(&y_new)?;
    let mut err = [0.0; N];
    for j in 0..N {
        err[j] = h * (E1 * k1[j] + E3 * k3[j] + E4 * k4[j] + E5 * k5[j] + E6 * k6[j] + E7 * k7[j]);
    }
    Ok(Step { y: y_new, err, f_new: k7 })
}

/// Scaled RMS error over the first `controlled` components.
pub(crate) fn error_norm(y0: &State, y1: &State, err: &State, controlled: usize, rtol: f64, atol: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..controlled {
        let sc = atol + rtol * y0[j].abs().max(y1[j].abs());
        acc += (err[j] / sc).powi(2);
    }
    (acc / controlled as f64).sqrt()
}
