//! Classical SIRC ODE, integrated with fixed-step RK4.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::params::EpidemicParams;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OdeState {
    pub t: f64,
    pub s: f64,
    pub i: f64,
    pub r: f64,
    pub c: f64,
}

impl OdeState {
    pub fn new(s: f64, i: f64, r: f64, c: f64) -> Self {
        OdeState { t: 0.0, s, i, r, c }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.s, self.i, self.r, self.c]
    }

    pub fn total(&self) -> f64 {
        self.s + self.i + self.r + self.c
    }

    fn with(t: f64, y: [f64; 4]) -> Self {
        OdeState { t, s: y[0], i: y[1], r: y[2], c: y[3] }
    }
}

/// Right-hand side `(dS, dI, dR, dC)/dt`.
pub fn sirc_rhs(state: &OdeState, p: &EpidemicParams) -> [f64; 4] {
    rhs(state.as_array(), p)
}

fn rhs(y: [f64; 4], p: &EpidemicParams) -> [f64; 4] {
    let [s, i, r, c] = y;
    let infection = p.beta * s * i;
    let cross = p.beta * c * i;
    [
        -infection + p.mu * c,
        infection + p.epsilon * cross - p.gamma * i,
        (1.0 - p.epsilon) * cross + p.gamma * i - p.delta * r,
        p.delta * r - cross - p.mu * c,
    ]
}

/// Daily new infections, the flux into `I`: `βSI + εβCI`.
pub fn new_infections(state: &OdeState, p: &EpidemicParams) -> f64 {
    p.beta * state.s * state.i + p.epsilon * p.beta * state.c * state.i
}

fn rk4_step(y: [f64; 4], dt: f64, p: &EpidemicParams) -> [f64; 4] {
    let add = |a: [f64; 4], b: [f64; 4], w: f64| core::array::from_fn(|n| a[n] + w * b[n]);
    let k1 = rhs(y, p);
    let k2 = rhs(add(y, k1, dt / 2.0), p);
    let k3 = rhs(add(y, k2, dt / 2.0), p);
    let k4 = rhs(add(y, k3, dt), p);
    core::array::from_fn(|n| y[n] + dt / 6.0 * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]))
}

/// Integrates from `initial.t` over `horizon` days, sampling after every
/// step. A final shorter step lands exactly on the horizon when `dt` does
/// not divide it.
pub fn integrate_ode(initial: OdeState, p: &EpidemicParams, horizon: f64, dt: f64) -> Result<Vec<OdeState>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", dt, "must be > 0"));
    }
    if !(horizon.is_finite() && horizon >= dt) {
        return Err(Error::param("T", horizon, "must be >= dt"));
    }
    let full = libm::floor(horizon / dt + 1e-9) as usize;
    let remainder = horizon - full as f64 * dt;
    let mut out = Vec::with_capacity(full + 2);
    out.push(initial);
    let mut y = initial.as_array();
    let t0 = initial.t;
    let mut push = |k: usize, t: f64, y: [f64; 4]| {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "ODE state", group: None, step: k, cell: 0 });
        }
        out.push(OdeState::with(t, y));
        Ok(())
    };
    for k in 1..=full {
        y = rk4_step(y, dt, p);
        push(k, t0 + k as f64 * dt, y)?;
    }
    if remainder > 1e-9 * dt {
        y = rk4_step(y, remainder, p);
        push(full + 1, t0 + horizon, y)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEC: EpidemicParams = EpidemicParams { beta: 0.4145, gamma: 0.4257, delta: 0.0889, mu: 0.0267, epsilon: 0.0928 };
    const MAY: EpidemicParams = EpidemicParams { beta: 0.2821, gamma: 0.2530, delta: 0.3657, mu: 0.0060, epsilon: 0.0361 };

    #[test]
    fn disease_free_equilibrium() {
        let d = sirc_rhs(&OdeState::new(0.7, 0.0, 0.0, 0.0), &DEC);
        assert_eq!(d, [0.0, -0.0, 0.0, 0.0]);
        let traj = integrate_ode(OdeState::new(1.0, 0.0, 0.0, 0.0), &MAY, 100.0, 0.1).unwrap();
        assert!(traj.iter().all(|s| s.s == 1.0 && s.i == 0.0 && s.r == 0.0 && s.c == 0.0));
    }

    #[test]
    fn hand_substituted_rates() {
        let p = EpidemicParams { beta: 0.5, gamma: 0.25, delta: 0.0, mu: 0.0, epsilon: 0.0 };
        let d = sirc_rhs(&OdeState::new(1.0, 1.0, 0.0, 0.0), &p);
        assert_eq!(d, [-0.5, 0.25, 0.25, 0.0]);
    }

    #[test]
    fn rhs_components_cancel() {
        let states = [(0.9, 0.05, 0.03, 0.02), (0.1, 0.4, 0.2, 0.3), (0.5, 0.5, 0.0, 0.0)];
        for &(s, i, r, c) in &states {
            for p in [DEC, MAY] {
                let d = sirc_rhs(&OdeState::new(s, i, r, c), &p);
                assert!(d.iter().sum::<f64>().abs() <= 4.0 * f64::EPSILON);
            }
        }
    }

    #[test]
    fn epsilon_one_drops_cross_to_recovered_flux() {
        let p = EpidemicParams { epsilon: 1.0, ..DEC };
        let st = OdeState::new(0.5, 0.2, 0.1, 0.2);
        let d = sirc_rhs(&st, &p);
        assert_eq!(d[2], p.gamma * st.i - p.delta * st.r);
    }

    #[test]
    fn conservation_and_positivity() {
        for (p, init) in [(MAY, [0.999757, 0.000204, 0.000039, 0.0]), (DEC, [0.991199, 0.001505, 0.006937, 0.000359])] {
            let st = OdeState::new(init[0], init[1], init[2], init[3]);
            let traj = integrate_ode(st, &p, 100.0, 0.5).unwrap();
            assert_eq!(traj.len(), 201);
            assert_eq!(traj.last().unwrap().t, 100.0);
            for s in &traj {
                assert!((s.total() - st.total()).abs() <= 1e-10);
                assert!(s.as_array().iter().all(|&v| v >= -1e-12));
            }
        }
    }

    #[test]
    fn may_incidence_still_rising_at_horizon() {
        // R0 = beta/gamma is about 1.115 and S stays near 0.97, so the peak lies past T = 100.
        let init = OdeState::new(0.999757, 0.000204, 0.000039, 0.0);
        let traj = integrate_ode(init, &MAY, 100.0, 0.1).unwrap();
        assert!(traj.windows(2).all(|w| w[1].i > w[0].i));
        let last = traj.last().unwrap();
        assert!((last.i - 0.00297011).abs() < 1e-7, "{}", last.i);
        assert!((last.s - 0.97338417).abs() < 1e-7, "{}", last.s);
    }

    #[test]
    fn fourth_order_self_convergence() {
        let init = OdeState::new(0.991199, 0.001505, 0.006937, 0.000359);
        let coarse = *integrate_ode(init, &DEC, 100.0, 0.1).unwrap().last().unwrap();
        let fine = *integrate_ode(init, &DEC, 100.0, 0.05).unwrap().last().unwrap();
        for (a, b) in coarse.as_array().iter().zip(fine.as_array()) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-300), "{a} vs {b}");
        }
    }

    #[test]
    fn partial_last_step_lands_on_horizon() {
        let init = OdeState::new(0.99, 0.01, 0.0, 0.0);
        let traj = integrate_ode(init, &DEC, 1.0, 0.3).unwrap();
        assert_eq!(traj.len(), 5);
        assert!((traj.last().unwrap().t - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_steps_and_blowup() {
        let init = OdeState::new(0.99, 0.01, 0.0, 0.0);
        assert!(integrate_ode(init, &DEC, 1.0, 0.0).is_err());
        assert!(integrate_ode(init, &DEC, 0.1, 1.0).is_err());
        let wild = EpidemicParams { beta: 1e300, ..DEC };
        assert!(matches!(
            integrate_ode(OdeState::new(1e10, 1e10, 0.0, 0.0), &wild, 10.0, 1.0),
            Err(Error::NonFinite { .. })
        ));
    }
}
