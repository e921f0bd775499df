//! Pathwise (strong) convergence of the entropy integrators against a fine
//! reference on the same Brownian paths.

use purify::sde::{step_s, BrownianPath, ControlValue, NoiseStream, PurityState, Scheme, StepConfig};

const S0: f64 = 0.5;
const T: f64 = 0.5;
const FINE: usize = 1 << 14;
const PATHS: u64 = 200;

fn terminal(path: &BrownianPath, v: ControlValue, scheme: Scheme) -> f64 {
    let cfg = StepConfig::new(path.dt, scheme).unwrap();
    let mut st = PurityState::new(S0, 0.0).unwrap();
    for &dw in &path.increments {
        st = step_s(st, v, dw, &cfg).unwrap();
    }
    st.s
}

/// Least-squares slope of log error against log step over coarsenings
/// 2^6 .. 2^10 of the reference grid.
fn observed_order(scheme: Scheme) -> f64 {
    let v = ControlValue::new(0.5).unwrap();
    let factors = [64usize, 128, 256, 512, 1024];
    let mut err = vec![0.0; factors.len()];
    for p in 0..PATHS {
        let fine = BrownianPath::sample(&mut NoiseStream::new(21, p), T / FINE as f64, FINE);
        let reference = terminal(&fine, v, Scheme::Milstein);
        for (e, &k) in err.iter_mut().zip(&factors) {
            *e += (terminal(&fine.coarsen(k), v, scheme) - reference).abs() / PATHS as f64;
        }
    }
    let xs: Vec<f64> = factors.iter().map(|&k| (k as f64).ln()).collect();
    let ys: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn euler_has_strong_order_one_half() {
    let p = observed_order(Scheme::EulerMaruyama);
    assert!((p - 0.5).abs() < 0.15, "Euler order {p}");
}

#[test]
fn milstein_has_strong_order_one() {
    let p = observed_order(Scheme::Milstein);
    assert!((p - 1.0).abs() < 0.15, "Milstein order {p}");
}
