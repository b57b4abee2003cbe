//! Test-side oracles, written from the model equations without calling the
//! library's closed forms.

#![allow(dead_code)]

pub const GAMMA: f64 = 9.81;
pub const LAMBDA: f64 = 0.8;

/// Impact times `t_1..t_n` and post-impact speeds of a ball released from
/// `(p, v)`, by direct recursion over flights.
pub fn ball_impacts(gamma: f64, lambda: f64, xi: [f64; 2], inputs: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let (p, v) = (xi[0], xi[1]);
    // time to fall from (p, v): p + v t - g t²/2 = 0
    let mut t = (v + (v * v + 2.0 * gamma * p).sqrt()) / gamma;
    let mut speed = (v * v + 2.0 * gamma * p).sqrt();
    let mut times = vec![t];
    let mut post = Vec::new();
    for k in 0..n.saturating_sub(1) {
        let out = lambda * speed + inputs[k.min(inputs.len() - 1)];
        post.push(out);
        t += 2.0 * out / gamma;
        times.push(t);
        speed = out;
    }
    (times, post)
}

/// State of the ball at time `t` after the `j`-th impact (`j = 0` is the
/// initial flight).
pub fn ball_state(gamma: f64, lambda: f64, xi: [f64; 2], inputs: &[f64], j: usize, t: f64) -> [f64; 2] {
    if j == 0 {
        return [xi[0] + xi[1] * t - 0.5 * gamma * t * t, xi[1] - gamma * t];
    }
    let (times, post) = ball_impacts(gamma, lambda, xi, inputs, j + 1);
    let s = t - times[j - 1];
    let v = post[j - 1];
    [v * s - 0.5 * gamma * s * s, v - gamma * s]
}

pub fn energy(gamma: f64, x: [f64; 2]) -> f64 {
    gamma * x[0] + 0.5 * x[1] * x[1]
}

/// Peak-tracking impact cost, evaluated from its two branches.
pub fn peak_cost(gamma: f64, lambda: f64, p_des: f64, v: f64) -> f64 {
    let s = (2.0 * gamma * p_des).sqrt();
    let quad = gamma * p_des * (v + s).powi(2) / 2.0;
    if v >= -s / lambda {
        return quad;
    }
    let kinetic = |w: f64| w * w / 2.0 - gamma * p_des;
    quad.min(kinetic(v).powi(2) - kinetic(lambda * v).powi(2))
}

/// Peak-tracking cost of the input sequence over `(T, J)`, or `None` when the
/// impacts do not bracket `T`.
pub fn ball_schedule_cost(p_des: f64, xi: [f64; 2], inputs: &[f64], t: f64, j: usize) -> Option<f64> {
    let (times, post) = ball_impacts(GAMMA, LAMBDA, xi, inputs, j + 1);
    if (j > 0 && times[j - 1] > t) || times[j] < t {
        return None;
    }
    let mut speed = (xi[1] * xi[1] + 2.0 * GAMMA * xi[0]).sqrt();
    let mut cost = 0.0;
    for &next in &post[..j] {
        cost += peak_cost(GAMMA, LAMBDA, p_des, -speed);
        speed = next;
    }
    Some(cost + energy(GAMMA, ball_state(GAMMA, LAMBDA, xi, inputs, j, t)))
}

/// Thermostat temperature after relaxing for `s` toward `target`.
pub fn relax(z: f64, target: f64, s: f64) -> f64 {
    target + (z - target) * (-s).exp()
}
