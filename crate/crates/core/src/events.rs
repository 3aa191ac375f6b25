//! Detection of entanglement death, birth, and revival events on a
//! concurrence time series.

use serde::{Deserialize, Serialize};

/// Default concurrence threshold separating "dead" from "alive".
pub const EVENT_THRESHOLD_DEFAULT: f64 = 1e-4;
/// Default time window a curve must stay below threshold for a death to
/// count; distinguishes true death intervals from numerical grazing.
pub const HOLD_WINDOW_DEFAULT: f64 = 0.5;

/// One above-threshold interval after the first death.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Revival {
    pub start: f64,
    pub peak_time: f64,
    pub peak_value: f64,
    pub end: f64,
}

/// Events found on a single concurrence curve.
///
/// `death_time` is the first downward threshold crossing that holds for the
/// hold window (the end of the data counts as holding, so appending
/// trailing zeros to a curve that already ended below threshold changes
/// nothing). `birth_time` is the first upward crossing, reported only when
/// the curve starts at or below threshold. `terminal_value` is the mean of
/// the last 5% of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub death_time: Option<f64>,
    pub birth_time: Option<f64>,
    pub revivals: Vec<Revival>,
    pub terminal_value: f64,
}

/// Scan a uniformly sampled concurrence curve for events.
///
/// `times` and `values` must have equal lengths; an empty curve yields an
/// empty report.
pub fn detect_events(times: &[f64], values: &[f64], threshold: f64, hold_window: f64) -> EventReport {
    assert_eq!(
        times.len(),
        values.len(),
        "detect_events needs one value per time"
    );
    let n = times.len();
    if n == 0 {
        return EventReport {
            death_time: None,
            birth_time: None,
            revivals: Vec::new(),
            terminal_value: 0.0,
        };
    }

    let above: Vec<bool> = values.iter().map(|&v| v > threshold).collect();

    // Death: first downward crossing that stays below for the hold window
    // (or to the end of the data).
    let mut death_index: Option<usize> = None;
    let mut i = 1;
    while i < n {
        if above[i - 1] && !above[i] {
            let deadline = times[i] + hold_window;
            let mut held = true;
            let mut j = i + 1;
            while j < n && times[j] < deadline {
                if above[j] {
                    held = false;
                    break;
                }
                j += 1;
            }
            if held {
                death_index = Some(i);
                break;
            }
            i = j;
        } else {
            i += 1;
        }
    }

    // Birth: first upward crossing, gated on an initially dead curve.
    let birth_time = if !above[0] {
        (1..n)
            .find(|&i| !above[i - 1] && above[i])
            .map(|i| times[i])
    } else {
        None
    };

    // Revivals: maximal above-threshold intervals after the first death.
    let mut revivals = Vec::new();
    if let Some(d) = death_index {
        let mut k = d + 1;
        while k < n {
            if above[k] {
                let start = times[k];
                let mut peak_value = values[k];
                let mut peak_time = times[k];
                let mut m = k + 1;
                while m < n && above[m] {
                    if values[m] > peak_value {
                        peak_value = values[m];
                        peak_time = times[m];
                    }
                    m += 1;
                }
                let end = if m < n { times[m] } else { times[n - 1] };
                revivals.push(Revival {
                    start,
                    peak_time,
                    peak_value,
                    end,
                });
                k = m;
            } else {
                k += 1;
            }
        }
    }

    let tail = ((n as f64) * 0.05).ceil().max(1.0) as usize;
    let terminal_value = values[n - tail..].iter().sum::<f64>() / tail as f64;

    EventReport {
        death_time: death_index.map(|i| times[i]),
        birth_time,
        revivals,
        terminal_value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn uniform_curve(t_max: f64, dt: f64, f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let n = (t_max / dt).round() as usize + 1;
        let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let values: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        (times, values)
    }

    #[test]
    fn constant_zero_has_no_events() {
        let (times, values) = uniform_curve(10.0, 0.01, |_| 0.0);
        let report = detect_events(&times, &values, EVENT_THRESHOLD_DEFAULT, HOLD_WINDOW_DEFAULT);
        assert_eq!(report.death_time, None);
        assert_eq!(report.birth_time, None);
        assert!(report.revivals.is_empty());
        assert_eq!(report.terminal_value, 0.0);
    }

    #[test]
    fn damped_cosine_lobes() {
        let dt = 0.01;
        let (times, values) = uniform_curve(20.0, dt, |t| t.cos().max(0.0) * (-0.1 * t).exp());
        let report = detect_events(&times, &values, EVENT_THRESHOLD_DEFAULT, HOLD_WINDOW_DEFAULT);

        let death = report.death_time.expect("finite death time");
        assert!(
            (death - FRAC_PI_2).abs() <= dt + 1e-9,
            "death at {death}, expected ≈ π/2"
        );
        // Positive lobes after the first death start at 3π/2, 7π/2, 11π/2.
        assert_eq!(report.revivals.len(), 3);
        let first = &report.revivals[0];
        assert!((first.start - 1.5 * PI).abs() <= 2.0 * dt);
        // The damping shifts the lobe maximum to 2π − atan(0.1).
        let peak_t = 2.0 * PI - 0.1_f64.atan();
        assert!((first.peak_time - peak_t).abs() <= 2.0 * dt);
        assert!((first.peak_value - peak_t.cos() * (-0.1 * peak_t).exp()).abs() < 1e-4);
        assert!((first.end - 2.5 * PI).abs() <= 2.0 * dt);
        // Lobes decay: peaks are decreasing but all above threshold.
        assert!(report.revivals.windows(2).all(|w| w[0].peak_value > w[1].peak_value));
        assert!(report
            .revivals
            .iter()
            .all(|r| r.peak_value > EVENT_THRESHOLD_DEFAULT));
        assert_eq!(report.birth_time, None); // curve starts above threshold
    }

    #[test]
    fn birth_from_dead_start() {
        let (times, values) = uniform_curve(10.0, 0.01, |t| {
            if t < 2.0 {
                0.0
            } else {
                0.3 * (-0.2 * (t - 2.0)).exp()
            }
        });
        let report = detect_events(&times, &values, EVENT_THRESHOLD_DEFAULT, HOLD_WINDOW_DEFAULT);
        let birth = report.birth_time.expect("birth detected");
        assert!((birth - 2.0).abs() <= 0.02);
        assert_eq!(report.death_time, None); // never crosses back below
    }

    #[test]
    fn grazing_dip_shorter_than_hold_is_ignored() {
        // Dips below threshold for 0.2 time units, far less than the hold
        // window, then recovers; dies for good at t = 6.
        let (times, values) = uniform_curve(10.0, 0.01, |t| {
            if (3.0..3.2).contains(&t) {
                0.0
            } else if t < 6.0 {
                0.5
            } else {
                0.0
            }
        });
        let report = detect_events(&times, &values, EVENT_THRESHOLD_DEFAULT, HOLD_WINDOW_DEFAULT);
        let death = report.death_time.unwrap();
        assert!((death - 6.0).abs() <= 0.02, "death at {death}");
    }

    #[test]
    fn trailing_zeros_do_not_change_the_report() {
        // Ends below threshold with a tail shorter than the hold window.
        let dt = 0.01;
        let (mut times, mut values) = uniform_curve(5.0, dt, |t| {
            if t < 4.9 {
                0.5
            } else {
                0.0
            }
        });
        let before = detect_events(&times, &values, EVENT_THRESHOLD_DEFAULT, HOLD_WINDOW_DEFAULT);
        assert!(before.death_time.is_some());

        let n_extra = 500;
        let t_last = *times.last().unwrap();
        for k in 1..=n_extra {
            times.push(t_last + k as f64 * dt);
            values.push(0.0);
        }
        let after = detect_events(&times, &values, EVENT_THRESHOLD_DEFAULT, HOLD_WINDOW_DEFAULT);
        assert_eq!(before.death_time, after.death_time);
        assert_eq!(before.birth_time, after.birth_time);
        assert_eq!(before.revivals, after.revivals);
    }

    #[test]
    fn terminal_value_is_tail_mean() {
        let times: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let mut values = vec![1.0; 100];
        for v in values.iter_mut().skip(95) {
            *v = 0.2;
        }
        let report = detect_events(&times, &values, EVENT_THRESHOLD_DEFAULT, HOLD_WINDOW_DEFAULT);
        assert!((report.terminal_value - 0.2).abs() < 1e-12);
    }
}
