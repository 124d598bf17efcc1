use rayon::ThreadPoolBuilder;
use xxz_laser::model::Channel;
use xxz_laser::ness::{solve_ness_with, NessOptions};
use xxz_laser::observables::{photon_number, total_magnetization};
use xxz_laser::trajectories::{
    estimate_ensemble, run_diffusive_trajectory, run_jump_trajectory, write_event_log, DiffusiveOptions, JumpOptions,
    Schedule, Unraveling,
};
use xxz_laser::SystemParams;

/// Fast-relaxing L=2 laser with about half a photon. Four Fock states leave
/// 1 % in the top state; eight make the cutoff invisible to the jump window.
fn small_laser(fock_dim: usize) -> SystemParams {
    SystemParams::figure_defaults(2, 1.0, 0.5).with_coupling(0.5).with_loss(1.0).with_fock_dim(fock_dim)
}

fn short_schedule(dt: f64) -> Schedule {
    Schedule { dt, t_burn: 20.0, t_total: 120.0, sample_every: 0.5 }
}

#[test]
fn pump_waiting_times_are_exponential() {
    // g = 0 and κ = 0: the single spin flips up once, at an Exp(P) time.
    let p = SystemParams::figure_defaults(1, 0.0, 2.0).with_coupling(0.0).with_loss(0.0).with_fock_dim(2);
    let schedule = Schedule { dt: 0.01, t_burn: 0.0, t_total: 12.0, sample_every: 1.0 };
    let mut times: Vec<f64> = (0..10_000u64)
        .map(|seed| {
            let run = run_jump_trajectory(&p, seed, &schedule, JumpOptions { record_events: true }).unwrap();
            assert_eq!(run.events.len(), 1);
            assert_eq!(run.events[0].channel, Channel::Pump(1));
            run.events[0].time
        })
        .collect();
    times.sort_by(f64::total_cmp);
    let n = times.len() as f64;
    let d = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let cdf = 1.0 - (-p.pump * t).exp();
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);
    // 0.1 % critical value of the one-sample Kolmogorov-Smirnov statistic
    assert!(d < 1.95 / n.sqrt(), "KS distance {d}");
}

#[test]
fn unravelings_agree_with_exact_state() {
    let p = small_laser(8);
    let exact = solve_ness_with(&p, &NessOptions::default()).unwrap().state;
    let n_exact = photon_number(&exact);
    let z_exact = total_magnetization(&exact);
    let jump = estimate_ensemble(&p, 400, 11, &short_schedule(0.01), Unraveling::Jump).unwrap();
    let diffusive = estimate_ensemble(&p, 300, 11, &short_schedule(0.001), Unraveling::Diffusive).unwrap();
    for (name, exact_value) in [("photon_number", n_exact), ("total_magnetization", z_exact)] {
        let a = jump.get(name).unwrap();
        let b = diffusive.get(name).unwrap();
        assert!((a.mean - exact_value).abs() < 3.0 * a.standard_error, "{name}: jump {} ± {} vs {exact_value}", a.mean, a.standard_error);
        assert!((b.mean - exact_value).abs() < 3.0 * b.standard_error, "{name}: diffusive {} ± {} vs {exact_value}", b.mean, b.standard_error);
        let combined = a.standard_error.hypot(b.standard_error);
        assert!((a.mean - b.mean).abs() < 3.0 * combined, "{name}: {} vs {}", a.mean, b.mean);
    }
}

#[test]
fn diffusive_mean_state_approaches_exact_state() {
    let p = small_laser(4);
    let exact = solve_ness_with(&p, &NessOptions::default()).unwrap().state.to_dense();
    let schedule = Schedule { dt: 0.005, t_burn: 10.0, t_total: 30.0, sample_every: 0.5 };
    let d = exact.nrows();
    let runs = 2000;
    let mut mean = faer::Mat::<xxz_laser::Complex64>::zeros(d, d);
    for seed in 0..runs {
        let run = run_diffusive_trajectory(&p, seed, &schedule, DiffusiveOptions { record_mean_state: true }).unwrap();
        mean += run.mean_state.unwrap();
    }
    let mut worst: f64 = 0.0;
    for j in 0..d {
        for i in 0..d {
            worst = worst.max((mean[(i, j)] / runs as f64 - exact[(i, j)]).norm());
        }
    }
    assert!(worst < 2e-2, "max entry deviation {worst}");
}

#[test]
fn ensembles_are_deterministic_across_thread_counts() {
    let p = SystemParams::figure_defaults(3, 1.0, 1.0);
    let schedule = Schedule { dt: 0.05, t_burn: 100.0, t_total: 400.0, sample_every: 5.0 };
    let run = |threads: usize| {
        let pool = ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| estimate_ensemble(&p, 6, 99, &schedule, Unraveling::Jump).unwrap())
    };
    let a = run(1);
    let b = run(3);
    for (x, y) in a.estimates.iter().zip(&b.estimates) {
        assert_eq!(x.mean.to_bits(), y.mean.to_bits(), "{}", x.observable_name);
        assert_eq!(x.standard_error.to_bits(), y.standard_error.to_bits());
    }
    let other = estimate_ensemble(&p, 6, 100, &schedule, Unraveling::Jump).unwrap();
    assert_ne!(a.estimates[0].mean, other.estimates[0].mean);
}

#[test]
fn standard_error_shrinks_like_inverse_root() {
    let p = small_laser(4);
    let schedule = Schedule { dt: 0.01, t_burn: 10.0, t_total: 30.0, sample_every: 0.5 };
    let trials = 8;
    let mut ratio = 0.0;
    for trial in 0..trials {
        let base = 10_000 * trial;
        let small = estimate_ensemble(&p, 60, base, &schedule, Unraveling::Jump).unwrap();
        let large = estimate_ensemble(&p, 120, base + 5_000, &schedule, Unraveling::Jump).unwrap();
        ratio += large.get("photon_number").unwrap().standard_error / small.get("photon_number").unwrap().standard_error;
    }
    ratio /= trials as f64;
    let expected = std::f64::consts::FRAC_1_SQRT_2;
    assert!((ratio / expected - 1.0).abs() < 0.3, "mean SE ratio {ratio}");
}

#[test]
fn dark_vacuum_never_jumps() {
    let p = SystemParams::figure_defaults(3, 1.0, 0.0);
    let schedule = Schedule { dt: 0.05, t_burn: 0.0, t_total: 200.0, sample_every: 1.0 };
    let run = run_jump_trajectory(&p, 4, &schedule, JumpOptions { record_events: true }).unwrap();
    assert_eq!(run.num_jumps, 0);
    assert_eq!(run.averages.photon_number, 0.0);
    assert_eq!(run.averages.total_magnetization, -3.0);
}

#[test]
fn event_log_is_csv() {
    let p = SystemParams::figure_defaults(2, 1.0, 1.0);
    let schedule = Schedule { dt: 0.05, t_burn: 0.0, t_total: 60.0, sample_every: 1.0 };
    let run = run_jump_trajectory(&p, 2, &schedule, JumpOptions { record_events: true }).unwrap();
    assert_eq!(run.events.len(), run.num_jumps);
    assert!(run.events.windows(2).all(|w| w[0].time <= w[1].time));
    let dir = std::env::temp_dir().join(format!("xxz-laser-events-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("events.csv");
    write_event_log(&path, &run.events).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,channel"));
    assert_eq!(lines.count(), run.events.len());
    std::fs::remove_dir_all(&dir).unwrap();
}
