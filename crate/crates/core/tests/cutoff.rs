use xxz_laser::ness::{adaptive_cutoff_ness, solve_ness_with, CutoffSchedule, NessOptions};
use xxz_laser::observables::photon_number;
use xxz_laser::{Error, SystemParams};

#[test]
fn lasing_point_needs_a_larger_cutoff() {
    let opts = NessOptions::default();
    let schedule = CutoffSchedule::default();
    let lasing = adaptive_cutoff_ness(&SystemParams::figure_defaults(4, 1.0, 1.0), &opts, &schedule).unwrap();
    let blocked = adaptive_cutoff_ness(&SystemParams::figure_defaults(4, 5.0, 1.0), &opts, &schedule).unwrap();
    assert!(lasing.chosen_fock_dim > blocked.chosen_fock_dim, "{} vs {}", lasing.chosen_fock_dim, blocked.chosen_fock_dim);
    for run in [&lasing, &blocked] {
        assert!(run.solution.diagnostics.top_fock_population < schedule.top_population);
        assert!(run.uniqueness_probe.unwrap() > 0.0);
        assert!(run.trend.windows(2).all(|w| w[1].fock_dim > w[0].fock_dim));
    }
}

#[test]
fn four_more_fock_states_change_nothing() {
    let p = SystemParams::figure_defaults(3, 1.0, 1.0);
    let chosen = adaptive_cutoff_ness(&p, &NessOptions::default(), &CutoffSchedule::default()).unwrap();
    let n = photon_number(&chosen.solution.state);
    let wider = solve_ness_with(&p.with_fock_dim(chosen.chosen_fock_dim + 4), &NessOptions::default()).unwrap();
    let n_wide = photon_number(&wider.state);
    assert!(((n - n_wide) / n).abs() < 1e-4, "{n} vs {n_wide}");
}

#[test]
fn budget_stops_growth_with_a_trend() {
    let opts = NessOptions { sector_budget: 5_000, ..NessOptions::default() };
    match adaptive_cutoff_ness(&SystemParams::figure_defaults(3, 1.0, 1.0), &opts, &CutoffSchedule::default()) {
        Err(Error::CutoffBudget { next, trend }) => {
            assert!(!trend.is_empty());
            assert!(next > trend.last().unwrap().fock_dim);
        }
        other => panic!("expected a budget error, got {other:?}"),
    }
}
