import numpy as np
import pytest

from conftest import MBPS, make_scenario, parallel_scenario, random_scenario
from entre.energy import PowerProfile, recompute_state
from entre.engine import (
    ActionKind,
    EntreParams,
    PairRoundView,
    RoundAction,
    apply_and_renormalize,
    apply_rules,
    build_pair_view,
    compute_delta_E,
    compute_delta_x,
    entre_round,
    exclude_path,
    link_sleep_consistent,
    measure_rates,
    pair_average_energy,
    pair_average_utilization,
    run_until_convergence,
)
from entre.model import SplitVector


def two_path_pair():
    return parallel_scenario([100, 100], 50).pairs[0]


@pytest.mark.parametrize("bits, t_m, expected", [(10e6, 1, 10e6), (0, 1, 0), (30e6, 2, 15e6)])
def test_measure_rates(bits, t_m, expected):
    pair = parallel_scenario([100], 10).pairs[0]
    assert measure_rates(pair, [bits], t_m)[0] == expected


def test_excluded_paths_report_zero_rate():
    pair = two_path_pair()
    pair.splits = SplitVector(np.array([1.0, 0.0]), np.array([False, True]))
    assert list(measure_rates(pair, [5.0, 7.0], 1.0)) == [5.0, 0.0]


def test_measure_rates_rejects_bad_window():
    with pytest.raises(ValueError):
        measure_rates(two_path_pair(), [1, 1], 0)


@pytest.mark.parametrize(
    "rates, utils, expected",
    [((1, 1), (0.2, 0.4), 0.3), ((1, 3), (0.2, 0.4), 0.35), ((2,), (0.7,), 0.7)],
)
def test_average_utilization(rates, utils, expected):
    assert pair_average_utilization(rates, utils) == pytest.approx(expected)


@pytest.mark.parametrize(
    "rates, energies, expected",
    [((1, 1), (2, 4), 3.0), ((3, 1), (2, 4), 2.5), ((1,), (5,), 5.0)],
)
def test_average_energy(rates, energies, expected):
    assert pair_average_energy(rates, energies) == pytest.approx(expected)


def test_average_falls_back_to_plain_mean_without_traffic():
    assert pair_average_utilization((0, 0), (0.2, 0.6)) == pytest.approx(0.4)
    assert pair_average_energy((0, 0, 5), (1, 3, 9), active=[True, True, False]) == pytest.approx(2.0)


def view(rates, utils, energies, **params):
    pair = parallel_scenario([100] * len(rates), 10).pairs[0]
    return build_pair_view(pair, rates, utils, energies, EntreParams(**params))


def test_delta_x_balanced_is_zero():
    v = view((1, 2, 3), (0.4, 0.4, 0.4), (1, 1, 1))
    assert np.all(np.abs(v.delta_x) <= 1e-15)
    assert {a.rule for a in apply_rules(two_path_pair(), v, EntreParams())} == {"idle"}


def test_delta_x_example():
    v = view((1, 1), (0.2, 0.4), (1, 1))
    assert v.delta_x == pytest.approx([0.05, -0.05])


def test_delta_x_gate():
    v = view((1, 1), (0.1, 0.4), (1, 1))
    assert compute_delta_x(v, 0.2)[0] == 0.0
    assert compute_delta_x(v, 0.2)[1] != 0.0


def test_delta_e_examples():
    v = view((1, 1), (0.2, 0.2), (2, 4))
    assert compute_delta_E(v, 0.0) == pytest.approx([1.0, -1.0])
    v = view((1, 1), (0.2, 0.2), (3, 3))
    assert np.all(compute_delta_E(v, 0.0) == 0)
    v = view((1, 1), (0.2, 0.2), (0.1, 3))
    assert compute_delta_E(v, 0.5)[0] == 0.0


def _forced_view(dx, de, energy, util, avg_e=0.0, avg_u=0.0):
    n = len(dx)
    return PairRoundView(
        rates=np.ones(n),
        utilization=np.array(util, float),
        energy=np.array(energy, float),
        active=np.ones(n, bool),
        avg_utilization=avg_u,
        avg_energy=avg_e,
        delta_x=np.array(dx, float),
        delta_e=np.array(de, float),
    )


def test_rule_1_applies():
    v = _forced_view([0.05], [1.0], [2.0], [0.1], avg_e=3.0, avg_u=0.2)
    (a,) = apply_rules(two_path_pair(), v, EntreParams())
    assert (a.kind, a.delta, a.rule) == (ActionKind.APPLY, 0.05, "1")


def test_rule_2_applies():
    v = _forced_view([-0.05], [-1.0], [4.0], [0.3], avg_e=3.0, avg_u=0.2)
    (a,) = apply_rules(two_path_pair(), v, EntreParams())
    assert (a.kind, a.delta, a.rule) == (ActionKind.APPLY, -0.05, "2")


def test_rule_3a_excludes():
    v = _forced_view([0.05], [-2.0], [5.0], [0.1], avg_e=3.0, avg_u=0.2)
    (a,) = apply_rules(two_path_pair(), v, EntreParams(energy_threshold=1.0))
    assert (a.kind, a.rule) == (ActionKind.EXCLUDE, "3a")


def test_rule_3b_keeps_path():
    v = _forced_view([0.05], [-2.0], [5.0], [0.1], avg_e=3.0, avg_u=0.2)
    (a,) = apply_rules(two_path_pair(), v, EntreParams(energy_threshold=2.5))
    assert (a.kind, a.rule) == (ActionKind.NOOP, "3b")


def test_rule_4b_does_nothing():
    v = _forced_view([-0.05], [1.0], [2.0], [0.21], avg_e=3.0, avg_u=0.2)
    (a,) = apply_rules(two_path_pair(), v, EntreParams(util_threshold=0.1))
    assert (a.kind, a.rule) == (ActionKind.NOOP, "4b")


def test_rule_4a_applies():
    v = _forced_view([-0.05], [1.0], [2.0], [0.5], avg_e=3.0, avg_u=0.2)
    (a,) = apply_rules(two_path_pair(), v, EntreParams(util_threshold=0.1))
    assert (a.kind, a.delta, a.rule) == (ActionKind.APPLY, -0.05, "4a")


def test_energy_neutral_and_idle_moves():
    v = _forced_view([0.05, 0.0], [0.0, 1.0], [3.0, 2.0], [0.1, 0.2], avg_e=3.0)
    a, b = apply_rules(two_path_pair(), v, EntreParams())
    assert (a.kind, a.rule) == (ActionKind.APPLY, "energy-neutral")
    assert (b.kind, b.rule) == (ActionKind.NOOP, "idle")


def _three_lane_scenario():
    # pair 0 has three paths via nodes 2, 3, 4; pair 1 (5 -> 1) shares link 6 (4 -> 1)
    links = [(0, 2, 100), (2, 1, 100), (0, 3, 100), (3, 1, 100), (0, 4, 100), (4, 1, 100), (5, 4, 100)]
    pairs = [
        (0, 1, 30, [[0, 1], [2, 3], [4, 5]], [0.4, 0.3, 0.3]),
        (5, 1, 10, [[6, 5]]),
    ]
    return make_scenario([0, 1, 2, 3, 4, 5], links, pairs)


def test_exclusion_redistributes_proportionally():
    sc = _three_lane_scenario()
    out, done = exclude_path(sc, 0, 0)
    assert done
    assert out.pairs[0].splits.fractions == pytest.approx([0.0, 0.5, 0.5])
    assert list(out.pairs[0].splits.excluded) == [True, False, False]


def test_exclusion_sleeps_private_links_only():
    sc = _three_lane_scenario()
    out, _ = exclude_path(sc, 0, 0)
    assert out.topology.links[0].sleeping and out.topology.links[1].sleeping
    out, _ = exclude_path(out, 0, 2)
    assert out.topology.links[4].sleeping
    assert not out.topology.links[5].sleeping  # pair 1 still uses it
    assert link_sleep_consistent(out)


def test_last_path_is_never_excluded():
    sc = _three_lane_scenario()
    out, done = exclude_path(sc, 1, 0)
    assert not done and out is sc
    sc, _ = exclude_path(sc, 0, 0)
    sc, _ = exclude_path(sc, 0, 1)
    out, done = exclude_path(sc, 0, 2)
    assert not done
    assert not out.pairs[0].splits.excluded[2]


def test_exclusion_with_zero_remaining_mass():
    sc = _three_lane_scenario()
    sc.pairs[0].splits = SplitVector(np.array([1.0, 0.0, 0.0]), np.zeros(3, bool))
    out, _ = exclude_path(sc, 0, 0)
    assert out.pairs[0].splits.fractions == pytest.approx([0.0, 0.5, 0.5])


def _apply(x, deltas):
    split = SplitVector(np.array(x, float), np.zeros(len(x), bool))
    acts = [RoundAction(ActionKind.APPLY, d) if d else RoundAction(ActionKind.NOOP) for d in deltas]
    return apply_and_renormalize(split, acts).fractions


def test_renormalize_zero_sum():
    assert _apply([0.5, 0.5], [0.05, -0.05]) == pytest.approx([0.55, 0.45])


def test_renormalize_gated():
    assert _apply([0.5, 0.5], [0.05, 0.0]) == pytest.approx([0.55 / 1.05, 0.5 / 1.05])
    assert _apply([0.5, 0.5], [0.05, 0.0])[0] == pytest.approx(0.5238095, abs=1e-7)


def test_renormalize_clamp():
    x = _apply([0.5, 0.3, 0.2], [-0.6, 0.0, 0.0])
    assert x == pytest.approx([0.0, 0.6, 0.4])


def test_renormalize_degenerate_resets_to_uniform():
    assert _apply([0.5, 0.5], [-0.7, -0.7]) == pytest.approx([0.5, 0.5])


def test_balanced_scenario_is_a_fixed_point():
    sc = parallel_scenario([100, 100], 80)
    out, snap, converged = entre_round(sc)
    assert converged
    assert np.array_equal(out.pairs[0].splits.fractions, sc.pairs[0].splits.fractions)
    assert snap.max_abs_delta_x == 0.0


def test_all_on_one_path_is_a_fixed_point():
    # a path that carries nothing has no weight in the update
    sc = parallel_scenario([100, 100], 80, splits=[1.0, 0.0])
    out, _, converged = entre_round(sc)
    assert converged
    assert list(out.pairs[0].splits.fractions) == [1.0, 0.0]


def _hand_map(x, rho):
    # two identical unloaded links at load rho: u_p = rho * x_p, weights x_p
    u = [rho * v for v in x]
    avg = sum(a * b for a, b in zip(x, u))
    return [v + (avg - w) * v for v, w in zip(x, u)]


def test_two_path_trajectory_matches_hand_iteration():
    rho = 0.9
    sc = parallel_scenario([100, 100], 90, splits=[0.9, 0.1])
    x = [0.9, 0.1]
    for _ in range(10):
        sc, _, _ = entre_round(sc)
        x = _hand_map(x, rho)
        assert sc.pairs[0].splits.fractions == pytest.approx(x, abs=1e-12)
    assert abs(x[0] - 0.5) < 0.005
    assert x[0] == pytest.approx(0.50292180118, abs=1e-10)


def test_two_path_run_converges():
    params = EntreParams(converge_tol=5e-3)
    sc = parallel_scenario([100, 100], 90, splits=[0.9, 0.1], params=params)
    final, traj, iters = run_until_convergence(sc)
    assert iters <= 10 and traj[-1].converged
    assert final.pairs[0].splits.fractions == pytest.approx([0.5, 0.5], abs=0.01)


def _detour_scenario(te=0.0):
    # path 0: one 100M hop; path 1: a two-hop 1G detour (more ports, lightly used)
    links = [(0, 1, 100, "100M"), (0, 2, 1000, "1G"), (2, 1, 1000, "1G")]
    return make_scenario([0, 1, 2], links, [(0, 1, 50, [[0], [1, 2]])], params=EntreParams(energy_threshold=te))


def test_expensive_underused_path_is_excluded_in_round_one():
    sc = _detour_scenario().with_synced_links()
    trace = []
    out, snap, converged = entre_round(sc, trace=trace)
    assert [a.rule for a in trace[0].actions] == ["4a", "3a"]
    assert list(out.pairs[0].splits.excluded) == [False, True]
    assert list(out.pairs[0].splits.fractions) == [1.0, 0.0]
    assert out.topology.links[1].sleeping and out.topology.links[2].sleeping
    assert not converged and snap.excluded_routes_fraction == 0.5
    out2, _, converged2 = entre_round(out)
    assert converged2


def test_large_threshold_keeps_the_detour():
    out, _, _ = entre_round(_detour_scenario(te=100.0))
    assert not out.pairs[0].splits.excluded.any()


def _ungated_views(sc):
    state = recompute_state(sc.topology, sc.pairs, sc.profile)
    trace = []
    entre_round(sc, state, trace=trace)
    return trace


def test_zero_sum_identities(rng):
    checked = 0
    for _ in range(200):
        sc = random_scenario(rng)
        for t in _ungated_views(sc):
            v = t.view
            if v.rates[v.active].sum() == 0 or np.any(v.utilization[v.active] <= 0):
                continue
            assert abs(v.delta_x.sum()) <= 1e-12
            assert abs(v.rates @ v.delta_e) <= 1e-12 * max(1.0, v.rates.sum() * abs(v.avg_energy))
            checked += 1
    assert checked > 300


def _run_splits(sc):
    final, traj, _ = run_until_convergence(sc)
    return final, traj


def test_deterministic(rng):
    for _ in range(20):
        sc = random_scenario(rng)
        a, ta = _run_splits(sc.copy())
        b, tb = _run_splits(sc.copy())
        assert ta == tb
        for p, q in zip(a.pairs, b.pairs):
            assert np.array_equal(p.splits.fractions, q.splits.fractions)


def test_pair_order_does_not_matter(rng):
    for _ in range(30):
        sc = random_scenario(rng)
        rev = sc.copy()
        rev.pairs = list(reversed(rev.pairs))
        a, _, ca = entre_round(sc)
        b, _, cb = entre_round(rev)
        assert ca == cb
        by_id = {p.id: p for p in b.pairs}
        for p in a.pairs:
            q = by_id[p.id]
            assert np.array_equal(p.splits.fractions, q.splits.fractions)
            assert np.array_equal(p.splits.excluded, q.splits.excluded)
        assert a.topology.sleeping_ids() == b.topology.sleeping_ids()


def test_invariants_and_monotone_exclusion(rng):
    for _ in range(40):
        sc = random_scenario(rng).with_synced_links()
        excluded = [p.splits.excluded.copy() for p in sc.pairs]
        for r in range(1, 8):
            sc, snap, converged = entre_round(sc, round_index=r)
            for pair, before in zip(sc.pairs, excluded):
                assert pair.splits.violations() == []
                assert np.all(pair.splits.excluded >= before)
            excluded = [p.splits.excluded.copy() for p in sc.pairs]
            assert link_sleep_consistent(sc)
            assert 0 <= snap.sleeping_links_fraction <= 1
            if converged:
                break


def test_run_reports_non_convergence():
    params = EntreParams(converge_tol=1e-12, max_iters=3)
    sc = parallel_scenario([100, 100], 90, splits=[0.9, 0.1], params=params)
    _, traj, iters = run_until_convergence(sc)
    assert iters == 3 and len(traj) == 3 and not traj[-1].converged


@pytest.mark.parametrize(
    "kwargs",
    [{"measure_period": 0}, {"util_threshold": -1}, {"converge_tol": 0}, {"max_iters": 0}, {"max_iters": 2.5}],
)
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        EntreParams(**kwargs)


def test_equal_energy_profile_still_balances():
    prof = PowerProfile({"100M": 1.0}, idle_fraction=1.0)
    sc = parallel_scenario([100, 100], 90, splits=[0.9, 0.1], profile=prof)
    out, _, _ = entre_round(sc)
    assert out.pairs[0].splits.fractions[0] < 0.9
    assert sc.pairs[0].demand == 90 * MBPS
