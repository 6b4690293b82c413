import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netsensors.epidemic import Dendrogram
from netsensors.graph import from_edges, generate_starlike, star_graph
from netsensors.sensors import (
    SensorSet,
    estimate_coverage,
    infected_matrix,
    select_dt,
    select_greedy_mait,
    select_random,
    select_topk_degree,
    select_tt,
    select_weighted_degree,
    tt_scores,
)

from conftest import dendrogram


@pytest.fixture
def three():
    # depths per node:  D1: 0:0 1:1 2:2 3:1   D2: 1:0 2:1 4:2 0:1   D3: 0:0 2:1 5:2
    return [
        dendrogram(6, {1: 0, 2: 1, 3: 0}),
        dendrogram(6, {2: 1, 4: 2, 0: 1}),
        dendrogram(6, {2: 0, 5: 2}),
    ]


def test_tt_hand_fixture(three):
    scores = tt_scores(three)
    np.testing.assert_allclose(scores.t_inf, [1 / 3, 1 / 2, 4 / 3, 1, 2, 2])
    assert scores.hit_count.tolist() == [3, 2, 3, 1, 1, 1]
    assert select_tt(three, 6).members.tolist() == [0, 1, 3, 2, 4, 5]
    assert select_tt(three, 6, eps0=0.5).members.tolist() == [0, 1, 2]


def test_dt_equals_tt_on_forests(three, small_city_ensemble):
    assert select_dt(three, 4).members.tolist() == select_tt(three, 4).members.tolist()
    dens = small_city_ensemble.dendrograms
    assert select_dt(dens, 50).members.tolist() == select_tt(dens, 50).members.tolist()


def test_equal_depth_prefers_more_hits_then_lower_id():
    dens = [dendrogram(4, {3: 0, 1: 0}), dendrogram(4, {3: 0}), dendrogram(4, {2: 0})]
    # nodes 1, 2 and 3 all average depth 1; node 3 is hit twice
    assert select_tt(dens, 4).members.tolist() == [0, 3, 1, 2]


def test_star_hub_seed_is_picked_first():
    dens = [dendrogram(6, {leaf: 0 for leaf in range(1, 6)}) for _ in range(3)]
    assert select_tt(dens, 1).members.tolist() == [0]


def test_rare_node_excluded_despite_small_depth():
    dens = [dendrogram(4, {1: 0, 2: 1}) for _ in range(99)] + [dendrogram(4, {3: 0, 1: 0, 2: 1})]
    chosen = select_tt(dens, 4, eps0=0.05)
    assert 3 not in chosen.members.tolist()
    assert chosen.shortfall == 1 and len(chosen) == 3


def test_selected_sensors_meet_hit_rate(small_city_ensemble):
    dens = small_city_ensemble.dendrograms
    hit = infected_matrix(dens).mean(axis=0)
    for eps0 in (0.1, 0.5, 0.9):
        chosen = select_tt(dens, 100, eps0=eps0)
        assert (hit[chosen.members] >= eps0).all()


def test_day_scoring_and_depth_threshold(three):
    by_day = tt_scores(three, scoring="day")
    np.testing.assert_allclose(by_day.t_inf, tt_scores(three).t_inf)
    # literal reading: drop nodes whose average depth is below eps0
    assert select_dt(three, 6, eps0=1.0, threshold="depth").members.tolist() == [3, 2, 4, 5]
    with pytest.raises(ValueError):
        tt_scores(three, scoring="hours")


@pytest.mark.parametrize("call", [lambda d: select_tt(d, 0), lambda d: select_dt(d, 0),
                                  lambda d: select_greedy_mait(d, 0, 0.5)])
def test_k_zero_rejected(three, call):
    with pytest.raises(ValueError):
        call(three)


def test_coverage_examples(three):
    assert estimate_coverage([], three) == 0.0
    assert estimate_coverage(range(6), three) == 1.0
    assert estimate_coverage([3], three) == pytest.approx(1 / 3)
    assert estimate_coverage([3, 4], three) == pytest.approx(2 / 3)


def test_coverage_counts_runs():
    n = 3
    dens = []
    for run in range(1000):
        parents = {1: 0} if run < 730 else {2: 0}
        dens.append(dendrogram(n, parents))
    assert estimate_coverage([1], dens) == 0.73


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_coverage_monotone_and_submodular(data):
    runs = data.draw(st.integers(1, 8))
    n = data.draw(st.integers(2, 8))
    hit = np.array(data.draw(st.lists(st.lists(st.booleans(), min_size=n, max_size=n), min_size=runs,
                                      max_size=runs)))
    T = set(data.draw(st.lists(st.integers(0, n - 1), max_size=n)))
    S = {x for x in T if data.draw(st.booleans())}
    v = data.draw(st.integers(0, n - 1))
    f = lambda A: estimate_coverage(sorted(A), hit)  # noqa: E731
    assert f(S) <= f(T)
    if v not in T:
        assert f(S | {v}) - f(S) >= f(T | {v}) - f(T) - 1e-12


def test_mait_examples(three):
    assert select_greedy_mait(three, 3, eps=0.0).members.tolist() == select_tt(three, 3, eps0=0.0).members.tolist()
    first = select_greedy_mait(three, 1, eps=0.8)
    assert first.members.tolist() == [0] and first.coverage == 1.0 and first.attained
    assert first.mean_t_inf == pytest.approx(1 / 3)


def test_mait_grows_past_k_and_reports_unattainable():
    # seeds 0, 3 and 2 (depth 0, 0 and 0.5 on average): full coverage needs all three
    dens = [dendrogram(5, {1: 0}), dendrogram(5, {2: 3}), dendrogram(5, {4: 2})]
    grown = select_greedy_mait(dens, 1, eps=1.0)
    assert grown.attained and grown.coverage == 1.0
    assert grown.members.tolist() == [0, 3, 2]
    # with eps0 = 0.3 only nodes 2 and 4 survive, and they miss the first run
    dens.append(Dendrogram(np.array([-1, -1, -1, -1, 0]), np.full(5, -1), np.array([4])))
    short = select_greedy_mait(dens, 1, eps=1.0, eps0=0.3)
    assert not short.attained
    assert short.coverage == 0.75


def test_topk_star_picks_hub():
    net = star_graph(20)
    chosen = select_topk_degree(net, 1, sample_size=3, rng_seed=4)
    assert chosen.members.tolist() == [0]


def test_topk_full_sample_nominates_every_connected_node():
    net = from_edges(7, [(0, 1), (1, 2), (2, 0), (3, 4)])  # 5 and 6 isolated
    chosen = select_topk_degree(net, 7, sample_size=7, K=10)
    assert sorted(chosen.members.tolist()) == [0, 1, 2, 3, 4]
    assert chosen.shortfall == 2


def test_weighted_degree_prefers_long_contact():
    # node 1 has one 1e6-second meeting, node 2 three 1e2-second meetings; node 0 meets both
    net = from_edges(5, [(0, 1), (0, 2), (2, 3), (2, 4)], durations=[1e6, 1e2, 1e2, 1e2])
    wd = select_weighted_degree(net, 5, sample_size=5, K=1)
    deg = select_topk_degree(net, 5, sample_size=5, K=1)
    assert sorted(wd.members.tolist()) == [0, 1, 2]
    assert sorted(deg.members.tolist()) == [0, 2]


def test_weighted_degree_equals_degree_for_equal_durations():
    net = generate_starlike(400, seed=3)
    net_eq = from_edges(net.n, np.column_stack([net.u, net.v]), durations=np.full(net.m, 60.0))
    a = select_topk_degree(net_eq, 20, rng_seed=9)
    b = select_weighted_degree(net_eq, 20, rng_seed=9)
    assert a.members.tolist() == b.members.tolist()


def test_nomination_is_deterministic():
    net = generate_starlike(400, seed=3)
    assert select_topk_degree(net, 20, rng_seed=1).members.tolist() == \
        select_topk_degree(net, 20, rng_seed=1).members.tolist()
    assert len(set(select_topk_degree(net, 20, rng_seed=1).members.tolist())) == 20


def test_random_sets():
    net = star_graph(9)
    assert sorted(select_random(net, 10).members.tolist()) == list(range(10))
    assert select_random(net, 4, 3).members.tolist() == select_random(net, 4, 3).members.tolist()
    assert 0 not in select_random(net, 9, exclude=[0]).members.tolist()
    with pytest.raises(ValueError):
        select_random(net, 0)
    with pytest.raises(ValueError):
        select_random(net, 11)


def test_sensor_set_text_round_trip(three):
    s = select_tt(three, 3)
    text = s.dumps()
    assert text.splitlines()[0] == "TT,eps0=0.1;k=3;scoring=depth"
    back = SensorSet.loads(text)
    assert back.members.tolist() == s.members.tolist()
    assert back.strategy == "TT" and back.params["k"] == "3"
