import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netsensors.graph import (
    ContactNetwork,
    NetworkFormatError,
    complete_graph,
    degree_stats,
    from_edges,
    generate_citylike,
    generate_starlike,
    load_network,
    network_to_text,
    save_network,
    star_graph,
)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_triangle_edge_list(tmp_path):
    net = load_network(write(tmp_path, "k3.txt", "0 1\n1 2\n0 2\n"), format="edge-list")
    assert degree_stats(net) == (3, 2.0, 2)
    assert net.duration.tolist() == [1.0, 1.0, 1.0]
    assert net.meeting_type.tolist() == [6, 6, 6]


def test_self_loop_rejected_with_line_number(tmp_path):
    p = write(tmp_path, "loop.txt", "# header comment\n0 1 10 1\n5 5 100 2\n")
    with pytest.raises(NetworkFormatError, match="self-loop") as err:
        load_network(p, format="edge-list")
    assert err.value.line == 3


@pytest.mark.parametrize(
    "body, message",
    [
        ("2 1\n0 30 1 0\n1 30 1 0\n0 2 10 1\n", "undeclared"),
        ("2 1\n0 30 1 0\n1 30 1 0\n0 1 -4 1\n", "negative duration"),
        ("2 1\n0 30 1 0\n1 30 1 0\n0 1 4 9\n", "meeting type"),
        ("2 1\n0 30 1 0\n1 300 1 0\n0 1 4 1\n", "age"),
        ("2 1\n0 30 1 0\n1 30 1 0\n0 1 x 1\n", "cannot parse"),
        ("2 1\n0 30 1 0\n0 30 1 0\n0 1 4 1\n", "duplicate"),
        ("2 2\n0 30 1 0\n1 30 1 0\n0 1 4 1\n", "expected 2 edge lines"),
        ("", "empty"),
    ],
)
def test_attributed_errors(tmp_path, body, message):
    with pytest.raises(NetworkFormatError, match=message):
        load_network(write(tmp_path, "bad.txt", body))


def test_degree_stats_examples():
    assert degree_stats(complete_graph(3)) == (3, 2.0, 2)
    assert degree_stats(star_graph(9)) == (10, 1.8, 9)


@given(st.integers(2, 30))
def test_degree_stats_complete(n):
    assert degree_stats(complete_graph(n)) == (n, n - 1, n - 1)


def test_parallel_edges_are_separate_meetings():
    net = from_edges(2, [(0, 1), (1, 0)], durations=[10.0, 5.0])
    assert net.degree().tolist() == [2, 2]
    assert net.weighted_degree().tolist() == [15.0, 15.0]
    assert degree_stats(net).avg_degree == 2.0
    assert net.neighbors_of(0).tolist() == [1]


def test_counts_file_average_degree(tmp_path):
    # 10,670 nodes and 21,999 edges: average degree 2|E|/N
    n, m = 10670, 21999
    rng = np.random.default_rng(3)
    u = rng.integers(0, n, m)
    v = (u + rng.integers(1, n, m)) % n
    net = ContactNetwork(np.full(n, 30), np.ones(n, int), np.zeros(n, int), u, v, np.full(m, 60.0), np.full(m, 2))
    p = tmp_path / "as_graph_sized.txt"
    save_network(net, p)
    loaded = load_network(p)
    s = degree_stats(loaded)
    assert (s.n, loaded.m) == (n, m)
    assert s.avg_degree == pytest.approx(2 * m / n)
    assert round(s.avg_degree, 2) == 4.12


def test_round_trip_is_byte_identical(tmp_path):
    net = generate_citylike(300, 8, seed=2)
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    save_network(net, a)
    save_network(load_network(a), b)
    assert a.read_bytes() == b.read_bytes()


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_round_trip_random_networks(tmp_path_factory, data):
    n = data.draw(st.integers(2, 12))
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] != e[1])
    edges = data.draw(st.lists(pairs, max_size=25))
    durs = data.draw(st.lists(st.floats(0, 1e5, allow_nan=False), min_size=len(edges), max_size=len(edges)))
    types = data.draw(st.lists(st.integers(1, 6), min_size=len(edges), max_size=len(edges)))
    ages = data.draw(st.lists(st.integers(0, 130), min_size=n, max_size=n))
    net = from_edges(n, edges, durations=durs, meeting_types=types, age=ages)
    p = tmp_path_factory.mktemp("rt") / "net.txt"
    save_network(net, p)
    back = load_network(p)
    assert network_to_text(back) == network_to_text(net)
    np.testing.assert_array_equal(back.duration, net.duration)


def test_starlike_shape_and_determinism():
    a = generate_starlike(1000, 0.01, seed=1)
    b = generate_starlike(1000, 0.01, seed=1)
    assert network_to_text(a) == network_to_text(b)
    s = degree_stats(a)
    assert s.max_degree > 10 * s.avg_degree
    assert network_to_text(generate_starlike(1000, 0.01, seed=2)) != network_to_text(a)


def test_starlike_is_connected():
    net = generate_starlike(2000, 0.01, seed=4)
    seen = np.zeros(net.n, bool)
    seen[0] = True
    todo = [0]
    while todo:
        x = todo.pop()
        for y in net.neighbors_of(x).tolist():
            if not seen[y]:
                seen[y] = True
                todo.append(y)
    assert seen.all()


def test_citylike_shape():
    net = generate_citylike(10_000, 50, seed=7)
    s = degree_stats(net)
    assert abs(s.avg_degree - 50) <= 5
    assert s.max_degree < 20 * s.avg_degree
    assert network_to_text(generate_citylike(2000, 20, seed=7)) == network_to_text(generate_citylike(2000, 20, seed=7))


def test_citylike_school_age_cluster_has_long_contacts():
    net = generate_citylike(3000, 20, seed=1)
    school = net.meeting_type == 5
    assert school.any()
    ages = np.concatenate([net.age[net.u[school]], net.age[net.v[school]]])
    assert ages.min() >= 5 and ages.max() <= 20
    assert np.median(net.duration[school]) > 20000


@pytest.mark.parametrize("make", [generate_starlike, lambda n, seed: generate_citylike(n, 12, seed=seed)])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_generated_network_invariants(make, seed):
    net = make(500, seed=seed)
    assert not (net.u == net.v).any()
    assert (net.duration >= 0).all()
    assert set(np.unique(net.meeting_type).tolist()) <= {1, 2, 3, 4, 5, 6}
    assert net.age.max() <= 130


@pytest.mark.parametrize(
    "call",
    [
        lambda: generate_starlike(5),
        lambda: generate_starlike(100, hub_fraction=0.2),
        lambda: generate_starlike(100, hub_fraction=0.0),
        lambda: generate_citylike(50),
        lambda: generate_citylike(1000, 3),
    ],
)
def test_generator_parameter_errors(call):
    with pytest.raises(ValueError):
        call()


def test_network_is_immutable():
    net = complete_graph(4)
    with pytest.raises(ValueError):
        net.duration[0] = 5.0
    with pytest.raises(AttributeError):
        net.age = np.zeros(4)


def test_fixture_file_hash_is_stable():
    from conftest import FIXTURES

    text = (FIXTURES / "small_city.txt").read_text()
    net = generate_citylike(1000, 12, seed=7)
    assert hashlib.sha256(network_to_text(net).encode()).hexdigest() == hashlib.sha256(text.encode()).hexdigest()
