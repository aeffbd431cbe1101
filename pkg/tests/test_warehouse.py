import math

import numpy as np
import pytest

from bdmtsp.core import BdmtspError, DynamicsScope, Fleet, ParseError, build_schedule
from bdmtsp.solvers import bd_avh
from bdmtsp.warehouse import (
    AisleSpec,
    TransferJob,
    WarehouseNetwork,
    dump_layout,
    expand_route,
    grid_network,
    jobs_to_instance,
    occupancy,
    parse_jobs_csv,
    parse_layout,
    shortest_path,
    shortest_path_route,
    transfer_jobs,
)

import reference


def _random_net(rng, n, extra=None):
    """Random connected net: spanning tree plus a few chords."""
    nodes = tuple((f"n{i}", float(rng.random()), float(rng.random())) for i in range(n))
    edges = []
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges.append((f"n{i}", f"n{j}", float(rng.uniform(0.5, 3.0))))
    for _ in range(extra if extra is not None else n):
        a, b = rng.integers(0, n, size=2)
        if a != b:
            edges.append((f"n{int(a)}", f"n{int(b)}", float(rng.uniform(0.5, 3.0))))
    return WarehouseNetwork(nodes=nodes, edges=tuple(edges))


PATH_NET = WarehouseNetwork(
    nodes=(("a", 0.0, 0.0), ("b", 2.0, 0.0), ("c", 5.0, 0.0)),
    edges=(("a", "b", 2.0), ("b", "c", 3.0)),
)


def test_shortest_path_identity_and_chain():
    assert shortest_path(PATH_NET, "a", "a") == 0.0
    assert shortest_path(PATH_NET, "a", "c") == 5.0
    assert shortest_path(PATH_NET, "c", "a") == 5.0


def test_shortest_path_route_nodes():
    walk, length = shortest_path_route(PATH_NET, "a", "c")
    assert walk == ("a", "b", "c")
    assert length == 5.0


def test_shortest_path_unknown_node():
    with pytest.raises(BdmtspError):
        shortest_path(PATH_NET, "a", "zz")
    with pytest.raises(BdmtspError):
        shortest_path(PATH_NET, "zz", "a")


def test_disconnected_network_rejected_at_construction():
    with pytest.raises(BdmtspError, match="disconnected"):
        WarehouseNetwork(
            nodes=(("a", 0, 0), ("b", 1, 0), ("c", 9, 9)),
            edges=(("a", "b", 1.0),),
        )


def test_network_validation():
    with pytest.raises(BdmtspError):
        WarehouseNetwork(nodes=(("a", 0, 0), ("a", 1, 1)), edges=())
    with pytest.raises(BdmtspError):
        WarehouseNetwork(nodes=(("a", 0, 0), ("b", 1, 1)), edges=(("a", "b", -2.0),))
    with pytest.raises(BdmtspError):
        WarehouseNetwork(nodes=(("a", 0, 0), ("b", 1, 1)), edges=(("a", "zz", 1.0),))
    with pytest.raises(BdmtspError):
        WarehouseNetwork(nodes=(("a", 0, 0), ("b", 1, 1)), edges=(("a", "a", 1.0),))


def test_shortest_paths_match_floyd_warshall_oracle():
    rng = np.random.default_rng(17)
    for trial in range(6):
        n = int(rng.integers(5, 61))
        net = _random_net(rng, n)
        oracle = reference.floyd_warshall(net.node_ids, net.edges)
        for a in net.node_ids[:: max(1, n // 7)]:
            for b in net.node_ids:
                assert shortest_path(net, a, b) == pytest.approx(
                    oracle[a][b], rel=1e-12, abs=1e-12
                )


def test_transfer_job_validation():
    with pytest.raises(BdmtspError):
        TransferJob(id="1", source="a", dest="a", internal_len=3.0)
    with pytest.raises(BdmtspError):
        TransferJob(id="1", source="a", dest="b", internal_len=0.0)


def test_jobs_to_instance_adjacent_jobs_have_zero_link():
    jobs = transfer_jobs(PATH_NET, [("j1", "a", "b"), ("j2", "b", "c")])
    inst, internal = jobs_to_instance(PATH_NET, jobs, depot="a")
    # job 1 ends where job 2 starts
    assert inst.dist[1, 2] == 0.0
    assert internal == 2.0 + 3.0
    assert inst.dist[0, 1] == 0.0  # depot to source of job 1 (same node)
    assert inst.dist[0, 2] == 2.0
    assert inst.dist[1, 0] == 2.0  # dest of job 1 back to depot
    assert inst.dist[2, 0] == 5.0


def test_jobs_to_instance_matches_pairwise_oracle():
    rng = np.random.default_rng(23)
    for trial in range(4):
        n = int(rng.integers(8, 40))
        net = _random_net(rng, n)
        oracle = reference.floyd_warshall(net.node_ids, net.edges)
        triples = []
        for k in range(int(rng.integers(2, 7))):
            a, b = rng.choice(n, size=2, replace=False)
            triples.append((f"j{k}", f"n{int(a)}", f"n{int(b)}"))
        jobs = transfer_jobs(net, triples)
        depot = f"n{int(rng.integers(0, n))}"
        inst, internal = jobs_to_instance(net, jobs, depot)
        count = len(jobs) + 1
        assert inst.dist.shape == (count, count)
        for j in range(count):
            for k in range(count):
                if j == k:
                    expect = 0.0
                elif j == 0:
                    expect = oracle[depot][jobs[k - 1].source]
                elif k == 0:
                    expect = oracle[jobs[j - 1].dest][depot]
                else:
                    expect = oracle[jobs[j - 1].dest][jobs[k - 1].source]
                assert inst.dist[j, k] == pytest.approx(expect, rel=1e-12, abs=1e-12)
        assert internal == pytest.approx(sum(j.internal_len for j in jobs))


def test_jobs_to_instance_is_asymmetric_in_general():
    net = grid_network(3, 4, AisleSpec(dx=2.0, dy=3.0))
    jobs = transfer_jobs(net, [("1", "a0.0", "a1.0"), ("2", "a0.3", "a0.2")])
    inst, _ = jobs_to_instance(net, jobs, depot="a1.1")
    # dest1 -> source2 is a long diagonal, dest2 -> source1 a short hop
    assert inst.dist[1, 2] == pytest.approx(3.0 + 3 * 2.0)
    assert inst.dist[2, 1] == pytest.approx(2 * 2.0)
    assert inst.dist[1, 2] != inst.dist[2, 1]


def test_jobs_to_instance_rejects_stale_internal_length():
    jobs = (TransferJob(id="x", source="a", dest="c", internal_len=4.0),)
    with pytest.raises(BdmtspError, match="internal length"):
        jobs_to_instance(PATH_NET, jobs, depot="a")


def test_jobs_to_instance_requires_jobs():
    with pytest.raises(BdmtspError):
        jobs_to_instance(PATH_NET, (), depot="a")


def test_solve_and_expand_recovers_exact_walk_length():
    rng = np.random.default_rng(31)
    for trial in range(5):
        net = grid_network(4, 5, AisleSpec(dx=2.0, dy=2.5, shelf_len=1.0))
        ids = net.node_ids
        triples = []
        for k in range(6):
            a, b = rng.choice(len(ids), size=2, replace=False)
            triples.append((f"j{k}", ids[int(a)], ids[int(b)]))
        jobs = transfer_jobs(net, triples)
        depot = ids[int(rng.integers(0, len(ids)))]
        inst, internal = jobs_to_instance(net, jobs, depot)
        sched = build_schedule(DynamicsScope.relative(1.0), inst, m=1)
        out = bd_avh(inst, Fleet(m=1), sched, closed=True)
        walk, walk_len = expand_route(net, jobs, depot, out.routes[0], closed=True)
        assert walk[0] == depot and walk[-1] == depot
        assert walk_len == pytest.approx(out.total + internal, abs=1e-9)


def test_expand_route_single_job_by_hand():
    jobs = transfer_jobs(PATH_NET, [("j1", "b", "c")])
    walk, length = expand_route(PATH_NET, jobs, depot="a", route=(0, 1), closed=True)
    assert walk == ("a", "b", "c", "b", "a")
    assert length == 2.0 + 3.0 + 5.0
    walk_open, length_open = expand_route(PATH_NET, jobs, depot="a", route=(0, 1), closed=False)
    assert walk_open == ("a", "b", "c")
    assert length_open == 5.0


def test_expand_route_validation():
    jobs = transfer_jobs(PATH_NET, [("j1", "b", "c")])
    with pytest.raises(BdmtspError):
        expand_route(PATH_NET, jobs, depot="a", route=(1,))
    with pytest.raises(BdmtspError):
        expand_route(PATH_NET, jobs, depot="a", route=(0, 5))


# ------------------------------------------------------------------ grids


def test_grid_corridor():
    net = grid_network(1, 2)
    assert len(net.nodes) == 2
    assert len(net.edges) == 1
    assert shortest_path(net, "a0.0", "a0.1") == 2.0


def test_grid_closed_form_counts():
    net = grid_network(3, 3)
    assert len(net.nodes) == 9
    assert len(net.edges) == 3 * 2 + 3 * 2
    shelf = grid_network(3, 3, AisleSpec(shelf_len=0.8))
    assert len(shelf.nodes) == 18
    assert len(shelf.edges) == 12 + 9
    assert shortest_path(shelf, "s0.0", "a0.0") == 0.8


def test_grid_distances_are_rectilinear():
    net = grid_network(4, 6, AisleSpec(dx=1.5, dy=2.0))
    assert shortest_path(net, "a0.0", "a3.5") == pytest.approx(5 * 1.5 + 3 * 2.0)


def test_grid_rejects_degenerate():
    with pytest.raises(BdmtspError):
        grid_network(0, 5)
    with pytest.raises(BdmtspError):
        grid_network(1, 1)
    with pytest.raises(BdmtspError):
        AisleSpec(dx=-1.0)


def test_occupancy_ratio():
    assert occupancy(1120, 3200) == pytest.approx(0.35)
    with pytest.raises(BdmtspError):
        occupancy(5, 0)


# --------------------------------------------------------------------- io


LAYOUT_TEXT = """
# three nodes on a line
node a 0 0
node b 2 0
node c 5 0
edge a b
edge b c 3
"""


def test_parse_layout_with_defaults_and_comments():
    net = parse_layout(LAYOUT_TEXT)
    assert net.node_ids == ("a", "b", "c")
    assert shortest_path(net, "a", "c") == 5.0


def test_layout_roundtrip():
    net = grid_network(2, 3, AisleSpec(shelf_len=1.2))
    again = parse_layout(dump_layout(net))
    assert again.node_ids == net.node_ids
    assert again.edges == net.edges


@pytest.mark.parametrize(
    "text",
    ["node a 0", "edge a b 1", "vertex a 0 0", "node a 0 zero"],
)
def test_parse_layout_rejects_malformed(text):
    with pytest.raises(ParseError):
        parse_layout(text)


def test_parse_jobs_csv():
    jobs = parse_jobs_csv("id,source,dest\n1,a,c\n2,c,b\n", PATH_NET)
    assert [j.internal_len for j in jobs] == [5.0, 3.0]
    with pytest.raises(ParseError):
        parse_jobs_csv("id,src\n1,a\n", PATH_NET)
    with pytest.raises(ParseError):
        parse_jobs_csv("id,source,dest\n", PATH_NET)
