import logging

import pytest

from deepdemand.roadgraph import (
    Edge,
    EdgeNotFound,
    InvalidEdges,
    InvalidSyntheticSpec,
    MPH_TO_MPS,
    RoadClass,
    RoadGraph,
    SyntheticSpec,
    assign_travel_times,
    generate_synthetic_network,
    load_targets,
    parse_speed_mph,
    synthetic_areas,
    write_targets,
)

from conftest import make_graph


@pytest.mark.parametrize(
    "raw, expected",
    [("30", 30.0), ("30 mph", 30.0), (" 45.5 ", 45.5), ("0", None), ("fast", None), (None, None)],
)
def test_parse_speed_mph(raw, expected):
    assert parse_speed_mph(raw) == expected


def test_parse_speed_converts_kmh():
    assert parse_speed_mph("50 km/h") == pytest.approx(50 / 1.609344)


def test_assign_travel_times_uses_posted_speed():
    nodes = {0: (0.0, 0.0), 1: (1000.0, 0.0)}
    graph = RoadGraph(nodes, [Edge(7, 0, 1, 1000.0, RoadClass.primary, maxspeed="20")])
    timed = assign_travel_times(graph)
    assert timed.edge(7).travel_time_s == pytest.approx(1000.0 / (20 * MPH_TO_MPS))
    # the input graph is untouched
    assert graph.edge(7).travel_time_s is None


def test_assign_travel_times_falls_back_with_warning(caplog):
    nodes = {0: (0.0, 0.0), 1: (1000.0, 0.0)}
    graph = RoadGraph(nodes, [Edge(1, 0, 1, 1000.0, RoadClass.motorway, maxspeed="national")])
    with caplog.at_level(logging.WARNING, logger="deepdemand.roadgraph"):
        timed = assign_travel_times(graph)
    expected = 1000.0 / (RoadClass.motorway.fallback_mph * MPH_TO_MPS)
    assert timed.edge(1).travel_time_s == pytest.approx(expected)
    assert "unusable posted speed" in caplog.text


def test_unknown_road_class_is_other():
    assert RoadClass.parse("bridleway") is RoadClass.other
    assert RoadClass.parse(" Motorway ") is RoadClass.motorway


def test_invalid_edges_are_reported_together():
    nodes = {0: (0.0, 0.0), 1: (1.0, 0.0)}
    edges = [
        Edge(1, 0, 1, 10.0, RoadClass.residential),
        Edge(2, 0, 9, 10.0, RoadClass.residential),
        Edge(3, 1, 0, -1.0, RoadClass.residential),
        Edge(1, 1, 0, 10.0, RoadClass.residential),
    ]
    with pytest.raises(InvalidEdges) as excinfo:
        RoadGraph(nodes, edges)
    assert excinfo.value.edge_ids == [1, 2, 3]


def test_parallel_edges_are_kept_apart():
    graph = make_graph([(0, 1, 5.0), (0, 1, 3.0)])
    assert graph.nx_graph.number_of_edges(0, 1) == 2
    assert sorted(t for _, t in graph.successors(0)) == [3.0, 5.0]


def test_missing_edge():
    graph = make_graph([(0, 1, 5.0)])
    with pytest.raises(EdgeNotFound) as excinfo:
        graph.edge(99)
    assert excinfo.value.edge_id == 99


def test_files_round_trip(tmp_path):
    graph, _ = generate_synthetic_network(SyntheticSpec(size=4, seed=1))
    graph.to_files(tmp_path / "edges.csv", tmp_path / "nodes.csv")
    raw = RoadGraph.from_files(tmp_path / "edges.csv", tmp_path / "nodes.csv")
    loaded = assign_travel_times(raw)
    assert loaded.nodes == graph.nodes
    assert sorted(loaded.edges) == sorted(graph.edges)
    for edge_id, edge in graph.edges.items():
        other = loaded.edge(edge_id)
        assert (other.u, other.v, other.road_class, other.region) == (
            edge.u,
            edge.v,
            edge.road_class,
            edge.region,
        )
        assert other.travel_time_s == pytest.approx(edge.travel_time_s)


def _write_files(directory, edge_rows, node_rows="0,0,0\n1,100,0\n"):
    header = "edge_id,u,v,length_m,highway_class,maxspeed_mph,region\n"
    (directory / "edges.csv").write_text(header + edge_rows)
    (directory / "nodes.csv").write_text("node_id,x_m,y_m\n" + node_rows)
    return directory / "edges.csv", directory / "nodes.csv"


def test_unparsable_lengths_name_their_edges(tmp_path):
    rows = "0,0,1,abc,motorway,,\n1,1,0,100,motorway,,\n2,0,1,,primary,,\n"
    with pytest.raises(InvalidEdges) as excinfo:
        RoadGraph.from_files(*_write_files(tmp_path, rows))
    assert excinfo.value.edge_ids == [0, 2]


def test_unparsable_ids_and_endpoints(tmp_path):
    rows = "0,0,1,100,motorway,,\nx,1,0,100,motorway,,\n"
    with pytest.raises(InvalidEdges, match="data rows 2"):
        RoadGraph.from_files(*_write_files(tmp_path, rows))
    with pytest.raises(InvalidEdges) as excinfo:
        RoadGraph.from_files(*_write_files(tmp_path, "0,0,b,100,motorway,,\n"))
    assert excinfo.value.edge_ids == [0]
    with pytest.raises(InvalidEdges, match="node values on data rows 1"):
        RoadGraph.from_files(*_write_files(tmp_path, "0,0,1,100,motorway,,\n", "0,east,0\n"))


def test_targets_round_trip(tmp_path):
    graph, targets = generate_synthetic_network(SyntheticSpec(size=4, seed=1))
    labelled = [t._replace(aadt=1000.0 + i) for i, t in enumerate(targets)]
    write_targets(tmp_path / "targets.csv", labelled)
    loaded = load_targets(tmp_path / "targets.csv", graph)
    assert [(t.edge_id, t.aadt, t.region) for t in loaded] == [
        (t.edge_id, t.aadt, t.region) for t in labelled
    ]


def test_load_targets_rejects_unknown_edges(tmp_path):
    graph = make_graph([(0, 1, 5.0)])
    (tmp_path / "targets.csv").write_text("edge_id,aadt,region\n0,10,R0\n5,3,R1\n0,-1,R0\n")
    with pytest.raises(InvalidEdges) as excinfo:
        load_targets(tmp_path / "targets.csv", graph)
    assert excinfo.value.edge_ids == [0, 5]


def test_synthetic_network_shape():
    n = 5
    graph, targets = generate_synthetic_network(SyntheticSpec(size=n, seed=0))
    assert len(graph) == n * n
    assert len(graph.edges) == 4 * n * (n - 1)
    assert len(targets) == n - 1
    assert all(t.road_class is RoadClass.motorway for t in targets)
    assert all(t.region in {"R0", "R1", "R2"} for t in targets)
    assert graph.has_travel_times


def test_synthetic_network_is_deterministic():
    spec = SyntheticSpec(size=5, seed=11, both_directions=True)
    first, first_targets = generate_synthetic_network(spec)
    second, second_targets = generate_synthetic_network(spec)
    assert first.checksum() == second.checksum()
    assert first_targets == second_targets
    assert len(first_targets) == 2 * (spec.size - 1)


def test_synthetic_network_rejects_tiny_grids():
    with pytest.raises(InvalidSyntheticSpec):
        generate_synthetic_network(SyntheticSpec(size=1))


def test_synthetic_areas_sit_on_nodes():
    graph, _ = generate_synthetic_network(SyntheticSpec(size=5, seed=0))
    areas = synthetic_areas(graph, fraction=0.4, n_features=6, seed=2)
    assert list(areas.features.columns[:2]) == ["area_id", "population"]
    assert len(areas.features.columns) == 7
    assert len(areas.features) == 10
    node_xy = {graph.coordinates(n) for n in graph.nodes}
    for row in areas.centroids.itertuples(index=False):
        assert (row.x_m, row.y_m) in node_xy
    assert (areas.features["population"] > 0).all()


@pytest.mark.parametrize(
    "road_class, length, expected",
    [(RoadClass.motorway, 1609.34, 51.43), (RoadClass.residential, 670.56, 100.0)],
)
def test_class_fallback_speeds(road_class, length, expected):
    nodes = {0: (0.0, 0.0), 1: (length, 0.0)}
    timed = assign_travel_times(RoadGraph(nodes, [Edge(0, 0, 1, length, road_class)]))
    assert timed.edge(0).travel_time_s == pytest.approx(expected, abs=5e-3)


def test_posted_speed_equal_to_fallback_changes_nothing():
    nodes = {0: (0.0, 0.0), 1: (1000.0, 0.0)}
    posted = Edge(0, 0, 1, 1000.0, RoadClass.motorway, maxspeed="70")
    bare = Edge(0, 0, 1, 1000.0, RoadClass.motorway)
    assert (
        assign_travel_times(RoadGraph(nodes, [posted])).edge(0).travel_time_s
        == assign_travel_times(RoadGraph(nodes, [bare])).edge(0).travel_time_s
    )
