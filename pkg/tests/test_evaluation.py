import json
import math

import numpy as np
import pytest

from deepdemand.evaluation import (
    ConstantSpec,
    EmptyInput,
    GravityEdge,
    GravityModel,
    GravitySpec,
    InvalidMasses,
    InvalidProtocol,
    LinearSpec,
    MissingRegions,
    OracleSpec,
    Protocol,
    SingularDesign,
    Split,
    baseline_gravity,
    baseline_linear,
    build_eval_edges,
    edge_design,
    geh,
    gravity_edge,
    make_folds,
    metrics,
    pair_metrics,
    run_cv,
)
from deepdemand.odextract import ODContext, ODPair
from deepdemand.roadgraph import TargetEdge


def _targets(n, regions=("R0", "R1", "R2")):
    return [
        TargetEdge(i, i, i + 1, 10.0, aadt=1000.0 + 100 * i, region=regions[i % len(regions)])
        for i in range(n)
    ]


def _labelled(grid):
    _, targets, _, _ = grid
    return [
        t._replace(aadt=500.0 + 250.0 * i, region=("R0", "R1")[i % 2])
        for i, t in enumerate(targets)
    ]


def test_geh_known_values():
    assert geh(100.0, 50.0) == pytest.approx(math.sqrt(2 * 2500 / 150), abs=1e-4)
    assert geh(100.0, 50.0) == pytest.approx(5.7735, abs=1e-4)
    assert geh(0.0, 0.0) == 0.0
    np.testing.assert_allclose(geh([10.0, 0.0], [10.0, 8.0]), [0.0, 4.0])


def test_mean_predictor_has_zero_r2():
    y = np.array([1.0, 2.0, 3.0, 6.0])
    m = metrics(y, np.full(4, y.mean()))
    assert m.r2 == pytest.approx(0.0, abs=1e-12)
    assert m.mae == pytest.approx(1.5)
    assert m.n == 4


def test_r2_undefined_for_constant_observations():
    m = metrics([5.0, 5.0], [4.0, 6.0])
    assert m.r2 is None
    assert m.mae == pytest.approx(1.0)


def test_metrics_reject_empty_input():
    with pytest.raises(EmptyInput):
        metrics([], [])
    with pytest.raises(EmptyInput):
        metrics([1.0, 2.0], [1.0])
    with pytest.raises(EmptyInput):
        pair_metrics([])
    assert pair_metrics([(1.0, 1.0), (3.0, 3.0)]).r2 == 1.0


def test_random_folds_are_balanced_and_seeded():
    targets = _targets(23)
    plan = make_folds(targets, "random", k=5, seed=4)
    assert plan.protocol is Protocol.random
    assert plan.folds == ["0", "1", "2", "3", "4"]
    sizes = sorted(len(plan.test_edges(f)) for f in plan.folds)
    assert sizes == [4, 4, 5, 5, 5]
    assert sorted(plan.assignment) == list(range(23))
    assert make_folds(targets, "random", k=5, seed=4).assignment == plan.assignment
    assert make_folds(targets, "random", k=5, seed=5).assignment != plan.assignment
    for fold in plan.folds:
        assert not set(plan.test_edges(fold)) & set(plan.train_edges(fold))


def test_spatial_folds_follow_regions():
    plan = make_folds(_targets(9), "spatial")
    assert plan.folds == ["R0", "R1", "R2"]
    assert plan.test_edges("R1") == [1, 4, 7]
    assert plan.k == 3


def test_spatial_folds_need_regions():
    targets = _targets(4)
    targets[2] = targets[2]._replace(region=None)
    with pytest.raises(MissingRegions) as excinfo:
        make_folds(targets, "spatial")
    assert excinfo.value.edge_ids == [2]
    with pytest.raises(InvalidProtocol):
        make_folds(_targets(4, regions=("R0",)), "spatial")


@pytest.mark.parametrize("protocol, k", [("grid", 5), ("random", 1)])
def test_invalid_protocols(protocol, k):
    with pytest.raises(InvalidProtocol):
        make_folds(_targets(6), protocol, k=k)


def test_linear_fit_is_exact_on_linear_data():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(30, 4))
    y = 2.0 + x @ np.array([1.0, -2.0, 0.5, 3.0])
    model = baseline_linear(x, y)
    assert model.intercept == pytest.approx(2.0)
    np.testing.assert_allclose(model.coef, [1.0, -2.0, 0.5, 3.0], atol=1e-10)
    np.testing.assert_allclose(model.predict(x), y, atol=1e-10)


def test_heavy_ridge_shrinks_to_the_mean():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(40, 3))
    y = 10.0 + x @ np.array([4.0, 1.0, -1.0]) + rng.normal(size=40)
    model = baseline_linear(x, y, ridge=1e12)
    np.testing.assert_allclose(model.coef, 0.0, atol=1e-6)
    assert model.intercept == pytest.approx(y.mean(), abs=1e-4)


def test_tiny_ridge_is_continuous_with_least_squares():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(50, 3))
    y = 5.0 + x @ np.array([2.0, -1.0, 0.5]) + rng.normal(size=50)
    plain = baseline_linear(x, y)
    tiny = baseline_linear(x, y, ridge=1e-6)
    np.testing.assert_allclose(tiny.coef, plain.coef, atol=1e-5)
    assert tiny.intercept == pytest.approx(plain.intercept, abs=1e-5)


def test_rank_deficient_design():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(10, 2))
    x = np.column_stack([x, x[:, 0]])
    y = rng.normal(size=10)
    with pytest.raises(SingularDesign):
        baseline_linear(x, y)
    assert np.isfinite(baseline_linear(x, y, ridge=1.0).coef).all()


def test_perfect_prediction():
    y = np.array([120.0, 0.0, 4500.0, 87.5])
    m = metrics(y, y.copy())
    assert m.mgeh == 0.0 and m.mae == 0.0
    assert m.r2 == 1.0


def test_ten_edges_five_folds():
    plan = make_folds(_targets(10), "random", k=5, seed=0)
    assert [len(plan.test_edges(f)) for f in plan.folds] == [2, 2, 2, 2, 2]


def test_linear_fit_matches_lstsq():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(100, 5))
    y = rng.normal(size=100) * 50.0 + x @ rng.normal(size=5)
    model = baseline_linear(x, y)
    a = np.hstack([np.ones((100, 1)), x])
    expected = np.linalg.lstsq(a, y, rcond=None)[0]
    np.testing.assert_allclose(
        np.concatenate([[model.intercept], model.coef]), expected, rtol=0, atol=1e-8
    )


def test_zero_exponents_count_pairs():
    edge = GravityEdge(np.array([2.0, 5.0, 9.0]), np.array([3.0, 7.0, 1.0]), np.full(3, 600.0))
    model = GravityModel(beta=np.array([1.5, 0.0, 0.0, 0.0]), mass_scale=4.0, time_scale=60.0)
    assert model.predict([edge])[0] == pytest.approx(3 * math.exp(1.5))


def _context(pairs):
    return ODContext(
        target_edge_id=1,
        u=0,
        v=1,
        target_time_s=1.0,
        cutoff_s=100.0,
        epsilon_s=1e-9,
        graph_checksum="",
        origins={o: 0.0 for o, _, _ in pairs},
        destinations={d: 0.0 for _, d, _ in pairs},
        pairs=[ODPair(o, d, 0.0, 0.0, t) for o, d, t in pairs],
    )


def test_gravity_edge_masses():
    context = _context([(0, 2, 10.0), (1, 2, 20.0)])
    edge = gravity_edge(context, {0: 0.0, 1: 50.0, 2: 8.0})
    np.testing.assert_array_equal(edge.mass_origin, [0.0, 50.0])
    np.testing.assert_array_equal(edge.mass_destination, [8.0, 8.0])
    with pytest.raises(InvalidMasses):
        gravity_edge(context, {0: 1.0, 1: 2.0})
    with pytest.raises(InvalidMasses):
        gravity_edge(context, {0: 1.0, 1: -2.0, 2: 3.0})


def test_gravity_prediction_is_homogeneous_in_mass():
    edge = GravityEdge(np.array([2.0, 5.0]), np.array([3.0, 7.0]), np.array([60.0, 120.0]))
    doubled = GravityEdge(edge.mass_origin * 2, edge.mass_destination * 2, edge.travel_time)
    model = GravityModel(beta=np.array([0.3, 1.0, 1.0, 2.0]))
    expected = math.exp(0.3) * (2 * 3 / 60.0 ** 2 + 5 * 7 / 120.0 ** 2)
    assert model.predict([edge])[0] == pytest.approx(expected)
    assert model.predict([doubled])[0] == pytest.approx(4 * expected)
    # rescaling masses and times keeps the exponents' meaning
    rescaled = GravityModel(
        beta=np.array([0.3 + 2 * math.log(10.0) - 2 * math.log(30.0), 1.0, 1.0, 2.0]),
        mass_scale=10.0,
        time_scale=30.0,
    )
    assert rescaled.predict([edge])[0] == pytest.approx(expected)
    assert rescaled.intercept == pytest.approx(0.3)


def test_gravity_fit_reduces_the_error():
    rng = np.random.default_rng(3)
    edges = [
        GravityEdge(
            rng.uniform(10.0, 1000.0, size=6),
            rng.uniform(10.0, 1000.0, size=6),
            rng.uniform(300.0, 3600.0, size=6),
        )
        for _ in range(25)
    ]
    truth = GravityModel(beta=np.array([1.0, 0.7, 0.9, 1.2]))
    y = truth.predict(edges)
    fitted = baseline_gravity(edges, y, steps=2000, lr=0.02)
    start = GravityModel(np.array([0.0, 1.0, 1.0, 1.0]), fitted.mass_scale, fitted.time_scale)
    assert np.sum((fitted.predict(edges) - y) ** 2) < np.sum((start.predict(edges) - y) ** 2)


def test_gravity_rejects_zero_masses():
    edge = GravityEdge(np.zeros(3), np.zeros(3), np.full(3, 60.0))
    with pytest.raises(InvalidMasses):
        baseline_gravity([edge], np.array([5.0]))
    with pytest.raises(EmptyInput):
        baseline_gravity([], np.array([]))


def test_gravity_accepts_unit_and_partly_zero_masses():
    ones = GravityEdge(np.ones(3), np.ones(3), np.full(3, 60.0))
    assert np.isfinite(baseline_gravity([ones], np.array([5.0]), steps=10).beta).all()
    mixed = GravityEdge(np.array([0.0, 4.0]), np.array([0.0, 0.0]), np.full(2, 60.0))
    model = baseline_gravity([mixed], np.array([5.0]), steps=10)
    # zero masses count as one inside the model
    assert model.mass_scale == pytest.approx(1.75)


@pytest.mark.slow
def test_gravity_fit_recovers_planted_exponents():
    rng = np.random.default_rng(11)
    edges = [
        GravityEdge(
            rng.uniform(10.0, 1000.0, size=8),
            rng.uniform(10.0, 1000.0, size=8),
            rng.uniform(300.0, 3600.0, size=8),
        )
        for _ in range(60)
    ]
    truth = np.array([1.0, 0.7, 0.9, 1.2])
    y = GravityModel(beta=truth).predict(edges)
    fitted = baseline_gravity(edges, y, steps=20000, lr=0.01)
    np.testing.assert_allclose(fitted.beta[1:], truth[1:], atol=0.1)


def test_edge_design_layout(grid, grid_contexts):
    _, _, _, bank = grid
    context = max(grid_contexts.values(), key=len)
    design = edge_design(context, bank)
    assert design.shape == (2 * bank.k + 2,)
    assert design[-2] == len(context.pairs)
    assert design[-1] == pytest.approx(np.mean([p.travel_time for p in context.pairs]))


def test_build_eval_edges(grid, grid_contexts):
    _, targets, _, bank = grid
    labelled = _labelled(grid)
    labelled[0] = labelled[0]._replace(aadt=None)
    edges = build_eval_edges(labelled, grid_contexts, bank)
    assert [e.edge_id for e in edges] == sorted(t.edge_id for t in labelled[1:])
    assert all(e.inputs.y == e.y for e in edges)
    with pytest.raises(EmptyInput):
        build_eval_edges(_labelled(grid), {}, bank)


def test_oracle_and_constant_cross_validation(tmp_path, grid, grid_contexts):
    _, _, _, bank = grid
    labelled = _labelled(grid)
    edges = build_eval_edges(labelled, grid_contexts, bank)
    plan = make_folds(labelled, "random", k=2, seed=0)
    report = run_cv(edges, plan, [OracleSpec(), ConstantSpec()], metadata={"run": "test"})

    oracle = report.summary("Oracle", Split.test)
    assert oracle["mgeh"].mean == 0.0
    assert oracle["r2"].mean == pytest.approx(1.0)
    for fold, m in report.fold_metrics("Constant (mean)").items():
        train_y = [e.y for e in edges if e.edge_id in plan.train_edges(fold)]
        test_y = [e.y for e in edges if e.edge_id in plan.test_edges(fold)]
        assert m.mae == pytest.approx(np.mean(np.abs(np.array(test_y) - np.mean(train_y))))

    per_fold = [m.mae for m in report.fold_metrics("Constant (mean)").values()]
    summary = report.summary("Constant (mean)")["mae"]
    assert summary.std == pytest.approx(np.std(per_fold, ddof=1))
    assert summary.n_folds == 2

    table = report.table()
    assert "random cross-validation, 2 folds" in table
    random_forest = next(line for line in table.splitlines() if line.startswith("Random forest"))
    assert set(random_forest.split()[2:]) == {"-"}

    written = report.write(tmp_path)
    assert [p.name for p in written] == [
        "report.json",
        "report.txt",
        "residuals_oracle.csv",
        "residuals_constant_mean.csv",
    ]
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["metadata"]["run"] == "test"
    assert data["metadata"]["random_forest"] == "not run"
    assert len(data["records"]) == 2 * 2 * len(edges)
    residuals = report.residuals("Oracle")
    assert list(residuals.columns) == ["edge_id", "fold", "y", "yhat", "geh"]
    assert sorted(residuals.edge_id) == sorted(e.edge_id for e in edges)


def test_spatial_cross_validation_and_strata(grid, grid_contexts):
    _, _, _, bank = grid
    labelled = _labelled(grid)
    edges = build_eval_edges(labelled, grid_contexts, bank)
    report = run_cv(edges, make_folds(labelled, "spatial"), [OracleSpec()])
    assert list(report.fold_metrics("Oracle")) == ["R0", "R1"]
    assert sorted(report.stratified("Oracle", "region")) == ["R0", "R1"]
    assert list(report.stratified("Oracle", "road_class")) == ["motorway"]


def test_failed_baseline_folds_are_noted(grid, grid_contexts):
    _, _, _, bank = grid
    labelled = _labelled(grid)
    edges = build_eval_edges(labelled, grid_contexts, bank)
    plan = make_folds(labelled, "random", k=2, seed=0)
    # fewer training edges than design columns
    report = run_cv(edges, plan, [LinearSpec(), LinearSpec(ridge=1.0)])
    assert len(report.notes["Linear regression"]) == 2
    assert report.select("Linear regression") == []
    assert report.summary("Linear regression")["mgeh"].mean is None
    assert report.select("Ridge regression", Split.test)
    line = next(
        line for line in report.table().splitlines() if line.startswith("Linear regression")
    )
    assert set(line.split()[2:]) == {"-"}


def test_gravity_spec_runs_on_population(grid, grid_contexts):
    _, _, _, bank = grid
    labelled = _labelled(grid)
    edges = build_eval_edges(labelled, grid_contexts, bank)
    spec = GravitySpec(bank, "population", steps=200)
    report = run_cv(edges, make_folds(labelled, "random", k=2, seed=1), [spec])
    assert sorted(spec.models) == ["0", "1"]
    assert all(np.isfinite(r.yhat) for r in report.records)
    fitted = report.metadata["fitted"][spec.name]
    assert sorted(fitted) == ["0", "1"]
    assert set(fitted["0"]) == {
        "b0",
        "mass_origin_exponent",
        "mass_destination_exponent",
        "time_exponent",
    }
    assert fitted["0"]["b0"] == pytest.approx(spec.models["0"].intercept)
