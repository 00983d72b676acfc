import numpy as np
import pandas as pd
import pytest

from deepdemand.demandmodel import ModelParams, deterrence, encode, od_score, planted_params
from deepdemand.interpret import (
    POTENTIAL_COLUMNS,
    EmptyUniverse,
    InvalidGrid,
    combine_curves,
    compute_potentials,
    export_deterrence,
    pair_universe,
    time_grid,
)

from conftest import small_model_config


def test_default_grid():
    grid = time_grid()
    assert len(grid) == 241
    assert grid[0] == 0.0 and grid[-1] == 120.0
    assert grid[120] == 60.0


@pytest.mark.parametrize(
    "start, stop, step", [(-1.0, 10.0, 1.0), (0.0, 10.0, 0.0), (5.0, 1.0, 1.0)]
)
def test_invalid_grids(start, stop, step):
    with pytest.raises(InvalidGrid):
        time_grid(start, stop, step)


def test_zero_deterrence_network_exports_one_half():
    curve = export_deterrence(ModelParams.zeros(small_model_config(2)))
    assert (curve.p_od == 0.5).all()
    frame = curve.to_frame()
    assert list(frame.columns) == ["t_min", "p_od"]


def test_export_matches_direct_evaluation():
    params = planted_params(small_model_config(3), seed=2)
    curve = export_deterrence(params)
    assert curve.p_od[120] == deterrence(params, 3600.0)
    assert (np.diff(curve.p_od) <= 0).all()


def test_export_rejects_unordered_grid():
    params = ModelParams.zeros(small_model_config(2))
    with pytest.raises(InvalidGrid):
        export_deterrence(params, np.array([0.0, 10.0, 5.0]))


def test_combined_curves(tmp_path):
    first = export_deterrence(planted_params(small_model_config(2), seed=0), fold="0")
    second = export_deterrence(planted_params(small_model_config(2), seed=1), fold="1")
    combined = combine_curves([first, second])
    assert combined.folds == ["0", "1"]
    np.testing.assert_array_equal(combined.mean, (first.p_od + second.p_od) / 2)
    assert (combined.lower <= combined.upper).all()

    combined.to_csv(tmp_path / "curves.csv")
    frame = pd.read_csv(tmp_path / "curves.csv", float_precision="round_trip")
    assert list(frame.columns) == ["t_min", "fold_0", "fold_1", "mean", "min", "max"]
    np.testing.assert_array_equal(frame["fold_1"].to_numpy(), second.p_od)

    short = export_deterrence(ModelParams.zeros(small_model_config(2)), time_grid(0, 10, 1))
    with pytest.raises(InvalidGrid):
        combine_curves([first, short])
    with pytest.raises(InvalidGrid):
        combine_curves([])


def test_singleton_universe(toy_bank):
    params = ModelParams.init(small_model_config(toy_bank.k), seed=3)
    potentials = compute_potentials(params, toy_bank, [], universe=[(0, 1)])
    expected = od_score(params, *encode(params, toy_bank.vector(0), toy_bank.vector(1)))

    assert list(potentials.frame.columns) == list(POTENTIAL_COLUMNS)
    assert len(potentials) == 3
    a = potentials.row("a")
    b = potentials.row("b")
    assert a.o_potential == pytest.approx(expected, rel=1e-12)
    assert b.d_potential == pytest.approx(expected, rel=1e-12)
    # land areas are 1 and 2 km²
    assert a.o_density == pytest.approx(expected)
    assert b.d_density == pytest.approx(expected / 2)
    assert a.n_pairs_o == 1 and a.n_pairs_d == 0
    assert potentials.no_data_o == ["b", "c"]
    assert potentials.no_data_d == ["a", "c"]
    assert pd.isna(potentials.row("c").o_potential)


def test_halving_land_area_doubles_density(toy_bank):
    params = ModelParams.init(small_model_config(toy_bank.k), seed=4)
    universe = [(0, 1), (0, 2), (1, 2), (2, 0)]
    before = compute_potentials(params, toy_bank, [], universe=universe).row("a")
    toy_bank.land_area["a"] /= 2
    after = compute_potentials(params, toy_bank, [], universe=universe).row("a")
    assert after.o_potential == before.o_potential
    assert after.o_density == pytest.approx(2 * before.o_density)


def test_quintiles_rank_density(toy_bank):
    params = ModelParams.init(small_model_config(toy_bank.k), seed=5)
    universe = [(o, d) for o in range(3) for d in range(3)]
    frame = compute_potentials(params, toy_bank, [], universe=universe).frame
    assert frame["quintile_o"].between(1, 5).all()
    ordered = frame.sort_values("o_density")
    assert ordered["quintile_o"].is_monotonic_increasing
    assert ordered["quintile_o"].iloc[-1] == 5


def test_sampling_is_seeded(toy_bank):
    params = ModelParams.init(small_model_config(toy_bank.k), seed=6)
    universe = [(o, d) for o in range(3) for d in range(3)]
    first = compute_potentials(params, toy_bank, [], universe=universe, sample_size=4, seed=1)
    second = compute_potentials(params, toy_bank, [], universe=universe, sample_size=4, seed=1)
    assert first.universe_size == 9 and first.sampled == 4
    pd.testing.assert_frame_equal(first.frame, second.frame)
    assert first.frame["n_pairs_o"].sum() == 4
    full = compute_potentials(params, toy_bank, [], universe=universe, sample_size=100)
    assert full.sampled == 9


def test_potentials_from_contexts(tmp_path, grid, grid_contexts):
    _, _, _, bank = grid
    params = ModelParams.init(small_model_config(bank.k))
    universe = pair_universe(grid_contexts.values())
    assert universe == sorted(set(universe))
    potentials = compute_potentials(params, bank, grid_contexts.values())
    assert potentials.universe_size == len(universe)
    assert potentials.frame["n_pairs_o"].sum() == len(universe)
    potentials.to_csv(tmp_path / "potentials.csv")
    assert len(pd.read_csv(tmp_path / "potentials.csv")) == len(potentials)


def test_empty_universe(toy_bank):
    params = ModelParams.zeros(small_model_config(toy_bank.k))
    with pytest.raises(EmptyUniverse):
        compute_potentials(params, toy_bank, [])


def test_curve_stays_strictly_between_zero_and_one():
    curve = export_deterrence(ModelParams.init(small_model_config(2), seed=8))
    assert ((curve.p_od > 0) & (curve.p_od < 1)).all()


def test_sampled_potentials_keep_the_ranking(grid, grid_contexts):
    _, _, _, bank = grid
    params = ModelParams.init(small_model_config(bank.k), seed=9)
    full = compute_potentials(params, bank, grid_contexts.values())
    size = int(0.95 * full.universe_size)
    sampled = compute_potentials(params, bank, grid_contexts.values(), sample_size=size, seed=2)
    both = pd.concat(
        [m.frame.set_index("area_id")["o_potential"] for m in (full, sampled)],
        axis=1,
        keys=["full", "sampled"],
    ).dropna()
    ranks = both.rank()
    assert np.corrcoef(ranks["full"], ranks["sampled"])[0, 1] > 0.95
