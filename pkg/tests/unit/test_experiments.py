import json
import math

import numpy as np
import pytest
from pydantic import ValidationError as PydanticValidationError

from zonocontain.models import (
    BadShape,
    EllipsoidBody,
    ExperimentConfig,
    ExperimentRecord,
    GeneratorFamily,
    HPolyBody,
    InvalidBody,
    LpBallBody,
    Scenario,
    Zonotope,
)
from zonocontain.services import geometry, io
from zonocontain.services.experiments import Cell, grid, run_experiment
from zonocontain.services.generators import (
    gen_random_zonotope,
    interval_ones_matrix,
    split_axes_matrix,
    tu_incidence_matrix,
)

HEXAGON_ROWS = [[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]


@pytest.fixture
def hexagon_csv(tmp_path):
    path = tmp_path / "hexagon.csv"
    io.write_matrix_csv(path, HEXAGON_ROWS)
    return path


class TestGenerators:
    """
    Test suite for seeded instance families.
    """

    def test_split_axes_is_a_cube(self):
        """
        Story: Splitting the unit vectors keeps the cube
        Given d = 2 and n = 16
        When building the split-axes generators
        Then the support function is the l1 norm
        """
        Z = Zonotope.from_matrix(split_axes_matrix(2, 16))

        assert Z.count == 16
        assert Z.support([3.0, -4.0]) == pytest.approx(7.0)

    def test_split_axes_needs_a_multiple(self):
        """
        Story: Uneven splits are refused
        Given d = 2 and n = 5
        When building the split-axes generators
        Then BadShape is raised
        """
        with pytest.raises(BadShape):
            split_axes_matrix(2, 5)

    def test_incidence_matrix_is_unimodular(self):
        """
        Story: Reduced incidence matrices are totally unimodular
        Given the complete graph on 4 vertices
        When scanning the 3 x 3 subdeterminants
        Then every nonzero one has absolute value 1
        """
        W = tu_incidence_matrix(3, 6, np.random.default_rng(0))
        report = geometry.delta_of(W)

        assert W.shape == (3, 6)
        assert np.all(np.isin(W, [-1.0, 0.0, 1.0]))
        assert report.is_delta_modular
        assert report.max_abs_det == pytest.approx(1.0)

    def test_incidence_edge_budget(self):
        """
        Story: K_4 has only six edges
        Given d = 3 and n = 7
        When building the incidence matrix
        Then BadShape is raised
        """
        with pytest.raises(BadShape):
            tu_incidence_matrix(3, 7, np.random.default_rng(0))

    def test_interval_matrix(self):
        """
        Story: Consecutive-ones columns
        Given d = 4 and n = 7
        When building the interval matrix
        Then every column is a block of ones and the matrix is unimodular
        """
        W = interval_ones_matrix(4, 7, np.random.default_rng(1))

        for column in W.T:
            ones = np.flatnonzero(column)
            assert np.all(column[ones] == 1.0)
            assert ones[-1] - ones[0] + 1 == ones.size
        assert geometry.delta_of(W).max_abs_det == pytest.approx(1.0)

    def test_seeded_instances_are_reproducible(self, tmp_path):
        """
        Story: The same seed writes the same file
        Given a Gaussian 3 x 10 instance generated twice with seed 7
        When writing both to CSV
        Then the files are byte-identical
        """
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (first, second):
            Z = gen_random_zonotope(3, 10, GeneratorFamily.GAUSSIAN, 7)
            io.write_matrix_csv(path, Z.generators)

        assert first.read_bytes() == second.read_bytes()

    def test_explicit_path(self, hexagon_csv):
        """
        Story: Instances read from disk
        Given a hexagon CSV
        When generating with the explicit_path family for d = 2 and d = 3
        Then d = 2 returns the hexagon and d = 3 is refused
        """
        family = GeneratorFamily.EXPLICIT_PATH
        Z = gen_random_zonotope(2, 3, family, 0, str(hexagon_csv))

        np.testing.assert_array_equal(Z.generators, HEXAGON_ROWS)
        with pytest.raises(BadShape):
            gen_random_zonotope(3, 3, family, 0, str(hexagon_csv))


class TestIO:
    """
    Test suite for CSV and JSON persistence.
    """

    @pytest.mark.parametrize(
        "text", ["", "1.0,2.0\n3.0\n", "1.0,abc\n"], ids=["empty", "ragged", "text"]
    )
    def test_bad_matrix_files(self, tmp_path, text):
        """
        Story: Unreadable generator files
        Given an empty, ragged or non-numeric CSV
        When reading it as a matrix
        Then BadShape is raised
        """
        path = tmp_path / "bad.csv"
        path.write_text(text, encoding="utf-8")

        with pytest.raises(BadShape):
            io.read_matrix_csv(path)

    def test_zonotope_sidecar(self, tmp_path):
        """
        Story: Dropped columns are remembered
        Given a generator matrix with a zero middle column
        When writing the zonotope
        Then the sidecar records d, n and the dropped index
        """
        Z = Zonotope.from_matrix([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        sidecar = io.write_zonotope(tmp_path / "z.csv", Z)

        assert sidecar.name == "z.meta.json"
        assert json.loads(sidecar.read_text()) == {
            "d": 2,
            "n": 2,
            "dropped_zero_columns": [1],
        }
        restored = io.read_zonotope(tmp_path / "z.csv")
        np.testing.assert_array_equal(restored.generators, np.eye(2))

    def test_csv_cells(self):
        """
        Story: Cell formatting is stable
        Given None, a bool, a float and an int
        When formatting them
        Then the text is empty, lowercase, the float repr and the int
        """
        cells = [io.format_cell(v) for v in (None, True, 0.1, 3)]

        assert cells == ["", "true", "0.1", "3"]

    def test_points_header(self, tmp_path):
        """
        Story: Sampled points are written with a header
        Given two planar points
        When writing them
        Then the first line names the coordinates
        """
        path = tmp_path / "points.csv"
        io.write_points_csv(path, [[0.5, -0.25], [1.0, 0.0]])

        assert path.read_text().splitlines() == ["x0,x1", "0.5,-0.25", "1.0,0.0"]

    def test_bodies_inline_and_on_disk(self, tmp_path):
        """
        Story: Bodies come as inline JSON or as files
        Given an ellipsoid written to disk and a box as inline text
        When reading them back
        Then both validate, and a missing file raises InvalidBody
        """
        path = tmp_path / "body.json"
        io.write_body(path, EllipsoidBody.diagonal([1.0, 4.0]))

        assert isinstance(io.read_body(path), EllipsoidBody)
        assert isinstance(io.read_body(HPolyBody.box(2).model_dump_json()), HPolyBody)
        with pytest.raises(InvalidBody):
            io.read_body(tmp_path / "missing.json")

    def test_json_output_rejects_nan(self):
        """
        Story: CLI output stays strict JSON
        Given a payload containing NaN
        When dumping it
        Then ValueError is raised
        """
        with pytest.raises(ValueError):
            io.dump_json({"value": math.nan})


class TestExperimentConfig:
    """
    Test suite for experiment configuration validation.
    """

    @pytest.mark.parametrize(
        "overrides",
        [
            {"seeds": []},
            {"dims": [0]},
            {"scenario": Scenario.POLAR_CHECK},
            {"scenario": Scenario.VOLUME_RATIO, "dims": [4]},
            {"scenario": Scenario.DELTA_MODULAR_SWEEP},
            {"generator_family": GeneratorFamily.EXPLICIT_PATH},
            {"epsilon": 0.5},
            {"s": 1.0},
            {"unknown": 1},
        ],
    )
    def test_rejects_inconsistent_configs(self, tmp_path, overrides):
        """
        Story: Bad runs fail before any cell starts
        Given a config with one inconsistent field
        When validating it
        Then pydantic raises a ValidationError
        """
        payload = {
            "scenario": Scenario.HYPERCUBE_GAP_SWEEP,
            "dims": [2],
            "seeds": [0],
            "output_path": str(tmp_path / "out.csv"),
        }
        payload.update(overrides)

        with pytest.raises(PydanticValidationError):
            ExperimentConfig(**payload)

    def test_grid_order(self, tmp_path):
        """
        Story: Cells enumerate d, then seed, then instance
        Given dims [2, 3], seeds [5] and 2 instances
        When building the grid
        Then the cells come in that order
        """
        cfg = ExperimentConfig(
            scenario=Scenario.STRESS_SPLIT,
            dims=[2, 3],
            seeds=[5],
            instances=2,
            output_path=str(tmp_path / "out.csv"),
        )

        assert grid(cfg) == [Cell(2, 5, 0), Cell(2, 5, 1), Cell(3, 5, 0), Cell(3, 5, 1)]

    def test_cell_seeds_differ(self):
        """
        Story: Cells draw from independent streams
        Given cells that differ in one coordinate
        When deriving their stream seeds
        Then all seeds are distinct and stable
        """
        cells = [Cell(2, 0, 0), Cell(3, 0, 0), Cell(2, 1, 0)]
        seeds = {cell.stream_seed for cell in cells}

        assert len(seeds) == 3
        assert Cell(2, 0, 0).stream_seed == Cell(2, 0, 0).stream_seed


class TestRunExperiment:
    """
    Test suite for experiment grids written to CSV.
    """

    @pytest.fixture
    def gap_config(self, tmp_path):
        return ExperimentConfig(
            scenario=Scenario.HYPERCUBE_GAP_SWEEP,
            dims=[2, 3],
            seeds=[0, 1],
            trials=200,
            output_path=str(tmp_path / "gap.csv"),
        )

    def test_hypercube_sweep(self, gap_config):
        """
        Story: A small gap sweep
        Given d in {2, 3}, two seeds and instances scaled to alpha = 0.9
        When running the experiment
        Then one sorted row per cell is written and every witness has a JSONL line
        """
        records = run_experiment(gap_config)
        rows = io.read_records_csv(gap_config.output_path)
        witnesses = io.read_witnesses_jsonl(gap_config.output_path)

        assert [(r.d, r.seed) for r in records] == [(2, 0), (2, 1), (3, 0), (3, 1)]
        assert list(rows[0]) == ExperimentRecord.columns()
        assert all(row["error"] == "" and row["wall_time_ms"] == "" for row in rows)
        assert all(float(row["exact_alpha"]) == 0.9 for row in rows)
        assert len(witnesses) == sum(row["verdict"] == "witness" for row in rows)
        for line in witnesses:
            assert len(line["point"]) == line["d"]
            assert line["verified"] is True
            assert line["exact_gauge"] <= line["gauge_bound"] + 1e-6

    def test_witnesses_are_recertified(self, gap_config):
        """
        Story: Every recorded witness is checked again
        Given instances scaled far below the test factor, alpha = 0.2
        When running the gap sweep
        Then every cell has a witness whose line is verified with its exact gauge
        """
        cfg = gap_config.model_copy(update={"target_alpha": 0.2})
        records = run_experiment(cfg)
        witnesses = io.read_witnesses_jsonl(cfg.output_path)

        assert all(r.verdict == "witness" for r in records)
        assert len(witnesses) == len(records)
        assert all(line["verified"] for line in witnesses)
        assert all(
            0.0 < line["exact_gauge"] <= line["gauge_bound"] + 1e-6
            for line in witnesses
        )

    def test_rerun_is_byte_identical(self, gap_config, tmp_path, monkeypatch):
        """
        Story: Reproducible sweeps
        Given the same config run once serially and once on two threads
        When comparing the CSV files
        Then they are byte-identical
        """
        run_experiment(gap_config)
        serial = (tmp_path / "gap.csv").read_bytes()

        monkeypatch.setenv("ZONOCONTAIN_THREADS", "2")
        again = str(tmp_path / "again.csv")
        threaded = gap_config.model_copy(update={"output_path": again})
        run_experiment(threaded)

        assert (tmp_path / "again.csv").read_bytes() == serial

    def test_timings_are_opt_in(self, gap_config):
        """
        Story: Wall time breaks byte-identical reruns
        Given record_timings
        When running
        Then every row carries a nonnegative wall time
        """
        records = run_experiment(gap_config.model_copy(update={"record_timings": True}))

        assert all(r.wall_time_ms is not None and r.wall_time_ms >= 0 for r in records)

    def test_stress_scenario(self, tmp_path):
        """
        Story: The split-generator tail as an experiment
        Given d = 2, n = 16 and s = 2
        When running the stress scenario
        Then the metric stays below the Hoeffding bound plus 3 sigma
        """
        cfg = ExperimentConfig(
            scenario=Scenario.STRESS_SPLIT,
            dims=[2],
            seeds=[0],
            generators_per_dim=8,
            s=2.0,
            samples=20_000,
            output_path=str(tmp_path / "stress.csv"),
        )
        (record,) = run_experiment(cfg)
        sigma = math.sqrt(record.metric * (1 - record.metric) / 20_000)

        assert record.n == 16
        assert record.metric <= math.exp(-2) + 3 * sigma
        assert "hoeffding_bound=" in record.detail

    @pytest.mark.parametrize(
        "body", [LpBallBody(p=2, radius=1.0), EllipsoidBody.diagonal([1.0, 4.0])]
    )
    def test_polar_check_scenario(self, tmp_path, body):
        """
        Story: The circumradius equivalence over a grid
        Given a Euclidean ball and an ellipsoid with outradius 1
        When running the polar check
        Then every row passes with metric 1
        """
        dims = [2, 3] if isinstance(body, LpBallBody) else [2]
        cfg = ExperimentConfig(
            scenario=Scenario.POLAR_CHECK,
            dims=dims,
            seeds=[0],
            body=body,
            output_path=str(tmp_path / "polar.csv"),
        )
        records = run_experiment(cfg)

        assert [r.verdict for r in records] == ["pass"] * len(dims)
        assert all(r.metric == pytest.approx(1.0) for r in records)

    def test_volume_ratio_scenario(self, tmp_path, hexagon_csv):
        """
        Story: Hull of sampled extreme points against the exact volume
        Given the hexagon and a Gaussian planar instance
        When running the volume ratio with 64 directions
        Then the hexagon ratio is 1 and the Gaussian one is in (0, 1]
        """
        hexagon = ExperimentConfig(
            scenario=Scenario.VOLUME_RATIO,
            dims=[2],
            seeds=[0],
            generator_family=GeneratorFamily.EXPLICIT_PATH,
            explicit_path=str(hexagon_csv),
            output_path=str(tmp_path / "hexagon_volume.csv"),
        )
        gaussian = hexagon.model_copy(
            update={
                "generator_family": GeneratorFamily.GAUSSIAN,
                "generators_per_dim": 3,
                "output_path": str(tmp_path / "gaussian_volume.csv"),
            }
        )

        (exact,) = run_experiment(hexagon)
        (sampled,) = run_experiment(gaussian)

        assert exact.metric == pytest.approx(1.0, abs=1e-9)
        assert 0 < sampled.metric <= 1 + 1e-9

    def test_volume_ratio_grows_with_hull_points(self, tmp_path):
        """
        Story: More sampled extreme points give a larger hull
        Given planar Gaussian instances with 20 generators and three seeds
        When running the volume ratio with 8, 16 and 64 directions
        Then the ratio never decreases, stays at most 1 and grows from 8 to 64
        """
        base = ExperimentConfig(
            scenario=Scenario.VOLUME_RATIO,
            dims=[2],
            seeds=[0, 1, 2],
            generators_per_dim=10,
            output_path=str(tmp_path / "volume.csv"),
        )
        ratios = []
        for points in (8, 16, 64):
            cfg = base.model_copy(update={"hull_points": points})
            ratios.append([r.metric for r in run_experiment(cfg)])

        for r8, r16, r64 in zip(*ratios):
            assert r8 <= r16 + 1e-12
            assert r16 <= r64 + 1e-12
            assert r64 <= 1 + 1e-9
            assert r8 < r64

    def test_delta_modular_scenario(self, tmp_path):
        """
        Story: Sparsifying incidence matrices of K_4
        Given d = 3 with six incidence columns
        When running the Delta-modular sweep
        Then the sandwich upper ratio stays within (1 + eps)^2
        """
        cfg = ExperimentConfig(
            scenario=Scenario.DELTA_MODULAR_SWEEP,
            dims=[3],
            seeds=[0, 1],
            generator_family=GeneratorFamily.TU_INCIDENCE,
            trials=100,
            output_path=str(tmp_path / "delta.csv"),
        )
        records = run_experiment(cfg)

        for record in records:
            assert record.error is None
            assert record.metric <= (4.0 / 3.0) ** 2 + 1e-9
            assert record.verdict in ("witness", "contained")
            assert "sandwich_min=" in record.detail

    def test_naszodi_scenario(self, tmp_path):
        """
        Story: Sampling-based containment over random polytopes
        Given d = 2 with four facet pairs per dimension and 50 samples
        When running the Naszodi sweep
        Then a verdict is recorded with n equal to the eight facet pairs
        """
        cfg = ExperimentConfig(
            scenario=Scenario.NASZODI_SWEEP,
            dims=[2],
            seeds=[3],
            generators_per_dim=4,
            trials=50,
            output_path=str(tmp_path / "naszodi.csv"),
        )
        (record,) = run_experiment(cfg)

        assert record.n == 8
        assert record.verdict in ("witness", "contained")
        assert record.exact_alpha == pytest.approx(0.9 * 4.0)

    def test_failed_cells_are_recorded(self, tmp_path, hexagon_csv):
        """
        Story: One bad cell does not stop the grid
        Given an explicit planar matrix swept at d = 3
        When running
        Then the row carries the error and no verdict
        """
        cfg = ExperimentConfig(
            scenario=Scenario.HYPERCUBE_GAP_SWEEP,
            dims=[3],
            seeds=[0],
            generator_family=GeneratorFamily.EXPLICIT_PATH,
            explicit_path=str(hexagon_csv),
            output_path=str(tmp_path / "bad.csv"),
        )
        (record,) = run_experiment(cfg)

        assert record.error.startswith("BadShape")
        assert record.verdict is None
