import math

import numpy as np
import pytest

from ggescatter import __version__
from ggescatter.runner import (ConfigError, parse_config, read_csv, relative_error_metric, run,
                               write_csv)

LINDBLAD = """
[run]
experiment = evolve-lindblad
[model]
J = 1
h = 0.6
L = 64
[initial]
state = thermal
beta = 0.323
[numerics]
dt = 0.3
dt_reference = 0.05
t_end = 6
snapshots = 0, 1, 3, inf
tol = 1e-9
"""

RESET = """
[run]
experiment = evolve-reset
[model]
J = 0.8
h = 0.45
L = 40
[dissipation]
h_A = 0.8
T = 6
lambda = 0.1
[numerics]
cycles = 25
snapshots = 10
stride = 5
"""


def config_with(base: str, section: str, key: str, value: str) -> str:
    lines = base.strip().splitlines()
    start = lines.index(f"[{section}]")
    for i in range(start + 1, len(lines)):
        if lines[i].startswith("["):
            break
        if lines[i].split("=")[0].strip() == key:
            lines[i] = f"{key} = {value}"
            return "\n".join(lines)
    lines.insert(start + 1, f"{key} = {value}")
    return "\n".join(lines)


class TestParse:
    def test_defaults_filled(self):
        cfg = parse_config(LINDBLAD)
        assert cfg.variant == "continuous"
        assert cfg.beta == pytest.approx(0.323)
        assert cfg.snapshots[-1] == math.inf
        assert cfg.stride == 1

    def test_default_variant_for_reset(self):
        assert parse_config(RESET).variant == "floquet"

    @pytest.mark.parametrize("section, key, value, named", [
        ("model", "h", "abc", "model.h"),
        ("model", "L", "1", "model.L"),
        ("model", "L", "12.5", "model.L"),
        ("model", "variant", "floquet", "model.variant"),
        ("initial", "state", "hot", "initial.state"),
        ("numerics", "dt", "-0.1", "numerics.dt"),
        ("numerics", "tol", "0", "numerics.tol"),
        ("numerics", "stride", "0", "numerics.stride"),
        ("numerics", "wobble", "1", "numerics.wobble"),
        ("run", "experiment", "fly", "run.experiment"),
    ])
    def test_error_names_key(self, section, key, value, named):
        with pytest.raises(ConfigError, match=named.replace(".", r"\.")):
            parse_config(config_with(LINDBLAD, section, key, value))

    def test_missing_required(self):
        text = LINDBLAD.replace("J = 1\n", "")
        with pytest.raises(ConfigError, match="model.J"):
            parse_config(text)

    def test_thermal_needs_beta(self):
        with pytest.raises(ConfigError, match="initial.beta"):
            parse_config(LINDBLAD.replace("beta = 0.323\n", ""))

    def test_reset_needs_dissipation(self):
        with pytest.raises(ConfigError, match="dissipation.h_A"):
            parse_config(RESET.replace("h_A = 0.8\n", ""))

    def test_lambda_schedule_length(self):
        with pytest.raises(ConfigError, match="dissipation.lambda"):
            parse_config(config_with(RESET, "dissipation", "lambda", "0.1, 0.2"))

    def test_full_schedule_accepted(self):
        cfg = parse_config(config_with(RESET, "dissipation", "lambda", "0.1 0.1 0.2 0.2 0.1 0.1"))
        np.testing.assert_allclose(cfg.reset_params().lambdas, [0.1, 0.1, 0.2, 0.2, 0.1, 0.1])

    def test_gapless_grid_rejected(self):
        # with J = 0 and an even h the Floquet block is the identity at every momentum
        text = config_with(config_with(RESET, "model", "J", "0"), "model", "h", "0")
        with pytest.raises(ConfigError, match="model.h"):
            parse_config(text)

    def test_oracle_size_limit(self):
        text = """
[run]
experiment = oracle-reset
[model]
J = 0.8
h = 0.45
L = 6
[dissipation]
h_A = 0.8
T = 4
lambda = 0.2
"""
        with pytest.raises(ConfigError, match="model.L"):
            parse_config(text)

    def test_malformed(self):
        with pytest.raises(ConfigError, match="malformed"):
            parse_config("no section header")

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match=r"\[extras\]"):
            parse_config(LINDBLAD + "\n[extras]\nfoo = 1\n")


class TestCsv:
    def test_round_trip(self, tmp_path):
        cfg = parse_config(LINDBLAD)
        rows = [(0, 1.0 / 3.0, np.pi), (1, -2.5e-300, 7.0)]
        path = write_csv(tmp_path / "x.csv", ["k", "a", "b"], rows, cfg, {"note": 1})
        table = read_csv(path)
        assert table.version == __version__
        assert table.columns == ["k", "a", "b"]
        assert table.meta == {"note": 1}
        assert table.config["beta"] == cfg.beta
        np.testing.assert_array_equal(table.data, np.array(rows, dtype=float))

    def test_empty_body(self, tmp_path):
        cfg = parse_config(LINDBLAD)
        table = read_csv(write_csv(tmp_path / "e.csv", ["a", "b"], [], cfg))
        assert table.data.shape == (0, 2)


class TestRelativeError:
    def test_identical(self, rng):
        a = rng.uniform(0.1, 0.9, size=(3, 16))
        np.testing.assert_array_equal(relative_error_metric(a, a), 0.0)

    @pytest.mark.parametrize("x", [0.1, -0.05, 0.0])
    def test_uniform_offset(self, x):
        b = np.full((2, 10), 0.5)
        np.testing.assert_allclose(relative_error_metric(b + x, b), 2 * abs(x), rtol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            relative_error_metric(np.ones((2, 3)), np.ones((3, 3)))


class TestRun:
    def test_evolve_lindblad(self, tmp_path):
        files = run(parse_config(LINDBLAD), tmp_path)
        assert sorted(p.name for p in files) == ["charges.csv", "occupations.csv", "relative_error.csv"]
        occ = read_csv(tmp_path / "occupations.csv")
        clocks = np.unique(occ.column("clock"))
        np.testing.assert_allclose(clocks, [0, 1, 3, 6, np.inf])
        assert occ.meta["steady_residual"] < 1e-9
        err = read_csv(tmp_path / "relative_error.csv")
        assert err.column("relative_error")[0] == 0.0

    def test_evolve_reset(self, tmp_path):
        run(parse_config(RESET), tmp_path)
        traj = read_csv(tmp_path / "trajectory.csv")
        np.testing.assert_array_equal(traj.column("cycle"), [5, 10, 15, 20, 25])
        occ = read_csv(tmp_path / "occupations.csv")
        np.testing.assert_array_equal(np.unique(occ.column("clock")), [0, 10, 25])

    def test_bit_identical(self, tmp_path):
        cfg = parse_config(RESET)
        run(cfg, tmp_path / "a")
        run(cfg, tmp_path / "b")
        for name in ("trajectory.csv", "occupations.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_initial_from_file(self, tmp_path):
        run(parse_config(RESET), tmp_path / "first")
        occ = read_csv(tmp_path / "first" / "occupations.csv")
        last = occ.data[occ.column("clock") == 25]
        table_path = tmp_path / "start.csv"
        write_csv(table_path, ["k", "n"], [(int(k), n) for k, n in zip(last[:, 1], last[:, 4])],
                  parse_config(RESET))
        text = RESET + f"\n[initial]\nstate = file\nfile = {table_path}\n"
        run(parse_config(config_with(text, "numerics", "cycles", "0")), tmp_path / "second")
        again = read_csv(tmp_path / "second" / "occupations.csv")
        np.testing.assert_array_equal(again.column("n"), last[:, 4])

    def test_file_with_wrong_size(self, tmp_path):
        cfg = parse_config(RESET)
        path = write_csv(tmp_path / "short.csv", ["n"], [(0.5,)] * 3, cfg)
        text = RESET + f"\n[initial]\nstate = file\nfile = {path}\n"
        with pytest.raises(ConfigError, match="initial.file"):
            run(parse_config(text), tmp_path / "out")
