import argparse
import json

import pytest

from src.analytics.tables import read_table_csv
from src.main import glue_negative_values, main, parse_args, parse_counts, parse_measurements, parse_range


def _run(out_dir, *argv):
    return main([*argv, "--output", str(out_dir), "--max-procs", "1"])


def _metadata(path):
    meta = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("# "):
                break
            key, _, value = line[2:].rstrip("\n").partition(": ")
            meta[key] = value
    return meta


# -------------------------------------------------------------------
# Argument parsing
# -------------------------------------------------------------------

def test_parse_range_forms():
    assert parse_range("0:1:3") == [0.0, 0.5, 1.0]
    assert parse_range("0.1,0.25") == [0.1, 0.25]
    assert parse_range("0.4") == [0.4]
    assert parse_range("-1:1:81")[-1] == 1.0


@pytest.mark.parametrize("text", ["a:b", "0:1:0", "0:1", ","])
def test_parse_range_rejects(text):
    with pytest.raises(argparse.ArgumentTypeError):
        parse_range(text)


def test_parse_counts_and_measurements():
    assert parse_counts("1000,10000") == [1000, 10000]
    for bad in ("0", "1.5"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_counts(bad)
    assert parse_measurements("rotade, bspade") == ["rotade", "bspade"]
    with pytest.raises(argparse.ArgumentTypeError):
        parse_measurements("rotade,tomography")


def test_negative_ranges_are_glued():
    argv = ["intrinsic-error", "--theta", "-1:1:3", "--eps", "0.1", "--psf", "gaussian"]
    assert glue_negative_values(argv) == ["intrinsic-error", "--theta=-1:1:3", "--eps", "0.1", "--psf", "gaussian"]


def test_default_state_convention_per_command():
    assert parse_args(["epsmin"]).convention == "exact"
    assert parse_args(["fisher"]).convention == "second_order"
    assert parse_args(["fisher", "--theta", "-0.2,0.1"]).theta == [-0.2, 0.1]


def test_bad_flag_exits_with_usage_code():
    with pytest.raises(SystemExit) as exc:
        main(["fisher", "--bogus"])
    assert exc.value.code == 1


# -------------------------------------------------------------------
# Commands
# -------------------------------------------------------------------

def test_fisher_writes_csv_and_json(out_dir):
    code = _run(out_dir, "fisher", "--measurement", "bspade,rotade", "--theta", "0,0.2", "--eps", "0.1,0.3",
                "--format", "both")
    assert code == 0
    df = read_table_csv(out_dir / "fisher.csv")
    assert len(df) == 8
    assert list(df[["measurement", "theta", "eps"]].itertuples(index=False))[0] == ("bspade", 0.0, 0.1)
    meta = _metadata(out_dir / "fisher.csv")
    assert meta["command"] == "fisher"
    assert meta["tool"] == "superres"
    payload = json.loads((out_dir / "fisher.json").read_text())
    assert payload["metadata"]["command"] == "fisher"
    assert len(payload["records"]) == 8


def test_reruns_are_byte_identical(out_dir):
    argv = ("discriminate", "--theta", "0.01:0.05:3", "--eps", "0.25")
    assert _run(out_dir, *argv) == 0
    first = (out_dir / "discriminate.csv").read_bytes()
    assert _run(out_dir, *argv) == 0
    assert (out_dir / "discriminate.csv").read_bytes() == first


def test_parameters_outside_domain_exit_with_usage_code(out_dir):
    assert _run(out_dir, "epsmin", "--measurement", "rotade", "--theta", "0.6", "--n", "100") == 1


def test_intrinsic_error_accepts_negative_theta(out_dir):
    assert _run(out_dir, "intrinsic-error", "--theta", "-0.2:0.2:3", "--eps", "0.1") == 0
    df = read_table_csv(out_dir / "intrinsic_error.csv")
    assert sorted(df["theta"]) == pytest.approx([-0.2, 0.0, 0.2])
    assert (df["p_intrinsic"] < 0.01).all()


def test_intrinsic_error_reference_sweep(out_dir):
    assert _run(out_dir, "intrinsic-error", "--x-ref", "-0.1:0.4:6") == 0
    df = read_table_csv(out_dir / "intrinsic_error_vs_xref.csv")
    assert len(df) == 6
    assert _metadata(out_dir / "intrinsic_error_vs_xref.csv")["x_single"] == "0.3"


def test_chernoff_reports_improvement(out_dir):
    assert _run(out_dir, "chernoff", "--theta", "0,0.2", "--eps", "0.25") == 0
    df = read_table_csv(out_dir / "chernoff_vs_theta.csv")
    assert {"xi_rotade", "xi_spade01", "xi_bspade", "xi_quantum"} <= set(df.columns)
    assert float(_metadata(out_dir / "chernoff_vs_theta.csv")["max_rotade_improvement"]) > 0.0


def test_montecarlo_error_row(out_dir):
    code = _run(out_dir, "montecarlo", "--theta", "0.2", "--eps", "0.3", "--photons", "20", "--trials", "200",
                "--seed", "5")
    assert code == 0
    row = read_table_csv(out_dir / "montecarlo_error.csv").iloc[0]
    assert 0.0 <= row["empirical_error"] <= 1.0
    assert 0.0 < row["exact_error"] < 0.5
    assert _metadata(out_dir / "montecarlo_error.csv")["seed"] == "5"


def test_selftest_passes(out_dir):
    assert _run(out_dir, "selftest") == 0
    df = read_table_csv(out_dir / "selftest.csv")
    assert df["passed"].all()


def test_run_rollup_is_written(out_dir):
    _run(out_dir, "intrinsic-error", "--theta", "0", "--eps", "0.1")
    _run(out_dir, "epsmin", "--measurement", "rotade", "--theta", "0.6", "--n", "100")
    rollup = json.loads((out_dir / "runs.json").read_text())
    assert rollup["global"]["commands_run"] == 2
    assert rollup["global"]["failed"] == ["epsmin"]
    assert rollup["commands"]["intrinsic-error"]["summary"]["rows"] == 1


def test_sinc_convention_flag_is_accepted(out_dir):
    assert _run(out_dir, "chernoff", "--psf", "sinc", "--sinc-convention", "paper", "--theta", "0.1",
                "--eps", "0.25") == 0
    assert _metadata(out_dir / "chernoff_vs_theta.csv")["sinc_convention"] == "paper"
    with pytest.raises(SystemExit) as exc:
        _run(out_dir, "chernoff", "--psf", "sinc", "--sinc-convention", "reduced")
    assert exc.value.code == 1
