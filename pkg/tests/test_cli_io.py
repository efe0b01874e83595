import csv
import hashlib
import io
import os
import subprocess
import sys
from fractions import Fraction as F

import pytest

from quasidiff.cli_io import (
    EXIT_HYPOTHESIS, EXIT_OK, EXIT_PARSE, EXIT_VERIFY, ConfigError, case_config, csv_text,
    emit_config, main, parse_config, run,
)
from quasidiff.gallery import CASES, get_case
from quasidiff.triple_model import eval_scale

SNAP = """\
[scale]
left = -inf
right = inf
breakpoints = -1, 0, 1
slopes = 1, 1
origin = -1
jumps = 0 : 1 : 0

[measure]
density = -inf : inf : 1

[options]
n_per_block = 5
window = -2 : 3
"""


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def digest(folder):
    h = hashlib.sha256()
    for name in sorted(os.listdir(folder)):
        h.update(name.encode())
        with open(os.path.join(folder, name), "rb") as fh:
            h.update(fh.read())
    return h.hexdigest()


def write(tmp_path, text, name="t.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# -- parsing ------------------------------------------------------------------

def test_parse_snapping():
    cfg = parse_config(SNAP)
    assert cfg.scale.breakpoints == (-1, 0, 1)
    assert cfg.options.window == (-2, 3) and cfg.options.n_per_block == 5
    # base point 0 sits on the jump: moved and recorded
    assert cfg.shift.moved and cfg.shift.requested == 0
    assert eval_scale(cfg.scale, cfg.shift.base_point) == 0


@pytest.mark.parametrize("name", sorted(CASES))
def test_emit_parse_round_trip(name):
    text = emit_config(case_config(get_case(name)))
    cfg = parse_config(text)
    assert emit_config(cfg) == text
    assert cfg.scale.breakpoints == get_case(name).scale.breakpoints


def test_round_trip_idempotent_after_normalization():
    once = emit_config(parse_config(SNAP))
    assert emit_config(parse_config(once)) == once


def test_dotted_keys_accepted():
    text = "scale.breakpoints = 0, 1\nscale.slopes = 1\nmeasure.density = 0 : 1 : 1\n"
    assert parse_config(text).scale.breakpoints == (0, 1)


def test_rationals_preserved():
    text = "[scale]\nbreakpoints = 0, 1/3, 1\nslopes = 2/7, 1\n[measure]\ndensity = 0 : 1 : 1\n"
    cfg = parse_config(text)
    assert cfg.scale.breakpoints[1] == F(1, 3) and cfg.scale.slopes[0] == F(2, 7)


def test_negative_slope_positioned():
    text = SNAP.replace("slopes = 1, 1", "slopes = 1, -1")
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    e = err.value
    assert "monotonicity violated" in str(e)
    assert (e.line, e.field) == (5, "scale.slopes") and e.column == 10


@pytest.mark.parametrize("bad,field", [
    (SNAP.replace("slopes = 1, 1", "slopes = 1, 1\nslopes = 1, 1"), "scale.slopes"),
    (SNAP.replace("-1, 0, 1", "0, -1, 1"), "scale.breakpoints"),
    (SNAP.replace("density = -inf : inf : 1", "density = -inf : inf : 1\natoms = 0 : -1"), "measure.atoms"),
    (SNAP.replace("n_per_block = 5", "n_per_block = five"), "options.n_per_block"),
    (SNAP.replace("[options]", "[options]\ncolour = red"), "options.colour"),
])
def test_parse_errors_name_field(bad, field):
    with pytest.raises(ConfigError) as err:
        parse_config(bad)
    assert err.value.field == field and err.value.line is not None


def test_missing_required():
    with pytest.raises(ConfigError, match="scale.slopes"):
        parse_config("[scale]\nbreakpoints = 0, 1\n")


# -- CSV ----------------------------------------------------------------------

def test_csv_format():
    text = csv_text(("a", "b", "c", "d"), [(F(1, 3), 0.1, True, None), ("x,y", 2, False, float("inf"))])
    assert text == 'a,b,c,d\n1/3,0.10000000000000001,1,\n"x,y",2,0,inf\n'
    assert "\r" not in text


# -- commands -----------------------------------------------------------------

def test_classify_absorbing_left(tmp_path):
    cfg = case_config(get_case("absorbing_left"))
    assert run("classify", cfg, str(tmp_path)) == EXIT_OK
    rows = read_csv(tmp_path / "endpoints.csv")
    assert rows[0] == ["side", "approachable", "regular", "reflecting", "included"]
    assert rows[1] == ["left", "1", "1", "0", "0"]
    assert read_csv(tmp_path / "transience.csv")[1] == ["transient"]


def test_classify_rejection_exit(tmp_path):
    text = "[scale]\nbreakpoints = 0, 2, 3\nslopes = 1, 1\njumps = 2 : 1/2 : 1/2\n[measure]\ndensity = 0 : 3 : 1\n"
    path = write(tmp_path, text)
    assert main(["classify", "--config", path, "--out", str(tmp_path / "o")]) == EXIT_HYPOTHESIS
    assert main(["classify", "--config", path, "--out", str(tmp_path / "o"), "--override-hypotheses"]) == EXIT_OK


def test_regularize_tables(tmp_path):
    assert run("regularize", parse_config(SNAP), str(tmp_path)) == EXIT_OK
    gaps = read_csv(tmp_path / "gaps.csv")
    # normalization shifts values so the (moved) base point maps to 0
    lo, hi, coef = (F(x) for x in gaps[1][1:])
    assert hi - lo == 1 and coef == F(1, 2)
    assert {"blocks.csv", "atoms.csv", "collapse.csv"} <= set(os.listdir(tmp_path))


def test_spectrum_baseline(tmp_path):
    cfg = case_config(get_case("regular_diffusion"))
    path = write(tmp_path, emit_config(cfg))
    code = main(["spectrum", "--config", path, "--out", str(tmp_path / "o"), "--n-per-block", "200", "--k", "3"])
    assert code == EXIT_OK
    rows = read_csv(tmp_path / "o" / "eigenvalues.csv")
    vals = [float(r[1]) for r in rows[1:]]
    assert vals[0] == 0.0
    assert vals[1] == pytest.approx(4.9346997112537861, rel=1e-10)
    assert vals[2] == pytest.approx(19.737569014392673, rel=1e-10)


def test_spectrum_matrix_tables(tmp_path):
    cfg = case_config(get_case("random_walk"))
    assert run("spectrum", cfg, str(tmp_path)) == EXIT_OK
    r = read_csv(tmp_path / "resolvent_0.csv")
    assert r[0] == ["row", "state", "c0", "c1", "c2"] and len(r) == 4
    p = read_csv(tmp_path / "semigroup_0.csv")
    assert sum(float(x) for x in p[1][2:]) == pytest.approx(1.0, abs=1e-12)


def test_simulate_outputs(tmp_path):
    cfg = case_config(get_case("snapping_out"))
    path = write(tmp_path, emit_config(cfg))
    out = tmp_path / "o"
    assert main(["simulate", "--config", path, "--out", str(out), "--paths", "3", "--horizon", "5"]) == EXIT_OK
    rows = read_csv(out / "path_0.csv")
    assert rows[0] == ["t", "state_index", "position", "label"]
    assert {r[3] for r in rows[1:]} <= {"real", "left_limit", "right_limit", "darned", "cemetery"}
    assert os.path.exists(out / "path_2.csv") and os.path.exists(out / "ensemble.csv")


@pytest.mark.parametrize("name", sorted(CASES))
def test_verify_every_gallery_case(tmp_path, name):
    path = write(tmp_path, emit_config(case_config(get_case(name))))
    assert main(["verify", "--config", path, "--out", str(tmp_path / "o")]) == EXIT_OK
    rows = read_csv(tmp_path / "o" / "verification.csv")
    assert rows[0] == ["check", "max_residual", "passed"]


def test_verify_failure_exit(tmp_path, monkeypatch):
    from quasidiff import cli_io
    from quasidiff.form_assembly import CheckReport
    monkeypatch.setattr(cli_io, "verification_reports", lambda cfg: [CheckReport("x", 1.0, False)])
    assert run("verify", parse_config(SNAP), str(tmp_path)) == EXIT_VERIFY


def test_parse_error_exit(tmp_path, capsys):
    path = write(tmp_path, SNAP.replace("slopes = 1, 1", "slopes = 1, -1"))
    assert main(["classify", "--config", path, "--out", str(tmp_path)]) == EXIT_PARSE
    assert "line 5, column 10, field scale.slopes" in capsys.readouterr().err


def test_missing_config_exit(tmp_path):
    assert main(["classify", "--out", str(tmp_path)]) == EXIT_PARSE
    assert main(["classify", "--config", str(tmp_path / "none.cfg")]) == EXIT_PARSE


def test_gallery_subcommand(tmp_path, capsys):
    assert main(["gallery", "list"]) == EXIT_OK
    assert "snapping_out" in capsys.readouterr().out
    assert main(["gallery", "emit", "snapping_out", "--out", str(tmp_path)]) == EXIT_OK
    assert parse_config((tmp_path / "snapping_out.cfg").read_text()).options.n_per_block == 5
    assert main(["gallery", "emit", "nope"]) == EXIT_PARSE


@pytest.mark.parametrize("command", ["classify", "regularize", "spectrum", "simulate", "verify"])
def test_byte_identical_reruns(tmp_path, command):
    path = write(tmp_path, SNAP)
    args = ["--config", path, "--seed", "7", "--paths", "2", "--horizon", "20"]
    assert main([command, *args, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main([command, *args, "--out", str(tmp_path / "b")]) == EXIT_OK
    assert digest(tmp_path / "a") == digest(tmp_path / "b")


def test_seed_changes_paths(tmp_path):
    path = write(tmp_path, SNAP)
    for seed in ("1", "2"):
        main(["simulate", "--config", path, "--seed", seed, "--horizon", "20", "--out", str(tmp_path / seed)])
    assert digest(tmp_path / "1") != digest(tmp_path / "2")


def test_module_entry_point(tmp_path):
    path = write(tmp_path, SNAP)
    proc = subprocess.run([sys.executable, "-m", "quasidiff", "regularize", "--config", path,
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "gaps.csv").exists()


def test_csv_reader_round_trip():
    text = csv_text(("v",), [(F(-7, 3),)])
    assert list(csv.reader(io.StringIO(text)))[1] == ["-7/3"]


def test_unbuildable_chain_exit(tmp_path, capsys):
    # unbounded blocks without a window: the triple is fine, the options are not
    path = write(tmp_path, SNAP.replace("window = -2 : 3\n", ""))
    assert main(["spectrum", "--config", path, "--out", str(tmp_path / "o")]) == EXIT_PARSE
    assert "window" in capsys.readouterr().err
