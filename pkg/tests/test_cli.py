"""Batch front end: file parsing, job dispatch, artifact formats, exit-status
triage, and byte-level determinism."""

import json
from fractions import Fraction as F

import pytest

from convlab import FieldMode, DiffModule
from convlab.cli import JobSpec, emit_profile, main, run
from convlab.diffmod import test_module as witness_module
from convlab.errors import SchemaError
from convlab.radii import radii_profile
from convlab.serialize import (
    dump_json,
    fraction_str,
    module_as_dict,
    module_from_dict,
    parse_fraction_str,
    parse_module_file,
    profile_csv,
)
from convlab.valcore import INF, LaurentPoly

P2 = FieldMode.padic(2)
E0 = FieldMode.eqchar0(16)


def write_json(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(dump_json(obj) if isinstance(obj, dict) else obj,
                    encoding="utf-8")
    return str(path)


def write_module(tmp_path, name, M):
    return write_json(tmp_path, name, module_as_dict(M))


def visible_witness(tmp_path):
    """N(1/4, 1, 1, 1) at p=2: top irlog 3 at r=0, exactly computable."""
    return write_module(tmp_path, "n1411.json",
                        witness_module(P2, F(1, 4), 1, 1, 1, (0, 2)))


def crossing_sum(interval=(0, 1), h2=-2):
    """Direct sum of two visible rank-1 modules whose curves cross."""
    A = witness_module(P2, F(1, 16), 1, 1, 1, interval)
    B = witness_module(P2, F(1, 8), h2, 1, 1, interval)
    return A.direct_sum(B)


# -- rational strings -----------------------------------------------------------


def test_fraction_strings():
    assert fraction_str(F(3)) == "3"
    assert fraction_str(F(-5, 2)) == "-5/2"
    assert fraction_str(INF) == "inf"
    assert parse_fraction_str("7/3") == F(7, 3)
    assert parse_fraction_str("inf") == INF
    assert parse_fraction_str("-inf") == -INF
    assert parse_fraction_str("1.5") == F(3, 2)  # exact, no float involved
    with pytest.raises(SchemaError):
        parse_fraction_str("three")
    with pytest.raises(SchemaError):
        parse_fraction_str("1/0")
    with pytest.raises(SchemaError):
        parse_fraction_str([1])


# -- module files ----------------------------------------------------------------


def test_parse_minimal_rank_one(tmp_path):
    path = write_json(tmp_path, "m.json", {
        "mode": {"mode": "padic", "p": 2},
        "derivation": "ddt",
        "interval": {"r_min": "0", "r_max": "2"},
        "matrix": [["1/4"]],
    })
    M = parse_module_file(path)
    assert M.rank == 1
    assert M.matrix[0][0] == LaurentPoly.constant(P2, F(1, 4))
    assert M.interval == (F(0), F(2))


def test_parse_rejects_non_prime_p(tmp_path):
    path = write_json(tmp_path, "m.json", {
        "mode": {"mode": "padic", "p": 4},
        "derivation": "ddt",
        "interval": {"r_min": "0", "r_max": "2"},
        "matrix": [["1/4"]],
    })
    with pytest.raises(SchemaError) as info:
        parse_module_file(path)
    assert info.value.pointer == "/mode/p"


def test_parse_rejects_pole_on_unbounded_interval(tmp_path):
    path = write_json(tmp_path, "m.json", {
        "mode": {"mode": "padic", "p": 2},
        "derivation": "ddt",
        "interval": {"r_min": "0", "r_max": "inf"},
        "matrix": [[{"-1": "1"}]],
    })
    with pytest.raises(SchemaError) as info:
        parse_module_file(path)
    assert info.value.pointer == "/matrix/0/0"


def test_parse_rejects_unknown_keys_and_bad_shapes(tmp_path):
    base = {
        "mode": {"mode": "padic", "p": 2},
        "derivation": "ddt",
        "interval": {"r_min": "0", "r_max": "2"},
        "matrix": [["1/4"]],
    }
    for mangle, pointer in [
        (lambda d: d.update(extra=1), ""),
        (lambda d: d.update(derivation="dds"), "/derivation"),
        (lambda d: d.update(matrix=[["0", "0"]]), "/matrix"),
        (lambda d: d.update(matrix=[]), "/matrix"),
        (lambda d: d.update(interval={"r_min": "2", "r_max": "0"}), "/interval"),
        (lambda d: d.update(mode={"mode": "padic"}), "/mode"),
        (lambda d: d.update(mode={"mode": "other"}), "/mode/mode"),
        (lambda d: d.update(matrix=[[{"x": "1"}]]), "/matrix/0/0/x"),
    ]:
        doc = json.loads(json.dumps(base))
        mangle(doc)
        with pytest.raises(SchemaError) as info:
            module_from_dict(doc)
        assert info.value.pointer == pointer


def test_parse_rejects_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{nope", encoding="utf-8")
    with pytest.raises(SchemaError):
        parse_module_file(str(path))


def test_module_round_trip_padic():
    M = witness_module(P2, F(1, 4), 1, 1, 1, (0, 2))
    M2 = module_from_dict(module_as_dict(M))
    assert M2.mode == M.mode and M2.derivation == M.derivation
    assert M2.interval == M.interval and M2.matrix == M.matrix


def test_module_round_trip_series_coefficients():
    f = LaurentPoly(E0, {-1: E0.scalar(F(1, 2)), 0: E0.series_scalar({1: F(1)})})
    M = DiffModule(E0, "t_ddt", (1, 2), [[f]])
    M2 = module_from_dict(module_as_dict(M))
    assert M2.matrix == M.matrix and M2.mode == M.mode


def test_round_trip_unbounded_interval():
    M = DiffModule(P2, "ddt", (F(0), INF),
                   [[LaurentPoly.constant(P2, F(1, 4))]])
    M2 = module_from_dict(module_as_dict(M))
    assert M2.interval == (F(0), INF)


# -- job validation ----------------------------------------------------------------


def test_jobspec_rejects_bad_jobs():
    with pytest.raises(SchemaError):
        JobSpec(command="mystery", input_path="x.json")
    with pytest.raises(SchemaError):
        JobSpec(command="radii", input_path="x.json", params={"radius": "0"})
    with pytest.raises(SchemaError):
        JobSpec(command="radii", input_path="x.json")  # missing --r
    with pytest.raises(SchemaError):
        JobSpec(command="radii", input_path="x.json", params={"r": "0"},
                output="svg")


def test_jobspec_defaults():
    job = JobSpec(command="profile", input_path="x.json",
                  params={"r1": "0", "r2": "1"})
    assert job.output == "csv"
    assert job.integer("grid") == 32
    assert job.rational("r1") == 0


def test_run_reports_errors_as_status_2(tmp_path):
    job = JobSpec(command="radii", input_path=str(tmp_path / "missing.json"),
                  params={"r": "0"})
    result = run(job)
    assert result.status == 2 and result.artifact == ""
    assert result.flags and result.flags[0].startswith("error:")

    path = visible_witness(tmp_path)
    result = run(JobSpec(command="radii", input_path=path, params={"r": "7"}))
    assert result.status == 2
    assert "IntervalError" in result.flags[0]


# -- the documented examples ----------------------------------------------------------


def test_radii_job_reports_top_irlog_three(tmp_path, capsys):
    path = visible_witness(tmp_path)
    assert main(["radii", path, "--r", "0"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report == {"exact": True, "irlog": [["3", 1]], "r": "0"}


def test_profile_job_constant_column_three(tmp_path, capsys):
    path = visible_witness(tmp_path)
    assert main(["profile", path, "--r1", "0", "--r2", "3/2",
                 "--grid", "16"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "r,f_1"
    assert lines[1:] == ["0,3", "3/2,3"]


def test_exponents_job_partitions_integer_from_third(tmp_path, capsys):
    path = write_json(tmp_path, "e.json", {"p": 2, "entries": ["3", "1/3"]})
    assert main(["exponents", path]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["partition"] == {"blocks": [["1/3"], ["3"]], "exact": True}
    statuses = {v["entry"]: v["status"] for v in report["verdicts"]}
    assert statuses == {"3": "Integer", "1/3": "RationalNonLiouville"}


# -- profile emission --------------------------------------------------------------


def test_constant_profile_two_row_csv(tmp_path, capsys):
    path = visible_witness(tmp_path)
    assert main(["profile", path, "--r1", "0", "--r2", "1"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert len(rows) == 3  # header + both endpoints
    assert rows[1] == "0,3" and rows[2] == "1,3"


def test_single_kink_three_row_csv(tmp_path, capsys):
    # curves cross at r = 1/2, a grid point: one interior breakpoint
    path = write_module(tmp_path, "kink.json", crossing_sum(h2=-1))
    assert main(["profile", path, "--r1", "0", "--r2", "1",
                 "--grid", "16"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[0] == "r,f_1,f_2"
    assert rows[1:] == ["0,5,4", "1/2,5,5", "1,6,5"]


def test_uncertified_span_dashes_svg_and_flags(tmp_path, capsys):
    # curves cross at r = 1/3, never a dyadic sample point: the chord
    # containing the kink keeps an isolated blended slope
    path = write_module(tmp_path, "cross.json", crossing_sum(h2=-2))
    status = main(["profile", path, "--r1", "0", "--r2", "1",
                   "--grid", "8", "--format", "svg"])
    out = capsys.readouterr().out
    assert status == 1
    assert 'stroke-dasharray' in out
    assert out.startswith("<svg") and out.rstrip().endswith("</svg>")


def test_uncertified_span_flag_ledger(tmp_path, capsys):
    path = write_module(tmp_path, "cross.json", crossing_sum(h2=-2))
    status = main(["profile", path, "--r1", "0", "--r2", "1", "--grid", "8"])
    out, err = capsys.readouterr()
    assert status == 1
    assert "flag: uncertified span [5/16, 3/8] in f_1" in err.splitlines()


def test_lower_bound_radii_flagged(tmp_path, capsys):
    # below the visibility threshold only a bound is certified
    path = write_module(tmp_path, "low.json",
                        witness_module(P2, F(1, 2), 1, 1, 1, (0, 2)))
    status = main(["radii", path, "--r", "1"])
    out, err = capsys.readouterr()
    assert status == 1
    report = json.loads(out)
    assert report["exact"] is False
    assert report["irlog"] == [] and report["lower_bounds"] == [["1", 1]]
    assert any(line.startswith("flag: lower bound only") for line in
               err.splitlines())


def test_emit_profile_formats():
    prof = radii_profile(crossing_sum(h2=-1), 0, 1, grid=16)
    csv_text = emit_profile(prof, "csv")
    assert csv_text == profile_csv(prof)
    parsed = json.loads(emit_profile(prof, "json"))
    assert parsed["rank"] == 2 and parsed["flags"] == []
    assert emit_profile(prof, "svg").startswith("<svg")
    with pytest.raises(SchemaError):
        emit_profile(prof, "pdf")


# -- remaining commands ---------------------------------------------------------------


def test_graph_json_and_dot(tmp_path, capsys):
    path = write_json(tmp_path, "skel.json", {
        "mode": {"mode": "padic", "p": 2},
        "root_radius_log": "0",
        "generators": [{"center": "0", "radius_log": "2"},
                       {"center": "1", "radius_log": "3"},
                       {"center": "5"}],
    })
    assert main(["graph", path]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["root_radius_log"] == "0"
    assert len(report["generators"]) == 3
    assert {v["type"] for v in report["vertices"]} == {"T1", "T2"}

    assert main(["graph", path, "--format", "dot"]) == 0
    dot = capsys.readouterr().out
    assert dot.startswith("digraph skeleton {")
    assert dot.count("->") == len(report["edges"])


def test_newton_job(tmp_path, capsys):
    path = write_json(tmp_path, "p.json", {
        "mode": {"mode": "padic", "p": 2},
        "coeffs": ["-2", "0", "1"],
    })
    assert main(["newton", path, "--r", "0"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report == {"degree": 2, "entries": [["1/2", 2]]}


def test_descend_job_round_trips(tmp_path, capsys):
    path = visible_witness(tmp_path)
    assert main(["descend", path]) == 0
    desc = module_from_dict(json.loads(capsys.readouterr().out))
    assert desc.rank == 2
    assert desc.interval == (F(0), F(4))


def test_oracle_job(tmp_path, capsys):
    path = visible_witness(tmp_path)
    assert main(["oracle", path, "--r", "0", "--k-max", "16"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["irlog"] == "3"
    assert report["estimates"] == [[8, "3"], [16, "3"]]


def test_fuchs_job(tmp_path, capsys):
    M = DiffModule(E0, "t_ddt", (0, 2),
                   [[LaurentPoly.constant(E0, F(1, 2))]])
    path = write_module(tmp_path, "f.json", M)
    assert main(["fuchs", path, "--t-order", "4"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report == {"t_order": 4, "basis": [[{"0": "1"}]]}


def test_constant_basis_job(tmp_path, capsys):
    z = LaurentPoly.zero(E0)
    ut = LaurentPoly(E0, {1: E0.series_scalar({1: F(1)})})
    M = DiffModule(E0, "t_ddt", (1, 2),
                   [[z, ut], [z, LaurentPoly.constant(E0, F(1, 2))]])
    path = write_module(tmp_path, "c.json", M)
    assert main(["constant-basis", path, "--iterations", "1"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["residual"] == "inf"
    assert report["basis"][0][1] == {"1": {"1": "-2"}}


def test_out_flag_writes_file(tmp_path, capsys):
    path = visible_witness(tmp_path)
    target = tmp_path / "report.json"
    assert main(["radii", path, "--r", "0", "--out", str(target)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(target.read_text(encoding="utf-8"))["irlog"] == [["3", 1]]


# -- determinism and corpus identity ---------------------------------------------------


def test_byte_identical_reruns(tmp_path, capsys, monkeypatch):
    mod_path = write_module(tmp_path, "cross.json", crossing_sum(h2=-2))
    exp_path = write_json(tmp_path, "e.json", {"p": 2, "entries": ["3", "1/3"]})
    jobs = [
        ["radii", mod_path, "--r", "0"],
        ["profile", mod_path, "--r1", "0", "--r2", "1", "--grid", "8"],
        ["profile", mod_path, "--r1", "0", "--r2", "1", "--grid", "8",
         "--format", "svg"],
        ["exponents", exp_path],
        ["descend", mod_path],
    ]
    for argv in jobs:
        main(argv)
        first = capsys.readouterr().out
        main(argv)
        assert capsys.readouterr().out == first
        monkeypatch.setenv("CONVLAB_THREADS", "4")
        main(argv)
        assert capsys.readouterr().out == first
        monkeypatch.delenv("CONVLAB_THREADS")


def test_parse_emit_identity_over_corpus():
    corpus = [
        witness_module(P2, F(1, 4), 1, 1, 1, (0, 2)),
        witness_module(FieldMode.padic(3), F(1, 9), -1, 3, 1, (0, 1)),
        witness_module(P2, F(1, 16), 1, 1, 3, (0, F(3, 2))),
        crossing_sum(),
        DiffModule(P2, "t_ddt", (F(1, 2), INF),
                   [[LaurentPoly(P2, {0: P2.scalar(F(1, 3)),
                                      2: P2.scalar(F(-7, 2))})]]),
        DiffModule(E0, "t_ddt", (1, 2),
                   [[LaurentPoly(E0, {-1: E0.series_scalar({0: F(1), 2: F(1, 4)}),
                                      1: E0.scalar(F(5))})]]),
    ]
    for M in corpus:
        text = dump_json(module_as_dict(M))
        M2 = module_from_dict(json.loads(text))
        assert M2.mode == M.mode and M2.derivation == M.derivation
        assert M2.interval == M.interval and M2.matrix == M.matrix
        assert dump_json(module_as_dict(M2)) == text
