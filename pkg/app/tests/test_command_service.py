import json

import numpy as np
import pytest
from typer.testing import CliRunner

from app.constants.constants import ANCHOR_RHO, ExitCode
from app.core.errors import ProblemFileError
from app.main import app
from app.services.CommandService import CommandService, load_problem


def _space(atoms, exponent):
    return {"atoms": atoms, "exponent": exponent}


def _operator(matrix, exponent, codomain_exponent=None):
    atoms = len(matrix[0])
    return {
        "matrix": matrix,
        "domain": _space(atoms, exponent),
        "codomain": _space(len(matrix), exponent if codomain_exponent is None else codomain_exponent),
    }


@pytest.fixture
def commands(synthesis):
    return CommandService(synthesis)


def test_schema_violations_are_problem_file_errors():
    with pytest.raises(ProblemFileError):
        load_problem({"version": "1", "command": "no-such-command"})
    with pytest.raises(ProblemFileError):
        load_problem({"version": "1", "command": "counterexample", "unexpected": 1})
    with pytest.raises(ProblemFileError):
        load_problem({"version": "1", "command": "verify", "operator": _operator([[1.0]], 2.0)})
    with pytest.raises(ProblemFileError):
        load_problem({
            "version": "1",
            "command": "rho",
            "operator": _operator([[1.0]], 2.0),
            "partition": {"masses": [1.0], "cells": [[0]]},
        })


def test_unreadable_files_are_problem_file_errors(tmp_path):
    with pytest.raises(ProblemFileError):
        load_problem(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ProblemFileError):
        load_problem(broken)


def test_rho_of_the_l1_identity(commands):
    problem = load_problem({
        "version": "1",
        "command": "rho",
        "p": 1.0,
        "budget": 2,
        "family_size": 1,
        "operator": _operator([[1.0, 0.0], [0.0, 1.0]], 1.0),
    })
    report = commands.run(problem)
    assert report.exit_code == int(ExitCode.ok)
    assert report.result["upper"] == pytest.approx(1.0, rel=1e-6)
    assert report.anchors["rho"] == ANCHOR_RHO


def test_dominate_then_verify(commands):
    operator = _operator([[2.0, 1.0], [0.0, 1.0]], 2.0)
    dominated = commands.run(load_problem({"version": "1", "command": "dominate", "p": 2.0, "operator": operator}))
    assert dominated.exit_code == int(ExitCode.ok)
    assert dominated.result["C"] == pytest.approx(np.linalg.norm([[2.0, 1.0], [0.0, 1.0]], 2), rel=1e-3)
    assert dominated.certificate is not None

    verified = commands.run(load_problem({
        "version": "1", "command": "verify", "p": 2.0, "operator": operator, "certificate": dominated.certificate,
    }))
    assert verified.status == "passed"
    assert verified.exit_code == int(ExitCode.ok)
    assert verified.result["integrity"] is True

    tampered = dict(dominated.certificate, C=dominated.certificate["C"] / 2)
    rejected = commands.run(load_problem({
        "version": "1", "command": "verify", "p": 2.0, "operator": operator, "certificate": tampered,
    }))
    assert rejected.status == "tampered"
    assert rejected.exit_code == int(ExitCode.audit_failed)


def test_counterexample_is_reproducible(commands):
    problem = {"version": "1", "command": "counterexample", "p": 1.0, "counterexample": {"sizes": [4, 8]}}
    first = commands.run(load_problem(problem))
    second = commands.run(load_problem(problem))
    assert first.model_dump() == second.model_dump()
    assert first.result["slope"] == pytest.approx(0.5, abs=1e-6)


def test_zero_kernel_short_circuits(commands):
    report = commands.run(load_problem({
        "version": "1",
        "command": "kernel",
        "kernel": {"grid": [[0.0, 0.0], [0.0, 0.0]], "x_masses": [0.5, 0.5], "y_masses": [0.5, 0.5]},
    }))
    assert report.status == "ok"
    assert report.exit_code == int(ExitCode.ok)
    assert report.result["notes"]
    assert report.result["additivity"]["passed"]


def test_all_p_endomorphism_weight(commands):
    space = {"masses": [1 / 3, 1 / 3, 1 / 3], "exponent": 1.0}
    report = commands.run(load_problem({
        "version": "1",
        "command": "endo",
        "variant": "all_p",
        "truncation": 3,
        "operator": {"matrix": [[0.5, 0.2, 0.0], [0.1, 0.3, 0.4], [0.0, 0.6, 0.2]], "domain": space, "codomain": space},
    }))
    assert report.exit_code == int(ExitCode.ok)
    assert report.result["all_verified"]


def test_cli_writes_the_report(tmp_path):
    problem = tmp_path / "problem.json"
    problem.write_text(json.dumps({
        "version": "1", "command": "counterexample", "p": 1.0, "counterexample": {"sizes": [2, 4]},
    }), encoding="utf-8")
    output = tmp_path / "out" / "report.json"
    result = CliRunner().invoke(app, ["--input", str(problem), "--output", str(output)])
    assert result.exit_code == 0
    payload = json.loads(output.read_text(encoding="utf-8"))
    assert payload["command"] == "counterexample"
    assert payload["result"]["sizes"] == [2, 4]


def test_cli_rejects_a_bad_problem(tmp_path):
    problem = tmp_path / "problem.json"
    problem.write_text(json.dumps({"version": "1", "command": "rho"}), encoding="utf-8")
    result = CliRunner().invoke(app, ["--input", str(problem)])
    assert result.exit_code == int(ExitCode.input_error)
