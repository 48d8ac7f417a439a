import json

import pytest

from app.main import main

FAILING_FAMILY = {"n": 1, "p": 1, "C": [[[1, 0], [0, -1]], [[0, 1], [0, 0]]]}


def run_cli(capsys, *argv: str):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured


def run_json(capsys, *argv: str):
    code, captured = run_cli(capsys, *argv)
    return code, json.loads(captured.out)


def statuses(report) -> dict:
    return {check["name"]: check["status"] for check in report["checks"]}


def test_check_lambda_on_parabola(capsys) -> None:
    """
    All conditions hold and the family is flat.
    """
    code, report = run_json(capsys, "check-lambda", "--bundled", "parabola")
    assert code == 0
    assert report["command"] == "check-lambda"
    assert report["error"] is None
    assert report["results"]["flat"] is True
    assert len(report["input_digest"]) == 64
    checks = statuses(report)
    for name in ("condition_1", "condition_2", "condition_3", "flat_iff_isotropic", "lambda_nilpotent"):
        assert checks[name] == "PASS"


def test_check_lambda_reports_structure_relations(capsys) -> None:
    code, report = run_json(capsys, "check-lambda", "--bundled", "r8_shape_family")
    assert code == 0
    assert "C_3C_4 = 1*C_2" in report["results"]["B_relations"]


def test_check_lambda_failing_family(capsys, tmp_path) -> None:
    path = tmp_path / "failing.json"
    path.write_text(json.dumps(FAILING_FAMILY))
    code, report = run_json(capsys, "check-lambda", str(path))
    assert code == 1
    assert report["command"] == "check-lambda"


def test_surface_on_parabola(capsys) -> None:
    code, report = run_json(capsys, "--seed", "3", "surface", "--bundled", "parabola", "--verify-symmetry", "3")
    assert code == 0
    checks = statuses(report)
    assert checks["extrinsic_symmetry"] == "PASS"
    assert checks["product_identities"] == "PASS"
    assert report["seed"] == 3


def test_surface_skips_lemma_outside_its_hypotheses(capsys) -> None:
    code, report = run_json(capsys, "surface", "--bundled", "r8_example", "--verify-symmetry", "2")
    assert code == 0
    assert statuses(report)["lemma_M_equals_N"] == "SKIPPED"


def test_orbit_on_parabola(capsys) -> None:
    code, report = run_json(capsys, "orbit", "--bundled", "parabola", "--point", "0,1", "1/2")
    assert code == 0
    point = report["results"]["points"][0]
    assert point["x_tilde"] == ["0", "1/2"]
    assert point["u_tilde"] == ["0", "-1/8"]
    assert statuses(report) == {"orbit_on_surface": "PASS", "flat_graph": "PASS", "geodesic_symmetry": "PASS"}


def test_orbit_points_file(capsys, tmp_path) -> None:
    path = tmp_path / "points.json"
    path.write_text(json.dumps({"points": [{"x": [1, 0], "t": 2}, {"x": [0, 1], "t": "1/3"}]}))
    code, report = run_json(capsys, "orbit", "--bundled", "parabola", "--points", str(path))
    assert code == 0
    assert [p["t"] for p in report["results"]["points"]] == ["2", "1/3"]


def test_classify_codim2(capsys) -> None:
    code, report = run_json(capsys, "--seed", "7", "classify-codim2", "--n", "1", "--count", "5")
    assert code == 0
    assert report["results"]["instances"] == 5
    assert report["results"]["histogram"]["violation"] == 0


def test_star_on_sigma(capsys) -> None:
    code, report = run_json(
        capsys, "star", "--bundled", "parabola", "--on-sigma", "--u", "x1", "--v", "x2", "--check", "assoc"
    )
    assert code == 0
    assert report["results"]["star"]["max_nu_degree"] == 1
    checks = statuses(report)
    assert checks["associativity"] == "PASS"
    assert checks["leaf_invariant_pullbacks"] == "PASS"
    assert checks["hamiltonian_brackets"] == "PASS"


def test_star_on_ambient_space(capsys) -> None:
    code, report = run_json(
        capsys,
        "star",
        "--bundled",
        "parabola",
        "--u",
        "z1*z3",
        "--v",
        "z2 + z4",
        "--check",
        "derivation",
        "--check",
        "invariance",
    )
    assert code == 0
    assert statuses(report) == {"derivation": "PASS", "affine_invariance": "PASS"}


def test_text_output(capsys) -> None:
    code, captured = run_cli(capsys, "--output", "text", "check-lambda", "--bundled", "parabola")
    assert code == 0
    assert captured.out.startswith("check-lambda (seed 0, mode exact)")
    assert "PASS     condition_3" in captured.out


@pytest.mark.parametrize(
    "argv",
    [
        ["check-lambda", "missing.json"],
        ["check-lambda", "--bundled", "nope"],
        ["check-lambda"],
        ["--mode", "float", "surface", "--bundled", "parabola"],
        ["classify-codim2", "--n", "0"],
    ],
)
def test_input_errors(capsys, argv) -> None:
    code, captured = run_cli(capsys, *argv)
    assert code == 2
    assert json.loads(captured.out)["error"]
    assert "symspace" in captured.err


def test_malformed_json(capsys, tmp_path) -> None:
    path = tmp_path / "broken.json"
    path.write_text('{"n": 1,')
    code, report = run_json(capsys, "check-lambda", str(path))
    assert code == 2
    assert report["error"].startswith("InputError")


def test_star_needs_surface_in_the_class(capsys) -> None:
    code, report = run_json(capsys, "star", "--bundled", "r8_example", "--on-sigma", "--u", "x1", "--v", "x2")
    assert code == 2
    assert report["error"].startswith("OutOfClassError")


@pytest.mark.parametrize(
    "argv",
    [
        ["check-lambda", "--bundled", "r8_shape_family"],
        ["surface", "--bundled", "r8_example", "--verify-symmetry", "5"],
        ["orbit", "--bundled", "parabola", "--point", "1,1", "2"],
        ["classify-codim2", "--n", "2", "--count", "4"],
        ["star", "--bundled", "parabola", "--u", "z1*z2", "--v", "z3**2", "--check", "invariance"],
    ],
)
def test_reports_are_reproducible(capsys, argv) -> None:
    """
    Same input and seed give the same report, wall time aside.
    """
    reports = []
    for _ in range(2):
        code, captured = run_cli(capsys, "--seed", "5", *argv)
        assert code == 0
        report = json.loads(captured.out)
        report.pop("wall_time")
        reports.append(json.dumps(report, sort_keys=True))
    assert reports[0] == reports[1]


@pytest.mark.slow
def test_dichotomy_on_a_thousand_instances(capsys) -> None:
    """
    Seeded run at n = 2: no sampled solution is curved with a nonzero product,
    and every lemma conclusion holds.
    """
    code, report = run_json(capsys, "--seed", "7", "classify-codim2", "--n", "2", "--count", "1000")
    assert code == 0
    assert report["results"]["violations"] == []
    assert report["results"]["lemma_failures"] == []
    assert sum(report["results"]["histogram"].values()) == 1000


@pytest.mark.slow
def test_dichotomy_at_n_3(capsys) -> None:
    code, report = run_json(capsys, "--seed", "7", "classify-codim2", "--n", "3", "--count", "300")
    assert code == 0
    assert report["results"]["violations"] == []
    assert report["results"]["lemma_failures"] == []
    assert statuses(report) == {"dichotomy": "PASS", "proof_lemmas": "PASS"}
    assert sum(report["results"]["histogram"].values()) == 300
