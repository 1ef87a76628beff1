"""Smoke test for the Python bindings.

Build and install first:
    maturin build --release -m crates/almgren-py/Cargo.toml -o dist
    pip install dist/almgren_py-*.whl
"""

import json
import math
import sys
import tempfile
from pathlib import Path

import almgren_py as al


def main() -> int:
    assert al.builtin_scenarios() == ["phi1_interval", "order2_square", "parabola_edge"]

    k = al.Kernel(0.5)
    assert abs(k.kappa - 1.0) < 1e-8
    assert abs(k.psi(2.0) - math.exp(-2.0)) < 1e-12
    assert abs(al.Kernel(0.25).kappa - al.Kernel(0.25).kappa_oracle) < 1e-6

    mu, rayleigh, residual = al.eigenspace(2, 2, 0.5)
    assert mu == al.sphere_eigenvalue(2, 2, 0.5) == 6.0
    assert all(abs(r - mu) < 1e-8 for r in rayleigh)
    assert max(residual) < 1e-10

    sc = al.Scenario.builtin("phi1_interval")
    assert (sc.name, sc.dim, sc.s) == ("phi1_interval", 1, 0.5)
    report = al.run(sc)
    assert report.m0 == 1 and report.exit_code == 0, report
    assert abs(report.gamma_hat - 1.0) < 0.02
    assert report.route_gap < 0.01
    assert len(report.frequency) == len(sc.radii) == 14

    doc = json.loads(report.to_json())
    assert doc["schema"] == "almgren-report/1"
    again = al.Report.from_json(report.to_json())
    assert again.to_csv() == report.to_csv()

    with tempfile.TemporaryDirectory() as d:
        paths = report.emit(d, "csv,svg")
        assert [Path(p).suffix for p in paths] == [".csv", ".svg"]
        assert Path(paths[0]).read_text().count("\n") == 15

    try:
        al.Scenario.builtin("missing")
    except ValueError as e:
        assert "unknown scenario" in str(e)
    else:
        raise AssertionError("expected ValueError")

    print(f"ok: {report!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
