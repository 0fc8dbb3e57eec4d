"""Smoke test for the sparsevar Python extension."""

import json
import math
import tempfile
from pathlib import Path

import sparsevar


def main():
    model = sparsevar.VarModel.design("A", 10)
    assert (model.k, model.p) == (10, 1)
    assert abs(model.spectral_radius() - 0.5) < 1e-6
    assert abs(model.population_gamma()[0][0] - 0.01 / 0.75) < 1e-9

    data = model.simulate(200, seed=7)
    again = model.simulate(200, seed=7)
    assert data.path() == again.path()
    x, ys = data.design()
    assert len(x) == 200 and len(ys) == 10

    for tag in sparsevar.ESTIMATORS:
        fit = sparsevar.fit(data, tag, truth=model)
        assert len(fit.coefficients()) == 10
        assert len(fit.forecast(data)) == 10
    fit = sparsevar.fit(data, "lasso")
    back = sparsevar.SystemFit.from_json(fit.to_json())
    assert back.forecast(data) == fit.forecast(data)
    zero = sparsevar.fit(data, "lasso", lambda_=1e9)
    assert all(v == 0.0 for row in zero.coefficients() for v in row)

    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "data.csv"
        data.write(path)
        loaded = sparsevar.Dataset.read(path)
        assert max(abs(a - b) for r, s in zip(loaded.path(), data.path()) for a, b in zip(r, s)) <= 1e-12

    beta, converged = sparsevar.lasso([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], [1.0, 2.0, 3.0], 0.0)
    assert converged and abs(beta[0] - 1.0) < 1e-6 and abs(beta[1] - 2.0) < 1e-6

    value, _ = sparsevar.restricted_eigenvalue([[1.0, 0.0], [0.0, 1.0]], 1)
    assert abs(value - 1.0) < 1e-6
    assert math.isfinite(sparsevar.lambda_theorem1(500, 10, 1, 0.1155))

    diag = sparsevar.diagnose(data, model, lambda_=0.05)
    assert "events" in diag and len(diag["equations"]) == 10

    report = sparsevar.run_experiment("A", 10, 100, n_reps=4, seed=1, estimators=["lasso", "oracle_ols"])
    assert report["seeds"] == [1, 2, 3, 4]
    json.dumps(report)

    try:
        sparsevar.VarModel.design("Z", 10)
    except sparsevar.SparseVarError:
        pass
    else:
        raise AssertionError("unknown design accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
