"""Smoke test for the Python bindings: generate, fit, predict, optimize."""

import json
import math
import tempfile
from pathlib import Path

import assortnet


def test_round_trip():
    truth = assortnet.Model.generate("mnl", 6, 1)
    assert truth.kind == "mnl" and truth.n == 6

    p = truth.probabilities([0, 2])
    assert len(p) == 6
    assert abs(sum(p) - 1.0) < 1e-12
    assert p[1] == 0.0 and p[3] == 0.0 and p[5] > 0.0

    train = assortnet.Dataset.generate(truth, 2000, 2)
    test = assortnet.Dataset.generate(truth, 500, 3)
    assert len(train) == 2000 and train.n == 6
    offered, chosen = train.sample(0)
    assert chosen in offered

    mle = assortnet.fit(train, "mnl-mle")
    net = assortnet.fit(train, "gasn-1", seed=4, val=test, epochs=5)
    ce_truth = truth.cross_entropy(test)
    assert ce_truth <= mle.cross_entropy(test) + 0.05
    assert math.isfinite(net.cross_entropy(test))

    copy = assortnet.Model.from_json(mle.to_json())
    assert copy.probabilities([1, 4]) == mle.probabilities([1, 4])
    assert json.loads(mle.to_json())["kind"] == "mnl"

    with tempfile.TemporaryDirectory() as d:
        path = str(Path(d) / "t.csv")
        test.write_csv(path)
        back = assortnet.Dataset.read_csv(path)
        assert len(back) == len(test)

    rev = assortnet.random_revenue(6, 5)
    assert rev[-1] == 0.0
    best = assortnet.optimize(truth, rev)
    ro = assortnet.optimize(truth, rev, method="ro")
    assert best["exact"] and abs(best["value"] - ro["value"]) < 1e-9

    a, c = assortnet.random_capacity(6, 6)
    capped = assortnet.optimize(truth, rev, capacity=(a, c))
    assert sum(a[i] for i in capped["items"]) <= c + 1e-9

    try:
        assortnet.Model.generate("logit", 6, 1)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown kind accepted")


if __name__ == "__main__":
    test_round_trip()
    print("ok")
