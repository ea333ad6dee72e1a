import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clutterseg.accum import empty_cloud, upsample
from clutterseg.errors import ContractError
from clutterseg.eval import (
    EvalReport,
    bench,
    confusion,
    eval_mask,
    macro_mean,
    nn_postprocess,
    prf1,
)

M, C, S = 0, 1, 2


def test_confusion_perfect():
    y = np.array([0, 1, 2, 2, 1])
    assert np.array_equal(confusion(y, y), np.diag([1, 2, 2]))


def test_confusion_hand_tally():
    conf = confusion([M, C, C, S], [M, M, C, S])
    expected = np.zeros((3, 3), int)
    expected[M, M] = expected[M, C] = expected[C, C] = expected[S, S] = 1
    assert np.array_equal(conf, expected)


def test_confusion_replicas_masked():
    cloud = upsample(empty_cloud(10), 15, seed=0)
    conf = confusion(np.zeros(15, int), np.zeros(15, int), eval_mask(cloud))
    assert conf.sum() == 10


def test_confusion_length_mismatch():
    with pytest.raises(ContractError):
        confusion([0, 1], [0])


def test_prf1_diagonal():
    s = prf1(np.diag([3, 4, 5]))
    assert np.all(s.f1 == 1.0) and s.mean_f1 == 1.0 and not s.undefined


def test_prf1_eighty_percent():
    conf = np.array([[8, 2, 0], [2, 5, 0], [0, 0, 5]])
    s = prf1(conf)
    assert (s.precision[0], s.recall[0], s.f1[0]) == pytest.approx((0.8, 0.8, 0.8))


def test_prf1_absent_class_flagged():
    conf = np.array([[5, 0, 0], [0, 0, 0], [0, 0, 5]])
    s = prf1(conf)
    assert s.recall[1] == 0 and "recall" in s.undefined["clutter"]
    assert "clutter" in EvalReport.from_confusion(conf).to_dict()["undefined"]


def test_macro_mean_table_row():
    assert round(macro_mean([86.81, 74.91, 98.43]), 2) == 86.72


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 50), min_size=9, max_size=9), st.permutations([0, 1, 2]))
def test_prf1_class_permutation(entries, perm):
    conf = np.array(entries).reshape(3, 3)
    p = np.array(perm)
    a, b = prf1(conf), prf1(conf[np.ix_(p, p)])
    assert np.allclose(a.f1[p], b.f1)
    assert a.mean_f1 == pytest.approx(b.mean_f1, abs=1e-15)


def test_nn_postprocess_examples():
    surv = [[0.0, 0], [5, 0], [10, 0]]
    pred = np.array([S, C, M])
    assert nn_postprocess(surv, pred, [[6.0, 0]]).tolist() == [C]
    assert nn_postprocess(surv, pred, [[10.0, 0]]).tolist() == [M]
    assert nn_postprocess(surv, pred, [[2.5, 0]]).tolist() == [S]  # tie: lowest index
    with pytest.raises(ContractError):
        nn_postprocess(np.zeros((0, 2)), np.zeros(0, int), [[1.0, 0]])


def test_report_json_and_csv():
    rep = EvalReport.from_confusion(np.diag([1, 2, 3]), n_clouds=2)
    d = rep.to_dict()
    assert d["n_points"] == 6 and d["mean_f1"] == 1.0
    assert rep.confusion_csv().splitlines()[1] == "moving_object,1,0,0"


def test_bench_constant_counts_and_variance():
    ticks = iter(np.cumsum([0, 0.001, 0, 0.003, 0, 0.002, 0, 0.006, 0, 0.004]).tolist())
    res = bench(lambda item: 42, range(5), warmup=1, clock=lambda: next(ticks))
    times = [3.0, 2.0, 6.0, 4.0]
    mean = sum(times) / len(times)
    var = sum((t - mean) ** 2 for t in times) / len(times)
    assert res.point_counts.tolist() == [42] * 4
    assert res.mean_ms == pytest.approx(mean) and res.var_ms2 == pytest.approx(var)
