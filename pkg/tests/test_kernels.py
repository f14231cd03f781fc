"""Compiled and numpy kernels must agree bit for bit."""
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from allclear_tsf import _kernels
from allclear_tsf._kernels import _pure
from allclear_tsf.archive import strip_timestamp
from allclear_tsf.cli import main

core = pytest.importorskip("allclear_tsf._kernels._core", reason="compiled kernels not built")


def test_backend_selected():
    assert _kernels.BACKEND in ("cython", "numpy")


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 80), rows=st.integers(1, 30),
       scale=st.sampled_from([1e-6, 1.0, 1e3, 1e9]))
def test_interval_features_identical(seed, n, rows, scale):
    g = np.random.default_rng(seed)
    X = g.normal(size=(rows, n)) * scale + g.normal() * scale * 10
    k = int(g.integers(1, 10))
    lengths = g.integers(1, n + 1, size=k)
    starts = g.integers(0, n - lengths + 1)
    a = _pure.interval_features(X, starts, starts + lengths)
    b = core.interval_features(X, starts, starts + lengths)
    assert np.array_equal(a, b)


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 120), f=st.integers(1, 12),
       min_leaf=st.integers(1, 6), discrete=st.booleans(),
       w=st.sampled_from([(1.0, 1.0), (0.33, 0.67), (1.0, 0.5), (2.5, 0.1)]))
def test_best_split_identical(seed, m, f, min_leaf, discrete, w):
    g = np.random.default_rng(seed)
    X = g.normal(size=(m + 5, f))
    if discrete:
        X = np.round(X)  # many ties
    y = (g.random(m + 5) < 0.3).astype(np.uint8)
    rows = np.sort(g.choice(m + 5, size=m, replace=False)).astype(np.intp)
    assert _pure.best_split(X, y, rows, *w, min_leaf) == core.best_split(X, y, rows, *w, min_leaf)


def test_best_split_no_candidate():
    X = np.ones((4, 2))
    y = np.array([0, 1, 0, 1], dtype=np.uint8)
    rows = np.arange(4)
    for k in (_pure, core):
        assert k.best_split(X, y, rows, 1.0, 1.0, 1)[0] == -1


def test_midpoint_of_adjacent_doubles_stays_below_upper():
    a = 1.0
    b = np.nextafter(1.0, 2.0)
    X = np.array([[a], [b]])
    y = np.array([0, 1], dtype=np.uint8)
    for k in (_pure, core):
        f, thr, _ = k.best_split(X, y, np.arange(2), 1.0, 1.0, 1)
        assert f == 0 and a <= thr < b


def test_archives_identical_across_backends(tmp_path):
    assert main(["synth", "--n", "80", "--positive", "20", "--length", "24", "--seed", "2", "--out", str(tmp_path)]) == 0
    texts = []
    for backend in ("cython", "numpy"):
        out = tmp_path / f"{backend}.json"
        env = {**os.environ, "ALLCLEAR_TSF_BACKEND": backend}
        subprocess.run([sys.executable, "-m", "allclear_tsf", "train", "--catalog", str(tmp_path / "catalog.csv"),
                        "--values", str(tmp_path / "values.csv"), "--estimators", "10", "--partitions", "1,2,3",
                        "--seed", "7", "--out", str(out)], env=env, check=True)
        texts.append(strip_timestamp(out.read_text()))
    assert texts[0] == texts[1]


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 80))
def test_single_row_path_matches_batch(seed, n):
    g = np.random.default_rng(seed)
    X = g.normal(size=(2, n)) * 10.0 ** g.uniform(-5, 8)
    lengths = g.integers(1, n + 1, size=6)
    starts = g.integers(0, n - lengths + 1)
    batch = _pure.interval_features(X, starts, starts + lengths)
    single = _pure.interval_features(X[:1], starts, starts + lengths)
    assert np.array_equal(batch[:1], single)
    assert np.array_equal(single, core.interval_features(X[:1], starts, starts + lengths))
