import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sadsac.data import (
    BinnedSac,
    FrequencyOfFrequencies,
    RhoAppearanceData,
    from_extended,
    load_binned,
    load_dataset,
    load_fof,
    load_rho,
    merge_fof,
    parse_fof,
    save_binned,
    save_fof,
    save_rho,
    summarize,
    to_jsonable,
)
from sadsac.errors import ConfigurationError, ParseError, ValidationError

fof_counts = st.dictionaries(st.integers(1, 60), st.integers(0, 500), max_size=12)
t0s = st.floats(1e-3, 1e3, allow_nan=False)


def test_bundled_summaries(data):
    assert summarize(data["bird"]) == (72, 645, 54)
    assert data["accident"].n_plus == 1621 and data["accident"].s_total == 2028
    assert data["swine"].n_plus == 8833 and len(data["swine"].counts) == 11
    assert data["tomato"].s_total == 2586 and data["tomato"].max_k == 27
    assert len(data["bird"].counts) == 24


def test_empty_fof():
    fof = parse_fof("k,count\n", default_t0=1.0)
    assert summarize(fof) == (0, 0, 0)


def test_validation_errors(tmp_path):
    with pytest.raises(ValidationError):
        FrequencyOfFrequencies({0: 3})
    with pytest.raises(ValidationError):
        FrequencyOfFrequencies({1: -1})
    with pytest.raises(ValidationError):
        FrequencyOfFrequencies({1: 1}, t0=0.0)
    with pytest.raises(ParseError, match="line 3"):
        parse_fof("k,count\n1,2\n2,x\n", default_t0=1.0)
    with pytest.raises(ParseError):
        parse_fof("k,count\n1,2\n1,3\n", default_t0=1.0)
    p = tmp_path / "f.csv"
    p.write_text("k,count\n1,2\n")
    with pytest.raises(ConfigurationError):
        load_fof(p, default_t0=None)
    assert load_fof(p).t0 == 1.0


def test_t0_annotation_and_override(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("# t0=2.5\nk,count\n1,4\n3,1\n")
    assert load_fof(p).t0 == 2.5
    assert load_fof(p, t0=4.0).t0 == 4.0


@given(fof_counts, t0s)
def test_fof_round_trip(tmp_path_factory, counts, t0):
    fof = FrequencyOfFrequencies(counts, t0)
    path = tmp_path_factory.mktemp("rt") / "fof.csv"
    save_fof(fof, path)
    back = load_fof(path)
    assert back.counts == fof.counts and back.t0 == fof.t0


@given(fof_counts, fof_counts)
def test_summary_additive(a, b):
    fa, fb = FrequencyOfFrequencies(a), FrequencyOfFrequencies(b)
    m = merge_fof(fa, fb)
    assert m.n_plus == fa.n_plus + fb.n_plus
    assert m.s_total == fa.s_total + fb.s_total


def test_rho_round_trip(tmp_path):
    d = RhoAppearanceData(3, 2.0, (4, 1), np.array([0.5, 1.9, 2.0]))
    save_rho(d, tmp_path / "r.csv")
    back = load_rho(tmp_path / "r.csv")
    assert back.rho == 3 and back.low_counts == (4, 1) and back.t0 == 2.0
    np.testing.assert_array_equal(back.times, d.times)
    with pytest.raises(ValidationError):
        RhoAppearanceData(2, 1.0, (1,), np.array([1.5]))
    with pytest.raises(ValidationError):
        RhoAppearanceData(3, 1.0, (1,), np.array([0.5]))


def test_binned(tmp_path):
    b = BinnedSac([0.5, 1.0], [3, 7])
    assert b.t0 == 1.0
    np.testing.assert_array_equal(b.increments, [3, 4])
    save_binned(b, tmp_path / "b.csv")
    back = load_binned(tmp_path / "b.csv")
    np.testing.assert_array_equal(back.cumulative, [3, 7])
    with pytest.raises(ValidationError):
        BinnedSac([0.5, 0.4], [1, 2])
    with pytest.raises(ValidationError):
        BinnedSac([0.5, 1.0], [3, 2])


def test_extended_reals():
    assert to_jsonable({"x": math.inf, "y": np.float64(2.0)}) == {"x": "inf", "y": 2.0}
    assert from_extended("inf") == math.inf and from_extended(3) == 3.0
    assert sorted([math.inf, 1.0, 0.0])[-1] == math.inf


def test_load_dataset_unknown():
    with pytest.raises(ValidationError):
        load_dataset("nope")
