import itertools

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from semibart.data import (
    BINARY,
    Dataset,
    LinearTermSpec,
    Standardization,
    build_design,
    destandardize_draws,
    load_csv,
    standardize,
    write_csv,
)
from semibart.draws import PosteriorDraws
from semibart.exceptions import DataError, DesignError
from semibart.scenarios import ScenarioSpec, generate


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_three_rows(tmp_path):
    p = _write(tmp_path, "y,a,x1\n1.5,1,0.2\n2.0,0,0.3\n-1,1,4\n")
    ds = load_csv(p, "y")
    assert (ds.n, ds.p) == (3, 2)
    assert ds.column_names == ("a", "x1")
    np.testing.assert_array_equal(ds.y, [1.5, 2.0, -1.0])
    np.testing.assert_array_equal(ds.X[:, 1], [0.2, 0.3, 4.0])


def test_outcome_column_can_be_anywhere(tmp_path):
    p = _write(tmp_path, "a,y,x1\n1,5,2\n0,6,3\n")
    ds = load_csv(p, "y")
    np.testing.assert_array_equal(ds.y, [5, 6])
    assert ds.column_names == ("a", "x1")


def test_empty_cell_reports_position(tmp_path):
    p = _write(tmp_path, "y,a,x1\n1,1,0.2\n2,,0.3\n")
    with pytest.raises(DataError, match="missing value at row 2, column a"):
        load_csv(p, "y")


@pytest.mark.parametrize("text,msg", [
    ("y,a\n1,abc\n2,1\n", "non-numeric"),
    ("y,a\n1,nan\n2,1\n", "non-finite"),
    ("y,a\n1,1,3\n2,1\n", "fields"),
    ("y,a\n", "no data rows"),
    ("", "empty"),
])
def test_load_errors(tmp_path, text, msg):
    with pytest.raises(DataError, match=msg):
        load_csv(_write(tmp_path, text), "y")


def test_missing_file_and_column(tmp_path):
    with pytest.raises(DataError, match="no such file"):
        load_csv(tmp_path / "absent.csv", "y")
    with pytest.raises(DataError, match="not in header"):
        load_csv(_write(tmp_path, "a,b\n1,2\n3,4\n"), "y")


def test_binary_outcome_checks(tmp_path):
    p = _write(tmp_path, "y,a\n0,1\n1,0\n0.5,1\n")
    with pytest.raises(DataError, match="other than 0/1"):
        load_csv(p, "y", BINARY)
    assert load_csv(p, "y", "auto").outcome_kind == "continuous"
    q = _write(tmp_path, "y,a\n0,1\n1,0\n1,1\n", "b.csv")
    assert load_csv(q, "y", "auto").outcome_kind == BINARY
    assert load_csv(q, "y", "continuous").outcome_kind == "continuous"


def test_scenario_csv_round_trip(tmp_path):
    gd = generate(ScenarioSpec("s1", 500, 11))
    path = tmp_path / "s1.csv"
    write_csv(gd.dataset, path)
    header = path.read_text().splitlines()[0].split(",")
    assert len(header) == 26
    ds = load_csv(path, "y")
    assert (ds.n, ds.p) == (500, 25)
    np.testing.assert_array_equal(ds.X, gd.dataset.X)
    np.testing.assert_array_equal(ds.y, gd.dataset.y)


def test_dataset_invariants():
    with pytest.raises(DataError):
        Dataset(y=[1.0], X=[[1.0]], column_names=("a",))
    with pytest.raises(DataError):
        Dataset(y=[1.0, 2.0], X=np.zeros((2, 0)), column_names=())
    with pytest.raises(DataError):
        Dataset(y=[1.0, np.inf], X=[[1.0], [2.0]], column_names=("a",))
    with pytest.raises(DataError):
        Dataset(y=[0.0, 2.0], X=[[1.0], [2.0]], column_names=("a",), outcome_kind=BINARY)
    ds = Dataset(y=[1.0, 2.0], X=[[1.0], [2.0]], column_names=("a",))
    with pytest.raises(ValueError):
        ds.X[0, 0] = 5.0


def _ds(X, names):
    X = np.asarray(X, dtype=float)
    return Dataset(y=np.arange(X.shape[0], dtype=float), X=X, column_names=names)


def test_single_main_effect():
    ds = _ds([[1, 5], [0, 6], [1, 7]], ("a", "x1"))
    d = build_design(ds, LinearTermSpec.parse("a", ds.column_names))
    np.testing.assert_array_equal(d.L2[:, 0], [1, 0, 1])
    assert d.l1_columns == (1,)


def test_hand_products():
    ds = _ds([[1, 2], [0, 3]], ("a", "x1"))
    d = build_design(ds, LinearTermSpec.parse("a,a:x1,x1", ds.column_names))
    np.testing.assert_array_equal(d.L2, [[1, 2, 2], [0, 0, 3]])
    assert d.term_labels == ("a", "a:x1", "x1")
    # a is the treatment and x1 has its own main effect: neither is split on
    assert d.L1.shape == (2, 0)


def test_partition_keeps_interaction_only_covariates():
    ds = _ds(np.ones((3, 4)), ("a", "x1", "x2", "x3"))
    d = build_design(ds, LinearTermSpec.parse("a,a:x2", ds.column_names))
    assert d.l1_columns == (1, 2, 3)
    d = build_design(ds, LinearTermSpec.parse("a,a:x2,x2", ds.column_names))
    assert d.l1_columns == (1, 3)


def test_s2a_design_matches_linear_component():
    gd = generate(ScenarioSpec("s2a", 200, 3))
    d = build_design(gd.dataset, gd.linear_spec)
    a, x1 = gd.dataset.X[:, 0], gd.dataset.X[:, 1]
    np.testing.assert_array_equal(d.L2, np.column_stack([a, a * x1, x1]))
    psi = np.array(gd.true_psi)
    np.testing.assert_allclose(d.L2 @ psi, 2 * a - a * x1 + 2 * x1)
    assert d.L1.shape[1] == 29


def test_spec_errors():
    names = ("a", "x1")
    with pytest.raises(DesignError, match="unknown column"):
        LinearTermSpec.parse("a,z", names)
    with pytest.raises(DesignError, match="duplicate"):
        LinearTermSpec.parse("a:x1,x1:a", names)
    with pytest.raises(DesignError, match="empty"):
        LinearTermSpec.parse("a,,x1", names)
    with pytest.raises(DesignError):
        LinearTermSpec(())
    with pytest.raises(DesignError):
        LinearTermSpec(((0, 1, 0, 1),))
    ds = _ds([[1, 2], [0, 3]], names)
    with pytest.raises(DesignError, match="out of range"):
        build_design(ds, LinearTermSpec(((5,),)))


def test_standardize_examples():
    ds = Dataset(y=[0.0, 10.0], X=[[1.0], [2.0]], column_names=("a",))
    out, st = standardize(ds)
    np.testing.assert_array_equal(out.y, [-0.5, 0.5])
    assert (st.shift, st.scale, st.applied) == (5.0, 10.0, True)
    ds = Dataset(y=[-1.0, 0.0, 3.0], X=[[1.0], [2.0], [3.0]], column_names=("a",))
    # hand arithmetic: c = 1, s = 4
    np.testing.assert_allclose(standardize(ds)[0].y, [-0.5, -0.25, 0.5], rtol=0, atol=1e-15)
    with pytest.raises(DataError, match="degenerate outcome"):
        standardize(Dataset(y=[3.0, 3.0, 3.0], X=[[1.0], [2.0], [3.0]], column_names=("a",)))


def test_binary_outcome_not_standardized():
    ds = Dataset(y=[0.0, 1.0], X=[[1.0], [2.0]], column_names=("a",), outcome_kind=BINARY)
    out, st = standardize(ds)
    assert out is ds and st == Standardization()


def test_destandardize():
    d = PosteriorDraws(np.array([[0.2, -0.1]]), np.array([0.01]), ("a", "x1"))
    same = destandardize_draws(d, Standardization())
    np.testing.assert_array_equal(same.psi_draws, d.psi_draws)
    np.testing.assert_array_equal(same.sigma2_draws, d.sigma2_draws)
    out = destandardize_draws(d, Standardization(5.0, 10.0, True))
    np.testing.assert_allclose(out.psi_draws, [[2.0, -1.0]])
    np.testing.assert_allclose(out.sigma2_draws, [1.0])


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (6, 4), elements=st.floats(-5, 5)), st.data())
def test_l2_is_product_of_referenced_columns(X, data):
    names = ("a", "b", "c", "d")
    pool = [t for k in (1, 2, 3) for t in itertools.combinations(range(4), k)]
    terms = data.draw(st.lists(st.sampled_from(pool), min_size=1, max_size=5, unique=True))
    ds = _ds(X, names)
    d = build_design(ds, LinearTermSpec(terms))
    for i in range(6):
        for j, t in enumerate(terms):
            assert d.L2[i, j] == np.prod([X[i, c] for c in t])
    perm = data.draw(st.permutations(range(len(terms))))
    d2 = build_design(ds, LinearTermSpec([terms[k] for k in perm]), treatment=terms[0][0])
    np.testing.assert_array_equal(d2.L2, d.L2[:, perm])


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, 8, elements=st.floats(-1e3, 1e3)),
       arrays(np.float64, (5, 2), elements=st.floats(-10, 10)))
@example(np.array([4.6e-235] + [0.0] * 7), np.zeros((5, 2)))
def test_standardize_round_trip(y, psi):
    if y.max() == y.min():
        return
    ds = Dataset(y=y, X=np.ones((8, 1)), column_names=("a",))
    span = y.max() - y.min()
    if span * span < np.finfo(float).tiny:
        with pytest.raises(DataError, match="too extreme"):
            standardize(ds)
        return
    out, st = standardize(ds)
    assert out.y.min() == pytest.approx(-0.5, abs=1e-12)
    assert out.y.max() == pytest.approx(0.5, abs=1e-12)
    np.testing.assert_allclose(out.y * st.scale + st.shift, y, atol=1e-9 * max(1, np.abs(y).max()))
    draws = PosteriorDraws(psi / st.scale, np.abs(psi[:, 0]) / st.scale ** 2, ("a", "b"))
    back = destandardize_draws(draws, st)
    np.testing.assert_allclose(back.psi_draws, psi, rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(back.sigma2_draws, np.abs(psi[:, 0]), rtol=1e-12, atol=1e-300)
