
import numpy as np
import pytest

from combscatter import (ConfigurationError, NumericalSingularityError, build_m, count_digraphs, det_exact,
                         expand_symbolic, s_element_exact, s_matrix_exact, scattering_matrix)
from combscatter.cmt_matrix import reduce_subspace
from combscatter.digraph import coupling_symbols, coupling_values, digraph_terms, evaluate_polynomial
from combscatter.polynomial import TruncatedPolynomial

from conftest import random_config


@pytest.mark.parametrize("n", [1, 2, 4, 7, 10])
def test_det_exact_matches_lu(rng, n):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    assert det_exact(A) == pytest.approx(np.linalg.det(A), rel=1e-10)


def test_det_exact_dimension_guard():
    with pytest.raises(ConfigurationError):
        det_exact(np.eye(11))
    with pytest.raises(ConfigurationError):
        det_exact(np.ones((2, 3)))


def test_exact_s_matches_inversion_on_full_small_comb(rng):
    M = build_m(random_config(rng, n_pumps=2, half_width=1))
    np.testing.assert_allclose(s_matrix_exact(M), scattering_matrix(M).entries, rtol=1e-10, atol=1e-13)
    assert s_element_exact(M, "0", "1") == pytest.approx(scattering_matrix(M).element("0", "1"), rel=1e-10)


def test_exact_s_rejects_singular():
    with pytest.raises(NumericalSingularityError):
        s_element_exact(np.zeros((2, 2)), 0, 1)
    with pytest.raises(NumericalSingularityError):
        s_matrix_exact(np.zeros((2, 2)))


def test_digraph_terms_sum_to_determinant_and_cofactor(isolator):
    red = reduce_subspace(build_m(isolator), ["-1*", "0", "2"]).matrix
    terms = digraph_terms(red)
    assert sum(t.value for t in terms) == pytest.approx(det_exact(red))
    cof = digraph_terms(red, out="0", into="2")
    S = 1j * sum(t.value for t in cof) / det_exact(red)
    assert S == pytest.approx(s_element_exact(red, "0", "2"), abs=1e-18)
    # every cofactor term carries one open path from the input to the output
    i_in, i_out = red.index("2"), red.index("0")
    for t in cof:
        assert t.path[0][0] == i_in and t.path[-1][1] == i_out


def test_isolator_forward_paths_interfere(isolator):
    # two paths reach 0 from 2: the direct coupler and the detour through the -1 anti-mode
    red = reduce_subspace(build_m(isolator), ["-1*", "0", "2"]).matrix
    terms = digraph_terms(red, out="0", into="2")
    assert sorted(len(t.path) for t in terms) == [1, 2]
    assert abs(sum(t.value for t in terms)) < 1e-12 * max(abs(t.value) for t in terms)


def test_digraph_terms_argument_checks(isolator):
    with pytest.raises(ValueError):
        digraph_terms(np.eye(2), out=0)


@pytest.mark.parametrize("n,kind,expected", [
    (1, "full", 2), (3, "full", 720), (5, "modes_only", 120), (5, "full", 3628800), (4, "closed-subset", 24),
])
def test_count_digraphs(n, kind, expected):
    assert count_digraphs(n, kind) == expected


@pytest.mark.parametrize("args", [(0, "full"), (2.5, "full"), (3, "halfway")])
def test_count_digraphs_rejects(args):
    with pytest.raises(ValueError):
        count_digraphs(*args)


def test_coupling_symbols_and_values(isolator):
    assert coupling_symbols(isolator) == ["g1", "g1*", "g2", "g2*", "g3", "g3*"]
    vals = coupling_values(isolator)
    assert vals["g2*"] == pytest.approx(np.conj(vals["g2"]))
    assert abs(vals["g1"]) == pytest.approx(1e4 * 5e-5 / 50)


def test_full_order_expansion_is_exact(isolator):
    # a 3x3 determinant has total pump order <= 3, so order 3 is the complete series
    e = expand_symbolic(isolator, "2", "0", max_order=3, subspace=["-1*", "0", "2"])
    red = reduce_subspace(build_m(isolator), ["-1*", "0", "2"]).matrix
    assert e.evaluate() == pytest.approx(s_element_exact(red, "2", "0"), rel=1e-12)
    assert evaluate_polynomial(e.determinant, e.couplings) == pytest.approx(det_exact(red), rel=1e-12)


def test_paper_sign_leaves_s_unchanged(isolator):
    kw = dict(max_order=3, subspace=["-1*", "0", "2"])
    plain = expand_symbolic(isolator, "0", "2", **kw)
    flipped = expand_symbolic(isolator, "0", "2", paper_sign=True, **kw)
    assert plain.evaluate() == pytest.approx(flipped.evaluate())
    c = {"g2*": 1}
    assert flipped.numerator.coefficient(c) == pytest.approx(-plain.numerator.coefficient(c))


def test_isolator_expansion_terms(isolator):
    e = expand_symbolic(isolator, "0", "2", max_order=3, subspace=["-1*", "0", "2"], paper_sign=True)
    text = e.render({-1: "d", 0: "a", 2: "b"})
    assert "g3*" in text and "Δd*" in text and "g1·g2*" in text
    assert len(e.numerator.to_records()) == 2
    d = e.to_dict()
    assert d["out"] == "0" and d["in"] == "2" and d["paper_sign"]
    assert e.render(which="determinant").count("Δ") >= 3


def test_truncation_and_limits(isolator):
    e = expand_symbolic(isolator, "0", "2", max_order=2, subspace=["-1*", "0", "2"])
    assert e.truncated(1).max_order == 1
    with pytest.raises(ValueError):
        e.truncated(3)
    with pytest.raises(ValueError):
        expand_symbolic(isolator, "0", "2", max_order=-1)
    with pytest.raises(ConfigurationError):
        expand_symbolic(isolator, "0", "2", subspace=["0", "2"])
    with pytest.raises(ConfigurationError):
        expand_symbolic(isolator, "0", "5", subspace=["-1*", "0", "2"])
    with pytest.raises(ConfigurationError):
        expand_symbolic(isolator, "0", "2", subspace=["0", "0", "2"])


def test_symbolic_dimension_limit(circulator):
    with pytest.raises(ConfigurationError):
        expand_symbolic(circulator, "0", "2")


def test_polynomial_arithmetic_and_truncation():
    x = TruncatedPolynomial.variable("x", ["x", "y"], max_order=2)
    y = TruncatedPolynomial.variable("y", ["x", "y"], max_order=2)
    p = (1 + x) * (2 - y)
    assert p.coefficient({"x": 1, "y": 1}) == -1
    assert p.evaluate({"x": 0.5, "y": 3.0}) == pytest.approx(1.5 * -1.0)
    assert ((1 + x) * (1 + x) * (1 + x)).coefficient({"x": 3}) == 0
    assert p.truncate(1).coefficient({"x": 1, "y": 1}) == 0
    assert len(p.homogeneous(1)) == 2
    assert p.substitute({"y": 2.0}).evaluate({"x": 1.0}) == pytest.approx(0.0)
    with pytest.raises(KeyError):
        p.evaluate({"x": 1.0})


def test_polynomial_spectator_weights():
    # zero-weight symbols do not count towards the truncation order
    vars_ = ["g", "D"]
    g = TruncatedPolynomial.variable("g", vars_, 1, [1, 0])
    D = TruncatedPolynomial.variable("D", vars_, 1, [1, 0])
    q = g * D * D * D
    assert q.coefficient({"g": 1, "D": 3}) == 1
    assert (g * g).terms == {}
    assert q.order == 1
