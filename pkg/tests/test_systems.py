import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from thermospec import (
    BudgetExceeded,
    GluedSystem,
    PiecewiseConformalMap,
    SymbolicSystem,
    cylinders,
    log_word_count,
    topological_entropy_exact,
    validate,
    word_count,
)
from thermospec.systems import Branch, block_presentation, word_blocks


def _brute_count(a, n):
    m = a.shape[0]
    return sum(1 for w in itertools.product(range(m), repeat=n) if all(a[x, y] for x, y in zip(w, w[1:])))


matrices = st.integers(2, 4).flatmap(
    lambda m: st.lists(st.lists(st.integers(0, 1), min_size=m, max_size=m), min_size=m, max_size=m)
).map(np.array).filter(lambda a: a.any(axis=1).all())


@given(matrices, st.integers(1, 6))
def test_word_count_matches_enumeration(a, n):
    sys_ = SymbolicSystem(a)
    assert word_count(sys_, n) == _brute_count(a, n)
    words = list(cylinders(sys_, n))
    assert len(words) == len(set(words)) == _brute_count(a, n)
    assert all(sys_.admissible(w) for w in words)


def test_words_in_lexicographic_order_across_blocks():
    sys_ = SymbolicSystem.golden_mean()
    blocks = list(word_blocks(sys_, 12, max_block=8))
    assert len(blocks) > 1
    words = [tuple(r) for b in blocks for r in b]
    assert words == sorted(words)


def test_log_word_count_large_n():
    sys_ = SymbolicSystem.full(3)
    assert log_word_count(sys_, 2000) == pytest.approx(2000 * math.log(3), rel=1e-12)
    assert word_count(sys_, 60) == 3**60


def test_entropies():
    assert topological_entropy_exact(SymbolicSystem.full(5)) == pytest.approx(math.log(5), abs=1e-13)
    assert topological_entropy_exact(SymbolicSystem.golden_mean()) == pytest.approx(math.log((1 + 5**0.5) / 2), abs=1e-12)
    glued = GluedSystem((SymbolicSystem.full(2), SymbolicSystem.full(3)))
    assert topological_entropy_exact(glued) == pytest.approx(math.log(3), abs=1e-13)


def test_glued_layout():
    glued = GluedSystem((SymbolicSystem.full(2), SymbolicSystem.golden_mean()))
    assert glued.offsets == [0, 2]
    assert glued.alphabet_size == 4
    t = glued.transition
    assert t[:2, 2:].sum() == 0 and t[2:, :2].sum() == 0
    assert not glued.irreducible
    np.testing.assert_array_equal(glued.part_symbols(1), [2, 3])


def test_reducible_components():
    a = np.array([[1, 1, 0], [0, 1, 0], [0, 0, 1]])
    sys_ = SymbolicSystem(a)
    assert not sys_.irreducible
    assert len(sys_.components) >= 2


def test_invalid_matrices():
    with pytest.raises(ValueError):
        SymbolicSystem(np.array([[1, 2], [0, 1]]))
    with pytest.raises(ValueError):
        SymbolicSystem(np.ones((2, 3)))
    assert validate(SymbolicSystem(np.array([[1, 0], [1, 0]])))


def test_doubling_map():
    cmap = PiecewiseConformalMap.full_branched([2.0, 2.0])
    assert not validate(cmap)
    np.testing.assert_array_equal(cmap.symbolic().transition, np.ones((2, 2)))
    assert cmap(0.3) == pytest.approx(0.6)
    assert cmap.factor(0.7) == pytest.approx(2.0)
    assert cmap.is_linear and cmap.bounded_contraction


def test_cantor_repeller_cylinders():
    cmap = PiecewiseConformalMap.full_branched([2.0, 4.0])
    assert cmap.repeller
    lo, hi = cmap.cylinder_intervals([0, 1, 1])[0]
    assert hi - lo == pytest.approx(1 / (2 * 4 * 4))


def test_non_markov_map():
    br = (Branch.linear(0.0, 0.5, 0.0, 0.8), Branch.linear(0.5, 1.0, 0.0, 1.0))
    cmap = PiecewiseConformalMap(br)
    assert cmap.markov_matrix is None
    assert any("not Markov" in p for p in validate(cmap))


def test_critical_point_rejected():
    br = (Branch.from_strings(0.0, 0.5, "4*x*(1-x)", "abs(4 - 8*x)"), Branch.from_strings(0.5, 1.0, "4*x*(1-x)", "abs(4 - 8*x)"))
    problems = validate(PiecewiseConformalMap(br))
    assert any("critical" in p for p in problems)


def test_block_presentation_golden_mean():
    states, edges, words = block_presentation(SymbolicSystem.golden_mean(), 3)
    assert [tuple(s) for s in states] == [(0, 0), (0, 1), (1, 0)]
    assert edges.shape == (2, 5)
    assert [tuple(w) for w in words] == [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 0, 1)]


def test_suffix_intervals_match_scalar_path():
    br = (Branch.from_strings(0.0, 0.5, "x*(3 - 2*x)", "3 - 4*x"), Branch.linear(0.5, 1.0, 0.0, 1.0))
    cmap = PiecewiseConformalMap(br)
    assert not validate(cmap)
    words = np.array(list(itertools.product(range(2), repeat=5)))
    lo, hi = cmap.suffix_intervals(words)
    for r, w in enumerate(words):
        ivs = cmap.cylinder_intervals(list(w))
        np.testing.assert_allclose(lo[r], [a for a, _ in ivs], atol=1e-14)
        np.testing.assert_allclose(hi[r], [b for _, b in ivs], atol=1e-14)
