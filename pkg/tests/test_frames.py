import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from redict.errors import InvalidArgumentError, ResourceError
from redict.frames import (
    Dictionary,
    build_harmonic_frame,
    build_redundant_haar_frame,
    custom_dictionary,
    dict_apply,
    format_matrix,
    frame_info,
    gram,
    haar_basis,
    identity_dictionary,
    parse_dict_spec,
    parse_matrix,
    parseval_defect,
    read_matrix,
    write_matrix,
)


def _rand_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_harmonic_gram_n4_l1():
    G = gram(build_harmonic_frame(4, 1))
    np.testing.assert_allclose(np.diag(G).real, 0.8, atol=1e-12)
    off = np.abs(G[~np.eye(5, dtype=bool)])
    np.testing.assert_allclose(off, 0.2, atol=1e-12)


def test_harmonic_entries_follow_one_based_phase():
    D = build_harmonic_frame(3, 2)
    j, k = 2, 4  # 1-based
    expected = np.exp(2j * np.pi * j * k / 5) / math.sqrt(5)
    assert abs(D.entries[j - 1, k - 1] - expected) < 1e-15


def test_harmonic_l0_is_unitary():
    G = gram(build_harmonic_frame(8, 0))
    np.testing.assert_allclose(G, np.eye(8), atol=1e-12)


@pytest.mark.parametrize("n,L", [(1, 0), (4, 1), (16, 3), (33, 7), (128, 8)])
def test_harmonic_parseval_and_gram_bounds(n, L):
    D = build_harmonic_frame(n, L)
    assert parseval_defect(D) <= 1e-12
    G = gram(D)
    N = n + L
    np.testing.assert_allclose(np.diag(G).real, n / N, atol=1e-12)
    if N > 1:
        assert np.abs(G[~np.eye(N, dtype=bool)]).max() <= L / N + 1e-12


def test_haar_p1_matches_hand_computation():
    D = build_redundant_haar_frame(1)
    expected = 0.5 * np.array([[1, 1, 1, -1], [1, 1, -1, 1]])
    np.testing.assert_allclose(D.entries, expected, atol=1e-15)


def test_haar_shift_convention():
    p = 3
    D = build_redundant_haar_frame(p)
    cols = D.entries.real * math.sqrt(2)
    for c in range(0, 2 ** (p + 1), 2):
        np.testing.assert_array_equal(cols[:, c + 1], np.roll(cols[:, c], -1))


@pytest.mark.parametrize("p", range(1, 9))
def test_haar_parseval_and_gram_support(p):
    D = build_redundant_haar_frame(p)
    assert D.n == 2**p and D.N == 2 ** (p + 1)
    assert parseval_defect(D) <= 1e-12
    G = gram(D)
    support = (np.abs(G) > 1e-12).sum(axis=0)
    assert support.max() <= 3 * p + 1


def test_haar_columns_have_norm_inv_sqrt2():
    D = build_redundant_haar_frame(2)
    np.testing.assert_allclose(np.linalg.norm(D.entries, axis=0), 1 / math.sqrt(2), atol=1e-12)


def test_haar_basis_is_orthogonal():
    H = haar_basis(4)
    np.testing.assert_allclose(H.T @ H, np.eye(16), atol=1e-12)


def test_half_identity_defect():
    D = custom_dictionary(0.5 * np.eye(5))
    assert parseval_defect(D) == pytest.approx(0.75, abs=1e-15)


def test_identity_apply_is_identity():
    D = identity_dictionary(6)
    v = _rand_complex(np.random.default_rng(0), 6)
    np.testing.assert_array_equal(D.synthesis(v), v)
    np.testing.assert_array_equal(D.analysis(v), v)


def test_analysis_of_synthesis_e1_is_gram_column():
    D = build_harmonic_frame(4, 1)
    e1 = np.zeros(5)
    e1[0] = 1
    g = D.analysis(D.synthesis(e1))
    assert g[0] == pytest.approx(0.8, abs=1e-12)
    np.testing.assert_allclose(np.abs(g[1:]), 0.2, atol=1e-12)


@pytest.mark.parametrize("spec", ["harmonic:16,3", "harmonic:7,0", "harmonic:9,5", "haar:1",
                                  "haar:5", "haar:8"])
def test_fast_paths_agree_with_dense(spec):
    D = parse_dict_spec(spec)
    rng = np.random.default_rng(1)
    z = _rand_complex(rng, D.N)
    f = _rand_complex(rng, D.n)
    np.testing.assert_allclose(D.synthesis(z), D.synthesis(z, fast=False), atol=1e-10)
    np.testing.assert_allclose(D.analysis(f), D.analysis(f, fast=False), atol=1e-10)
    np.testing.assert_allclose(D.synthesis(D.analysis(f)), f, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 40), L=st.integers(0, 8), seed=st.integers(0, 2**32 - 1))
def test_parseval_reconstruction_property(n, L, seed):
    D = build_harmonic_frame(n, L)
    f = _rand_complex(np.random.default_rng(seed), n)
    np.testing.assert_allclose(D.synthesis(D.analysis(f)), f, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(p=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_gram_is_projection_and_matches_columnwise_analysis(p, seed):
    D = build_redundant_haar_frame(p)
    G = gram(D)
    np.testing.assert_allclose(G, G.conj().T, atol=1e-12)
    np.testing.assert_allclose(G @ G, G, atol=1e-10)
    j = np.random.default_rng(seed).integers(D.N)
    e = np.zeros(D.N)
    e[j] = 1
    np.testing.assert_allclose(D.analysis(D.synthesis(e)), G[:, j], atol=1e-10)


def test_gram_is_read_only():
    G = gram(build_harmonic_frame(4, 1))
    with pytest.raises(ValueError):
        G[0, 0] = 1


@pytest.mark.parametrize("direction,length", [("synthesis", 4), ("analysis", 5)])
def test_dict_apply_dimension_mismatch(direction, length):
    with pytest.raises(InvalidArgumentError):
        dict_apply(build_harmonic_frame(4, 1), np.ones(length), direction)


def test_dict_apply_unknown_direction():
    with pytest.raises(InvalidArgumentError):
        dict_apply(identity_dictionary(3), np.ones(3), "sideways")


@pytest.mark.parametrize("n,L", [(0, 1), (3, -1)])
def test_harmonic_rejects_bad_arguments(n, L):
    with pytest.raises(InvalidArgumentError):
        build_harmonic_frame(n, L)


def test_harmonic_overflow_is_invalid_argument():
    with pytest.raises(InvalidArgumentError):
        build_harmonic_frame(2, 2**31)


def test_haar_memory_budget():
    with pytest.raises(ResourceError):
        build_redundant_haar_frame(20)


def test_custom_requires_wide_finite_matrix():
    with pytest.raises(InvalidArgumentError):
        custom_dictionary(np.ones((3, 2)))
    with pytest.raises(InvalidArgumentError):
        custom_dictionary(np.array([[1.0, np.nan]]))


def test_matrix_text_round_trip(tmp_path):
    D = build_harmonic_frame(3, 2)
    path = tmp_path / "d.txt"
    write_matrix(path, D.entries)
    np.testing.assert_array_equal(read_matrix(path), D.entries)
    assert parse_dict_spec(str(path)).N == 5


@pytest.mark.parametrize("text", [
    "",
    "complex-matrix 1 2\n1:0\n",
    "complex-matrix 1 1\nnan:0\n",
    "complex-matrix 1 1\n1:inf\n",
    "complex-matrix 2 1\n1:0\n",
    "real-matrix 1 1\n1:0\n",
    "complex-matrix 1 1\n1.0\n",
])
def test_matrix_parser_rejects_malformed(text):
    with pytest.raises(InvalidArgumentError):
        parse_matrix(text)


def test_format_matrix_header():
    assert format_matrix(np.eye(2)).splitlines()[0] == "complex-matrix 2 2"


@pytest.mark.parametrize("spec", ["nonsense", "harmonic:4", "haar:x", "/no/such/file"])
def test_bad_dict_spec(spec):
    with pytest.raises(InvalidArgumentError):
        parse_dict_spec(spec)


def test_frame_info_fields():
    info = frame_info(build_redundant_haar_frame(4))
    assert info["label"] == "haar:4"
    assert info["gram_max_column_support"] <= 13
    assert info["parseval_defect"] <= 1e-12


def test_dictionary_is_immutable():
    D = build_harmonic_frame(4, 1)
    with pytest.raises(ValueError):
        D.entries[0, 0] = 0
    assert isinstance(D, Dictionary)
