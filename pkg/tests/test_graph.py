import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cdlpp import graph
from oracles import cosine_weights, pairwise_objective, random_instance


def test_dot_identical_and_orthogonal():
    X = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 2.0]])
    W = graph.pairwise_weights(X, scheme="dot", structure="complete").weights
    assert W[0, 1] == pytest.approx(1.0)
    assert W[0, 2] == 0.0
    assert np.all(np.diag(W) == 0)


def test_dot_clamps_negative_and_zero_column():
    X = np.array([[1.0, -1.0, 0.0], [0.0, 0.0, 0.0]])
    W = graph.pairwise_weights(X, structure="complete").weights
    assert W[0, 1] == 0.0
    assert np.all(W[2] == 0) and np.all(W[:, 2] == 0)


def test_dot_matches_entrywise_oracle(rng):
    X = rng.normal(size=(6, 9))
    W = graph.pairwise_weights(X, structure="complete").weights
    np.testing.assert_allclose(W, cosine_weights(X), rtol=1e-12, atol=1e-15)


def test_dot_raw():
    X = np.array([[1.0, 2.0], [1.0, -3.0]])
    W = graph.pairwise_weights(X, scheme="dot-raw", structure="complete").weights
    assert W[0, 1] == 0.0
    X = np.array([[1.0, 2.0], [1.0, 3.0]])
    assert graph.pairwise_weights(X, scheme="dot-raw", structure="complete").weights[0, 1] == 5.0


def test_heat_auto_t():
    A = graph.pairwise_weights(np.array([[0.0, 2.0]]), scheme="heat", structure="complete")
    assert A.t == 4.0
    assert A.weights[0, 1] == pytest.approx(np.exp(-1.0), rel=1e-15)


def test_heat_explicit_t_and_errors():
    A = graph.pairwise_weights(np.array([[0.0, 1.0]]), scheme="heat", structure="complete", t=0.5)
    assert A.weights[0, 1] == pytest.approx(np.exp(-2.0))
    with pytest.raises(ValueError, match="positive"):
        graph.pairwise_weights(np.array([[0.0, 1.0]]), scheme="heat", structure="complete", t=0)
    with pytest.raises(ValueError, match="scheme"):
        graph.pairwise_weights(np.eye(2), scheme="cosine", structure="complete")
    with pytest.raises(ValueError, match="structure"):
        graph.pairwise_weights(np.eye(2), structure="full")
    with pytest.raises(ValueError, match="requires labels"):
        graph.pairwise_weights(np.eye(2))


def test_within_structure_masks_other_classes(rng):
    X = rng.normal(size=(3, 6)) + 3
    labels = np.array([1, 1, 2, 2, 2, 1])
    W = graph.pairwise_weights(X, labels).weights
    assert np.all(W[labels[:, None] != labels[None, :]] == 0)
    assert np.all(W[0, [1, 5]] > 0)


def test_knn_mask_symmetric_or():
    X = np.array([[0.0, 1.0, 3.0, 10.0]])
    M = graph.knn_mask(X, 1)
    # 0<->1, 2->1 (nearest), 3->2
    expected = {(0, 1), (1, 2), (2, 3)}
    got = {(i, j) for i, j in zip(*np.nonzero(np.triu(M)))}
    assert got == expected
    with pytest.raises(ValueError, match="k < n"):
        graph.knn_mask(X, 4)


def test_knn_within_labels():
    X = np.array([[0.0, 1.0, 1.1, 5.0]])
    M = graph.knn_mask(X, 1, labels=np.array([1, 2, 1, 2]))
    assert not M[1, 2] and M[0, 2] and M[1, 3]


def test_laplacian_examples():
    np.testing.assert_array_equal(graph.laplacian(np.array([[0.0, 1], [1, 0]])), [[1, -1], [-1, 1]])
    chain = np.array([[0.0, 2, 0], [2, 0, 3], [0, 3, 0]])
    np.testing.assert_array_equal(graph.laplacian(chain), [[2, -2, 0], [-2, 5, -3], [0, -3, 3]])


def test_laplacian_ones_null(rng):
    A = rng.random((7, 7))
    A = A + A.T
    np.fill_diagonal(A, 0)
    L = graph.laplacian(A)
    v = np.ones(7)
    assert abs(v @ L @ v) <= 1e-12 * np.abs(A).max()


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6, 6), elements=st.floats(0, 10)), st.integers(0, 2 ** 31))
def test_laplacian_properties(raw, seed):
    A = graph._sym(raw)
    np.fill_diagonal(A, 0)
    L = graph.laplacian(A)
    assert np.array_equal(L, L.T)
    scale = max(np.abs(A).max(), 1.0)
    assert np.all(np.abs(L.sum(axis=1)) <= 1e-10 * scale)
    V = np.random.default_rng(seed).normal(size=(6, 20))
    assert np.all(np.einsum("ij,ik,kj->j", V, L, V) >= -1e-10 * scale * (V * V).sum(0))


def test_affinities_bitwise_symmetric(rng):
    X = rng.normal(size=(11, 17))
    for scheme in graph.SCHEMES:
        W = graph.pairwise_weights(X, structure="complete", scheme=scheme).weights
        assert np.array_equal(W, W.T)
        assert np.all(W >= 0)


def test_within_kernel_single_sample_classes(rng):
    X = rng.normal(size=(4, 3))
    labels = np.array([1, 2, 3])
    K = graph.within_class_kernel(X, graph.pairwise_weights(X, labels))
    assert np.all(K == 0)


def test_within_kernel_collapsed_class(rng):
    X = rng.normal(size=(5, 8)) + 2
    X[:, :4] = X[:, [0]]
    labels = np.array([1, 1, 1, 1, 2, 2, 2, 2])
    A = graph.pairwise_weights(X, labels)
    mask = labels == 1
    A1 = graph.AffinityMatrix(np.where(np.outer(mask, mask), A.weights, 0.0), "dot", "within")
    K1 = graph.within_class_kernel(X, A1)
    w = rng.normal(size=5)
    assert abs(w @ K1 @ w) <= 1e-12


def test_within_kernel_matches_loop():
    rng = np.random.default_rng(7)
    X, labels = random_instance(rng, 5, 40, 10)
    A = graph.pairwise_weights(X, labels)
    K = graph.within_class_kernel(X, A)
    for _ in range(20):
        w = rng.normal(size=10)
        ref = pairwise_objective(w @ X, A.weights, labels)
        assert w @ K @ w == pytest.approx(ref, rel=1e-10)


def test_within_kernel_dimension_mismatch():
    with pytest.raises(ValueError, match="nodes"):
        graph.within_class_kernel(np.zeros((2, 3)), np.zeros((4, 4)))


def test_class_means():
    X = np.array([[0.0, 2.0, 5.0], [0.0, 2.0, -1.0]])
    U, sizes = graph.class_means(X, np.array([1, 1, 2]))
    np.testing.assert_array_equal(U, [[1.0, 5.0], [1.0, -1.0]])
    np.testing.assert_array_equal(sizes, [2, 1])


def test_class_kernel_two_classes(rng):
    U = rng.normal(size=(3, 2)) + 1
    b = cosine_weights(U)[0, 1]
    K = graph.class_laplacian_kernel(U)
    w = rng.normal(size=3)
    m = w @ U
    assert w @ K @ w == pytest.approx(b * (m[0] - m[1]) ** 2, rel=1e-12)


def test_class_kernel_identical_means():
    U = np.tile(np.array([[1.0], [2.0]]), (1, 3))
    assert np.allclose(graph.class_laplacian_kernel(U), 0)
    with pytest.raises(ValueError, match="2 classes"):
        graph.class_laplacian_kernel(U[:, :1])


def test_class_kernel_matches_loop():
    rng = np.random.default_rng(3)
    U = rng.normal(size=(6, 4)) + 1
    B = graph.pairwise_weights(U, scheme="dot", structure="complete").weights
    K = graph.class_laplacian_kernel(U)
    for _ in range(20):
        w = rng.normal(size=6)
        assert w @ K @ w == pytest.approx(pairwise_objective(w @ U, B), rel=1e-10)


def test_class_kernel_weights_from_other_means(rng):
    U = rng.normal(size=(5, 3)) + 1
    P = np.linalg.qr(rng.normal(size=(5, 2)))[0]
    K = graph.class_laplacian_kernel(P.T @ U, U_weights=U)
    Kfull = graph.class_laplacian_kernel(U)
    np.testing.assert_allclose(K, P.T @ Kfull @ P, atol=1e-12)


def test_between_scatter_example():
    X = np.array([[0.0, 2.0, 4.0, 6.0]])
    labels = np.array([1, 1, 2, 2])
    U, sizes = graph.class_means(X, labels)
    assert graph.between_class_scatter(U, sizes, X.mean(axis=1))[0, 0] == pytest.approx(16.0)


def test_between_scatter_single_class(rng):
    X = rng.normal(size=(3, 5))
    U, sizes = graph.class_means(X, np.ones(5, dtype=int))
    assert np.allclose(graph.between_class_scatter(U, sizes, X.mean(axis=1)), 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2 ** 31))
def test_between_scatter_centering_form_and_rank(p, seed):
    rng = np.random.default_rng(seed)
    X, labels = random_instance(rng, p, 4 * p, 9)
    U, sizes = graph.class_means(X, labels)
    Sb = graph.between_class_scatter(U, sizes, X.mean(axis=1))
    # centering-matrix construction: U C N C^T U^T with C = I - 1 n^T / N
    N = np.diag(sizes.astype(float))
    C = np.eye(p) - np.outer(np.ones(p), sizes) / sizes.sum()
    ref = U @ C.T @ N @ C @ U.T
    np.testing.assert_allclose(Sb, ref, rtol=0, atol=1e-12 * np.abs(ref).max())
    ev = np.linalg.eigvalsh(Sb)
    assert ev.min() >= -1e-10 * np.trace(Sb)
    assert np.count_nonzero(ev > 1e-10 * ev.max()) <= p - 1


def test_within_scatter(rng):
    X = rng.normal(size=(3, 6))
    labels = np.array([1, 1, 1, 2, 2, 2])
    S = graph.within_class_scatter(X, labels)
    ref = sum(np.cov(X[:, labels == c], bias=True) * 3 for c in (1, 2))
    np.testing.assert_allclose(S, ref, atol=1e-12)


def test_degree_kernel(rng):
    X = rng.normal(size=(3, 4))
    A = np.ones((4, 4)) - np.eye(4)
    np.testing.assert_allclose(graph.degree_kernel(X, A), 3 * X @ X.T, atol=1e-12)
