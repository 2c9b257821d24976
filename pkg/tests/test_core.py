import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbmrate import (
    Assignment,
    Graph,
    ModelParams,
    SpaceKind,
    check_membership,
    mgf,
    renyi_divergence,
    t_star,
)

# high-precision reference (independent 60-digit script, evaluated pre-build)
I_20_5_100 = 0.0572521100322829891595243001926


def test_renyi_identical_rates_is_zero():
    assert renyi_divergence(5, 5, 100) == 0.0
    assert renyi_divergence(50, 50, 100) == 0.0


def test_renyi_against_high_precision_oracle():
    assert renyi_divergence(20, 5, 100) == pytest.approx(I_20_5_100, rel=1e-14)


def test_renyi_positive_off_equality():
    assert renyi_divergence(51, 50, 100) > 0.0


def test_renyi_domain_errors():
    with pytest.raises(ValueError):
        renyi_divergence(101, 5, 100)
    with pytest.raises(ValueError):
        renyi_divergence(20, -1, 100)
    with pytest.raises(ValueError):
        renyi_divergence(100, 0, 100)  # log argument 0
    with pytest.raises(ValueError):
        renyi_divergence(5, 20, 100)  # b > a


def test_renyi_monotone_in_a():
    b, n = 5, 100
    values = [renyi_divergence(a, b, n) for a in range(6, 60, 3)]
    assert all(x < y for x, y in zip(values, values[1:]))


def test_renyi_equals_minus_log_mgf_min():
    for a, b, n in [(20, 5, 100), (90, 30, 100), (3, 1, 1000), (11, 2, 16)]:
        i = renyi_divergence(a, b, n)
        assert abs(i + math.log(mgf(a, b, n, t_star(a, b, n)))) <= 1e-12


def test_assignment_sizes_and_validation():
    sigma = Assignment((1, 1, 2, 2), 2)
    assert sigma.n == 4
    assert sigma.sizes() == (2, 2)
    assert sum(sigma.sizes()) == sigma.n
    with pytest.raises(ValueError):
        Assignment((1, 3), 2)
    with pytest.raises(ValueError):
        Assignment((0, 1), 2)


def test_assignment_relabel_and_permute():
    sigma = Assignment((1, 1, 2, 3), 3)
    swapped = sigma.relabel([2, 1, 3])
    assert swapped.labels == (2, 2, 1, 3)
    moved = sigma.permute_nodes([3, 0, 1, 2])
    assert moved.labels == (1, 2, 3, 1)


def test_graph_validation():
    good = np.array([[0, 1], [1, 0]], dtype=np.uint8)
    g = Graph(good)
    assert g.n == 2 and g.edge_count == 1
    with pytest.raises(ValueError):
        Graph(np.array([[1, 0], [0, 0]]))  # self-loop
    with pytest.raises(ValueError):
        Graph(np.array([[0, 1], [0, 0]]))  # asymmetric
    with pytest.raises(ValueError):
        Graph(np.array([[0, 2], [2, 0]]))  # non-binary


def test_graph_adjacency_is_frozen():
    g = Graph(np.zeros((3, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        g.adjacency[0, 1] = 1


def test_model_params_validation():
    ModelParams(n=100, k=2, a=20, b=5)
    with pytest.raises(ValueError):
        ModelParams(n=100, k=2, a=5, b=20)  # b > a
    with pytest.raises(ValueError):
        ModelParams(n=100, k=2, a=99.9, b=5)  # a/n above 1 - eps
    with pytest.raises(ValueError):
        ModelParams(n=100, k=2, a=20, b=0.001)  # b below eps
    # degenerate corner reachable only with the bypass
    with pytest.raises(ValueError):
        ModelParams(n=8, k=2, a=8, b=0)
    ModelParams(n=8, k=2, a=8, b=0, validate=False)


def test_model_params_theta_checks():
    n = 4
    sigma = Assignment((1, 1, 2, 2), 2)
    theta = np.full((n, n), 0.2)
    theta[:2, :2] = 0.8
    theta[2:, 2:] = 0.8
    np.fill_diagonal(theta, 0.0)
    ModelParams(n=n, k=2, a=3.2, b=0.8, theta=theta).check_theta_compatible(sigma)
    with pytest.raises(ValueError):
        ModelParams(n=n, k=2, a=3.2, b=0.8, theta=np.full((n, n), 0.2))  # nonzero diagonal
    bad = theta.copy()
    bad[0, 1] = bad[1, 0] = 0.1  # below a/n on a within pair of sigma
    with pytest.raises(ValueError):
        ModelParams(n=n, k=2, a=3.2, b=0.8, theta=bad).check_theta_compatible(sigma)


def test_membership_balanced_true():
    sigma = Assignment((1, 1, 2, 2), 2)
    params = ModelParams(n=4, k=2, a=3, b=1, beta=1.0)
    assert check_membership(sigma, params, SpaceKind.general()).ok
    assert check_membership(sigma, params, SpaceKind.equal_size(0.0)).ok


def test_membership_unbalanced_beta1_false():
    sigma = Assignment((1, 1, 1, 2), 2)
    params = ModelParams(n=4, k=2, a=3, b=1, beta=1.0)
    report = check_membership(sigma, params, SpaceKind.general())
    assert not report.ok
    assert any("n_2" in v for v in report.violations)


def test_membership_unbalanced_beta2_true():
    sigma = Assignment((1, 1, 1, 2), 2)
    params = ModelParams(n=4, k=2, a=3, b=1, beta=2.0)
    assert check_membership(sigma, params, SpaceKind.general()).ok


def test_membership_least_favorable():
    params = ModelParams(n=10, k=3, a=8, b=2)
    ok = Assignment((1, 1, 1, 2, 2, 2, 3, 3, 3, 3), 3)  # sizes (3, 3, 4)
    bad = Assignment((1, 1, 1, 1, 1, 2, 2, 2, 3, 3), 3)  # sizes (5, 3, 2)
    assert check_membership(ok, params, SpaceKind.least_favorable()).ok
    assert not check_membership(bad, params, SpaceKind.least_favorable()).ok


@settings(max_examples=50, deadline=None)
@given(st.permutations([1, 2, 3]), st.lists(st.integers(1, 3), min_size=6, max_size=6))
def test_membership_invariant_under_relabeling(delta, labels):
    sigma = Assignment(tuple(labels), 3)
    params = ModelParams(n=6, k=3, a=5, b=1, beta=1.5)
    for kind in (SpaceKind.general(), SpaceKind.equal_size(0.5)):
        before = check_membership(sigma, params, kind).ok
        after = check_membership(sigma.relabel(list(delta)), params, kind).ok
        assert before == after
