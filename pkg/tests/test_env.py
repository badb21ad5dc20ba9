import numpy as np
import pytest

from fliphat import BanditInstance, InvalidArgumentError, SeedPath, make_beta_star, make_instance, pull, sample_slate, sample_slates


def lag1_autocorr(Z):
    Z = Z.reshape(-1, Z.shape[-1])
    a, b = Z[:, :-1].ravel(), Z[:, 1:].ravel()
    return np.corrcoef(a, b)[0, 1]


def test_beta_star_examples(root):
    b = make_beta_star(4, 4, 1.0, root)
    assert np.count_nonzero(b) == 4 and np.all(np.abs(b) == 1)
    b = make_beta_star(100, 10, 0.5, root)
    assert np.abs(b).sum() == pytest.approx(5.0)
    assert np.count_nonzero(b) == 10
    with pytest.raises(InvalidArgumentError):
        make_beta_star(10, 0, 1.0, root)
    with pytest.raises(InvalidArgumentError):
        make_beta_star(3, 4, 1.0, root)


def test_default_instance(root):
    inst = make_instance(3, 50, 10, root)
    assert inst.s_star == 10
    assert np.linalg.norm(inst.beta_star) == pytest.approx(1.0)
    assert inst.b_max == pytest.approx(np.sqrt(10))
    with pytest.raises(InvalidArgumentError):
        BanditInstance(K=1, beta_star=np.ones(3))
    with pytest.raises(InvalidArgumentError):
        BanditInstance(K=2, beta_star=np.ones(3), b_max=1.0)


def test_independent_coordinates_when_phi_zero(root):
    inst = BanditInstance(K=2, beta_star=np.zeros(100), ar_phi=0.0)
    Z = sample_slates(inst, root.child("phi0"), 500)
    assert Z.size == 10**5
    assert abs(lag1_autocorr(Z)) <= 0.01


def test_ar_design_correlation_and_variance(root):
    inst = BanditInstance(K=2, beta_star=np.zeros(100), ar_phi=0.3, x_max=10.0)
    Z = sample_slates(inst, root.child("phi3"), 500)
    assert abs(lag1_autocorr(Z) - 0.3) <= 0.02
    assert abs(Z.var() - 1) <= 0.03
    # lag-2 follows the AR(1) covariance phi^2
    flat = Z.reshape(-1, 100)
    assert abs(np.corrcoef(flat[:, :-2].ravel(), flat[:, 2:].ravel())[0, 1] - 0.09) <= 0.02


@pytest.mark.parametrize("phi", [-0.9, 0.0, 0.3, 0.95])
def test_contexts_bounded(root, phi):
    inst = BanditInstance(K=3, beta_star=np.zeros(10), ar_phi=phi, x_max=1.5)
    Z = sample_slates(inst, root.child("bound"), 10**4)
    assert np.abs(Z).max() <= 1.5


def test_slates_deterministic(root):
    inst = make_instance(3, 20, 3, root)
    assert np.array_equal(sample_slate(inst, root.child("s")), sample_slate(inst, root.child("s")))
    assert sample_slate(inst, root.child("s")).shape == (3, 20)


def test_pull_examples(root):
    beta = np.zeros(5)
    beta[0] = 1.0
    inst = BanditInstance(K=2, beta_star=beta, noise_sigma=0.0)
    slate = np.zeros((2, 5))
    slate[0, 0], slate[1, 0] = 2.0, 1.0
    out = pull(inst, slate, 1, root)
    assert (out.reward, out.instant_regret) == (1.0, 1.0)
    assert pull(inst, slate, 0, root).instant_regret == 0.0
    with pytest.raises(InvalidArgumentError):
        pull(inst, slate, 2, root)


def test_null_parameter(root):
    inst = BanditInstance(K=3, beta_star=np.zeros(8), noise_sigma=0.5)
    slate = sample_slate(inst, root.child("slate"))
    out = pull(inst, slate, 2, root.child("noise"))
    assert out.instant_regret == 0.0
    assert out.reward == pytest.approx(0.5 * root.child("noise").generator().standard_normal(1)[0])
    silent = BanditInstance(K=3, beta_star=np.zeros(8), noise_sigma=0.0)
    assert all(pull(silent, slate, a, root).reward == 0.0 for a in range(3))


def test_regret_nonnegative(root):
    inst = make_instance(4, 30, 5, root)
    for k in range(200):
        slate = sample_slate(inst, root.child("t", k))
        assert pull(inst, slate, k % 4, root.child("r", k)).instant_regret >= 0
