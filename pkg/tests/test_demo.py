import numpy as np
import pytest

from fdiv.demo import distillation_targets, gaussian_mixture, run_demo, train_linear
from fdiv.generators import DomainError, make_generator


class TestData:
    def test_seeded(self):
        a, b = gaussian_mixture(seed=3), gaussian_mixture(seed=3)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_one_hot(self):
        d = gaussian_mixture(n=50, k=4)
        np.testing.assert_array_equal(d.y.sum(axis=1), 1.0)
        np.testing.assert_array_equal(np.argmax(d.y, axis=1), d.labels)

    def test_distillation_targets_positive(self):
        d = distillation_targets(gaussian_mixture(n=100))
        assert np.all(d.y > 0)
        np.testing.assert_allclose(d.y.sum(axis=1), 1.0, atol=1e-12)


class TestTraining:
    def test_alpha_reaches_accuracy(self):
        rep = run_demo("alpha", 1.5, epochs=200, lr=0.1, k=2)
        assert rep.final_accuracy >= 0.95

    def test_zero_epochs(self):
        rep = run_demo("kl", epochs=0)
        assert rep.losses == [] and rep.final_accuracy == rep.initial_accuracy

    @pytest.mark.parametrize("name,alpha", [("kl", None), ("chi-square", None), ("alpha", 1.5)])
    def test_loss_non_increasing(self, name, alpha):
        rep = run_demo(name, alpha, epochs=100, lr=0.01)
        assert np.all(np.diff(rep.losses) <= 1e-6)

    def test_hard_labels_domain_error(self):
        with pytest.raises(DomainError, match="strictly positive"):
            train_linear(make_generator("jeffreys"), gaussian_mixture(n=30), epochs=1)

    def test_distillation_with_reverse_kl(self):
        rep = run_demo("reverse-kl", epochs=50, distill=True)
        assert rep.final_accuracy >= 0.95

    def test_negative_epochs(self):
        with pytest.raises(ValueError):
            run_demo("kl", epochs=-1)
