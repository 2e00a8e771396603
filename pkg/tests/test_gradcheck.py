import itertools

import numpy as np
import pytest

from autograd import gradcheck as gradcheck_module
from autograd.engine import Variable
from autograd.gradcheck import gradcheck, relative_error
from config.models import RegularizerConfig


@pytest.mark.parametrize("analytic, numeric, expected", [
    (1.0, 1.0, 0.0),
    (0.0, 1e-12, 0.0),
    (2.0, 1.0, 0.5),
    (1e-8, 0.0, 1e-2),
])
def test_relative_error(analytic, numeric, expected):
    assert relative_error(analytic, numeric) == pytest.approx(expected)


def test_objective_gradients_match_finite_differences(tiny_net, batch):
    report = gradcheck(tiny_net, batch, 0.05, RegularizerConfig(tau=0.5, lambda0=0.5), eps_train=0.1,
                       samples_per_param=6, step=1e-5, seed=0)
    assert report.checked > 0
    assert report.passed(1e-4), f"max rel err {report.max_rel_err} at {report.worst_param}{report.worst_index}"
    assert len(report.rows) == report.checked


def test_two_layer_net_at_larger_eps(mlp_factory, batch):
    net = mlp_factory(widths=(10,), seed=2)
    report = gradcheck(net, batch, 0.1, RegularizerConfig(), eps_train=0.2, samples_per_param=4)
    assert report.checked > 0
    assert report.passed(1e-4)


def test_corrupted_backward_is_caught(monkeypatch, tiny_net, batch):
    def softplus_with_wrong_gradient(self):
        value = np.logaddexp(0, self.data)
        out = Variable._result(value, (self,), "softplus")

        def _backward():
            self._accumulate(2.0 * out.grad * np.exp(self.data - value))
        out._backward = _backward
        return out

    monkeypatch.setattr(Variable, "softplus", softplus_with_wrong_gradient)
    report = gradcheck(tiny_net, batch, 0.05, RegularizerConfig(), eps_train=0.1, samples_per_param=4)
    assert not report.passed(1e-4)
    assert report.worst_param is not None


def test_nothing_compared_is_not_a_pass(monkeypatch, tiny_net, batch):
    calls = itertools.count()
    monkeypatch.setattr(gradcheck_module, "kink_signature", lambda *args: next(calls).to_bytes(8, "little"))
    report = gradcheck(tiny_net, batch, 0.05, RegularizerConfig(), eps_train=0.1, samples_per_param=3)
    assert report.checked == 0 and report.skipped > 0
    assert not report.passed(1e-4)
