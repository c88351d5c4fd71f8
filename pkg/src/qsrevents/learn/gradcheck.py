"""Central-difference verification of the analytic gradients."""
from dataclasses import dataclass

import numpy as np

from ..exceptions import InvalidInputError
from .crf import TABLES, TreeCrfWeights, crf_loss_grad
from .networks import SLOT_SIZES, LstmModel, MlpModel

MODELS = ("mlp", "lstm", "lstm2", "crf")


@dataclass(frozen=True)
class GradcheckResult:
    model: str
    n_sampled: int
    n_passed: int
    worst_rel_error: float
    tol: float
    min_fraction: float

    @property
    def fraction(self):
        return self.n_passed / self.n_sampled

    @property
    def passed(self):
        return self.fraction >= self.min_fraction

    def summary(self):
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict} {self.model}: {self.n_passed}/{self.n_sampled} sampled coordinates within "
                f"{self.tol:g} relative error (worst {self.worst_rel_error:.3e})")


def relative_error(analytic, numeric, floor=1e-6):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


class _Problem:
    """Loss of a random network + CRF on a random batch, dropout off, float64."""

    def __init__(self, model, rng, n_in=6, hidden=5, batch=4, seq_len=20, scale=0.5):
        self.net = None
        if model == "mlp":
            self.net = MlpModel.create(n_in, hidden, 2, rng=rng, init_scale=scale)
            self.X = rng.normal(size=(batch, n_in))
        elif model in ("lstm", "lstm2"):
            layers = 2 if model == "lstm2" else 1
            self.net = LstmModel.create(n_in, hidden, layers, input_size=4, rng=rng, init_scale=scale,
                                        seq_len=seq_len)
            self.X = rng.normal(size=(batch, seq_len, n_in))
        elif model == "crf":
            self.scores = [rng.normal(size=(batch, n)) for n in SLOT_SIZES]
        else:
            raise InvalidInputError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
        for p in (self.net.params.values() if self.net else []):
            p += rng.uniform(-scale, scale, size=p.shape) * (p == 0)  # non-zero biases too
        self.crf = TreeCrfWeights.random(rng)
        self.gold = np.stack([rng.integers(0, n, size=batch) for n in SLOT_SIZES], axis=1)
        self.params = dict(self.net.params) if self.net else {}
        self.params.update({f"crf.{n}": getattr(self.crf, n) for n in TABLES})
        if model == "crf":
            self.params.update({f"score.{i}": s for i, s in enumerate(self.scores)})

    def loss_and_grad(self):
        if self.net is None:
            loss, dscores, dtables = crf_loss_grad(self.scores, self.crf, self.gold)
            grads = {f"score.{i}": g for i, g in enumerate(dscores)}
        else:
            scores, cache = self.net.forward(self.X)
            loss, dscores, dtables = crf_loss_grad(scores, self.crf, self.gold)
            grads = self.net.backward(cache, dscores)
        grads.update({f"crf.{n}": g for n, g in dtables.items()})
        return loss, grads

    def loss(self):
        return self.loss_and_grad()[0]


def check_gradients(model="mlp", seed=0, n_samples=200, h=1e-5, tol=1e-4, min_fraction=0.95,
                    grad_fn=None):
    """Compare analytic gradients with central differences on sampled coordinates.

    Coordinates are drawn round-robin over the parameter arrays so every
    array is represented.  ``grad_fn`` may replace the analytic gradient
    (used to feed in deliberately wrong gradients).
    """
    rng = np.random.default_rng(seed)
    problem = _Problem(model, rng)
    _, grads = problem.loss_and_grad()
    if grad_fn is not None:
        grads = grad_fn(grads)
    names = sorted(problem.params)
    n_ok, worst = 0, 0.0
    for i in range(n_samples):
        name = names[i % len(names)]
        p = problem.params[name]
        idx = tuple(int(rng.integers(0, n)) for n in p.shape)
        orig = p[idx]
        p[idx] = orig + h
        up = problem.loss()
        p[idx] = orig - h
        down = problem.loss()
        p[idx] = orig
        err = relative_error(float(grads[name][idx]), (up - down) / (2 * h))
        worst = max(worst, err)
        n_ok += err <= tol
    return GradcheckResult(model, n_samples, int(n_ok), worst, tol, min_fraction)


__all__ = ["MODELS", "GradcheckResult", "check_gradients", "relative_error"]
