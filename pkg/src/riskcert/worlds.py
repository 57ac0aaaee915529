"""Synthetic data worlds where the bound ingredients are exactly computable.

Three worlds, one per consumer: a 1-D squared-loss world with closed-form
risk and deviation for the increment-bound coverage checks, a finite coin
world for the PAC-Bayes coverage checks, and a two-class Gaussian-blob task
for the toy network trainer.
"""

import math

import numpy as np

from .errors import InvalidInputError
from .pac_core import FiniteProcessWorld

__all__ = ["SquaredLossUniformWorld", "make_coin_world", "GaussianBlobTask"]


class SquaredLossUniformWorld:
    """Scalar predictor f with loss (z - f)^2 / 2 on z ~ Uniform[-1, 1].

    Everything is closed form: risk(f) = (f^2 + 1/3)/2, the deviation
    risk - loss is linear in f with gradient z, and |z| <= 1 makes the
    deviation 1-Lipschitz in f.
    """

    lipschitz_deviation = 1.0
    #: E z and E z^2 under the data distribution
    gradient_mean = 0.0
    gradient_second_moment = 1.0 / 3.0
    #: the deviation gradient does not depend on f, so the derivative of the
    #: expected deviation along a flow reduces to a mean-path dot product
    gradient_constant_in_predictor = True

    def sample(self, count, rng):
        return rng.uniform(-1.0, 1.0, size=count)

    def loss(self, f, z):
        return 0.5 * (np.asarray(z) - f) ** 2

    def risk(self, f):
        return 0.5 * (f * f + 1.0 / 3.0)

    def deviation(self, f, z):
        return self.risk(f) - self.loss(f, z)

    def deviation_gradient(self, f, z):
        # d/df [risk(f) - loss(f, z)] = f - (f - z) = z
        return np.asarray(z, dtype=float)

    def projection_second_moments(self, directions, predictors, sample):
        """((P + P_S)/2)-average of <direction, grad deviation>^2 for each
        predictor; exact on the P side."""
        z2 = float(np.mean(np.square(sample)))
        mixed = 0.5 * (self.gradient_second_moment + z2)
        return np.square(np.asarray(directions, dtype=float)) * mixed

    def sample_mean_gradient(self, sample):
        return float(np.mean(sample))


def make_coin_world(biases):
    """Finite world of independent coins: one observation is the bit vector
    of all coin flips, predictor f's loss is bit f, so risk(f) is bias f
    exactly."""
    biases = np.asarray(biases, dtype=float)
    if biases.ndim != 1 or biases.size < 1:
        raise InvalidInputError("biases must be a nonempty vector")
    if np.any((biases < 0) | (biases > 1)):
        raise InvalidInputError("biases must lie in [0, 1]")
    if biases.size > 16:
        raise InvalidInputError("too many coins: outcome table is 2^count")
    count = biases.size
    outcomes = np.arange(2**count)
    bits = (outcomes[:, None] >> np.arange(count)[None, :]) & 1
    probs = np.prod(
        np.where(bits == 1, biases[None, :], 1.0 - biases[None, :]), axis=1
    )
    return FiniteProcessWorld(outcome_probs=probs, loss_table=bits.T.astype(float))


class GaussianBlobTask:
    """Two-class task: label y is a fair sign, input is a Gaussian blob at
    y * separation * e_1, then radially clipped into the unit ball so the
    input radius is exactly 1."""

    def __init__(self, input_dim, separation=0.6, noise=0.5):
        if input_dim < 1:
            raise InvalidInputError("input_dim must be >= 1")
        if not 0.0 < separation < 1.0:
            raise InvalidInputError("separation must be in (0, 1)")
        self.input_dim = int(input_dim)
        self.separation = float(separation)
        self.noise_scale = float(noise) / math.sqrt(input_dim)
        self.input_radius = 1.0

    def sample(self, count, rng):
        y = np.where(rng.random(count) < 0.5, -1.0, 1.0)
        x = self.noise_scale * rng.standard_normal((count, self.input_dim))
        x[:, 0] += y * self.separation
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        x *= np.minimum(1.0, self.input_radius / np.maximum(norms, 1e-300))
        return x, y
