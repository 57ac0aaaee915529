"""Centrality functions and the two PAC-Bayesian bounds built on them.

A centrality function eta for a process X is anything satisfying
E[exp(X - eta)] <= 1; it is the exponential-moment budget a PAC-Bayes bound
spends. Three standard constructions are provided, plus the abstract bound
(empirical deviation <= centrality budget + complexity / n) and the
subgaussian risk bound used as the reference deviation in certificates.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "CentralitySpec",
    "FiniteProcessWorld",
    "centrality_hoeffding",
    "centrality_bennett",
    "centrality_rademacher",
    "abstract_pac_rhs",
    "subgaussian_pac_bound",
]


def centrality_hoeffding(a, b):
    """Constant centrality (b - a)^2 / 8 for a centered process bounded in [a, b]."""
    if not (math.isfinite(a) and math.isfinite(b)):
        raise InvalidInputError("bounds must be finite")
    if a > b:
        raise InvalidInputError(f"need a <= b, got a={a}, b={b}")
    return (b - a) ** 2 / 8.0


def centrality_bennett(b, second_moment):
    """Constant centrality ((e^b - b - 1) / b^2) * second_moment for a centered
    process upper-bounded by b > 0.

    The b -> 0 limit of the factor is 1/2 but b <= 0 is rejected rather than
    extended.
    """
    if not (math.isfinite(b) and b > 0):
        raise InvalidInputError("b must be positive and finite")
    if not (math.isfinite(second_moment) and second_moment >= 0):
        raise InvalidInputError("second_moment must be >= 0")
    return (math.expm1(b) - b) / (b * b) * second_moment


def centrality_rademacher(x_value, second_moment):
    """Pointwise centrality (x^2 + second_moment) / 2 for a centered process;
    valid whenever the caller guarantees E X = 0."""
    if not (math.isfinite(second_moment) and second_moment >= 0):
        raise InvalidInputError("second_moment must be >= 0")
    x = np.asarray(x_value, dtype=float)
    out = (x * x + second_moment) / 2.0
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CentralitySpec:
    """Declarative description of a centrality function.

    kind "hoeffding" takes params {"a", "b"}; "bennett" takes
    {"b", "second_moment"}; "rademacher" takes {"second_moment"} and is the
    only pointwise (x-dependent) kind. The caller is responsible for the
    centering contract E X = 0.
    """

    kind: str
    params: dict

    def __post_init__(self):
        if self.kind == "hoeffding":
            centrality_hoeffding(self.params["a"], self.params["b"])
        elif self.kind == "bennett":
            centrality_bennett(self.params["b"], self.params["second_moment"])
        elif self.kind == "rademacher":
            if self.params["second_moment"] < 0:
                raise InvalidInputError("second_moment must be >= 0")
        else:
            raise InvalidInputError(f"unknown centrality kind {self.kind!r}")

    def evaluate(self, x_value=0.0):
        """Centrality value; ``x_value`` only matters for the pointwise kind."""
        if self.kind == "hoeffding":
            return centrality_hoeffding(self.params["a"], self.params["b"])
        if self.kind == "bennett":
            return centrality_bennett(self.params["b"], self.params["second_moment"])
        return centrality_rademacher(x_value, self.params["second_moment"])


def abstract_pac_rhs(eta_expectation, h_delta, n):
    """Right-hand side of the abstract PAC-Bayesian bound: the posterior
    average of the empirical process is at most
    ``eta_expectation + h_delta / n`` with probability 1 - delta.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidInputError("n must be an integer >= 1")
    if not math.isfinite(eta_expectation):
        raise InvalidInputError("eta_expectation must be finite")
    if math.isnan(h_delta):
        raise InvalidInputError("h_delta must not be NaN")
    return eta_expectation + h_delta / n


def subgaussian_pac_bound(sigma, h_delta, n):
    """Deviation bound sigma * sqrt(2 (h_delta + ln(2 sqrt(e n))) / (n - 2))
    for a sigma-subgaussian deviation process; requires n >= 3."""
    if not (math.isfinite(sigma) and sigma > 0):
        raise InvalidInputError("sigma must be positive and finite")
    if not isinstance(n, (int, np.integer)) or n < 3:
        raise InvalidInputError("n must be an integer >= 3 (denominator n - 2)")
    if math.isnan(h_delta) or h_delta < 0:
        raise InvalidInputError("h_delta must be >= 0")
    log_term = math.log(2.0) + 0.5 * (1.0 + math.log(float(n)))
    return sigma * math.sqrt(2.0 * (h_delta + log_term) / (n - 2))


class FiniteProcessWorld:
    """Finite predictor set over a finite outcome distribution with a loss
    table; every risk is exact, which makes coverage experiments honest.

    Parameters
    ----------
    outcome_probs : array_like
        Probability of each outcome; must sum to 1.
    loss_table : array_like
        loss_table[f, z] = loss of predictor f on outcome z; finite.
    """

    def __init__(self, outcome_probs, loss_table):
        probs = np.asarray(outcome_probs, dtype=float)
        table = np.asarray(loss_table, dtype=float)
        if probs.ndim != 1 or np.any(probs < 0):
            raise InvalidInputError("outcome_probs must be a nonnegative vector")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise InvalidInputError("outcome_probs must sum to 1")
        if table.ndim != 2 or table.shape[1] != probs.shape[0]:
            raise InvalidInputError("loss_table must be (num_predictors, num_outcomes)")
        if not np.all(np.isfinite(table)):
            raise InvalidInputError("loss_table has non-finite entries")
        self.outcome_probs = probs
        self.loss_table = table

    @property
    def num_predictors(self):
        return self.loss_table.shape[0]

    @property
    def num_outcomes(self):
        return self.loss_table.shape[1]

    def risks(self):
        """Exact risk of every predictor."""
        return self.loss_table @ self.outcome_probs

    def sample_outcomes(self, n, rng):
        return rng.choice(self.num_outcomes, size=n, p=self.outcome_probs)

    def empirical_risks(self, outcomes):
        """Empirical risk of every predictor on the given outcome indices."""
        return self.loss_table[:, outcomes].mean(axis=1)
