"""Independent high-precision re-evaluations used by the verifier battery.

Deliberately a separate code path from the float pipeline: every formula is
retyped against arbitrary-precision arithmetic with its own quadrature, so
agreement with the fast implementations is evidence, not tautology. Nothing
here imports from the float modules.
"""

import mpmath as mp

__all__ = [
    "high_precision_entropy_integral",
    "high_precision_derand_cost",
    "high_precision_reference_deviation",
]


def high_precision_entropy_integral(a, dps=40):
    """Arbitrary-precision value of the noise-entropy integral
    int_0^a sqrt(ln(1 + 1/s^2)) ds via tanh-sinh quadrature, which absorbs
    the integrable endpoint singularity."""
    if a == 0:
        return mp.mpf(0)
    with mp.workdps(dps):
        val = mp.quad(lambda s: mp.sqrt(mp.log(1 + 1 / (s * s))), [0, mp.mpf(a)])
        return +val


def high_precision_derand_cost(
    width,
    layer_spectral_norms,
    layer_frobenius_norms,
    lipschitz_loss,
    input_radius,
    rho,
    n,
    delta,
    mode="standard",
    dps=40,
):
    """Retyped de-randomization cost at dps decimal digits.

    Takes per-layer spectral and Frobenius norms directly so the caller can
    source them from an independent decomposition. Returns an mpf; float()
    it for comparisons.
    """
    if mode not in ("standard", "tight"):
        raise ValueError(f"unknown mode {mode!r}")
    with mp.workdps(dps):
        m = mp.mpf(width)
        depth = len(layer_spectral_norms)
        K = mp.mpf(depth)
        d = m * m * K
        lams = [mp.mpf(x) for x in layer_spectral_norms]
        phis = [mp.mpf(x) for x in layer_frobenius_norms]
        rho = mp.mpf(rho)
        delta = mp.mpf(delta)
        gamma = mp.sqrt(2 * mp.log(2 * mp.e * m))
        lbar = mp.exp(mp.fsum(mp.log(x) for x in lams) / K)
        radius = mp.mpf(lipschitz_loss) * mp.mpf(input_radius) * lbar**K
        weight = mp.sqrt(mp.fsum(x * x for x in phis))
        rho0 = mp.sqrt(K / m) * gamma / lbar
        u = rho / rho0
        c1 = mp.log(mp.e + mp.log(2 * mp.mpf(n) ** 2) ** 2) + mp.log(
            mp.sqrt(d) / delta
        )
        c2 = c1 + 1 + mp.log(u + 1 / u)
        scale = 4 * mp.exp(rho) * radius * mp.sqrt(m * K * K / mp.mpf(n))
        if mode == "standard":
            arg = mp.sqrt(m) * rho / (K * gamma)
            ent_weight = weight / lbar
        else:
            arg = rho / (rho0 * weight)
            ent_weight = (weight / lbar) * mp.sqrt((1 + 1 / d) / 2)
        entropy = scale * ent_weight * high_precision_entropy_integral(arg, dps=dps)
        residual = scale * rho / (K * gamma) * (1 + mp.sqrt(c2 / m))
        return +(entropy + residual)


def high_precision_reference_deviation(
    width,
    layer_spectral_norms,
    layer_frobenius_norms,
    n,
    delta,
    dps=40,
):
    """Retyped reference-deviation term of the risk certificate: the
    quadratic divergence bound of the unit-scale Gaussian predictor against
    the heavy-tailed prior, pushed through the subgaussian deviation bound
    with sigma = 1/2 at confidence delta (callers pass the already-halved
    budget)."""
    with mp.workdps(dps):
        m = mp.mpf(width)
        depth = len(layer_spectral_norms)
        K = mp.mpf(depth)
        d = m * m * K
        lams = [mp.mpf(x) for x in layer_spectral_norms]
        phis = [mp.mpf(x) for x in layer_frobenius_norms]
        delta = mp.mpf(delta)
        gamma = mp.sqrt(2 * mp.log(2 * mp.e * m))
        lbar = mp.exp(mp.fsum(mp.log(x) for x in lams) / K)
        weight = mp.sqrt(mp.fsum(x * x for x in phis))
        stddev = lbar / (mp.sqrt(m) * K * gamma)
        kl = weight**2 / (2 * stddev**2) + mp.log(
            (1 + 2 * d * stddev**2) / stddev
        )
        h = kl + mp.log(1 / delta)
        inner = h + mp.log(2 * mp.sqrt(mp.e * mp.mpf(n)))
        return +(mp.mpf("0.5") * mp.sqrt(2 * inner / (mp.mpf(n) - 2)))
