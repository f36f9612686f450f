"""Independent closed-form oracles used by the tests.

These deliberately avoid the library's generic divergence path: each
loss gets its textbook closed form, and decomposition sides are
recomputed by direct substitution, so the tests cross two independent
routes to the same numbers.
"""

import numpy as np


def squared_div(p, q):
    return (p - q) ** 2


def itakura_saito_div(p, q):
    return p / q - np.log(p / q) - 1.0


def poisson_div(p, q):
    return p * np.log(p / q) - (p - q)


def extend(v):
    v = np.asarray(v, dtype=float)
    return np.concatenate([v, [1.0 - v.sum()]])


def kl_div_minimal(p, q):
    """k-term KL of the extended distributions of two minimal vectors."""
    pf, qf = extend(p), extend(q)
    return float(np.sum(pf * np.log(pf / qf)))


CLOSED_FORMS = {
    "squared": squared_div,
    "itakura_saito": itakura_saito_div,
    "poisson": poisson_div,
}


def scalar_div(name, p, q):
    return float(CLOSED_FORMS[name](float(p), float(q)))


def closed_div(gen_name, p, q):
    """Closed-form divergence for any loss; p, q are component vectors."""
    if gen_name in CLOSED_FORMS:
        return scalar_div(gen_name, np.asarray(p).item(), np.asarray(q).item())
    return kl_div_minimal(p, q)


def normalised_geometric_mean(rows):
    """Componentwise geometric mean of extended rows, renormalised."""
    full = np.stack([extend(r) for r in rows])
    geo = np.exp(np.mean(np.log(full), axis=0))
    return geo / geo.sum()
