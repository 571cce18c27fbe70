"""Brute-force reference inference over the unrolled network.

Enumerates every latent trajectory explicitly and never touches the
package's recursion code, so it serves as an independent oracle.
"""
import itertools

import numpy as np

from taxiassure.dbn import DbnModel, EvidenceFrame
from taxiassure.statespace import IntervalPartition
from taxiassure.transition import ParentModel, TransitionCPT


class TableEmission:
    def __init__(self, likelihoods):
        self.likelihoods = np.asarray(likelihoods, dtype=float)
        self.n_states = self.likelihoods.shape[1]
        self.n_features = 1

    def predict(self, x):
        return self.likelihoods[int(x[0])]


class FlagTable:
    n_features = 1

    def __init__(self, flags):
        self.flags = list(flags)

    def detect(self, x):
        return bool(self.flags[int(x[0])])


def random_case(seed, max_states=5, max_steps=6, flag_rate=0.2):
    rng = np.random.default_rng(seed)
    ka = int(rng.integers(2, max_states + 1))
    ke, kh = int(rng.integers(2, 4)), int(rng.integers(2, 4))
    steps = int(rng.integers(1, max_steps + 1))
    part = lambda k: IntervalPartition(tuple(float(i) for i in range(k + 1)))
    table = rng.dirichlet(np.ones(ka), size=(ka, ke, kh))
    lik = rng.random((steps, ka)) + 1e-3
    flags = rng.random(steps) < flag_rate
    parents = ParentModel(rng.dirichlet(np.ones(ke), size=ka), rng.dirichlet(np.ones(kh), size=kh))
    model = DbnModel(part(ka), part(ke), part(kh), TransitionCPT(table), TableEmission(lik), FlagTable(flags),
                     parents=parents)
    e = rng.integers(ke, size=steps)
    h = rng.integers(kh, size=steps)
    frames = [EvidenceFrame(np.array([float(t)]), e[t] + 0.5, h[t] + 0.5, t) for t in range(steps)]
    b0 = rng.dirichlet(np.ones(ka))
    return model, frames, b0, dict(table=table, lik=lik, flags=flags, e=e, h=h)


def enumerate_filter(b0, table, lik, flags, e, h):
    """Filtered marginals for every prefix, by summing the joint over all paths."""
    ka = len(b0)
    out = []
    for T in range(1, len(lik) + 1):
        post = np.zeros(ka)
        for path in itertools.product(range(ka), repeat=T):
            w = b0[path[0]]
            for t in range(1, T):
                w *= table[path[t - 1], e[t - 1], h[t - 1], path[t]]
            for t in range(T):
                if not flags[t]:
                    w *= lik[t, path[t]]
            post[path[-1]] += w
        out.append(post / post.sum())
    return out


def enumerate_forecast(b, table, sensor, heading, e0, h0, steps, hold=False):
    """Lookahead marginals by summing over latent and future-parent paths."""
    ka, ke = sensor.shape
    kh = heading.shape[0]
    out = []
    for k in range(1, steps + 1):
        p = np.zeros(ka)
        if hold:
            for path in itertools.product(range(ka), repeat=k + 1):
                w = b[path[0]]
                for j in range(k):
                    w *= table[path[j], e0, h0, path[j + 1]]
                p[path[-1]] += w
            out.append(p / p.sum())
            continue
        # a_0..a_k, e_1..e_{k-1}, h_1..h_{k-1}
        for path in itertools.product(range(ka), repeat=k + 1):
            for es in itertools.product(range(ke), repeat=k - 1):
                for hs in itertools.product(range(kh), repeat=k - 1):
                    ev, hv = (e0, *es), (h0, *hs)
                    w = b[path[0]]
                    for j in range(k):
                        w *= table[path[j], ev[j], hv[j], path[j + 1]]
                    for j in range(1, k):
                        w *= sensor[path[j], ev[j]] * heading[hv[j - 1], hv[j]]
                    p[path[-1]] += w
        out.append(p / p.sum())
    return out
