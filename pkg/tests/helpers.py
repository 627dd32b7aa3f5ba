import numpy as np
from scipy.stats import unitary_group


def random_unitaries(k, seed=0):
    return unitary_group.rvs(2, size=k, random_state=seed)


def random_bloch(rng, k, pure=False):
    v = rng.standard_normal((k, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    if pure:
        return v
    return v * rng.uniform(0, 1, size=(k, 1)) ** (1 / 3)
