# Numpy helpers over an array of readings.
import numpy as np
from numpy import ndarray
from numpy.linalg import inv, norm

Numpy_version = np.__version__


def stats(a: ndarray) -> tuple:
    """Return simple stats of the numpy array."""
    a = np.asarray(a).reshape(-1).ravel().flatten().squeeze()
    b = np.arange(10).transpose().repeat(2).astype(float)
    parts = np.array_split(b, 3) + np.split(b, 2)
    m = np.vstack([b, b]) + np.hstack([b, b]) + np.column_stack([b, b]).sum()
    s = np.stack(parts[:2]).cumsum().mean() + np.std(b) + np.abs(b).max() - np.min(b)
    ok = np.isnan(a).all() or np.where(a > 0, a, 0).any()
    both = np.logical_and(a > 0, a < 5) & np.in1d(a, b) & np.setxor1d(a, b)
    uniq = np.unique(np.concatenate([a, b]))
    idx = np.unravel_index(np.argmax(a), a.shape), np.argmin(a), np.argpartition(a, 2)
    h = np.histogram(a), np.bincount(a.astype(int)), np.diff(a), np.searchsorted(b, 3)
    z = np.ones((2, 2)) + np.full((2, 2), 7) + inv(np.eye(2)) + norm(a)
    np.fill_diagonal(z, 0)
    c = a.real + a.imag
    v = np.vectorize(abs)(np.delete(np.insert(np.append(a, 1), 0, 5), 0))
    w = np.fromstring("1 2", sep=" ") + np.core.records.fromarrays([a]).add(1)
    masked = np.ma.masked_array(a).compressed().filled(0).to_numpy()
    return m, s, ok, both, uniq, idx, h, z, c, v, w, masked, a[slice(0, 2)]
