import itertools

import numpy as np
import pytest

from curvestab.jordan import JordanBlock, JordanSpec

# eigenvalues 0, -5, -10, -15: stable, not asymptotically
MARGINAL = np.array([
    [10, -20, 20, -15],
    [-35, 20, -45, 15],
    [-23, 26, -33, 21],
    [36, -32, 46, -27],
], dtype=float)

# eigenvalues -2, -2 +- 4i (double pair), det -800
DAMPED = np.array([
    [0, 4, 5, 4, 1],
    [-2, -2, 1, -2, -1],
    [-2, -4, -3, 4, 3],
    [2, 4, 1, -2, 1],
    [-2, -4, -5, -4, -3],
], dtype=float)

MARGINAL_R0 = np.array([1.0, 1.0, 1.0, 2.0])
# sqrt(59) |v30| / (20 v20^2) with v20 = 8, v30 = 11
MARGINAL_LIMIT = 11 * np.sqrt(59) / 1280

# 60-digit mpmath values: exp(tA) r0 followed by the 2x2 Gram determinant.
# For MARGINAL they also match the closed-form kappa^2 expression to all digits.
MARGINAL_KAPPA = {
    0.0: 0.98973308868897532,
    0.5: 0.043997679665167789,
    1.0: 0.063527818381768566,
    2.0: 0.065992594603637196,
    5.0: 0.066009846265467404,
    10.0: 0.066009846270745851,
}
DAMPED_LOG_KAPPA = {
    0.0: -2.632853588038228,
    1.0: 0.28403005034954923,
    5.0: 7.5772178568327556,
    10.0: 14.936744309064775,
    20.0: 35.726946997994202,
    30.0: 55.001815358456313,
}


def minor_sum(V: np.ndarray) -> float:
    """Sum of squared k x k minors of the k x n array V."""
    k, n = V.shape
    return float(sum(np.linalg.det(V[:, cols]) ** 2
                     for cols in itertools.combinations(range(n), k)))


def grid_value(rng, lo=-5.0, hi=5.0, step=0.25):
    return step * int(rng.integers(round(lo / step), round(hi / step) + 1))


def random_spec(rng, n_max=8, p_axis=0.2, step=0.25):
    """Random block spec; each block sits on the imaginary axis with
    probability ``p_axis`` and otherwise draws its real part from a grid."""
    target = int(rng.integers(1, n_max + 1))
    blocks, n = [], 0
    while n < target:
        room = target - n
        kinds = ["R1"]
        if room >= 2:
            kinds += ["RH", "C2"]
        if room >= 4:
            kinds.append("CH")
        kind = kinds[int(rng.integers(len(kinds)))]
        re = 0.0 if rng.random() < p_axis else grid_value(rng, step=step)
        if kind == "R1":
            blk = JordanBlock.r1(re)
        elif kind == "RH":
            blk = JordanBlock.rh(re, int(rng.integers(2, min(room, 4) + 1)))
        elif kind == "C2":
            blk = JordanBlock.c2(re, 0.5 * int(rng.integers(1, 9)))
        else:
            blk = JordanBlock.ch(re, 0.5 * int(rng.integers(1, 9)),
                                 int(rng.integers(2, min(room // 2, 3) + 1)))
        blocks.append(blk)
        n += blk.dim
    return JordanSpec(tuple(blocks))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
