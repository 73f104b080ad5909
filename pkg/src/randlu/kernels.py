"""Hot numerical loops, each with a numba and a pure-numpy implementation.

The public names at the bottom dispatch on :data:`randlu._accel.USE_NUMBA`.
Both variants are importable directly (``*_jit`` / ``*_np``) so tests and the
benchmark can compare them.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

CHSH = 0
FMAX = 1

_CHUNK = 1 << 14


# --- Tr[U rho U^dagger M] for a stack of unitaries ---------------------------

@njit
def conjugated_expectations_jit(U, rho, M):
    n_samples, d, _ = U.shape
    out = np.empty(n_samples)
    tmp = np.empty((d, d), dtype=np.complex128)
    for s in range(n_samples):
        # tmp = U rho
        for i in range(d):
            for j in range(d):
                acc = 0j
                for k in range(d):
                    acc += U[s, i, k] * rho[k, j]
                tmp[i, j] = acc
        # Tr[(U rho) U^dagger M] = sum_{i,l} (U rho U^dagger)_{il} M_{li}
        total = 0.0
        for i in range(d):
            for l in range(d):
                acc = 0j
                for j in range(d):
                    acc += tmp[i, j] * np.conj(U[s, l, j])
                total += (acc * M[l, i]).real
        out[s] = total
    return out


def conjugated_expectations_np(U, rho, M):
    out = np.empty(U.shape[0])
    for start in range(0, U.shape[0], _CHUNK):
        u = U[start:start + _CHUNK]
        rotated = u @ rho @ np.conj(np.swapaxes(u, 1, 2))
        out[start:start + _CHUNK] = np.einsum("sij,ji->s", rotated, M).real
    return out


# --- frame potentials of many sets at once ------------------------------------

@njit
def frame_potentials_jit(vecs, t):
    n_sets, n, dim = vecs.shape
    out = np.empty(n_sets)
    for b in range(n_sets):
        total = 0.0
        for i in range(n):
            for j in range(i, n):
                acc = 0j
                for k in range(dim):
                    acc += vecs[b, i, k] * np.conj(vecs[b, j, k])
                val = (acc.real * acc.real + acc.imag * acc.imag) ** t
                total += val if i == j else 2.0 * val
        out[b] = total / (n * n)
    return out


def frame_potentials_np(vecs, t):
    n = vecs.shape[1]
    out = np.empty(vecs.shape[0])
    step = max(1, _CHUNK // max(1, n * n // 64))
    for start in range(0, vecs.shape[0], step):
        v = vecs[start:start + step]
        gram = v @ np.conj(np.swapaxes(v, 1, 2))
        out[start:start + step] = (np.abs(gram) ** (2 * t)).sum(axis=(1, 2)) / (n * n)
    return out


# --- singular-value lattice scan ----------------------------------------------

@njit
def _quantity(code, a, b, c, sign):
    if code == CHSH:
        return 2.0 * np.sqrt(a + b) - 2.0
    if sign < 0:
        return 0.25 * (1.0 + np.sqrt(a) + np.sqrt(b) + np.sqrt(c))
    return 0.25 * (1.0 + np.sqrt(a) + np.sqrt(b) - np.sqrt(c))


@njit
def lattice_min_jit(n, box, code, tol):
    """Minimum of a quantity over squared singular values a >= b >= c on a lattice.

    ``box`` holds (I1_lo, I1_hi, I2_lo, I2_hi, I3_lo, I3_hi).  Returns
    (value, a, b, c, sign, n_feasible); value is +inf when nothing is feasible.
    """
    step = 1.0 / (n - 1)
    best = np.inf
    arg = np.zeros(4)
    count = 0
    for ia in range(n):
        a = ia * step
        for ib in range(ia + 1):
            b = ib * step
            s2ab = a + b
            if s2ab > box[3] + tol:
                break
            s3ab = a * a + b * b
            for ic in range(ib + 1):
                c = ic * step
                i2 = s2ab + c
                if i2 > box[3] + tol:
                    break
                if i2 < box[2] - tol:
                    continue
                i3 = s3ab + c * c
                if i3 < box[4] - tol or i3 > box[5] + tol:
                    continue
                p = np.sqrt(a * b * c)
                for sign in (-1.0, 1.0):
                    i1 = sign * p
                    if i1 < box[0] - tol or i1 > box[1] + tol:
                        continue
                    count += 1
                    q = _quantity(code, a, b, c, sign)
                    if q < best:
                        best = q
                        arg[0] = a
                        arg[1] = b
                        arg[2] = c
                        arg[3] = sign
    return best, arg[0], arg[1], arg[2], arg[3], count


def lattice_min_np(n, box, code, tol):
    grid = np.linspace(0.0, 1.0, n)
    best = np.inf
    arg = (0.0, 0.0, 0.0, 0.0)
    count = 0
    bb, cc = np.meshgrid(grid, grid, indexing="ij")
    lower = cc <= bb
    for ia in range(n):
        a = grid[ia]
        mask = lower[: ia + 1, : ia + 1]
        b = bb[: ia + 1, : ia + 1][mask]
        c = cc[: ia + 1, : ia + 1][mask]
        i2 = a + b + c
        i3 = a * a + b * b + c * c
        ok = (i2 >= box[2] - tol) & (i2 <= box[3] + tol) & (i3 >= box[4] - tol) & (i3 <= box[5] + tol)
        if not ok.any():
            continue
        b, c = b[ok], c[ok]
        p = np.sqrt(a * b * c)
        for sign in (-1.0, 1.0):
            i1 = sign * p
            sel = (i1 >= box[0] - tol) & (i1 <= box[1] + tol)
            if not sel.any():
                continue
            count += int(sel.sum())
            bs, cs = b[sel], c[sel]
            if code == CHSH:
                q = 2.0 * np.sqrt(a + bs) - 2.0
            else:
                q = 0.25 * (1.0 + np.sqrt(a) + np.sqrt(bs) - sign * np.sqrt(cs))
            k = int(np.argmin(q))
            if q[k] < best:
                best = float(q[k])
                arg = (a, float(bs[k]), float(cs[k]), sign)
    return (best, *arg, count)


if USE_NUMBA:
    conjugated_expectations = conjugated_expectations_jit
    frame_potentials = frame_potentials_jit
    lattice_min = lattice_min_jit
else:
    conjugated_expectations = conjugated_expectations_np
    frame_potentials = frame_potentials_np
    lattice_min = lattice_min_np
