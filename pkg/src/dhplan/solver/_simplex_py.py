"""Pure numpy simplex iteration kernel.

Mirror of ``_simplex.pyx``; both must make identical pivot choices so the
two backends produce the same iterates on the same input.
"""
import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
ITER_LIMIT = 2

BASIC, AT_LOWER, AT_UPPER, FREE, FIXED = 0, 1, 2, 3, 4

BACKEND = "python"


def iterate(T, d, x, lo, hi, basis, state, max_iter, opt_tol, piv_tol, feas_tol, bland_after):
    """Run primal bounded-variable simplex pivots in place.

    Returns ``(code, iterations)``. ``T`` is the dense tableau ``B^-1 M``,
    ``d`` the reduced-cost row, ``x`` the full primal vector.
    """
    m = T.shape[0]
    it = 0
    degen = 0
    bland = False
    rows = np.arange(m)
    while it < max_iter:
        elig = (((state == AT_LOWER) & (d < -opt_tol))
                | ((state == AT_UPPER) & (d > opt_tol))
                | ((state == FREE) & (np.abs(d) > opt_tol)))
        cand = np.flatnonzero(elig)
        if cand.size == 0:
            return OPTIMAL, it
        if bland:
            j = int(cand[0])
        else:
            j = int(cand[np.argmax(np.abs(d[cand]))])
        direction = 1.0 if d[j] < 0 else -1.0
        rate = -direction * T[:, j]

        flip = hi[j] - lo[j] if np.isfinite(lo[j]) and np.isfinite(hi[j]) else np.inf

        xb = x[basis]
        lob = lo[basis]
        hib = hi[basis]
        dec = (rate < -piv_tol) & np.isfinite(lob)
        inc = (rate > piv_tol) & np.isfinite(hib)
        room = np.full(m, np.inf)
        relaxed = np.full(m, np.inf)
        room[dec] = (xb[dec] - lob[dec]) / -rate[dec]
        relaxed[dec] = (xb[dec] - lob[dec] + feas_tol) / -rate[dec]
        room[inc] = (hib[inc] - xb[inc]) / rate[inc]
        relaxed[inc] = (hib[inc] - xb[inc] + feas_tol) / rate[inc]
        np.maximum(room, 0.0, out=room)

        r = -1
        theta = np.inf
        blocking = dec | inc
        if blocking.any():
            if bland:
                tmin = room[blocking].min()
                ties = rows[blocking & (room <= tmin + 1e-12)]
                r = int(ties[np.argmin(basis[ties])])
            else:
                cap = relaxed[blocking].min()
                ok = rows[blocking & (room <= cap)]
                r = int(ok[np.argmax(np.abs(rate[ok]))])
            theta = room[r]

        if flip <= theta:
            if not np.isfinite(flip):
                return UNBOUNDED, it
            theta = flip
            r = -1
        if r < 0 and not np.isfinite(theta):
            return UNBOUNDED, it

        x[basis] += rate * theta
        x[j] += direction * theta
        if r < 0:
            if direction > 0:
                x[j] = hi[j]
                state[j] = AT_UPPER
            else:
                x[j] = lo[j]
                state[j] = AT_LOWER
        else:
            leave = basis[r]
            if lo[leave] == hi[leave]:
                x[leave] = lo[leave]
                state[leave] = FIXED
            elif rate[r] < 0:
                x[leave] = lo[leave]
                state[leave] = AT_LOWER
            else:
                x[leave] = hi[leave]
                state[leave] = AT_UPPER
            piv = T[r, j]
            T[r, :] /= piv
            col = T[:, j].copy()
            col[r] = 0.0
            T -= np.outer(col, T[r, :])
            d -= d[j] * T[r, :]
            T[:, j] = 0.0
            T[r, j] = 1.0
            d[j] = 0.0
            basis[r] = j
            state[j] = BASIC
        it += 1
        if theta <= 1e-12:
            degen += 1
            if degen > bland_after:
                bland = True
        else:
            degen = 0
            bland = False
    return ITER_LIMIT, it
