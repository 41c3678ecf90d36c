import numpy as np

from ..errors import NumericError


class IndefiniteSystem(Exception):
    """Raised when a search direction has non-positive curvature."""


def conjugate_gradient(apply_a, b, x0, max_iter=25, rel_tol=1e-4):
    """Solve ``A x = b`` for symmetric positive (semi-)definite ``A``.

    ``apply_a`` acts on flat vectors.  Stops after ``max_iter`` iterations or
    when ``|r| <= rel_tol * |b|``.  Returns ``(x, iterations)``.
    """
    x = np.array(x0, dtype=np.float64, copy=True)
    r = b - apply_a(x)
    p = r.copy()
    rs = float(r @ r)
    target = rel_tol * float(np.linalg.norm(b))
    it = 0
    for it in range(1, max_iter + 1):
        if not np.isfinite(rs):
            raise NumericError("non-finite residual in conjugate gradient")
        if np.sqrt(rs) <= target or rs == 0.0:
            return x, it - 1
        ap = apply_a(p)
        pap = float(p @ ap)
        if not np.isfinite(pap):
            raise NumericError("non-finite curvature in conjugate gradient")
        if pap <= 0.0:
            if pap < -1e-12 * rs:
                raise IndefiniteSystem(f"curvature {pap:.3e} along search direction")
            return x, it - 1
        step = rs / pap
        x += step * p
        r -= step * ap
        rs_new = float(r @ r)
        p = r + (rs_new / rs) * p
        rs = rs_new
    if not np.isfinite(rs):
        raise NumericError("non-finite residual in conjugate gradient")
    return x, it
