"""Compiled integrator kernel for the built-in quadruple-well family.

The kernel consumes pre-drawn standard-normal increments so that the
random stream is owned entirely by numpy generators; it only performs the
deterministic arithmetic of the Euler-Maruyama recursion.
"""

import numpy as np
from numba import njit

TILT_LINEAR = 0
TILT_WELL_BUMP = 1


@njit(cache=True)
def advance_quadwell(x, t0, h, sigma, c, tilt_kind, tilt_max, tilt_horizon,
                     bump_width, noise, stride, out):
    """Advance a batch of quadruple-well states through pre-drawn noise.

    x          : (B, 2) start states, overwritten with the final states.
    noise      : (B, S, 2) standard-normal increments.
    out        : (B, S // stride + 1, 2); out[:, 0] is the start state and
                 out[:, r] the state after r * stride steps.
    """
    B = x.shape[0]
    S = noise.shape[1]
    sqh = np.sqrt(h)
    inv_w2 = 0.0
    if tilt_kind == TILT_WELL_BUMP:
        inv_w2 = 1.0 / (bump_width * bump_width)
    for b in range(B):
        x1 = x[b, 0]
        x2 = x[b, 1]
        out[b, 0, 0] = x1
        out[b, 0, 1] = x2
        r = 1
        for s in range(S):
            t = t0 + s * h
            g = 0.0
            if tilt_max != 0.0:
                tt = t if t < tilt_horizon else tilt_horizon
                g = tilt_max * tt / tilt_horizon
            d1 = (x1 * x1 - 1.0) * (4.0 * x1 - 0.1875)
            d2 = (x2 * x2 - 1.0) * (4.0 * x2 - 0.375)
            if g != 0.0:
                if tilt_kind == TILT_LINEAR:
                    d1 += g
                    d2 += g
                else:
                    u1 = x1 - 1.0
                    u2 = x2 - 1.0
                    e = np.exp(-0.5 * (u1 * u1 + u2 * u2) * inv_w2)
                    d1 += -g * e * u1 * inv_w2
                    d2 += -g * e * u2 * inv_w2
            b1 = -d1 + c * d2
            b2 = -d2 - c * d1
            x1 = x1 + b1 * h + sigma * sqh * noise[b, s, 0]
            x2 = x2 + b2 * h + sigma * sqh * noise[b, s, 1]
            if (s + 1) % stride == 0:
                out[b, r, 0] = x1
                out[b, r, 1] = x2
                r += 1
        x[b, 0] = x1
        x[b, 1] = x2
