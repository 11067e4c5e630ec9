"""Small-signal line sensitivity, the SCM equivalent resistance and the buffer pole.

Conductances are user inputs (typically extracted from simulation); only
``gm_weak_inversion`` estimates one from the bias current.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class SmallSignalSet:
    gm6: float
    gm6c: float
    gd5: float
    gd6: float
    gm8: float
    gd8: float
    j_ratio: float
    c_f: float = 1e-12
    av_ota: float = 1.0

    def __post_init__(self):
        for name in ("gm6", "gm6c", "gd5", "gm8", "gd8"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be > 0, got {v}")
        # gd6 = 0 is allowed: it models an ideal (infinitely cascoded) M6
        if not (math.isfinite(self.gd6) and self.gd6 >= 0):
            raise DomainError(f"gd6 must be >= 0, got {self.gd6}")
        if not self.j_ratio > 0:
            raise DomainError("j_ratio must be > 0")
        if not self.c_f > 0:
            raise DomainError("c_f must be > 0")
        if not self.av_ota >= 1:
            raise DomainError("av_ota must be >= 1")

    @classmethod
    def from_mapping(cls, data):
        try:
            return cls(**{k: float(v) for k, v in data.items()})
        except TypeError as exc:
            raise DomainError(f"bad small-signal set: {exc}") from exc


def r_scm(i_ref, s_iref):
    """1/(I_REF*S_IREF) in ohms; ``s_iref`` in 1/V."""
    if not (i_ref > 0 and s_iref > 0):
        raise DomainError("i_ref and s_iref must be > 0")
    return 1.0 / (i_ref * s_iref)


def ls_vx_basic(ss: SmallSignalSet):
    """dV_X/dV_DD without the cascode: (gd5/J + gd6)/gm6."""
    return (ss.gd5 / ss.j_ratio + ss.gd6) / ss.gm6


def ls_vx_cascoded(ss: SmallSignalSet, r_scm_ohm=None, exact=False):
    """dV_X/dV_DD with M6 cascoded: (gd5/J)/gm6 by default.

    With ``exact=True`` the residual cascode term gd6/(gm6c*r_SCM) is kept in
    the denominator, which needs ``r_scm_ohm``.
    """
    num = ss.gd5 / ss.j_ratio
    if not exact:
        return num / ss.gm6
    if r_scm_ohm is None or not r_scm_ohm > 0:
        raise DomainError("exact form needs r_scm_ohm > 0")
    return num / (ss.gm6 + ss.gd6 / (ss.gm6c * r_scm_ohm))


def ls_iref(ls_vx, s_iref):
    """Relative line sensitivity of I_REF in %/V (``s_iref`` in 1/V)."""
    if ls_vx < 0 or s_iref < 0:
        raise DomainError("ls_vx and s_iref must be >= 0")
    return s_iref * ls_vx * 100.0


def dominant_pole(ss: SmallSignalSet):
    """(gm8 + gd8) / (2*pi*C_F*A_v,OTA) in hertz."""
    return (ss.gm8 + ss.gd8) / (2.0 * math.pi * ss.c_f * ss.av_ota)


def gm_weak_inversion(i_d, n, u_t):
    """Approximate weak-inversion transconductance I_D/(n*U_T)."""
    if not (i_d > 0 and n > 0 and u_t > 0):
        raise DomainError("i_d, n and u_t must be > 0")
    return i_d / (n * u_t)


# Worked examples with the published extracted numbers (kept as data, not asserted physics)
WORKED_EXAMPLES = {
    "22nm": {"ls_vx": 0.35e-3, "s_iref_per_v": 58.5, "reference_pct_per_v": 1.96},
    "65nm": {"ls_vx": 7.81e-3, "s_iref_per_v": 27.3, "reference_ls_vx": 8.25e-3},
}
