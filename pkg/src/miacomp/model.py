"""Network parameters, scenarios and sampled CCDF curves."""

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError
from .specfun import check_delta


@dataclass(frozen=True)
class NetworkParams:
    """Physical constants of the downlink model.

    ``lam`` is the BS density per unit area, ``alpha`` the path-loss exponent
    and ``kbits`` the packet size in bits. ``delta = 2/alpha`` is derived.
    """

    lam: float = 1.0
    alpha: float = 3.0
    kbits: float = 75.0

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"lambda must be positive, got {self.lam!r}")
        if not self.alpha > 2:
            raise DomainError(f"alpha must exceed 2, got {self.alpha!r}")
        if not self.kbits > 0:
            raise DomainError(f"kbits must be positive, got {self.kbits!r}")
        check_delta(self.delta)

    @property
    def delta(self):
        return 2.0 / self.alpha

    def replace(self, **changes):
        values = {"lam": self.lam, "alpha": self.alpha, "kbits": self.kbits}
        values.update(changes)
        return NetworkParams(**values)


class UserClass(str, enum.Enum):
    GENERAL = "general"
    WORST_CASE = "worst_case"


class Cooperation(str, enum.Enum):
    NC = "nc"
    MIA = "mia"


@dataclass(frozen=True)
class Scenario:
    user_class: UserClass
    cooperation: Cooperation

    @property
    def m(self):
        """Number of serving codewords."""
        return 2 if self.cooperation is Cooperation.MIA else 1

    @property
    def name(self):
        prefix = "gu" if self.user_class is UserClass.GENERAL else "wu"
        return f"{prefix}-{self.cooperation.value}"

    @classmethod
    def from_name(cls, name):
        try:
            prefix, coop = name.lower().split("-")
            user = {"gu": UserClass.GENERAL, "wu": UserClass.WORST_CASE}[prefix]
            return cls(user, Cooperation(coop))
        except (ValueError, KeyError):
            raise ValueError(f"unknown scenario {name!r}") from None

    def __str__(self):
        return self.name


GU_NC = Scenario(UserClass.GENERAL, Cooperation.NC)
GU_MIA = Scenario(UserClass.GENERAL, Cooperation.MIA)
WU_NC = Scenario(UserClass.WORST_CASE, Cooperation.NC)
WU_MIA = Scenario(UserClass.WORST_CASE, Cooperation.MIA)
SCENARIOS = (GU_NC, GU_MIA, WU_NC, WU_MIA)

METHODS = ("exact", "lower_bound", "monte_carlo")


@dataclass
class CcdfCurve:
    """Sampled packet-time CCDF ``t -> P(T_hat > t)``."""

    t_grid: np.ndarray
    values: np.ndarray
    method: str
    stderr: Optional[np.ndarray] = None
    scenario: Optional[Scenario] = field(default=None, compare=False)

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.t_grid.shape != self.values.shape or self.t_grid.ndim != 1:
            raise ValueError("t_grid and values must be 1-D arrays of equal length")
        if np.any(self.t_grid <= 0) or np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("t_grid must be positive and strictly increasing")
        if np.any(self.values < 0) or np.any(self.values > 1):
            raise ValueError("CCDF values must lie in [0, 1]")
        steps = np.diff(self.values)
        if self.method == "monte_carlo":
            if self.stderr is None:
                raise ValueError("monte_carlo curves need stderr")
            self.stderr = np.asarray(self.stderr, dtype=np.float64)
            slack = 3 * (self.stderr[1:] + self.stderr[:-1])
            if np.any(steps > slack):
                raise ValueError("Monte Carlo CCDF increases by more than 3 standard errors")
        else:
            if self.stderr is not None:
                raise ValueError("analytic curves carry no stderr")
            if np.any(steps > 1e-9):
                raise ValueError("analytic CCDF must be non-increasing")

    def success(self):
        """Success probability 1 - A(t) at each grid point."""
        return 1.0 - self.values
