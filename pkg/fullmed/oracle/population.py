"""
Small discrete structural models and their observational joint tables.

A ``DiscretePopulation`` stores the structural kernels of a world with
covariates X, a latent U, treatment D, mediator M and outcome Y:

    p_x[x]                 P(X = x)
    p_u[u]                 P(U = u)
    p_d[x, u, d]           P(D = d | X = x, U = u)
    p_m[d, x, u, m]        P(M = m | D = d, X = x, U = u)
    p_y[d, m, x, u, y]     P(Y = y_values[y] | D = d, M = m, X = x, U = u)

Pairwise latent confounders are encoded by factorizing U.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from fullmed.data import Dataset
from fullmed.errors import PopulationError

logger = logging.getLogger(__name__)

MAX_OBSERVED_SUPPORT = 4
MAX_LATENT_SUPPORT = 16
ROW_SUM_TOL = 1e-12

KERNELS = ("p_x", "p_u", "p_d", "p_m", "p_y")


def _kernel(values, name: str) -> np.ndarray:
    array = np.array(values, dtype=float)
    if not np.all(np.isfinite(array)) or np.any(array < 0):
        raise PopulationError(f"{name} must contain finite non-negative probabilities")
    deviation = np.max(np.abs(array.sum(axis=-1) - 1.0))
    if deviation > ROW_SUM_TOL:
        raise PopulationError(f"rows of {name} must sum to 1 (max deviation {deviation:.2e})")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class DiscretePopulation:
    """Structural kernels of a small discrete world (see module docstring)."""
    y_values: np.ndarray
    p_x: np.ndarray
    p_u: np.ndarray
    p_d: np.ndarray
    p_m: np.ndarray
    p_y: np.ndarray

    def __post_init__(self):
        y_values = np.array(self.y_values, dtype=float)
        if y_values.ndim != 1 or y_values.size == 0 or not np.all(np.isfinite(y_values)):
            raise PopulationError("y_values must be a non-empty finite vector")
        y_values.setflags(write=False)
        object.__setattr__(self, "y_values", y_values)
        for name in KERNELS:
            object.__setattr__(self, name, _kernel(getattr(self, name), name))

        n_x, n_u = self.p_x.shape[0], self.p_u.shape[0]
        if self.p_x.ndim != 1 or self.p_u.ndim != 1 or self.p_d.ndim != 3:
            raise PopulationError("p_x and p_u must be vectors and p_d an x-u-d array")
        n_d = self.p_d.shape[2]
        if self.p_d.shape != (n_x, n_u, n_d):
            raise PopulationError(f"p_d must have shape {(n_x, n_u, n_d)}")
        if self.p_m.ndim != 4 or self.p_m.shape[:3] != (n_d, n_x, n_u):
            raise PopulationError(f"p_m must have shape {(n_d, n_x, n_u)} + (n_m,)")
        n_m = self.p_m.shape[3]
        if self.p_y.shape != (n_d, n_m, n_x, n_u, y_values.size):
            raise PopulationError(f"p_y must have shape {(n_d, n_m, n_x, n_u, y_values.size)}")

        for label, size in (("X", n_x), ("D", n_d), ("M", n_m), ("Y", y_values.size)):
            if size > MAX_OBSERVED_SUPPORT:
                raise PopulationError(f"support of {label} exceeds {MAX_OBSERVED_SUPPORT}")
        if n_u > MAX_LATENT_SUPPORT:
            raise PopulationError(f"latent support exceeds {MAX_LATENT_SUPPORT}")
        if n_d < 2:
            raise PopulationError("treatment needs at least two levels")

    @property
    def n_x(self) -> int:
        return int(self.p_x.shape[0])

    @property
    def n_u(self) -> int:
        return int(self.p_u.shape[0])

    @property
    def n_d(self) -> int:
        return int(self.p_d.shape[2])

    @property
    def n_m(self) -> int:
        return int(self.p_m.shape[3])

    @property
    def n_y(self) -> int:
        return int(self.y_values.shape[0])

    def to_dict(self) -> Dict[str, Any]:
        data = {"y_values": self.y_values.tolist()}
        data.update({name: getattr(self, name).tolist() for name in KERNELS})
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DiscretePopulation":
        missing = [key for key in ("y_values", *KERNELS) if key not in data]
        if missing:
            raise PopulationError(f"population definition lacks: {', '.join(missing)}")
        try:
            return cls(**{key: data[key] for key in ("y_values", *KERNELS)})
        except (TypeError, ValueError) as e:
            raise PopulationError(f"malformed population definition: {e}") from e


@dataclass(frozen=True, eq=False)
class JointTable:
    """
    Observational distribution P(X, D, M, Y) as an array indexed [x, d, m, y].

    Conditionals are NaN where the conditioning event has zero mass.
    """
    prob: np.ndarray
    y_values: np.ndarray

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return tuple(self.prob.shape)

    @property
    def p_xdm(self) -> np.ndarray:
        return self.prob.sum(axis=3)

    @property
    def p_xd(self) -> np.ndarray:
        return self.prob.sum(axis=(2, 3))

    @property
    def p_xm(self) -> np.ndarray:
        return self.prob.sum(axis=(1, 3))

    @property
    def p_x(self) -> np.ndarray:
        return self.prob.sum(axis=(1, 2, 3))

    def y_given_dmx(self) -> np.ndarray:
        """P(y | d, m, x) indexed [x, d, m, y]."""
        mass = self.p_xdm[..., None]
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(mass > 0, self.prob / np.where(mass > 0, mass, 1.0), np.nan)

    def y_given_dx(self) -> np.ndarray:
        """P(y | d, x) indexed [x, d, y]."""
        joint = self.prob.sum(axis=2)
        mass = self.p_xd[..., None]
        return np.where(mass > 0, joint / np.where(mass > 0, mass, 1.0), np.nan)

    def m_given_dx(self) -> np.ndarray:
        """P(m | d, x) indexed [x, d, m]."""
        mass = self.p_xd[..., None]
        return np.where(mass > 0, self.p_xdm / np.where(mass > 0, mass, 1.0), np.nan)

    def d_given_x(self) -> np.ndarray:
        """P(d | x) indexed [x, d]."""
        mass = self.p_x[:, None]
        return np.where(mass > 0, self.p_xd / np.where(mass > 0, mass, 1.0), np.nan)

    def outcome_mean(self) -> np.ndarray:
        """mu(m, x, d) = E[Y | D=d, M=m, X=x] indexed [x, d, m]."""
        return self.y_given_dmx() @ self.y_values


def marginalize(pop: DiscretePopulation) -> JointTable:
    """Sum the latent variable out of the structural model."""
    prob = np.einsum("x,u,xud,dxum,dmxuy->xdmy", pop.p_x, pop.p_u, pop.p_d, pop.p_m, pop.p_y)
    prob.setflags(write=False)
    return JointTable(prob=prob, y_values=pop.y_values)


def random_population(
    rng: np.random.Generator,
    sizes: Tuple[int, int, int, int] = (2, 2, 2, 1),
    n_u: int = 2,
    structure: str = "unrestricted",
    y_values: Optional[np.ndarray] = None,
) -> DiscretePopulation:
    """
    Draw a random population with Dirichlet(1) kernels.

    Args:
        rng: Random generator
        sizes: Support sizes (|Y|, |D|, |M|, |X|)
        n_u: Latent support size
        structure: "unrestricted"; "mediation" (Y depends on (M, X) only and
            U confounds D and M only, so the testable implication holds);
            or "separable" (P(y|d,m,x) = w A(y|d,x) + (1-w) B(y|m,x), U confounds D and M only)
        y_values: Outcome support; defaults to 0..|Y|-1
    """
    n_y, n_d, n_m, n_x = sizes
    y_values = np.arange(n_y, dtype=float) if y_values is None else np.asarray(y_values, dtype=float)

    p_x = rng.dirichlet(np.ones(n_x))
    p_u = rng.dirichlet(np.ones(n_u))
    p_d = rng.dirichlet(np.ones(n_d), size=(n_x, n_u))
    p_m = rng.dirichlet(np.ones(n_m), size=(n_d, n_x, n_u))

    if structure == "unrestricted":
        p_y = rng.dirichlet(np.ones(n_y), size=(n_d, n_m, n_x, n_u))
    elif structure == "mediation":
        b = rng.dirichlet(np.ones(n_y), size=(n_m, n_x))
        p_y = np.broadcast_to(b[None, :, :, None, :], (n_d, n_m, n_x, n_u, n_y)).copy()
    elif structure == "separable":
        w = rng.uniform(0.2, 0.8)
        a = rng.dirichlet(np.ones(n_y), size=(n_d, n_x))
        b = rng.dirichlet(np.ones(n_y), size=(n_m, n_x))
        mix = w * a[:, None, :, :] + (1.0 - w) * b[None, :, :, :]
        p_y = np.broadcast_to(mix[:, :, :, None, :], (n_d, n_m, n_x, n_u, n_y)).copy()
    else:
        raise PopulationError(f"unknown population structure '{structure}'")

    return DiscretePopulation(y_values=y_values, p_x=p_x, p_u=p_u, p_d=p_d, p_m=p_m, p_y=p_y)


def sample(pop: DiscretePopulation, n: int, rng: np.random.Generator) -> Dataset:
    """
    Draw n observations of (Y, D, M, X).

    M and X are returned as their integer codes (one column each).
    """
    joint = marginalize(pop)
    flat = joint.prob.reshape(-1)
    draws = rng.choice(flat.size, size=n, p=flat / flat.sum())
    x, d, m, y = np.unravel_index(draws, joint.shape)
    return Dataset(
        y=pop.y_values[y],
        d=d,
        m=m.astype(float)[:, None],
        x=x.astype(float)[:, None],
        mediator_names=("m",),
        covariate_names=("x",),
    )


def save_population(pop: DiscretePopulation, path: Union[str, Path]) -> Path:
    """Write a population definition as JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(pop.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_population(path: Union[str, Path]) -> DiscretePopulation:
    """
    Read a population definition written by ``save_population``.

    Raises:
        PopulationError: If the file is missing, not JSON, or malformed
    """
    path = Path(path)
    if not path.exists():
        raise PopulationError(f"Population file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise PopulationError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise PopulationError(f"{path} must contain a JSON object")
    return DiscretePopulation.from_dict(data)
