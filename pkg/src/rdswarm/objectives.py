"""Benchmark objectives with shift, rotation and bias transforms.

Every problem is evaluated as ``base(R @ (x - o)) + bias``.  The base
functions are the standard textbook forms; all of them are vectorized over a
leading batch axis so a whole swarm can be scored in one call.

The named problems in :data:`PROBLEM_NAMES` are modeled on the unimodal,
multimodal and expanded functions of the CEC2005 suite.  Shift vectors and
rotations are generated locally from a fixed problem seed instead of being
read from the original data files.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .core import InputError, RandomSource

ORTHO_TOL = 1e-9


class ProblemDataError(InputError):
    """Base class for problem data-file failures."""


class ParseError(ProblemDataError):
    pass


class DimensionError(ProblemDataError):
    pass


class OrthogonalityError(ProblemDataError):
    pass


# --------------------------------------------------------------------------
# Base functions; z has shape (..., N)
# --------------------------------------------------------------------------


def sphere(z):
    return np.sum(z * z, axis=-1)


def schwefel_1_2(z):
    return np.sum(np.cumsum(z, axis=-1) ** 2, axis=-1)


def elliptic(z):
    n = z.shape[-1]
    if n == 1:
        return z[..., 0] ** 2
    w = 1e6 ** (np.arange(n) / (n - 1))
    return np.sum(w * z * z, axis=-1)


def rosenbrock(z):
    a, b = z[..., :-1], z[..., 1:]
    return np.sum(100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2, axis=-1)


def rastrigin(z):
    return np.sum(z * z - 10.0 * np.cos(2.0 * np.pi * z) + 10.0, axis=-1)


def griewank(z):
    n = z.shape[-1]
    s = np.sum(z * z, axis=-1) / 4000.0
    p = np.prod(np.cos(z / np.sqrt(np.arange(1, n + 1))), axis=-1)
    return s - p + 1.0


def ackley(z):
    n = z.shape[-1]
    r = np.sqrt(np.sum(z * z, axis=-1) / n)
    c = np.sum(np.cos(2.0 * np.pi * z), axis=-1) / n
    return -20.0 * np.exp(-0.2 * r) - np.exp(c) + 20.0 + np.e


_W_K = np.arange(21)
_W_AK = 0.5 ** _W_K
_W_BK = 3.0 ** _W_K


def weierstrass(z):
    n = z.shape[-1]
    terms = _W_AK * np.cos(2.0 * np.pi * _W_BK * (z[..., None] + 0.5))
    offset = n * np.sum(_W_AK * np.cos(np.pi * _W_BK))
    return np.sum(terms, axis=(-1, -2)) - offset


def _scaffer_f6(x, y):
    s = x * x + y * y
    return 0.5 + (np.sin(np.sqrt(s)) ** 2 - 0.5) / (1.0 + 0.001 * s) ** 2


def scaffer_f6_expanded(z):
    return np.sum(_scaffer_f6(z, np.roll(z, -1, axis=-1)), axis=-1)


def griewank_rosenbrock(z):
    """Expanded Griewank-of-Rosenbrock over cyclic coordinate pairs."""
    a, b = z, np.roll(z, -1, axis=-1)
    r = 100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2
    return np.sum(r * r / 4000.0 - np.cos(r) + 1.0, axis=-1)


BASE_FUNCTIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sphere": sphere,
    "schwefel_1_2": schwefel_1_2,
    "elliptic": elliptic,
    "rosenbrock": rosenbrock,
    "rastrigin": rastrigin,
    "griewank": griewank,
    "ackley": ackley,
    "weierstrass": weierstrass,
    "scaffer_f6_expanded": scaffer_f6_expanded,
    "griewank_rosenbrock": griewank_rosenbrock,
}

# where each base function attains its minimum value of zero
_BASE_ARGMIN = {"rosenbrock": 1.0, "griewank_rosenbrock": 1.0}


# --------------------------------------------------------------------------
# Problem
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Problem:
    name: str
    dimension: int
    search_bounds: np.ndarray
    init_bounds: np.ndarray
    base_function: str
    shift: Optional[np.ndarray] = None
    rotation: Optional[np.ndarray] = None
    bias: float = 0.0
    bounds_enforced: bool = False
    noise: float = 0.0
    _fn: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = int(self.dimension)
        if n < 1:
            raise InputError("dimension must be positive")
        if self.base_function not in BASE_FUNCTIONS:
            raise InputError(f"unknown base function {self.base_function!r}")
        if self.base_function in ("rosenbrock",) and n < 2:
            raise InputError("rosenbrock needs dimension >= 2")
        object.__setattr__(self, "search_bounds", _bounds(self.search_bounds, n, "search"))
        object.__setattr__(self, "init_bounds", _bounds(self.init_bounds, n, "init"))
        if self.shift is not None:
            shift = np.asarray(self.shift, dtype=float)
            if shift.shape != (n,):
                raise DimensionError(f"shift has shape {shift.shape}, expected ({n},)")
            object.__setattr__(self, "shift", shift)
        if self.rotation is not None:
            rot = np.asarray(self.rotation, dtype=float)
            if rot.shape != (n, n):
                raise DimensionError(f"rotation has shape {rot.shape}, expected ({n}, {n})")
            check_orthogonal(rot)
            object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "_fn", BASE_FUNCTIONS[self.base_function])

    @property
    def search_lo(self):
        return self.search_bounds[:, 0]

    @property
    def search_hi(self):
        return self.search_bounds[:, 1]

    @property
    def init_lo(self):
        return self.init_bounds[:, 0]

    @property
    def init_hi(self):
        return self.init_bounds[:, 1]

    def optimum(self) -> np.ndarray:
        """Position of the global minimum in x-space."""
        z_star = np.full(self.dimension, _BASE_ARGMIN.get(self.base_function, 0.0))
        x = z_star if self.rotation is None else self.rotation.T @ z_star
        return x if self.shift is None else x + self.shift

    def __call__(self, x, rng: Optional[RandomSource] = None):
        return evaluate(self, x, rng)


def _bounds(b, n, what):
    b = np.asarray(b, dtype=float)
    if b.shape == (2,):
        b = np.tile(b, (n, 1))
    if b.shape != (n, 2):
        raise DimensionError(f"{what} bounds have shape {b.shape}, expected ({n}, 2)")
    if np.any(b[:, 0] >= b[:, 1]):
        raise InputError(f"{what} bounds need lo < hi in every dimension")
    return b


def check_orthogonal(rot: np.ndarray, tol: float = ORTHO_TOL) -> None:
    err = np.max(np.abs(rot.T @ rot - np.eye(rot.shape[0])))
    if not err <= tol:
        raise OrthogonalityError(f"matrix is not orthogonal (max |R^T R - I| = {err:.3g})")


def transform(problem: Problem, x) -> np.ndarray:
    """``rotation @ (x - shift)`` applied along the last axis."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (problem.dimension,):
        raise DimensionError(f"point has trailing size {x.shape[-1:]}, expected {problem.dimension}")
    z = x if problem.shift is None else x - problem.shift
    if problem.rotation is not None:
        z = z @ problem.rotation.T
    return z


def evaluate(problem: Problem, x, rng: Optional[RandomSource] = None):
    """Objective value(s) at `x` (a point or a batch of points).

    Noisy problems multiply the noiseless value by ``1 + noise*|N(0,1)|``
    and need `rng` to draw that factor.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        f = problem._fn(transform(problem, x))
        if problem.noise:
            if rng is None:
                raise InputError(f"problem {problem.name!r} is noisy and needs a RandomSource")
            f = f * (1.0 + problem.noise * np.abs(rng.normal(np.shape(f))))
    f = f + problem.bias
    return float(f) if np.ndim(f) == 0 else f


# --------------------------------------------------------------------------
# Data files and rotations
# --------------------------------------------------------------------------


def _read_numbers(path) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    try:
        return [np.array([float(t) for t in r]) for r in rows]
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def load_problem_data(path, n: int, rotation_path=None) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Read a shift vector (and optionally a rotation matrix) for dimension `n`.

    The shift file may hold more than `n` numbers (CEC data files are
    written for the largest dimension); the first `n` are used.  A rotation
    file must hold at least `n` rows of at least `n` numbers; the leading
    ``n x n`` block is used and must be orthogonal.
    """
    rows = _read_numbers(path)
    flat = np.concatenate(rows) if rows else np.empty(0)
    if flat.size < n:
        raise DimensionError(f"{path}: need {n} shift values, found {flat.size}")
    shift = flat[:n].copy()
    rot = None
    if rotation_path is not None:
        rows = _read_numbers(rotation_path)
        if len(rows) < n or any(len(r) < n for r in rows[:n]):
            raise DimensionError(f"{rotation_path}: need {n} rows of {n} values")
        rot = np.array([r[:n] for r in rows[:n]])
        check_orthogonal(rot)
    return shift, rot


def random_rotation(n: int, rng: RandomSource) -> np.ndarray:
    """Orthogonal matrix from the QR factorization of a Gaussian matrix."""
    if n < 1:
        raise InputError("n must be >= 1")
    a = rng.normal((n, n))
    q, r = np.linalg.qr(a)
    # sign fix makes the result Haar-distributed and deterministic per draw
    q = q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))
    return q


# --------------------------------------------------------------------------
# Named problem registry
# --------------------------------------------------------------------------

PROBLEM_SEED = 2005


@dataclass(frozen=True)
class _Spec:
    base: str
    search: Tuple[float, float]
    init: Optional[Tuple[float, float]] = None
    rotated: bool = False
    noise: float = 0.0
    on_bounds: bool = False


_REGISTRY: Dict[str, _Spec] = {
    "f1_sphere": _Spec("sphere", (-100, 100)),
    "f2_schwefel12": _Spec("schwefel_1_2", (-100, 100)),
    "f3_elliptic_rot": _Spec("elliptic", (-100, 100), rotated=True),
    "f4_schwefel12_noise": _Spec("schwefel_1_2", (-100, 100), noise=0.4),
    "f6_rosenbrock": _Spec("rosenbrock", (-100, 100)),
    "f7_griewank_rot_nobounds": _Spec("griewank", (-600, 600), init=(0, 600), rotated=True),
    "f8_ackley_rot": _Spec("ackley", (-32, 32), rotated=True, on_bounds=True),
    "f9_rastrigin": _Spec("rastrigin", (-5, 5)),
    "f10_rastrigin_rot": _Spec("rastrigin", (-5, 5), rotated=True),
    "f11_weierstrass_rot": _Spec("weierstrass", (-0.5, 0.5), rotated=True),
    "f13_griewank_rosenbrock": _Spec("griewank_rosenbrock", (-5, 5)),
    "f14_scaffer_rot": _Spec("scaffer_f6_expanded", (-100, 100), rotated=True),
}

PROBLEM_NAMES = tuple(_REGISTRY)

# short aliases: "f9" -> "f9_rastrigin"
_ALIASES = {k.split("_", 1)[0]: k for k in _REGISTRY}


def resolve_problem_name(name: str) -> str:
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    if key not in _REGISTRY:
        raise InputError(f"unknown problem {name!r}; valid names: {', '.join(PROBLEM_NAMES)}")
    return key


def make_problem(name: str, dimension: int = 30, *, seed: int = PROBLEM_SEED,
                 bias: float = 0.0, bounds_enforced: bool = False,
                 shift: Optional[np.ndarray] = None,
                 rotation: Optional[np.ndarray] = None) -> Problem:
    """Build a named benchmark problem.

    The optimum location is drawn uniformly from the inner 80% of the search
    box using a generator keyed on (`seed`, problem name, dimension), so the
    same name and dimension always give the same instance.
    """
    key = resolve_problem_name(name)
    spec = _REGISTRY[key]
    n = int(dimension)
    lo, hi = spec.search
    tag = int.from_bytes(key.encode(), "little") % (2 ** 31)
    rng = RandomSource(np.random.SeedSequence([seed, tag, n]).generate_state(1)[0])
    o = rng.uniform_between(0.8 * lo, 0.8 * hi, n)
    if spec.on_bounds:
        o[0::2] = lo
    if rotation is None and spec.rotated:
        rotation = random_rotation(n, rng)
    if shift is None:
        shift = o
        if spec.base in _BASE_ARGMIN:
            # base minimum sits at z = 1; move it onto o
            shift = o - (_BASE_ARGMIN[spec.base] if rotation is None
                         else rotation.T @ np.full(n, _BASE_ARGMIN[spec.base]))
    return Problem(
        name=key, dimension=n,
        search_bounds=(lo, hi), init_bounds=spec.init or (lo, hi),
        base_function=spec.base, shift=shift, rotation=rotation,
        bias=bias, bounds_enforced=bounds_enforced, noise=spec.noise,
    )
