"""Discrete-time state-space models, lifting and feedback interconnection.

All stacked vectors use the time-ascending convention
``V_T = [v(0); v(1); ...; v(T)]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, ValidationError

__all__ = [
    "StateSpaceModel",
    "LiftedOperator",
    "Trajectory",
    "ClosedLoopModel",
    "GainPoint",
    "lift",
    "simulate",
    "close_loop",
    "bode_gain",
    "model_from_dict",
    "model_to_dict",
    "load_model",
]


def _as_matrix(name, value):
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got ndim={arr.ndim}", matrix=name)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateSpaceModel:
    """Discrete-time LTI system ``x+ = A x + B u``, ``y = C x + D u``.

    Attributes
    ----------
    A, B, C, D : ndarray
        System matrices of shapes (n, n), (n, m), (q, n) and (q, m).
        A zero-state model (n = 0) is allowed and represents a static gain.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = _as_matrix("A", self.A)
        D = _as_matrix("D", self.D)
        q, m = D.shape
        # Empty state blocks arrive as 1-D/0-size arrays; give them shape.
        B = np.array(self.B, dtype=float)
        C = np.array(self.C, dtype=float)
        if A.size == 0:
            A = np.zeros((0, 0))
            B = B.reshape(0, m) if B.size == 0 else B
            C = C.reshape(q, 0) if C.size == 0 else C
        B = _as_matrix("B", B)
        C = _as_matrix("C", C)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}", matrix="A")
        if B.shape != (n, m):
            raise DimensionError(f"B must be {(n, m)}, got {B.shape}", matrix="B")
        if C.shape != (q, n):
            raise DimensionError(f"C must be {(q, n)}, got {C.shape}", matrix="C")
        for name, arr in zip("ABCD", (A, B, C, D)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.D.shape[1]

    @property
    def q(self) -> int:
        return self.D.shape[0]

    def markov_parameters(self, T: int) -> list[np.ndarray]:
        """Return ``[D, CB, CAB, ..., CA^{T-1}B]`` (T + 1 blocks)."""
        blocks = [np.array(self.D)]
        AkB = np.array(self.B)
        for _ in range(T):
            blocks.append(self.C @ AkB)
            AkB = self.A @ AkB
        return blocks

    def spectral_radius(self) -> float:
        if self.n == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvals(self.A))))


@dataclass(frozen=True)
class LiftedOperator:
    """Block lower-triangular Toeplitz map from stacked inputs to stacked outputs."""

    matrix: np.ndarray
    horizon: int
    q: int
    m: int

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        expected = ((self.horizon + 1) * self.q, (self.horizon + 1) * self.m)
        if mat.shape != expected:
            raise DimensionError(
                f"lifted matrix must be {expected}, got {mat.shape}", matrix="N")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def block(self, i: int, j: int) -> np.ndarray:
        q, m = self.q, self.m
        return self.matrix[i * q:(i + 1) * q, j * m:(j + 1) * m]

    def apply(self, U) -> np.ndarray:
        U = _stacked(U, self.horizon, self.m, "U")
        return self.matrix @ U

    def is_zero(self) -> bool:
        return not np.any(self.matrix)


@dataclass(frozen=True)
class Trajectory:
    """Per-step vectors ``v(0), ..., v(T)`` stored as an array of shape (T + 1, dim)."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals.reshape(-1, 1)
        if vals.ndim != 2 or vals.shape[0] == 0:
            raise DimensionError(
                f"trajectory must have shape (T+1, dim), got {vals.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_stacked(cls, stacked, dim: int) -> "Trajectory":
        stacked = np.asarray(stacked, dtype=float).ravel()
        if dim < 1 or stacked.size % dim:
            raise DimensionError(
                f"stacked length {stacked.size} is not a multiple of dim={dim}")
        return cls(stacked.reshape(-1, dim))

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def stacked(self) -> np.ndarray:
        return self.values.reshape(-1)


def _stacked(U, T, dim, name):
    if isinstance(U, Trajectory):
        U = U.stacked
    U = np.asarray(U, dtype=float).ravel()
    if U.size != (T + 1) * dim:
        raise DimensionError(
            f"{name} has length {U.size}, expected {(T + 1) * dim}", matrix=name)
    return U


def lift(model: StateSpaceModel, T: int) -> LiftedOperator:
    """Build ``N_T`` with block (i, j) equal to D for i == j and C A^{i-j-1} B for i > j."""
    if int(T) != T or T < 0:
        raise ValidationError(f"horizon must be a nonnegative integer, got {T!r}")
    T = int(T)
    q, m = model.q, model.m
    blocks = model.markov_parameters(T)
    N = np.zeros(((T + 1) * q, (T + 1) * m))
    for k, blk in enumerate(blocks):
        for j in range(T + 1 - k):
            i = j + k
            N[i * q:(i + 1) * q, j * m:(j + 1) * m] = blk
    return LiftedOperator(N, T, q, m)


def simulate(model: StateSpaceModel, inputs, x0=None) -> Trajectory:
    """Run the state recursion over the input trajectory and return the outputs.

    ``inputs`` may be a :class:`Trajectory` or an array of shape (T + 1, m).
    The initial state defaults to zero.
    """
    if not isinstance(inputs, Trajectory):
        inputs = Trajectory(inputs)
    if inputs.dim != model.m:
        raise DimensionError(
            f"input dimension {inputs.dim} does not match model m={model.m}", matrix="U")
    x = np.zeros(model.n) if x0 is None else np.asarray(x0, dtype=float).ravel()
    if x.size != model.n:
        raise DimensionError(f"x0 has length {x.size}, expected {model.n}", matrix="x0")
    out = np.empty((inputs.horizon + 1, model.q))
    for t, u in enumerate(inputs.values):
        out[t] = model.C @ x + model.D @ u
        x = model.A @ x + model.B @ u
    return Trajectory(out)


@dataclass(frozen=True)
class ClosedLoopModel:
    """Plant/controller loop driven by ``r + v`` with state ``[x_p; x_c]``.

    The controller sees ``(r + v) - y_p``; the reported tracking error is the
    noise-free ``e = r - y_p``.
    """

    plant: StateSpaceModel
    controller: StateSpaceModel
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def output_model(self) -> StateSpaceModel:
        """Model from ``r + v`` to the released plant output ``y_p``."""
        r = self.B.shape[1]
        return StateSpaceModel(self.A, self.B, self.C, np.zeros((self.C.shape[0], r)))

    @property
    def error_model(self) -> StateSpaceModel:
        """Model from ``r`` to the tracking error ``e`` (feedthrough I)."""
        return StateSpaceModel(self.A, self.B, -self.C, np.eye(self.C.shape[0]))

    @property
    def noise_to_error_model(self) -> StateSpaceModel:
        """Model from the injected noise ``v`` to ``e``; its lifting is Theta_T."""
        r = self.B.shape[1]
        return StateSpaceModel(self.A, self.B, -self.C, np.zeros((self.C.shape[0], r)))

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.A))))

    def simulate(self, r, v=None, x0=None) -> tuple[Trajectory, Trajectory]:
        """Return ``(y_p, e)`` for reference ``r`` and optional input noise ``v``."""
        if not isinstance(r, Trajectory):
            r = Trajectory(r)
        drive = r.values if v is None else r.values + Trajectory(v).values
        y = simulate(self.output_model, drive, x0)
        return y, Trajectory(r.values - y.values)


def close_loop(plant: StateSpaceModel, controller: StateSpaceModel) -> ClosedLoopModel:
    """Interconnect a strictly proper plant with a strictly proper controller."""
    if np.any(plant.D):
        raise ValidationError("plant feedthrough D must be zero")
    if np.any(controller.D):
        raise ValidationError("controller feedthrough D must be zero (u_p = C_c x_c)")
    if plant.q != controller.m:
        raise DimensionError(
            f"plant output dim {plant.q} != controller input dim {controller.m}",
            matrix="B_c")
    if controller.q != plant.m:
        raise DimensionError(
            f"controller output dim {controller.q} != plant input dim {plant.m}",
            matrix="C_c")
    np_, nc = plant.n, controller.n
    A = np.block([
        [plant.A, plant.B @ controller.C],
        [-controller.B @ plant.C, controller.A],
    ])
    B = np.vstack([np.zeros((np_, controller.m)), controller.B])
    C = np.hstack([plant.C, np.zeros((plant.q, nc))])
    for arr in (A, B, C):
        arr.setflags(write=False)
    return ClosedLoopModel(plant, controller, A, B, C)


@dataclass(frozen=True)
class GainPoint:
    frequency: float
    gain: float
    error: str | None = None


# Resolvent treated as singular beyond this condition number.
_RESOLVENT_COND_LIMIT = 1e14


def bode_gain(model: StateSpaceModel, frequencies) -> list[GainPoint]:
    """Largest singular value of ``C (e^{j w} I - A)^{-1} B + D`` per frequency.

    Frequencies where ``e^{j w}`` is (numerically) an eigenvalue of A yield a
    point with ``gain = nan`` and an error message; the sweep continues.
    """
    n = model.n
    points = []
    for lam in np.asarray(frequencies, dtype=float).ravel():
        z = np.exp(1j * lam)
        G = model.D.astype(complex)
        if n:
            M = z * np.eye(n) - model.A
            if np.linalg.cond(M) > _RESOLVENT_COND_LIMIT:
                points.append(GainPoint(float(lam), float("nan"),
                                        "singular resolvent: e^{j lambda} is an eigenvalue of A"))
                continue
            G = G + model.C @ np.linalg.solve(M, model.B)
        gain = np.linalg.svd(G, compute_uv=False)[0] if G.size else 0.0
        points.append(GainPoint(float(lam), float(gain)))
    return points


def _parse_matrix(name, rows):
    if isinstance(rows, (int, float)):
        return np.array([[float(rows)]])
    if not isinstance(rows, list):
        raise ValidationError(f"{name} must be a list of rows")
    if not rows:
        return np.zeros((0, 0))
    if not all(isinstance(r, list) for r in rows):
        raise ValidationError(f"{name} must be a list of rows (row-major)")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValidationError(f"{name} has ragged rows (lengths {sorted(widths)})")
    try:
        return np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} has non-numeric entries: {exc}") from None


def model_from_dict(data: dict) -> StateSpaceModel:
    """Build a model from ``{"A": [[...]], "B": ..., "C": ..., "D": ...}``."""
    if not isinstance(data, dict):
        raise ValidationError("model must be a JSON object")
    missing = [k for k in "ABCD" if k not in data]
    if missing:
        raise ValidationError(f"model is missing matrices: {', '.join(missing)}")
    mats = {k: _parse_matrix(k, data[k]) for k in "ABCD"}
    n = mats["A"].shape[0]
    q, m = mats["D"].shape
    if n == 0:
        mats["B"] = mats["B"].reshape(0, m)
        mats["C"] = mats["C"].reshape(q, 0)
    return StateSpaceModel(**mats)


def model_to_dict(model: StateSpaceModel) -> dict:
    return {k: getattr(model, k).tolist() for k in "ABCD"}


def load_model(path) -> StateSpaceModel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from None
    return model_from_dict(data)

