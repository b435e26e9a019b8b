"""Imperfection processes.

Three kinds of noise live here:

* idle rotations: every live qubit is kicked by an independent small random
  rotation each time step;
* gate jitter: every applied gate is the ideal unitary multiplied by
  ``exp(-i dH)`` for a fresh random Hermitian ``dH``;
* the discrete Pauli failure model, kept only as a comparison baseline.

Rotations use ``R(a, n) = cos(a/2) I - i sin(a/2) n.sigma``. A z-rotation by
``a`` therefore shifts the relative phase of |1> by ``a``.
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .statevec import StateVector, apply_unitary, is_unitary

AXIS_MODES = ("xy_plane", "z_only", "x_only", "isotropic")

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS_1Q = (I2, X, Y, Z)


@dataclass(frozen=True)
class NoiseModel:
    """Every imperfection scale in one place. Defaults are noiseless."""

    eps_step: float = 0.0
    axis_mode: str = "xy_plane"
    sigma_gate: float = 0.0
    c_rms: float = 0.0
    d_gate: int = 1
    d_meas: int = 10
    gamma2: float = 0.0
    gamma1: float = 0.0

    def __post_init__(self):
        if self.axis_mode not in AXIS_MODES:
            raise ValueError(f"axis_mode must be one of {AXIS_MODES}, got {self.axis_mode!r}")
        for name in ("eps_step", "sigma_gate", "c_rms"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("d_gate", "d_meas"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer")
        for name in ("gamma1", "gamma2"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RotationEvent:
    qubit: int
    axis: np.ndarray
    angle: float

    def matrix(self) -> np.ndarray:
        return rotation_matrix(self.axis, self.angle)


def rotation_matrix(axis: Sequence[float], angle: float) -> np.ndarray:
    nx, ny, nz = axis
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c - 1j * s * nz, -1j * s * nx - s * ny],
                     [-1j * s * nx + s * ny, c + 1j * s * nz]], dtype=complex)


def _rotation_matrices(axes: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Vectorized ``rotation_matrix`` over leading dimensions."""
    c = np.cos(angles / 2)
    s = np.sin(angles / 2)
    nx, ny, nz = axes[..., 0], axes[..., 1], axes[..., 2]
    out = np.empty(angles.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c - 1j * s * nz
    out[..., 0, 1] = -1j * s * nx - s * ny
    out[..., 1, 0] = -1j * s * nx + s * ny
    out[..., 1, 1] = c + 1j * s * nz
    return out


def sample_axes(axis_mode: str, shape: tuple, rng: np.random.Generator) -> np.ndarray:
    if axis_mode == "z_only":
        axes = np.zeros(shape + (3,))
        axes[..., 2] = 1.0
    elif axis_mode == "x_only":
        axes = np.zeros(shape + (3,))
        axes[..., 0] = 1.0
    elif axis_mode == "xy_plane":
        phi = rng.uniform(0.0, 2 * np.pi, size=shape)
        axes = np.stack([np.cos(phi), np.sin(phi), np.zeros(shape)], axis=-1)
    elif axis_mode == "isotropic":
        v = rng.normal(size=shape + (3,))
        axes = v / np.linalg.norm(v, axis=-1, keepdims=True)
    else:
        raise ValueError(f"unknown axis_mode {axis_mode!r}")
    return axes


def sample_rotation(model: NoiseModel, rng: np.random.Generator, qubit: int = 0) -> RotationEvent:
    axis = sample_axes(model.axis_mode, (), rng)
    angle = float(rng.normal(0.0, model.eps_step)) if model.eps_step > 0 else 0.0
    return RotationEvent(qubit, axis, angle)


def idle_unitaries(model: NoiseModel, shape: tuple, steps: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Net 2x2 unitary of ``steps`` independent kicks, one per element of ``shape``.

    For a fixed axis the kicks commute and the net rotation angle is the sum
    of the per-step Gaussians, which is sampled directly. Otherwise the
    per-step rotations are multiplied in time order (later on the left).
    """
    shape = tuple(shape)
    if steps <= 0 or model.eps_step == 0:
        return np.broadcast_to(I2, shape + (2, 2)).copy()
    if model.axis_mode in ("z_only", "x_only"):
        angles = rng.normal(0.0, model.eps_step * np.sqrt(steps), size=shape)
        return _rotation_matrices(sample_axes(model.axis_mode, shape, rng), angles)
    axes = sample_axes(model.axis_mode, shape + (steps,), rng)
    angles = rng.normal(0.0, model.eps_step, size=shape + (steps,))
    mats = _rotation_matrices(axes, angles)
    while mats.shape[-3] > 1:
        if mats.shape[-3] % 2:
            pad = np.broadcast_to(I2, mats.shape[:-3] + (1, 2, 2))
            mats = np.concatenate([mats, pad], axis=-3)
        mats = mats[..., 1::2, :, :] @ mats[..., 0::2, :, :]
    return mats[..., 0, :, :]


def apply_idle_noise(state: StateVector, qubits: Sequence[int], steps: int,
                     model: NoiseModel, rng: np.random.Generator) -> StateVector:
    """Random rotations on ``qubits`` for ``steps`` time steps."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if steps == 0 or model.eps_step == 0 or not qubits:
        return state
    mats = idle_unitaries(model, (len(qubits),), steps, rng)
    for q, U in zip(qubits, mats):
        apply_unitary(state, (q,), U, check=False)
    return state


@lru_cache(maxsize=None)
def pauli_basis(k: int) -> np.ndarray:
    """The ``4**k - 1`` non-identity k-qubit Paulis, shape ``(4**k-1, 2**k, 2**k)``.

    Label tuples index qubits little-endian like ``apply_unitary`` matrices.
    """
    mats = []
    for labels in itertools.product(range(4), repeat=k):
        if not any(labels):
            continue
        m = np.ones((1, 1), dtype=complex)
        for lab in labels:  # labels[0] is qubit 0, the least-significant factor
            m = np.kron(PAULIS_1Q[lab], m)
        mats.append(m)
    out = np.array(mats)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def pauli_labels(k: int) -> tuple:
    return tuple(lab for lab in itertools.product("IXYZ", repeat=k) if set(lab) != {"I"})


def random_hermitian(k: int, sigma: float, rng: np.random.Generator) -> np.ndarray:
    basis = pauli_basis(k)
    g = rng.normal(0.0, sigma / np.sqrt(len(basis)), size=len(basis))
    return np.tensordot(g, basis, axes=1)


def expm_hermitian(H: np.ndarray) -> np.ndarray:
    """``exp(-iH)`` through the eigendecomposition; exactly unitary to rounding."""
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * w)) @ V.conj().T


def jitter_gate(U_ideal: np.ndarray, model: NoiseModel, rng: np.random.Generator,
                check: bool = True) -> np.ndarray:
    U_ideal = np.asarray(U_ideal, dtype=complex)
    if check and not is_unitary(U_ideal):
        raise ValueError("ideal gate is not unitary")
    if model.sigma_gate == 0:
        return U_ideal
    k = U_ideal.shape[0].bit_length() - 1
    if k > 3:
        raise ValueError("gates act on at most 3 qubits")
    return expm_hermitian(random_hermitian(k, model.sigma_gate, rng)) @ U_ideal


def sample_discrete_failure(k: int, gamma: float, rng: np.random.Generator) -> int | None:
    """Index into ``pauli_basis(k)`` of the failure that fires, or None."""
    if gamma == 0 or rng.random() >= gamma:
        return None
    return int(rng.integers(4 ** k - 1))


def apply_discrete_gate_failure(state: StateVector, targets: Sequence[int], model: NoiseModel,
                                rng: np.random.Generator) -> int | None:
    """Baseline model: a uniformly chosen Pauli fault ahead of an ideal gate.

    Two targets use ``gamma2`` and 15 Paulis, one target uses ``gamma1`` and 3.
    Returns the index of the applied Pauli (see ``pauli_labels``), or None.
    """
    k = len(targets)
    if k not in (1, 2):
        raise ValueError("discrete failures are defined for one- and two-qubit gates")
    gamma = model.gamma2 if k == 2 else model.gamma1
    idx = sample_discrete_failure(k, gamma, rng)
    if idx is not None:
        apply_unitary(state, targets, pauli_basis(k)[idx], check=False)
    return idx
