"""Scattering and resolvents of the limit point interactions (V = 0)."""

from __future__ import annotations

import cmath
import math

import numpy as np

from .cell_solver import ScatteringData, TransferMatrix, Trajectory, _check_resolvent_args
from .classifier import BoundaryCondition, LimitInteraction
from .errors import SeparatedHasNoTransfer
from .lines import solve_line
from .profiles import Profile


def _robin_reflection_left(bc: BoundaryCondition, k: float) -> complex:
    if bc.is_dirichlet:
        return -1.0 + 0j
    return (1j * k - bc.theta) / (1j * k + bc.theta)


def _robin_reflection_right(bc: BoundaryCondition, k: float) -> complex:
    if bc.is_dirichlet:
        return -1.0 + 0j
    return (1j * k + bc.theta) / (1j * k - bc.theta)


def scattering_limit(interaction: LimitInteraction, k: float) -> ScatteringData:
    """Closed-form t, r for plane waves meeting the interaction at the origin."""
    if not k > 0:
        raise ValueError("k must be positive")
    if not interaction.connected:
        return ScatteringData(
            k=k,
            t=0j,
            r_left=_robin_reflection_left(interaction.left, k),
            r_right=_robin_reflection_right(interaction.right, k),
            t_right=0j,
        )
    (c11, c12), (c21, c22) = interaction.matrix
    ik = 1j * k
    D = ik * (c11 + c22) + k * k * c12 - c21
    e = cmath.exp(1j * interaction.phase)
    return ScatteringData(
        k=k,
        t=2 * ik * e / D,
        r_left=(k * k * c12 + ik * (c22 - c11) + c21) / D,
        r_right=(k * k * c12 + ik * (c11 - c22) + c21) / D,
        t_right=2 * ik / (e * D),
    )


def matching_system(interaction: LimitInteraction, k: float):
    """Brute-force left-incidence system in the unknowns (r, t).

    ``e^{i phase} C (1 + r, ik (1 - r)) = (t, ik t)``.
    """
    M = cmath.exp(1j * interaction.phase) * np.asarray(interaction.matrix, dtype=complex)
    ik = 1j * k
    S = np.column_stack([M @ np.array([1.0, -ik]), -np.array([1.0, ik])])
    rhs = -(M @ np.array([1.0, ik]))
    return S, rhs


def transfer_matrix_limit(interaction: LimitInteraction, k: float | None = None) -> TransferMatrix:
    if not interaction.connected:
        raise SeparatedHasNoTransfer("separated interactions decouple the half-lines")
    m = cmath.exp(1j * interaction.phase) * np.asarray(interaction.matrix, dtype=complex)
    return TransferMatrix(m=m, ref_left=0.0, ref_right=0.0, k_or_E=k)


def interface_equations(interaction: LimitInteraction):
    """Rows acting on (y(0-), y'(0-), y(0+), y'(0+))."""
    if interaction.connected:
        m = transfer_matrix_limit(interaction).m
        return np.hstack([-m, np.eye(2)])
    rows = np.zeros((2, 4), dtype=complex)
    for i, (bc, j) in enumerate(((interaction.left, 0), (interaction.right, 2))):
        if bc.is_dirichlet:
            rows[i, j] = 1.0
        else:
            rows[i, j] = -bc.theta
            rows[i, j + 1] = 1.0
    return rows


def resolvent_apply_limit(interaction: LimitInteraction, zeta: complex, h: Profile | None,
                          L: float | None = None) -> Trajectory:
    """``(H - zeta)^{-1} h`` on [-L, L] for the limit operator H."""
    zeta, L = _check_resolvent_args(zeta, h, L)
    rows = interface_equations(interaction)
    line = solve_line(zeta, h, 0.0, 0.0, lambda mu: (rows, np.zeros(2)))
    return Trajectory(line, L)


def resolvent_residual_limit(traj: Trajectory, interaction: LimitInteraction, zeta, h) -> float:
    """Interface-condition defect plus the equation residual of the closed form."""
    line = traj.line
    yl, dyl = line.at_left_end()
    yr, dyr = line.at_right_end()
    defect = np.linalg.norm(interface_equations(interaction) @ np.array([yl, dyl, yr, dyr]))
    outer = line.equation_residual(complex(zeta), h, traj.L, traj.max_piece())
    return float(math.sqrt(defect**2 + outer**2 + line.jump_defect() ** 2))


__all__ = [
    "scattering_limit",
    "matching_system",
    "transfer_matrix_limit",
    "interface_equations",
    "resolvent_apply_limit",
    "resolvent_residual_limit",
]
