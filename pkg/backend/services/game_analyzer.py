#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""One-step merge game: pure Nash and Stackelberg analysis of a bimatrix"""

import itertools
import logging
from typing import List, Tuple

import numpy as np

from models.tactical import CostMatrix, EquilibriumReport

logger = logging.getLogger(__name__)


def _deviation_gaps(game: CostMatrix, row: int, col: int) -> Tuple[float, float]:
    """Best unilateral deviation payoff minus current payoff, per player"""
    p1, p2 = game.player1, game.player2
    others_rows = [r for r in range(p1.shape[0]) if r != row]
    others_cols = [c for c in range(p2.shape[1]) if c != col]
    gap1 = max((p1[r, col] for r in others_rows), default=-np.inf) - p1[row, col]
    gap2 = max((p2[row, c] for c in others_cols), default=-np.inf) - p2[row, col]
    return gap1, gap2


def pure_nash(game: CostMatrix, strict: bool = True) -> List[Tuple[int, int]]:
    """
    Pure-strategy Nash profiles by exhaustive deviation check

    Args:
        game: bimatrix (payoffs, higher is better)
        strict: every deviation must lose strictly (otherwise: no deviation gains)

    Returns:
        (row, col) index pairs in row-major order
    """
    found = []
    rows, cols = game.player1.shape
    for row, col in itertools.product(range(rows), range(cols)):
        gap1, gap2 = _deviation_gaps(game, row, col)
        stable = (gap1 < 0 and gap2 < 0) if strict else (gap1 <= 0 and gap2 <= 0)
        if stable:
            found.append((row, col))
    return found


def stackelberg(game: CostMatrix) -> Tuple[Tuple[int, int], float]:
    """
    Leader (player 1) commits first; the follower best-responds

    Follower ties are broken against the leader. Leader ties keep the first row.

    Returns:
        ((row, col), leader payoff)
    """
    p1, p2 = game.player1, game.player2
    best_profile, best_value = None, -np.inf
    for row in range(p1.shape[0]):
        response_value = p2[row].max()
        responses = [c for c in range(p2.shape[1]) if p2[row, c] == response_value]
        col = min(responses, key=lambda c: (p1[row, c], c))
        value = float(p1[row, col])
        if value > best_value:
            best_profile, best_value = (row, col), value
    return best_profile, best_value


def enumerate_equilibria(game: CostMatrix) -> EquilibriumReport:
    """
    Strict and weak pure Nash equilibria plus the Stackelberg outcome with aircraft 1 leading

    Args:
        game: 3x3 payoff bimatrix

    Returns:
        EquilibriumReport with action-name pairs
    """
    if not (np.all(np.isfinite(game.player1)) and np.all(np.isfinite(game.player2))):
        raise ValueError("payoff matrix entries must be finite")
    names = game.actions
    strict = [(names[r], names[c]) for r, c in pure_nash(game, strict=True)]
    weak = [(names[r], names[c]) for r, c in pure_nash(game, strict=False)]
    (row, col), value = stackelberg(game)
    logger.debug(f"✅ equilibria: {len(strict)} strict, {len(weak)} weak, leader outcome {names[row]}/{names[col]}")
    return EquilibriumReport(
        strict_nash=strict,
        weak_nash=weak,
        stackelberg=(names[row], names[col]),
        leader_value=value,
    )
