"""Feature-selection stability over a shifting window of selection masks.

For r binary masks over J features, each with M ones,

    stability = 1 - mean_j(s_j^2) / ((M/J) * (1 - M/J))

where s_j^2 = r/(r-1) * p_j * (1 - p_j) is the unbiased variance of
feature j's selection indicator and p_j its selection frequency.
"""

from __future__ import annotations

from collections import deque

import numpy as np


def stability_score(masks) -> float | None:
    """Stability of a stack of binary masks (r, J); ``None`` when undefined."""
    Z = np.asarray(masks, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[0] < 2:
        return None
    r, J = Z.shape
    M = Z[0].sum()
    if M <= 0 or M >= J:
        return None
    p = Z.mean(axis=0)
    s2 = r / (r - 1) * p * (1.0 - p)
    k = M / J
    return float(1.0 - s2.mean() / (k * (1.0 - k)))


class StabilityWindow:
    """Ring buffer of the ``capacity`` most recent selection masks."""

    def __init__(self, n_features: int, n_selected: int, capacity: int = 10):
        if capacity < 2:
            raise ValueError("capacity must be >= 2")
        self.n_features = int(n_features)
        self.n_selected = int(n_selected)
        self.capacity = int(capacity)
        self._masks = deque(maxlen=self.capacity)

    def __len__(self) -> int:
        return len(self._masks)

    def push(self, mask) -> None:
        """Append a mask: a SelectionMask, a length-J binary vector, or a set of indices."""
        if hasattr(mask, "as_binary"):
            row = mask.as_binary()
        elif isinstance(mask, (set, frozenset)):
            idx = np.asarray(sorted(int(i) for i in mask), dtype=int)
            if idx.size and (idx.min() < 0 or idx.max() >= self.n_features):
                raise ValueError("mask index out of range")
            row = np.zeros(self.n_features, dtype=np.int8)
            row[idx] = 1
        else:
            row = np.asarray(mask)
        if row.shape != (self.n_features,):
            raise ValueError(f"mask has {row.size} features, window expects {self.n_features}")
        if not np.all((row == 0) | (row == 1)):
            raise ValueError("mask must be binary")
        row = row.astype(np.int8)
        if int(row.sum()) != self.n_selected:
            raise ValueError(f"mask selects {int(row.sum())} features, window expects {self.n_selected}")
        self._masks.append(row)

    def masks(self) -> np.ndarray:
        return np.array(self._masks, dtype=np.int8).reshape(len(self._masks), self.n_features)

    def stability(self) -> float | None:
        """Stability over the masks currently held (partial window during warm-up)."""
        return stability_score(self.masks())


def push_mask(window: StabilityWindow, mask) -> StabilityWindow:
    window.push(mask)
    return window


def stability(window: StabilityWindow) -> float | None:
    return window.stability()
