"""Soft-margin RBF support vector machine trained with Platt's SMO.

Binary models are combined one-vs-one for multiclass problems. Decision
values follow ``f(x) = sum_i coeff_i * K(sv_i, x) + b`` with
``coeff_i = alpha_i * y_i``.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import Dataset

log = logging.getLogger(__name__)

FULL_GRAM_LIMIT = 4096
ALPHA_KEEP = 1e-8
DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0)
DEFAULT_GAMMA_GRID = (0.01, 0.1, 1.0, 10.0)


@dataclass(frozen=True)
class SvmParams:
    C: float = 1.0
    gamma: float = 0.1
    tol: float = 1e-3
    max_passes: int = 1000

    def __post_init__(self):
        for name in ("C", "gamma", "tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.max_passes < 1:
            raise ValueError(f"max_passes must be >= 1, got {self.max_passes}")


@dataclass
class BinaryModel:
    support_vectors: np.ndarray
    coeffs: np.ndarray
    bias: float
    gamma: float

    def decision(self, X) -> np.ndarray:
        return decision_values(self, X)


@dataclass
class MulticlassModel:
    classes: list[int]
    pairs: dict[tuple[int, int], BinaryModel] = field(default_factory=dict)


def rbf_kernel(x, y, gamma: float) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"vector length mismatch: {x.shape} vs {y.shape}")
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    return math.exp(-gamma * float(np.sum((x - y) ** 2)))


def rbf_matrix(A, B, gamma: float, chunk_elems: int = 1 << 22) -> np.ndarray:
    """Kernel matrix ``K[i, j] = exp(-gamma * |A_i - B_j|^2)`` from exact differences."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"feature length mismatch: {A.shape[1]} vs {B.shape[1]}")
    out = np.empty((A.shape[0], B.shape[0]))
    step = max(1, chunk_elems // max(1, B.size))
    for start in range(0, A.shape[0], step):
        block = A[start:start + step, np.newaxis, :] - B[np.newaxis, :, :]
        out[start:start + step] = np.exp(-gamma * np.sum(block * block, axis=2))
    return out


class KernelRows:
    """Row access to the training Gram matrix.

    Rows are computed with the same arithmetic whether the full matrix is
    precomputed (n <= ``full_limit``) or rows are built on demand.
    """

    def __init__(self, X: np.ndarray, gamma: float, full_limit: int = FULL_GRAM_LIMIT, cache_rows: int = 256):
        self.X = np.asarray(X, dtype=np.float64)
        self.gamma = gamma
        self.n = len(self.X)
        self._cache = OrderedDict()
        self._cache_rows = cache_rows
        self.full = None
        if self.n <= full_limit:
            self.full = np.stack([self._compute(i) for i in range(self.n)])

    def _compute(self, i: int) -> np.ndarray:
        d = self.X - self.X[i]
        return np.exp(-self.gamma * np.sum(d * d, axis=1))

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        r = self._cache.get(i)
        if r is None:
            r = self._compute(i)
            self._cache[i] = r
            if len(self._cache) > self._cache_rows:
                self._cache.popitem(last=False)
        else:
            self._cache.move_to_end(i)
        return r


def dual_objective(alpha, y, K) -> float:
    """sum(alpha) - 1/2 (alpha*y)^T K (alpha*y)."""
    ay = np.asarray(alpha) * np.asarray(y)
    return float(np.sum(alpha) - 0.5 * ay @ np.asarray(K) @ ay)


class _Smo:
    def __init__(self, kernel: KernelRows, y: np.ndarray, C: float, tol: float):
        self.K = kernel
        self.y = y.astype(np.float64)
        self.C = C
        self.tol = tol
        self.n = len(y)
        self.alpha = np.zeros(self.n)
        self.b = 0.0
        # g_i = sum_j alpha_j y_j K_ij, so E_i = g_i + b - y_i
        self.g = np.zeros(self.n)
        self.eps = 1e-12

    def errors(self) -> np.ndarray:
        return self.g + self.b - self.y

    def error(self, i: int) -> float:
        return self.g[i] + self.b - self.y[i]

    def _clip(self, a: float) -> float:
        if a < self.eps * self.C:
            return 0.0
        if a > self.C * (1 - self.eps):
            return self.C
        return a

    def take_step(self, i1: int, i2: int) -> bool:
        if i1 == i2:
            return False
        C = self.C
        a1, a2 = self.alpha[i1], self.alpha[i2]
        y1, y2 = self.y[i1], self.y[i2]
        E1, E2 = self.error(i1), self.error(i2)
        s = y1 * y2
        if y1 != y2:
            lo, hi = max(0.0, a2 - a1), min(C, C + a2 - a1)
        else:
            lo, hi = max(0.0, a1 + a2 - C), min(C, a1 + a2)
        if hi - lo <= self.eps * C:
            return False
        r1, r2 = self.K.row(i1), self.K.row(i2)
        k11, k12, k22 = r1[i1], r1[i2], r2[i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0:
            a2_new = min(max(a2 + y2 * (E1 - E2) / eta, lo), hi)
        else:
            # objective at both ends of the segment
            f1 = y1 * (E1 - self.b) - a1 * k11 - s * a2 * k12
            f2 = y2 * (E2 - self.b) - s * a1 * k12 - a2 * k22
            L1 = a1 + s * (a2 - lo)
            H1 = a1 + s * (a2 - hi)
            obj_lo = L1 * f1 + lo * f2 + 0.5 * L1 * L1 * k11 + 0.5 * lo * lo * k22 + s * lo * L1 * k12
            obj_hi = H1 * f1 + hi * f2 + 0.5 * H1 * H1 * k11 + 0.5 * hi * hi * k22 + s * hi * H1 * k12
            if obj_lo < obj_hi - self.eps:
                a2_new = lo
            elif obj_lo > obj_hi + self.eps:
                a2_new = hi
            else:
                a2_new = a2
        a2_new = self._clip(a2_new)
        if abs(a2_new - a2) < self.eps * (a2_new + a2 + self.eps):
            return False
        a1_new = self._clip(a1 + s * (a2 - a2_new))
        d1 = y1 * (a1_new - a1)
        d2 = y2 * (a2_new - a2)
        b1 = self.b - E1 - d1 * k11 - d2 * k12
        b2 = self.b - E2 - d1 * k12 - d2 * k22
        if 0 < a1_new < C:
            self.b = b1
        elif 0 < a2_new < C:
            self.b = b2
        else:
            self.b = 0.5 * (b1 + b2)
        self.g += d1 * r1 + d2 * r2
        self.alpha[i1] = a1_new
        self.alpha[i2] = a2_new
        return True

    def violates(self, i: int) -> bool:
        r = self.error(i) * self.y[i]
        a = self.alpha[i]
        return (r < -self.tol and a < self.C) or (r > self.tol and a > 0)

    def examine(self, i2: int) -> int:
        if not self.violates(i2):
            return 0
        free = np.flatnonzero((self.alpha > 0) & (self.alpha < self.C))
        if free.size > 1:
            E = self.errors()
            i1 = int(free[np.argmax(np.abs(E[free] - E[i2]))])
            if self.take_step(i1, i2):
                return 1
        # deterministic sweeps starting just after i2
        for i1 in np.roll(free, -int(np.searchsorted(free, i2 + 1))):
            if self.take_step(int(i1), i2):
                return 1
        for i1 in itertools.chain(range(i2 + 1, self.n), range(i2)):
            if self.take_step(i1, i2):
                return 1
        return 0

    def run(self, max_passes: int) -> bool:
        examine_all = True
        changed = 0
        passes = 0
        while changed > 0 or examine_all:
            if passes >= max_passes:
                return False
            changed = 0
            if examine_all:
                candidates = range(self.n)
            else:
                candidates = np.flatnonzero((self.alpha > 0) & (self.alpha < self.C))
            for i in candidates:
                changed += self.examine(int(i))
            if examine_all:
                examine_all = False
            elif changed == 0:
                examine_all = True
            passes += 1
        return True

    def finalize_bias(self) -> None:
        """Move ``b`` into the range where every sample meets KKT within ``tol``.

        With t_i = y_i - g_i the conditions read ``y_i (b - t_i) >= -tol``
        (alpha = 0), ``|b - t_i| <= tol`` (free) and ``y_i (b - t_i) <= tol``
        (alpha = C). The incremental update can leave ``b`` outside that range
        when every alpha ends at a bound. If ``b`` is already inside it is kept;
        otherwise the midpoint of the range, which minimises the worst violation.
        """
        t = self.y - self.g
        free = (self.alpha > 0) & (self.alpha < self.C)
        at_zero = self.alpha == 0
        # samples whose condition bounds b from below, from above, or both
        lower = free | (at_zero & (self.y > 0)) | (~at_zero & ~free & (self.y < 0))
        upper = free | (at_zero & (self.y < 0)) | (~at_zero & ~free & (self.y > 0))
        lo = float(np.max(t[lower])) - self.tol if lower.any() else -np.inf
        hi = float(np.min(t[upper])) + self.tol if upper.any() else np.inf
        if lo <= self.b <= hi:
            return
        if np.isfinite(lo) and np.isfinite(hi):
            self.b = 0.5 * (lo + hi)
        else:
            self.b = lo if np.isfinite(lo) else hi


def smo_solve(X, y, p: SvmParams, kernel: KernelRows | None = None) -> tuple[np.ndarray, float]:
    """Dual coefficients ``alpha`` and bias ``b`` for labels in {-1, +1}."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    kernel = kernel or KernelRows(X, p.gamma)
    solver = _Smo(kernel, y, p.C, p.tol)
    if not solver.run(p.max_passes):
        log.warning("SMO stopped after max_passes=%d without meeting the KKT tolerance", p.max_passes)
    solver.finalize_bias()
    return solver.alpha, solver.b


def train_binary(X, y, p: SvmParams) -> BinaryModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y) or len(y) < 2:
        raise ValueError("need a 2-D feature matrix with one label per row and at least 2 rows")
    if not np.isin(y, (-1, 1)).all():
        raise ValueError("binary labels must be -1 or +1")
    if not ((y == 1).any() and (y == -1).any()):
        raise ValueError("both classes must be present to train a binary SVM")
    if not np.isfinite(X).all():
        raise ValueError("features contain non-finite values")
    alpha, b = smo_solve(X, y, p)
    keep = alpha > ALPHA_KEEP
    return BinaryModel(X[keep].copy(), (alpha * y)[keep], float(b), p.gamma)


def decision_values(m: BinaryModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if len(m.coeffs) == 0:
        return np.full(len(X), m.bias)
    return rbf_matrix(X, m.support_vectors, m.gamma) @ m.coeffs + m.bias


def decision(m: BinaryModel, x) -> float:
    return float(decision_values(m, np.asarray(x, dtype=np.float64)[np.newaxis])[0])


def train_multiclass(d: Dataset, p: SvmParams) -> MulticlassModel:
    """One-vs-one: the smaller class id of each pair is the +1 side."""
    classes = d.classes
    if len(classes) < 2:
        raise ValueError(f"need at least 2 classes, got {classes}")
    model = MulticlassModel(classes)
    for a, b in itertools.combinations(classes, 2):
        mask = (d.labels == a) | (d.labels == b)
        y = np.where(d.labels[mask] == a, 1, -1)
        model.pairs[(a, b)] = train_binary(d.vectors[mask], y, p)
    return model


def predict_many(m: MulticlassModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    index = {c: k for k, c in enumerate(m.classes)}
    votes = np.zeros((len(X), len(m.classes)), dtype=np.int64)
    rows = np.arange(len(X))
    for (a, b), bm in m.pairs.items():
        winner = np.where(decision_values(bm, X) > 0, index[a], index[b])
        np.add.at(votes, (rows, winner), 1)
    # argmax returns the first maximum, i.e. the smallest class id on ties
    return np.asarray(m.classes, dtype=np.int64)[np.argmax(votes, axis=1)]


def predict(m: MulticlassModel, x) -> int:
    return int(predict_many(m, np.asarray(x, dtype=np.float64)[np.newaxis])[0])


def overall_accuracy(pred, truth) -> float:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.size == 0:
        raise ValueError("prediction and truth must be non-empty and of equal length")
    return 100.0 * float(np.count_nonzero(pred == truth)) / pred.size


def confusion_matrix(pred, truth, classes: Sequence[int]) -> np.ndarray:
    """Counts with rows = true class, columns = predicted class."""
    index = {int(c): k for k, c in enumerate(classes)}
    out = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, q in zip(np.asarray(truth), np.asarray(pred)):
        out[index[int(t)], index[int(q)]] += 1
    return out


def stratified_folds(labels, k: int, seed: int) -> np.ndarray:
    """Fold number per sample, each class spread round-robin after a seeded shuffle."""
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    rng = np.random.default_rng(seed)
    fold = np.empty(len(labels), dtype=np.int64)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size < k:
            raise ValueError(f"class {c} has {idx.size} samples, fewer than {k} folds")
        fold[rng.permutation(idx)] = np.arange(idx.size) % k
    return fold


def cross_val_accuracy(d: Dataset, p: SvmParams, folds: np.ndarray, k: int) -> float:
    scores = []
    for f in range(k):
        train = d.subset(np.flatnonzero(folds != f))
        test = d.subset(np.flatnonzero(folds == f))
        model = train_multiclass(train, p)
        scores.append(overall_accuracy(predict_many(model, test.vectors), test.labels))
    return float(np.mean(scores))


def grid_search(
    d: Dataset,
    c_grid: Sequence[float] = DEFAULT_C_GRID,
    gamma_grid: Sequence[float] = DEFAULT_GAMMA_GRID,
    folds: int = 5,
    seed: int = 0,
    tol: float = 1e-3,
    max_passes: int = 1000,
) -> tuple[float, float, float]:
    """Best ``(C, gamma, cv_accuracy)``; ties go to the smaller C, then smaller gamma."""
    assignment = stratified_folds(d.labels, folds, seed)
    best = None
    for C in sorted(c_grid):
        for gamma in sorted(gamma_grid):
            acc = cross_val_accuracy(d, SvmParams(C, gamma, tol, max_passes), assignment, folds)
            log.debug("grid C=%g gamma=%g cv=%.4f", C, gamma, acc)
            if best is None or acc > best[2]:
                best = (float(C), float(gamma), acc)
    return best


def save_model(m: MulticlassModel, path) -> None:
    """Text model file.

    Layout::

        # ovo-rbf-svm v1
        classes=1,2,3
        gamma=<float>
        pairs=<count>
        pair=<a>,<b> n_sv=<n> bias=<float>
        <coeff>,<x_0>,...,<x_d-1>      (n rows)
        ...

    Floats use ``repr`` so they round-trip exactly.
    """
    gammas = {bm.gamma for bm in m.pairs.values()}
    if len(gammas) > 1:
        raise ValueError("all pair models must share one gamma")
    gamma = gammas.pop() if gammas else 0.0
    lines = [
        "# ovo-rbf-svm v1",
        "classes=" + ",".join(str(c) for c in m.classes),
        f"gamma={gamma!r}",
        f"pairs={len(m.pairs)}",
    ]
    for (a, b), bm in m.pairs.items():
        lines.append(f"pair={a},{b} n_sv={len(bm.coeffs)} bias={float(bm.bias)!r}")
        for coef, sv in zip(bm.coeffs, bm.support_vectors):
            lines.append(",".join(repr(float(v)) for v in (coef, *sv)))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> MulticlassModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "# ovo-rbf-svm v1":
        raise ValueError(f"{path}: not a model file")
    head = dict(line.split("=", 1) for line in lines[1:4])
    classes = [int(c) for c in head["classes"].split(",")]
    gamma = float(head["gamma"])
    model = MulticlassModel(classes)
    pos = 4
    for _ in range(int(head["pairs"])):
        meta = dict(tok.split("=", 1) for tok in lines[pos].split())
        a, b = (int(v) for v in meta["pair"].split(","))
        n_sv = int(meta["n_sv"])
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[pos + 1:pos + 1 + n_sv]])
        rows = rows.reshape(n_sv, -1) if n_sv else np.empty((0, 1))
        model.pairs[(a, b)] = BinaryModel(rows[:, 1:].copy(), rows[:, 0].copy(), float(meta["bias"]), gamma)
        pos += 1 + n_sv
    return model
