"""Dense-matrix brute-force checks of the separable-potential algebra.

All identities are tested with ``R0 = (H0 - E)^-1`` formed by a dense solve and
``<u|v> = vdot(u, v)``. The rank-one update uses ``H1 = H0 + beta |Q><Q|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lowrank import rank_one_resolvent_apply

TOL_RANK1 = 1e-10
TOL_RANKN = 1e-9


@dataclass
class OracleReport:
    n: int
    rank: int
    trials: int
    max_errors: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    schwartz_errors: list = field(default_factory=list)
    schwartz_geometric: bool | None = None

    @property
    def passed(self) -> bool:
        ok = all(self.max_errors[k] < self.tolerances[k] for k in self.max_errors)
        return ok and self.schwartz_geometric is not False

    def to_dict(self) -> dict:
        return {
            "n": self.n, "rank": self.rank, "trials": self.trials,
            "max_errors": self.max_errors, "tolerances": self.tolerances,
            "schwartz_errors": self.schwartz_errors,
            "schwartz_geometric": self.schwartz_geometric, "passed": self.passed,
        }


def random_complex_symmetric(rng, n: int) -> np.ndarray:
    """Complex symmetric matrix with a dissipative imaginary part (well conditioned)."""
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    S = (X + X.T) / (2 * np.sqrt(n))
    return S - 1j * np.eye(n)


def _rel(a, b) -> float:
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300))


def chain_hamiltonian(n: int, k: float = 1.0, absorb: float = 0.3) -> np.ndarray:
    """1D lattice ``-d^2 + const`` with absorbing end cells; sources far apart decouple."""
    H = 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    H = H.astype(complex) - k * k * 0.25 * np.eye(n)
    edge = max(1, n // 10)
    ramp = absorb * np.linspace(1, 0, edge) ** 2
    H[np.arange(edge), np.arange(edge)] -= 1j * ramp
    H[n - 1 - np.arange(edge), n - 1 - np.arange(edge)] -= 1j * ramp
    H -= 0.05j * np.eye(n)
    return H


def schwartz_dense(R0: np.ndarray, Qs: np.ndarray, beta: complex, f: np.ndarray, orders: int):
    """Coefficient errors of the truncated series against the exact rank-N elimination."""
    G = Qs.conj() @ R0 @ Qs.T
    g = Qs.conj() @ (R0 @ f)
    c_exact = np.linalg.solve(np.eye(len(g)) + beta * G, g)
    D = 1 + beta * np.diag(G)
    Goff = G - np.diag(np.diag(G))
    cur, tot, errs = g / D, np.zeros_like(g), []
    for _ in range(orders):
        tot = tot + cur
        errs.append(float(np.linalg.norm(tot - c_exact)))
        cur = -beta * (Goff @ cur) / D
    return errs


def dense_oracle_suite(n: int = 30, rank: int = 1, trials: int = 100, seed: int = 0,
                       beta_zero: bool = False) -> OracleReport:
    if n > 200 or n < 2 or rank < 1 or rank > n:
        raise ValueError("need 2 <= n <= 200 and 1 <= rank <= n")
    rng = np.random.default_rng(seed)
    rep = OracleReport(n=n, rank=rank, trials=trials)
    errs = {"resolvent_identity": 0.0, "connect": 0.0, "project": 0.0, "new_old": 0.0}
    if rank > 1:
        errs["rank_n_elimination"] = 0.0
    for _ in range(trials):
        H0 = random_complex_symmetric(rng, n)
        E = float(rng.uniform(-1, 1))
        A0 = H0 - E * np.eye(n)
        R0 = np.linalg.inv(A0)
        Q = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        Q /= np.linalg.norm(Q)
        beta = 0j if beta_zero else complex(rng.standard_normal(), rng.standard_normal())
        R1 = np.linalg.inv(A0 + beta * np.outer(Q, Q.conj()))
        F0 = np.vdot(Q, R0 @ Q)
        F1 = np.vdot(Q, R1 @ Q)
        # R1 = R0 - beta R1 |Q><Q| R0
        errs["resolvent_identity"] = max(errs["resolvent_identity"],
                                         _rel(R0 - beta * R1 @ np.outer(Q, Q.conj()) @ R0, R1))
        errs["connect"] = max(errs["connect"], abs(F1 - F0 / (1 + beta * F0)) / max(abs(F1), 1e-300))
        errs["project"] = max(errs["project"], _rel(R0 @ Q / (1 + beta * F0), R1 @ Q))
        f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        got = rank_one_resolvent_apply(lambda v: R0 @ v, Q, beta, f)
        errs["new_old"] = max(errs["new_old"], _rel(got, R1 @ f))
        if rank > 1:
            Qs = rng.standard_normal((rank, n)) + 1j * rng.standard_normal((rank, n))
            G = Qs.conj() @ R0 @ Qs.T
            g = Qs.conj() @ (R0 @ f)
            c = np.linalg.solve(np.eye(rank) + beta * G, g)
            phi = R0 @ f - beta * (R0 @ Qs.T) @ c
            direct = np.linalg.solve(A0 + beta * Qs.T @ Qs.conj(), f)
            errs["rank_n_elimination"] = max(errs["rank_n_elimination"], _rel(phi, direct))
    rep.max_errors = {k: float(v) for k, v in errs.items()}
    rep.tolerances = {k: (TOL_RANKN if k == "rank_n_elimination" else TOL_RANK1) for k in errs}
    if rank > 1:
        rep.schwartz_errors, rep.schwartz_geometric = separated_schwartz_check(rank, max(n, 40 * rank), seed)
    return rep


def separated_schwartz_check(rank: int, n: int, seed: int = 0, orders: int = 8):
    """Sources on disjoint, well-separated blocks of a lossy chain.

    Returns the error sequence of the truncated series and whether it decays
    geometrically (every step shrinks by at least the spectral radius plus slack).
    """
    rng = np.random.default_rng(seed + 1)
    H = chain_hamiltonian(n)
    R0 = np.linalg.inv(H)
    block = max(2, n // (4 * rank))
    Qs = np.zeros((rank, n), dtype=complex)
    centres = np.linspace(n * 0.15, n * 0.85, rank).astype(int)
    for i, c in enumerate(centres):
        Qs[i, c:c + block] = rng.standard_normal(block) + 1j * rng.standard_normal(block)
    f = np.zeros(n, dtype=complex)
    f[centres[0]:centres[0] + block] = 1.0
    beta = -1.0 / (-1j + 0.1)
    errs = schwartz_dense(R0, Qs, beta, f, orders)
    nz = [e for e in errs if e > 1e-14]
    ratios = [b / a for a, b in zip(nz, nz[1:])]
    geometric = bool(ratios) and max(ratios) < 1.0
    return errs, geometric
