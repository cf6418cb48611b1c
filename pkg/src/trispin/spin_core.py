"""Spin-1/2 chains as weighted Pauli strings, with matrix-free application
and exact eigensolvers.

Conventions shared by every module in this package:

* A basis state of an ``n``-site chain is indexed by an integer ``b``;
  bit ``i`` of ``b`` is the state of spin ``i`` with ``0 = |up>`` and
  ``1 = |down>``.
* Pauli action on a single bit: ``Z|0> = +|0>``, ``Z|1> = -|1>``;
  ``X`` flips the bit; ``Y|0> = i|1>``, ``Y|1> = -i|0>``.
* Hamiltonians carry real coefficients only; complex combinations (e.g.
  ladder operators) are formed by the caller from separate applications.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

if TYPE_CHECKING:  # pragma: no cover - import only for annotations
    from .bose_hubbard import EffectiveCouplings

PAULI_OPS = ("X", "Y", "Z")

#: Largest chain for which dense 2^n x 2^n solves are permitted.
DENSE_SITE_CAP = 14
#: Largest chain for which the iterative ground-state solver is permitted.
GROUND_SITE_CAP = 20


class ResourceLimitError(RuntimeError):
    """A solve would exceed the configured size caps."""


class ConvergenceError(RuntimeError):
    """The iterative eigensolver did not converge; carries the best estimate."""

    def __init__(self, message: str, best_energy: float | None = None):
        super().__init__(message)
        self.best_energy = best_energy


@dataclass(frozen=True)
class PauliString:
    """Real-weighted product of single-site Pauli operators.

    ``factors`` holds ``(site, op)`` pairs with distinct sites and
    ``op in {"X", "Y", "Z"}``; identity factors are simply omitted.
    """

    coeff: float
    factors: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coeff", float(self.coeff))
        factors = tuple((int(s), str(op)) for s, op in self.factors)
        object.__setattr__(self, "factors", factors)
        sites = [s for s, _ in factors]
        if len(set(sites)) != len(sites):
            raise ValueError(f"repeated site index in Pauli string: {sites}")
        for s, op in factors:
            if s < 0:
                raise ValueError(f"negative site index {s}")
            if op not in PAULI_OPS:
                raise ValueError(f"unknown Pauli operator {op!r}")

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.factors)


@dataclass
class StateVector:
    """Normalized (or intermediate unnormalized) amplitude vector.

    ``amplitudes[b]`` is the coefficient of the configuration whose bit ``i``
    gives the state of spin ``i``.
    """

    n_sites: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.n_sites,):
            raise ValueError(
                f"amplitude vector of length {amps.shape} does not match "
                f"{self.n_sites} sites"
            )
        self.amplitudes = amps

    @classmethod
    def basis_state(cls, n_sites: int, index: int = 0) -> "StateVector":
        amps = np.zeros(1 << n_sites, dtype=np.complex128)
        amps[index] = 1.0
        return cls(n_sites, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.n_sites, self.amplitudes / nrm)


@dataclass
class SpinChainSpec:
    """Symbolic chain Hamiltonian: a list of weighted Pauli strings.

    Treated as immutable after construction; the term masks and phase tables
    used by :func:`apply` are compiled lazily and cached.
    """

    n_sites: int
    boundary: str
    terms: list[PauliString]
    _compiled: list | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_sites < 3:
            raise ValueError("chain needs at least 3 sites")
        if self.boundary not in ("periodic", "open"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        self.terms = list(self.terms)
        for t in self.terms:
            if not isinstance(t, PauliString):
                raise TypeError("terms must be PauliString instances")
            if any(not (0 <= s < self.n_sites) for s in t.sites):
                raise ValueError(f"term {t} references sites outside [0, {self.n_sites})")

    def compiled_terms(self):
        if self._compiled is None:
            self._compiled = [_compile_term(t, self.n_sites) for t in self.terms]
        return self._compiled

    def to_json(self) -> str:
        payload = {
            "n": self.n_sites,
            "boundary": self.boundary,
            "terms": [
                {"coeff": t.coeff, "factors": [[s, op] for s, op in t.factors]}
                for t in self.terms
            ],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "SpinChainSpec":
        payload = json.loads(text)
        terms = [
            PauliString(item["coeff"], tuple((s, op) for s, op in item["factors"]))
            for item in payload["terms"]
        ]
        return cls(payload["n"], payload["boundary"], terms)


# --- term compilation -------------------------------------------------------

_ARANGE: dict[int, np.ndarray] = {}


def _basis_indices(n: int) -> np.ndarray:
    arr = _ARANGE.get(n)
    if arr is None:
        arr = np.arange(1 << n, dtype=np.uint64)
        _ARANGE[n] = arr
    return arr


def _term_masks(factors) -> tuple[int, int, int]:
    """Bit masks describing a Pauli string: (flip, phase-mask, #Y factors)."""
    flip = 0
    zy = 0
    n_y = 0
    for site, op in factors:
        bit = 1 << site
        if op == "X":
            flip |= bit
        elif op == "Y":
            flip |= bit
            zy |= bit
            n_y += 1
        else:
            zy |= bit
    return flip, zy, n_y


def _compile_term(term: PauliString, n: int):
    """Precompute (flip mask, per-basis phase array) for one Pauli string.

    P|b> = phase[b] |b ^ flip> with
    phase[b] = coeff * i^{n_Y} * (-1)^{popcount(b & (Zmask|Ymask))}.
    """
    flip, zy, n_y = _term_masks(term.factors)
    b = _basis_indices(n)
    parity = (np.bitwise_count(b & np.uint64(zy)) & 1).astype(np.float64)
    sign = 1.0 - 2.0 * parity
    pref = term.coeff * (1j ** n_y)
    if n_y % 2 == 0:
        phase = pref.real * sign
    else:
        phase = pref * sign.astype(np.complex128)
    return flip, phase


def _apply_term(flip: int, phase: np.ndarray, amps: np.ndarray, n: int) -> np.ndarray:
    vals = phase * amps
    if flip == 0:
        return vals
    idx = _basis_indices(n) ^ np.uint64(flip)
    return vals[idx]


def _apply_compiled(compiled, amps: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros_like(amps)
    for flip, phase in compiled:
        out += _apply_term(flip, phase, amps, n)
    return out


# --- Hamiltonian builders ---------------------------------------------------

def cluster_hamiltonian(n: int, b_field: float) -> SpinChainSpec:
    """Periodic chain with three-site -XZX terms plus a uniform Z field.

    H = sum_i ( -X_{i-1} Z_i X_{i+1} + b_field * Z_i ).
    Zero-coefficient field terms are dropped.
    """
    if n < 3:
        raise ValueError("cluster chain needs n >= 3")
    terms = [
        PauliString(-1.0, (((i - 1) % n, "X"), (i, "Z"), ((i + 1) % n, "X")))
        for i in range(n)
    ]
    if b_field != 0.0:
        terms.extend(PauliString(float(b_field), ((i, "Z"),)) for i in range(n))
    return SpinChainSpec(n, "periodic", terms)


def triangle_chain_hamiltonian(
    couplings: "EffectiveCouplings",
    b_vec: Sequence[float],
    n: int,
) -> SpinChainSpec:
    """Periodic chain with the two- and three-spin terms of the derived
    triangular-lattice model.

    Per site i (indices mod n):
      B.sigma_i
      + lambda1 Z_i Z_{i+1} + lambda2 (X_i X_{i+1} + Y_i Y_{i+1})
      + lambda3 Z_i Z_{i+1} Z_{i+2}
      + lambda4 (X_i Z_{i+1} X_{i+2} + Y_i Z_{i+1} Y_{i+2}).
    Zero-coefficient terms are dropped.
    """
    if n < 3:
        raise ValueError("chain needs n >= 3")
    bx, by, bz = (float(v) for v in b_vec)
    l1 = float(couplings.lambda1)
    l2 = float(couplings.lambda2)
    l3 = float(couplings.lambda3)
    l4 = float(couplings.lambda4)
    terms: list[PauliString] = []
    for i in range(n):
        j, k = (i + 1) % n, (i + 2) % n
        for op, bval in (("X", bx), ("Y", by), ("Z", bz)):
            if bval != 0.0:
                terms.append(PauliString(bval, ((i, op),)))
        if l1 != 0.0:
            terms.append(PauliString(l1, ((i, "Z"), (j, "Z"))))
        if l2 != 0.0:
            terms.append(PauliString(l2, ((i, "X"), (j, "X"))))
            terms.append(PauliString(l2, ((i, "Y"), (j, "Y"))))
        if l3 != 0.0:
            terms.append(PauliString(l3, ((i, "Z"), (j, "Z"), (k, "Z"))))
        if l4 != 0.0:
            terms.append(PauliString(l4, ((i, "X"), (j, "Z"), (k, "X"))))
            terms.append(PauliString(l4, ((i, "Y"), (j, "Z"), (k, "Y"))))
    return SpinChainSpec(n, "periodic", terms)


# --- application and solvers ------------------------------------------------

def apply(spec: SpinChainSpec, state: StateVector) -> StateVector:
    """H|psi>, unnormalized.  Matrix-free: no 2^n x 2^n storage."""
    if state.n_sites != spec.n_sites:
        raise ValueError("state and Hamiltonian dimensions do not match")
    out = _apply_compiled(spec.compiled_terms(), state.amplitudes, spec.n_sites)
    return StateVector(spec.n_sites, out)


def dense_matrix(spec: SpinChainSpec) -> np.ndarray:
    """Explicit 2^n x 2^n matrix; real when every term has an even Y count."""
    n = spec.n_sites
    if n > DENSE_SITE_CAP:
        raise ResourceLimitError(
            f"dense matrix for n={n} exceeds the n<={DENSE_SITE_CAP} cap"
        )
    compiled = spec.compiled_terms()
    dim = 1 << n
    dtype = (
        np.complex128
        if any(ph.dtype.kind == "c" for _, ph in compiled)
        else np.float64
    )
    h = np.zeros((dim, dim), dtype=dtype)
    cols = np.arange(dim)
    for flip, phase in compiled:
        h[cols ^ flip, cols] += phase
    return h


def dense_spectrum(spec: SpinChainSpec) -> np.ndarray:
    """All 2^n eigenvalues, ascending.  Symmetrizes before solving."""
    h = dense_matrix(spec)
    h = (h + h.conj().T) / 2.0
    return np.linalg.eigvalsh(h)


def _linear_operator(spec: SpinChainSpec) -> LinearOperator:
    compiled = spec.compiled_terms()
    n = spec.n_sites
    dim = 1 << n
    dtype = (
        np.complex128
        if any(ph.dtype.kind == "c" for _, ph in compiled)
        else np.float64
    )

    def matvec(x):
        return _apply_compiled(compiled, np.asarray(x, dtype=dtype).ravel(), n)

    return LinearOperator((dim, dim), matvec=matvec, dtype=dtype)


def lowest_eigenvalues(
    spec: SpinChainSpec,
    k: int = 2,
    tol: float = 0.0,
    seed: int = 7,
    site_cap: int = GROUND_SITE_CAP,
) -> np.ndarray:
    """k smallest eigenvalues via restarted Lanczos (dense for tiny chains)."""
    n = spec.n_sites
    if n > site_cap:
        raise ResourceLimitError(f"n={n} exceeds the iterative cap {site_cap}")
    dim = 1 << n
    if dim <= 512 or k >= dim - 1:
        return dense_spectrum(spec)[:k]
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim)
    v0 /= np.linalg.norm(v0)
    op = _linear_operator(spec)
    ncv = min(dim - 1, max(4 * k + 1, 40))
    try:
        vals = eigsh(
            op, k=k, which="SA", v0=v0.astype(op.dtype), tol=tol,
            ncv=ncv, maxiter=20000, return_eigenvectors=False,
        )
    except ArpackNoConvergence as exc:
        best = float(np.min(exc.eigenvalues)) if len(exc.eigenvalues) else None
        raise ConvergenceError(
            f"Lanczos did not converge for n={n}, k={k}", best_energy=best
        ) from exc
    return np.sort(vals)


def ground_state(
    spec: SpinChainSpec,
    tol: float = 1e-10,
    seed: int = 7,
    site_cap: int = GROUND_SITE_CAP,
) -> tuple[float, StateVector]:
    """Lowest eigenpair.  Deterministic for a fixed seed.

    Warns when the two lowest Ritz values agree within 1e-8 (degenerate
    ground space); any normalized minimizer is then returned.
    """
    n = spec.n_sites
    if n > site_cap:
        raise ResourceLimitError(f"n={n} exceeds the iterative cap {site_cap}")
    dim = 1 << n
    if dim <= 512:
        h = dense_matrix(spec)
        h = (h + h.conj().T) / 2.0
        vals, vecs = np.linalg.eigh(h)
        if vals[1] - vals[0] < 1e-8:
            warnings.warn("ground state degenerate within 1e-8; returning one minimizer")
        return float(vals[0]), StateVector(n, vecs[:, 0])
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim)
    v0 /= np.linalg.norm(v0)
    op = _linear_operator(spec)
    try:
        vals, vecs = eigsh(
            op, k=2, which="SA", v0=v0.astype(op.dtype), tol=tol,
            ncv=min(dim - 1, 40), maxiter=20000,
        )
    except ArpackNoConvergence as exc:
        best = float(np.min(exc.eigenvalues)) if len(exc.eigenvalues) else None
        raise ConvergenceError(
            f"ground-state iteration did not converge for n={n}", best_energy=best
        ) from exc
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    if vals[1] - vals[0] < 1e-8:
        warnings.warn("ground state degenerate within 1e-8; returning one minimizer")
    vec = vecs[:, 0] / np.linalg.norm(vecs[:, 0])
    return float(vals[0]), StateVector(n, vec)


def spectral_gap(
    spec: SpinChainSpec,
    k: int = 8,
    degeneracy_tol: float = 1e-8,
    seed: int = 7,
) -> float:
    """First excitation energy above the (possibly degenerate) ground level.

    At |B| = 1 rings with n = 2 (mod 4) carry an exact zero mode, so the
    literal E1 - E0 vanishes there; the gap above the ground manifold is the
    quantity that closes smoothly with 1/n and is what this returns.
    """
    vals = lowest_eigenvalues(spec, k=k, seed=seed)
    e0 = vals[0]
    for e in vals[1:]:
        if e - e0 > degeneracy_tol:
            return float(e - e0)
    raise ConvergenceError(
        f"no level above the ground manifold among the lowest {k}; increase k"
    )


def expectation(state: StateVector, op: PauliString) -> float:
    """<psi|P|psi>.  Raises if the imaginary part exceeds 1e-10."""
    n = state.n_sites
    if any(s >= n for s in op.sites):
        raise ValueError("operator acts outside the state's sites")
    flip, phase = _compile_term(op, n)
    val = np.vdot(state.amplitudes, _apply_term(flip, phase, state.amplitudes, n))
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ValueError(f"expectation of Hermitian string came out complex: {val}")
    return float(val.real)
