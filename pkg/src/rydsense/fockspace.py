"""Exact linear algebra for two bosonic modes on a truncated Fock space.

The two collective spinwave modes are labelled ``d`` and ``p``.  States are
plain complex vectors over the occupation basis {|n_d, n_p>, n_d + n_p <=
n_max}, operators are dense matrices, quantum operations are explicit Kraus
lists and measurements are POVM element lists.  Dimensions stay below ~150,
so everything is dense and exact; this module serves as the brute-force
oracle for the analytic photon statistics implemented elsewhere in the
package.

All values are immutable after construction and all operations are pure
functions, so parameter sweeps can be evaluated in parallel without shared
state.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

__all__ = [
    "FockBasis",
    "TwoModeFockState",
    "DensityOperator",
    "KrausChannel",
    "PovmSet",
    "CountDistribution",
    "mode_operator",
    "rabi_rotation",
    "apply_channel",
    "compose_channels",
    "detection_loss_channel",
    "number_povm",
    "lossy_number_povm",
    "measure",
    "povm_fi",
    "classical_fi",
    "qfi",
    "coherent_state",
    "creation_overflow_norm",
]

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-10
PROB_FLOOR = 1e-15
FI_STEP_DEFAULT = 1e-5
FI_STEP_RANGE = (1e-6, 1e-3)
COHERENT_TAIL_TOL = 1e-8

MODES = ("d", "p")
OPERATOR_KINDS = ("annihilate", "create", "number")


class FockBasis:
    """Occupation basis for two modes truncated at ``n_max`` total excitations.

    The basis index runs over pairs (n_d, n_p) with n_d + n_p <= n_max in
    lexicographic order, giving dimension (n_max + 1)(n_max + 2) / 2.
    """

    def __init__(self, n_max: int):
        if n_max < 0 or int(n_max) != n_max:
            raise ValueError(f"n_max must be a non-negative integer, got {n_max!r}")
        self.n_max = int(n_max)
        self.occupations = tuple(
            (nd, np_)
            for nd in range(self.n_max + 1)
            for np_ in range(self.n_max + 1 - nd)
        )
        self._index = {occ: i for i, occ in enumerate(self.occupations)}
        self.dim = len(self.occupations)

    def index_of(self, n_d: int, n_p: int) -> int:
        """Basis index of |n_d, n_p>."""
        try:
            return self._index[(n_d, n_p)]
        except KeyError:
            raise ValueError(
                f"occupation ({n_d}, {n_p}) outside basis with n_max={self.n_max}"
            ) from None

    def occupation(self, index: int) -> tuple[int, int]:
        """Occupation pair (n_d, n_p) of a basis index."""
        return self.occupations[index]

    def state(self, n_d: int, n_p: int) -> "TwoModeFockState":
        """Basis ket |n_d, n_p> as a normalized state."""
        amp = np.zeros(self.dim, dtype=complex)
        amp[self.index_of(n_d, n_p)] = 1.0
        return TwoModeFockState(self, amp)

    def vacuum(self) -> "TwoModeFockState":
        return self.state(0, 0)

    def __eq__(self, other):
        return isinstance(other, FockBasis) and other.n_max == self.n_max

    def __hash__(self):
        return hash(("FockBasis", self.n_max))

    def __repr__(self):
        return f"FockBasis(n_max={self.n_max}, dim={self.dim})"


@dataclass(frozen=True)
class TwoModeFockState:
    """Complex state vector over a :class:`FockBasis`."""

    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (self.basis.dim,):
            raise ValueError(
                f"amplitude vector has shape {amp.shape}, expected ({self.basis.dim},)"
            )
        object.__setattr__(self, "amplitudes", amp)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def to_density(self) -> "DensityOperator":
        return DensityOperator(self.basis, np.outer(self.amplitudes, self.amplitudes.conj()))

    def expectation(self, operator: np.ndarray) -> complex:
        return complex(self.amplitudes.conj() @ operator @ self.amplitudes)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian density matrix over a :class:`FockBasis`.

    Hermiticity is checked on construction.  Trace normalization and
    positivity are contract checks for normalized operators; operations
    producing unnormalized operators document that explicitly.
    """

    basis: FockBasis
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(
                f"matrix has shape {mat.shape}, expected square of dim {self.basis.dim}"
            )
        if np.max(np.abs(mat - mat.conj().T)) > HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian within 1e-12")
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_state(cls, state: TwoModeFockState) -> "DensityOperator":
        return state.to_density()

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def expectation(self, operator: np.ndarray) -> float:
        return float(np.real(np.trace(self.matrix @ operator)))

    def validate(self, normalized: bool = True) -> "DensityOperator":
        """Assert trace and positivity contracts, returning self."""
        if normalized and abs(self.trace() - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {self.trace()} deviates from 1 beyond 1e-10")
        eigs = np.linalg.eigvalsh(self.matrix)
        if eigs.min() < -PSD_TOL:
            raise ValueError(f"negative eigenvalue {eigs.min():.3e} below -1e-10")
        return self


@dataclass(frozen=True)
class KrausChannel:
    """Quantum operation given by a list of Kraus operators on one basis.

    If ``trace_preserving`` the completeness sum K^dag K must equal the
    identity within 1e-10; otherwise it must not exceed the identity.
    """

    basis: FockBasis
    operators: tuple
    trace_preserving: bool = True

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.operators)
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        d = self.basis.dim
        for k in ops:
            if k.shape != (d, d):
                raise ValueError(f"Kraus operator shape {k.shape} does not match dim {d}")
        total = sum(k.conj().T @ k for k in ops)
        defect = float(np.max(np.abs(total - np.eye(d))))
        if self.trace_preserving:
            if defect > TRACE_TOL:
                raise ValueError(
                    f"Kraus completeness defect {defect:.3e} exceeds 1e-10"
                )
        else:
            top = float(np.linalg.eigvalsh(total).max())
            if top > 1.0 + TRACE_TOL:
                raise ValueError(
                    f"non-trace-preserving channel exceeds identity by {top - 1.0:.3e}"
                )
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "completeness_defect", defect)

    def __len__(self):
        return len(self.operators)


@dataclass(frozen=True)
class PovmSet:
    """Positive operator valued measure with labelled outcomes.

    Positivity of each element and completeness of the sum are checked on
    construction.
    """

    basis: FockBasis
    elements: tuple
    labels: tuple

    def __post_init__(self):
        els = tuple(np.asarray(m, dtype=complex) for m in self.elements)
        if len(els) != len(self.labels):
            raise ValueError("one label per POVM element required")
        d = self.basis.dim
        total = np.zeros((d, d), dtype=complex)
        for m in els:
            if m.shape != (d, d):
                raise ValueError(f"POVM element shape {m.shape} does not match dim {d}")
            if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
                raise ValueError("POVM element is not Hermitian")
            if np.linalg.eigvalsh(m).min() < -PSD_TOL:
                raise ValueError("POVM element is not positive semidefinite within 1e-10")
            total = total + m
        if np.max(np.abs(total - np.eye(d))) > COMPLETENESS_TOL:
            raise ValueError("POVM elements do not sum to the identity within 1e-10")
        object.__setattr__(self, "elements", els)
        object.__setattr__(self, "labels", tuple(self.labels))

    def items(self):
        return zip(self.labels, self.elements)

    def __len__(self):
        return len(self.elements)


@dataclass
class CountDistribution:
    """Probability mass function over measurement outcome labels.

    Labels are either detected occupation pairs (n_d, n_p) or plain photon
    numbers n_d.  ``theta`` optionally records the rotation angle the
    distribution was evaluated at.
    """

    probabilities: dict
    theta: float | None = None

    def __post_init__(self):
        for label, p in self.probabilities.items():
            if p < -1e-12:
                raise ValueError(f"negative probability {p} for outcome {label!r}")
        self.probabilities = {k: max(float(v), 0.0) for k, v in self.probabilities.items()}

    def get(self, label, default=0.0) -> float:
        return self.probabilities.get(label, default)

    def total(self) -> float:
        return float(sum(self.probabilities.values()))

    def mean(self) -> float:
        """Mean outcome for integer-labelled distributions."""
        return float(sum(n * p for n, p in self.probabilities.items()))

    def marginal(self, mode: str = "d") -> "CountDistribution":
        """Collapse (n_d, n_p) labels onto one mode's photon number."""
        axis = MODES.index(mode)
        out: dict = {}
        for label, p in self.probabilities.items():
            n = label[axis]
            out[n] = out.get(n, 0.0) + p
        return CountDistribution(out, theta=self.theta)

    def tv_distance(self, other: "CountDistribution") -> float:
        labels = set(self.probabilities) | set(other.probabilities)
        return 0.5 * sum(abs(self.get(l) - other.get(l)) for l in labels)

    def sorted_items(self):
        return sorted(self.probabilities.items())


def mode_operator(basis: FockBasis, mode: str, kind: str) -> np.ndarray:
    """Dense ladder or number operator for one mode.

    ``annihilate`` maps |n, m> to sqrt(n) |n-1, m> (mode ``d``; mode ``p``
    acts on the second slot).  ``create`` maps |n, m> to sqrt(n+1) |n+1, m>
    and silently drops components that would exceed the truncation; see
    :func:`creation_overflow_norm` to quantify the dropped weight.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"kind must be one of {OPERATOR_KINDS}, got {kind!r}")
    axis = MODES.index(mode)
    op = np.zeros((basis.dim, basis.dim), dtype=complex)
    for i, occ in enumerate(basis.occupations):
        n = occ[axis]
        if kind == "number":
            op[i, i] = n
        elif kind == "annihilate":
            if n > 0:
                target = list(occ)
                target[axis] = n - 1
                op[basis.index_of(*target), i] = math.sqrt(n)
        else:  # create
            if sum(occ) < basis.n_max:
                target = list(occ)
                target[axis] = n + 1
                op[basis.index_of(*target), i] = math.sqrt(n + 1)
    return op


def creation_overflow_norm(basis: FockBasis, mode: str, state: TwoModeFockState) -> float:
    """Norm of the component a creation operator would push past n_max."""
    axis = MODES.index(mode)
    leaked = 0.0
    for i, occ in enumerate(basis.occupations):
        if sum(occ) == basis.n_max:
            leaked += (occ[axis] + 1) * abs(state.amplitudes[i]) ** 2
    return math.sqrt(leaked)


def rabi_rotation(basis: FockBasis, theta: float) -> np.ndarray:
    """Unitary of a microwave Rabi rotation by ``theta`` between the modes.

    Implemented as expm(i (theta/2) (d^dag p + p^dag d)); the sign fixes
    the phase convention in which |2,0> rotates to cos^2(theta/2)|2,0> +
    (i/sqrt(2)) sin(theta)|1,1> - sin^2(theta/2)|0,2>.  The generator
    conserves total excitation number, so the matrix stays exactly unitary
    on the truncated space.
    """
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    dd = mode_operator(basis, "d", "create")
    pp = mode_operator(basis, "p", "create")
    d_ = mode_operator(basis, "d", "annihilate")
    p_ = mode_operator(basis, "p", "annihilate")
    gen = dd @ p_ + pp @ d_
    return expm(1j * (theta / 2.0) * gen)


def apply_channel(rho: DensityOperator, channel: KrausChannel) -> DensityOperator:
    """Apply a Kraus channel: rho -> sum_k K rho K^dag."""
    if channel.basis != rho.basis:
        raise ValueError("channel and state are defined on different bases")
    ops = np.stack(channel.operators)
    tmp = ops @ rho.matrix
    out = np.tensordot(tmp, ops.conj(), axes=([0, 2], [0, 2]))
    out = 0.5 * (out + out.conj().T)  # suppress roundoff asymmetry
    return DensityOperator(rho.basis, out)


def compose_channels(outer: KrausChannel, inner: KrausChannel) -> KrausChannel:
    """Channel composition outer(inner(rho)) as a single Kraus list."""
    if outer.basis != inner.basis:
        raise ValueError("channels are defined on different bases")
    ops = [b @ a for b in outer.operators for a in inner.operators]
    return KrausChannel(
        outer.basis, tuple(ops),
        trace_preserving=outer.trace_preserving and inner.trace_preserving,
    )


def _binom_sqrt(n: int, k: int, eta: float) -> float:
    # sqrt of binomial thinning weight C(n,k) eta^(n-k) (1-eta)^k
    return math.sqrt(math.comb(n, k) * eta ** (n - k) * (1.0 - eta) ** k)


def detection_loss_channel(basis: FockBasis, eta: float) -> KrausChannel:
    """Independent binomial thinning of both modes with efficiency ``eta``.

    Standard beam-splitter loss with a vacuum ancilla; Kraus operators are
    indexed by the number of excitations lost per mode.  Losses only lower
    occupation numbers, so the channel is exactly trace preserving on the
    truncated space.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    ops = []
    for ld in range(basis.n_max + 1):
        for lp in range(basis.n_max + 1 - ld):
            k = np.zeros((basis.dim, basis.dim), dtype=complex)
            nonzero = False
            for i, (nd, np_) in enumerate(basis.occupations):
                if nd < ld or np_ < lp:
                    continue
                coeff = _binom_sqrt(nd, ld, eta) * _binom_sqrt(np_, lp, eta)
                if coeff != 0.0:
                    k[basis.index_of(nd - ld, np_ - lp), i] = coeff
                    nonzero = True
            if nonzero:
                ops.append(k)
    return KrausChannel(basis, tuple(ops), trace_preserving=True)


def number_povm(basis: FockBasis) -> PovmSet:
    """Projective measurement of both occupation numbers."""
    els = []
    for i in range(basis.dim):
        m = np.zeros((basis.dim, basis.dim), dtype=complex)
        m[i, i] = 1.0
        els.append(m)
    return PovmSet(basis, tuple(els), tuple(basis.occupations))


def lossy_number_povm(basis: FockBasis, eta: float) -> PovmSet:
    """Photon counting preceded by efficiency-``eta`` loss, as one POVM.

    The element for detected pair (i, j) carries the binomial thinning
    weight of every occupation (n_d, n_p) with n_d >= i and n_p >= j.  This
    is the Heisenberg picture of :func:`detection_loss_channel` followed by
    :func:`number_povm`.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    labels = basis.occupations
    els = []
    for (i, j) in labels:
        m = np.zeros((basis.dim, basis.dim), dtype=complex)
        for idx, (nd, np_) in enumerate(basis.occupations):
            if nd >= i and np_ >= j:
                # detect i of nd and j of np_, each excitation kept with prob eta
                m[idx, idx] = (
                    _binom_sqrt(nd, nd - i, eta) ** 2
                    * _binom_sqrt(np_, np_ - j, eta) ** 2
                )
        els.append(m)
    return PovmSet(basis, tuple(els), labels)


def measure(rho: DensityOperator, povm: PovmSet) -> CountDistribution:
    """Outcome distribution p(label) = tr(rho M_label)."""
    if povm.basis != rho.basis:
        raise ValueError("POVM and state are defined on different bases")
    probs = {}
    for label, m in povm.items():
        p = float(np.real(np.trace(rho.matrix @ m)))
        probs[label] = max(p, 0.0) if p > -1e-12 else p
    return CountDistribution(probs)


def _family_probabilities(dist_family, thetas):
    dists = [dist_family(t) for t in thetas]
    labels = sorted(set().union(*(d.probabilities.keys() for d in dists)))
    table = np.array([[d.get(l) for l in labels] for d in dists])
    if table.min() < -1e-12:
        raise ValueError("distribution family produced negative probabilities")
    return labels, np.clip(table, 0.0, None)


def _fi_once(dist_family, theta, step, prob_floor, degenerate):
    labels, table = _family_probabilities(
        dist_family, (theta, theta + step, theta - step)
    )
    p0, pp, pm = table
    dp = (pp - pm) / (2.0 * step)
    live = p0 >= prob_floor
    fi = float(np.sum(dp[live] ** 2 / p0[live]))
    # For outcomes whose probability vanishes (generically quadratically in
    # theta), the limiting contribution (p')^2/p equals 2 p'' and is
    # recovered from the second central difference.
    curv = np.clip(pp + pm - 2.0 * p0, 0.0, None) * 2.0 / step**2
    skipped = [labels[i] for i in np.nonzero(~live)[0]]
    bound = float(np.sum(curv[~live]))
    if degenerate == "limit":
        fi += bound
    diagnostics = {
        "step": step,
        "skipped_labels": skipped,
        "skipped_bound": bound,
        "degenerate": bool(skipped),
    }
    return fi, diagnostics


def classical_fi(
    dist_family,
    theta: float,
    step: float = FI_STEP_DEFAULT,
    *,
    prob_floor: float = PROB_FLOOR,
    degenerate: str = "skip",
    check_step: bool = False,
    full_output: bool = False,
):
    """Classical Fisher information of ``dist_family`` at ``theta``.

    Parameters
    ----------
    dist_family : callable
        Maps an angle to a :class:`CountDistribution`.
    theta, step : float
        Evaluation point and central finite-difference step (radians).
        The step must lie in [1e-6, 1e-3].
    prob_floor : float
        Outcomes with probability below this are excluded from the main
        sum.  Their limiting contribution is estimated from the second
        difference and reported in the diagnostics.
    degenerate : {"skip", "limit"}
        With ``"skip"`` (default) sub-floor outcomes only appear in the
        diagnostics as a bound; with ``"limit"`` their second-difference
        limit is added to the returned value, which makes the result
        correct at angles where probabilities vanish quadratically.
    check_step : bool
        Re-evaluate at half the step and warn if the result moves by more
        than 1e-4 relative (step-robustness check).
    full_output : bool
        Also return the diagnostics dict.

    Returns
    -------
    float or (float, dict)
        Fisher information in 1/radian^2 (non-negative).
    """
    lo, hi = FI_STEP_RANGE
    if not lo <= step <= hi:
        raise ValueError(f"step must lie in [{lo}, {hi}], got {step}")
    if degenerate not in ("skip", "limit"):
        raise ValueError("degenerate must be 'skip' or 'limit'")
    fi, diag = _fi_once(dist_family, theta, step, prob_floor, degenerate)
    if check_step:
        fi_half, _ = _fi_once(dist_family, theta, step / 2.0, prob_floor, degenerate)
        rel = abs(fi_half - fi) / max(abs(fi_half), 1e-30)
        diag["step_check_rel_change"] = rel
        if rel > 1e-4:
            warnings.warn(
                f"Fisher information changed by {rel:.2e} when halving the step; "
                "result may not be converged",
                stacklevel=2,
            )
    return (fi, diag) if full_output else fi


def povm_fi(rho_family, povm: PovmSet, theta: float, **kwargs):
    """Classical FI of measuring ``povm`` on a density-operator family."""
    return classical_fi(lambda t: measure(rho_family(t), povm), theta, **kwargs)


def qfi(
    rho_family,
    theta: float,
    step: float = FI_STEP_DEFAULT,
    *,
    eig_floor: float = 1e-12,
    full_output: bool = False,
):
    """Quantum Fisher information of a density-operator family.

    Uses the symmetric-logarithmic-derivative eigendecomposition formula
    F_Q = sum_{i,j: l_i + l_j > eig_floor} 2 |<i| drho |j>|^2 / (l_i + l_j)
    with drho obtained by a central finite difference.
    """
    lo, hi = FI_STEP_RANGE
    if not lo <= step <= hi:
        raise ValueError(f"step must lie in [{lo}, {hi}], got {step}")
    rho0 = rho_family(theta)
    rp = rho_family(theta + step)
    rm = rho_family(theta - step)
    drho = (rp.matrix - rm.matrix) / (2.0 * step)
    evals, evecs = np.linalg.eigh(rho0.matrix)
    m = evecs.conj().T @ drho @ evecs
    pair_sums = evals[:, None] + evals[None, :]
    mask = pair_sums > eig_floor
    value = float(np.sum(2.0 * np.abs(m[mask]) ** 2 / pair_sums[mask]))
    if full_output:
        return value, {"step": step, "eigenvalues": evals, "eig_floor": eig_floor}
    return value


def coherent_state(
    basis: FockBasis,
    alpha_d: complex,
    alpha_p: complex,
    tail_tol: float = COHERENT_TAIL_TOL,
    full_output: bool = False,
):
    """Truncated two-mode coherent state |alpha_d, alpha_p>.

    The truncated tail mass must stay below ``tail_tol`` (the basis is
    otherwise too small to serve as an oracle) and the retained amplitudes
    are renormalized.
    """
    amp = np.zeros(basis.dim, dtype=complex)
    log_norm = -0.5 * (abs(alpha_d) ** 2 + abs(alpha_p) ** 2)
    for i, (nd, np_) in enumerate(basis.occupations):
        coeff = alpha_d**nd * alpha_p**np_
        amp[i] = coeff * math.exp(
            log_norm - 0.5 * (math.lgamma(nd + 1) + math.lgamma(np_ + 1))
        )
    captured = float(np.sum(np.abs(amp) ** 2))
    tail = 1.0 - captured
    if tail > tail_tol:
        raise ValueError(
            f"basis with n_max={basis.n_max} truncates coherent tail mass "
            f"{tail:.3e} > {tail_tol:.0e}"
        )
    state = TwoModeFockState(basis, amp / math.sqrt(captured))
    if full_output:
        return state, tail
    return state
