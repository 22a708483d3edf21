"""Closed-form Haar statistics of self-fidelity pairs.

Every ensemble average over Haar-random pure states reduces to a handful of
trace invariants of the pair ``(U1, U2)``:

==================  ==========================================
coefficient         invariant
==================  ==========================================
d(d+4)              1
d+4                 |Tr U1|^2 + |Tr U2|^2
1                   |Tr U1|^2 |Tr U2|^2
1                   |Tr U1U2|^2 + |Tr U1U2^dag|^2
2 Re                Tr(U1U2) conj(Tr U1) conj(Tr U2)
2 Re                Tr(U1U2^dag) conj(Tr U1) Tr U2
2 Re                Tr(U1U2U1^dag U2^dag)
==================  ==========================================

all divided by ``d(d+1)(d+2)(d+3)`` to give ``E[X1 X2]``. The same
averages are also available through the symmetric-group route in
:mod:`sfcorr.permtrace`; :func:`exact_stats_permsum` uses it.
"""

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import matcore
from .errors import DegenerateReadout, DimensionMismatch
from .permtrace import moment_contraction

TAU_VAR = 1e-14
TAU_IMAG = 1e-10


class Method(str, enum.Enum):
    CLOSED_FORM = "ClosedForm"
    PERM_SUM = "PermSum"
    MONTE_CARLO = "MonteCarlo"


@dataclass(frozen=True)
class InvariantSet:
    d: int
    tr_u1: complex
    tr_u2: complex
    tr_u1u2: complex
    tr_u1u2dag: complex
    tr_u1sq: complex
    tr_u2sq: complex
    tr_comm: complex

    @property
    def abs2_tr_u1(self):
        return abs(self.tr_u1) ** 2

    @property
    def abs2_tr_u2(self):
        return abs(self.tr_u2) ** 2

    def swapped(self):
        """Invariants of the pair ``(U2, U1)``."""
        return InvariantSet(
            d=self.d,
            tr_u1=self.tr_u2,
            tr_u2=self.tr_u1,
            tr_u1u2=self.tr_u1u2,
            tr_u1u2dag=self.tr_u1u2dag.conjugate(),
            tr_u1sq=self.tr_u2sq,
            tr_u2sq=self.tr_u1sq,
            # Tr(U2 U1 U2^dag U1^dag) is the conjugate of Tr(U1 U2 U1^dag U2^dag)
            tr_comm=self.tr_comm.conjugate(),
        )

    def diagonal(self, which):
        """Invariants of the pair ``(Uj, Uj)``."""
        tr = self.tr_u1 if which == 1 else self.tr_u2
        sq = self.tr_u1sq if which == 1 else self.tr_u2sq
        return InvariantSet(d=self.d, tr_u1=tr, tr_u2=tr, tr_u1u2=sq,
                            tr_u1u2dag=complex(self.d), tr_u1sq=sq, tr_u2sq=sq,
                            tr_comm=complex(self.d))


@dataclass(frozen=True)
class CorrelationReport:
    mean1: float
    mean2: float
    var1: float
    var2: float
    cov: float
    pcc: float
    method: Method
    stderr_pcc: float = None
    n_samples: int = None
    stderr_mean1: float = field(default=None, compare=False)
    stderr_mean2: float = field(default=None, compare=False)

    def to_dict(self):
        out = asdict(self)
        out["method"] = self.method.value
        del out["stderr_mean1"], out["stderr_mean2"]
        return out


@dataclass(frozen=True)
class ContrastReport:
    kappa_star: float
    floor: float
    curve: list

    def var_at(self, kappa):
        return dict(self.curve).get(kappa)

    def to_dict(self):
        return {"kappa_star": self.kappa_star, "floor": self.floor,
                "curve": [[k, v] for k, v in self.curve]}


def _pair(u1, u2):
    u1 = matcore.check_unitary(u1)
    u2 = matcore.check_unitary(u2)
    if u1.shape != u2.shape:
        raise DimensionMismatch(f"unitaries have shapes {u1.shape} and {u2.shape}")
    return u1, u2


def invariants(u1, u2):
    u1, u2 = _pair(u1, u2)
    u1d, u2d = u1.conj().T, u2.conj().T
    u1u2 = u1 @ u2
    return InvariantSet(
        d=u1.shape[0],
        tr_u1=complex(np.trace(u1)),
        tr_u2=complex(np.trace(u2)),
        tr_u1u2=complex(np.trace(u1u2)),
        tr_u1u2dag=complex(np.trace(u1 @ u2d)),
        tr_u1sq=complex(np.trace(u1 @ u1)),
        tr_u2sq=complex(np.trace(u2 @ u2)),
        tr_comm=complex(np.trace(u1u2 @ u1d @ u2d)),
    )


def mean_self_fidelity(inv, which=1):
    a2 = inv.abs2_tr_u1 if which == 1 else inv.abs2_tr_u2
    d = inv.d
    return (a2 + d) / (d * (d + 1))


def fourth_moment(inv):
    """``E[X1 X2]`` over Haar-random pure states."""
    d = inv.d
    a1, a2 = inv.abs2_tr_u1, inv.abs2_tr_u2
    t1c, t2c = inv.tr_u1.conjugate(), inv.tr_u2.conjugate()
    num = (d * (d + 4)
           + (d + 4) * (a1 + a2)
           + a1 * a2 + abs(inv.tr_u1u2) ** 2 + abs(inv.tr_u1u2dag) ** 2
           + 2.0 * (inv.tr_u1u2 * t1c * t2c
                    + inv.tr_u1u2dag * t1c * inv.tr_u2
                    + inv.tr_comm).real)
    return num / (d * (d + 1) * (d + 2) * (d + 3))


def variance_direct(inv, which=1):
    """Self-fidelity variance from the single-unitary expansion (no pair data)."""
    d = inv.d
    tr = inv.tr_u1 if which == 1 else inv.tr_u2
    sq = inv.tr_u1sq if which == 1 else inv.tr_u2sq
    a = abs(tr) ** 2
    num = (2 * d * (d + 3) + 4 * (d + 2) * a + abs(sq) ** 2 + a * a
           + 2.0 * (sq * tr.conjugate() ** 2).real)
    f = mean_self_fidelity(inv, which)
    return num / (d * (d + 1) * (d + 2) * (d + 3)) - f * f


def covariance_expanded(inv):
    """Covariance written through the means; redundant with ``d12 - f1 f2``.

    The triple-product term reads ``Tr(U1 U2^dag) conj(Tr U1) Tr U2``.
    """
    d = inv.d
    f1, f2 = mean_self_fidelity(inv, 1), mean_self_fidelity(inv, 2)
    t1c, t2c = inv.tr_u1.conjugate(), inv.tr_u2.conjugate()
    num = (-4 * d + 4 * d * (d + 1) * (f1 + f2)
           - 2 * (2 * d + 3) * d * (d + 1) * f1 * f2
           + abs(inv.tr_u1u2) ** 2 + abs(inv.tr_u1u2dag) ** 2
           + 2.0 * (inv.tr_u1u2 * t1c * t2c
                    + inv.tr_u1u2dag * t1c * inv.tr_u2
                    + inv.tr_comm).real)
    return num / (d * (d + 1) * (d + 2) * (d + 3))


def _split(u):
    """``U = tau I + W`` with ``W`` traceless."""
    tau = complex(np.trace(u)) / u.shape[0]
    return tau, u - tau * np.eye(u.shape[0])


def centred_covariance(t1, a, t2, b):
    """``Cov(X1, X2)`` for ``Uj = tj I + (a, b)_j`` with traceless ``a``, ``b``.

    With ``X = |t|^2 + 2 Re(conj(t) <A>) + |<A>|^2`` only traces of the small
    parts enter, so nothing cancels when the readouts barely fluctuate.
    Fixed points of a permutation contribute ``Tr a = 0``; what survives are
    transpositions (order 2), 3-cycles (order 3) and derangements of S_4.
    """
    d = a.shape[0]
    d2 = d * (d + 1)
    d3 = d2 * (d + 2)
    d4 = d3 * (d + 3)
    ad, bd = a.conj().T, b.conj().T
    tr = lambda *ops: complex(np.trace(np.linalg.multi_dot(ops) if len(ops) > 1 else ops[0]))  # noqa: E731
    t1c, t2c = t1.conjugate(), t2.conjugate()
    order2 = 2.0 * (t1c * t2c * tr(a, b) + t1c * t2 * tr(a, bd)).real / d2
    order3 = 2.0 * (t1c * (tr(a, b, bd) + tr(a, bd, b))
                    + t2c * (tr(b, a, ad) + tr(b, ad, a))).real / d3
    naa, nbb = tr(a, ad).real, tr(b, bd).real
    pairs = naa * nbb + (tr(a, b) * tr(ad, bd) + tr(a, bd) * tr(ad, b)).real
    cycles = (tr(a, ad, b, bd) + tr(a, ad, bd, b) + tr(a, b, ad, bd)
              + tr(a, b, bd, ad) + tr(a, bd, ad, b) + tr(a, bd, b, ad)).real
    order4 = (pairs + cycles) / d4 - naa * nbb / (d2 * d2)
    return order2 + order3 + order4


def build_report(f1, f2, v1, v2, cov, method):
    """Assemble a report from means, variances and covariance, guarding degeneracy."""
    for j, v in ((1, v1), (2, v2)):
        if v < TAU_VAR:
            raise DegenerateReadout(f"self-fidelity variance of U{j} is {v:.3e} (< {TAU_VAR:g})")
    return CorrelationReport(mean1=f1, mean2=f2, var1=v1, var2=v2, cov=cov,
                             pcc=cov / math.sqrt(v1 * v2), method=method)


def exact_stats(u1, u2):
    """Exact Haar means, variances, covariance and correlation of ``X1, X2``.

    The second moments are those of :func:`fourth_moment`, regrouped around
    the trace part of each unitary so that small variances keep full
    relative precision.
    """
    u1, u2 = _pair(u1, u2)
    d = u1.shape[0]
    (t1, w1), (t2, w2) = _split(u1), _split(u2)
    f1 = abs(t1) ** 2 + np.vdot(w1, w1).real / (d * (d + 1))
    f2 = abs(t2) ** 2 + np.vdot(w2, w2).real / (d * (d + 1))
    return build_report(
        f1, f2,
        centred_covariance(t1, w1, t1, w1),
        centred_covariance(t2, w2, t2, w2),
        centred_covariance(t1, w1, t2, w2),
        Method.CLOSED_FORM,
    )


def _real(z):
    if abs(z.imag) > TAU_IMAG:
        raise ArithmeticError(f"moment has imaginary part {z.imag:.3e}")
    return z.real


def _fluctuation_terms(u):
    """``X - |tau|^2`` as ``[(coefficient, operator word), ...]``."""
    tau, w = _split(u)
    wd = w.conj().T
    return tau, [(tau.conjugate(), (w,)), (tau, (wd,)), (1.0, (w, wd))]


def exact_stats_permsum(u1, u2):
    """As :func:`exact_stats`, with every average taken through the S_k sum."""
    u1, u2 = _pair(u1, u2)
    d = u1.shape[0]
    (t1, y1), (t2, y2) = _fluctuation_terms(u1), _fluctuation_terms(u2)

    def mean(y):
        return _real(sum(c * moment_contraction(ops, d) for c, ops in y))

    def cov(ya, yb):
        joint = _real(sum(ca * cb * moment_contraction(oa + ob, d) for ca, oa in ya for cb, ob in yb))
        return joint - mean(ya) * mean(yb)

    return build_report(
        abs(t1) ** 2 + mean(y1), abs(t2) ** 2 + mean(y2),
        cov(y1, y1), cov(y2, y2), cov(y1, y2),
        Method.PERM_SUM,
    )


def optimal_contrast(report, n_grid=201, half_width=None):
    """Minimum-variance linear contrast ``X1 - kappa X2``.

    The tabulated curve is centred on the optimum ``kappa*`` (odd
    ``n_grid`` puts ``kappa*`` exactly on the grid).
    """
    if report.var2 < TAU_VAR or report.var1 < TAU_VAR:
        raise DegenerateReadout("contrast needs nonzero variances")
    kstar = report.cov / report.var2
    floor = max(report.var1 * (1.0 - report.pcc**2), 0.0)
    if half_width is None:
        half_width = max(1.0, abs(kstar))
    n_grid = max(int(n_grid), 3)
    if n_grid % 2 == 0:
        n_grid += 1
    half = n_grid // 2
    kappas = [kstar + half_width * (i - half) / half for i in range(n_grid)]
    kappas[half] = kstar
    curve = [(k, report.var1 - 2.0 * k * report.cov + k * k * report.var2) for k in kappas]
    return ContrastReport(kappa_star=kstar, floor=floor, curve=curve)
