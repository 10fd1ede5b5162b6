"""Randomized numerical checks of the structural hypotheses behind uniqueness.

Five properties make the reconstruction well-posed, and each gets a
deterministic, seeded sampling check against a rendered image:

  h1     strict monotonicity in the unknown:
         H(x,u,p) - H(x,v,p) >= 2 e^{-2R} (u - v) for -R <= v <= u <= R;
  h2_h3  Lipschitz-type difference quotients in x and p, compared against
         explicit constants assembled from the rig's geometric bounds and
         the transfer function's derivative decay;
  h4     gradient coercivity near the boundary: H(x, u, p + lam n(x)) <= 0
         forces lam <= C_R (1 + |p|) with C_R from inverting the transfer
         function;
  h5     blow-up along inward gradients: H(x, u, p - lam n(x)) -> +inf.

h4/h5 hold for the coercive models and FAIL for the rough-diffuse one, whose
transfer function saturates at 1/B; that failure is expected, and a probe run
that does not reproduce it is itself reported as broken.  `check_lemma3_...`
verifies that the constant from `state_constraint_constant` really is a
supersolution on the whole grid.

Every check owns an RNG stream derived from (seed, check id), so reports are
reproducible; a failed check always carries a concrete witness sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np

from .camera import CameraRig
from .errors import ValidationError
from .hamiltonian import effective_intensity, gradient_bound, hamiltonian
from .reflectance import OrenNayar, ReflectanceModel
from .scene import RenderedImage
from .solver import state_constraint_constant

_CHECK_IDS = {"h1": 1, "h2_h3": 2, "h4": 4, "h5": 5, "lemma3": 6}


@dataclass(frozen=True)
class ProbeReport:
    """Outcome of one check: the asserted inequality, its worst margin, a witness."""

    name: str
    model_kind: str
    n_samples: int
    passed: bool
    expected_fail: bool
    worst_margin: float
    seed: int
    witness: Optional[dict] = None
    details: dict = dc_field(default_factory=dict)

    @property
    def ok(self) -> bool:
        """True when the outcome matches expectation (including expected failures)."""
        return self.passed is not self.expected_fail

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "model_kind": self.model_kind,
            "n_samples": self.n_samples,
            "passed": self.passed,
            "expected_fail": self.expected_fail,
            "ok": self.ok,
            "worst_margin": self.worst_margin,
            "seed": self.seed,
            "witness": self.witness,
            "details": self.details,
        }

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        if self.expected_fail:
            status += " (expected-fail ok)" if self.ok else " (expected-fail MISSING)"
        return f"{self.name:8s} {self.model_kind:3s} {status:26s} worst margin {self.worst_margin:+.3e}"


def _rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), _CHECK_IDS[name]])


def _sample_nodes(rng, rig: CameraRig, n: int, mask: Optional[np.ndarray] = None):
    """n random grid nodes; returns (points, flat indices into the grid)."""
    if mask is None:
        flat = np.arange(rig.nx * rig.ny)
    else:
        flat = np.flatnonzero(mask.reshape(-1))
    idx = flat[rng.integers(0, flat.size, size=n)]
    return rig.points().reshape(-1, 2)[idx], idx


def _sample_gradients(rng, n: int, ball: float = 10.0, tail_max: float = 1e4,
                      tail_frac: float = 0.2) -> np.ndarray:
    """Mixture of uniform-on-disk and heavy-tailed radii; coercivity failures
    live at large |p|."""
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    radii = ball * np.sqrt(rng.uniform(0.0, 1.0, size=n))
    tail = rng.uniform(0.0, 1.0, size=n) < tail_frac
    radii[tail] = 10.0 ** rng.uniform(1.0, np.log10(tail_max), size=int(tail.sum()))
    return dirs * radii[:, None]


def _eff_grid(model: ReflectanceModel, image: RenderedImage) -> np.ndarray:
    image = image.physical()
    ambient = model.ambient if model.ambient is not None else 0.0
    return np.asarray(effective_intensity(model, image.intensity, ambient), dtype=np.float64)


def fd_oracle(fn: Callable, point, step: float = 1e-5):
    """Richardson-refined central differences, the independent derivative oracle.

    For a scalar point returns d fn / d point; for a vector point the
    gradient (stacked along a new trailing axis when fn returns arrays).
    """
    if step <= 0:
        raise ValidationError(f"step must be positive, got {step}")
    point = np.asarray(point, dtype=np.float64)

    def central(h):
        if point.ndim == 0:
            return (np.asarray(fn(float(point) + h), dtype=np.float64)
                    - np.asarray(fn(float(point) - h), dtype=np.float64)) / (2.0 * h)
        cols = []
        for k in range(point.shape[-1]):
            e = np.zeros_like(point)
            e[..., k] = h
            cols.append((np.asarray(fn(point + e), dtype=np.float64)
                         - np.asarray(fn(point - e), dtype=np.float64)) / (2.0 * h))
        return np.stack(cols, axis=-1)

    coarse = central(step)
    fine = central(step / 2.0)
    out = (4.0 * fine - coarse) / 3.0
    return float(out) if np.ndim(out) == 0 else out


# -- individual checks --------------------------------------------------------

def check_h1(model: ReflectanceModel, image: RenderedImage, r_bound: float = 2.0,
             n_samples: int = 10_000, seed: int = 0, slack: float = 1e-12) -> ProbeReport:
    """H(x,u,p) - H(x,v,p) >= 2 e^{-2R} (u - v) on -R <= v <= u <= R."""
    rng = _rng(seed, "h1")
    rig = image.rig
    eff = _eff_grid(model, image)
    pts, idx = _sample_nodes(rng, rig, n_samples)
    inten = eff.reshape(-1)[idx]
    p = _sample_gradients(rng, n_samples)
    uv = rng.uniform(-r_bound, r_bound, size=(n_samples, 2))
    lo, hi = uv.min(axis=1), uv.max(axis=1)

    gamma = 2.0 * np.exp(-2.0 * r_bound)
    h_hi = hamiltonian(model, pts, hi, p, inten, rig.f, ambient=0.0)
    h_lo = hamiltonian(model, pts, lo, p, inten, rig.f, ambient=0.0)
    margins = (h_hi - h_lo) - gamma * (hi - lo)
    k = int(np.argmin(margins))
    passed = bool(margins[k] >= -slack)
    witness = None
    if not passed:
        witness = {"x": pts[k].tolist(), "u": float(hi[k]), "v": float(lo[k]),
                   "p": p[k].tolist(), "margin": float(margins[k])}
    return ProbeReport("h1", model.kind, n_samples, passed, False, float(margins[k]),
                       seed, witness, {"gamma": gamma, "r_bound": r_bound})


def _lipschitz_intensity(eff: np.ndarray, rig: CameraRig) -> float:
    """Bound on |E(x)-E(y)|/|x-y| over node pairs, via per-axis quotients."""
    qx = np.abs(np.diff(eff, axis=1)).max() / rig.hx
    qy = np.abs(np.diff(eff, axis=0)).max() / rig.hy
    return float(np.sqrt(2.0) * max(qx, qy))


def check_h2_h3(model: ReflectanceModel, image: RenderedImage, r_bound: float = 2.0,
                n_samples: int = 10_000, seed: int = 0) -> ProbeReport:
    """Difference quotients of H in x and in p stay below assembled constants.

    x-quotient:  |H(x,u,p) - H(y,u,p)| / (|x-y| (1 + |p|))
    p-quotient:  |H(x,u,p) - H(x,u,q)| / |p - q|
    """
    rng = _rng(seed, "h2_h3")
    rig = image.rig
    eff = _eff_grid(model, image)
    f = rig.f

    pts_a, idx_a = _sample_nodes(rng, rig, n_samples)
    pts_b, idx_b = _sample_nodes(rng, rig, n_samples)
    inten_a = eff.reshape(-1)[idx_a]
    inten_b = eff.reshape(-1)[idx_b]
    p = _sample_gradients(rng, n_samples)
    q = _sample_gradients(rng, n_samples)
    u = rng.uniform(-r_bound, r_bound, size=n_samples)

    h_a = hamiltonian(model, pts_a, u, p, inten_a, f, ambient=0.0)
    h_b = hamiltonian(model, pts_b, u, p, inten_b, f, ambient=0.0)
    sep = np.linalg.norm(pts_a - pts_b, axis=-1)
    keep = sep > 0
    ratio_x = np.zeros(n_samples)
    ratio_x[keep] = np.abs(h_a - h_b)[keep] / (sep[keep] * (1.0 + np.linalg.norm(p, axis=-1)[keep]))

    h_q = hamiltonian(model, pts_a, u, q, inten_a, f, ambient=0.0)
    gap = np.linalg.norm(p - q, axis=-1)
    keep_p = gap > 0
    ratio_p = np.zeros(n_samples)
    ratio_p[keep_p] = np.abs(h_a - h_q)[keep_p] / gap[keep_p]

    lip_i = _lipschitz_intensity(eff, rig)
    bound_x = (
        f * f * lip_i * model.f_upper_coeff * max(np.sqrt(rig.w_upper_constant), 1.0)
        + f * float(eff.max()) * model.f_prime_bound * rig.dxw_constant
    )
    bound_p = gradient_bound(model, rig, float(eff.max()))

    pad = 1.0 + 1e-9
    margin_x = bound_x * pad - float(ratio_x.max())
    margin_p = bound_p * pad - float(ratio_p.max())
    worst = min(margin_x, margin_p)
    passed = bool(worst >= 0.0)
    witness = None
    if not passed:
        which = "x" if margin_x < margin_p else "p"
        k = int(np.argmax(ratio_x if which == "x" else ratio_p))
        witness = {"quotient": which, "x": pts_a[k].tolist(), "y": pts_b[k].tolist(),
                   "u": float(u[k]), "p": p[k].tolist(), "q": q[k].tolist()}
    return ProbeReport("h2_h3", model.kind, n_samples, passed, False, float(worst), seed,
                       witness, {"bound_x": bound_x, "bound_p": bound_p,
                                 "ratio_x_max": float(ratio_x.max()),
                                 "ratio_p_max": float(ratio_p.max())})


def _largest_nonpositive_lambda(h_of_lam: Callable[[float], float], lam_cap: float) -> float:
    """sup{lam >= 0 : h(lam) <= 0} for h that dips once then rises.

    0.0 when the set is empty; inf when h stays nonpositive up to the cap;
    otherwise bisection onto the upper crossing.
    """
    lam_lo = 0.0 if h_of_lam(0.0) <= 0.0 else None
    lam = 1.0
    while lam <= lam_cap:
        if h_of_lam(lam) <= 0.0:
            lam_lo = lam
        elif lam_lo is not None:
            break
        lam *= 2.0
    if lam_lo is None:
        return 0.0
    if lam > lam_cap:
        if h_of_lam(lam_cap) <= 0.0:
            return np.inf
        lam = lam_cap
    lo, hi = lam_lo, lam
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h_of_lam(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-9 * max(1.0, lo):
            break
    return lo


def _f_inverse_bisection(model: ReflectanceModel, s: float, r_cap: float = 1e18) -> float:
    """Independent numeric inverse of the transfer function (inf if unreachable)."""
    if model.f_value(0.0) >= s:
        return 0.0
    hi = 1.0
    while model.f_value(hi) < s:
        hi *= 2.0
        if hi > r_cap:
            return np.inf
    lo = hi / 2.0 if hi > 1.0 else 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if model.f_value(mid) < s:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def check_h4_coercivity(model: ReflectanceModel, image: RenderedImage, r_bound: float = 2.0,
                        n_samples: int = 200, seed: int = 0, band_width: int = 3,
                        lam_cap: float = 1e7) -> ProbeReport:
    """Outward-gradient coercivity in the boundary band.

    For each sample, bisection finds the largest lam with
    H(x, u, p + lam n(x)) <= 0, which must obey lam <= max(C_R, 1)(1 + |p|)
    with C_R = sqrt(F^{-1}(e^{2R}/(delta f^2)))/f.  The rough-diffuse model
    is expected to fail: its F never reaches the target, so lam is unbounded
    (witnessed by hitting the cap).
    """
    rng = _rng(seed, "h4")
    rig = image.rig
    f = rig.f
    eff = _eff_grid(model, image)
    band = rig.band_mask(band_width)
    delta = float(eff[band].min())
    expected_fail = isinstance(model, OrenNayar)

    pts, idx = _sample_nodes(rng, rig, n_samples, mask=band)
    inten = eff.reshape(-1)[idx]
    normals = rig.outward_normals(pts)
    p = _sample_gradients(rng, n_samples, ball=5.0, tail_frac=0.1, tail_max=100.0)
    u = rng.uniform(-r_bound, r_bound, size=n_samples)

    s = np.exp(2.0 * r_bound) / (delta * f * f)
    r_star = _f_inverse_bisection(model, s)
    c_r = np.sqrt(r_star) / f if np.isfinite(r_star) else np.inf

    passed = True
    worst_margin = np.inf
    witness = None
    informative = 0
    for k in range(n_samples):
        x_k, n_k, p_k, u_k, i_k = pts[k], normals[k], p[k], float(u[k]), float(inten[k])

        def h_of(lam):
            return float(hamiltonian(model, x_k, u_k, p_k + lam * n_k, i_k, f, ambient=0.0))

        lam_star = _largest_nonpositive_lambda(h_of, lam_cap)
        if lam_star == 0.0:
            continue
        informative += 1
        if not np.isfinite(lam_star):
            passed = False
            worst_margin = -np.inf
            witness = {"x": x_k.tolist(), "u": u_k, "p": p_k.tolist(),
                       "lambda": "unbounded (cap reached)", "lam_cap": lam_cap}
            break
        if not np.isfinite(c_r):
            continue  # no finite target to compare against; not a counterexample
        margin = max(c_r, 1.0) * (1.0 + float(np.linalg.norm(p_k))) - lam_star
        if margin < worst_margin:
            worst_margin = margin
            if margin < 0:
                passed = False
                witness = {"x": x_k.tolist(), "u": u_k, "p": p_k.tolist(), "lambda": lam_star}
    if not np.isfinite(worst_margin) and passed:
        worst_margin = max(c_r, 1.0) if np.isfinite(c_r) else 0.0
    return ProbeReport("h4", model.kind, n_samples, passed, expected_fail, float(worst_margin),
                       seed, witness,
                       {"delta": delta, "f_target": s, "informative_samples": informative,
                        "c_r": float(c_r) if np.isfinite(c_r) else None, "lam_cap": lam_cap})


def check_h5_growth(model: ReflectanceModel, image: RenderedImage, r1: float = 2.0,
                    r2: float = 2.0,
                    lam_schedule: Sequence[float] = tuple(10.0**k for k in range(7)),
                    n_samples: int = 200, seed: int = 0, band_width: int = 3,
                    slack: float = 1e-9) -> ProbeReport:
    """Blow-up of H along inward gradients p - lam n(x).

    Coercive models must dominate -e^{2 R1} + delta f^3 |p - lam n| / d with
    d = k_diffuse + k_specular (1 for pure diffuse) at every schedule step.
    The rough-diffuse model instead must stay below the saturation ceiling
    -e^{-2u} + max(E) f^2 / B for every lam; reported as expected-fail.
    """
    lam_schedule = tuple(float(v) for v in lam_schedule)
    if any(b <= a for a, b in zip(lam_schedule, lam_schedule[1:])):
        raise ValidationError("lam_schedule must be strictly increasing")
    rng = _rng(seed, "h5")
    rig = image.rig
    f = rig.f
    eff = _eff_grid(model, image)
    band = rig.band_mask(band_width)
    delta = float(eff[band].min())

    pts, idx = _sample_nodes(rng, rig, n_samples, mask=band)
    inten = eff.reshape(-1)[idx]
    normals = rig.outward_normals(pts)
    p = _sample_gradients(rng, n_samples, ball=r2, tail_frac=0.0)
    u = rng.uniform(-r1, r2, size=n_samples)

    if isinstance(model, OrenNayar):
        _, b_coef = model.coefficients
        ceiling_scale = float(eff.max()) * f * f / b_coef if b_coef > 0 else np.inf
        worst = np.inf
        grew = False
        witness = None
        for lam in lam_schedule:
            h = hamiltonian(model, pts, u, p - lam * normals, inten, f, ambient=0.0)
            ceiling = -np.exp(-2.0 * u) + ceiling_scale + slack
            gaps = ceiling - h
            k = int(np.argmin(gaps))
            worst = min(worst, float(gaps[k]))
            if gaps[k] < 0:
                grew = True
                witness = {"x": pts[k].tolist(), "u": float(u[k]), "p": p[k].tolist(),
                           "lambda": lam, "h": float(h[k])}
        if not grew:
            k = int(np.argmin(u))
            witness = {"x": pts[k].tolist(), "u": float(u[k]), "p": p[k].tolist(),
                       "lambda": lam_schedule[-1], "bounded_by": ceiling_scale}
        return ProbeReport("h5", model.kind, n_samples, grew, True, float(worst), seed,
                           witness, {"delta": delta, "ceiling_scale": ceiling_scale,
                                     "lam_schedule": list(lam_schedule)})

    denom = 1.0
    if hasattr(model, "k_diffuse"):
        denom = model.k_diffuse + getattr(model, "k_specular", 0.0)
    floor0 = -np.exp(2.0 * r1)
    worst = np.inf
    witness = None
    for lam in lam_schedule:
        q = p - lam * normals
        h = hamiltonian(model, pts, u, q, inten, f, ambient=0.0)
        lower = floor0 + delta * f**3 * np.linalg.norm(q, axis=-1) / denom
        margins = h - lower + slack
        k = int(np.argmin(margins))
        if margins[k] < worst:
            worst = float(margins[k])
            if margins[k] < 0:
                witness = {"x": pts[k].tolist(), "u": float(u[k]), "p": p[k].tolist(),
                           "lambda": lam, "h": float(h[k]), "lower_bound": float(lower[k])}
    passed = bool(worst >= 0.0)
    return ProbeReport("h5", model.kind, n_samples, passed, False, worst, seed, witness,
                       {"delta": delta, "denominator": denom,
                        "lam_schedule": list(lam_schedule)})


def check_lemma3_supersolution(model: ReflectanceModel, image: RenderedImage,
                               delta: Optional[float] = None, n_xi: int = 10_000,
                               seed: int = 0, slack: float = 1e-12) -> ProbeReport:
    """The constant field M is a supersolution: H(x, M, xi) >= 0 everywhere.

    Checked at every grid node against xi = 0 plus a heavy-tailed gradient
    sample.  `delta` defaults to the grid minimum of the effective intensity
    (the tight case: the margin vanishes at the darkest pixel with xi = 0).
    """
    rng = _rng(seed, "lemma3")
    rig = image.rig
    f = rig.f
    eff = _eff_grid(model, image)
    grid_min = float(eff.min())
    if delta is None:
        delta = grid_min
    if grid_min < delta:
        raise ValidationError(f"intensity floor {delta} exceeds the actual grid minimum {grid_min}")
    m_const = state_constraint_constant(model, delta, f)

    xis = np.concatenate([np.zeros((1, 2)), _sample_gradients(rng, n_xi - 1)], axis=0)
    pts = rig.points().reshape(-1, 2)
    inten = eff.reshape(-1)
    worst = np.inf
    witness = None
    chunk = max(1, 2_000_000 // pts.shape[0])
    for start in range(0, n_xi, chunk):
        block = xis[start:start + chunk]
        h = hamiltonian(model, pts[None, :, :], m_const, block[:, None, :],
                        inten[None, :], f, ambient=0.0)
        k = int(np.argmin(h))
        val = float(h.reshape(-1)[k])
        if val < worst:
            worst = val
            bi, pi = divmod(k, pts.shape[0])
            witness = {"x": pts[pi].tolist(), "xi": block[bi].tolist(), "h": val}
    passed = bool(worst >= -slack)
    return ProbeReport("lemma3", model.kind, n_xi * pts.shape[0], passed, False, worst, seed,
                       None if passed else witness, {"delta": delta, "m_constant": m_const})


def run_all_checks(model: ReflectanceModel, image: RenderedImage, r_bound: float = 2.0,
                   seed: int = 0, n_samples: int = 10_000,
                   n_boundary_samples: int = 200) -> list[ProbeReport]:
    """The full battery; the supersolution check is skipped for the
    rough-diffuse model, for which no constant supersolution exists."""
    reports = [
        check_h1(model, image, r_bound, n_samples, seed),
        check_h2_h3(model, image, r_bound, n_samples, seed),
        check_h4_coercivity(model, image, r_bound, n_boundary_samples, seed),
        check_h5_growth(model, image, r_bound, r_bound, n_samples=n_boundary_samples, seed=seed),
    ]
    if not isinstance(model, OrenNayar):
        reports.append(check_lemma3_supersolution(model, image, seed=seed))
    return reports
