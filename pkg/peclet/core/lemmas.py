"""Registry of the error-term inequalities checked on sample states.

Each entry is a pair of quadratic forms evaluated on (f, ∂f, ∂²f) together
with the constant in front of the right-hand side; the margin
``factor·RHS − LHS`` is nonnegative when the inequality holds for f.
"""

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from peclet.core.errors import UnknownLemma
from peclet.core.functional import StateDerivatives, state_derivatives
from peclet.core.grid import ComplexArray, Domain, RealArray
from peclet.core.weights import HypoWeights

SPECTRAL_GAP_FACTOR = 64.0
SUM_FACTOR = 64.0


@dataclass(frozen=True, eq=False)
class LemmaContext:
    weights: HypoWeights
    state: StateDerivatives

    @property
    def h(self) -> float:
        return self.weights.grid.h

    def sq(self, weight: RealArray, v: ComplexArray) -> float:
        return self.h * float(np.sum(weight * np.abs(v) ** 2))

    def restricted(self, f: ComplexArray) -> "LemmaContext":
        return LemmaContext(self.weights, state_derivatives(self.weights.grid, f))


Form = Callable[[LemmaContext], float]


@dataclass(frozen=True)
class LemmaSpec:
    lhs: Form
    rhs: Form
    factor: float
    description: str
    channel_only: bool = False


def _dissipation(c: LemmaContext) -> float:
    """ν‖∂f‖² + k²‖√βu′f‖²."""
    w = c.weights
    return w.nu * c.sq(np.ones_like(w.beta), c.state.df) + w.k**2 * c.sq(
        w.beta * w.samples.du**2, c.state.f
    )


def _beta_transport(c: LemmaContext) -> float:
    w = c.weights
    return w.k**2 * c.sq(w.beta * w.samples.du**2, c.state.f)


def _err2(c: LemmaContext) -> float:
    w = c.weights
    return w.nu * w.k**2 * c.sq((w.beta * w.samples.d3u) ** 2, c.state.f)


def _err3(c: LemmaContext) -> float:
    w = c.weights
    return w.nu * w.k**2 * c.sq(w.gamma * w.samples.d2u**2, c.state.f)


def _err1(c: LemmaContext) -> float:
    w = c.weights
    ratio = np.divide(w.alpha_p**2, w.alpha, out=np.zeros_like(w.alpha), where=w.alpha > 0.0)
    return w.nu * c.sq(ratio, c.state.df)


def _err1_rhs(c: LemmaContext) -> float:
    w = c.weights
    return w.nu * w.k**2 * c.sq(w.gamma * w.samples.du**2, c.state.df)


def _err1_bdy_rhs(c: LemmaContext) -> float:
    """ν‖∂f_b‖² + νk²‖√γu′∂f_b‖²."""
    w = c.weights
    return w.nu * c.sq(np.ones_like(w.gamma), c.state.df) + _err1_rhs(c)


def _err3bis(c: LemmaContext) -> float:
    w = c.weights
    return w.nu * w.k**2 * c.sq((w.beta_p * w.samples.d2u) ** 2, c.state.f)


def _err4(c: LemmaContext) -> float:
    w = c.weights
    return w.nu * w.k**2 * c.sq((w.beta_pp * w.samples.du) ** 2, c.state.f)


def _err6(c: LemmaContext) -> float:
    w = c.weights
    ratio = np.divide(w.gamma_p**2, w.gamma, out=np.zeros_like(w.gamma), where=w.gamma > 0.0)
    return w.nu * w.k**2 * c.sq(ratio * w.samples.du**2, c.state.f)


def _err7(c: LemmaContext) -> float:
    w = c.weights
    top = w.top_order
    shift = w.eps_alpha[top] / w.eps_beta[top] * w.lambda_tilde
    weight = w.alpha - shift * w.beta
    value = c.h * np.vdot(c.state.df, 1j * w.k * w.samples.du * weight * c.state.f)
    return float(abs(value))


REGISTRY: dict[str, LemmaSpec] = {
    "err2": LemmaSpec(_err2, _dissipation, 1.0 / 14.0, "νk²‖βu‴f‖² ≤ (ν‖∂f‖² + k²‖√βu′f‖²)/14C₀"),
    "err3": LemmaSpec(_err3, _dissipation, 1.0 / 14.0, "νk²‖√γu″f‖² ≤ (ν‖∂f‖² + k²‖√βu′f‖²)/14C₀"),
    "err1": LemmaSpec(_err1, _err1_rhs, 1.0 / 14.0, "ν‖α′/√α ∂f‖² ≤ νk²‖√γu′∂f‖²/14C₀"),
    "err3bis": LemmaSpec(_err3bis, _beta_transport, 1.0 / 14.0, "νk²‖β′u″f‖² ≤ k²‖√βu′f‖²/14C₀"),
    "err4": LemmaSpec(_err4, _beta_transport, 1.0 / 14.0, "νk²‖β″u′f‖² ≤ k²‖√βu′f‖²/14C₀"),
    "err6": LemmaSpec(_err6, _beta_transport, 1.0 / 14.0, "νk²‖γ′u′f/√γ‖² ≤ k²‖√βu′f‖²/14C₀"),
    "err7": LemmaSpec(_err7, _dissipation, 1.0 / 14.0, "|⟨iku′(α − cλ̃β)f, ∂f⟩| ≤ (ν‖∂f‖² + k²‖√βu′f‖²)/14"),
}

# C₀ enters every factor except the transport-commutator bound
_NO_C0 = {"err7"}

BOUNDARY_LEMMAS = ("err2", "err3", "err1", "err3bis", "err4", "err6", "err7")

# on the wall pieces the dissipation ν‖∂f_b‖² joins the right-hand side
_BOUNDARY_RHS: dict[str, tuple[Form, str]] = {
    "err1": (_err1_bdy_rhs, "ν‖α′/√α ∂f_b‖² ≤ (ν‖∂f_b‖² + νk²‖√γu′∂f_b‖²)/14C₀"),
    "err4": (_dissipation, "νk²‖β″u′f_b‖² ≤ (ν‖∂f_b‖² + k²‖√βu′f_b‖²)/14C₀"),
    "err6": (_dissipation, "νk²‖γ′u′f_b/√γ‖² ≤ (ν‖∂f_b‖² + k²‖√βu′f_b‖²)/14C₀"),
}

for _name in BOUNDARY_LEMMAS:
    _base = REGISTRY[_name]
    _rhs, _description = _BOUNDARY_RHS.get(_name, (_base.rhs, f"{_base.description}, on f_b = f√φ_b"))
    REGISTRY[f"{_name}_bdy"] = LemmaSpec(
        _base.lhs,
        _rhs,
        _base.factor,
        _description,
        channel_only=True,
    )

EXTRA_LEMMAS = ("spectrga", "summin")


def lemma_names() -> list[str]:
    return sorted([*REGISTRY, *EXTRA_LEMMAS])


def _factor(name: str, spec: LemmaSpec, weights: HypoWeights) -> float:
    base = name.removesuffix("_bdy")
    if base in _NO_C0 and not name.endswith("_bdy"):
        return spec.factor
    return spec.factor / weights.c0


def _interior(weights: HypoWeights) -> HypoWeights:
    """Weights with α′, β′, β″, γ′ switched off on the wall bumps' support.

    Derivative terms there belong to the `_bdy` inequalities.
    """
    walls = weights.partition.phi_walls
    if not walls:
        return weights
    near_wall = np.sum(walls, axis=0) > 0.0
    return replace(
        weights,
        alpha_p=np.where(near_wall, 0.0, weights.alpha_p),
        beta_p=np.where(near_wall, 0.0, weights.beta_p),
        beta_pp=np.where(near_wall, 0.0, weights.beta_pp),
        gamma_p=np.where(near_wall, 0.0, weights.gamma_p),
    )


def _spectral_gap_margin(weights: HypoWeights, f: ComplexArray) -> float:
    """min_j [64·(ν‖∂f_j‖² + k²β_jε_β,j‖u′f_j‖²) − (k²β_jε_β,j)^{1/(j+1)}ν^{j/(j+1)}‖f_j‖²]."""
    nu, k = weights.nu, abs(weights.k)
    context = LemmaContext(weights, state_derivatives(weights.grid, f))
    worst = np.inf
    for j, piece in weights.partition.localize(f).items():
        if j not in weights.beta_j:
            continue
        local = context.restricted(piece)
        scale = k**2 * weights.beta_j[j] * weights.eps_beta[j]
        lhs = scale ** (1.0 / (j + 1)) * nu ** (j / (j + 1.0)) * weights.grid.norm2(piece)
        rhs = nu * weights.grid.norm2(local.state.df) + scale * weights.grid.norm2(
            weights.samples.du * piece
        )
        worst = min(worst, SPECTRAL_GAP_FACTOR * rhs - lhs)
    return float(worst)


def _sum_margin(weights: HypoWeights, f: ComplexArray) -> float:
    """Localized dissipation sum against the global dissipation ν‖∂f‖² + k²‖√βu′f‖²."""
    nu, k = weights.nu, abs(weights.k)
    context = LemmaContext(weights, state_derivatives(weights.grid, f))
    total = 0.0
    for j, piece in weights.partition.localize(f).items():
        if j not in weights.beta_j:
            continue
        local = context.restricted(piece)
        total += nu * weights.grid.norm2(local.state.df) + k**2 * weights.beta_j[j] * weights.eps_beta[
            j
        ] * weights.grid.norm2(weights.samples.du * piece)
    for piece in weights.partition.wall_pieces(f):
        local = context.restricted(piece)
        total += _dissipation(local)
    global_part = _dissipation(context) + nu * weights.grid.norm2(f)
    return float(SUM_FACTOR * global_part - total)


def lemma_margin(lemma_id: str, weights: HypoWeights, f: ComplexArray) -> float:
    """factor·RHS(f) − LHS(f) for the named inequality."""
    f = np.asarray(f, dtype=np.complex128)
    if lemma_id == "spectrga":
        return _spectral_gap_margin(weights, f)
    if lemma_id == "summin":
        return _sum_margin(weights, f)
    spec: Optional[LemmaSpec] = REGISTRY.get(lemma_id)
    if spec is None:
        raise UnknownLemma(f"Unknown lemma '{lemma_id}' (known: {', '.join(lemma_names())})")
    factor = _factor(lemma_id, spec, weights)
    context = LemmaContext(weights, state_derivatives(weights.grid, f))
    if not spec.channel_only:
        if weights.domain is Domain.CHANNEL:
            context = LemmaContext(_interior(weights), context.state)
        return float(factor * spec.rhs(context) - spec.lhs(context))

    if weights.domain is not Domain.CHANNEL:
        raise UnknownLemma(f"Lemma '{lemma_id}' is only defined on the channel")
    worst = np.inf
    for bump in weights.partition.phi_walls:
        local = context.restricted(f * np.sqrt(bump))
        worst = min(worst, factor * spec.rhs(local) - spec.lhs(local))
    return float(worst)


def worst_margins(
    weights: HypoWeights, states: list[ComplexArray], lemma_ids: Optional[list[str]] = None
) -> dict[str, float]:
    """Minimum margin of each lemma over ``states``."""
    names = lemma_ids or [
        name
        for name in lemma_names()
        if weights.domain is Domain.CHANNEL or not name.endswith("_bdy")
    ]
    return {name: min(lemma_margin(name, weights, f) for f in states) for name in names}
