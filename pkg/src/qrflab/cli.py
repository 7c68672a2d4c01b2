"""Scenario runner: declarative fixtures in, deterministic report out.

A scenario file is JSON describing groups, representations, algebras,
states, frames and schemes by name, plus a list of check tasks that wire
them together. Every task either verifies an internal contract (a defect
below tolerance, a theorem holding on the nose) or pins computed values
against expectations written in the file. Reports are canonical JSON so
that two runs with the same seed differ only in their timestamps.

Exit status: 0 when every task passed, 1 when any failed, 2 when the
scenario itself is malformed; malformed blocks are named in the message.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import typecond as tc
from .crossed import build_crossed_product, verify_commutation_theorem, verify_frame_compression
from .frames import (
    CirclePartition,
    CosetCells,
    MarkovKernel,
    PlainCells,
    Povm,
    QuantumReferenceFrame,
    check_norm1,
    covariant_dilate,
    ideal_frame,
    naimark_dilate,
    phase_povm,
    smear,
)
from .modular import gibbs_state, gns_doubling, kms_check, modular_data
from .opcore import check_density, dagger, op_norm
from .relativise import GroupAction, expected_relative_outcome, localization_defect, relativize
from .scheme import MeasurementScheme, equivariance_defect, induced_observable
from .symmetry import (
    CircleGroup,
    CircleRep,
    FiniteRep,
    HomogeneousSpace,
    cyclic_group,
    regular_representation,
    symmetric_group,
    trivial_rep,
)
from .vnalg import OperatorAlgebra, commutant, decompose, generate_algebra, span_distance


class ScenarioError(Exception):
    """A malformed scenario block; carries the path that names it."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


# ---------------------------------------------------------------- parsing

def _require(mapping, key, path):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ScenarioError(path, f"missing required key {key!r}")
    return mapping[key]


def _number(x, path) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenarioError(path, f"expected a number, got {x!r}")
    return float(x)


def _integer(x, path) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ScenarioError(path, f"expected an integer, got {x!r}")
    return x


def _extended(x, path) -> float:
    # Interval endpoints admit the two infinities, spelled as strings
    # because strict JSON has no literal for them.
    if x == "inf":
        return math.inf
    if x == "-inf":
        return -math.inf
    return _number(x, path)


def _entry(x, path) -> complex:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    if (
        isinstance(x, list)
        and len(x) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x)
    ):
        return complex(x[0], x[1])
    raise ScenarioError(path, f"matrix entries are numbers or [re, im] pairs, got {x!r}")


def _matrix(x, path) -> np.ndarray:
    if not isinstance(x, list) or not x or not all(isinstance(r, list) for r in x):
        raise ScenarioError(path, "expected a matrix as a list of rows")
    width = len(x[0])
    if width == 0 or any(len(r) != width for r in x):
        raise ScenarioError(path, "matrix rows differ in length")
    return np.array(
        [[_entry(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)] for i, row in enumerate(x)],
        dtype=complex,
    )


def _multiplicity(terms, path) -> tc.SpectralMultiplicity:
    if not isinstance(terms, list):
        raise ScenarioError(path, "expected a list of [weight, lower, upper] terms")
    parsed = []
    for i, t in enumerate(terms):
        here = f"{path}[{i}]"
        if not isinstance(t, list) or len(t) != 3:
            raise ScenarioError(here, "each term is [weight, lower, upper]")
        w = tc.INFINITE if t[0] == "INFINITE" else _integer(t[0], here)
        parsed.append((w, _extended(t[1], here), _extended(t[2], here)))
    try:
        return tc.SpectralMultiplicity(parsed)
    except ValueError as e:
        raise ScenarioError(path, str(e)) from None


def _intervals(x, path) -> list[tuple[float, float]]:
    if not isinstance(x, list):
        raise ScenarioError(path, "expected a list of [lower, upper] intervals")
    out = []
    for i, pair in enumerate(x):
        here = f"{path}[{i}]"
        if not isinstance(pair, list) or len(pair) != 2:
            raise ScenarioError(here, "each interval is [lower, upper]")
        out.append((_extended(pair[0], here), _extended(pair[1], here)))
    return out


# ------------------------------------------------------------- serialising

def _real(x) -> float | str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _encode_complex(z: complex) -> list[float]:
    return [_real(z.real), _real(z.imag)]


def _encode_matrix(m: np.ndarray) -> list:
    return [[_encode_complex(complex(v)) for v in row] for row in np.asarray(m)]


# ---------------------------------------------------------------- context

@dataclass
class Context:
    groups: dict = field(default_factory=dict)
    reps: dict = field(default_factory=dict)
    algebras: dict = field(default_factory=dict)
    states: dict = field(default_factory=dict)
    frames: dict = field(default_factory=dict)
    schemes: dict = field(default_factory=dict)
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))


def _lookup(table: dict, name, path: str, what: str):
    if not isinstance(name, str):
        raise ScenarioError(path, f"expected the name of a {what}, got {name!r}")
    if name not in table:
        raise ScenarioError(path, f"unknown {what} {name!r}")
    return table[name]


def _build_group(spec, path):
    kind = _require(spec, "kind", path)
    if kind == "cyclic":
        return cyclic_group(_integer(_require(spec, "n", path), f"{path}.n"))
    if kind == "symmetric":
        return symmetric_group(_integer(_require(spec, "n", path), f"{path}.n"))
    if kind == "circle":
        return CircleGroup(_integer(_require(spec, "bandwidth", path), f"{path}.bandwidth"))
    raise ScenarioError(path, f"unknown group kind {kind!r}")


def _build_rep(ctx: Context, spec, path):
    kind = _require(spec, "kind", path)
    group = _lookup(ctx.groups, _require(spec, "group", path), f"{path}.group", "group")
    try:
        if kind == "regular":
            return regular_representation(group)
        if kind == "matrices":
            mats = _require(spec, "unitaries", path)
            if not isinstance(mats, list):
                raise ScenarioError(f"{path}.unitaries", "expected a list of matrices")
            us = [_matrix(m, f"{path}.unitaries[{i}]") for i, m in enumerate(mats)]
            return FiniteRep(group, us)
        if kind == "circle":
            gen = _matrix(_require(spec, "generator", path), f"{path}.generator")
            return CircleRep(group, gen)
        if kind == "trivial":
            return trivial_rep(group, _integer(_require(spec, "dim", path), f"{path}.dim"))
    except ValueError as e:
        raise ScenarioError(path, str(e)) from None
    raise ScenarioError(path, f"unknown representation kind {kind!r}")


def _build_algebra(ctx: Context, spec, path):
    kind = _require(spec, "kind", path)
    try:
        if kind == "full":
            d = _integer(_require(spec, "dim", path), f"{path}.dim")
            return OperatorAlgebra(d, np.eye(d * d, dtype=complex))
        if kind == "trivial":
            d = _integer(_require(spec, "dim", path), f"{path}.dim")
            rows = np.eye(d, dtype=complex).reshape(1, d * d) / math.sqrt(d)
            return OperatorAlgebra(d, rows)
        if kind == "diagonal":
            d = _integer(_require(spec, "dim", path), f"{path}.dim")
            rows = np.zeros((d, d * d), dtype=complex)
            for i in range(d):
                rows[i, i * d + i] = 1.0
            return OperatorAlgebra(d, rows)
        if kind == "generated":
            d = _integer(_require(spec, "ambient_dim", path), f"{path}.ambient_dim")
            mats = _require(spec, "generators", path)
            gens = [_matrix(m, f"{path}.generators[{i}]") for i, m in enumerate(mats)]
            return generate_algebra(gens, d)
        if kind == "group":
            rep = _lookup(ctx.reps, _require(spec, "rep", path), f"{path}.rep", "representation")
            if not isinstance(rep, FiniteRep):
                raise ScenarioError(path, "group algebras need a finite representation")
            return generate_algebra(list(rep.unitaries), rep.dim)
    except ValueError as e:
        raise ScenarioError(path, str(e)) from None
    raise ScenarioError(path, f"unknown algebra kind {kind!r}")


def _build_state(ctx: Context, spec, path) -> np.ndarray:
    if isinstance(spec, str):
        return _lookup(ctx.states, spec, path, "state")
    try:
        if isinstance(spec, dict):
            kind = _require(spec, "kind", path)
            if kind == "gibbs":
                h = _matrix(_require(spec, "hamiltonian", path), f"{path}.hamiltonian")
                beta = _number(_require(spec, "beta", path), f"{path}.beta")
                return gibbs_state(h, beta)
            if kind == "random":
                d = _integer(_require(spec, "dim", path), f"{path}.dim")
                if d < 1:
                    raise ScenarioError(f"{path}.dim", "dimension must be positive")
                v = ctx.rng.normal(size=(d, d)) + 1j * ctx.rng.normal(size=(d, d))
                rho = v @ v.conj().T
                return rho / np.trace(rho).real
            if kind == "pure":
                raw = _require(spec, "vector", path)
                if not isinstance(raw, list) or not raw:
                    raise ScenarioError(f"{path}.vector", "expected a non-empty list")
                v = np.array(
                    [_entry(x, f"{path}.vector[{i}]") for i, x in enumerate(raw)], dtype=complex
                )
                n = np.linalg.norm(v)
                if n < 1e-12:
                    raise ScenarioError(f"{path}.vector", "vector has zero norm")
                v = v / n
                return np.outer(v, v.conj())
            raise ScenarioError(path, f"unknown state kind {kind!r}")
        return check_density(_matrix(spec, path))
    except ValueError as e:
        raise ScenarioError(path, str(e)) from None


def _build_cells(ctx: Context, spec, path, n_effects: int):
    if spec is None:
        return PlainCells(n_effects)
    kind = _require(spec, "kind", path)
    if kind == "plain":
        return PlainCells(_integer(spec.get("size", n_effects), f"{path}.size"))
    if kind == "coset":
        group = _lookup(ctx.groups, _require(spec, "group", path), f"{path}.group", "group")
        sub = _require(spec, "subgroup", path)
        if not isinstance(sub, list):
            raise ScenarioError(f"{path}.subgroup", "expected a list of element indices")
        members = tuple(_integer(g, f"{path}.subgroup[{i}]") for i, g in enumerate(sub))
        try:
            return CosetCells(HomogeneousSpace(group, members))
        except ValueError as e:
            raise ScenarioError(path, str(e)) from None
    raise ScenarioError(path, f"unknown cell kind {kind!r}")


def _build_frame(ctx: Context, spec, path):
    kind = _require(spec, "kind", path)
    try:
        if kind == "ideal":
            rep = _lookup(ctx.reps, _require(spec, "rep", path), f"{path}.rep", "representation")
            return ideal_frame(rep)
        if kind == "explicit":
            raw = _require(spec, "effects", path)
            effects = [_matrix(m, f"{path}.effects[{i}]") for i, m in enumerate(raw)]
            rep = None
            if spec.get("rep") is not None:
                rep = _lookup(ctx.reps, spec["rep"], f"{path}.rep", "representation")
            if spec.get("cells") is None and isinstance(rep, FiniteRep):
                # One effect per group element: the principal value space.
                g = rep.group
                cells = CosetCells(HomogeneousSpace(g, (g.identity,)))
            else:
                cells = _build_cells(ctx, spec.get("cells"), f"{path}.cells", len(effects))
            povm = Povm(cells, effects)
            return povm if rep is None else QuantumReferenceFrame(rep, povm)
        if kind == "phase":
            rep = _lookup(ctx.reps, _require(spec, "rep", path), f"{path}.rep", "representation")
            if not isinstance(rep, CircleRep):
                raise ScenarioError(f"{path}.rep", "phase frames need a circle representation")
            c = _matrix(_require(spec, "c", path), f"{path}.c")
            raw = _require(spec, "boundaries", path)
            bounds = tuple(_number(b, f"{path}.boundaries[{i}]") for i, b in enumerate(raw))
            povm = phase_povm(rep.dim, c, CirclePartition(bounds))
            return QuantumReferenceFrame(rep, povm)
    except ValueError as e:
        raise ScenarioError(path, str(e)) from None
    raise ScenarioError(path, f"unknown frame kind {kind!r}")


def _build_scheme(spec, path) -> MeasurementScheme:
    try:
        return MeasurementScheme(
            system_dim=_integer(_require(spec, "system_dim", path), f"{path}.system_dim"),
            probe_dim=_integer(_require(spec, "probe_dim", path), f"{path}.probe_dim"),
            scattering=_matrix(_require(spec, "scattering", path), f"{path}.scattering"),
            probe_prep=_matrix(_require(spec, "probe_prep", path), f"{path}.probe_prep"),
            probe_obs=_matrix(_require(spec, "probe_obs", path), f"{path}.probe_obs"),
        )
    except ValueError as e:
        raise ScenarioError(path, str(e)) from None


def build_context(doc: dict, seed: int) -> Context:
    ctx = Context(rng=np.random.default_rng(seed))
    for section, builder in (
        ("groups", lambda s, p: _build_group(s, p)),
        ("representations", lambda s, p: _build_rep(ctx, s, p)),
        ("algebras", lambda s, p: _build_algebra(ctx, s, p)),
        ("states", lambda s, p: _build_state(ctx, s, p)),
        ("frames", lambda s, p: _build_frame(ctx, s, p)),
        ("schemes", lambda s, p: _build_scheme(s, p)),
    ):
        block = doc.get(section, {})
        if not isinstance(block, dict):
            raise ScenarioError(section, "expected an object of named entries")
        target = getattr(ctx, {"representations": "reps"}.get(section, section))
        for name, spec in block.items():
            target[name] = builder(spec, f"{section}.{name}")
    return ctx


# ------------------------------------------------------------------ tasks

def _action(ctx: Context, args, path) -> GroupAction:
    alg = _lookup(ctx.algebras, _require(args, "algebra", path), f"{path}.algebra", "algebra")
    rep = _lookup(ctx.reps, _require(args, "rep", path), f"{path}.rep", "representation")
    return GroupAction(alg, rep)


def _frame(ctx: Context, args, path) -> QuantumReferenceFrame:
    f = _lookup(ctx.frames, _require(args, "frame", path), f"{path}.frame", "frame")
    if not isinstance(f, QuantumReferenceFrame):
        raise ScenarioError(f"{path}.frame", "this task needs a frame with a representation")
    return f


def _povm(ctx: Context, args, path) -> Povm:
    f = _lookup(ctx.frames, _require(args, "frame", path), f"{path}.frame", "frame")
    return f.povm if isinstance(f, QuantumReferenceFrame) else f


def _verdict_result(v: tc.TypeVerdict) -> dict:
    return {
        "status": v.status,
        "integral": _real(v.integral),
        "remainder_bound": _real(v.remainder_bound),
        "detail": v.detail,
    }


def _op_evaluate_condition(ctx, args, path, tol, sign):
    m = _multiplicity(_require(args, "terms", path), f"{path}.terms")
    beta = _number(_require(args, "beta", path), f"{path}.beta")
    return _verdict_result(tc.evaluate_condition(m, beta))


def _op_desitter(ctx, args, path, tol, sign):
    iv = _intervals(_require(args, "intervals", path), f"{path}.intervals")
    beta = _number(_require(args, "beta", path), f"{path}.beta")
    return _verdict_result(tc.desitter_condition(iv, beta))


def _op_trace_of_band(ctx, args, path, tol, sign):
    if "intervals" in args:
        iv = _intervals(args["intervals"], f"{path}.intervals")
        return {"value": _real(tc.trace_of_band(iv))}
    m = _multiplicity(_require(args, "terms", path), f"{path}.terms")
    beta = _number(_require(args, "beta", path), f"{path}.beta")
    return {"value": _real(tc.trace_of_band(beta=beta, multiplicity=m))}


def _op_kms_weight(ctx, args, path, tol, sign):
    raw = _require(args, "steps", path)
    steps = [
        (
            _number(s[0], f"{path}.steps[{i}]"),
            _number(s[1], f"{path}.steps[{i}]"),
            _number(s[2], f"{path}.steps[{i}]"),
        )
        for i, s in enumerate(raw)
    ]
    m = _multiplicity(_require(args, "terms", path), f"{path}.terms")
    beta = _number(_require(args, "beta", path), f"{path}.beta")
    return {"value": _real(tc.kms_weight_on_step(steps, m, beta))}


def _op_so3_partition(ctx, args, path, tol, sign):
    spec = _require(args, "energies", path)
    kind = _require(spec, "kind", f"{path}.energies")
    if kind == "rotor":
        energies = lambda l: float(l * (l + 1))
    elif kind == "log":
        scale = _number(_require(spec, "scale", f"{path}.energies"), f"{path}.energies.scale")
        energies = lambda l: scale * math.log(2 * l + 1)
    elif kind == "explicit":
        vals = _require(spec, "values", f"{path}.energies")
        energies = [_number(v, f"{path}.energies.values[{i}]") for i, v in enumerate(vals)]
    else:
        raise ScenarioError(f"{path}.energies", f"unknown energy model {kind!r}")
    beta = _number(_require(args, "beta", path), f"{path}.beta")
    target = _number(args.get("target", 1.0e-9), f"{path}.target")
    res = tc.so3_partition_multiplicity(energies, beta, target=target)
    out = _verdict_result(res.verdict)
    out["terms_used"] = res.terms_used
    out["value"] = out.pop("integral")
    return out


def _op_commutation(ctx, args, path, tol, sign):
    cp = build_crossed_product(_action(ctx, args, path))
    rep = verify_commutation_theorem(cp)
    return {
        "crossed_dim": rep.crossed_dim,
        "fixed_dim": rep.fixed_dim,
        "span_defect": _real(rep.span_defect),
        "untwist_defect": _real(rep.untwist_defect),
        "translation_defect": _real(rep.translation_defect),
        "passed": rep.passed,
    }


def _op_compression(ctx, args, path, tol, sign):
    rep = verify_frame_compression(_action(ctx, args, path), _frame(ctx, args, path))
    return {
        "invariant_dim": rep.invariant_dim,
        "compressed_dim": rep.compressed_dim,
        "span_defect": _real(rep.span_defect),
        "passed": rep.passed,
    }


def _op_modular_data(ctx, args, path, tol, sign):
    rho = _build_state(ctx, _require(args, "state", path), f"{path}.state")
    alg, omega = gns_doubling(rho)
    md = modular_data(alg, omega)
    spectrum = sorted(float(v) for v in np.linalg.eigvalsh(md.delta))
    flow = md.flow_defect()
    conj = md.conjugation_defect()
    vec = md.vector_invariance_defect()
    return {
        "delta_spectrum": spectrum,
        "flow_defect": _real(flow),
        "conjugation_defect": _real(conj),
        "vector_defect": _real(vec),
        "passed": max(flow, conj, vec) <= tol,
    }


def _op_kms_check(ctx, args, path, tol, sign):
    rho = _build_state(ctx, _require(args, "state", path), f"{path}.state")
    h = _matrix(_require(args, "hamiltonian", path), f"{path}.hamiltonian")
    beta = _number(_require(args, "beta", path), f"{path}.beta")
    raw = _require(args, "pairs", path)
    if not isinstance(raw, list) or not raw:
        raise ScenarioError(f"{path}.pairs", "expected a non-empty list of [x, y] pairs")
    pairs = []
    for i, pair in enumerate(raw):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ScenarioError(f"{path}.pairs[{i}]", "each pair is [x, y]")
        pairs.append(
            (_matrix(pair[0], f"{path}.pairs[{i}][0]"), _matrix(pair[1], f"{path}.pairs[{i}][1]"))
        )
    use_sign = args.get("sign", sign)
    report = kms_check(rho, h, beta, pairs, sign=use_sign, tol=tol)
    rows = [
        [i, _real(t), _real(report.residuals[i, j])]
        for i in range(report.residuals.shape[0])
        for j, t in enumerate(report.times)
    ]
    return {
        "beta": beta,
        "sign": report.sign_convention,
        "max_residual": _real(report.max_residual),
        "passed": report.passed,
        "_csv_kms": rows,
    }


def _product_invariance(action: GroupAction, frame: QuantumReferenceFrame, y: np.ndarray) -> float:
    if isinstance(action.rep, FiniteRep):
        points = range(action.rep.group.order)
    else:
        points = action.rep.group.quadrature_nodes()
    worst = 0.0
    for g in points:
        u = np.kron(action.rep.unitary(g), frame.rep.unitary(g))
        worst = max(worst, op_norm(u @ y @ dagger(u) - y))
    return worst


def _op_relativize(ctx, args, path, tol, sign):
    action = _action(ctx, args, path)
    frame = _frame(ctx, args, path)
    x = _matrix(_require(args, "observable", path), f"{path}.observable")
    y = relativize(x, action, frame)
    defect = _product_invariance(action, frame, y)
    out = {
        "joint_dim": int(y.shape[0]),
        "invariance_defect": _real(defect),
        "passed": defect <= tol,
    }
    if args.get("include_matrix"):
        out["matrix"] = _encode_matrix(y)
    return out


def _op_localization(ctx, args, path, tol, sign):
    action = _action(ctx, args, path)
    frame = _frame(ctx, args, path)
    x = _matrix(_require(args, "observable", path), f"{path}.observable")
    sigma = _build_state(ctx, _require(args, "frame_state", path), f"{path}.frame_state")
    return {"defect": _real(localization_defect(x, action, frame, sigma))}


def _op_relative_expectation(ctx, args, path, tol, sign):
    action = _action(ctx, args, path)
    frame = _frame(ctx, args, path)
    x = _matrix(_require(args, "observable", path), f"{path}.observable")
    omega_s = _build_state(ctx, _require(args, "system_state", path), f"{path}.system_state")
    omega_r = _build_state(ctx, _require(args, "frame_state", path), f"{path}.frame_state")
    value = expected_relative_outcome(x, action, frame, omega_s, omega_r, tol=max(tol, 1e-9))
    return {"value": _encode_complex(value)}


def _op_scheme_equivariance(ctx, args, path, tol, sign):
    s = _lookup(ctx.schemes, _require(args, "scheme", path), f"{path}.scheme", "scheme")
    sys_rep = _lookup(
        ctx.reps, _require(args, "system_rep", path), f"{path}.system_rep", "representation"
    )
    probe_rep = _lookup(
        ctx.reps, _require(args, "probe_rep", path), f"{path}.probe_rep", "representation"
    )
    convention = args.get("convention", "inverse")
    defect = equivariance_defect(s, sys_rep, probe_rep, convention=convention)
    out = {"convention": convention, "defect": _real(defect)}
    if convention == "inverse":
        out["passed"] = defect <= tol
    return out


def _op_induced_observable(ctx, args, path, tol, sign):
    s = _lookup(ctx.schemes, _require(args, "scheme", path), f"{path}.scheme", "scheme")
    return {"matrix": _encode_matrix(induced_observable(s))}


def _op_smear(ctx, args, path, tol, sign):
    povm = _povm(ctx, args, path)
    kernel = MarkovKernel(np.real(_matrix(_require(args, "kernel", path), f"{path}.kernel")))
    blurred = smear(povm, kernel)
    return {
        "n_outcomes": blurred.n_outcomes,
        "norm1_before": [_real(v) for v in check_norm1(povm)],
        "norm1_after": [_real(v) for v in check_norm1(blurred)],
    }


def _op_naimark(ctx, args, path, tol, sign):
    povm = _povm(ctx, args, path)
    dil = naimark_dilate(povm)
    defect = dil.reconstruction_defect(povm)
    return {
        "ambient_dim": dil.ambient_dim,
        "reconstruction_defect": _real(defect),
        "passed": defect <= tol,
    }


def _op_covariant_dilation(ctx, args, path, tol, sign):
    frame = _frame(ctx, args, path)
    dil = covariant_dilate(frame)
    defect = dil.reconstruction_defect(frame.povm)
    return {
        "ambient_dim": dil.ambient_dim,
        "frame_dim": dil.kdim,
        "reconstruction_defect": _real(defect),
        "passed": defect <= tol,
    }


def _op_frame_covariance(ctx, args, path, tol, sign):
    frame = _frame(ctx, args, path)
    defect = frame.covariance_defect()
    complete = frame.is_complete()
    return {
        "defect": _real(defect),
        "principal": frame.is_principal,
        "sharp": frame.is_sharp(),
        "complete": "not evaluated" if complete is None else complete,
        "norm1": [_real(v) for v in frame.norm1_scores()],
        "passed": defect <= tol,
    }


def _op_double_commutant(ctx, args, path, tol, sign):
    alg = _lookup(ctx.algebras, _require(args, "algebra", path), f"{path}.algebra", "algebra")
    bicomm = commutant(commutant(alg))
    dist = span_distance(bicomm, alg)
    return {
        "algebra_dim": alg.dim,
        "bicommutant_dim": bicomm.dim,
        "distance": _real(dist),
        "passed": dist <= tol and bicomm.dim == alg.dim,
    }


def _op_decompose(ctx, args, path, tol, sign):
    alg = _lookup(ctx.algebras, _require(args, "algebra", path), f"{path}.algebra", "algebra")
    bs = decompose(alg)
    return {
        "blocks": [[n, m] for n, m in bs.blocks],
        "defect": _real(bs.defect),
        "algebra_dim": bs.algebra_dim,
        "commutant_dim": bs.commutant_dim,
        "passed": bs.defect <= tol and bs.algebra_dim == alg.dim,
    }


OPS = {
    "evaluate_condition": _op_evaluate_condition,
    "desitter_condition": _op_desitter,
    "trace_of_band": _op_trace_of_band,
    "kms_weight_on_step": _op_kms_weight,
    "so3_partition": _op_so3_partition,
    "commutation_theorem": _op_commutation,
    "frame_compression": _op_compression,
    "modular_data": _op_modular_data,
    "kms_check": _op_kms_check,
    "relativize": _op_relativize,
    "localization_defect": _op_localization,
    "relative_expectation": _op_relative_expectation,
    "scheme_equivariance": _op_scheme_equivariance,
    "induced_observable": _op_induced_observable,
    "smear": _op_smear,
    "naimark_dilation": _op_naimark,
    "covariant_dilation": _op_covariant_dilation,
    "frame_covariance": _op_frame_covariance,
    "double_commutant": _op_double_commutant,
    "decompose": _op_decompose,
}

_TYPECOND_OPS = {"evaluate_condition", "desitter_condition", "so3_partition"}


# ----------------------------------------------------------- expectations

def _deviation(value, target) -> float:
    """Worst absolute deviation between nested lists; inf on shape mismatch."""
    if isinstance(target, str) or isinstance(value, str):
        return 0.0 if value == target else math.inf
    if isinstance(target, list) or isinstance(value, list):
        if (
            not isinstance(target, list)
            or not isinstance(value, list)
            or len(value) != len(target)
        ):
            return math.inf
        return max((_deviation(v, t) for v, t in zip(value, target)), default=0.0)
    if isinstance(target, bool) or isinstance(value, bool):
        return 0.0 if value == target else math.inf
    return abs(float(value) - float(target))


def _close(value, target, tol, key):
    worst = _deviation(value, target)
    return worst <= tol, f"{key}: expected {target} within {tol}, got {value}"


def check_expectations(result: dict, expect: dict, path: str) -> list[str]:
    failures = []
    for key, rule in expect.items():
        here = f"{path}.expect.{key}"
        if key not in result:
            raise ScenarioError(here, f"result has no field {key!r}")
        if not isinstance(rule, dict):
            raise ScenarioError(here, "expected an object with equals/min/max")
        value = result[key]
        if "equals" in rule:
            ok, msg = _close(value, rule["equals"], _number(rule.get("tol", 0.0), here), key)
            if not ok:
                failures.append(msg)
        for bound, cmp in (("min", lambda v, b: v >= b), ("max", lambda v, b: v <= b)):
            if bound in rule:
                b = _number(rule[bound], here)
                if isinstance(value, str) or not cmp(float(value), b):
                    failures.append(f"{key}: expected {bound} {b}, got {value}")
        if not (set(rule) & {"equals", "min", "max"}):
            raise ScenarioError(here, "rule needs one of equals/min/max")
    return failures


# ----------------------------------------------------------------- runner

def run_scenario(doc: dict, *, seed: int, tolerance: float, kms_sign: str, verbose: bool, out) -> dict:
    ctx = build_context(doc, seed)
    tasks = doc.get("tasks", [])
    if not isinstance(tasks, list) or not tasks:
        raise ScenarioError("tasks", "scenario needs a non-empty task list")

    seen = set()
    for i, task in enumerate(tasks):
        path = f"tasks[{i}]"
        op = _require(task, "op", path)
        if op not in OPS:
            raise ScenarioError(f"{path}.op", f"unknown op {op!r}")
        name = task.get("name", f"{op}-{i}")
        if name in seen:
            raise ScenarioError(f"{path}.name", f"duplicate task name {name!r}")
        seen.add(name)
        if op == "scheme_equivariance" and task.get("convention") == "forward":
            if not task.get("expect"):
                raise ScenarioError(path, "the forward convention is a regression witness; pin its defect with an expect block")

    records = []
    n_passed = 0
    for i, task in enumerate(tasks):
        path = f"tasks[{i}]"
        op = task["op"]
        name = task.get("name", f"{op}-{i}")
        tol = float(task.get("tolerance", tolerance))
        started = time.perf_counter()
        failures: list[str] = []
        result: dict = {}
        try:
            result = OPS[op](ctx, task, path, tol, kms_sign)
            if task.get("expect"):
                failures.extend(check_expectations(result, task["expect"], path))
            # A task may assert that the internal check fails; the report
            # then documents a known negative instead of flagging it.
            if task.get("expect_fail"):
                if result.get("passed") is not False:
                    failures.append("expected the internal check to fail, but it passed")
                else:
                    result = dict(result, passed=False, expected_failure=True)
            elif result.get("passed") is False:
                failures.append("internal check failed")
        except ScenarioError:
            raise
        except (ValueError, RuntimeError) as e:
            failures.append(str(e))
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        passed = not failures
        n_passed += passed
        public = {k: v for k, v in result.items() if not k.startswith("_")}
        records.append(
            {
                "name": name,
                "op": op,
                "tolerance": tol,
                "passed": passed,
                "failures": failures,
                "elapsed_ms": elapsed_ms,
                "result": public,
                "_raw": result,
            }
        )
        status = "PASS" if passed else "FAIL"
        detail = "" if passed else ": " + "; ".join(failures)
        print(f"{status} {name} ({op}){detail}", file=out)
        if verbose and public:
            for key in sorted(public):
                print(f"    {key} = {public[key]}", file=out)

    report = {
        "version": 1,
        "description": doc.get("description", ""),
        "environment": {
            "package": f"qrflab {__version__}",
            "seed": seed,
            "tolerance": tolerance,
            "kms_sign": kms_sign,
        },
        "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "tasks": [{k: v for k, v in r.items() if not k.startswith("_")} for r in records],
        "summary": {
            "total": len(records),
            "passed": n_passed,
            "failed": len(records) - n_passed,
        },
        "_records": records,
    }
    print(f"{n_passed}/{len(records)} tasks passed", file=out)
    return report


def _write_outputs(report: dict, scenario_path: Path, report_dir: Path) -> None:
    report_dir.mkdir(parents=True, exist_ok=True)
    stem = scenario_path.stem
    records = report.pop("_records")
    body = json.dumps(report, sort_keys=True, indent=2, allow_nan=False)
    (report_dir / f"{stem}.report.json").write_text(body + "\n")

    typecond_rows = [
        [r["name"], r["op"], r["result"].get("status", ""),
         r["result"].get("integral", r["result"].get("value", "")),
         r["result"].get("remainder_bound", "")]
        for r in records
        if r["op"] in _TYPECOND_OPS
    ]
    if typecond_rows:
        with (report_dir / f"{stem}.typecond.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["task", "op", "status", "value", "remainder_bound"])
            writer.writerows(typecond_rows)

    kms_rows = [
        [r["name"], *row]
        for r in records
        if r["op"] == "kms_check"
        for row in r["_raw"].get("_csv_kms", [])
    ]
    if kms_rows:
        with (report_dir / f"{stem}.kms.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["task", "pair", "time", "residual"])
            writer.writerows(kms_rows)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qrflab", description="Run declarative reference-frame scenarios."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runner = sub.add_parser("run", help="execute a scenario file and report per-task pass/fail")
    runner.add_argument("scenario", help="path to a scenario JSON file")
    runner.add_argument("--report", metavar="DIR", help="directory for report JSON and CSV tables")
    runner.add_argument("--seed", type=int, default=None, help="override the scenario's seed")
    runner.add_argument(
        "--tolerance", type=float, default=1.0e-9, help="default per-task tolerance"
    )
    runner.add_argument(
        "--kms-sign",
        choices=("physics", "paper"),
        default="physics",
        help="analytic continuation convention for KMS checks",
    )
    runner.add_argument("--verbose", action="store_true", help="print task result fields")
    args = parser.parse_args(argv)

    scenario_path = Path(args.scenario)
    try:
        doc = json.loads(scenario_path.read_text())
    except OSError as e:
        print(f"config error: cannot read {scenario_path}: {e}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as e:
        print(f"config error: {scenario_path} is not valid JSON: {e}", file=sys.stderr)
        return 2
    if not isinstance(doc, dict):
        print(f"config error: {scenario_path} must hold a JSON object", file=sys.stderr)
        return 2
    if doc.get("version") != 1:
        print("config error: version: expected 1", file=sys.stderr)
        return 2

    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    try:
        report = run_scenario(
            doc,
            seed=seed,
            tolerance=args.tolerance,
            kms_sign=args.kms_sign,
            verbose=args.verbose,
            out=sys.stdout,
        )
    except ScenarioError as e:
        print(f"config error: {e.path}: {e.message}", file=sys.stderr)
        return 2

    if args.report:
        _write_outputs(report, scenario_path, Path(args.report))
    else:
        report.pop("_records", None)
    return 0 if report["summary"]["failed"] == 0 else 1
