"""Transform-error sweeps, noise scans, failure trials and the pipeline model."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import time
from pathlib import Path

import numpy as np

from .bootstrap import (
    GATE_MU,
    GATE_MU_NEG,
    CloudKeySet,
    bootstrap_with,
    decrypt_bit,
    encrypt_bit,
    eval_gate,
    generate_cloud_keys,
    make_test_vector,
    pattern_count,
)
from .lattice import key_switch, lwe_phase, phase_error
from .params import MAX_UNROLL, ParameterSet
from .torus import make_rng, sample_secret_keys
from .transform import _kernels
from .transform.backend import ApproximateBackend, gadget_constants, make_backend
from .transform.cpfft import TransformCounters, forward_raw, inverse_raw, transform_cost
from .transform.error import DEFAULT_BETAS, measure_error_db

SCHEMA_VERSION = 1


# ------------------------------------------------------------------ reports


@dataclasses.dataclass(frozen=True)
class NoiseReport:
    """Output-phase noise of one unroll factor, split by ablation.

    All variances are torus units squared on the extracted ciphertext before
    key switching:

    * ``rounding_noise_var``: noiseless keys, float reference products, so
      only gadget truncation remains (one term per external product);
    * ``transform_noise_var``: what the approximate integer transform adds
      to that, still with noiseless keys;
    * ``ep_noise_var``: what real key noise adds, carried through every
      external product by the 2**m - 1 keys summed into each bundle.
    """

    unroll_factor: int
    ep_noise_var: float
    rounding_noise_var: float
    bk_key_count: int
    measured_output_phase_stddev: float
    transform_error_db: float
    external_products_per_bootstrap: int
    keyswitched_phase_stddev: float
    trials: int
    beta: int
    transform_noise_var: float = 0.0

    def __post_init__(self):
        if self.bk_key_count != pattern_count(self.unroll_factor):
            raise ValueError("bk_key_count must equal 2**m - 1")
        if min(self.ep_noise_var, self.rounding_noise_var, self.transform_noise_var) < 0:
            raise ValueError("variances must be non-negative")


@dataclasses.dataclass(frozen=True)
class FailureRateReport:
    trials: int
    failures: int
    beta: int
    m: int
    params: ParameterSet
    seed: int
    elapsed_s: float = 0.0

    def __post_init__(self):
        if not 0 <= self.failures <= self.trials:
            raise ValueError("failures must lie in [0, trials]")

    @property
    def gates_per_second(self) -> float:
        return self.trials / self.elapsed_s if self.elapsed_s > 0 else float("nan")

    def row(self) -> dict:
        return {
            "trials": self.trials,
            "failures": self.failures,
            "beta": self.beta,
            "m": self.m,
            "elapsed_s": round(self.elapsed_s, 3),
            "gates_per_second": round(self.gates_per_second, 3),
        }


@dataclasses.dataclass(frozen=True)
class PipelineModel:
    """Two stages per group: bundle (t_B) then external product (t_E)."""

    group_count: int
    stage_time_bundle: float
    stage_time_ep: float
    mode: str = "pipelined"

    def __post_init__(self):
        if self.group_count < 1:
            raise ValueError("group_count must be >= 1")
        if self.stage_time_bundle <= 0 or self.stage_time_ep <= 0:
            raise ValueError("stage times must be positive")
        if self.mode not in ("sequential", "pipelined"):
            raise ValueError(f"unknown mode {self.mode!r}")


def pipeline_makespan(model: PipelineModel) -> float:
    """Sequential: G (t_B + t_E). Pipelined: fill, G - 1 steady steps, drain.

    The pipelined value is t_B + G t_E whenever the external product is the
    slower stage; when bundling is slower the last step only drains t_E.
    """
    G, tb, te = model.group_count, model.stage_time_bundle, model.stage_time_ep
    if model.mode == "sequential":
        return G * (tb + te)
    return tb + (G - 1) * max(tb, te) + te


# ------------------------------------------------------------ stage costs


@dataclasses.dataclass(frozen=True)
class OpCostTable:
    """Cost of one counted operation, in abstract cycles (here: nanoseconds).

    scale_add: one bundle term (X**-e - 1) * K_p accumulated into a bundle;
    h_add: the fixed per-bundle part (adding h, final rounding);
    forward / inverse: one transform; pointwise: one complex multiply-add.
    """

    scale_add: float
    h_add: float
    forward: float
    inverse: float
    pointwise: float
    source: str = "manual"

    def __post_init__(self):
        for f in ("scale_add", "h_add", "forward", "inverse", "pointwise"):
            if not getattr(self, f) >= 0:
                raise ValueError(f"{f} must be non-negative")
        if self.scale_add <= 0:
            raise ValueError("scale_add must be positive")


def stage_time_estimate(m: int, costs: OpCostTable, params: ParameterSet) -> tuple[float, float]:
    """(t_B, t_E) for one group: 2**m - 1 scale-adds + h, then one external product."""
    if not 1 <= m <= MAX_UNROLL:
        raise ValueError(f"m must lie in [1, {MAX_UNROLL}]")
    k, l, N = params.k, params.l, params.N
    t_b = pattern_count(m) * costs.scale_add + costs.h_add
    t_e = (k + 1) * l * costs.forward + (k + 1) * costs.inverse + (k + 1) * l * (k + 1) * (N // 2) * costs.pointwise
    return t_b, t_e


def pipeline_model(m: int, costs: OpCostTable, params: ParameterSet, mode: str = "pipelined") -> PipelineModel:
    t_b, t_e = stage_time_estimate(m, costs, params)
    return PipelineModel(-(-params.n // m), t_b, t_e, mode)


def unroll_sweep(costs: OpCostTable, params: ParameterSet, m_values=range(1, MAX_UNROLL + 1)) -> list[dict]:
    rows = []
    for m in m_values:
        seq = pipeline_makespan(pipeline_model(m, costs, params, "sequential"))
        pip = pipeline_makespan(pipeline_model(m, costs, params, "pipelined"))
        t_b, t_e = stage_time_estimate(m, costs, params)
        rows.append(
            {
                "m": m,
                "group_count": -(-params.n // m),
                "t_bundle": t_b,
                "t_ep": t_e,
                "sequential": seq,
                "pipelined": pip,
                "throughput": 1e9 / pip,
            }
        )
    return rows


@dataclasses.dataclass(frozen=True)
class DatapathWidths:
    """Word operations retired per cycle by each stage of a two-stage datapath.

    Defaults describe one TGSW cluster (16 multipliers and 16 adders) feeding
    one external-product core: 128 butterfly lanes of two adders and two
    shifters for the forward transform, four such inverse cores, and four
    multipliers plus four adders for the pointwise products.
    """

    tgsw: int = 32
    forward: int = 512
    inverse: int = 2048
    pointwise: int = 8

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if getattr(self, f.name) < 1:
                raise ValueError(f"{f.name} width must be >= 1")


def op_count_costs(params: ParameterSet, beta: int = 64, widths: DatapathWidths = DatapathWidths()) -> OpCostTable:
    """Cycle costs from counted word operations divided by stage widths.

    A coefficient-domain scale-add touches every word of a TGSW sample three
    times (rotate with sign, subtract, accumulate); the fixed part adds the
    gadget constants on the diagonal. Transform costs are the adds and shifts
    tallied by :func:`transform_cost`; a complex multiply-add is 4 + 4 ops.
    """
    k, l, N = params.k, params.l, params.N
    R, C = (k + 1) * l, k + 1
    table = ApproximateBackend.for_params(N, beta).table
    fwd = transform_cost(table, inverse=False)
    inv = transform_cost(table, inverse=True)
    return OpCostTable(
        scale_add=3 * R * C * N / widths.tgsw,
        h_add=R / widths.tgsw,
        forward=(fwd.adds + fwd.shifts) / widths.forward,
        inverse=(inv.adds + inv.shifts) / widths.inverse,
        pointwise=8 / widths.pointwise,
        source=f"op-count(beta={beta})",
    )


def _best_time(fn, repeats: int) -> float:
    fn()
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def calibrate_op_costs(params: ParameterSet, beta: int = 64, seed=0, batch: int = 32, repeats: int = 3) -> OpCostTable:
    """Per-operation costs from timed kernel runs divided by their counter tallies.

    Bundles are timed with three patterns and with none (fixed part), the
    transforms and the pointwise accumulate on random data of the gate sizes.
    """
    rng = make_rng(seed)
    be = ApproximateBackend.for_params(params.N, beta)
    k, l, N = params.k, params.l, params.N
    R, C, M = (k + 1) * l, k + 1, N // 2
    P = 3
    keys = rng.integers(-(1 << 50), 1 << 50, size=(P, R, C, M)).astype(np.float64)
    op = (keys, keys[::-1].copy())
    h = gadget_constants(N, k, params.bg_bits, l)
    exps = rng.integers(1, 2 * N, size=(batch, P))
    zero = np.zeros((batch, P), dtype=np.int64)

    cnt = TransformCounters()
    be.bundle(op, exps, h, cnt)
    t_full = _best_time(lambda: be.bundle(op, exps, h), repeats)
    t_fixed = _best_time(lambda: be.bundle(op, zero, h), repeats)
    h_add = t_fixed / batch
    scale_add = max(t_full - t_fixed, 1e-12) / cnt.bundle_terms

    x = rng.integers(-(1 << 9), 1 << 9, size=(batch * R, N))
    t_fwd = _best_time(lambda: forward_raw(x, be.table, be.schedule.digit_guard), repeats) / (batch * R)
    D = forward_raw(x, be.table, be.schedule.digit_guard).reshape(batch, R, 2, M)
    bkb = rng.integers(-(1 << 50), 1 << 50, size=(batch, R, C, 2, M))
    acc = np.empty((batch, C, 2, M), dtype=np.int64)
    shift = be.schedule.pointwise_shift
    t_pw = _best_time(lambda: _kernels.ep_accumulate_fixed(D, bkb, shift, acc), repeats) / (batch * R * C * M)
    t_inv = _best_time(lambda: inverse_raw(acc, be.table, be.schedule.product_scale, np.uint32), repeats) / (batch * C)
    ns = 1e9
    return OpCostTable(scale_add * ns, h_add * ns, t_fwd * ns, t_inv * ns, t_pw * ns, source=f"timed(beta={beta})")


# ------------------------------------------------------------ error sweep


def error_sweep(beta_values=DEFAULT_BETAS, N: int = 1024, trials: int = 32, seed=0, include_reference: bool = True) -> list[dict]:
    rows = [{"beta": int(b), "error_db": measure_error_db(int(b), trials, N, seed)} for b in beta_values]
    if include_reference:
        rows.append({"beta": "reference", "error_db": measure_error_db(None, trials, N, seed)})
    return rows


# ----------------------------------------------------------- failure trials


def _gate_params(params: ParameterSet, beta: int, m: int) -> ParameterSet:
    return params.replace(unroll_factor=m, twiddle_bitwidth=beta)


def run_failure_trials(
    trials: int,
    beta: int,
    m: int,
    params: ParameterSet,
    seed: int = 0,
    batch: int = 256,
    threads: int = 1,
    backend_kind: str = "approximate",
) -> FailureRateReport:
    """Random NAND gates end to end; counts decryptions that differ from plain NAND.

    One key set per call (derived from ``seed``); every trial gets fresh
    input encryptions from its own stream.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = _gate_params(params, beta, m)
    key_seq, enc_seq = np.random.SeedSequence(seed).spawn(2)
    sk = sample_secret_keys(p, key_seq)
    cloud = generate_cloud_keys(sk, p, key_seq.spawn(1)[0])
    be = make_backend(backend_kind, p.N, beta)
    cloud.group_operands(be)
    failures = 0
    t0 = time.perf_counter()
    for start in range(0, trials, batch):
        size = min(batch, trials - start)
        rng = make_rng(enc_seq.spawn(1)[0])
        x = rng.integers(0, 2, size)
        y = rng.integers(0, 2, size)
        c0 = encrypt_bit(x, sk.lwe, p, rng)
        c1 = encrypt_bit(y, sk.lwe, p, rng)
        out = eval_gate("NAND", c0, c1, cloud, be, threads=threads)
        failures += int(np.count_nonzero(decrypt_bit(out, sk.lwe) != 1 - (x & y)))
    return FailureRateReport(trials, failures, beta, m, p, int(seed), time.perf_counter() - t0)


# --------------------------------------------------------------- noise scan


def _extracted_noise(cloud: CloudKeySet, sk, backend, bits, c, keyswitch: bool):
    p = cloud.params
    tv = make_test_vector(p.N, GATE_MU_NEG)
    out = bootstrap_with(c, tv, cloud, backend, key_switching=False)
    want = np.where(bits == 1, GATE_MU, GATE_MU_NEG)
    err = phase_error(lwe_phase(out, sk.extracted), want)
    ks_err = None
    if keyswitch:
        ks_err = phase_error(lwe_phase(key_switch(out, cloud.ks), sk.lwe), want)
    return err, ks_err


def noise_scan(m_values, trials: int, params: ParameterSet, seed: int = 0, beta: int = 64, error_trials: int = 4) -> list[NoiseReport]:
    """Per m: bootstrap ``trials`` fresh encryptions under three ablations.

    The same secret, inputs and key randomness are used for every ablation,
    so the differences isolate one source each.
    """
    reports = []
    err_db = measure_error_db(beta, error_trials, params.N, seed)
    for m in m_values:
        if not 1 <= m <= MAX_UNROLL:
            raise ValueError(f"m must lie in [1, {MAX_UNROLL}]")
        p = _gate_params(params, beta, m)
        key_seq, enc_seq = np.random.SeedSequence([seed, m]).spawn(2)
        sk = sample_secret_keys(p, seed)  # same secret for every m
        real = generate_cloud_keys(sk, p, key_seq.spawn(1)[0])
        clean = generate_cloud_keys(sk, p, key_seq.spawn(1)[0], noiseless=True)
        approx = make_backend("approximate", p.N, beta)
        exact = make_backend("reference", p.N)
        rng = make_rng(enc_seq)
        bits = rng.integers(0, 2, trials)
        c = encrypt_bit(bits, sk.lwe, p, rng)
        e_real, e_ks = _extracted_noise(real, sk, approx, bits, c, True)
        e_clean, _ = _extracted_noise(clean, sk, approx, bits, c, False)
        e_ref, _ = _extracted_noise(clean, sk, exact, bits, c, False)
        v_real, v_clean, v_ref = (float(np.var(e)) for e in (e_real, e_clean, e_ref))
        reports.append(
            NoiseReport(
                unroll_factor=m,
                ep_noise_var=max(v_real - v_clean, 0.0),
                rounding_noise_var=v_ref,
                bk_key_count=pattern_count(m),
                measured_output_phase_stddev=math.sqrt(v_real),
                transform_error_db=err_db,
                external_products_per_bootstrap=p.group_count,
                keyswitched_phase_stddev=float(np.std(e_ks)),
                trials=trials,
                beta=beta,
                transform_noise_var=max(v_clean - v_ref, 0.0),
            )
        )
    return reports


# ------------------------------------------------------------- emission


def report_rows(items) -> list[dict]:
    rows = []
    for it in items:
        if isinstance(it, dict):
            rows.append(dict(it))
        elif isinstance(it, FailureRateReport):
            rows.append(it.row())
        else:
            rows.append(dataclasses.asdict(it))
    return rows


def to_csv(rows: list[dict], params: ParameterSet | None = None, seed=None) -> str:
    """CSV with schema_version, seed and the parameter echo on every row."""
    buf = io.StringIO()
    rows = report_rows(rows)
    extra = {"schema_version": SCHEMA_VERSION, "seed": "" if seed is None else seed}
    if params is not None:
        extra["params"] = json.dumps(params.to_dict(), sort_keys=True)
    fields: list[str] = list(extra)
    for r in rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    w = csv.DictWriter(buf, fieldnames=fields, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    w.writeheader()
    for r in rows:
        w.writerow({**extra, **r})
    return buf.getvalue()


def to_json(rows: list[dict], params: ParameterSet | None = None, seed=None, **meta) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "params": None if params is None else params.to_dict(),
        **meta,
        "rows": report_rows(rows),
    }
    return json.dumps(doc, indent=2, sort_keys=False, default=str)


def write_report(path, rows, params: ParameterSet | None = None, seed=None, **meta) -> Path:
    """Write CSV or JSON depending on the suffix of ``path``."""
    path = Path(path)
    text = to_json(rows, params, seed, **meta) if path.suffix.lower() == ".json" else to_csv(rows, params, seed)
    path.write_text(text, newline="" if path.suffix.lower() != ".json" else None)
    return path
